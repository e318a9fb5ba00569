//! `∂̄` on `CP^1` with values in `O(m)`.
//!
//! Chart A has coordinate `t`, chart B has `τ = 1/t`. A section is a pair
//! `(f_a, f_b)` with `f_a(t) = t^m f_b(1/t)`; a `(0,1)`-form `g_a dt̄` /
//! `g_b dτ̄` transforms as `g_a(t) = -t^m g_b(1/t) / t̄^2`.
//!
//! For `m >= -1` the solution is assembled from two unit-disc transforms
//! `v_a = I[g_a 1_{|t|<1}]`, `v_b = I[g_b 1_{|τ|<1}]`:
//!
//! ```text
//! u_a(t) = v_a(t) + t^m v_b(1/t)
//! u_b(τ) = v_b(τ) + τ^m v_a(1/τ)
//! ```
//!
//! `t^m v_b(1/t)` is regular at `t = 0` because `v_b` decays like `1/τ`.
//! For `m <= -2` the first `-m-1` far-field terms are poles; removing them
//! from one chart moves a Laurent polynomial to the other, and that
//! polynomial is the class in `H^1(CP^1, O(m))`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cauchy::{dbar_fd4, CauchyTransform, ChartField, DiscGrid};
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::quadrature::{mode_index, Fourier, RadialStep};
use crate::scalar::{cpowi, czero, Real, C};

/// `t^m (-1/t̄^2) g_b(1/t)`: chart-A coefficient from the chart-B one.
pub fn form_to_a<T: Real>(m: i64, t: C<T>, g_b_at_inv: C<T>) -> C<T> {
    -cpowi(t, m) * g_b_at_inv / (t.conj() * t.conj())
}

/// `t^m f_b(1/t)`.
pub fn section_to_a<T: Real>(m: i64, t: C<T>, f_b_at_inv: C<T>) -> C<T> {
    cpowi(t, m) * f_b_at_inv
}

/// A `(0,1)`-form with values in `O(m)`, sampled on two chart discs.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleForm<T: Real> {
    pub m: i64,
    pub g_a: ChartField<T>,
    pub g_b: ChartField<T>,
}

impl<T: Real> BundleForm<T> {
    pub fn new(m: i64, g_a: ChartField<T>, g_b: ChartField<T>) -> Result<Self> {
        if g_a.grid != g_b.grid {
            return Err(Error::InvalidInput("chart fields must share one grid".into()));
        }
        Ok(Self { m, g_a, g_b })
    }

    pub fn from_fn<FA, FB>(m: i64, grid: DiscGrid<T>, fa: FA, fb: FB) -> Self
    where
        FA: Fn(C<T>) -> C<T> + Sync,
        FB: Fn(C<T>) -> C<T> + Sync,
    {
        Self { m, g_a: ChartField::from_fn(grid, fa), g_b: ChartField::from_fn(grid, fb) }
    }

    /// Build from a chart-A function; chart B is filled by the transition
    /// rule and `g_a` must be smooth at `t = ∞` in the bundle sense.
    pub fn from_chart_a<F>(m: i64, grid: DiscGrid<T>, fa: F) -> Self
    where
        F: Fn(C<T>) -> C<T> + Sync,
    {
        let fb = |tau: C<T>| {
            if tau == czero() {
                return czero();
            }
            // g_b(τ) = -τ^m g_a(1/τ) / τ̄^2
            form_to_a(m, tau, fa(tau.inv()))
        };
        Self::from_fn(m, grid, &fa, fb)
    }

    pub fn zeros(m: i64, grid: DiscGrid<T>) -> Self {
        Self { m, g_a: ChartField::zeros(grid), g_b: ChartField::zeros(grid) }
    }

    pub fn grid(&self) -> DiscGrid<T> {
        self.g_a.grid
    }

    pub fn field(&self, chart: Chart) -> &ChartField<T> {
        match chart {
            Chart::A => &self.g_a,
            Chart::B => &self.g_b,
        }
    }

    pub fn max_abs(&self) -> T {
        self.g_a.max_abs().max(self.g_b.max_abs())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: C<T>, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::InvalidInput("forms have different bundle degrees".into()));
        }
        Ok(Self { m: self.m, g_a: self.g_a.axpy(a, &other.g_a)?, g_b: self.g_b.axpy(a, &other.g_b)? })
    }

    /// Largest transition defect on the rings with `0.97 <= |t| <= 1.03`,
    /// relative to `max |g|`. Chart-B values are interpolated at `1/t`.
    pub fn seam_mismatch(&self) -> T {
        let grid = self.grid();
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let lo = T::lit(0.97);
        let hi = T::lit(1.03).min(grid.radius() - grid.h());
        let mut worst = T::zero();
        for i in 0..grid.n_r() {
            let r = grid.ring_radius(i);
            if r < lo || r > hi {
                continue;
            }
            for j in 0..grid.n_theta() {
                let t = grid.node(i, j);
                let want = form_to_a(self.m, t, self.g_b.interp(t.inv()));
                worst = worst.max((self.g_a.at(i, j) - want).norm());
            }
        }
        worst / scale
    }

    /// Default seam tolerance: bilinear interpolation error scale `50 h^2`.
    pub fn seam_tolerance(&self) -> T {
        let h = self.grid().h();
        T::lit(50.0) * h * h
    }

    pub fn check_seam(&self, tolerance: Option<T>) -> Result<()> {
        let tol = tolerance.unwrap_or_else(|| self.seam_tolerance());
        let mismatch = self.seam_mismatch();
        if mismatch > tol {
            return Err(Error::SeamMismatch { mismatch: mismatch.to_f64_lossy(), tolerance: tol.to_f64_lossy() });
        }
        Ok(())
    }
}

type SectionFn<T> = Arc<dyn Fn(Chart, C<T>) -> C<T> + Send + Sync>;

/// A section of `O(m)`: samples in both charts, optionally backed by an
/// exact evaluator (solver output).
#[derive(Clone)]
pub struct BundleSection<T: Real> {
    pub m: i64,
    pub f_a: ChartField<T>,
    pub f_b: ChartField<T>,
    eval: Option<SectionFn<T>>,
}

impl<T: Real> fmt::Debug for BundleSection<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleSection")
            .field("m", &self.m)
            .field("grid", &self.f_a.grid)
            .field("evaluator", &self.eval.is_some())
            .finish()
    }
}

impl<T: Real> BundleSection<T> {
    pub fn from_samples(m: i64, f_a: ChartField<T>, f_b: ChartField<T>) -> Result<Self> {
        if f_a.grid != f_b.grid {
            return Err(Error::InvalidInput("chart fields must share one grid".into()));
        }
        Ok(Self { m, f_a, f_b, eval: None })
    }

    /// Sample `eval` on `grid` in both charts and keep it for off-grid use.
    pub fn from_fn<F>(m: i64, grid: DiscGrid<T>, eval: F) -> Self
    where
        F: Fn(Chart, C<T>) -> C<T> + Send + Sync + 'static,
    {
        let eval: SectionFn<T> = Arc::new(eval);
        let f_a = ChartField::from_fn(grid, |t| eval(Chart::A, t));
        let f_b = ChartField::from_fn(grid, |t| eval(Chart::B, t));
        Self { m, f_a, f_b, eval: Some(eval) }
    }

    pub fn grid(&self) -> DiscGrid<T> {
        self.f_a.grid
    }

    pub fn has_evaluator(&self) -> bool {
        self.eval.is_some()
    }

    /// Value at `w` in `chart`; interpolates when no evaluator is attached.
    pub fn eval(&self, chart: Chart, w: C<T>) -> C<T> {
        match &self.eval {
            Some(f) => f(chart, w),
            None => match chart {
                Chart::A => self.f_a.interp(w),
                Chart::B => self.f_b.interp(w),
            },
        }
    }

    /// Largest `|f_a(t) - t^m f_b(1/t)|` over `0.97 <= |t| <= 1.03`,
    /// relative to the largest sample.
    pub fn transition_mismatch(&self) -> T {
        let grid = self.grid();
        let scale = self.f_a.max_abs().max(self.f_b.max_abs()).max(T::min_positive_value());
        let n = 64;
        let mut worst = T::zero();
        for ri in 0..5 {
            let r = T::lit(0.97 + 0.015 * ri as f64);
            if r > grid.radius() - grid.h() {
                continue;
            }
            for j in 0..n {
                let t = C::from_polar(r, T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(n));
                let d = self.eval(Chart::A, t) - section_to_a(self.m, t, self.eval(Chart::B, t.inv()));
                worst = worst.max(d.norm());
            }
        }
        worst / scale
    }

    /// `f + a * g` on the common grid; evaluators are combined when both exist.
    pub fn axpy(&self, a: C<T>, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::InvalidInput("sections have different bundle degrees".into()));
        }
        let eval = match (&self.eval, &other.eval) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |c: Chart, w: C<T>| f(c, w) + g(c, w) * a) as SectionFn<T>)
            }
            _ => None,
        };
        Ok(Self { m: self.m, f_a: self.f_a.axpy(a, &other.f_a)?, f_b: self.f_b.axpy(a, &other.f_b)?, eval })
    }
}

/// Class of a form in `H^1(CP^1, O(m))`, `m <= -2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CechObstruction<T: Real> {
    pub m: i64,
    /// Laurent modes `t^{-1}, t^{-2}, …, t^{m+1}` of the chart mismatch,
    /// read off by FFT on `|t| = 1`.
    pub values: Vec<C<T>>,
    /// Same modes from the far-field moments,
    /// `(1/pi) ∫_{|t|<1} g_a t^{-n-1} dA - (1/pi) ∫_{|τ|<1} g_b τ^{n-m-1} dA`.
    pub pairing: Vec<C<T>>,
}

impl<T: Real> CechObstruction<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    /// Mode exponent of `values[i]`.
    pub fn exponent(i: usize) -> i64 {
        -(i as i64) - 1
    }
}

/// Cutoff that carries the obstruction polynomial in chart A.
pub fn cocycle_cutoff<T: Real>() -> RadialStep<T> {
    RadialStep::new(T::lit(0.25), T::lit(0.95))
}

/// Solver options shared by the `CP^1` solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cp1Options<T: Real> {
    /// Seam tolerance; `None` uses [`BundleForm::seam_tolerance`].
    pub seam_tolerance: Option<T>,
    /// Skip the seam check (inputs known to be compatible).
    pub trust_seam: bool,
}

impl<T: Real> Default for Cp1Options<T> {
    fn default() -> Self {
        Self { seam_tolerance: None, trust_seam: false }
    }
}

/// Shared assembly of the two unit-disc transforms.
struct Assembly<T: Real> {
    m: i64,
    va: CauchyTransform<T>,
    vb: CauchyTransform<T>,
    /// Number of far-field terms of `v_b` that are poles in chart A.
    skip: usize,
    /// `β_k`, `k < skip`.
    beta: Vec<C<T>>,
    /// `c_n` for `n = -1, …, m+1`.
    cocycle: Vec<C<T>>,
    cutoff: RadialStep<T>,
}

fn unit_rings<T: Real>(grid: DiscGrid<T>) -> Result<usize> {
    let rings = grid.rings_within(T::one());
    let cut = grid.h() * T::from_usize_lossy(rings);
    if (cut - T::one()).abs() > T::lit(1e-6) || rings == grid.n_r() {
        return Err(Error::Precondition(format!(
            "grid spacing {} must divide 1 and the disc must extend past |t| = 1",
            grid.h()
        )));
    }
    Ok(rings)
}

impl<T: Real> Assembly<T> {
    fn new(g: &BundleForm<T>) -> Result<Self> {
        let rings = unit_rings(g.grid())?;
        let (va, vb) = rayon::join(
            || CauchyTransform::truncated(&g.g_a, rings),
            || CauchyTransform::truncated(&g.g_b, rings),
        );
        let (va, vb) = (va?, vb?);
        let m = g.m;
        let skip = (-m - 1).max(0) as usize;
        let beta = (0..skip).map(|k| vb.far_field(k)).collect();
        let cocycle = (0..skip)
            .map(|i| {
                let n = CechObstruction::<T>::exponent(i);
                va.far_field((-n - 1) as usize) - vb.far_field((n - m - 1) as usize)
            })
            .collect();
        Ok(Self { m, va, vb, skip, beta, cocycle, cutoff: cocycle_cutoff() })
    }

    fn eval_a(&self, t: C<T>) -> C<T> {
        let m = self.m;
        let mut u = self.va.eval(t);
        if t.norm() <= T::one() {
            u = u + self.vb.far_series(t, self.skip, m);
        } else {
            u = u + cpowi(t, m) * self.vb.eval(t.inv());
            for (k, b) in self.beta.iter().enumerate() {
                u = u - *b * cpowi(t, k as i64 + 1 + m);
            }
        }
        let psi = self.cutoff.value(t);
        if psi > T::zero() {
            for (i, c) in self.cocycle.iter().enumerate() {
                u = u - *c * cpowi(t, CechObstruction::<T>::exponent(i)) * psi;
            }
        }
        u
    }

    fn eval_b(&self, tau: C<T>) -> C<T> {
        let m = self.m;
        let mut u = self.vb.eval(tau);
        if tau.norm() <= T::one() {
            // the pole terms of τ^m v_a(1/τ) cancel against β and c exactly
            return u + self.va.far_series(tau, self.skip, m);
        }
        u = u + cpowi(tau, m) * self.va.eval(tau.inv());
        for (k, b) in self.beta.iter().enumerate() {
            u = u - *b * cpowi(tau, -(k as i64) - 1);
        }
        let psi = self.cutoff.value(tau.inv());
        for (i, c) in self.cocycle.iter().enumerate() {
            u = u - *c * cpowi(tau, m - CechObstruction::<T>::exponent(i)) * psi;
        }
        u
    }

    fn eval(&self, chart: Chart, w: C<T>) -> C<T> {
        match chart {
            Chart::A => self.eval_a(w),
            Chart::B => self.eval_b(w),
        }
    }
}

fn section_from<T: Real>(asm: Assembly<T>, grid: DiscGrid<T>) -> BundleSection<T> {
    let m = asm.m;
    let asm = Arc::new(asm);
    BundleSection::from_fn(m, grid, move |c, w| asm.eval(c, w))
}

fn check_input<T: Real>(g: &BundleForm<T>, opts: &Cp1Options<T>) -> Result<()> {
    if !opts.trust_seam {
        g.check_seam(opts.seam_tolerance)?;
    }
    Ok(())
}

/// The operator `S` on `CP^1` (trivial bundle).
pub fn solve_scalar_cp1<T: Real>(g: &BundleForm<T>, opts: &Cp1Options<T>) -> Result<BundleSection<T>> {
    if g.m != 0 {
        return Err(Error::InvalidInput(format!("scalar solver needs m = 0, got m = {}", g.m)));
    }
    solve_bundle_cp1(g, opts)
}

/// Solve `∂̄u = g` for `O(m)`-valued forms, `m >= -1`.
pub fn solve_bundle_cp1<T: Real>(g: &BundleForm<T>, opts: &Cp1Options<T>) -> Result<BundleSection<T>> {
    if g.m <= -2 {
        return Err(Error::ObstructedDegree { m: g.m });
    }
    check_input(g, opts)?;
    Ok(section_from(Assembly::new(g)?, g.grid()))
}

/// Obstruction class and partial solution for `m <= -2`.
///
/// The partial solution solves `∂̄u = g - ∂̄ψ · Σ c_n t^n` (chart A) with
/// `ψ` = [`cocycle_cutoff`] and `c_n` = `pairing`.
pub fn cech_obstruction<T: Real>(
    g: &BundleForm<T>,
    opts: &Cp1Options<T>,
) -> Result<(CechObstruction<T>, BundleSection<T>)> {
    let m = g.m;
    if m > -2 {
        return Err(Error::InvalidInput(format!("H^1(O({m})) vanishes; use solve_bundle_cp1")));
    }
    check_input(g, opts)?;
    let asm = Assembly::new(g)?;
    let values = contour_modes(g)?;
    let obstruction = CechObstruction { m, values, pairing: asm.cocycle.clone() };
    Ok((obstruction, section_from(asm, g.grid())))
}

/// Laurent modes `t^{-1} … t^{m+1}` of `V_a(t) - t^m V_b(1/t)` on `|t| = 1`,
/// with `V_a`, `V_b` the transforms over the full chart discs.
fn contour_modes<T: Real>(g: &BundleForm<T>) -> Result<Vec<C<T>>> {
    let m = g.m;
    let (va, vb) = rayon::join(|| CauchyTransform::new(&g.g_a), || CauchyTransform::new(&g.g_b));
    let (va, vb) = (va?, vb?);
    let n = (4 * (-m) as usize).max(128);
    let samples: Vec<C<T>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let t = C::from_polar(T::one(), T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(n));
            va.eval(t) - cpowi(t, m) * vb.eval(t.inv())
        })
        .collect();
    let coeffs = Fourier::new(n).coefficients(&samples);
    Ok((0..(-m - 1) as usize)
        .map(|i| coeffs[mode_index(CechObstruction::<T>::exponent(i), n).expect("mode resolved")])
        .collect())
}

/// `∂̄ψ · Σ c_n t^n`: the chart-A representative removed by [`cech_obstruction`].
pub fn obstruction_representative<T: Real>(c: &CechObstruction<T>, grid: DiscGrid<T>) -> BundleForm<T> {
    let psi = cocycle_cutoff::<T>();
    let coeffs = c.pairing.clone();
    BundleForm::from_chart_a(c.m, grid, move |t| {
        let d = psi.dbar(t);
        if d == czero() {
            return czero();
        }
        coeffs
            .iter()
            .enumerate()
            .fold(czero::<T>(), |acc, (i, ci)| acc + *ci * cpowi(t, CechObstruction::<T>::exponent(i)))
            * d
    })
}

/// Largest `|∂̄u - g|` over grid nodes with `|w| <= 1` in both charts,
/// by fourth-order central differences with step `h`. Every `stride`-th ring and angle
/// is used.
pub fn dbar_residual<T: Real>(u: &BundleSection<T>, g: &BundleForm<T>, stride: usize) -> T {
    let grid = g.grid();
    let h = grid.h();
    let stride = stride.max(1);
    let mut probes = Vec::new();
    for chart in [Chart::A, Chart::B] {
        for i in (0..grid.n_r()).step_by(stride) {
            if grid.ring_radius(i) > T::one() {
                break;
            }
            for j in (0..grid.n_theta()).step_by(stride) {
                probes.push((chart, i, j));
            }
        }
    }
    probes
        .par_iter()
        .map(|&(chart, i, j)| {
            let w = grid.node(i, j);
            let d = dbar_fd4(|z| u.eval(chart, z), w, h);
            (d - g.field(chart).at(i, j)).norm()
        })
        .reduce(T::zero, T::max)
}

/// Smooth section of `O(m)` built from terms `c w^a w̄^b / (1 + |w|^2)^N`
/// in each chart, with exact `∂̄`. Used for manufactured solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSection<T: Real> {
    pub m: i64,
    pub weight: i32,
    /// `(a, b, c)` in chart A.
    pub terms: Vec<(i64, i64, C<T>)>,
}

impl<T: Real> SmoothSection<T> {
    /// Chart-A term `t^i t̄^j (1+|t|^2)^{-N}` is `τ^{m-i+N} τ̄^{N-j} (1+|τ|^2)^{-N}`
    /// in chart B, so it is smooth iff `i <= m + N` and `j <= N`.
    pub fn new(m: i64, weight: i32, terms: Vec<(i64, i64, C<T>)>) -> Result<Self> {
        let n = weight as i64;
        for &(i, j, _) in &terms {
            if i < 0 || j < 0 || i > m + n || j > n {
                return Err(Error::InvalidInput(format!(
                    "term t^{i} conj(t)^{j} is not smooth in O({m}) with weight {weight}"
                )));
            }
        }
        Ok(Self { m, weight, terms })
    }

    /// Seeded random section with every admissible term of weight 3.
    pub fn random(m: i64, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 3i64;
        let mut terms = Vec::new();
        for i in 0..=(m + n).max(-1) {
            for j in 0..=n {
                let c = C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
                terms.push((i, j, c));
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidInput(format!("no smooth terms for m = {m}")));
        }
        Self::new(m, n as i32, terms)
    }

    fn chart_terms(&self, chart: Chart) -> impl Iterator<Item = (i64, i64, C<T>)> + '_ {
        let n = self.weight as i64;
        let m = self.m;
        self.terms.iter().map(move |&(i, j, c)| match chart {
            Chart::A => (i, j, c),
            Chart::B => (m - i + n, n - j, c),
        })
    }

    pub fn value(&self, chart: Chart, w: C<T>) -> C<T> {
        let q = (T::one() + w.norm_sqr()).powi(-self.weight);
        self.chart_terms(chart)
            .fold(czero::<T>(), |acc, (a, b, c)| acc + c * cpowi(w, a) * cpowi(w.conj(), b))
            * q
    }

    /// `∂̄` coefficient in `chart`.
    pub fn dbar(&self, chart: Chart, w: C<T>) -> C<T> {
        let n = self.weight;
        let one = T::one();
        let s = one + w.norm_sqr();
        let q = s.powi(-n);
        let q1 = s.powi(-n - 1) * T::from_i64_lossy(n as i64);
        self.chart_terms(chart).fold(czero(), |acc, (a, b, c)| {
            let wa = cpowi(w, a);
            let first = if b > 0 { wa * cpowi(w.conj(), b - 1) * (T::from_i64_lossy(b) * q) } else { czero() };
            let second = wa * w * cpowi(w.conj(), b) * q1;
            acc + c * (first - second)
        })
    }

    pub fn form(&self, grid: DiscGrid<T>) -> BundleForm<T> {
        BundleForm::from_fn(self.m, grid, |t| self.dbar(Chart::A, t), |t| self.dbar(Chart::B, t))
    }
}

/// `∂̄ f_0` for `f_0 = 1/(1+|t|^2)`, the smooth function on `CP^1` used as
/// a scalar test case: `g_a = -t/(1+|t|^2)^2`, `g_b = τ/(1+|τ|^2)^2`.
pub fn fubini_study_form<T: Real>(grid: DiscGrid<T>) -> BundleForm<T> {
    let f = |t: C<T>| t / (T::one() + t.norm_sqr()).powi(2);
    BundleForm::from_fn(0, grid, move |t| -f(t), f)
}

/// `t^{-1} ∂̄ψ` in chart A, zero in chart B: a form in `O(-2)` whose class is 1.
pub fn smeared_cocycle<T: Real>(m: i64, exponent: i64, grid: DiscGrid<T>) -> BundleForm<T> {
    let psi = cocycle_cutoff::<T>();
    BundleForm::from_fn(m, grid, move |t| psi.dbar(t) * cpowi(t, exponent), |_| czero())
}

/// `max |f(x) - f(y)| / |x - y|^alpha` over all pairs of `points`.
pub fn holder_quotient<T: Real, F: Fn(C<T>) -> C<T> + Sync>(f: F, points: &[C<T>], alpha: T) -> T {
    let vals: Vec<C<T>> = points.par_iter().map(|&p| f(p)).collect();
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut q = T::zero();
            for j in 0..i {
                let d = (points[i] - points[j]).norm();
                if d > T::zero() {
                    q = q.max((vals[i] - vals[j]).norm() / d.powf(alpha));
                }
            }
            q
        })
        .reduce(T::zero, T::max)
}

/// Dimension of the holomorphic sections of `O(m)` detected numerically.
///
/// Candidates are the chart-A monomials `t^j`, `-2 <= j <= max(m, 0) + 3`
/// (chart B: `τ^{m-j}`). Each is tested weakly against a battery of bumps
/// in both charts, `∫ f ∂̄φ dA`, using a polar Gauss–Legendre rule with
/// about `1/h` radial nodes on each bump's disc; the kernel of that residual matrix is the
/// space of global holomorphic sections in the candidate span. Returns the
/// kernel dimension and the singular values.
pub fn holomorphic_dimension(m: i64, h: f64, tol: f64) -> Result<(usize, Vec<f64>)> {
    use crate::quadrature::{Bump, PolarRule};
    if !(h > 0.0) {
        return Err(Error::InvalidInput("spacing must be positive".into()));
    }
    let n = (1.0 / h).ceil() as usize;
    let centers = [
        C::new(0.0, 0.0),
        C::new(0.3, 0.0),
        C::new(0.0, 0.3),
        C::new(-0.35, 0.1),
        C::new(0.2, -0.25),
    ];
    let bumps: Vec<(Chart, Bump<f64>)> = [Chart::A, Chart::B]
        .into_iter()
        .flat_map(|c| centers.iter().map(move |&z| (c, Bump { center: z, radius: 0.5 })))
        .collect();
    let js: Vec<i64> = (-2..=m.max(0) + 3).collect();
    let mut mat = nalgebra::DMatrix::<C<f64>>::zeros(bumps.len(), js.len());
    for (col, &j) in js.iter().enumerate() {
        for (row, (chart, bump)) in bumps.iter().enumerate() {
            let e = match chart {
                Chart::A => j,
                Chart::B => m - j,
            };
            let rule = PolarRule::<f64>::disc(bump.center, bump.radius, n, 4 * n);
            mat[(row, col)] = rule.integrate(|w| cpowi(w, e) * bump.dbar(w));
        }
    }
    let sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    let rank = sv.iter().filter(|&&s| s > tol).count();
    Ok((js.len() - rank, sv))
}

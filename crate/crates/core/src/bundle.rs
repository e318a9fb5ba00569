//! Forms on the disc bundle `D ⊂ O(-e)` and the weighted `∂̄_k` solver.
//!
//! Chart A has base `t` and fiber `s`; chart B has `τ = 1/t`, `σ = t^e s`.
//! `D = {|s| < ρ(t)}` with `ρ(t) = ε / sqrt(Σ_{j<=e} |t|^{2j})`, which is the
//! preimage of the ball `|z| < ε` and has the same profile in both charts.
//!
//! A `(0,1)`-form is `F dt̄ + H ds̄`. In chart B it reads
//! `(-F/τ̄² + e H τ̄^{e-1} σ̄) dτ̄ + τ̄^e H dσ̄`, so the splitting into base
//! and fiber parts depends on the chart. Forms are function-backed: the
//! solver samples them wherever it needs to.
//!
//! Solving `∂̄η = ω` with `η ∈ I^k` (vanishing to order `k` along the zero
//! section, or a pole of order `-k`) goes in three steps:
//!
//! 1. the fiber operator `η_P = s^k P(s^{-k} H)` removes the `ds̄` part;
//! 2. the remaining `dt̄` coefficient is holomorphic in `s`; its Taylor
//!    coefficients `a_μ` are `O(eμ)`-valued forms on `CP^1`;
//! 3. each `a_μ` is solved on `CP^1`, or reported as an obstruction when
//!    `eμ <= -2`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cauchy::{probe_points, CauchyTransform, ChartField, DiscGrid};
use crate::cp1::{cech_obstruction, solve_bundle_cp1, BundleForm, BundleSection, CechObstruction, Cp1Options};
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::quadrature::{mode_index, signed_mode, smooth_step, smooth_step_deriv, Fourier};
use crate::scalar::{cpowi, cre, czero, rpowi, Real, C};

/// Fiber radius `ρ(t) = ε / sqrt(Σ_{j=0}^{e} |t|^{2j})`.
pub fn fiber_radius<T: Real>(e: u32, eps: T, t: C<T>) -> T {
    let x = t.norm_sqr();
    let mut s = T::zero();
    let mut p = T::one();
    for _ in 0..=e {
        s = s + p;
        p = p * x;
    }
    eps / s.sqrt()
}

/// Base point and fiber coordinate of the same point in the other chart.
pub fn bundle_transition<T: Real>(e: u32, base: C<T>, fiber: C<T>) -> (C<T>, C<T>) {
    (base.inv(), cpowi(base, e as i64) * fiber)
}

/// Chart-A `(F, H)` to chart-B `(G, K)` at the chart-B point `(τ, σ)`.
/// The map is the same in the other direction with the roles swapped.
pub fn form_a_to_b<T: Real>(e: u32, tau: C<T>, sigma: C<T>, f: C<T>, h: C<T>) -> (C<T>, C<T>) {
    let tb = tau.conj();
    let e_i = e as i64;
    let g = -f / (tb * tb) + h * cpowi(tb, e_i - 1) * sigma.conj() * T::from_i64_lossy(e_i);
    (g, h * cpowi(tb, e_i))
}

/// A `(0,1)`-form on `D`, evaluable in either chart.
pub trait BundleAreaForm<T: Real>: Send + Sync {
    /// `e` in `O(-e)`.
    fn degree(&self) -> u32;
    /// `ε` in the fiber radius profile.
    fn epsilon(&self) -> T;
    /// `(dt̄, ds̄)` coefficients at `(base, fiber)` in `chart`.
    fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> (C<T>, C<T>);

    /// Many fiber points over one base point.
    fn eval_fiber(&self, chart: Chart, base: C<T>, fiber: &[C<T>]) -> Vec<(C<T>, C<T>)> {
        fiber.iter().map(|&s| self.eval(chart, base, s)).collect()
    }

    /// True when the `ds̄` coefficient vanishes identically in both charts.
    fn fiber_free(&self) -> bool {
        false
    }

    fn radius(&self, base: C<T>) -> T {
        fiber_radius(self.degree(), self.epsilon(), base)
    }

    /// Form whose size sets the scale of holomorphy defects, when this one
    /// is a small remainder of it.
    fn scale_reference(&self) -> Option<&dyn BundleAreaForm<T>> {
        None
    }
}

type FormFn<T> = Arc<dyn Fn(Chart, C<T>, C<T>) -> (C<T>, C<T>) + Send + Sync>;

/// Form given by a closure over both charts.
#[derive(Clone)]
pub struct FnForm<T: Real> {
    pub e: u32,
    pub eps: T,
    f: FormFn<T>,
    fiber_free: bool,
}

impl<T: Real> std::fmt::Debug for FnForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnForm").field("e", &self.e).field("eps", &self.eps).finish()
    }
}

impl<T: Real> FnForm<T> {
    pub fn new<F>(e: u32, eps: T, f: F) -> Self
    where
        F: Fn(Chart, C<T>, C<T>) -> (C<T>, C<T>) + Send + Sync + 'static,
    {
        Self { e, eps, f: Arc::new(f), fiber_free: false }
    }

    /// Chart B obtained from chart A through the transition rule.
    pub fn from_chart_a<F>(e: u32, eps: T, fa: F) -> Self
    where
        F: Fn(C<T>, C<T>) -> (C<T>, C<T>) + Send + Sync + 'static,
    {
        Self::new(e, eps, move |chart, w, s| match chart {
            Chart::A => fa(w, s),
            Chart::B => {
                // (τ, σ) -> (t, s) = (1/τ, τ^e σ)
                let (t, s_a) = bundle_transition(e, w, s);
                let (f, h) = fa(t, s_a);
                form_a_to_b(e, w, s, f, h)
            }
        })
    }

    pub fn zero(e: u32, eps: T) -> Self {
        let mut f = Self::new(e, eps, |_, _, _| (czero(), czero()));
        f.fiber_free = true;
        f
    }

    /// Declare that the `ds̄` part vanishes in both charts.
    pub fn with_fiber_free(mut self, yes: bool) -> Self {
        self.fiber_free = yes;
        self
    }
}

impl<T: Real> BundleAreaForm<T> for FnForm<T> {
    fn degree(&self) -> u32 {
        self.e
    }
    fn epsilon(&self) -> T {
        self.eps
    }
    fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> (C<T>, C<T>) {
        (self.f)(chart, base, fiber)
    }
    fn fiber_free(&self) -> bool {
        self.fiber_free
    }
}

/// Which component a [`Component`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// `dt̄` only (`ω_I`).
    Base,
    /// `ds̄` only (`ω_II`).
    Fiber,
}

/// One chart-wise component of a form.
pub struct Component<'a, T: Real> {
    pub inner: &'a dyn BundleAreaForm<T>,
    pub part: Part,
}

impl<T: Real> BundleAreaForm<T> for Component<'_, T> {
    fn degree(&self) -> u32 {
        self.inner.degree()
    }
    fn epsilon(&self) -> T {
        self.inner.epsilon()
    }
    fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> (C<T>, C<T>) {
        let (f, h) = self.inner.eval(chart, base, fiber);
        match self.part {
            Part::Base => (f, czero()),
            Part::Fiber => (czero(), h),
        }
    }
    fn eval_fiber(&self, chart: Chart, base: C<T>, fiber: &[C<T>]) -> Vec<(C<T>, C<T>)> {
        let part = self.part;
        self.inner
            .eval_fiber(chart, base, fiber)
            .into_iter()
            .map(|(f, h)| match part {
                Part::Base => (f, czero()),
                Part::Fiber => (czero(), h),
            })
            .collect()
    }
    fn fiber_free(&self) -> bool {
        self.part == Part::Base || self.inner.fiber_free()
    }
}

/// `(ω_I, ω_II)`: chart-wise `dt̄` and `ds̄` parts. They sum to `ω` exactly.
pub fn split_components<T: Real>(form: &dyn BundleAreaForm<T>) -> (Component<'_, T>, Component<'_, T>) {
    (Component { inner: form, part: Part::Base }, Component { inner: form, part: Part::Fiber })
}

/// Largest chart-transition defect of `form` over sample points
/// `(τ, σ)` in chart B with `0.9 <= |τ| <= 1.1`, relative to the largest
/// coefficient seen.
pub fn chart_mismatch<T: Real>(form: &dyn BundleAreaForm<T>) -> T {
    let e = form.degree();
    let mut worst = T::zero();
    let mut scale = T::min_positive_value();
    for ri in 0..5 {
        let r = T::lit(0.9 + 0.05 * ri as f64);
        for j in 0..16 {
            let tau = C::from_polar(r, T::TAU() * T::from_usize_lossy(j) / T::lit(16.0) + T::lit(0.1));
            let rho = form.radius(tau);
            for q in 0..4 {
                let sigma = C::from_polar(rho * T::lit(0.2 + 0.2 * q as f64), T::lit(0.7 * j as f64 + q as f64));
                let (t, s) = bundle_transition(e, tau, sigma);
                let (f, h) = form.eval(Chart::A, t, s);
                let (g, k) = form.eval(Chart::B, tau, sigma);
                let (g2, k2) = form_a_to_b(e, tau, sigma, f, h);
                worst = worst.max((g - g2).norm()).max((k - k2).norm());
                scale = scale.max(g.norm()).max(k.norm());
            }
        }
    }
    worst / scale
}

/// Discretization and tolerance knobs of the bundle solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleOptions<T: Real> {
    /// Ring spacing of the base chart grids; must divide 1.
    pub base_h: T,
    /// Radius of the base chart grids; must exceed 1.
    pub base_radius: T,
    /// Rings of the polar grid on each fiber disc.
    pub fiber_rings: usize,
    /// Points on each coefficient contour.
    pub contour_points: usize,
    /// Contour radius as a fraction of `ρ(t)`.
    pub contour_ratio: T,
    /// Step of the difference quotients in the base direction.
    pub fd_step: T,
    /// Obstruction entries below this are treated as zero.
    pub obstruction_tol: T,
    /// Largest admissible `tail_bound`.
    pub tail_tol: T,
    /// Allowed relative departure from fiber holomorphy.
    pub holomorphy_tol: T,
    /// Same, for `ω - ∂̄η_P`, whose defect is the fiber transform's
    /// discretization error.
    pub reduced_holomorphy_tol: T,
}

impl<T: Real> Default for BundleOptions<T> {
    fn default() -> Self {
        Self {
            base_h: T::lit(1.0 / 32.0),
            base_radius: T::lit(1.05),
            fiber_rings: 24,
            contour_points: 64,
            contour_ratio: T::lit(0.7),
            fd_step: T::lit(1e-5),
            obstruction_tol: T::lit(1e-4),
            tail_tol: T::lit(1e-3),
            holomorphy_tol: T::lit(1e-5),
            reduced_holomorphy_tol: T::lit(1e-3),
        }
    }
}

impl<T: Real> BundleOptions<T> {
    pub fn base_grid(&self) -> Result<DiscGrid<T>> {
        DiscGrid::covering(self.base_radius, self.base_h)
    }
}

/// The fiber operator `η_P = s^k P(s^{-k} H)` of a form, evaluated lazily
/// one base point at a time.
pub struct FiberOperator<'a, T: Real> {
    pub form: &'a dyn BundleAreaForm<T>,
    pub k: i64,
    pub rings: usize,
}

impl<'a, T: Real> FiberOperator<'a, T> {
    pub fn new(form: &'a dyn BundleAreaForm<T>, k: i64, rings: usize) -> Self {
        Self { form, k, rings: rings.max(4) }
    }

    /// Transform of `s^{-k} H(t, ·)` over the fiber disc; `None` when the
    /// form has no fiber part.
    pub fn transform(&self, chart: Chart, t: C<T>) -> Result<Option<CauchyTransform<T>>> {
        if self.form.fiber_free() {
            return Ok(None);
        }
        let rho = self.form.radius(t);
        let grid = DiscGrid::new(rho, self.rings, 4 * self.rings)?;
        let nodes = grid.nodes();
        let vals = self.form.eval_fiber(chart, t, &nodes);
        let k = self.k;
        let data: Vec<C<T>> = nodes.iter().zip(vals).map(|(&s, (_, h))| h * cpowi(s, -k)).collect();
        Ok(Some(CauchyTransform::new(&ChartField::new(grid, data)?)?))
    }

    /// `s^{-k} H` must stay bounded as `s -> 0` when `k > 0`.
    pub fn check_vanishing(&self, chart: Chart, t: C<T>) -> Result<()> {
        if self.k <= 0 || self.form.fiber_free() {
            return Ok(());
        }
        let rho = self.form.radius(t);
        let ring = |r: T| -> Vec<C<T>> {
            (0..16).map(|j| C::from_polar(r, T::TAU() * T::from_usize_lossy(j) / T::lit(16.0))).collect()
        };
        let quotient = |r: T| {
            let pts = ring(r);
            self.form
                .eval_fiber(chart, t, &pts)
                .iter()
                .map(|(_, h)| h.norm() / r.powi(self.k as i32))
                .fold(T::zero(), T::max)
        };
        let small = quotient(rho * T::lit(1e-6));
        let reference = quotient(rho * T::lit(0.5));
        if small > T::lit(1e3) * reference + T::lit(1e-8) {
            return Err(Error::Precondition(format!(
                "ds̄ part does not vanish to order {} at {:?} t = {}",
                self.k, chart, t
            )));
        }
        Ok(())
    }

    pub fn eval_fiber(&self, chart: Chart, t: C<T>, s: &[C<T>]) -> Result<Vec<C<T>>> {
        Ok(match self.transform(chart, t)? {
            None => vec![czero(); s.len()],
            Some(tr) => s.iter().map(|&x| tr.eval(x) * cpowi(x, self.k)).collect(),
        })
    }

    /// `∂η_P/∂t̄` by central differences in the base with step `delta`.
    pub fn dbar_base(&self, chart: Chart, t: C<T>, s: &[C<T>], delta: T) -> Result<Vec<C<T>>> {
        if self.form.fiber_free() {
            return Ok(vec![czero(); s.len()]);
        }
        let shifts = [C::new(delta, T::zero()), C::new(-delta, T::zero()), C::new(T::zero(), delta), C::new(T::zero(), -delta)];
        let vals: Vec<Vec<C<T>>> = shifts
            .iter()
            .map(|&d| self.eval_fiber(chart, t + d, s))
            .collect::<Result<_>>()?;
        let i = C::new(T::zero(), T::one());
        let two_d = T::lit(2.0) * delta;
        Ok((0..s.len())
            .map(|q| {
                let fx = (vals[0][q] - vals[1][q]) / two_d;
                let fy = (vals[2][q] - vals[3][q]) / two_d;
                (fx + i * fy) / T::lit(2.0)
            })
            .collect())
    }
}

/// `η_P` as a function on `D`.
pub fn fiber_cauchy_p<'a, T: Real>(
    form_ii: &'a dyn BundleAreaForm<T>,
    k: i64,
    opts: &BundleOptions<T>,
) -> FiberOperator<'a, T> {
    FiberOperator::new(form_ii, k, opts.fiber_rings)
}

/// `ω - ∂̄η_P`: the `dt̄` coefficient `F - ∂η_P/∂t̄`; the `ds̄` part is gone.
pub struct ReducedForm<'a, T: Real> {
    pub form: &'a dyn BundleAreaForm<T>,
    pub p: FiberOperator<'a, T>,
    pub delta: T,
}

impl<T: Real> BundleAreaForm<T> for ReducedForm<'_, T> {
    fn degree(&self) -> u32 {
        self.form.degree()
    }
    fn epsilon(&self) -> T {
        self.form.epsilon()
    }
    fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> (C<T>, C<T>) {
        self.eval_fiber(chart, base, &[fiber])[0]
    }
    fn eval_fiber(&self, chart: Chart, base: C<T>, fiber: &[C<T>]) -> Vec<(C<T>, C<T>)> {
        let raw = self.form.eval_fiber(chart, base, fiber);
        let d = self
            .p
            .dbar_base(chart, base, fiber, self.delta)
            .unwrap_or_else(|_| vec![C::new(T::nan(), T::nan()); fiber.len()]);
        raw.iter().zip(d).map(|(&(f, _), d)| (f - d, czero())).collect()
    }
    fn fiber_free(&self) -> bool {
        true
    }
    fn scale_reference(&self) -> Option<&dyn BundleAreaForm<T>> {
        Some(self.form)
    }
}

/// Fiber coefficients `a_μ`, `μ = k..=mu_max`, of a `dt̄`-form holomorphic
/// in the fiber; `coeffs[i]` is an `O(eμ)`-valued form for `μ = k + i`.
#[derive(Debug, Clone)]
pub struct FiberSeries<T: Real> {
    pub k: i64,
    pub mu_max: i64,
    pub e: u32,
    pub coeffs: Vec<BundleForm<T>>,
    /// `max_t |a_{mu_max}(t)| ρ₀(t)^{mu_max}` with `ρ₀` the contour radius.
    pub tail_bound: T,
}

impl<T: Real> FiberSeries<T> {
    pub fn coeff(&self, mu: i64) -> Option<&BundleForm<T>> {
        if mu < self.k || mu > self.mu_max {
            return None;
        }
        self.coeffs.get((mu - self.k) as usize)
    }

    pub fn mus(&self) -> impl Iterator<Item = i64> {
        self.k..=self.mu_max
    }

    /// `Σ a_μ(t) s^μ` at the base node `idx` of `chart`.
    pub fn reassemble(&self, chart: Chart, idx: usize, s: C<T>) -> C<T> {
        self.coeffs
            .iter()
            .zip(self.mus())
            .fold(czero(), |acc, (a, mu)| acc + a.field(chart).values[idx] * cpowi(s, mu))
    }
}

fn contour<T: Real>(r: T, n: usize) -> Vec<C<T>> {
    (0..n)
        .map(|j| C::from_polar(r, T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(n)))
        .collect()
}

struct NodeCoeffs<T: Real> {
    a: Vec<C<T>>,
    tail: T,
    defect: T,
}

fn node_coeffs<T: Real>(
    form: &dyn BundleAreaForm<T>,
    chart: Chart,
    t: C<T>,
    k: i64,
    mu_max: i64,
    fourier: &Fourier<T>,
    opts: &BundleOptions<T>,
) -> NodeCoeffs<T> {
    let n = fourier.len();
    let rho = form.radius(t);
    let r0 = opts.contour_ratio * rho;
    let r1 = T::lit(0.5) * rho;
    let mut pts = contour(r0, n);
    pts.extend(contour(r1, n));
    let vals: Vec<C<T>> = form.eval_fiber(chart, t, &pts).into_iter().map(|(f, _)| f).collect();
    let (v0, v1) = vals.split_at(n);
    let c0 = fourier.coefficients(v0);
    let c1 = fourier.coefficients(v1);
    let mut scale = v0.iter().chain(v1).map(|z| z.norm()).fold(T::zero(), T::max);
    if let Some(reference) = form.scale_reference() {
        for (f, h) in reference.eval_fiber(chart, t, &pts) {
            scale = scale.max(f.norm()).max(h.norm());
        }
    }
    let mut a = Vec::with_capacity((mu_max - k + 1) as usize);
    let mut defect = T::zero();
    for idx in 0..n {
        let mu = signed_mode(idx, n);
        if mu < k {
            defect = defect.max(c0[idx].norm()).max(c1[idx].norm());
        } else if mu <= mu_max {
            let a0 = c0[idx] * rpowi(r0, -mu);
            let a1 = c1[idx] * rpowi(r1, -mu);
            defect = defect.max((a0 - a1).norm() * rpowi(r1, mu));
        }
    }
    for mu in k..=mu_max {
        let idx = mode_index(mu, n).expect("checked by caller");
        a.push(c0[idx] * rpowi(r0, -mu));
    }
    let tail = c0[mode_index(mu_max, n).expect("checked by caller")].norm();
    let defect = if scale > T::zero() { defect / scale } else { T::zero() };
    NodeCoeffs { a, tail, defect }
}

/// Contour extraction of the fiber coefficients of the `dt̄` part of `form`.
///
/// The `ds̄` part is ignored; pass `ω - ∂̄η_P` (a [`ReducedForm`]) for mixed
/// data. Coefficients live on [`BundleOptions::base_grid`] in both charts.
pub fn series_coefficients<T: Real>(
    form: &dyn BundleAreaForm<T>,
    k: i64,
    mu_max: i64,
    opts: &BundleOptions<T>,
) -> Result<FiberSeries<T>> {
    if mu_max < k {
        return Err(Error::InvalidInput(format!("mu_max = {mu_max} below k = {k}")));
    }
    let n = opts.contour_points;
    if mode_index(k, n).is_none() || mode_index(mu_max, n).is_none() || n < 2 * (mu_max - k + 2) as usize {
        return Err(Error::InvalidInput(format!(
            "{n} contour points cannot resolve modes {k}..={mu_max}"
        )));
    }
    let grid = opts.base_grid()?;
    let fourier = Fourier::new(n);
    let count = (mu_max - k + 1) as usize;
    let mut fields: Vec<[Vec<C<T>>; 2]> = (0..count).map(|_| [Vec::new(), Vec::new()]).collect();
    let mut tail = T::zero();
    let mut worst: (T, Chart, C<T>) = (T::zero(), Chart::A, czero());
    for (ci, chart) in [Chart::A, Chart::B].into_iter().enumerate() {
        let nodes = grid.nodes();
        let per_node: Vec<NodeCoeffs<T>> = nodes
            .par_iter()
            .map(|&t| node_coeffs(form, chart, t, k, mu_max, &fourier, opts))
            .collect();
        for (nc, &t) in per_node.iter().zip(&nodes) {
            if t.norm() <= T::one() {
                tail = tail.max(nc.tail);
                if nc.defect > worst.0 || nc.defect.is_nan() {
                    worst = (nc.defect, chart, t);
                }
            }
        }
        for (i, f) in fields.iter_mut().enumerate() {
            f[ci] = per_node.iter().map(|nc| nc.a[i]).collect();
        }
    }
    let tol = if form.scale_reference().is_some() { opts.reduced_holomorphy_tol } else { opts.holomorphy_tol };
    if !(worst.0 <= tol) {
        return Err(Error::Precondition(format!(
            "form is not holomorphic in the fiber: relative defect {:e} at chart {} t = {}",
            worst.0.to_f64_lossy(),
            worst.1.label(),
            worst.2
        )));
    }
    let e = form.degree();
    let coeffs = fields
        .into_iter()
        .zip(k..=mu_max)
        .map(|([a, b], mu)| {
            BundleForm::new(
                e as i64 * mu,
                ChartField::new(grid.clone(), a)?,
                ChartField::new(grid.clone(), b)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberSeries { k, mu_max, e, coeffs, tail_bound: tail })
}

/// Čech classes of the coefficients that `∂̄` on `CP^1` cannot reach,
/// keyed by `μ` (those with `eμ <= -2`).
#[derive(Debug, Clone)]
pub struct ObstructionReport<T: Real> {
    pub entries: BTreeMap<i64, CechObstruction<T>>,
    pub clean: bool,
    pub tolerance: T,
}

impl<T: Real> ObstructionReport<T> {
    pub fn from_entries(entries: BTreeMap<i64, CechObstruction<T>>, tolerance: T) -> Self {
        let clean = entries.values().all(|c| c.max_abs() <= tolerance);
        Self { entries, clean, tolerance }
    }

    pub fn max_abs(&self) -> T {
        self.entries.values().map(|c| c.max_abs()).fold(T::zero(), T::max)
    }
}

type FiberEval<T> = dyn Fn(Chart, C<T>, &[C<T>]) -> Vec<C<T>> + Send + Sync;

/// A scalar function on the disc bundle, given chartwise.
#[derive(Clone)]
pub struct BundleFunction<T: Real> {
    pub e: u32,
    f: Arc<FiberEval<T>>,
}

impl<T: Real> std::fmt::Debug for BundleFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BundleFunction").field("e", &self.e).finish_non_exhaustive()
    }
}

impl<T: Real> BundleFunction<T> {
    /// `f(chart, base, fibers)` evaluates at all `fibers` over one base point.
    pub fn new<F>(e: u32, f: F) -> Self
    where
        F: Fn(Chart, C<T>, &[C<T>]) -> Vec<C<T>> + Send + Sync + 'static,
    {
        Self { e, f: Arc::new(f) }
    }

    /// From a pointwise chart-A formula, extended to chart B by the transition.
    pub fn from_chart_a<F>(e: u32, fa: F) -> Self
    where
        F: Fn(C<T>, C<T>) -> C<T> + Send + Sync + 'static,
    {
        Self::new(e, move |chart, w, ss| {
            ss.iter()
                .map(|&s| match chart {
                    Chart::A => fa(w, s),
                    Chart::B => {
                        let (t, s_a) = bundle_transition(e, w, s);
                        fa(t, s_a)
                    }
                })
                .collect()
        })
    }

    pub fn zero(e: u32) -> Self {
        Self::new(e, |_, _, ss| vec![czero(); ss.len()])
    }

    pub fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> C<T> {
        (self.f)(chart, base, &[fiber])[0]
    }

    pub fn eval_fiber(&self, chart: Chart, base: C<T>, fiber: &[C<T>]) -> Vec<C<T>> {
        (self.f)(chart, base, fiber)
    }

    /// `(∂/∂t̄, ∂/∂s̄)` by central differences with step `delta`.
    pub fn dbar(&self, chart: Chart, base: C<T>, fiber: C<T>, delta: T) -> (C<T>, C<T>) {
        let i = C::new(T::zero(), T::one());
        let two = T::lit(2.0);
        let dx = cre(delta);
        let dy = i * delta;
        let base_vals: Vec<C<T>> =
            [dx, -dx, dy, -dy].iter().map(|&d| self.eval(chart, base + d, fiber)).collect();
        let fib = self.eval_fiber(chart, base, &[fiber + dx, fiber - dx, fiber + dy, fiber - dy]);
        let wirt = |v: &[C<T>]| ((v[0] - v[1]) / (two * delta) + i * (v[2] - v[3]) / (two * delta)) / two;
        (wirt(&base_vals), wirt(&fib))
    }

    pub fn axpy(&self, a: C<T>, other: &Self) -> Self {
        let (x, y) = (self.clone(), other.clone());
        Self::new(self.e, move |c, w, ss| {
            x.eval_fiber(c, w, ss).into_iter().zip(y.eval_fiber(c, w, ss)).map(|(p, q)| p + a * q).collect()
        })
    }
}

/// Sample points `(chart, t, s)` with `|t| <= 0.95` and
/// `0.15 ρ(t) <= |s| <= 0.6 ρ(t)`, alternating charts.
pub fn bundle_probes<T: Real>(form: &dyn BundleAreaForm<T>, count: usize) -> Vec<(Chart, C<T>, C<T>)> {
    let base = probe_points(T::lit(0.95 / 0.75), count);
    base.into_iter()
        .enumerate()
        .map(|(i, t)| {
            let chart = if i % 2 == 0 { Chart::A } else { Chart::B };
            let x = T::from_usize_lossy(i) / T::from_usize_lossy(count.max(1));
            let frac = T::lit(0.15) + T::lit(0.45) * x;
            let phi = T::lit(2.399963229728653) * T::from_usize_lossy(i) + T::lit(0.5);
            (chart, t, C::from_polar(frac * form.radius(t), phi))
        })
        .collect()
}

/// `max |∂̄η - ω|` over `probes`, by difference quotients.
pub fn bundle_residual<T: Real>(
    eta: &BundleFunction<T>,
    form: &dyn BundleAreaForm<T>,
    probes: &[(Chart, C<T>, C<T>)],
    delta: T,
) -> T {
    probes
        .par_iter()
        .map(|&(chart, t, s)| {
            let (du_t, du_s) = eta.dbar(chart, t, s, delta);
            let (f, h) = form.eval(chart, t, s);
            (du_t - f).norm().max((du_s - h).norm())
        })
        .reduce(T::zero, T::max)
}

/// Output of [`solve_dbar_k`].
#[derive(Debug, Clone)]
pub struct DbarKSolution<T: Real> {
    pub eta: BundleFunction<T>,
    pub series: FiberSeries<T>,
    pub report: ObstructionReport<T>,
}

/// Solve `∂̄_k η = ω` on the disc bundle up to the obstructions in the report.
///
/// `η = η_P + Σ_μ u_μ s^μ` where `u_μ` solves `∂̄u_μ = a_μ` on `CP^1` for
/// `eμ >= -1`; for `eμ <= -2` the class is recorded and the partial
/// solution from [`cech_obstruction`] is used.
pub fn solve_dbar_k<T: Real>(
    form: Arc<dyn BundleAreaForm<T>>,
    k: i64,
    mu_max: i64,
    opts: &BundleOptions<T>,
) -> Result<DbarKSolution<T>> {
    let mismatch = chart_mismatch(form.as_ref());
    if mismatch > T::lit(1e-6) {
        return Err(Error::SeamMismatch { mismatch: mismatch.to_f64_lossy(), tolerance: 1e-6 });
    }
    let rings = opts.fiber_rings;
    let p = FiberOperator::new(form.as_ref(), k, rings);
    for t in probe_points(T::one(), 16) {
        for chart in [Chart::A, Chart::B] {
            p.check_vanishing(chart, t)?;
        }
    }
    let series = if form.fiber_free() {
        series_coefficients(form.as_ref(), k, mu_max, opts)?
    } else {
        let reduced = ReducedForm { form: form.as_ref(), p, delta: opts.fd_step };
        series_coefficients(&reduced, k, mu_max, opts)?
    };
    if series.tail_bound > opts.tail_tol {
        return Err(Error::Truncation {
            tail_bound: series.tail_bound.to_f64_lossy(),
            tolerance: opts.tail_tol.to_f64_lossy(),
        });
    }
    let cp1_opts = Cp1Options { seam_tolerance: None, trust_seam: true };
    let mut entries = BTreeMap::new();
    let mut sections = Vec::new();
    for (a, mu) in series.coeffs.iter().zip(series.mus()) {
        if a.max_abs() == T::zero() {
            continue;
        }
        let u = if a.m >= -1 {
            solve_bundle_cp1(a, &cp1_opts)?
        } else {
            let (obs, u) = cech_obstruction(a, &cp1_opts)?;
            entries.insert(mu, obs);
            u
        };
        sections.push((mu, u));
    }
    let report = ObstructionReport::from_entries(entries, opts.obstruction_tol);
    let eta = assemble_eta(form, k, rings, sections);
    Ok(DbarKSolution { eta, series, report })
}

fn assemble_eta<T: Real>(
    form: Arc<dyn BundleAreaForm<T>>,
    k: i64,
    rings: usize,
    sections: Vec<(i64, BundleSection<T>)>,
) -> BundleFunction<T> {
    let e = form.degree();
    BundleFunction::new(e, move |chart, w, ss| {
        // Stay inside the unit disc of some chart.
        let (chart, w, ss): (Chart, C<T>, Vec<C<T>>) = if w.norm() > T::one() {
            let moved = ss.iter().map(|&s| bundle_transition(e, w, s).1).collect();
            (chart.other(), w.inv(), moved)
        } else {
            (chart, w, ss.to_vec())
        };
        let p = FiberOperator::new(form.as_ref(), k, rings);
        let mut out = p.eval_fiber(chart, w, &ss).unwrap_or_else(|_| vec![C::new(T::nan(), T::nan()); ss.len()]);
        for (mu, u) in &sections {
            let c = u.eval(chart, w);
            for (o, &s) in out.iter_mut().zip(&ss) {
                *o = *o + c * cpowi(s, *mu);
            }
        }
        out
    })
}

/// Fiber coefficients `a_μ(t)`, `μ = k..=mu_max`, at a single base point.
pub fn coefficients_at<T: Real>(
    form: &dyn BundleAreaForm<T>,
    chart: Chart,
    t: C<T>,
    k: i64,
    mu_max: i64,
    opts: &BundleOptions<T>,
) -> Result<Vec<C<T>>> {
    let n = opts.contour_points;
    if mu_max < k || mode_index(k, n).is_none() || mode_index(mu_max, n).is_none() {
        return Err(Error::InvalidInput(format!("{n} contour points cannot resolve modes {k}..={mu_max}")));
    }
    Ok(node_coeffs(form, chart, t, k, mu_max, &Fourier::new(n), opts).a)
}

/// Outer edge of the seam of the base partition of unity; the inner edge
/// is its inverse.
pub const SEAM_OUTER: f64 = 1.25;

fn seam_log<T: Real>() -> T {
    T::lit(SEAM_OUTER.ln())
}

/// Chart-A weight of the base partition of unity: 1 for `|t| <= 0.8`,
/// 0 for `|t| >= 1.25`, and `chi_a(1/t) = 1 - chi_a(t)`. Chart B carries
/// `1 - chi_a`.
pub fn chi_a<T: Real>(t: C<T>) -> T {
    let l = seam_log::<T>();
    T::one() - smooth_step((t.norm().ln() + l) / (l + l))
}

/// `∂chi_a/∂t̄`.
pub fn dbar_chi_a<T: Real>(t: C<T>) -> C<T> {
    let r = t.norm();
    if r == T::zero() {
        return czero();
    }
    let l = seam_log::<T>();
    let d = smooth_step_deriv((r.ln() + l) / (l + l));
    -t * (d / (T::lit(4.0) * l * r * r))
}

/// Single-disc transforms `I_l[a]` of one `O(m)`-valued coefficient.
#[derive(Clone)]
struct LocalCoeff<T: Real> {
    mu: i64,
    m: i64,
    tr: [Arc<CauchyTransform<T>>; 2],
}

impl<T: Real> LocalCoeff<T> {
    fn new(mu: i64, a: &BundleForm<T>) -> Result<Self> {
        Ok(Self {
            mu,
            m: a.m,
            tr: [Arc::new(CauchyTransform::new(a.field(Chart::A))?), Arc::new(CauchyTransform::new(a.field(Chart::B))?)],
        })
    }

    fn eval(&self, chart: Chart, w: C<T>) -> C<T> {
        match chart {
            Chart::A => self.tr[0].eval(w),
            Chart::B => self.tr[1].eval(w),
        }
    }

    /// `I_A[a](t) - I_B[a]` expressed in chart A, on the overlap.
    fn jump(&self, t: C<T>) -> C<T> {
        self.tr[0].eval(t) - cpowi(t, self.m) * self.tr[1].eval(t.inv())
    }
}

fn in_seam<T: Real>(t: C<T>) -> bool {
    let r = t.norm();
    r > T::lit(1.0 / SEAM_OUTER) && r < T::lit(SEAM_OUTER)
}

/// `∂chi_a · Σ_μ jump_μ(t) s^μ dt̄`, the gluing defect of local solutions.
fn gluing_form<T: Real>(e: u32, eps: T, coeffs: Vec<LocalCoeff<T>>) -> FnForm<T> {
    FnForm::from_chart_a(e, eps, move |t: C<T>, s: C<T>| {
        if !in_seam(t) {
            return (czero(), czero());
        }
        let d = dbar_chi_a(t);
        let f = coeffs.iter().fold(czero(), |acc, c| acc + c.jump(t) * cpowi(s, c.mu));
        (d * f, czero())
    })
    .with_fiber_free(true)
}

/// `Σ_l chi_l (base(l, t, s) + Σ_μ I_l[a_μ](t) s^μ)` as a function on `D`.
fn glue<T: Real, B>(e: u32, coeffs: Vec<LocalCoeff<T>>, base: B) -> BundleFunction<T>
where
    B: Fn(Chart, C<T>, &[C<T>]) -> Vec<C<T>> + Send + Sync + 'static,
{
    let local = move |chart: Chart, w: C<T>, ss: &[C<T>]| -> Vec<C<T>> {
        let mut out = base(chart, w, ss);
        for c in &coeffs {
            let v = c.eval(chart, w);
            for (o, &s) in out.iter_mut().zip(ss) {
                *o = *o + v * cpowi(s, c.mu);
            }
        }
        out
    };
    BundleFunction::new(e, move |chart, w, ss| {
        let (ta, sa): (C<T>, Vec<C<T>>) = match chart {
            Chart::A => (w, ss.to_vec()),
            Chart::B => {
                if w == czero() {
                    return local(Chart::B, w, ss);
                }
                (w.inv(), ss.iter().map(|&s| bundle_transition(e, w, s).1).collect())
            }
        };
        let xa = chi_a(ta);
        let mut out = vec![czero(); ss.len()];
        if xa > T::zero() {
            for (o, v) in out.iter_mut().zip(local(Chart::A, ta, &sa)) {
                *o = *o + v * xa;
            }
        }
        if xa < T::one() {
            let tb = ta.inv();
            let sb: Vec<C<T>> = sa.iter().map(|&s| bundle_transition(e, ta, s).1).collect();
            for (o, v) in out.iter_mut().zip(local(Chart::B, tb, &sb)) {
                *o = *o + v * (T::one() - xa);
            }
        }
        out
    })
}

/// Output of [`regularize_pullback`].
#[derive(Clone)]
pub struct Regularization<T: Real> {
    /// Glued local solutions with their traces on the zero section removed.
    pub u0: BundleFunction<T>,
    /// Glued local solutions of `ω₀`, vanishing on the zero section.
    pub u1: BundleFunction<T>,
    /// `∂̄u₀ - ω`.
    pub omega0: Arc<FnForm<T>>,
    /// `∂̄u₁ - ω₀`; lies in `I^1`.
    pub omega1: Arc<FnForm<T>>,
    pub series: FiberSeries<T>,
}

impl<T: Real> std::fmt::Debug for Regularization<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Regularization").field("series", &self.series).finish_non_exhaustive()
    }
}

fn check_bounded<T: Real>(form: &dyn BundleAreaForm<T>) -> Result<()> {
    let mut scale = T::zero();
    let mut near = T::zero();
    for t in probe_points(T::one(), 24) {
        let rho = form.radius(t);
        for chart in [Chart::A, Chart::B] {
            for j in 0..8 {
                let th = T::TAU() * T::from_usize_lossy(j) / T::lit(8.0);
                let (f, h) = form.eval(chart, t, C::from_polar(T::lit(0.5) * rho, th));
                scale = scale.max(f.norm()).max(h.norm());
                let (f, h) = form.eval(chart, t, C::from_polar(T::lit(1e-7) * rho, th));
                near = near.max(f.norm()).max(h.norm());
                if !(f.norm() + h.norm()).is_finite() {
                    near = T::infinity();
                }
            }
        }
    }
    if !(near <= T::lit(1e3) * (scale + T::lit(1e-12))) {
        return Err(Error::Precondition(format!(
            "form is not bounded near the zero section: {:e} against {:e}",
            near.to_f64_lossy(),
            scale.to_f64_lossy()
        )));
    }
    Ok(())
}

/// First regularization of a bounded, `∂̄`-closed pullback `ω`.
///
/// Returns `u₀, u₁` with `∂̄(u₀ - u₁) = ω - ω₁` and `ω₁ ∈ I^1`; `ω₁` is
/// then solved with weight `k = 1`. The `dt̄` part of `ω` must vanish on the
/// zero section, as it does for every pullback from the cone. The base
/// grids are widened to cover the seam of [`chi_a`].
pub fn regularize_pullback<T: Real>(
    form: Arc<dyn BundleAreaForm<T>>,
    mu_max: i64,
    opts: &BundleOptions<T>,
) -> Result<Regularization<T>> {
    let opts = &BundleOptions { base_radius: opts.base_radius.max(T::lit(SEAM_OUTER + 0.05)), ..*opts };
    let e = form.degree();
    let eps = form.epsilon();
    check_bounded(form.as_ref())?;
    let mut trace = T::zero();
    let mut scale = T::zero();
    for t in probe_points(T::one(), 24) {
        for chart in [Chart::A, Chart::B] {
            trace = trace.max(form.eval(chart, t, czero()).0.norm());
            scale = scale.max(form.eval(chart, t, C::new(T::lit(0.5) * form.radius(t), T::zero())).0.norm());
        }
    }
    if trace > T::lit(1e-8) * (scale + T::one()) {
        return Err(Error::Precondition(format!(
            "dt̄ part does not vanish on the zero section ({:e})",
            trace.to_f64_lossy()
        )));
    }
    let rings = opts.fiber_rings;
    let series = if form.fiber_free() {
        series_coefficients(form.as_ref(), 0, mu_max, opts)?
    } else {
        let reduced = ReducedForm { form: form.as_ref(), p: FiberOperator::new(form.as_ref(), 0, rings), delta: opts.fd_step };
        series_coefficients(&reduced, 0, mu_max, opts)?
    };
    if series.tail_bound > opts.tail_tol {
        return Err(Error::Truncation {
            tail_bound: series.tail_bound.to_f64_lossy(),
            tolerance: opts.tail_tol.to_f64_lossy(),
        });
    }
    let step1: Vec<LocalCoeff<T>> = series
        .coeffs
        .iter()
        .zip(series.mus())
        .filter(|(a, mu)| *mu >= 1 && a.max_abs() > T::zero())
        .map(|(a, mu)| LocalCoeff::new(mu, a))
        .collect::<Result<_>>()?;
    let f = form.clone();
    let u0 = glue(e, step1.clone(), move |chart, w, ss| {
        let p = FiberOperator::new(f.as_ref(), 0, rings);
        let mut pts = ss.to_vec();
        pts.push(czero());
        match p.eval_fiber(chart, w, &pts) {
            Ok(v) => {
                let at0 = v[ss.len()];
                v[..ss.len()].iter().map(|&x| x - at0).collect()
            }
            Err(_) => vec![C::new(T::nan(), T::nan()); ss.len()],
        }
    });
    let omega0 = gluing_form(e, eps, step1.clone());
    // Second step: the coefficients of ω₀ are supported in the seam.
    let grid = opts.base_grid()?;
    let step2: Vec<LocalCoeff<T>> = step1
        .iter()
        .map(|c| {
            let fa = |t: C<T>| if in_seam(t) { dbar_chi_a(t) * c.jump(t) } else { czero() };
            let b = BundleForm::from_fn(c.m, grid.clone(), fa, |tau: C<T>| {
                if tau == czero() {
                    return czero();
                }
                let t = tau.inv();
                -cpowi(tau, c.m) * fa(t) / (tau.conj() * tau.conj())
            });
            LocalCoeff::new(c.mu, &b)
        })
        .collect::<Result<_>>()?;
    let u1 = glue(e, step2.clone(), |_, _, ss| vec![czero(); ss.len()]);
    let omega1 = gluing_form(e, eps, step2);
    Ok(Regularization { u0, u1, omega0: Arc::new(omega0), omega1: Arc::new(omega1), series })
}

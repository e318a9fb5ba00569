//! End-to-end solvers on the punctured cone `Ω* = {0 < |z| < ε} ∩ Y_e`.
//!
//! Forms are pulled back to the disc bundle `D` (the preimage of `Ω`), solved
//! there with [`crate::bundle`] and pushed back down. Chart A covers
//! `|t| < 1`, chart B covers `|τ| < 1`; together they cover `D` up to a
//! null set, which is how every integral below is organised.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::{
    bundle_probes, bundle_residual, fiber_radius, regularize_pullback, solve_dbar_k, BundleAreaForm,
    BundleFunction, BundleOptions, FnForm, ObstructionReport,
};
use crate::cp1::SmoothSection;
use crate::error::{Error, Result};
use crate::geometry::{
    blowup_map, distance_bounds, distortion_profile, gram_matrix, inverse_blowup, pullback_form, AmbientPoint,
    Chart, ChartPoint, ConeModel,
};
use crate::obstruction::{hypothesis_check, CurveSpec, Theorem, Verdict};
use crate::quadrature::{gauss_legendre, smooth_step, smooth_step_deriv, PolyBump};

use crate::scalar::{cpowi, cre, czero, Real, C};

/// Which manufactured family a test form comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFormKind {
    /// `∂̄(χ p)` with `p` a holomorphic polynomial and `χ = exp(-2|z|²/ε²)`.
    ExactSmooth,
    /// `∂̄(χ (c·z̄) |z|^{-1/2})`: in `L²` but unbounded at the apex.
    ExactSingular,
    /// `Σ_{μ=1}^{3} ∂̄f_μ s^μ` upstairs, `f_μ` random sections of `O(eμ)`.
    BoundedRandom,
}

impl TestFormKind {
    pub fn label(self) -> &'static str {
        match self {
            TestFormKind::ExactSmooth => "exact_smooth",
            TestFormKind::ExactSingular => "exact_singular",
            TestFormKind::BoundedRandom => "bounded_random",
        }
    }
}

impl std::str::FromStr for TestFormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_smooth" => Ok(Self::ExactSmooth),
            "exact_singular" => Ok(Self::ExactSingular),
            "bounded_random" => Ok(Self::BoundedRandom),
            _ => Err(Error::InvalidInput(format!("unknown test form kind `{s}`"))),
        }
    }
}

type AmbientFn<T> = dyn Fn(&AmbientPoint<T>) -> Vec<C<T>> + Send + Sync;

/// Pullback of an ambient form `Σ f_j dz̄_j` to the disc bundle.
pub struct PulledBack<T: Real> {
    cone: ConeModel,
    eps: T,
    f: Arc<AmbientFn<T>>,
}

impl<T: Real> BundleAreaForm<T> for PulledBack<T> {
    fn degree(&self) -> u32 {
        self.cone.degree()
    }
    fn epsilon(&self) -> T {
        self.eps
    }
    fn eval(&self, chart: Chart, base: C<T>, fiber: C<T>) -> (C<T>, C<T>) {
        pullback_form(&self.cone, &ChartPoint::new(chart, base, fiber), |z| (self.f)(z))
    }
}

/// A `(0,1)`-form on `Ω*`, stored through its pullback.
#[derive(Clone)]
pub struct ConeForm<T: Real> {
    pub cone: ConeModel,
    pub eps: T,
    pub kind: Option<TestFormKind>,
    pulled: Arc<dyn BundleAreaForm<T>>,
    /// `u` with `∂̄u = ω`, for manufactured forms.
    potential: Option<BundleFunction<T>>,
}

impl<T: Real> std::fmt::Debug for ConeForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConeForm")
            .field("degree", &self.cone.degree())
            .field("eps", &self.eps)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ConeForm<T> {
    /// From ambient coefficients `z -> (f_0, …, f_e)`.
    pub fn from_ambient<F>(cone: ConeModel, eps: T, f: F) -> Self
    where
        F: Fn(&AmbientPoint<T>) -> Vec<C<T>> + Send + Sync + 'static,
    {
        let pulled = Arc::new(PulledBack { cone, eps, f: Arc::new(f) });
        Self { cone, eps, kind: None, pulled, potential: None }
    }

    /// From a form already given on the disc bundle.
    pub fn from_bundle(cone: ConeModel, form: Arc<dyn BundleAreaForm<T>>) -> Result<Self> {
        if form.degree() != cone.degree() {
            return Err(Error::InvalidInput("bundle degree differs from cone degree".into()));
        }
        let eps = form.epsilon();
        Ok(Self { cone, eps, kind: None, pulled: form, potential: None })
    }

    pub fn zero(cone: ConeModel, eps: T) -> Self {
        let form = FnForm::zero(cone.degree(), eps).with_fiber_free(true);
        Self { cone, eps, kind: None, pulled: Arc::new(form), potential: Some(BundleFunction::zero(cone.degree())) }
    }

    pub fn with_potential(mut self, u: BundleFunction<T>) -> Self {
        self.potential = Some(u);
        self
    }

    pub fn pullback(&self) -> Arc<dyn BundleAreaForm<T>> {
        self.pulled.clone()
    }

    pub fn potential(&self) -> Option<&BundleFunction<T>> {
        self.potential.as_ref()
    }

    /// Pullback components `(dt̄, ds̄)` at a chart point.
    pub fn components(&self, p: &ChartPoint<T>) -> (C<T>, C<T>) {
        self.pulled.eval(p.chart, p.base, p.fiber)
    }

    /// `|ω|² det G`, the integrand of the squared `L²` norm in chart measure.
    pub fn weighted_density(&self, p: &ChartPoint<T>) -> T {
        let g = self.components(p);
        adjugate_form(&gram_matrix(&self.cone, p), g)
    }

    /// Pointwise norm in the metric induced from `C^{e+1}`; infinite on the
    /// exceptional curve unless the form vanishes there.
    pub fn pointwise_norm(&self, p: &ChartPoint<T>) -> T {
        let gm = gram_matrix(&self.cone, p);
        let det = gm[0][0].re * gm[1][1].re - gm[0][1].norm_sqr();
        let num = adjugate_form(&gm, self.components(p));
        if det <= T::zero() {
            return if num == T::zero() { T::zero() } else { T::infinity() };
        }
        (num / det).sqrt()
    }

    pub fn scaled(&self, a: T) -> Self {
        let inner = self.pulled.clone();
        let form = FnForm::new(self.cone.degree(), self.eps, move |chart, t, s| {
            let (f, h) = inner.eval(chart, t, s);
            (f * a, h * a)
        })
        .with_fiber_free(self.pulled.fiber_free());
        Self {
            cone: self.cone,
            eps: self.eps,
            kind: self.kind,
            pulled: Arc::new(form),
            potential: self.potential.as_ref().map(|u| BundleFunction::zero(u.e).axpy(cre(a), u)),
        }
    }
}

/// `g^H adj(G) g` for a Hermitian 2×2 `G`.
fn adjugate_form<T: Real>(gm: &[[C<T>; 2]; 2], (a, b): (C<T>, C<T>)) -> T {
    let (p, q, r) = (gm[0][0].re, gm[0][1], gm[1][1].re);
    // adj = [[r, -q], [-q̄, p]]
    let v = a.conj() * (a * r - q * b) + b.conj() * (b * p - q.conj() * a);
    v.re.max(T::zero())
}

fn radial_cutoff<T: Real>(x: T) -> (T, T) {
    // 1 for x <= 0.25, 0 for x >= 0.75, in x = |z|²/ε².
    let y = (x - T::lit(0.25)) / T::lit(0.5);
    (T::one() - smooth_step(y), -smooth_step_deriv(y) / T::lit(0.5))
}

fn random_complex<T: Real>(rng: &mut ChaCha8Rng) -> C<T> {
    C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))
}

/// Manufactured, `∂̄`-closed forms with their potentials.
pub fn generate_test_form<T: Real>(cone: ConeModel, eps: T, kind: TestFormKind, seed: u64) -> Result<ConeForm<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cone.ambient_dim();
    let e = cone.degree();
    let mut form = match kind {
        TestFormKind::ExactSmooth => {
            // p(z) = Σ a_j z_j + Σ b_jk z_j z_k
            let a: Vec<C<T>> = (0..n).map(|_| random_complex(&mut rng)).collect();
            let b: Vec<C<T>> = (0..n * n).map(|_| random_complex(&mut rng)).collect();
            let p = move |z: &AmbientPoint<T>| {
                let mut v = czero();
                for j in 0..n {
                    v = v + a[j] * z.coords[j];
                    for k in 0..n {
                        v = v + b[j * n + k] * z.coords[j] * z.coords[k];
                    }
                }
                v
            };
            let p2 = p.clone();
            let eps2 = eps * eps;
            let gauss = move |z: &AmbientPoint<T>| (-T::lit(2.0) * z.norm().powi(2) / eps2).exp();
            let f = move |z: &AmbientPoint<T>| {
                let pv = p(z) * gauss(z) * (-T::lit(2.0) / eps2);
                z.coords.iter().map(|&zj| pv * zj).collect()
            };
            let u = BundleFunction::from_chart_a(e, move |t: C<T>, s: C<T>| {
                let z = blowup_map(&cone, &ChartPoint::new(Chart::A, t, s));
                p2(&z) * gauss(&z)
            });
            ConeForm::from_ambient(cone, eps, f).with_potential(u)
        }
        TestFormKind::ExactSingular => {
            let mut c: Vec<C<T>> = (0..n).map(|_| random_complex(&mut rng)).collect();
            let norm = c.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
            c.iter_mut().for_each(|x| *x = *x / norm);
            let c2 = c.clone();
            let eps2 = eps * eps;
            let f = move |z: &AmbientPoint<T>| {
                let r = z.norm();
                if r == T::zero() {
                    return vec![czero(); n];
                }
                let (chi, dchi) = radial_cutoff(r * r / eps2);
                let cz = c.iter().zip(&z.coords).fold(czero(), |acc, (ci, zi)| acc + *ci * zi.conj());
                let rh = r.powf(T::lit(-0.5));
                let r52 = r.powf(T::lit(-2.5));
                (0..n)
                    .map(|j| {
                        let core = c[j] * rh - cz * z.coords[j] * (r52 / T::lit(4.0));
                        core * chi + cz * rh * z.coords[j] * (dchi / eps2)
                    })
                    .collect()
            };
            let u = BundleFunction::from_chart_a(e, move |t: C<T>, s: C<T>| {
                let z = blowup_map(&cone, &ChartPoint::new(Chart::A, t, s));
                let r = z.norm();
                if r == T::zero() {
                    return czero();
                }
                let cz = c2.iter().zip(&z.coords).fold(czero(), |acc, (ci, zi)| acc + *ci * zi.conj());
                cz * r.powf(T::lit(-0.5)) * radial_cutoff(r * r / eps2).0
            });
            ConeForm::from_ambient(cone, eps, f).with_potential(u)
        }
        TestFormKind::BoundedRandom => {
            let sections: Vec<SmoothSection<T>> = (1..=3)
                .map(|mu| SmoothSection::random(e as i64 * mu, seed.wrapping_mul(31).wrapping_add(mu as u64)))
                .collect::<Result<_>>()?;
            let s2 = sections.clone();
            let form = FnForm::from_chart_a(e, eps, move |t: C<T>, s: C<T>| {
                let f = sections
                    .iter()
                    .zip(1..)
                    .fold(czero(), |acc, (x, mu)| acc + x.dbar(Chart::A, t) * cpowi(s, mu));
                (f, czero())
            })
            .with_fiber_free(true);
            let u = BundleFunction::from_chart_a(e, move |t: C<T>, s: C<T>| {
                s2.iter().zip(1..).fold(czero(), |acc, (x, mu)| acc + x.value(Chart::A, t) * cpowi(s, mu))
            });
            ConeForm::from_bundle(cone, Arc::new(form))?.with_potential(u)
        }
    };
    form.kind = Some(kind);
    Ok(form)
}

/// Tensor quadrature on `D`: Gauss–Legendre in radius, uniform in angle,
/// for the base over the unit disc of each chart and for each fiber disc.
#[derive(Debug, Clone)]
pub struct ConeQuadrature<T: Real> {
    /// `(chart, t, base weight, fiber nodes, fiber weights)`.
    pub cells: Vec<(Chart, C<T>, T, Vec<C<T>>, Vec<T>)>,
}

fn polar_gl<T: Real>(radius: T, n_r: usize, n_theta: usize) -> (Vec<C<T>>, Vec<T>) {
    let (r, w) = gauss_legendre(n_r, T::zero(), radius);
    let dth = T::TAU() / T::from_usize_lossy(n_theta);
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for (ri, wi) in r.iter().zip(&w) {
        for j in 0..n_theta {
            // Stagger alternate rings so nodes do not line up radially.
            let th = dth * (T::from_usize_lossy(j) + T::lit(0.5) * T::from_usize_lossy(nodes.len() / n_theta % 2));
            nodes.push(C::from_polar(*ri, th));
            weights.push(*wi * *ri * dth);
        }
    }
    (nodes, weights)
}

impl<T: Real> ConeQuadrature<T> {
    /// `n_base` radial nodes in the base and `n_fiber` in each fiber, with
    /// four times as many angles.
    pub fn new(e: u32, eps: T, n_base: usize, n_fiber: usize) -> Self {
        let (tn, tw) = polar_gl(T::one(), n_base, 4 * n_base);
        let mut cells = Vec::with_capacity(2 * tn.len());
        for chart in [Chart::A, Chart::B] {
            for (&t, &w) in tn.iter().zip(&tw) {
                let (sn, sw) = polar_gl(fiber_radius(e, eps, t), n_fiber, 4 * n_fiber);
                cells.push((chart, t, w, sn, sw));
            }
        }
        Self { cells }
    }

    /// `∫_D f dA(t) dA(s)` with `f` evaluated one fiber at a time.
    pub fn integrate<F>(&self, f: F) -> T
    where
        F: Fn(Chart, C<T>, &[C<T>]) -> Vec<T> + Sync,
    {
        self.cells
            .par_iter()
            .map(|(chart, t, w, sn, sw)| {
                let v = f(*chart, *t, sn);
                *w * v.iter().zip(sw).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .reduce(T::zero, |a, b| a + b)
    }

    pub fn max<F>(&self, f: F) -> T
    where
        F: Fn(Chart, C<T>, &[C<T>]) -> Vec<T> + Sync,
    {
        self.cells
            .par_iter()
            .map(|(chart, t, _, sn, _)| f(*chart, *t, sn).into_iter().fold(T::zero(), T::max))
            .reduce(T::zero, T::max)
    }
}

/// Which norm [`lp_norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    Sup,
}

/// `L²` or sup norm of a form on `Ω*` in the induced metric.
pub fn lp_norm<T: Real>(form: &ConeForm<T>, norm: Norm, quad: &ConeQuadrature<T>) -> T {
    let eval = |chart: Chart, t: C<T>, ss: &[C<T>], weighted: bool| -> Vec<T> {
        let comps = form.pulled.eval_fiber(chart, t, ss);
        ss.iter()
            .zip(comps)
            .map(|(&s, g)| {
                let p = ChartPoint::new(chart, t, s);
                let gm = gram_matrix(&form.cone, &p);
                let num = adjugate_form(&gm, g);
                if weighted {
                    num
                } else {
                    let det = gm[0][0].re * gm[1][1].re - gm[0][1].norm_sqr();
                    (num / det).sqrt()
                }
            })
            .collect()
    };
    match norm {
        Norm::L2 => quad.integrate(|c, t, ss| eval(c, t, ss, true)).sqrt(),
        Norm::Sup => quad.max(|c, t, ss| eval(c, t, ss, false)),
    }
}

/// `L²` or sup norm of a function on `Ω*`.
pub fn function_norm<T: Real>(cone: &ConeModel, u: &BundleFunction<T>, norm: Norm, quad: &ConeQuadrature<T>) -> T {
    match norm {
        Norm::L2 => quad
            .integrate(|chart, t, ss| {
                u.eval_fiber(chart, t, ss)
                    .iter()
                    .zip(ss)
                    .map(|(v, &s)| v.norm_sqr() * crate::geometry::volume_distortion(cone, &ChartPoint::new(chart, t, s)))
                    .collect()
            })
            .sqrt(),
        Norm::Sup => quad.max(|chart, t, ss| u.eval_fiber(chart, t, ss).iter().map(|v| v.norm()).collect()),
    }
}

/// Range of `‖g‖²_{L²(Π(W))} / ‖s^{k0} Π*g‖²_{L²(W)}` over a family of test
/// functions, `W = {|t| <= region_radius, |s| < ρ(t)}` in chart A. `None`
/// when every test function vanishes.
pub fn norm_transfer_check<T: Real>(
    cone: &ConeModel,
    eps: T,
    region_radius: T,
    family: &[Arc<dyn Fn(&AmbientPoint<T>) -> C<T> + Send + Sync>],
    n: usize,
) -> Option<(T, T)> {
    let (tn, tw) = polar_gl(region_radius, n, 4 * n);
    let k0 = cone.sing_order();
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for g in family {
        let (num, den) = tn
            .par_iter()
            .zip(&tw)
            .map(|(&t, &w)| {
                let (sn, sw) = polar_gl(fiber_radius(cone.degree(), eps, t), n, 4 * n);
                let mut num = T::zero();
                let mut den = T::zero();
                for (&s, &ws) in sn.iter().zip(&sw) {
                    let p = ChartPoint::new(Chart::A, t, s);
                    let v = g(&blowup_map(cone, &p)).norm_sqr();
                    num = num + v * crate::geometry::volume_distortion(cone, &p) * ws;
                    den = den + v * s.norm_sqr().powi(k0 as i32) * ws;
                }
                (num * w, den * w)
            })
            .reduce(|| (T::zero(), T::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
        if den > T::zero() {
            lo = lo.min(num / den);
            hi = hi.max(num / den);
        }
    }
    (hi > T::zero()).then_some((lo, hi))
}

/// Bounds `[c_min, c_max]` that [`norm_transfer_check`] must respect.
pub fn transfer_bounds(cone: &ConeModel, region_radius: f64) -> Result<(f64, f64)> {
    let p = distortion_profile(cone, region_radius)?;
    Ok((p.c_min, p.c_max))
}

/// Knobs shared by the cone pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOptions<T: Real> {
    pub bundle: BundleOptions<T>,
    pub mu_max: i64,
    /// Radial Gauss nodes of the norm quadrature, in base and fiber.
    pub quad_base: usize,
    pub quad_fiber: usize,
    /// Probe points for the difference-quotient residual.
    pub probes: usize,
    /// Radial Gauss nodes per bump in the weak residual.
    pub weak_nodes: usize,
    pub holder_pairs: usize,
    pub holder_alpha: T,
    /// Use the through-apex upper distance bound in Hölder quotients.
    pub holder_upper: bool,
    /// Residual threshold; `50 h²` when `None`.
    pub residual_tol: Option<T>,
    pub seed: u64,
}

impl<T: Real> Default for ConeOptions<T> {
    fn default() -> Self {
        Self {
            bundle: BundleOptions::default(),
            mu_max: 12,
            quad_base: 8,
            quad_fiber: 8,
            probes: 40,
            weak_nodes: 8,
            holder_pairs: 400,
            holder_alpha: T::lit(0.5),
            holder_upper: false,
            residual_tol: None,
            seed: 0,
        }
    }
}

impl<T: Real> ConeOptions<T> {
    pub fn tolerance(&self) -> T {
        self.residual_tol.unwrap_or_else(|| T::lit(50.0) * self.bundle.base_h * self.bundle.base_h)
    }

    pub fn quadrature(&self, e: u32, eps: T) -> ConeQuadrature<T> {
        ConeQuadrature::new(e, eps, self.quad_base, self.quad_fiber)
    }
}

/// Result of [`solve_l2`] or [`solve_bounded`].
#[derive(Debug, Clone)]
pub struct SolutionReport<T: Real> {
    pub eta: BundleFunction<T>,
    pub l2_in: T,
    pub l2_out: T,
    pub sup_in: T,
    pub sup_out: T,
    pub holder_quotient: T,
    /// Difference-quotient residual `max |∂̄η - ω|` over the probes,
    /// relative to `max |ω|` there.
    pub residual: T,
    /// [`weak_dbar_residual`] over [`default_battery`], relative to the
    /// same scale.
    pub weak_residual: T,
    pub tolerance: T,
    /// `‖η‖/‖ω‖` in `L²` (L2 pipeline) or sup norm (bounded pipeline).
    pub constant_estimate: T,
    pub tail_bound: T,
    pub obstruction: ObstructionReport<T>,
    /// `(δ, max_{|z|<δ} |η - η(0)|)`, bounded pipeline only.
    pub oscillation: Vec<(T, T)>,
    pub oscillation_exponent: Option<T>,
}

impl<T: Real> SolutionReport<T> {
    pub fn accepted(&self) -> bool {
        self.obstruction.clean && self.residual <= self.tolerance
    }
}

fn probe_scale<T: Real>(form: &dyn BundleAreaForm<T>, probes: &[(Chart, C<T>, C<T>)]) -> T {
    probes
        .iter()
        .map(|&(c, t, s)| {
            let (f, h) = form.eval(c, t, s);
            f.norm().max(h.norm())
        })
        .fold(T::zero(), T::max)
}

fn relative<T: Real>(r: T, scale: T) -> T {
    if scale > T::zero() {
        r / scale
    } else {
        r
    }
}

/// The `L²` pipeline: pull back, solve with weight `k = -k0`, push down.
pub fn solve_l2<T: Real>(form: &ConeForm<T>, opts: &ConeOptions<T>) -> Result<SolutionReport<T>> {
    let cone = form.cone;
    let k = -cone.sing_order();
    let quad = opts.quadrature(cone.degree(), form.eps);
    let l2_in = lp_norm(form, Norm::L2, &quad);
    if !l2_in.is_finite() {
        return Err(Error::Precondition("form is not in L²".into()));
    }
    // s^{k0} π*ω must be square integrable in the flat chart metric.
    let weighted = quad.integrate(|c, t, ss| {
        form.pulled
            .eval_fiber(c, t, ss)
            .iter()
            .zip(ss)
            .map(|((f, h), s)| (f.norm_sqr() + h.norm_sqr()) * s.norm_sqr())
            .collect()
    });
    if !weighted.is_finite() {
        return Err(Error::Precondition("pullback is not in I^{-k0} L²".into()));
    }
    let sup_in = lp_norm(form, Norm::Sup, &quad);
    let sol = solve_dbar_k(form.pullback(), k, opts.mu_max, &opts.bundle)?;
    finish(form, sol.eta, sol.report, sol.series.tail_bound, sup_in, l2_in, false, opts)
}

/// The bounded pipeline: regularize, solve `ω₁` with weight `k = 1`, glue.
pub fn solve_bounded<T: Real>(form: &ConeForm<T>, opts: &ConeOptions<T>) -> Result<SolutionReport<T>> {
    let cone = form.cone;
    let check = hypothesis_check(Theorem::T14, &CurveSpec::new(0, cone.degree()), cone.sing_order());
    if check.verdict != Verdict::Holds {
        return Err(Error::Precondition(format!("continuous solvability hypothesis {}", check.verdict)));
    }
    let quad = opts.quadrature(cone.degree(), form.eps);
    let sup_in = lp_norm(form, Norm::Sup, &quad);
    if !sup_in.is_finite() {
        return Err(Error::Precondition("form is unbounded".into()));
    }
    let l2_in = lp_norm(form, Norm::L2, &quad);
    let reg = regularize_pullback(form.pullback(), opts.mu_max, &opts.bundle)?;
    let sol = solve_dbar_k(reg.omega1.clone(), 1, opts.mu_max, &opts.bundle)?;
    let eta = reg.u0.axpy(cre(-T::one()), &reg.u1).axpy(cre(T::one()), &sol.eta);
    let tail = reg.series.tail_bound.max(sol.series.tail_bound);
    finish(form, eta, sol.report, tail, sup_in, l2_in, true, opts)
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    form: &ConeForm<T>,
    eta: BundleFunction<T>,
    obstruction: ObstructionReport<T>,
    tail_bound: T,
    sup_in: T,
    l2_in: T,
    bounded: bool,
    opts: &ConeOptions<T>,
) -> Result<SolutionReport<T>> {
    let cone = form.cone;
    let quad = opts.quadrature(cone.degree(), form.eps);
    let pulled = form.pulled.as_ref();
    let probes = bundle_probes(pulled, opts.probes);
    let scale = probe_scale(pulled, &probes);
    let residual = relative(bundle_residual(&eta, pulled, &probes, opts.bundle.fd_step), scale);
    let battery = default_battery(cone.degree(), form.eps);
    let weak_residual = relative(weak_dbar_residual(&eta, pulled, &battery, opts.weak_nodes), scale);
    let l2_out = function_norm(&cone, &eta, Norm::L2, &quad);
    let sup_out = function_norm(&cone, &eta, Norm::Sup, &quad);
    let apex = if bounded { apex_value(&eta) } else { czero() };
    let pairs = sample_pairs(&cone, form.eps, opts.holder_pairs, opts.seed);
    let eval = cone_function(cone, eta.clone(), apex);
    let holder = holder_quotient(&eval, &pairs, opts.holder_alpha, opts.holder_upper);
    let (oscillation, oscillation_exponent) = if bounded {
        let osc = oscillation(&cone, form.eps, &eta, apex);
        let exp = decay_exponent(&osc);
        (osc, exp)
    } else {
        (Vec::new(), None)
    };
    let constant_estimate = if bounded {
        if sup_in > T::zero() {
            sup_out / sup_in
        } else {
            T::zero()
        }
    } else if l2_in > T::zero() {
        l2_out / l2_in
    } else {
        T::zero()
    };
    Ok(SolutionReport {
        eta,
        l2_in,
        l2_out,
        sup_in,
        sup_out,
        holder_quotient: holder,
        residual,
        weak_residual,
        tolerance: opts.tolerance(),
        constant_estimate,
        tail_bound,
        obstruction,
        oscillation,
        oscillation_exponent,
    })
}

/// Mean of `η` over sample points of the exceptional curve.
pub fn apex_value<T: Real>(eta: &BundleFunction<T>) -> C<T> {
    let pts = crate::cauchy::probe_points(T::lit(1.0 / 0.75), 32);
    let sum = pts
        .iter()
        .fold(czero(), |acc, &t| acc + eta.eval(Chart::A, t, czero()) + eta.eval(Chart::B, t, czero()));
    sum / T::lit(64.0)
}

/// `η` as a function on the cone; `apex` is used at `z = 0`.
pub fn cone_function<T: Real>(
    cone: ConeModel,
    eta: BundleFunction<T>,
    apex: C<T>,
) -> impl Fn(&AmbientPoint<T>) -> C<T> + Sync {
    move |z: &AmbientPoint<T>| match inverse_blowup(&cone, z) {
        Ok(p) => eta.eval(p.chart, p.base, p.fiber),
        Err(_) => apex,
    }
}

/// Random point of `Ω` with `|z| <= max_frac · ε`.
fn random_point<T: Real>(cone: &ConeModel, eps: T, max_frac: T, rng: &mut ChaCha8Rng) -> AmbientPoint<T> {
    let chart = if rng.gen_bool(0.5) { Chart::A } else { Chart::B };
    let t = C::from_polar(T::lit(rng.gen_range(0.0f64..1.0).sqrt()), T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
    let frac = max_frac * T::lit(rng.gen_range(0.0f64..1.0).sqrt());
    let s = C::from_polar(frac * fiber_radius(cone.degree(), eps, t), T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
    blowup_map(cone, &ChartPoint::new(chart, t, s))
}

/// Seeded pairs for Hölder quotients: a quarter uniform, a quarter radial
/// `(z, λz)`, a quarter straddling the apex `(z, -λz)`, a quarter `(z, 0)`.
pub fn sample_pairs<T: Real>(cone: &ConeModel, eps: T, n: usize, seed: u64) -> Vec<(AmbientPoint<T>, AmbientPoint<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let apex = AmbientPoint { coords: vec![czero(); cone.ambient_dim()] };
    (0..n)
        .map(|i| {
            let z = random_point(cone, eps, T::lit(0.95), &mut rng);
            let lam = T::lit(rng.gen_range(0.01..1.0));
            match i % 4 {
                0 => (z, random_point(cone, eps, T::lit(0.95), &mut rng)),
                1 => {
                    let w = z.scale(lam);
                    (z, w)
                }
                2 => {
                    let w = z.scale(-lam);
                    (z, w)
                }
                _ => (z, apex.clone()),
            }
        })
        .collect()
}

/// `max |η(z) - η(w)| / d(z, w)^α` with `d` the lower (or upper) bound of
/// the intrinsic distance.
pub fn holder_quotient<T: Real, F>(eta: &F, pairs: &[(AmbientPoint<T>, AmbientPoint<T>)], alpha: T, upper: bool) -> T
where
    F: Fn(&AmbientPoint<T>) -> C<T> + Sync,
{
    pairs
        .par_iter()
        .map(|(z, w)| {
            let (lo, hi) = distance_bounds(z, w);
            let d = if upper { hi } else { lo };
            if d == T::zero() {
                return T::zero();
            }
            (eta(z) - eta(w)).norm() / d.powf(alpha)
        })
        .reduce(T::zero, T::max)
}

/// `max |η - apex|` over sample points with `|z| < δ`, for `δ/ε = 1/2, 1/4, 1/8, 1/16`.
pub fn oscillation<T: Real>(cone: &ConeModel, eps: T, eta: &BundleFunction<T>, apex: C<T>) -> Vec<(T, T)> {
    let base = crate::cauchy::probe_points(T::lit(1.0 / 0.75), 24);
    (1..=4)
        .map(|i| {
            let frac = T::lit(0.5f64.powi(i));
            let delta = frac * eps;
            let mut worst = T::zero();
            for &t in &base {
                for chart in [Chart::A, Chart::B] {
                    // |z| = |s| sqrt(Σ|t|^{2j}) = (|s|/ρ) ε, so |s| < frac ρ.
                    let rho = fiber_radius(cone.degree(), eps, t);
                    let ss: Vec<C<T>> = (0..6)
                        .map(|j| C::from_polar(frac * rho * T::lit(0.2 + 0.15 * j as f64), T::lit(1.3 * j as f64)))
                        .collect();
                    for v in eta.eval_fiber(chart, t, &ss) {
                        worst = worst.max((v - apex).norm());
                    }
                }
            }
            (delta, worst)
        })
        .collect()
}

/// Least-squares slope of `log osc` against `log δ`.
pub fn decay_exponent<T: Real>(osc: &[(T, T)]) -> Option<T> {
    let pts: Vec<(f64, f64)> = osc
        .iter()
        .filter(|(d, o)| *d > T::zero() && *o > T::zero())
        .map(|(d, o)| (d.to_f64_lossy().ln(), o.to_f64_lossy().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(T::lit(sxy / sxx))
}

/// Product bump `φ(t, s) = b_t(t) b_s(s)` in one chart of `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestBump<T: Real> {
    pub chart: Chart,
    pub base: PolyBump<T>,
    pub fiber: PolyBump<T>,
}

/// Twenty-four bumps: supports crossing the exceptional curve, the seam
/// `|t| = 1`, and interior ones, in both charts.
pub fn default_battery<T: Real>(e: u32, eps: T) -> Vec<TestBump<T>> {
    let mut out = Vec::new();
    let rt = T::lit(0.3);
    for chart in [Chart::A, Chart::B] {
        for i in 0..12 {
            let ang = T::lit(0.9 * i as f64 + if chart == Chart::B { 0.4 } else { 0.0 });
            let r = match i % 3 {
                0 => T::lit(0.2),
                1 => T::lit(0.55),
                _ => T::one(),
            };
            let tc = C::from_polar(r, ang);
            // Smallest fiber radius over the base support.
            let rho = fiber_radius(e, eps, C::new(r + rt, T::zero()));
            let fiber = if i % 2 == 0 {
                PolyBump { center: czero(), radius: T::lit(0.6) * rho }
            } else {
                let c = C::from_polar(T::lit(0.35) * rho, ang * T::lit(2.0));
                PolyBump { center: c, radius: T::lit(0.4) * rho }
            };
            out.push(TestBump { chart, base: PolyBump { center: tc, radius: rt }, fiber });
        }
    }
    out
}

/// `max_φ (|∫ f ∂φ/∂t̄ + ∫ F φ| + |∫ f ∂φ/∂s̄ + ∫ H φ|) / ∫|φ|` in chart
/// measure, with `(F, H)` the components of `g`: zero exactly when
/// `∂̄f = g` weakly on the supports.
pub fn weak_dbar_residual<T: Real>(
    f: &BundleFunction<T>,
    g: &dyn BundleAreaForm<T>,
    battery: &[TestBump<T>],
    n: usize,
) -> T {
    battery
        .iter()
        .map(|b| {
            let (tn, tw) = polar_gl(b.base.radius, n, 4 * n);
            let (sn, sw) = polar_gl(b.fiber.radius, n, 4 * n);
            let ss: Vec<C<T>> = sn.iter().map(|&s| s + b.fiber.center).collect();
            let (r1, r2, mass) = tn
                .par_iter()
                .zip(&tw)
                .map(|(&dt, &wt)| {
                    let t = dt + b.base.center;
                    let fv = f.eval_fiber(b.chart, t, &ss);
                    let gv = g.eval_fiber(b.chart, t, &ss);
                    let (bt, dbt) = (b.base.value(t), b.base.dbar(t));
                    let mut acc = (czero::<T>(), czero::<T>(), T::zero());
                    for q in 0..ss.len() {
                        let s = ss[q];
                        let (bs, dbs) = (b.fiber.value(s), b.fiber.dbar(s));
                        let w = wt * sw[q];
                        let phi = bt * bs;
                        acc.0 = acc.0 + (fv[q] * dbt * bs + gv[q].0 * phi) * w;
                        acc.1 = acc.1 + (fv[q] * dbs * bt + gv[q].1 * phi) * w;
                        acc.2 = acc.2 + phi.abs() * w;
                    }
                    acc
                })
                .reduce(|| (czero(), czero(), T::zero()), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
            if mass > T::zero() {
                (r1.norm() + r2.norm()) / mass
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max)
}

/// The same test on `CP^1` for a section `f` and form `g` given chartwise,
/// with disc bumps.
pub fn weak_dbar_residual_cp1<T: Real, F, G>(f: F, g: G, battery: &[(Chart, PolyBump<T>)], n: usize) -> T
where
    F: Fn(Chart, C<T>) -> C<T> + Sync,
    G: Fn(Chart, C<T>) -> C<T> + Sync,
{
    battery
        .iter()
        .map(|(chart, b)| {
            let (tn, tw) = polar_gl(b.radius, n, 4 * n);
            let (r, mass) = tn
                .par_iter()
                .zip(&tw)
                .map(|(&d, &w)| {
                    let t = d + b.center;
                    ((f(*chart, t) * b.dbar(t) + g(*chart, t) * b.value(t)) * w, b.value(t) * w)
                })
                .reduce(|| (czero(), T::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
            if mass > T::zero() {
                r.norm() / mass
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max)
}

/// Largest remainder of `diff` after subtracting its least-squares fit by
/// holomorphic functions on the cone of degree `<= max_mu` in `z`
/// (`s^μ t^j`, `0 <= j <= eμ`, in chart A), over sample points with
/// `|z| <= 0.8 ε`. Returns `(remainder, max |diff|)`.
pub fn holomorphic_remainder(e: u32, eps: f64, diff: &BundleFunction<f64>, max_mu: u32) -> (f64, f64) {
    use nalgebra::{DMatrix, DVector};
    let basis: Vec<(i32, i32)> =
        (0..=max_mu as i32).flat_map(|mu| (0..=e as i32 * mu).map(move |j| (mu, j))).collect();
    let mut pts = Vec::new();
    for t in crate::cauchy::probe_points(1.0 / 0.75, 40) {
        for chart in [Chart::A, Chart::B] {
            let rho = fiber_radius(e, eps, t);
            for q in 0..6 {
                pts.push((chart, t, C::from_polar(rho * (0.1 + 0.13 * q as f64), 0.7 + 1.9 * q as f64)));
            }
        }
    }
    let rows = pts.len();
    let mut a = DMatrix::<C<f64>>::zeros(rows, basis.len());
    let mut b = DVector::<C<f64>>::zeros(rows);
    for (i, &(chart, t, s)) in pts.iter().enumerate() {
        for (k, &(mu, j)) in basis.iter().enumerate() {
            let m = e as i32 * mu;
            a[(i, k)] = match chart {
                Chart::A => s.powi(mu) * t.powi(j),
                Chart::B => s.powi(mu) * t.powi(m - j),
            };
        }
        b[i] = diff.eval(chart, t, s);
    }
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let svd = a.clone().svd(true, true);
    let x = match svd.solve(&b, 1e-12) {
        Ok(x) => x,
        Err(_) => return (f64::NAN, scale),
    };
    let r = &b - &a * x;
    (r.iter().map(|z| z.norm()).fold(0.0, f64::max), scale)
}

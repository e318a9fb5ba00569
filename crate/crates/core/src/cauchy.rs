//! Polar grids, chart fields and the Cauchy transform on a disc.
//!
//! `I g(a) = (1/pi) ∫ g(t) / (a - t) dA(t)` over the disc `|t| < R`, so that
//! `∂̄ I g = g` inside and `I g(a) -> 0` as `|a| -> ∞`.
//!
//! The transform is computed mode by mode: an FFT in the angle gives
//! `g(ρ e^{iθ}) = Σ_m g_m(ρ) e^{imθ}`, and the kernel expansion reduces the
//! area integral to one radial integral per output mode `n = m - 1`:
//!
//! ```text
//! n >= 0:  u_n(r) = -2 ∫_r^R (r/ρ)^n      g_{n+1}(ρ) dρ
//! n <  0:  u_n(r) =  2 ∫_0^r (ρ/r)^{|n|}  g_{n+1}(ρ) dρ
//! ```
//!
//! Each `g_m` is interpolated by local cubics through the ring samples
//! (reflected through the origin using `g_m(-ρ) = (-1)^m g_m(ρ)`) and every
//! cell, including the partial cells cut by `r`, is integrated with 6-point
//! Gauss–Legendre. The kernel singularity never enters a quadrature rule.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{signed_mode, Fourier};
use crate::scalar::{cpowi, czero, Real, C};

/// Polar midpoint grid on `|t| < R = n_r * h`.
///
/// Ring `i` sits at `r_i = (i + 1/2) h`, angle `j` at `θ_j = 2 pi j / n_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGrid<T: Real> {
    h: T,
    n_r: usize,
    n_theta: usize,
}

impl<T: Real> DiscGrid<T> {
    pub fn new(radius: T, n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r == 0 || n_theta == 0 {
            return Err(Error::InvalidInput("empty disc grid".into()));
        }
        if n_theta % 2 != 0 {
            return Err(Error::InvalidInput(format!("n_theta must be even, got {n_theta}")));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput("disc radius must be positive".into()));
        }
        Ok(Self { h: radius / T::from_usize_lossy(n_r), n_r, n_theta })
    }

    /// Grid with ring spacing `h` reaching just past `radius`.
    ///
    /// `n_θ` is the smallest even number `>= 4 n_r`.
    pub fn covering(radius: T, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        let n_r = (radius / h - T::lit(1e-9)).ceil().to_f64_lossy().max(1.0) as usize;
        let n_theta = (4 * n_r).div_ceil(2) * 2;
        Self::new(h * T::from_usize_lossy(n_r), n_r, n_theta)
    }

    /// Chart disc of radius a little over 1.05, spacing `h`.
    pub fn chart(h: T) -> Result<Self> {
        Self::covering(T::lit(1.05), h)
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn radius(&self) -> T {
        self.h * T::from_usize_lossy(self.n_r)
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ring_radius(&self, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.h
    }

    pub fn angle(&self, j: usize) -> T {
        T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(self.n_theta)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    pub fn node(&self, i: usize, j: usize) -> C<T> {
        C::from_polar(self.ring_radius(i), self.angle(j))
    }

    /// All nodes in storage order (ring-major).
    pub fn nodes(&self) -> Vec<C<T>> {
        (0..self.n_r)
            .flat_map(|i| (0..self.n_theta).map(move |j| (i, j)))
            .map(|(i, j)| self.node(i, j))
            .collect()
    }

    /// Area weight of every node on ring `i`.
    pub fn weight(&self, i: usize) -> T {
        self.ring_radius(i) * self.h * T::TAU() / T::from_usize_lossy(self.n_theta)
    }

    pub fn area(&self) -> T {
        T::PI() * self.radius() * self.radius()
    }

    /// Number of rings whose cells lie inside `|t| <= cut`.
    pub fn rings_within(&self, cut: T) -> usize {
        let k = (cut / self.h + T::lit(1e-9)).floor().to_f64_lossy();
        (k.max(0.0) as usize).min(self.n_r)
    }

    /// Same disc with half the spacing.
    pub fn refined(&self) -> Self {
        Self { h: self.h / T::lit(2.0), n_r: 2 * self.n_r, n_theta: 2 * self.n_theta }
    }
}

/// Complex samples on a [`DiscGrid`], ring-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartField<T: Real> {
    pub grid: DiscGrid<T>,
    pub values: Vec<C<T>>,
}

impl<T: Real> ChartField<T> {
    pub fn new(grid: DiscGrid<T>, values: Vec<C<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} samples, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: DiscGrid<T>) -> Self {
        Self { grid, values: vec![czero(); grid.len()] }
    }

    pub fn from_fn<F>(grid: DiscGrid<T>, f: F) -> Self
    where
        F: Fn(C<T>) -> C<T> + Sync,
    {
        let values = grid.nodes().par_iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> C<T> {
        self.values[self.grid.index(i, j)]
    }

    pub fn ring(&self, i: usize) -> &[C<T>] {
        let n = self.grid.n_theta;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Midpoint-rule integral over the disc.
    pub fn integral(&self) -> C<T> {
        let mut s = czero();
        for i in 0..self.grid.n_r {
            let w = self.grid.weight(i);
            let ring = self.ring(i).iter().fold(czero::<T>(), |a, &b| a + b);
            s = s + ring * w;
        }
        s
    }

    /// `(∫ |f|^p dA)^(1/p)` by the midpoint rule.
    pub fn lp_norm(&self, p: T) -> T {
        let mut s = T::zero();
        for i in 0..self.grid.n_r {
            let w = self.grid.weight(i);
            s = s + self.ring(i).iter().fold(T::zero(), |a, v| a + v.norm().powf(p)) * w;
        }
        s.powf(p.recip())
    }

    pub fn map<F: Fn(C<T>, C<T>) -> C<T> + Sync>(&self, f: F) -> Self {
        let nodes = self.grid.nodes();
        let values = nodes.par_iter().zip(self.values.par_iter()).map(|(&t, &v)| f(t, v)).collect();
        Self { grid: self.grid, values }
    }

    pub fn scaled(&self, a: C<T>) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| v * a).collect() }
    }

    /// `self + a * other`; grids must match.
    pub fn axpy(&self, a: C<T>, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| x + y * a).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Bilinear interpolation in `(r, θ)`; radially clamped to the ring range.
    pub fn interp(&self, w: C<T>) -> C<T> {
        let g = &self.grid;
        let x = (w.norm() / g.h - T::lit(0.5))
            .max(T::zero())
            .min(T::from_usize_lossy(g.n_r - 1));
        let i0 = x.floor().to_f64_lossy() as usize;
        let i1 = (i0 + 1).min(g.n_r - 1);
        let fr = x - T::from_usize_lossy(i0);
        let mut th = w.arg() / T::TAU() * T::from_usize_lossy(g.n_theta);
        if th < T::zero() {
            th = th + T::from_usize_lossy(g.n_theta);
        }
        let j0 = (th.floor().to_f64_lossy() as usize) % g.n_theta;
        let j1 = (j0 + 1) % g.n_theta;
        let ft = th - th.floor();
        let one = T::one();
        let lo = self.at(i0, j0) * (one - ft) + self.at(i0, j1) * ft;
        let hi = self.at(i1, j0) * (one - ft) + self.at(i1, j1) * ft;
        lo * (one - fr) + hi * fr
    }

    pub fn max_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

const GL_POINTS: usize = 6;

#[derive(Debug, Clone)]
struct Mode<T: Real> {
    /// Input mode `m`; the output mode is `m - 1`.
    m: i64,
    /// `g_m` at the ring radii.
    ring: Vec<C<T>>,
    /// `n < 0`: `∫_0^{ρ_k} (ρ/ρ_k)^{|n|} g_m dρ`; `n >= 0`: `∫_{ρ_k}^R (ρ_k/ρ)^n g_m dρ`.
    cum: Vec<C<T>>,
}

/// Gauss nodes on a subinterval with the cubic interpolation weights of one
/// 4-ring stencil at each node.
struct CellRule<T: Real> {
    nodes: [T; GL_POINTS],
    weights: [T; GL_POINTS],
    lagrange: [[T; 4]; GL_POINTS],
    start: isize,
}

/// Cauchy transform of one [`ChartField`], evaluable anywhere in `C`.
#[derive(Debug, Clone)]
pub struct CauchyTransform<T: Real> {
    h: T,
    rings: usize,
    /// `0, r_0, …, r_{N-1}, R`.
    knots: Vec<T>,
    cut: T,
    gl_x: [T; GL_POINTS],
    gl_w: [T; GL_POINTS],
    /// Sorted by input mode.
    modes: Vec<Mode<T>>,
}

impl<T: Real> CauchyTransform<T> {
    /// Transform over the whole grid disc.
    pub fn new(g: &ChartField<T>) -> Result<Self> {
        Self::truncated(g, g.grid.n_r)
    }

    /// Transform of `g` restricted to the first `rings` rings, i.e. to
    /// `|t| < rings * h`.
    pub fn truncated(g: &ChartField<T>, rings: usize) -> Result<Self> {
        let grid = g.grid;
        if grid.is_empty() || rings < 4 || rings > grid.n_r {
            return Err(Error::InvalidInput(format!(
                "cannot integrate {rings} of {} rings (need at least 4)",
                grid.n_r
            )));
        }
        let n_theta = grid.n_theta;
        let fourier = Fourier::new(n_theta);
        let ring_modes: Vec<Vec<C<T>>> =
            (0..rings).into_par_iter().map(|i| fourier.coefficients(g.ring(i))).collect();

        let cut = grid.h * T::from_usize_lossy(rings);
        let mut knots = Vec::with_capacity(rings + 2);
        knots.push(T::zero());
        knots.extend((0..rings).map(|i| grid.ring_radius(i)));
        knots.push(cut);

        let (x, w) = crate::quadrature::gauss_legendre::<T>(GL_POINTS, T::zero(), T::one());
        let mut gl_x = [T::zero(); GL_POINTS];
        let mut gl_w = [T::zero(); GL_POINTS];
        gl_x.copy_from_slice(&x);
        gl_w.copy_from_slice(&w);

        let mut tr = Self { h: grid.h, rings, knots, cut, gl_x, gl_w, modes: Vec::new() };
        // modes at roundoff level carry no information; skipping them keeps
        // evaluation cheap for smooth data
        let peak = ring_modes.iter().flatten().fold(T::zero(), |a, c| a.max(c.norm()));
        let floor = peak * T::lit(1e-15);
        let mut order: Vec<usize> = (0..n_theta)
            .filter(|&idx| ring_modes.iter().any(|c| c[idx].norm() > floor))
            .collect();
        order.sort_by_key(|&idx| signed_mode(idx, n_theta));
        let modes = order
            .into_par_iter()
            .map(|idx| {
                let m = signed_mode(idx, n_theta);
                let ring = ring_modes.iter().map(|c| c[idx]).collect();
                tr.build_mode(m, ring)
            })
            .collect();
        tr.modes = modes;
        Ok(tr)
    }

    fn ring_radius(&self, j: isize) -> T {
        (T::from_i64_lossy(j as i64) + T::lit(0.5)) * self.h
    }

    /// Stencil of four rings for the cell `[knots[k], knots[k+1]]`.
    fn stencil_start(&self, k: usize) -> isize {
        // cell k lies between rings k-1 and k
        let s = k as isize - 2;
        s.min(self.rings as isize - 4)
    }

    fn rule(&self, k: usize, lo: T, hi: T) -> CellRule<T> {
        let start = self.stencil_start(k);
        let pts: [T; 4] = std::array::from_fn(|s| self.ring_radius(start + s as isize));
        let len = hi - lo;
        let mut nodes = [T::zero(); GL_POINTS];
        let mut weights = [T::zero(); GL_POINTS];
        let mut lagrange = [[T::zero(); 4]; GL_POINTS];
        for q in 0..GL_POINTS {
            let x = lo + len * self.gl_x[q];
            nodes[q] = x;
            weights[q] = len * self.gl_w[q];
            for s in 0..4 {
                let mut l = T::one();
                for t in 0..4 {
                    if t != s {
                        l = l * (x - pts[t]) / (pts[s] - pts[t]);
                    }
                }
                lagrange[q][s] = l;
            }
        }
        CellRule { nodes, weights, lagrange, start }
    }

    fn sample(m: i64, ring: &[C<T>], j: isize) -> C<T> {
        if j >= 0 {
            ring[j as usize]
        } else {
            // reflection through the origin: ring -1-j at angle + pi
            let v = ring[(-1 - j) as usize];
            if m.rem_euclid(2) == 0 {
                v
            } else {
                -v
            }
        }
    }

    fn values_at(rule: &CellRule<T>, m: i64, ring: &[C<T>]) -> [C<T>; GL_POINTS] {
        let st: [C<T>; 4] = std::array::from_fn(|s| Self::sample(m, ring, rule.start + s as isize));
        std::array::from_fn(|q| {
            (0..4).fold(czero(), |acc, s| acc + st[s] * rule.lagrange[q][s])
        })
    }

    /// `∫ (ρ/c)^p g dρ` over the rule's interval.
    fn weighted(rule: &CellRule<T>, vals: &[C<T>; GL_POINTS], p: i64, c: T) -> C<T> {
        (0..GL_POINTS).fold(czero(), |acc, q| {
            acc + vals[q] * (rule.weights[q] * crate::scalar::rpowi(rule.nodes[q] / c, p))
        })
    }

    fn build_mode(&self, m: i64, ring: Vec<C<T>>) -> Mode<T> {
        let n = m - 1;
        let nk = self.knots.len();
        let mut cum = vec![czero(); nk];
        if n < 0 {
            let p = -n;
            for k in 0..nk - 1 {
                let (a, b) = (self.knots[k], self.knots[k + 1]);
                let rule = self.rule(k, a, b);
                let vals = Self::values_at(&rule, m, &ring);
                cum[k + 1] = cum[k] * crate::scalar::rpowi(a / b, p) + Self::weighted(&rule, &vals, p, b);
            }
        } else {
            let first = if n == 0 { 0 } else { 1 };
            for k in (first..nk - 1).rev() {
                let (a, b) = (self.knots[k], self.knots[k + 1]);
                let rule = self.rule(k, a, b);
                let vals = Self::values_at(&rule, m, &ring);
                let cell = if n == 0 {
                    Self::weighted(&rule, &vals, 0, T::one())
                } else {
                    Self::weighted(&rule, &vals, -n, a)
                };
                cum[k] = cell + cum[k + 1] * crate::scalar::rpowi(a / b, n);
            }
        }
        Mode { m, ring, cum }
    }

    /// Radius of the integration disc.
    pub fn cut(&self) -> T {
        self.cut
    }

    pub fn eval(&self, a: C<T>) -> C<T> {
        let r = a.norm();
        let two = T::lit(2.0);
        if r == T::zero() {
            return self
                .modes
                .iter()
                .find(|md| md.m == 1)
                .map(|md| md.cum[0] * (-two))
                .unwrap_or_else(czero);
        }
        let e1 = a / r;
        let last = self.knots.len() - 1;
        if r >= self.cut {
            let mut s = czero();
            for md in self.modes.iter().filter(|md| md.m <= 0) {
                let n = md.m - 1;
                let radial = md.cum[last] * (two * crate::scalar::rpowi(self.cut / r, -n));
                s = s + radial * cpowi(e1, n);
            }
            return s;
        }
        // knots[k] <= r < knots[k + 1]
        let k = match self.knots.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(last - 1),
            Err(k) => k - 1,
        };
        let (ka, kb) = (self.knots[k], self.knots[k + 1]);
        let inner = self.rule(k, ka, r);
        let outer = self.rule(k, r, kb);
        let mut s = czero();
        for md in &self.modes {
            let n = md.m - 1;
            let radial = if n < 0 {
                let p = -n;
                let vals = Self::values_at(&inner, md.m, &md.ring);
                (md.cum[k] * crate::scalar::rpowi(ka / r, p) + Self::weighted(&inner, &vals, p, r)) * two
            } else {
                let vals = Self::values_at(&outer, md.m, &md.ring);
                let part = Self::weighted(&outer, &vals, -n, r);
                (part + md.cum[k + 1] * crate::scalar::rpowi(r / kb, n)) * (-two)
            };
            s = s + radial * cpowi(e1, n);
        }
        s
    }

    pub fn eval_many(&self, points: &[C<T>]) -> Vec<C<T>> {
        points.par_iter().map(|&a| self.eval(a)).collect()
    }

    pub fn on_grid(&self, grid: DiscGrid<T>) -> ChartField<T> {
        ChartField::from_fn(grid, |a| self.eval(a))
    }

    /// `Σ_{k >= skip} far_field(k) t^{k+1+shift}`, i.e. `t^shift I g(1/t)`
    /// with the first `skip` far-field terms removed. Needs `|t| cut <= 1`
    /// and `skip + 1 + shift >= 0` when `t = 0`.
    pub fn far_series(&self, t: C<T>, skip: usize, shift: i64) -> C<T> {
        let last = self.knots.len() - 1;
        let mut s = czero();
        for md in self.modes.iter().filter(|md| md.m <= -(skip as i64)) {
            let k = -md.m;
            s = s + md.cum[last] * cpowi(t, k + 1 + shift) * crate::scalar::rpowi(self.cut, k + 1);
        }
        s * T::lit(2.0)
    }

    /// `(1/pi) ∫ g t^k dA`, the coefficient of `a^{-k-1}` in `I g(a)` for
    /// `|a| >= R`. Zero for `k` beyond the angular resolution.
    pub fn far_field(&self, k: usize) -> C<T> {
        let m = -(k as i64);
        let last = self.knots.len() - 1;
        self.modes
            .iter()
            .find(|md| md.m == m)
            .map(|md| md.cum[last] * (T::lit(2.0) * crate::scalar::rpowi(self.cut, k as i64 + 1)))
            .unwrap_or_else(czero)
    }
}

/// Transform `g` over its full grid and evaluate at `points`.
pub fn cauchy_transform<T: Real>(g: &ChartField<T>, points: &[C<T>]) -> Result<Vec<C<T>>> {
    Ok(CauchyTransform::new(g)?.eval_many(points))
}

/// Central-difference `∂̄f = (f_x + i f_y) / 2` with step `h`.
pub fn dbar_fd<T: Real, F: Fn(C<T>) -> C<T>>(f: F, a: C<T>, h: T) -> C<T> {
    let two_h = T::lit(2.0) * h;
    let fx = (f(a + C::new(h, T::zero())) - f(a - C::new(h, T::zero()))) / two_h;
    let fy = (f(a + C::new(T::zero(), h)) - f(a - C::new(T::zero(), h))) / two_h;
    (fx + C::new(T::zero(), T::one()) * fy) / T::lit(2.0)
}

/// Fourth-order central-difference `∂̄f` with step `h`.
pub fn dbar_fd4<T: Real, F: Fn(C<T>) -> C<T>>(f: F, a: C<T>, h: T) -> C<T> {
    let d = |e: C<T>| {
        (f(a - e * T::lit(2.0)) - f(a - e) * T::lit(8.0) + f(a + e) * T::lit(8.0) - f(a + e * T::lit(2.0)))
            / (T::lit(12.0) * h)
    };
    let fx = d(C::new(h, T::zero()));
    let fy = d(C::new(T::zero(), h));
    (fx + C::new(T::zero(), T::one()) * fy) / T::lit(2.0)
}

/// Central-difference `∂f = (f_x - i f_y) / 2` with step `h`.
pub fn d_fd<T: Real, F: Fn(C<T>) -> C<T>>(f: F, a: C<T>, h: T) -> C<T> {
    let two_h = T::lit(2.0) * h;
    let fx = (f(a + C::new(h, T::zero())) - f(a - C::new(h, T::zero()))) / two_h;
    let fy = (f(a + C::new(T::zero(), h)) - f(a - C::new(T::zero(), h))) / two_h;
    (fx - C::new(T::zero(), T::one()) * fy) / T::lit(2.0)
}

/// Fixed residual probe points: a spiral through `|a| <= 0.75 * radius`.
pub fn probe_points<T: Real>(radius: T, count: usize) -> Vec<C<T>> {
    (0..count)
        .map(|j| {
            let s = (T::from_usize_lossy(j) + T::lit(0.5)) / T::from_usize_lossy(count);
            let r = radius * T::lit(0.75) * s.sqrt();
            C::from_polar(r, T::lit(2.399_963_229_728_653) * T::from_usize_lossy(j))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(h: f64) -> DiscGrid<f64> {
        DiscGrid::covering(1.0, h).unwrap()
    }

    fn max_residual(g: &ChartField<f64>, f: impl Fn(C<f64>) -> C<f64>) -> f64 {
        let tr = CauchyTransform::new(g).unwrap();
        let h = g.grid.h();
        probe_points(g.grid.radius(), 40)
            .into_iter()
            .map(|a| (dbar_fd(|z| tr.eval(z), a, h) - f(a)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn weights_sum_to_area() {
        for &(r, nr, nt) in &[(1.0, 10, 40), (1.05, 67, 268), (0.3, 3, 8)] {
            let g = DiscGrid::<f64>::new(r, nr, nt).unwrap();
            let s: f64 = (0..nr).map(|i| g.weight(i) * nt as f64).sum();
            assert!((s - g.area()).abs() < 1e-10 * g.area());
        }
        assert!(DiscGrid::<f64>::new(1.0, 0, 8).is_err());
        assert!(DiscGrid::<f64>::new(1.0, 4, 7).is_err());
    }

    #[test]
    fn interpolation_is_second_order() {
        let f = |t: C<f64>| (t * 0.8).exp();
        let err = |n: f64| {
            let field = ChartField::from_fn(unit(1.0 / n), f);
            probe_points(1.0, 200)
                .into_iter()
                .map(|w| (field.interp(w) - f(w)).norm())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16.0), err(32.0));
        assert!(e2 < 2e-3 && e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = ChartField::zeros(unit(1.0 / 16.0));
        let tr = CauchyTransform::new(&g).unwrap();
        for a in [C::new(0.0, 0.0), C::new(0.3, 0.2), C::new(4.0, -1.0)] {
            assert_eq!(tr.eval(a), C::new(0.0, 0.0));
        }
    }

    #[test]
    fn constant_gives_conjugate() {
        let g = ChartField::from_fn(unit(1.0 / 64.0), |_| C::new(1.0, 0.0));
        let tr = CauchyTransform::new(&g).unwrap();
        for a in [C::new(0.0, 0.0), C::new(0.2, -0.5), C::new(0.7, 0.7), g.grid.node(3, 5)] {
            assert!((tr.eval(a) - a.conj()).norm() < 1e-12, "{a}");
        }
        // outside: R^2 / a, decaying
        let a = C::new(3.0, 4.0);
        assert!((tr.eval(a) - 1.0 / a).norm() < 1e-12);
        assert!((tr.far_field(0) - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!(max_residual(&g, |_| C::new(1.0, 0.0)) < 1e-3);
    }

    #[test]
    fn linear_density() {
        let g = ChartField::from_fn(unit(1.0 / 64.0), |t| t);
        assert!(max_residual(&g, |a| a) < 1e-3);
        let tr = CauchyTransform::new(&g).unwrap();
        // I t = |a|^2 - 1 inside the unit disc
        let a = C::new(0.4, 0.1);
        assert!((tr.eval(a) - C::new(a.norm_sqr() - 1.0, 0.0)).norm() < 1e-12);
        assert!(tr.eval(C::new(1e6, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn smooth_density_converges_second_order() {
        let f = |t: C<f64>| (t * C::new(0.7, 0.3)).exp() * (1.0 + t.conj() * t.conj());
        let res: Vec<f64> = [16.0, 32.0, 64.0]
            .iter()
            .map(|n| {
                let g = ChartField::from_fn(unit(1.0 / n), f);
                max_residual(&g, f)
            })
            .collect();
        let order = (res[0] / res[2]).log2() / 2.0;
        assert!(order >= 1.8, "residuals {res:?}");
    }

    #[test]
    fn far_field_matches_moments() {
        let g = ChartField::from_fn(unit(1.0 / 32.0), |t| C::new(1.0, 0.0) + t.conj());
        let tr = CauchyTransform::new(&g).unwrap();
        // (1/pi) ∫ t̄ t dA = 1/2 over the unit disc
        assert!((tr.far_field(1) - C::new(0.5, 0.0)).norm() < 1e-12);
        let t = C::new(0.3, -0.2);
        let direct = tr.eval(t.inv()) * t;
        assert!((tr.far_series(t, 0, 1) - direct).norm() < 1e-12);
        assert!((tr.far_series(t, 1, 1) - direct + tr.far_field(0) * t * t).norm() < 1e-12);
        let a = C::new(2.0, 1.0);
        let series = tr.far_field(0) / a + tr.far_field(1) / (a * a);
        assert!((tr.eval(a) - series).norm() < 1e-12);
    }

    #[test]
    fn moments_are_high_order() {
        // (1/pi) ∫ exp(|t|^2) dA = e - 1 over the unit disc
        let err: Vec<f64> = [8.0, 16.0]
            .iter()
            .map(|n| {
                let g = ChartField::from_fn(unit(1.0 / n), |t| C::new(t.norm_sqr().exp(), 0.0));
                let tr = CauchyTransform::new(&g).unwrap();
                (tr.far_field(0) - C::new(std::f64::consts::E - 1.0, 0.0)).norm()
            })
            .collect();
        assert!(err[1] < 1e-4 && err[0] / err[1] > 12.0, "{err:?}");
    }

    #[test]
    fn truncation_and_f32() {
        let grid = DiscGrid::<f32>::chart(1.0 / 32.0).unwrap();
        let rings = grid.rings_within(1.0);
        assert_eq!(rings, 32);
        let g = ChartField::from_fn(grid, |_| C::new(1.0f32, 0.0));
        let tr = CauchyTransform::truncated(&g, rings).unwrap();
        let a = C::new(0.3f32, 0.4);
        assert!((tr.eval(a) - a.conj()).norm() < 1e-4);
        assert!((tr.eval(C::new(1.02f32, 0.0)) - C::new(1.0 / 1.02, 0.0)).norm() < 1e-4);
    }
}

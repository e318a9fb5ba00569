//! Quadrature rules, FFT helpers and smooth cutoffs.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::scalar::{czero, Real, C};

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = (b - a) / T::lit(2.0);
    let mid = (b + a) / T::lit(2.0);
    // Newton on P_n in f64, then convert.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * T::lit(x);
        nodes[n - 1 - i] = mid + half * T::lit(x);
        weights[i] = half * T::lit(w);
        weights[n - 1 - i] = half * T::lit(w);
    }
    (nodes, weights)
}

/// Forward DFT normalized so that `samples[j] = sum_m coeff[m] e^{2 pi i m j / n}`;
/// `coeff` is indexed by `m mod n`.
pub struct Fourier<T: Real> {
    fft: Arc<dyn Fft<T>>,
    n: usize,
}

impl<T: Real> Fourier<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { fft: planner.plan_fft_forward(n), n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coefficients(&self, samples: &[C<T>]) -> Vec<C<T>> {
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        let scale = T::one() / T::from_usize_lossy(self.n);
        buf.iter_mut().for_each(|c| *c = *c * scale);
        buf
    }
}

/// Signed mode for FFT index `idx` of an `n`-point transform.
pub fn signed_mode(idx: usize, n: usize) -> i64 {
    if idx < n.div_ceil(2) {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// FFT index holding signed mode `m`, if it is resolved by `n` points.
pub fn mode_index(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m >= -half && m < n as i64 - half {
        Some(m.rem_euclid(n as i64) as usize)
    } else {
        None
    }
}

/// `C^infinity` step: 0 for `x <= 0`, 1 for `x >= 1`, built from `exp(-1/x)`.
pub fn smooth_step<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let f = |y: T| (-y.recip()).exp();
    let a = f(x);
    let b = f(T::one() - x);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    let one = T::one();
    let a = (-x.recip()).exp();
    let b = (-(one - x).recip()).exp();
    let da = a / (x * x);
    let db = -b / ((one - x) * (one - x));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Radial cutoff `psi(|w|)` rising from 0 at `|w| <= r0` to 1 at `|w| >= r1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialStep<T: Real> {
    pub r0: T,
    pub r1: T,
}

impl<T: Real> RadialStep<T> {
    pub fn new(r0: T, r1: T) -> Self {
        assert!(r1 > r0, "radial step needs r0 < r1");
        Self { r0, r1 }
    }

    pub fn value(&self, w: C<T>) -> T {
        smooth_step((w.norm() - self.r0) / (self.r1 - self.r0))
    }

    /// `d psi / d w̄ = psi'(r) * w / (2 r)`.
    pub fn dbar(&self, w: C<T>) -> C<T> {
        let r = w.norm();
        if r == T::zero() {
            return czero();
        }
        let d = smooth_step_deriv((r - self.r0) / (self.r1 - self.r0)) / (self.r1 - self.r0);
        w * (d / (T::lit(2.0) * r))
    }
}

/// Compactly supported bump `exp(-1/(1 - x))` for `x = |w - c|^2 / r^2 < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump<T: Real> {
    pub center: C<T>,
    pub radius: T,
}

impl<T: Real> Bump<T> {
    pub fn value(&self, w: C<T>) -> T {
        let x = (w - self.center).norm_sqr() / (self.radius * self.radius);
        if x >= T::one() {
            T::zero()
        } else {
            (-(T::one() - x).recip()).exp() * T::lit(std::f64::consts::E)
        }
    }

    /// `d/dw̄` of the bump.
    pub fn dbar(&self, w: C<T>) -> C<T> {
        let d = w - self.center;
        let r2 = self.radius * self.radius;
        let x = d.norm_sqr() / r2;
        if x >= T::one() {
            return czero();
        }
        let v = self.value(w);
        // d/dx exp(-1/(1-x)) = -exp(..)/(1-x)^2 ; dx/dw̄ = d / r^2
        let dv = -v / ((T::one() - x) * (T::one() - x));
        d * (dv / r2)
    }
}

/// `C^3` bump `(1 - x)^4` for `x = |w - c|^2 / r^2 < 1`. Polynomial in the
/// radius about its centre, so centred Gauss rules integrate it exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyBump<T: Real> {
    pub center: C<T>,
    pub radius: T,
}

impl<T: Real> PolyBump<T> {
    pub fn value(&self, w: C<T>) -> T {
        let x = (w - self.center).norm_sqr() / (self.radius * self.radius);
        if x >= T::one() {
            T::zero()
        } else {
            (T::one() - x).powi(4)
        }
    }

    pub fn dbar(&self, w: C<T>) -> C<T> {
        let d = w - self.center;
        let r2 = self.radius * self.radius;
        let x = d.norm_sqr() / r2;
        if x >= T::one() {
            return czero();
        }
        d * (-T::lit(4.0) * (T::one() - x).powi(3) / r2)
    }
}

/// Tensor rule on a disc: Gauss–Legendre in the radius, uniform in the angle.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRule<T: Real> {
    pub nodes: Vec<C<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> PolarRule<T> {
    pub fn disc(center: C<T>, radius: T, n_r: usize, n_theta: usize) -> Self {
        let (r, w) = gauss_legendre(n_r, T::zero(), radius);
        let dth = T::TAU() / T::from_usize_lossy(n_theta);
        let mut nodes = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for (ri, wi) in r.iter().zip(&w) {
            for j in 0..n_theta {
                nodes.push(center + C::from_polar(*ri, dth * T::from_usize_lossy(j)));
                weights.push(*wi * *ri * dth);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(C<T>) -> C<T>>(&self, f: F) -> C<T> {
        self.nodes.iter().zip(&self.weights).fold(czero(), |acc, (&z, &w)| acc + f(z) * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let (x, w) = gauss_legendre::<f64>(1, -1.0, 1.0);
        assert!((x[0]).abs() < 1e-15 && (w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polar_rule_area_and_moments() {
        let rule = PolarRule::<f64>::disc(C::new(0.2, -0.1), 0.7, 12, 32);
        let area = rule.integrate(|_| C::new(1.0, 0.0));
        assert!((area.re - std::f64::consts::PI * 0.49).abs() < 1e-12);
        let z0 = C::new(0.2, -0.1);
        let m = rule.integrate(|z| (z - z0).norm_sqr() * C::new(1.0, 0.0));
        assert!((m.re - std::f64::consts::PI * 0.7f64.powi(4) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_modes() {
        let n = 16;
        let f = Fourier::<f64>::new(n);
        let samples: Vec<C<f64>> = (0..n)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                C::new(0.0, th * -3.0).exp() * 2.0 + C::new(0.5, 0.0)
            })
            .collect();
        let c = f.coefficients(&samples);
        assert!((c[mode_index(-3, n).unwrap()] - C::new(2.0, 0.0)).norm() < 1e-13);
        assert!((c[0] - C::new(0.5, 0.0)).norm() < 1e-13);
        assert_eq!(signed_mode(13, 16), -3);
    }

    #[test]
    fn step_derivative_matches_difference_quotient() {
        for &x in &[0.1f64, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-6;
            let fd = (smooth_step(x + h) - smooth_step(x - h)) / (2.0 * h);
            assert!((fd - smooth_step_deriv(x)).abs() < 1e-6, "x = {x}");
        }
        let b = Bump { center: C::new(0.1, -0.2), radius: 0.5 };
        let w = C::new(0.3, 0.05);
        let h = 1e-6;
        let dx = (b.value(w + h) - b.value(w - h)) / (2.0 * h);
        let dy = (b.value(w + C::new(0.0, h)) - b.value(w - C::new(0.0, h))) / (2.0 * h);
        let fd = C::new(dx, dy) * 0.5;
        assert!((fd - b.dbar(w)).norm() < 1e-7);
        let p = PolyBump { center: C::new(0.1, -0.2), radius: 0.5 };
        let dx = (p.value(w + h) - p.value(w - h)) / (2.0 * h);
        let dy = (p.value(w + C::new(0.0, h)) - p.value(w - C::new(0.0, h))) / (2.0 * h);
        assert!((C::new(dx, dy) * 0.5 - p.dbar(w)).norm() < 1e-7);
    }
}

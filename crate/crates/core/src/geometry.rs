//! The rational normal cone `Y_e ⊂ C^{e+1}` and its blow-up resolution.
//!
//! The resolution is the total space of `O(-e) -> CP^1`, covered by two
//! charts. In chart A with base `t` and fiber `s` the cone is parametrized
//! by `s * (1, t, ..., t^e)`; in chart B by `sigma * (tau^e, ..., tau, 1)`.
//! On the overlap `tau = 1/t` and `sigma = t^e s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cpowi, cre, czero, Real, C};

/// The two coordinate charts of the resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    A,
    B,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::A => Chart::B,
            Chart::B => Chart::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Chart::A => "A",
            Chart::B => "B",
        }
    }
}

/// Degree-`e` rational normal cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeModel {
    degree: u32,
}

impl ConeModel {
    pub fn new(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("cone degree must be positive".into()));
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn ambient_dim(&self) -> usize {
        self.degree as usize + 1
    }

    /// Vanishing order of the Jacobian weight along the exceptional curve.
    /// The cones are surfaces, so this is `d - 1 = 1`.
    pub fn sing_order(&self) -> i64 {
        1
    }
}

/// A point of the resolution in one chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint<T: Real> {
    pub chart: Chart,
    pub base: C<T>,
    pub fiber: C<T>,
}

impl<T: Real> ChartPoint<T> {
    pub fn new(chart: Chart, base: C<T>, fiber: C<T>) -> Self {
        Self { chart, base, fiber }
    }

    /// The same point in the other chart. Fails on the base point not
    /// covered by the other chart.
    pub fn transition(&self, cone: &ConeModel) -> Result<Self> {
        if self.base == czero() {
            return Err(Error::Domain("base point not in the chart overlap".into()));
        }
        let e = i64::from(cone.degree);
        Ok(Self {
            chart: self.chart.other(),
            base: self.base.inv(),
            fiber: cpowi(self.base, e) * self.fiber,
        })
    }

    pub fn on_exceptional_curve(&self) -> bool {
        self.fiber == czero()
    }
}

/// A point of `Y_e ⊂ C^{e+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint<T: Real> {
    pub coords: Vec<C<T>>,
}

impl<T: Real> AmbientPoint<T> {
    pub fn norm(&self) -> T {
        self.coords.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
    }

    pub fn is_apex(&self) -> bool {
        self.coords.iter().all(|c| *c == czero())
    }

    /// Largest violation of `z_i z_j = z_k z_l` for `i + j = k + l`,
    /// relative to `|z|^2`.
    pub fn cone_residual(&self) -> T {
        let n = self.coords.len();
        let scale = self.norm().powi(2).max(T::min_positive_value());
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let l = (i + j) as isize - k as isize;
                    if l < 0 || l as usize >= n {
                        continue;
                    }
                    let d = self.coords[i] * self.coords[j] - self.coords[k] * self.coords[l as usize];
                    worst = worst.max(d.norm() / scale);
                }
            }
        }
        worst
    }

    pub fn scale(&self, lambda: T) -> Self {
        Self { coords: self.coords.iter().map(|c| *c * lambda).collect() }
    }
}

/// Image of a chart point in `C^{e+1}`.
pub fn blowup_map<T: Real>(cone: &ConeModel, p: &ChartPoint<T>) -> AmbientPoint<T> {
    let n = cone.ambient_dim();
    let mut coords = vec![czero(); n];
    let mut pow = cre(T::one());
    for j in 0..n {
        let idx = match p.chart {
            Chart::A => j,
            Chart::B => n - 1 - j,
        };
        coords[idx] = p.fiber * pow;
        pow = pow * p.base;
    }
    AmbientPoint { coords }
}

/// Complex Jacobian of the chart parametrization: columns `d/dbase`,
/// `d/dfiber`, each of length `e+1`.
pub fn chart_jacobian<T: Real>(cone: &ConeModel, p: &ChartPoint<T>) -> [Vec<C<T>>; 2] {
    let n = cone.ambient_dim();
    let mut d_base = vec![czero(); n];
    let mut d_fiber = vec![czero(); n];
    let mut pow = cre(T::one()); // base^j
    let mut pow_prev = czero::<T>(); // j * base^(j-1)
    for j in 0..n {
        let idx = match p.chart {
            Chart::A => j,
            Chart::B => n - 1 - j,
        };
        d_fiber[idx] = pow;
        d_base[idx] = p.fiber * pow_prev;
        pow_prev = pow * T::from_usize_lossy(j + 1);
        pow = pow * p.base;
    }
    [d_base, d_fiber]
}

/// Hermitian Gram matrix `A^H A` of the chart Jacobian, as
/// `[[g_bb, g_bf], [g_fb, g_ff]]`.
pub fn gram_matrix<T: Real>(cone: &ConeModel, p: &ChartPoint<T>) -> [[C<T>; 2]; 2] {
    let [a, b] = chart_jacobian(cone, p);
    let dot = |x: &[C<T>], y: &[C<T>]| {
        x.iter().zip(y).fold(czero(), |acc, (xi, yi)| acc + xi.conj() * yi)
    };
    let g_bb = dot(&a, &a);
    let g_bf = dot(&a, &b);
    let g_ff = dot(&b, &b);
    [[g_bb, g_bf], [g_bf.conj(), g_ff]]
}

/// `det(A^H A)`, the volume ratio between the cone metric and the flat
/// chart metric. Vanishes on the exceptional curve.
pub fn volume_distortion<T: Real>(cone: &ConeModel, p: &ChartPoint<T>) -> T {
    let g = gram_matrix(cone, p);
    (g[0][0].re * g[1][1].re - g[0][1].norm_sqr()).max(T::zero())
}

/// `u` in `det G = |s|^2 u(|t|^2)` as an integer polynomial in `x = |t|^2`,
/// expanded from the Lagrange identity
/// `u(x) = sum_{0 <= i < j <= e} (j - i)^2 x^{i + j - 1}`.
pub fn distortion_polynomial(cone: &ConeModel) -> Vec<i64> {
    let e = cone.degree as usize;
    let mut coeffs = vec![0i64; 2 * e];
    for i in 0..=e {
        for j in (i + 1)..=e {
            let d = (j - i) as i64;
            coeffs[i + j - 1] += d * d;
        }
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    coeffs
}

/// The Jacobian weight factor and its bounds on a chart region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    /// Integer coefficients of `u(x)`, lowest degree first.
    pub coefficients: Vec<i64>,
    pub region_radius: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// `u(|t|^2) = |J(t)|^2` for a holomorphic `J` happens only when `u` is
    /// a single monomial.
    pub is_squared_modulus: bool,
}

impl DistortionProfile {
    pub fn eval<T: Real>(&self, x: T) -> T {
        self.coefficients
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * x + T::from_i64_lossy(c))
    }
}

/// Jacobian-weight profile on `|t| <= region_radius`.
pub fn distortion_profile(cone: &ConeModel, region_radius: f64) -> Result<DistortionProfile> {
    if !(region_radius >= 0.0) {
        return Err(Error::InvalidInput("region radius must be non-negative".into()));
    }
    let coefficients = distortion_polynomial(cone);
    let is_squared_modulus = coefficients.iter().filter(|&&c| c != 0).count() == 1;
    let mut profile = DistortionProfile {
        coefficients,
        region_radius,
        c_min: 0.0,
        c_max: 0.0,
        is_squared_modulus,
    };
    let x_max = region_radius * region_radius;
    if profile.coefficients.iter().all(|&c| c >= 0) {
        // non-negative coefficients: monotone on [0, inf)
        profile.c_min = profile.eval(0.0);
        profile.c_max = profile.eval(x_max);
    } else {
        let n = 4096;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let v = profile.eval(x_max * i as f64 / n as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        profile.c_min = lo;
        profile.c_max = hi;
    }
    Ok(profile)
}

/// Components `(g_base, g_fiber)` of the pullback of `sum_j f_j dz̄_j`:
/// `g_k = sum_j conj(dPi_j/dw_k) f_j`.
pub fn pullback_covector<T: Real>(cone: &ConeModel, p: &ChartPoint<T>, f: &[C<T>]) -> (C<T>, C<T>) {
    let [a, b] = chart_jacobian(cone, p);
    let mut gb = czero();
    let mut gf = czero();
    for j in 0..f.len().min(a.len()) {
        gb = gb + a[j].conj() * f[j];
        gf = gf + b[j].conj() * f[j];
    }
    (gb, gf)
}

/// Pull back an ambient form given by its coefficient functions.
pub fn pullback_form<T: Real, F>(cone: &ConeModel, p: &ChartPoint<T>, f: F) -> (C<T>, C<T>)
where
    F: Fn(&AmbientPoint<T>) -> Vec<C<T>>,
{
    let z = blowup_map(cone, p);
    pullback_covector(cone, p, &f(&z))
}

/// Inverse of the blow-up off the exceptional curve. Uses chart A when
/// `|z_0| >= |z_e|`, chart B otherwise.
pub fn inverse_blowup<T: Real>(cone: &ConeModel, z: &AmbientPoint<T>) -> Result<ChartPoint<T>> {
    if z.coords.len() != cone.ambient_dim() {
        return Err(Error::InvalidInput("ambient point has the wrong dimension".into()));
    }
    if z.is_apex() {
        return Err(Error::Domain("the apex has no preimage off the exceptional curve".into()));
    }
    let n = z.coords.len();
    let (z0, z1, ze, ze1) = (z.coords[0], z.coords[1], z.coords[n - 1], z.coords[n - 2]);
    if z0.norm() >= ze.norm() {
        Ok(ChartPoint::new(Chart::A, z1 / z0, z0))
    } else {
        Ok(ChartPoint::new(Chart::B, ze1 / ze, ze))
    }
}

/// Push a function on the resolution down to the punctured cone.
pub fn pushforward_function<T: Real, F>(cone: &ConeModel, u: F, z: &AmbientPoint<T>) -> Result<C<T>>
where
    F: Fn(&ChartPoint<T>) -> C<T>,
{
    Ok(u(&inverse_blowup(cone, z)?))
}

/// Certified bounds on the intrinsic distance between two cone points.
pub fn distance_bounds<T: Real>(z: &AmbientPoint<T>, w: &AmbientPoint<T>) -> (T, T) {
    let diff = z
        .coords
        .iter()
        .zip(&w.coords)
        .map(|(a, b)| (*a - *b).norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt();
    let (nz, nw) = (z.norm(), w.norm());
    let through_apex = nz + nw;
    let inner = z
        .coords
        .iter()
        .zip(&w.coords)
        .fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * b)
        .norm();
    // same complex line through the apex: the straight segment lies in Y
    let collinear = nz == T::zero()
        || nw == T::zero()
        || (nz * nw - inner) <= T::lit(1e-12) * nz * nw;
    let upper = if collinear { diff.min(through_apex) } else { through_apex };
    (diff, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn blowup_examples() {
        let cone = ConeModel::new(2).unwrap();
        let z = blowup_map(&cone, &ChartPoint::new(Chart::A, c(0.0, 0.0), c(1.0, 0.0)));
        assert_eq!(z.coords, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let z = blowup_map(&cone, &ChartPoint::new(Chart::A, c(1.0, 0.0), c(2.0, 0.0)));
        assert_eq!(z.coords, vec![c(2.0, 0.0); 3]);
        let z = blowup_map(&cone, &ChartPoint::new(Chart::A, c(2.0, 0.0), c(1.0, 0.0)));
        assert_eq!(z.coords, vec![c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(z.coords[0] * z.coords[2] - z.coords[1] * z.coords[1], c(0.0, 0.0));
    }

    #[test]
    fn distortion_values() {
        let e1 = ConeModel::new(1).unwrap();
        let p = ChartPoint::new(Chart::A, c(0.4, -0.3), c(0.7, 0.2));
        assert!((volume_distortion(&e1, &p) - p.fiber.norm_sqr()).abs() < 1e-14);
        let e2 = ConeModel::new(2).unwrap();
        let v = volume_distortion(&e2, &ChartPoint::new(Chart::A, c(0.0, 0.0), c(3.0, 0.0)));
        assert!((v - 9.0).abs() < 1e-12);
        let v = volume_distortion(&e2, &ChartPoint::new(Chart::A, c(1.0, 0.0), c(1.0, 0.0)));
        assert!((v - 6.0).abs() < 1e-12);
        assert_eq!(volume_distortion(&e2, &ChartPoint::new(Chart::A, c(0.5, 0.0), c(0.0, 0.0))), 0.0);
    }

    #[test]
    fn profiles() {
        let p1 = distortion_profile(&ConeModel::new(1).unwrap(), 1.0).unwrap();
        assert_eq!(p1.coefficients, vec![1]);
        assert_eq!((p1.c_min, p1.c_max), (1.0, 1.0));
        assert!(p1.is_squared_modulus);
        let p2 = distortion_profile(&ConeModel::new(2).unwrap(), 1.0).unwrap();
        assert_eq!(p2.coefficients, vec![1, 4, 1]);
        assert_eq!((p2.c_min, p2.c_max), (1.0, 6.0));
        assert!(!p2.is_squared_modulus);
        let p0 = distortion_profile(&ConeModel::new(2).unwrap(), 0.0).unwrap();
        assert_eq!((p0.c_min, p0.c_max), (1.0, 1.0));
    }

    #[test]
    fn pullback_examples() {
        let cone = ConeModel::new(2).unwrap();
        let p = ChartPoint::new(Chart::A, c(0.3, 0.1), c(-0.2, 0.5));
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let (gb, gf) = pullback_covector(&cone, &p, &[one, zero, zero]);
        assert_eq!((gb, gf), (zero, one));
        let (gb, gf) = pullback_covector(&cone, &p, &[zero, one, zero]);
        assert!((gb - p.fiber.conj()).norm() < 1e-15);
        assert!((gf - p.base.conj()).norm() < 1e-15);
        let (gb, gf) = pullback_form(&cone, &p, |z| vec![z.coords[0], zero, zero]);
        assert_eq!(gb, zero);
        assert!((gf - p.fiber).norm() < 1e-15);
    }

    #[test]
    fn pushforward_inverts_the_chart() {
        let cone = ConeModel::new(2).unwrap();
        let p = ChartPoint::new(Chart::A, c(0.3, 0.1), c(-0.2, 0.5));
        let z = blowup_map(&cone, &p);
        let v = pushforward_function(&cone, |q| if q.chart == Chart::A { q.fiber } else { c(f64::NAN, 0.0) }, &z).unwrap();
        assert!((v - z.coords[0]).norm() < 1e-15);
        let t = pushforward_function(&cone, |q| q.base, &z).unwrap();
        assert!((t - z.coords[1] / z.coords[0]).norm() < 1e-15);
        let apex = AmbientPoint { coords: vec![c(0.0, 0.0); 3] };
        assert!(matches!(pushforward_function(&cone, |q| q.base, &apex), Err(Error::Domain(_))));
    }

    #[test]
    fn distance_examples() {
        let z = AmbientPoint { coords: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)] };
        let w = AmbientPoint { coords: vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)] };
        assert_eq!(distance_bounds(&z, &z), (0.0, 0.0));
        assert_eq!(distance_bounds(&z, &w), (1.0, 1.0));
        let apex = AmbientPoint { coords: vec![c(0.0, 0.0); 3] };
        assert_eq!(distance_bounds(&w, &apex), (2.0, 2.0));
    }

    #[test]
    fn zero_degree_rejected() {
        assert!(ConeModel::new(0).is_err());
    }
}

//! Numerical ∂̄-solvers on punctured rational normal cones.
//!
//! The cone `Y_e` is resolved by blowing up the apex; the resolution is the
//! total space of `O(-e)` over `CP^1`. Forms on the punctured cone are
//! pulled back, expanded in the fiber coordinate into `O(e*mu)`-valued
//! forms on `CP^1`, solved coefficient by coefficient with a two-chart
//! Cauchy transform, and pushed back down. Coefficients that cannot be
//! solved are reported as Čech obstructions; [`obstruction`] computes the
//! dimensions of those obstruction spaces exactly.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod bundle;
pub mod cauchy;
pub mod cone;
pub mod cp1;
pub mod error;
pub mod geometry;
pub mod obstruction;
pub mod quadrature;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type DiscGrid64 = cauchy::DiscGrid<f64>;
pub type ChartField64 = cauchy::ChartField<f64>;
pub type CauchyTransform64 = cauchy::CauchyTransform<f64>;
pub type BundleForm64 = cp1::BundleForm<f64>;
pub type BundleSection64 = cp1::BundleSection<f64>;
pub type CechObstruction64 = cp1::CechObstruction<f64>;
pub type FiberSeries64 = bundle::FiberSeries<f64>;
pub type ObstructionReport64 = bundle::ObstructionReport<f64>;
pub type ChartPoint64 = geometry::ChartPoint<f64>;
pub type AmbientPoint64 = geometry::AmbientPoint<f64>;

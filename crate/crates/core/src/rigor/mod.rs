//! Outward-rounded interval arithmetic on MPFR and the rigorous bounds built
//! on it.

mod bounds;
mod closed;
mod eigen;
mod interval;

pub use bounds::{enclose_distance, enclose_norm, hessian_norm_bound_lh, third_order_bound_la, BallSpec};
pub use closed::{enclose_angle, enclose_gradient, enclose_gradient_norm, enclose_hessian, enclose_objective, IntervalMatrix};
pub use eigen::{
    central_binomial_identity_check, eigen_lower_bound, eigen_lower_bound_f64, sorted_eigenvalues, spectral_norm_sym,
    EigenBoundReport,
};
pub use interval::Enclosure;

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;
/// Largest precision tried by automatic retries.
pub const MAX_PRECISION: u32 = 4096;

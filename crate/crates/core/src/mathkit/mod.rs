//! Self-contained numerical primitives: Sobol sequences, squared-exponential
//! kernel distances, positive-definite factorization, the standard-normal
//! density/CDF, and a small deterministic RNG.
//!
//! Everything here is pure and allocation-light; the rest of the library is
//! built on top of these routines.

pub mod kernel;
pub mod linalg;
pub mod normal;
pub mod rng;
pub mod sobol;

pub use kernel::sq_exp_distance;
pub use linalg::{psd_factorize, PsdFactor, SquareMat};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use rng::Rng64;
pub use sobol::{sobol_points, SobolStream, MAX_DIMENSION};

//! Subsampled second-order line-search optimization for finite-sum problems.
//!
//! The crate minimizes `f(x) = (1/N) Σ f_i(x)` using a model built from a random
//! sample of the components at every iteration. Each iteration chooses between a
//! negative-curvature direction, a Newton direction and a regularized Newton
//! direction (plus two gradient-based directions in the practical variant), and
//! enforces decrease of the *sampled* model by backtracking.
//!
//! Module map:
//!
//! - [`problem`]: the finite-sum oracle, sample sets, the subsampled model and
//!   the accuracy check comparing it with the full objective.
//! - [`step`]: eigenpairs, Rayleigh quotients, direction formulas and the two
//!   step-selection policies.
//! - [`linesearch`]: backtracking with cubic or quadratic decrease.
//! - [`driver`]: the outer loop, stationarity checks, stopping rule and the SGD
//!   baseline.
//! - [`theory`]: closed-form constants, sample-size bounds and expected
//!   complexity bounds.
//! - [`objectives`]: tanh MLP objectives with exact derivatives, datasets,
//!   teacher-network data, samplers and finite-difference checks.

pub mod driver;
pub mod error;
pub mod linesearch;
pub mod objectives;
pub mod problem;
pub mod step;
pub mod theory;

pub use error::{AlasError, Result};

pub use nalgebra::{DMatrix, DVector};

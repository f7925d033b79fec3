//! Error type shared by all modules of the crate.

use num_complex::Complex64;
use thiserror::Error;

use crate::singularity::Hyperplane;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The argument sits on (or within tolerance of) a pole of the function.
    #[error("pole at {at}")]
    Pole { at: Complex64 },

    /// An argument is outside the documented domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured cap (Bernoulli index, character modulus, shape rank) was exceeded.
    #[error("cap exceeded: requested {requested}, cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    /// The point is outside the absolute-convergence region required by a
    /// direct-summation routine.
    #[error("argument outside the absolute convergence region (margin {margin})")]
    OutOfRegion { margin: f64 },

    /// The total term budget for nested summation would be exceeded.
    #[error("work budget exceeded: {spent} terms spent, cap {cap}")]
    BudgetExceeded { spent: u64, cap: u64 },

    /// No admissible vertical contour exists for the requested integral
    /// representation (the strip -Re(s_{r+1}) < c < -1 is empty).
    #[error("no valid contour: strip (-{re_s_last}, -1) is empty")]
    NoValidContour { re_s_last: f64 },

    /// The quadrature tail failed its exponential-decay check.
    #[error("quadrature diverged: fitted tail decay rate {rate}")]
    QuadratureDiverged { rate: f64 },

    /// The evaluation point lies on a candidate singular hyperplane.
    #[error("singular point on {plane}")]
    SingularPoint { plane: Hyperplane },

    /// The recursion depth budget was exhausted.
    #[error("recursion depth exceeded: {depth} > {max}")]
    DepthExceeded { depth: usize, max: usize },

    /// No probe direction transversal to the hyperplane avoids the rest of
    /// the atlas.
    #[error("no transversal direction found for cancellation check")]
    TransversalNotFound,
}

pub type Result<T> = std::result::Result<T, Error>;

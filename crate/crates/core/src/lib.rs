//! Numerical evaluation of generalized Mordell-Tornheim multiple
//! zeta-functions and L-functions.
//!
//! The crate covers three layers:
//!
//! * [`special`] / [`dirichlet`] — complex special functions (log-Gamma,
//!   Riemann/Hurwitz zeta, exact Bernoulli arithmetic) and Dirichlet
//!   character tables with their L-functions.
//! * [`series`] — direct summation of the Euler-Zagier, Mordell-Tornheim,
//!   Apostol-Vu and generalized hat-class series inside their absolute
//!   convergence regions, with certified truncation bounds.
//! * [`continuation`] / [`singularity`] — Mellin-Barnes vertical-line
//!   quadrature, the contour-shift recursion that continues the hat class to
//!   the whole complex space, and the atlas of candidate singular
//!   hyperplanes with numerical cancellation checks.

pub mod continuation;
pub mod dirichlet;
pub mod error;
pub mod kahan;
pub mod series;
pub mod singularity;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;

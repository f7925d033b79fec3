//! Complex special functions underlying the rest of the crate: log-Gamma,
//! Riemann and Hurwitz zeta, exact Bernoulli numbers and polynomials, and
//! generalized binomial coefficients.
//!
//! Everything here is a pure function of its inputs and safe for unrestricted
//! concurrent use.

mod bernoulli;
mod gamma;
mod zeta;

pub use bernoulli::{
    bernoulli_number, bernoulli_number_with_cap, bernoulli_poly, bernoulli_poly_rational,
    em_coefficients, rational_to_f64, zeta_neg_odd, BERNOULLI_CAP,
};
pub use gamma::{complex_binomial, gamma, log_gamma, log_sin_pi};
pub use zeta::{
    hurwitz_any, hurwitz_rational, hurwitz_zeta, riemann_zeta, zeta_real_gt1, EM_REL_CUTOFF,
    EM_TERMS_DEFAULT,
};

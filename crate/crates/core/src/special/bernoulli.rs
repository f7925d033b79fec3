//! Exact Bernoulli numbers and polynomials over arbitrary-precision rationals,
//! with the convention B_1 = -1/2.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest Bernoulli index served by [`bernoulli_number`].
pub const BERNOULLI_CAP: usize = 64;

fn cache() -> &'static Mutex<Vec<BigRational>> {
    static CACHE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(vec![BigRational::one()]))
}

fn big_binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Exact Bernoulli number B_n (B_1 = -1/2).
///
/// Uses the defining recurrence sum_{k=0}^{n} C(n+1,k) B_k = 0 and caches
/// everything computed so far.
pub fn bernoulli_number(n: usize) -> Result<BigRational> {
    bernoulli_number_with_cap(n, BERNOULLI_CAP)
}

/// As [`bernoulli_number`] with an explicit cap.
pub fn bernoulli_number_with_cap(n: usize, cap: usize) -> Result<BigRational> {
    if n > cap {
        return Err(Error::CapExceeded { requested: n, cap });
    }
    let mut table = cache().lock().unwrap();
    while table.len() <= n {
        let m = table.len(); // computing B_m
        let mut acc = BigRational::zero();
        for (k, b) in table.iter().enumerate() {
            acc += BigRational::from(big_binomial(m + 1, k)) * b;
        }
        let coeff = BigRational::from(BigInt::from(m as u64 + 1));
        table.push(-acc / coeff);
    }
    Ok(table[n].clone())
}

/// Exact Bernoulli polynomial value B_n(x) for rational x.
pub fn bernoulli_poly_rational(n: usize, x: &BigRational) -> Result<BigRational> {
    bernoulli_number(n)?; // cap check + warm the cache
    let table = cache().lock().unwrap();
    // Horner form over k: B_n(x) = sum_k C(n,k) B_k x^{n-k}
    let mut acc = BigRational::zero();
    let mut xpow = BigRational::one();
    for k in (0..=n).rev() {
        acc += BigRational::from(big_binomial(n, k)) * &table[k] * &xpow;
        xpow *= x;
    }
    Ok(acc)
}

/// Bernoulli polynomial B_n(x) evaluated in f64.
pub fn bernoulli_poly(n: usize, x: f64) -> Result<f64> {
    bernoulli_number(n)?;
    let table = cache().lock().unwrap();
    let mut acc = 0.0f64;
    let mut xpow = 1.0f64;
    for k in (0..=n).rev() {
        let c = big_binomial(n, k).to_f64().unwrap_or(f64::NAN);
        acc += c * rational_to_f64(&table[k]) * xpow;
        xpow *= x;
    }
    Ok(acc)
}

/// Exact zeta value at negative odd integers: zeta(1-2n) = -B_{2n}/(2n).
pub fn zeta_neg_odd(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::Domain("zeta_neg_odd requires n >= 1".into()));
    }
    let b = bernoulli_number(2 * n)?;
    Ok(-b / BigRational::from(BigInt::from(2 * n as u64)))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // BigRational::to_f64 can overflow for huge numerator/denominator pairs of
    // moderate quotient; go through a scaled division.
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer();
        let d = r.denom();
        let shift = (n.bits() as i64 - d.bits() as i64).max(0) as u64;
        let q = BigRational::new(n.clone(), d.clone() << shift);
        q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
    })
}

/// B_{2k}/(2k)! as f64 for the Euler-Maclaurin correction terms, k = 1..=len.
pub fn em_coefficients(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut fact = BigRational::one(); // (2k)!
    for k in 1..=len {
        for m in (2 * k - 1)..=(2 * k) {
            fact *= BigRational::from(BigInt::from(m as u64));
        }
        let b = bernoulli_number_with_cap(2 * k, 2 * len.max(32)).expect("cap");
        out.push(rational_to_f64(&(b / &fact)));
    }
    out
}

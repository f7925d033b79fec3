//! Direct summation of the Euler-Zagier, Mordell-Tornheim, Apostol-Vu and
//! generalized hat-class series inside their absolute convergence regions.
//!
//! Truncation control: the one-variable integral estimate
//! sum_{m>M} (m+X)^{-sigma} < (M+X)^{1-sigma}/(sigma-1) is composed level by
//! level from the innermost sum outward. For cumulative levels the
//! composition is exact; independent levels are peeled with conservative
//! zeta-value constants. Whenever the hat-class shape has no own exponent on
//! the innermost variable, that sum collapses to a Hurwitz zeta evaluation
//! and contributes no truncation error at all.
//!
//! Outer ranges are split into fixed-size chunks and may be summed in
//! parallel; chunk results are combined by a fixed-order pairwise reduction,
//! so values are bit-stable across thread counts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dirichlet::CharacterTuple;
use crate::error::{Error, Result};
use crate::kahan::{pairwise_reduce, KahanComplex};
use crate::special::hurwitz_any;

/// Cheap closed-form upper bound on zeta(sigma) for sigma > 1, used for the
/// conservative tail constants (three explicit terms plus an integral tail).
fn zeta_upper(sigma: f64) -> f64 {
    1.0 + 2f64.powf(-sigma) + 3f64.powf(-sigma) + 3f64.powf(1.0 - sigma) / (sigma - 1.0)
}

/// Default cap on the rank r.
pub const RANK_CAP: usize = 4;
/// Minimum number of explicit terms per nesting level.
const MIN_TERMS: usize = 8;
/// Outer ranges at least this long are chunked for parallel summation.
const PAR_THRESHOLD: usize = 512;
const CHUNK: usize = 128;

/// The pair (j, r) selecting a member of the generalized class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    j: usize,
    r: usize,
}

impl Shape {
    pub fn new(j: usize, r: usize) -> Result<Self> {
        Self::with_rank_cap(j, r, RANK_CAP)
    }

    pub fn with_rank_cap(j: usize, r: usize, cap: usize) -> Result<Self> {
        if j < 1 || j > r {
            return Err(Error::Domain(format!("shape needs 1 <= j <= r, got ({j}, {r})")));
        }
        if r > cap {
            return Err(Error::CapExceeded { requested: r, cap });
        }
        Ok(Shape { j, r })
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of complex arguments (r + 1).
    pub fn arity(&self) -> usize {
        self.r + 1
    }
}

/// Ordered list of r+1 complex arguments (s_1, ..., s_{r+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct ArgVector(Vec<Complex64>);

impl ArgVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        ArgVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access matching the s_i notation.
    pub fn s(&self, i: usize) -> Complex64 {
        self.0[i - 1]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn check_arity(&self, shape: Shape) -> Result<()> {
        if self.len() != shape.arity() {
            return Err(Error::Domain(format!(
                "argument vector has {} entries, shape ({}, {}) needs {}",
                self.len(),
                shape.j(),
                shape.r(),
                shape.arity()
            )));
        }
        Ok(())
    }
}

impl From<Vec<Complex64>> for ArgVector {
    fn from(v: Vec<Complex64>) -> Self {
        ArgVector(v)
    }
}

/// Truncation parameters for direct summation.
#[derive(Debug, Clone, Copy)]
pub struct TruncationConfig {
    /// Per-index cap M on every nesting level.
    pub per_index_cap: usize,
    /// Target absolute tolerance for the truncation error.
    pub target_tol: f64,
    /// Total term budget across all levels.
    pub work_cap: u64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { per_index_cap: 4000, target_tol: 1e-10, work_cap: 100_000_000 }
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    MbQuadrature,
    Shifted,
    ExactIdentity,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::MbQuadrature => "mb-quadrature",
            Method::Shifted => "shifted",
            Method::ExactIdentity => "exact-identity",
        }
    }
}

/// A computed value together with its error estimate and provenance.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub value: Complex64,
    pub err_est: f64,
    pub method: Method,
    pub depth: usize,
    pub warnings: Vec<String>,
}

impl EvalResult {
    pub fn direct(value: Complex64, err_est: f64) -> Self {
        EvalResult { value, err_est, method: Method::Direct, depth: 0, warnings: Vec::new() }
    }
}

/// Membership in the absolute-convergence region R_{j,r}, with slack.
///
/// All inequalities must hold with margin: the suffix conditions
/// Re(s_{r+2-k} + ... + s_{r+1}) > k for k = 1..r-j, the block condition
/// Re(s_{j+1} + ... + s_{r+1}) > r-j, and Re(s_l) > 1 for l <= j. For j = r
/// this degenerates to Re(s_l) > 1 and Re(s_{r+1}) > 0.
pub fn region_contains(shape: Shape, s: &ArgVector, margin: f64) -> bool {
    if s.len() != shape.arity() {
        return false;
    }
    let (j, r) = (shape.j(), shape.r());
    for k in 1..=(r - j) {
        let sum: f64 = ((r + 2 - k)..=(r + 1)).map(|i| s.s(i).re).sum();
        if sum <= k as f64 + margin {
            return false;
        }
    }
    let block: f64 = ((j + 1)..=(r + 1)).map(|i| s.s(i).re).sum();
    if block <= (r - j) as f64 + margin {
        return false;
    }
    for l in 1..=j {
        if s.s(l).re <= 1.0 + margin {
            return false;
        }
    }
    true
}

/// Absolute-convergence test for the Euler-Zagier series (r variables):
/// Re(s_{r-k+1} + ... + s_r) > k for k = 1..r.
pub fn ez_region_contains(s: &[Complex64], margin: f64) -> bool {
    let r = s.len();
    for k in 1..=r {
        let sum: f64 = s[(r - k)..].iter().map(|z| z.re).sum();
        if sum <= k as f64 + margin {
            return false;
        }
    }
    true
}

const REGION_MARGIN: f64 = 0.05;

// ---------------------------------------------------------------------------
// nested summation engine
// ---------------------------------------------------------------------------

struct Budget {
    spent: u64,
    cap: u64,
}

impl Budget {
    fn spend(&mut self, n: u64) -> Result<()> {
        self.spent += n;
        if self.spent > self.cap {
            Err(Error::BudgetExceeded { spent: self.spent, cap: self.cap })
        } else {
            Ok(())
        }
    }
}

/// Generic nested series: at level i (0-based) the variable m carries an
/// optional own factor m^{-own[i]}, and after it is chosen the running sum
/// S_i = m_1 + ... + m_{i+1} carries an optional factor S_i^{-cum[i]}.
struct Engine<'a> {
    r: usize,
    own: Vec<Option<Complex64>>,
    cum: Vec<Option<Complex64>>,
    chis: Option<&'a CharacterTuple>,
    /// effective tail exponent per level (valid: > 1)
    e: Vec<f64>,
    /// composed inner-block constants C_{i+1} used in the level-i tail bound
    c_next: Vec<f64>,
    /// per-prefix tolerance share per level
    eps: f64,
    cap: usize,
    ln_m: Vec<f64>,
    /// innermost Hurwitz collapse data (when own[r-1] is none)
    inner_hurwitz: Option<InnerHurwitz>,
}

struct InnerHurwitz {
    s_last: Complex64,
    /// residues (a, chi(a) q^{-s_last}) with nonzero weight; [(1, 1)] for q = 1
    terms: Vec<(usize, Complex64)>,
    q: usize,
}

impl<'a> Engine<'a> {
    fn build(
        own: Vec<Option<Complex64>>,
        cum: Vec<Option<Complex64>>,
        chis: Option<&'a CharacterTuple>,
        cfg: &TruncationConfig,
    ) -> Result<Self> {
        let r = own.len();
        debug_assert_eq!(cum.len(), r);
        // innermost collapse requires no own factor and no character weight
        // mixing beyond residue classes (characters are fine: split mod q)
        let inner_hurwitz = if own[r - 1].is_none() {
            let s_last = cum[r - 1].expect("innermost level must carry a factor");
            let (q, terms) = match chis {
                None => (1usize, vec![(1usize, Complex64::new(1.0, 0.0))]),
                Some(t) => {
                    let chi = t.get(r - 1);
                    let q = chi.modulus();
                    let scale = Complex64::new(q as f64, 0.0).powc(-s_last);
                    let mut terms = Vec::new();
                    for a in 1..=q {
                        let w = chi.eval(a % q);
                        if w.norm_sqr() > 0.0 {
                            terms.push((a, w * scale));
                        }
                    }
                    (q, terms)
                }
            };
            Some(InnerHurwitz { s_last, terms, q })
        } else {
            None
        };

        // bottom-up composition of tail exponents and constants
        let mut e = vec![0.0f64; r];
        let mut c_next = vec![1.0f64; r];
        let mut d_inner = 0.0f64; // decay of the block below the current level
        let mut c_inner = 1.0f64;
        for i in (0..r).rev() {
            let cum_re = cum[i].map(|z| z.re).unwrap_or(0.0);
            let delta = cum_re + d_inner;
            c_next[i] = c_inner;
            match own[i] {
                Some(s_own) => {
                    if delta < 0.0 || s_own.re + delta <= 1.0 {
                        return Err(Error::Domain(
                            "tail exponents invalid; point too close to the region boundary"
                                .into(),
                        ));
                    }
                    e[i] = s_own.re + delta;
                    c_inner *= zeta_upper(e[i]);
                    d_inner = delta;
                }
                None => {
                    if delta <= 1.0 {
                        return Err(Error::Domain(
                            "tail exponents invalid; point too close to the region boundary"
                                .into(),
                        ));
                    }
                    e[i] = delta;
                    c_inner /= delta - 1.0;
                    d_inner = delta - 1.0;
                }
            }
        }

        // the ln table only serves the own-exponent levels; size it by the
        // worst closed-form stop bound instead of the raw cap
        let eps = cfg.target_tol / (8.0 * r as f64);
        let mut table_len = MIN_TERMS;
        for i in 0..r {
            if own[i].is_none() {
                continue;
            }
            let need = (c_next[i] / (eps * (e[i] - 1.0))).powf(1.0 / (e[i] - 1.0));
            let need = if need.is_finite() { need.ceil() as usize } else { cfg.per_index_cap };
            table_len = table_len.max(need.min(cfg.per_index_cap));
        }
        let mut ln_m = Vec::with_capacity(table_len + 2);
        ln_m.push(0.0);
        for m in 1..=(table_len + 1) {
            ln_m.push((m as f64).ln());
        }

        Ok(Engine {
            r,
            own,
            cum,
            chis,
            e,
            c_next,
            eps,
            cap: cfg.per_index_cap,
            ln_m,
            inner_hurwitz,
        })
    }

    /// Tail bound after truncating level `lvl` at m = `stop`, for a prefix of
    /// absolute weight w and running sum s_prev.
    #[inline]
    fn tail_bound(&self, lvl: usize, s_prev: f64, stop: f64, w: f64) -> f64 {
        let e = self.e[lvl];
        let base = if self.own[lvl].is_some() { stop } else { s_prev + stop };
        w * self.c_next[lvl] * base.powf(1.0 - e) / (e - 1.0)
    }

    fn chi(&self, lvl: usize, m: usize) -> Complex64 {
        match self.chis {
            None => Complex64::new(1.0, 0.0),
            Some(t) => t.get(lvl).eval(m),
        }
    }

    fn pow_m(&self, m: usize, s: Complex64) -> Complex64 {
        (-s * self.ln_m[m]).exp()
    }

    /// Sum levels lvl..r-1 given the prefix sum; the caller applies the
    /// prefix coefficient. Accumulates truncation bounds into err (already
    /// scaled by the prefix weight w).
    fn sum_level(
        &self,
        lvl: usize,
        s_prev: f64,
        w: f64,
        budget: &mut Budget,
        err: &mut f64,
    ) -> Result<Complex64> {
        if lvl == self.r - 1 {
            if let Some(ih) = &self.inner_hurwitz {
                // closed-form innermost sum via Hurwitz zeta
                budget.spend(ih.terms.len() as u64)?;
                let mut acc = Complex64::new(0.0, 0.0);
                let mut herr = 0.0;
                for &(a, coeff) in &ih.terms {
                    let x = (s_prev + a as f64) / ih.q as f64;
                    let (h, he) = hurwitz_any(ih.s_last, x)?;
                    acc += coeff * h;
                    herr += he;
                }
                *err += w * herr;
                return Ok(acc);
            }
        }

        let mut acc = KahanComplex::new();
        let mut m = 1usize;
        loop {
            budget.spend(1)?;
            let mut factor = Complex64::new(1.0, 0.0);
            if let Some(s_own) = self.own[lvl] {
                factor *= self.pow_m(m, s_own);
            }
            if self.chis.is_some() {
                let c = self.chi(lvl, m);
                if c.norm_sqr() == 0.0 {
                    // character kills this residue class entirely
                    if self.advance(lvl, s_prev, w, &mut m, &acc, err) {
                        break;
                    }
                    continue;
                }
                factor *= c;
            }
            let s_here = s_prev + m as f64;
            if let Some(s_cum) = self.cum[lvl] {
                factor *= (-s_cum * s_here.ln()).exp();
            }
            let w_here = w * factor.norm();
            let inner = if lvl + 1 < self.r {
                self.sum_level(lvl + 1, s_here, w_here, budget, err)?
            } else {
                Complex64::new(1.0, 0.0)
            };
            acc.add(factor * inner);
            if self.advance(lvl, s_prev, w, &mut m, &acc, err) {
                break;
            }
        }
        Ok(acc.value())
    }

    /// Advance the loop counter; true means stop (tail bound recorded).
    #[inline]
    fn advance(
        &self,
        lvl: usize,
        s_prev: f64,
        w: f64,
        m: &mut usize,
        _acc: &KahanComplex,
        err: &mut f64,
    ) -> bool {
        if *m >= MIN_TERMS {
            let bound = self.tail_bound(lvl, s_prev, *m as f64, w);
            if bound <= self.eps || *m >= self.cap {
                *err += bound;
                return true;
            }
        }
        *m += 1;
        false
    }

    /// Outer truncation point from the closed-form tail bound.
    fn outer_stop(&self) -> usize {
        let e = self.e[0];
        let c = self.c_next[0];
        let m_needed = (c / (self.eps * (e - 1.0))).powf(1.0 / (e - 1.0)).ceil();
        let m = if m_needed.is_finite() { m_needed.max(MIN_TERMS as f64) as usize } else { self.cap };
        m.clamp(MIN_TERMS, self.cap)
    }

    fn run(&self, cfg: &TruncationConfig) -> Result<EvalResult> {
        let m0 = self.outer_stop();
        let (value, err, spent) = if m0 >= PAR_THRESHOLD && self.r >= 2 {
            let n_chunks = m0.div_ceil(CHUNK);
            let share = (cfg.work_cap / n_chunks as u64).max(1);
            let results: Vec<Result<(Complex64, f64, u64)>> = (0..n_chunks)
                .into_par_iter()
                .map(|ci| {
                    let lo = ci * CHUNK + 1;
                    let hi = ((ci + 1) * CHUNK).min(m0);
                    let mut budget = Budget { spent: 0, cap: share };
                    let mut err = 0.0f64;
                    let mut acc = KahanComplex::new();
                    for m in lo..=hi {
                        budget.spend(1)?;
                        let mut factor = Complex64::new(1.0, 0.0);
                        if let Some(s_own) = self.own[0] {
                            factor *= self.pow_m(m, s_own);
                        }
                        if self.chis.is_some() {
                            let c = self.chi(0, m);
                            if c.norm_sqr() == 0.0 {
                                continue;
                            }
                            factor *= c;
                        }
                        let s_here = m as f64;
                        if let Some(s_cum) = self.cum[0] {
                            factor *= (-s_cum * s_here.ln()).exp();
                        }
                        let inner =
                            self.sum_level(1, s_here, factor.norm(), &mut budget, &mut err)?;
                        acc.add(factor * inner);
                    }
                    Ok((acc.value(), err, budget.spent))
                })
                .collect();
            let mut vals = Vec::with_capacity(n_chunks);
            let mut err = 0.0;
            let mut spent = 0u64;
            for r in results {
                let (v, e, s) = r?;
                vals.push(v);
                err += e;
                spent += s;
            }
            (pairwise_reduce(vals), err, spent)
        } else {
            let mut budget = Budget { spent: 0, cap: cfg.work_cap };
            let mut err = 0.0f64;
            let v = self.sum_level(0, 0.0, 1.0, &mut budget, &mut err)?;
            (v, err, budget.spent)
        };
        let _ = spent;
        let mut out = EvalResult::direct(value, err + self.tail_bound(0, 0.0, m0 as f64, 1.0));
        if out.err_est > cfg.target_tol {
            out.warnings.push(format!(
                "truncation bound {:.3e} exceeds target tolerance {:.3e}",
                out.err_est, cfg.target_tol
            ));
        }
        Ok(out)
    }
}

fn hat_exponents(shape: Shape, s: &ArgVector) -> (Vec<Option<Complex64>>, Vec<Option<Complex64>>) {
    let (j, r) = (shape.j(), shape.r());
    let mut own = vec![None; r];
    let mut cum = vec![None; r];
    for i in 0..j {
        own[i] = Some(s.s(i + 1));
    }
    for i in (j - 1)..r {
        cum[i] = Some(s.s(i + 2));
    }
    (own, cum)
}

/// Direct summation of the generalized hat-class series for a shape (j, r).
pub fn zeta_mt_hat_direct(shape: Shape, s: &ArgVector, cfg: &TruncationConfig) -> Result<EvalResult> {
    s.check_arity(shape)?;
    if !region_contains(shape, s, REGION_MARGIN) {
        return Err(Error::OutOfRegion { margin: REGION_MARGIN });
    }
    let (own, cum) = hat_exponents(shape, s);
    Engine::build(own, cum, None, cfg)?.run(cfg)
}

/// Character-weighted hat-class series: numerators chi_i(m_i).
pub fn l_mt_hat_direct(
    shape: Shape,
    s: &ArgVector,
    chis: &CharacterTuple,
    cfg: &TruncationConfig,
) -> Result<EvalResult> {
    s.check_arity(shape)?;
    if chis.len() != shape.r() {
        return Err(Error::Domain(format!(
            "need {} characters for rank {}, got {}",
            shape.r(),
            shape.r(),
            chis.len()
        )));
    }
    if !region_contains(shape, s, REGION_MARGIN) {
        return Err(Error::OutOfRegion { margin: REGION_MARGIN });
    }
    let (own, cum) = hat_exponents(shape, s);
    Engine::build(own, cum, Some(chis), cfg)?.run(cfg)
}

/// Euler-Zagier series of rank r = s.len().
pub fn zeta_ez_direct(s: &[Complex64], cfg: &TruncationConfig) -> Result<EvalResult> {
    if s.is_empty() {
        return Err(Error::Domain("rank must be >= 1".into()));
    }
    if !ez_region_contains(s, REGION_MARGIN) {
        return Err(Error::OutOfRegion { margin: REGION_MARGIN });
    }
    let r = s.len();
    let own = vec![None; r];
    let cum: Vec<Option<Complex64>> = s.iter().map(|&z| Some(z)).collect();
    Engine::build(own, cum, None, cfg)?.run(cfg)
}

/// Mordell-Tornheim series: s has r+1 entries; identical to the hat class
/// with j = r.
pub fn zeta_mt_direct(s: &[Complex64], cfg: &TruncationConfig) -> Result<EvalResult> {
    if s.len() < 2 {
        return Err(Error::Domain("need at least 2 arguments".into()));
    }
    let r = s.len() - 1;
    let shape = Shape::new(r, r)?;
    zeta_mt_hat_direct(shape, &ArgVector::new(s.to_vec()), cfg)
}

/// Apostol-Vu series: same summand as Mordell-Tornheim restricted to
/// strictly increasing indices m_1 < m_2 < ... < m_r.
pub fn zeta_av_direct(s: &[Complex64], cfg: &TruncationConfig) -> Result<EvalResult> {
    if s.len() < 2 {
        return Err(Error::Domain("need at least 2 arguments".into()));
    }
    let r = s.len() - 1;
    if r > RANK_CAP {
        return Err(Error::CapExceeded { requested: r, cap: RANK_CAP });
    }
    // Eq. (4) region with margin, as for the unconstrained MT sum
    let shape = Shape::new(r, r)?;
    let argv = ArgVector::new(s.to_vec());
    if !region_contains(shape, &argv, REGION_MARGIN) {
        return Err(Error::OutOfRegion { margin: REGION_MARGIN });
    }

    // conservative tail data: exponent e_i = sigma_i + sigma_{r+1} +
    // sum_{l>i} (sigma_l - 1), constants from the peeled inner zeta tails
    let sig: Vec<f64> = s.iter().map(|z| z.re).collect();
    let mut e = vec![0.0f64; r];
    let mut c_next = vec![1.0f64; r];
    let mut c_run = 1.0f64;
    let mut extra = 0.0f64;
    for i in (0..r).rev() {
        e[i] = sig[i] + sig[r] + extra;
        c_next[i] = c_run;
        extra += sig[i] - 1.0;
        c_run /= sig[i] - 1.0;
    }

    struct AvEngine<'b> {
        s: &'b [Complex64],
        r: usize,
        e: Vec<f64>,
        c_next: Vec<f64>,
        eps: f64,
        cap: usize,
    }
    impl AvEngine<'_> {
        fn sum(
            &self,
            lvl: usize,
            start: usize,
            s_prev: f64,
            w: f64,
            budget: &mut Budget,
            err: &mut f64,
        ) -> Result<Complex64> {
            let mut acc = KahanComplex::new();
            let mut m = start;
            loop {
                budget.spend(1)?;
                let mut factor = (-self.s[lvl] * (m as f64).ln()).exp();
                let s_here = s_prev + m as f64;
                if lvl == self.r - 1 {
                    factor *= (-self.s[self.r] * s_here.ln()).exp();
                    acc.add(factor);
                } else {
                    let inner =
                        self.sum(lvl + 1, m + 1, s_here, w * factor.norm(), budget, err)?;
                    acc.add(factor * inner);
                }
                if m >= start + MIN_TERMS {
                    let bound =
                        w * self.c_next[lvl] * (m as f64).powf(1.0 - self.e[lvl]) / (self.e[lvl] - 1.0);
                    if bound <= self.eps || m >= start + self.cap {
                        *err += bound;
                        break;
                    }
                }
                m += 1;
            }
            Ok(acc.value())
        }
    }

    let eng = AvEngine {
        s,
        r,
        e,
        c_next,
        eps: cfg.target_tol / (8.0 * r as f64),
        cap: cfg.per_index_cap,
    };
    let mut budget = Budget { spent: 0, cap: cfg.work_cap };
    let mut err = 0.0f64;
    let v = eng.sum(0, 1, 0.0, 1.0, &mut budget, &mut err)?;
    let mut out = EvalResult::direct(v, err);
    if out.err_est > cfg.target_tol {
        out.warnings.push(format!(
            "truncation bound {:.3e} exceeds target tolerance {:.3e}",
            out.err_est, cfg.target_tol
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{characters_mod, l_line};
    use crate::special::riemann_zeta;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cr(re: f64) -> Complex64 {
        c(re, 0.0)
    }

    fn args(v: &[f64]) -> ArgVector {
        ArgVector::new(v.iter().map(|&x| cr(x)).collect())
    }

    #[test]
    fn region_examples() {
        let s22 = Shape::new(2, 2).unwrap();
        assert!(region_contains(s22, &args(&[2.0, 2.0, 2.0]), 0.0));
        let s12 = Shape::new(1, 2).unwrap();
        assert!(!region_contains(s12, &args(&[2.0, 0.5, 1.0]), 0.0));
        assert!(region_contains(s12, &args(&[2.0, 1.5, 1.6]), 0.0));
        // j = r degeneracy: Re(s_3) > 0 suffices
        assert!(region_contains(s22, &args(&[1.5, 1.5, 0.2]), 0.0));
        assert!(!region_contains(s22, &args(&[1.5, 1.5, -0.1]), 0.0));
    }

    #[test]
    fn hat_11_is_zeta_of_sum() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(1, 1).unwrap();
        let v = zeta_mt_hat_direct(shape, &args(&[2.0, 2.0]), &cfg).unwrap();
        let z4 = riemann_zeta(cr(4.0)).unwrap();
        assert!((v.value - z4).norm() <= 1e-10, "{} vs {}", v.value, z4);
        assert!(v.err_est <= 1e-9);
    }

    #[test]
    fn hat_12_matches_ez2() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(1, 2).unwrap();
        let v = zeta_mt_hat_direct(shape, &args(&[2.0, 2.0, 2.0]), &cfg).unwrap();
        let ez = zeta_ez_direct(&[cr(4.0), cr(2.0)], &cfg).unwrap();
        assert!(
            (v.value - ez.value).norm() <= v.err_est + ez.err_est + 1e-12,
            "{} vs {}",
            v.value,
            ez.value
        );
    }

    #[test]
    fn hat_22_matches_brute_force() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(2, 2).unwrap();
        let v = zeta_mt_hat_direct(shape, &args(&[2.0, 2.0, 2.0]), &cfg).unwrap();
        // naive double sum; shells decay like m^-4 so M = 2500 reaches ~1e-10
        let m = 2500usize;
        let mut acc = 0.0f64;
        for m1 in (1..=m).rev() {
            for m2 in 1..=m {
                acc += 1.0 / ((m1 * m1) as f64 * (m2 * m2) as f64 * ((m1 + m2) * (m1 + m2)) as f64);
            }
        }
        assert!((v.value.re - acc).abs() <= 1e-8, "{} vs {acc}", v.value.re);
        assert!(v.value.im.abs() < 1e-12);
    }

    #[test]
    fn ez_values() {
        let cfg = TruncationConfig::default();
        // Euler: zeta_EZ,2(1,2) = zeta(3); slow convergence is reported honestly
        let v = zeta_ez_direct(&[cr(1.0), cr(2.0)], &cfg).unwrap();
        let z3 = 1.2020569031595942;
        assert!((v.value.re - z3).abs() <= v.err_est + 1e-12);
        assert!(!v.warnings.is_empty(), "slow point must warn");
        // stuffle: zeta_EZ,2(2,2) = (zeta(2)^2 - zeta(4))/2 = pi^4/120
        let v22 = zeta_ez_direct(&[cr(2.0), cr(2.0)], &cfg).unwrap();
        assert!((v22.value.re - PI.powi(4) / 120.0).abs() <= v22.err_est + 1e-11);
        // r = 1 collapses to zeta
        let v1 = zeta_ez_direct(&[cr(2.0)], &cfg).unwrap();
        assert!((v1.value.re - PI * PI / 6.0).abs() <= 1e-12);
    }

    #[test]
    fn mt_values() {
        let cfg = TruncationConfig::default();
        // r = 1 collapses to a single sum
        let v = zeta_mt_direct(&[cr(2.0), cr(2.0)], &cfg).unwrap();
        let z4 = PI.powi(4) / 90.0;
        assert!((v.value.re - z4).abs() <= 1e-10);
        // j = r identity
        let shape = Shape::new(2, 2).unwrap();
        let hat = zeta_mt_hat_direct(shape, &args(&[2.0, 2.0, 2.0]), &cfg).unwrap();
        let mt = zeta_mt_direct(&[cr(2.0), cr(2.0), cr(2.0)], &cfg).unwrap();
        assert!((hat.value - mt.value).norm() <= 1e-12);
        // brute force at an asymmetric point
        let p = [cr(2.0), cr(2.0), cr(1.0)];
        let v2 = zeta_mt_direct(&p, &cfg).unwrap();
        let m = 3000usize;
        let mut acc = 0.0f64;
        for m1 in (1..=m).rev() {
            for m2 in 1..=m {
                acc += 1.0 / ((m1 * m1) as f64 * (m2 * m2) as f64 * (m1 + m2) as f64);
            }
        }
        assert!((v2.value.re - acc).abs() <= v2.err_est + 1e-6, "{} vs {acc}", v2.value.re);
    }

    #[test]
    fn av_values() {
        let cfg = TruncationConfig::default();
        let v = zeta_av_direct(&[cr(2.0), cr(2.0)], &cfg).unwrap();
        // r = 1: single sum, equals zeta(4)
        assert!((v.value.re - PI.powi(4) / 90.0).abs() <= 1e-10);

        // constrained double sum vs brute force
        let v2 = zeta_av_direct(&[cr(2.0), cr(2.0), cr(2.0)], &cfg).unwrap();
        let m = 2500usize;
        let mut acc = 0.0f64;
        for m1 in (1..m).rev() {
            for m2 in (m1 + 1)..=m {
                acc += 1.0 / ((m1 * m1) as f64 * (m2 * m2) as f64 * ((m1 + m2) * (m1 + m2)) as f64);
            }
        }
        assert!((v2.value.re - acc).abs() <= 1e-8);

        // decomposition: AV(s1,s2) + AV(s2,s1) + diagonal = MT
        let av12 = zeta_av_direct(&[cr(2.0), cr(2.0), cr(2.0)], &cfg).unwrap();
        let av21 = av12.value; // symmetric arguments
        let diag = riemann_zeta(cr(6.0)).unwrap() * 2f64.powf(-2.0);
        let mt = zeta_mt_direct(&[cr(2.0), cr(2.0), cr(2.0)], &cfg).unwrap();
        assert!(
            (av12.value + av21 + diag - mt.value).norm() <= 1e-8,
            "decomposition"
        );
    }

    #[test]
    fn out_of_region_rejected() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(1, 2).unwrap();
        assert!(matches!(
            zeta_mt_hat_direct(shape, &args(&[2.0, 0.5, 1.0]), &cfg),
            Err(Error::OutOfRegion { .. })
        ));
    }

    #[test]
    fn budget_exceeded() {
        let cfg = TruncationConfig { per_index_cap: 4000, target_tol: 1e-30, work_cap: 500 };
        let shape = Shape::new(2, 2).unwrap();
        assert!(matches!(
            zeta_mt_hat_direct(shape, &args(&[2.0, 2.0, 2.0]), &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn character_weights() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(1, 1).unwrap();
        let chars = characters_mod(4).unwrap();
        let tup = CharacterTuple::new(vec![chars[1].clone()]).unwrap();
        let v = l_mt_hat_direct(shape, &args(&[2.0, 2.0]), &tup, &cfg).unwrap();
        let l4 = l_line(cr(4.0), &chars[1]).unwrap();
        assert!((v.value - l4).norm() <= 1e-10, "{} vs {}", v.value, l4);
    }

    #[test]
    fn principal_mod1_degenerates_to_zeta() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(2, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let plain = zeta_mt_hat_direct(shape, &s, &cfg).unwrap();
        let weighted =
            l_mt_hat_direct(shape, &s, &CharacterTuple::all_trivial(2), &cfg).unwrap();
        assert!((plain.value - weighted.value).norm() <= 1e-12);
    }

    #[test]
    fn l_hat_brute_force_mod3() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(2, 2).unwrap();
        let chars = characters_mod(3).unwrap();
        let chi = chars[1].clone();
        let tup = CharacterTuple::new(vec![chi.clone(), chi.clone()]).unwrap();
        let v = l_mt_hat_direct(shape, &args(&[2.0, 2.0, 2.0]), &tup, &cfg).unwrap();
        let m = 2000usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for m1 in (1..=m).rev() {
            for m2 in 1..=m {
                let w = chi.eval(m1 % 3) * chi.eval(m2 % 3);
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                acc += w
                    / ((m1 * m1) as f64 * (m2 * m2) as f64 * ((m1 + m2) * (m1 + m2)) as f64);
            }
        }
        assert!((v.value - acc).norm() <= 1e-8, "{} vs {}", v.value, acc);
    }

    #[test]
    fn monotone_truncation() {
        // increasing the cap cannot increase err_est, and the M -> 2M value
        // drift stays inside the reported bound
        let shape = Shape::new(2, 2).unwrap();
        let s = args(&[1.6, 1.6, 0.5]);
        let tight = TruncationConfig { per_index_cap: 300, target_tol: 1e-14, work_cap: 1 << 32 };
        let wide = TruncationConfig { per_index_cap: 600, target_tol: 1e-14, work_cap: 1 << 32 };
        let a = zeta_mt_hat_direct(shape, &s, &tight).unwrap();
        let b = zeta_mt_hat_direct(shape, &s, &wide).unwrap();
        assert!(b.err_est <= a.err_est);
        assert!((a.value - b.value).norm() <= a.err_est, "drift {} vs bound {}", (a.value - b.value).norm(), a.err_est);
    }

    #[test]
    fn first_j_slots_symmetric() {
        let cfg = TruncationConfig::default();
        let shape = Shape::new(2, 3).unwrap();
        let a = zeta_mt_hat_direct(shape, &args(&[2.0, 2.5, 1.4, 2.0]), &cfg).unwrap();
        let b = zeta_mt_hat_direct(shape, &args(&[2.5, 2.0, 1.4, 2.0]), &cfg).unwrap();
        assert!((a.value - b.value).norm() <= 1e-10 * a.value.norm().max(1.0));
    }

    #[test]
    fn parallel_reduction_is_deterministic() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[1.8, 1.2, 2.2]);
        let cfg = TruncationConfig { per_index_cap: 3000, target_tol: 1e-12, work_cap: 1 << 33 };
        let v1 = zeta_mt_hat_direct(shape, &s, &cfg).unwrap();
        // same computation on a single-thread pool must be bit-identical
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let v2 = pool.install(|| zeta_mt_hat_direct(shape, &s, &cfg).unwrap());
        assert_eq!(v1.value, v2.value);
        assert_eq!(v1.err_est, v2.err_est);
    }
}

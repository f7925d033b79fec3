//! Analytic continuation of the hat-class functions: vertical-line
//! Mellin-Barnes quadrature and the rightward contour-shift recursion that
//! trades the integral representation for explicit residue terms plus a
//! remainder integral convergent in a larger region.
//!
//! The recursion lowers the rank r one step at a time (the chain
//! hat(j,r) -> hat(j,r-1) -> ... -> hat(j,j) = MT base), and the base is
//! continued by the same contour-shift pattern applied to its own integral
//! representation with kernel zeta(s_r - z) (or L(s_r - z, chi_r)).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dirichlet::{l_at_neg_int, l_line, totient, CharacterTuple};
use crate::error::{Error, Result};
use crate::series::{
    l_mt_hat_direct, region_contains, zeta_mt_hat_direct, ArgVector, EvalResult, Method, Shape,
    TruncationConfig,
};
use crate::singularity::{singular_hit, zeta_families, Family, PrincipalPattern, SINGULAR_TOL};
use crate::special::{
    complex_binomial, log_gamma, rational_to_f64, riemann_zeta, zeta_neg_odd,
};

/// Contour-shift and quadrature parameters.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationConfig {
    /// Shift depth N (rounded up to even where the formulas need it).
    pub shift_n: usize,
    /// Contour offset from the integers: shifted lines sit at Re z = N - epsilon.
    pub epsilon: f64,
    /// Truncation height of the vertical-line quadrature.
    pub quad_t: f64,
    /// Quadrature step.
    pub quad_h: f64,
    /// Recursion cap; 0 means the default r + 4.
    pub max_depth: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { shift_n: 6, epsilon: 0.5, quad_t: 40.0, quad_h: 0.02, max_depth: 0 }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must be in (0,1), got {}", self.epsilon)));
        }
        if self.quad_h > 0.1 {
            return Err(Error::Domain(format!("quad_h must be <= 0.1, got {}", self.quad_h)));
        }
        if self.quad_t < 20.0 {
            return Err(Error::Domain(format!("quad_t must be >= 20, got {}", self.quad_t)));
        }
        Ok(())
    }
}

/// Truncation plus continuation parameters bundled for the evaluators.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalConfig {
    pub trunc: TruncationConfig,
    pub cont: ContinuationConfig,
}

/// One summand of the shifted representation.
#[derive(Debug, Clone)]
pub struct MBTerm {
    pub kind: MBTermKind,
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MBTermKind {
    /// the 1/(s_{r+1}-1) residue (pole of zeta(-z) / principal L(-z) at z = -1)
    ResiduePoleS,
    /// the n = 0 residue of Gamma(-z)
    ResidueHalf,
    /// the n >= 1 residues of Gamma(-z), paired with zeta/L values at
    /// nonpositive integers
    ResidueZetaValue,
    /// the remainder integral on Re z = N - epsilon
    RemainderIntegral,
}

/// Which function family is being evaluated.
#[derive(Debug, Clone)]
pub enum Kind {
    Zeta,
    L(CharacterTuple),
}

impl Kind {
    fn lower(&self) -> Kind {
        match self {
            Kind::Zeta => Kind::Zeta,
            Kind::L(t) => Kind::L(t.drop_last()),
        }
    }

    fn atlas(&self, shape: Shape) -> Vec<Family> {
        match self {
            Kind::Zeta => zeta_families(shape),
            Kind::L(t) => crate::singularity::l_families(
                shape,
                &PrincipalPattern(t.principal_flags()),
            ),
        }
    }

    fn check(&self, shape: Shape) -> Result<()> {
        if let Kind::L(t) = self {
            if t.len() != shape.r() {
                return Err(Error::Domain(format!(
                    "need {} characters for rank {}, got {}",
                    shape.r(),
                    shape.r(),
                    t.len()
                )));
            }
        }
        Ok(())
    }
}

/// Tag-only version of [`Kind`] for the public dispatcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalKind {
    Zeta,
    L,
}

fn max_depth(cfg: &EvalConfig, r: usize) -> usize {
    if cfg.cont.max_depth > 0 {
        cfg.cont.max_depth
    } else {
        r + 4
    }
}

fn reciprocal_gamma(z: Complex64) -> Complex64 {
    match log_gamma(z) {
        Ok(lg) => (-lg).exp(),
        Err(_) => Complex64::new(0.0, 0.0), // pole of Gamma: reciprocal vanishes
    }
}

// ---------------------------------------------------------------------------
// vertical-line trapezoid quadrature
// ---------------------------------------------------------------------------

struct QuadOutcome {
    value: Complex64,
    err: f64,
    #[allow(dead_code)]
    decay_rate: f64,
    warnings: Vec<String>,
}

/// (1/2 pi i) integral over the vertical line Re z = c of f, by uniform
/// trapezoid with adaptive step halving and a decay-fitted tail estimate.
fn contour_integral<F>(c_abs: f64, t_cap: f64, h0: f64, tol: f64, f: F) -> Result<QuadOutcome>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    let node = |t: f64| Complex64::new(c_abs, t);
    let mut warnings = Vec::new();

    // probe the decay to pick the effective truncation height
    let mut probe_mag = Vec::new();
    for &t in &[8.0f64, 12.0, 16.0] {
        let (a, _) = f(node(t))?;
        let (b, _) = f(node(-t))?;
        probe_mag.push((t, 0.5 * (a.norm() + b.norm())));
    }
    let a_probe = {
        let (t1, m1) = probe_mag[0];
        let (t2, m2) = probe_mag[2];
        let rate = (m1.max(1e-290).ln() - m2.max(1e-290).ln()) / (t2 - t1);
        rate.clamp(0.5, 4.0)
    };
    let t_max = {
        let m8 = probe_mag[0].1.max(1e-30);
        let need = 8.0 + (m8 / (a_probe * (tol * 0.02).max(1e-14))).ln().max(0.0) / a_probe;
        need.clamp(20.0, t_cap)
    };

    let eval_grid = |h: f64, offset: f64| -> Result<(Complex64, f64, Vec<(f64, f64)>)> {
        // nodes t = offset + k h covering [-t_max, t_max]
        let k_lo = ((-t_max - offset) / h).ceil() as i64;
        let k_hi = ((t_max - offset) / h).floor() as i64;
        let idx: Vec<i64> = (k_lo..=k_hi).collect();
        let chunks: Vec<&[i64]> = idx.chunks(256).collect();
        let partial: Vec<Result<(Complex64, f64, Vec<(f64, f64)>)>> = chunks
            .par_iter()
            .map(|ch| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut err = 0.0;
                let mut mags = Vec::new();
                for &k in ch.iter() {
                    let t = offset + k as f64 * h;
                    let (v, e) = f(node(t))?;
                    acc += v;
                    err += e;
                    mags.push((t, v.norm()));
                }
                Ok((acc, err, mags))
            })
            .collect();
        let mut vals = Vec::new();
        let mut err = 0.0;
        let mut mags = Vec::new();
        for p in partial {
            let (v, e, m) = p?;
            vals.push(v);
            err += e;
            mags.extend(m);
        }
        Ok((crate::kahan::pairwise_reduce(vals), err, mags))
    };

    // start at 2 h0 and halve at least once: trapezoid halving reuses every
    // node, so reaching the configured step also yields the step-error
    // estimate for free
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut h = 2.0 * h0;
    let (sum0, err0, mut mags) = eval_grid(h, 0.0)?;
    let mut value = sum0 * h / two_pi;
    let mut inner_err = err0 * h / two_pi;
    let mut step_err = f64::INFINITY;
    for _refinement in 0..3 {
        let (sum_mid, err_mid, m2) = eval_grid(h, h / 2.0)?;
        let refined = value / 2.0 + sum_mid * (h / 2.0) / two_pi;
        step_err = (refined - value).norm();
        inner_err = inner_err / 2.0 + err_mid * (h / 2.0) / two_pi;
        value = refined;
        h /= 2.0;
        mags.extend(m2);
        if step_err <= tol / 4.0 {
            break;
        }
    }
    if step_err > tol / 4.0 {
        warnings.push(format!("quadrature step error {step_err:.3e} above target {tol:.3e}"));
    }

    // decay fit on the far half of the grid
    let lo = 0.5 * t_max;
    let hi = 0.9 * t_max;
    let pts: Vec<(f64, f64)> = mags
        .iter()
        .filter(|(t, m)| t.abs() >= lo && t.abs() <= hi && *m > 0.0)
        .map(|&(t, m)| (t.abs(), m.max(1e-290).ln()))
        .collect();
    let decay_rate = if pts.len() >= 4 {
        let n = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
        -(sxy / sxx)
    } else {
        a_probe
    };
    if !decay_rate.is_finite() || decay_rate < 0.2 {
        return Err(Error::QuadratureDiverged { rate: decay_rate });
    }

    // tail beyond t_max from the fitted decay: last 10% of the grid continues
    // geometrically with ratio exp(-a dT)
    let dt = 0.1 * t_max;
    let tail_sum: f64 = mags
        .iter()
        .filter(|(t, _)| t.abs() >= 0.9 * t_max)
        .map(|(_, m)| m)
        .sum::<f64>()
        * h
        / two_pi;
    let trunc_err = tail_sum / ((decay_rate * dt).exp() - 1.0).max(1e-6);

    Ok(QuadOutcome { value, err: step_err + trunc_err + inner_err, decay_rate, warnings })
}

// ---------------------------------------------------------------------------
// recursive evaluator
// ---------------------------------------------------------------------------

fn closed_form_rank1(kind: &Kind, s: &ArgVector) -> Result<EvalResult> {
    let w = s.s(1) + s.s(2);
    let value = match kind {
        Kind::Zeta => riemann_zeta(w)?,
        Kind::L(t) => l_line(w, t.get(0))?,
    };
    Ok(EvalResult {
        value,
        err_est: 1e-13 * value.norm().max(1.0),
        method: Method::ExactIdentity,
        depth: 0,
        warnings: Vec::new(),
    })
}

fn eval_rec(kind: &Kind, shape: Shape, s: &ArgVector, cfg: &EvalConfig, depth: usize) -> Result<EvalResult> {
    let r = shape.r();
    if depth > max_depth(cfg, r) {
        return Err(Error::DepthExceeded { depth, max: max_depth(cfg, r) });
    }
    s.check_arity(shape)?;
    kind.check(shape)?;
    if let Some(plane) = singular_hit(&kind.atlas(shape), s, SINGULAR_TOL) {
        return Err(Error::SingularPoint { plane });
    }
    if r == 1 {
        return closed_form_rank1(kind, s);
    }
    if region_contains(shape, s, 0.05) {
        return match kind {
            Kind::Zeta => zeta_mt_hat_direct(shape, s, &cfg.trunc),
            Kind::L(t) => l_mt_hat_direct(shape, s, t, &cfg.trunc),
        };
    }
    if shape.j() == shape.r() {
        base_shift(kind, r, s, cfg, depth, None, true).map(|(res, _)| res)
    } else {
        hat_shift(kind, shape, s, cfg, depth, None).map(|(res, _)| res)
    }
}

/// Smallest even N >= n_floor such that every pole line of the inner atlas
/// (in the shift variable z) stays strictly left of Re z = N - eps with
/// margin, as does the Gamma(s_last + z) pole string.
fn validity_shift_n(
    inner_atlas: &[Family],
    fixed: &dyn Fn(&[usize]) -> f64,
    re_s_last: f64,
    eps: f64,
    n_floor: usize,
) -> usize {
    let margin = 0.05;
    let mut need = -re_s_last + eps + margin; // Gamma(s_last + z) poles
    for f in inner_atlas {
        let cmax = f.cset.max_constant() as f64;
        let lin = fixed(&f.subset);
        need = need.max(cmax - lin + eps + margin);
    }
    let mut n = (need.ceil().max(2.0)) as usize;
    n = n.max(n_floor).max(2);
    if n % 2 == 1 {
        n += 1;
    }
    n
}

/// Nudge epsilon until no inner pole line sits within 1e-3 of the contour.
fn nudge_epsilon(
    inner_atlas: &[Family],
    fixed: &dyn Fn(&[usize]) -> f64,
    n: usize,
    mut eps: f64,
    extra_lines: &[f64],
    warnings: &mut Vec<String>,
) -> f64 {
    'retry: for _ in 0..8 {
        let contour = n as f64 - eps;
        for f in inner_atlas {
            let x = fixed(&f.subset) + contour; // Re of the linear form on the contour
            let c = x.round() as i64;
            if (x - c as f64).abs() < 1e-3 && f.cset.contains(c) {
                eps -= 1.5e-3;
                warnings.push(format!("contour nudged: inner pole line near Re z = {contour:.4}"));
                continue 'retry;
            }
        }
        for &line in extra_lines {
            if (contour - line).abs() < 1e-3 {
                eps -= 1.5e-3;
                warnings.push(format!("contour nudged: kernel pole near Re z = {contour:.4}"));
                continue 'retry;
            }
        }
        break;
    }
    eps
}

struct ShiftPieces {
    terms: Vec<MBTerm>,
    err: f64,
    depth: usize,
    warnings: Vec<String>,
}

impl ShiftPieces {
    fn total(&self) -> Complex64 {
        self.terms.iter().map(|t| t.value).sum()
    }
}

/// Contour-shift recursion one rank down the hat chain (j <= r-1).
fn hat_shift(
    kind: &Kind,
    shape: Shape,
    s: &ArgVector,
    cfg: &EvalConfig,
    depth: usize,
    n_override: Option<usize>,
) -> Result<(EvalResult, Vec<MBTerm>)> {
    let (j, r) = (shape.j(), shape.r());
    debug_assert!(j <= r - 1);
    let s_last = s.s(r + 1);
    let w0 = s.s(r) + s_last;
    let inner_shape = Shape::with_rank_cap(j, r - 1, r)?;
    let lowered = kind.lower();
    let inner_atlas = lowered.atlas(inner_shape);

    // Re part of each inner linear form with the w-slot frozen at w0
    let prefix: Vec<Complex64> = (1..r).map(|i| s.s(i)).collect();
    let fixed = |subset: &[usize]| -> f64 {
        let mut acc = w0.re; // every family contains the last slot (index r)
        for &i in subset {
            if i < r {
                acc += prefix[i - 1].re;
            }
        }
        acc
    };

    let mut warnings = Vec::new();
    let n_min = validity_shift_n(&inner_atlas, &fixed, s_last.re, cfg.cont.epsilon, 2);
    let n = match n_override {
        Some(n_ov) => {
            let n_ov = if n_ov % 2 == 1 { n_ov + 1 } else { n_ov.max(2) };
            if n_ov < n_min {
                warnings.push(format!("requested N = {n_ov} raised to {n_min} for validity"));
                n_min
            } else {
                n_ov
            }
        }
        None => {
            // prefer the smallest N that lets the contour evaluations run as
            // plain in-region direct sums
            let mut n = n_min;
            let cap = 2 * (r + 4);
            while n <= cap {
                let probe: Vec<Complex64> = prefix
                    .iter()
                    .copied()
                    .chain(std::iter::once(w0 + (n as f64 - cfg.cont.epsilon)))
                    .collect();
                if region_contains(inner_shape, &ArgVector::new(probe), 0.05) {
                    break;
                }
                n += 2;
            }
            n.min(cap.max(n_min)).max(n_min)
        }
    };
    let eps = nudge_epsilon(&inner_atlas, &fixed, n, cfg.cont.epsilon, &[], &mut warnings);

    let inner_eval = |w: Complex64, d: usize| -> Result<EvalResult> {
        let args: Vec<Complex64> =
            prefix.iter().copied().chain(std::iter::once(w)).collect();
        eval_rec(&lowered, inner_shape, &ArgVector::new(args), cfg, d)
    };

    let mut terms = Vec::new();
    let mut err = 0.0f64;
    let mut depth_used = 0usize;

    // z = -1 residue: 1/(s_{r+1} - 1) times the lowered function, with the
    // phi(q)/q factor and the principal indicator in the L case
    let pole_coeff = match kind {
        Kind::Zeta => Some(Complex64::new(1.0, 0.0)),
        Kind::L(t) => {
            let chi_r = t.get(r - 1);
            if chi_r.is_principal() {
                let q = chi_r.modulus();
                Some(Complex64::new(totient(q) as f64 / q as f64, 0.0))
            } else {
                None
            }
        }
    };
    if let Some(coeff) = pole_coeff {
        let f = inner_eval(w0 - 1.0, depth + 1)?;
        let c = coeff / (s_last - 1.0);
        terms.push(MBTerm { kind: MBTermKind::ResiduePoleS, value: c * f.value });
        err += c.norm() * f.err_est;
        depth_used = depth_used.max(f.depth);
    } else {
        terms.push(MBTerm { kind: MBTermKind::ResiduePoleS, value: Complex64::new(0.0, 0.0) });
    }

    // z = n residues of Gamma(-z)
    match kind {
        Kind::Zeta => {
            let f0 = inner_eval(w0, depth + 1)?;
            terms.push(MBTerm { kind: MBTermKind::ResidueHalf, value: -0.5 * f0.value });
            err += 0.5 * f0.err_est;
            depth_used = depth_used.max(f0.depth);
            for m in 1..=(n / 2) {
                let zv = rational_to_f64(&zeta_neg_odd(m)?);
                let coeff = complex_binomial(-s_last, 2 * m - 1) * zv;
                let f = inner_eval(w0 + (2 * m - 1) as f64, depth + 1)?;
                terms.push(MBTerm { kind: MBTermKind::ResidueZetaValue, value: coeff * f.value });
                err += coeff.norm() * f.err_est;
                depth_used = depth_used.max(f.depth);
            }
        }
        Kind::L(t) => {
            let chi_r = t.get(r - 1);
            for m in 0..n {
                let lv = l_at_neg_int(m, chi_r)?;
                let coeff = complex_binomial(-s_last, m) * lv;
                if coeff.norm_sqr() == 0.0 {
                    terms.push(MBTerm {
                        kind: if m == 0 { MBTermKind::ResidueHalf } else { MBTermKind::ResidueZetaValue },
                        value: Complex64::new(0.0, 0.0),
                    });
                    continue;
                }
                let f = inner_eval(w0 + m as f64, depth + 1)?;
                terms.push(MBTerm {
                    kind: if m == 0 { MBTermKind::ResidueHalf } else { MBTermKind::ResidueZetaValue },
                    value: coeff * f.value,
                });
                err += coeff.norm() * f.err_est;
                depth_used = depth_used.max(f.depth);
            }
        }
    }

    // remainder integral on Re z = N - eps
    let c_abs = n as f64 - eps;
    let inv_gamma_last = reciprocal_gamma(s_last);
    let node_cfg = EvalConfig {
        trunc: TruncationConfig {
            target_tol: (cfg.trunc.target_tol * 0.02).max(1e-13),
            ..cfg.trunc
        },
        cont: cfg.cont,
    };
    let quad_tol = cfg.trunc.target_tol.max(1e-12);
    let kernel = |z: Complex64| -> Result<(Complex64, f64)> {
        let gg = (log_gamma(s_last + z)? + log_gamma(-z)?).exp() * inv_gamma_last;
        let zv = match kind {
            Kind::Zeta => riemann_zeta(-z)?,
            Kind::L(t) => l_line(-z, t.get(r - 1))?,
        };
        let args: Vec<Complex64> =
            prefix.iter().copied().chain(std::iter::once(w0 + z)).collect();
        let f = eval_rec(&lowered, inner_shape, &ArgVector::new(args), &node_cfg, depth + 1)?;
        Ok((gg * zv * f.value, (gg * zv).norm() * f.err_est))
    };
    let quad = contour_integral(c_abs, cfg.cont.quad_t, cfg.cont.quad_h, quad_tol, kernel)?;
    terms.push(MBTerm { kind: MBTermKind::RemainderIntegral, value: quad.value });
    err += quad.err;
    warnings.extend(quad.warnings);

    let pieces = ShiftPieces { terms, err, depth: depth_used + 1, warnings };
    let res = EvalResult {
        value: pieces.total(),
        err_est: pieces.err,
        method: Method::Shifted,
        depth: pieces.depth,
        warnings: pieces.warnings.clone(),
    };
    Ok((res, pieces.terms))
}

/// Contour-shift continuation of the Mordell-Tornheim base (j = r), lowering
/// the rank with kernel zeta(s_r - z) (or L(s_r - z, chi_r)).
#[allow(clippy::too_many_arguments)]
fn base_shift(
    kind: &Kind,
    r: usize,
    s: &ArgVector,
    cfg: &EvalConfig,
    depth: usize,
    n_floor: Option<usize>,
    allow_perturb: bool,
) -> Result<(EvalResult, Vec<MBTerm>)> {
    debug_assert!(r >= 2);
    let s_r = s.s(r);
    let s_last = s.s(r + 1);

    // the Gamma(1 - s_r) / zeta(s_r - n) pair degenerates at positive integer
    // s_r; evaluate at perturbed points and Richardson-extrapolate
    let pole_bearing = match kind {
        Kind::Zeta => true,
        Kind::L(t) => t.get(r - 1).is_principal(),
    };
    if allow_perturb && pole_bearing && s_r.im.abs() < 5e-3 {
        let m0 = s_r.re.round();
        if m0 >= 1.0 && (s_r.re - m0).abs() < 5e-3 {
            return perturbed_base(kind, r, s, cfg, depth, m0 as usize);
        }
    }

    let inner_shape = Shape::with_rank_cap(r - 1, r - 1, r)?;
    let lowered = kind.lower();
    let inner_atlas = lowered.atlas(inner_shape);
    let prefix: Vec<Complex64> = (1..r).map(|i| s.s(i)).collect();
    let fixed = |subset: &[usize]| -> f64 {
        let mut acc = s_last.re;
        for &i in subset {
            if i < r {
                acc += prefix[i - 1].re;
            }
        }
        acc
    };

    let mut warnings = Vec::new();
    let n_min = validity_shift_n(&inner_atlas, &fixed, s_last.re, cfg.cont.epsilon, n_floor.unwrap_or(2));
    let mut n = n_min;
    let cap = 2 * (r + 4);
    while n <= cap {
        let probe: Vec<Complex64> = prefix
            .iter()
            .copied()
            .chain(std::iter::once(s_last + (n as f64 - cfg.cont.epsilon)))
            .collect();
        if region_contains(inner_shape, &ArgVector::new(probe), 0.05) {
            break;
        }
        n += 2;
    }
    n = n.clamp(n_min, cap.max(n_min));
    // the zeta(s_r - z) pole sits at z = s_r - 1; keep it off the contour
    let eps = nudge_epsilon(&inner_atlas, &fixed, n, cfg.cont.epsilon, &[s_r.re - 1.0], &mut warnings);
    let contour = n as f64 - eps;

    let inner_eval = |w: Complex64, d: usize| -> Result<EvalResult> {
        let args: Vec<Complex64> =
            prefix.iter().copied().chain(std::iter::once(w)).collect();
        eval_rec(&lowered, inner_shape, &ArgVector::new(args), cfg, d)
    };

    let mut terms = Vec::new();
    let mut err = 0.0f64;
    let mut depth_used = 0usize;

    // residue at z = s_r - 1, picked up only when the pole was crossed
    let include_t1 = pole_bearing && s_r.re - 1.0 < contour;
    if include_t1 {
        let coeff0 = match kind {
            Kind::Zeta => Complex64::new(1.0, 0.0),
            Kind::L(t) => {
                let q = t.get(r - 1).modulus();
                Complex64::new(totient(q) as f64 / q as f64, 0.0)
            }
        };
        let lg = log_gamma(s_r + s_last - 1.0)? + log_gamma(Complex64::new(1.0, 0.0) - s_r)?;
        let coeff = coeff0 * lg.exp() * reciprocal_gamma(s_last);
        let f = inner_eval(s_r + s_last - 1.0, depth + 1)?;
        terms.push(MBTerm { kind: MBTermKind::ResiduePoleS, value: coeff * f.value });
        err += coeff.norm() * f.err_est;
        depth_used = depth_used.max(f.depth);
    } else {
        terms.push(MBTerm { kind: MBTermKind::ResiduePoleS, value: Complex64::new(0.0, 0.0) });
    }

    // residues at z = n from Gamma(-z)
    for m in 0..n {
        let zv = match kind {
            Kind::Zeta => riemann_zeta(s_r - m as f64)?,
            Kind::L(t) => l_line(s_r - m as f64, t.get(r - 1))?,
        };
        let coeff = complex_binomial(-s_last, m) * zv;
        let f = inner_eval(s_last + m as f64, depth + 1)?;
        terms.push(MBTerm {
            kind: if m == 0 { MBTermKind::ResidueHalf } else { MBTermKind::ResidueZetaValue },
            value: coeff * f.value,
        });
        err += coeff.norm() * f.err_est;
        depth_used = depth_used.max(f.depth);
    }

    // remainder integral
    let inv_gamma_last = reciprocal_gamma(s_last);
    let node_cfg = EvalConfig {
        trunc: TruncationConfig {
            target_tol: (cfg.trunc.target_tol * 0.02).max(1e-13),
            ..cfg.trunc
        },
        cont: cfg.cont,
    };
    let quad_tol = cfg.trunc.target_tol.max(1e-12);
    let kernel = |z: Complex64| -> Result<(Complex64, f64)> {
        let gg = (log_gamma(s_last + z)? + log_gamma(-z)?).exp() * inv_gamma_last;
        let zv = match kind {
            Kind::Zeta => riemann_zeta(s_r - z)?,
            Kind::L(t) => l_line(s_r - z, t.get(r - 1))?,
        };
        let args: Vec<Complex64> =
            prefix.iter().copied().chain(std::iter::once(s_last + z)).collect();
        let f = eval_rec(&lowered, inner_shape, &ArgVector::new(args), &node_cfg, depth + 1)?;
        Ok((gg * zv * f.value, (gg * zv).norm() * f.err_est))
    };
    let quad = contour_integral(contour, cfg.cont.quad_t, cfg.cont.quad_h, quad_tol, kernel)?;
    terms.push(MBTerm { kind: MBTermKind::RemainderIntegral, value: quad.value });
    err += quad.err;
    warnings.extend(quad.warnings);

    let pieces = ShiftPieces { terms, err, depth: depth_used + 1, warnings };
    let res = EvalResult {
        value: pieces.total(),
        err_est: pieces.err,
        method: Method::Shifted,
        depth: pieces.depth,
        warnings: pieces.warnings.clone(),
    };
    Ok((res, pieces.terms))
}

/// Richardson extrapolation across the removable degeneracy at integer s_r.
fn perturbed_base(
    kind: &Kind,
    r: usize,
    s: &ArgVector,
    cfg: &EvalConfig,
    depth: usize,
    m0: usize,
) -> Result<(EvalResult, Vec<MBTerm>)> {
    let h = 2e-2;
    let eval_at = |dx: f64| -> Result<EvalResult> {
        let mut args = s.entries().to_vec();
        args[r - 1] += dx;
        base_shift(kind, r, &ArgVector::new(args), cfg, depth, Some(m0), false)
            .map(|(res, _)| res)
    };
    let retry_offsets = [1.0f64, 0.37];
    let mut last_err: Option<Error> = None;
    for scale in retry_offsets {
        let hh = h * scale;
        let attempt = (|| -> Result<(EvalResult, Vec<MBTerm>)> {
            let fp = eval_at(hh)?;
            let fm = eval_at(-hh)?;
            let fp2 = eval_at(hh / 2.0)?;
            let fm2 = eval_at(-hh / 2.0)?;
            let a1 = 0.5 * (fp.value + fm.value);
            let a2 = 0.5 * (fp2.value + fm2.value);
            let value = (4.0 * a2 - a1) / 3.0;
            let inner_err = fp.err_est.max(fm.err_est).max(fp2.err_est).max(fm2.err_est);
            let mut warnings = vec![format!(
                "evaluated by Richardson extrapolation around s_{r} = {m0} (step {hh:.3})"
            )];
            warnings.extend(fp2.warnings.clone());
            let res = EvalResult {
                value,
                err_est: inner_err + (a2 - a1).norm() / 3.0,
                method: Method::Shifted,
                depth: fp.depth.max(fm.depth) + 1,
                warnings,
            };
            let terms = vec![MBTerm { kind: MBTermKind::ResiduePoleS, value }];
            Ok((res, terms))
        })();
        match attempt {
            Ok(out) => return Ok(out),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// The Lemma-style integrand of the rank-lowering representation:
/// Gamma(s_{r+1}+z) Gamma(-z) / Gamma(s_{r+1}) times the lowered function at
/// (s_1..s_{r-1}, s_r+s_{r+1}+z) times zeta(-z).
pub fn mb_integrand_zeta(shape: Shape, s: &ArgVector, z: Complex64, cfg: &EvalConfig) -> Result<Complex64> {
    s.check_arity(shape)?;
    let (j, r) = (shape.j(), shape.r());
    if j > r - 1 {
        return Err(Error::Domain("integrand needs j <= r-1".into()));
    }
    let s_last = s.s(r + 1);
    // pole guards on the kernel factors
    if z.im.abs() <= 1e-12 && (z.re - z.re.round()).abs() <= 1e-12 && z.re.round() >= 0.0 {
        return Err(Error::Pole { at: z });
    }
    if (z + 1.0).norm() <= 1e-12 {
        return Err(Error::Pole { at: z });
    }
    let sz = s_last + z;
    if sz.im.abs() <= 1e-12 && (sz.re - sz.re.round()).abs() <= 1e-12 && sz.re.round() <= 0.0 {
        return Err(Error::Pole { at: z });
    }
    let gg = (log_gamma(s_last + z)? + log_gamma(-z)?).exp() * reciprocal_gamma(s_last);
    let inner_shape = Shape::with_rank_cap(j, r - 1, r)?;
    let args: Vec<Complex64> = (1..r)
        .map(|i| s.s(i))
        .chain(std::iter::once(s.s(r) + s_last + z))
        .collect();
    let f = eval_rec(&Kind::Zeta, inner_shape, &ArgVector::new(args), cfg, 1)?;
    Ok(gg * f.value * riemann_zeta(-z)?)
}

/// Evaluate the hat-class function through the unshifted vertical-line
/// integral, as a cross-check of the integral representation. Requires
/// Re(s_{r+1}) > 1 so the strip (-Re s_{r+1}, -1) is nonempty.
pub fn mb_quadrature_eval(shape: Shape, s: &ArgVector, cfg: &EvalConfig) -> Result<EvalResult> {
    s.check_arity(shape)?;
    cfg.cont.validate()?;
    let (j, r) = (shape.j(), shape.r());
    if j > r - 1 {
        return Err(Error::Domain("representation needs j <= r-1".into()));
    }
    let s_last = s.s(r + 1);
    if s_last.re <= 1.0 {
        return Err(Error::NoValidContour { re_s_last: s_last.re });
    }
    if !region_contains(shape, s, 0.05) {
        return Err(Error::OutOfRegion { margin: 0.05 });
    }
    let c_abs = -(1.0 + s_last.re) / 2.0;
    let inner_shape = Shape::with_rank_cap(j, r - 1, r)?;
    let prefix: Vec<Complex64> = (1..r).map(|i| s.s(i)).collect();
    let w0 = s.s(r) + s_last;
    let inv_gamma_last = reciprocal_gamma(s_last);
    let node_cfg = EvalConfig {
        trunc: TruncationConfig {
            target_tol: (cfg.trunc.target_tol * 0.02).max(1e-13),
            ..cfg.trunc
        },
        cont: cfg.cont,
    };
    let kernel = |z: Complex64| -> Result<(Complex64, f64)> {
        let gg = (log_gamma(s_last + z)? + log_gamma(-z)?).exp() * inv_gamma_last;
        let zv = riemann_zeta(-z)?;
        let args: Vec<Complex64> =
            prefix.iter().copied().chain(std::iter::once(w0 + z)).collect();
        let f = eval_rec(&Kind::Zeta, inner_shape, &ArgVector::new(args), &node_cfg, 1)?;
        Ok((gg * zv * f.value, (gg * zv).norm() * f.err_est))
    };
    let quad = contour_integral(
        c_abs,
        cfg.cont.quad_t,
        cfg.cont.quad_h,
        cfg.trunc.target_tol.max(1e-12),
        kernel,
    )?;
    Ok(EvalResult {
        value: quad.value,
        err_est: quad.err,
        method: Method::MbQuadrature,
        depth: 1,
        warnings: quad.warnings,
    })
}

/// Fitted exponential decay rate of the integrand along a vertical line,
/// sampled over Im z in [lo, hi].
pub fn integrand_decay_rate(
    shape: Shape,
    s: &ArgVector,
    re_z: f64,
    lo: f64,
    hi: f64,
    cfg: &EvalConfig,
) -> Result<f64> {
    let samples = 21usize;
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let v = mb_integrand_zeta(shape, s, Complex64::new(re_z, t), cfg)?;
        pts.push((t, v.norm().max(1e-290).ln()));
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    Ok(-(sxy / sxx))
}

/// Shifted-contour evaluation of the hat-class zeta function at the
/// configured shift depth N. Defined off the candidate singular set.
pub fn shifted_eval_zeta(shape: Shape, s: &ArgVector, cfg: &EvalConfig) -> Result<EvalResult> {
    cfg.cont.validate()?;
    s.check_arity(shape)?;
    if shape.j() > shape.r() - 1 {
        return Err(Error::Domain("shifted evaluation needs j <= r-1".into()));
    }
    if let Some(plane) = singular_hit(&zeta_families(shape), s, SINGULAR_TOL) {
        return Err(Error::SingularPoint { plane });
    }
    hat_shift(&Kind::Zeta, shape, s, cfg, 0, Some(cfg.cont.shift_n)).map(|(res, _)| res)
}

/// Term decomposition of the shifted representation (residue pieces plus the
/// remainder integral), for diagnostics and tests.
pub fn shifted_terms_zeta(shape: Shape, s: &ArgVector, cfg: &EvalConfig) -> Result<Vec<MBTerm>> {
    cfg.cont.validate()?;
    s.check_arity(shape)?;
    if let Some(plane) = singular_hit(&zeta_families(shape), s, SINGULAR_TOL) {
        return Err(Error::SingularPoint { plane });
    }
    hat_shift(&Kind::Zeta, shape, s, cfg, 0, Some(cfg.cont.shift_n)).map(|(_, t)| t)
}

/// Shifted-contour evaluation of the character-weighted class.
pub fn shifted_eval_l(
    shape: Shape,
    s: &ArgVector,
    chis: &CharacterTuple,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.cont.validate()?;
    s.check_arity(shape)?;
    let kind = Kind::L(chis.clone());
    kind.check(shape)?;
    if shape.j() > shape.r() - 1 {
        return Err(Error::Domain("shifted evaluation needs j <= r-1".into()));
    }
    if let Some(plane) = singular_hit(&kind.atlas(shape), s, SINGULAR_TOL) {
        return Err(Error::SingularPoint { plane });
    }
    hat_shift(&kind, shape, s, cfg, 0, Some(cfg.cont.shift_n)).map(|(res, _)| res)
}

/// Continuation of the Mordell-Tornheim base function of rank r to the whole
/// argument space (off the candidate singular set).
pub fn mt_base_continuation(r: usize, s: &ArgVector, cfg: &EvalConfig) -> Result<EvalResult> {
    cfg.cont.validate()?;
    if r < 1 {
        return Err(Error::Domain("rank must be >= 1".into()));
    }
    let shape = Shape::with_rank_cap(r, r, r.max(crate::series::RANK_CAP))?;
    s.check_arity(shape)?;
    eval_rec(&Kind::Zeta, shape, s, cfg, 0)
}

/// Continuation of the L-function Mordell-Tornheim base of rank r.
pub fn l_base_continuation(
    r: usize,
    s: &ArgVector,
    chis: &CharacterTuple,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.cont.validate()?;
    let shape = Shape::with_rank_cap(r, r, r.max(crate::series::RANK_CAP))?;
    s.check_arity(shape)?;
    eval_rec(&Kind::L(chis.clone()), shape, s, cfg, 0)
}

/// Route an evaluation: direct summation inside the convergence region (with
/// margin), the shifted recursion outside it, refusing points on the
/// candidate singular set.
pub fn eval_auto(
    kind: EvalKind,
    shape: Shape,
    s: &ArgVector,
    chis: Option<&CharacterTuple>,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.cont.validate()?;
    let kind = match kind {
        EvalKind::Zeta => Kind::Zeta,
        EvalKind::L => {
            let t = chis.ok_or_else(|| Error::Domain("L evaluation needs characters".into()))?;
            Kind::L(t.clone())
        }
    };
    eval_rec(&kind, shape, s, cfg, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::characters_mod;
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

    fn cfg() -> EvalConfig {
        EvalConfig::default()
    }

    #[test]
    fn integrand_pole_guards() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            mb_integrand_zeta(shape, &s, c(0.0, 0.0), &cfg()),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            mb_integrand_zeta(shape, &s, c(-1.0, 0.0), &cfg()),
            Err(Error::Pole { .. })
        ));
        // generic point on the line Re z = -1.5 is finite, and matches the
        // factor-by-factor composition
        let z = c(-1.5, 0.0);
        let v = mb_integrand_zeta(shape, &s, z, &cfg()).unwrap();
        let s_last = cr(2.0);
        let gg = (log_gamma(s_last + z).unwrap() + log_gamma(-z).unwrap()
            - log_gamma(s_last).unwrap())
        .exp();
        let inner = riemann_zeta(cr(2.0) + cr(4.0) + z).unwrap();
        let expect = gg * inner * riemann_zeta(-z).unwrap();
        assert!((v - expect).norm() <= 1e-10 * expect.norm());
    }

    #[test]
    fn no_valid_contour() {
        let shape = Shape::new(1, 2).unwrap();
        assert!(matches!(
            mb_quadrature_eval(shape, &args(&[2.0, 2.0, 0.5]), &cfg()),
            Err(Error::NoValidContour { .. })
        ));
    }

    #[test]
    fn lemma_quadrature_matches_direct_12() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let q = mb_quadrature_eval(shape, &s, &cfg()).unwrap();
        let d = zeta_mt_hat_direct(shape, &s, &cfg().trunc).unwrap();
        assert!((q.value - d.value).norm() <= 1e-6, "{} vs {}", q.value, d.value);
    }

    #[test]
    fn shifted_matches_direct_12() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let d = zeta_mt_hat_direct(shape, &s, &cfg().trunc).unwrap();
        for n in [4usize, 6, 8] {
            let mut cf = cfg();
            cf.cont.shift_n = n;
            let v = shifted_eval_zeta(shape, &s, &cf).unwrap();
            assert!(
                (v.value - d.value).norm() <= 1e-6,
                "N={n}: {} vs {}",
                v.value,
                d.value
            );
        }
    }

    #[test]
    fn shifted_out_of_region_n_independent() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, -0.5]);
        let mut v = Vec::new();
        for n in [4usize, 6, 8] {
            let mut cf = cfg();
            cf.cont.shift_n = n;
            v.push(shifted_eval_zeta(shape, &s, &cf).unwrap().value);
        }
        assert!((v[0] - v[1]).norm() <= 1e-6, "{} vs {}", v[0], v[1]);
        assert!((v[1] - v[2]).norm() <= 1e-6);
        assert!(v[0].is_finite());
    }

    #[test]
    fn residue_at_s_last_one() {
        // (s_3 - 1) * hat(1,2)(2,2,s_3) -> hat(1,1)(2;2) = zeta(4)
        let shape = Shape::new(1, 2).unwrap();
        let mut est = Vec::new();
        for t in [1e-2, 1e-3, 1e-4] {
            let s = ArgVector::new(vec![cr(2.0), cr(2.0), cr(1.0 + t)]);
            let v = eval_auto(EvalKind::Zeta, shape, &s, None, &cfg()).unwrap();
            est.push(cr(t) * v.value);
        }
        let extrap = ((est[2] * 1e-3 - est[1] * 1e-4) / (1e-3 - 1e-4)).re;
        let z4 = PI.powi(4) / 90.0;
        assert!((extrap - z4).abs() <= 1e-5, "{extrap} vs {z4}");
    }

    #[test]
    fn tornheim_value() {
        let v = mt_base_continuation(2, &args(&[1.0, 1.0, 1.0]), &cfg()).unwrap();
        let expect = 2.0 * 1.2020569031595942;
        assert!((v.value.re - expect).abs() <= 1e-5, "{} vs {expect}", v.value.re);
        assert!(v.value.im.abs() <= 1e-6);
        assert!(!v.warnings.is_empty(), "perturbation should be recorded");
    }

    #[test]
    fn base_in_region_agreement() {
        let v = mt_base_continuation(2, &args(&[2.0, 2.0, 2.0]), &cfg()).unwrap();
        let d = crate::series::zeta_mt_direct(&[cr(2.0), cr(2.0), cr(2.0)], &cfg().trunc).unwrap();
        assert!((v.value - d.value).norm() <= 1e-8);
        // rank 1 collapse
        let v1 = mt_base_continuation(1, &args(&[0.5, 0.7]), &cfg()).unwrap();
        let z = riemann_zeta(cr(1.2)).unwrap();
        assert!((v1.value - z).norm() <= 1e-12);
        assert_eq!(v1.method, Method::ExactIdentity);
    }

    #[test]
    fn base_out_of_region_forced_shift() {
        // out-of-region MT base point, still off the atlas
        let v = mt_base_continuation(2, &args(&[2.0, 1.4, -0.7]), &cfg()).unwrap();
        assert!(v.value.is_finite());
        assert_eq!(v.method, Method::Shifted);
        // N-stability
        let mut cf = cfg();
        cf.cont.shift_n = 8;
        let v2 = mt_base_continuation(2, &args(&[2.0, 1.4, -0.7]), &cf).unwrap();
        assert!((v.value - v2.value).norm() <= 1e-6, "{} vs {}", v.value, v2.value);
    }

    #[test]
    fn shifted_l_degenerates_to_zeta_for_trivial_characters() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, -0.5]);
        let tup = CharacterTuple::all_trivial(2);
        let vl = shifted_eval_l(shape, &s, &tup, &cfg()).unwrap();
        let vz = shifted_eval_zeta(shape, &s, &cfg()).unwrap();
        assert!((vl.value - vz.value).norm() <= 1e-10, "{} vs {}", vl.value, vz.value);
    }

    #[test]
    fn shifted_l_matches_direct_mod4() {
        let shape = Shape::new(1, 2).unwrap();
        let chars = characters_mod(4).unwrap();
        let tup = CharacterTuple::new(vec![chars[1].clone(), chars[1].clone()]).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let d = l_mt_hat_direct(shape, &s, &tup, &cfg().trunc).unwrap();
        let v = shifted_eval_l(shape, &s, &tup, &cfg()).unwrap();
        assert!((v.value - d.value).norm() <= 1e-6, "{} vs {}", v.value, d.value);
        // entire: finite and N-stable at an out-of-region point
        let s2 = args(&[2.0, 2.0, -0.5]);
        let v2 = shifted_eval_l(shape, &s2, &tup, &cfg()).unwrap();
        let mut cf = cfg();
        cf.cont.shift_n = 8;
        let v3 = shifted_eval_l(shape, &s2, &tup, &cf).unwrap();
        assert!((v2.value - v3.value).norm() <= 1e-6);
    }

    #[test]
    fn eval_auto_routes_and_refuses() {
        let shape = Shape::new(1, 2).unwrap();
        let inside = eval_auto(EvalKind::Zeta, shape, &args(&[2.0, 2.0, 2.0]), None, &cfg()).unwrap();
        assert_eq!(inside.method, Method::Direct);
        let outside = eval_auto(EvalKind::Zeta, shape, &args(&[2.0, 2.0, -0.5]), None, &cfg()).unwrap();
        assert_eq!(outside.method, Method::Shifted);
        assert!(outside.depth >= 1);
        let singular = eval_auto(EvalKind::Zeta, shape, &args(&[2.0, 2.0, 1.0]), None, &cfg());
        match singular {
            Err(Error::SingularPoint { plane }) => {
                assert_eq!(plane.subset, vec![3]);
                assert_eq!(plane.constant, 1);
            }
            other => panic!("expected SingularPoint, got {other:?}"),
        }
    }

    #[test]
    fn shifted_terms_decompose() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let terms = shifted_terms_zeta(shape, &s, &cfg()).unwrap();
        let total: Complex64 = terms.iter().map(|t| t.value).sum();
        let d = zeta_mt_hat_direct(shape, &s, &cfg().trunc).unwrap();
        assert!((total - d.value).norm() <= 1e-6);
        assert!(terms.iter().any(|t| t.kind == MBTermKind::ResiduePoleS));
        assert!(terms.iter().any(|t| t.kind == MBTermKind::ResidueHalf));
        assert!(terms.iter().any(|t| t.kind == MBTermKind::ResidueZetaValue));
        assert!(terms.iter().any(|t| t.kind == MBTermKind::RemainderIntegral));
    }

    #[test]
    fn integrand_decays_exponentially() {
        let shape = Shape::new(1, 2).unwrap();
        let s = args(&[2.0, 2.0, 2.0]);
        let rate = integrand_decay_rate(shape, &s, 5.5, 10.0, 30.0, &cfg()).unwrap();
        assert!(rate >= 1.4, "decay rate {rate}");
    }
}

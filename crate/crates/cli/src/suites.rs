//! The `check` subcommand: seeded point sampling and the per-suite
//! consistency drivers with their documented tolerances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use mzeta::continuation::{eval_auto, mb_quadrature_eval, shifted_eval_zeta, EvalConfig, EvalKind};
use mzeta::dirichlet::CharacterTuple;
use mzeta::series::{region_contains, zeta_mt_hat_direct, ArgVector, Shape};
use mzeta::singularity::{hyperplanes_zeta, phi_factor, phi_planes, Hyperplane};
use mzeta::Complex64;

use crate::{parse_chars, Overrides};

const MB_TOL: f64 = 1e-6;
const SHIFT_TOL: f64 = 1e-6;
const RESIDUE_TOL: f64 = 1e-5;
const ENTIRE_REL_JUMP: f64 = 1e-4;
const PHI_SPREAD: f64 = 10.0;

struct SuiteRow {
    label: String,
    delta: f64,
    tol: f64,
}

impl SuiteRow {
    fn pass(&self) -> bool {
        self.delta.is_finite() && self.delta <= self.tol
    }
}

fn sample_in_region(shape: Shape, rng: &mut ChaCha8Rng) -> ArgVector {
    loop {
        let v: Vec<Complex64> = (0..shape.arity())
            .map(|_| Complex64::new(rng.gen_range(1.6..2.6), rng.gen_range(-0.3..0.3)))
            .collect();
        let s = ArgVector::new(v);
        if region_contains(shape, &s, 0.3) {
            return s;
        }
    }
}

fn sample_out_of_region(shape: Shape, rng: &mut ChaCha8Rng) -> ArgVector {
    let fams = mzeta::singularity::zeta_families(shape);
    loop {
        let mut v: Vec<Complex64> = (0..shape.r())
            .map(|_| Complex64::new(rng.gen_range(1.7..2.5), rng.gen_range(-0.2..0.2)))
            .collect();
        v.push(Complex64::new(rng.gen_range(-1.2..-0.2), rng.gen_range(-0.2..0.2)));
        let s = ArgVector::new(v);
        if !region_contains(shape, &s, 0.05)
            && mzeta::singularity::singular_hit(&fams, &s, 1e-3).is_none()
        {
            return s;
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_check(
    suite: &str,
    j: usize,
    r: usize,
    seed: u64,
    n_points: usize,
    chars: Option<&str>,
    tol: Option<f64>,
    csv: bool,
    overrides: &Overrides,
) -> i32 {
    let shape = match Shape::new(j, r) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    if j > r.saturating_sub(1) && suite != "phi" {
        eprintln!("suites need j <= r-1");
        return 1;
    }
    let cfg = crate::build_config(overrides, tol, None, None);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = match suite {
        "mb" => suite_mb(shape, n_points, &mut rng, &cfg),
        "shift" => suite_shift(shape, n_points, &mut rng, &cfg),
        "residue" => suite_residue(shape, n_points, &mut rng, &cfg),
        "entire" => {
            let spec = match chars {
                Some(s) => s,
                None => {
                    eprintln!("suite entire needs --chars");
                    return 1;
                }
            };
            let tuple = match parse_chars(spec, r) {
                Ok(t) => t,
                Err(msg) => {
                    eprintln!("bad --chars: {msg}");
                    return 1;
                }
            };
            if tuple.principal_flags().iter().any(|&f| f) {
                eprintln!("suite entire needs all characters non-principal");
                return 1;
            }
            suite_entire(shape, n_points, &tuple, &mut rng, &cfg)
        }
        "phi" => suite_phi(shape, n_points, &mut rng, &cfg),
        _ => unreachable!("clap enum"),
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => {
            let (code, payload) = crate::error_report(&e);
            println!("{payload}");
            return code;
        }
    };
    let pass = rows.iter().all(SuiteRow::pass);
    let max_delta = rows.iter().map(|r| r.delta).fold(0.0f64, f64::max);
    if csv {
        println!("suite,label,delta,tol,pass");
        for row in &rows {
            println!("{suite},{},{:.6e},{:.1e},{}", row.label, row.delta, row.tol, row.pass());
        }
    } else {
        let points: Vec<Value> = rows
            .iter()
            .map(|r| json!({ "label": r.label, "delta": r.delta, "tol": r.tol, "pass": r.pass() }))
            .collect();
        println!(
            "{}",
            json!({ "suite": suite, "j": j, "r": r, "seed": seed, "points": points,
                     "max_delta": max_delta, "pass": pass })
        );
    }
    if pass {
        0
    } else {
        1
    }
}

fn suite_mb(
    shape: Shape,
    n: usize,
    rng: &mut ChaCha8Rng,
    cfg: &EvalConfig,
) -> mzeta::Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for k in 0..n {
        let s = sample_in_region(shape, rng);
        let d = zeta_mt_hat_direct(shape, &s, &cfg.trunc)?;
        let q = mb_quadrature_eval(shape, &s, cfg)?;
        rows.push(SuiteRow {
            label: format!("point-{k}"),
            delta: (d.value - q.value).norm(),
            tol: MB_TOL,
        });
    }
    Ok(rows)
}

fn suite_shift(
    shape: Shape,
    n: usize,
    rng: &mut ChaCha8Rng,
    cfg: &EvalConfig,
) -> mzeta::Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for k in 0..n {
        let s = sample_in_region(shape, rng);
        let d = zeta_mt_hat_direct(shape, &s, &cfg.trunc)?;
        for n_shift in [4usize, 6, 8] {
            let mut cf = *cfg;
            cf.cont.shift_n = n_shift;
            let v = shifted_eval_zeta(shape, &s, &cf)?;
            rows.push(SuiteRow {
                label: format!("in-region-{k}-N{n_shift}"),
                delta: (v.value - d.value).norm(),
                tol: SHIFT_TOL,
            });
        }
    }
    for k in 0..(2 * n) {
        let s = sample_out_of_region(shape, rng);
        let mut cf = *cfg;
        cf.cont.shift_n = 6;
        let a = shifted_eval_zeta(shape, &s, &cf)?;
        cf.cont.shift_n = 8;
        let b = shifted_eval_zeta(shape, &s, &cf)?;
        rows.push(SuiteRow {
            label: format!("off-region-{k}-N6v8"),
            delta: (a.value - b.value).norm(),
            tol: SHIFT_TOL,
        });
    }
    Ok(rows)
}

fn suite_residue(
    shape: Shape,
    n: usize,
    rng: &mut ChaCha8Rng,
    cfg: &EvalConfig,
) -> mzeta::Result<Vec<SuiteRow>> {
    let (j, r) = (shape.j(), shape.r());
    let mut rows = Vec::new();
    for k in 0..n {
        let base = sample_in_region(shape, rng);
        // residue of the pole at s_{r+1} = 1 equals the rank-(r-1) value at
        // (s_1, ..., s_{r-1}, s_r)
        let mut est = Vec::new();
        for t in [1e-2f64, 1e-3, 1e-4] {
            let mut v = base.entries().to_vec();
            v[r] = Complex64::new(1.0 + t, 0.0);
            let f = eval_auto(EvalKind::Zeta, shape, &ArgVector::new(v), None, cfg)?;
            est.push(Complex64::new(t, 0.0) * f.value);
        }
        let extrap = (est[2] * 1e-3 - est[1] * 1e-4) / (1e-3 - 1e-4);
        let inner_shape = Shape::new(j, r - 1)?;
        let inner_args: Vec<Complex64> = base.entries()[..r].to_vec();
        let inner = eval_auto(EvalKind::Zeta, inner_shape, &ArgVector::new(inner_args), None, cfg)?;
        rows.push(SuiteRow {
            label: format!("point-{k}"),
            delta: (extrap - inner.value).norm(),
            tol: RESIDUE_TOL,
        });
    }
    Ok(rows)
}

fn suite_entire(
    shape: Shape,
    n: usize,
    tuple: &CharacterTuple,
    rng: &mut ChaCha8Rng,
    cfg: &EvalConfig,
) -> mzeta::Result<Vec<SuiteRow>> {
    let planes = crossing_planes(shape, n);
    let mut rows = Vec::new();
    for (k, plane) in planes.iter().enumerate() {
        let base = point_on_plane(shape, plane, rng);
        let delta = 1e-6;
        let dir = transversal_unit(shape, plane);
        let mut plus = base.entries().to_vec();
        let mut minus = base.entries().to_vec();
        for (i, d) in dir.iter().enumerate() {
            plus[i] += d * delta;
            minus[i] -= d * delta;
        }
        let fp = eval_auto(EvalKind::L, shape, &ArgVector::new(plus), Some(tuple), cfg)?;
        let fm = eval_auto(EvalKind::L, shape, &ArgVector::new(minus), Some(tuple), cfg)?;
        let scale = 0.5 * (fp.value.norm() + fm.value.norm()).max(1e-12);
        rows.push(SuiteRow {
            label: format!("crossing-{k}-{plane}"),
            delta: (fp.value - fm.value).norm() / scale,
            tol: ENTIRE_REL_JUMP,
        });
    }
    Ok(rows)
}

fn suite_phi(
    shape: Shape,
    n: usize,
    rng: &mut ChaCha8Rng,
    cfg: &EvalConfig,
) -> mzeta::Result<Vec<SuiteRow>> {
    let n_shift = 4usize;
    let planes = crossing_planes(shape, n);
    let mut rows = Vec::new();
    for (k, plane) in planes.iter().enumerate() {
        let base = point_on_plane(shape, plane, rng);
        let dir = transversal_unit(shape, plane);
        let mut products = Vec::new();
        for &t in &[1e-1f64, 1e-2, 1e-3, 1e-4, 1e-5] {
            let pt: Vec<Complex64> = base
                .entries()
                .iter()
                .zip(&dir)
                .map(|(b, d)| b + d * t)
                .collect();
            let s = ArgVector::new(pt);
            let f = eval_auto(EvalKind::Zeta, shape, &s, None, cfg)?;
            products.push(phi_factor(shape, n_shift, &s).norm() * f.value.norm());
        }
        let mut sorted = products.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2].max(1e-300);
        let spread = products.iter().fold(0.0f64, |m, &p| m.max(p)) / median;
        rows.push(SuiteRow { label: format!("plane-{k}-{plane}"), delta: spread, tol: PHI_SPREAD });
    }
    Ok(rows)
}

/// A deterministic spread of low-constant planes for crossing/approach tests.
pub fn crossing_planes(shape: Shape, n: usize) -> Vec<Hyperplane> {
    let all = phi_planes(shape, 4);
    let listed = hyperplanes_zeta(shape, 2);
    let mut picked: Vec<Hyperplane> = Vec::new();
    for p in all {
        if picked.len() >= n {
            break;
        }
        if listed.iter().any(|q| q.same_plane(&p)) && !picked.iter().any(|q| q.same_plane(&p)) {
            picked.push(p);
        }
    }
    picked
}

/// A generic point on the plane: off-plane coordinates get scattered values
/// and the last plane coordinate solves the constraint, so the leading
/// (independent) slots stay in their half-planes and the recursion below the
/// probe runs on the cheap direct path.
pub fn point_on_plane(shape: Shape, plane: &Hyperplane, rng: &mut ChaCha8Rng) -> ArgVector {
    let fams = mzeta::singularity::zeta_families(shape);
    let solve_for = *plane.subset.last().unwrap();
    loop {
        let mut coords: Vec<Complex64> = (0..shape.arity())
            .map(|_| Complex64::new(rng.gen_range(1.4..2.3), rng.gen_range(-0.15..0.15)))
            .collect();
        let rest: Complex64 = plane
            .subset
            .iter()
            .filter(|&&i| i != solve_for)
            .map(|&i| coords[i - 1])
            .sum();
        coords[solve_for - 1] = Complex64::new(plane.constant as f64, 0.0) - rest;
        let s = ArgVector::new(coords);
        // keep the base clear of every other plane
        if let Some(hit) = mzeta::singularity::singular_hit(&fams, &s, 1e-4) {
            if !hit.same_plane(plane) {
                continue;
            }
        }
        return s;
    }
}

/// Unit step in the plane's last coordinate: moves the linear form at unit
/// rate and leaves the other plane coordinates alone.
pub fn transversal_unit(shape: Shape, plane: &Hyperplane) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); shape.arity()];
    v[*plane.subset.last().unwrap() - 1] = Complex64::new(1.0, 0.0);
    v
}

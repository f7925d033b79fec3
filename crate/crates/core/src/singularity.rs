//! The atlas of candidate singular hyperplanes: enumeration of the
//! hyperplane families attached to each shape (with and without characters),
//! point-membership tests, the finite products of linear factors that cancel
//! the singularities, and a numerical pole-order / cancellation check.
//!
//! A hyperplane is stored as (index subset S, integer constant c) meaning the
//! zero set of sum_{i in S} s_i - c, plus the family tag and instantiated
//! index parameters so every plane can be regenerated from its encoding.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::series::{ArgVector, Shape};

/// Sum over an index subset S of {1..r+1} equals an integer constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperplane {
    pub subset: Vec<usize>,
    pub constant: i64,
    pub family: String,
    pub params: BTreeMap<String, i64>,
}

impl fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form: Vec<String> = self.subset.iter().map(|i| format!("s_{i}")).collect();
        write!(f, "{} = {} [{}]", form.join("+"), self.constant, self.family)
    }
}

impl Hyperplane {
    /// Value of the linear form sum_{i in S} s_i - c at a point.
    pub fn linear_form(&self, point: &ArgVector) -> Complex64 {
        let mut acc = Complex64::new(-(self.constant as f64), 0.0);
        for &i in &self.subset {
            acc += point.s(i);
        }
        acc
    }

    pub fn same_plane(&self, other: &Hyperplane) -> bool {
        self.subset == other.subset && self.constant == other.constant
    }
}

/// Which constants a family admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantSet {
    /// c = base - idx for idx >= idx_min (so c <= base - idx_min).
    Descending { base: i64, idx_min: i64 },
    /// c = base - d for d in {-1, 0} union odd positives; even positive d are
    /// absent because zeta(-2n) = 0 kills those residues.
    DTail { base: i64 },
    /// the single constant c.
    Exactly(i64),
}

impl ConstantSet {
    pub fn contains(&self, c: i64) -> bool {
        match *self {
            ConstantSet::Descending { base, idx_min } => c <= base - idx_min,
            ConstantSet::DTail { base } => {
                c == base + 1 || c == base || (c < base && (base - c) % 2 == 1)
            }
            ConstantSet::Exactly(c0) => c == c0,
        }
    }

    pub fn max_constant(&self) -> i64 {
        match *self {
            ConstantSet::Descending { base, idx_min } => base - idx_min,
            ConstantSet::DTail { base } => base + 1,
            ConstantSet::Exactly(c0) => c0,
        }
    }

    /// (constant, index value) pairs with |constant| <= bound.
    fn enumerate(&self, bound: i64) -> Vec<(i64, Option<i64>)> {
        let mut out = Vec::new();
        match *self {
            ConstantSet::Descending { base, idx_min } => {
                let mut idx = idx_min;
                loop {
                    let c = base - idx;
                    if c < -bound {
                        break;
                    }
                    if c <= bound {
                        out.push((c, Some(idx)));
                    }
                    idx += 1;
                }
            }
            ConstantSet::DTail { base } => {
                let mut d = -1i64;
                loop {
                    let c = base - d;
                    if c < -bound {
                        break;
                    }
                    if c <= bound {
                        out.push((c, Some(d)));
                    }
                    d = match d {
                        -1 => 0,
                        0 => 1,
                        _ => d + 2,
                    };
                }
            }
            ConstantSet::Exactly(c0) => {
                if c0.abs() <= bound {
                    out.push((c0, None));
                }
            }
        }
        out
    }
}

/// One displayed family of a theorem: a fixed index subset together with its
/// admissible constants.
#[derive(Debug, Clone)]
pub struct Family {
    pub tag: &'static str,
    pub subset: Vec<usize>,
    pub cset: ConstantSet,
    /// name of the running index in the display (ell, ellp, d, ell0)
    pub idx_name: &'static str,
    pub fixed_params: BTreeMap<String, i64>,
}

impl Family {
    fn plane(&self, c: i64, idx: Option<i64>) -> Hyperplane {
        let mut params = self.fixed_params.clone();
        if let Some(v) = idx {
            params.insert(self.idx_name.to_string(), v);
        }
        Hyperplane { subset: self.subset.clone(), constant: c, family: self.tag.to_string(), params }
    }
}

fn subsets_of_size(pool: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = pool.len();
    if m > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - m {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for k in (i + 1)..m {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

fn subset_params(prefix: &str, subset: &[usize]) -> BTreeMap<String, i64> {
    subset
        .iter()
        .enumerate()
        .map(|(i, &v)| (format!("{prefix}{}", i + 1), v as i64))
        .collect()
}

/// Theorem families for the hat-class function of a shape (candidate
/// singularities of the continued function).
///
/// Shapes with j = r-1 >= 2 use the dedicated j = r-1 display; shape (1, 2)
/// and every j <= r-2 shape use the general display (for (1, 2) the two
/// coincide up to extra conservative planes).
pub fn zeta_families(shape: Shape) -> Vec<Family> {
    let (j, r) = (shape.j(), shape.r());
    assert!(j <= r);
    if j == r {
        return mt_families(r);
    }
    let mut fams = Vec::new();
    fams.push(Family {
        tag: "last-var",
        subset: vec![r + 1],
        cset: ConstantSet::Exactly(1),
        idx_name: "",
        fixed_params: BTreeMap::new(),
    });
    if j == r - 1 && j >= 2 {
        // subsets of {1..r-1} joined with {r, r+1}, constants m - ell, ell >= -1
        for m in 1..=(r - 2) {
            let pool: Vec<usize> = (1..=(r - 1)).collect();
            for sub in subsets_of_size(&pool, m) {
                let mut subset = sub.clone();
                subset.push(r);
                subset.push(r + 1);
                let mut params = subset_params("j", &sub);
                params.insert("m".into(), m as i64);
                fams.push(Family {
                    tag: "jr1-subset",
                    subset,
                    cset: ConstantSet::Descending { base: m as i64, idx_min: -1 },
                    idx_name: "ell",
                    fixed_params: params,
                });
            }
        }
        fams.push(Family {
            tag: "jr1-full",
            subset: (1..=(r + 1)).collect(),
            cset: ConstantSet::DTail { base: r as i64 - 1 },
            idx_name: "d",
            fixed_params: BTreeMap::new(),
        });
    } else {
        // general display: pair suffix with the d-set, longer suffixes with
        // length - ell, and mixed subset-of-{1..j} + full suffix families
        fams.push(Family {
            tag: "suffix-pair",
            subset: vec![r, r + 1],
            cset: ConstantSet::DTail { base: 1 },
            idx_name: "d",
            fixed_params: BTreeMap::new(),
        });
        for len in 3..=(r - j) {
            let subset: Vec<usize> = ((r + 2 - len)..=(r + 1)).collect();
            let mut params = BTreeMap::new();
            params.insert("len".into(), len as i64);
            fams.push(Family {
                tag: "suffix",
                subset,
                cset: ConstantSet::Descending { base: len as i64, idx_min: 0 },
                idx_name: "ell",
                fixed_params: params,
            });
        }
        let pool: Vec<usize> = (1..=j).collect();
        for m in 1..=j {
            for sub in subsets_of_size(&pool, m) {
                let mut subset = sub.clone();
                subset.extend((j + 1)..=(r + 1));
                let mut params = subset_params("k", &sub);
                params.insert("m".into(), m as i64);
                fams.push(Family {
                    tag: "mixed-subset",
                    subset,
                    cset: ConstantSet::Descending { base: m as i64, idx_min: -((r - j) as i64) },
                    idx_name: "ellp",
                    fixed_params: params,
                });
            }
        }
    }
    fams
}

/// Families for the Mordell-Tornheim base function of rank r.
pub fn mt_families(r: usize) -> Vec<Family> {
    let mut fams = Vec::new();
    let pool: Vec<usize> = (1..=r).collect();
    for m in 1..=r.saturating_sub(1) {
        for sub in subsets_of_size(&pool, m) {
            let mut subset = sub.clone();
            subset.push(r + 1);
            let mut params = subset_params("j", &sub);
            params.insert("m".into(), m as i64);
            fams.push(Family {
                tag: "mt-subset",
                subset,
                cset: ConstantSet::Descending { base: m as i64, idx_min: 0 },
                idx_name: "ell",
                fixed_params: params,
            });
        }
    }
    fams.push(Family {
        tag: "mt-full",
        subset: (1..=(r + 1)).collect(),
        cset: ConstantSet::Exactly(r as i64),
        idx_name: "",
        fixed_params: BTreeMap::new(),
    });
    fams
}

/// Principal/non-principal pattern of the character tuple (true = principal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalPattern(pub Vec<bool>);

impl PrincipalPattern {
    pub fn r(&self) -> usize {
        self.0.len()
    }

    fn delta(&self, i: usize) -> i64 {
        // 1-based position
        if self.0[i - 1] {
            1
        } else {
            0
        }
    }

    /// Delta_j = delta_r + delta_{r-1} + ... + delta_{r-j} (j+1 terms).
    fn delta_sum(&self, j: usize) -> i64 {
        let r = self.r();
        ((r - j)..=r).map(|i| self.delta(i)).sum()
    }
}

/// Character-aware families for the hat-class L-function. Entire (empty
/// list) when no character is principal.
pub fn l_families(shape: Shape, pattern: &PrincipalPattern) -> Vec<Family> {
    let (j, r) = (shape.j(), shape.r());
    assert_eq!(pattern.r(), r);
    if j == r {
        return l_mt_families(r, pattern);
    }
    if pattern.0.iter().all(|&f| !f) {
        return Vec::new();
    }
    let mut fams = Vec::new();
    if pattern.delta(r) == 1 {
        fams.push(Family {
            tag: "l-last-var",
            subset: vec![r + 1],
            cset: ConstantSet::Exactly(1),
            idx_name: "",
            fixed_params: BTreeMap::new(),
        });
    }
    let t_pool: Vec<usize> = (1..=j).filter(|&i| pattern.0[i - 1]).collect();
    let k = t_pool.len();
    if j == r - 1 && j >= 2 {
        let delta_r = pattern.delta(r);
        for m in 1..=k {
            for sub in subsets_of_size(&t_pool, m) {
                let mut subset = sub.clone();
                subset.push(r);
                subset.push(r + 1);
                let mut params = subset_params("t", &sub);
                params.insert("m".into(), m as i64);
                fams.push(Family {
                    tag: "l-jr1-subset",
                    subset,
                    cset: ConstantSet::Descending { base: m as i64, idx_min: -delta_r },
                    idx_name: "ell",
                    fixed_params: params,
                });
            }
        }
    } else {
        // suffix families from principal characters in positions r-d,
        // d = 1..r-j (the paper's d_h-indexed displays)
        for d in 1..=(r - j) {
            if pattern.delta(r - d) == 1 {
                let subset: Vec<usize> = ((r - d + 1)..=(r + 1)).collect();
                let mut params = BTreeMap::new();
                params.insert("d".into(), d as i64);
                fams.push(Family {
                    tag: "l-suffix",
                    subset,
                    cset: ConstantSet::Descending { base: d as i64 + 1, idx_min: 0 },
                    idx_name: "ell0",
                    fixed_params: params,
                });
            }
        }
        let dj = pattern.delta_sum(j);
        let m_hi = k.min(j.saturating_sub(1));
        for m in 1..=m_hi {
            for sub in subsets_of_size(&t_pool, m) {
                let mut subset = sub.clone();
                subset.extend((j + 1)..=(r + 1));
                let mut params = subset_params("t", &sub);
                params.insert("m".into(), m as i64);
                fams.push(Family {
                    tag: "l-mixed-subset",
                    subset,
                    cset: ConstantSet::Descending { base: m as i64, idx_min: -dj },
                    idx_name: "ellp",
                    fixed_params: params,
                });
            }
        }
        if k >= 1 {
            fams.push(Family {
                tag: "l-full",
                subset: (1..=(r + 1)).collect(),
                cset: ConstantSet::Descending { base: j as i64, idx_min: -dj },
                idx_name: "ellp",
                fixed_params: BTreeMap::new(),
            });
        }
    }
    fams
}

/// Families for the L-function Mordell-Tornheim base (rank r). Entire when
/// no character is principal; the full-sum constant freezes to r itself when
/// all of them are (the bracket [k/r] read as the integer floor).
pub fn l_mt_families(r: usize, pattern: &PrincipalPattern) -> Vec<Family> {
    assert_eq!(pattern.r(), r);
    let t_pool: Vec<usize> = (1..=r).filter(|&i| pattern.0[i - 1]).collect();
    let k = t_pool.len();
    let mut fams = Vec::new();
    if k == 0 {
        return fams;
    }
    for m in 1..=(k - 1).max(0) {
        for sub in subsets_of_size(&t_pool, m) {
            let mut subset = sub.clone();
            subset.push(r + 1);
            let mut params = subset_params("t", &sub);
            params.insert("m".into(), m as i64);
            fams.push(Family {
                tag: "wu-subset",
                subset,
                cset: ConstantSet::Descending { base: m as i64, idx_min: 0 },
                idx_name: "ell",
                fixed_params: params,
            });
        }
    }
    let mut subset = t_pool.clone();
    subset.push(r + 1);
    let cset = if k == r {
        ConstantSet::Exactly(r as i64)
    } else {
        ConstantSet::Descending { base: k as i64, idx_min: 0 }
    };
    fams.push(Family {
        tag: "wu-full",
        subset,
        cset,
        idx_name: "ell",
        fixed_params: subset_params("t", &t_pool),
    });
    fams
}

fn enumerate_families(fams: &[Family], bound: i64) -> Vec<Hyperplane> {
    let mut out = Vec::new();
    for f in fams {
        for (c, idx) in f.cset.enumerate(bound) {
            out.push(f.plane(c, idx));
        }
    }
    out.sort_by(|a, b| {
        (a.subset.len(), &a.subset, a.constant, &a.family)
            .cmp(&(b.subset.len(), &b.subset, b.constant, &b.family))
    });
    out
}

/// Bounded instantiation of the candidate singular hyperplanes for the
/// hat-class function of a shape (|constant| <= bound).
pub fn hyperplanes_zeta(shape: Shape, const_bound: i64) -> Vec<Hyperplane> {
    enumerate_families(&zeta_families(shape), const_bound)
}

/// Bounded instantiation for the character-weighted class.
pub fn hyperplanes_l(shape: Shape, pattern: &PrincipalPattern, const_bound: i64) -> Vec<Hyperplane> {
    enumerate_families(&l_families(shape, pattern), const_bound)
}

/// Bounded instantiation for the Mordell-Tornheim base of rank r.
pub fn hyperplanes_mt(r: usize, const_bound: i64) -> Vec<Hyperplane> {
    enumerate_families(&mt_families(r), const_bound)
}

/// Regenerate a hyperplane from its (family, params) encoding; used by the
/// round-trip acceptance check.
pub fn rebuild_plane(fams: &[Family], plane: &Hyperplane) -> Option<Hyperplane> {
    for f in fams {
        if f.tag != plane.family {
            continue;
        }
        if !f
            .fixed_params
            .iter()
            .all(|(k, v)| plane.params.get(k) == Some(v))
        {
            continue;
        }
        let idx = if f.idx_name.is_empty() { None } else { plane.params.get(f.idx_name).copied() };
        let c = match (f.cset, idx) {
            (ConstantSet::Exactly(c0), None) => c0,
            (ConstantSet::Descending { base, idx_min }, Some(i)) if i >= idx_min => base - i,
            (ConstantSet::DTail { base }, Some(d))
                if d == -1 || d == 0 || (d > 0 && d % 2 == 1) =>
            {
                base - d
            }
            _ => continue,
        };
        let rebuilt = f.plane(c, idx);
        if rebuilt.subset == plane.subset && rebuilt.constant == plane.constant {
            return Some(rebuilt);
        }
    }
    None
}

/// All planes from `planes` whose linear form vanishes at the point within tol.
pub fn on_singular_set(point: &ArgVector, planes: &[Hyperplane], tol: f64) -> Vec<Hyperplane> {
    planes
        .iter()
        .filter(|p| p.linear_form(point).norm() <= tol)
        .cloned()
        .collect()
}

/// Predicate form of the atlas: the first family hit by the point, if any.
/// Unlike [`on_singular_set`] this needs no constant bound; families admit
/// arbitrarily negative constants.
pub fn singular_hit(fams: &[Family], point: &ArgVector, tol: f64) -> Option<Hyperplane> {
    for f in fams {
        let mut v = Complex64::new(0.0, 0.0);
        for &i in &f.subset {
            v += point.s(i);
        }
        if v.im.abs() > tol {
            continue;
        }
        let c = v.re.round() as i64;
        if (v.re - c as f64).abs() <= tol && f.cset.contains(c) {
            // recover the index value for the params map
            let idx = match f.cset {
                ConstantSet::Exactly(_) => None,
                ConstantSet::Descending { base, .. } => Some(base - c),
                ConstantSet::DTail { base } => Some(base - c),
            };
            return Some(f.plane(c, idx));
        }
    }
    None
}

/// Evaluation-refusal tolerance: points closer than this (in any atlas
/// linear form) are refused rather than evaluated.
pub const SINGULAR_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Phi: the finite product of linear factors that cancels the singularities
// ---------------------------------------------------------------------------

/// The factor planes of the cancellation product for a shape at shift depth N:
/// the (s_{r+1} - 1) factor, the d-indexed pair factors with -1 <= d <= N-1,
/// the ell-indexed suffix factors with 0 <= ell <= N, and the ell'-indexed
/// subset factors with -(r-j) <= ell' <= N (for j = r-1: -1 <= ell <= N).
pub fn phi_planes(shape: Shape, n: usize) -> Vec<Hyperplane> {
    let n = n as i64;
    let mut out = Vec::new();
    for f in zeta_families(shape) {
        let idx_hi = match f.cset {
            ConstantSet::Exactly(_) => {
                out.push(f.plane(f.cset.max_constant(), None));
                continue;
            }
            ConstantSet::DTail { .. } => n - 1,
            ConstantSet::Descending { .. } => n,
        };
        match f.cset {
            ConstantSet::DTail { base } => {
                let mut d = -1i64;
                while d <= idx_hi {
                    out.push(f.plane(base - d, Some(d)));
                    d = match d {
                        -1 => 0,
                        0 => 1,
                        _ => d + 2,
                    };
                }
            }
            ConstantSet::Descending { base, idx_min } => {
                for idx in idx_min..=idx_hi {
                    out.push(f.plane(base - idx, Some(idx)));
                }
            }
            ConstantSet::Exactly(_) => unreachable!(),
        }
    }
    out.sort_by(|a, b| {
        (a.subset.len(), &a.subset, a.constant, &a.family)
            .cmp(&(b.subset.len(), &b.subset, b.constant, &b.family))
    });
    out
}

/// The cancellation product itself: the product over [`phi_planes`] of the
/// linear forms, evaluated at s.
pub fn phi_factor(shape: Shape, n: usize, s: &ArgVector) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for p in phi_planes(shape, n) {
        acc *= p.linear_form(s);
    }
    acc
}

// ---------------------------------------------------------------------------
// numerical cancellation check
// ---------------------------------------------------------------------------

/// Outcome of probing a hyperplane along a transversal direction.
#[derive(Debug, Clone)]
pub struct CancellationReport {
    /// least-squares pole order from |f| ~ A t^{-k}
    pub pole_order_est: f64,
    /// raw estimate rounded to the nearest half-integer
    pub pole_order_rounded: f64,
    /// whether (linear form) * f stays bounded along the approach
    pub bounded_product: bool,
    /// |f| at the probe offsets, outermost first
    pub moduli: Vec<f64>,
}

/// Probe offsets t for the pole-order fit (four decades).
pub const PROBE_OFFSETS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Fit |f(base + t v)| ~ A t^{-k} along a transversal direction v and report
/// the estimated pole order together with the boundedness of
/// (linear form) * f.
///
/// `eval` is the continued evaluator for the function under test (the kind
/// and characters are baked in by the caller).
pub fn cancellation_check(
    atlas: &[Family],
    plane: &Hyperplane,
    base: &ArgVector,
    eval: &dyn Fn(&ArgVector) -> Result<Complex64>,
) -> Result<CancellationReport> {
    if plane.linear_form(base).norm() > 1e-12 {
        return Err(Error::Domain("base point is not on the hyperplane".into()));
    }
    let dim = base.len();
    let v = find_transversal(atlas, plane, base, dim).ok_or(Error::TransversalNotFound)?;

    let mut moduli = Vec::new();
    let mut products = Vec::new();
    for &t in &PROBE_OFFSETS {
        let p = offset_point(base, &v, t);
        let f = eval(&p)?;
        moduli.push(f.norm());
        products.push(plane.linear_form(&p).norm() * f.norm());
    }
    // least squares slope of ln|f| against ln t
    let n = PROBE_OFFSETS.len() as f64;
    let xs: Vec<f64> = PROBE_OFFSETS.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = moduli.iter().map(|m| m.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let pole_order_est = -(sxy / sxx);

    let mut sorted = products.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2].max(1e-300);
    let bounded_product = products.iter().all(|&p| p <= 10.0 * median);

    Ok(CancellationReport {
        pole_order_est,
        pole_order_rounded: (pole_order_est * 2.0).round() / 2.0,
        bounded_product,
        moduli,
    })
}

fn offset_point(base: &ArgVector, v: &[Complex64], t: f64) -> ArgVector {
    ArgVector::new(
        base.entries()
            .iter()
            .zip(v)
            .map(|(b, dv)| b + dv * t)
            .collect(),
    )
}

fn find_transversal(
    atlas: &[Family],
    plane: &Hyperplane,
    base: &ArgVector,
    dim: usize,
) -> Option<Vec<Complex64>> {
    // prefer moving trailing (cumulative-zone) coordinates: the first j slots
    // stay inside their half-planes and inner evaluations stay cheap
    let mut order: Vec<usize> = plane.subset.clone();
    order.reverse();
    let mut candidates: Vec<Vec<Complex64>> = Vec::new();
    for &i in &order {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[i - 1] = Complex64::new(1.0, 0.0);
        candidates.push(v);
    }
    // skewed directions as fallback: still move the linear form at unit rate
    for &i in &order {
        let mut v = vec![Complex64::new(0.31, 0.0); dim];
        v[i - 1] = Complex64::new(1.0, 0.0);
        let drift: Complex64 = plane.subset.iter().map(|&k| v[k - 1]).sum();
        for x in v.iter_mut() {
            *x /= drift;
        }
        candidates.push(v);
    }
    'cand: for v in candidates {
        for &t in &PROBE_OFFSETS {
            let p = offset_point(base, &v, t);
            if let Some(hit) = singular_hit(atlas, &p, SINGULAR_TOL * 10.0) {
                if !hit.same_plane(plane) {
                    continue 'cand;
                }
                // the probe should have left the plane itself as well
                continue 'cand;
            }
        }
        return Some(v);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(j: usize, r: usize) -> Shape {
        Shape::new(j, r).unwrap()
    }

    fn has_plane(planes: &[Hyperplane], subset: &[usize], c: i64) -> bool {
        planes.iter().any(|p| p.subset == subset && p.constant == c)
    }

    #[test]
    fn shape_1_2_families() {
        let planes = hyperplanes_zeta(shape(1, 2), 3);
        assert!(has_plane(&planes, &[3], 1));
        // pair family 1 - d for d in {-1, 0, 1, 3}
        for c in [2, 1, 0, -2] {
            assert!(has_plane(&planes, &[2, 3], c), "missing s2+s3={c}");
        }
        assert!(!has_plane(&planes, &[2, 3], -1), "even-d constant must be absent");
        // full family 1 - ell' with ell' >= -1
        for c in [2, 1, 0, -1, -2, -3] {
            assert!(has_plane(&planes, &[1, 2, 3], c), "missing full={c}");
        }
        assert!(!has_plane(&planes, &[1, 2, 3], 3));
    }

    #[test]
    fn shape_2_3_families() {
        let planes = hyperplanes_zeta(shape(2, 3), 2);
        assert!(has_plane(&planes, &[4], 1));
        // s_j + s_3 + s_4 = 1 - ell, ell >= -1
        for jj in [1usize, 2] {
            for c in [2i64, 1, 0, -1, -2] {
                assert!(has_plane(&planes, &[jj, 3, 4], c), "missing ({jj},3,4)={c}");
            }
        }
        // full sum 2 - d
        for c in [2i64, 1, -1] {
            assert!(has_plane(&planes, &[1, 2, 3, 4], c), "missing full={c}");
        }
        assert!(!has_plane(&planes, &[1, 2, 3, 4], 0), "2-d never hits 0");
    }

    #[test]
    fn bound_zero_subset() {
        let planes = hyperplanes_zeta(shape(1, 2), 0);
        assert!(planes.iter().all(|p| p.constant == 0));
        let all = hyperplanes_zeta(shape(1, 2), 3);
        for p in &planes {
            assert!(all.iter().any(|q| q.same_plane(p)));
        }
    }

    #[test]
    fn mt_families_examples() {
        let p1 = hyperplanes_mt(1, 3);
        assert_eq!(p1.len(), 1);
        assert!(has_plane(&p1, &[1, 2], 1));

        let p2 = hyperplanes_mt(2, 2);
        assert!(has_plane(&p2, &[1, 3], 1));
        assert!(has_plane(&p2, &[2, 3], 1));
        assert!(has_plane(&p2, &[1, 2, 3], 2));
        assert!(has_plane(&p2, &[1, 3], 0));
        assert!(!has_plane(&p2, &[1, 3], 2), "mt subset constants start at m");
    }

    #[test]
    fn l_families_entire_when_no_principal() {
        let pat = PrincipalPattern(vec![false, false]);
        assert!(hyperplanes_l(shape(1, 2), &pat, 5).is_empty());
    }

    #[test]
    fn l_families_shape_1_2_all_principal() {
        let pat = PrincipalPattern(vec![true, true]);
        let planes = hyperplanes_l(shape(1, 2), &pat, 3);
        assert!(has_plane(&planes, &[3], 1));
        // Delta_1 = delta_2 + delta_1 = 2, so constants reach 1 + 2 = 3
        assert!(has_plane(&planes, &[1, 2, 3], 3));
        assert!(has_plane(&planes, &[1, 2, 3], -3));
        // suffix family from principal chi_1 (position r-d with d = 1)
        assert!(has_plane(&planes, &[2, 3], 2));
    }

    #[test]
    fn l_families_shape_2_3_only_last_principal() {
        let pat = PrincipalPattern(vec![false, false, true]);
        let planes = hyperplanes_l(shape(2, 3), &pat, 3);
        assert!(has_plane(&planes, &[4], 1));
        // no t_u families: the only plane family is s_4 = 1
        assert!(planes.iter().all(|p| p.subset == vec![4]));
    }

    #[test]
    fn specialization_contains_zeta_planes() {
        for sh in [shape(1, 2), shape(2, 3)] {
            let pat = PrincipalPattern(vec![true; sh.r()]);
            let lz = hyperplanes_l(sh, &pat, 3);
            for p in hyperplanes_zeta(sh, 3) {
                assert!(
                    lz.iter().any(|q| q.same_plane(&p)),
                    "plane {p} of shape ({},{}) missing from the all-principal L atlas",
                    sh.j(),
                    sh.r()
                );
            }
        }
    }

    #[test]
    fn wu_all_principal_full_sum_freezes() {
        let pat = PrincipalPattern(vec![true, true]);
        let planes = hyperplanes_mt_l_for_test(2, &pat, 5);
        // full-sum family is the single plane s_1+s_2+s_3 = 2
        let full: Vec<_> = planes.iter().filter(|p| p.subset == vec![1, 2, 3]).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].constant, 2);
        // partially principal: constants descend
        let pat2 = PrincipalPattern(vec![true, false]);
        let planes2 = hyperplanes_mt_l_for_test(2, &pat2, 5);
        assert!(planes2.iter().any(|p| p.subset == vec![1, 3] && p.constant == 0));
    }

    fn hyperplanes_mt_l_for_test(r: usize, pat: &PrincipalPattern, bound: i64) -> Vec<Hyperplane> {
        enumerate_families(&l_mt_families(r, pat), bound)
    }

    #[test]
    fn membership_and_tolerance() {
        let planes = hyperplanes_zeta(shape(1, 2), 3);
        let pt = ArgVector::new(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let hits = on_singular_set(&pt, &planes, 1e-12);
        assert!(hits.iter().any(|p| p.subset == vec![3] && p.constant == 1));

        let generic = ArgVector::new(vec![
            Complex64::new(1.7, 0.3),
            Complex64::new(2.3, -0.1),
            Complex64::new(1.9, 0.7),
        ]);
        assert!(on_singular_set(&generic, &planes, 1e-9).is_empty());

        let near = ArgVector::new(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0 + 1e-12, 0.0),
        ]);
        let hits = on_singular_set(&near, &planes, 1e-9);
        assert!(hits.iter().any(|p| p.subset == vec![3]));
    }

    #[test]
    fn predicate_matches_enumeration() {
        let fams = zeta_families(shape(1, 2));
        let pt = ArgVector::new(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(-3.0, 0.0),
        ]);
        // s_1+s_2+s_3 = 1 constant family: 2+2-3 = 1
        let hit = singular_hit(&fams, &pt, 1e-9).expect("must hit");
        assert_eq!(hit.constant, 1);
        let clean = ArgVector::new(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(-3.0, 0.4),
        ]);
        assert!(singular_hit(&fams, &clean, 1e-9).is_none());
    }

    #[test]
    fn round_trip_rebuild() {
        for sh in [shape(1, 2), shape(2, 3), shape(1, 3)] {
            let fams = zeta_families(sh);
            for p in hyperplanes_zeta(sh, 3) {
                let rebuilt = rebuild_plane(&fams, &p).unwrap_or_else(|| panic!("rebuild {p}"));
                assert!(rebuilt.same_plane(&p));
                assert_eq!(rebuilt.params, p.params);
            }
        }
    }

    #[test]
    fn phi_planes_count_matches_factor_degree() {
        for sh in [shape(1, 2), shape(2, 3)] {
            let n = 4;
            let planes = phi_planes(sh, n);
            // evaluate the product along a random line: a polynomial of
            // degree = number of factors has that many roots counted with
            // multiplicity; cheaper: check each factor vanishes on its plane
            for p in &planes {
                let mut coords = vec![Complex64::new(0.37, 0.11); sh.arity()];
                // put the point on the plane by solving for the first subset slot
                let others: Complex64 =
                    p.subset[1..].iter().map(|&i| coords[i - 1]).sum();
                coords[p.subset[0] - 1] = Complex64::new(p.constant as f64, 0.0) - others;
                let s = ArgVector::new(coords);
                let val = phi_factor(sh, n, &s);
                assert!(val.norm() < 1e-6, "factor for {p} does not vanish: {val}");
            }
            // a point on no factor gives a nonzero product
            let off = ArgVector::new(
                (0..sh.arity())
                    .map(|i| Complex64::new(1.3 + 0.21 * i as f64, 0.17))
                    .collect(),
            );
            assert!(phi_factor(sh, n, &off).norm() > 0.0);
        }
    }

    #[test]
    fn phi_vanishes_on_last_var_plane() {
        let sh = shape(1, 2);
        let s = ArgVector::new(vec![
            Complex64::new(2.2, 0.0),
            Complex64::new(1.7, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        assert!(phi_factor(sh, 4, &s).norm() < 1e-9);
    }
}

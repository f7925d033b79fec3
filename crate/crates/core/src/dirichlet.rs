//! Dirichlet characters mod q and the attached L-function values: exact
//! L(-n, chi) through generalized Bernoulli numbers, and L(s, chi) on
//! vertical lines through Hurwitz zeta.
//!
//! Characters are enumerated by decomposing (Z/q)^* into cyclic factors
//! (primitive-root search per prime power, CRT-lifted) and listing all
//! homomorphisms into roots of unity. Index 0 is always the principal
//! character; the order is lexicographic in the generator-exponent tuples,
//! so CLI indices are reproducible.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{bernoulli_poly_rational, hurwitz_rational, rational_to_f64};

/// Largest supported character modulus.
pub const MODULUS_CAP: usize = 1000;

/// A Dirichlet character mod q, stored as its value table on residues.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    q: usize,
    values: Vec<Complex64>,
    principal: bool,
    /// exponents on the group generators; empty for q = 1
    exponents: Vec<usize>,
}

impl DirichletCharacter {
    /// The trivial character mod 1 (weight 1 on every integer).
    pub fn trivial() -> Self {
        DirichletCharacter {
            q: 1,
            values: vec![Complex64::new(1.0, 0.0)],
            principal: true,
            exponents: Vec::new(),
        }
    }

    pub fn modulus(&self) -> usize {
        self.q
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    /// chi(m) for any integer m >= 0.
    #[inline]
    pub fn eval(&self, m: usize) -> Complex64 {
        self.values[m % self.q]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Euler totient by gcd count.
pub fn totient(q: usize) -> usize {
    if q == 1 {
        return 1;
    }
    (1..=q).filter(|&a| gcd(a, q) == 1).count()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn pow_mod(mut base: usize, mut exp: usize, q: usize) -> usize {
    let mut acc = 1usize;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    acc
}

/// One cyclic factor of (Z/q)^*: a generator (lifted mod q) and its order.
struct CyclicFactor {
    generator: usize,
    order: usize,
}

fn prime_factorization(mut n: usize) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Smallest primitive root mod p^e (p odd prime).
fn primitive_root(pe: usize, phi: usize) -> usize {
    let prime_divs: Vec<usize> = prime_factorization(phi).into_iter().map(|(p, _)| p).collect();
    'outer: for g in 2..pe {
        if gcd(g, pe) != 1 {
            continue;
        }
        for &d in &prime_divs {
            if pow_mod(g, phi / d, pe) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("primitive root exists for odd prime powers")
}

/// CRT lift: x = r mod m, x = 1 mod (q/m).
fn crt_lift(r: usize, m: usize, q: usize) -> usize {
    let n = q / m;
    for k in 0..n {
        let x = r + k * m;
        if x % n == 1 % n {
            return x % q;
        }
    }
    unreachable!("crt lift")
}

fn cyclic_factors(q: usize) -> Vec<CyclicFactor> {
    let mut out = Vec::new();
    for (p, e) in prime_factorization(q) {
        let pe = p.pow(e);
        if p == 2 {
            match e {
                1 => {}
                2 => out.push(CyclicFactor { generator: crt_lift(3, 4, q), order: 2 }),
                _ => {
                    out.push(CyclicFactor { generator: crt_lift(pe - 1, pe, q), order: 2 });
                    out.push(CyclicFactor {
                        generator: crt_lift(5, pe, q),
                        order: pe / 4,
                    });
                }
            }
        } else {
            let phi = pe / p * (p - 1);
            let g = primitive_root(pe, phi);
            out.push(CyclicFactor { generator: crt_lift(g, pe, q), order: phi });
        }
    }
    out
}

/// All phi(q) characters mod q in canonical order (principal first).
pub fn characters_mod(q: usize) -> Result<Vec<DirichletCharacter>> {
    characters_mod_with_cap(q, MODULUS_CAP)
}

pub fn characters_mod_with_cap(q: usize, cap: usize) -> Result<Vec<DirichletCharacter>> {
    if q == 0 {
        return Err(Error::Domain("modulus must be >= 1".into()));
    }
    if q > cap {
        return Err(Error::CapExceeded { requested: q, cap });
    }
    if q == 1 {
        return Ok(vec![DirichletCharacter::trivial()]);
    }
    let factors = cyclic_factors(q);
    let phi = totient(q);

    // discrete logs: residue -> exponent tuple on the generators
    let t = factors.len();
    let mut dlog: Vec<Option<Vec<usize>>> = vec![None; q];
    let mut stack = vec![(1usize, vec![0usize; t])];
    dlog[1 % q] = Some(vec![0; t]);
    // enumerate all products g_1^{e_1} ... g_t^{e_t}
    for (i, f) in factors.iter().enumerate() {
        let current: Vec<(usize, Vec<usize>)> = stack.clone();
        for (base, tuple) in current {
            let mut x = base;
            for e in 1..f.order {
                x = x * f.generator % q;
                let mut tup = tuple.clone();
                tup[i] = e;
                debug_assert!(dlog[x].is_none(), "non-direct decomposition for q={q}");
                dlog[x] = Some(tup.clone());
                stack.push((x, tup));
            }
        }
    }
    debug_assert_eq!(stack.len(), phi);

    // characters: exponent tuples (c_1..c_t) in lexicographic order
    let orders: Vec<usize> = factors.iter().map(|f| f.order).collect();
    let mut chars = Vec::with_capacity(phi);
    let mut c = vec![0usize; t];
    loop {
        let mut values = vec![Complex64::new(0.0, 0.0); q];
        for a in 0..q {
            if let Some(tup) = &dlog[a] {
                let mut phase = 0.0f64;
                for i in 0..t {
                    phase += c[i] as f64 * tup[i] as f64 / orders[i] as f64;
                }
                phase = phase.fract();
                values[a] = Complex64::new((2.0 * PI * phase).cos(), (2.0 * PI * phase).sin());
            }
        }
        let principal = c.iter().all(|&x| x == 0);
        chars.push(DirichletCharacter { q, values, principal, exponents: c.clone() });
        // odometer, last coordinate fastest
        let mut i = t;
        loop {
            if i == 0 {
                return Ok(chars);
            }
            i -= 1;
            c[i] += 1;
            if c[i] < orders[i] {
                break;
            }
            c[i] = 0;
        }
    }
}

/// Generalized Bernoulli number B_{n,chi} = q^{n-1} sum_{a=1}^{q} chi(a) B_n(a/q).
pub fn gen_bernoulli(n: usize, chi: &DirichletCharacter) -> Result<Complex64> {
    let q = chi.modulus();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        let w = chi.eval(a % q.max(1));
        if w.norm_sqr() == 0.0 {
            continue;
        }
        let x = BigRational::new(BigInt::from(a), BigInt::from(q));
        let b = bernoulli_poly_rational(n, &x)?;
        acc += w * rational_to_f64(&b);
    }
    let scale = (q as f64).powi(n as i32 - 1);
    Ok(acc * scale)
}

/// Exact L(-n, chi) = -B_{n+1,chi}/(n+1).
pub fn l_at_neg_int(n: usize, chi: &DirichletCharacter) -> Result<Complex64> {
    let b = gen_bernoulli(n + 1, chi)?;
    Ok(-b / (n as f64 + 1.0))
}

/// L(s, chi) = q^{-s} sum_{a=1}^{q} chi(a) zeta(s, a/q).
///
/// The Hurwitz expansion continues this to all s (with the lone pole at s = 1
/// for principal chi).
pub fn l_line(s: Complex64, chi: &DirichletCharacter) -> Result<Complex64> {
    if chi.is_principal() && (s - Complex64::new(1.0, 0.0)).norm() <= 1e-14 {
        return Err(Error::Pole { at: s });
    }
    let q = chi.modulus();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        let w = chi.eval(a % q);
        if w.norm_sqr() == 0.0 {
            continue;
        }
        acc += w * hurwitz_rational(s, a, q)?;
    }
    Ok(Complex64::new(q as f64, 0.0).powc(-s) * acc)
}

/// A tuple of r characters sharing one modulus.
#[derive(Debug, Clone)]
pub struct CharacterTuple {
    chars: Vec<DirichletCharacter>,
}

impl CharacterTuple {
    pub fn new(chars: Vec<DirichletCharacter>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::Domain("character tuple must be nonempty".into()));
        }
        let q = chars[0].modulus();
        if chars.iter().any(|c| c.modulus() != q) {
            return Err(Error::Domain("character tuple must share one modulus".into()));
        }
        Ok(CharacterTuple { chars })
    }

    /// r copies of the trivial character mod 1.
    pub fn all_trivial(r: usize) -> Self {
        CharacterTuple { chars: vec![DirichletCharacter::trivial(); r] }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn modulus(&self) -> usize {
        self.chars[0].modulus()
    }

    pub fn get(&self, i: usize) -> &DirichletCharacter {
        &self.chars[i]
    }

    pub fn chars(&self) -> &[DirichletCharacter] {
        &self.chars
    }

    /// Flags: true where the character is principal.
    pub fn principal_flags(&self) -> Vec<bool> {
        self.chars.iter().map(|c| c.is_principal()).collect()
    }

    /// Drop the last character (descending one recursion level).
    pub fn drop_last(&self) -> Self {
        CharacterTuple { chars: self.chars[..self.chars.len() - 1].to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totient_values() {
        assert_eq!(totient(1), 1);
        assert_eq!(totient(7), 6);
        assert_eq!(totient(12), 4);
        assert_eq!(totient(1000), 400);
    }

    #[test]
    fn character_counts_and_tables() {
        for q in 2..=30 {
            let chars = characters_mod(q).unwrap();
            assert_eq!(chars.len(), totient(q), "q={q}");
            assert!(chars[0].is_principal());
            // distinct tables
            for i in 0..chars.len() {
                for j in (i + 1)..chars.len() {
                    let d: f64 = (0..q)
                        .map(|a| (chars[i].values()[a] - chars[j].values()[a]).norm())
                        .sum();
                    assert!(d > 1e-9, "characters {i},{j} mod {q} collide");
                }
            }
        }
    }

    #[test]
    fn q3_q4_q5_examples() {
        let c3 = characters_mod(3).unwrap();
        assert_eq!(c3.len(), 2);
        assert!((c3[1].eval(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let c4 = characters_mod(4).unwrap();
        assert_eq!(c4.len(), 2);
        assert!((c4[1].eval(3) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let c5 = characters_mod(5).unwrap();
        assert_eq!(c5.len(), 4);
        let mut at2: Vec<Complex64> = c5.iter().map(|ch| ch.eval(2)).collect();
        // the four values at a=2 are the four 4th roots of unity
        at2.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        let mut expect = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        expect.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        for (v, e) in at2.iter().zip(&expect) {
            assert!((v - e).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplicativity_and_unit_modulus() {
        for q in [4usize, 5, 8, 9, 12, 24] {
            for chi in characters_mod(q).unwrap() {
                for a in 0..q {
                    for b in 0..q {
                        if gcd(a, q) == 1 && gcd(b, q) == 1 {
                            let lhs = chi.eval(a * b % q);
                            let rhs = chi.eval(a) * chi.eval(b);
                            assert!((lhs - rhs).norm() < 1e-12);
                            assert!((chi.eval(a).norm() - 1.0).abs() < 1e-12);
                        } else if gcd(a, q) != 1 {
                            assert_eq!(chi.eval(a).norm(), 0.0);
                        }
                    }
                }
                assert!((chi.eval(1) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonality() {
        for q in [3usize, 4, 5, 12] {
            for chi in characters_mod(q).unwrap() {
                let s: Complex64 = (0..q).map(|a| chi.eval(a)).sum();
                if chi.is_principal() {
                    assert!((s.re - totient(q) as f64).abs() < 1e-10 && s.im.abs() < 1e-10);
                } else {
                    assert!(s.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn closure_under_product() {
        for q in [5usize, 8, 12] {
            let chars = characters_mod(q).unwrap();
            for x in &chars {
                for y in &chars {
                    // pointwise product must match some enumerated character
                    let found = chars.iter().any(|z| {
                        (0..q).all(|a| (x.eval(a) * y.eval(a) - z.eval(a)).norm() < 1e-9)
                    });
                    assert!(found, "product escapes the group mod {q}");
                }
            }
        }
    }

    #[test]
    fn gen_bernoulli_examples() {
        // q = 1 reduces to B_n(1): n = 2 -> 1/6
        let triv = DirichletCharacter::trivial();
        let b2 = gen_bernoulli(2, &triv).unwrap();
        assert!((b2.re - 1.0 / 6.0).abs() < 1e-14);
        // non-principal mod 4: B_{1,chi} = -1/2
        let c4 = characters_mod(4).unwrap();
        let b1 = gen_bernoulli(1, &c4[1]).unwrap();
        assert!((b1.re + 0.5).abs() < 1e-13 && b1.im.abs() < 1e-13);
        // B_{0,chi} = 0 for non-principal chi (orthogonality)
        let b0 = gen_bernoulli(0, &c4[1]).unwrap();
        assert!(b0.norm() < 1e-13);
    }

    #[test]
    fn l_at_neg_int_examples() {
        let c4 = characters_mod(4).unwrap();
        // L(0, chi_4) = 1/2
        let l0 = l_at_neg_int(0, &c4[1]).unwrap();
        assert!((l0.re - 0.5).abs() < 1e-13);
        // principal mod 1: L(-2) = zeta(-2) = 0
        let triv = DirichletCharacter::trivial();
        let lm2 = l_at_neg_int(2, &triv).unwrap();
        assert!(lm2.norm() < 1e-13);
        // principal mod 2 at s = -1: zeta(-1)(1 - 2^1) = 1/12
        let c2 = characters_mod(2).unwrap();
        let lm1 = l_at_neg_int(1, &c2[0]).unwrap();
        assert!((lm1.re - 1.0 / 12.0).abs() < 1e-13, "{lm1}");
    }

    #[test]
    fn l_line_examples() {
        use crate::special::riemann_zeta;
        let triv = DirichletCharacter::trivial();
        let s = Complex64::new(2.0, 3.0);
        let l = l_line(s, &triv).unwrap();
        let z = riemann_zeta(s).unwrap();
        assert!((l - z).norm() < 1e-12);

        // principal mod 2: zeta(2)(1 - 2^{-2})
        let c2 = characters_mod(2).unwrap();
        let l2 = l_line(Complex64::new(2.0, 0.0), &c2[0]).unwrap();
        let expect = PI * PI / 6.0 * (1.0 - 0.25);
        assert!((l2.re - expect).abs() < 1e-12, "{l2}");

        // continuation agrees with the exact Bernoulli value at s = -1
        let c4 = characters_mod(4).unwrap();
        let lm1 = l_line(Complex64::new(-1.0, 0.0), &c4[1]).unwrap();
        let exact = l_at_neg_int(1, &c4[1]).unwrap();
        assert!((lm1 - exact).norm() < 1e-8);
    }

    #[test]
    fn principal_l_residue() {
        // (s-1) L(s, chi_0 mod q) -> phi(q)/q as s -> 1
        for q in [2usize, 6, 12] {
            let chars = characters_mod(q).unwrap();
            let chi0 = &chars[0];
            let mut est = Vec::new();
            for t in [1e-2, 1e-3, 1e-4] {
                let s = Complex64::new(1.0 + t, 0.0);
                let v = l_line(s, chi0).unwrap();
                est.push((s - 1.0) * v);
            }
            // Richardson: r(t) = R + c t; eliminate c with the two smallest t
            let r = ((est[2] * 1e-3 - est[1] * 1e-4) / (1e-3 - 1e-4)).re;
            let expect = totient(q) as f64 / q as f64;
            assert!((r - expect).abs() < 1e-6, "q={q}: {r} vs {expect}");
        }
    }

    #[test]
    fn modulus_cap() {
        assert!(matches!(
            characters_mod(1_000_000),
            Err(Error::CapExceeded { .. })
        ));
    }
}

//! Exact arithmetic: rationals, `p`-adic valuations, prime fields and binary
//! forms of small degree over prime fields.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use poly::{poly_divrem, poly_gcd, poly_roots, trim};

/// Exact rational number, always kept in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Shorthand for an integer-valued rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"n"` or `"n/d"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        None => s.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad()),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A `p`-adic valuation; zero has valuation `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinite
    }
}

impl std::ops::Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

/// Multiplicity of `p` in a nonzero integer.
pub(crate) fn int_valuation(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Valuation without the primality check, for internal hot paths.
pub(crate) fn vp(q: &Rational, p: u64) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    Valuation::Finite(int_valuation(q.numer(), p) - int_valuation(q.denom(), p))
}

/// `v_p(q)`, with `+∞` for zero.
pub fn valuation(q: &Rational, p: u64) -> Result<Valuation> {
    check_prime(p)?;
    Ok(vp(q, p))
}

/// Minimum valuation over the coefficients; `+∞` for the zero polynomial.
pub fn poly_valuation(coeffs: &[Rational], p: u64) -> Result<Valuation> {
    check_prime(p)?;
    Ok(min_valuation(coeffs, p))
}

pub(crate) fn min_valuation<'a>(coeffs: impl IntoIterator<Item = &'a Rational>, p: u64) -> Valuation {
    coeffs
        .into_iter()
        .map(|c| vp(c, p))
        .min()
        .unwrap_or(Valuation::Infinite)
}

/// `p^e` as a rational, for any sign of `e`.
pub fn prime_power(p: u64, e: i64) -> Rational {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(base)
    } else {
        Rational::new(BigInt::one(), base)
    }
}

// ---------------------------------------------------------------------------
// primes

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{p} is not prime")))
    }
}

/// Result of trial division: the primes found and whatever is left over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialFactorisation {
    pub primes: Vec<(u64, u32)>,
    /// `1` when factoring completed.
    pub cofactor: BigInt,
}

/// Trial division of `|n|` by all primes up to `bound`. A leftover cofactor
/// below `bound²` is prime and gets moved into the list.
pub fn trial_factor(n: &BigInt, bound: u64) -> TrialFactorisation {
    let mut rest = n.abs();
    let mut primes = Vec::new();
    if rest.is_zero() {
        return TrialFactorisation { primes, cofactor: rest };
    }
    let mut d: u64 = 2;
    while d <= bound {
        let bd = BigInt::from(d);
        if &bd * &bd > rest {
            break;
        }
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&bd);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            primes.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > BigInt::one() {
        let bd = BigInt::from(d);
        let fully_searched = &bd * &bd > rest;
        if fully_searched {
            if let Some(q) = rest.to_u64() {
                primes.push((q, 1));
                primes.sort();
                rest = BigInt::one();
            }
        }
    }
    TrialFactorisation { primes, cofactor: rest }
}

// ---------------------------------------------------------------------------
// prime field

/// The prime field `F_p`; elements are `u64` values in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        check_prime(p)?;
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.p as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.p - b % self.p)
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.p)
    }

    /// Inverse of a nonzero element.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p - 2)
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    pub fn reduce_int(&self, n: &BigInt) -> u64 {
        let r = n.mod_floor(&BigInt::from(self.p));
        r.to_u64().expect("residue fits in u64")
    }

    /// Reduction of a `p`-integral rational; `None` if `p` divides the denominator.
    pub fn reduce(&self, q: &Rational) -> Option<u64> {
        let d = self.reduce_int(q.denom());
        if d == 0 {
            return None;
        }
        Some(self.mul(self.reduce_int(q.numer()), self.inv(d)))
    }

    /// The representative in `(-p/2, p/2]`.
    pub fn centered(&self, a: u64) -> BigInt {
        if a > self.p / 2 {
            BigInt::from(a) - BigInt::from(self.p)
        } else {
            BigInt::from(a)
        }
    }
}

// ---------------------------------------------------------------------------
// univariate polynomials over F_p (dense, constant term first)

mod poly {
    use super::PrimeField;

    pub fn trim(mut f: Vec<u64>) -> Vec<u64> {
        while f.last() == Some(&0) {
            f.pop();
        }
        f
    }

    /// Division with remainder; `g` must be nonzero after trimming.
    pub fn poly_divrem(k: &PrimeField, f: &[u64], g: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let g = trim(g.to_vec());
        assert!(!g.is_empty(), "polynomial division by zero");
        let mut r = trim(f.to_vec());
        if r.len() < g.len() {
            return (Vec::new(), r);
        }
        let lead_inv = k.inv(*g.last().unwrap());
        let mut q = vec![0; r.len() - g.len() + 1];
        while r.len() >= g.len() {
            let shift = r.len() - g.len();
            let c = k.mul(*r.last().unwrap(), lead_inv);
            q[shift] = c;
            for (i, gi) in g.iter().enumerate() {
                r[shift + i] = k.sub(r[shift + i], k.mul(c, *gi));
            }
            r = trim(r);
        }
        (trim(q), r)
    }

    pub fn monic(k: &PrimeField, f: Vec<u64>) -> Vec<u64> {
        let f = trim(f);
        match f.last() {
            None => f,
            Some(&lead) => {
                let inv = k.inv(lead);
                f.into_iter().map(|c| k.mul(c, inv)).collect()
            }
        }
    }

    /// Monic gcd; zero if both inputs are zero.
    pub fn poly_gcd(k: &PrimeField, f: &[u64], g: &[u64]) -> Vec<u64> {
        let mut a = trim(f.to_vec());
        let mut b = trim(g.to_vec());
        while !b.is_empty() {
            let (_, r) = poly_divrem(k, &a, &b);
            a = b;
            b = r;
        }
        monic(k, a)
    }

    fn mul(k: &PrimeField, f: &[u64], g: &[u64]) -> Vec<u64> {
        if f.is_empty() || g.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0; f.len() + g.len() - 1];
        for (i, a) in f.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                out[i + j] = k.add(out[i + j], k.mul(*a, *b));
            }
        }
        trim(out)
    }

    fn mul_mod(k: &PrimeField, f: &[u64], g: &[u64], m: &[u64]) -> Vec<u64> {
        poly_divrem(k, &mul(k, f, g), m).1
    }

    /// `base^e mod m`.
    fn pow_mod(k: &PrimeField, base: &[u64], mut e: u64, m: &[u64]) -> Vec<u64> {
        let mut result = poly_divrem(k, &[1], m).1;
        let mut b = poly_divrem(k, base, m).1;
        while e > 0 {
            if e & 1 == 1 {
                result = mul_mod(k, &result, &b, m);
            }
            b = mul_mod(k, &b, &b, m);
            e >>= 1;
        }
        result
    }

    fn eval(k: &PrimeField, f: &[u64], x: u64) -> u64 {
        f.iter().rev().fold(0, |acc, c| k.add(k.mul(acc, x), *c))
    }

    const EXHAUSTIVE_LIMIT: u64 = 256;

    /// Distinct roots of a squarefree product of linear factors.
    fn split_roots(k: &PrimeField, g: Vec<u64>, out: &mut Vec<u64>) {
        let g = monic(k, g);
        match g.len() {
            0 | 1 => {}
            2 => out.push(k.neg(g[0])),
            _ => {
                let p = k.p();
                if p == 2 || p <= EXHAUSTIVE_LIMIT {
                    out.extend((0..p).filter(|&x| eval(k, &g, x) == 0));
                    return;
                }
                // Equal-degree splitting with shifts a = 0, 1, 2, ...; every pair of
                // distinct roots is separated by some shift.
                for a in 0..p {
                    let h = pow_mod(k, &[a, 1], (p - 1) / 2, &g);
                    let mut h1 = h.clone();
                    if h1.is_empty() {
                        h1.push(0);
                    }
                    h1[0] = k.sub(h1[0], 1);
                    let d = poly_gcd(k, &g, &h1);
                    if d.len() > 1 && d.len() < g.len() {
                        let (q, _) = poly_divrem(k, &g, &d);
                        split_roots(k, d, out);
                        split_roots(k, q, out);
                        return;
                    }
                }
                unreachable!("root splitting failed for a squarefree split polynomial");
            }
        }
    }

    /// All roots in `F_p` with multiplicity, sorted ascending.
    pub fn poly_roots(k: &PrimeField, f: &[u64]) -> Vec<u64> {
        let f = trim(f.to_vec());
        assert!(!f.is_empty(), "roots of the zero polynomial");
        if f.len() == 1 {
            return Vec::new();
        }
        let p = k.p();
        let distinct = if p <= EXHAUSTIVE_LIMIT {
            (0..p).filter(|&x| eval(k, &f, x) == 0).collect::<Vec<_>>()
        } else {
            // gcd(f, t^p - t) collects the linear factors.
            let xp = pow_mod(k, &[0, 1], p, &f);
            let mut xp_minus_x = xp;
            xp_minus_x.resize(xp_minus_x.len().max(2), 0);
            xp_minus_x[1] = k.sub(xp_minus_x[1], 1);
            let g = poly_gcd(k, &f, &trim(xp_minus_x));
            let mut roots = Vec::new();
            split_roots(k, g, &mut roots);
            roots
        };
        let mut out = Vec::new();
        for r in distinct {
            let lin = [k.neg(r), 1];
            let mut cur = f.clone();
            loop {
                let (q, rem) = poly_divrem(k, &cur, &lin);
                if !rem.is_empty() {
                    break;
                }
                out.push(r);
                cur = q;
            }
        }
        out.sort_unstable();
        out
    }
}

// ---------------------------------------------------------------------------
// binary forms

/// Maximum degree handled by [`BinaryForm`].
pub const BINARY_FORM_MAX_DEGREE: usize = 4;

/// Homogeneous form in `x1, x2` over `F_p`; `coeffs[i]` multiplies `x1^(d-i) x2^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryForm {
    field: PrimeField,
    coeffs: Vec<u64>,
}

impl BinaryForm {
    pub fn new(field: PrimeField, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > BINARY_FORM_MAX_DEGREE + 1 {
            return Err(Error::InvalidArgument(format!(
                "binary form degree must be between 0 and {BINARY_FORM_MAX_DEGREE}"
            )));
        }
        let coeffs = coeffs.into_iter().map(|c| c % field.p()).collect();
        Ok(BinaryForm { field, coeffs })
    }

    pub fn from_i64(field: PrimeField, coeffs: &[i64]) -> Result<Self> {
        Self::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn eval(&self, x1: u64, x2: u64) -> u64 {
        let k = &self.field;
        let d = self.degree() as u64;
        self.coeffs.iter().enumerate().fold(0, |acc, (i, &c)| {
            let term = k.mul(c, k.mul(k.pow(x1, d - i as u64), k.pow(x2, i as u64)));
            k.add(acc, term)
        })
    }

    /// Scaled so that the first nonzero coefficient (highest power of `x1`) is 1.
    pub fn normalized(&self) -> BinaryForm {
        let k = &self.field;
        match self.coeffs.iter().find(|&&c| c != 0) {
            None => self.clone(),
            Some(&lead) => {
                let inv = k.inv(lead);
                BinaryForm {
                    field: self.field,
                    coeffs: self.coeffs.iter().map(|&c| k.mul(c, inv)).collect(),
                }
            }
        }
    }

    /// Number of factors `x2` dividing the form, and the dehomogenised cofactor
    /// in `t = x1/x2` (constant term first).
    fn split_x2(&self) -> (usize, Vec<u64>) {
        let m = self.coeffs.iter().take_while(|&&c| c == 0).count();
        let rest: Vec<u64> = self.coeffs[m..].iter().rev().copied().collect();
        (m, trim(rest))
    }

    fn from_x2_and_univariate(field: PrimeField, m: usize, f: &[u64]) -> BinaryForm {
        // f(t) of degree e homogenises to sum f_j x1^j x2^(e-j), times x2^m.
        let e = f.len() - 1;
        let mut coeffs = vec![0; e + m + 1];
        for (j, c) in f.iter().enumerate() {
            coeffs[e - j + m] = *c;
        }
        BinaryForm { field, coeffs }
    }
}

/// A linear factor `alpha x1 + beta x2`, normalised so the first nonzero
/// entry of `(alpha, beta)` is 1.
pub type LinearFactor = (u64, u64);

/// All linear factors of a nonzero binary form, repeated by multiplicity.
/// Factors `x1 + beta x2` come first ordered by `beta`, then `x2`.
pub fn linear_factors(form: &BinaryForm) -> Result<Vec<LinearFactor>> {
    if form.is_zero() {
        return Err(Error::InvalidArgument("linear factors of the zero form".into()));
    }
    let k = form.field;
    let (m, g) = form.split_x2();
    let mut out: Vec<LinearFactor> = poly_roots(&k, &g)
        .into_iter()
        .map(|r| (1, k.neg(r)))
        .collect();
    out.sort_by_key(|&(_, beta)| beta);
    out.extend(std::iter::repeat_n((0, 1), m));
    Ok(out)
}

/// Monic greatest common divisor of two binary forms, not both zero.
pub fn gcd_binary_forms(a: &BinaryForm, b: &BinaryForm) -> Result<BinaryForm> {
    if a.field != b.field {
        return Err(Error::InvalidArgument("binary forms over different fields".into()));
    }
    match (a.is_zero(), b.is_zero()) {
        (true, true) => Err(Error::InvalidArgument("gcd of two zero forms".into())),
        (true, false) => Ok(b.normalized()),
        (false, true) => Ok(a.normalized()),
        (false, false) => {
            let k = a.field;
            let (ma, fa) = a.split_x2();
            let (mb, fb) = b.split_x2();
            let g = poly_gcd(&k, &fa, &fb);
            Ok(BinaryForm::from_x2_and_univariate(k, ma.min(mb), &g).normalized())
        }
    }
}

/// Multiplies two binary forms (used for reconstruction checks).
pub fn mul_binary_forms(a: &BinaryForm, b: &BinaryForm) -> BinaryForm {
    let k = a.field;
    let mut coeffs = vec![0; a.coeffs.len() + b.coeffs.len() - 1];
    for (i, x) in a.coeffs.iter().enumerate() {
        for (j, y) in b.coeffs.iter().enumerate() {
            coeffs[i + j] = k.add(coeffs[i + j], k.mul(*x, *y));
        }
    }
    BinaryForm { field: k, coeffs }
}

/// Exact division of binary forms; `None` if the remainder is nonzero.
pub fn div_binary_forms(a: &BinaryForm, b: &BinaryForm) -> Option<BinaryForm> {
    if b.is_zero() || b.degree() > a.degree() {
        return None;
    }
    let k = a.field;
    let mut rem = a.coeffs.clone();
    let lead_idx = b.coeffs.iter().position(|&c| c != 0).unwrap();
    let inv = k.inv(b.coeffs[lead_idx]);
    let qd = a.degree() - b.degree();
    let mut q = vec![0; qd + 1];
    for i in 0..=qd {
        let pos = i + lead_idx;
        if pos >= rem.len() {
            break;
        }
        let c = k.mul(rem[pos], inv);
        q[i] = c;
        for (j, bj) in b.coeffs.iter().enumerate() {
            rem[i + j] = k.sub(rem[i + j], k.mul(c, *bj));
        }
    }
    if rem.iter().all(|&c| c == 0) {
        Some(BinaryForm { field: k, coeffs: q })
    } else {
        None
    }
}

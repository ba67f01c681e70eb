//! Weights `(w1, w2, w3, w4)`: dominance, duality, the reduction to twelve
//! representatives, and an exhaustive admissibility oracle for `p = 2, 3`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{check_prime, prime_power, vp, PrimeField, Rational, Valuation};
use crate::error::{invalid, Result};
use crate::linalg::{Mat4Q, QMatrix, PAIRS};
use crate::model::{coeff_pairs, QuadForm6};

/// An integer 4-tuple. Dominance is evaluated on the tuple as given; use
/// [`Weight::canonical`] for the sorted representative with `w1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(pub [i64; 4]);

impl Weight {
    pub const fn new(w: [i64; 4]) -> Self {
        Weight(w)
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }

    /// Sorted ascending and shifted so the smallest entry is 0.
    pub fn canonical(&self) -> Weight {
        let mut w = self.0;
        w.sort_unstable();
        let m = w[0];
        Weight(w.map(|x| x - m))
    }

    /// `w_i + w_j` for each coordinate `z_ij`.
    pub fn pair_weights(&self) -> [i64; 6] {
        PAIRS.map(|(i, j)| self.0[i] + self.0[j])
    }

    /// `Diag(p^w1, …, p^w4)`.
    pub fn diagonal_matrix(&self, p: u64) -> Mat4Q {
        QMatrix::diagonal(&self.0.map(|e| prime_power(p, e)))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// Entry `(r, s)` is `max(1 + Σw - w_i - w_j - w_k - w_l, 0)` where `r = (i,j)`
/// and `s = (k,l)`: the valuation forced on `H_rs` when `Diag(p^w)` is admissible.
pub fn valuation_floor_matrix(w: &Weight) -> [[i64; 6]; 6] {
    let m = w.pair_weights();
    let s = w.sum();
    std::array::from_fn(|r| std::array::from_fn(|c| (1 + s - m[r] - m[c]).max(0)))
}

/// Dominance: every entry of the floor matrix of `w` is at
/// least the corresponding entry for `w2`.
pub fn dominates(w: &Weight, w2: &Weight) -> bool {
    let a = valuation_floor_matrix(w);
    let b = valuation_floor_matrix(w2);
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| x >= y)
}

/// The twelve representatives, in the order they are usually listed.
pub const TWELVE_WEIGHTS: [Weight; 12] = [
    Weight([0, 0, 0, 0]),
    Weight([0, 0, 0, 1]),
    Weight([0, 1, 1, 1]),
    Weight([0, 0, 1, 1]),
    Weight([0, 0, 1, 2]),
    Weight([0, 1, 2, 2]),
    Weight([0, 1, 1, 2]),
    Weight([0, 1, 1, 3]),
    Weight([0, 2, 2, 3]),
    Weight([0, 1, 2, 3]),
    Weight([0, 1, 2, 4]),
    Weight([0, 2, 3, 4]),
];

pub fn twelve_weights() -> Vec<Weight> {
    TWELVE_WEIGHTS.to_vec()
}

/// Canonical representative of `-w`.
pub fn dual_weight(w: &Weight) -> Weight {
    Weight(w.0.map(|x| -x)).canonical()
}

/// The shape of `0 <= a <= b <= c` by which inequalities are equalities, and
/// for the two generic shapes how `a + b` compares with `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofCase {
    AllZero,
    ZeroZeroLess,
    ZeroLessEqual,
    ZeroLessLess,
    PositiveAllEqual,
    EqualLess(std::cmp::Ordering),
    LessEqual,
    AllDistinct(std::cmp::Ordering),
}

/// Classifies `(0, a, b, c)`; `None` unless `0 <= a <= b <= c`.
pub fn proof_case(a: i64, b: i64, c: i64) -> Option<ProofCase> {
    if !(0 <= a && a <= b && b <= c) {
        return None;
    }
    let sum = (a + b).cmp(&c);
    Some(match (a == 0, a == b, b == c) {
        (true, true, true) => ProofCase::AllZero,
        (true, true, false) => ProofCase::ZeroZeroLess,
        (true, false, true) => ProofCase::ZeroLessEqual,
        (true, false, false) => ProofCase::ZeroLessLess,
        (false, true, true) => ProofCase::PositiveAllEqual,
        (false, true, false) => ProofCase::EqualLess(sum),
        (false, false, true) => ProofCase::LessEqual,
        (false, false, false) => ProofCase::AllDistinct(sum),
    })
}

/// The weight each shape is claimed to dominate.
pub fn proof_case_target(case: ProofCase) -> Weight {
    use std::cmp::Ordering::*;
    Weight(match case {
        ProofCase::AllZero => [0, 0, 0, 0],
        ProofCase::ZeroZeroLess => [0, 0, 0, 1],
        ProofCase::ZeroLessEqual => [0, 0, 1, 1],
        ProofCase::ZeroLessLess => [0, 0, 1, 2],
        ProofCase::PositiveAllEqual => [0, 1, 1, 1],
        ProofCase::EqualLess(Less) => [0, 1, 1, 3],
        ProofCase::EqualLess(Equal) => [0, 1, 1, 2],
        ProofCase::EqualLess(Greater) => [0, 2, 2, 3],
        ProofCase::LessEqual => [0, 1, 2, 2],
        ProofCase::AllDistinct(Less) => [0, 1, 2, 4],
        ProofCase::AllDistinct(Equal) => [0, 1, 2, 3],
        ProofCase::AllDistinct(Greater) => [0, 2, 3, 4],
    })
}

/// Outcome of sweeping all `(0, a, b, c)` with `c <= bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSweep {
    pub checked: usize,
    /// Weights dominating none of the twelve.
    pub uncovered: Vec<Weight>,
    /// Weights not dominating the target predicted by their shape.
    pub case_failures: Vec<(Weight, Weight)>,
}

impl WeightSweep {
    pub fn holds(&self) -> bool {
        self.uncovered.is_empty() && self.case_failures.is_empty()
    }
}

pub fn twelve_weight_sweep(bound: i64) -> WeightSweep {
    let mut sweep = WeightSweep { checked: 0, uncovered: Vec::new(), case_failures: Vec::new() };
    for c in 0..=bound {
        for b in 0..=c {
            for a in 0..=b {
                let w = Weight([0, a, b, c]);
                sweep.checked += 1;
                if !TWELVE_WEIGHTS.iter().any(|t| dominates(&w, t)) {
                    sweep.uncovered.push(w);
                }
                let target = proof_case_target(proof_case(a, b, c).expect("ordered"));
                if !dominates(&w, &target) {
                    sweep.case_failures.push((w, target));
                }
            }
        }
    }
    sweep
}

/// Every `(0, a, b, c)` with `0 <= a <= b <= c <= bound` dominates one of the
/// twelve weights, and the one predicted by its shape.
pub fn verify_twelve_weight_lemma(bound: i64) -> bool {
    twelve_weight_sweep(bound).holds()
}

/// Whether `P = U Diag(p^w)` gives `v((1/det P) H ∘ ∧²P) > 0`, for an integral
/// `U` invertible at `p`.
pub fn is_admissible_via(h: &QuadForm6, w: &Weight, u: &Mat4Q, p: u64) -> Result<bool> {
    check_prime(p)?;
    let d = u.det();
    if !u.is_integral() || d.is_zero() || vp(&d, p) != Valuation::Finite(0) {
        return invalid("U must be integral with determinant prime to p");
    }
    let pm = u * &w.diagonal_matrix(p);
    let out = h.act(&pm);
    Ok(out.valuation(p)? > Valuation::Finite(0))
}

// ---------------------------------------------------------------------------
// exhaustive oracle

/// Column bases of one representative for each complete flag in `F_p^4`.
fn complete_flags(k: PrimeField) -> Vec<[[u64; 4]; 4]> {
    let p = k.p();
    // normalised vectors supported on the given coordinates
    let projective = |support: &[usize]| -> Vec<[u64; 4]> {
        let mut out = Vec::new();
        let n = support.len();
        for lead in 0..n {
            let free = n - lead - 1;
            for code in 0..p.pow(free as u32) {
                let mut v = [0u64; 4];
                v[support[lead]] = 1;
                let mut c = code;
                for &s in &support[lead + 1..] {
                    v[s] = c % p;
                    c /= p;
                }
                out.push(v);
            }
        }
        out
    };
    let mut flags = Vec::new();
    for v1 in projective(&[0, 1, 2, 3]) {
        let p1 = v1.iter().position(|&x| x != 0).unwrap();
        let s2: Vec<usize> = (0..4).filter(|&i| i != p1).collect();
        for v2 in projective(&s2) {
            let p2 = v2.iter().position(|&x| x != 0).unwrap();
            let s3: Vec<usize> = s2.iter().copied().filter(|&i| i != p2).collect();
            for v3 in projective(&s3) {
                let p3 = v3.iter().position(|&x| x != 0).unwrap();
                let last = s3.iter().copied().find(|&i| i != p3).unwrap();
                let mut v4 = [0u64; 4];
                v4[last] = 1;
                let cols = [v1, v2, v3, v4];
                flags.push(std::array::from_fn(|r| std::array::from_fn(|c| cols[c][r])));
            }
        }
    }
    flags
}

/// `∧²` of an integer matrix, reduced mod `m`.
fn wedge2_mod(b: &[[i64; 4]; 4], m: i64) -> [[i64; 6]; 6] {
    std::array::from_fn(|r| {
        std::array::from_fn(|s| {
            let (i, j) = PAIRS[r];
            let (k, l) = PAIRS[s];
            (b[i][k] * b[j][l] - b[i][l] * b[j][k]).rem_euclid(m)
        })
    })
}

/// Coefficients of `H ∘ M` mod `m` as a symmetric coefficient array where
/// `out[r][s]` for `r < s` is the coefficient of `z_r z_s` and `out[r][r]` that of `z_r^2`.
fn compose_mod(h: &[[i64; 6]; 6], w: &[[i64; 6]; 6], m: i64) -> [[i64; 6]; 6] {
    let mut out = [[0i64; 6]; 6];
    for i in 0..6 {
        for j in i..6 {
            let c = h[i][j];
            if c == 0 {
                continue;
            }
            for a in 0..6 {
                let wia = w[i][a];
                let wja = w[j][a];
                if wia == 0 && wja == 0 {
                    continue;
                }
                out[a][a] = (out[a][a] + c * (wia * wja % m)) % m;
                for b in a + 1..6 {
                    let t = (wia * w[j][b] + w[i][b] * wja) % m;
                    out[a][b] = (out[a][b] + c * t) % m;
                }
            }
        }
    }
    out
}

fn reduce_mod(q: &Rational, m: i64) -> i64 {
    let mm = BigInt::from(m);
    let n = q.numer().mod_floor(&mm).to_i64().unwrap();
    let d = q.denom().mod_floor(&mm);
    let inv = d.extended_gcd(&mm).x.mod_floor(&mm).to_i64().unwrap();
    (n * inv).rem_euclid(m)
}

/// Size limit for the oracle: `p = 2` or `p = 3`.
pub const ORACLE_MAX_PRIME: u64 = 3;

/// Whether some `P ∈ GL_4(Q_p)` gives `v((1/det P) H ∘ ∧²P) > 0`.
///
/// For each of the twelve weights this enumerates every lattice of that
/// elementary-divisor type, `g N Diag(p^w) Z_p^4`, with `g` running over
/// complete-flag representatives of `GL_4(F_p)` and `N` over the lower
/// unitriangular matrices `I + p T` that give distinct lattices.
pub fn brute_force_minimisable(h: &QuadForm6, p: u64) -> Result<bool> {
    match oracle_input(h, p)? {
        None => Ok(true),
        Some(hm) => Ok(search(&hm, p, &TWELVE_WEIGHTS)),
    }
}

/// Whether `w` alone is admissible for `H`: some `U ∈ GL_4(Z_p)` gives
/// `v((1/det P) H ∘ ∧²P) > 0` for `P = U Diag(p^w)`. Same limits as
/// [`brute_force_minimisable`].
pub fn weight_admissible(h: &QuadForm6, w: &Weight, p: u64) -> Result<bool> {
    let w = w.canonical();
    if w.sum() > TWELVE_WEIGHTS.iter().map(Weight::sum).max().unwrap() {
        return invalid("weight too large for the oracle");
    }
    match oracle_input(h, p)? {
        None => Ok(true),
        Some(hm) => Ok(search(&hm, p, &[w])),
    }
}

/// Coefficients mod a power of `p` large enough for every listed weight;
/// `None` when `v(H) > 0` already.
fn oracle_input(h: &QuadForm6, p: u64) -> Result<Option<[[i64; 6]; 6]>> {
    check_prime(p)?;
    if p > ORACLE_MAX_PRIME {
        return invalid(format!("the exhaustive oracle only supports p <= {ORACLE_MAX_PRIME}"));
    }
    let v = h.valuation(p)?;
    if v < Valuation::Finite(0) {
        return invalid("form is not integral at p");
    }
    if v > Valuation::Finite(0) {
        return Ok(None);
    }
    let max_sum = TWELVE_WEIGHTS.iter().map(Weight::sum).max().unwrap();
    let modulus = (p as i64).pow(max_sum as u32 + 1);
    let mut hm = [[0i64; 6]; 6];
    for (i, j) in coeff_pairs() {
        hm[i][j] = reduce_mod(h.coeff(i, j), modulus);
    }
    Ok(Some(hm))
}

fn search(hm: &[[i64; 6]; 6], p: u64, weights: &[Weight]) -> bool {
    let k = PrimeField::new(p).expect("prime");
    let pi = p as i64;
    let floors: Vec<[[i64; 6]; 6]> = weights.iter().map(valuation_floor_matrix).collect();
    for g in complete_flags(k) {
        let gi = g.map(|r| r.map(|x| x as i64));
        let residue = compose_mod(hm, &wedge2_mod(&gi, pi), pi);
        for (w, floor) in weights.iter().zip(&floors) {
            let passes_mod_p =
                coeff_pairs().all(|(r, s)| floor[r][s] == 0 || residue[r][s] == 0);
            if passes_mod_p && lattice_search(hm, &gi, w, floor, pi) {
                return true;
            }
        }
    }
    false
}

/// Runs over `N = I + p T` for a fixed flag `g` and weight `w`.
fn lattice_search(hm: &[[i64; 6]; 6], g: &[[i64; 4]; 4], w: &Weight, floor: &[[i64; 6]; 6], p: i64) -> bool {
    let need = floor.iter().flatten().copied().max().unwrap_or(0);
    let m = p.pow(need.max(1) as u32);
    let h: [[i64; 6]; 6] = hm.map(|r| r.map(|x| x.rem_euclid(m)));
    let wt = w.0;
    // free lower entries (i > j) and the number of values each takes
    let mut slots: Vec<(usize, usize, i64)> = Vec::new();
    for i in 0..4 {
        for j in 0..i {
            let gap = wt[i] - wt[j];
            if gap >= 2 {
                slots.push((i, j, p.pow(gap as u32 - 1)));
            }
        }
    }
    let total: i64 = slots.iter().map(|s| s.2).product();
    for code in 0..total {
        let mut n = [[0i64; 4]; 4];
        for (i, row) in n.iter_mut().enumerate() {
            row[i] = 1;
        }
        let mut c = code;
        for &(i, j, count) in &slots {
            n[i][j] = p * (c % count);
            c /= count;
        }
        let mut b = [[0i64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                b[i][j] = (0..4).map(|t| g[i][t] * n[t][j]).sum::<i64>() % m;
            }
        }
        let wedge = wedge2_mod(&b, m);
        let composed = compose_mod(&h, &wedge, m);
        let ok = coeff_pairs().all(|(r, s)| {
            let f = floor[r][s];
            f == 0 || composed[r][s] % p.pow(f as u32) == 0
        });
        if ok {
            return true;
        }
    }
    false
}

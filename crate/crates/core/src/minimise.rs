//! The three diagonal operations, the subalgorithm suggesting transformations
//! for an isotropic subspace, the Step 2 search for common isotropic 3-spaces,
//! and the iterative minimisation algorithm with local and global drivers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{
    check_prime, gcd_binary_forms, linear_factors, prime_power, trial_factor, vp, BinaryForm,
    PrimeField, Rational, Valuation,
};
use crate::error::{invalid, Result};
use crate::linalg::{
    basis_through_flag, g_gram_fp, kernel, lift_to_sl4z, unit, v0_of, v1_of, wedge2_fp, FpMatrix,
    Mat4Q, Subspace,
};
use crate::model::{
    coeff_pairs, lambda_lower_bound, pfaffian_form_fp, FpQuadForm, Model, QuadForm6, ResidueForm,
    Transform,
};
use crate::weights::Weight;

/// `Diag(1,1,1,p)`.
pub const OPERATION_1: Weight = Weight([0, 0, 0, 1]);
/// `Diag(1,1,p,p)`, normalised as `z12 ↦ z12/p, z34 ↦ p z34`.
pub const OPERATION_2: Weight = Weight([0, 0, 1, 1]);
/// `Diag(1,p,p,p)`.
pub const OPERATION_3: Weight = Weight([0, 1, 1, 1]);

/// Largest number of visits to Step 1 in one run.
pub const MAX_VISITS: usize = 5;

/// `(1/det P) H ∘ ∧²P` for `P = Diag(p^w)`: the coefficient of `z_r z_s` is
/// multiplied by `p^(m_r + m_s - Σw)`.
pub fn apply_weight(h: &QuadForm6, w: &Weight, p: u64) -> QuadForm6 {
    let m = w.pair_weights();
    let s = w.sum();
    let mut coeffs = h.coeffs().clone();
    for ((r, c), x) in coeff_pairs().zip(coeffs.iter_mut()) {
        let e = m[r] + m[c] - s;
        if e != 0 && !x.is_zero() {
            *x *= prime_power(p, e);
        }
    }
    QuadForm6::new(coeffs)
}

// ---------------------------------------------------------------------------
// moving subspaces into standard position

/// Standard subspaces that the integral changes of coordinates aim for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    /// `⟨e12⟩`
    Line,
    /// `⟨e12, e13⟩`
    Pencil,
    /// `⟨e12, e13, e14⟩`
    Alpha,
    /// `⟨e12, e13, e23⟩`
    Beta,
    /// `{z34 = 0}`
    Hyperplane,
}

impl Target {
    fn subspace(self, k: PrimeField) -> Subspace {
        let idx: &[usize] = match self {
            Target::Line => &[0],
            Target::Pencil => &[0, 1],
            Target::Alpha => &[0, 1, 3],
            Target::Beta => &[0, 1, 2],
            Target::Hyperplane => &[0, 1, 2, 3, 4],
        };
        Subspace::coordinate(k, 6, idx)
    }
}

/// `L` over `F_p` with `∧²L · target = w`, so that after `H ↦ H ∘ ∧²L` the
/// subspace `w` becomes the target. `None` when no such `L` exists.
fn transport(w: &Subspace, target: Target) -> Option<FpMatrix> {
    let k = w.field();
    let v0 = v0_of(w);
    let l = match target {
        Target::Line => {
            (w.dim() == 1 && v0.dim() == 2).then(|| basis_through_flag(k, 4, &[&v0]))?
        }
        Target::Pencil => {
            if w.dim() != 2 || v0.dim() != 1 {
                return None;
            }
            let u = w
                .basis()
                .iter()
                .map(|b| v0_of(&Subspace::span(k, 6, [b.clone()])))
                .fold(Subspace::zero(k, 4), |acc, s| acc.sum(&s));
            (u.dim() == 3).then(|| basis_through_flag(k, 4, &[&v0, &u]))?
        }
        Target::Alpha => {
            (w.dim() == 3 && v0.dim() == 1).then(|| basis_through_flag(k, 4, &[&v0]))?
        }
        Target::Beta => {
            if w.dim() != 3 {
                return None;
            }
            let gw = w.image(&g_gram_fp(k));
            let u = v0_of(&gw).annihilator();
            (u.dim() == 3).then(|| basis_through_flag(k, 4, &[&u]))?
        }
        Target::Hyperplane => {
            let v1 = v1_of(w);
            (w.dim() == 5 && v1.dim() == 2).then(|| basis_through_flag(k, 4, &[&v1]))?
        }
    };
    (target.subspace(k).image(&wedge2_fp(&l)) == *w).then_some(l)
}

/// Integral matrix of determinant 1 moving `w` to the target.
fn integral_change(w: &Subspace, target: Target) -> Option<Mat4Q> {
    let l = transport(w, target)?;
    Some(lift_to_sl4z(&l).expect("transport matrices are invertible"))
}

fn is_g_isotropic(w: &Subspace) -> bool {
    pfaffian_form_fp(w.field()).restrict(w).is_zero()
}

// ---------------------------------------------------------------------------
// the subalgorithm

/// One suggested transformation: an integral change followed by a diagonal operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Suggestion {
    pub change: Mat4Q,
    pub weight: Weight,
}

impl Suggestion {
    pub fn matrix(&self, p: u64) -> Mat4Q {
        &self.change * &self.weight.diagonal_matrix(p)
    }

    fn apply(&self, h: &QuadForm6, p: u64) -> QuadForm6 {
        apply_weight(&h.act(&self.change), &self.weight, p)
    }
}

fn suggestions(w: &Subspace) -> Result<Vec<Suggestion>> {
    if w.ambient() != 6 || w.dim() == 0 || w.dim() > 3 {
        return invalid("the subspace must have dimension 1, 2 or 3 in k^6");
    }
    if !is_g_isotropic(w) {
        return invalid("the subspace is not isotropic for G");
    }
    let plan: &[(Target, Weight)] = match w.dim() {
        1 => &[(Target::Line, OPERATION_2)],
        2 => &[(Target::Pencil, OPERATION_1), (Target::Pencil, OPERATION_3)],
        _ => &[(Target::Beta, OPERATION_1), (Target::Alpha, OPERATION_3)],
    };
    Ok(plan
        .iter()
        .filter_map(|&(t, weight)| integral_change(w, t).map(|change| Suggestion { change, weight }))
        .collect())
}

/// The one or two transformations suggested for a `G`-isotropic subspace
/// `W ⊂ k^6` of dimension 1 to 3. `H` itself plays no role in the choice.
pub fn suggest_transformations(_h: &QuadForm6, w: &Subspace, p: u64) -> Result<Vec<Transform>> {
    check_prime(p)?;
    if w.field().p() != p {
        return invalid("subspace is over the wrong field");
    }
    Ok(suggestions(w)?
        .into_iter()
        .map(|s| Transform { c: Rational::one(), p: s.matrix(p) })
        .collect())
}

// ---------------------------------------------------------------------------
// Step 2

/// Coefficient tables of a bihomogeneous polynomial after substituting
/// `(z13, z23, z14, z24) = (x1 y1, x1 y2, x2 y1, x2 y2)`: entry `[i][j]` is the
/// coefficient of `x1^(d-i) x2^i y1^(d-j) y2^j`.
fn segre_table(k: PrimeField, terms: &[(Vec<usize>, u64)], d: usize) -> Vec<Vec<u64>> {
    // variable z_s for s = 1..=4 as (x index, y index)
    const XY: [(usize, usize); 5] = [(9, 9), (0, 0), (0, 1), (1, 0), (1, 1)];
    let mut t = vec![vec![0; d + 1]; d + 1];
    for (vars, c) in terms {
        let xi: usize = vars.iter().map(|&s| XY[s].0).sum();
        let yi: usize = vars.iter().map(|&s| XY[s].1).sum();
        t[xi][yi] = k.add(t[xi][yi], *c);
    }
    t
}

/// Points `(a : b)` of `P^1` at which all the given binary forms vanish; every
/// point if all forms are zero (signalled by `None`).
fn common_roots(k: PrimeField, forms: &[BinaryForm]) -> Option<Vec<(u64, u64)>> {
    let mut g: Option<BinaryForm> = None;
    for f in forms.iter().filter(|f| !f.is_zero()) {
        g = Some(match g {
            None => f.normalized(),
            Some(acc) => gcd_binary_forms(&acc, f).expect("nonzero"),
        });
    }
    let g = g?;
    if g.degree() == 0 || g.coeffs().iter().filter(|&&c| c != 0).count() == 0 {
        return Some(Vec::new());
    }
    let mut roots: Vec<(u64, u64)> = linear_factors(&g)
        .expect("nonzero")
        .into_iter()
        .map(|(al, be)| if al == 0 { (1, 0) } else { (k.neg(be), 1) })
        .collect();
    roots.dedup();
    Some(roots)
}

/// All 3-dimensional subspaces of `{z34 = 0}` isotropic for `G` and for
/// `H1 = p^-1 H(z12, …, z24, 0)` mod `p`, for `H` with `H mod p = c z34^2`.
pub fn common_isotropic_3spaces(h: &QuadForm6, p: u64) -> Result<Vec<Subspace>> {
    let k = PrimeField::new(p)?;
    let hbar = h.reduce_mod_p(p)?;
    let only_z34 = coeff_pairs().all(|(r, s)| (r, s) == (5, 5) || hbar.coeff(r, s) == 0);
    if !only_z34 || hbar.coeff(5, 5) == 0 {
        return invalid("expected a form reducing to a nonzero multiple of z34^2");
    }
    let pinv = prime_power(p, -1);
    let h1 = |r: usize, s: usize| -> u64 {
        k.reduce(&(h.coeff(r, s) * &pinv)).expect("integral after division by p")
    };
    if h1(0, 0) != 0 {
        return Ok(Vec::new());
    }
    let lin: Vec<(Vec<usize>, u64)> = (1..5).map(|s| (vec![s], h1(0, s))).collect();
    let quad: Vec<(Vec<usize>, u64)> =
        (1..5).flat_map(|r| (r..5).map(move |s| (r, s))).map(|(r, s)| (vec![r, s], h1(r, s))).collect();
    let t1 = segre_table(k, &lin, 1);
    let t2 = segre_table(k, &quad, 2);
    let form = |c: Vec<u64>| BinaryForm::new(k, c).expect("degree <= 2");
    // forms in x: fix the y-monomial; forms in y: fix the x-monomial
    let mut xforms = Vec::new();
    let mut yforms = Vec::new();
    for j in 0..2 {
        xforms.push(form((0..2).map(|i| t1[i][j]).collect()));
        yforms.push(form(t1[j].clone()));
    }
    for j in 0..3 {
        xforms.push(form((0..3).map(|i| t2[i][j]).collect()));
        yforms.push(form(t2[j].clone()));
    }
    let mut out = Vec::new();
    let e = |i: usize| unit(6, i);
    let comb = |a: u64, u: Vec<u64>, b: u64, v: Vec<u64>| -> Vec<u64> {
        u.iter().zip(&v).map(|(x, y)| k.add(k.mul(a, *x), k.mul(b, *y))).collect()
    };
    let all_points = || -> Vec<(u64, u64)> {
        let mut pts = vec![(1, 0)];
        pts.extend((0..p).map(|t| (t, 1)));
        pts
    };
    let xroots = common_roots(k, &xforms).unwrap_or_else(all_points);
    for (a, b) in xroots {
        out.push(Subspace::span(k, 6, [e(0), comb(a, e(1), b, e(3)), comb(a, e(2), b, e(4))]));
    }
    let yroots = common_roots(k, &yforms).unwrap_or_else(all_points);
    for (c, d) in yroots {
        out.push(Subspace::span(k, 6, [e(0), comb(c, e(1), d, e(2)), comb(c, e(3), d, e(4))]));
    }
    let mut seen = Vec::new();
    out.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(s.clone());
        fresh
    });
    Ok(out)
}

/// A common isotropic 3-space for `G` and `H1`, preferring the
/// `⟨e12, a e13 + b e14, a e23 + b e24⟩` family.
pub fn find_common_isotropic_3space(h: &QuadForm6, p: u64) -> Result<Option<Subspace>> {
    Ok(common_isotropic_3spaces(h, p)?.into_iter().next())
}

// ---------------------------------------------------------------------------
// factoring helpers

/// The codimension-1 subspaces of `kspace` on which `G` vanishes.
pub fn isotropic_codim1_subspaces(kspace: &Subspace) -> Result<Vec<Subspace>> {
    if kspace.ambient() != 6 {
        return invalid("expected a subspace of k^6");
    }
    let k = kspace.field();
    let g = pfaffian_form_fp(k).restrict(kspace);
    if g.is_zero() {
        return invalid("the subspace is itself isotropic for G");
    }
    let Some((l1, l2)) = g.factor_linear() else {
        return Ok(Vec::new());
    };
    let mut out: Vec<Subspace> = [l1, l2]
        .iter()
        .map(|l| {
            let coords = kernel(&FpMatrix::from_rows(k, l.len(), std::slice::from_ref(l)));
            let vectors = coords.basis().iter().map(|a| {
                let mut v = vec![0; 6];
                for (ai, b) in a.iter().zip(kspace.basis()) {
                    for (x, bx) in v.iter_mut().zip(b) {
                        *x = k.add(*x, k.mul(*ai, *bx));
                    }
                }
                v
            });
            Subspace::span(k, 6, vectors.collect::<Vec<_>>())
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// `Hbar = l1 * l2` with linear forms over `F_p`, `l1` carrying the scalar;
/// `None` for an irreducible form of rank 2.
pub fn factor_rank_le2(hbar: &ResidueForm) -> Result<Option<(Vec<u64>, Vec<u64>)>> {
    let r = hbar.rank();
    if r == 0 || r > 2 {
        return invalid(format!("factor_rank_le2 needs rank 1 or 2, got {r}"));
    }
    Ok(hbar.factor_linear())
}

// ---------------------------------------------------------------------------
// the main algorithm

/// One transformation chosen by the algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    /// Which visit to Step 1 (from 1) this belongs to.
    pub visit: usize,
    /// Algorithm step (2 to 5) that made the choice.
    pub step: u8,
    /// The subspace or hyperplane being moved, in the coordinates of that moment.
    pub subspace: Option<Subspace>,
    /// Integral change of coordinates (determinant 1).
    pub change: Option<Mat4Q>,
    /// Diagonal operation applied after the change.
    pub weight: Option<Weight>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimiseOutcome {
    pub reducible: bool,
    /// `(1, P)` with `v((1/det P) H ∘ ∧²P) > 0`, present iff reducible.
    pub transform: Option<Transform>,
    /// Returns to Step 1 after the first visit.
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

struct Run {
    p: u64,
    k: PrimeField,
    h: QuadForm6,
    acc: Mat4Q,
    trace: Vec<TraceEntry>,
}

impl Run {
    fn residue(&self) -> FpQuadForm {
        self.h.reduce_mod_p(self.p).expect("integral")
    }

    fn apply(&mut self, s: &Suggestion, visit: usize, step: u8, w: Subspace) {
        self.h = s.apply(&self.h, self.p);
        self.acc = &self.acc * &s.matrix(self.p);
        self.trace.push(TraceEntry {
            visit,
            step,
            subspace: Some(w),
            change: Some(s.change.clone()),
            weight: Some(s.weight),
        });
    }

    /// First suggestion for `w` reaching `v(H) > 0`.
    fn try_reach(&self, h: &QuadForm6, w: &Subspace) -> Option<Suggestion> {
        suggestions(w)
            .ok()?
            .into_iter()
            .find(|s| s.apply(h, self.p).val(self.p) > Valuation::Finite(0))
    }

    /// Step 2: `r = 1`.
    fn step2(&mut self, ker: &Subspace, visit: usize) -> bool {
        let Some(change) = integral_change(ker, Target::Hyperplane) else {
            return false;
        };
        let moved = self.h.act(&change);
        let Ok(spaces) = common_isotropic_3spaces(&moved, self.p) else {
            return false;
        };
        for w in spaces {
            if let Some(s) = self.try_reach(&moved, &w) {
                self.h = moved;
                self.acc = &self.acc * &change;
                self.trace.push(TraceEntry {
                    visit,
                    step: 2,
                    subspace: Some(ker.clone()),
                    change: Some(change),
                    weight: None,
                });
                self.apply(&s, visit, 2, w);
                return true;
            }
        }
        false
    }

    /// Step 3: `r = 2`.
    fn step3(&mut self, ker: &Subspace, visit: usize) -> bool {
        let Ok(spaces) = isotropic_codim1_subspaces(ker) else {
            return false;
        };
        for w in spaces.into_iter().filter(|w| w.dim() > 0) {
            if let Some(s) = self.try_reach(&self.h, &w) {
                self.apply(&s, visit, 3, w);
                return true;
            }
        }
        false
    }

    /// Candidates for Steps 4 and 5, with the rank they lead to.
    fn best(&self, candidates: Vec<(Subspace, Suggestion)>) -> Option<(Subspace, Suggestion)> {
        let mut best: Option<(usize, Subspace, Suggestion)> = None;
        for (w, s) in candidates {
            let out = s.apply(&self.h, self.p);
            if out.val(self.p) < Valuation::Finite(0) {
                continue;
            }
            let r = out.reduce_mod_p(self.p).expect("integral").rank();
            if best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, w, s));
            }
        }
        best.map(|(_, w, s)| (w, s))
    }

    fn step4(&self, hbar: &FpQuadForm) -> Option<(Subspace, Suggestion)> {
        let (l1, l2) = hbar.factor_linear()?;
        let mut hyperplanes: Vec<Subspace> = Vec::new();
        for l in [l1, l2] {
            let w = kernel(&FpMatrix::from_rows(self.k, 6, &[l]));
            if !hyperplanes.contains(&w) {
                hyperplanes.push(w);
            }
        }
        let candidates = hyperplanes
            .into_iter()
            .filter_map(|w| {
                let change = integral_change(&w, Target::Hyperplane)?;
                Some((w, Suggestion { change, weight: OPERATION_2 }))
            })
            .collect();
        self.best(candidates)
    }

    fn step5(&self, ker: &Subspace) -> Option<(Subspace, Suggestion)> {
        let spaces = if is_g_isotropic(ker) {
            vec![ker.clone()]
        } else {
            isotropic_codim1_subspaces(ker).ok()?
        };
        let candidates = spaces
            .into_iter()
            .filter(|w| (1..=3).contains(&w.dim()))
            .flat_map(|w| {
                suggestions(&w)
                    .unwrap_or_default()
                    .into_iter()
                    .map(move |s| (w.clone(), s))
            })
            .collect();
        self.best(candidates)
    }
}

/// Decides whether some `P` gives `v((1/det P) H ∘ ∧²P) > 0`, and finds one.
pub fn minimise_step(h: &QuadForm6, p: u64) -> Result<MinimiseOutcome> {
    check_prime(p)?;
    if h.valuation(p)? < Valuation::Finite(0) {
        return invalid("form is not integral at p");
    }
    let k = PrimeField::new(p)?;
    let mut run = Run { p, k, h: h.clone(), acc: Mat4Q::identity(), trace: Vec::new() };
    let mut reducible = false;
    let mut visits = 0;
    while visits < MAX_VISITS {
        visits += 1;
        let hbar = run.residue();
        let (r, ker) = hbar.rank_and_kernel();
        if r == 0 {
            reducible = true;
            break;
        }
        if r == 1 && run.step2(&ker, visits) {
            reducible = true;
            break;
        }
        if r == 2 && run.step3(&ker, visits) {
            reducible = true;
            break;
        }
        if visits == MAX_VISITS {
            break;
        }
        let chosen = if r <= 2 { run.step4(&hbar).map(|c| (4, c)) } else { None };
        let chosen = chosen.or_else(|| {
            if (2..=5).contains(&r) {
                run.step5(&ker).map(|c| (5, c))
            } else {
                None
            }
        });
        match chosen {
            Some((step, (w, s))) => run.apply(&s, visits, step, w),
            None => break,
        }
    }
    let transform = if reducible {
        debug_assert!(h.act(&run.acc).val(p) > Valuation::Finite(0));
        Some(Transform { c: Rational::one(), p: run.acc })
    } else {
        None
    };
    Ok(MinimiseOutcome { reducible, transform, iterations: visits.saturating_sub(1), trace: run.trace })
}

// ---------------------------------------------------------------------------
// drivers

/// One successful round of the local driver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRound {
    pub prime: u64,
    pub round: usize,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalResult {
    pub model: Model,
    pub transform: Transform,
    pub rounds: Vec<LocalRound>,
}

/// Repeatedly divides `λ` by `p` while the algorithm finds a transformation.
pub fn minimise_model_local(m: &Model, p: u64) -> Result<LocalResult> {
    check_prime(p)?;
    if !m.is_valid() {
        return invalid("invalid model");
    }
    let mut model = m.clone();
    let mut total = Transform::identity();
    if let Valuation::Finite(v) = model.h.val(p) {
        if v < 0 {
            let t = Transform { c: prime_power(p, -v), p: Mat4Q::identity() };
            model = model.act(&t);
            total = total.then(&t);
        }
    }
    let bound = lambda_lower_bound(&model.curve, p);
    let mut rounds = Vec::new();
    loop {
        let v = vp(&model.lambda, p).finite().expect("lambda is nonzero");
        if v <= bound {
            break;
        }
        let outcome = minimise_step(&model.h, p)?;
        let Some(t) = outcome.transform else {
            break;
        };
        let t = Transform { c: prime_power(p, -1), p: t.p };
        model = model.act(&t);
        total = total.then(&t);
        rounds.push(LocalRound { prime: p, round: rounds.len() + 1, trace: outcome.trace });
    }
    Ok(LocalResult { model, transform: total, rounds })
}

/// Environment variable overriding the trial division bound.
pub const TRIAL_BOUND_ENV: &str = "G2MIN_TRIAL_DIVISION_BOUND";
pub const DEFAULT_TRIAL_BOUND: u64 = 1_000_000;

pub fn trial_division_bound() -> u64 {
    std::env::var(TRIAL_BOUND_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_TRIAL_BOUND)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalResult {
    pub model: Model,
    pub transform: Transform,
    pub primes: Vec<u64>,
    pub rounds: Vec<LocalRound>,
    /// Set when some integer could not be fully factored.
    pub warning: Option<String>,
}

/// Primes dividing `f6`, `disc f` or `λ` (numerators and denominators), by
/// trial division, and any unfactored cofactors.
pub fn candidate_primes(m: &Model, bound: u64) -> (Vec<u64>, Vec<BigInt>) {
    let f6 = &m.curve.coeffs()[6];
    let disc = m.curve.discriminant();
    let mut primes = Vec::new();
    let mut leftovers = Vec::new();
    for q in [f6, &disc, &m.lambda] {
        for n in [q.numer(), q.denom()] {
            let t = trial_factor(n, bound);
            primes.extend(t.primes.iter().map(|&(p, _)| p));
            if t.cofactor.abs() > BigInt::one() {
                leftovers.push(t.cofactor);
            }
        }
    }
    primes.sort_unstable();
    primes.dedup();
    leftovers.sort();
    leftovers.dedup();
    (primes, leftovers)
}

/// Clears denominators, then minimises at each prime in turn.
pub fn minimise_model_global(m: &Model, primes: Option<&[u64]>) -> Result<GlobalResult> {
    if !m.is_valid() {
        return invalid("invalid model");
    }
    let mut model = m.clone();
    let mut total = Transform::identity();
    let denom = model.h.coeffs().iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    if !denom.is_one() {
        let t = Transform { c: Rational::from_integer(denom), p: Mat4Q::identity() };
        model = model.act(&t);
        total = total.then(&t);
    }
    let (primes, warning) = match primes {
        Some(ps) => {
            for &p in ps {
                check_prime(p)?;
            }
            let mut ps = ps.to_vec();
            ps.sort_unstable();
            ps.dedup();
            (ps, None)
        }
        None => {
            let (ps, rest) = candidate_primes(&model, trial_division_bound());
            let warning = (!rest.is_empty()).then(|| {
                let list: Vec<String> = rest.iter().map(ToString::to_string).collect();
                format!(
                    "trial division left unfactored cofactors {}; the result may not be minimal at their prime factors",
                    list.join(", ")
                )
            });
            (ps, warning)
        }
    };
    let mut rounds = Vec::new();
    for &p in &primes {
        let local = minimise_model_local(&model, p)?;
        model = local.model;
        total = total.then(&local.transform);
        rounds.extend(local.rounds);
    }
    Ok(GlobalResult { model, transform: total, primes, rounds, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::fixtures::*;
    use crate::linalg::wedge2_fp;

    fn k(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn chain_start(p: i64) -> QuadForm6 {
        QuadForm6::from_terms(&[
            (0, 0, rat(p.pow(5))),
            (1, 5, rat(1)),
            (2, 2, rat(p)),
            (3, 3, rat(p)),
            (4, 4, rat(1)),
        ])
    }

    #[test]
    fn operations_match_substitutions() {
        let p = 3;
        let h = example_model_2().h;
        let sub = |scale: [i64; 6], div: i64| {
            let m = crate::linalg::QMatrix::diagonal(&scale.map(|e| prime_power(p, e)));
            h.compose(&m).scale(&prime_power(p, -div))
        };
        assert_eq!(apply_weight(&h, &OPERATION_1, p), sub([0, 0, 0, 1, 1, 1], 1));
        assert_eq!(apply_weight(&h, &OPERATION_2, p), sub([-1, 0, 0, 0, 0, 1], 0));
        assert_eq!(apply_weight(&h, &OPERATION_3, p), sub([0, 0, 1, 0, 1, 1], 1));
        for w in crate::weights::TWELVE_WEIGHTS {
            assert_eq!(apply_weight(&h, &w, p), h.act(&w.diagonal_matrix(p)));
        }
    }

    #[test]
    fn first_chain_arrow() {
        let p = 5;
        let out = apply_weight(&chain_start(p), &OPERATION_1, p as u64);
        let expected = QuadForm6::from_terms(&[
            (0, 0, rat(p.pow(4))),
            (1, 5, rat(1)),
            (2, 2, rat(1)),
            (3, 3, rat(p * p)),
            (4, 4, rat(p)),
        ]);
        assert_eq!(out, expected);
    }

    #[test]
    fn transport_targets() {
        let f = k(5);
        for (w, t) in [
            (Subspace::coordinate(f, 6, &[5]), Target::Line),
            (Subspace::coordinate(f, 6, &[4, 5]), Target::Pencil),
            (Subspace::coordinate(f, 6, &[2, 4, 5]), Target::Beta),
            (Subspace::coordinate(f, 6, &[3, 4, 5]), Target::Alpha),
            (Subspace::coordinate(f, 6, &[1, 2, 3, 4, 5]), Target::Hyperplane),
        ] {
            let l = transport(&w, t).unwrap_or_else(|| panic!("{t:?}"));
            assert_eq!(t.subspace(f).image(&wedge2_fp(&l)), w);
            let lift = integral_change(&w, t).unwrap();
            assert_eq!(lift.det(), rat(1));
            assert_eq!(t.subspace(f).image(&wedge2_fp(&lift.reduce(f).unwrap())), w);
        }
        // already in position: identity
        assert_eq!(transport(&Target::Line.subspace(f), Target::Line).unwrap(), FpMatrix::identity(f, 4));
        // an alpha plane is not a beta plane
        assert!(transport(&Target::Alpha.subspace(f), Target::Beta).is_none());
        assert!(transport(&Target::Beta.subspace(f), Target::Alpha).is_none());
    }

    #[test]
    fn subalgorithm_examples() {
        let p = 3;
        let f = k(p);
        let h = QuadForm6::zero();
        let one = suggest_transformations(&h, &Subspace::coordinate(f, 6, &[0]), p).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].p, OPERATION_2.diagonal_matrix(p));
        let two = suggest_transformations(&h, &Subspace::coordinate(f, 6, &[0, 1]), p).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].p, OPERATION_1.diagonal_matrix(p));
        assert_eq!(two[1].p, OPERATION_3.diagonal_matrix(p));
        let far = suggest_transformations(&h, &Subspace::coordinate(f, 6, &[5]), p).unwrap();
        assert_eq!(far.len(), 1);
        assert!(suggest_transformations(&h, &Subspace::coordinate(f, 6, &[0, 5]), p).is_err());
    }

    #[test]
    fn isotropic_codim1_examples() {
        let f = k(5);
        let got = isotropic_codim1_subspaces(&Subspace::coordinate(f, 6, &[0, 2, 3])).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.contains(&Subspace::coordinate(f, 6, &[0, 3])));
        assert!(got.contains(&Subspace::coordinate(f, 6, &[0, 2])));
        let f3 = k(3);
        let got = isotropic_codim1_subspaces(&Subspace::coordinate(f3, 6, &[0, 5])).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.contains(&Subspace::coordinate(f3, 6, &[5])));
        assert!(got.contains(&Subspace::coordinate(f3, 6, &[0])));
        // z13 z24 - z23 z14 restricted to <e13 + e24, e23 + e14>: -x^2 + y^2 ... take an anisotropic plane
        let plane = Subspace::span(f3, 6, [vec![0, 1, 0, 0, 1, 0], vec![0, 0, 1, 2, 0, 0]]);
        let g = pfaffian_form_fp(f3).restrict(&plane);
        assert!(!g.is_zero());
        let pts = [(1u64, 0u64), (0, 1), (1, 1), (1, 2)];
        let anisotropic = pts.iter().all(|&(a, b)| g.eval(&[a, b]) != 0);
        assert_eq!(isotropic_codim1_subspaces(&plane).unwrap().is_empty(), anisotropic);
        assert!(isotropic_codim1_subspaces(&Subspace::coordinate(f, 6, &[0, 1])).is_err());
    }

    #[test]
    fn factor_examples() {
        let f = k(7);
        let mut q = FpQuadForm::zero(f, 6);
        q.set_coeff(1, 5, 1);
        assert!(factor_rank_le2(&q).unwrap().is_some());
        let mut sq = FpQuadForm::zero(f, 6);
        sq.set_coeff(5, 5, 2);
        assert_eq!(factor_rank_le2(&sq).unwrap(), Some((vec![0, 0, 0, 0, 0, 2], vec![0, 0, 0, 0, 0, 1])));
        assert!(factor_rank_le2(&FpQuadForm::zero(f, 6)).is_err());
    }

    #[test]
    fn step2_search_examples() {
        let p = 3;
        let f = k(p);
        let base = QuadForm6::from_terms(&[(5, 5, rat(1))]);
        let got = find_common_isotropic_3space(&base, p).unwrap();
        assert_eq!(got, Some(Subspace::coordinate(f, 6, &[0, 1, 2])));
        let bad = QuadForm6::from_terms(&[(5, 5, rat(1)), (0, 0, rat(3))]);
        assert_eq!(find_common_isotropic_3space(&bad, p).unwrap(), None);
        assert!(find_common_isotropic_3space(&QuadForm6::from_terms(&[(0, 0, rat(1))]), p).is_err());
    }

    #[test]
    fn rank_six_is_not_reducible() {
        let h = QuadForm6::from_terms(&(0..6).map(|i| (i, i, rat(1))).collect::<Vec<_>>());
        let out = minimise_step(&h, 3).unwrap();
        assert!(!out.reducible);
        assert_eq!(out.iterations, 0);
        assert!(out.transform.is_none());
    }

    #[test]
    fn chain_start_is_reducible() {
        for p in [2u64, 3, 5] {
            let h = chain_start(p as i64);
            let out = minimise_step(&h, p).unwrap();
            assert!(out.reducible, "p = {p}");
            assert!(out.iterations <= 4);
            let t = out.transform.unwrap();
            assert!(h.act(&t.p).valuation(p).unwrap() >= Valuation::Finite(1));
        }
    }

    #[test]
    fn local_driver_on_example() {
        let res = minimise_model_local(&example_model_1(), 7).unwrap();
        assert_eq!(vp(&res.model.lambda, 7), Valuation::Finite(1));
        assert!(res.model.is_valid());
        assert_eq!(example_model_1().act(&res.transform), res.model);
        let again = minimise_model_local(&res.model, 7).unwrap();
        assert!(again.transform.is_identity());
    }
}

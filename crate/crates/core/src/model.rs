//! Models `(λ, H)`: quadratic forms in the six Plücker coordinates, the sextic
//! they cover, the `K^× × GL_4` action, duality and reduction mod `p`.

use std::fmt;

use num_traits::{One, Zero};

use crate::arith::{
    linear_factors, rat, vp, BinaryForm, PrimeField, Rational, Valuation,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{g_gram, wedge2, FpMatrix, Mat4Q, Mat6Q, QMatrix, Subspace};

/// Number of coefficients of a quadratic form in six variables.
pub const NCOEFFS: usize = 21;

/// Position of `H_ij` (`i <= j`) in the upper-triangular lexicographic order.
pub fn coeff_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * 6 - i * (i.saturating_sub(1)) / 2 + (j - i)
}

/// Upper-triangular index pairs in storage order.
pub fn coeff_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..6).flat_map(|i| (i..6).map(move |j| (i, j)))
}

/// Quadratic form `Σ_{i<=j} H_ij z_i z_j` over `Q` in the coordinate order
/// `z12, z13, z23, z14, z24, z34`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadForm6 {
    coeffs: [Rational; NCOEFFS],
}

impl QuadForm6 {
    pub fn new(coeffs: [Rational; NCOEFFS]) -> Self {
        QuadForm6 { coeffs }
    }

    pub fn from_i64(coeffs: &[i64; NCOEFFS]) -> Self {
        QuadForm6 { coeffs: coeffs.map(rat) }
    }

    pub fn from_slice(coeffs: &[Rational]) -> Result<Self> {
        let arr: [Rational; NCOEFFS] = coeffs
            .to_vec()
            .try_into()
            .map_err(|_| Error::InvalidArgument(format!("expected {NCOEFFS} coefficients, got {}", coeffs.len())))?;
        Ok(QuadForm6 { coeffs: arr })
    }

    /// Builds a form from `(i, j, coefficient)` terms; repeated terms add up.
    pub fn from_terms(terms: &[(usize, usize, Rational)]) -> Self {
        let mut h = Self::zero();
        for (i, j, c) in terms {
            h.coeffs[coeff_index(*i, *j)] += c;
        }
        h
    }

    pub fn zero() -> Self {
        QuadForm6 { coeffs: std::array::from_fn(|_| Rational::zero()) }
    }

    /// The Pfaffian form `G = z12 z34 - z13 z24 + z23 z14`.
    pub fn pfaffian_form() -> Self {
        Self::from_terms(&[(0, 5, rat(1)), (1, 4, rat(-1)), (2, 3, rat(1))])
    }

    pub fn coeffs(&self) -> &[Rational; NCOEFFS] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> &Rational {
        &self.coeffs[coeff_index(i, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, z: &[Rational; 6]) -> Rational {
        coeff_pairs()
            .zip(&self.coeffs)
            .fold(Rational::zero(), |acc, ((i, j), c)| acc + c * &z[i] * &z[j])
    }

    /// Matrix of second partial derivatives.
    pub fn gram(&self) -> Mat6Q {
        QMatrix::from_fn(|i, j| {
            let c = self.coeff(i, j).clone();
            if i == j {
                c * rat(2)
            } else {
                c
            }
        })
    }

    /// Inverse of [`QuadForm6::gram`] on symmetric matrices.
    pub fn from_gram(m: &Mat6Q) -> Self {
        let mut h = Self::zero();
        for (idx, (i, j)) in coeff_pairs().enumerate() {
            h.coeffs[idx] = if i == j {
                m.0[i][i].clone() / rat(2)
            } else {
                m.0[i][j].clone()
            };
        }
        h
    }

    /// `H ∘ M`, i.e. `z ↦ H(M z)`.
    pub fn compose(&self, m: &Mat6Q) -> Self {
        let g = self.gram();
        Self::from_gram(&(&(&m.transpose() * &g) * m))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        QuadForm6 { coeffs: std::array::from_fn(|i| &self.coeffs[i] * s) }
    }

    /// Minimum valuation of the coefficients.
    pub fn valuation(&self, p: u64) -> Result<Valuation> {
        crate::arith::poly_valuation(&self.coeffs, p)
    }

    pub(crate) fn val(&self, p: u64) -> Valuation {
        crate::arith::min_valuation(&self.coeffs, p)
    }

    /// `(1/det P) H ∘ ∧²P`.
    pub fn act(&self, p: &Mat4Q) -> Self {
        let d = p.det();
        assert!(!d.is_zero(), "singular change of coordinates");
        self.compose(&wedge2(p)).scale(&d.recip())
    }

    /// `H(z34, -z24, z14, z23, -z13, z12)`.
    pub fn dual(&self) -> Self {
        self.compose(&g_gram())
    }

    /// Coefficientwise reduction mod `p`.
    pub fn reduce_mod_p(&self, p: u64) -> Result<FpQuadForm> {
        let k = PrimeField::new(p)?;
        let mut coeffs = Vec::with_capacity(NCOEFFS);
        for c in &self.coeffs {
            match k.reduce(c) {
                Some(x) => coeffs.push(x),
                None => return invalid(format!("form is not integral at {p}")),
            }
        }
        Ok(FpQuadForm { field: k, n: 6, coeffs })
    }
}

impl fmt::Display for QuadForm6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; 6] = ["z12", "z13", "z23", "z14", "z24", "z34"];
        let mut first = true;
        for ((i, j), c) in coeff_pairs().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == j {
                write!(f, "({c})*{}^2", NAMES[i])?;
            } else {
                write!(f, "({c})*{}*{}", NAMES[i], NAMES[j])?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// the curve

/// `f(x) = f6 x^6 + … + f0` with `f6 != 0` and nonzero discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CurveSextic {
    f: [Rational; 7],
}

impl CurveSextic {
    pub fn new(f: [Rational; 7]) -> Result<Self> {
        if f[6].is_zero() {
            return invalid("leading coefficient f6 must be nonzero");
        }
        let curve = CurveSextic { f };
        if curve.discriminant().is_zero() {
            return invalid("the sextic has a repeated root");
        }
        Ok(curve)
    }

    pub fn coeffs(&self) -> &[Rational; 7] {
        &self.f
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.f.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// `disc f = -Res(f, f') / f6`.
    pub fn discriminant(&self) -> Rational {
        let df: Vec<Rational> = (1..7).map(|i| &self.f[i] * rat(i as i64)).collect();
        // Sylvester matrix, highest degree first
        let fa: Vec<Rational> = self.f.iter().rev().cloned().collect();
        let ga: Vec<Rational> = df.iter().rev().cloned().collect();
        let s = QMatrix::<11>::from_fn(|r, c| {
            if r < 5 {
                c.checked_sub(r).and_then(|i| fa.get(i).cloned()).unwrap_or_else(Rational::zero)
            } else {
                c.checked_sub(r - 5).and_then(|i| ga.get(i).cloned()).unwrap_or_else(Rational::zero)
            }
        });
        -s.det() / &self.f[6]
    }
}

/// `ceil(max_i (v(f6) - v(f_i)) / (6 - i))`, a lower bound for `v(λ)` on
/// integral models.
pub fn lambda_lower_bound(curve: &CurveSextic, p: u64) -> i64 {
    let f = curve.coeffs();
    let v6 = vp(&f[6], p).finite().expect("f6 is nonzero");
    (0..6)
        .filter_map(|i| vp(&f[i], p).finite().map(|vi| (i, vi)))
        .map(|(i, vi)| {
            let num = v6 - vi;
            let den = 6 - i as i64;
            num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0)
        })
        .max()
        .unwrap_or(i64::MIN)
}

// ---------------------------------------------------------------------------
// models and transforms

/// A pair `(λ, H)` together with the sextic it is a model for.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Model {
    pub curve: CurveSextic,
    pub lambda: Rational,
    pub h: QuadForm6,
}

impl Model {
    /// Checks `det(λx𝐆 - 𝐇) = -λ^6 f6^-1 f(x)`.
    pub fn new(curve: CurveSextic, lambda: Rational, h: QuadForm6) -> Result<Self> {
        let m = Self::new_unchecked(curve, lambda, h);
        if m.lambda.is_zero() {
            return invalid("lambda must be nonzero");
        }
        if !m.is_valid() {
            return invalid("the determinant identity does not hold");
        }
        Ok(m)
    }

    pub fn new_unchecked(curve: CurveSextic, lambda: Rational, h: QuadForm6) -> Self {
        Model { curve, lambda, h }
    }

    /// Coefficients `c0..c6` of `det(λx𝐆 - 𝐇)` and of `-λ^6 f6^-1 f(x)`.
    pub fn validity_polynomials(&self) -> ([Rational; 7], [Rational; 7]) {
        let g = g_gram();
        let hg = self.h.gram();
        let xs: Vec<Rational> = (-3..=3).map(rat).collect();
        let ys: Vec<Rational> = xs
            .iter()
            .map(|x| {
                let s = &self.lambda * x;
                QMatrix::<6>::from_fn(|i, j| &s * &g.0[i][j] - &hg.0[i][j]).det()
            })
            .collect();
        let lhs = interpolate(&xs, &ys);
        let f = self.curve.coeffs();
        let s = -num_traits::pow(self.lambda.clone(), 6) / &f[6];
        let rhs = std::array::from_fn(|i| &s * &f[i]);
        (lhs, rhs)
    }

    pub fn is_valid(&self) -> bool {
        if self.lambda.is_zero() {
            return false;
        }
        let (a, b) = self.validity_polynomials();
        a == b
    }

    /// The right action `(λ, H) ↦ (cλ, (c/det P) H ∘ ∧²P)`.
    pub fn act(&self, t: &Transform) -> Model {
        let out = Model {
            curve: self.curve.clone(),
            lambda: &self.lambda * &t.c,
            h: self.h.act(&t.p).scale(&t.c),
        };
        debug_assert!(!self.is_valid() || out.is_valid());
        out
    }

    /// Same `λ`, dual form.
    pub fn dual(&self) -> Model {
        Model { curve: self.curve.clone(), lambda: self.lambda.clone(), h: self.h.dual() }
    }
}

/// Lagrange interpolation of a degree <= 6 polynomial through 7 points.
fn interpolate(xs: &[Rational], ys: &[Rational]) -> [Rational; 7] {
    let mut out: [Rational; 7] = std::array::from_fn(|_| Rational::zero());
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        // basis polynomial prod_{j != i} (x - xj) / (xi - xj)
        let mut basis = vec![Rational::one()];
        let mut denom = Rational::one();
        for (j, xj) in xs.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (d, b) in basis.iter().enumerate() {
                next[d + 1] += b;
                next[d] -= b * xj;
            }
            basis = next;
            denom *= xi - xj;
        }
        let s = yi / denom;
        for (d, b) in basis.iter().enumerate() {
            out[d] += b * &s;
        }
    }
    out
}

/// An element `(c, P)` of `K^× × GL_4(K)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transform {
    pub c: Rational,
    pub p: Mat4Q,
}

impl Transform {
    pub fn new(c: Rational, p: Mat4Q) -> Result<Self> {
        if c.is_zero() {
            return invalid("scalar c must be nonzero");
        }
        if p.det().is_zero() {
            return invalid("matrix P must be invertible");
        }
        Ok(Transform { c, p })
    }

    pub fn identity() -> Self {
        Transform { c: Rational::one(), p: Mat4Q::identity() }
    }

    /// `self` followed by `next`: `(c1 c2, P1 P2)`.
    pub fn then(&self, next: &Transform) -> Transform {
        Transform { c: &self.c * &next.c, p: &self.p * &next.p }
    }

    pub fn inverse(&self) -> Transform {
        Transform {
            c: self.c.recip(),
            p: self.p.inverse().expect("transform matrices are invertible"),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.c.is_one() && self.p == Mat4Q::identity()
    }
}

// ---------------------------------------------------------------------------
// forms over F_p

/// Quadratic form in `n` variables over `F_p`, upper-triangular coefficients
/// in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpQuadForm {
    field: PrimeField,
    n: usize,
    coeffs: Vec<u64>,
}

/// The reduction of a [`QuadForm6`].
pub type ResidueForm = FpQuadForm;

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i.saturating_sub(1)) / 2 + (j - i)
}

impl FpQuadForm {
    pub fn new(field: PrimeField, n: usize, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() != n * (n + 1) / 2 {
            return invalid(format!("a form in {n} variables has {} coefficients", n * (n + 1) / 2));
        }
        let coeffs = coeffs.into_iter().map(|c| c % field.p()).collect();
        Ok(FpQuadForm { field, n, coeffs })
    }

    pub fn zero(field: PrimeField, n: usize) -> Self {
        FpQuadForm { field, n, coeffs: vec![0; n * (n + 1) / 2] }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> u64 {
        self.coeffs[tri_index(self.n, i, j)]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, c: u64) {
        let idx = tri_index(self.n, i, j);
        self.coeffs[idx] = c % self.field.p();
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn eval(&self, v: &[u64]) -> u64 {
        let k = &self.field;
        let mut acc = 0;
        for i in 0..self.n {
            if v[i] == 0 {
                continue;
            }
            for j in i..self.n {
                let c = self.coeff(i, j);
                if c != 0 && v[j] != 0 {
                    acc = k.add(acc, k.mul(c, k.mul(v[i], v[j])));
                }
            }
        }
        acc
    }

    /// Matrix of the polar bilinear form; its rows are the partial derivatives.
    pub fn polar_matrix(&self) -> FpMatrix {
        let k = self.field;
        let mut m = FpMatrix::zeros(k, self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let c = self.coeff(i, j);
                m.set(i, j, if i == j { k.add(c, c) } else { c });
            }
        }
        m
    }

    /// `Q ∘ B` for an `n × m` matrix `B`: a form in `m` variables.
    pub fn compose(&self, b: &FpMatrix) -> FpQuadForm {
        assert_eq!(b.nrows(), self.n);
        let k = self.field;
        let m = b.ncols();
        let mut out = FpQuadForm::zero(k, m);
        for i in 0..self.n {
            for j in i..self.n {
                let c = self.coeff(i, j);
                if c == 0 {
                    continue;
                }
                for a in 0..m {
                    for bb in a..m {
                        let t = if a == bb {
                            k.mul(b.get(i, a), b.get(j, a))
                        } else {
                            k.add(k.mul(b.get(i, a), b.get(j, bb)), k.mul(b.get(i, bb), b.get(j, a)))
                        };
                        if t != 0 {
                            let idx = tri_index(m, a, bb);
                            out.coeffs[idx] = k.add(out.coeffs[idx], k.mul(c, t));
                        }
                    }
                }
            }
        }
        out
    }

    /// `(rank, ker)`. The kernel is the set where all partial derivatives vanish,
    /// cut down further by `Q = 0` in characteristic 2; the rank is its codimension.
    pub fn rank_and_kernel(&self) -> (usize, Subspace) {
        let k = self.field;
        let radical = crate::linalg::kernel(&self.polar_matrix());
        if k.p() != 2 || radical.dim() == 0 {
            return (self.n - radical.dim(), radical);
        }
        // on the radical Q is additive and Frobenius-semilinear; over F_2 it is linear
        let values: Vec<u64> = radical.basis().iter().map(|v| self.eval(v)).collect();
        let ker = if values.iter().all(|&x| x == 0) {
            radical
        } else {
            let coords = crate::linalg::kernel(&FpMatrix::from_rows(k, values.len(), std::slice::from_ref(&values)));
            let vectors = coords.basis().iter().map(|a| {
                let mut v = vec![0; self.n];
                for (ai, b) in a.iter().zip(radical.basis()) {
                    for (x, bx) in v.iter_mut().zip(b) {
                        *x = k.add(*x, k.mul(*ai, *bx));
                    }
                }
                v
            });
            Subspace::span(k, self.n, vectors.collect::<Vec<_>>())
        };
        (self.n - ker.dim(), ker)
    }

    pub fn rank(&self) -> usize {
        self.rank_and_kernel().0
    }

    /// `Q` restricted to `W`, in the coordinates of its echelon basis.
    pub fn restrict(&self, w: &Subspace) -> FpQuadForm {
        assert_eq!(w.ambient(), self.n);
        if w.dim() == 0 {
            return FpQuadForm::zero(self.field, 0);
        }
        self.compose(&w.basis_matrix().transpose())
    }

    /// Writes a form of rank <= 2 as a product of two linear forms over `F_p`,
    /// given as coefficient vectors; the first factor carries the scalar.
    /// `None` for an irreducible rank-2 form, the zero form, or rank > 2.
    pub fn factor_linear(&self) -> Option<(Vec<u64>, Vec<u64>)> {
        let k = self.field;
        let n = self.n;
        let (rank, ker) = self.rank_and_kernel();
        if rank == 0 || rank > 2 {
            return None;
        }
        let comp = ker.complement_indices();
        let us: Vec<Vec<u64>> = comp.iter().map(|&i| crate::linalg::unit(n, i)).collect();
        let mut rows: Vec<Vec<u64>> = ker.basis().to_vec();
        rows.extend(us.iter().cloned());
        let minv = FpMatrix::from_rows(k, n, &rows)
            .inverse()
            .expect("kernel basis plus complement is a basis");
        // coordinate functional attached to the complement vector u_i
        let y = |i: usize| minv.column(ker.dim() + i);
        if rank == 1 {
            let a = self.eval(&us[0]);
            let y1 = y(0);
            return Some((y1.iter().map(|&c| k.mul(a, c)).collect(), y1));
        }
        let a = self.eval(&us[0]);
        let c = self.eval(&us[1]);
        let s: Vec<u64> = us[0].iter().zip(&us[1]).map(|(x, z)| k.add(*x, *z)).collect();
        let b = k.sub(k.sub(self.eval(&s), a), c);
        let bf = BinaryForm::new(k, vec![a, b, c]).ok()?;
        let factors = linear_factors(&bf).ok()?;
        if factors.len() < 2 {
            return None;
        }
        let ((a1, b1), (a2, b2)) = (factors[0], factors[1]);
        let prod = [k.mul(a1, a2), k.add(k.mul(a1, b2), k.mul(b1, a2)), k.mul(b1, b2)];
        let target = [a, b, c];
        let idx = prod.iter().position(|&x| x != 0)?;
        let kappa = k.mul(target[idx], k.inv(prod[idx]));
        let (y1, y2) = (y(0), y(1));
        let lin = |al: u64, be: u64| -> Vec<u64> {
            y1.iter().zip(&y2).map(|(p, q)| k.add(k.mul(al, *p), k.mul(be, *q))).collect()
        };
        let l1: Vec<u64> = lin(a1, b1).into_iter().map(|x| k.mul(kappa, x)).collect();
        Some((l1, lin(a2, b2)))
    }
}

/// The coefficient vector of `G` reduced into `F_p`.
pub fn pfaffian_form_fp(k: PrimeField) -> FpQuadForm {
    let mut g = FpQuadForm::zero(k, 6);
    g.set_coeff(0, 5, 1);
    g.set_coeff(1, 4, k.neg(1));
    g.set_coeff(2, 3, 1);
    g
}

//! Dense exact linear algebra in dimensions 4 and 6 over `Q` and `F_p`:
//! the exterior square of `GL_4`, Pfaffians, subspaces of `k^4` and `k^6`,
//! lifting to `SL_4(Z)` and Smith normal form at a prime.

use std::cmp::Ordering;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{prime_power, vp, PrimeField, Rational, Valuation};
use crate::error::{invalid, Result};

/// The coordinate order `z12, z13, z23, z14, z24, z34` as 0-based index pairs.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)];

/// Position of `e_i ∧ e_j` (`i < j`) in the coordinate order.
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < 4);
    PAIRS.iter().position(|&q| q == (i, j)).unwrap()
}

/// Signs on the antidiagonal of the Gram matrix of `G`.
pub const G_ANTIDIAGONAL: [i64; 6] = [1, -1, 1, 1, -1, 1];

// ---------------------------------------------------------------------------
// rational matrices

/// Square matrix of rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QMatrix<const N: usize>(pub [[Rational; N]; N]);

pub type Mat4Q = QMatrix<4>;
pub type Mat6Q = QMatrix<6>;

impl<const N: usize> QMatrix<N> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        QMatrix(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| Rational::zero())
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn from_i64(rows: [[i64; N]; N]) -> Self {
        Self::from_fn(|i, j| Rational::from_integer(BigInt::from(rows[i][j])))
    }

    pub fn diagonal(d: &[Rational; N]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i].clone() } else { Rational::zero() })
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].clone())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::from_fn(|i, j| &self.0[i][j] * s)
    }

    pub fn mul_vec(&self, v: &[Rational; N]) -> [Rational; N] {
        std::array::from_fn(|i| {
            (0..N).fold(Rational::zero(), |acc, j| acc + &self.0[i][j] * &v[j])
        })
    }

    /// Determinant by exact Gaussian elimination.
    pub fn det(&self) -> Rational {
        let mut a = self.0.clone();
        let mut det = Rational::one();
        for col in 0..N {
            let Some(piv) = (col..N).find(|&r| !a[r][col].is_zero()) else {
                return Rational::zero();
            };
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            let pivot = a[col][col].clone();
            det *= &pivot;
            for r in col + 1..N {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = &a[r][col] / &pivot;
                for c in col..N {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        let mut a = self.0.clone();
        let mut inv = Self::identity().0;
        for col in 0..N {
            let piv = (col..N).find(|&r| !a[r][col].is_zero())?;
            a.swap(piv, col);
            inv.swap(piv, col);
            let s = a[col][col].recip();
            for c in 0..N {
                a[col][c] *= &s;
                inv[col][c] *= &s;
            }
            for r in 0..N {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for c in 0..N {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                    let t = &f * &inv[col][c];
                    inv[r][c] -= t;
                }
            }
        }
        Some(QMatrix(inv))
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_integer())
    }

    /// Minimum `p`-adic valuation of the entries.
    pub fn valuation(&self, p: u64) -> Valuation {
        self.0.iter().flatten().map(|x| vp(x, p)).min().unwrap()
    }

    /// Reduction mod `p`; `None` if some entry is not `p`-integral.
    pub fn reduce(&self, k: PrimeField) -> Option<FpMatrix> {
        let mut data = Vec::with_capacity(N * N);
        for x in self.0.iter().flatten() {
            data.push(k.reduce(x)?);
        }
        Some(FpMatrix::new(k, N, N, data))
    }
}

impl<const N: usize> Mul for &QMatrix<N> {
    type Output = QMatrix<N>;
    fn mul(self, rhs: &QMatrix<N>) -> QMatrix<N> {
        QMatrix::from_fn(|i, j| {
            (0..N).fold(Rational::zero(), |acc, k| acc + &self.0[i][k] * &rhs.0[k][j])
        })
    }
}

/// `∧²P`: the unique matrix with `P A(z) Pᵀ = A((∧²P) z)`.
pub fn wedge2(p: &Mat4Q) -> Mat6Q {
    QMatrix::from_fn(|r, s| {
        let (i, j) = PAIRS[r];
        let (k, l) = PAIRS[s];
        &p.0[i][k] * &p.0[j][l] - &p.0[i][l] * &p.0[j][k]
    })
}

/// The alternating matrix `A(z)`.
pub fn alternating_matrix(z: &[Rational; 6]) -> Mat4Q {
    let mut a = Mat4Q::zero();
    for (idx, &(i, j)) in PAIRS.iter().enumerate() {
        a.0[i][j] = z[idx].clone();
        a.0[j][i] = -z[idx].clone();
    }
    a
}

/// `G(z) = z12 z34 - z13 z24 + z23 z14`, the Pfaffian of `A(z)`.
pub fn pfaffian(z: &[Rational; 6]) -> Rational {
    &z[0] * &z[5] - &z[1] * &z[4] + &z[2] * &z[3]
}

/// The Gram matrix of `G`: antidiagonal `(1, -1, 1, 1, -1, 1)`.
pub fn g_gram() -> Mat6Q {
    QMatrix::from_fn(|i, j| {
        if i + j == 5 {
            Rational::from_integer(BigInt::from(G_ANTIDIAGONAL[i]))
        } else {
            Rational::zero()
        }
    })
}

fn minor3(m: &Mat4Q, skip_row: usize, skip_col: usize) -> Rational {
    let rows: Vec<usize> = (0..4).filter(|&r| r != skip_row).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != skip_col).collect();
    let e = |a: usize, b: usize| &m.0[rows[a]][cols[b]];
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

/// Classical adjugate: `P adj(P) = det(P) I`.
pub fn adjugate(p: &Mat4Q) -> Mat4Q {
    QMatrix::from_fn(|i, j| {
        let m = minor3(p, j, i);
        if (i + j) % 2 == 0 {
            m
        } else {
            -m
        }
    })
}

// ---------------------------------------------------------------------------
// matrices over F_p

/// Dense matrix over a prime field, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

pub type Mat4K = FpMatrix;
pub type Mat6K = FpMatrix;

impl FpMatrix {
    pub fn new(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        let data = data.into_iter().map(|x| x % field.p()).collect();
        FpMatrix { field, rows, cols, data }
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FpMatrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(field: PrimeField, cols: usize, rows: &[Vec<u64>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend(r.iter().map(|x| x % field.p()));
        }
        FpMatrix { field, rows: rows.len(), cols, data }
    }

    pub fn from_columns(field: PrimeField, rows: usize, cols: &[Vec<u64>]) -> Self {
        Self::from_rows(field, rows, cols).transpose()
    }

    pub fn from_i64(field: PrimeField, rows: usize, cols: usize, data: &[i64]) -> Self {
        Self::new(field, rows, cols, data.iter().map(|&x| field.from_i64(x)).collect())
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.field.p();
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        let k = &self.field;
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (a, b)| k.add(acc, k.mul(*a, *b)))
            })
            .collect()
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let k = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(piv) = (r..self.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if piv != r {
                for j in 0..self.cols {
                    m.data.swap(piv * self.cols + j, r * self.cols + j);
                }
            }
            let inv = k.inv(m.get(r, c));
            for j in 0..self.cols {
                let v = k.mul(m.get(r, j), inv);
                m.set(r, j, v);
            }
            for i in 0..self.rows {
                let f = m.get(i, c);
                if i == r || f == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = k.sub(m.get(i, j), k.mul(f, m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> u64 {
        assert_eq!(self.rows, self.cols);
        let k = self.field;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return 0;
            };
            if piv != c {
                for j in 0..n {
                    m.data.swap(piv * n + j, c * n + j);
                }
                det = k.neg(det);
            }
            let pv = m.get(c, c);
            det = k.mul(det, pv);
            let inv = k.inv(pv);
            for i in c + 1..n {
                let f = k.mul(m.get(i, c), inv);
                if f == 0 {
                    continue;
                }
                for j in c..n {
                    let v = k.sub(m.get(i, j), k.mul(f, m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<FpMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j));
            }
        }
        Some(inv)
    }

    /// Integer matrix with entries in `[0, p)`.
    pub fn to_qmatrix<const N: usize>(&self) -> QMatrix<N> {
        assert!(self.rows == N && self.cols == N);
        QMatrix::from_fn(|i, j| Rational::from_integer(BigInt::from(self.get(i, j))))
    }
}

impl Mul for &FpMatrix {
    type Output = FpMatrix;
    fn mul(self, rhs: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, rhs.rows);
        assert_eq!(self.field, rhs.field);
        let k = self.field;
        let mut out = FpMatrix::zeros(k, self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = 0;
                for t in 0..self.cols {
                    acc = k.add(acc, k.mul(self.get(i, t), rhs.get(t, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// `∧²P` over `F_p`.
pub fn wedge2_fp(p: &FpMatrix) -> FpMatrix {
    assert!(p.nrows() == 4 && p.ncols() == 4);
    let k = p.field();
    let mut out = FpMatrix::zeros(k, 6, 6);
    for (r, &(i, j)) in PAIRS.iter().enumerate() {
        for (s, &(a, b)) in PAIRS.iter().enumerate() {
            let v = k.sub(k.mul(p.get(i, a), p.get(j, b)), k.mul(p.get(i, b), p.get(j, a)));
            out.set(r, s, v);
        }
    }
    out
}

/// Gram matrix of `G` over `F_p`.
pub fn g_gram_fp(k: PrimeField) -> FpMatrix {
    let mut g = FpMatrix::zeros(k, 6, 6);
    for (i, s) in G_ANTIDIAGONAL.iter().enumerate() {
        g.set(i, 5 - i, k.from_i64(*s));
    }
    g
}

// ---------------------------------------------------------------------------
// subspaces

/// A linear subspace of `k^n`, stored by its reduced row echelon basis so that
/// equal subspaces compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: PrimeField,
    ambient: usize,
    basis: Vec<Vec<u64>>,
}

impl Subspace {
    pub fn span(field: PrimeField, ambient: usize, vectors: impl IntoIterator<Item = Vec<u64>>) -> Self {
        let rows: Vec<Vec<u64>> = vectors.into_iter().collect();
        if rows.is_empty() {
            return Self::zero(field, ambient);
        }
        let (r, pivots) = FpMatrix::from_rows(field, ambient, &rows).rref();
        let basis = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
        Subspace { field, ambient, basis }
    }

    pub fn zero(field: PrimeField, ambient: usize) -> Self {
        Subspace { field, ambient, basis: Vec::new() }
    }

    pub fn full(field: PrimeField, ambient: usize) -> Self {
        Self::coordinate(field, ambient, &(0..ambient).collect::<Vec<_>>())
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(field: PrimeField, ambient: usize, indices: &[usize]) -> Self {
        Self::span(field, ambient, indices.iter().map(|&i| unit(ambient, i)))
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis
            .iter()
            .map(|row| row.iter().position(|&x| x != 0).unwrap())
            .collect()
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        FpMatrix::from_rows(self.field, self.ambient, &rows).rank() == self.dim()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Self::span(self.field, self.ambient, self.basis.iter().chain(&other.basis).cloned())
    }

    /// Image under a square matrix acting on column vectors.
    pub fn image(&self, m: &FpMatrix) -> Subspace {
        Self::span(self.field, self.ambient, self.basis.iter().map(|v| m.mul_vec(v)))
    }

    /// Standard basis vectors completing the echelon basis to all of `k^n`.
    pub fn complement_indices(&self) -> Vec<usize> {
        let piv = self.pivots();
        (0..self.ambient).filter(|i| !piv.contains(i)).collect()
    }

    /// `{x : b·x = 0 for every basis vector b}`.
    pub fn annihilator(&self) -> Subspace {
        if self.basis.is_empty() {
            return Self::full(self.field, self.ambient);
        }
        kernel(&FpMatrix::from_rows(self.field, self.ambient, &self.basis))
    }

    /// Basis vectors as the rows of a matrix.
    pub fn basis_matrix(&self) -> FpMatrix {
        FpMatrix::from_rows(self.field, self.ambient, &self.basis)
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Echelon-lexicographic order: by dimension, then pivot columns, then entries.
impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.ambient, self.dim(), self.pivots(), &self.basis)
            .cmp(&(other.ambient, other.dim(), other.pivots(), &other.basis))
    }
}

pub(crate) fn unit(n: usize, i: usize) -> Vec<u64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// Null space `{x : M x = 0}`.
pub fn kernel(m: &FpMatrix) -> Subspace {
    let k = m.field();
    let (r, pivots) = m.rref();
    let n = m.ncols();
    let free = (0..n).filter(|c| !pivots.contains(c));
    let vectors = free.map(|f| {
        let mut v = unit(n, f);
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = k.neg(r.get(row, f));
        }
        v
    });
    Subspace::span(k, n, vectors)
}

/// `V_0 = {v ∈ k^4 : v ∧ w = 0 for all w ∈ W}`.
pub fn v0_of(w: &Subspace) -> Subspace {
    assert_eq!(w.ambient(), 6);
    let k = w.field();
    if w.dim() == 0 {
        return Subspace::full(k, 4);
    }
    const TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    let mut rows = Vec::new();
    for wv in w.basis() {
        let c = |i, j| wv[pair_index(i, j)];
        for &(a, b, cc) in &TRIPLES {
            // coefficient of e_a ∧ e_b ∧ e_c in v ∧ w
            let mut row = vec![0; 4];
            row[a] = c(b, cc);
            row[b] = k.neg(c(a, cc));
            row[cc] = c(a, b);
            rows.push(row);
        }
    }
    kernel(&FpMatrix::from_rows(k, 4, &rows))
}

/// Orthogonal complement with respect to the bilinear form of `G`.
pub fn g_orthogonal_complement(w: &Subspace) -> Subspace {
    assert_eq!(w.ambient(), 6);
    let k = w.field();
    if w.dim() == 0 {
        return Subspace::full(k, 6);
    }
    let g = g_gram_fp(k);
    let rows: Vec<Vec<u64>> = w.basis().iter().map(|v| g.mul_vec(v)).collect();
    kernel(&FpMatrix::from_rows(k, 6, &rows))
}

/// `V_1`: the `V_0` of the `G`-orthogonal complement.
pub fn v1_of(w: &Subspace) -> Subspace {
    v0_of(&g_orthogonal_complement(w))
}

/// Columns: bases of the nested subspaces in turn, then standard vectors.
pub fn basis_through_flag(field: PrimeField, n: usize, flag: &[&Subspace]) -> FpMatrix {
    let mut cols: Vec<Vec<u64>> = Vec::new();
    let mut current = Subspace::zero(field, n);
    let std_vectors: Vec<Vec<u64>> = (0..n).map(|i| unit(n, i)).collect();
    for space in flag.iter().map(|s| s.basis()).chain(std::iter::once(&std_vectors[..])) {
        for v in space {
            if !current.contains(v) {
                current = current.sum(&Subspace::span(field, n, [v.clone()]));
                cols.push(v.clone());
            }
        }
    }
    debug_assert_eq!(cols.len(), n);
    FpMatrix::from_columns(field, n, &cols)
}

/// An invertible matrix carrying `v` onto `target`.
pub fn gl4k_sending(v: &Subspace, target: &Subspace) -> Result<FpMatrix> {
    if v.dim() != target.dim() || v.ambient() != target.ambient() {
        return invalid(format!(
            "cannot send a {}-dimensional subspace onto a {}-dimensional one",
            v.dim(),
            target.dim()
        ));
    }
    let k = v.field();
    let n = v.ambient();
    let s = basis_through_flag(k, n, &[v]);
    let t = basis_through_flag(k, n, &[target]);
    Ok(&t * &s.inverse().expect("completed basis is invertible"))
}

// ---------------------------------------------------------------------------
// lifting to SL_4(Z)

fn int_det4(m: &[[BigInt; 4]; 4]) -> BigInt {
    let q = QMatrix::<4>::from_fn(|i, j| Rational::from_integer(m[i][j].clone()));
    q.det().to_integer()
}

fn int_cofactor(m: &[[BigInt; 4]; 4], i: usize, j: usize) -> BigInt {
    let q = QMatrix::<4>::from_fn(|a, b| Rational::from_integer(m[a][b].clone()));
    let c = minor3(&q, i, j).to_integer();
    if (i + j).is_multiple_of(2) {
        c
    } else {
        -c
    }
}

/// Extended gcd over a list: `(g, x)` with `sum x_i a_i = g >= 0`.
fn ext_gcd_many(a: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut g = BigInt::zero();
    let mut coeffs = vec![BigInt::zero(); a.len()];
    for (idx, ai) in a.iter().enumerate() {
        let e = g.extended_gcd(ai);
        for c in coeffs.iter_mut().take(idx) {
            *c *= &e.x;
        }
        coeffs[idx] = e.y.clone();
        g = e.gcd;
    }
    if g.is_negative() {
        g = -g;
        for c in coeffs.iter_mut() {
            *c = -c.clone();
        }
    }
    (g, coeffs)
}

/// Integer matrix of determinant exactly 1 reducing to `pbar` with its last
/// column scaled by `det(pbar)^-1`, which fixes the image of every coordinate
/// subspace `⟨e_1, …, e_r⟩`.
pub fn lift_to_sl4z(pbar: &FpMatrix) -> Result<Mat4Q> {
    if pbar.nrows() != 4 || pbar.ncols() != 4 {
        return invalid("lift_to_sl4z expects a 4x4 matrix");
    }
    let k = pbar.field();
    let d = pbar.det();
    if d == 0 {
        return invalid("cannot lift a singular matrix to SL_4(Z)");
    }
    let mut target = pbar.clone();
    let dinv = k.inv(d);
    for i in 0..4 {
        let v = k.mul(target.get(i, 3), dinv);
        target.set(i, 3, v);
    }
    let p = BigInt::from(k.p());
    let mut lift: [[BigInt; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| k.centered(target.get(i, j))));
    let det = int_det4(&lift);
    if det.is_one() {
        return Ok(to_q(&lift));
    }
    // det(lift) = 1 - p t; adjust one row by p x with sum_j x_j C_ij = t.
    let t = (BigInt::one() - &det) / &p;
    for i in 0..4 {
        let cof: Vec<BigInt> = (0..4).map(|j| int_cofactor(&lift, i, j)).collect();
        let (g, x) = ext_gcd_many(&cof);
        if g.is_zero() || !(&t % &g).is_zero() {
            continue;
        }
        let s = &t / &g;
        let mut candidate = lift.clone();
        for j in 0..4 {
            candidate[i][j] += &p * &s * &x[j];
        }
        if int_det4(&candidate).is_one() {
            return Ok(to_q(&candidate));
        }
    }
    lift = transvection_lift(&target);
    debug_assert!(int_det4(&lift).is_one());
    Ok(to_q(&lift))
}

fn to_q(m: &[[BigInt; 4]; 4]) -> Mat4Q {
    QMatrix::from_fn(|i, j| Rational::from_integer(m[i][j].clone()))
}

/// Writes a determinant-one matrix over `F_p` as a product of elementary
/// transvections and lifts each factor.
fn transvection_lift(m: &FpMatrix) -> [[BigInt; 4]; 4] {
    let k = m.field();
    let mut a = m.clone();
    // (target row, source row, coefficient): row_i += c row_j
    let mut ops: Vec<(usize, usize, u64)> = Vec::new();
    let mut apply = |a: &mut FpMatrix, i: usize, j: usize, c: u64| {
        for col in 0..4 {
            let v = k.add(a.get(i, col), k.mul(c, a.get(j, col)));
            a.set(i, col, v);
        }
        ops.push((i, j, c));
    };
    for j in 0..4 {
        if a.get(j, j) == 0 {
            let i = (j + 1..4).find(|&i| a.get(i, j) != 0).expect("invertible");
            apply(&mut a, j, i, 1);
        }
        let piv = a.get(j, j);
        if piv != 1 {
            assert!(j < 3, "determinant one forces the last pivot to be 1");
            let r = j + 1;
            if a.get(r, j) == 0 {
                apply(&mut a, r, j, 1);
            }
            let c = k.mul(k.sub(1, piv), k.inv(a.get(r, j)));
            apply(&mut a, j, r, c);
        }
        for i in 0..4 {
            if i != j && a.get(i, j) != 0 {
                let c = k.neg(a.get(i, j));
                apply(&mut a, i, j, c);
            }
        }
    }
    debug_assert_eq!(a, FpMatrix::identity(k, 4));
    // m = E_1^-1 E_2^-1 ... E_n^-1
    let mut out: [[BigInt; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
    for &(i, j, c) in &ops {
        // out <- out * (I - c e_ij): column j of out -= c * column i
        let c = k.centered(c);
        for row in out.iter_mut() {
            let t = &row[i] * &c;
            row[j] -= t;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Smith normal form at p

/// `P = U · Diag(p^w) · V` with `U`, `V` invertible over `Z_(p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSmithForm {
    pub u: Mat4Q,
    pub weight: [i64; 4],
    pub v: Mat4Q,
}

pub fn smith_normal_form_local(pm: &Mat4Q, p: u64) -> Result<LocalSmithForm> {
    crate::arith::check_prime(p)?;
    if pm.det().is_zero() {
        return invalid("Smith normal form of a singular matrix");
    }
    let mut a = pm.0.clone();
    let mut u = Mat4Q::identity().0;
    let mut v = Mat4Q::identity().0;
    let mut weight = [0i64; 4];
    for t in 0..4 {
        let (mut bi, mut bj, mut best) = (t, t, Valuation::Infinite);
        for i in t..4 {
            for j in t..4 {
                let val = vp(&a[i][j], p);
                if val < best {
                    (bi, bj, best) = (i, j, val);
                }
            }
        }
        let e = best.finite().expect("nonsingular");
        // rows t <-> bi: U swaps columns
        a.swap(t, bi);
        for row in u.iter_mut() {
            row.swap(t, bi);
        }
        // columns t <-> bj: V swaps rows
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        v.swap(t, bj);
        let pivot = a[t][t].clone();
        for i in t + 1..4 {
            if a[i][t].is_zero() {
                continue;
            }
            let c = &a[i][t] / &pivot;
            for col in 0..4 {
                let s = &c * &a[t][col];
                a[i][col] -= s;
            }
            // U <- U (I + c e_{t i})... column t += c * column i
            for row in u.iter_mut() {
                let s = &c * &row[i];
                row[t] += s;
            }
        }
        for j in t + 1..4 {
            if a[t][j].is_zero() {
                continue;
            }
            let c = &a[t][j] / &pivot;
            for row in a.iter_mut() {
                let s = &c * &row[t];
                row[j] -= s;
            }
            // V <- (I + c e_{t j}) V: row t += c * row j
            for col in 0..4 {
                let s = &c * &v[j][col];
                v[t][col] += s;
            }
        }
        // scale row t so the pivot is exactly p^e; U absorbs the unit
        let unit = &pivot / prime_power(p, e);
        for col in 0..4 {
            a[t][col] = &a[t][col] / &unit;
        }
        for row in u.iter_mut() {
            row[t] = &row[t] * &unit;
        }
        weight[t] = e;
    }
    Ok(LocalSmithForm { u: QMatrix(u), weight, v: QMatrix(v) })
}

//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here targets dimensions up to a few dozen: Schur (entrywise)
//! products, a scale-aware positive semi-definiteness test, a cyclic Jacobi
//! eigensolver for Hermitian matrices, operator norms and the similarity
//! norm `||Q^{1/2} Diag(w) Q^{-1/2}||` that realizes idempotent-algebra balls.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Index, IndexMut, Mul};

use crate::error::{BallError, Result};
use crate::point::{c64, from_pairs, to_pairs, Point, C64};

/// Relative asymmetry accepted when constructing a [`HermitianMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Smallest eigenvalue (relative to scale) for which a PSD matrix counts as invertible.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(BallError::Empty("matrix with zero rows or columns"));
        }
        if data.len() != rows * cols {
            return Err(BallError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![c64(1.0, 0.0); n])
    }

    pub fn diag(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(BallError::Empty("matrix rows"));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(BallError::InvalidArgument("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c64(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(BallError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == C64::default() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(BallError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// `self * Diag(d)`: scales column `j` by `d[j]`.
    pub fn mul_diag_right(&self, d: &[C64]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `A* A` as a Hermitian matrix.
    pub fn gram(&self) -> HermitianMatrix {
        let n = self.cols;
        HermitianMatrix::from_fn(n, |i, j| {
            (0..self.rows).map(|l| self[(l, i)].conj() * self[(l, j)]).sum()
        })
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(BallError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if !self.is_finite() {
            return Err(BallError::NonFinite("matrix to invert"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, piv_abs) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= 1e-14 * scale {
                return Err(BallError::NotInvertible { min: piv_abs });
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == C64::default() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let eig = hermitian_eig(&self.gram())?;
        Ok(eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect())
    }

    /// 2-norm condition number `s_max / s_min` (infinite when singular).
    pub fn condition_number(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(BallError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let s = self.singular_values()?;
        let (lo, hi) = (s[0], s[s.len() - 1]);
        Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(BallError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub(crate) fn to_nested_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows)
            .map(|i| to_pairs(&self.data[i * self.cols..(i + 1) * self.cols]))
            .collect()
    }

    pub(crate) fn from_nested_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| from_pairs(r)).collect();
        Self::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        ComplexMatrix::from_nested_pairs(&rows).map_err(serde::de::Error::custom)
    }
}

/// Square complex matrix with `a[i][j] == conj(a[j][i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates Hermitian symmetry to [`HERMITIAN_TOL`] (relative to the
    /// largest entry) and then symmetrizes exactly.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(BallError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        if !m.is_finite() {
            return Err(BallError::NonFinite("Hermitian matrix"));
        }
        let scale = m.max_abs().max(1.0);
        let n = m.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        let asymmetry = worst / scale;
        if asymmetry > HERMITIAN_TOL {
            return Err(BallError::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from a generator that is Hermitian by construction; the lower
    /// triangle is taken as the conjugate of the upper one.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if i == j {
                    m[(i, i)] = c64(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        HermitianMatrix(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n))
    }

    /// The all-ones matrix `J`, the unit of the Schur product.
    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| c64(1.0, 0.0))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { c64(d[i], 0.0) } else { C64::default() })
    }

    fn symmetrized(m: ComplexMatrix) -> Self {
        let n = m.rows;
        Self::from_fn(n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Zero matrix except for the diagonal of `self`.
    pub fn diag_part(&self) -> Self {
        Self::diag_real(&self.diagonal())
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max)
    }

    /// Scale used by the PSD tolerance: `max(1, max |a_ii|)`.
    pub fn psd_scale(&self) -> f64 {
        self.max_abs_diag().max(1.0)
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(self.0.scale(c64(s, 0.0)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(HermitianMatrix(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(HermitianMatrix(self.0.sub(&other.0)?))
    }

    /// `self + s I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += s;
        }
        HermitianMatrix(m)
    }

    /// Quadratic form `x* A x` (real for Hermitian `A`).
    pub fn quad_form(&self, x: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = C64::default();
        for i in 0..n {
            let row: C64 = x.iter().enumerate().map(|(j, xj)| self.0[(i, j)] * xj).sum();
            acc += x[i].conj() * row;
        }
        acc.re
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Entrywise product `(a_ij b_ij)`.
pub fn schur_product(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(BallError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(HermitianMatrix::from_fn(a.dim(), |i, j| a[(i, j)] * b[(i, j)]))
}

/// Eigenvalues (ascending) and the unitary matrix whose columns are the
/// matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn vector(&self, idx: usize) -> Vec<C64> {
        let n = self.vectors.rows();
        (0..n).map(|i| self.vectors[(i, idx)]).collect()
    }

    /// `V f(Lambda) V*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        HermitianMatrix::from_fn(n, |i, j| {
            (0..n).map(|l| v[(i, l)] * fl[l] * v[(j, l)].conj()).sum()
        })
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary,
/// then annihilates the (now real) off-diagonal pair with a plane rotation.
/// Sweeps stop once the off-diagonal mass is below `1e-15 * ||A||_F`.
pub fn hermitian_eig(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    if !m.is_finite() {
        return Err(BallError::NonFinite("eigensolver input"));
    }
    let mut v = ComplexMatrix::identity(n);
    let total = m.frobenius_norm();
    let target = 1e-15 * total;

    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[(i, j)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target && total > 0.0 {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(BallError::NoConvergence {
                sweeps,
                residual: off(&m),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // skip rotations that cannot change the diagonal in floating point
                if sweeps > 4 && b < 1e-18 * (app.abs() + aqq.abs()) {
                    m[(p, q)] = C64::default();
                    m[(q, p)] = C64::default();
                    continue;
                }
                let phase = apq / b;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = Diag(1, conj(phase)) * [[c, s], [-s, c]]
                let ph = phase.conj();
                let g00 = c64(c, 0.0);
                let g01 = c64(s, 0.0);
                let g10 = ph * (-s);
                let g11 = ph * c;
                // columns p, q of M and V
                for i in 0..n {
                    let (mp, mq) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = mp * g00 + mq * g10;
                    m[(i, q)] = mp * g01 + mq * g11;
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = vp * g00 + vq * g10;
                    v[(i, q)] = vp * g01 + vq * g11;
                }
                // rows p, q of M
                for j in 0..n {
                    let (mp, mq) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = g00.conj() * mp + g10.conj() * mq;
                    m[(q, j)] = g01.conj() * mp + g11.conj() * mq;
                }
                m[(p, q)] = C64::default();
                m[(q, p)] = C64::default();
                m[(p, p)] = c64(m[(p, p)].re, 0.0);
                m[(q, q)] = c64(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Outcome of [`psd_check`].
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Unit eigenvector for `min_eigenvalue`.
    pub witness: Vec<C64>,
    /// `max(1, max |a_ii|)`, the scale the tolerance is relative to.
    pub scale: f64,
}

enum CholeskyVerdict {
    PositiveDefinite,
    Inconclusive,
}

/// Cholesky with a pivot floor of `10 * tol * scale`; anything that does not
/// clear the floor is handed to the eigensolver.
fn cholesky_screen(a: &HermitianMatrix, floor: f64) -> CholeskyVerdict {
    let n = a.dim();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < floor {
            return CholeskyVerdict::Inconclusive;
        }
        let ljj = d.sqrt();
        l[(j, j)] = c64(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    CholeskyVerdict::PositiveDefinite
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(BallError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Fast PSD decision: `min eigenvalue >= -tol * max(1, max |a_ii|)`.
///
/// A Cholesky pass whose pivots all clear `10 * tol * scale` settles the
/// positive case; every other case is decided by the eigensolver, so the
/// verdict always agrees with [`psd_check`].
pub fn is_psd(a: &HermitianMatrix, tol: f64) -> Result<bool> {
    check_tol(tol)?;
    if !a.as_matrix().is_finite() {
        return Err(BallError::NonFinite("PSD check input"));
    }
    let scale = a.psd_scale();
    if let CholeskyVerdict::PositiveDefinite = cholesky_screen(a, 10.0 * tol * scale) {
        return Ok(true);
    }
    let eig = hermitian_eig(a)?;
    Ok(eig.min() >= -tol * scale)
}

/// Full PSD report with the smallest eigenpair.
pub fn psd_check(a: &HermitianMatrix, tol: f64) -> Result<PsdReport> {
    check_tol(tol)?;
    if !a.as_matrix().is_finite() {
        return Err(BallError::NonFinite("PSD check input"));
    }
    let scale = a.psd_scale();
    let eig = hermitian_eig(a)?;
    let is_psd = match cholesky_screen(a, 10.0 * tol * scale) {
        CholeskyVerdict::PositiveDefinite => true,
        CholeskyVerdict::Inconclusive => eig.min() >= -tol * scale,
    };
    Ok(PsdReport {
        is_psd,
        min_eigenvalue: eig.min(),
        witness: eig.vector(0),
        scale,
    })
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(BallError::NonFinite("operator norm input"));
    }
    let eig = hermitian_eig(&a.gram())?;
    Ok(eig.max().max(0.0).sqrt())
}

/// Square root of a PSD matrix; eigenvalues within `-tol * scale` are clamped to 0.
pub fn psd_sqrt(a: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(a)?;
    let scale = a.psd_scale();
    if eig.min() < -tol * scale {
        return Err(BallError::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Precomputed `Q^{1/2}` and `Q^{-1/2}` for repeated similarity norms.
#[derive(Debug, Clone)]
pub struct SimilarityRoots {
    pub sqrt: HermitianMatrix,
    pub inv_sqrt: HermitianMatrix,
}

impl SimilarityRoots {
    pub fn new(q: &HermitianMatrix) -> Result<Self> {
        let eig = hermitian_eig(q)?;
        let floor = INVERTIBILITY_TOL * q.psd_scale();
        if eig.min() <= floor {
            return Err(BallError::NotInvertible { min: eig.min() });
        }
        Ok(SimilarityRoots {
            sqrt: eig.reconstruct_with(f64::sqrt),
            inv_sqrt: eig.reconstruct_with(|l| 1.0 / l.sqrt()),
        })
    }

    pub fn dim(&self) -> usize {
        self.sqrt.dim()
    }

    /// `||Q^{1/2} Diag(w) Q^{-1/2}||`.
    pub fn norm(&self, w: &Point) -> Result<f64> {
        w.check_dim(self.dim())?;
        let left = self.sqrt.as_matrix().mul_diag_right(w.coords());
        operator_norm(&left.matmul(self.inv_sqrt.as_matrix())?)
    }
}

/// `||Q^{1/2} Diag(w) Q^{-1/2}||` for PSD invertible `Q`.
pub fn similarity_rep_norm(q: &HermitianMatrix, w: &Point) -> Result<f64> {
    SimilarityRoots::new(q)?.norm(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn p11() -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&[&[1.0, 1.0, 1.0], &[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]]).unwrap()
    }

    #[test]
    fn ones_is_schur_unit() {
        let a = HermitianMatrix::new(
            ComplexMatrix::from_rows(&[
                vec![c64(2.0, 0.0), c64(1.0, -3.0)],
                vec![c64(1.0, 3.0), c64(-1.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        assert_eq!(schur_product(&HermitianMatrix::ones(2), &a).unwrap(), a);
        assert_eq!(schur_product(&HermitianMatrix::identity(2), &a).unwrap(), a.diag_part());
        let b = HermitianMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert_eq!(schur_product(&b, &HermitianMatrix::ones(2)).unwrap(), b);
    }

    #[test]
    fn schur_dimension_mismatch() {
        let r = schur_product(&HermitianMatrix::identity(2), &HermitianMatrix::identity(3));
        assert!(matches!(r, Err(BallError::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.1, 1.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(BallError::NotHermitian { .. })));
        let m = ComplexMatrix::from_real_rows(&[&[1.0, f64::NAN], &[f64::NAN, 1.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(BallError::NonFinite(_))));
    }

    #[test]
    fn psd_examples() {
        let r = psd_check(&HermitianMatrix::identity(3), 1e-10).unwrap();
        assert!(r.is_psd);
        assert!(close(r.min_eigenvalue, 1.0, 1e-14));

        // det = 0.2533 - 1 < 0
        let m = HermitianMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 0.19 / 0.75]]).unwrap();
        let r = psd_check(&m, 1e-10).unwrap();
        assert!(!r.is_psd);
        assert!(r.min_eigenvalue < 0.0);
        assert!(!is_psd(&m, 1e-10).unwrap());

        // leading minors 1, 1, 1
        assert!(psd_check(&p11(), 1e-10).unwrap().is_psd);
        assert!(is_psd(&p11(), 1e-10).unwrap());
    }

    #[test]
    fn psd_rejects_bad_tolerance() {
        assert!(psd_check(&HermitianMatrix::identity(2), 0.0).is_err());
        assert!(is_psd(&HermitianMatrix::identity(2), -1.0).is_err());
    }

    #[test]
    fn singular_psd_goes_through_eigensolver() {
        // rank one, Cholesky hits a zero pivot
        let j = HermitianMatrix::ones(3);
        assert!(is_psd(&j, 1e-10).unwrap());
        let r = psd_check(&j, 1e-10).unwrap();
        assert!(r.is_psd);
        assert!(r.min_eigenvalue.abs() < 1e-14);
    }

    #[test]
    fn eig_examples() {
        let e = hermitian_eig(&HermitianMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);

        let e = hermitian_eig(&HermitianMatrix::ones(3)).unwrap();
        assert!(e.values[0].abs() < 1e-14 && e.values[1].abs() < 1e-14);
        assert!(close(e.values[2], 3.0, 1e-14));

        let m = HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], 3.0, 1e-14));
    }

    #[test]
    fn eig_reconstructs_complex_matrix() {
        let m = HermitianMatrix::new(
            ComplexMatrix::from_rows(&[
                vec![c64(2.0, 0.0), c64(0.5, 1.0), c64(0.0, -0.3)],
                vec![c64(0.5, -1.0), c64(-1.0, 0.0), c64(0.2, 0.2)],
                vec![c64(0.0, 0.3), c64(0.2, -0.2), c64(0.7, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let e = hermitian_eig(&m).unwrap();
        let r = e.reconstruct_with(|l| l);
        let err = r.sub(&m).unwrap().as_matrix().frobenius_norm();
        assert!(err <= 1e-12 * m.as_matrix().frobenius_norm());
        let vv = e.vectors.adjoint().matmul(&e.vectors).unwrap();
        let id_err = vv.sub(&ComplexMatrix::identity(3)).unwrap().frobenius_norm();
        assert!(id_err < 1e-13);
    }

    #[test]
    fn operator_norm_examples() {
        let s = 1.0 / 2f64.sqrt();
        let u = ComplexMatrix::from_rows(&[
            vec![c64(s, 0.0), c64(0.0, s)],
            vec![c64(0.0, s), c64(s, 0.0)],
        ])
        .unwrap();
        assert!(close(operator_norm(&u).unwrap(), 1.0, 1e-12));
        let d = ComplexMatrix::diag(&[c64(0.3, 0.4), c64(-0.2, 0.0), c64(0.0, 0.1)]);
        assert!(close(operator_norm(&d).unwrap(), 0.5, 1e-12));
        let n = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert!(close(operator_norm(&n).unwrap(), 2.0, 1e-12));
        let bad = ComplexMatrix::from_real_rows(&[&[f64::INFINITY]]).unwrap();
        assert!(operator_norm(&bad).is_err());
    }

    #[test]
    fn similarity_norm_examples() {
        let w = Point::new(vec![c64(0.3, 0.4), c64(-0.9, 0.0), c64(0.1, 0.1)]);
        assert!(close(similarity_rep_norm(&HermitianMatrix::identity(3), &w).unwrap(), 0.9, 1e-12));
        assert!(close(similarity_rep_norm(&p11(), &Point::unit(3)).unwrap(), 1.0, 1e-12));
        // boundary of the slice y^2 <= 0.4 at x = 0.5
        let b = Point::from_real(&[0.0, 0.5, 0.4f64.sqrt()]);
        assert!(close(similarity_rep_norm(&p11(), &b).unwrap(), 1.0, 1e-8));
        let sing = HermitianMatrix::ones(2);
        assert!(matches!(similarity_rep_norm(&sing, &Point::unit(2)), Err(BallError::NotInvertible { .. })));
    }

    #[test]
    fn inverse_round_trip() {
        let q = ComplexMatrix::from_rows(&[
            vec![c64(1.0, 0.5), c64(2.0, 0.0)],
            vec![c64(0.0, -1.0), c64(0.3, 0.0)],
        ])
        .unwrap();
        let prod = q.matmul(&q.inverse().unwrap()).unwrap();
        assert!(prod.sub(&ComplexMatrix::identity(2)).unwrap().frobenius_norm() < 1e-14);
        let sing = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(sing.inverse().is_err());
    }
}

//! Small dense complex linear algebra.
//!
//! Everything here works on vectors of length M and matrices of at most
//! M x M with M in the single or low double digits, so the routines favour
//! accuracy (re-orthogonalized Gram-Schmidt, partial pivoting) over speed.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition estimate above which [`invert_square`] refuses to invert.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Relative pivot size below which a column counts as linearly dependent.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// A dense complex column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// The `k`-th standard basis vector of length `len`.
    pub fn basis(len: usize, k: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// Returns the vector scaled to unit norm, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(self.scaled(Complex64::new(1.0 / n, 0.0)))
        }
    }
}

impl Deref for CVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for CVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl AsRef<[Complex64]> for CVector {
    fn as_ref(&self) -> &[Complex64] {
        &self.0
    }
}

impl From<Vec<Complex64>> for CVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl FromIterator<Complex64> for CVector {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// A dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equally long vectors as the columns of a matrix.
    pub fn from_columns<V: AsRef<[Complex64]>>(columns: &[V]) -> Result<Self> {
        let first = columns
            .first()
            .ok_or_else(|| Error::Domain("no columns".into()))?;
        let rows = first.as_ref().len();
        if rows == 0 {
            return Err(Error::Domain("empty column".into()));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: col.len(),
                });
            }
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> CVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<CVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<CVector> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(inner_unchecked(a, b))
}

#[inline]
pub(crate) fn inner_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Thin QR factorisation `A = Q R` by modified Gram-Schmidt with one round of
/// re-orthogonalisation.
struct ThinQr {
    q: Vec<CVector>,
    /// Upper triangular, `r[j][k]` for `j <= k`.
    r: Vec<Vec<Complex64>>,
}

fn thin_qr(a: &CMatrix) -> Result<ThinQr> {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        return Err(Error::DegenerateChannel { column: m });
    }
    let mut q: Vec<CVector> = Vec::with_capacity(n);
    let mut r = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        let mut v = a.column(k);
        let original = v.norm();
        for _pass in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let c = inner_unchecked(qj, &v);
                for (vi, qi) in v.iter_mut().zip(qj.iter()) {
                    *vi -= c * qi;
                }
                r[j][k] += c;
            }
        }
        let pivot = v.norm();
        if original == 0.0 || !pivot.is_finite() || pivot < PIVOT_TOLERANCE * original {
            return Err(Error::DegenerateChannel { column: k });
        }
        r[k][k] = Complex64::new(pivot, 0.0);
        q.push(v.scaled(Complex64::new(1.0 / pivot, 0.0)));
    }
    Ok(ThinQr { q, r })
}

/// Orthonormal basis for the column span of `cols`, column `k` of the result
/// spanning the same space as the first `k + 1` input columns.
pub fn gram_schmidt(cols: &CMatrix) -> Result<CMatrix> {
    let qr = thin_qr(cols)?;
    CMatrix::from_columns(&qr.q)
}

/// Same as [`gram_schmidt`] but returns the basis as a list of vectors.
pub fn orthonormal_basis(cols: &CMatrix) -> Result<Vec<CVector>> {
    Ok(thin_qr(cols)?.q)
}

/// Least-squares solution of `H v = s` through the normal equations
/// `(H^H H) v = H^H s`, solved with a Cholesky factorisation of the Gram matrix.
pub fn normal_solve(h: &CMatrix, s: &[Complex64]) -> Result<CVector> {
    let (m, n) = (h.rows(), h.cols());
    if s.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: s.len(),
        });
    }
    let cols = h.columns();
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let g = inner_unchecked(&cols[i], &cols[j]);
            gram[i][j] = g;
            gram[j][i] = g.conj();
        }
    }
    let rhs: Vec<Complex64> = cols.iter().map(|c| inner_unchecked(c, s)).collect();

    // G = L L^H
    let max_diag = (0..n).map(|i| gram[i][i].re).fold(0.0, f64::max);
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = gram[j][j].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        // Gram pivots scale with squared singular values; rounding noise is ~eps * max_diag
        if !(d > PIVOT_TOLERANCE * max_diag) {
            return Err(Error::DegenerateChannel { column: j });
        }
        let d = d.sqrt();
        l[j][j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = gram[i][j];
            for k in 0..j {
                acc -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = acc / d;
        }
    }
    // L y = rhs
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = rhs[i];
        for k in 0..i {
            acc -= l[i][k] * y[k];
        }
        y[i] = acc / l[i][i];
    }
    // L^H v = y
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[k][i].conj() * v[k];
        }
        v[i] = acc / l[i][i];
    }
    Ok(CVector::new(v))
}

/// Inverse of a square matrix via `A^{-1} = R^{-1} Q^H`.
///
/// The ratio of the largest to the smallest Gram-Schmidt pivot serves as a
/// crude condition estimate; matrices above [`CONDITION_LIMIT`] are rejected
/// with [`Error::IllConditioned`].
pub fn invert_square(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    let qr = match thin_qr(a) {
        Ok(qr) => qr,
        Err(Error::DegenerateChannel { .. }) => {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
                threshold: CONDITION_LIMIT,
            })
        }
        Err(e) => return Err(e),
    };
    let pivots: Vec<f64> = (0..n).map(|k| qr.r[k][k].re).collect();
    let max = pivots.iter().cloned().fold(0.0, f64::max);
    let min = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = max / min;
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            condition,
            threshold: CONDITION_LIMIT,
        });
    }
    // Solve R X = Q^H column by column of Q^H.
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        // column `col` of Q^H is conj(row `col` entries of each q_k)
        let b: Vec<Complex64> = (0..n).map(|k| qr.q[k][col].conj()).collect();
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in i + 1..n {
                acc -= qr.r[i][k] * inv[(k, col)];
            }
            inv[(i, col)] = acc / qr.r[i][i];
        }
    }
    Ok(inv)
}

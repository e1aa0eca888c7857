//! Dense linear algebra sized for characteristic matrices.
//!
//! Two factorizations live here. [`Lu`] is ordinary Gaussian elimination
//! with partial pivoting and serves general solves. [`MetzlerFactor`]
//! eliminates `-A` for a Metzler `A` *without* pivoting: for a Z-matrix the
//! k-th pivot is the ratio of consecutive leading principal minors, so the
//! elimination doubles as the M-matrix test `(-1)^k det(A_k) > 0`. Solves
//! through it never subtract quantities of opposite sign, which keeps
//! structural zeros of `-A^{-1}` exactly zero in floating point.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular (pivot {pivot} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("matrix is not Metzler: entry ({row}, {col}) is negative")]
    NotMetzler { row: usize, col: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if rows * cols != data.len() {
            return Err(LinalgError::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self
    where
        T: Clone,
    {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>>
    where
        T: Clone,
    {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self
    where
        T: Clone,
    {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.data.iter().map(|x| x.to_string()).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>width$}", cells[i * self.cols + j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        self.map(|x| U::from_f64(x.to_f64()))
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::to_f64)
    }

    pub fn mul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, k| acc + self[(i, k)].clone() * rhs[(k, j)].clone())
        }))
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `x^T A`, returned as a plain vector.
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + x[i].clone() * self[(i, j)].clone()))
            .collect()
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() + rhs[(i, j)].clone())
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() - rhs[(i, j)].clone())
    }

    pub fn scale(&self, s: &T) -> Matrix<T> {
        self.map(|x| x.clone() * s.clone())
    }

    /// `A + s I`
    pub fn shift_diagonal(&self, s: &T) -> Matrix<T> {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] = out[(i, i)].clone() + s.clone();
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| T::max_of(m, x.abs()))
    }

    /// First negative off-diagonal entry, if any.
    pub fn metzler_violation(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self[(i, j)] < T::zero() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_metzler(&self) -> bool {
        self.is_square() && self.metzler_violation().is_none()
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].to_f64().is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Matrix<T>) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a <= b)
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    (0..n).map(|k| if k == i { T::one() } else { T::zero() }).collect()
}

pub fn max_abs_vec<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| T::max_of(m, x.abs()))
}

fn require_square<T>(a: &Matrix<T>) -> Result<usize, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
    }
    Ok(a.rows)
}

/// Pivot tolerance relative to the row scale.
const PIVOT_REL_TOL: f64 = 1e-12;

/// LU factorization `P A = L U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    parity: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self, LinalgError> {
        let n = require_square(a)?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = false;
        let row_scale: Vec<T> = (0..n).map(|i| max_abs_vec(a.row(i))).collect();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let cand = lu[(i, k)].abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            let threshold = T::tol(PIVOT_REL_TOL) * row_scale[perm[p]].clone();
            if best.is_zero() || best <= threshold {
                return Err(LinalgError::Singular { step: k, pivot: best.to_f64() });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                parity = !parity;
            }
            let pivot = lu[(k, k)].clone();
            for i in k + 1..n {
                if lu[(i, k)].is_zero() {
                    continue;
                }
                let factor = lu[(i, k)].clone() / pivot.clone();
                for j in k + 1..n {
                    let upd = factor.clone() * lu[(k, j)].clone();
                    lu[(i, j)] = lu[(i, j)].clone() - upd;
                }
                lu[(i, k)] = factor;
            }
        }
        Ok(Self { lu, perm, parity })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                let upd = self.lu[(i, k)].clone() * x[k].clone();
                x[i] = x[i].clone() - upd;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let upd = self.lu[(i, k)].clone() * x[k].clone();
                x[i] = x[i].clone() - upd;
            }
            x[i] = x[i].clone() / self.lu[(i, i)].clone();
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // U^T z = b, then L^T y = z, then x = P^T y
        let mut z: Vec<T> = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let upd = self.lu[(k, i)].clone() * z[k].clone();
                z[i] = z[i].clone() - upd;
            }
            z[i] = z[i].clone() / self.lu[(i, i)].clone();
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let upd = self.lu[(k, i)].clone() * z[k].clone();
                z[i] = z[i].clone() - upd;
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i].clone();
        }
        x
    }

    pub fn determinant(&self) -> T {
        let n = self.dim();
        let mut det = if self.parity { -T::one() } else { T::one() };
        for i in 0..n {
            det = det * self.lu[(i, i)].clone();
        }
        det
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let col = self.solve(&unit(n, j));
            for i in 0..n {
                inv[(i, j)] = col[i].clone();
            }
        }
        inv
    }
}

pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    if b.len() != a.rows {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows
        )));
    }
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    Ok(Lu::factor(a)?.inverse())
}

/// Determinant; zero when the factorization reports a singular pivot.
pub fn determinant<T: Scalar>(a: &Matrix<T>) -> Result<T, LinalgError> {
    match Lu::factor(a) {
        Ok(lu) => Ok(lu.determinant()),
        Err(LinalgError::Singular { .. }) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

/// Relative tolerance under which an M-matrix pivot counts as zero.
pub const MINOR_REL_TOL: f64 = 1e-10;

/// Outcome of the leading-minor test on a Metzler matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum MinorTest<T> {
    /// All `(-1)^k det(A_k)` positive.
    Hurwitz(MetzlerFactor<T>),
    /// The leading minor of order `order` (1-based) has the wrong sign or
    /// is numerically zero.
    NotHurwitz { order: usize, pivot: T },
}

impl<T> MinorTest<T> {
    pub fn is_hurwitz(&self) -> bool {
        matches!(self, MinorTest::Hurwitz(_))
    }
}

/// No-pivot elimination of `-A` for a Hurwitz Metzler `A`.
///
/// `lu` holds the unit lower factor below the diagonal and the upper factor
/// on and above it. Pivots are positive, off-diagonal factor entries are
/// nonpositive.
#[derive(Clone, Debug, PartialEq)]
pub struct MetzlerFactor<T> {
    lu: Matrix<T>,
}

impl<T: Scalar> MetzlerFactor<T> {
    /// Pivots of the elimination; the k-th leading minor of `-A` is the
    /// product of the first k.
    pub fn pivots(&self) -> Vec<T> {
        (0..self.lu.rows).map(|i| self.lu[(i, i)].clone()).collect()
    }

    /// Solves `(-A) x = b`. For `b >= 0` every step adds nonnegative terms.
    pub fn solve_negated(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let upd = self.lu[(i, k)].clone() * x[k].clone();
                x[i] = x[i].clone() - upd;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let upd = self.lu[(i, k)].clone() * x[k].clone();
                x[i] = x[i].clone() - upd;
            }
            x[i] = x[i].clone() / self.lu[(i, i)].clone();
        }
        x
    }
}

/// Leading-minor test for a Metzler matrix.
pub fn metzler_minor_test<T: Scalar>(a: &Matrix<T>) -> Result<MinorTest<T>, LinalgError> {
    let n = require_square(a)?;
    if let Some((row, col)) = a.metzler_violation() {
        return Err(LinalgError::NotMetzler { row, col });
    }
    let scale: Vec<T> = (0..n)
        .map(|k| {
            let r = max_abs_vec(a.row(k));
            let c = (0..n).fold(T::zero(), |m, i| T::max_of(m, a[(i, k)].abs()));
            T::max_of(r, c)
        })
        .collect();
    let mut lu = a.map(|x| -x.clone());
    for k in 0..n {
        let pivot = lu[(k, k)].clone();
        let threshold = T::tol(MINOR_REL_TOL) * scale[k].clone();
        if pivot <= T::zero() || pivot <= threshold {
            return Ok(MinorTest::NotHurwitz { order: k + 1, pivot });
        }
        for i in k + 1..n {
            if lu[(i, k)].is_zero() {
                continue;
            }
            let factor = lu[(i, k)].clone() / pivot.clone();
            for j in k + 1..n {
                let upd = factor.clone() * lu[(k, j)].clone();
                lu[(i, j)] = lu[(i, j)].clone() - upd;
            }
            lu[(i, k)] = factor;
        }
    }
    Ok(MinorTest::Hurwitz(MetzlerFactor { lu }))
}

/// Hurwitz stability of a Metzler matrix by the sign of its leading
/// principal minors.
pub fn metzler_hurwitz_oracle<T: Scalar>(a: &Matrix<T>) -> Result<bool, LinalgError> {
    Ok(metzler_minor_test(a)?.is_hurwitz())
}

/// Frobenius (dominant real) eigenvalue of a Metzler matrix, located by
/// bisection on the shift `t` for which `A + t I` stops being Hurwitz.
/// The returned value is within `rel_tol * scale` of the true eigenvalue.
pub fn frobenius_eigenvalue<T: Scalar>(a: &Matrix<T>, rel_tol: f64) -> Result<T, LinalgError> {
    let n = require_square(a)?;
    if let Some((row, col)) = a.metzler_violation() {
        return Err(LinalgError::NotMetzler { row, col });
    }
    if n == 0 {
        return Err(LinalgError::Dimension("empty matrix".into()));
    }
    // max diag <= lambda_F <= max row sum
    let mut lo = a[(0, 0)].clone();
    let mut hi = a.row(0).iter().fold(T::zero(), |s, x| s + x.clone());
    for i in 1..n {
        lo = T::max_of(lo, a[(i, i)].clone());
        hi = T::max_of(hi, a.row(i).iter().fold(T::zero(), |s, x| s + x.clone()));
    }
    let two = T::one() + T::one();
    let width = T::from_f64(rel_tol) * T::max_of(a.max_abs(), T::one());
    let mut iters = 0;
    while hi.clone() - lo.clone() > width && iters < 200 {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        // lambda_F(A) < mid  <=>  A - mid I Hurwitz
        if metzler_hurwitz_oracle(&a.shift_diagonal(&(-mid.clone())))? {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
    }
    Ok((lo + hi) / two)
}

/// Static gain `e_j^T A^{-1} e_i` of the SISO system `(A, e_i, e_j^T)`.
///
/// Hurwitz Metzler matrices go through the sign-preserving M-matrix solve,
/// so a gain is exactly zero precisely when `j` is unreachable from `i`.
/// Anything else falls back to pivoted LU.
pub fn static_gain<T: Scalar>(a: &Matrix<T>, i: usize, j: usize) -> Result<T, LinalgError> {
    let n = require_square(a)?;
    if i >= n || j >= n {
        return Err(LinalgError::Dimension(format!("index out of range for dimension {n}")));
    }
    if a.is_metzler() {
        if let MinorTest::Hurwitz(f) = metzler_minor_test(a)? {
            let x = f.solve_negated(&unit(n, i));
            return Ok(-x[j].clone());
        }
    }
    let x = lu_solve(a, &unit(n, i))?;
    Ok(x[j].clone())
}

/// `e_j^T A^m e_i` for `m = 0..d-1`, by repeated matrix-vector products on
/// `A / max|A|` (the rescaling changes magnitudes, never which scalars vanish).
pub fn krylov_scalars<T: Scalar>(a: &Matrix<T>, i: usize, j: usize) -> Vec<T> {
    let n = a.rows;
    let s = a.max_abs();
    let b = if s.is_zero() { a.clone() } else { a.map(|x| x.clone() / s.clone()) };
    let mut x = unit::<T>(n, i);
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        if m > 0 {
            x = b.mul_vec(&x);
        }
        out.push(x[j].clone());
    }
    out
}

/// Rank of the output-controllability row `[e_j^T A^m e_i]_{m<d}` equals one.
pub fn output_controllability_rank<T: Scalar>(a: &Matrix<T>, i: usize, j: usize) -> bool {
    krylov_scalars(a, i, j).iter().any(|x| !x.is_zero())
}

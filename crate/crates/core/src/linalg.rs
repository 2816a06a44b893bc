//! Dense kernels over row-major `f64` storage.
//!
//! Every reduction runs left to right over a contiguous row so results are
//! bit-reproducible for a given input, independent of thread count.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `true` when `|m_ij - m_ji| <= tol * max|m|` for all entries.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix by `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn add_to_diagonal(&mut self, value: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += value;
        }
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// General product `self · other` (i-k-j loop order).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// General matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, v.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Transposed product `selfᵀ · v`.
    pub fn matvec_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }
}

/// Lower-triangular matrix in full row-major storage; the strict upper part is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { dim: n, data }
    }

    /// Takes the lower triangle (diagonal included) of a square matrix.
    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        check_dim(m.rows(), m.cols())?;
        let n = m.rows();
        let mut data = m.as_slice().to_vec();
        for i in 0..n {
            for j in i + 1..n {
                data[i * n + j] = 0.0;
            }
        }
        Ok(Self { dim: n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row `i` restricted to its lower-triangular part, columns `0..=i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..i * self.dim + i + 1]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `L · Lᵀ`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn check_square(m: &DenseMatrix) -> Result<usize> {
    check_dim(m.rows(), m.cols())?;
    Ok(m.rows())
}

/// Unpivoted Cholesky factorization `m = L Lᵀ` reading the lower triangle of `m`.
pub fn cholesky(m: &DenseMatrix) -> Result<LowerTriangular> {
    let n = check_square(m)?;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = m.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(LowerTriangular { dim: n, data: l })
}

/// Inverse of a lower-triangular matrix, itself lower triangular.
pub fn tri_invert(l: &LowerTriangular) -> Result<LowerTriangular> {
    let n = l.dim;
    let mut x = vec![0.0; n * n];
    for i in 0..n {
        let diag = l.get(i, i);
        if diag == 0.0 {
            return Err(Error::SingularDiagonal { index: i });
        }
        let mut row = vec![0.0; i + 1];
        row[i] = 1.0;
        for k in 0..i {
            let lik = l.get(i, k);
            if lik == 0.0 {
                continue;
            }
            for (r, xk) in row.iter_mut().zip(&x[k * n..k * n + k + 1]) {
                *r -= lik * xk;
            }
        }
        for (dst, r) in x[i * n..i * n + i + 1].iter_mut().zip(&row) {
            *dst = r / diag;
        }
    }
    Ok(LowerTriangular { dim: n, data: x })
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_invert(m: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky(m)?;
    let linv = tri_invert(&l)?;
    // m⁻¹ = L⁻ᵀ L⁻¹; with U = L⁻ᵀ stored by rows, entry (i, j) is a row dot product.
    let n = l.dim;
    let u = linv.to_dense().transpose();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = dot(&u.row(i)[i..], &u.row(j)[i..]);
            out.data[i * n + j] = v;
            out.data[j * n + i] = v;
        }
    }
    Ok(out)
}

/// Symmetric (or general square) matrix-vector product.
pub fn sym_matvec(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; m.rows()];
    sym_matvec_into(m, v, &mut out)?;
    Ok(out)
}

pub fn sym_matvec_into(m: &DenseMatrix, v: &[f64], out: &mut [f64]) -> Result<()> {
    check_dim(m.cols(), v.len())?;
    check_dim(m.rows(), out.len())?;
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(m.row(i), v);
    }
    Ok(())
}

/// `vᵀ M v` with one pass over `M`.
pub fn quadratic_form(m: &DenseMatrix, v: &[f64]) -> Result<f64> {
    check_dim(m.cols(), v.len())?;
    check_dim(m.rows(), v.len())?;
    Ok(v.iter()
        .enumerate()
        .fold(0.0, |acc, (i, &vi)| acc + vi * dot(m.row(i), v)))
}

pub fn tri_matvec(l: &LowerTriangular, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; l.dim];
    tri_matvec_into(l, v, &mut out)?;
    Ok(out)
}

pub fn tri_matvec_into(l: &LowerTriangular, v: &[f64], out: &mut [f64]) -> Result<()> {
    check_dim(l.dim, v.len())?;
    check_dim(l.dim, out.len())?;
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(l.row(i), &v[..=i]);
    }
    Ok(())
}

/// Forward substitution: solves `L y = v`.
pub fn tri_solve(l: &LowerTriangular, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; l.dim];
    tri_solve_into(l, v, &mut out)?;
    Ok(out)
}

pub fn tri_solve_into(l: &LowerTriangular, v: &[f64], out: &mut [f64]) -> Result<()> {
    check_dim(l.dim, v.len())?;
    check_dim(l.dim, out.len())?;
    for i in 0..l.dim {
        let row = l.row(i);
        let diag = row[i];
        if diag == 0.0 {
            return Err(Error::SingularDiagonal { index: i });
        }
        out[i] = (v[i] - dot(&row[..i], &out[..i])) / diag;
    }
    Ok(())
}

/// Back substitution against the transpose: solves `Lᵀ y = v`.
pub fn tri_solve_transpose(l: &LowerTriangular, v: &[f64]) -> Result<Vec<f64>> {
    check_dim(l.dim, v.len())?;
    let n = l.dim;
    let mut y = v.to_vec();
    for i in (0..n).rev() {
        let diag = l.get(i, i);
        if diag == 0.0 {
            return Err(Error::SingularDiagonal { index: i });
        }
        y[i] /= diag;
        let yi = y[i];
        for (yk, lik) in y[..i].iter_mut().zip(&l.row(i)[..i]) {
            *yk -= lik * yi;
        }
    }
    Ok(y)
}

/// `m + scale · v vᵀ`.
pub fn rank1_update(m: &DenseMatrix, v: &[f64], scale: f64) -> Result<DenseMatrix> {
    let mut out = m.clone();
    scaled_rank1_in_place(&mut out, 1.0, v, scale)?;
    Ok(out)
}

/// In place `m ← keep · m + scale · v vᵀ`.
pub fn scaled_rank1_in_place(m: &mut DenseMatrix, keep: f64, v: &[f64], scale: f64) -> Result<()> {
    check_dim(m.rows(), v.len())?;
    check_dim(m.cols(), v.len())?;
    let n = v.len();
    for (i, &vi) in v.iter().enumerate() {
        let a = scale * vi;
        let row = &mut m.data[i * n..(i + 1) * n];
        if keep == 1.0 {
            for (r, vj) in row.iter_mut().zip(v) {
                *r += a * vj;
            }
        } else {
            for (r, vj) in row.iter_mut().zip(v) {
                *r = keep * *r + a * vj;
            }
        }
    }
    Ok(())
}

/// `A Aᵀ` for a general `rows × cols` matrix.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, n);
    let fill_row = |i: usize, row: &mut [f64]| {
        for (j, r) in row.iter_mut().enumerate() {
            *r = dot(a.row(i), a.row(j));
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.data
            .par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| fill_row(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    out.data
        .chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| fill_row(i, row));
    out
}

/// `V diag(w) Vᵀ`.
pub fn weighted_gram(v: &DenseMatrix, weights: &[f64]) -> Result<DenseMatrix> {
    check_dim(v.cols(), weights.len())?;
    let n = v.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = v
                .row(i)
                .iter()
                .zip(v.row(j))
                .zip(weights)
                .fold(0.0, |acc, ((a, b), w)| acc + a * w * b);
            out.data[i * n + j] = s;
            out.data[j * n + i] = s;
        }
    }
    Ok(out)
}

/// Ordered eigendecomposition of a symmetric matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymEigen {
    /// Eigenvectors as columns, matching `values`.
    pub vectors: DenseMatrix,
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// Ratio of the largest to the smallest eigenvalue magnitude.
    pub fn condition_number(&self) -> f64 {
        let lo = self.values.first().copied().unwrap_or(1.0).abs();
        let hi = self.values.last().copied().unwrap_or(1.0).abs();
        hi / lo
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        weighted_gram(&self.vectors, &self.values).expect("shapes agree by construction")
    }
}

const EIGEN_MAX_SWEEPS: usize = 60;

/// Symmetric eigendecomposition by Householder tridiagonalization followed by
/// implicit-shift QL iteration. Eigenvalues ascending; each eigenvector is
/// signed so that its largest-magnitude component is positive.
pub fn sym_eigen(m: &DenseMatrix) -> Result<SymEigen> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(SymEigen {
            vectors: DenseMatrix::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let mut v = m.clone();
    v.symmetrize();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // QL rotates column pairs; work on the transpose so they are contiguous rows.
    let mut vt = v.transpose();
    tridiagonal_ql(&mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut vectors = DenseMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let vec = vt.row(src);
        let pivot = vec
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (i, x) in vec.iter().enumerate() {
            vectors.set(i, col, sign * x);
        }
    }
    Ok(SymEigen { vectors, values })
}

fn tridiagonalize(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    let at = |v: &DenseMatrix, i: usize, j: usize| v.data[i * n + j];
    for j in 0..n {
        d[j] = at(v, n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = at(v, i - 1, j);
                v.data[i * n + j] = 0.0;
                v.data[j * n + i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v.data[j * n + i] = f;
                g = e[j] + at(v, j, j) * f;
                for k in j + 1..i {
                    let vkj = at(v, k, j);
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v.data[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = at(v, i - 1, j);
                v.data[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v.data[(n - 1) * n + i] = at(v, i, i);
        v.data[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = at(v, k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += at(v, k, i + 1) * at(v, k, j);
                }
                for k in 0..=i {
                    v.data[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v.data[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = at(v, n - 1, j);
        v.data[(n - 1) * n + j] = 0.0;
    }
    v.data[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal (d, e); `vt` holds eigenvectors as rows.
fn tridiagonal_ql(vt: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    let cap = EIGEN_MAX_SWEEPS * n.max(1);
    let mut total = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                total += 1;
                if total > cap {
                    return Err(Error::ConvergenceFailure { iterations: cap });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = vt.data.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_i1 = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

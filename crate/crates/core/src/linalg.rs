//! Dense real matrices, the symmetric eigensolver and a small least-squares
//! routine.
//!
//! The eigensolver reduces to tridiagonal form with Householder reflections
//! and then runs implicitly shifted QL sweeps (the classic `tred2`/`tql2`
//! pair). Matrices here are at most a few hundred wide, so a full dense
//! solve is always affordable.

use crate::error::{Result, RmtError};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps a row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(RmtError::Shape(format!(
                "buffer of length {} cannot hold {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(RmtError::Shape("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies the sub-block `rows x cols` starting at (`row0`, `col0`).
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let src = &self.row(row0 + i)[col0..col0 + cols];
            out.data[i * cols..(i + 1) * cols].copy_from_slice(src);
        }
        out
    }

    /// Returns a copy with columns reordered so that output column `j` is
    /// input column `order[j]`.
    pub fn select_columns(&self, order: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, order.len());
        for i in 0..self.rows {
            let src = self.row(i);
            for (j, &k) in order.iter().enumerate() {
                out.data[i * order.len() + j] = src[k];
            }
        }
        out
    }

    /// `scale * AᵀA`, accumulated row by row so each pass streams memory.
    pub fn gram(&self, scale: f64) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let x = self.row(r);
            for i in 0..n {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                let gi = &mut g.data[i * n..i * n + n];
                for j in i..n {
                    gi[j] += xi * x[j];
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                let v = g.data[i * n + j] * scale;
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest |a_ij - a_ji| together with its location.
    pub fn asymmetry(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.0 {
                    worst = (gap, i, j);
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in ascending order, with eigenvectors stored as the columns
/// of `vectors` when requested.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Matrix>,
}

impl SymmetricEigen {
    /// max |A - Q diag(λ) Qᵀ|; `None` without eigenvectors.
    pub fn reconstruction_residual(&self, a: &Matrix) -> Option<f64> {
        let q = self.vectors.as_ref()?;
        let n = a.rows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[(i, k)] * self.values[k] * q[(j, k)];
                }
                worst = worst.max((a[(i, j)] - s).abs());
            }
        }
        Some(worst)
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Only the lower triangle is read; callers check symmetry beforehand.
pub fn symmetric_eigen(a: &Matrix, want_vectors: bool) -> Result<SymmetricEigen> {
    if a.rows() != a.cols() {
        return Err(RmtError::Shape(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: want_vectors.then(|| Matrix::zeros(0, 0)) });
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tql(&mut d, &mut e, &mut v)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut q = Matrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            for (row, vr) in v.iter().enumerate() {
                q[(row, col)] = vr[k];
            }
        }
        q
    });
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues (ascending) and first eigenvector components of a symmetric
/// tridiagonal matrix; the latter drive Golub-Welsch quadrature weights.
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if offdiag.len() + 1 != n.max(1) {
        return Err(RmtError::Shape("off-diagonal must have n-1 entries".into()));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(offdiag);
    // tql expects e shifted by one: e[i] couples i-1 and i.
    e.rotate_right(1);
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    tql(&mut d, &mut e, &mut v)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    Ok((order.iter().map(|&i| d[i]).collect(), order.iter().map(|&i| v[0][i]).collect()))
}

/// Householder reduction to tridiagonal form. On exit `d` holds the
/// diagonal, `e[1..]` the subdiagonal and `v` the accumulated transform.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
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
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
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
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal (`d`, `e`), accumulating rotations
/// into `v`.
fn tql(d: &mut [f64], e: &mut [f64], v: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(RmtError::NoConvergence(l));
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
                for di in d.iter_mut().take(n).skip(l + 2) {
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
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
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

/// Least-squares solution of `A x ≈ b` by Householder QR.
///
/// Returns `None` when a diagonal entry of R falls below `rank_tol` times
/// the largest one, i.e. the design is numerically rank deficient.
pub fn least_squares(a: &Matrix, b: &[f64], rank_tol: f64) -> Option<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if m < n || b.len() != m {
        return None;
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let mut diag = vec![0.0; n];
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut u: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        u[0] -= alpha;
        let unorm2: f64 = u.iter().map(|x| x * x).sum();
        if unorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = u.iter().enumerate().map(|(t, ut)| ut * r[(k + t, j)]).sum();
                let f = 2.0 * dot / unorm2;
                for (t, ut) in u.iter().enumerate() {
                    r[(k + t, j)] -= f * ut;
                }
            }
            let dot: f64 = u.iter().enumerate().map(|(t, ut)| ut * y[k + t]).sum();
            let f = 2.0 * dot / unorm2;
            for (t, ut) in u.iter().enumerate() {
                y[k + t] -= f * ut;
            }
        }
        diag[k] = r[(k, k)];
    }
    let rmax = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= rank_tol * rmax) {
        return None;
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| r[(k, j)] * x[j]).sum();
        x[k] = (y[k] - s) / r[(k, k)];
    }
    Some(x)
}

//! Dense symmetric-matrix arithmetic.
//!
//! [`SymMatrix`] stores all `n * n` entries row-major and keeps them exactly
//! symmetric: every constructor symmetrizes and every mutator writes both
//! triangles. Eigendecompositions use cyclic Jacobi sweeps, optionally started
//! from a previous eigenbasis ([`sym_eigen_warm`]) which is what the splitting
//! solver relies on between iterations.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Off-diagonal Frobenius tolerance, relative to the input's Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    n: usize,
    entries: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;
    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        SymMatrix::from_row_major(r.n, r.entries)
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        SymMatrixRepr { n: m.dim, entries: m.data }
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix needs dim >= 1");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Builds from a full row-major array, replacing it by `(A + Aᵀ) / 2`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        check_dim(dim * dim, data.len())?;
        let mut m = Self { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    /// `f(i, j)` is only evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// `x xᵀ`
    pub fn outer(x: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| x[i] * x[j])
    }

    /// `x wᵀ + w xᵀ`
    pub fn sym_outer(x: &[f64], w: &[f64]) -> Result<Self> {
        check_dim(x.len(), w.len())?;
        Ok(Self::from_fn(x.len(), |i, j| x[i] * w[j] + w[i] * x[j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `v` to both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Restriction to the rows/columns in `idx` (a `|idx| × |idx|` matrix).
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵀ X v`
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        Ok(dot(&self.mul_vec(v)?, v))
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|v| alpha * v).collect() }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Entrywise map; `f` must be a function of the value only, so symmetry is kept.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Σ|x_ij| over all entries, both triangles.
    pub fn entrywise_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        let s = sym_eigen(self)?;
        Ok(s.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let s = sym_eigen(self)?;
        Ok(*s.values.last().expect("dim >= 1"))
    }

    pub(crate) fn data_mut_unchecked(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn from_raw_symmetrize(dim: usize, data: Vec<f64>) -> SymMatrix {
        let mut m = SymMatrix { dim, data };
        m.symmetrize();
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `C = alpha * op(A) * op(B) + beta * C` on row-major buffers, where the
/// operands are described by their logical shape and element strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    let span = |rows: usize, cols: usize, rs: isize, cs: isize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows as isize - 1) * rs + (cols as isize - 1) * cs + 1
        }
    };
    assert!(a.0.len() as isize >= span(m, k, a.1, a.2));
    assert!(b.0.len() as isize >= span(k, n, b.1, b.2));
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Row `i` holds the eigenvector of `values[i]`.
    vectors: Vec<f64>,
    dim: usize,
    pub sweeps: usize,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Eigenvectors as rows (i.e. `Qᵀ`), row-major.
    pub fn vectors_as_rows(&self) -> &[f64] {
        &self.vectors
    }

    /// `Q diag(f(λ)) Qᵀ` summed over the eigenpairs where `f(λ) != 0`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim;
        let mut weights = Vec::new();
        let mut rows = Vec::new();
        for (i, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w != 0.0 {
                weights.push(w);
                rows.push(i);
            }
        }
        let r = rows.len();
        if r == 0 {
            return SymMatrix::zeros(n);
        }
        // B = Qᵣᵀ, S = diag(w) B, result = Bᵀ S
        let mut basis = Vec::with_capacity(r * n);
        let mut scaled = Vec::with_capacity(r * n);
        for (&i, &w) in rows.iter().zip(&weights) {
            let v = self.vector(i);
            basis.extend_from_slice(v);
            scaled.extend(v.iter().map(|a| a * w));
        }
        let mut out = vec![0.0; n * n];
        gemm(n, r, n, 1.0, (&basis, 1, n as isize), (&scaled, n as isize, 1), 0.0, &mut out);
        SymMatrix::from_raw_symmetrize(n, out)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    /// `‖QᵀQ − I‖_∞`
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim;
        let mut err = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let g = dot(self.vector(i), self.vector(j));
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g - target).abs());
            }
        }
        err
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(x: &SymMatrix) -> Result<Spectrum> {
    let n = x.dim;
    let mut a = x.data.clone();
    let mut vt = identity_buffer(n);
    let sweeps = jacobi_sweeps(&mut a, &mut vt, n, x.frobenius_norm())?;
    Ok(finish_spectrum(&a, vt, n, sweeps))
}

/// Jacobi eigendecomposition started from the eigenbasis `guess` of a nearby
/// matrix: `Qᵀ X Q` is diagonalized instead of `X`, which needs far fewer
/// rotations when `X` is close to the matrix `guess` came from.
pub fn sym_eigen_warm(x: &SymMatrix, guess: &Spectrum) -> Result<Spectrum> {
    let n = x.dim;
    check_dim(n, guess.dim)?;
    let ni = n as isize;
    let q_rows = &guess.vectors;
    let mut tmp = vec![0.0; n * n];
    gemm(n, n, n, 1.0, (q_rows, ni, 1), (&x.data, ni, 1), 0.0, &mut tmp);
    let mut b = vec![0.0; n * n];
    gemm(n, n, n, 1.0, (&tmp, ni, 1), (q_rows, 1, ni), 0.0, &mut b);
    let mut b = SymMatrix::from_raw_symmetrize(n, b).data;
    let mut wt = identity_buffer(n);
    let sweeps = jacobi_sweeps(&mut b, &mut wt, n, x.frobenius_norm())?;
    let mut vt = vec![0.0; n * n];
    gemm(n, n, n, 1.0, (&wt, ni, 1), (q_rows, ni, 1), 0.0, &mut vt);
    Ok(finish_spectrum(&b, vt, n, sweeps))
}

fn identity_buffer(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Runs sweeps on the symmetric buffer `a`, accumulating rotations into the
/// rows of `vt`. Returns the number of sweeps performed.
///
/// Each sweep visits every pair once in round-robin order; the `n/2` pairs of
/// a round are disjoint, so their rotations are applied together as one pass
/// over the rows followed by one pass over the columns.
fn jacobi_sweeps(a: &mut [f64], vt: &mut [f64], n: usize, scale: f64) -> Result<usize> {
    if scale == 0.0 || n == 1 {
        return Ok(0);
    }
    let tol = JACOBI_TOLERANCE * scale;
    // Entries below this are left alone; all of them together cannot exceed `tol`.
    let skip = 1e-2 * tol / n as f64;
    // circle-method schedule; index n is a dummy when n is odd
    let slots = n + n % 2;
    let mut ring: Vec<usize> = (0..slots).collect();
    let mut rotations: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(slots / 2);
    for sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(a, n) <= tol {
            return Ok(sweep);
        }
        for _round in 0..slots - 1 {
            rotations.clear();
            for i in 0..slots / 2 {
                let (u, v) = (ring[i], ring[slots - 1 - i]);
                if u >= n || v >= n {
                    continue;
                }
                let (p, q) = if u < v { (u, v) } else { (v, u) };
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                rotations.push((p, q, c, t * c));
            }
            ring[1..].rotate_right(1);
            if rotations.is_empty() {
                continue;
            }
            for &(p, q, c, s) in &rotations {
                rotate_rows(a, n, p, q, c, s);
                rotate_rows(vt, n, p, q, c, s);
            }
            for row in a.chunks_exact_mut(n) {
                for &(p, q, c, s) in &rotations {
                    let (u, v) = (row[p], row[q]);
                    row[p] = c * u - s * v;
                    row[q] = s * u + c * v;
                }
            }
            // the rotated pq entries are zero up to rounding
            for &(p, q, _, _) in &rotations {
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let residual = off_diagonal_norm(a, n);
    if residual <= tol {
        Ok(JACOBI_MAX_SWEEPS)
    } else {
        Err(Error::EigenNotConverged { sweeps: JACOBI_MAX_SWEEPS, residual: residual / scale })
    }
}


/// row_p ← c·row_p − s·row_q, row_q ← s·row_p + c·row_q
#[inline]
fn rotate_rows(buf: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = buf.split_at_mut(q * n);
    let rp = &mut head[p * n..(p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (u, v) = (*x, *y);
        *x = c * u - s * v;
        *y = s * u + c * v;
    }
}

fn finish_spectrum(a: &[f64], vt: Vec<f64>, n: usize, sweeps: usize) -> Spectrum {
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        values.push(diag[i]);
        let row = &vt[i * n..(i + 1) * n];
        // largest-magnitude coordinate made positive (first index on ties)
        let mut pivot = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.extend(row.iter().map(|v| sign * v));
    }
    Spectrum { values, vectors, dim: n, sweeps }
}

/// Frobenius-nearest PSD matrix (negative eigenvalues clamped to zero).
pub fn psd_project(x: &SymMatrix) -> Result<SymMatrix> {
    Ok(sym_eigen(x)?.reconstruct_with(|l| l.max(0.0)))
}

/// Entrywise `sign(x) · max(|x| − tau, 0)`.
pub fn soft_threshold(x: &SymMatrix, tau: f64) -> SymMatrix {
    debug_assert!(tau >= 0.0);
    x.map(|v| shrink(v, tau))
}

#[inline]
pub fn shrink(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub fro: f64,
    pub spectral: f64,
    pub entrywise_l1: f64,
    pub entrywise_linf: f64,
    pub trace: f64,
}

pub fn norms(x: &SymMatrix) -> Result<Norms> {
    Ok(Norms {
        fro: x.frobenius_norm(),
        spectral: x.spectral_norm()?,
        entrywise_l1: x.entrywise_l1(),
        entrywise_linf: x.max_abs(),
        trace: x.trace(),
    })
}

/// `⟨X, Y⟩ = Tr(XY)`
pub fn inner(x: &SymMatrix, y: &SymMatrix) -> Result<f64> {
    check_dim(x.dim, y.dim)?;
    Ok(dot(&x.data, &y.data))
}

/// Lower-triangular Cholesky factor `L` of a symmetric positive definite
/// matrix, `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &[f64], dim: usize) -> Result<Self> {
        check_dim(dim * dim, a.len())?;
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut d = a[j * dim + j] - dot(&l[j * dim..j * dim + j], &l[j * dim..j * dim + j]);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            d = d.sqrt();
            l[j * dim + j] = d;
            for i in j + 1..dim {
                let s = a[i * dim + j] - dot(&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
                l[i * dim + j] = s / d;
            }
        }
        Ok(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A y = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        check_dim(n, rhs.len())?;
        let l = &self.lower;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let s = dot(&l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        Ok(y)
    }

    /// `‖A − L Lᵀ‖_F`
    pub fn reconstruction_error(&self, a: &[f64]) -> f64 {
        let n = self.dim;
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = i.min(j) + 1;
                let v = dot(&self.lower[i * n..i * n + k], &self.lower[j * n..j * n + k]);
                err += (a[i * n + j] - v).powi(2);
            }
        }
        err.sqrt()
    }
}

/// Householder QR with column pivoting on a row-major `rows × cols` matrix.
/// Numerical rank uses the threshold `rel_tol · σ_max`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    /// R in the upper triangle, Householder vectors below.
    qr: Vec<f64>,
    betas: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn factor(a: &[f64], rows: usize, cols: usize, rel_tol: f64) -> Result<Self> {
        check_dim(rows * cols, a.len())?;
        let sigma_max = largest_singular_value(a, rows, cols)?;
        let threshold = rel_tol * sigma_max;
        let mut qr = a.to_vec();
        let mut perm: Vec<usize> = (0..cols).collect();
        let steps = rows.min(cols);
        let mut betas = Vec::with_capacity(steps);
        let mut rank = 0;
        for j in 0..steps {
            // pivot: remaining column with the largest trailing norm
            let col_norm = |qr: &[f64], c: usize| -> f64 {
                (j..rows).map(|i| qr[i * cols + c].powi(2)).sum::<f64>()
            };
            let mut best = j;
            let mut best_norm = col_norm(&qr, j);
            for c in j + 1..cols {
                let v = col_norm(&qr, c);
                if v > best_norm {
                    best = c;
                    best_norm = v;
                }
            }
            if best != j {
                for i in 0..rows {
                    qr.swap(i * cols + j, i * cols + best);
                }
                perm.swap(j, best);
            }
            let norm = best_norm.sqrt();
            if norm <= threshold {
                break;
            }
            let x0 = qr[j * cols + j];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let v0 = x0 - alpha;
            // v = (1, x[j+1..]/v0), beta = -v0/alpha
            for i in j + 1..rows {
                qr[i * cols + j] /= v0;
            }
            let beta = -v0 / alpha;
            qr[j * cols + j] = alpha;
            for c in j + 1..cols {
                let mut s = qr[j * cols + c];
                for i in j + 1..rows {
                    s += qr[i * cols + j] * qr[i * cols + c];
                }
                s *= beta;
                qr[j * cols + c] -= s;
                for i in j + 1..rows {
                    qr[i * cols + c] -= s * qr[i * cols + j];
                }
            }
            betas.push(beta);
            rank += 1;
        }
        Ok(Self { rows, cols, qr, betas, perm, rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column order chosen by pivoting; the first `rank` are independent.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Basic least-squares solution (free variables set to zero).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, rhs.len())?;
        let (rows, cols) = (self.rows, self.cols);
        let mut y = rhs.to_vec();
        for (j, beta) in self.betas.iter().enumerate() {
            let mut s = y[j];
            for i in j + 1..rows {
                s += self.qr[i * cols + j] * y[i];
            }
            s *= beta;
            y[j] -= s;
            for i in j + 1..rows {
                y[i] -= s * self.qr[i * cols + j];
            }
        }
        let r = self.rank;
        let mut z = vec![0.0; cols];
        for i in (0..r).rev() {
            let mut s = y[i];
            for c in i + 1..r {
                s -= self.qr[i * cols + c] * z[c];
            }
            z[i] = s / self.qr[i * cols + i];
        }
        let mut out = vec![0.0; cols];
        for (pos, &c) in self.perm.iter().enumerate() {
            out[c] = z[pos];
        }
        Ok(out)
    }

    /// A unit vector in the null space, when the rank is deficient.
    pub fn null_vector(&self) -> Option<Vec<f64>> {
        let (r, cols) = (self.rank, self.cols);
        if r == cols {
            return None;
        }
        // [−R11⁻¹ R12 e_1 ; e_1] in pivoted coordinates
        let mut z = vec![0.0; cols];
        z[r] = 1.0;
        for i in (0..r).rev() {
            let mut s = -self.qr[i * cols + r];
            for c in i + 1..r {
                s -= self.qr[i * cols + c] * z[c];
            }
            z[i] = s / self.qr[i * cols + i];
        }
        let norm = norm2(&z);
        let mut out = vec![0.0; cols];
        for (pos, &c) in self.perm.iter().enumerate() {
            out[c] = z[pos] / norm;
        }
        Some(out)
    }
}

/// Largest singular value via the Gram matrix `AᵀA`.
pub fn largest_singular_value(a: &[f64], rows: usize, cols: usize) -> Result<f64> {
    check_dim(rows * cols, a.len())?;
    if cols == 0 || rows == 0 {
        return Ok(0.0);
    }
    let gram = SymMatrix::from_fn(cols, |p, q| (0..rows).map(|i| a[i * cols + p] * a[i * cols + q]).sum());
    let s = sym_eigen(&gram)?;
    Ok(s.values[0].max(0.0).sqrt())
}

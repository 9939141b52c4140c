//! Gaussian sensing ensembles, the quadratic measurement operator and the
//! subspace projections used by the certificate analysis.
//!
//! Notation: `G` is the support of the unit signal `x`; `Ω` is the set of
//! symmetric matrices supported on the `G × G` block, `Γ` those supported on
//! the complementary block, and `T = { x wᵀ + w xᵀ }` is the tangent space at
//! `x xᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, gemm, norm2, Cholesky, SymMatrix};
use crate::rng::GaussianSource;

/// A k-sparse signal stored by support and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct SparseSignal {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SignalRepr {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<SignalRepr> for SparseSignal {
    type Error = Error;
    fn try_from(r: SignalRepr) -> Result<Self> {
        SparseSignal::new(r.n, r.support, r.values)
    }
}

impl From<SparseSignal> for SignalRepr {
    fn from(s: SparseSignal) -> Self {
        SignalRepr { n: s.dim, support: s.support, values: s.values }
    }
}

impl SparseSignal {
    /// Support indices are sorted on construction; values must be nonzero.
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_dim(support.len(), values.len())?;
        if support.is_empty() {
            return Err(Error::InvalidInput("signal support must be nonempty".into()));
        }
        let mut pairs: Vec<(usize, f64)> = support.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!("duplicate support index {}", w[0].0)));
            }
        }
        for &(i, v) in &pairs {
            if i >= dim {
                return Err(Error::InvalidInput(format!("support index {i} out of range for n = {dim}")));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::InvalidInput(format!("value at support index {i} must be finite and nonzero")));
            }
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(Self { dim, support, values })
    }

    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        Self::new(x.len(), support, values)
    }

    /// Entries `±1/√k` on a uniformly random support with random signs.
    pub fn flat(n: usize, k: usize, rng: &mut GaussianSource) -> Result<Self> {
        validate_sparsity(n, k)?;
        let support = rng.subset(n, k);
        let mag = 1.0 / (k as f64).sqrt();
        let values = (0..k).map(|_| if rng.coin() { mag } else { -mag }).collect();
        Self::new(n, support, values)
    }

    /// Gaussian values on a random support, normalized to unit ℓ2 norm.
    pub fn gaussian_normalized(n: usize, k: usize, rng: &mut GaussianSource) -> Result<Self> {
        validate_sparsity(n, k)?;
        let support = rng.subset(n, k);
        let mut values = rng.normals(k);
        // a Gaussian draw is almost surely nonzero; redraw the measure-zero case
        while values.contains(&0.0) {
            values = rng.normals(k);
        }
        let norm = norm2(&values);
        values.iter_mut().for_each(|v| *v /= norm);
        Self::new(n, support, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn is_unit_norm(&self) -> bool {
        (self.l2_norm() - 1.0).abs() <= 1e-12
    }

    pub fn negated(&self) -> SparseSignal {
        SparseSignal { dim: self.dim, support: self.support.clone(), values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn normalized(&self) -> SparseSignal {
        let norm = self.l2_norm();
        SparseSignal { dim: self.dim, support: self.support.clone(), values: self.values.iter().map(|v| v / norm).collect() }
    }
}

fn validate_sparsity(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("sparsity must satisfy 1 <= k <= n (k = {k}, n = {n})")));
    }
    Ok(())
}

/// Squared-magnitude measurements `b_j = ⟨z_j, x⟩²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MeasurementVector(Vec<f64>);

impl TryFrom<Vec<f64>> for MeasurementVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MeasurementVector::new(v)
    }
}

impl From<MeasurementVector> for Vec<f64> {
    fn from(m: MeasurementVector) -> Self {
        m.0
    }
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("measurement {j} = {v} is not a finite nonnegative value")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    /// The same measurements multiplied by `factor` (used for scaling checks).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

/// Cholesky factor of the Gram matrix `G_ij = ⟨z_i, z_j⟩²` of the measurement operator.
#[derive(Debug, Clone)]
pub struct GramFactor {
    chol: Cholesky,
    /// Ridge added to the diagonal (zero unless the plain factorization failed).
    pub ridge: f64,
}

impl GramFactor {
    /// Solves `(G + ridge·I) w = r`.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.chol.solve(r)
    }
}

/// `m` i.i.d. standard normal vectors in ℝⁿ, regenerable from `(n, m, seed)`.
#[derive(Debug, Clone)]
pub struct SensingEnsemble {
    dim: usize,
    count: usize,
    seed: u64,
    /// `m × n`, row `j` is `z_j`.
    vectors: Vec<f64>,
    gram: Option<GramFactor>,
}

/// JSON descriptor of a regenerable ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn build(&self) -> Result<SensingEnsemble> {
        make_ensemble(self.n, self.m, self.seed)
    }
}

pub fn make_ensemble(n: usize, m: usize, seed: u64) -> Result<SensingEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput(format!("ensemble needs n >= 1 and m >= 1 (n = {n}, m = {m})")));
    }
    let vectors = GaussianSource::new(seed).normals(n * m);
    Ok(SensingEnsemble { dim: n, count: m, seed, vectors, gram: None })
}

impl SensingEnsemble {
    /// Wraps explicit vectors (row-major `m × n`). The seed is recorded as 0.
    pub fn from_vectors(n: usize, vectors: Vec<f64>) -> Result<Self> {
        if n == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "vector buffer of length {} is not a nonempty multiple of n = {n}",
                vectors.len()
            )));
        }
        let count = vectors.len() / n;
        Ok(Self { dim: n, count, seed: 0, vectors, gram: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> EnsembleSpec {
        EnsembleSpec { n: self.dim, m: self.count, seed: self.seed }
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// The Gram matrix `G_ij = ⟨z_i, z_j⟩²`, row-major `m × m`.
    pub fn gram_matrix(&self) -> Vec<f64> {
        let m = self.count;
        let mut g = vec![0.0; m * m];
        let d = self.dim as isize;
        gemm(m, self.dim, m, 1.0, (&self.vectors, d, 1), (&self.vectors, 1, d), 0.0, &mut g);
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (g[i * m + j] + g[j * m + i]);
                let v = v * v;
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }

    /// Computes and stores the Gram factorization. If the plain Cholesky
    /// fails, a ridge of `1e-10 · mean(diag)` is added and it is retried once.
    pub fn factorize_gram(&mut self) -> Result<()> {
        if self.gram.is_some() {
            return Ok(());
        }
        let m = self.count;
        let mut g = self.gram_matrix();
        let factor = match Cholesky::factor(&g, m) {
            Ok(chol) => GramFactor { chol, ridge: 0.0 },
            Err(_) => {
                let mean_diag = (0..m).map(|i| g[i * m + i]).sum::<f64>() / m as f64;
                let ridge = 1e-10 * mean_diag;
                for i in 0..m {
                    g[i * m + i] += ridge;
                }
                let chol = Cholesky::factor(&g, m).map_err(|e| {
                    Error::Factorization(format!("Gram matrix singular even after ridge {ridge:e}: {e}"))
                })?;
                GramFactor { chol, ridge }
            }
        };
        self.gram = Some(factor);
        Ok(())
    }

    pub fn with_gram(mut self) -> Result<Self> {
        self.factorize_gram()?;
        Ok(self)
    }

    pub fn gram(&self) -> Option<&GramFactor> {
        self.gram.as_ref()
    }

    /// `‖G − L Lᵀ‖_F / ‖G‖_F` for the stored factor (ridge included in `G`).
    pub fn gram_reconstruction_error(&self) -> Option<f64> {
        let f = self.gram.as_ref()?;
        let m = self.count;
        let mut g = self.gram_matrix();
        for i in 0..m {
            g[i * m + i] += f.ridge;
        }
        let norm = norm2(&g);
        Some(f.chol.reconstruction_error(&g) / norm)
    }

    /// Rows `range` as a standalone ensemble (used for golfing groups).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<SensingEnsemble> {
        if range.start >= range.end || range.end > self.count {
            return Err(Error::InvalidInput(format!("row range {range:?} invalid for m = {}", self.count)));
        }
        let data = self.vectors[range.start * self.dim..range.end * self.dim].to_vec();
        let mut e = SensingEnsemble::from_vectors(self.dim, data)?;
        e.seed = self.seed;
        Ok(e)
    }
}

/// `b_j = ⟨z_j, x⟩²`
pub fn measure(e: &SensingEnsemble, x: &SparseSignal) -> Result<MeasurementVector> {
    check_dim(e.dim, x.dim())?;
    let values = (0..e.count)
        .map(|j| {
            let z = e.vector(j);
            let s: f64 = x.support().iter().zip(x.values()).map(|(&i, &v)| z[i] * v).sum();
            s * s
        })
        .collect();
    MeasurementVector::new(values)
}

/// `𝒜(X)_j = z_jᵀ X z_j`
pub fn apply_a(e: &SensingEnsemble, x: &SymMatrix) -> Result<Vec<f64>> {
    check_dim(e.dim, x.dim())?;
    let (m, n) = (e.count, e.dim);
    let mut zx = vec![0.0; m * n];
    gemm(m, n, n, 1.0, (&e.vectors, n as isize, 1), (x.as_slice(), n as isize, 1), 0.0, &mut zx);
    Ok((0..m).map(|j| dot(&zx[j * n..(j + 1) * n], e.vector(j))).collect())
}

/// `𝒜*(v) = Σ_j v_j z_j z_jᵀ`
pub fn apply_a_adjoint(e: &SensingEnsemble, v: &[f64]) -> Result<SymMatrix> {
    check_dim(e.count, v.len())?;
    let (m, n) = (e.count, e.dim);
    let mut scaled = e.vectors.clone();
    for (j, &w) in v.iter().enumerate() {
        scaled[j * n..(j + 1) * n].iter_mut().for_each(|a| *a *= w);
    }
    let mut out = vec![0.0; n * n];
    gemm(n, m, n, 1.0, (&e.vectors, 1, n as isize), (&scaled, n as isize, 1), 0.0, &mut out);
    Ok(SymMatrix::from_raw_symmetrize(n, out))
}

/// Support and unit signal that define the subspaces Ω, Γ and T.
#[derive(Debug, Clone)]
pub struct SubspaceContext {
    dim: usize,
    support: Vec<usize>,
    in_support: Vec<bool>,
    x: Vec<f64>,
    signs: Vec<f64>,
}

impl SubspaceContext {
    pub fn new(signal: &SparseSignal) -> Result<Self> {
        if !signal.is_unit_norm() {
            return Err(Error::InvalidInput(format!(
                "subspace context needs a unit-norm signal (‖x‖₂ = {})",
                signal.l2_norm()
            )));
        }
        let dim = signal.dim();
        let mut in_support = vec![false; dim];
        signal.support().iter().for_each(|&i| in_support[i] = true);
        let x = signal.to_dense();
        let signs = x.iter().map(|v| if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 }).collect();
        Ok(Self { dim, support: signal.support().to_vec(), in_support, x, signs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.in_support[i]
    }

    pub fn signal(&self) -> &[f64] {
        &self.x
    }

    pub fn sign_vector(&self) -> &[f64] {
        &self.signs
    }

    pub fn l1_norm(&self) -> f64 {
        self.x.iter().map(|v| v.abs()).sum()
    }

    /// Embeds a vector indexed by the support into ℝⁿ.
    pub fn embed(&self, on_support: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.support.len(), on_support.len())?;
        let mut v = vec![0.0; self.dim];
        for (&i, &a) in self.support.iter().zip(on_support) {
            v[i] = a;
        }
        Ok(v)
    }

    /// Keeps only the `G × G` block.
    pub fn project_omega(&self, x: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, x.dim())?;
        Ok(self.mask(x, |a, b| a && b))
    }

    /// Keeps only the `Gᶜ × Gᶜ` block.
    pub fn project_gamma(&self, x: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, x.dim())?;
        Ok(self.mask(x, |a, b| !a && !b))
    }

    /// `X − P_Ω(X)`
    pub fn project_omega_perp(&self, x: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, x.dim())?;
        Ok(self.mask(x, |a, b| !(a && b)))
    }

    fn mask(&self, x: &SymMatrix, keep: impl Fn(bool, bool) -> bool) -> SymMatrix {
        let n = self.dim;
        let mut out = x.clone();
        let data = out.data_mut_unchecked();
        for i in 0..n {
            for j in 0..n {
                if !keep(self.in_support[i], self.in_support[j]) {
                    data[i * n + j] = 0.0;
                }
            }
        }
        out
    }

    /// `P_T(X) = x xᵀ X + X x xᵀ − (xᵀ X x) x xᵀ`
    pub fn project_t(&self, x: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, x.dim())?;
        let y = x.mul_vec(&self.x)?;
        Ok(self.tangent_from(&y))
    }

    /// Builds `x yᵀ + y xᵀ − (xᵀy) x xᵀ` for `y = X x`.
    fn tangent_from(&self, y: &[f64]) -> SymMatrix {
        let x = &self.x;
        let c = dot(x, y);
        SymMatrix::from_fn(self.dim, |i, j| x[i] * y[j] + y[i] * x[j] - c * x[i] * x[j])
    }

    /// `P_{T∩Ω}(X) = P_T(P_Ω(X))`; only the `G × G` block of `X` is read.
    pub fn project_t_cap_omega(&self, x: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, x.dim())?;
        let mut y = vec![0.0; self.dim];
        for &i in &self.support {
            y[i] = self.support.iter().map(|&j| x.get(i, j) * self.x[j]).sum();
        }
        Ok(self.tangent_from(&y))
    }

    /// `P_Ω(X) − P_{T∩Ω}(X)`
    pub fn project_t_perp_cap_omega(&self, x: &SymMatrix) -> Result<SymMatrix> {
        self.project_omega(x)?.sub(&self.project_t_cap_omega(x)?)
    }

    /// `P_T(sgn(x) sgn(x)ᵀ) = ‖x‖₁ (x sgnᵀ + sgn xᵀ) − ‖x‖₁² x xᵀ`
    pub fn sign_tangent(&self) -> SymMatrix {
        let l1 = self.l1_norm();
        let (x, s) = (&self.x, &self.signs);
        SymMatrix::from_fn(self.dim, |i, j| l1 * (x[i] * s[j] + s[i] * x[j]) - l1 * l1 * x[i] * x[j])
    }

    /// `X₀ = λ x xᵀ + P_T(sgn(x) sgn(x)ᵀ)`
    pub fn build_x0(&self, lambda: f64) -> SymMatrix {
        let mut x0 = self.sign_tangent();
        x0.axpy(lambda, &SymMatrix::outer(&self.x)).expect("same dimension");
        x0
    }
}

//! Approximate dual certificates built by the golfing scheme.
//!
//! Starting from `X₀ = λ x xᵀ + P_T(sgn(x) sgn(x)ᵀ)`, each group of
//! measurement vectors produces a correction `Y_i = f(...)` aimed at the
//! current residual `X_{i−1}`, and the residual is updated by
//! `X_i = X_{i−1} − P_{T∩Ω}(Y_i)`. The certificate is `Y = Σ Y_i`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm2, sym_eigen, SymMatrix};
use crate::measurement::{apply_a_adjoint, SensingEnsemble, SubspaceContext};

/// Gaussian moments truncated to `|z| ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMoments {
    pub beta2: f64,
    pub beta4: f64,
    pub threshold: f64,
}

pub const TRUNCATION: f64 = 3.0;

/// `β₂ = E[z² 1{|z|≤3}]`, `β₄ = E[z⁴ 1{|z|≤3}]` for a standard normal `z`.
pub fn truncated_moments() -> TruncatedMoments {
    truncated_moments_at(TRUNCATION)
}

/// Closed forms obtained by integrating by parts against the normal density `φ`:
/// `E[z² 1] = erf(a/√2) − 2aφ(a)`, `E[z⁴ 1] = 3 erf(a/√2) − 2φ(a)(a³ + 3a)`.
pub fn truncated_moments_at(a: f64) -> TruncatedMoments {
    let mass = erf(a / std::f64::consts::SQRT_2);
    let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    TruncatedMoments {
        beta2: mass - 2.0 * a * phi,
        beta4: 3.0 * mass - 2.0 * phi * (a * a * a + 3.0 * a),
        threshold: a,
    }
}

/// Number of golfing groups, `⌊2 ln n⌋ + 3`.
pub fn golfing_group_count(n: usize) -> usize {
    (2.0 * (n as f64).ln()).floor() as usize + 3
}

/// Contiguous blocks of `0..m`; the first `m mod l` blocks are one larger.
pub fn partition_groups(m: usize, l: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if l == 0 || m < l {
        return Err(Error::Infeasible(format!("cannot split {m} measurements into {l} nonempty groups")));
    }
    let (base, extra) = (m / l, m % l);
    let mut start = 0;
    Ok((0..l)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

fn check_direction(ctx: &SubspaceContext, u: &[f64]) -> Result<()> {
    check_dim(ctx.dim(), u.len())?;
    if (norm2(u) - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("direction has norm {} (expected 1)", norm2(u))));
    }
    if let Some(i) = (0..u.len()).find(|&i| !ctx.in_support(i) && u[i].abs() > 1e-8) {
        return Err(Error::InvalidInput(format!("direction has weight {} off the support at {i}", u[i])));
    }
    Ok(())
}

/// Per-vector coefficients of `f` for the given `(λ_a, u_a)` pairs:
/// `c_j = Σ_a λ_a (⟨z_j, u_a⟩² 1{|⟨z_j, u_a⟩| ≤ 3} − β₂) / (m_i (β₄ − β₂))`.
pub fn f_weights(
    group: &SensingEnsemble,
    ctx: &SubspaceContext,
    pairs: &[(f64, &[f64])],
    moments: &TruncatedMoments,
) -> Result<Vec<f64>> {
    check_dim(ctx.dim(), group.dim())?;
    for (a, (_, u)) in pairs.iter().enumerate() {
        check_direction(ctx, u)?;
        for (_, w) in &pairs[..a] {
            if dot(u, w).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!("directions not orthogonal (inner product {})", dot(u, w))));
            }
        }
    }
    let scale = 1.0 / (group.count() as f64 * (moments.beta4 - moments.beta2));
    let support = ctx.support();
    Ok((0..group.count())
        .map(|j| {
            let z = group.vector(j);
            let mut c = 0.0;
            for &(lam, u) in pairs {
                // u vanishes off G, so only the restriction z_jG enters
                let p: f64 = support.iter().map(|&i| z[i] * u[i]).sum();
                let truncated = if p.abs() <= moments.threshold { p * p } else { 0.0 };
                c += lam * (truncated - moments.beta2);
            }
            c * scale
        })
        .collect())
}

/// `f(λ₁, λ₂, u₁, u₂) = Σ_j c_j z_j z_jᵀ` over one group of measurement vectors.
pub fn f_operator(
    group: &SensingEnsemble,
    ctx: &SubspaceContext,
    lam1: f64,
    lam2: f64,
    u1: &[f64],
    u2: &[f64],
) -> Result<SymMatrix> {
    let w = f_weights(group, ctx, &[(lam1, u1), (lam2, u2)], &truncated_moments())?;
    apply_a_adjoint(group, &w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GolfingConfig {
    /// Minimum group size per unit of sparsity; 0 disables the check.
    pub c1: f64,
}

impl Default for GolfingConfig {
    fn default() -> Self {
        Self { c1: 20.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    /// `v_j`, so that `Y = Σ_j v_j z_j z_jᵀ`.
    pub weights: Vec<f64>,
    pub y: SymMatrix,
    /// `(start, len)` of each contiguous group.
    pub groups: Vec<(usize, usize)>,
    pub lambda: f64,
    /// `‖X_i‖_F` for `i = 0..=l`.
    pub residual_norms: Vec<f64>,
}

impl Certificate {
    pub fn x0_norm(&self) -> f64 {
        self.residual_norms[0]
    }

    /// `‖X_l‖_F`
    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap()
    }

    /// `‖X₁‖_F / ‖X₀‖_F`, the contraction of the first golfing step.
    pub fn first_step_ratio(&self) -> f64 {
        self.residual_norms[1] / self.residual_norms[0]
    }
}

/// Nonzero eigenpairs of the `G × G` block of a golfing iterate, embedded in ℝⁿ.
/// Fails if more than two eigenvalues exceed `1e−8 ‖X‖_F` in magnitude.
fn rank_two_pairs(ctx: &SubspaceContext, x: &SymMatrix) -> Result<Vec<(f64, Vec<f64>)>> {
    let fro = x.frobenius_norm();
    if fro == 0.0 {
        return Ok(Vec::new());
    }
    let block = x.submatrix(ctx.support());
    let spec = sym_eigen(&block)?;
    let cut = 1e-8 * fro;
    let mut pairs = Vec::new();
    for (i, &v) in spec.values.iter().enumerate() {
        if v.abs() > cut {
            pairs.push((v, ctx.embed(spec.vector(i))?));
        }
    }
    if pairs.len() > 2 {
        return Err(Error::Degenerate(format!(
            "golfing iterate has {} eigenvalues above {cut:e}; expected rank at most 2",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Runs the golfing scheme over `l = ⌊2 ln n⌋ + 3` contiguous groups.
pub fn golfing_construct(
    e: &SensingEnsemble,
    ctx: &SubspaceContext,
    lambda: f64,
    cfg: &GolfingConfig,
) -> Result<Certificate> {
    golfing_construct_from(e, ctx, &ctx.build_x0(lambda), lambda, cfg)
}

/// Golfing started from an arbitrary target `X₀ ∈ T∩Ω`.
pub fn golfing_construct_from(
    e: &SensingEnsemble,
    ctx: &SubspaceContext,
    x0: &SymMatrix,
    lambda: f64,
    cfg: &GolfingConfig,
) -> Result<Certificate> {
    check_dim(ctx.dim(), e.dim())?;
    check_dim(ctx.dim(), x0.dim())?;
    let l = golfing_group_count(e.dim());
    let groups = partition_groups(e.count(), l)?;
    let smallest = groups.iter().map(|g| g.len()).min().unwrap();
    let needed = cfg.c1 * ctx.sparsity() as f64;
    if (smallest as f64) < needed {
        return Err(Error::Infeasible(format!(
            "groups of {smallest} measurements are below C1·k = {needed} (m = {}, {l} groups)",
            e.count()
        )));
    }
    let moments = truncated_moments();
    let mut x = x0.clone();
    let mut residual_norms = vec![x.frobenius_norm()];
    let mut weights = Vec::with_capacity(e.count());
    for range in &groups {
        let group = e.slice(range.clone())?;
        let pairs = rank_two_pairs(ctx, &x)?;
        let refs: Vec<(f64, &[f64])> = pairs.iter().map(|(v, u)| (*v, u.as_slice())).collect();
        let w = f_weights(&group, ctx, &refs, &moments)?;
        let yi = apply_a_adjoint(&group, &w)?;
        x = x.sub(&ctx.project_t_cap_omega(&yi)?)?;
        residual_norms.push(x.frobenius_norm());
        weights.extend(w);
    }
    let y = apply_a_adjoint(e, &weights)?;
    Ok(Certificate {
        weights,
        y,
        groups: groups.iter().map(|r| (r.start, r.len())).collect(),
        lambda,
        residual_norms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    pub c: f64,
    pub x0_norm: f64,
    /// `‖P_{T∩Ω}(Y) − X₀‖_F`
    pub norm_tcap_omega_gap: f64,
    /// `‖P_{T⊥∩Ω}(Y)‖` (spectral)
    pub norm_tperp_omega: f64,
    /// `‖P_{Ω⊥}(Y)‖_∞`
    pub norm_omega_perp_inf: f64,
    pub thresholds: [f64; 3],
    pub passed: [bool; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl CertificateReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|p| *p)
    }
}

/// Measures the three certificate conditions against
/// `‖X₀‖_F/(6n²)`, `‖X₀‖_F/5` and `C √(ln n)/√m · ‖X₀‖_F`.
pub fn verify_certificate(cert: &Certificate, ctx: &SubspaceContext, lambda: f64, c: f64) -> Result<CertificateReport> {
    let y = &cert.y;
    check_dim(ctx.dim(), y.dim())?;
    let n = ctx.dim();
    let m = cert.weights.len();
    let x0 = ctx.build_x0(lambda);
    let x0_norm = x0.frobenius_norm();

    let gap = ctx.project_t_cap_omega(y)?.sub(&x0)?.frobenius_norm();
    let tperp = ctx.project_t_perp_cap_omega(y)?.submatrix(ctx.support()).spectral_norm()?;
    let off = ctx.project_omega_perp(y)?.max_abs();

    let nf = n as f64;
    let thresholds = [
        x0_norm / (6.0 * nf * nf),
        x0_norm / 5.0,
        c * nf.ln().sqrt() / (m as f64).sqrt() * x0_norm,
    ];
    let measured = [gap, tperp, off];
    let passed = [measured[0] <= thresholds[0], measured[1] <= thresholds[1], measured[2] <= thresholds[2]];
    Ok(CertificateReport {
        n,
        m,
        k: ctx.sparsity(),
        lambda,
        c,
        x0_norm,
        norm_tcap_omega_gap: gap,
        norm_tperp_omega: tperp,
        norm_omega_perp_inf: off,
        thresholds,
        passed,
        seed: None,
        c1: None,
    })
}

/// Admissible range `√k ‖x‖₁ + 1 < λ < n²/4` and the matching measurement demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaWindow {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub nonempty: bool,
    pub c0: f64,
    pub n: usize,
    pub m: usize,
    /// `√(m / (4 C₀ ln n))`
    pub remark1_lambda: f64,
    pub remark1_in_window: bool,
}

impl LambdaWindow {
    /// `C₀ λ² ln n`
    pub fn m_min(&self, lambda: f64) -> f64 {
        self.c0 * lambda * lambda * (self.n as f64).ln()
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.lambda_min && lambda < self.lambda_max
    }
}

pub fn lambda_window(ctx: &SubspaceContext, n: usize, m: usize, c0: f64) -> Result<LambdaWindow> {
    lambda_window_for(ctx.sparsity(), ctx.l1_norm(), n, m, c0)
}

pub fn lambda_window_for(k: usize, l1: f64, n: usize, m: usize, c0: f64) -> Result<LambdaWindow> {
    if n < 2 || !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("lambda window needs n >= 2 and C0 > 0 (n = {n}, C0 = {c0})")));
    }
    let lambda_min = (k as f64).sqrt() * l1 + 1.0;
    let lambda_max = (n * n) as f64 / 4.0;
    let remark1_lambda = remark1_lambda(n, m, c0);
    let mut w = LambdaWindow {
        lambda_min,
        lambda_max,
        nonempty: lambda_min < lambda_max,
        c0,
        n,
        m,
        remark1_lambda,
        remark1_in_window: false,
    };
    w.remark1_in_window = w.contains(remark1_lambda);
    Ok(w)
}

/// `λ = √(m / (4 C₀ ln n))`
pub fn remark1_lambda(n: usize, m: usize, c0: f64) -> f64 {
    (m as f64 / (4.0 * c0 * (n as f64).ln())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{make_ensemble, SparseSignal};
    use crate::rng::GaussianSource;
    use approx::assert_abs_diff_eq;

    fn flat_ctx(n: usize, support: Vec<usize>, signs: &[f64]) -> SubspaceContext {
        let k = support.len() as f64;
        let values = signs.iter().map(|s| s / k.sqrt()).collect();
        SubspaceContext::new(&SparseSignal::new(n, support, values).unwrap()).unwrap()
    }

    #[test]
    fn moment_values() {
        let t = truncated_moments();
        assert!((t.beta2 - 0.9707).abs() <= 5e-4, "{}", t.beta2);
        assert!((t.beta4 - 2.6728).abs() <= 5e-4, "{}", t.beta4);
        assert_eq!(t.threshold, 3.0);
        // as the threshold grows the moments approach the untruncated 1 and 3
        let wide = truncated_moments_at(12.0);
        assert_abs_diff_eq!(wide.beta2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wide.beta4, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_match_quadrature() {
        // composite Simpson on [−3, 3] as an independent oracle
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let steps = 20_000;
            let h = 6.0 / steps as f64;
            let mut s = f(-3.0) + f(3.0);
            for i in 1..steps {
                let z = -3.0 + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
            }
            s * h / 3.0
        };
        let t = truncated_moments();
        assert_abs_diff_eq!(t.beta2, simpson(&|z| z * z * phi(z)), epsilon = 1e-10);
        assert_abs_diff_eq!(t.beta4, simpson(&|z| z.powi(4) * phi(z)), epsilon = 1e-10);
    }

    #[test]
    fn group_counts_and_partition() {
        assert_eq!(golfing_group_count(100), 12);
        assert_eq!(golfing_group_count(64), 11);
        let g = partition_groups(23, 5).unwrap();
        let lens: Vec<usize> = g.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![5, 5, 5, 4, 4]);
        assert_eq!(g[0].start, 0);
        assert_eq!(g.last().unwrap().end, 23);
        assert!(g.windows(2).all(|w| w[0].end == w[1].start));
        assert!(partition_groups(4, 5).is_err());
    }

    #[test]
    fn f_operator_basic_properties() {
        let ctx = flat_ctx(8, vec![1, 3, 6], &[1.0, -1.0, 1.0]);
        let e = make_ensemble(8, 40, 3).unwrap();
        let u1 = ctx.signal().to_vec();
        let u2 = ctx.embed(&[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]).unwrap();
        assert_eq!(f_operator(&e, &ctx, 0.0, 0.0, &u1, &u2).unwrap(), SymMatrix::zeros(8));
        let one = f_operator(&e, &ctx, 1.5, 0.0, &u1, &u2).unwrap();
        let two = f_operator(&e, &ctx, 3.0, 0.0, &u1, &u2).unwrap();
        assert!(two.sub(&one.scaled(2.0)).unwrap().frobenius_norm() <= 1e-12 * two.frobenius_norm());
        // preconditions
        let off_support = {
            let mut v = vec![0.0; 8];
            v[0] = 1.0;
            v
        };
        assert!(f_operator(&e, &ctx, 1.0, 1.0, &u1, &off_support).is_err());
        assert!(f_operator(&e, &ctx, 1.0, 1.0, &u1, &u1).is_err());
        let long: Vec<f64> = u1.iter().map(|v| 2.0 * v).collect();
        assert!(f_operator(&e, &ctx, 1.0, 0.0, &long, &u2).is_err());
    }

    #[test]
    fn f_operator_is_unbiased_on_the_block() {
        let n = 10;
        let ctx = flat_ctx(n, vec![0, 4, 7], &[1.0, 1.0, -1.0]);
        let u1 = ctx.signal().to_vec();
        let u2 = ctx.embed(&[1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0]).unwrap();
        let mut mean = SymMatrix::zeros(n);
        let groups = 200;
        for g in 0..groups {
            let e = make_ensemble(n, 500, 1000 + g).unwrap();
            let y = f_operator(&e, &ctx, 1.0, 0.0, &u1, &u2).unwrap();
            mean.axpy(1.0 / groups as f64, &ctx.project_omega(&y).unwrap()).unwrap();
        }
        let target = SymMatrix::outer(&u1);
        let dev = mean.sub(&target).unwrap().spectral_norm().unwrap();
        assert!(dev <= 0.1, "deviation {dev}");
    }

    #[test]
    fn golfing_invariants() {
        let n = 20;
        let mut g = GaussianSource::new(5);
        let x = SparseSignal::flat(n, 2, &mut g).unwrap();
        let ctx = SubspaceContext::new(&x).unwrap();
        let e = make_ensemble(n, 9 * 80, 8).unwrap();
        let cert = golfing_construct(&e, &ctx, 4.0, &GolfingConfig::default()).unwrap();
        assert_eq!(cert.groups.len(), golfing_group_count(n));
        assert_eq!(cert.residual_norms.len(), cert.groups.len() + 1);
        let rebuilt = apply_a_adjoint(&e, &cert.weights).unwrap();
        assert!(rebuilt.sub(&cert.y).unwrap().frobenius_norm() <= 1e-9 * cert.y.frobenius_norm());
        let x0 = ctx.build_x0(4.0);
        let gap = ctx.project_t_cap_omega(&cert.y).unwrap().sub(&x0).unwrap().frobenius_norm();
        assert!((gap - cert.final_residual()).abs() <= 1e-9 * x0.frobenius_norm());
        // doubling X₀ doubles the certificate
        let doubled = golfing_construct_from(&e, &ctx, &x0.scaled(2.0), 4.0, &GolfingConfig::default()).unwrap();
        assert!(doubled.y.sub(&cert.y.scaled(2.0)).unwrap().frobenius_norm() <= 1e-9 * doubled.y.frobenius_norm());
    }

    #[test]
    fn golfing_refusals() {
        let ctx = flat_ctx(64, vec![0, 1, 2], &[1.0, 1.0, 1.0]);
        let tiny = make_ensemble(64, 5, 1).unwrap();
        assert!(matches!(golfing_construct(&tiny, &ctx, 5.0, &GolfingConfig { c1: 0.0 }), Err(Error::Infeasible(_))));
        let small_groups = make_ensemble(64, 11 * 30, 1).unwrap();
        assert!(matches!(golfing_construct(&small_groups, &ctx, 5.0, &GolfingConfig::default()), Err(Error::Infeasible(_))));
        assert!(golfing_construct(&small_groups, &ctx, 5.0, &GolfingConfig { c1: 0.0 }).is_ok());
    }

    #[test]
    fn exact_dual_passes_first_test() {
        let ctx = flat_ctx(6, vec![2, 5], &[1.0, -1.0]);
        let x0 = ctx.build_x0(3.0);
        let cert = Certificate { weights: vec![0.0; 4], y: x0.clone(), groups: vec![(0, 4)], lambda: 3.0, residual_norms: vec![x0.frobenius_norm(), 0.0] };
        let r = verify_certificate(&cert, &ctx, 3.0, 2.0).unwrap();
        assert_eq!(r.norm_tcap_omega_gap, 0.0);
        assert!(r.passed[0]);
        assert_eq!(r.passed, [r.norm_tcap_omega_gap <= r.thresholds[0], r.norm_tperp_omega <= r.thresholds[1], r.norm_omega_perp_inf <= r.thresholds[2]]);
    }

    #[test]
    fn threshold_arithmetic() {
        let ctx = flat_ctx(64, vec![3, 10, 40], &[1.0, -1.0, 1.0]);
        let x0 = ctx.build_x0(3.0);
        let cert = Certificate { weights: vec![0.0; 660], y: SymMatrix::zeros(64), groups: vec![], lambda: 3.0, residual_norms: vec![0.0] };
        let r = verify_certificate(&cert, &ctx, 3.0, 2.0).unwrap();
        assert_abs_diff_eq!(r.thresholds[0], x0.frobenius_norm() / 24576.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.thresholds[1], x0.frobenius_norm() / 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.thresholds[2], 2.0 * 64f64.ln().sqrt() / 660f64.sqrt() * x0.frobenius_norm(), epsilon = 1e-13);
        // flat signal: X₀ = (λ + k) x xᵀ
        assert_abs_diff_eq!(r.x0_norm, 6.0, epsilon = 1e-12);
        let json = serde_json::to_string(&r).unwrap();
        let back: CertificateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn window_examples() {
        for k in 1..6 {
            let support: Vec<usize> = (0..k).collect();
            let ctx = flat_ctx(10, support, &vec![1.0; k]);
            let w = lambda_window(&ctx, 10, 100, 1.0).unwrap();
            assert_abs_diff_eq!(w.lambda_min, k as f64 + 1.0, epsilon = 1e-12);
            assert_eq!(w.lambda_max, 25.0);
        }
        let w = lambda_window_for(3, 3f64.sqrt(), 3, 10, 1.0).unwrap();
        assert!(!w.nonempty);
        assert!(lambda_window_for(1, 1.0, 10, 10, 0.0).is_err());
    }

    #[test]
    fn remark1_window_condition() {
        // for flat x: λ = √(m/(4 C₀ ln n)) > k + 1  ⇔  m > 4 C₀ ln n (k+1)²
        let n = 200;
        for &c0 in &[0.5, 1.0, 3.0] {
            for k in 1..5 {
                for m in (1..4000).step_by(7) {
                    let w = lambda_window_for(k, (k as f64).sqrt(), n, m, c0).unwrap();
                    let bound = 4.0 * c0 * (n as f64).ln() * ((k + 1) * (k + 1)) as f64;
                    assert_eq!(w.remark1_lambda > w.lambda_min, m as f64 > bound, "c0 {c0} k {k} m {m}");
                    assert_eq!(w.remark1_in_window, w.contains(w.remark1_lambda));
                }
            }
        }
        let w = lambda_window_for(2, 2f64.sqrt(), 64, 150, 1.0).unwrap();
        assert_abs_diff_eq!(w.m_min(3.0), 9.0 * 64f64.ln(), epsilon = 1e-12);
    }
}

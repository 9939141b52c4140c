//! Monte Carlo checks of the concentration inequalities behind the recovery
//! analysis, the converse sample-size bound, a gap-based non-optimality test
//! and a brute-force injectivity oracle.
//!
//! Every trial draws its randomness from `derive_seed(seed, trial)`, so the
//! results are identical whatever the thread count.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::binomial;

use crate::certificate::truncated_moments;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm2, PivotedQr, SymMatrix};
use crate::measurement::{apply_a, apply_a_adjoint, make_ensemble, measure, SensingEnsemble, SparseSignal};
use crate::rng::{derive_seed, GaussianSource};
use crate::solver::{objective, signal_error, solve_trace_l1, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LemmaId {
    L1TraceSandwich,
    LowrankLower,
    L1Upper,
    TruncatedMoment,
    Chi2Tail,
    E0Event,
}

impl LemmaId {
    pub const ALL: [LemmaId; 6] = [
        LemmaId::L1TraceSandwich,
        LemmaId::LowrankLower,
        LemmaId::L1Upper,
        LemmaId::TruncatedMoment,
        LemmaId::Chi2Tail,
        LemmaId::E0Event,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LemmaId::L1TraceSandwich => "L1_TRACE_SANDWICH",
            LemmaId::LowrankLower => "LOWRANK_LOWER",
            LemmaId::L1Upper => "L1_UPPER",
            LemmaId::TruncatedMoment => "TRUNCATED_MOMENT",
            LemmaId::Chi2Tail => "CHI2_TAIL",
            LemmaId::E0Event => "E0_EVENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub n: usize,
    pub k: Option<usize>,
    pub m: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
}

/// Outcome of one Monte Carlo check.
///
/// `statistic_*` summarize the per-trial quantity the check measures (a ratio,
/// a deviation, a sample value); `worst_ratio` is the single least favourable
/// value, and `bound` is the reference it is compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheckResult {
    pub lemma_id: LemmaId,
    pub trials: usize,
    pub violations: usize,
    pub worst_ratio: f64,
    pub statistic_min: f64,
    pub statistic_max: f64,
    pub statistic_mean: f64,
    pub statistic_variance: f64,
    pub bound: f64,
    pub params: LemmaParams,
    /// Samples at or below the midpoint (χ² check only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_tail_events: Option<usize>,
}

impl LemmaCheckResult {
    pub fn violation_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.violations as f64 / self.trials as f64
        }
    }

    fn from_stats(id: LemmaId, params: LemmaParams, stats: &[f64], violations: usize, worst: f64, bound: f64) -> Self {
        let len = stats.len().max(1) as f64;
        let mean = stats.iter().sum::<f64>() / len;
        let variance = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / len;
        LemmaCheckResult {
            lemma_id: id,
            trials: stats.len(),
            violations,
            worst_ratio: worst,
            statistic_min: stats.iter().copied().fold(f64::INFINITY, f64::min),
            statistic_max: stats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            statistic_mean: mean,
            statistic_variance: variance,
            bound,
            params,
            lower_tail_events: None,
        }
    }
}

fn validate_trials(n: usize, m: usize, trials: usize) -> Result<()> {
    if n == 0 || m == 0 || trials == 0 {
        return Err(Error::InvalidInput(format!("need n, m, trials >= 1 (n = {n}, m = {m}, trials = {trials})")));
    }
    Ok(())
}

fn validate_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("sparsity must satisfy 1 <= k <= n (k = {k}, n = {n})")));
    }
    Ok(())
}

/// Per-trial ensemble and auxiliary randomness.
fn trial_sources(seed: u64, trial: usize, n: usize, m: usize) -> Result<(SensingEnsemble, GaussianSource)> {
    let s = derive_seed(seed, trial as u64);
    Ok((make_ensemble(n, m, derive_seed(s, 0))?, GaussianSource::new(derive_seed(s, 1))))
}

/// Embeds a `k × k` block on `support` into an `n × n` matrix.
fn embed_block(n: usize, support: &[usize], block: &SymMatrix) -> SymMatrix {
    let mut out = SymMatrix::zeros(n);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            out.set(i, j, block.get(a, b));
        }
    }
    out
}

/// `m⁻¹ ‖𝒜(X)‖₁`
pub fn mean_abs_measurement(e: &SensingEnsemble, x: &SymMatrix) -> Result<f64> {
    Ok(apply_a(e, x)?.iter().map(|v| v.abs()).sum::<f64>() / e.count() as f64)
}

/// `m⁻¹ ‖𝒜(X)‖₁ / Tr(X)`, or `None` for `X = 0`.
pub fn sandwich_ratio(e: &SensingEnsemble, x: &SymMatrix) -> Result<Option<f64>> {
    let tr = x.trace();
    let lhs = mean_abs_measurement(e, x)?;
    if tr == 0.0 && lhs == 0.0 {
        return Ok(None);
    }
    Ok(Some(lhs / tr))
}

pub const SANDWICH_LOWER: f64 = 1.0 - 1.0 / 8.0;
pub const SANDWICH_UPPER: f64 = 1.0 + 1.0 / 8.0;
pub const LOWRANK_CONSTANT: f64 = 0.94 * (1.0 - 1.0 / 8.0);
pub const L1_UPPER_CONSTANT: f64 = 9.0 / 8.0;

/// Random PSD `X_Ω`: the `G × G` block is `A Aᵀ` for a `k × r` Gaussian `A`,
/// `r` uniform in `1..=k`, scaled to unit trace.
pub fn random_psd_omega(n: usize, k: usize, g: &mut GaussianSource) -> Result<(SymMatrix, Vec<usize>)> {
    validate_k(n, k)?;
    let support = g.subset(n, k);
    let r = 1 + g.uniform_index(k);
    let a = g.normals(k * r);
    let mut block = SymMatrix::from_fn(k, |p, q| (0..r).map(|c| a[p * r + c] * a[q * r + c]).sum());
    let tr = block.trace();
    block = block.scaled(1.0 / tr);
    Ok((embed_block(n, &support, &block), support))
}

/// `(1 − 1/8) Tr(X_Ω) ≤ m⁻¹ ‖𝒜(X_Ω)‖₁ ≤ (1 + 1/8) Tr(X_Ω)` for random PSD `X_Ω`.
/// The statistic is the middle ratio; `worst_ratio` is the one farthest from 1.
pub fn check_l1_trace_sandwich(n: usize, k: usize, m: usize, trials: usize, seed: u64) -> Result<LemmaCheckResult> {
    validate_trials(n, m, trials)?;
    validate_k(n, k)?;
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (e, mut g) = trial_sources(seed, t, n, m)?;
            let (x, _) = random_psd_omega(n, k, &mut g)?;
            Ok(sandwich_ratio(&e, &x)?.unwrap_or(1.0))
        })
        .collect::<Result<_>>()?;
    let violations = ratios.iter().filter(|r| !(SANDWICH_LOWER..=SANDWICH_UPPER).contains(*r)).count();
    let worst = ratios.iter().copied().fold(1.0_f64, |w, r| if (r - 1.0).abs() > (w - 1.0).abs() { r } else { w });
    let params = LemmaParams { n, k: Some(k), m, seed, epsilon: None };
    Ok(LemmaCheckResult::from_stats(LemmaId::L1TraceSandwich, params, &ratios, violations, worst, SANDWICH_UPPER))
}

/// `m⁻¹ ‖𝒜(X_Ω)‖₁ / ‖X_Ω‖` (spectral norm in the denominator), `None` for `X = 0`.
pub fn lowrank_ratio(e: &SensingEnsemble, x: &SymMatrix) -> Result<Option<f64>> {
    let spec = x.spectral_norm()?;
    let lhs = mean_abs_measurement(e, x)?;
    if spec == 0.0 && lhs == 0.0 {
        return Ok(None);
    }
    Ok(Some(lhs / spec))
}

/// `m⁻¹ ‖𝒜(X_Ω)‖₁ ≥ 0.94 (1 − 1/8) ‖X_Ω‖` for random rank-2 `X_Ω` with one
/// positive and one negative eigenvalue. `worst_ratio` is the smallest ratio.
pub fn check_lowrank_lower(n: usize, k: usize, m: usize, trials: usize, seed: u64) -> Result<LemmaCheckResult> {
    validate_trials(n, m, trials)?;
    validate_k(n, k)?;
    if k < 2 {
        return Err(Error::InvalidInput("rank-2 matrices on the support need k >= 2".into()));
    }
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (e, mut g) = trial_sources(seed, t, n, m)?;
            let support = g.subset(n, k);
            let u1 = g.unit_vector(k);
            let mut u2 = g.normals(k);
            let proj: f64 = u1.iter().zip(&u2).map(|(a, b)| a * b).sum();
            u2.iter_mut().zip(&u1).for_each(|(b, a)| *b -= proj * a);
            let norm = norm2(&u2);
            u2.iter_mut().for_each(|b| *b /= norm);
            let l1 = g.normal().abs();
            let l2 = -g.normal().abs();
            let block = SymMatrix::from_fn(k, |p, q| l1 * u1[p] * u1[q] + l2 * u2[p] * u2[q]);
            let x = embed_block(n, &support, &block);
            Ok(lowrank_ratio(&e, &x)?.unwrap_or(f64::INFINITY))
        })
        .collect::<Result<_>>()?;
    let violations = ratios.iter().filter(|r| **r < LOWRANK_CONSTANT).count();
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let params = LemmaParams { n, k: Some(k), m, seed, epsilon: None };
    Ok(LemmaCheckResult::from_stats(LemmaId::LowrankLower, params, &ratios, violations, worst, LOWRANK_CONSTANT))
}

/// `m⁻¹ ‖𝒜(X)‖₁ / ‖X‖₁` with the entrywise ℓ1 norm, `None` for `X = 0`.
pub fn l1_upper_ratio(e: &SensingEnsemble, x: &SymMatrix) -> Result<Option<f64>> {
    let l1 = x.entrywise_l1();
    let lhs = mean_abs_measurement(e, x)?;
    if l1 == 0.0 && lhs == 0.0 {
        return Ok(None);
    }
    Ok(Some(lhs / l1))
}

/// `m⁻¹ ‖𝒜(X)‖₁ ≤ (9/8) ‖X‖₁` for dense symmetrized Gaussian `X`.
/// `worst_ratio` is the largest ratio.
pub fn check_l1_upper(n: usize, m: usize, trials: usize, seed: u64) -> Result<LemmaCheckResult> {
    validate_trials(n, m, trials)?;
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (e, mut g) = trial_sources(seed, t, n, m)?;
            let x = SymMatrix::from_row_major(n, g.normals(n * n))?;
            Ok(l1_upper_ratio(&e, &x)?.unwrap_or(0.0))
        })
        .collect::<Result<_>>()?;
    let violations = ratios.iter().filter(|r| **r > L1_UPPER_CONSTANT).count();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let params = LemmaParams { n, k: None, m, seed, epsilon: None };
    Ok(LemmaCheckResult::from_stats(LemmaId::L1Upper, params, &ratios, violations, worst, L1_UPPER_CONSTANT))
}

/// `‖m⁻¹ Σ ⟨z_j,u⟩² 1{|⟨z_j,u⟩| ≤ 3} z_j z_jᵀ − ((β₄ − β₂) u uᵀ + β₂ I)‖`
pub fn truncated_moment_deviation(e: &SensingEnsemble, u: &[f64]) -> Result<f64> {
    check_dim(e.dim(), u.len())?;
    let t = truncated_moments();
    let n = e.dim();
    let inv_m = 1.0 / e.count() as f64;
    let w: Vec<f64> = (0..e.count())
        .map(|j| {
            let p: f64 = e.vector(j).iter().zip(u).map(|(a, b)| a * b).sum();
            if p.abs() <= t.threshold {
                p * p * inv_m
            } else {
                0.0
            }
        })
        .collect();
    let mut dev = apply_a_adjoint(e, &w)?;
    dev.axpy(-(t.beta4 - t.beta2), &SymMatrix::outer(u))?;
    dev.axpy(-t.beta2, &SymMatrix::identity(n))?;
    dev.spectral_norm()
}

/// Deviation of the truncated second-moment matrix from its mean, for `u`
/// uniform on the sphere. `worst_ratio` is the largest deviation over `ε`.
pub fn check_truncated_moment(n: usize, m: usize, trials: usize, seed: u64, epsilon: f64) -> Result<LemmaCheckResult> {
    validate_trials(n, m, trials)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive (got {epsilon})")));
    }
    let devs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (e, mut g) = trial_sources(seed, t, n, m)?;
            let u = g.unit_vector(n);
            truncated_moment_deviation(&e, &u)
        })
        .collect::<Result<_>>()?;
    let violations = devs.iter().filter(|d| **d > epsilon).count();
    let worst = devs.iter().copied().fold(0.0, f64::max) / epsilon;
    let params = LemmaParams { n, k: None, m, seed, epsilon: Some(epsilon) };
    Ok(LemmaCheckResult::from_stats(LemmaId::TruncatedMoment, params, &devs, violations, worst, epsilon))
}

/// Counts of χ²(d) samples on each side of `d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2TailCounts {
    pub dof: usize,
    pub samples: usize,
    /// samples `≥ d/2`
    pub upper: usize,
    /// samples `≤ d/2`
    pub lower: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

const CHI2_CHUNK: usize = 4096;

/// Draws `samples` values of χ²(dof) as sums of squared normals and counts
/// both tails at `dof/2`.
pub fn chi2_tail_counts(dof: usize, samples: usize, seed: u64) -> Result<Chi2TailCounts> {
    if dof == 0 || samples == 0 {
        return Err(Error::InvalidInput(format!("need dof >= 1 and samples >= 1 (dof = {dof}, samples = {samples})")));
    }
    let half = dof as f64 / 2.0;
    let chunks = samples.div_ceil(CHI2_CHUNK);
    let parts: Vec<(usize, usize, f64, f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = GaussianSource::new(derive_seed(seed, c as u64));
            let len = CHI2_CHUNK.min(samples - c * CHI2_CHUNK);
            let (mut up, mut lo, mut s1, mut s2) = (0, 0, 0.0, 0.0);
            let (mut min, mut max) = (f64::INFINITY, 0.0_f64);
            for _ in 0..len {
                let v: f64 = (0..dof).map(|_| g.normal().powi(2)).sum();
                up += usize::from(v >= half);
                lo += usize::from(v <= half);
                s1 += v;
                s2 += v * v;
                min = min.min(v);
                max = max.max(v);
            }
            (up, lo, s1, s2, min, max)
        })
        .collect();
    let mut c = Chi2TailCounts { dof, samples, upper: 0, lower: 0, mean: 0.0, variance: 0.0, min: f64::INFINITY, max: 0.0 };
    let (mut s1, mut s2) = (0.0, 0.0);
    for p in &parts {
        c.upper += p.0;
        c.lower += p.1;
        s1 += p.2;
        s2 += p.3;
        c.min = c.min.min(p.4);
        c.max = c.max.max(p.5);
    }
    c.mean = s1 / samples as f64;
    c.variance = s2 / samples as f64 - c.mean * c.mean;
    Ok(c)
}

/// `e^{−0.09 d}`
pub fn chi2_tail_bound(dof: usize) -> f64 {
    (-0.09 * dof as f64).exp()
}

/// Frequency of `{χ²(N − m₁) ≥ (N − m₁)/2}` against `e^{−0.09 (N − m₁)}`.
/// `violations` counts samples in that event; `worst_ratio` is the empirical
/// frequency over the bound. The opposite tail is reported alongside.
pub fn check_chi2_tail(big_n: usize, m1: usize, trials: usize, seed: u64) -> Result<LemmaCheckResult> {
    if m1 >= big_n {
        return Err(Error::InvalidInput(format!("need m1 < N (m1 = {m1}, N = {big_n})")));
    }
    let dof = big_n - m1;
    let c = chi2_tail_counts(dof, trials, seed)?;
    let bound = chi2_tail_bound(dof);
    let freq = c.upper as f64 / trials as f64;
    Ok(LemmaCheckResult {
        lemma_id: LemmaId::Chi2Tail,
        trials,
        violations: c.upper,
        worst_ratio: freq / bound,
        statistic_min: c.min,
        statistic_max: c.max,
        statistic_mean: c.mean,
        statistic_variance: c.variance,
        bound,
        params: LemmaParams { n: big_n, k: None, m: m1, seed, epsilon: None },
        lower_tail_events: Some(c.lower),
    })
}

/// `E₀ = {⟨x, z_jG⟩² ≤ 10 ln n for all j}` for a flat unit `x` on a random
/// `k`-support. `violations` counts trials where `E₀` fails; the statistic is
/// `max_j ⟨x, z_j⟩² / (10 ln n)` and `bound` is `1 − m/n⁵`.
pub fn check_e0_event(n: usize, k: usize, m: usize, trials: usize, seed: u64) -> Result<LemmaCheckResult> {
    validate_trials(n, m, trials)?;
    validate_k(n, k)?;
    if n < 2 {
        return Err(Error::InvalidInput("E0 threshold needs n >= 2".into()));
    }
    let cut = 10.0 * (n as f64).ln();
    let per_trial: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (e, mut g) = trial_sources(seed, t, n, m)?;
            let x = SparseSignal::flat(n, k, &mut g)?;
            let b = measure(&e, &x)?;
            let max = b.values().iter().copied().fold(0.0, f64::max);
            let s1: f64 = b.values().iter().sum();
            let s2: f64 = b.values().iter().map(|v| v * v).sum();
            Ok((max / cut, s1, s2))
        })
        .collect::<Result<_>>()?;
    let stats: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let violations = stats.iter().filter(|s| **s > 1.0).count();
    let worst = stats.iter().copied().fold(0.0, f64::max);
    let count = (trials * m) as f64;
    let mean = per_trial.iter().map(|p| p.1).sum::<f64>() / count;
    let var = per_trial.iter().map(|p| p.2).sum::<f64>() / count - mean * mean;
    let bound = 1.0 - m as f64 / (n as f64).powi(5);
    let params = LemmaParams { n, k: Some(k), m, seed, epsilon: None };
    let mut r = LemmaCheckResult::from_stats(LemmaId::E0Event, params, &stats, violations, worst, bound);
    // moments of the individual ⟨x, z_j⟩² values, which are χ²(1)
    r.statistic_mean = mean;
    r.statistic_variance = var;
    Ok(r)
}

/// Lower bound on the number of measurements below which `x xᵀ` cannot be
/// the minimizer for any `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverseBound {
    /// `(k/4 − 1)²`
    pub term_spectral: f64,
    /// `max(‖x‖₁² − k/2, 0)² / (500 ln² n)`
    pub term_l1: f64,
    pub m_lower: f64,
}

pub fn converse_bound(x: &SparseSignal, n: usize) -> Result<ConverseBound> {
    converse_bound_for(x.sparsity(), x.l1_norm(), n)
}

pub fn converse_bound_for(k: usize, l1: f64, n: usize) -> Result<ConverseBound> {
    if k == 0 || n < 2 {
        return Err(Error::InvalidInput(format!("converse bound needs k >= 1 and n >= 2 (k = {k}, n = {n})")));
    }
    let kf = k as f64;
    let term_spectral = (kf / 4.0 - 1.0).powi(2);
    let ln = (n as f64).ln();
    let term_l1 = (l1 * l1 - kf / 2.0).max(0.0).powi(2) / (500.0 * ln * ln);
    Ok(ConverseBound { term_spectral, term_l1, m_lower: term_spectral.min(term_l1) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalityVerdict {
    NonOptimal,
    ConsistentWithOptimality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonoptimalityEntry {
    pub lambda: f64,
    pub objective_truth: f64,
    pub objective_solver: f64,
    /// `objective(x xᵀ) − objective(X̂)`
    pub gap: f64,
    pub verdict: OptimalityVerdict,
    /// Error of the signal read off the solver output, as in `signal_error`.
    pub rel_error: f64,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonoptimalityReport {
    pub entries: Vec<NonoptimalityEntry>,
}

impl NonoptimalityReport {
    pub fn nonoptimal_everywhere(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == OptimalityVerdict::NonOptimal)
    }
}

/// Solves the program at each `λ` and compares the optimum found with
/// `objective(x xᵀ)`. A gap above `1e−5 · objective(x xᵀ)` shows `x xᵀ` is
/// not a minimizer; a smaller gap is only reported as consistent.
pub fn empirical_nonoptimality(
    e: &SensingEnsemble,
    x: &SparseSignal,
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<NonoptimalityReport> {
    check_dim(e.dim(), x.dim())?;
    let b = measure(e, x)?;
    let truth_vec = x.to_dense();
    let xx = SymMatrix::outer(&truth_vec);
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let run = SolverConfig { lambda, ..*cfg };
        let res = solve_trace_l1(e, &b, &run)?;
        let truth = objective(&xx, lambda);
        let gap = truth - res.objective;
        let verdict = if gap > 1e-5 * truth {
            OptimalityVerdict::NonOptimal
        } else {
            OptimalityVerdict::ConsistentWithOptimality
        };
        entries.push(NonoptimalityEntry {
            lambda,
            objective_truth: truth,
            objective_solver: res.objective,
            gap,
            verdict,
            rel_error: signal_error(&res.x_hat, &truth_vec)?,
            converged: res.converged,
            iterations: res.iterations,
            primal_residual: res.primal_residual,
            dual_residual: res.dual_residual,
        });
    }
    Ok(NonoptimalityReport { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    Unique,
    Counterexample { y: Vec<f64> },
}

pub const ORACLE_BUDGET: f64 = 1e8;
const ORACLE_RANK_TOL: f64 = 1e-10;

/// Work estimate for the oracle: for each support of size `t ≤ k_max`,
/// `2^{min(t,m) − 1}` sign patterns, each checked against `m` measurements.
pub fn oracle_cost(n: usize, m: usize, k_max: usize) -> f64 {
    (1..=k_max.min(n))
        .map(|t| binomial(n as u64, t as u64) * 2f64.powi(t.min(m) as i32 - 1) * (m * t) as f64)
        .sum()
}

/// Searches for a `k_max`-sparse `y ≠ ±x` with `⟨z_j, y⟩² = b_j` for all `j`.
///
/// For each support `T`, any consistent `y` solves `⟨z_j|_T, y_T⟩ = s_j √b_j`
/// for some signs `s`, and is fixed by the rows of a maximal independent row
/// set of `Z_T`. Enumerating the signs on those pivot rows (up to a global
/// sign) and testing the remaining rows therefore covers every pattern in
/// `{±1}^m`. When `Z_T` is rank deficient any consistent `y` extends along
/// the null space, which yields a counterexample.
pub fn injectivity_oracle(e: &SensingEnsemble, x: &SparseSignal, k_max: usize, tol: f64) -> Result<OracleVerdict> {
    check_dim(e.dim(), x.dim())?;
    let (n, m) = (e.dim(), e.count());
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let required = oracle_cost(n, m, k_max);
    if required > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded { required, budget: ORACLE_BUDGET });
    }
    let b = measure(e, x)?;
    let roots: Vec<f64> = b.values().iter().map(|v| v.sqrt()).collect();
    let scale = b.values().iter().copied().fold(1.0, f64::max);
    let truth = x.to_dense();
    let consistent = |y: &[f64]| {
        (0..m).all(|j| {
            let p: f64 = e.vector(j).iter().zip(y).map(|(a, c)| a * c).sum();
            (p * p - b.values()[j]).abs() <= tol * scale
        })
    };
    let is_truth = |y: &[f64]| {
        let minus: f64 = y.iter().zip(&truth).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        let plus: f64 = y.iter().zip(&truth).map(|(a, c)| (a + c).powi(2)).sum::<f64>().sqrt();
        minus.min(plus) <= tol.sqrt().max(1e-6) * norm2(&truth)
    };

    for t in 1..=k_max.min(n) {
        for support in (0..n).combinations(t) {
            // Z_Tᵀ, t × m, so that column pivoting picks independent rows of Z_T
            let mut zt_t = vec![0.0; t * m];
            for j in 0..m {
                let z = e.vector(j);
                for (a, &i) in support.iter().enumerate() {
                    zt_t[a * m + j] = z[i];
                }
            }
            let rows = PivotedQr::factor(&zt_t, t, m, ORACLE_RANK_TOL)?;
            let r = rows.rank();
            let embed = |y_t: &[f64]| {
                let mut y = vec![0.0; n];
                for (a, &i) in support.iter().enumerate() {
                    y[i] = y_t[a];
                }
                y
            };
            if r == 0 {
                // every z_j vanishes on T: only b = 0 is reachable
                if roots.iter().all(|v| *v <= tol) {
                    let mut y = vec![0.0; n];
                    y[support[0]] = 1.0;
                    return Ok(OracleVerdict::Counterexample { y });
                }
                continue;
            }
            let pivots = &rows.permutation()[..r];
            let mut zp = vec![0.0; r * t];
            for (row, &j) in pivots.iter().enumerate() {
                for a in 0..t {
                    zp[row * t + a] = zt_t[a * m + j];
                }
            }
            let sys = PivotedQr::factor(&zp, r, t, ORACLE_RANK_TOL)?;
            let null = sys.null_vector();
            for pattern in 0..(1u64 << (r - 1)) {
                let rhs: Vec<f64> = pivots
                    .iter()
                    .enumerate()
                    .map(|(row, &j)| if row > 0 && (pattern >> (row - 1)) & 1 == 1 { -roots[j] } else { roots[j] })
                    .collect();
                let y_t = sys.solve(&rhs)?;
                let y = embed(&y_t);
                if !consistent(&y) {
                    continue;
                }
                if let Some(v) = &null {
                    let step = 1.0 + norm2(&y_t);
                    let shifted: Vec<f64> = y_t.iter().zip(v).map(|(a, c)| a + step * c).collect();
                    let y2 = embed(&shifted);
                    let pick = if is_truth(&y) { y2 } else { y };
                    return Ok(OracleVerdict::Counterexample { y: pick });
                }
                if !is_truth(&y) {
                    return Ok(OracleVerdict::Counterexample { y });
                }
            }
        }
    }
    Ok(OracleVerdict::Unique)
}

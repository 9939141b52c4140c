//! Experiment plumbing: instance generation, λ sweeps, recovery records,
//! phase diagrams and the lemma suite, with CSV output.
//!
//! Every CSV written here starts with a `schema_version` column.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{make_ensemble, measure, MeasurementVector, SensingEnsemble, SparseSignal};
use crate::rng::{derive_seed, GaussianSource};
use crate::solver::{signal_error, solve_trace_l1, SolverConfig};
use crate::theory::{self, LemmaCheckResult, LemmaId};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SUCCESS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Flat,
    GaussianNormalized,
}

impl FromStr for SignalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(SignalKind::Flat),
            "gaussian-normalized" | "gaussian" => Ok(SignalKind::GaussianNormalized),
            other => Err(Error::InvalidInput(format!("unknown signal kind '{other}' (flat | gaussian-normalized)"))),
        }
    }
}

impl SignalKind {
    pub fn draw(&self, n: usize, k: usize, g: &mut GaussianSource) -> Result<SparseSignal> {
        match self {
            SignalKind::Flat => SparseSignal::flat(n, k, g),
            SignalKind::GaussianNormalized => SparseSignal::gaussian_normalized(n, k, g),
        }
    }
}

/// A generated problem: signal, ensemble and measurements.
#[derive(Debug, Clone)]
pub struct Instance {
    pub signal: SparseSignal,
    pub ensemble: SensingEnsemble,
    pub measurements: MeasurementVector,
}

/// The signal is drawn from `derive_seed(seed, 1)`, the ensemble from
/// `derive_seed(seed, 2)`.
pub fn generate_instance(n: usize, k: usize, m: usize, kind: SignalKind, seed: u64) -> Result<Instance> {
    if m == 0 {
        return Err(Error::InvalidInput("number of measurements must be at least 1".into()));
    }
    let mut g = GaussianSource::new(derive_seed(seed, 1));
    let signal = kind.draw(n, k, &mut g)?;
    let ensemble = make_ensemble(n, m, derive_seed(seed, 2))?;
    let measurements = measure(&ensemble, &signal)?;
    Ok(Instance { signal, ensemble, measurements })
}

/// How λ values are chosen for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaRule {
    /// `λ = √(m / (4 C₀ ln n))`
    Remark1 { c0: f64 },
    Fixed(f64),
    List(Vec<f64>),
}

impl FromStr for LambdaRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("cannot parse λ value '{v}'")))
        };
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "remark1" if tail.is_empty() => Ok(LambdaRule::Remark1 { c0: 1.0 }),
            "remark1" => Ok(LambdaRule::Remark1 { c0: parse(tail)? }),
            "fixed" => Ok(LambdaRule::Fixed(parse(tail)?)),
            "list" => Ok(LambdaRule::List(tail.split(',').map(parse).collect::<Result<_>>()?)),
            _ => Err(Error::InvalidInput(format!("unknown λ rule '{s}' (remark1[:C0] | fixed:<v> | list:<v1,v2,...>)"))),
        }
    }
}

impl std::fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LambdaRule::Remark1 { c0 } => write!(f, "remark1:{c0}"),
            LambdaRule::Fixed(v) => write!(f, "fixed:{v}"),
            LambdaRule::List(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "list:{}", parts.join(","))
            }
        }
    }
}

/// Resolved λ values plus any warnings raised while resolving them.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LambdaRule {
    pub fn resolve(&self, n: usize, m: usize) -> Result<LambdaSweep> {
        let raw = match self {
            LambdaRule::Remark1 { c0 } => {
                if !(*c0 > 0.0) || n < 2 {
                    return Err(Error::InvalidInput(format!("remark1 rule needs C0 > 0 and n >= 2 (C0 = {c0})")));
                }
                vec![crate::certificate::remark1_lambda(n, m, *c0)]
            }
            LambdaRule::Fixed(v) => vec![*v],
            LambdaRule::List(vs) => vs.clone(),
        };
        dedup_lambdas(&raw)
    }
}

/// The default sweep `{1, 2, 4, 8, √(m / ln n)}`.
pub fn default_lambda_sweep(n: usize, m: usize) -> Vec<f64> {
    let mut v = vec![1.0, 2.0, 4.0, 8.0];
    if n >= 2 {
        v.push((m as f64 / (n as f64).ln()).sqrt());
    }
    v
}

/// Removes repeated values (keeping the first occurrence) and rejects
/// negative or non-finite entries.
pub fn dedup_lambdas(raw: &[f64]) -> Result<LambdaSweep> {
    if raw.is_empty() {
        return Err(Error::InvalidInput("λ list is empty".into()));
    }
    let mut values: Vec<f64> = Vec::with_capacity(raw.len());
    let mut warnings = Vec::new();
    for &v in raw {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("λ must be finite and nonnegative (got {v})")));
        }
        if values.contains(&v) {
            warnings.push(format!("duplicate λ = {v} ignored"));
        } else {
            values.push(v);
        }
    }
    Ok(LambdaSweep { values, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub lambda: f64,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub iterations: usize,
    pub objective: f64,
    pub wall_time_ms: u64,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Solves at each λ and scores the leading-eigenvector estimate against `x`.
/// The estimate is read from the PSD part of the returned iterate, which
/// only matters for runs stopped before convergence.
pub fn recover(
    e: &SensingEnsemble,
    b: &MeasurementVector,
    x: &SparseSignal,
    lambdas: &[f64],
    cfg: &SolverConfig,
    tol: f64,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let truth = x.to_dense();
    lambdas
        .iter()
        .map(|&lambda| {
            let start = Instant::now();
            let res = solve_trace_l1(e, b, &SolverConfig { lambda, ..*cfg })?;
            let rel_error = signal_error(&res.x_hat, &truth)?;
            Ok(ExperimentRecord {
                n: e.dim(),
                k: x.sparsity(),
                m: e.count(),
                lambda,
                seed,
                success: rel_error <= tol,
                rel_error,
                iterations: res.iterations,
                objective: res.objective,
                wall_time_ms: start.elapsed().as_millis() as u64,
                converged: res.converged,
                primal_residual: res.primal_residual,
                dual_residual: res.dual_residual,
            })
        })
        .collect()
}

/// The record with the smallest error.
pub fn best_record(records: &[ExperimentRecord]) -> Option<&ExperimentRecord> {
    records.iter().min_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
}

/// One seeded trial: generate, then recover over the λ list.
#[allow(clippy::too_many_arguments)]
pub fn run_recovery_trial(
    n: usize,
    k: usize,
    m: usize,
    kind: SignalKind,
    lambdas: &[f64],
    cfg: &SolverConfig,
    tol: f64,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let inst = generate_instance(n, k, m, kind, seed)?;
    let e = inst.ensemble.with_gram()?;
    recover(&e, &inst.measurements, &inst.signal, lambdas, cfg, tol, seed)
}

pub fn write_records_csv<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "n",
        "k",
        "m",
        "lambda",
        "seed",
        "success",
        "rel_error",
        "iterations",
        "objective",
        "wall_time_ms",
        "converged",
        "primal_residual",
        "dual_residual",
    ])?;
    for r in records {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.m.to_string(),
            r.lambda.to_string(),
            r.seed.to_string(),
            r.success.to_string(),
            r.rel_error.to_string(),
            r.iterations.to_string(),
            r.objective.to_string(),
            r.wall_time_ms.to_string(),
            r.converged.to_string(),
            r.primal_residual.to_string(),
            r.dual_residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub lambda_rule: LambdaRule,
    pub kind: SignalKind,
    pub solver: SolverConfig,
    pub tol: f64,
    pub seed: u64,
    /// Cap on `cells × trials × |λ| × max_iter`.
    pub max_work: f64,
}

pub const DEFAULT_PHASE_WORK: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    /// `success_rate[a][b]` is the rate at `k_grid[a]`, `m_grid[b]`.
    pub success_rate: Vec<Vec<f64>>,
    pub trials_per_cell: usize,
    pub lambda_rule: String,
    pub seed: u64,
}

/// Success rate per `(k, m)` cell; a trial succeeds if any λ of the rule
/// recovers the signal. Trials run in parallel, each seeded from
/// `(seed, cell, trial)`.
pub fn run_phase_diagram(cfg: &PhaseConfig) -> Result<PhaseDiagram> {
    if cfg.k_grid.is_empty() || cfg.m_grid.is_empty() {
        return Err(Error::InvalidInput("k and m grids must be nonempty".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if let Some(&k) = cfg.k_grid.iter().find(|&&k| k == 0 || k > cfg.n) {
        return Err(Error::InvalidInput(format!("k = {k} outside 1..={}", cfg.n)));
    }
    if cfg.m_grid.contains(&0) {
        return Err(Error::InvalidInput("m grid contains 0".into()));
    }
    cfg.solver.validate()?;
    let sweeps: Vec<Vec<f64>> =
        cfg.m_grid.iter().map(|&m| cfg.lambda_rule.resolve(cfg.n, m).map(|s| s.values)).collect::<Result<_>>()?;
    let widest = sweeps.iter().map(|s| s.len()).max().unwrap_or(1);
    let cells = cfg.k_grid.len() * cfg.m_grid.len();
    let work = (cells * cfg.trials * widest) as f64 * cfg.solver.max_iter as f64;
    if work > cfg.max_work {
        return Err(Error::BudgetExceeded { required: work, budget: cfg.max_work });
    }

    let jobs: Vec<(usize, usize, usize)> = (0..cfg.k_grid.len())
        .flat_map(|a| (0..cfg.m_grid.len()).flat_map(move |b| (0..cfg.trials).map(move |t| (a, b, t))))
        .collect();
    let outcomes: Vec<bool> = jobs
        .par_iter()
        .map(|&(a, b, t)| {
            let cell = (a * cfg.m_grid.len() + b) as u64;
            let seed = derive_seed(derive_seed(cfg.seed, cell), t as u64);
            let recs = run_recovery_trial(cfg.n, cfg.k_grid[a], cfg.m_grid[b], cfg.kind, &sweeps[b], &cfg.solver, cfg.tol, seed)?;
            Ok(recs.iter().any(|r| r.success))
        })
        .collect::<Result<_>>()?;

    let mut hits = vec![vec![0usize; cfg.m_grid.len()]; cfg.k_grid.len()];
    for (&(a, b, _), &ok) in jobs.iter().zip(&outcomes) {
        hits[a][b] += ok as usize;
    }
    let success_rate = hits
        .iter()
        .map(|row| row.iter().map(|&h| h as f64 / cfg.trials as f64).collect())
        .collect();
    Ok(PhaseDiagram {
        n: cfg.n,
        k_grid: cfg.k_grid.clone(),
        m_grid: cfg.m_grid.clone(),
        success_rate,
        trials_per_cell: cfg.trials,
        lambda_rule: cfg.lambda_rule.to_string(),
        seed: cfg.seed,
    })
}

/// Matrix layout: one row per k, one `m=<value>` column per m.
pub fn write_phase_csv<W: Write>(out: W, pd: &PhaseDiagram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["schema_version".to_string(), "n".to_string(), "trials".to_string(), "k".to_string()];
    header.extend(pd.m_grid.iter().map(|m| format!("m={m}")));
    w.write_record(&header)?;
    for (a, k) in pd.k_grid.iter().enumerate() {
        let mut row = vec![SCHEMA_VERSION.to_string(), pd.n.to_string(), pd.trials_per_cell.to_string(), k.to_string()];
        row.extend(pd.success_rate[a].iter().map(|r| r.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One configured lemma check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma_id", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LemmaCheckSpec {
    L1TraceSandwich { n: usize, k: usize, m: usize, trials: usize },
    LowrankLower { n: usize, k: usize, m: usize, trials: usize },
    L1Upper { n: usize, m: usize, trials: usize },
    TruncatedMoment { n: usize, m: usize, trials: usize, epsilon: f64 },
    Chi2Tail { big_n: usize, m1: usize, trials: usize },
    E0Event { n: usize, k: usize, m: usize, trials: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteConfig {
    pub seed: u64,
    pub checks: Vec<LemmaCheckSpec>,
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            checks: vec![
                LemmaCheckSpec::L1TraceSandwich { n: 40, k: 4, m: 600, trials: 200 },
                LemmaCheckSpec::LowrankLower { n: 40, k: 4, m: 600, trials: 200 },
                LemmaCheckSpec::L1Upper { n: 50, m: 500, trials: 200 },
                LemmaCheckSpec::TruncatedMoment { n: 30, m: 3000, trials: 50, epsilon: 0.15 },
                LemmaCheckSpec::Chi2Tail { big_n: 150, m1: 50, trials: 1_000_000 },
                LemmaCheckSpec::E0Event { n: 50, k: 5, m: 20, trials: 2000 },
            ],
        }
    }
}

impl LemmaCheckSpec {
    pub fn lemma_id(&self) -> LemmaId {
        match self {
            LemmaCheckSpec::L1TraceSandwich { .. } => LemmaId::L1TraceSandwich,
            LemmaCheckSpec::LowrankLower { .. } => LemmaId::LowrankLower,
            LemmaCheckSpec::L1Upper { .. } => LemmaId::L1Upper,
            LemmaCheckSpec::TruncatedMoment { .. } => LemmaId::TruncatedMoment,
            LemmaCheckSpec::Chi2Tail { .. } => LemmaId::Chi2Tail,
            LemmaCheckSpec::E0Event { .. } => LemmaId::E0Event,
        }
    }

    pub fn run(&self, seed: u64) -> Result<LemmaCheckResult> {
        match *self {
            LemmaCheckSpec::L1TraceSandwich { n, k, m, trials } => theory::check_l1_trace_sandwich(n, k, m, trials, seed),
            LemmaCheckSpec::LowrankLower { n, k, m, trials } => theory::check_lowrank_lower(n, k, m, trials, seed),
            LemmaCheckSpec::L1Upper { n, m, trials } => theory::check_l1_upper(n, m, trials, seed),
            LemmaCheckSpec::TruncatedMoment { n, m, trials, epsilon } => {
                theory::check_truncated_moment(n, m, trials, seed, epsilon)
            }
            LemmaCheckSpec::Chi2Tail { big_n, m1, trials } => theory::check_chi2_tail(big_n, m1, trials, seed),
            LemmaCheckSpec::E0Event { n, k, m, trials } => theory::check_e0_event(n, k, m, trials, seed),
        }
    }
}

/// Runs each configured check with seed `derive_seed(seed, index)`.
pub fn run_lemma_suite(cfg: &LemmaSuiteConfig) -> Result<Vec<LemmaCheckResult>> {
    cfg.checks.iter().enumerate().map(|(i, c)| c.run(derive_seed(cfg.seed, i as u64))).collect()
}

/// One row per check. `timestamp` (Unix seconds) is the only column that
/// varies between runs with the same configuration.
pub fn write_lemma_csv<W: Write>(out: W, results: &[LemmaCheckResult], timestamp: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "lemma_id",
        "n",
        "k",
        "m",
        "seed",
        "epsilon",
        "trials",
        "violations",
        "violation_fraction",
        "worst_ratio",
        "statistic_min",
        "statistic_max",
        "statistic_mean",
        "bound",
        "lower_tail_events",
        "timestamp",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in results {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            r.lemma_id.as_str().to_string(),
            r.params.n.to_string(),
            opt(r.params.k.map(|k| k.to_string())),
            r.params.m.to_string(),
            r.params.seed.to_string(),
            opt(r.params.epsilon.map(|e| e.to_string())),
            r.trials.to_string(),
            r.violations.to_string(),
            r.violation_fraction().to_string(),
            r.worst_ratio.to_string(),
            r.statistic_min.to_string(),
            r.statistic_max.to_string(),
            r.statistic_mean.to_string(),
            r.bound.to_string(),
            opt(r.lower_tail_events.map(|c| c.to_string())),
            timestamp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

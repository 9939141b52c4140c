//! Consensus operator splitting for
//!
//! ```text
//! minimize ‖X‖₁ + λ Tr(X)   subject to   𝒜(X) = b,  X ⪰ 0
//! ```
//!
//! Three local copies are kept, one per proximable piece: the regularizer,
//! the PSD cone and the affine constraint set. Each iteration applies the
//! three proximal maps to `Z − U_i`, averages into the consensus variable
//! `Z` and updates the scaled duals `U_i`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm2, psd_project, shrink, sym_eigen, sym_eigen_warm, Spectrum, SymMatrix};
use crate::measurement::{apply_a, apply_a_adjoint, MeasurementVector, SensingEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: f64,
    pub rho: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    pub over_relaxation: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 1.0, rho: 1.0, tol_primal: 1e-7, tol_dual: 1e-7, max_iter: 20_000, over_relaxation: 1.0 }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidInput(format!("solver {what} = {v} out of range")));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda", self.lambda);
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad("rho", self.rho);
        }
        if !(self.tol_primal > 0.0) {
            return bad("tol_primal", self.tol_primal);
        }
        if !(self.tol_dual > 0.0) {
            return bad("tol_dual", self.tol_dual);
        }
        if self.max_iter == 0 {
            return bad("max_iter", 0.0);
        }
        if !(1.0..=1.9).contains(&self.over_relaxation) {
            return bad("over_relaxation", self.over_relaxation);
        }
        Ok(())
    }
}

/// Residuals recorded at iterations 1, 2, 5, 10, 20, 50, ...
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_hat: SymMatrix,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub converged: bool,
    /// Most negative eigenvalue of `x_hat` (only computed once the residuals pass).
    pub min_eigenvalue: Option<f64>,
    pub history: Vec<ResidualSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredSignal {
    pub x_hat: Vec<f64>,
    pub top_eigenvalue: f64,
    pub rank_gap: f64,
}

impl RecoveredSignal {
    /// Leading eigenvalues too close to call the solution rank one.
    pub fn is_ambiguous(&self) -> bool {
        self.rank_gap < 10.0
    }
}

pub fn objective(x: &SymMatrix, lambda: f64) -> f64 {
    x.entrywise_l1() + lambda * x.trace()
}

/// Prox of `(‖·‖₁ + λ Tr)/ρ`.
fn prox_regularizer(v: &SymMatrix, lambda: f64, rho: f64) -> SymMatrix {
    let n = v.dim();
    let tau = 1.0 / rho;
    let shift = lambda / rho;
    let mut out = v.map(|a| shrink(a, tau));
    let data = out.data_mut_unchecked();
    for i in 0..n {
        data[i * n + i] = shrink(v.get(i, i) - shift, tau);
    }
    out
}

const AFFINE_REFINE_STEPS: usize = 3;

/// Frobenius-nearest symmetric matrix with `𝒜(X) = b`.
///
/// An ill-conditioned or ridged Gram leaves a residual after one solve, so
/// the correction is repeated on the residual while it keeps shrinking.
pub fn affine_project(e: &SensingEnsemble, x: &SymMatrix, b: &MeasurementVector) -> Result<SymMatrix> {
    check_dim(e.count(), b.len())?;
    let gram = e
        .gram()
        .ok_or_else(|| Error::InvalidInput("ensemble has no Gram factorization; call factorize_gram".into()))?;
    let floor = 1e-14 * b.norm().max(1.0);
    let mut out = x.clone();
    let mut last = f64::INFINITY;
    for _ in 0..=AFFINE_REFINE_STEPS {
        let mut r = apply_a(e, &out)?;
        r.iter_mut().zip(b.values()).for_each(|(a, bj)| *a -= bj);
        let size = norm2(&r);
        if size <= floor || size >= 0.5 * last {
            break;
        }
        last = size;
        let w = gram.solve(&r)?;
        out.axpy(-1.0, &apply_a_adjoint(e, &w)?)?;
    }
    Ok(out)
}

fn is_logged(t: usize) -> bool {
    let mut p = 1;
    while p <= t {
        if t == p || t == 2 * p || t == 5 * p {
            return true;
        }
        p *= 10;
    }
    false
}

pub fn solve_trace_l1(e: &SensingEnsemble, b: &MeasurementVector, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_dim(e.count(), b.len())?;
    if e.gram().is_none() {
        return Err(Error::InvalidInput("ensemble has no Gram factorization; call factorize_gram".into()));
    }
    let n = e.dim();
    let scale = b.norm().max(1.0);
    let (rho, alpha) = (cfg.rho, cfg.over_relaxation);

    let mut z = SymMatrix::zeros(n);
    let mut u = [SymMatrix::zeros(n), SymMatrix::zeros(n), SymMatrix::zeros(n)];
    let mut locals = [SymMatrix::zeros(n), SymMatrix::zeros(n), SymMatrix::zeros(n)];
    let mut basis: Option<Spectrum> = None;
    let mut history = Vec::new();
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut min_eig = None;
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=cfg.max_iter {
        iterations = t;
        let v0 = z.sub(&u[0])?;
        locals[0] = prox_regularizer(&v0, cfg.lambda, rho);

        let v1 = z.sub(&u[1])?;
        let spec = match &basis {
            Some(prev) => sym_eigen_warm(&v1, prev)?,
            None => sym_eigen(&v1)?,
        };
        locals[1] = spec.reconstruct_with(|l| l.max(0.0));
        basis = Some(spec);

        let v2 = z.sub(&u[2])?;
        locals[2] = affine_project(e, &v2, b)?;

        let z_old = z;
        let relaxed: Vec<SymMatrix> = if alpha == 1.0 {
            locals.to_vec()
        } else {
            locals
                .iter()
                .map(|xi| {
                    let mut r = xi.scaled(alpha);
                    r.axpy(1.0 - alpha, &z_old).expect("same dimension");
                    r
                })
                .collect()
        };
        let mut z_new = SymMatrix::zeros(n);
        for i in 0..3 {
            z_new.axpy(1.0 / 3.0, &relaxed[i])?;
            z_new.axpy(1.0 / 3.0, &u[i])?;
        }
        for i in 0..3 {
            u[i].axpy(1.0, &relaxed[i])?;
            u[i].axpy(-1.0, &z_new)?;
        }

        let disagreement: f64 = locals.iter().map(|xi| xi.sub(&z_new).unwrap().frobenius_norm().powi(2)).sum();
        primal = disagreement.sqrt() / scale;
        dual = rho * 3f64.sqrt() * z_new.sub(&z_old)?.frobenius_norm() / scale;
        z = z_new;

        if is_logged(t) {
            history.push(ResidualSample { iteration: t, primal, dual });
        }
        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            // The returned iterate is the affine copy, which is feasible by
            // construction; it still has to be PSD to the same tolerance.
            let lmin = sym_eigen(&locals[2])?.values.last().copied().unwrap_or(0.0);
            min_eig = Some(lmin);
            let feas = feasibility_residual(e, &locals[2], b)?;
            if lmin >= -cfg.tol_primal && feas <= cfg.tol_primal * scale {
                converged = true;
                break;
            }
        }
    }
    if history.last().map(|h| h.iteration) != Some(iterations) {
        history.push(ResidualSample { iteration: iterations, primal, dual });
    }
    let [_, _, x_hat] = locals;
    let objective = objective(&x_hat, cfg.lambda);
    Ok(SolveResult {
        x_hat,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        objective,
        converged,
        min_eigenvalue: min_eig,
        history,
    })
}

/// `‖𝒜(X) − b‖₂`
pub fn feasibility_residual(e: &SensingEnsemble, x: &SymMatrix, b: &MeasurementVector) -> Result<f64> {
    check_dim(e.count(), b.len())?;
    let ax = apply_a(e, x)?;
    Ok(norm2(&ax.iter().zip(b.values()).map(|(a, bj)| a - bj).collect::<Vec<_>>()))
}

/// Leading eigenpair as a signal estimate, `x̂ = √σ₁ u₁`.
pub fn extract_signal(x_hat: &SymMatrix) -> Result<RecoveredSignal> {
    let spec = sym_eigen(x_hat)?;
    let top = spec.values[0];
    let bottom = *spec.values.last().unwrap();
    if bottom < -1e-6 {
        return Err(Error::InvalidInput(format!("matrix is not PSD (min eigenvalue {bottom:e})")));
    }
    if top <= 0.0 {
        return Err(Error::Degenerate(format!("leading eigenvalue {top:e} is not positive")));
    }
    let second = spec.values.get(1).copied().unwrap_or(0.0);
    let rank_gap = top / second.max(1e-12);
    let s = top.sqrt();
    let x_hat = spec.vector(0).iter().map(|v| v * s).collect();
    Ok(RecoveredSignal { x_hat, top_eigenvalue: top, rank_gap })
}

/// `min(‖x̂ − x‖, ‖x̂ + x‖)/‖x‖`, and whether it is within `tol`.
pub fn check_success(x_hat: &[f64], x_true: &[f64], tol: f64) -> Result<(bool, f64)> {
    check_dim(x_true.len(), x_hat.len())?;
    let norm = norm2(x_true);
    if norm == 0.0 {
        return Err(Error::InvalidInput("reference signal is zero".into()));
    }
    let minus: Vec<f64> = x_hat.iter().zip(x_true).map(|(a, b)| a - b).collect();
    let plus: Vec<f64> = x_hat.iter().zip(x_true).map(|(a, b)| a + b).collect();
    let err = norm2(&minus).min(norm2(&plus)) / norm;
    Ok((err <= tol, err))
}

/// Relative error (modulo sign) of the leading-eigenvector estimate read from
/// the PSD part of `x_hat`; 1 when that part is zero.
pub fn signal_error(x_hat: &SymMatrix, truth: &[f64]) -> Result<f64> {
    match extract_signal(&psd_project(x_hat)?) {
        Ok(rec) => Ok(check_success(&rec.x_hat, truth, 0.0)?.1),
        Err(Error::Degenerate(_)) => Ok(1.0),
        Err(other) => Err(other),
    }
}

//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed; pass criterion numbers as
//! arguments to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use cpr_core::certificate::{golfing_construct, lambda_window, truncated_moments, verify_certificate, GolfingConfig};
use cpr_core::experiment::{generate_instance, recover, run_phase_diagram, LambdaRule, PhaseConfig, SignalKind};
use cpr_core::linalg::{inner, psd_project, sym_eigen, SymMatrix};
use cpr_core::measurement::{apply_a, apply_a_adjoint, make_ensemble, SparseSignal, SubspaceContext};
use cpr_core::rng::{derive_seed, GaussianSource};
use cpr_core::solver::{affine_project, solve_trace_l1, signal_error, SolverConfig};
use cpr_core::theory::{
    check_chi2_tail, check_l1_trace_sandwich, check_l1_upper, check_truncated_moment, empirical_nonoptimality,
    injectivity_oracle, OptimalityVerdict, OracleVerdict,
};

const SEED: u64 = 20_240_601;
const SUCCESS_TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn seed_for(criterion: u64, trial: u64) -> u64 {
    derive_seed(derive_seed(SEED, criterion), trial)
}

fn c1_recovery() -> Outcome {
    let lambdas = [2.0, 3.0, 4.0, 6.0];
    let cfg = SolverConfig::default();
    let mut successes = 0;
    let mut slowest = 0.0_f64;
    let mut worst_best = 0.0_f64;
    for t in 0..20 {
        let inst = generate_instance(64, 2, 150, SignalKind::Flat, seed_for(1, t)).unwrap();
        let e = inst.ensemble.with_gram().unwrap();
        let mut best = f64::INFINITY;
        // any success makes the best λ a success, so stop at the first one
        for &lambda in &lambdas {
            let rec = recover(&e, &inst.measurements, &inst.signal, &[lambda], &cfg, SUCCESS_TOL, t).unwrap();
            slowest = slowest.max(rec[0].wall_time_ms as f64 / 1000.0);
            best = best.min(rec[0].rel_error);
            if rec[0].success {
                break;
            }
        }
        worst_best = worst_best.max(best);
        if best <= SUCCESS_TOL {
            successes += 1;
        }
    }
    Outcome {
        pass: successes >= 18 && slowest <= 120.0,
        detail: format!(
            "success {successes}/20 (need ≥ 18), worst best-λ error {worst_best:.2e}, slowest solve {slowest:.1} s (limit 120 s)"
        ),
    }
}

fn c2_failure_below_frontier() -> Outcome {
    let lambdas = [2.0, 4.0, 8.0];
    let cfg = SolverConfig { rho: 10.0, max_iter: 200, ..SolverConfig::default() };
    let mut successes = 0;
    let mut gap_everywhere = 0;
    let mut min_gap = f64::INFINITY;
    let mut max_primal = 0.0_f64;
    let mut any_converged = false;
    for t in 0..20 {
        let inst = generate_instance(128, 8, 20, SignalKind::Flat, seed_for(2, t)).unwrap();
        let e = inst.ensemble.with_gram().unwrap();
        let rep = empirical_nonoptimality(&e, &inst.signal, &lambdas, &cfg).unwrap();
        if rep.entries.iter().any(|en| en.rel_error <= SUCCESS_TOL) {
            successes += 1;
        }
        if rep.entries.iter().all(|en| en.verdict == OptimalityVerdict::NonOptimal && en.gap > 0.0) {
            gap_everywhere += 1;
        }
        for en in &rep.entries {
            min_gap = min_gap.min(en.gap / en.objective_truth);
            max_primal = max_primal.max(en.primal_residual);
            any_converged |= en.converged;
        }
    }
    Outcome {
        pass: successes <= 2 && gap_everywhere >= 18,
        detail: format!(
            "success {successes}/20 (need ≤ 2), positive gap at every λ in {gap_everywhere}/20 (need ≥ 18); \
             smallest relative gap {min_gap:.3}, iteration cap 200 (converged: {any_converged}, worst primal residual {max_primal:.1e})"
        ),
    }
}

fn c3_oracle_equivalence() -> Outcome {
    let mut agree = 0;
    let mut worst = 0.0_f64;
    for t in 0..10 {
        let inst = generate_instance(8, 1, 30, SignalKind::Flat, seed_for(3, t)).unwrap();
        let verdict = injectivity_oracle(&inst.ensemble, &inst.signal, 1, 1e-8).unwrap();
        let e = inst.ensemble.with_gram().unwrap();
        let ctx = SubspaceContext::new(&inst.signal).unwrap();
        let lambda = lambda_window(&ctx, 8, 30, 1.0).unwrap().lambda_min + 1.0;
        let res = solve_trace_l1(&e, &inst.measurements, &SolverConfig::with_lambda(lambda)).unwrap();
        let err = signal_error(&res.x_hat, &inst.signal.to_dense()).unwrap();
        worst = worst.max(err);
        if verdict == OracleVerdict::Unique && err <= SUCCESS_TOL {
            agree += 1;
        }
    }
    Outcome { pass: agree == 10, detail: format!("agreement {agree}/10 (need 10), worst error {worst:.2e}") }
}

struct GolfingStats {
    all_three: usize,
    per_bound: [usize; 3],
    max_telescope: f64,
    contracted: usize,
    median_ratio: f64,
}

fn golfing_stats() -> GolfingStats {
    let (n, k, m) = (64, 3, 660);
    let mut s = GolfingStats { all_three: 0, per_bound: [0; 3], max_telescope: 0.0, contracted: 0, median_ratio: 0.0 };
    let mut ratios = Vec::new();
    for t in 0..100 {
        let inst = generate_instance(n, k, m, SignalKind::Flat, seed_for(4, t)).unwrap();
        let ctx = SubspaceContext::new(&inst.signal).unwrap();
        let lambda = lambda_window(&ctx, n, m, 1.0).unwrap().lambda_min + 1.0;
        let cert = golfing_construct(&inst.ensemble, &ctx, lambda, &GolfingConfig { c1: 20.0 }).unwrap();
        let rep = verify_certificate(&cert, &ctx, lambda, 2.0).unwrap();
        if rep.all_passed() {
            s.all_three += 1;
        }
        for (count, ok) in s.per_bound.iter_mut().zip(rep.passed) {
            *count += ok as usize;
        }
        s.max_telescope = s.max_telescope.max((rep.norm_tcap_omega_gap - cert.final_residual()).abs());
        let r = cert.first_step_ratio();
        if r <= 0.2 {
            s.contracted += 1;
        }
        ratios.push(r);
    }
    ratios.sort_by(f64::total_cmp);
    s.median_ratio = ratios[50];
    s
}

fn c4_certificate(s: &GolfingStats) -> Outcome {
    Outcome {
        pass: s.all_three >= 80 && s.max_telescope <= 1e-9,
        detail: format!(
            "all three bounds {}/100 (need ≥ 80; per bound {:?}), max telescoping mismatch {:.1e} (need ≤ 1e-9)",
            s.all_three, s.per_bound, s.max_telescope
        ),
    }
}

fn c5_contraction(s: &GolfingStats) -> Outcome {
    Outcome {
        pass: s.contracted >= 90,
        detail: format!(
            "‖X₁‖ ≤ ‖X₀‖/5 in {}/100 (need ≥ 90), median ‖X₁‖/‖X₀‖ = {:.3}",
            s.contracted, s.median_ratio
        ),
    }
}

fn c6_sandwich() -> Outcome {
    let r = check_l1_trace_sandwich(40, 4, 600, 200, seed_for(6, 0)).unwrap();
    let frac = r.violation_fraction();
    Outcome {
        pass: frac <= 0.02 && r.statistic_max <= 1.2,
        detail: format!(
            "violation fraction {frac:.3} (need ≤ 0.02), worst upper ratio {:.4} (need ≤ 1.2), ratio range [{:.4}, {:.4}]",
            r.statistic_max, r.statistic_min, r.statistic_max
        ),
    }
}

fn c7_l1_upper() -> Outcome {
    let r = check_l1_upper(50, 500, 200, seed_for(7, 0)).unwrap();
    let frac = r.violation_fraction();
    Outcome {
        pass: frac <= 0.02,
        detail: format!("violation fraction {frac:.3} (need ≤ 0.02), largest ratio {:.4}", r.statistic_max),
    }
}

fn c8_truncated_moments() -> Outcome {
    let tm = truncated_moments();
    let d2 = (tm.beta2 - 0.9707).abs();
    let d4 = (tm.beta4 - 2.6728).abs();
    let r = check_truncated_moment(30, 3000, 50, seed_for(8, 0), 0.15).unwrap();
    let within = r.trials - r.violations;
    let frac = within as f64 / r.trials as f64;
    Outcome {
        pass: d2 <= 5e-4 && d4 <= 5e-4 && frac >= 0.95,
        detail: format!(
            "β₂ = {:.6} (|Δ| {d2:.1e}), β₄ = {:.6} (|Δ| {d4:.1e}); deviation ≤ 0.15 in {within}/{} (need ≥ 95%), \
             deviation range [{:.3}, {:.3}], mean {:.3}",
            tm.beta2, tm.beta4, r.trials, r.statistic_min, r.statistic_max, r.statistic_mean
        ),
    }
}

fn c9_chi2_tail() -> Outcome {
    let samples = 1_000_000;
    let start = Instant::now();
    let r = check_chi2_tail(150, 50, samples, seed_for(9, 0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let p0 = r.bound;
    let limit = p0 + 3.0 * (p0 * (1.0 - p0) / samples as f64).sqrt();
    let upper = r.violations as f64 / samples as f64;
    let lower = r.lower_tail_events.unwrap_or(0) as f64 / samples as f64;
    Outcome {
        pass: upper <= limit && secs <= 30.0,
        detail: format!(
            "P̂(χ²₁₀₀ ≥ 50) = {upper:.6} (need ≤ {limit:.3e}); opposite tail P̂(χ²₁₀₀ ≤ 50) = {lower:.1e}; {secs:.1} s (limit 30 s)"
        ),
    }
}

fn c10_injectivity() -> Outcome {
    let mut unique = 0;
    let mut counter = 0;
    for t in 0..100 {
        let mut g = GaussianSource::new(seed_for(10, t));
        let x = SparseSignal::gaussian_normalized(6, 1, &mut g).unwrap();
        let e3 = make_ensemble(6, 3, derive_seed(seed_for(10, t), 3)).unwrap();
        if injectivity_oracle(&e3, &x, 1, 1e-8).unwrap() == OracleVerdict::Unique {
            unique += 1;
        }
        let e1 = make_ensemble(6, 1, derive_seed(seed_for(10, t), 1)).unwrap();
        if matches!(injectivity_oracle(&e1, &x, 1, 1e-8).unwrap(), OracleVerdict::Counterexample { .. }) {
            counter += 1;
        }
    }
    Outcome {
        pass: unique >= 95 && counter == 100,
        detail: format!("m=3 unique {unique}/100 (need ≥ 95), m=1 counterexample {counter}/100 (need 100)"),
    }
}

fn c11_phase_monotone() -> Outcome {
    let cfg = PhaseConfig {
        n: 48,
        k_grid: vec![2],
        m_grid: vec![40, 80, 120, 160],
        trials: 20,
        lambda_rule: LambdaRule::Fixed(4.0),
        kind: SignalKind::Flat,
        solver: SolverConfig { max_iter: 3000, ..SolverConfig::default() },
        tol: SUCCESS_TOL,
        seed: seed_for(11, 0),
        max_work: 1e8,
    };
    let pd = run_phase_diagram(&cfg).unwrap();
    let rates = &pd.success_rate[0];
    let slack = 2.0 / 20f64.sqrt();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0] - slack);
    Outcome {
        pass: monotone,
        detail: format!("success rates {rates:?} over m = {:?}, slack {slack:.3}, λ = 4, iteration cap 3000", pd.m_grid),
    }
}

fn random_sym(n: usize, g: &mut GaussianSource) -> SymMatrix {
    SymMatrix::from_row_major(n, g.normals(n * n)).unwrap()
}

fn c12_kernels() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0_f64; 4];
    let mut failures = Vec::new();
    for t in 0..100 {
        let mut g = GaussianSource::new(seed_for(12, t));
        let n = 2 + g.uniform_index(19);
        let m = 1 + g.uniform_index(40);
        let k = 1 + g.uniform_index(n);
        let e = make_ensemble(n, m, derive_seed(seed_for(12, t), 1)).unwrap();
        let x = random_sym(n, &mut g);

        let v = g.normals(m);
        let lhs: f64 = apply_a(&e, &x).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs = inner(&x, &apply_a_adjoint(&e, &v).unwrap()).unwrap();
        worst[0] = worst[0].max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300));

        let signal = SparseSignal::gaussian_normalized(n, k, &mut g).unwrap();
        let ctx = SubspaceContext::new(&signal).unwrap();
        let e = e.with_gram().unwrap();
        let b = cpr_core::measurement::measure(&e, &signal).unwrap();
        let idem = |p: &SymMatrix, pp: &SymMatrix| pp.sub(p).unwrap().frobenius_norm() / p.frobenius_norm().max(1.0);
        let psd = psd_project(&x).unwrap();
        let aff = affine_project(&e, &x, &b).unwrap();
        let projections = [
            (psd.clone(), psd_project(&psd).unwrap()),
            (aff.clone(), affine_project(&e, &aff, &b).unwrap()),
            (ctx.project_omega(&x).unwrap(), ctx.project_omega(&ctx.project_omega(&x).unwrap()).unwrap()),
            (ctx.project_gamma(&x).unwrap(), ctx.project_gamma(&ctx.project_gamma(&x).unwrap()).unwrap()),
            (ctx.project_t(&x).unwrap(), ctx.project_t(&ctx.project_t(&x).unwrap()).unwrap()),
            (
                ctx.project_t_cap_omega(&x).unwrap(),
                ctx.project_t_cap_omega(&ctx.project_t_cap_omega(&x).unwrap()).unwrap(),
            ),
        ];
        for (p, pp) in &projections {
            worst[1] = worst[1].max(idem(p, pp));
        }

        let sgn = SymMatrix::outer(ctx.sign_vector());
        let pt = ctx.project_t(&sgn).unwrap();
        worst[2] = worst[2].max(pt.sub(&ctx.sign_tangent()).unwrap().frobenius_norm() / pt.frobenius_norm().max(1.0));

        let spec = sym_eigen(&x).unwrap();
        let rec = spec.reconstruct().sub(&x).unwrap().frobenius_norm() / x.frobenius_norm().max(1.0);
        worst[3] = worst[3].max(rec);
        if spec.orthonormality_error() > 1e-10 {
            failures.push(format!("orthonormality at instance {t}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let limits = [1e-10, 1e-9, 1e-12, 1e-9];
    let pass = worst.iter().zip(limits).all(|(w, l)| *w <= l) && failures.is_empty() && secs <= 10.0;
    Outcome {
        pass,
        detail: format!(
            "adjoint {:.1e} (≤ 1e-10), idempotence {:.1e} (≤ 1e-9), sign tangent {:.1e} (≤ 1e-12), \
             eigen reconstruction {:.1e} (≤ 1e-9){}; {secs:.2} s (limit 10 s)",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            if failures.is_empty() { String::new() } else { format!(", {}", failures.join(", ")) }
        ),
    }
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |c: usize| selected.is_empty() || selected.contains(&c);
    let mut failed = 0;
    let mut report = |c: usize, o: Outcome| {
        println!("criterion {c:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    let simple: [(usize, fn() -> Outcome); 3] = [(1, c1_recovery), (2, c2_failure_below_frontier), (3, c3_oracle_equivalence)];
    for (c, f) in simple {
        if want(c) {
            report(c, f());
        }
    }
    if want(4) || want(5) {
        let s = golfing_stats();
        if want(4) {
            report(4, c4_certificate(&s));
        }
        if want(5) {
            report(5, c5_contraction(&s));
        }
    }
    let rest: [(usize, fn() -> Outcome); 7] = [
        (6, c6_sandwich),
        (7, c7_l1_upper),
        (8, c8_truncated_moments),
        (9, c9_chi2_tail),
        (10, c10_injectivity),
        (11, c11_phase_monotone),
        (12, c12_kernels),
    ];
    for (c, f) in rest {
        if want(c) {
            report(c, f());
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

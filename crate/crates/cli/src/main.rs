use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cpr_core::certificate::{golfing_construct, lambda_window, verify_certificate, GolfingConfig};
use cpr_core::experiment::{
    self, default_lambda_sweep, dedup_lambdas, generate_instance, LemmaSuiteConfig, PhaseConfig, SignalKind,
    DEFAULT_PHASE_WORK, DEFAULT_SUCCESS_TOL,
};
use cpr_core::measurement::{EnsembleSpec, MeasurementVector, SensingEnsemble, SparseSignal, SubspaceContext};
use cpr_core::rng::GaussianSource;
use cpr_core::solver::SolverConfig;
use cpr_core::theory::{converse_bound, converse_bound_for};
use cpr_core::{Error, Result};

const SIGNAL_FILE: &str = "signal.json";
const ENSEMBLE_FILE: &str = "ensemble.json";
const MEASUREMENTS_FILE: &str = "measurements.json";

#[derive(Parser, Debug)]
#[command(name = "cpr", version, about = "Sparse phase retrieval from Gaussian quadratic measurements")]
struct Cli {
    /// Base random seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (standard output when omitted, except for `gen`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trial-level parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit JSON
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV (default for tabular output)
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a signal, an ensemble descriptor and the measurements
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        /// flat | gaussian-normalized
        #[arg(long, default_value = "flat")]
        kind: String,
    },
    /// Solve the lifted program for each λ and score the recovered signal
    Recover {
        /// Directory holding the files written by `gen`
        #[arg(long, default_value = ".")]
        input: PathBuf,
        /// Comma-separated λ values [default: 1,2,4,8,√(m/ln n)]
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Relative error counted as success
        #[arg(long, default_value_t = DEFAULT_SUCCESS_TOL)]
        success_tol: f64,
    },
    /// Build a golfing certificate and check its three conditions
    Certify {
        #[arg(long, default_value = ".")]
        input: PathBuf,
        /// Trace weight [default: √k‖x‖₁ + 2, one above the window's lower end]
        #[arg(long)]
        lambda: Option<f64>,
        /// Constant in the off-support sup-norm threshold
        #[arg(long = "c", default_value_t = 2.0)]
        c: f64,
        /// Minimum group size per unit of sparsity (0 disables the check)
        #[arg(long, default_value_t = 20.0)]
        c1: f64,
    },
    /// Run the Monte Carlo lemma suite
    VerifyLemmas {
        /// JSON suite configuration [default: built-in desk-scale suite]
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Success rate over a (k, m) grid
    PhaseDiagram {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        k_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        m_grid: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// remark1[:C0] | fixed:<v> | list:<v1,v2,...>
        #[arg(long, default_value = "remark1")]
        lambda_rule: String,
        #[arg(long, default_value = "flat")]
        kind: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = DEFAULT_SUCCESS_TOL)]
        success_tol: f64,
        /// Refuse runs whose cells × trials × |λ| × max_iter exceeds this
        #[arg(long, default_value_t = DEFAULT_PHASE_WORK)]
        max_work: f64,
    },
    /// Evaluate the converse sample-size bound
    Bound {
        /// Signal file; alternatively give --k and --kind
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "flat")]
        kind: String,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_primal: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_dual: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    over_relaxation: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            lambda: 0.0,
            rho: self.rho,
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
            max_iter: self.max_iter,
            over_relaxation: self.over_relaxation,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen { n, k, m, kind } => cmd_gen(cli, *n, *k, *m, kind),
        Command::Recover { input, lambda, solver, success_tol } => cmd_recover(cli, input, lambda, solver, *success_tol),
        Command::Certify { input, lambda, c, c1 } => cmd_certify(cli, input, *lambda, *c, *c1),
        Command::VerifyLemmas { config } => cmd_verify_lemmas(cli, config.as_deref()),
        Command::PhaseDiagram { n, k_grid, m_grid, trials, lambda_rule, kind, solver, success_tol, max_work } => {
            let cfg = PhaseConfig {
                n: *n,
                k_grid: k_grid.clone(),
                m_grid: m_grid.clone(),
                trials: *trials,
                lambda_rule: lambda_rule.parse()?,
                kind: kind.parse()?,
                solver: SolverConfig { lambda: 1.0, ..solver.config() },
                tol: *success_tol,
                seed: cli.seed,
                max_work: *max_work,
            };
            cmd_phase_diagram(cli, &cfg)
        }
        Command::Bound { signal, k, kind, n } => cmd_bound(cli, signal.as_deref(), *k, kind, *n),
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes to `<out>/<name>` when --out is set, otherwise to standard output.
fn emit(cli: &Cli, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
            write(&mut f)?;
            f.flush()?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(cli: &Cli, name: &str, value: &T) -> Result<()> {
    emit(cli, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn cmd_gen(cli: &Cli, n: usize, k: usize, m: usize, kind: &str) -> Result<()> {
    let kind: SignalKind = kind.parse()?;
    let inst = generate_instance(n, k, m, kind, cli.seed)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    write_json_file(&dir.join(SIGNAL_FILE), &inst.signal)?;
    write_json_file(&dir.join(ENSEMBLE_FILE), &inst.ensemble.spec())?;
    write_json_file(&dir.join(MEASUREMENTS_FILE), &inst.measurements)?;
    eprintln!("wrote {SIGNAL_FILE}, {ENSEMBLE_FILE}, {MEASUREMENTS_FILE} to {}", dir.display());
    Ok(())
}

struct Loaded {
    signal: SparseSignal,
    ensemble: SensingEnsemble,
    measurements: MeasurementVector,
}

fn load_instance(dir: &Path) -> Result<Loaded> {
    let signal: SparseSignal = read_json(&dir.join(SIGNAL_FILE))?;
    let spec: EnsembleSpec = read_json(&dir.join(ENSEMBLE_FILE))?;
    let measurements: MeasurementVector = read_json(&dir.join(MEASUREMENTS_FILE))?;
    if spec.m == 0 {
        return Err(Error::InvalidInput("ensemble has m = 0 measurements".into()));
    }
    if signal.dim() != spec.n {
        return Err(Error::InvalidInput(format!("signal has n = {} but ensemble has n = {}", signal.dim(), spec.n)));
    }
    if measurements.len() != spec.m {
        return Err(Error::InvalidInput(format!(
            "{} measurements on file but ensemble has m = {}",
            measurements.len(),
            spec.m
        )));
    }
    Ok(Loaded { signal, ensemble: spec.build()?, measurements })
}

fn cmd_recover(cli: &Cli, input: &Path, lambdas: &[f64], solver: &SolverArgs, tol: f64) -> Result<()> {
    let inst = load_instance(input)?;
    let raw = if lambdas.is_empty() {
        default_lambda_sweep(inst.ensemble.dim(), inst.ensemble.count())
    } else {
        lambdas.to_vec()
    };
    let sweep = dedup_lambdas(&raw)?;
    for w in &sweep.warnings {
        eprintln!("warning: {w}");
    }
    let cfg = SolverConfig { lambda: sweep.values[0], ..solver.config() };
    cfg.validate()?;
    let e = inst.ensemble.with_gram()?;
    let mut records = Vec::new();
    let mut first_error = None;
    for &lambda in &sweep.values {
        match experiment::recover(&e, &inst.measurements, &inst.signal, &[lambda], &cfg, tol, e.seed()) {
            Ok(mut r) => records.append(&mut r),
            Err(err) => {
                eprintln!("failed: λ = {lambda}: {err}");
                first_error.get_or_insert(err);
            }
        }
    }
    for r in &records {
        if !r.converged {
            eprintln!("note: λ = {} stopped at the iteration cap ({} iterations)", r.lambda, r.iterations);
        }
    }
    if cli.json {
        emit_json(cli, "recover.json", &records)?;
    } else {
        emit(cli, "recover.csv", |w| experiment::write_records_csv(w, &records))?;
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_certify(cli: &Cli, input: &Path, lambda: Option<f64>, c: f64, c1: f64) -> Result<()> {
    let inst = load_instance(input)?;
    let ctx = SubspaceContext::new(&inst.signal)?;
    let (n, m) = (inst.ensemble.dim(), inst.ensemble.count());
    let window = lambda_window(&ctx, n, m, 1.0)?;
    let lambda = lambda.unwrap_or(window.lambda_min + 1.0);
    if !window.contains(lambda) {
        eprintln!(
            "warning: λ = {lambda} lies outside the window ({}, {})",
            window.lambda_min, window.lambda_max
        );
    }
    let cert = golfing_construct(&inst.ensemble, &ctx, lambda, &GolfingConfig { c1 })?;
    let mut report = verify_certificate(&cert, &ctx, lambda, c)?;
    report.seed = Some(inst.ensemble.seed());
    report.c1 = Some(c1);
    emit_json(cli, "certificate.json", &report)
}

fn cmd_verify_lemmas(cli: &Cli, config: Option<&Path>) -> Result<()> {
    let mut cfg = match config {
        Some(p) => read_json::<LemmaSuiteConfig>(p)?,
        None => LemmaSuiteConfig::default(),
    };
    if config.is_none() || cli.seed != 0 {
        cfg.seed = cli.seed;
    }
    let results = experiment::run_lemma_suite(&cfg)?;
    if cli.json {
        emit_json(cli, "lemmas.json", &results)
    } else {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        emit(cli, "lemmas.csv", |w| experiment::write_lemma_csv(w, &results, stamp))
    }
}

fn cmd_phase_diagram(cli: &Cli, cfg: &PhaseConfig) -> Result<()> {
    let pd = experiment::run_phase_diagram(cfg)?;
    if cli.json {
        emit_json(cli, "phase.json", &pd)
    } else {
        emit(cli, "phase.csv", |w| experiment::write_phase_csv(w, &pd))
    }
}

fn cmd_bound(cli: &Cli, signal: Option<&Path>, k: Option<usize>, kind: &str, n: usize) -> Result<()> {
    let bound = match (signal, k) {
        (Some(path), _) => converse_bound(&read_json::<SparseSignal>(path)?, n)?,
        (None, Some(k)) => match kind.parse::<SignalKind>()? {
            SignalKind::Flat => converse_bound_for(k, (k as f64).sqrt(), n)?,
            SignalKind::GaussianNormalized => {
                let x = SparseSignal::gaussian_normalized(n, k, &mut GaussianSource::new(cli.seed))?;
                converse_bound(&x, n)?
            }
        },
        (None, None) => return Err(Error::InvalidInput("give --signal or --k".into())),
    };
    emit_json(cli, "bound.json", &bound)
}

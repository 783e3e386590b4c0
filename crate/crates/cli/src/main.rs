//! lyapunov-lab: batch front-end for the cocycle spectrum estimators.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lyapunov_core::ensembles::CocycleSpec;
use lyapunov_core::estimators::{
    asymptotic_spectrum, estimate_approx_mc, estimate_direct, estimate_exact_mc,
    gap_conjecture_report, sigma_equivalence_test, theta_log_moment, ChainUpdate,
    SpectrumEstimate,
};
use lyapunov_core::matrix::Matrix;
use lyapunov_core::rng::RngStream;

use lyapunov_lab::config::{parse_config, ConfigError, EstimatorKind, ExperimentConfig};
use lyapunov_lab::emit::{self, emit_results, format_float17, residual_table, write_residual_csv};
use lyapunov_lab::sweep::{cell_stream_index, run_sweep, ResultRow};

const EXIT_CONFIG: i32 = 1;
const EXIT_IO: i32 = 2;
const EXIT_ALL_FAILED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "lyapunov-lab",
    about = "Lyapunov spectra of orthogonal-plus-Gaussian matrix cocycles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Config file (flat JSON key-value document); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix dimension d
    #[arg(long)]
    d: Option<usize>,
    /// Noise amplitude eps
    #[arg(long)]
    epsilon: Option<f64>,
    /// Monte Carlo sample count
    #[arg(long)]
    samples: Option<u64>,
    /// Chain step count
    #[arg(long)]
    steps: Option<u64>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Direct product simulation with periodic QR re-orthonormalization
    EstimateDirect {
        #[command(flatten)]
        common: CommonArgs,
        /// Re-orthonormalization period in steps
        #[arg(long)]
        reorth_period: Option<u64>,
        /// Base sequence: identity, haar, rotation=<radians>, diag=<v1,v2,..>
        #[arg(long, default_value = "identity")]
        base: String,
    },
    /// Exact one-step Monte Carlo over Gram-Schmidt norms of I + eps N
    EstimateExact {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo over the first-order approximant column norms
    EstimateApprox {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Closed-form small-noise spectrum (d - 2k) eps^2 / 2
    Asymptotic {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// KS equivalence test of the singular-value chain against the explicit
    /// product, with a raw-diagonal negative control
    SigmaCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo log-moment of the column distance against its quadrature
    /// bound
    ThetaCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Gap-conjecture harness: norm-bounded test cocycle vs identity baseline
    Conjecture {
        #[command(flatten)]
        common: CommonArgs,
        /// Epsilon grid (repeatable)
        #[arg(long = "epsilon-grid", value_delimiter = ',')]
        epsilon_grid: Vec<f64>,
        /// Test base: identity, haar, rotation=<radians>, diag=<v1,v2,..>
        #[arg(long, default_value = "haar")]
        base: String,
    },
    /// Full (dims x epsilons x estimators) sweep from a config file
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Residual table (exact minus asymptotic) from a sweep CSV
    ResidualTable {
        /// Sweep CSV produced by this tool
        input: PathBuf,
        /// Output path (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli.command));
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::document(format!("cannot read {path:?}: {e}")))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(d) = common.d {
        cfg.dims = vec![d];
    }
    if let Some(eps) = common.epsilon {
        cfg.epsilons = vec![eps];
    }
    if let Some(n) = common.samples {
        cfg.n_samples = n;
    }
    if let Some(n) = common.steps {
        cfg.n_steps = n;
    }
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = common.workers {
        if w < 1 {
            return Err(ConfigError::field("workers", "must be >= 1"));
        }
        cfg.workers = w;
    }
    if let Some(path) = &common.output {
        cfg.output_path = Some(path.to_string_lossy().into_owned());
    }
    if let Some(f) = &common.format {
        cfg.output_format = f.parse()?;
    }
    Ok(cfg)
}

/// Sizes the global worker pool for single-run commands; the sweep builds
/// its own scoped pool. Results never depend on the pool size.
fn init_pool(workers: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
}

fn single_cell(cfg: &ExperimentConfig, field: &str) -> Result<(usize, f64), ConfigError> {
    let d = *cfg
        .dims
        .first()
        .ok_or_else(|| ConfigError::field("d", format!("{field} needs --d or config dims")))?;
    let eps = *cfg.epsilons.first().ok_or_else(|| {
        ConfigError::field("epsilon", format!("{field} needs --epsilon or config epsilons"))
    })?;
    Ok((d, eps))
}

fn parse_base(text: &str, d: usize) -> Result<CocycleSpec, ConfigError> {
    let build_err = |m: String| ConfigError::field("base", m);
    if text == "identity" {
        Ok(CocycleSpec::identity(d, 0.0))
    } else if text == "haar" {
        Ok(CocycleSpec::iid_haar(d, 0.0))
    } else if let Some(angle) = text.strip_prefix("rotation=") {
        if d != 2 {
            return Err(build_err("rotation base needs d = 2".into()));
        }
        let angle: f64 = angle
            .parse()
            .map_err(|e| build_err(format!("bad rotation angle: {e}")))?;
        CocycleSpec::fixed_orthogonal(0.0, Matrix::rotation2(angle))
            .map_err(|e| build_err(e.to_string()))
    } else if let Some(list) = text.strip_prefix("diag=") {
        let entries: Vec<f64> = list
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| build_err(format!("bad diagonal: {e}")))?;
        if entries.len() != d {
            return Err(build_err(format!(
                "diagonal has {} entries, d = {d}",
                entries.len()
            )));
        }
        let m = Matrix::diagonal(&entries).map_err(|e| build_err(e.to_string()))?;
        let bound = entries.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let gen = move |_: &mut RngStream| m.clone();
        Ok(CocycleSpec::user_sequence(d, 0.0, bound, Box::new(gen)))
    } else {
        Err(build_err(format!(
            "unknown base '{text}' (expected identity, haar, rotation=<radians>, diag=<v1,v2,..>)"
        )))
    }
}

fn rows_from_estimate(
    est: &SpectrumEstimate,
    kind: EstimatorKind,
    master_seed: u64,
    wall: f64,
) -> Vec<ResultRow> {
    (1..=est.dim)
        .map(|k| ResultRow {
            d: est.dim,
            epsilon: est.epsilon,
            k,
            estimator: kind,
            lambda_hat: est.lambdas[k - 1],
            std_err: est.std_errs[k - 1],
            n_units: est.n_units,
            master_seed,
            wall_time_seconds: wall,
        })
        .collect()
}

fn write_rows(cfg: &ExperimentConfig, rows: &[ResultRow]) -> io::Result<()> {
    match &cfg.output_path {
        Some(path) => {
            let file = fs::File::create(path)?;
            emit_results(rows, cfg.output_format, io::BufWriter::new(file))
        }
        None => emit_results(rows, cfg.output_format, io::stdout().lock()),
    }
}

fn run(command: Command) -> i32 {
    match dispatch(command) {
        Ok(code) => code,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(RunError::Io(e)) => {
            eprintln!("i/o error: {e}");
            EXIT_IO
        }
        Err(RunError::Estimator(e)) => {
            eprintln!("run failed: {e}");
            EXIT_ALL_FAILED
        }
    }
}

enum RunError {
    Config(ConfigError),
    Io(io::Error),
    Estimator(lyapunov_core::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}
impl From<lyapunov_core::Error> for RunError {
    fn from(e: lyapunov_core::Error) -> Self {
        RunError::Estimator(e)
    }
}

fn dispatch(command: Command) -> Result<i32, RunError> {
    match command {
        Command::EstimateExact { common } => {
            let cfg = load_config(&common)?;
            let (d, eps) = single_cell(&cfg, "estimate-exact")?;
            init_pool(cfg.workers);
            let stream = RngStream::new(
                cfg.master_seed,
                cell_stream_index(d, eps, EstimatorKind::Exact, 0),
            );
            let start = Instant::now();
            let est = estimate_exact_mc(d, eps, cfg.n_samples, &stream)?;
            let rows = rows_from_estimate(&est, EstimatorKind::Exact, cfg.master_seed, start.elapsed().as_secs_f64());
            write_rows(&cfg, &rows)?;
            Ok(0)
        }
        Command::EstimateApprox { common } => {
            let cfg = load_config(&common)?;
            let (d, eps) = single_cell(&cfg, "estimate-approx")?;
            init_pool(cfg.workers);
            let stream = RngStream::new(
                cfg.master_seed,
                cell_stream_index(d, eps, EstimatorKind::Approx, 0),
            );
            let start = Instant::now();
            let est = estimate_approx_mc(d, eps, cfg.n_samples, &stream)?;
            let rows =
                rows_from_estimate(&est, EstimatorKind::Approx, cfg.master_seed, start.elapsed().as_secs_f64());
            write_rows(&cfg, &rows)?;
            Ok(0)
        }
        Command::Asymptotic { common } => {
            let cfg = load_config(&common)?;
            let (d, eps) = single_cell(&cfg, "asymptotic")?;
            let est = asymptotic_spectrum(d, eps)?;
            let rows = rows_from_estimate(&est, EstimatorKind::Asymptotic, cfg.master_seed, 0.0);
            write_rows(&cfg, &rows)?;
            Ok(0)
        }
        Command::EstimateDirect {
            common,
            reorth_period,
            base,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(p) = reorth_period {
                cfg.reorth_period = p;
            }
            let (d, eps) = single_cell(&cfg, "estimate-direct")?;
            let mut spec = parse_base(&base, d)?;
            spec.epsilon = eps;
            let mut rng = RngStream::new(
                cfg.master_seed,
                cell_stream_index(d, eps, EstimatorKind::Direct, 0),
            );
            let start = Instant::now();
            let est = estimate_direct(&mut spec, cfg.n_steps, cfg.reorth_period, &mut rng)?;
            let rows =
                rows_from_estimate(&est, EstimatorKind::Direct, cfg.master_seed, start.elapsed().as_secs_f64());
            write_rows(&cfg, &rows)?;
            Ok(0)
        }
        Command::SigmaCheck { common } => {
            let cfg = load_config(&common)?;
            let (d, eps) = single_cell(&cfg, "sigma-check")?;
            init_pool(cfg.workers);
            // product length for the explicit route; the estimator caps it
            // at 32, so the generic n_steps default would always be rejected
            let n = common.steps.unwrap_or(8);
            let rng = RngStream::new(cfg.master_seed, 0x5157);
            let chain =
                sigma_equivalence_test(d, eps, n, cfg.n_samples, &rng, ChainUpdate::SingularValues)?;
            let control =
                sigma_equivalence_test(d, eps, n, cfg.n_samples, &rng, ChainUpdate::RawDiagonal)?;
            println!("sigma-check d={d} eps={eps} n={n} m={}", cfg.n_samples);
            println!(
                "  svd chain  : top D={:.5} p={:.5}; bottom D={:.5} p={:.5}",
                chain.top.statistic, chain.top.p_value, chain.bottom.statistic, chain.bottom.p_value
            );
            println!(
                "  raw control: top D={:.5} p={:.3e}; bottom D={:.5} p={:.3e}",
                control.top.statistic,
                control.top.p_value,
                control.bottom.statistic,
                control.bottom.p_value
            );
            Ok(0)
        }
        Command::ThetaCheck { common } => {
            let cfg = load_config(&common)?;
            let (d, eps) = single_cell(&cfg, "theta-check")?;
            init_pool(cfg.workers);
            let rng = RngStream::new(cfg.master_seed, 0x7e7a);
            let rep = theta_log_moment(d, eps, cfg.n_samples, &rng)?;
            println!(
                "theta-check d={d} eps={eps} n={}: mean log^-Theta = {:.6} (se {:.2e}), quadrature bound E log^-|eps N| = {:.6}, satisfied: {}",
                rep.n_samples, rep.mean, rep.std_err, rep.quadrature_bound, rep.bound_satisfied
            );
            Ok(0)
        }
        Command::Conjecture {
            common,
            epsilon_grid,
            base,
        } => {
            let cfg = load_config(&common)?;
            let d = *cfg.dims.first().ok_or_else(|| {
                ConfigError::field("d", "conjecture needs --d or config dims")
            })?;
            let grid = if !epsilon_grid.is_empty() {
                epsilon_grid
            } else {
                cfg.epsilons.clone()
            };
            if grid.is_empty() {
                return Err(ConfigError::field(
                    "epsilon-grid",
                    "conjecture needs --epsilon-grid or config epsilons",
                )
                .into());
            }
            let mut spec = parse_base(&base, d)?;
            init_pool(cfg.workers);
            let rng = RngStream::new(cfg.master_seed, 0xc0 + d as u64);
            let report = gap_conjecture_report(&mut spec, &grid, cfg.n_steps, cfg.n_samples, &rng)?;
            let mut text = String::from(
                "epsilon,j,test_gap,test_se,baseline_gap,baseline_se,diff,combined_se,verdict\n",
            );
            for e in &report.entries {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    format_float17(e.epsilon),
                    e.j,
                    format_float17(e.test_gap),
                    format_float17(e.test_se),
                    format_float17(e.baseline_gap),
                    format_float17(e.baseline_se),
                    format_float17(e.diff),
                    format_float17(e.combined_se),
                    e.verdict.name(),
                ));
            }
            match &cfg.output_path {
                Some(path) => fs::write(path, text)?,
                None => io::stdout().lock().write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Sweep { common } => {
            if common.config.is_none() {
                return Err(ConfigError::document("sweep requires --config FILE").into());
            }
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let rows = run_sweep(&cfg);
            let all_failed = !rows.is_empty() && rows.iter().all(ResultRow::is_error);
            write_rows(&cfg, &rows)?;
            if all_failed {
                return Ok(EXIT_ALL_FAILED);
            }
            Ok(0)
        }
        Command::ResidualTable { input, output } => {
            let file = fs::File::open(&input)?;
            let rows = emit::read_csv(io::BufReader::new(file))
                .map_err(ConfigError::document)?;
            let table = residual_table(&rows).map_err(ConfigError::document)?;
            match output {
                Some(path) => {
                    let file = fs::File::create(path)?;
                    write_residual_csv(&table, io::BufWriter::new(file))?;
                }
                None => write_residual_csv(&table, io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

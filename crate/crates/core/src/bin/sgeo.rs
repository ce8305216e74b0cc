use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sgeo_core::benchfn::{by_name, suite};
use sgeo_core::geo::{run_geo, uniform_in_box, GeoConfig, TracePoint};
use sgeo_core::harness::{
    emit_results, failure_counts, run_experiment, sgeo_config_for, trial_rng, write_csv,
    write_json, write_trace, Ablation, Algorithm, ExperimentConfig, OutputFormat,
};
use sgeo_core::sgeo::run_sgeo_observed;
use sgeo_core::{Error, ObjectiveHandle};

/// Stochastic geodesic optimization benchmarks.
#[derive(Parser)]
#[command(name = "sgeo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment over functions, seeds and algorithms.
    Run(RunArgs),
    /// Dump the geodesic trace of a single GEO or SGEO run.
    Trace(TraceArgs),
    /// List the benchmark suite.
    List,
}

#[derive(Args)]
struct AblationArgs {
    /// Disable quasi-Newton refinement (200 steps per run).
    #[arg(long)]
    no_qn: bool,
    /// Start every run from a fresh uniform sample.
    #[arg(long)]
    no_jump: bool,
}

impl AblationArgs {
    fn ablation(&self) -> Ablation {
        Ablation {
            no_qn: self.no_qn,
            no_jump: self.no_jump,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated function names (see `sgeo list`).
    #[arg(long, value_delimiter = ',', required = true)]
    functions: Vec<String>,
    /// Number of seeds per function.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, value_delimiter = ',', default_value = "sgeo")]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    ablation: AblationArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceMode {
    Geo,
    Sgeo,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    function: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TraceMode::Geo)]
    mode: TraceMode,
    #[command(flatten)]
    ablation: AblationArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Trace(args) => trace(args),
        Command::List => list(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::UnknownFunction(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(args: RunArgs) -> sgeo_core::Result<()> {
    let config = ExperimentConfig {
        functions: args.functions,
        n_seeds: args.seeds,
        seed_base: args.seed_base,
        algorithms: args.algos,
        ablation: args.ablation.ablation(),
        workers: args.workers,
        output: args.out.as_ref().map(|p| p.display().to_string()),
        format: args.format,
    };
    let records = run_experiment(&config)?;
    match &args.out {
        Some(path) => emit_results(&records, config.format, path, Some(&config))?,
        None => {
            let stdout = std::io::stdout().lock();
            match config.format {
                OutputFormat::Csv => write_csv(stdout, &records)?,
                OutputFormat::Json => {
                    write_json(stdout, &records, Some(&config))?;
                    println!();
                }
            }
        }
    }
    for ((function, algorithm), failures) in failure_counts(&records) {
        eprintln!(
            "{function} {}: {failures}/{} failures",
            algorithm
                .to_possible_value()
                .map_or("?".into(), |v| v.get_name().to_string()),
            config.n_seeds
        );
    }
    Ok(())
}

fn trace(args: TraceArgs) -> sgeo_core::Result<()> {
    let spec = by_name(&args.function)?;
    let cfg = sgeo_config_for(&spec, args.ablation.ablation())?;
    let handle = ObjectiveHandle::new(&spec);
    let mut rng = trial_rng(args.seed, Algorithm::Sgeo);

    let mut rows: Vec<(String, TracePoint)> = Vec::new();
    match args.mode {
        TraceMode::Geo => {
            let mut geo = GeoConfig::new(
                spec.lower.clone(),
                spec.upper.clone(),
                cfg.steps_per_run(),
                cfg.dt_lb0,
            );
            geo.qn_interval = cfg.qn_interval;
            geo.use_qn = cfg.use_qn;
            geo.tol_f = cfg.tol_f;
            geo.qn = cfg.qn;
            let x0 = uniform_in_box(&spec.lower, &spec.upper, &mut rng);
            let result = run_geo(&handle, &geo, &x0, &mut rng)?;
            rows.extend(
                result
                    .trace()
                    .map(|p| (p.branch.as_str().to_string(), p.clone())),
            );
        }
        TraceMode::Sgeo => {
            let result = run_sgeo_observed(
                &handle,
                &spec.lower,
                &spec.upper,
                &cfg,
                &mut rng,
                |rec, geo| {
                    let prefix = if rec.phase == 0 { "run" } else { "osc-run" };
                    rows.extend(geo.trace().map(|p| {
                        (
                            format!("{prefix}{}/{}", rec.n, p.branch.as_str()),
                            p.clone(),
                        )
                    }));
                },
            )?;
            eprintln!(
                "phi_star {} after {} runs at {:?}",
                result.phi_star, result.runs_executed, result.x_star
            );
        }
    }
    let refs = rows.iter().map(|(label, p)| (label.clone(), p));
    match &args.out {
        Some(path) => {
            let file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_trace(file, spec.dimension, refs)
        }
        None => write_trace(std::io::stdout().lock(), spec.dimension, refs),
    }
}

fn list() -> sgeo_core::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<22} {:>4} {:>22}  kind", "name", "dim", "known_max")?;
    for spec in suite() {
        let kind = if spec.oscillatory {
            "oscillatory"
        } else {
            "smooth"
        };
        writeln!(
            out,
            "{:<22} {:>4} {:>22}  {kind}",
            spec.name, spec.dimension, spec.known_max
        )?;
    }
    Ok(())
}

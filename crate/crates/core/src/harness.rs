//! Seeded benchmark experiments: SGEO against budget-matched baselines,
//! success scoring, and CSV / JSON / trace output.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchfn::{by_name, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::geo::{uniform_in_box, GeoResult, TracePoint};
use crate::objective::ObjectiveHandle;
use crate::qn::{maximize_local, QnSettings};
use crate::sgeo::{default_config, run_sgeo, SgeoConfig};
use crate::vector::in_box;

/// Steps per run used by the no-QN ablation.
pub const NO_QN_STEPS: usize = 200;

pub const CSV_HEADER: [&str; 9] = [
    "function",
    "seed",
    "algorithm",
    "phi_found",
    "success",
    "value_calls",
    "gradient_calls",
    "wall_time_s",
    "runs_executed",
];

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Algorithm {
    Sgeo,
    MultistartQn,
    RandomSearch,
}

impl Algorithm {
    fn stream(self) -> u64 {
        match self {
            Algorithm::Sgeo => 0,
            Algorithm::MultistartQn => 1,
            Algorithm::RandomSearch => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ablation {
    /// Disable quasi-Newton and use [`NO_QN_STEPS`] steps per run.
    pub no_qn: bool,
    /// Start every run from a fresh uniform sample.
    pub no_jump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub function: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub phi_found: f64,
    pub success: bool,
    pub value_calls: u64,
    pub gradient_calls: u64,
    pub wall_time_s: f64,
    pub runs_executed: usize,
}

impl TrialRecord {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        self.function == other.function
            && self.seed == other.seed
            && self.algorithm == other.algorithm
            && self.phi_found.to_bits() == other.phi_found.to_bits()
            && self.success == other.success
            && self.value_calls == other.value_calls
            && self.gradient_calls == other.gradient_calls
            && self.runs_executed == other.runs_executed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    pub n_seeds: usize,
    pub seed_base: u64,
    pub algorithms: Vec<Algorithm>,
    pub ablation: Ablation,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub output: Option<String>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            functions: Vec::new(),
            n_seeds: 1,
            seed_base: 0,
            algorithms: vec![Algorithm::Sgeo],
            ablation: Ablation::default(),
            workers: 0,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Vec<BenchmarkSpec>> {
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.functions.is_empty() {
            return Err(Error::Config("no functions selected".into()));
        }
        self.functions.iter().map(|f| by_name(f)).collect()
    }
}

/// Within 5% of a nonzero maximum; for a zero maximum, at least `-0.05`.
pub fn success(phi_found: f64, known_max: f64) -> bool {
    if !phi_found.is_finite() {
        return false;
    }
    if known_max != 0.0 {
        (phi_found - known_max).abs() <= 0.05 * known_max.abs()
    } else {
        phi_found >= -0.05
    }
}

/// SGEO parameters for a suite member under the given ablation.
pub fn sgeo_config_for(spec: &BenchmarkSpec, ablation: Ablation) -> Result<SgeoConfig> {
    let mut cfg = default_config(&spec.lower, &spec.upper)?;
    if ablation.no_qn {
        cfg.use_qn = false;
        cfg.steps_override = Some(NO_QN_STEPS);
    }
    cfg.jump = !ablation.no_jump;
    Ok(cfg)
}

/// Per-trial generator: seeded by the trial seed, one stream per algorithm.
pub fn trial_rng(seed: u64, algorithm: Algorithm) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(algorithm.stream());
    rng
}

struct Outcome {
    phi: f64,
    runs: usize,
}

/// Runs one trial. Baselines require `budget`, the number of evaluations
/// (value plus gradient calls) they may spend.
pub fn run_trial(
    spec: &BenchmarkSpec,
    algorithm: Algorithm,
    seed: u64,
    ablation: Ablation,
    budget: Option<u64>,
) -> TrialRecord {
    let mut rng = trial_rng(seed, algorithm);
    let handle = match (algorithm, budget) {
        (Algorithm::Sgeo, _) | (_, None) => ObjectiveHandle::new(spec),
        (_, Some(b)) => ObjectiveHandle::new(spec).with_budget(b.max(1)),
    };
    let started = Instant::now();
    let outcome = match algorithm {
        Algorithm::Sgeo => sgeo_config_for(spec, ablation)
            .and_then(|cfg| run_sgeo(&handle, &spec.lower, &spec.upper, &cfg, &mut rng))
            .map(|r| Outcome {
                phi: r.phi_star,
                runs: r.runs_executed,
            }),
        Algorithm::MultistartQn => multistart_qn(&handle, spec, &mut rng),
        Algorithm::RandomSearch => random_search(&handle, spec, &mut rng),
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    let counts = handle.counts();
    let (phi_found, runs_executed) = match outcome {
        Ok(o) => (o.phi, o.runs),
        Err(e) => {
            log::warn!("trial {} seed {seed} {algorithm:?} failed: {e}", spec.name);
            (f64::NAN, 0)
        }
    };
    TrialRecord {
        function: spec.name.clone(),
        seed,
        algorithm,
        phi_found,
        success: success(phi_found, spec.known_max),
        value_calls: counts.value_calls,
        gradient_calls: counts.gradient_calls,
        wall_time_s,
        runs_executed,
    }
}

/// Quasi-Newton from uniform starts until the handle's budget is spent.
/// Optima that leave the box are not credited.
fn multistart_qn<R: Rng + ?Sized>(
    handle: &ObjectiveHandle<'_>,
    spec: &BenchmarkSpec,
    rng: &mut R,
) -> Result<Outcome> {
    let settings = QnSettings::default();
    let mut best = f64::NEG_INFINITY;
    let mut starts = 0;
    while !handle.exhausted() {
        let x0 = uniform_in_box(&spec.lower, &spec.upper, rng);
        starts += 1;
        let r = maximize_local(handle, &x0, &settings)?;
        let phi = if in_box(&r.x_star, &spec.lower, &spec.upper) {
            r.phi_star
        } else {
            spec.evaluate(&x0)
        };
        best = best.max(phi);
    }
    Ok(Outcome {
        phi: best,
        runs: starts,
    })
}

/// Uniform sampling of the box until the budget is spent.
fn random_search<R: Rng + ?Sized>(
    handle: &ObjectiveHandle<'_>,
    spec: &BenchmarkSpec,
    rng: &mut R,
) -> Result<Outcome> {
    let mut best = f64::NEG_INFINITY;
    let mut samples = 0;
    while !handle.exhausted() {
        let x = uniform_in_box(&spec.lower, &spec.upper, rng);
        best = best.max(handle.value(&x));
        samples += 1;
    }
    Ok(Outcome {
        phi: best,
        runs: samples,
    })
}

/// Runs every (function, seed, algorithm) trial. Baselines receive the
/// evaluation budget realized by SGEO on the same function and seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let specs = config.validate()?;
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();

    let tasks: Vec<(&BenchmarkSpec, u64)> = specs
        .iter()
        .flat_map(|s| (0..config.n_seeds as u64).map(move |i| (s, config.seed_base + i)))
        .collect();

    let run_task = |(spec, seed): &(&BenchmarkSpec, u64)| -> Vec<TrialRecord> {
        let mut out = Vec::with_capacity(algorithms.len());
        let needs_budget = algorithms.iter().any(|a| *a != Algorithm::Sgeo);
        let sgeo = (algorithms.contains(&Algorithm::Sgeo) || needs_budget)
            .then(|| run_trial(spec, Algorithm::Sgeo, *seed, config.ablation, None));
        let budget = sgeo
            .as_ref()
            .map(|r| (r.value_calls + r.gradient_calls).max(1));
        for &alg in &algorithms {
            if alg == Algorithm::Sgeo {
                out.push(sgeo.clone().expect("sgeo trial ran"));
            } else {
                out.push(run_trial(spec, alg, *seed, config.ablation, budget));
            }
        }
        out
    };

    let mut records: Vec<TrialRecord> = if config.workers == 1 {
        tasks.iter().flat_map(run_task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| tasks.par_iter().flat_map_iter(run_task).collect())
    };
    records.sort_by(|a, b| {
        (a.function.as_str(), a.seed, a.algorithm).cmp(&(b.function.as_str(), b.seed, b.algorithm))
    });
    Ok(records)
}

/// Failures per (function, algorithm).
pub fn failure_counts(records: &[TrialRecord]) -> BTreeMap<(String, Algorithm), usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.function.clone(), r.algorithm)).or_insert(0) += usize::from(!r.success);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub config: Option<ExperimentConfig>,
    pub records: Vec<TrialRecord>,
}

pub fn write_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::Io(format!("unexpected CSV header: {headers:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_json<W: Write>(
    writer: W,
    records: &[TrialRecord],
    config: Option<&ExperimentConfig>,
) -> Result<()> {
    let doc = ResultsDocument {
        config: config.cloned(),
        records: records.to_vec(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

pub fn read_json<R: Read>(reader: R) -> Result<ResultsDocument> {
    Ok(serde_json::from_reader(reader)?)
}

/// Writes `records` to `path` in the requested format.
pub fn emit_results(
    records: &[TrialRecord],
    format: OutputFormat,
    path: &Path,
    config: Option<&ExperimentConfig>,
) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(file, records),
        OutputFormat::Json => write_json(file, records, config),
    }
}

/// Writes trace rows `branch,t,x_1..x_D,phi,dt`. Each item pairs a branch label
/// with its trace point.
pub fn write_trace<'a, W, I>(writer: W, dim: usize, rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (String, &'a TracePoint)>,
{
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["branch".to_string(), "t".to_string()];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    header.push("phi".into());
    header.push("dt".into());
    w.write_record(&header)?;
    for (label, p) in rows {
        let mut row = vec![label, p.t.to_string()];
        row.extend(p.x.iter().map(|v| v.to_string()));
        row.push(p.phi.to_string());
        row.push(p.dt.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dumps both branches of one GEO run to `path`.
pub fn emit_trace(geo: &GeoResult, path: &Path) -> Result<()> {
    let dim = geo.forward.first().map_or(0, |p| p.x.len());
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trace(
        file,
        dim,
        geo.trace().map(|p| (p.branch.as_str().to_string(), p)),
    )
}

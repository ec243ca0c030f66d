//! Benchmark harness: instance × solver × repetition matrices, summary
//! tables and per-cell trace files.
//!
//! A run writes, under its output directory:
//!
//! - `summary.csv`: one row per cell, including failed cells;
//! - `manifest.json`: the full config, effective seeds and option hashes;
//! - `cells/<id>/cell.json`, `trace.csv`, `blocks.csv`: per-cell data.
//!
//! Everything except wall-clock logging is a pure function of the config.

mod named;

pub use named::{desk_config, paper_config, Scale};

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{linear_cg, nonlinear_cg, NonlinearCgOptions, Variant};
use crate::cgso::{self, SolverOptions};
use crate::error::{Error, Result};
use crate::objectives::{generate_instance, Family, GeneratedInstance, InstanceSpec, Problem};
use crate::report::{csv_to_io, SolveReport};

/// Largest relative iterate deviation accepted by the linear-CG oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub label: String,
    #[serde(flatten)]
    pub spec: InstanceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    Cgso {
        #[serde(default)]
        options: SolverOptions,
    },
    NonlinearCg {
        variant: Variant,
        #[serde(default)]
        options: NonlinearCgOptions,
    },
    /// CGSO checked iterate-by-iterate against linear CG; quadratic
    /// instances only.
    LinearCgOracle {
        #[serde(default = "default_oracle_steps")]
        steps: usize,
    },
}

fn default_oracle_steps() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub label: String,
    #[serde(flatten)]
    pub kind: SolverKind,
}

fn default_repetitions() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub name: String,
    pub instances: Vec<InstanceEntry>,
    pub solvers: Vec<SolverEntry>,
    /// Mixed into every instance seed; see [`cell_seed`].
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() || self.solvers.is_empty() {
            return Err(Error::InvalidSpec("config needs at least one instance and one solver".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidSpec("repetitions must be >= 1".into()));
        }
        for e in &self.instances {
            e.spec.validate().map_err(|err| Error::InvalidSpec(format!("instance {}: {err}", e.label)))?;
        }
        let mut labels: Vec<&str> = self.instances.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpec("instance labels must be unique".into()));
        }
        let mut labels: Vec<&str> = self.solvers.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpec("solver labels must be unique".into()));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: BenchConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Spec of `instance` at `repetition` with its effective seed.
    pub fn effective_spec(&self, instance: usize, repetition: u32) -> InstanceSpec {
        let mut spec = self.instances[instance].spec.clone();
        spec.seed = cell_seed(self.seed, spec.seed, repetition);
        spec
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one (instance, repetition): a hash of the global seed, the
/// instance's own seed and the repetition index.
pub fn cell_seed(global: u64, instance: u64, repetition: u32) -> u64 {
    mix(mix(mix(global) ^ instance) ^ u64::from(repetition))
}

/// FNV-1a, stable across platforms and toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn options_hash(kind: &SolverKind) -> String {
    let json = serde_json::to_string(kind).expect("solver options serialize");
    format!("{:016x}", fnv1a(json.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub steps: usize,
    /// `max_j ‖x_CGSO^j − x_CG^j‖ / (1 + ‖x_CG^j‖)`.
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub id: String,
    pub instance: String,
    pub solver: String,
    pub repetition: u32,
    pub spec: InstanceSpec,
    pub options_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

impl CellOutcome {
    /// The solver ran to a report without error.
    pub fn completed(&self) -> bool {
        self.report.is_some() && self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub config: BenchConfig,
    pub cells: Vec<CellOutcome>,
}

impl BenchRun {
    pub fn all_completed(&self) -> bool {
        self.cells.iter().all(CellOutcome::completed)
    }

    pub fn cell(&self, instance: &str, solver: &str, repetition: u32) -> Option<&CellOutcome> {
        self.cells.iter().find(|c| c.instance == instance && c.solver == solver && c.repetition == repetition)
    }
}

fn cell_id(instance: &str, solver: &str, repetition: u32) -> String {
    let clean = |s: &str| s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect::<String>();
    format!("{}__{}__r{repetition}", clean(instance), clean(solver))
}

fn with_tolerance(kind: &SolverKind, epsilon: f64) -> SolverKind {
    let mut kind = kind.clone();
    match &mut kind {
        SolverKind::Cgso { options } => options.tolerance = epsilon,
        SolverKind::NonlinearCg { options, .. } => options.tolerance = epsilon,
        SolverKind::LinearCgOracle { .. } => {}
    }
    kind
}

/// Runs one solver on one instance. The instance's ε overrides the
/// solver's tolerance.
pub fn run_solver(kind: &SolverKind, instance: &GeneratedInstance) -> Result<(SolveReport, Option<OracleCheck>)> {
    let epsilon = instance.spec.epsilon;
    match with_tolerance(kind, epsilon) {
        SolverKind::Cgso { options } => Ok((cgso::run(&instance.problem, &instance.x0, &options)?, None)),
        SolverKind::NonlinearCg { variant, options } => {
            Ok((nonlinear_cg(&instance.problem, &instance.x0, variant, &options)?, None))
        }
        SolverKind::LinearCgOracle { steps } => {
            let Problem::Quadratic(q) = &instance.problem else {
                return Err(Error::InvalidSpec("the linear-CG oracle needs a quadratic instance".into()));
            };
            let n = instance.x0.len();
            let steps = steps.min(n);
            let options =
                SolverOptions { tolerance: epsilon, max_iters: Some(steps), keep_iterates: true, ..Default::default() };
            let report = cgso::run(q, &instance.x0, &options)?;
            let reference = linear_cg(q.matrix(), q.rhs(), &instance.x0, epsilon, steps)?;
            let iterates = report.iterates.as_deref().unwrap_or_default();
            let compared = reference.iterates.len().min(iterates.len());
            let max_deviation = (0..compared)
                .map(|j| {
                    let x = DVector::from_column_slice(&iterates[j]);
                    let r = &reference.iterates[j];
                    (x - r).norm() / (1.0 + r.norm())
                })
                .fold(0.0, f64::max);
            let pass = iterates.len() == reference.iterates.len() && max_deviation <= ORACLE_TOLERANCE;
            Ok((report, Some(OracleCheck { steps: compared.saturating_sub(1), max_deviation, pass })))
        }
    }
}

/// Runs every cell, in parallel on `threads` workers (`None`: rayon's
/// default). Failures are recorded per cell.
pub fn run_bench(config: &BenchConfig, threads: Option<usize>) -> Result<BenchRun> {
    config.validate()?;
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        builder.build()?
    };

    let reps = config.repetitions;
    let keys: Vec<(usize, u32)> =
        (0..config.instances.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let cells = pool.install(|| {
        let instances: Vec<std::result::Result<GeneratedInstance, String>> = keys
            .par_iter()
            .map(|&(i, r)| generate_instance(&config.effective_spec(i, r)).map_err(|e| e.to_string()))
            .collect();
        let jobs: Vec<(usize, usize)> =
            (0..keys.len()).flat_map(|k| (0..config.solvers.len()).map(move |s| (k, s))).collect();
        jobs.par_iter()
            .map(|&(k, s)| {
                let (i, rep) = keys[k];
                let entry = &config.instances[i];
                let solver = &config.solvers[s];
                let mut outcome = CellOutcome {
                    id: cell_id(&entry.label, &solver.label, rep),
                    instance: entry.label.clone(),
                    solver: solver.label.clone(),
                    repetition: rep,
                    spec: config.effective_spec(i, rep),
                    options_hash: options_hash(&solver.kind),
                    report: None,
                    error: None,
                    oracle: None,
                };
                let started = std::time::Instant::now();
                let result = match &instances[k] {
                    Ok(inst) => run_solver(&solver.kind, inst).map_err(|e| e.to_string()),
                    Err(e) => Err(format!("instance generation failed: {e}")),
                };
                match result {
                    Ok((report, oracle)) => {
                        log::info!(
                            "{}: {} after {} iterations ({:.2?})",
                            outcome.id,
                            report.termination.as_str(),
                            report.iterations,
                            started.elapsed()
                        );
                        outcome.report = Some(report);
                        outcome.oracle = oracle;
                    }
                    Err(e) => {
                        log::warn!("{}: {e}", outcome.id);
                        outcome.error = Some(e);
                    }
                }
                outcome
            })
            .collect::<Vec<_>>()
    });
    Ok(BenchRun { config: config.clone(), cells })
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    name: String,
    version: String,
    config: BenchConfig,
    cells: Vec<ManifestCell>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestCell {
    id: String,
    instance: String,
    solver: String,
    repetition: u32,
    seed: u64,
    options_hash: String,
}

/// One summary row, mirroring the comparison table's fields.
#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    instance: &'a str,
    family: Family,
    m: usize,
    n: usize,
    m_f: Option<f64>,
    d: Option<u32>,
    ds: f64,
    epsilon: f64,
    seed: u64,
    repetition: u32,
    solver: &'a str,
    status: &'a str,
    termination: &'a str,
    iterations: Option<usize>,
    line_search: Option<usize>,
    newton: Option<usize>,
    ellipsoid: Option<usize>,
    corrections: Option<usize>,
    max_subspace_dim: Option<usize>,
    rho_max: Option<f64>,
    value: Option<f64>,
    grad_norm: Option<f64>,
    oracle: Option<&'a str>,
    error: Option<&'a str>,
}

fn summary_row(cell: &CellOutcome) -> SummaryRow<'_> {
    let r = cell.report.as_ref();
    let is_cgso = r.is_some_and(|r| r.solver == "cgso");
    SummaryRow {
        instance: &cell.instance,
        family: cell.spec.family,
        m: cell.spec.m,
        n: cell.spec.n,
        m_f: cell.spec.m_f,
        d: cell.spec.d,
        ds: cell.spec.ds,
        epsilon: cell.spec.epsilon,
        seed: cell.spec.seed,
        repetition: cell.repetition,
        solver: &cell.solver,
        status: if cell.completed() { "ok" } else { "error" },
        termination: r.map_or("", |r| r.termination.as_str()),
        iterations: r.map(|r| r.iterations),
        line_search: r.filter(|_| !is_cgso).map(|r| r.line_search_iterations),
        newton: r.filter(|_| is_cgso).map(|r| r.newton_iterations),
        ellipsoid: r.filter(|_| is_cgso).map(|r| r.ellipsoid_iterations),
        corrections: r.filter(|_| is_cgso).map(|r| r.correction_blocks),
        max_subspace_dim: r.map(|r| r.max_subspace_dim),
        rho_max: r.and_then(SolveReport::rho_max),
        value: r.map(|r| r.value),
        grad_norm: r.map(|r| r.grad_norm),
        oracle: cell.oracle.as_ref().map(|o| if o.pass { "pass" } else { "fail" }),
        error: cell.error.as_deref(),
    }
}

/// Writes `summary.csv` for `cells` into `path`.
pub fn write_summary(cells: &[CellOutcome], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_to_io(path, e))?;
    for cell in cells {
        w.serialize(summary_row(cell))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Writes the summary, manifest and per-cell files of `run` under `out`.
pub fn emit_report(run: &BenchRun, out: &Path) -> Result<()> {
    if run.cells.is_empty() {
        return Err(Error::Contract("nothing to report: the run has no cells".into()));
    }
    let cells_dir = out.join("cells");
    create_dir(&cells_dir)?;
    for cell in &run.cells {
        let dir = cells_dir.join(&cell.id);
        create_dir(&dir)?;
        write_json(cell, &dir.join("cell.json"))?;
        if let Some(report) = &cell.report {
            report.write_trace_csv(&dir.join("trace.csv"))?;
            report.write_blocks_csv(&dir.join("blocks.csv"))?;
        }
    }
    let manifest = Manifest {
        name: run.config.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: run.config.clone(),
        cells: run
            .cells
            .iter()
            .map(|c| ManifestCell {
                id: c.id.clone(),
                instance: c.instance.clone(),
                solver: c.solver.clone(),
                repetition: c.repetition,
                seed: c.spec.seed,
                options_hash: c.options_hash.clone(),
            })
            .collect(),
    };
    write_json(&manifest, &out.join("manifest.json"))?;
    write_summary(&run.cells, &out.join("summary.csv"))
}

/// Reloads a run written by [`emit_report`].
pub fn load_run(out: &Path) -> Result<BenchRun> {
    let manifest: Manifest = read_json(&out.join("manifest.json"))?;
    let cells = manifest
        .cells
        .iter()
        .map(|c| read_json::<CellOutcome>(&out.join("cells").join(&c.id).join("cell.json")))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchRun { config: manifest.config, cells })
}

/// Re-renders `summary.csv` from the per-cell files under `out`.
pub fn rerender_summary(out: &Path) -> Result<BenchRun> {
    let run = load_run(out)?;
    write_summary(&run.cells, &out.join("summary.csv"))?;
    Ok(run)
}

/// Writes an instance file per (instance, repetition) under `out/instances`.
pub fn write_instances(config: &BenchConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let dir = out.join("instances");
    create_dir(&dir)?;
    let mut written = Vec::new();
    for (i, entry) in config.instances.iter().enumerate() {
        for rep in 0..config.repetitions {
            let inst = generate_instance(&config.effective_spec(i, rep))?;
            let path = dir.join(format!("{}__r{rep}.json", entry.label));
            crate::objectives::InstanceFile::from_instance(&inst).write(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Fixed-width text table of the summary, for terminals.
pub fn render_table(run: &BenchRun) -> String {
    let mut out = format!(
        "{:<10} {:>3} {:<10} {:<16} {:>7} {:>7} {:>7} {:>7} {:>5} {:>8}\n",
        "instance", "rep", "solver", "termination", "it", "ls", "newton", "ellips", "corr", "rho_max"
    );
    let opt = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
    for cell in &run.cells {
        let row = summary_row(cell);
        out.push_str(&format!(
            "{:<10} {:>3} {:<10} {:<16} {:>7} {:>7} {:>7} {:>7} {:>5} {:>8}\n",
            row.instance,
            row.repetition,
            row.solver,
            if cell.completed() { row.termination } else { "error" },
            opt(row.iterations),
            opt(row.line_search),
            opt(row.newton),
            opt(row.ellipsoid),
            opt(row.corrections),
            row.rho_max.map_or_else(String::new, |r| format!("{r:.4}")),
        ));
    }
    out
}

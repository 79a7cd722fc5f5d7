//! Reproducible experiment runs.
//!
//! A run is fully determined by its [`ExperimentConfig`]: trial `i` draws
//! from `RngSpec::new(seed, i)`, so results do not depend on the thread
//! count or scheduling. Each run writes
//!
//! * `records.csv`: one row per trial (or per table row for the
//!   deterministic tasks), byte-identical on replay;
//! * `timings.csv`: wallclock seconds per row, kept apart so the records
//!   stay reproducible;
//! * `summary.json`: success frequency with a 95% Wilson interval;
//! * `manifest.json`: the config, seed and build id needed to replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{comparable_pairs, NeighborhoodCensus};
use crate::error::{Error, Result};
use crate::expansion::{is_expander_exact, is_expander_sampled, CertificationMethod, SampledOptions};
use crate::hamilton::{exact_hamiltonicity, staged_hamilton_with_graph, verify_certificate, EXACT_HAMILTON_MAX_N};
use crate::matching::{run_incremental_process, run_two_stage};
use crate::model::{build_graph, sample_choice_sequence, RngSpec, DEFAULT_ENUMERATION_CAP};
use crate::thresholds::{solve_threshold, Which};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";

/// `"<crate version> (<git describe>)"`.
pub fn build_id() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("UAG_BUILD_ID"))
}

/// 97.5% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Two-sided 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum MatchingMode {
    Incremental { k: u32 },
    TwoStage { k1: u32, k2: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum Task {
    Generate {
        n: u32,
        k: u32,
        /// Directory for per-trial choice-sequence and edge-list files.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        emit_dir: Option<PathBuf>,
    },
    CouplingVerify {
        n: u32,
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subset_size: Option<u32>,
    },
    ExpansionCheck {
        n: u32,
        k: u32,
        alpha: f64,
        beta: f64,
        mode: CheckMode,
        /// Random subsets per graph in sampled mode.
        samples: u64,
    },
    SolveThresholds {
        k_min: u32,
        k_max: u32,
        /// `None` solves both families.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        which: Option<Which>,
        tol: f64,
    },
    MatchingExp {
        n: u32,
        #[serde(flatten)]
        mode: MatchingMode,
    },
    HamiltonExp {
        n: u32,
        stages: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        emit_certificates: Option<PathBuf>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Generate { .. } => "generate",
            Task::CouplingVerify { .. } => "coupling-verify",
            Task::ExpansionCheck { .. } => "expansion-check",
            Task::SolveThresholds { .. } => "solve-thresholds",
            Task::MatchingExp { .. } => "matching-exp",
            Task::HamiltonExp { .. } => "hamilton-exp",
        }
    }

    /// Tasks whose rows are a deterministic table rather than random trials.
    pub fn is_table(&self) -> bool {
        matches!(self, Task::CouplingVerify { .. } | Task::SolveThresholds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u32,
    pub task: Task,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    pub fn new(task: Task, trials: u32, seed: u64) -> Self {
        Self { seed, trials, task }
    }

    /// Rejects configs that could not run, before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let positive = |name: &str, v: u32| if v == 0 { Err(invalid(format!("{name} must be positive"))) } else { Ok(()) };
        match &self.task {
            Task::Generate { n, k, .. } => {
                positive("n", *n)?;
                positive("k", *k)
            }
            Task::CouplingVerify { n, k, m, subset_size } => {
                positive("n", *n)?;
                positive("k", *k)?;
                if let Some(s) = subset_size {
                    if *s == 0 || s >= n {
                        return Err(invalid("subset size must lie in [1, n - 1]"));
                    }
                }
                if let Some(m) = m {
                    if *m == 0 || m > n {
                        return Err(invalid("m must lie in [1, n]"));
                    }
                }
                Ok(())
            }
            Task::ExpansionCheck { n, k, alpha, beta, mode, samples } => {
                positive("n", *n)?;
                positive("k", *k)?;
                if !(0.0..1.0).contains(alpha) || *alpha == 0.0 || beta.is_nan() || *beta <= 0.0 {
                    return Err(invalid("need 0 < alpha < 1 and beta > 0"));
                }
                if *mode == CheckMode::Sampled && *samples == 0 {
                    return Err(invalid("sampled mode needs samples >= 1"));
                }
                Ok(())
            }
            Task::SolveThresholds { k_min, k_max, which, tol } => {
                if k_min > k_max {
                    return Err(invalid("k-min exceeds k-max"));
                }
                if tol.is_nan() || *tol <= 0.0 {
                    return Err(invalid("tolerance must be positive"));
                }
                if let Some(w) = which {
                    if *k_min < w.min_k() {
                        return Err(invalid(format!("{w:?} needs k >= {}", w.min_k())));
                    }
                }
                Ok(())
            }
            Task::MatchingExp { n, mode } => {
                positive("n", *n)?;
                match mode {
                    MatchingMode::Incremental { k } => positive("k", *k),
                    MatchingMode::TwoStage { k1, k2 } => {
                        positive("k1", *k1)?;
                        positive("k2", *k2)
                    }
                }
            }
            Task::HamiltonExp { n, stages, .. } => {
                positive("n", *n)?;
                if stages.is_empty() || stages.contains(&0) {
                    return Err(invalid("stages must be a nonempty list of positive counts"));
                }
                Ok(())
            }
        }
    }
}

/// A CSV table with string cells.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    /// Rows as JSON objects; numeric and boolean cells become typed values.
    pub fn to_json(&self) -> serde_json::Value {
        let typed = |cell: &str| -> serde_json::Value {
            if let Ok(i) = cell.parse::<i64>() {
                i.into()
            } else if let Ok(b) = cell.parse::<bool>() {
                b.into()
            } else if let Some(f) = cell.parse::<f64>().ok().filter(|f| f.is_finite()) {
                f.into()
            } else {
                cell.into()
            }
        };
        self.rows
            .iter()
            .map(|row| self.headers.iter().zip(row).map(|(h, c)| (h.clone(), typed(c))).collect::<serde_json::Map<_, _>>().into())
            .collect::<Vec<serde_json::Value>>()
            .into()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub schema_version: u32,
    pub task: String,
    pub records: u64,
    pub successes: u64,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Task-specific aggregates (means over records unless named otherwise).
    pub metrics: BTreeMap<String, f64>,
    pub wallclock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifestKind {
    Run { config: ExperimentConfig },
    Sweep { template: ExperimentConfig, axis: SweepAxis },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub build_id: String,
    pub seed: u64,
    #[serde(flatten)]
    pub kind: ManifestKind,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    /// Where to write the output files; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Table,
    pub timings: Vec<f64>,
    pub summary: SummaryStats,
    pub manifest: Manifest,
}

/// One row of output plus what the summary needs from it.
#[derive(Debug, Clone)]
struct RowOutcome {
    row: Vec<String>,
    success: bool,
    metrics: Vec<(&'static str, f64)>,
    seconds: f64,
    certificate: Option<String>,
}

fn b(v: bool) -> String {
    v.to_string()
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(invalid("threads must be positive"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn headers(task: &Task) -> Table {
    match task {
        Task::Generate { .. } => Table::new(&["trial", "n", "k", "edges", "min_degree", "max_degree", "connected"]),
        Task::CouplingVerify { .. } => {
            Table::new(&["n", "k", "size", "m", "x", "y", "count_x", "count_y", "total", "dominates"])
        }
        Task::ExpansionCheck { .. } => Table::new(&[
            "trial", "n", "k", "alpha", "beta", "method", "pass", "witness_size", "witness", "checked",
        ]),
        Task::SolveThresholds { .. } => {
            Table::new(&["which", "k", "root", "lower_3dp", "bracket_low", "bracket_high", "tolerance"])
        }
        Task::MatchingExp { .. } => Table::new(&[
            "trial",
            "n",
            "k",
            "k1",
            "k2",
            "final_kappa",
            "steps",
            "perfect",
            "first_stage_kappa",
            "up_steps",
            "conditional_steps",
        ]),
        Task::HamiltonExp { .. } => Table::new(&[
            "trial",
            "n",
            "stages",
            "certified",
            "final_path_len",
            "stage_fractions",
            "exact_agrees",
        ]),
    }
}

fn trial(config: &ExperimentConfig, i: u32) -> Result<RowOutcome> {
    let start = Instant::now();
    let spec = RngSpec::new(config.seed, u64::from(i));
    let mut metrics = Vec::new();
    let mut certificate = None;
    let (row, success) = match &config.task {
        Task::Generate { n, k, emit_dir } => {
            let z = sample_choice_sequence(*n, *k, &spec)?;
            let g = build_graph(&z);
            if let Some(dir) = emit_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("trial-{i}.choices")), z.to_text())?;
                fs::write(dir.join(format!("trial-{i}.edges")), g.to_edge_list_text())?;
            }
            let degrees = g.vertices().map(|v| g.degree(v));
            let (lo, hi) = degrees.fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));
            let connected = g.is_connected();
            metrics.push(("edges", g.edge_count() as f64));
            let row = vec![i.to_string(), n.to_string(), k.to_string(), g.edge_count().to_string(), lo.to_string(), hi.to_string(), b(connected)];
            (row, connected)
        }
        Task::ExpansionCheck { n, k, alpha, beta, mode, samples } => {
            let g = build_graph(&sample_choice_sequence(*n, *k, &spec)?);
            let cert = match mode {
                CheckMode::Exact => is_expander_exact(&g, *alpha, *beta)?,
                CheckMode::Sampled => is_expander_sampled(
                    &g,
                    *alpha,
                    *beta,
                    &SampledOptions { trials: *samples, rng: spec.derive(1), k_hint: Some(*k) },
                )?,
            };
            let method = match cert.method {
                CertificationMethod::Exact => "exact",
                CertificationMethod::Sampled => "sampled",
            };
            let (ws, w) = cert.witness.as_ref().map_or((0, String::new()), |w| (w.len(), w.to_string()));
            let row = vec![
                i.to_string(),
                n.to_string(),
                k.to_string(),
                alpha.to_string(),
                beta.to_string(),
                method.to_string(),
                b(cert.pass),
                ws.to_string(),
                w,
                cert.checked.to_string(),
            ];
            (row, cert.pass)
        }
        Task::MatchingExp { n, mode } => match *mode {
            MatchingMode::Incremental { k } => {
                let tr = run_incremental_process(*n, k, &spec)?;
                let (steps, ups) = tr.conditional_up_steps();
                let kappa = tr.final_kappa();
                let perfect = kappa <= 1;
                metrics.push(("final_kappa", f64::from(kappa)));
                metrics.push(("kappa_le_10", f64::from(u8::from(kappa <= 10))));
                metrics.push(("up_steps", ups as f64));
                metrics.push(("conditional_steps", steps as f64));
                let row = vec![
                    i.to_string(),
                    n.to_string(),
                    k.to_string(),
                    k.to_string(),
                    "0".into(),
                    kappa.to_string(),
                    (n - 1).to_string(),
                    b(perfect),
                    kappa.to_string(),
                    ups.to_string(),
                    steps.to_string(),
                ];
                (row, perfect)
            }
            MatchingMode::TwoStage { k1, k2 } => {
                let out = run_two_stage(*n, k1, k2, &spec)?;
                let (steps, ups) = out.first.conditional_up_steps();
                let kappa = out.augmentation.matching.isolated_count() as u32;
                let perfect = out.perfect();
                metrics.push(("final_kappa", f64::from(kappa)));
                metrics.push(("first_stage_kappa", f64::from(out.first.final_kappa())));
                metrics.push(("exposures", out.augmentation.steps.len() as f64));
                let row = vec![
                    i.to_string(),
                    n.to_string(),
                    (k1 + k2).to_string(),
                    k1.to_string(),
                    k2.to_string(),
                    kappa.to_string(),
                    out.augmentation.steps.len().to_string(),
                    b(perfect),
                    out.first.final_kappa().to_string(),
                    ups.to_string(),
                    steps.to_string(),
                ];
                (row, perfect)
            }
        },
        Task::HamiltonExp { n, stages, .. } => {
            let (out, g) = staged_hamilton_with_graph(*n, stages, &spec)?;
            let certified = out.success();
            let agrees = match &out.certificate {
                Some(c) => {
                    if !verify_certificate(&g, c) {
                        return Err(Error::Precondition(format!("trial {i}: certificate failed verification")));
                    }
                    certificate = Some(c.to_line());
                    if *n <= EXACT_HAMILTON_MAX_N {
                        b(exact_hamiltonicity(&g)?)
                    } else {
                        String::new()
                    }
                }
                None => String::new(),
            };
            for (s, f) in out.stage_fractions.iter().enumerate() {
                metrics.push((STAGE_KEYS.get(s).copied().unwrap_or("stage_later_fraction"), *f));
            }
            metrics.push(("final_fraction", f64::from(out.final_path_len) / f64::from(*n)));
            let fractions = out.stage_fractions.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            let stage_text = stages.iter().map(u32::to_string).collect::<Vec<_>>().join("+");
            let row = vec![
                i.to_string(),
                n.to_string(),
                stage_text,
                b(certified),
                out.final_path_len.to_string(),
                fractions,
                agrees,
            ];
            (row, certified)
        }
        Task::CouplingVerify { .. } | Task::SolveThresholds { .. } => unreachable!("table tasks have no trials"),
    };
    Ok(RowOutcome { row, success, metrics, seconds: start.elapsed().as_secs_f64(), certificate })
}

const STAGE_KEYS: [&str; 8] = [
    "stage_0_fraction",
    "stage_1_fraction",
    "stage_2_fraction",
    "stage_3_fraction",
    "stage_4_fraction",
    "stage_5_fraction",
    "stage_6_fraction",
    "stage_7_fraction",
];

fn table_rows(config: &ExperimentConfig) -> Result<Vec<RowOutcome>> {
    let start = Instant::now();
    let mut out = Vec::new();
    match &config.task {
        Task::CouplingVerify { n, k, m, subset_size } => {
            let census = NeighborhoodCensus::compute(*n, *k, DEFAULT_ENUMERATION_CAP)?;
            let sizes: Vec<u32> = subset_size.map_or_else(|| (1..*n).collect(), |s| vec![s]);
            let ms: Vec<u32> = m.map_or_else(|| (1..=*n).collect(), |m| vec![m]);
            for size in sizes {
                for (x, y) in comparable_pairs(*n, size as usize) {
                    for &m in &ms {
                        let r = census.dominance(&x, &y, m)?;
                        out.push(RowOutcome {
                            row: vec![
                                n.to_string(),
                                k.to_string(),
                                size.to_string(),
                                m.to_string(),
                                x.to_string(),
                                y.to_string(),
                                r.count_x.to_string(),
                                r.count_y.to_string(),
                                r.total.to_string(),
                                b(r.dominates),
                            ],
                            success: r.dominates,
                            metrics: Vec::new(),
                            seconds: 0.0,
                            certificate: None,
                        });
                    }
                }
            }
        }
        Task::SolveThresholds { k_min, k_max, which, tol } => {
            let families: Vec<Which> = which.map_or_else(|| vec![Which::Alpha1, Which::Alpha2], |w| vec![w]);
            for w in families {
                for k in (*k_min).max(w.min_k())..=*k_max {
                    let s = solve_threshold(k, w, *tol)?;
                    let name = match w {
                        Which::Alpha1 => "alpha1",
                        Which::Alpha2 => "alpha2",
                    };
                    out.push(RowOutcome {
                        row: vec![
                            name.to_string(),
                            k.to_string(),
                            s.root.to_string(),
                            format!("{:.3}", (s.root * 1000.0).floor() / 1000.0),
                            s.bracket.0.to_string(),
                            s.bracket.1.to_string(),
                            tol.to_string(),
                        ],
                        success: true,
                        metrics: Vec::new(),
                        seconds: 0.0,
                        certificate: None,
                    });
                }
            }
        }
        _ => unreachable!("trial tasks are not tables"),
    }
    if let Some(first) = out.first_mut() {
        first.seconds = start.elapsed().as_secs_f64();
    }
    Ok(out)
}

fn summarize(task: &Task, rows: &[RowOutcome], seconds: f64) -> SummaryStats {
    let records = rows.len() as u64;
    let successes = rows.iter().filter(|r| r.success).count() as u64;
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for r in rows {
        for (key, v) in &r.metrics {
            *sums.entry((*key).to_string()).or_default() += v;
        }
    }
    let mut metrics: BTreeMap<String, f64> = sums.iter().map(|(k, v)| (k.clone(), v / records.max(1) as f64)).collect();
    if let (Some(up), Some(steps)) = (sums.get("up_steps"), sums.get("conditional_steps")) {
        if *steps > 0.0 {
            metrics.insert("up_step_frequency_pooled".into(), up / steps);
        }
    }
    let (lo, hi) = wilson_interval(successes, records);
    SummaryStats {
        schema_version: SCHEMA_VERSION,
        task: task.name().to_string(),
        records,
        successes,
        frequency: if records == 0 { 0.0 } else { successes as f64 / records as f64 },
        wilson_low: lo,
        wilson_high: hi,
        metrics,
        wallclock_seconds: seconds,
    }
}

fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<(Table, Vec<RowOutcome>, SummaryStats)> {
    config.validate()?;
    let start = Instant::now();
    let rows = if config.task.is_table() {
        table_rows(config)?
    } else {
        with_pool(threads, || (0..config.trials).into_par_iter().map(|i| trial(config, i)).collect::<Result<Vec<_>>>())??
    };
    let mut table = headers(&config.task);
    table.rows = rows.iter().map(|r| r.row.clone()).collect();
    let summary = summarize(&config.task, &rows, start.elapsed().as_secs_f64());
    Ok((table, rows, summary))
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Output { path: dir.display().to_string(), written: "nothing".into(), source })?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        let full = if path.is_absolute() { path.to_path_buf() } else { self.dir.join(path) };
        fs::write(&full, bytes).map_err(|source| Error::Output {
            path: full.display().to_string(),
            written: if self.written.is_empty() { "nothing".into() } else { self.written.join(", ") },
            source,
        })?;
        self.written.push(full.display().to_string());
        Ok(())
    }
}

fn timings_csv(timings: &[f64]) -> Result<Vec<u8>> {
    let mut t = Table::new(&["row", "seconds"]);
    t.rows = timings.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.to_string()]).collect();
    t.to_csv_bytes()
}

/// Runs one experiment and, with an output directory, persists it.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let (records, rows, summary) = execute(config, opts.threads)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        build_id: build_id(),
        seed: config.seed,
        kind: ManifestKind::Run { config: config.clone() },
    };
    let timings: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    if let Some(dir) = &opts.out_dir {
        let mut w = Writer::new(dir)?;
        w.write(Path::new(RECORDS_FILE), &records.to_csv_bytes()?)?;
        w.write(Path::new(TIMINGS_FILE), &timings_csv(&timings)?)?;
        w.write(Path::new(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?.as_bytes())?;
        w.write(Path::new(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        if let Task::HamiltonExp { emit_certificates: Some(path), .. } = &config.task {
            let lines: String = rows.iter().filter_map(|r| r.certificate.as_ref()).map(|c| format!("{c}\n")).collect();
            w.write(path, lines.as_bytes())?;
        }
    }
    Ok(RunOutput { records, timings, summary, manifest })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    N,
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::K => "k",
        }
    }

    /// Axis column name in sweep tables; distinct from the task's own columns.
    pub fn column(self) -> String {
        format!("sweep_{}", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<u32>,
}

/// Stages for a total of `k` choices per vertex: `[k]` up to 10, otherwise
/// a 10-choice base plus 1-choice boosts.
pub fn hamilton_stages_for(k: u32) -> Vec<u32> {
    if k <= 10 {
        vec![k]
    } else {
        std::iter::once(10).chain(std::iter::repeat_n(1, (k - 10) as usize)).collect()
    }
}

/// `template` with the swept parameter set to `value`.
pub fn with_param(template: &ExperimentConfig, param: SweepParam, value: u32) -> Result<ExperimentConfig> {
    let mut c = template.clone();
    let unsupported = || invalid(format!("{} cannot be swept over {}", template.task.name(), param.name()));
    match (&mut c.task, param) {
        (Task::Generate { n, .. }, SweepParam::N)
        | (Task::CouplingVerify { n, .. }, SweepParam::N)
        | (Task::ExpansionCheck { n, .. }, SweepParam::N)
        | (Task::MatchingExp { n, .. }, SweepParam::N)
        | (Task::HamiltonExp { n, .. }, SweepParam::N) => *n = value,
        (Task::Generate { k, .. }, SweepParam::K)
        | (Task::CouplingVerify { k, .. }, SweepParam::K)
        | (Task::ExpansionCheck { k, .. }, SweepParam::K) => *k = value,
        (Task::SolveThresholds { k_min, k_max, .. }, SweepParam::K) => {
            *k_min = value;
            *k_max = value;
        }
        (Task::MatchingExp { mode, .. }, SweepParam::K) => match mode {
            MatchingMode::Incremental { k } => *k = value,
            MatchingMode::TwoStage { k1, k2 } => {
                if value <= *k2 {
                    return Err(invalid(format!("total k = {value} leaves no first stage next to k2 = {k2}")));
                }
                *k1 = value - *k2;
            }
        },
        (Task::HamiltonExp { stages, .. }, SweepParam::K) => *stages = hamilton_stages_for(value),
        (Task::SolveThresholds { .. }, SweepParam::N) => return Err(unsupported()),
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Records of every value with the axis value prepended.
    pub records: Table,
    pub summaries: Vec<(u32, SummaryStats)>,
    pub manifest: Manifest,
}

impl SweepOutput {
    pub fn summary_table(&self, param: SweepParam) -> Table {
        let column = param.column();
        let mut t = Table::new(&[&column, "records", "successes", "frequency", "wilson_low", "wilson_high"]);
        t.rows = self
            .summaries
            .iter()
            .map(|(v, s)| {
                vec![
                    v.to_string(),
                    s.records.to_string(),
                    s.successes.to_string(),
                    s.frequency.to_string(),
                    s.wilson_low.to_string(),
                    s.wilson_high.to_string(),
                ]
            })
            .collect();
        t
    }
}

/// Runs `template` once per axis value and concatenates the records.
pub fn sweep(template: &ExperimentConfig, axis: &SweepAxis, opts: &RunOptions) -> Result<SweepOutput> {
    if axis.values.is_empty() {
        return Err(invalid("sweep axis has no values"));
    }
    let configs = axis.values.iter().map(|&v| with_param(template, axis.param, v)).collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    let mut records = Table::default();
    let mut summaries = Vec::new();
    let mut timings = Vec::new();
    for (&v, c) in axis.values.iter().zip(&configs) {
        let (table, rows, summary) = execute(c, opts.threads)?;
        if records.headers.is_empty() {
            records.headers = std::iter::once(axis.param.column()).chain(table.headers).collect();
        }
        records.rows.extend(table.rows.into_iter().map(|r| std::iter::once(v.to_string()).chain(r).collect()));
        timings.extend(rows.iter().map(|r| r.seconds));
        summaries.push((v, summary));
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        build_id: build_id(),
        seed: template.seed,
        kind: ManifestKind::Sweep { template: template.clone(), axis: axis.clone() },
    };
    let out = SweepOutput { records, summaries, manifest };
    if let Some(dir) = &opts.out_dir {
        let mut w = Writer::new(dir)?;
        w.write(Path::new(RECORDS_FILE), &out.records.to_csv_bytes()?)?;
        w.write(Path::new(TIMINGS_FILE), &timings_csv(&timings)?)?;
        w.write(Path::new(SWEEP_SUMMARY_FILE), &out.summary_table(axis.param).to_csv_bytes()?)?;
        let summaries: Vec<&SummaryStats> = out.summaries.iter().map(|(_, s)| s).collect();
        w.write(Path::new(SUMMARY_FILE), serde_json::to_string_pretty(&summaries)?.as_bytes())?;
        w.write(Path::new(MANIFEST_FILE), serde_json::to_string_pretty(&out.manifest)?.as_bytes())?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub records: Table,
    /// Whether the manifest was written by this very build.
    pub same_build: bool,
}

/// Re-executes the run or sweep described by `manifest`.
pub fn replay(manifest: &Manifest, opts: &RunOptions) -> Result<ReplayOutput> {
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!("manifest schema {} is not {SCHEMA_VERSION}", manifest.schema_version)));
    }
    let records = match &manifest.kind {
        ManifestKind::Run { config } => run(config, opts)?.records,
        ManifestKind::Sweep { template, axis } => sweep(template, axis, opts)?.records,
    };
    Ok(ReplayOutput { records, same_build: manifest.build_id == build_id() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matching_config(trials: u32) -> ExperimentConfig {
        ExperimentConfig::new(Task::MatchingExp { n: 60, mode: MatchingMode::TwoStage { k1: 2, k2: 1 } }, trials, 7)
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(1, 1);
        assert!(lo > 0.2 && lo < 0.21 && hi == 1.0);
        let (lo, hi) = wilson_interval(0, 1);
        assert!(lo == 0.0 && hi > 0.79 && hi < 0.8);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn config_round_trip() {
        let configs = vec![
            matching_config(3),
            ExperimentConfig::new(Task::MatchingExp { n: 10, mode: MatchingMode::Incremental { k: 4 } }, 1, 0),
            ExperimentConfig::new(
                Task::ExpansionCheck { n: 12, k: 3, alpha: 0.1, beta: 2.0, mode: CheckMode::Exact, samples: 10 },
                2,
                1,
            ),
            ExperimentConfig::new(Task::SolveThresholds { k_min: 4, k_max: 13, which: Some(Which::Alpha2), tol: 1e-12 }, 1, 0),
            ExperimentConfig::new(Task::HamiltonExp { n: 30, stages: vec![10, 1, 1, 1], emit_certificates: None }, 1, 9),
            ExperimentConfig::new(Task::CouplingVerify { n: 5, k: 1, m: None, subset_size: Some(2) }, 1, 0),
            ExperimentConfig::new(Task::Generate { n: 5, k: 2, emit_dir: None }, 1, 0),
        ];
        for c in configs {
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(matching_config(0).validate().is_err());
        let bad = ExperimentConfig::new(Task::HamiltonExp { n: 10, stages: vec![], emit_certificates: None }, 1, 0);
        assert!(run(&bad, &RunOptions::default()).is_err());
    }

    #[test]
    fn thread_count_does_not_change_records() {
        let c = matching_config(6);
        let one = run(&c, &RunOptions { threads: Some(1), out_dir: None }).unwrap();
        let three = run(&c, &RunOptions { threads: Some(3), out_dir: None }).unwrap();
        assert_eq!(one.records, three.records);
        assert_eq!(one.summary.records, 6);
    }

    #[test]
    fn sweep_mapping() {
        assert_eq!(hamilton_stages_for(13), vec![10, 1, 1, 1]);
        assert_eq!(hamilton_stages_for(4), vec![4]);
        let t = ExperimentConfig::new(Task::SolveThresholds { k_min: 4, k_max: 4, which: None, tol: 1e-12 }, 1, 0);
        assert!(with_param(&t, SweepParam::N, 10).is_err());
        let c = with_param(&matching_config(1), SweepParam::K, 5).unwrap();
        assert_eq!(c.task, Task::MatchingExp { n: 60, mode: MatchingMode::TwoStage { k1: 4, k2: 1 } });
    }

    #[test]
    fn threshold_table_layout() {
        let c = ExperimentConfig::new(Task::SolveThresholds { k_min: 4, k_max: 13, which: Some(Which::Alpha2), tol: 1e-12 }, 1, 0);
        let out = run(&c, &RunOptions::default()).unwrap();
        assert_eq!(out.records.rows.len(), 10);
        assert_eq!(out.records.rows[6][3], "0.221");
    }
}

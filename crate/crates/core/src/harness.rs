//! Experiment harness: dataset ingestion, method configuration, seeded
//! sweeps over (method, sample size, trial), and summary metrics.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baseline::{
    grid_stratify, proportional_allocation, srs_estimate, ssn_estimate, stratified_estimate,
};
use crate::core::{exact_count, Budget, DataPoint, Dataset, Estimate};
use crate::error::{Error, Result};
use crate::lss::{lss_estimate, AllocationMode, LssConfig, Optimizer};
use crate::lws::lws_estimate;
use crate::predicates::{CountingOracle, Predicate};
use crate::quantification::{qlac_estimate, qlcc_estimate, qlsc_estimate, QuantifyConfig};
use crate::rng::{hash_str, stream_seed};
use crate::scorers::ScorerSpec;
use crate::synth::{gaussian_noise_table, zipf_noise_table, NoiseSpec, PointKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the universe comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Generated { kind: PointKind, n: usize, seed: u64 },
    Csv { path: String },
}

/// Predicate configuration; skyband supports the noise-mixing protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "lowercase")]
pub enum PredicateConfig {
    Skyband {
        k: usize,
        #[serde(default)]
        alpha_mix: f64,
        #[serde(default)]
        noise: Option<NoiseSpec>,
    },
    Neighbors {
        k: usize,
        d: f64,
        #[serde(default)]
        include_self: bool,
    },
}

/// Scorer configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerConfig {
    Knn {
        #[serde(default = "default_knn_k")]
        k: usize,
    },
    Random,
    External {
        path: String,
    },
}

fn default_knn_k() -> usize {
    3
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Knn { k: 3 }
    }
}

fn default_strata() -> usize {
    4
}

fn default_pilot() -> f64 {
    0.25
}

fn default_learn() -> f64 {
    0.25
}

fn default_design() -> f64 {
    0.1875
}

fn default_correction() -> f64 {
    0.75
}

fn default_folds() -> usize {
    5
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_optimizer() -> String {
    "logbdr".into()
}

fn default_alloc() -> AllocationMode {
    AllocationMode::Neyman
}

fn default_min_samples() -> usize {
    5
}

/// One estimator in a sweep, with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSpec {
    Srs,
    Ssp {
        #[serde(default = "default_strata")]
        strata: usize,
    },
    Ssn {
        #[serde(default = "default_strata")]
        strata: usize,
        #[serde(default = "default_pilot")]
        pilot_fraction: f64,
    },
    Qlcc,
    Qlac {
        #[serde(default = "default_folds")]
        folds: usize,
    },
    Qlsc {
        #[serde(default = "default_correction")]
        correction_fraction: f64,
    },
    Lws {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_learn")]
        learn_fraction: f64,
    },
    Lss {
        #[serde(default = "default_strata")]
        strata: usize,
        #[serde(default = "default_optimizer")]
        optimizer: String,
        #[serde(default = "default_alloc")]
        alloc: AllocationMode,
        #[serde(default = "default_learn")]
        learn_fraction: f64,
        #[serde(default = "default_design")]
        design_fraction: f64,
        #[serde(default)]
        min_stratum_size: Option<usize>,
        #[serde(default = "default_min_samples")]
        min_samples_per_stratum: usize,
        #[serde(default)]
        base: Option<f64>,
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        spacing: Option<f64>,
    },
}

impl MethodSpec {
    /// Stable label used in reports and in per-trial seed derivation.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Srs => "srs".into(),
            MethodSpec::Ssp { .. } => "ssp".into(),
            MethodSpec::Ssn { .. } => "ssn".into(),
            MethodSpec::Qlcc => "qlcc".into(),
            MethodSpec::Qlac { .. } => "qlac".into(),
            MethodSpec::Qlsc { .. } => "qlsc".into(),
            MethodSpec::Lws { .. } => "lws".into(),
            MethodSpec::Lss { optimizer, .. } => format!("lss[{optimizer}]"),
        }
    }
}

pub fn parse_optimizer(
    name: &str,
    base: Option<f64>,
    eps: Option<f64>,
    spacing: Option<f64>,
) -> Result<Optimizer> {
    Ok(match name {
        "dirsol" => Optimizer::DirSol,
        "logbdr" => Optimizer::LogBdr { base: base.unwrap_or(2.0) },
        "dynpgm" => Optimizer::DynPgm { eps: eps.unwrap_or(0.05) },
        "dynpgmp" => Optimizer::DynPgmP { base: base.unwrap_or(2.0) },
        "fixed_width" => Optimizer::FixedWidth,
        "fixed_height" => Optimizer::FixedHeight,
        "ticks" => Optimizer::Ticks { spacing: spacing.unwrap_or(0.05) },
        other => return Err(Error::Config(format!("unknown optimizer '{other}'"))),
    })
}

/// Full experiment description; serialized as versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub dataset: DatasetSource,
    pub predicate: PredicateConfig,
    #[serde(default)]
    pub scorer: ScorerConfig,
    pub methods: Vec<MethodSpec>,
    pub sample_fracs: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default)]
    pub simulated_cost_ms: u64,
}

fn default_ci_level() -> f64 {
    0.95
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.sample_fracs.iter().any(|f| !(0.0..=1.0).contains(f) || *f <= 0.0) {
            return Err(Error::Config("sample fractions must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.ci_level) || self.ci_level <= 0.0 {
            return Err(Error::Config("ci_level must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Result of a single (method, sample size, trial) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    pub sample_frac: f64,
    pub trial: usize,
    pub seed: u64,
    pub count: Option<f64>,
    pub proportion: Option<f64>,
    pub variance: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub oracle_calls: Option<usize>,
    pub truth: usize,
    pub abs_error: Option<f64>,
    /// Wall-clock measurements vary between runs, so they are excluded from
    /// the deterministic records CSV and written to the timing report.
    #[serde(skip_serializing, default)]
    pub wall_ms: f64,
    #[serde(skip_serializing, default)]
    pub learn_ms: f64,
    #[serde(skip_serializing, default)]
    pub design_ms: f64,
    #[serde(skip_serializing, default)]
    pub apply_ms: f64,
    pub error: Option<String>,
}

/// Parses a dataset CSV with header `id,x,y` or `id,f1,...,fd`.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut file = std::fs::File::open(path)?;
    let mut content = String::new();
    file.read_to_string(&mut content)?;
    parse_dataset_csv(&content)
}

pub fn parse_dataset_csv(content: &str) -> Result<Dataset> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "id" {
        return Err(Error::Csv { line: 1, msg: format!("expected header id,f1,...,fd; got '{header}'") });
    }
    let dim = cols.len() - 1;
    let mut points = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Csv {
                line: line_no,
                msg: format!("expected {} fields, got {}", dim + 1, fields.len()),
            });
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| Error::Csv { line: line_no, msg: format!("bad id '{}'", fields[0]) })?;
        if !seen.insert(id) {
            return Err(Error::Csv { line: line_no, msg: format!("duplicate id {id}") });
        }
        let mut features = Vec::with_capacity(dim);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| Error::Csv {
                line: line_no,
                msg: format!("non-numeric field '{f}'"),
            })?;
            features.push(v);
        }
        points.push(DataPoint::new(id, features));
    }
    Dataset::new(points, dim)
}

/// Parses an external score file with header `id,score`.
pub fn load_scores(path: &Path, dataset: &Dataset) -> Result<Arc<HashMap<u64, f64>>> {
    let content = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (idx, line) in content.lines().enumerate() {
        if idx == 0 {
            if line.trim() != "id,score" {
                return Err(Error::Csv { line: 1, msg: "expected header id,score".into() });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (id_s, score_s) = line
            .split_once(',')
            .ok_or_else(|| Error::Csv { line: line_no, msg: "expected id,score".into() })?;
        let id: u64 = id_s
            .trim()
            .parse()
            .map_err(|_| Error::Csv { line: line_no, msg: format!("bad id '{id_s}'") })?;
        let score: f64 = score_s.trim().parse().map_err(|_| Error::Csv {
            line: line_no,
            msg: format!("non-numeric score '{score_s}'"),
        })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Csv { line: line_no, msg: format!("score {score} outside [0,1]") });
        }
        map.insert(id, score);
    }
    for p in dataset.points() {
        if !map.contains_key(&p.id) {
            return Err(Error::Config(format!("score file missing id {}", p.id)));
        }
    }
    Ok(Arc::new(map))
}

pub fn build_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Generated { kind, n, seed } => crate::synth::generate_points(*kind, *n, *seed),
        DatasetSource::Csv { path } => load_csv(Path::new(path)),
    }
}

/// Materializes the predicate for a dataset, generating the noise table when
/// the mixing protocol is configured.
pub fn build_predicate(cfg: &PredicateConfig, dataset: &Dataset) -> Result<Predicate> {
    match cfg {
        PredicateConfig::Skyband { k, alpha_mix, noise } => {
            if *alpha_mix == 0.0 && noise.is_none() {
                Ok(Predicate::skyband(*k))
            } else {
                let spec = noise.ok_or_else(|| {
                    Error::Config("alpha_mix > 0 requires a noise spec".into())
                })?;
                let base = crate::synth::dominance_counts(dataset);
                let table = match spec {
                    NoiseSpec::Gaussian { seed } => gaussian_noise_table(&base, seed),
                    NoiseSpec::Zipf { s, seed } => zipf_noise_table(&base, s, seed)?,
                };
                Ok(Predicate::noisy_skyband(*k, *alpha_mix, table))
            }
        }
        PredicateConfig::Neighbors { k, d, include_self } => {
            Ok(Predicate::Neighbors { k: *k, d: *d, include_self: *include_self, strict: false })
        }
    }
}

pub fn build_scorer_spec(cfg: &ScorerConfig, dataset: &Dataset) -> Result<ScorerSpec> {
    Ok(match cfg {
        ScorerConfig::Knn { k } => ScorerSpec::Knn { k: *k },
        ScorerConfig::Random => ScorerSpec::Random,
        ScorerConfig::External { path } => {
            ScorerSpec::External { scores: load_scores(Path::new(path), dataset)? }
        }
    })
}

/// Runs one estimator cell.
pub fn run_method(
    method: &MethodSpec,
    oracle: &CountingOracle,
    dataset: &Dataset,
    scorer: &ScorerSpec,
    budget_n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    let total = dataset.len();
    match method {
        MethodSpec::Srs => srs_estimate(oracle, dataset, budget_n.min(total), alpha, seed),
        MethodSpec::Ssp { strata } => {
            let strat = grid_stratify(dataset, *strata)?;
            let alloc = proportional_allocation(strat.sizes(), budget_n.min(total))?;
            let mut e = stratified_estimate(oracle, dataset, &strat, &alloc, alpha, seed)?;
            e.seed = seed;
            Ok(e)
        }
        MethodSpec::Ssn { strata, pilot_fraction } => {
            let strat = grid_stratify(dataset, *strata)?;
            ssn_estimate(oracle, dataset, &strat, budget_n, *pilot_fraction, alpha, seed)
        }
        MethodSpec::Qlcc => {
            let cfg = QuantifyConfig::new(Budget::new(budget_n, 0.25, 0.0)?, scorer.clone());
            qlcc_estimate(oracle, dataset, &cfg, seed)
        }
        MethodSpec::Qlac { folds } => {
            let mut cfg = QuantifyConfig::new(Budget::new(budget_n, 0.25, 0.0)?, scorer.clone());
            cfg.folds = *folds;
            qlac_estimate(oracle, dataset, &cfg, seed)
        }
        MethodSpec::Qlsc { correction_fraction } => {
            let mut cfg = QuantifyConfig::new(Budget::new(budget_n, 0.25, 0.0)?, scorer.clone());
            cfg.correction_fraction = *correction_fraction;
            qlsc_estimate(oracle, dataset, &cfg, alpha, seed)
        }
        MethodSpec::Lws { epsilon, learn_fraction } => {
            let budget = Budget::new(budget_n, *learn_fraction, 0.0)?;
            lws_estimate(oracle, dataset, scorer, &budget, *epsilon, alpha, seed)
        }
        MethodSpec::Lss {
            strata,
            optimizer,
            alloc,
            learn_fraction,
            design_fraction,
            min_stratum_size,
            min_samples_per_stratum,
            base,
            eps,
            spacing,
        } => {
            let cfg = LssConfig {
                scorer: scorer.clone(),
                budget: Budget::new(budget_n, *learn_fraction, *design_fraction)?,
                strata: *strata,
                min_stratum_size: *min_stratum_size,
                min_samples_per_stratum: *min_samples_per_stratum,
                optimizer: parse_optimizer(optimizer, *base, *eps, *spacing)?,
                allocation: *alloc,
            };
            lss_estimate(oracle, dataset, &cfg, alpha, seed)
        }
    }
}

/// Runs the full experiment grid. Trials are deterministic given the
/// config: each (method, size, trial) cell derives its own seed stream.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, usize)> {
    cfg.validate()?;
    let dataset = build_dataset(&cfg.dataset)?;
    let predicate = build_predicate(&cfg.predicate, &dataset)?;
    let scorer = build_scorer_spec(&cfg.scorer, &dataset)?;
    let alpha = 1.0 - cfg.ci_level;

    // truth is experimental bookkeeping: computed once, without the
    // simulated per-call cost
    let truth_oracle = CountingOracle::new(&dataset, predicate.clone())?;
    let truth = exact_count(&truth_oracle, &dataset);

    let cost = Duration::from_millis(cfg.simulated_cost_ms);
    let mut records = Vec::new();
    for method in &cfg.methods {
        let label = method.label();
        for &frac in &cfg.sample_fracs {
            let budget_n = ((dataset.len() as f64 * frac).floor() as usize).max(1);
            for trial in 0..cfg.trials {
                let seed = stream_seed(
                    cfg.master_seed,
                    &[hash_str(&label), frac.to_bits(), trial as u64],
                );
                let mut oracle = CountingOracle::new(&dataset, predicate.clone())?;
                if cfg.simulated_cost_ms > 0 {
                    oracle = oracle.with_simulated_cost(cost);
                }
                let start = Instant::now();
                let outcome =
                    run_method(method, &oracle, &dataset, &scorer, budget_n, alpha, seed);
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let record = match outcome {
                    Ok(e) => TrialRecord {
                        method: label.clone(),
                        sample_frac: frac,
                        trial,
                        seed,
                        count: Some(e.count),
                        proportion: e.proportion,
                        variance: e.variance,
                        ci_lo: e.ci.map(|c| c.0),
                        ci_hi: e.ci.map(|c| c.1),
                        oracle_calls: Some(e.oracle_calls),
                        truth,
                        abs_error: Some((e.count - truth as f64).abs()),
                        wall_ms,
                        learn_ms: e.overhead.learn_ms,
                        design_ms: e.overhead.design_ms,
                        apply_ms: e.overhead.apply_ms,
                        error: None,
                    },
                    Err(err) => TrialRecord {
                        method: label.clone(),
                        sample_frac: frac,
                        trial,
                        seed,
                        count: None,
                        proportion: None,
                        variance: None,
                        ci_lo: None,
                        ci_hi: None,
                        oracle_calls: None,
                        truth,
                        abs_error: None,
                        wall_ms,
                        learn_ms: 0.0,
                        design_ms: 0.0,
                        apply_ms: 0.0,
                        error: Some(err.to_string()),
                    },
                };
                records.push(record);
            }
        }
    }
    Ok((records, truth))
}

/// Grouping for summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Method,
    MethodAndFrac,
}

/// Aggregated metrics for one group of trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub sample_frac: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    pub mae: f64,
    pub mean: f64,
    pub variance: f64,
    pub iqr: f64,
    pub coverage: Option<f64>,
    pub mean_oracle_calls: f64,
    /// Timing-derived and therefore non-deterministic; kept out of the
    /// serialized summary, reported in the timing report instead.
    #[serde(skip_serializing, default)]
    pub mean_overhead_fraction: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Summarizes trial records per group: MAE, mean, empirical variance, IQR,
/// CI coverage (absent when the method reports no intervals), mean oracle
/// calls, and the mean share of wall time spent on estimator overhead.
pub fn summarize(records: &[TrialRecord], group_by: GroupBy) -> Vec<SummaryRow> {
    let mut groups: Vec<(String, Option<f64>, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        let key_frac = match group_by {
            GroupBy::Method => None,
            GroupBy::MethodAndFrac => Some(r.sample_frac),
        };
        match groups.iter_mut().find(|(m, f, _)| *m == r.method && *f == key_frac) {
            Some((_, _, rows)) => rows.push(r),
            None => groups.push((r.method.clone(), key_frac, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(method, sample_frac, rows)| {
            let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
            let failures = rows.len() - ok.len();
            let counts: Vec<f64> = ok.iter().filter_map(|r| r.count).collect();
            let n = counts.len().max(1) as f64;
            let mean = counts.iter().sum::<f64>() / n;
            let variance =
                counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
            let mae = ok.iter().filter_map(|r| r.abs_error).sum::<f64>() / n;
            let iqr = {
                let mut sorted = counts.clone();
                sorted.sort_by(|a, b| a.total_cmp(b));
                if sorted.is_empty() {
                    0.0
                } else {
                    quantile(&sorted, 0.75) - quantile(&sorted, 0.25)
                }
            };
            let with_ci: Vec<&&&TrialRecord> =
                ok.iter().filter(|r| r.ci_lo.is_some()).collect();
            let coverage = if with_ci.is_empty() {
                None
            } else {
                let covered = with_ci
                    .iter()
                    .filter(|r| {
                        let t = r.truth as f64;
                        r.ci_lo.unwrap() <= t && t <= r.ci_hi.unwrap()
                    })
                    .count();
                Some(covered as f64 / with_ci.len() as f64)
            };
            let mean_oracle_calls =
                ok.iter().filter_map(|r| r.oracle_calls).sum::<usize>() as f64 / n;
            let mean_overhead_fraction = ok
                .iter()
                .map(|r| {
                    if r.wall_ms > 0.0 {
                        (r.learn_ms + r.design_ms + r.apply_ms) / r.wall_ms
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / n;
            SummaryRow {
                method,
                sample_frac,
                trials: rows.len(),
                failures,
                mae,
                mean,
                variance,
                iqr,
                coverage,
                mean_oracle_calls,
                mean_overhead_fraction,
            }
        })
        .collect()
}

/// Writes trial records as CSV with a fixed column order.
pub fn write_records_csv<W: std::io::Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-trial timing breakdown (wall time and estimator overhead
/// phases). This file is a measurement artifact and differs between runs.
pub fn write_timings_csv<W: std::io::Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "sample_frac", "trial", "wall_ms", "learn_ms", "design_ms", "apply_ms", "overhead_fraction"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for r in records {
        let overhead = r.learn_ms + r.design_ms + r.apply_ms;
        let frac = if r.wall_ms > 0.0 { overhead / r.wall_ms } else { 0.0 };
        w.write_record([
            r.method.clone(),
            r.sample_frac.to_string(),
            r.trial.to_string(),
            r.wall_ms.to_string(),
            r.learn_ms.to_string(),
            r.design_ms.to_string(),
            r.apply_ms.to_string(),
            frac.to_string(),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads trial records back from CSV.
pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row.map_err(|e| Error::Config(e.to_string()))?);
    }
    Ok(out)
}

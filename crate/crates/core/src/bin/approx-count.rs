//! Command-line interface: generate synthetic datasets, run one-shot
//! estimates, sweep experiment grids, and summarize result files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 estimator degeneracy.

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use approx_count::harness::{
    build_scorer_spec, load_csv, read_records_csv, run_experiment, run_method, summarize,
    write_records_csv, write_timings_csv, ExperimentConfig, GroupBy, MethodSpec, PredicateConfig,
    ScorerConfig, TrialRecord,
};
use approx_count::lss::AllocationMode;
use approx_count::synth::{generate_points, NoiseSpec, PointKind};
use approx_count::{CountingOracle, Error};

#[derive(Parser)]
#[command(name = "approx-count", version, about = "Estimate counts under expensive predicates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Uniform2d,
    Clustered2d,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Skyband,
    Neighbors,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum AllocKind {
    Neyman,
    Proportional,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic 2-d dataset CSV
    Gen {
        #[arg(long, value_enum, default_value = "uniform2d")]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single estimator once and print the estimate
    Estimate {
        /// Dataset CSV (header id,x,y)
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        query: QueryKind,
        /// Predicate count threshold
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Neighbor distance (neighbors query)
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Count the object's own zero-distance pair (SQL semantics)
        #[arg(long, default_value_t = false)]
        include_self: bool,
        /// Noise mixing weight for the skyband query
        #[arg(long, default_value_t = 0.0)]
        alpha_mix: f64,
        /// Noise distribution: gaussian or zipf:S
        #[arg(long)]
        noise: Option<String>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        /// srs | ssp | ssn | qlcc | qlac | qlsc | lws | lss
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 0.05)]
        sample_frac: f64,
        /// Learning share of the budget (learning methods)
        #[arg(long, default_value_t = 0.25)]
        split: f64,
        /// First-stage design share of the budget (lss)
        #[arg(long, default_value_t = 0.1875)]
        design_split: f64,
        #[arg(long, default_value_t = 4)]
        strata: usize,
        /// dirsol | logbdr | dynpgm | dynpgmp | fixed_width | fixed_height | ticks
        #[arg(long, default_value = "logbdr")]
        optimizer: String,
        #[arg(long, value_enum, default_value = "neyman")]
        alloc: AllocKind,
        #[arg(long, default_value_t = 0.95)]
        ci_level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        /// External score file (header id,score); overrides the k-NN scorer
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Use the dummy random scorer
        #[arg(long, default_value_t = false)]
        random_scorer: bool,
        #[arg(long, default_value_t = 3)]
        knn_k: usize,
        /// Per-call artificial predicate cost in milliseconds
        #[arg(long, default_value_t = 0)]
        simulated_cost_ms: u64,
    },
    /// Run an experiment grid from a JSON config
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "records.csv")]
        records: PathBuf,
        #[arg(long, default_value = "summary.json")]
        summary: PathBuf,
        /// Per-trial wall-time breakdown; contents vary between runs
        #[arg(long, default_value = "timings.csv")]
        timings: PathBuf,
    },
    /// Summarize an existing records CSV
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Group by method only instead of (method, sample size)
        #[arg(long, default_value_t = false)]
        by_method: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_degeneracy() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen { kind, n, seed, out } => {
            let kind = match kind {
                GenKind::Uniform2d => PointKind::Uniform2d,
                GenKind::Clustered2d => PointKind::Clustered2d,
            };
            let ds = generate_points(kind, n, seed)?;
            let mut body = String::from("id,x,y\n");
            for p in ds.points() {
                body.push_str(&format!("{},{},{}\n", p.id, p.x(), p.y()));
            }
            match out {
                Some(path) => std::fs::write(path, body)?,
                None => print!("{body}"),
            }
            Ok(())
        }
        Command::Estimate {
            data,
            query,
            k,
            d,
            include_self,
            alpha_mix,
            noise,
            noise_seed,
            method,
            sample_frac,
            split,
            design_split,
            strata,
            optimizer,
            alloc,
            ci_level,
            seed,
            format,
            scores,
            random_scorer,
            knn_k,
            simulated_cost_ms,
        } => {
            let dataset = load_csv(&data)?;
            let noise_spec = match noise.as_deref() {
                None => None,
                Some("gaussian") => Some(NoiseSpec::Gaussian { seed: noise_seed }),
                Some(z) if z.starts_with("zipf:") => {
                    let s: f64 = z["zipf:".len()..]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad zipf parameter in '{z}'")))?;
                    Some(NoiseSpec::Zipf { s, seed: noise_seed })
                }
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown noise '{other}' (expected gaussian or zipf:S)"
                    )))
                }
            };
            let predicate_cfg = match query {
                QueryKind::Skyband => PredicateConfig::Skyband { k, alpha_mix, noise: noise_spec },
                QueryKind::Neighbors => PredicateConfig::Neighbors { k, d, include_self },
            };
            let scorer_cfg = if let Some(path) = scores {
                ScorerConfig::External { path: path.to_string_lossy().into_owned() }
            } else if random_scorer {
                ScorerConfig::Random
            } else {
                ScorerConfig::Knn { k: knn_k }
            };
            let alloc = match alloc {
                AllocKind::Neyman => AllocationMode::Neyman,
                AllocKind::Proportional => AllocationMode::Proportional,
            };
            let spec = method_spec(&method, strata, &optimizer, alloc, split, design_split)?;
            let predicate = approx_count::harness::build_predicate(&predicate_cfg, &dataset)?;
            let scorer = build_scorer_spec(&scorer_cfg, &dataset)?;
            let mut oracle = CountingOracle::new(&dataset, predicate)?;
            if simulated_cost_ms > 0 {
                oracle = oracle
                    .with_simulated_cost(std::time::Duration::from_millis(simulated_cost_ms));
            }
            let budget = ((dataset.len() as f64 * sample_frac).floor() as usize).max(1);
            let estimate =
                run_method(&spec, &oracle, &dataset, &scorer, budget, 1.0 - ci_level, seed)?;
            match format {
                OutputFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&estimate).unwrap())
                }
                OutputFormat::Csv => {
                    println!("method,count,proportion,variance,ci_lo,ci_hi,oracle_calls,seed");
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        estimate.method,
                        estimate.count,
                        estimate.proportion.map(|v| v.to_string()).unwrap_or_default(),
                        estimate.variance.map(|v| v.to_string()).unwrap_or_default(),
                        estimate.ci.map(|c| c.0.to_string()).unwrap_or_default(),
                        estimate.ci.map(|c| c.1.to_string()).unwrap_or_default(),
                        estimate.oracle_calls,
                        estimate.seed
                    );
                }
            }
            Ok(())
        }
        Command::Sweep { config, records, summary, timings } => {
            let json = std::fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::from_json(&json)?;
            let (rows, _truth) = run_experiment(&cfg)?;
            write_records_csv(File::create(&records)?, &rows)?;
            write_timings_csv(File::create(&timings)?, &rows)?;
            let rollup = summarize(&rows, GroupBy::MethodAndFrac);
            serde_json::to_writer_pretty(File::create(&summary)?, &rollup)
                .map_err(|e| Error::Config(e.to_string()))?;
            println!(
                "wrote {} records to {}, summary to {}, timings to {}",
                rows.len(),
                records.display(),
                summary.display(),
                timings.display()
            );
            Ok(())
        }
        Command::Report { records, by_method, format } => {
            let rows: Vec<TrialRecord> = read_records_csv(File::open(&records)?)?;
            let group = if by_method { GroupBy::Method } else { GroupBy::MethodAndFrac };
            let rollup = summarize(&rows, group);
            match format {
                OutputFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&rollup).unwrap())
                }
                OutputFormat::Csv => {
                    println!("method,sample_frac,trials,failures,mae,mean,variance,iqr,coverage,mean_oracle_calls");
                    for r in rollup {
                        println!(
                            "{},{},{},{},{},{},{},{},{},{}",
                            r.method,
                            r.sample_frac.map(|v| v.to_string()).unwrap_or_default(),
                            r.trials,
                            r.failures,
                            r.mae,
                            r.mean,
                            r.variance,
                            r.iqr,
                            r.coverage.map(|v| v.to_string()).unwrap_or_default(),
                            r.mean_oracle_calls
                        );
                    }
                }
            }
            Ok(())
        }
    }
}

fn method_spec(
    method: &str,
    strata: usize,
    optimizer: &str,
    alloc: AllocationMode,
    split: f64,
    design_split: f64,
) -> Result<MethodSpec, Error> {
    Ok(match method {
        "srs" => MethodSpec::Srs,
        "ssp" => MethodSpec::Ssp { strata },
        "ssn" => MethodSpec::Ssn { strata, pilot_fraction: split },
        "qlcc" => MethodSpec::Qlcc,
        "qlac" => MethodSpec::Qlac { folds: 5 },
        "qlsc" => MethodSpec::Qlsc { correction_fraction: 1.0 - split },
        "lws" => MethodSpec::Lws { epsilon: 0.01, learn_fraction: split },
        "lss" => MethodSpec::Lss {
            strata,
            optimizer: optimizer.to_string(),
            alloc,
            learn_fraction: split,
            design_fraction: design_split,
            min_stratum_size: None,
            min_samples_per_stratum: 5,
            base: None,
            eps: None,
            spacing: None,
        },
        other => return Err(Error::Config(format!("unknown method '{other}'"))),
    })
}

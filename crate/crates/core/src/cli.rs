//! Command-line front end: `run` executes an experiment and writes CSV
//! tables plus a manifest, `validate` prints the resolved configuration.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 some run hit the
//! sweep cap without converging (outputs are still written).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{self, ConfigError, Experiment, Overrides, RunConfig};
use crate::cost::{self, SystemOverhead};
use crate::harness::{self, reduction_rate, Algorithm, ResultRow, SweepConfig, Table};
use crate::model::DecisionVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vanet-offload", version, about = "Task offloading and result migration simulator for vehicular MEC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured experiment and write CSV tables and a manifest.
    Run(RunArgs),
    /// Resolve and check the configuration, then print it.
    Validate(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file; leading `#` lines are a header comment.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `params.v2i_comm.power=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// First seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// One of sweep-vehicles, sweep-size, success-rate, convergence,
    /// single-run, oracle-check.
    #[arg(long, value_name = "NAME")]
    pub experiment: Option<String>,
    /// Sweep cap per algorithm run [config default: 1000].
    #[arg(long, value_name = "N")]
    pub max_sweeps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let file = self.config.as_deref().map(config::read_config_file).transpose()?;
        config::resolve(
            file,
            &Overrides {
                experiment: self.experiment.clone(),
                seed: self.seed,
                max_sweeps: self.max_sweeps,
                set: self.set.clone(),
            },
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub non_converged: usize,
    /// Extra manifest lines, `key=value`.
    pub notes: Vec<(String, String)>,
}

/// Parses arguments and executes; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match cli.command {
        Command::Validate(args) => match args.resolve() {
            Ok(config) => {
                let _ = write!(stdout, "{}", config::render(&config));
                EXIT_OK
            }
            Err(e) => report(stderr, &e),
        },
        Command::Run(args) => {
            let config = match args.config.resolve() {
                Ok(c) => c,
                Err(e) => return report(stderr, &e),
            };
            match cmd_run(&config, &args.out) {
                Ok(summary) => {
                    for f in &summary.files {
                        let _ = writeln!(stdout, "wrote {}", f.display());
                    }
                    if summary.non_converged > 0 {
                        let _ = writeln!(
                            stderr,
                            "error: {} run(s) did not converge within max_sweeps={}",
                            summary.non_converged, config.max_sweeps
                        );
                        EXIT_NOT_CONVERGED
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => report(stderr, &e),
            }
        }
    }
}

fn report(stderr: &mut dyn Write, e: &dyn std::error::Error) -> i32 {
    let _ = writeln!(stderr, "error: {e}");
    EXIT_CONFIG
}

/// Executes the configured experiment and writes its outputs into `out`.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out).map_err(|source| io_err(out, source))?;
    let mut summary = RunSummary {
        files: Vec::new(),
        non_converged: 0,
        notes: Vec::new(),
    };
    let sweep = SweepConfig {
        params: config.params.clone(),
        algorithms: config.algorithms.clone(),
        seeds: config.seeds(),
        max_sweeps: config.max_sweeps,
    };
    let results = out.join("results.csv");
    match config.experiment {
        Experiment::SweepVehicles => {
            let table = harness::sweep_vehicles(&config.vehicle_counts, &config.scenario, &sweep)?;
            write_table(&table, &results, &mut summary)?;
        }
        Experiment::SweepSize => {
            let table = harness::sweep_data_size(&config.data_sizes, &config.scenario, &sweep)?;
            write_table(&table, &results, &mut summary)?;
        }
        Experiment::SuccessRate => {
            let table = harness::success_rate(&config.deadlines, &config.scenario, &sweep)?;
            write_table(&table, &results, &mut summary)?;
        }
        Experiment::Convergence => {
            let scenario = harness::generate_scenario(&config.scenario, config.seed, &config.params)?;
            let outcome = config.algorithm.run(&scenario, config.max_sweeps);
            let trace_path = out.join("trace.csv");
            let file = fs::File::create(&trace_path).map_err(|source| io_err(&trace_path, source))?;
            outcome.trace.write_csv(file).map_err(|source| csv_err(&trace_path, source))?;
            summary.files.push(trace_path);
            if !outcome.trace.converged {
                summary.non_converged += 1;
            }
            summary.notes.push(("sweeps".into(), outcome.trace.sweeps.to_string()));
            summary.notes.push(("evaluations".into(), outcome.trace.evaluations.to_string()));
            let baseline = Algorithm::Mec.run(&scenario, config.max_sweeps).overhead.total;
            let mut row = single_row(config, config.algorithm.name(), &outcome.overhead);
            row.reduction_rate = reduction_rate(baseline, outcome.overhead.total);
            let table = Table {
                rows: vec![row],
                non_converged: 0,
            };
            write_table(&table, &results, &mut summary)?;
        }
        Experiment::SingleRun => single_run(config, out, &mut summary)?,
        Experiment::OracleCheck => {
            let rows = harness::oracle_check(&config.scenario, &config.seeds(), &config.params, config.max_sweeps)?;
            summary.non_converged += rows.iter().filter(|r| !r.tm_converged).count();
            let optimal = rows.iter().filter(|r| r.como_optimal).count();
            summary
                .notes
                .push(("como_optimal_fraction".into(), format!("{}", optimal as f64 / rows.len() as f64)));
            let path = out.join("oracle.csv");
            let file = fs::File::create(&path).map_err(|source| io_err(&path, source))?;
            harness::write_oracle_csv(&rows, file).map_err(|source| csv_err(&path, source))?;
            summary.files.push(path);
        }
    }
    write_manifest(config, out, &mut summary)?;
    Ok(summary)
}

fn single_run(config: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let scenario = harness::generate_scenario(&config.scenario, config.seed, &config.params)?;
    let baseline = Algorithm::Mec.run(&scenario, config.max_sweeps);
    let mut runs: Vec<(String, DecisionVector, SystemOverhead)> = Vec::new();
    if let Some(modes) = config.forced_decision()? {
        let d = DecisionVector::new(modes);
        let overhead = cost::system_overhead(&d, &scenario.tasks, &scenario.params);
        runs.push(("forced".into(), d, overhead));
    } else {
        for &alg in &config.algorithms {
            let outcome = if alg == Algorithm::Mec {
                baseline.clone()
            } else {
                alg.run(&scenario, config.max_sweeps)
            };
            if !outcome.trace.converged {
                summary.non_converged += 1;
            }
            runs.push((alg.name().into(), outcome.decisions, outcome.overhead));
        }
    }

    let mut table = Table::default();
    for (name, _, overhead) in &runs {
        let mut row = single_row(config, name, overhead);
        row.reduction_rate = reduction_rate(baseline.overhead.total, overhead.total);
        table.rows.push(row);
    }
    write_table(&table, &out.join("results.csv"), summary)?;

    let path = out.join("decisions.csv");
    let file = fs::File::create(&path).map_err(|source| io_err(&path, source))?;
    let mut w = csv::Writer::from_writer(file);
    let header = ["algorithm", "vehicle", "mode", "delay_s", "energy_j", "overhead", "feasible", "hops", "infeasibility"];
    w.write_record(header).map_err(|source| csv_err(&path, source))?;
    for (name, d, overhead) in &runs {
        for (m, c) in overhead.per_vehicle.iter().enumerate() {
            let record = [
                name.clone(),
                m.to_string(),
                d[m].code().to_string(),
                c.delay.to_string(),
                c.energy.to_string(),
                c.overhead.to_string(),
                c.feasible.to_string(),
                c.hops.to_string(),
                c.infeasibility.map(|i| i.reason().to_string()).unwrap_or_default(),
            ];
            w.write_record(&record).map_err(|source| csv_err(&path, source))?;
        }
    }
    w.flush().map_err(|source| io_err(&path, source))?;
    summary.files.push(path);
    Ok(())
}

fn single_row(config: &RunConfig, algorithm: &str, overhead: &SystemOverhead) -> ResultRow {
    let (delay, energy) = overhead.completed_means();
    ResultRow {
        experiment: config.experiment.name().into(),
        algorithm: algorithm.into(),
        vehicles: config.scenario.vehicles,
        data_bits: config.scenario.data_bits.fixed(),
        tau_s: config.scenario.deadline_s(),
        seed: Some(config.seed),
        total_overhead: overhead.total,
        mean_delay_s: delay,
        mean_energy_j: energy,
        reduction_rate: 0.0,
        success_rate: overhead.completed() as f64 / overhead.per_vehicle.len() as f64,
    }
}

fn write_table(table: &Table, path: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(|source| io_err(path, source))?;
    table.write_csv(file).map_err(|source| csv_err(path, source))?;
    summary.non_converged += table.non_converged;
    summary.files.push(path.to_path_buf());
    Ok(())
}

fn write_manifest(config: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let path = out.join("manifest.txt");
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let seeds: Vec<String> = config.seeds().iter().map(u64::to_string).collect();
    let mut lines = vec![
        format!("tool=vanet-offload {}", env!("CARGO_PKG_VERSION")),
        format!("timestamp_unix={timestamp}"),
        format!("experiment={}", config.experiment),
        format!("seeds={}", seeds.join(",")),
        format!("max_sweeps={}", config.max_sweeps),
        format!("non_converged={}", summary.non_converged),
    ];
    lines.extend(summary.notes.iter().map(|(k, v)| format!("{k}={v}")));
    let files: Vec<String> = summary
        .files
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    lines.push(format!("outputs={}", files.join(",")));
    lines.push(format!("config={}", serde_json::to_string(config).expect("config serializes")));
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(&path, text).map_err(|source| io_err(&path, source))?;
    summary.files.push(path);
    Ok(())
}

fn io_err(path: &Path, source: io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> RunError {
    RunError::Csv {
        path: path.display().to_string(),
        source,
    }
}

//! Seeded scenario generation and the experiment sweeps: overhead versus
//! fleet size, overhead and reduction rate versus task size, success rate
//! versus deadline, convergence traces and the oracle comparison.

use std::fmt;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::SystemOverhead;
use crate::game::{self, GameOutcome, GameTrace};
use crate::model::{ModelError, NetworkParams, Scenario, Task};
use crate::oracle::{self, OracleError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A per-vehicle quantity: a constant, a uniform range, or a uniform pick
/// from a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sampling {
    Fixed(f64),
    Uniform { uniform: [f64; 2] },
    Choice { choice: Vec<f64> },
}

impl Sampling {
    pub fn validate(&self, name: &str) -> Result<(), HarnessError> {
        match self {
            Sampling::Fixed(v) if v.is_finite() => Ok(()),
            Sampling::Uniform { uniform: [lo, hi] } if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(()),
            Sampling::Choice { choice } if !choice.is_empty() && choice.iter().all(|v| v.is_finite()) => Ok(()),
            other => Err(HarnessError::Spec(format!("{name}: unusable sampling {other:?}"))),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampling::Fixed(v) => *v,
            Sampling::Uniform { uniform: [lo, hi] } if lo == hi => *lo,
            Sampling::Uniform { uniform: [lo, hi] } => rng.gen_range(*lo..=*hi),
            Sampling::Choice { choice } => choice[rng.gen_range(0..choice.len())],
        }
    }

    pub fn fixed(&self) -> Option<f64> {
        match self {
            Sampling::Fixed(v) => Some(*v),
            _ => None,
        }
    }
}

/// How to draw a fleet of tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub vehicles: usize,
    pub data_bits: Sampling,
    pub alpha: Sampling,
    pub mu: Sampling,
    /// Task deadline in seconds; `None` means unbounded.
    pub deadline: Option<f64>,
}

impl ScenarioSpec {
    /// Fixed weights and full CPU, task sizes across the reference range,
    /// no deadline.
    pub fn overhead_default(vehicles: usize) -> Self {
        ScenarioSpec {
            vehicles,
            data_bits: Sampling::Uniform { uniform: [5e6, 5e7] },
            alpha: Sampling::Fixed(0.5),
            mu: Sampling::Fixed(1.0),
            deadline: None,
        }
    }

    /// Mixed delay/energy preferences and partial CPU availability.
    pub fn success_default(vehicles: usize) -> Self {
        ScenarioSpec {
            vehicles,
            data_bits: Sampling::Uniform { uniform: [5e6, 5e7] },
            alpha: Sampling::Choice { choice: vec![0.0, 0.5, 1.0] },
            mu: Sampling::Uniform { uniform: [0.5, 1.0] },
            deadline: None,
        }
    }

    pub fn deadline_s(&self) -> f64 {
        self.deadline.unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.vehicles == 0 {
            return Err(HarnessError::Spec("vehicles must be at least 1".into()));
        }
        self.data_bits.validate("data_bits")?;
        self.alpha.validate("alpha")?;
        self.mu.validate("mu")?;
        if let Some(tau) = self.deadline {
            if tau.is_nan() || tau <= 0.0 {
                return Err(HarnessError::Spec(format!("deadline must be > 0, got {tau}")));
            }
        }
        Ok(())
    }
}

/// Draws a scenario; the same `(spec, seed, params)` always yields the same
/// tasks.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64, params: &NetworkParams) -> Result<Scenario, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deadline = spec.deadline_s();
    let tasks = (0..spec.vehicles)
        .map(|_| {
            let bits = spec.data_bits.sample(&mut rng);
            let alpha = spec.alpha.sample(&mut rng);
            let mu = spec.mu.sample(&mut rng);
            Task::new(bits, deadline, alpha, mu, params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Scenario::new(params.clone(), tasks, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// No-migration baseline.
    Mec,
    /// Selfish best response with result migration.
    Tm,
    /// System-overhead coordinate descent with result migration.
    Como,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Mec, Algorithm::Tm, Algorithm::Como];

    pub fn run(self, scenario: &Scenario, max_sweeps: usize) -> GameOutcome {
        match self {
            Algorithm::Mec => oracle::mec_baseline(scenario, max_sweeps),
            Algorithm::Tm => game::run_tm(scenario, max_sweeps),
            Algorithm::Como => game::run_como(scenario, max_sweeps),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mec => "mec",
            Algorithm::Tm => "tm",
            Algorithm::Como => "como",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(baseline - candidate) / baseline`.
pub fn reduction_rate(baseline: f64, candidate: f64) -> f64 {
    (baseline - candidate) / baseline
}

/// One line of an experiment table. Rows with `seed = None` are means over
/// the seeds of the same cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub algorithm: String,
    #[serde(rename = "M")]
    pub vehicles: usize,
    pub data_bits: Option<f64>,
    #[serde(serialize_with = "ser_tau")]
    pub tau_s: f64,
    pub seed: Option<u64>,
    pub total_overhead: f64,
    pub mean_delay_s: f64,
    pub mean_energy_j: f64,
    pub reduction_rate: f64,
    pub success_rate: f64,
}

fn ser_tau<S: serde::Serializer>(tau: &f64, s: S) -> Result<S::Ok, S::Error> {
    if tau.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*tau)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub rows: Vec<ResultRow>,
    /// Runs that hit the sweep cap without converging.
    pub non_converged: usize,
}

impl Table {
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean rows for one algorithm, in insertion order.
    pub fn means(&self, algorithm: Algorithm) -> impl Iterator<Item = &ResultRow> {
        self.rows
            .iter()
            .filter(move |r| r.seed.is_none() && r.algorithm == algorithm.name())
    }

    fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
        self.non_converged += other.non_converged;
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "algorithm",
    "M",
    "data_bits",
    "tau_s",
    "seed",
    "total_overhead",
    "mean_delay_s",
    "mean_energy_j",
    "reduction_rate",
    "success_rate",
];

/// Shared settings of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: NetworkParams,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub max_sweeps: usize,
}

impl SweepConfig {
    pub fn new(params: NetworkParams, algorithms: Vec<Algorithm>, seeds: Vec<u64>) -> Self {
        SweepConfig {
            params,
            algorithms,
            seeds,
            max_sweeps: 1000,
        }
    }
}

struct CellRun {
    algorithm: Algorithm,
    overhead: SystemOverhead,
    converged: bool,
}

fn row(experiment: &str, spec: &ScenarioSpec, algorithm: Algorithm, seed: Option<u64>, overhead: &SystemOverhead) -> ResultRow {
    let (delay, energy) = overhead.completed_means();
    ResultRow {
        experiment: experiment.to_string(),
        algorithm: algorithm.name().to_string(),
        vehicles: spec.vehicles,
        data_bits: spec.data_bits.fixed(),
        tau_s: spec.deadline_s(),
        seed,
        total_overhead: overhead.total,
        mean_delay_s: delay,
        mean_energy_j: energy,
        reduction_rate: 0.0,
        success_rate: overhead.completed() as f64 / overhead.per_vehicle.len() as f64,
    }
}

/// Runs every algorithm on every seed of one spec and appends per-seed rows
/// followed by one mean row per algorithm. The MEC baseline always runs so
/// reduction rates can be filled in.
fn run_cell(experiment: &str, spec: &ScenarioSpec, cfg: &SweepConfig) -> Result<Table, HarnessError> {
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Spec("at least one seed is required".into()));
    }
    let mut table = Table::default();
    let mut per_seed: Vec<Vec<CellRun>> = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let scenario = generate_scenario(spec, seed, &cfg.params)?;
        let mut runs = Vec::new();
        let baseline = Algorithm::Mec.run(&scenario, cfg.max_sweeps);
        runs.push(CellRun {
            algorithm: Algorithm::Mec,
            converged: baseline.trace.converged,
            overhead: baseline.overhead,
        });
        for &alg in cfg.algorithms.iter().filter(|&&a| a != Algorithm::Mec) {
            let out = alg.run(&scenario, cfg.max_sweeps);
            runs.push(CellRun {
                algorithm: alg,
                converged: out.trace.converged,
                overhead: out.overhead,
            });
        }
        let base_total = runs[0].overhead.total;
        for run in runs.iter().filter(|r| cfg.algorithms.contains(&r.algorithm)) {
            if !run.converged {
                table.non_converged += 1;
            }
            let mut r = row(experiment, spec, run.algorithm, Some(seed), &run.overhead);
            r.reduction_rate = reduction_rate(base_total, run.overhead.total);
            table.rows.push(r);
        }
        per_seed.push(runs);
    }

    let n = cfg.seeds.len() as f64;
    let mean_of = |alg: Algorithm, f: &dyn Fn(&ResultRow) -> f64| -> f64 {
        per_seed
            .iter()
            .zip(&cfg.seeds)
            .map(|(runs, &seed)| {
                let run = runs.iter().find(|r| r.algorithm == alg).expect("algorithm ran");
                f(&row(experiment, spec, alg, Some(seed), &run.overhead))
            })
            .sum::<f64>()
            / n
    };
    let mec_mean = mean_of(Algorithm::Mec, &|r| r.total_overhead);
    for &alg in &cfg.algorithms {
        let total = mean_of(alg, &|r| r.total_overhead);
        table.rows.push(ResultRow {
            experiment: experiment.to_string(),
            algorithm: alg.name().to_string(),
            vehicles: spec.vehicles,
            data_bits: spec.data_bits.fixed(),
            tau_s: spec.deadline_s(),
            seed: None,
            total_overhead: total,
            mean_delay_s: mean_of(alg, &|r| r.mean_delay_s),
            mean_energy_j: mean_of(alg, &|r| r.mean_energy_j),
            reduction_rate: reduction_rate(mec_mean, total),
            success_rate: mean_of(alg, &|r| r.success_rate),
        });
    }
    Ok(table)
}

/// Overhead versus fleet size.
pub fn sweep_vehicles(vehicle_counts: &[usize], base: &ScenarioSpec, cfg: &SweepConfig) -> Result<Table, HarnessError> {
    if vehicle_counts.is_empty() {
        return Err(HarnessError::Spec("vehicle count list is empty".into()));
    }
    let mut table = Table::default();
    for &m in vehicle_counts {
        let spec = ScenarioSpec {
            vehicles: m,
            ..base.clone()
        };
        table.extend(run_cell("sweep-vehicles", &spec, cfg)?);
    }
    Ok(table)
}

/// Overhead, delay, energy and reduction rate versus a fixed task size.
pub fn sweep_data_size(sizes_bits: &[f64], base: &ScenarioSpec, cfg: &SweepConfig) -> Result<Table, HarnessError> {
    if sizes_bits.is_empty() {
        return Err(HarnessError::Spec("data size list is empty".into()));
    }
    let mut table = Table::default();
    for &bits in sizes_bits {
        let spec = ScenarioSpec {
            data_bits: Sampling::Fixed(bits),
            ..base.clone()
        };
        table.extend(run_cell("sweep-size", &spec, cfg)?);
    }
    Ok(table)
}

/// Fraction of tasks completed within each deadline.
pub fn success_rate(deadlines_s: &[f64], base: &ScenarioSpec, cfg: &SweepConfig) -> Result<Table, HarnessError> {
    if deadlines_s.is_empty() {
        return Err(HarnessError::Spec("deadline list is empty".into()));
    }
    let mut table = Table::default();
    for &tau in deadlines_s {
        let spec = ScenarioSpec {
            deadline: (!tau.is_infinite()).then_some(tau),
            ..base.clone()
        };
        table.extend(run_cell("success-rate", &spec, cfg)?);
    }
    Ok(table)
}

/// The move-by-move trajectory of one algorithm on one seeded scenario.
pub fn convergence_trace(
    spec: &ScenarioSpec,
    algorithm: Algorithm,
    seed: u64,
    params: &NetworkParams,
    max_sweeps: usize,
) -> Result<GameTrace, HarnessError> {
    let scenario = generate_scenario(spec, seed, params)?;
    Ok(algorithm.run(&scenario, max_sweeps).trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub seed: u64,
    #[serde(rename = "M")]
    pub vehicles: usize,
    pub tm_overhead: f64,
    pub como_overhead: f64,
    pub optimum_overhead: f64,
    pub tm_failed: usize,
    pub como_failed: usize,
    pub optimum_failed: usize,
    pub tm_converged: bool,
    pub ne_verified: bool,
    pub como_optimal: bool,
}

/// TM, COMO and the exhaustive optimum on each seed, with NE certification
/// of the TM result.
pub fn oracle_check(spec: &ScenarioSpec, seeds: &[u64], params: &NetworkParams, max_sweeps: usize) -> Result<Vec<OracleRow>, HarnessError> {
    seeds
        .iter()
        .map(|&seed| {
            let scenario = generate_scenario(spec, seed, params)?;
            let tm = game::run_tm(&scenario, max_sweeps);
            let como = game::run_como(&scenario, max_sweeps);
            let opt = oracle::exhaustive_optimum(&scenario)?;
            let ne = game::is_nash_equilibrium(&tm.decisions, &scenario.tasks, &scenario.params);
            Ok(OracleRow {
                seed,
                vehicles: scenario.vehicles(),
                tm_overhead: tm.overhead.total,
                como_overhead: como.overhead.total,
                optimum_overhead: opt.score.total,
                tm_failed: tm.overhead.failed,
                como_failed: como.overhead.failed,
                optimum_failed: opt.score.failed,
                tm_converged: tm.trace.converged,
                ne_verified: ne.is_equilibrium(),
                como_optimal: !opt.score.improves_on(&como.overhead.score(), 1e-9),
            })
        })
        .collect()
}

pub fn write_oracle_csv<W: io::Write>(rows: &[OracleRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_spec(vehicles: usize, bits: f64) -> ScenarioSpec {
        ScenarioSpec {
            vehicles,
            data_bits: Sampling::Fixed(bits),
            alpha: Sampling::Fixed(0.5),
            mu: Sampling::Fixed(1.0),
            deadline: None,
        }
    }

    #[test]
    fn degenerate_spec_gives_identical_tasks() {
        let s = generate_scenario(&fixed_spec(100, 15e6), 1, &NetworkParams::table1()).unwrap();
        assert_eq!(s.vehicles(), 100);
        assert!(s.tasks.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn same_seed_same_scenario() {
        let p = NetworkParams::table1();
        let spec = ScenarioSpec::success_default(20);
        assert_eq!(generate_scenario(&spec, 7, &p).unwrap(), generate_scenario(&spec, 7, &p).unwrap());
        assert_ne!(generate_scenario(&spec, 7, &p).unwrap(), generate_scenario(&spec, 8, &p).unwrap());
    }

    #[test]
    fn uniform_mu_has_the_right_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mu = Sampling::Uniform { uniform: [0.5, 1.0] };
        let n = 10_000;
        let mean = (0..n).map(|_| mu.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.75).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn choice_only_yields_listed_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alpha = Sampling::Choice { choice: vec![0.0, 0.5, 1.0] };
        let seen: Vec<f64> = (0..300).map(|_| alpha.sample(&mut rng)).collect();
        for v in [0.0, 0.5, 1.0] {
            assert!(seen.contains(&v));
        }
        assert!(seen.iter().all(|v| [0.0, 0.5, 1.0].contains(v)));
    }

    #[test]
    fn bad_specs_are_rejected() {
        let p = NetworkParams::table1();
        let mut spec = fixed_spec(0, 1e6);
        assert!(matches!(generate_scenario(&spec, 0, &p), Err(HarnessError::Spec(_))));
        spec.vehicles = 2;
        spec.alpha = Sampling::Fixed(2.0);
        assert!(matches!(generate_scenario(&spec, 0, &p), Err(HarnessError::Model(_))));
        spec.alpha = Sampling::Uniform { uniform: [1.0, 0.0] };
        assert!(matches!(generate_scenario(&spec, 0, &p), Err(HarnessError::Spec(_))));
        spec.alpha = Sampling::Fixed(0.5);
        spec.deadline = Some(-1.0);
        assert!(matches!(generate_scenario(&spec, 0, &p), Err(HarnessError::Spec(_))));
    }

    #[test]
    fn sampling_parses_from_json() {
        let s: Sampling = serde_json::from_str("1.5e7").unwrap();
        assert_eq!(s, Sampling::Fixed(1.5e7));
        let s: Sampling = serde_json::from_str(r#"{"uniform":[0.5,1]}"#).unwrap();
        assert_eq!(s, Sampling::Uniform { uniform: [0.5, 1.0] });
        let s: Sampling = serde_json::from_str(r#"{"choice":[0,0.5,1]}"#).unwrap();
        assert_eq!(s, Sampling::Choice { choice: vec![0.0, 0.5, 1.0] });
    }

    #[test]
    fn reduction_rate_properties() {
        assert_eq!(reduction_rate(10.0, 10.0), 0.0);
        let a = reduction_rate(10.0, 7.0);
        let b = reduction_rate(10.0 * 3.5, 7.0 * 3.5);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn single_cell_matches_direct_run() {
        let p = NetworkParams::table1();
        let spec = fixed_spec(5, 2e7);
        let cfg = SweepConfig::new(p.clone(), vec![Algorithm::Tm], vec![9]);
        let table = sweep_vehicles(&[5], &spec, &cfg).unwrap();
        let direct = game::run_tm(&generate_scenario(&spec, 9, &p).unwrap(), 1000);
        let per_seed = &table.rows[0];
        assert_eq!(per_seed.seed, Some(9));
        assert_eq!(per_seed.total_overhead, direct.overhead.total);
        let mean = table.means(Algorithm::Tm).next().unwrap();
        assert_eq!(mean.total_overhead, direct.overhead.total);
    }

    #[test]
    fn mec_reduction_against_itself_is_zero() {
        let cfg = SweepConfig::new(NetworkParams::table1(), vec![Algorithm::Mec], vec![1, 2]);
        let table = sweep_data_size(&[5e6], &fixed_spec(6, 5e6), &cfg).unwrap();
        assert!(table.rows.iter().all(|r| r.reduction_rate == 0.0));
    }

    #[test]
    fn extreme_deadlines() {
        let cfg = SweepConfig::new(NetworkParams::table1(), Algorithm::ALL.to_vec(), vec![1]);
        let spec = ScenarioSpec::success_default(8);
        let table = success_rate(&[1e-6, f64::INFINITY], &spec, &cfg).unwrap();
        for r in table.rows.iter().filter(|r| r.seed.is_none()) {
            let expected = if r.tau_s.is_infinite() { 1.0 } else { 0.0 };
            assert_eq!(r.success_rate, expected, "{r:?}");
        }
    }

    #[test]
    fn table_csv_header() {
        let cfg = SweepConfig::new(NetworkParams::table1(), vec![Algorithm::Tm], vec![1]);
        let table = sweep_vehicles(&[2], &fixed_spec(2, 5e6), &cfg).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text.lines().nth(1).unwrap().starts_with("sweep-vehicles,tm,2,5000000.0,inf,1,"));
        assert_eq!(text.lines().count(), 3);
    }
}

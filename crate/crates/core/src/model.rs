//! Domain types: tasks, link/network constants, offloading modes and the
//! joint decision vector.
//!
//! Every quantity is stored in SI units (bits, seconds, joules, watts,
//! hertz, metres). Table defaults follow the highway scenario the simulator
//! is calibrated against: 10 MHz communication links, 4 MHz migration links,
//! a 1 GHz on-board CPU and a 5 GHz roadside server.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when a task or parameter set violates a model constraint.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A named constraint (`C1`..`C4`, `C12`, `C13`, or `positivity`) failed.
    #[error("constraint {constraint} violated: {detail}")]
    Constraint {
        constraint: &'static str,
        detail: String,
    },
    #[error("mode code {0} is not in {{0,1,2,3,4}}")]
    InvalidMode(u8),
    #[error("scenario must contain at least one vehicle")]
    EmptyScenario,
}

impl ModelError {
    fn constraint(constraint: &'static str, detail: impl Into<String>) -> Self {
        ModelError::Constraint {
            constraint,
            detail: detail.into(),
        }
    }

    /// The constraint identifier, when this error names one.
    pub fn constraint_id(&self) -> Option<&'static str> {
        match self {
            ModelError::Constraint { constraint, .. } => Some(constraint),
            _ => None,
        }
    }
}

/// How a vehicle processes its task and how the result comes back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    /// Execute on the vehicle's own CPU.
    Local = 0,
    /// Offload to an idle neighbour over the V2V communication link.
    V2v = 1,
    /// Offload to the RSU and receive the result directly.
    V2i = 2,
    /// Offload to the RSU, relay the result back along vehicles.
    V2vMigration = 3,
    /// Offload to the RSU, relay the result back along RSUs.
    I2iMigration = 4,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Local,
        Mode::V2v,
        Mode::V2i,
        Mode::V2vMigration,
        Mode::I2iMigration,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, ModelError> {
        Mode::ALL
            .get(code as usize)
            .copied()
            .ok_or(ModelError::InvalidMode(code))
    }

    /// Modes whose computation happens at the roadside unit.
    pub fn is_rsu(self) -> bool {
        matches!(self, Mode::V2i | Mode::V2vMigration | Mode::I2iMigration)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::V2v => "v2v",
            Mode::V2i => "v2i",
            Mode::V2vMigration => "v2v-migration",
            Mode::I2iMigration => "i2i-migration",
        }
    }
}

impl TryFrom<u8> for Mode {
    type Error = ModelError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Mode::from_code(code)
    }
}

impl From<Mode> for u8 {
    fn from(mode: Mode) -> u8 {
        mode.code()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Transmit power, bandwidth and channel gain of one link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    /// W
    pub power: f64,
    /// Hz
    pub bandwidth: f64,
    /// Dimensionless power gain.
    pub gain: f64,
    /// Upper bound on `power`, W.
    pub max_power: f64,
}

impl LinkParams {
    /// A link whose gain follows the path-loss law `distance^-theta` and
    /// whose power cap equals the nominal power.
    pub fn with_path_loss(power: f64, bandwidth: f64, distance: f64, theta: f64) -> Self {
        LinkParams {
            power,
            bandwidth,
            gain: distance.powf(-theta),
            max_power: power,
        }
    }

    /// Received signal power `p * h`.
    pub fn received_power(&self) -> f64 {
        self.power * self.gain
    }
}

/// Physical and channel constants shared by every vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    /// CPU cycles per input bit.
    pub delta: f64,
    /// Ratio of input size to result size.
    pub xi: f64,
    /// Vehicle CPU frequency, Hz.
    pub f_ue: f64,
    /// RSU CPU frequency, Hz.
    pub f_mec: f64,
    /// Effective switched capacitance of the on-board CPU.
    pub k: f64,
    /// White-noise power, W.
    pub noise: f64,
    /// Average vehicle speed, m/s.
    pub speed: f64,
    /// Average inter-vehicle spacing, m.
    pub l_v2v: f64,
    /// RSU spacing, equal to the RSU coverage diameter, m.
    pub l_i2i: f64,
    /// Vehicle-to-RSU distance, m.
    pub l_v2i: f64,
    /// Path-loss exponent.
    pub theta: f64,
    pub v2v_comm: LinkParams,
    pub v2i_comm: LinkParams,
    pub v2v_mig: LinkParams,
    pub i2i_mig: LinkParams,
}

/// Converts km/h to m/s.
pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / 3.6
}

impl NetworkParams {
    /// The reference highway parameter set.
    pub fn table1() -> Self {
        let theta = 4.0;
        let l_v2v = 100.0;
        let l_i2i = 300.0;
        let l_v2i = 100.0;
        NetworkParams {
            delta: 3.055e3,
            xi: 100.0,
            f_ue: 1e9,
            f_mec: 5e9,
            k: 1e-28,
            noise: 1e-10,
            speed: kmh_to_ms(108.0),
            l_v2v,
            l_i2i,
            l_v2i,
            theta,
            v2v_comm: LinkParams::with_path_loss(0.1, 10e6, l_v2v, theta),
            v2i_comm: LinkParams::with_path_loss(0.4, 10e6, l_v2i, theta),
            v2v_mig: LinkParams::with_path_loss(0.1, 4e6, l_v2v, theta),
            i2i_mig: LinkParams::with_path_loss(0.4, 4e6, l_i2i, theta),
        }
    }

    /// Checks positivity of every constant and the per-link power caps.
    /// The error names the first violated constraint.
    pub fn validate(&self) -> Result<(), ModelError> {
        let scalars = [
            ("delta", self.delta),
            ("xi", self.xi),
            ("f_ue", self.f_ue),
            ("f_mec", self.f_mec),
            ("k", self.k),
            ("noise", self.noise),
            ("speed", self.speed),
            ("l_v2v", self.l_v2v),
            ("l_i2i", self.l_i2i),
            ("l_v2i", self.l_v2i),
            ("theta", self.theta),
        ];
        for (name, value) in scalars {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::constraint(
                    "positivity",
                    format!("{name} must be finite and > 0, got {value}"),
                ));
            }
        }
        let links = [
            ("C1", "v2v_comm", &self.v2v_comm),
            ("C2", "v2i_comm", &self.v2i_comm),
            ("C3", "v2v_mig", &self.v2v_mig),
            ("C4", "i2i_mig", &self.i2i_mig),
        ];
        for (id, name, link) in links {
            for (field, value) in [
                ("power", link.power),
                ("bandwidth", link.bandwidth),
                ("gain", link.gain),
                ("max_power", link.max_power),
            ] {
                let ok = if field == "power" { value >= 0.0 } else { value > 0.0 };
                if !(value.is_finite() && ok) {
                    let bound = if field == "power" { ">= 0" } else { "> 0" };
                    return Err(ModelError::constraint(
                        "positivity",
                        format!("{name}.{field} must be finite and {bound}, got {value}"),
                    ));
                }
            }
            if link.power > link.max_power {
                return Err(ModelError::constraint(
                    id,
                    format!(
                        "{name}.power {} W exceeds cap {} W",
                        link.power, link.max_power
                    ),
                ));
            }
        }
        Ok(())
    }
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams::table1()
    }
}

/// One vehicle's computation job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    /// Input size, bits.
    pub data_in: f64,
    /// Required CPU cycles.
    pub cycles: f64,
    /// Result size, bits.
    pub data_out: f64,
    /// Maximum tolerated delay, s. `None` in serialized form means unbounded.
    #[serde(with = "deadline_serde")]
    pub deadline: f64,
    /// Delay weight.
    pub alpha: f64,
    /// Energy weight, always `1 - alpha`.
    pub beta: f64,
    /// Fraction of the on-board CPU available to the task.
    pub mu: f64,
}

impl Task {
    pub fn new(
        data_in: f64,
        deadline: f64,
        alpha: f64,
        mu: f64,
        params: &NetworkParams,
    ) -> Result<Self, ModelError> {
        let task = Task {
            data_in,
            cycles: params.delta * data_in,
            data_out: data_in / params.xi,
            deadline,
            alpha,
            beta: 1.0 - alpha,
            mu,
        };
        task.validate(params)?;
        Ok(task)
    }

    /// Re-checks the derived fields against `params` along with the weight
    /// and resource-fraction constraints.
    pub fn validate(&self, params: &NetworkParams) -> Result<(), ModelError> {
        if !(self.data_in.is_finite() && self.data_in > 0.0) {
            return Err(ModelError::constraint(
                "positivity",
                format!("data_in must be > 0, got {}", self.data_in),
            ));
        }
        if self.deadline.is_nan() || self.deadline <= 0.0 {
            return Err(ModelError::constraint(
                "positivity",
                format!("deadline must be > 0, got {}", self.deadline),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ModelError::constraint(
                "C12",
                format!("alpha must lie in [0, 1], got {}", self.alpha),
            ));
        }
        if self.beta != 1.0 - self.alpha {
            return Err(ModelError::constraint(
                "C12",
                format!("alpha + beta must be 1, got {} + {}", self.alpha, self.beta),
            ));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(ModelError::constraint(
                "C13",
                format!("mu must lie in (0, 1], got {}", self.mu),
            ));
        }
        if self.cycles != params.delta * self.data_in {
            return Err(ModelError::constraint(
                "positivity",
                format!("cycles {} != delta * data_in", self.cycles),
            ));
        }
        if self.data_out != self.data_in / params.xi {
            return Err(ModelError::constraint(
                "positivity",
                format!("data_out {} != data_in / xi", self.data_out),
            ));
        }
        Ok(())
    }
}

mod deadline_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// The joint offloading decision, one mode per vehicle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionVector(Vec<Mode>);

impl DecisionVector {
    pub fn new(modes: Vec<Mode>) -> Self {
        DecisionVector(modes)
    }

    pub fn all_local(vehicles: usize) -> Self {
        DecisionVector(vec![Mode::Local; vehicles])
    }

    pub fn from_codes(codes: &[u8]) -> Result<Self, ModelError> {
        codes
            .iter()
            .map(|&c| Mode::from_code(c))
            .collect::<Result<Vec<_>, _>>()
            .map(DecisionVector)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, m: usize) -> Option<Mode> {
        self.0.get(m).copied()
    }

    pub fn set(&mut self, m: usize, mode: Mode) {
        self.0[m] = mode;
    }

    /// A copy with vehicle `m` switched to `mode`.
    pub fn with(&self, m: usize, mode: Mode) -> Self {
        let mut next = self.clone();
        next.0[m] = mode;
        next
    }

    /// Number of vehicles using each mode, indexed by mode code.
    pub fn histogram(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for mode in &self.0 {
            counts[mode.code() as usize] += 1;
        }
        counts
    }

    pub fn codes(&self) -> Vec<u8> {
        self.0.iter().map(|m| m.code()).collect()
    }
}

impl std::ops::Index<usize> for DecisionVector {
    type Output = Mode;

    fn index(&self, m: usize) -> &Mode {
        &self.0[m]
    }
}

impl fmt::Display for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, mode) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{mode}")?;
        }
        write!(f, ")")
    }
}

/// Why a mode cannot serve a task under a given joint decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Infeasibility {
    /// Delay exceeds the task deadline.
    Deadline,
    /// The vehicle leaves RSU coverage before the result is ready, so the
    /// direct return path is unusable.
    LeavesCoverage,
    /// The vehicle is still in coverage when the result is ready; migration
    /// is unnecessary.
    MigrationUnnecessary,
    /// The vehicle outruns the V2V relay chain.
    CannotCatchV2v,
    /// The vehicle outruns the I2I relay chain.
    CannotCatchI2i,
    /// A required link has zero rate.
    ZeroRate,
}

impl Infeasibility {
    pub fn reason(self) -> &'static str {
        match self {
            Infeasibility::Deadline => "deadline exceeded",
            Infeasibility::LeavesCoverage => "vehicle leaves RSU coverage",
            Infeasibility::MigrationUnnecessary => "migration unnecessary",
            Infeasibility::CannotCatchV2v => "vehicle cannot catch V2V relay",
            Infeasibility::CannotCatchI2i => "vehicle cannot catch I2I relay",
            Infeasibility::ZeroRate => "zero link rate",
        }
    }
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.reason())
    }
}

/// Delay, energy and weighted overhead of one vehicle under one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub mode: Mode,
    /// s
    pub delay: f64,
    /// J
    pub energy: f64,
    /// `alpha * delay + beta * energy`
    pub overhead: f64,
    pub feasible: bool,
    /// Migration hop count (vehicles for mode 3, RSUs for mode 4).
    pub hops: u32,
    pub infeasibility: Option<Infeasibility>,
}

impl CostBreakdown {
    pub(crate) fn new(mode: Mode, task: &Task, delay: f64, energy: f64, hops: u32) -> Self {
        let overhead = task.alpha * delay + task.beta * energy;
        let infeasibility = (delay > task.deadline).then_some(Infeasibility::Deadline);
        CostBreakdown {
            mode,
            delay,
            energy,
            overhead,
            feasible: infeasibility.is_none(),
            hops,
            infeasibility,
        }
    }

    pub(crate) fn infeasible(mode: Mode, task: &Task, delay: f64, energy: f64, why: Infeasibility) -> Self {
        let mut cost = CostBreakdown::new(mode, task, delay, energy, 0);
        cost.feasible = false;
        cost.infeasibility = Some(why);
        cost
    }
}

/// Network constants plus the tasks of every vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: NetworkParams,
    pub tasks: Vec<Task>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(params: NetworkParams, tasks: Vec<Task>, seed: u64) -> Result<Self, ModelError> {
        let scenario = Scenario {
            params,
            tasks,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.tasks.is_empty() {
            return Err(ModelError::EmptyScenario);
        }
        self.params.validate()?;
        for task in &self.tasks {
            task.validate(&self.params)?;
        }
        Ok(())
    }

    pub fn vehicles(&self) -> usize {
        self.tasks.len()
    }
}

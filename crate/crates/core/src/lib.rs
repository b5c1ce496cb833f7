//! Game-theoretic task offloading and result migration for MEC-assisted
//! vehicular networks.
//!
//! Each vehicle picks one of five processing modes (local, V2V, V2I, V2I
//! with V2V result migration, V2I with I2I result migration). Costs depend on
//! the joint decision through co-channel interference, and two distributed
//! algorithms search for a good joint decision: TM (selfish best response,
//! converging to a Nash equilibrium) and COMO (coordinate descent on the
//! system overhead).

pub mod channel;
pub mod cli;
pub mod config;
pub mod cost;
pub mod game;
pub mod harness;
pub mod model;
pub mod oracle;

pub use channel::{LinkKind, LinkLoad};
pub use cost::{system_overhead, Score, SystemOverhead};
pub use game::{best_response, is_nash_equilibrium, run_como, run_tm, GameOutcome, GameTrace, NashCheck};
pub use harness::{generate_scenario, Algorithm, Sampling, ScenarioSpec};
pub use model::{CostBreakdown, DecisionVector, Mode, ModelError, NetworkParams, Scenario, Task};
pub use oracle::{exhaustive_optimum, mec_baseline};

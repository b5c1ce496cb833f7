//! Browser bindings for the simulator. Each exported function takes a JSON
//! request string and returns a JSON response string; the plain Rust
//! functions underneath are usable (and tested) natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use vanet_offload::cost;
use vanet_offload::harness::{generate_scenario, Algorithm, Sampling, ScenarioSpec};
use vanet_offload::model::{DecisionVector, Mode, NetworkParams, Task};

/// Upper bound on fleet size accepted from the page, to keep it responsive.
pub const MAX_VEHICLES: usize = 200;

#[derive(Debug, Clone, Deserialize)]
pub struct ModeCurveRequest {
    pub alpha: f64,
    pub mu: f64,
    /// Other vehicles occupying the same links as the evaluated one.
    pub sharers: usize,
    pub sizes_mbit: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeCurve {
    pub mode: u8,
    pub name: &'static str,
    /// `None` where the mode is infeasible.
    pub overhead: Vec<Option<f64>>,
    pub delay: Vec<f64>,
    pub energy: Vec<f64>,
    pub reason: Vec<Option<&'static str>>,
}

/// Overhead of every mode across task sizes, for one vehicle sharing its
/// links with `sharers` others in the same mode.
pub fn mode_curves(req: &ModeCurveRequest) -> Result<Vec<ModeCurve>, String> {
    if req.sharers + 1 > MAX_VEHICLES {
        return Err(format!("sharers must be below {MAX_VEHICLES}"));
    }
    let p = NetworkParams::table1();
    let tasks = req
        .sizes_mbit
        .iter()
        .map(|&mbit| Task::new(mbit * 1e6, f64::INFINITY, req.alpha, req.mu, &p).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Mode::ALL
        .into_iter()
        .map(|mode| {
            let d = DecisionVector::new(vec![mode; req.sharers + 1]);
            let costs: Vec<_> = tasks
                .iter()
                .map(|t| cost::mode_cost(mode, t, 0, &d, &p).expect("index 0 exists"))
                .collect();
            ModeCurve {
                mode: mode.code(),
                name: mode.name(),
                overhead: costs.iter().map(|c| c.feasible.then_some(c.overhead)).collect(),
                delay: costs.iter().map(|c| c.delay).collect(),
                energy: costs.iter().map(|c| c.energy).collect(),
                reason: costs.iter().map(|c| c.infeasibility.map(|i| i.reason())).collect(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Deserialize)]
pub struct FleetRequest {
    pub vehicles: usize,
    pub seed: u64,
    /// Fixed task size in Mbit; random in [5, 50] Mbit when absent.
    pub size_mbit: Option<f64>,
    pub alpha: f64,
}

impl FleetRequest {
    fn spec(&self) -> Result<ScenarioSpec, String> {
        if self.vehicles == 0 || self.vehicles > MAX_VEHICLES {
            return Err(format!("vehicles must be in 1..={MAX_VEHICLES}"));
        }
        Ok(ScenarioSpec {
            vehicles: self.vehicles,
            data_bits: match self.size_mbit {
                Some(mbit) => Sampling::Fixed(mbit * 1e6),
                None => Sampling::Uniform { uniform: [5e6, 5e7] },
            },
            alpha: Sampling::Fixed(self.alpha),
            mu: Sampling::Fixed(1.0),
            deadline: None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    /// System overhead at the start and after each accepted move.
    pub moves: Vec<f64>,
    /// System overhead at the start and after each sweep.
    pub sweeps: Vec<f64>,
    pub converged: bool,
}

/// TM and COMO trajectories on one seeded fleet.
pub fn convergence(req: &FleetRequest) -> Result<Vec<Trajectory>, String> {
    let scenario = generate_scenario(&req.spec()?, req.seed, &NetworkParams::table1()).map_err(|e| e.to_string())?;
    Ok([Algorithm::Tm, Algorithm::Como]
        .into_iter()
        .map(|alg| {
            let trace = alg.run(&scenario, 1000).trace;
            let moves = std::iter::once(trace.initial_overhead())
                .chain(trace.steps.iter().map(|s| s.system_overhead))
                .collect();
            Trajectory {
                algorithm: alg,
                moves,
                sweeps: trace.sweep_overheads,
                converged: trace.converged,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub algorithm: Algorithm,
    pub total_overhead: f64,
    pub reduction_vs_mec: f64,
    /// Vehicles per mode code 0..=4.
    pub modes: [usize; 5],
    pub sweeps: usize,
}

/// MEC, TM and COMO on one seeded fleet.
pub fn compare(req: &FleetRequest) -> Result<Vec<Comparison>, String> {
    let scenario = generate_scenario(&req.spec()?, req.seed, &NetworkParams::table1()).map_err(|e| e.to_string())?;
    let runs: Vec<_> = Algorithm::ALL.into_iter().map(|a| (a, a.run(&scenario, 1000))).collect();
    let mec = runs[0].1.overhead.total;
    Ok(runs
        .into_iter()
        .map(|(algorithm, out)| Comparison {
            algorithm,
            total_overhead: out.overhead.total,
            reduction_vs_mec: (mec - out.overhead.total) / mec,
            modes: out.decisions.histogram(),
            sweeps: out.trace.sweeps,
        })
        .collect())
}

fn call<Req: for<'de> Deserialize<'de>, Resp: Serialize>(
    request: &str,
    f: impl FnOnce(&Req) -> Result<Resp, String>,
) -> Result<String, JsError> {
    let req: Req = serde_json::from_str(request).map_err(|e| JsError::new(&e.to_string()))?;
    let resp = f(&req).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&resp).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = modeCurves)]
pub fn mode_curves_js(request: &str) -> Result<String, JsError> {
    call(request, mode_curves)
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(request: &str) -> Result<String, JsError> {
    call(request, convergence)
}

#[wasm_bindgen(js_name = compare)]
pub fn compare_js(request: &str) -> Result<String, JsError> {
    call(request, compare)
}

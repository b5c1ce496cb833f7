//! Sequential offloading game.
//!
//! Vehicles update one at a time in index order (Gauss-Seidel), starting
//! from all-local. Under TM each vehicle minimizes its own overhead; under
//! COMO each vehicle picks the mode that minimizes the system score. A move
//! is accepted only if it improves by more than [`IMPROVEMENT_TOL`]
//! (relative), which rules out floating-point livelock.

use std::io;

use serde::Serialize;

use crate::channel::{ChannelError, LinkLoad};
use crate::cost::{self, score_with_load, Score, SystemOverhead};
use crate::model::{CostBreakdown, DecisionVector, Infeasibility, Mode, NetworkParams, Scenario, Task};

/// Relative improvement a move must exceed to be accepted.
pub const IMPROVEMENT_TOL: f64 = 1e-9;

/// Subset of offloading modes available to an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const ALL: ModeSet = ModeSet(0b11111);
    /// Local, V2V and direct V2I only.
    pub const NO_MIGRATION: ModeSet = ModeSet(0b00111);

    pub fn of(modes: &[Mode]) -> Self {
        ModeSet(modes.iter().fold(0, |acc, m| acc | (1 << m.code())))
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & (1 << mode.code()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |&m| self.contains(m))
    }
}

/// Lowest-overhead feasible mode among `modes`; ties go to the smaller code.
fn argmin_feasible(
    modes: ModeSet,
    current: Mode,
    task: &Task,
    load: &LinkLoad,
    params: &NetworkParams,
) -> Option<CostBreakdown> {
    let mut best: Option<CostBreakdown> = None;
    for mode in modes.iter() {
        let c = cost::cost_after_switch(mode, current, task, load, params);
        if c.feasible && best.as_ref().map_or(true, |b| c.overhead < b.overhead) {
            best = Some(c);
        }
    }
    best
}

fn check_index(m: usize, d: &DecisionVector, tasks: &[Task]) -> Result<(), ChannelError> {
    if m >= d.len() || m >= tasks.len() {
        return Err(ChannelError::IndexOutOfRange {
            index: m,
            len: d.len().min(tasks.len()),
        });
    }
    Ok(())
}

/// Migration selection for a vehicle that offloads to its RSU: direct
/// return if it is still in coverage when the result is ready, otherwise
/// the cheaper of V2V and I2I migration. `None` if no RSU mode is feasible.
pub fn migration_select(
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Option<CostBreakdown>, ChannelError> {
    let direct = cost::v2i_cost(task, m, d, params)?;
    if direct.infeasibility != Some(Infeasibility::LeavesCoverage) {
        return Ok(direct.feasible.then_some(direct));
    }
    let v2v = cost::v2v_mig_cost(task, m, d, params)?;
    let i2i = cost::i2i_mig_cost(task, m, d, params)?;
    Ok(match (v2v.feasible, i2i.feasible) {
        (true, true) if i2i.overhead < v2v.overhead => Some(i2i),
        (true, _) => Some(v2v),
        (false, true) => Some(i2i),
        (false, false) => None,
    })
}

/// Outcome of one vehicle's best-response evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// The chosen mode; the current mode when `failed`.
    pub mode: Mode,
    /// Cost of `mode`, absent when no mode is feasible.
    pub cost: Option<CostBreakdown>,
    /// No mode in the allowed set meets the deadline and coverage constraints.
    pub failed: bool,
}

pub fn best_response(
    m: usize,
    d: &DecisionVector,
    tasks: &[Task],
    params: &NetworkParams,
) -> Result<BestResponse, ChannelError> {
    best_response_in(m, d, tasks, params, ModeSet::ALL)
}

pub fn best_response_in(
    m: usize,
    d: &DecisionVector,
    tasks: &[Task],
    params: &NetworkParams,
    modes: ModeSet,
) -> Result<BestResponse, ChannelError> {
    check_index(m, d, tasks)?;
    let load = LinkLoad::of(d);
    Ok(match argmin_feasible(modes, d[m], &tasks[m], &load, params) {
        Some(c) => BestResponse {
            mode: c.mode,
            cost: Some(c),
            failed: false,
        },
        None => BestResponse {
            mode: d[m],
            cost: None,
            failed: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepKind {
    /// The vehicle (TM) or the system (COMO) strictly improved.
    Improve,
    /// The vehicle has no feasible mode and stops transmitting.
    Park,
}

/// One accepted decision change.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub sweep: usize,
    pub vehicle: usize,
    pub old_mode: Mode,
    pub new_mode: Mode,
    pub kind: StepKind,
    /// The mover's overhead before the move; infinite if its mode was infeasible.
    pub own_before: f64,
    /// The mover's overhead after the move; infinite if infeasible.
    pub own_after: f64,
    pub per_vehicle: Vec<f64>,
    pub system_overhead: f64,
    pub failed: usize,
    /// COMO only: other vehicles re-seated because this move made their
    /// mode infeasible, as `(vehicle, old, new)`.
    pub repaired: Vec<(usize, Mode, Mode)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTrace {
    pub steps: Vec<TraceStep>,
    /// System overhead at the start (index 0) and after every sweep.
    pub sweep_overheads: Vec<f64>,
    pub converged: bool,
    /// Sweeps executed, including the final one with no change.
    pub sweeps: usize,
    /// Per-vehicle decision evaluations performed.
    pub evaluations: usize,
}

impl GameTrace {
    pub fn initial_overhead(&self) -> f64 {
        self.sweep_overheads[0]
    }

    pub fn final_overhead(&self) -> f64 {
        *self.sweep_overheads.last().expect("trace has an initial point")
    }

    /// Writes one row per accepted move, preceded by a `sweep = 0` row holding
    /// the initial system overhead.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sweep", "vehicle", "old_mode", "new_mode", "system_overhead"])?;
        w.write_record(["0", "", "", "", &self.initial_overhead().to_string()])?;
        for s in &self.steps {
            w.write_record([
                s.sweep.to_string(),
                s.vehicle.to_string(),
                s.old_mode.to_string(),
                s.new_mode.to_string(),
                s.system_overhead.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameOutcome {
    pub decisions: DecisionVector,
    pub overhead: SystemOverhead,
    pub trace: GameTrace,
}

fn own_value(c: &CostBreakdown) -> f64 {
    if c.feasible {
        c.overhead
    } else {
        f64::INFINITY
    }
}

struct Runner<'a> {
    tasks: &'a [Task],
    params: &'a NetworkParams,
    d: DecisionVector,
    load: LinkLoad,
    trace: GameTrace,
}

impl<'a> Runner<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let d = DecisionVector::all_local(scenario.vehicles());
        let initial = cost::system_overhead(&d, &scenario.tasks, &scenario.params);
        Runner {
            tasks: &scenario.tasks,
            params: &scenario.params,
            load: LinkLoad::of(&d),
            d,
            trace: GameTrace {
                steps: Vec::new(),
                sweep_overheads: vec![initial.total],
                converged: false,
                sweeps: 0,
                evaluations: 0,
            },
        }
    }

    fn current(&self, m: usize) -> CostBreakdown {
        let mode = self.d[m];
        cost::cost_after_switch(mode, mode, &self.tasks[m], &self.load, self.params)
    }

    fn apply(&mut self, sweep: usize, m: usize, mode: Mode, kind: StepKind) {
        let load = self.load.switched(self.d[m], mode);
        self.commit(sweep, m, self.d.with(m, mode), load, kind, Vec::new());
    }

    fn commit(
        &mut self,
        sweep: usize,
        m: usize,
        d: DecisionVector,
        load: LinkLoad,
        kind: StepKind,
        repaired: Vec<(usize, Mode, Mode)>,
    ) {
        let before = own_value(&self.current(m));
        let old = self.d[m];
        let mode = d[m];
        self.d = d;
        self.load = load;
        let sys = cost::system_overhead(&self.d, self.tasks, self.params);
        self.trace.steps.push(TraceStep {
            sweep,
            vehicle: m,
            old_mode: old,
            new_mode: mode,
            kind,
            own_before: before,
            own_after: own_value(&sys.per_vehicle[m]),
            per_vehicle: sys.per_vehicle.iter().map(own_value).collect(),
            system_overhead: sys.total,
            failed: sys.failed,
            repaired,
        });
    }

    fn run(mut self, max_sweeps: usize, mut update: impl FnMut(&mut Self, usize, usize) -> bool) -> GameOutcome {
        for sweep in 1..=max_sweeps {
            let mut changed = false;
            for m in 0..self.d.len() {
                self.trace.evaluations += 1;
                changed |= update(&mut self, sweep, m);
            }
            let total = cost::system_overhead(&self.d, self.tasks, self.params).total;
            self.trace.sweep_overheads.push(total);
            self.trace.sweeps = sweep;
            if !changed {
                self.trace.converged = true;
                break;
            }
        }
        GameOutcome {
            overhead: cost::system_overhead(&self.d, self.tasks, self.params),
            decisions: self.d,
            trace: self.trace,
        }
    }

    /// Selfish best response for vehicle `m`.
    fn tm_update(&mut self, sweep: usize, m: usize, modes: ModeSet) -> bool {
        let current = self.d[m];
        match argmin_feasible(modes, current, &self.tasks[m], &self.load, self.params) {
            None if current != Mode::Local => {
                self.apply(sweep, m, Mode::Local, StepKind::Park);
                true
            }
            None => false,
            Some(best) if best.mode != current => {
                let now = own_value(&self.current(m));
                if best.overhead < now - IMPROVEMENT_TOL * now.abs() || now.is_infinite() {
                    self.apply(sweep, m, best.mode, StepKind::Improve);
                    true
                } else {
                    false
                }
            }
            Some(_) => false,
        }
    }

    /// System-optimizing update for vehicle `m`. Each candidate is scored
    /// after re-seating the vehicles it would push into an infeasible mode.
    fn como_update(&mut self, sweep: usize, m: usize, modes: ModeSet) -> bool {
        let current = self.d[m];
        let now = score_with_load(&self.d, &self.load, self.tasks, self.params);
        let mut best: Option<(Score, DecisionVector, LinkLoad, Vec<(usize, Mode, Mode)>)> = None;
        for mode in modes.iter() {
            let mut candidate = self.d.with(m, mode);
            let mut load = self.load.switched(current, mode);
            let repaired = repair(&mut candidate, &mut load, self.tasks, self.params, modes, m);
            let s = score_with_load(&candidate, &load, self.tasks, self.params);
            if best.as_ref().map_or(true, |(b, ..)| s.improves_on(b, 0.0)) {
                best = Some((s, candidate, load, repaired));
            }
        }
        match best {
            Some((s, candidate, load, repaired)) if candidate[m] != current && s.improves_on(&now, IMPROVEMENT_TOL) => {
                self.commit(sweep, m, candidate, load, StepKind::Improve, repaired);
                true
            }
            _ => false,
        }
    }
}

/// Moves every vehicle except `mover` whose current mode is infeasible to
/// its best feasible mode in `modes`, or to Local when it has none, until no
/// such vehicle remains (at most one pass per vehicle).
fn repair(
    d: &mut DecisionVector,
    load: &mut LinkLoad,
    tasks: &[Task],
    params: &NetworkParams,
    modes: ModeSet,
    mover: usize,
) -> Vec<(usize, Mode, Mode)> {
    let mut moved = Vec::new();
    for _ in 0..d.len() {
        let mut changed = false;
        for g in (0..d.len()).filter(|&g| g != mover) {
            let mode = d[g];
            if cost::cost_after_switch(mode, mode, &tasks[g], load, params).feasible {
                continue;
            }
            let next = argmin_feasible(modes, mode, &tasks[g], load, params).map_or(Mode::Local, |c| c.mode);
            if next != mode {
                *load = load.switched(mode, next);
                d.set(g, next);
                moved.push((g, mode, next));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    moved
}

/// Selfish best-response dynamics over all five modes.
pub fn run_tm(scenario: &Scenario, max_sweeps: usize) -> GameOutcome {
    run_tm_in(scenario, max_sweeps, ModeSet::ALL)
}

/// Selfish best-response dynamics restricted to `modes`.
pub fn run_tm_in(scenario: &Scenario, max_sweeps: usize, modes: ModeSet) -> GameOutcome {
    assert!(max_sweeps >= 1, "max_sweeps must be at least 1");
    Runner::new(scenario).run(max_sweeps, |r, sweep, m| r.tm_update(sweep, m, modes))
}

/// Coordinate descent on the system score.
pub fn run_como(scenario: &Scenario, max_sweeps: usize) -> GameOutcome {
    assert!(max_sweeps >= 1, "max_sweeps must be at least 1");
    Runner::new(scenario).run(max_sweeps, |r, sweep, m| r.como_update(sweep, m, ModeSet::ALL))
}

#[derive(Debug, Clone, PartialEq)]
pub enum NashCheck {
    Equilibrium,
    /// `vehicle` can lower its own overhead by switching to `to`.
    Deviation {
        vehicle: usize,
        from: Mode,
        to: Mode,
        current: f64,
        improved: f64,
    },
}

impl NashCheck {
    pub fn is_equilibrium(&self) -> bool {
        matches!(self, NashCheck::Equilibrium)
    }
}

pub fn is_nash_equilibrium(d: &DecisionVector, tasks: &[Task], params: &NetworkParams) -> NashCheck {
    is_nash_equilibrium_in(d, tasks, params, ModeSet::ALL)
}

/// No vehicle with a feasible option can improve its own overhead by more
/// than [`IMPROVEMENT_TOL`] through a unilateral switch within `modes`.
/// Vehicles with no feasible mode are skipped.
pub fn is_nash_equilibrium_in(
    d: &DecisionVector,
    tasks: &[Task],
    params: &NetworkParams,
    modes: ModeSet,
) -> NashCheck {
    assert_eq!(d.len(), tasks.len());
    let load = LinkLoad::of(d);
    for (m, task) in tasks.iter().enumerate() {
        let Some(best) = argmin_feasible(modes, d[m], task, &load, params) else {
            continue;
        };
        let now = own_value(&cost::cost_after_switch(d[m], d[m], task, &load, params));
        if best.mode != d[m] && (now.is_infinite() || best.overhead < now - IMPROVEMENT_TOL * now) {
            return NashCheck::Deviation {
                vehicle: m,
                from: d[m],
                to: best.mode,
                current: now,
                improved: best.overhead,
            };
        }
    }
    NashCheck::Equilibrium
}

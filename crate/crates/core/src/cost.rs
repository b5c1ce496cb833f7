//! Delay, energy and overhead of each offloading mode, migration hop counts,
//! and the system-wide overhead of a joint decision.
//!
//! Infeasibility (deadline, coverage exit, relay catch-up) is reported as
//! data on the [`CostBreakdown`]; nothing here fails except on a bad vehicle
//! index.

use serde::Serialize;

use crate::channel::{self, ChannelError, LinkKind, LinkLoad};
use crate::model::{CostBreakdown, DecisionVector, Infeasibility, Mode, NetworkParams, Task};

/// Rates seen by one vehicle on each link class, bit/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub v2v_comm: f64,
    pub v2i_comm: f64,
    pub v2v_mig: f64,
    pub i2i_mig: f64,
}

impl Rates {
    /// Rates for a vehicle whose own decision is `own`, where `load` already
    /// counts that decision.
    pub fn from_load(load: &LinkLoad, own: Mode, params: &NetworkParams) -> Self {
        Rates {
            v2v_comm: load.rate(LinkKind::V2vComm, own, params),
            v2i_comm: load.rate(LinkKind::V2iComm, own, params),
            v2v_mig: load.rate(LinkKind::V2vMig, own, params),
            i2i_mig: load.rate(LinkKind::I2iMig, own, params),
        }
    }

    /// Rates read off the literal interference sums for vehicle `m` in `d`.
    pub fn literal(m: usize, d: &DecisionVector, params: &NetworkParams) -> Result<Self, ChannelError> {
        Ok(Rates {
            v2v_comm: channel::rate(LinkKind::V2vComm, m, d, params)?,
            v2i_comm: channel::rate(LinkKind::V2iComm, m, d, params)?,
            v2v_mig: channel::rate(LinkKind::V2vMig, m, d, params)?,
            i2i_mig: channel::rate(LinkKind::I2iMig, m, d, params)?,
        })
    }
}

/// Bracketing of a migration hop count before flooring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopBounds {
    /// Strict lower bound on the hop count.
    pub lower: f64,
    /// Midpoint of the bracket; the hop count is its floor.
    pub average: f64,
    /// Strict upper bound on the hop count.
    pub upper: f64,
}

impl HopBounds {
    pub fn hops(&self) -> u32 {
        self.average.floor() as u32
    }
}

pub fn local_cost(task: &Task, params: &NetworkParams) -> CostBreakdown {
    let freq = task.mu * params.f_ue;
    let delay = task.cycles / freq;
    let energy = params.k * task.mu * task.mu * task.cycles * params.f_ue * params.f_ue;
    CostBreakdown::new(Mode::Local, task, delay, energy, 0)
}

fn v2v_from_rate(task: &Task, params: &NetworkParams, rate: f64) -> CostBreakdown {
    let power = params.v2v_comm.power;
    // The helper vehicle runs at full f_ue and its execution energy is
    // charged to the task.
    let compute_delay = task.cycles / params.f_ue;
    let compute_energy = params.k * task.cycles * params.f_ue * params.f_ue;
    if rate <= 0.0 {
        return CostBreakdown::infeasible(
            Mode::V2v,
            task,
            f64::INFINITY,
            f64::INFINITY,
            Infeasibility::ZeroRate,
        );
    }
    let delay = task.data_in / rate + compute_delay + task.data_out / rate;
    let energy = power * task.data_in / rate + compute_energy + power * task.data_out / rate;
    CostBreakdown::new(Mode::V2v, task, delay, energy, 0)
}

/// Upload, RSU execution and direct download at the V2I rate: `(delay, energy)`.
fn v2i_terms(task: &Task, params: &NetworkParams, rate: f64) -> (f64, f64) {
    let delay = task.data_in / rate + task.cycles / params.f_mec + task.data_out / rate;
    let power = params.v2i_comm.power;
    let energy = power * task.data_in / rate + power * task.data_out / rate;
    (delay, energy)
}

/// Whether the vehicle drives out of the serving RSU's coverage before the
/// result is ready (S1).
fn leaves_coverage(params: &NetworkParams, v2i_delay: f64) -> bool {
    params.speed * v2i_delay > params.l_i2i
}

fn v2i_from_rate(task: &Task, params: &NetworkParams, rate: f64) -> CostBreakdown {
    if rate <= 0.0 {
        return CostBreakdown::infeasible(
            Mode::V2i,
            task,
            f64::INFINITY,
            f64::INFINITY,
            Infeasibility::ZeroRate,
        );
    }
    let (delay, energy) = v2i_terms(task, params, rate);
    if leaves_coverage(params, delay) {
        return CostBreakdown::infeasible(Mode::V2i, task, delay, energy, Infeasibility::LeavesCoverage);
    }
    CostBreakdown::new(Mode::V2i, task, delay, energy, 0)
}

/// Hop bracket for a relay chain with the given spacing.
fn hop_bounds(
    params: &NetworkParams,
    v2i_delay: f64,
    data_out: f64,
    mig_rate: f64,
    spacing: f64,
    catch_failure: Infeasibility,
) -> Result<HopBounds, Infeasibility> {
    if !leaves_coverage(params, v2i_delay) {
        return Err(Infeasibility::MigrationUnnecessary);
    }
    if mig_rate <= 0.0 {
        return Err(Infeasibility::ZeroRate);
    }
    let per_hop_travel = params.speed * data_out / mig_rate;
    let net_gain = spacing - per_hop_travel;
    if net_gain <= 0.0 {
        return Err(catch_failure);
    }
    let travel = params.speed * v2i_delay;
    Ok(HopBounds {
        lower: (travel - params.l_i2i) / net_gain,
        average: (2.0 * travel - params.l_i2i) / (2.0 * net_gain),
        upper: travel / net_gain,
    })
}

fn migration_from_rates(mode: Mode, task: &Task, params: &NetworkParams, rates: &Rates) -> CostBreakdown {
    if rates.v2i_comm <= 0.0 {
        return CostBreakdown::infeasible(mode, task, f64::INFINITY, f64::INFINITY, Infeasibility::ZeroRate);
    }
    let (v2i_delay, v2i_energy) = v2i_terms(task, params, rates.v2i_comm);
    let bracket = match mode {
        Mode::V2vMigration => hop_bounds(
            params,
            v2i_delay,
            task.data_out,
            rates.v2v_mig,
            params.l_v2v,
            Infeasibility::CannotCatchV2v,
        ),
        Mode::I2iMigration => hop_bounds(
            params,
            v2i_delay,
            task.data_out,
            rates.i2i_mig,
            params.l_i2i,
            Infeasibility::CannotCatchI2i,
        ),
        _ => unreachable!("not a migration mode"),
    };
    match bracket {
        Ok(bounds) => migration_with_hops(mode, task, params, rates, bounds.hops()),
        Err(why) => CostBreakdown::infeasible(mode, task, v2i_delay, v2i_energy, why),
    }
}

/// Migration cost for an explicit hop count. Relay energy is charged only
/// for V2V relays; RSU-to-RSU transmission costs the vehicle nothing.
pub fn migration_with_hops(
    mode: Mode,
    task: &Task,
    params: &NetworkParams,
    rates: &Rates,
    hops: u32,
) -> CostBreakdown {
    let (v2i_delay, v2i_energy) = v2i_terms(task, params, rates.v2i_comm);
    let hops_f = f64::from(hops);
    let (delay, energy) = match mode {
        Mode::V2vMigration => {
            let per_hop = task.data_out / rates.v2v_mig;
            (
                v2i_delay + hops_f * per_hop,
                v2i_energy + hops_f * params.v2v_mig.power * per_hop,
            )
        }
        Mode::I2iMigration => (v2i_delay + hops_f * task.data_out / rates.i2i_mig, v2i_energy),
        _ => panic!("migration_with_hops called with {mode:?}"),
    };
    CostBreakdown::new(mode, task, delay, energy, hops)
}

/// Cost of `mode` for `task` given the rates the vehicle would see.
pub fn cost_with_rates(mode: Mode, task: &Task, params: &NetworkParams, rates: &Rates) -> CostBreakdown {
    match mode {
        Mode::Local => local_cost(task, params),
        Mode::V2v => v2v_from_rate(task, params, rates.v2v_comm),
        Mode::V2i => v2i_from_rate(task, params, rates.v2i_comm),
        Mode::V2vMigration | Mode::I2iMigration => migration_from_rates(mode, task, params, rates),
    }
}

/// Cost of vehicle `m` switching to `mode`, where `load` is the link load of
/// the joint decision *before* the switch and `current` is its present mode.
pub fn cost_after_switch(
    mode: Mode,
    current: Mode,
    task: &Task,
    load: &LinkLoad,
    params: &NetworkParams,
) -> CostBreakdown {
    let load = load.switched(current, mode);
    cost_with_rates(mode, task, params, &Rates::from_load(&load, mode, params))
}

fn candidate(m: usize, d: &DecisionVector, mode: Mode) -> Result<DecisionVector, ChannelError> {
    if m >= d.len() {
        return Err(ChannelError::IndexOutOfRange { index: m, len: d.len() });
    }
    Ok(d.with(m, mode))
}

pub fn v2v_cost(task: &Task, m: usize, d: &DecisionVector, params: &NetworkParams) -> Result<CostBreakdown, ChannelError> {
    let d = candidate(m, d, Mode::V2v)?;
    let rate = channel::rate(LinkKind::V2vComm, m, &d, params)?;
    Ok(v2v_from_rate(task, params, rate))
}

pub fn v2i_cost(task: &Task, m: usize, d: &DecisionVector, params: &NetworkParams) -> Result<CostBreakdown, ChannelError> {
    let d = candidate(m, d, Mode::V2i)?;
    let rate = channel::rate(LinkKind::V2iComm, m, &d, params)?;
    Ok(v2i_from_rate(task, params, rate))
}

fn hops_for(
    mode: Mode,
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Result<HopBounds, Infeasibility>, ChannelError> {
    let d = candidate(m, d, mode)?;
    let r_v2i = channel::rate(LinkKind::V2iComm, m, &d, params)?;
    if r_v2i <= 0.0 {
        return Ok(Err(Infeasibility::ZeroRate));
    }
    let (v2i_delay, _) = v2i_terms(task, params, r_v2i);
    Ok(match mode {
        Mode::V2vMigration => hop_bounds(
            params,
            v2i_delay,
            task.data_out,
            channel::rate(LinkKind::V2vMig, m, &d, params)?,
            params.l_v2v,
            Infeasibility::CannotCatchV2v,
        ),
        _ => hop_bounds(
            params,
            v2i_delay,
            task.data_out,
            channel::rate(LinkKind::I2iMig, m, &d, params)?,
            params.l_i2i,
            Infeasibility::CannotCatchI2i,
        ),
    })
}

/// Hop bracket for V2V result migration with vehicle `m` in mode 3.
pub fn v2v_mig_bounds(
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Result<HopBounds, Infeasibility>, ChannelError> {
    hops_for(Mode::V2vMigration, task, m, d, params)
}

/// Hop bracket for I2I result migration with vehicle `m` in mode 4.
pub fn i2i_mig_bounds(
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Result<HopBounds, Infeasibility>, ChannelError> {
    hops_for(Mode::I2iMigration, task, m, d, params)
}

/// Number of vehicles the result is relayed across, or why V2V migration
/// cannot work.
pub fn v2v_mig_hops(
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Result<u32, Infeasibility>, ChannelError> {
    Ok(v2v_mig_bounds(task, m, d, params)?.map(|b| b.hops()))
}

/// Number of RSUs the result is relayed across, or why I2I migration
/// cannot work.
pub fn i2i_mig_hops(
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<Result<u32, Infeasibility>, ChannelError> {
    Ok(i2i_mig_bounds(task, m, d, params)?.map(|b| b.hops()))
}

pub fn v2v_mig_cost(task: &Task, m: usize, d: &DecisionVector, params: &NetworkParams) -> Result<CostBreakdown, ChannelError> {
    mode_cost(Mode::V2vMigration, task, m, d, params)
}

pub fn i2i_mig_cost(task: &Task, m: usize, d: &DecisionVector, params: &NetworkParams) -> Result<CostBreakdown, ChannelError> {
    mode_cost(Mode::I2iMigration, task, m, d, params)
}

/// Cost of vehicle `m` using `mode` while everyone else keeps their
/// decision in `d`. Rates come from the literal interference sums.
pub fn mode_cost(
    mode: Mode,
    task: &Task,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<CostBreakdown, ChannelError> {
    let d = candidate(m, d, mode)?;
    let rates = Rates::literal(m, &d, params)?;
    Ok(cost_with_rates(mode, task, params, &rates))
}

/// Infeasible-vehicle count and overhead of the feasible ones. Ordered
/// lexicographically: fewer failures first, then lower overhead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub failed: usize,
    pub total: f64,
}

impl Score {
    /// Strictly better by more than `rel_tol` of the current total.
    pub fn improves_on(&self, current: &Score, rel_tol: f64) -> bool {
        match self.failed.cmp(&current.failed) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.total < current.total - rel_tol * current.total.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemOverhead {
    /// Sum of overheads over vehicles whose chosen mode is feasible.
    pub total: f64,
    pub per_vehicle: Vec<CostBreakdown>,
    /// Vehicles whose chosen mode is infeasible; they contribute nothing to
    /// `total`.
    pub failed: usize,
}

impl SystemOverhead {
    pub fn score(&self) -> Score {
        Score {
            failed: self.failed,
            total: self.total,
        }
    }

    pub fn completed(&self) -> usize {
        self.per_vehicle.len() - self.failed
    }

    /// Mean delay and energy over completed tasks, `(0, 0)` if none.
    pub fn completed_means(&self) -> (f64, f64) {
        let done: Vec<&CostBreakdown> = self.per_vehicle.iter().filter(|c| c.feasible).collect();
        if done.is_empty() {
            return (0.0, 0.0);
        }
        let n = done.len() as f64;
        (
            done.iter().map(|c| c.delay).sum::<f64>() / n,
            done.iter().map(|c| c.energy).sum::<f64>() / n,
        )
    }
}

fn summarize(per_vehicle: Vec<CostBreakdown>) -> SystemOverhead {
    let failed = per_vehicle.iter().filter(|c| !c.feasible).count();
    let total = per_vehicle.iter().filter(|c| c.feasible).map(|c| c.overhead).sum();
    SystemOverhead {
        total,
        per_vehicle,
        failed,
    }
}

/// Overhead of every vehicle under `d`.
///
/// # Panics
/// If `d` and `tasks` differ in length.
pub fn system_overhead(d: &DecisionVector, tasks: &[Task], params: &NetworkParams) -> SystemOverhead {
    assert_eq!(d.len(), tasks.len(), "decision vector and task list differ in length");
    let load = LinkLoad::of(d);
    let per_vehicle = tasks
        .iter()
        .zip(d.modes())
        .map(|(task, &mode)| cost_with_rates(mode, task, params, &Rates::from_load(&load, mode, params)))
        .collect();
    summarize(per_vehicle)
}

/// Lexicographic score of `d` without materializing the per-vehicle list.
pub fn system_score(d: &DecisionVector, tasks: &[Task], params: &NetworkParams) -> Score {
    score_with_load(d, &LinkLoad::of(d), tasks, params)
}

pub(crate) fn score_with_load(d: &DecisionVector, load: &LinkLoad, tasks: &[Task], params: &NetworkParams) -> Score {
    let mut score = Score { failed: 0, total: 0.0 };
    for (task, &mode) in tasks.iter().zip(d.modes()) {
        let cost = cost_with_rates(mode, task, params, &Rates::from_load(load, mode, params));
        if cost.feasible {
            score.total += cost.overhead;
        } else {
            score.failed += 1;
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn task(bits: f64, alpha: f64, mu: f64) -> Task {
        Task::new(bits, INF, alpha, mu, &NetworkParams::table1()).unwrap()
    }

    fn dv(codes: &[u8]) -> DecisionVector {
        DecisionVector::from_codes(codes).unwrap()
    }

    #[test]
    fn local_reference_values() {
        let p = NetworkParams::table1();
        let c = local_cost(&task(5e6, 0.5, 1.0), &p);
        assert_relative_eq!(c.delay, 15.275, max_relative = 1e-12);
        assert_relative_eq!(c.energy, 1.5275, max_relative = 1e-12);
        assert_relative_eq!(c.overhead, 8.40125, max_relative = 1e-12);
        assert_eq!(c.hops, 0);
        assert!(c.feasible);
    }

    #[test]
    fn local_scales_with_mu() {
        let c = local_cost(&task(5e6, 0.5, 0.5), &NetworkParams::table1());
        assert_relative_eq!(c.delay, 30.55, max_relative = 1e-12);
        assert_relative_eq!(c.energy, 0.381875, max_relative = 1e-12);
    }

    #[test]
    fn delay_only_weight() {
        let c = local_cost(&task(5e6, 1.0, 1.0), &NetworkParams::table1());
        assert_eq!(c.overhead, c.delay);
    }

    #[test]
    fn local_deadline() {
        let p = NetworkParams::table1();
        let t = Task::new(5e6, 15.0, 0.5, 1.0, &p).unwrap();
        let c = local_cost(&t, &p);
        assert!(!c.feasible);
        assert_eq!(c.infeasibility, Some(Infeasibility::Deadline));
    }

    #[test]
    fn sole_v2v_user() {
        let p = NetworkParams::table1();
        let c = v2v_cost(&task(5e6, 0.5, 1.0), 0, &dv(&[1]), &p).unwrap();
        let r = 1e7 * 11f64.log2();
        assert_relative_eq!(c.delay, 5.05e6 / r + 15.275, max_relative = 1e-12);
        assert_relative_eq!(c.delay, 15.4210, max_relative = 1e-5);
    }

    #[test]
    fn two_v2v_users_are_symmetric_and_slower() {
        let p = NetworkParams::table1();
        let t = task(5e6, 0.5, 1.0);
        let sole = v2v_cost(&t, 0, &dv(&[1, 0]), &p).unwrap();
        let a = v2v_cost(&t, 0, &dv(&[1, 1]), &p).unwrap();
        let b = v2v_cost(&t, 1, &dv(&[1, 1]), &p).unwrap();
        assert_eq!(a.delay, b.delay);
        assert!(a.delay > sole.delay);
        assert!(a.energy > sole.energy);
    }

    #[test]
    fn v2i_small_task_stays_in_coverage() {
        let p = NetworkParams::table1();
        let c = v2i_cost(&task(5e6, 0.5, 1.0), 0, &dv(&[2]), &p).unwrap();
        assert_relative_eq!(c.delay, 3.14926, max_relative = 1e-5);
        assert!(p.speed * c.delay <= p.l_i2i);
        assert!(c.feasible);
    }

    #[test]
    fn v2i_large_task_leaves_coverage() {
        let p = NetworkParams::table1();
        let c = v2i_cost(&task(5e7, 0.5, 1.0), 0, &dv(&[2]), &p).unwrap();
        assert_relative_eq!(c.delay, 31.4926, max_relative = 1e-5);
        assert!(!c.feasible);
        assert_eq!(c.infeasibility, Some(Infeasibility::LeavesCoverage));
    }

    #[test]
    fn energy_only_weight_on_v2i() {
        let p = NetworkParams::table1();
        let c = v2i_cost(&task(5e6, 0.0, 1.0), 0, &dv(&[2]), &p).unwrap();
        assert_eq!(c.overhead, c.energy);
    }

    #[test]
    fn migration_hops_for_large_task() {
        let p = NetworkParams::table1();
        let t = task(5e7, 0.5, 1.0);
        assert_eq!(v2v_mig_hops(&t, 0, &dv(&[3]), &p).unwrap(), Ok(8));
        assert_eq!(i2i_mig_hops(&t, 0, &dv(&[4]), &p).unwrap(), Ok(2));
    }

    #[test]
    fn migration_unnecessary_when_in_coverage() {
        let p = NetworkParams::table1();
        let t = task(5e6, 0.5, 1.0);
        assert_eq!(
            v2v_mig_hops(&t, 0, &dv(&[3]), &p).unwrap(),
            Err(Infeasibility::MigrationUnnecessary)
        );
        let c = mode_cost(Mode::V2vMigration, &t, 0, &dv(&[0]), &p).unwrap();
        assert!(!c.feasible);
        assert_eq!(c.infeasibility.unwrap().reason(), "migration unnecessary");
    }

    #[test]
    fn relay_too_slow_to_catch() {
        let mut p = NetworkParams::table1();
        let t = task(5e7, 0.5, 1.0);
        p.speed = 30.0;
        p.l_v2v = 1.0;
        assert_eq!(
            v2v_mig_hops(&t, 0, &dv(&[3]), &p).unwrap(),
            Err(Infeasibility::CannotCatchV2v)
        );
        let mut p = NetworkParams::table1();
        p.i2i_mig.bandwidth = 1e3;
        assert_eq!(
            i2i_mig_hops(&t, 0, &dv(&[4]), &p).unwrap(),
            Err(Infeasibility::CannotCatchI2i)
        );
    }

    #[test]
    fn instantaneous_i2i_transfer() {
        // data_out -> 0 via a huge xi: hops reduce to (2vT - L)/(2L).
        let p = NetworkParams {
            xi: 1e300,
            ..NetworkParams::table1()
        };
        let t = Task::new(5e7, INF, 0.5, 1.0, &p).unwrap();
        let r = 1e7 * 41f64.log2();
        let travel = p.speed * (t.data_in / r + t.cycles / p.f_mec);
        let expected = ((2.0 * travel - p.l_i2i) / (2.0 * p.l_i2i)).floor() as u32;
        assert_eq!(i2i_mig_hops(&t, 0, &dv(&[4]), &p).unwrap(), Ok(expected));
    }

    #[test]
    fn v2v_migration_reference() {
        let p = NetworkParams::table1();
        let c = v2v_mig_cost(&task(5e7, 0.5, 1.0), 0, &dv(&[3]), &p).unwrap();
        assert_eq!(c.hops, 8);
        assert_relative_eq!(c.delay, 31.7817, max_relative = 1e-5);
        assert_relative_eq!(c.energy, 0.40594, max_relative = 1e-4);
    }

    #[test]
    fn i2i_migration_reference() {
        let p = NetworkParams::table1();
        let t = task(5e7, 0.5, 1.0);
        let c = i2i_mig_cost(&t, 0, &dv(&[4]), &p).unwrap();
        assert_eq!(c.hops, 2);
        assert_relative_eq!(c.delay, 31.9244, max_relative = 1e-5);
        let v2i = v2i_cost(&t, 0, &dv(&[2]), &p).unwrap();
        assert_eq!(c.energy, v2i.energy);
    }

    #[test]
    fn zero_hops_reduce_to_v2i() {
        let p = NetworkParams::table1();
        let t = task(5e7, 0.5, 1.0);
        let rates = Rates::literal(0, &dv(&[3]), &p).unwrap();
        let v2i = v2i_cost(&t, 0, &dv(&[2]), &p).unwrap();
        for mode in [Mode::V2vMigration, Mode::I2iMigration] {
            let c = migration_with_hops(mode, &t, &p, &rates, 0);
            assert_eq!(c.delay, v2i.delay);
            assert_eq!(c.energy, v2i.energy);
        }
    }

    #[test]
    fn zero_rate_is_infeasible() {
        let mut p = NetworkParams::table1();
        p.v2i_comm.power = 0.0;
        let t = task(5e6, 0.5, 1.0);
        for mode in [Mode::V2i, Mode::V2vMigration, Mode::I2iMigration] {
            let c = mode_cost(mode, &t, 0, &dv(&[0]), &p).unwrap();
            assert_eq!(c.infeasibility, Some(Infeasibility::ZeroRate));
        }
    }

    #[test]
    fn mode_cost_dispatch() {
        let p = NetworkParams::table1();
        let t = task(5e6, 0.5, 1.0);
        assert_eq!(mode_cost(Mode::Local, &t, 0, &dv(&[0]), &p).unwrap(), local_cost(&t, &p));
        let big = task(5e7, 0.5, 1.0);
        assert!(!mode_cost(Mode::V2i, &big, 0, &dv(&[2]), &p).unwrap().feasible);
    }

    #[test]
    fn system_overhead_cases() {
        let p = NetworkParams::table1();
        let t = task(5e6, 0.5, 1.0);
        let s = system_overhead(&dv(&[0]), std::slice::from_ref(&t), &p);
        assert_relative_eq!(s.total, 8.40125, max_relative = 1e-12);
        assert_eq!(s.failed, 0);

        let empty = system_overhead(&DecisionVector::new(vec![]), &[], &p);
        assert_eq!((empty.total, empty.failed), (0.0, 0));

        let pair = [t.clone(), t.clone()];
        let s = system_overhead(&dv(&[1, 1]), &pair, &p);
        let shared = v2v_cost(&t, 0, &dv(&[1, 1]), &p).unwrap();
        assert_relative_eq!(s.total, 2.0 * shared.overhead, max_relative = 1e-12);
    }

    #[test]
    fn infeasible_choice_counts_as_failed() {
        let p = NetworkParams::table1();
        let tasks = [task(5e7, 0.5, 1.0)];
        let s = system_overhead(&dv(&[2]), &tasks, &p);
        assert_eq!((s.total, s.failed), (0.0, 1));
        assert_eq!(system_score(&dv(&[2]), &tasks, &p), s.score());
    }

    #[test]
    fn score_ordering() {
        let a = Score { failed: 0, total: 10.0 };
        let b = Score { failed: 1, total: 1.0 };
        assert!(a.improves_on(&b, 1e-9));
        assert!(!b.improves_on(&a, 1e-9));
        let c = Score { failed: 0, total: 10.0 * (1.0 - 1e-12) };
        assert!(!c.improves_on(&a, 1e-9));
    }

    fn arb_task() -> impl Strategy<Value = Task> {
        (5e6f64..5e7, prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]), 0.5f64..=1.0)
            .prop_map(|(bits, alpha, mu)| task(bits, alpha, mu))
    }

    fn arb_decisions(len: usize) -> impl Strategy<Value = DecisionVector> {
        prop::collection::vec(0u8..5, len).prop_map(|c| dv(&c))
    }

    proptest! {
        #[test]
        fn overhead_is_weighted_sum(t in arb_task(), d in arb_decisions(6), mode in 0u8..5) {
            let p = NetworkParams::table1();
            let c = mode_cost(Mode::from_code(mode).unwrap(), &t, 0, &d, &p).unwrap();
            if c.delay.is_finite() {
                let expect = t.alpha * c.delay + t.beta * c.energy;
                prop_assert!((c.overhead - expect).abs() <= 1e-12 * expect.abs());
            }
        }

        #[test]
        fn fast_path_matches_literal(tasks in prop::collection::vec(arb_task(), 1..8), codes in prop::collection::vec(0u8..5, 8)) {
            let p = NetworkParams::table1();
            let d = dv(&codes[..tasks.len()]);
            let sys = system_overhead(&d, &tasks, &p);
            for (m, t) in tasks.iter().enumerate() {
                let literal = mode_cost(d[m], t, m, &d, &p).unwrap();
                let fast = &sys.per_vehicle[m];
                prop_assert_eq!(literal.feasible, fast.feasible);
                prop_assert_eq!(literal.hops, fast.hops);
                if literal.overhead.is_finite() {
                    prop_assert!((literal.overhead - fast.overhead).abs() <= 1e-12 * literal.overhead);
                }
                let load = LinkLoad::of(&d);
                for alt in Mode::ALL {
                    let switched = cost_after_switch(alt, d[m], t, &load, &p);
                    let lit = mode_cost(alt, t, m, &d, &p).unwrap();
                    prop_assert_eq!(switched.feasible, lit.feasible);
                    if lit.overhead.is_finite() {
                        prop_assert!((switched.overhead - lit.overhead).abs() <= 1e-12 * lit.overhead);
                    }
                }
            }
        }

        #[test]
        fn overhead_affine_in_alpha(bits in 5e6f64..5e7, mu in 0.5f64..=1.0, d in arb_decisions(4), mode in 0u8..5, a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0) {
            let p = NetworkParams::table1();
            let mode = Mode::from_code(mode).unwrap();
            let c1 = mode_cost(mode, &task(bits, a1, mu), 0, &d, &p).unwrap();
            let c2 = mode_cost(mode, &task(bits, a2, mu), 0, &d, &p).unwrap();
            prop_assume!(c1.delay.is_finite());
            let slope = c1.delay - c1.energy;
            let predicted = c1.overhead + slope * (a2 - a1);
            prop_assert!((c2.overhead - predicted).abs() <= 1e-9 * c2.overhead.max(1.0));
        }

        #[test]
        fn more_sharers_never_cheaper(t in arb_task(), extra in 1usize..6, mode in prop::sample::select(vec![Mode::V2v, Mode::V2i])) {
            let p = NetworkParams::table1();
            let sole = mode_cost(mode, &t, 0, &DecisionVector::all_local(1 + extra), &p).unwrap();
            let crowded = mode_cost(mode, &t, 0, &DecisionVector::new(vec![mode; 1 + extra]), &p).unwrap();
            prop_assert!(crowded.delay > sole.delay);
            prop_assert!(crowded.energy > sole.energy);
        }

        #[test]
        fn hop_bracket_is_ordered(t in arb_task(), d in arb_decisions(5), mig in prop::sample::select(vec![Mode::V2vMigration, Mode::I2iMigration])) {
            let p = NetworkParams::table1();
            let bounds = match mig {
                Mode::V2vMigration => v2v_mig_bounds(&t, 0, &d, &p).unwrap(),
                _ => i2i_mig_bounds(&t, 0, &d, &p).unwrap(),
            };
            if let Ok(b) = bounds {
                prop_assert!(b.lower < b.average && b.average < b.upper);
                prop_assert!(b.hops() as f64 <= b.average);
            }
        }

        #[test]
        fn doubling_size_doubles_sole_user_delay(bits in 5e6f64..2.5e7, mode in 0u8..3) {
            let p = NetworkParams::table1();
            let mode = Mode::from_code(mode).unwrap();
            let d = DecisionVector::new(vec![mode]);
            let one = mode_cost(mode, &task(bits, 1.0, 1.0), 0, &d, &p).unwrap();
            let two = mode_cost(mode, &task(2.0 * bits, 1.0, 1.0), 0, &d, &p).unwrap();
            prop_assert!((two.delay - 2.0 * one.delay).abs() <= 1e-12 * two.delay);
        }
    }
}

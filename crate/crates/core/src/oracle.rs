//! Reference solutions: the exhaustive optimum over all 5^M joint decisions
//! and the no-migration baseline.

use thiserror::Error;

use crate::cost::{self, Score};
use crate::game::{self, GameOutcome, ModeSet};
use crate::model::{DecisionVector, Mode, Scenario};

/// Largest fleet the exhaustive search accepts (5^8 = 390 625 vectors).
pub const MAX_EXHAUSTIVE_VEHICLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exhaustive search supports at most {max} vehicles, got {got}")]
    TooLarge { got: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub decisions: DecisionVector,
    pub score: Score,
    /// Joint decisions evaluated.
    pub evaluated: usize,
}

/// Relative slack below which two totals count as tied, so the
/// lexicographically smallest vector wins regardless of summation order.
const TIE_TOL: f64 = 1e-12;

/// Minimizes the system score (fewest failed vehicles, then lowest
/// overhead) by enumerating every joint decision in lexicographic order.
pub fn exhaustive_optimum(scenario: &Scenario) -> Result<Optimum, OracleError> {
    let m = scenario.vehicles();
    if m > MAX_EXHAUSTIVE_VEHICLES {
        return Err(OracleError::TooLarge {
            got: m,
            max: MAX_EXHAUSTIVE_VEHICLES,
        });
    }
    let mut codes = vec![0u8; m];
    let mut best: Option<(DecisionVector, Score)> = None;
    let mut evaluated = 0;
    loop {
        let d = DecisionVector::from_codes(&codes).expect("codes stay in 0..5");
        let s = cost::system_score(&d, &scenario.tasks, &scenario.params);
        evaluated += 1;
        if best.as_ref().map_or(true, |(_, b)| s.improves_on(b, TIE_TOL)) {
            best = Some((d, s));
        }
        // Odometer increment, last vehicle fastest.
        let mut i = m;
        loop {
            if i == 0 {
                let (decisions, score) = best.expect("at least one vector evaluated");
                return Ok(Optimum {
                    decisions,
                    score,
                    evaluated,
                });
            }
            i -= 1;
            codes[i] += 1;
            if codes[i] < Mode::ALL.len() as u8 {
                break;
            }
            codes[i] = 0;
        }
    }
}

/// Best-response game restricted to local, V2V and direct V2I processing.
/// Vehicles that would leave RSU coverage cannot use V2I and fall back to
/// the on-board options.
pub fn mec_baseline(scenario: &Scenario, max_sweeps: usize) -> GameOutcome {
    game::run_tm_in(scenario, max_sweeps, ModeSet::NO_MIGRATION)
}

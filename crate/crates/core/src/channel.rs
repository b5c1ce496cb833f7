//! SINR and achievable rates on the four frequency-orthogonal link classes.
//!
//! A vehicle's rate depends on how many other vehicles currently occupy the
//! same link class, so every query takes a candidate joint decision rather
//! than reading mutable network state.

use thiserror::Error;

use crate::model::{DecisionVector, LinkParams, Mode, NetworkParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("vehicle index {index} out of range for {len} vehicles")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    V2vComm,
    V2iComm,
    V2vMig,
    I2iMig,
}

impl LinkKind {
    pub const ALL: [LinkKind; 4] = [
        LinkKind::V2vComm,
        LinkKind::V2iComm,
        LinkKind::V2vMig,
        LinkKind::I2iMig,
    ];

    /// Whether a vehicle in `mode` transmits on this link class. Modes 3 and
    /// 4 upload over V2I, so they load the V2I link as well as their
    /// migration link.
    pub fn carries(self, mode: Mode) -> bool {
        match self {
            LinkKind::V2vComm => mode == Mode::V2v,
            LinkKind::V2iComm => mode.is_rsu(),
            LinkKind::V2vMig => mode == Mode::V2vMigration,
            LinkKind::I2iMig => mode == Mode::I2iMigration,
        }
    }

    pub fn link(self, params: &NetworkParams) -> &LinkParams {
        match self {
            LinkKind::V2vComm => &params.v2v_comm,
            LinkKind::V2iComm => &params.v2i_comm,
            LinkKind::V2vMig => &params.v2v_mig,
            LinkKind::I2iMig => &params.i2i_mig,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// `b * log2(1 + sinr)`.
pub fn shannon_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// SINR of vehicle `m` on `kind` under the joint decision `d`, summing the
/// received power of every other vehicle whose decision loads the same link.
pub fn sinr(
    kind: LinkKind,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<f64, ChannelError> {
    if m >= d.len() {
        return Err(ChannelError::IndexOutOfRange {
            index: m,
            len: d.len(),
        });
    }
    let link = kind.link(params);
    let interference: f64 = d
        .modes()
        .iter()
        .enumerate()
        .filter(|&(g, &mode)| g != m && kind.carries(mode))
        .map(|_| link.received_power())
        .sum();
    Ok(link.received_power() / (params.noise + interference))
}

pub fn rate(
    kind: LinkKind,
    m: usize,
    d: &DecisionVector,
    params: &NetworkParams,
) -> Result<f64, ChannelError> {
    let gamma = sinr(kind, m, d, params)?;
    Ok(shannon_rate(kind.link(params).bandwidth, gamma))
}

/// Occupancy of each link class under a joint decision.
///
/// With per-class link constants, interference on a class is the occupancy
/// (excluding the evaluated vehicle) times `p * h`, so rates for every
/// vehicle and every candidate mode follow in O(1) from these counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkLoad {
    counts: [usize; 4],
}

impl LinkLoad {
    pub fn of(d: &DecisionVector) -> Self {
        let mut load = LinkLoad::default();
        for &mode in d.modes() {
            load.add(mode);
        }
        load
    }

    pub fn add(&mut self, mode: Mode) {
        for kind in LinkKind::ALL {
            if kind.carries(mode) {
                self.counts[kind.slot()] += 1;
            }
        }
    }

    pub fn remove(&mut self, mode: Mode) {
        for kind in LinkKind::ALL {
            if kind.carries(mode) {
                self.counts[kind.slot()] -= 1;
            }
        }
    }

    /// Load after one vehicle switches from `old` to `new`.
    pub fn switched(mut self, old: Mode, new: Mode) -> Self {
        self.remove(old);
        self.add(new);
        self
    }

    pub fn count(&self, kind: LinkKind) -> usize {
        self.counts[kind.slot()]
    }

    /// Interferers seen by a vehicle whose own decision is `own`.
    pub fn interferers(&self, kind: LinkKind, own: Mode) -> usize {
        self.count(kind) - usize::from(kind.carries(own))
    }

    pub fn sinr(&self, kind: LinkKind, own: Mode, params: &NetworkParams) -> f64 {
        let link = kind.link(params);
        let n = self.interferers(kind, own) as f64;
        link.received_power() / (params.noise + n * link.received_power())
    }

    pub fn rate(&self, kind: LinkKind, own: Mode, params: &NetworkParams) -> f64 {
        shannon_rate(kind.link(params).bandwidth, self.sinr(kind, own, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dv(codes: &[u8]) -> DecisionVector {
        DecisionVector::from_codes(codes).unwrap()
    }

    #[test]
    fn sole_v2i_sinr() {
        let p = NetworkParams::table1();
        let g = sinr(LinkKind::V2iComm, 0, &dv(&[2, 0, 1]), &p).unwrap();
        assert_relative_eq!(g, 40.0, max_relative = 1e-12);
    }

    #[test]
    fn one_interferer_on_v2i() {
        let p = NetworkParams::table1();
        for other in [2, 3, 4] {
            let g = sinr(LinkKind::V2iComm, 0, &dv(&[2, other]), &p).unwrap();
            assert_relative_eq!(g, 0.4e-8 / (1e-10 + 0.4e-8), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_power_gives_zero_sinr_and_rate() {
        let mut p = NetworkParams::table1();
        p.v2v_comm.power = 0.0;
        assert_eq!(sinr(LinkKind::V2vComm, 0, &dv(&[1]), &p).unwrap(), 0.0);
        assert_eq!(rate(LinkKind::V2vComm, 0, &dv(&[1]), &p).unwrap(), 0.0);
    }

    #[test]
    fn sole_user_rates() {
        let p = NetworkParams::table1();
        let r = |k, c| rate(k, 0, &dv(&[c]), &p).unwrap();
        assert_relative_eq!(r(LinkKind::V2iComm, 2), 1e7 * 41f64.log2(), max_relative = 1e-12);
        assert_relative_eq!(r(LinkKind::V2vComm, 1), 1e7 * 11f64.log2(), max_relative = 1e-12);
        assert_relative_eq!(r(LinkKind::V2vMig, 3), 4e6 * 11f64.log2(), max_relative = 1e-12);
        let gamma = 0.4 * 300f64.powi(-4) / 1e-10;
        assert_relative_eq!(r(LinkKind::I2iMig, 4), 4e6 * (1.0 + gamma).log2(), max_relative = 1e-12);
    }

    #[test]
    fn index_out_of_range() {
        let p = NetworkParams::table1();
        assert_eq!(
            sinr(LinkKind::V2vComm, 3, &dv(&[0, 1]), &p),
            Err(ChannelError::IndexOutOfRange { index: 3, len: 2 })
        );
    }

    fn decisions(max_len: usize) -> impl Strategy<Value = DecisionVector> {
        prop::collection::vec(0u8..5, 1..max_len).prop_map(|c| dv(&c))
    }

    proptest! {
        #[test]
        fn load_matches_literal_sum(d in decisions(12), m_seed in any::<usize>()) {
            let p = NetworkParams::table1();
            let m = m_seed % d.len();
            let load = LinkLoad::of(&d);
            for kind in LinkKind::ALL {
                let literal = sinr(kind, m, &d, &p).unwrap();
                prop_assert!((load.sinr(kind, d[m], &p) - literal).abs() <= 1e-12 * literal);
            }
        }

        #[test]
        fn joining_a_link_lowers_others_sinr(d in decisions(10), m_seed in any::<usize>(), g_seed in any::<usize>()) {
            let p = NetworkParams::table1();
            prop_assume!(d.len() >= 2);
            let m = m_seed % d.len();
            let g = (m + 1 + g_seed % (d.len() - 1)) % d.len();
            for kind in LinkKind::ALL {
                let outside = Mode::ALL.into_iter().find(|&x| !kind.carries(x)).unwrap();
                let inside = Mode::ALL.into_iter().find(|&x| kind.carries(x)).unwrap();
                let before = sinr(kind, m, &d.with(g, outside), &p).unwrap();
                let after = sinr(kind, m, &d.with(g, inside), &p).unwrap();
                prop_assert!(after < before);
            }
        }

        #[test]
        fn moves_outside_a_link_leave_it_unchanged(d in decisions(10), m_seed in any::<usize>(), g_seed in any::<usize>(), a in 0u8..5, b in 0u8..5) {
            let p = NetworkParams::table1();
            prop_assume!(d.len() >= 2);
            let m = m_seed % d.len();
            let g = (m + 1 + g_seed % (d.len() - 1)) % d.len();
            let (a, b) = (Mode::from_code(a).unwrap(), Mode::from_code(b).unwrap());
            for kind in LinkKind::ALL {
                if kind.carries(a) == kind.carries(b) {
                    let x = sinr(kind, m, &d.with(g, a), &p).unwrap();
                    let y = sinr(kind, m, &d.with(g, b), &p).unwrap();
                    prop_assert_eq!(x, y);
                }
            }
        }

        #[test]
        fn sharers_see_equal_rates(d in decisions(10)) {
            let p = NetworkParams::table1();
            for kind in LinkKind::ALL {
                let rates: Vec<f64> = (0..d.len())
                    .filter(|&m| kind.carries(d[m]))
                    .map(|m| rate(kind, m, &d, &p).unwrap())
                    .collect();
                for w in rates.windows(2) {
                    prop_assert_eq!(w[0], w[1]);
                }
            }
        }

        #[test]
        fn rate_increases_with_bandwidth_and_sinr(b in 1.0f64..1e8, s in 0.0f64..1e3, db in 1.0f64..1e6, ds in 1e-3f64..10.0) {
            prop_assert!(shannon_rate(b + db, s + ds) > shannon_rate(b, s + ds));
            prop_assert!(shannon_rate(b, s + ds) > shannon_rate(b, s));
        }
    }
}

use proptest::prelude::*;
use vanet_offload::cost::system_overhead;
use vanet_offload::harness::{generate_scenario, ScenarioSpec};
use vanet_offload::model::{DecisionVector, NetworkParams};
use vanet_offload::{exhaustive_optimum, run_como, run_tm};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_bounds_both_algorithms(m in 1usize..=4, seed in any::<u64>()) {
        let p = NetworkParams::table1();
        let s = generate_scenario(&ScenarioSpec::success_default(m), seed, &p).unwrap();
        let opt = exhaustive_optimum(&s).unwrap();
        let como = run_como(&s, 1000);
        let tm = run_tm(&s, 1000);
        let local = system_overhead(&DecisionVector::all_local(m), &s.tasks, &p).total;
        let slack = 1.0 + 1e-12;
        prop_assert_eq!(opt.score.failed, 0);
        prop_assert!(opt.score.total <= como.overhead.total * slack);
        prop_assert!(opt.score.total <= tm.overhead.total * slack);
        prop_assert!(como.overhead.total <= local * slack);
    }

    #[test]
    fn relabeling_homogeneous_fleet_keeps_optimum(m in 2usize..=4, bits in 5e6f64..5e7) {
        let p = NetworkParams::table1();
        let spec = ScenarioSpec {
            data_bits: vanet_offload::Sampling::Fixed(bits),
            ..ScenarioSpec::overhead_default(m)
        };
        let a = exhaustive_optimum(&generate_scenario(&spec, 1, &p).unwrap()).unwrap();
        let b = exhaustive_optimum(&generate_scenario(&spec, 2, &p).unwrap()).unwrap();
        prop_assert_eq!(&a.decisions, &b.decisions);
        let mut sorted = a.decisions.codes();
        sorted.sort();
        prop_assert_eq!(a.decisions.codes(), sorted);
    }
}

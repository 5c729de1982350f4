mod common;

use proptest::prelude::*;
use sbatch::oracle::{enumerate_optimal, DEFAULT_JOB_CAP};
use sbatch::{check_feasibility, evaluate_twct, left_shift_timing, Availability, BatchSizeBounds, VariationConfig};

fn any_variation() -> impl Strategy<Value = VariationConfig> {
    (0..8usize).prop_map(|i| VariationConfig::all()[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn left_shift_is_feasible_and_idempotent(seed in any::<u64>(), order in any::<u64>(), var in any_variation()) {
        let inst = common::tiny_instance(seed, 7);
        let seq = common::random_sequencing(&inst, order);
        let sched = left_shift_timing(&inst, &seq, var).unwrap();
        let report = check_feasibility(&inst, &sched, var, false);
        prop_assert!(report.feasible, "{:?}", report.violations);
        let again = left_shift_timing(&inst, &sched.sequencing(), var).unwrap();
        prop_assert_eq!(again, sched);
    }

    #[test]
    fn item_availability_never_costs_more(seed in any::<u64>(), order in any::<u64>(), var in any_variation()) {
        let inst = common::tiny_instance(seed, 7);
        let seq = common::random_sequencing(&inst, order);
        let item = VariationConfig { availability: Availability::Item, ..var };
        let batch = VariationConfig { availability: Availability::Batch, ..var };
        let sched = left_shift_timing(&inst, &seq, item).unwrap();
        prop_assert!(evaluate_twct(&inst, &sched, item).unwrap() <= evaluate_twct(&inst, &sched, batch).unwrap());
    }

    #[test]
    fn machine_order_is_irrelevant(seed in any::<u64>(), order in any::<u64>(), var in any_variation()) {
        let inst = common::tiny_instance(seed, 7);
        let sched = left_shift_timing(&inst, &common::random_sequencing(&inst, order), var).unwrap();
        let mut swapped = sched.clone();
        swapped.machines.reverse();
        for sizing in [false, true] {
            let a = check_feasibility(&inst, &sched, var, sizing);
            let b = check_feasibility(&inst, &swapped, var, sizing);
            prop_assert_eq!(a.feasible, b.feasible);
            prop_assert_eq!(a.twct, b.twct);
        }
    }

    #[test]
    fn sizing_only_removes_schedules(seed in any::<u64>(), order in any::<u64>(), var in any_variation()) {
        let inst = common::tiny_instance(seed, 7);
        let sched = left_shift_timing(&inst, &common::random_sequencing(&inst, order), var).unwrap();
        if check_feasibility(&inst, &sched, var, true).feasible {
            prop_assert!(check_feasibility(&inst, &sched, var, false).feasible);
            let relaxed = inst.with_bounds(BatchSizeBounds {
                min: vec![1; inst.num_families],
                max: (0..inst.num_families).map(|f| inst.family_size(f)).collect(),
            });
            prop_assert!(check_feasibility(&relaxed, &sched, var, true).feasible);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weight_scaling_scales_the_optimum(seed in any::<u64>(), c in 1i64..6, var in any_variation()) {
        let inst = common::tiny_instance(seed, 6);
        let scaled = inst.with_scaled_weights(c);
        let (opt, sched) = enumerate_optimal(&inst, var, true, DEFAULT_JOB_CAP).unwrap();
        let (opt_scaled, _) = enumerate_optimal(&scaled, var, true, DEFAULT_JOB_CAP).unwrap();
        prop_assert_eq!(opt_scaled, c * opt);
        prop_assert_eq!(evaluate_twct(&scaled, &sched, var).unwrap(), opt_scaled);
    }
}

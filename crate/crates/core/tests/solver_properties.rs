mod common;

use std::time::Duration;

use proptest::prelude::*;
use sbatch::check_feasibility;
use sbatch::oracle::{enumerate_optimal, DEFAULT_JOB_CAP};
use sbatch::solver::{solve, ModelVariant, SolveResult, SolveStatus, SolverConfig};

fn config(variant: ModelVariant, var: sbatch::VariationConfig) -> SolverConfig {
    SolverConfig {
        model_variant: variant,
        variation: var,
        time_limit: Duration::from_secs(60),
        ..SolverConfig::default()
    }
}

fn check_traces(res: &SolveResult) -> Result<(), TestCaseError> {
    for w in res.trace.windows(2) {
        prop_assert!(w[1].objective < w[0].objective);
        prop_assert!(w[1].elapsed >= w[0].elapsed);
    }
    for w in res.bound_trace.windows(2) {
        prop_assert!(w[1].bound >= w[0].bound);
    }
    if let Some(obj) = res.objective {
        prop_assert!(res.lower_bound <= obj);
        prop_assert_eq!(res.trace.last().map(|p| p.objective), Some(obj));
    }
    if res.status == SolveStatus::Optimal {
        prop_assert_eq!(res.objective, Some(res.lower_bound));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_variant_matches_the_oracle(seed in any::<u64>(), v in 0..4usize) {
        let inst = common::tiny_instance(seed, 6);
        let var = common::four_variations()[v];
        let (opt, _) = enumerate_optimal(&inst, var, true, DEFAULT_JOB_CAP).unwrap();
        for variant in ModelVariant::ALL {
            let res = solve(&inst, &config(variant, var)).unwrap();
            prop_assert_eq!(res.status, SolveStatus::Optimal);
            prop_assert_eq!(res.objective, Some(opt));
            let report = check_feasibility(&inst, res.schedule.as_ref().unwrap(), var, true);
            prop_assert!(report.feasible, "{:?}", report.violations);
            prop_assert_eq!(report.twct, Some(opt));
            check_traces(&res)?;
        }
    }

    #[test]
    fn symmetry_breaking_keeps_the_optimum(seed in any::<u64>(), v in 0..4usize) {
        let inst = common::tiny_instance(seed, 6);
        let var = common::four_variations()[v];
        for variant in ModelVariant::ALL {
            let plain = solve(&inst, &config(variant, var)).unwrap();
            let sb = solve(&inst, &SolverConfig { sb: true, ..config(variant, var) }).unwrap();
            prop_assert_eq!(sb.objective, plain.objective);
            if var.is_bc() {
                let sbt = solve(&inst, &SolverConfig { sb: true, sbt: true, ..config(variant, var) }).unwrap();
                prop_assert_eq!(sbt.objective, plain.objective);
            }
        }
    }

    #[test]
    fn single_worker_runs_repeat_exactly(seed in any::<u64>(), v in 0..4usize, tie in any::<u64>()) {
        let inst = common::tiny_instance(seed, 6);
        let cfg = SolverConfig { seed: tie, ..config(ModelVariant::H, common::four_variations()[v]) };
        let a = solve(&inst, &cfg).unwrap();
        let b = solve(&inst, &cfg).unwrap();
        prop_assert_eq!(a.nodes, b.nodes);
        prop_assert_eq!(&a.schedule, &b.schedule);
        prop_assert_eq!(a.objective, b.objective);
        let objs = |r: &SolveResult| r.trace.iter().map(|p| p.objective).collect::<Vec<_>>();
        prop_assert_eq!(objs(&a), objs(&b));
    }

    #[test]
    fn workers_agree_on_the_optimum(seed in any::<u64>(), v in 0..4usize) {
        let inst = common::tiny_instance(seed, 6);
        let var = common::four_variations()[v];
        let one = solve(&inst, &config(ModelVariant::IA, var)).unwrap();
        let three = solve(&inst, &SolverConfig { workers: 3, ..config(ModelVariant::IA, var) }).unwrap();
        prop_assert_eq!(three.status, SolveStatus::Optimal);
        prop_assert_eq!(three.objective, one.objective);
        check_traces(&three)?;
    }

    #[test]
    fn interrupted_runs_stay_consistent(seed in any::<u64>(), nodes in 1u64..400) {
        let inst = common::tiny_instance(seed, 8);
        let cfg = SolverConfig { node_limit: Some(nodes), ..config(ModelVariant::G, sbatch::VariationConfig::IPF) };
        let res = solve(&inst, &cfg).unwrap();
        check_traces(&res)?;
        if let Some(s) = &res.schedule {
            let report = check_feasibility(&inst, s, cfg.variation, true);
            prop_assert!(report.feasible);
            prop_assert_eq!(report.twct, res.objective);
        }
    }
}

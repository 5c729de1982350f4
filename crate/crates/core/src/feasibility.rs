//! Full feasibility checking and objective evaluation of timed schedules.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::instance::{Rule, Violation};
use crate::schedule::Schedule;
use crate::variation::{Availability, Initiation, Preemption, VariationConfig};
use crate::{Instance, Time};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub twct: Option<Time>,
    /// Completion time of each job id under the requested availability.
    pub job_completions: BTreeMap<u32, Time>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("schedule is infeasible ({} violations, first: {})", .0.len(), .0[0])]
    Infeasible(Vec<Violation>),
}

/// Checks a schedule against every rule and reports all violations found.
///
/// Rules are checked in this order: partition, release times, batch purity
/// and job disjointness, setup gaps, batch sizes (when `sizing_enabled`),
/// non-preemption, complete initiation. Batch spans are recomputed from the
/// job starts rather than taken from the stored fields.
pub fn check_feasibility(
    inst: &Instance,
    sched: &Schedule,
    var: VariationConfig,
    sizing_enabled: bool,
) -> EvalReport {
    let mut violations = Vec::new();

    if sched.machines.len() > inst.num_machines {
        violations.push(Violation::new(
            Rule::MachineCount,
            format!(
                "schedule uses {} machines, instance has {}",
                sched.machines.len(),
                inst.num_machines
            ),
        ));
    }

    // (1) partition
    let mut seen = vec![0usize; inst.num_jobs()];
    for (m, batch) in sched.batches() {
        for tj in &batch.jobs {
            match inst.index_of(tj.id) {
                Some(j) => seen[j] += 1,
                None => violations.push(Violation::new(
                    Rule::UnknownJob,
                    format!("machine {m} schedules unknown job {}", tj.id),
                )),
            }
        }
    }
    for (j, &count) in seen.iter().enumerate() {
        let id = inst.jobs[j].id;
        if count == 0 {
            violations.push(Violation::new(Rule::MissingJob, format!("job {id} is not scheduled")));
        } else if count > 1 {
            violations.push(Violation::new(
                Rule::DuplicateJob,
                format!("job {id} is scheduled {count} times"),
            ));
        }
    }

    // (2) release times
    for (_, batch) in sched.batches() {
        for tj in &batch.jobs {
            if let Some(j) = inst.index_of(tj.id) {
                let r = inst.jobs[j].release;
                if tj.start < r {
                    violations.push(Violation::new(
                        Rule::Release,
                        format!("job {} starts at {} before its release {r}", tj.id, tj.start),
                    ));
                }
            }
        }
    }

    let processing = |id: u32| inst.index_of(id).map(|j| inst.jobs[j].processing).unwrap_or(0);
    let span = |jobs: &[crate::schedule::TimedJob]| -> (Time, Time) {
        let start = jobs.first().map(|j| j.start).unwrap_or(0);
        let end = jobs.iter().map(|j| j.start + processing(j.id)).max().unwrap_or(start);
        (start, end)
    };

    // (3) batch purity and disjointness
    for (m, batch) in sched.batches() {
        if batch.jobs.is_empty() {
            violations.push(Violation::new(Rule::EmptyBatch, format!("machine {m} has an empty batch")));
            continue;
        }
        for tj in &batch.jobs {
            if let Some(j) = inst.index_of(tj.id) {
                if inst.jobs[j].family != batch.family {
                    violations.push(Violation::new(
                        Rule::FamilyMismatch,
                        format!(
                            "job {} of family {} is in a batch of family {} on machine {m}",
                            tj.id, inst.jobs[j].family, batch.family
                        ),
                    ));
                }
            }
        }
        for pair in batch.jobs.windows(2) {
            let end = pair[0].start + processing(pair[0].id);
            if pair[1].start < end {
                violations.push(Violation::new(
                    Rule::JobOverlap,
                    format!(
                        "job {} starts at {} before job {} ends at {end} on machine {m}",
                        pair[1].id, pair[1].start, pair[0].id
                    ),
                ));
            }
        }
    }

    // (4) setup gaps
    for (m, batches) in sched.machines.iter().enumerate() {
        let mut prev: Option<(usize, Time)> = None;
        for batch in batches.iter().filter(|b| !b.jobs.is_empty()) {
            let (start, end) = span(&batch.jobs);
            if batch.family >= inst.num_families {
                violations.push(Violation::new(
                    Rule::FamilyMismatch,
                    format!("batch family {} does not exist", batch.family),
                ));
                prev = Some((batch.family, end));
                continue;
            }
            match prev {
                None => {
                    let need = inst.setups.initial[batch.family];
                    if start < need {
                        violations.push(Violation::new(
                            Rule::InitialSetup,
                            format!("first batch on machine {m} starts at {start} before initial setup {need}"),
                        ));
                    }
                }
                Some((family, prev_end)) => {
                    let gap = if family < inst.num_families {
                        inst.setups.before(Some(family), batch.family)
                    } else {
                        0
                    };
                    if start < prev_end + gap {
                        violations.push(Violation::new(
                            Rule::SetupGap,
                            format!(
                                "batch at {start} on machine {m} needs to start at {} or later",
                                prev_end + gap
                            ),
                        ));
                    }
                }
            }
            prev = Some((batch.family, end));
        }
    }

    // (5) sizing
    if sizing_enabled {
        for (m, batch) in sched.batches() {
            let f = batch.family;
            if f >= inst.num_families || batch.jobs.is_empty() {
                continue;
            }
            let (lo, hi) = (inst.bounds.min[f], inst.bounds.max[f]);
            if batch.jobs.len() < lo {
                violations.push(Violation::new(
                    Rule::BatchTooSmall,
                    format!(
                        "batch of family {f} on machine {m} has {} jobs, minimum is {lo}",
                        batch.jobs.len()
                    ),
                ));
            }
            if batch.jobs.len() > hi {
                violations.push(Violation::new(
                    Rule::BatchTooLarge,
                    format!(
                        "batch of family {f} on machine {m} has {} jobs, maximum is {hi}",
                        batch.jobs.len()
                    ),
                ));
            }
        }
    }

    // (6) non-preemption
    if var.preemption == Preemption::Forbidden {
        for (m, batch) in sched.batches() {
            if batch.jobs.is_empty() {
                continue;
            }
            let (start, end) = span(&batch.jobs);
            let busy: Time = batch.jobs.iter().map(|j| processing(j.id)).sum();
            if end - start != busy {
                violations.push(Violation::new(
                    Rule::Preemption,
                    format!(
                        "batch on machine {m} spans {} but processes for {busy}",
                        end - start
                    ),
                ));
            }
        }
    }

    // (7) complete initiation
    if var.initiation == Initiation::Complete {
        for (m, batch) in sched.batches() {
            let (start, _) = span(&batch.jobs);
            let latest = batch
                .jobs
                .iter()
                .filter_map(|j| inst.index_of(j.id))
                .map(|j| inst.jobs[j].release)
                .max();
            if let Some(latest) = latest {
                if start < latest {
                    violations.push(Violation::new(
                        Rule::Initiation,
                        format!("batch on machine {m} starts at {start} before release {latest} of one of its jobs"),
                    ));
                }
            }
        }
    }

    let feasible = violations.is_empty();
    let mut job_completions = BTreeMap::new();
    let mut twct = None;
    if feasible {
        let mut total = 0;
        for (_, batch) in sched.batches() {
            let (_, end) = span(&batch.jobs);
            for tj in &batch.jobs {
                let j = inst.index_of(tj.id).expect("checked above");
                let completion = match var.availability {
                    Availability::Item => tj.start + inst.jobs[j].processing,
                    Availability::Batch => end,
                };
                job_completions.insert(tj.id, completion);
                total += inst.jobs[j].weight * completion;
            }
        }
        twct = Some(total);
    }
    EvalReport {
        feasible,
        violations,
        twct,
        job_completions,
    }
}

/// Total weighted completion time of a schedule. Batch sizes are not
/// checked here; every other rule must hold.
pub fn evaluate_twct(inst: &Instance, sched: &Schedule, var: VariationConfig) -> Result<Time, EvalError> {
    let report = check_feasibility(inst, sched, var, false);
    match report.twct {
        Some(v) => Ok(v),
        None => Err(EvalError::Infeasible(report.violations)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1_schedule, figure4_schedule, figure7_schedule, table1};
    use crate::instance::{BatchSizeBounds, Job, SetupMatrix};
    use crate::schedule::{TimedBatch, TimedJob};

    #[test]
    fn figure4_is_feasible_under_ipf() {
        let inst = table1();
        let report = check_feasibility(&inst, &figure4_schedule(&inst), VariationConfig::IPF, true);
        assert!(report.feasible, "{:?}", report.violations);
        assert_eq!(report.twct, Some(61));
        assert_eq!(report.job_completions[&5], 13);
    }

    #[test]
    fn figure4_batch_availability() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Batch, Preemption::Allowed, Initiation::Flexible);
        assert_eq!(evaluate_twct(&inst, &figure4_schedule(&inst), var), Ok(79));
    }

    #[test]
    fn figure1_violates_min_batch_size() {
        let inst = table1();
        let sched = figure1_schedule(&inst);
        let report = check_feasibility(&inst, &sched, VariationConfig::IPF, true);
        assert!(!report.feasible);
        let small: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.rule == Rule::BatchTooSmall)
            .collect();
        // {1,2} and {5} are both below l_1 = 3
        assert_eq!(small.len(), 2);
        assert!(small[0].detail.contains("has 2 jobs"));
        assert!(report.twct.is_none());
        // without sizing the Core solution is fine
        let core = check_feasibility(&inst, &sched, VariationConfig::IPF, false);
        assert_eq!(core.twct, Some(55));
    }

    #[test]
    fn figure4_violates_complete_initiation() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Item, Preemption::Allowed, Initiation::Complete);
        let report = check_feasibility(&inst, &figure4_schedule(&inst), var, true);
        assert!(!report.feasible);
        // {3,4} starts at 16 after both releases, so only the first batch fails
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::Initiation);
        assert!(report.violations[0].detail.contains("starts at 1 before release 11"));
    }

    #[test]
    fn figure4_violates_non_preemption() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Item, Preemption::Forbidden, Initiation::Flexible);
        let report = check_feasibility(&inst, &figure4_schedule(&inst), var, true);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::Preemption);
    }

    #[test]
    fn figure7_is_feasible_under_complete_initiation() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Item, Preemption::Allowed, Initiation::Complete);
        assert_eq!(evaluate_twct(&inst, &figure7_schedule(&inst), var), Ok(91));
    }

    #[test]
    fn single_job_objective() {
        let inst = Instance::new(
            vec![Job {
                id: 0,
                weight: 2,
                release: 4,
                processing: 3,
                family: 0,
            }],
            1,
            1,
            SetupMatrix {
                inter: vec![vec![0]],
                initial: vec![1],
            },
            BatchSizeBounds {
                min: vec![1],
                max: vec![1],
            },
        );
        let sched = Schedule {
            machines: vec![vec![TimedBatch::new(&inst, 0, vec![TimedJob { id: 0, start: 4 }])]],
        };
        assert_eq!(evaluate_twct(&inst, &sched, VariationConfig::IPF), Ok(14));
    }

    #[test]
    fn reports_every_violation() {
        let inst = table1();
        // job 4 missing, job 1 twice, job 3 before release and overlapping
        let sched = Schedule {
            machines: vec![vec![
                TimedBatch::new(
                    &inst,
                    0,
                    vec![TimedJob { id: 1, start: 0 }, TimedJob { id: 1, start: 1 }],
                ),
                TimedBatch::new(&inst, 1, vec![TimedJob { id: 3, start: 2 }]),
            ]],
        };
        let report = check_feasibility(&inst, &sched, VariationConfig::IPF, true);
        let rules: Vec<Rule> = report.violations.iter().map(|v| v.rule).collect();
        for expected in [
            Rule::MissingJob,
            Rule::DuplicateJob,
            Rule::Release,
            Rule::JobOverlap,
            Rule::InitialSetup,
            Rule::SetupGap,
            Rule::BatchTooSmall,
        ] {
            assert!(rules.contains(&expected), "missing {expected:?} in {rules:?}");
        }
        assert!(matches!(
            evaluate_twct(&inst, &sched, VariationConfig::IPF),
            Err(EvalError::Infeasible(_))
        ));
    }
}

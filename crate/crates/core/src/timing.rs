//! Earliest-start timing of a fixed sequencing decision.
//!
//! Every job completion is non-decreasing in every start time, so starting
//! each batch and job as early as the rules allow is optimal for the TWCT of
//! a given sequencing in every variation.

use thiserror::Error;

use crate::schedule::{Schedule, Sequencing, TimedBatch, TimedJob};
use crate::variation::{Availability, Initiation, Preemption, VariationConfig};
use crate::{Instance, Time};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimingError {
    #[error("sequencing uses {got} machines but the instance has {available}")]
    MachineCount { got: usize, available: usize },
    #[error("unknown job id {0}")]
    UnknownJob(u32),
    #[error("job {job} of family {job_family} placed in a batch of family {batch_family}")]
    FamilyMismatch {
        job: u32,
        job_family: usize,
        batch_family: usize,
    },
    #[error("empty batch on machine {0}")]
    EmptyBatch(usize),
}

/// Earliest feasible start of a batch whose machine is ready at `ready`
/// (previous end plus the applicable setup).
#[inline]
pub(crate) fn batch_start(inst: &Instance, ready: Time, jobs: &[usize], var: VariationConfig) -> Time {
    match (var.initiation, var.preemption) {
        (Initiation::Complete, _) => jobs
            .iter()
            .map(|&j| inst.jobs[j].release)
            .fold(ready, Time::max),
        (Initiation::Flexible, Preemption::Forbidden) => {
            let mut offset = 0;
            let mut start = ready;
            for &j in jobs {
                start = start.max(inst.jobs[j].release - offset);
                offset += inst.jobs[j].processing;
            }
            start
        }
        (Initiation::Flexible, Preemption::Allowed) => match jobs.first() {
            Some(&j) => ready.max(inst.jobs[j].release),
            None => ready,
        },
    }
}

/// Times one batch, reporting each job start to `visit`, and returns the
/// batch `(start, end)`.
#[inline]
pub(crate) fn time_batch(
    inst: &Instance,
    ready: Time,
    jobs: &[usize],
    var: VariationConfig,
    mut visit: impl FnMut(usize, Time),
) -> (Time, Time) {
    let start = batch_start(inst, ready, jobs, var);
    let mut t = start;
    let gaps_allowed = var.initiation == Initiation::Flexible && var.preemption == Preemption::Allowed;
    for &j in jobs {
        let job = &inst.jobs[j];
        let s = if gaps_allowed { t.max(job.release) } else { t };
        visit(j, s);
        t = s + job.processing;
    }
    (start, t)
}

/// TWCT of one machine's batches (job positions, each batch family-pure),
/// under earliest-start timing.
pub fn machine_twct(inst: &Instance, batches: &[&[usize]], var: VariationConfig) -> Time {
    let mut prev_family = None;
    let mut end = 0;
    let mut total = 0;
    for jobs in batches {
        let Some(&first) = jobs.first() else { continue };
        let family = inst.jobs[first].family;
        let ready = end + inst.setups.before(prev_family, family);
        let (_, batch_end) = time_batch(inst, ready, jobs, var, |j, s| {
            if var.availability == Availability::Item {
                total += inst.jobs[j].weight * (s + inst.jobs[j].processing);
            }
        });
        if var.availability == Availability::Batch {
            total += jobs.iter().map(|&j| inst.jobs[j].weight).sum::<i64>() * batch_end;
        }
        end = batch_end;
        prev_family = Some(family);
    }
    total
}

/// Assigns earliest start times to a sequencing. Machines missing from the
/// sequencing are left empty.
pub fn left_shift_timing(
    inst: &Instance,
    seq: &Sequencing,
    var: VariationConfig,
) -> Result<Schedule, TimingError> {
    if seq.machines.len() > inst.num_machines {
        return Err(TimingError::MachineCount {
            got: seq.machines.len(),
            available: inst.num_machines,
        });
    }
    let mut machines = Vec::with_capacity(inst.num_machines);
    for (m, batches) in seq.machines.iter().enumerate() {
        let mut timed = Vec::with_capacity(batches.len());
        let mut prev_family = None;
        let mut end = 0;
        for batch in batches {
            if batch.jobs.is_empty() {
                return Err(TimingError::EmptyBatch(m));
            }
            let mut positions = Vec::with_capacity(batch.jobs.len());
            for &id in &batch.jobs {
                let j = inst.index_of(id).ok_or(TimingError::UnknownJob(id))?;
                if inst.jobs[j].family != batch.family {
                    return Err(TimingError::FamilyMismatch {
                        job: id,
                        job_family: inst.jobs[j].family,
                        batch_family: batch.family,
                    });
                }
                positions.push(j);
            }
            let ready = end + inst.setups.before(prev_family, batch.family);
            let mut jobs = Vec::with_capacity(positions.len());
            let (start, batch_end) = time_batch(inst, ready, &positions, var, |j, s| {
                jobs.push(TimedJob {
                    id: inst.jobs[j].id,
                    start: s,
                })
            });
            timed.push(TimedBatch {
                family: batch.family,
                jobs,
                start,
                end: batch_end,
            });
            end = batch_end;
            prev_family = Some(batch.family);
        }
        machines.push(timed);
    }
    machines.resize_with(inst.num_machines, Vec::new);
    Ok(Schedule { machines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{check_feasibility, evaluate_twct};
    use crate::fixtures::{table1, table1_sizing_sequence};
    use crate::variation::{Availability, Initiation, Preemption};

    fn starts(s: &Schedule) -> Vec<Time> {
        s.batches().flat_map(|(_, b)| b.jobs.iter().map(|j| j.start)).collect()
    }

    #[test]
    fn ipf_matches_worked_example() {
        let inst = table1();
        let s = left_shift_timing(&inst, &table1_sizing_sequence(&inst), VariationConfig::IPF).unwrap();
        assert_eq!(starts(&s), vec![1, 5, 11, 16, 18]);
        assert_eq!(evaluate_twct(&inst, &s, VariationConfig::IPF).unwrap(), 61);
    }

    #[test]
    fn non_preemptive_squeezes_the_batch() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Item, Preemption::Forbidden, Initiation::Flexible);
        let s = left_shift_timing(&inst, &table1_sizing_sequence(&inst), var).unwrap();
        assert_eq!(starts(&s), vec![7, 9, 11, 16, 18]);
        assert_eq!(s.machines[0][0].start, 7);
        assert_eq!(s.machines[0][0].end, 13);
        assert_eq!(evaluate_twct(&inst, &s, var).unwrap(), 71);
    }

    #[test]
    fn complete_initiation_waits_for_last_release() {
        let inst = table1();
        let var = VariationConfig::new(Availability::Item, Preemption::Allowed, Initiation::Complete);
        let s = left_shift_timing(&inst, &table1_sizing_sequence(&inst), var).unwrap();
        assert_eq!(starts(&s), vec![11, 13, 15, 20, 22]);
        assert_eq!(s.machines[0][1].start, 20);
        assert_eq!(evaluate_twct(&inst, &s, var).unwrap(), 91);
    }

    #[test]
    fn machine_twct_agrees_with_schedule() {
        let inst = table1();
        let seq = table1_sizing_sequence(&inst);
        for var in VariationConfig::all() {
            let s = left_shift_timing(&inst, &seq, var).unwrap();
            let positions: Vec<Vec<usize>> = seq.machines[0]
                .iter()
                .map(|b| b.jobs.iter().map(|id| inst.index_of(*id).unwrap()).collect())
                .collect();
            let slices: Vec<&[usize]> = positions.iter().map(Vec::as_slice).collect();
            assert_eq!(
                machine_twct(&inst, &slices, var),
                evaluate_twct(&inst, &s, var).unwrap(),
                "{var}"
            );
            assert!(check_feasibility(&inst, &s, var, true).feasible, "{var}");
        }
    }

    #[test]
    fn retiming_is_a_fixed_point() {
        let inst = table1();
        let seq = table1_sizing_sequence(&inst);
        for var in VariationConfig::all() {
            let once = left_shift_timing(&inst, &seq, var).unwrap();
            let twice = left_shift_timing(&inst, &once.sequencing(), var).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn rejects_malformed_sequencing() {
        let inst = table1();
        let seq = Sequencing::from_ids(&inst, &[vec![vec![1, 3]]]);
        assert!(matches!(
            left_shift_timing(&inst, &seq, VariationConfig::IPF),
            Err(TimingError::FamilyMismatch { job: 3, .. })
        ));
        let seq = Sequencing::from_ids(&inst, &[vec![vec![42]]]);
        assert_eq!(
            left_shift_timing(&inst, &seq, VariationConfig::IPF),
            Err(TimingError::UnknownJob(42))
        );
        let seq = Sequencing::from_ids(&inst, &[vec![], vec![]]);
        assert!(matches!(
            left_shift_timing(&inst, &seq, VariationConfig::IPF),
            Err(TimingError::MachineCount { got: 2, available: 1 })
        ));
    }
}

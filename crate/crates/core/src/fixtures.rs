//! The five-job, two-family example instance and its reference schedules.
//! Families are 0-based here, job ids are 1-based.

use crate::instance::{BatchSizeBounds, Job, SetupMatrix};
use crate::schedule::{Schedule, Sequencing, TimedBatch, TimedJob};
use crate::Instance;

/// One machine, setup 3 between families, initial setup 1, all weights and
/// processing times 1 and 2, batch sizes l = u = (3, 2).
pub fn table1() -> Instance {
    let job = |id, release, family| Job {
        id,
        weight: 1,
        release,
        processing: 2,
        family,
    };
    Instance::new(
        vec![job(1, 1, 0), job(2, 5, 0), job(3, 6, 1), job(4, 12, 1), job(5, 11, 0)],
        1,
        2,
        SetupMatrix {
            inter: vec![vec![0, 3], vec![3, 0]],
            initial: vec![1, 1],
        },
        BatchSizeBounds {
            min: vec![3, 2],
            max: vec![3, 2],
        },
    )
}

/// The unconstrained optimum: {1,2}, {3,4}, {5}.
pub fn table1_core_sequence(inst: &Instance) -> Sequencing {
    Sequencing::from_ids(inst, &[vec![vec![1, 2], vec![3, 4], vec![5]]])
}

/// The optimum once batch sizes are enforced: {1,2,5}, {3,4}.
pub fn table1_sizing_sequence(inst: &Instance) -> Sequencing {
    Sequencing::from_ids(inst, &[vec![vec![1, 2, 5], vec![3, 4]]])
}

fn timed(inst: &Instance, batches: &[(usize, &[(u32, i64)])]) -> Schedule {
    let batches = batches
        .iter()
        .map(|(family, jobs)| {
            let jobs = jobs.iter().map(|&(id, start)| TimedJob { id, start }).collect();
            TimedBatch::new(inst, *family, jobs)
        })
        .collect();
    Schedule {
        machines: vec![batches],
    }
}

/// Core solution, TWCT 55.
pub fn figure1_schedule(inst: &Instance) -> Schedule {
    timed(
        inst,
        &[(0, &[(1, 1), (2, 5)]), (1, &[(3, 10), (4, 12)]), (0, &[(5, 17)])],
    )
}

/// Sizing-feasible solution, TWCT 61 with item availability.
pub fn figure4_schedule(inst: &Instance) -> Schedule {
    timed(inst, &[(0, &[(1, 1), (2, 5), (5, 11)]), (1, &[(3, 16), (4, 18)])])
}

/// Complete-initiation timing of the sizing sequence.
pub fn figure7_schedule(inst: &Instance) -> Schedule {
    timed(inst, &[(0, &[(1, 11), (2, 13), (5, 15)]), (1, &[(3, 20), (4, 22)])])
}

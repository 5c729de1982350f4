//! Timed schedules and untimed sequencing decisions.

use serde::{Deserialize, Serialize};

use crate::{Instance, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedJob {
    pub id: u32,
    pub start: Time,
}

/// A batch with its jobs in processing order. `start` and `end` are derived
/// from the jobs: the start of the first job and the latest job end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedBatch {
    pub family: usize,
    pub jobs: Vec<TimedJob>,
    pub start: Time,
    pub end: Time,
}

impl TimedBatch {
    /// Builds a batch and derives its span. Unknown job ids contribute a zero
    /// length so that malformed input still reaches the feasibility checker.
    pub fn new(inst: &Instance, family: usize, jobs: Vec<TimedJob>) -> Self {
        let start = jobs.first().map(|j| j.start).unwrap_or(0);
        let end = jobs
            .iter()
            .map(|j| {
                let p = inst.index_of(j.id).map(|i| inst.jobs[i].processing).unwrap_or(0);
                j.start + p
            })
            .max()
            .unwrap_or(start);
        Self {
            family,
            jobs,
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// Per-machine ordered batches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub machines: Vec<Vec<TimedBatch>>,
}

impl Schedule {
    pub fn from_doc(inst: &Instance, doc: ScheduleDoc) -> Self {
        let machines = doc
            .0
            .into_iter()
            .map(|batches| {
                batches
                    .into_iter()
                    .map(|b| TimedBatch::new(inst, b.family, b.jobs))
                    .collect()
            })
            .collect();
        Self { machines }
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        ScheduleDoc(
            self.machines
                .iter()
                .map(|batches| {
                    batches
                        .iter()
                        .map(|b| BatchDoc {
                            family: b.family,
                            jobs: b.jobs.clone(),
                        })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn from_json(inst: &Instance, text: &str) -> serde_json::Result<Self> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        Ok(Self::from_doc(inst, doc))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("schedule serialization cannot fail")
    }

    /// Drops the timing, keeping the machine, batch and job order.
    pub fn sequencing(&self) -> Sequencing {
        Sequencing {
            machines: self
                .machines
                .iter()
                .map(|batches| {
                    batches
                        .iter()
                        .map(|b| UntimedBatch {
                            family: b.family,
                            jobs: b.jobs.iter().map(|j| j.id).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn num_batches(&self) -> usize {
        self.machines.iter().map(Vec::len).sum()
    }

    pub fn batches(&self) -> impl Iterator<Item = (usize, &TimedBatch)> {
        self.machines
            .iter()
            .enumerate()
            .flat_map(|(m, batches)| batches.iter().map(move |b| (m, b)))
    }
}

/// Serialized schedule: an array per machine of `{"family", "jobs": [{"id", "start"}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScheduleDoc(pub Vec<Vec<BatchDoc>>);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchDoc {
    pub family: usize,
    pub jobs: Vec<TimedJob>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UntimedBatch {
    pub family: usize,
    pub jobs: Vec<u32>,
}

/// Assignment and sequencing decisions without start times.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sequencing {
    pub machines: Vec<Vec<UntimedBatch>>,
}

impl Sequencing {
    /// Convenience constructor from job ids; each batch takes the family of
    /// its first job.
    pub fn from_ids(inst: &Instance, machines: &[Vec<Vec<u32>>]) -> Self {
        Self {
            machines: machines
                .iter()
                .map(|batches| {
                    batches
                        .iter()
                        .map(|ids| UntimedBatch {
                            family: ids
                                .first()
                                .and_then(|id| inst.index_of(*id))
                                .map(|i| inst.jobs[i].family)
                                .unwrap_or(0),
                            jobs: ids.clone(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Nested job ids, machine-major.
    pub fn key(&self) -> Vec<Vec<Vec<u32>>> {
        self.machines
            .iter()
            .map(|m| m.iter().map(|b| b.jobs.clone()).collect())
            .collect()
    }
}

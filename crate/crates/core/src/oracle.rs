//! Brute-force optimiser for tiny instances.
//!
//! Every machine subset is solved by enumerating all job orders and all
//! batch cuts (a cut is forced wherever the family changes), each candidate
//! timed by earliest-start timing. Subsets are then combined over all set
//! partitions of the jobs into at most `num_machines` blocks. Machines are
//! identical, so a partition is an unordered collection of blocks.

use thiserror::Error;

use crate::instance::{structural_violations, Violation};
use crate::schedule::{Schedule, Sequencing, UntimedBatch};
use crate::timing::{left_shift_timing, time_batch};
use crate::variation::{Availability, VariationConfig};
use crate::{Instance, Time};

pub const DEFAULT_JOB_CAP: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {jobs} jobs, oracle cap is {cap}")]
    CapExceeded { jobs: usize, cap: usize },
    #[error("no schedule satisfies the batch-size bounds")]
    Infeasible,
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidInstance(Vec<Violation>),
}

/// Job positions per batch on one machine.
type MachineSeq = Vec<Vec<usize>>;

struct Enumerator<'a> {
    inst: &'a Instance,
    var: VariationConfig,
    sizing: bool,
}

impl Enumerator<'_> {
    fn size_ok(&self, family: usize, n: usize) -> bool {
        !self.sizing || (self.inst.bounds.min[family] <= n && n <= self.inst.bounds.max[family])
    }

    /// Visits every sequencing of the jobs in `mask` on a single machine with
    /// its TWCT.
    fn for_each_machine_seq(&self, mask: u32, visit: &mut dyn FnMut(&MachineSeq, Time)) {
        let mut seq: MachineSeq = Vec::new();
        self.extend(mask, &mut seq, None, 0, 0, visit);
    }

    /// `closed_end`/`closed_cost` describe all batches of `seq` except the last,
    /// which is still open.
    fn extend(
        &self,
        remaining: u32,
        seq: &mut MachineSeq,
        closed_family: Option<usize>,
        closed_end: Time,
        closed_cost: Time,
        visit: &mut dyn FnMut(&MachineSeq, Time),
    ) {
        if remaining == 0 {
            if let Some(last) = seq.last() {
                let family = self.inst.jobs[last[0]].family;
                if !self.size_ok(family, last.len()) {
                    return;
                }
                let (_, cost) = self.close(closed_family, closed_end, last);
                visit(seq, closed_cost + cost);
            } else {
                visit(seq, 0);
            }
            return;
        }
        for j in 0..self.inst.num_jobs() {
            if remaining & (1 << j) == 0 {
                continue;
            }
            let family = self.inst.jobs[j].family;
            let rest = remaining & !(1 << j);
            match seq.last() {
                None => {
                    seq.push(vec![j]);
                    self.extend(rest, seq, None, 0, 0, visit);
                    seq.pop();
                }
                Some(open) => {
                    let open_family = self.inst.jobs[open[0]].family;
                    let open_len = open.len();
                    // grow the open batch
                    if open_family == family && (!self.sizing || open_len < self.inst.bounds.max[family]) {
                        seq.last_mut().unwrap().push(j);
                        self.extend(rest, seq, closed_family, closed_end, closed_cost, visit);
                        seq.last_mut().unwrap().pop();
                    }
                    // or close it and start a new one
                    if self.size_ok(open_family, open_len) {
                        let (end, cost) = self.close(closed_family, closed_end, seq.last().unwrap());
                        seq.push(vec![j]);
                        self.extend(rest, seq, Some(open_family), end, closed_cost + cost, visit);
                        seq.pop();
                    }
                }
            }
        }
    }

    /// Times a batch after the given machine state; returns its end and the
    /// weighted completions it contributes.
    fn close(&self, prev: Option<usize>, prev_end: Time, jobs: &[usize]) -> (Time, Time) {
        let family = self.inst.jobs[jobs[0]].family;
        let ready = prev_end + self.inst.setups.before(prev, family);
        let mut item = 0;
        let (_, end) = time_batch(self.inst, ready, jobs, self.var, |j, s| {
            item += self.inst.jobs[j].weight * (s + self.inst.jobs[j].processing);
        });
        let cost = match self.var.availability {
            Availability::Item => item,
            Availability::Batch => end * jobs.iter().map(|&j| self.inst.jobs[j].weight).sum::<i64>(),
        };
        (end, cost)
    }

    fn ids(&self, seq: &MachineSeq) -> Vec<Vec<u32>> {
        seq.iter()
            .map(|b| b.iter().map(|&j| self.inst.jobs[j].id).collect())
            .collect()
    }
}

/// Sorted non-empty machine keys followed by the empty ones.
fn canonical_key(mut machines: Vec<Vec<Vec<u32>>>, num_machines: usize) -> Vec<Vec<Vec<u32>>> {
    machines.retain(|m| !m.is_empty());
    machines.sort();
    machines.resize(num_machines, Vec::new());
    machines
}

/// Calls `visit` with every partition of `0..n` into at most `k` unordered
/// blocks, given as bit masks.
fn for_each_partition(n: usize, k: usize, visit: &mut dyn FnMut(&[u32])) {
    fn rec(j: usize, n: usize, k: usize, blocks: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        if j == n {
            visit(blocks);
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << j;
            rec(j + 1, n, k, blocks, visit);
            blocks[b] &= !(1 << j);
        }
        if blocks.len() < k {
            blocks.push(1 << j);
            rec(j + 1, n, k, blocks, visit);
            blocks.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), visit);
}

fn precheck(inst: &Instance, job_cap: usize) -> Result<(), OracleError> {
    if inst.num_jobs() > job_cap {
        return Err(OracleError::CapExceeded {
            jobs: inst.num_jobs(),
            cap: job_cap,
        });
    }
    // bit masks are u32
    if inst.num_jobs() > 31 {
        return Err(OracleError::CapExceeded {
            jobs: inst.num_jobs(),
            cap: 31,
        });
    }
    let violations = structural_violations(inst);
    if !violations.is_empty() {
        return Err(OracleError::InvalidInstance(violations));
    }
    Ok(())
}

fn to_schedule(inst: &Instance, var: VariationConfig, key: &[Vec<Vec<u32>>]) -> Schedule {
    let seq = Sequencing {
        machines: key
            .iter()
            .map(|m| {
                m.iter()
                    .map(|ids| UntimedBatch {
                        family: inst.jobs[inst.index_of(ids[0]).unwrap()].family,
                        jobs: ids.clone(),
                    })
                    .collect()
            })
            .collect(),
    };
    left_shift_timing(inst, &seq, var).expect("enumerated sequencings are well formed")
}

/// Exact optimum by exhaustive enumeration. Among optimal schedules the one
/// with the smallest canonical job-id key is returned: machines sorted by
/// their nested id lists, empty machines last.
pub fn enumerate_optimal(
    inst: &Instance,
    var: VariationConfig,
    sizing_enabled: bool,
    job_cap: usize,
) -> Result<(Time, Schedule), OracleError> {
    precheck(inst, job_cap)?;
    let n = inst.num_jobs();
    let en = Enumerator {
        inst,
        var,
        sizing: sizing_enabled,
    };

    // best (cost, ids) per machine subset
    let mut best: Vec<Option<(Time, Vec<Vec<u32>>)>> = vec![None; 1 << n];
    for mask in 0..(1u32 << n) {
        let mut slot: Option<(Time, Vec<Vec<u32>>)> = None;
        en.for_each_machine_seq(mask, &mut |seq, cost| {
            let better = match &slot {
                None => true,
                Some((c, _)) if cost < *c => true,
                Some((c, key)) if cost == *c => en.ids(seq) < *key,
                _ => false,
            };
            if better {
                slot = Some((cost, en.ids(seq)));
            }
        });
        best[mask as usize] = slot;
    }

    let mut winner: Option<(Time, Vec<Vec<Vec<u32>>>)> = None;
    for_each_partition(n, inst.num_machines, &mut |blocks| {
        let mut total = 0;
        let mut machines = Vec::with_capacity(blocks.len());
        for &mask in blocks {
            match &best[mask as usize] {
                Some((cost, ids)) => {
                    total += cost;
                    machines.push(ids.clone());
                }
                None => return,
            }
        }
        let better = match &winner {
            None => true,
            Some((c, _)) if total < *c => true,
            Some((c, key)) if total == *c => canonical_key(machines.clone(), inst.num_machines) < *key,
            _ => false,
        };
        if better {
            winner = Some((total, canonical_key(machines, inst.num_machines)));
        }
    });
    if n == 0 {
        winner = Some((0, vec![Vec::new(); inst.num_machines]));
    }

    let (cost, key) = winner.ok_or(OracleError::Infeasible)?;
    let sched = to_schedule(inst, var, &key);
    Ok((cost, sched))
}

/// Every feasible sequencing, each exactly once, with its earliest-start
/// timing and objective. Machines are interchangeable, so sequencings that
/// only differ by a machine permutation count once.
pub fn enumerate_all_feasible(
    inst: &Instance,
    var: VariationConfig,
    sizing_enabled: bool,
    job_cap: usize,
) -> Result<impl Iterator<Item = (Schedule, Time)>, OracleError> {
    precheck(inst, job_cap)?;
    let n = inst.num_jobs();
    let en = Enumerator {
        inst,
        var,
        sizing: sizing_enabled,
    };
    let mut per_mask: Vec<Option<Vec<(Vec<Vec<u32>>, Time)>>> = vec![None; 1 << n];
    let mut out = Vec::new();
    for_each_partition(n, inst.num_machines, &mut |blocks| {
        for &mask in blocks {
            if per_mask[mask as usize].is_none() {
                let mut all = Vec::new();
                en.for_each_machine_seq(mask, &mut |seq, cost| all.push((en.ids(seq), cost)));
                per_mask[mask as usize] = Some(all);
            }
        }
        // cartesian product over blocks
        let lists: Vec<&Vec<(Vec<Vec<u32>>, Time)>> =
            blocks.iter().map(|&m| per_mask[m as usize].as_ref().unwrap()).collect();
        if lists.iter().any(|l| l.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; lists.len()];
        loop {
            let machines: Vec<Vec<Vec<u32>>> = idx.iter().zip(&lists).map(|(&i, l)| l[i].0.clone()).collect();
            let cost: Time = idx.iter().zip(&lists).map(|(&i, l)| l[i].1).sum();
            let key = canonical_key(machines, inst.num_machines);
            out.push((to_schedule(inst, var, &key), cost));
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return;
                }
                idx[d] += 1;
                if idx[d] < lists[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    });
    Ok(out.into_iter())
}

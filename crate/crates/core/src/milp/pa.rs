//! Positional assignment formulation (batch availability, non-preemptive
//! batches, complete initiation).
//!
//! Every machine has `N` slots, `N` being the total sizing batch count. A
//! slot holds at most one family's batch and empty slots trail the used
//! ones. Rows are named `B.1b` to `B.1l`.

use super::{Assignment, Model, Sense, TranslateError};
use crate::instance::max_batch_counts;
use crate::scalar::Scalar;
use crate::schedule::Schedule;
use crate::{Instance, Time};

fn int<S: Scalar>(v: Time) -> S {
    S::from_int(v)
}

/// Slots per machine.
pub fn pa_slots(inst: &Instance) -> usize {
    max_batch_counts(inst, true).total
}

pub fn encode_pa<S: Scalar>(inst: &Instance, big_k: Time) -> Model<S> {
    let n = pa_slots(inst);
    let machines = inst.num_machines;
    let families = inst.num_families;
    let jobs = &inst.jobs;
    let k = || int::<S>(big_k);
    let one = S::one;

    let mut m: Model<S> = Model::new();

    let x: Vec<Vec<Vec<usize>>> = jobs
        .iter()
        .map(|job| {
            (0..n)
                .map(|b| (0..machines).map(|mm| m.binary(format!("x[{},{b},{mm}]", job.id))).collect())
                .collect()
        })
        .collect();
    let y: Vec<Vec<Vec<usize>>> = (0..families)
        .map(|f| {
            (0..n)
                .map(|b| (0..machines).map(|mm| m.binary(format!("y[{f},{b},{mm}]"))).collect())
                .collect()
        })
        .collect();
    let slot_vars = |m: &mut Model<S>, prefix: &str| -> Vec<Vec<usize>> {
        (0..n)
            .map(|b| (0..machines).map(|mm| m.continuous(format!("{prefix}[{b},{mm}]"))).collect())
            .collect()
    };
    let s = slot_vars(&mut m, "S");
    let p = slot_vars(&mut m, "P");
    let cb = slot_vars(&mut m, "Cb");
    let c: Vec<usize> = jobs.iter().map(|job| m.continuous(format!("C[{}]", job.id))).collect();

    m.set_objective(jobs.iter().enumerate().map(|(j, job)| (c[j], int(job.weight))).collect());

    for (j, job) in jobs.iter().enumerate() {
        let terms = x[j].iter().flatten().map(|&v| (v, one())).collect();
        m.add_constraint(format!("B.1b[{}]", job.id), terms, Sense::Eq, one());
    }
    for b in 0..n {
        for mm in 0..machines {
            let terms = (0..families).map(|f| (y[f][b][mm], one())).collect();
            m.add_constraint(format!("B.1c[{b},{mm}]"), terms, Sense::Le, one());
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in 0..n {
            for mm in 0..machines {
                m.add_constraint(
                    format!("B.1d[{},{b},{mm}]", job.id),
                    vec![(x[j][b][mm], one()), (y[job.family][b][mm], -one())],
                    Sense::Le,
                    S::zero(),
                );
            }
        }
    }
    for b in 0..n {
        for mm in 0..machines {
            for f in 0..families {
                let sum: Vec<(usize, S)> = inst.family_jobs(f).iter().map(|&j| (x[j][b][mm], one())).collect();
                let mut lo = sum.clone();
                lo.push((y[f][b][mm], -int::<S>(inst.bounds.min[f] as Time)));
                m.add_constraint(format!("B.1e.min[{b},{mm},{f}]"), lo, Sense::Ge, S::zero());
                let mut hi = sum;
                hi.push((y[f][b][mm], -int::<S>(inst.bounds.max[f] as Time)));
                m.add_constraint(format!("B.1e.max[{b},{mm},{f}]"), hi, Sense::Le, S::zero());
            }
        }
    }
    for b in 1..n {
        for mm in 0..machines {
            let mut terms: Vec<(usize, S)> = (0..families).map(|f| (y[f][b - 1][mm], one())).collect();
            terms.extend((0..families).map(|f| (y[f][b][mm], -one())));
            m.add_constraint(format!("B.1f[{b},{mm}]"), terms, Sense::Ge, S::zero());
        }
    }
    for b in 0..n {
        for mm in 0..machines {
            let mut terms = vec![(p[b][mm], one())];
            terms.extend(jobs.iter().enumerate().map(|(j, job)| (x[j][b][mm], -int::<S>(job.processing))));
            m.add_constraint(format!("B.1g[{b},{mm}]"), terms, Sense::Ge, S::zero());
        }
    }
    if n > 0 {
        for mm in 0..machines {
            let mut terms = vec![(s[0][mm], one())];
            terms.extend((0..families).map(|f| (y[f][0][mm], -int::<S>(inst.setups.initial[f]))));
            m.add_constraint(format!("B.1h[{mm}]"), terms, Sense::Ge, S::zero());
        }
    }
    // S[b] >= Cb[b-1] + tau_gf - K[(1-y_g,b-1) + (1-y_f,b)]
    for b in 1..n {
        for mm in 0..machines {
            for g in 0..families {
                for f in 0..families {
                    m.add_constraint(
                        format!("B.1i[{b},{mm},{g},{f}]"),
                        vec![
                            (s[b][mm], one()),
                            (cb[b - 1][mm], -one()),
                            (y[g][b - 1][mm], -k()),
                            (y[f][b][mm], -k()),
                        ],
                        Sense::Ge,
                        int::<S>(inst.setups.before(Some(g), f)) - int::<S>(2) * k(),
                    );
                }
            }
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in 0..n {
            for mm in 0..machines {
                m.add_constraint(
                    format!("B.1j[{},{b},{mm}]", job.id),
                    vec![(s[b][mm], one()), (x[j][b][mm], -int::<S>(job.release))],
                    Sense::Ge,
                    S::zero(),
                );
            }
        }
    }
    for b in 0..n {
        for mm in 0..machines {
            m.add_constraint(
                format!("B.1k[{b},{mm}]"),
                vec![(cb[b][mm], one()), (s[b][mm], -one()), (p[b][mm], -one())],
                Sense::Ge,
                S::zero(),
            );
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in 0..n {
            for mm in 0..machines {
                m.add_constraint(
                    format!("B.1l[{},{b},{mm}]", job.id),
                    vec![(c[j], one()), (cb[b][mm], -one()), (x[j][b][mm], -k())],
                    Sense::Ge,
                    -k(),
                );
            }
        }
    }
    m
}

/// Values for every variable of [`encode_pa`] describing `sched`.
///
/// Each machine's batches fill its slots in order; trailing slots are empty
/// with zero start, length and completion. Completions are batch ends.
pub fn schedule_to_pa_assignment<S: Scalar>(inst: &Instance, sched: &Schedule) -> Result<Assignment<S>, TranslateError> {
    if sched.machines.len() > inst.num_machines {
        return Err(TranslateError::MachineCount {
            got: sched.machines.len(),
            available: inst.num_machines,
        });
    }
    let n = pa_slots(inst);
    let jobs = &inst.jobs;
    let mut a: Assignment<S> = Assignment::new();
    let mut set = |name: String, v: Time| {
        a.insert(name, S::from_int(v));
    };

    let mut slot_of = vec![None; jobs.len()];
    let mut completion = vec![0; jobs.len()];
    for mm in 0..inst.num_machines {
        let batches: &[crate::schedule::TimedBatch] = sched.machines.get(mm).map_or(&[], |v| v.as_slice());
        if batches.len() > n {
            return Err(TranslateError::SlotsExceeded {
                machine: mm,
                used: batches.len(),
                available: n,
            });
        }
        for b in 0..n {
            let batch = batches.get(b);
            for f in 0..inst.num_families {
                set(format!("y[{f},{b},{mm}]"), batch.is_some_and(|bt| bt.family == f) as Time);
            }
            let (start, len, end) = match batch {
                Some(bt) => {
                    let len: Time = bt
                        .jobs
                        .iter()
                        .map(|tj| inst.index_of(tj.id).map_or(0, |j| jobs[j].processing))
                        .sum();
                    (bt.start, len, bt.end)
                }
                None => (0, 0, 0),
            };
            set(format!("S[{b},{mm}]"), start);
            set(format!("P[{b},{mm}]"), len);
            set(format!("Cb[{b},{mm}]"), end);
            for tj in batch.map_or(&[][..], |bt| bt.jobs.as_slice()) {
                let j = inst.index_of(tj.id).ok_or(TranslateError::UnknownJob(tj.id))?;
                slot_of[j] = Some((b, mm));
                completion[j] = end;
            }
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in 0..n {
            for mm in 0..inst.num_machines {
                set(format!("x[{},{b},{mm}]", job.id), (slot_of[j] == Some((b, mm))) as Time);
            }
        }
        set(format!("C[{}]", job.id), completion[j]);
    }
    Ok(a)
}

//! Relative positioning formulation (item availability, preemptive batches,
//! flexible initiation).
//!
//! Batches are pre-assigned to families: family `f` owns `N_f` consecutive
//! batch indices, families in order. Rows are named after their constraint
//! family, `A.1b` to `A.1m`, with bracketed indices. The batch upper size
//! uses `u_f`.

use std::ops::Range;

use super::{Assignment, Model, Sense, TranslateError};
use crate::instance::max_batch_counts;
use crate::scalar::Scalar;
use crate::schedule::Schedule;
use crate::{Instance, Time};

/// Batch index sets per family.
pub(crate) struct RpLayout {
    pub batch_family: Vec<usize>,
    pub family_batches: Vec<Range<usize>>,
}

impl RpLayout {
    pub fn new(inst: &Instance) -> Self {
        let counts = max_batch_counts(inst, true);
        let mut batch_family = Vec::new();
        let mut family_batches = Vec::new();
        for (f, &n) in counts.per_family.iter().enumerate() {
            let start = batch_family.len();
            batch_family.extend(std::iter::repeat(f).take(n));
            family_batches.push(start..batch_family.len());
        }
        Self {
            batch_family,
            family_batches,
        }
    }

    pub fn num_batches(&self) -> usize {
        self.batch_family.len()
    }
}

fn int<S: Scalar>(v: Time) -> S {
    S::from_int(v)
}

pub fn encode_rp<S: Scalar>(inst: &Instance, big_k: Time) -> Model<S> {
    let layout = RpLayout::new(inst);
    let nb = layout.num_batches();
    let machines = inst.num_machines;
    let jobs = &inst.jobs;
    let family_members = |f: usize| inst.family_jobs(f).iter().copied();
    let k = || int::<S>(big_k);
    let one = S::one;

    let mut m: Model<S> = Model::new();

    // variables
    let mut x = vec![vec![usize::MAX; nb]; jobs.len()];
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            x[j][b] = m.binary(format!("x[{},{b}]", job.id));
        }
    }
    let y: Vec<usize> = (0..nb).map(|b| m.binary(format!("y[{b}]"))).collect();
    let ym: Vec<Vec<usize>> = (0..nb)
        .map(|b| (0..machines).map(|mm| m.binary(format!("y[{b},{mm}]"))).collect())
        .collect();
    let mut z = vec![Vec::new(); nb];
    for (b, zb) in z.iter_mut().enumerate() {
        let members: Vec<usize> = family_members(layout.batch_family[b]).collect();
        for (ii, &i) in members.iter().enumerate() {
            for &j in &members[ii + 1..] {
                let (i, j) = if jobs[i].id < jobs[j].id { (i, j) } else { (j, i) };
                zb.push((i, j, m.binary(format!("z[{b},{},{}]", jobs[i].id, jobs[j].id))));
            }
        }
    }
    let mut w = vec![vec![usize::MAX; nb]; nb];
    for a in 0..nb {
        for b in a + 1..nb {
            w[a][b] = m.binary(format!("w[{a},{b}]"));
        }
    }
    let c: Vec<usize> = jobs.iter().map(|job| m.continuous(format!("C[{}]", job.id))).collect();
    let cb: Vec<usize> = (0..nb).map(|b| m.continuous(format!("Cb[{b}]"))).collect();
    let mut cjb = vec![vec![usize::MAX; nb]; jobs.len()];
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            cjb[j][b] = m.continuous(format!("Cjb[{},{b}]", job.id));
        }
    }

    m.set_objective(jobs.iter().enumerate().map(|(j, job)| (c[j], int(job.weight))).collect());

    for (j, job) in jobs.iter().enumerate() {
        let terms = layout.family_batches[job.family].clone().map(|b| (x[j][b], one())).collect();
        m.add_constraint(format!("A.1b[{}]", job.id), terms, Sense::Eq, one());
    }
    for b in 0..nb {
        let mut terms: Vec<(usize, S)> = ym[b].iter().map(|&v| (v, one())).collect();
        terms.push((y[b], -one()));
        m.add_constraint(format!("A.1c[{b}]"), terms, Sense::Eq, S::zero());
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            m.add_constraint(
                format!("A.1d[{},{b}]", job.id),
                vec![(x[j][b], one()), (y[b], -one())],
                Sense::Le,
                S::zero(),
            );
        }
    }
    for b in 0..nb {
        let f = layout.batch_family[b];
        let sum: Vec<(usize, S)> = family_members(f).map(|j| (x[j][b], one())).collect();
        let mut lo = sum.clone();
        lo.push((y[b], -int::<S>(inst.bounds.min[f] as Time)));
        m.add_constraint(format!("A.1e.min[{b}]"), lo, Sense::Ge, S::zero());
        let mut hi = sum;
        hi.push((y[b], -int::<S>(inst.bounds.max[f] as Time)));
        m.add_constraint(format!("A.1e.max[{b}]"), hi, Sense::Le, S::zero());
    }
    // C^b_j >= C^a + tau + p_j - K[(1-w_ab) + (1-x_jb) + (1-y_am) + (1-y_bm)]
    for a in 0..nb {
        for b in a + 1..nb {
            let (fa, fb) = (layout.batch_family[a], layout.batch_family[b]);
            for j in family_members(fb) {
                for mm in 0..machines {
                    m.add_constraint(
                        format!("A.1f[{a},{b},{},{mm}]", jobs[j].id),
                        vec![
                            (cjb[j][b], one()),
                            (cb[a], -one()),
                            (w[a][b], -k()),
                            (x[j][b], -k()),
                            (ym[a][mm], -k()),
                            (ym[b][mm], -k()),
                        ],
                        Sense::Ge,
                        int::<S>(inst.setups.before(Some(fa), fb) + jobs[j].processing) - int::<S>(4) * k(),
                    );
                }
            }
        }
    }
    // C^a_j >= C^b + tau + p_j - K[w_ab + (1-x_ja) + (1-y_am) + (1-y_bm)]
    for a in 0..nb {
        for b in a + 1..nb {
            let (fa, fb) = (layout.batch_family[a], layout.batch_family[b]);
            for j in family_members(fa) {
                for mm in 0..machines {
                    m.add_constraint(
                        format!("A.1g[{a},{b},{},{mm}]", jobs[j].id),
                        vec![
                            (cjb[j][a], one()),
                            (cb[b], -one()),
                            (w[a][b], k()),
                            (x[j][a], -k()),
                            (ym[a][mm], -k()),
                            (ym[b][mm], -k()),
                        ],
                        Sense::Ge,
                        int::<S>(inst.setups.before(Some(fb), fa) + jobs[j].processing) - int::<S>(3) * k(),
                    );
                }
            }
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            m.add_constraint(
                format!("A.1h[{},{b}]", job.id),
                vec![(cjb[j][b], one()), (y[b], -int::<S>(job.release + job.processing)), (x[j][b], -k())],
                Sense::Ge,
                -k(),
            );
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            m.add_constraint(
                format!("A.1i[{},{b}]", job.id),
                vec![
                    (cjb[j][b], one()),
                    (y[b], -int::<S>(inst.setups.initial[job.family] + job.processing)),
                    (x[j][b], -k()),
                ],
                Sense::Ge,
                -k(),
            );
        }
    }
    for (b, pairs) in z.iter().enumerate() {
        for &(i, j, zv) in pairs {
            let (pi, pj) = (jobs[i].processing, jobs[j].processing);
            let (idi, idj) = (jobs[i].id, jobs[j].id);
            // C^b_j - C^b_i >= p_j y_b - K[(1-z) + (1-x_ib) + (1-x_jb)]
            m.add_constraint(
                format!("A.1j[{b},{idi},{idj}]"),
                vec![
                    (cjb[j][b], one()),
                    (cjb[i][b], -one()),
                    (y[b], -int::<S>(pj)),
                    (zv, -k()),
                    (x[i][b], -k()),
                    (x[j][b], -k()),
                ],
                Sense::Ge,
                -int::<S>(3) * k(),
            );
            // C^b_i - C^b_j >= p_i y_b - K[z + (1-x_ib) + (1-x_jb)]
            m.add_constraint(
                format!("A.1k[{b},{idi},{idj}]"),
                vec![
                    (cjb[i][b], one()),
                    (cjb[j][b], -one()),
                    (y[b], -int::<S>(pi)),
                    (zv, k()),
                    (x[i][b], -k()),
                    (x[j][b], -k()),
                ],
                Sense::Ge,
                -int::<S>(2) * k(),
            );
        }
    }
    for b in 0..nb {
        for j in family_members(layout.batch_family[b]) {
            m.add_constraint(
                format!("A.1l[{b},{}]", jobs[j].id),
                vec![(cb[b], one()), (cjb[j][b], -one()), (x[j][b], -k())],
                Sense::Ge,
                -k(),
            );
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            m.add_constraint(
                format!("A.1m[{},{b}]", job.id),
                vec![(c[j], one()), (cjb[j][b], -one()), (x[j][b], -k())],
                Sense::Ge,
                -k(),
            );
        }
    }
    m
}

/// Values for every variable of [`encode_rp`] describing `sched`.
///
/// The batches of each family take that family's indices in `(start,
/// machine)` order. Unused batches get zero completion; a job's `C^b_j` for a
/// batch it is not in is set to its processing time. `w[a,b]` is 1 unless
/// both batches are used and `b` starts first; `z[b,i,j]` is 1 unless both
/// jobs are in `b` and `j` runs first.
pub fn schedule_to_rp_assignment<S: Scalar>(inst: &Instance, sched: &Schedule) -> Result<Assignment<S>, TranslateError> {
    if sched.machines.len() > inst.num_machines {
        return Err(TranslateError::MachineCount {
            got: sched.machines.len(),
            available: inst.num_machines,
        });
    }
    let layout = RpLayout::new(inst);
    let nb = layout.num_batches();
    let jobs = &inst.jobs;

    // (start, machine, batch) per family
    let mut by_family: Vec<Vec<(Time, usize, &crate::schedule::TimedBatch)>> = vec![Vec::new(); inst.num_families];
    for (mm, batch) in sched.batches() {
        by_family[batch.family].push((batch.start, mm, batch));
    }
    let mut placed: Vec<Option<(usize, &crate::schedule::TimedBatch)>> = vec![None; nb];
    for (f, list) in by_family.iter_mut().enumerate() {
        list.sort_by_key(|(s, mm, _)| (*s, *mm));
        let range = layout.family_batches[f].clone();
        if list.len() > range.len() {
            return Err(TranslateError::CapacityExceeded {
                family: f,
                used: list.len(),
                available: range.len(),
            });
        }
        for (b, &(_, mm, batch)) in range.zip(list.iter()) {
            placed[b] = Some((mm, batch));
        }
    }

    let mut job_batch = vec![None; jobs.len()];
    let mut completion = vec![0; jobs.len()];
    let mut position = vec![0; jobs.len()];
    for (b, slot) in placed.iter().enumerate() {
        if let Some((_, batch)) = slot {
            for (k, tj) in batch.jobs.iter().enumerate() {
                let j = inst.index_of(tj.id).ok_or(TranslateError::UnknownJob(tj.id))?;
                job_batch[j] = Some(b);
                completion[j] = tj.start + jobs[j].processing;
                position[j] = k;
            }
        }
    }

    let mut a: Assignment<S> = Assignment::new();
    let mut set = |name: String, v: Time| {
        a.insert(name, S::from_int(v));
    };
    for (j, job) in jobs.iter().enumerate() {
        for b in layout.family_batches[job.family].clone() {
            let inside = job_batch[j] == Some(b);
            set(format!("x[{},{b}]", job.id), inside as Time);
            set(
                format!("Cjb[{},{b}]", job.id),
                if inside { completion[j] } else { job.processing },
            );
        }
        set(format!("C[{}]", job.id), completion[j]);
    }
    for b in 0..nb {
        set(format!("y[{b}]", ), placed[b].is_some() as Time);
        for mm in 0..inst.num_machines {
            set(format!("y[{b},{mm}]"), placed[b].is_some_and(|(pm, _)| pm == mm) as Time);
        }
        set(format!("Cb[{b}]"), placed[b].map_or(0, |(_, batch)| batch.end));
        let members: Vec<usize> = inst.family_jobs(layout.batch_family[b]).to_vec();
        for (ii, &i) in members.iter().enumerate() {
            for &j in &members[ii + 1..] {
                let (i, j) = if jobs[i].id < jobs[j].id { (i, j) } else { (j, i) };
                let both = job_batch[i] == Some(b) && job_batch[j] == Some(b);
                let j_first = both && position[j] < position[i];
                set(format!("z[{b},{},{}]", jobs[i].id, jobs[j].id), (!j_first) as Time);
            }
        }
    }
    for x in 0..nb {
        for y in x + 1..nb {
            let y_first = match (placed[x], placed[y]) {
                (Some((mx, bx)), Some((my, by))) => (by.start, my) < (bx.start, mx),
                _ => false,
            };
            set(format!("w[{x},{y}]"), (!y_first) as Time);
        }
    }
    Ok(a)
}

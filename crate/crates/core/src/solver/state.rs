//! Search state of the branch-and-bound and its admissible lower bound.
//!
//! Batches are opened one at a time in the global order of their
//! `(start, machine)` keys; exactly one batch is open at any node and every
//! other batch is closed. With item availability, preemption and flexible
//! initiation, consecutive same-family batches on a machine time exactly like
//! one long batch, so in that variation the open batch is a *run* with no
//! upper size cap that is cut into valid batches when a schedule is
//! materialised.

use crate::instance::splittable;
use crate::schedule::{Schedule, Sequencing, UntimedBatch};
use crate::timing::{left_shift_timing, time_batch};
use crate::variation::{Availability, Initiation, Preemption};
use crate::{Instance, Time};

use super::{ModelVariant, SolverConfig};

/// Data derived once per solve and shared by every search state.
#[derive(Clone, Debug)]
pub struct SearchContext<'a> {
    pub inst: &'a Instance,
    pub cfg: SolverConfig,
    /// Effective batch-size bounds (1 and |J_f| when sizing is off).
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub run_mode: bool,
    /// Start-time lower bounds on setups: shortest-path closure over the
    /// families plus a source node (index `num_families`) for initial setups.
    dist: Vec<Vec<Time>>,
    /// Job positions by non-increasing `w/p`.
    wspt: Vec<usize>,
    by_processing: Vec<Vec<usize>>,
    by_release: Vec<Vec<usize>>,
}

impl<'a> SearchContext<'a> {
    pub fn new(inst: &'a Instance, cfg: &SolverConfig) -> Self {
        let nf = inst.num_families;
        let (lo, hi) = (0..nf)
            .map(|f| {
                if cfg.sizing_enabled {
                    (inst.bounds.min[f].max(1), inst.bounds.max[f])
                } else {
                    (1, inst.family_size(f).max(1))
                }
            })
            .unzip();

        let mut dist = vec![vec![Time::MAX / 4; nf + 1]; nf + 1];
        for f in 0..nf {
            dist[nf][f] = inst.setups.initial[f];
            for g in 0..nf {
                dist[f][g] = if f == g { 0 } else { inst.setups.inter[f][g] };
            }
        }
        dist[nf][nf] = 0;
        for k in 0..=nf {
            for i in 0..=nf {
                for j in 0..=nf {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }

        let mut wspt: Vec<usize> = (0..inst.num_jobs()).collect();
        wspt.sort_by(|&a, &b| {
            let (ja, jb) = (&inst.jobs[a], &inst.jobs[b]);
            (ja.processing * jb.weight)
                .cmp(&(jb.processing * ja.weight))
                .then(a.cmp(&b))
        });
        let mut by_processing = Vec::with_capacity(nf);
        let mut by_release = Vec::with_capacity(nf);
        for f in 0..nf {
            let mut p = inst.family_jobs(f).to_vec();
            p.sort_by_key(|&j| (inst.jobs[j].processing, j));
            by_processing.push(p);
            let mut r = inst.family_jobs(f).to_vec();
            r.sort_by_key(|&j| (inst.jobs[j].release, j));
            by_release.push(r);
        }

        Self {
            inst,
            cfg: cfg.clone(),
            lo,
            hi,
            run_mode: cfg.variation.is_ipf(),
            dist,
            wspt,
            by_processing,
            by_release,
        }
    }

    #[inline]
    fn dist(&self, prev: Option<usize>, to: usize) -> Time {
        self.dist[prev.unwrap_or(self.inst.num_families)][to]
    }

    /// Whether `n` jobs of family `f` can form valid batches.
    #[inline]
    pub fn splittable(&self, f: usize, n: usize) -> bool {
        splittable(n, self.lo[f], self.hi[f])
    }

    /// Whether a batch (or run, in run mode) of `n` jobs of family `f` may close.
    #[inline]
    fn closable_size(&self, f: usize, n: usize) -> bool {
        if self.run_mode {
            n > 0 && self.splittable(f, n)
        } else {
            self.lo[f] <= n && n <= self.hi[f]
        }
    }
}

/// A batch in the search state. `label` numbers the batches of one family in
/// the order they were opened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateBatch {
    pub family: usize,
    pub label: usize,
    pub jobs: Vec<usize>,
    pub start: Time,
    pub end: Time,
    /// Weighted completions of the batch jobs (tentative while open).
    pub cost: Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub batches: Vec<StateBatch>,
    /// End and family of the last closed batch.
    pub end: Time,
    pub last_family: Option<usize>,
}

/// Undo record for closing the open batch.
#[derive(Clone, Copy, Debug)]
pub struct Closed {
    machine: usize,
    end: Time,
    last_family: Option<usize>,
    prev_key: Option<(Time, usize)>,
    closed_cost: Time,
}

/// Partial schedule explored by the search.
#[derive(Clone, Debug)]
pub struct SearchState<'a> {
    ctx: &'a SearchContext<'a>,
    pub machines: Vec<MachineState>,
    /// Machine whose last batch is open.
    pub open: Option<usize>,
    unscheduled: Vec<bool>,
    remaining: Vec<usize>,
    left: usize,
    closed_cost: Time,
    labels: Vec<usize>,
    /// `(start, machine)` of the most recently closed batch.
    prev_key: Option<(Time, usize)>,
}

impl<'a> SearchState<'a> {
    pub fn new(ctx: &'a SearchContext<'a>) -> Self {
        let inst = ctx.inst;
        Self {
            ctx,
            machines: vec![
                MachineState {
                    batches: Vec::new(),
                    end: 0,
                    last_family: None,
                };
                inst.num_machines
            ],
            open: None,
            unscheduled: vec![true; inst.num_jobs()],
            remaining: (0..inst.num_families).map(|f| inst.family_size(f)).collect(),
            left: inst.num_jobs(),
            closed_cost: 0,
            labels: vec![0; inst.num_families],
            prev_key: None,
        }
    }

    pub fn context(&self) -> &'a SearchContext<'a> {
        self.ctx
    }

    pub fn is_unscheduled(&self, j: usize) -> bool {
        self.unscheduled[j]
    }

    /// Number of jobs not yet placed.
    pub fn left(&self) -> usize {
        self.left
    }

    /// Unplaced jobs of family `f`.
    pub fn remaining(&self, f: usize) -> usize {
        self.remaining[f]
    }

    pub fn closed_cost(&self) -> Time {
        self.closed_cost
    }

    pub fn open_batch(&self) -> Option<&StateBatch> {
        self.open.map(|m| self.machines[m].batches.last().expect("open batch"))
    }

    /// Machines holding at least one batch. The search fills machines in
    /// index order, so these are `0..used_machines()`.
    pub fn used_machines(&self) -> usize {
        self.machines.iter().take_while(|m| !m.batches.is_empty()).count()
    }

    /// Ready time and previous family for a new batch of family `f` on `m`,
    /// assuming the open batch has been closed.
    pub fn ready_after_close(&self, m: usize, f: usize) -> (Time, Option<usize>) {
        let ms = &self.machines[m];
        let (end, last) = match (self.open, self.open_batch()) {
            (Some(om), Some(b)) if om == m => (b.end, Some(b.family)),
            _ => (ms.end, ms.last_family),
        };
        (end + self.ctx.inst.setups.before(last, f), last)
    }

    fn retime_open(&mut self) {
        let m = self.open.expect("open batch");
        let inst = self.ctx.inst;
        let var = self.ctx.cfg.variation;
        let ms = &mut self.machines[m];
        let b = ms.batches.last_mut().expect("open batch");
        let ready = ms.end + inst.setups.before(ms.last_family, b.family);
        let mut item = 0;
        let (start, end) = time_batch(inst, ready, &b.jobs, var, |j, s| {
            item += inst.jobs[j].weight * (s + inst.jobs[j].processing);
        });
        b.start = start;
        b.end = end;
        b.cost = match var.availability {
            Availability::Item => item,
            Availability::Batch => end * b.jobs.iter().map(|&j| inst.jobs[j].weight).sum::<Time>(),
        };
    }

    fn take(&mut self, j: usize) {
        debug_assert!(self.unscheduled[j]);
        self.unscheduled[j] = false;
        self.remaining[self.ctx.inst.jobs[j].family] -= 1;
        self.left -= 1;
    }

    fn give_back(&mut self, j: usize) {
        self.unscheduled[j] = true;
        self.remaining[self.ctx.inst.jobs[j].family] += 1;
        self.left += 1;
    }

    /// Adds job `j` to the open batch.
    pub fn extend(&mut self, j: usize) {
        let m = self.open.expect("extend needs an open batch");
        debug_assert_eq!(
            self.ctx.inst.jobs[j].family,
            self.machines[m].batches.last().unwrap().family
        );
        self.take(j);
        self.machines[m].batches.last_mut().unwrap().jobs.push(j);
        self.retime_open();
    }

    /// Undoes the last [`extend`](Self::extend).
    pub fn retract(&mut self) {
        let m = self.open.expect("retract needs an open batch");
        let j = self.machines[m].batches.last_mut().unwrap().jobs.pop().expect("job");
        self.give_back(j);
        self.retime_open();
    }

    /// Opens a new batch with job `j` on machine `m`. Any open batch must
    /// have been closed first.
    pub fn open_new(&mut self, m: usize, j: usize) {
        debug_assert!(self.open.is_none());
        let f = self.ctx.inst.jobs[j].family;
        self.take(j);
        let label = self.labels[f];
        self.labels[f] += 1;
        self.machines[m].batches.push(StateBatch {
            family: f,
            label,
            jobs: vec![j],
            start: 0,
            end: 0,
            cost: 0,
        });
        self.open = Some(m);
        self.retime_open();
    }

    /// Undoes the last [`open_new`](Self::open_new).
    pub fn unopen(&mut self) {
        let m = self.open.take().expect("open batch");
        let b = self.machines[m].batches.pop().expect("batch");
        self.labels[b.family] -= 1;
        self.give_back(b.jobs[0]);
    }

    /// Closes the open batch; no validity checks.
    pub fn close(&mut self) -> Closed {
        let m = self.open.take().expect("close needs an open batch");
        let rec = Closed {
            machine: m,
            end: self.machines[m].end,
            last_family: self.machines[m].last_family,
            prev_key: self.prev_key,
            closed_cost: self.closed_cost,
        };
        let ms = &mut self.machines[m];
        let b = ms.batches.last().unwrap();
        self.closed_cost += b.cost;
        self.prev_key = Some((b.start, m));
        ms.end = b.end;
        ms.last_family = Some(b.family);
        rec
    }

    pub fn reopen(&mut self, rec: Closed) {
        let ms = &mut self.machines[rec.machine];
        ms.end = rec.end;
        ms.last_family = rec.last_family;
        self.prev_key = rec.prev_key;
        self.closed_cost = rec.closed_cost;
        self.open = Some(rec.machine);
    }

    /// Whether the open batch may be closed now: its size is valid, the
    /// remaining jobs of its family can still be batched, and its key does
    /// not precede the previously closed batch.
    pub fn can_close(&self) -> bool {
        let Some(m) = self.open else { return false };
        let b = self.open_batch().unwrap();
        if !self.ctx.closable_size(b.family, b.jobs.len()) {
            return false;
        }
        let rest = self.remaining[b.family];
        let rest_ok = match self.ctx.cfg.model_variant {
            ModelVariant::G => rest == 0 || rest >= self.ctx.lo[b.family],
            ModelVariant::IA | ModelVariant::H => self.ctx.splittable(b.family, rest),
        };
        rest_ok && self.prev_key.map_or(true, |k| (b.start, m) >= k)
    }

    /// Batch-count propagation for the family of the open batch.
    pub fn counts_ok(&self) -> bool {
        let Some(b) = self.open_batch() else { return true };
        let (f, s, r) = (b.family, b.jobs.len(), self.remaining[b.family]);
        let (lo, hi) = (self.ctx.lo[f], self.ctx.hi[f]);
        match self.ctx.cfg.model_variant {
            ModelVariant::G => s + r >= lo,
            ModelVariant::IA | ModelVariant::H => {
                if self.ctx.run_mode {
                    (0..=r).any(|t| self.ctx.splittable(f, s + t) && self.ctx.splittable(f, r - t))
                } else {
                    if s > hi {
                        return false;
                    }
                    let from = lo.saturating_sub(s);
                    let to = (hi - s).min(r);
                    from <= to && (from..=to).any(|t| self.ctx.splittable(f, r - t))
                }
            }
        }
    }

    /// Total cost once every job is placed and the open batch closes as is.
    pub fn complete_cost(&self) -> Time {
        self.closed_cost + self.open_batch().map_or(0, |b| b.cost)
    }

    /// Builds the timed schedule, cutting runs into valid batches.
    pub fn materialize(&self) -> Schedule {
        let inst = self.ctx.inst;
        let machines = self
            .machines
            .iter()
            .map(|ms| {
                let mut out = Vec::new();
                for b in &ms.batches {
                    let ids: Vec<u32> = b.jobs.iter().map(|&j| inst.jobs[j].id).collect();
                    let parts = if self.ctx.run_mode {
                        ids.len().div_ceil(self.ctx.hi[b.family]).max(1)
                    } else {
                        1
                    };
                    let (base, extra) = (ids.len() / parts, ids.len() % parts);
                    let mut at = 0;
                    for k in 0..parts {
                        let len = base + usize::from(k < extra);
                        out.push(UntimedBatch {
                            family: b.family,
                            jobs: ids[at..at + len].to_vec(),
                        });
                        at += len;
                    }
                }
                out
            })
            .collect();
        left_shift_timing(inst, &Sequencing { machines }, self.ctx.cfg.variation)
            .expect("search states are well formed")
    }
}

/// Admissible bound on the cost of every completion of `state`.
///
/// Closed batches count exactly and the open batch at its tentative cost
/// (adding jobs never makes earlier completions smaller). Each unplaced job
/// is bounded by its earliest possible start: its release, joining the open
/// batch, or a new batch after a machine frontier plus the shortest setup
/// path, never before the open batch starts. The unplaced set is also
/// bounded as a whole by a parallel-machine relaxation without releases or
/// setups, shifted to the earliest such start. The `G` and `H` variants add
/// a bound on how far the open batch must still grow to reach its minimum
/// size.
pub fn lower_bound(state: &SearchState) -> Time {
    let ctx = state.ctx;
    let inst = ctx.inst;
    let var = ctx.cfg.variation;
    let variant = ctx.cfg.model_variant;
    let mut lb = state.closed_cost;

    let mut open_start = 0;
    let mut open_frontier = 0;
    if let Some(b) = state.open_batch() {
        open_start = b.start;
        open_frontier = b.end;
        let need = ctx.lo[b.family].saturating_sub(b.jobs.len());
        let mut end_lb = b.end;
        if need > 0 && variant != ModelVariant::IA {
            let mut span = b.end;
            let mut last_release = Time::MIN;
            let mut min_p = Time::MAX;
            let mut taken = 0;
            for &j in &ctx.by_processing[b.family] {
                if taken == need {
                    break;
                }
                if state.unscheduled[j] {
                    span += inst.jobs[j].processing;
                    min_p = min_p.min(inst.jobs[j].processing);
                    taken += 1;
                }
            }
            end_lb = span;
            if variant == ModelVariant::G {
                let mut seen = 0;
                for &j in &ctx.by_release[b.family] {
                    if state.unscheduled[j] {
                        seen += 1;
                        if seen == need {
                            last_release = inst.jobs[j].release;
                            break;
                        }
                    }
                }
                if taken == need && seen == need {
                    end_lb = end_lb.max(last_release + min_p);
                }
                open_frontier = end_lb;
            }
        }
        lb += match var.availability {
            Availability::Item => b.cost,
            Availability::Batch => {
                let weight: Time = b.jobs.iter().map(|&j| inst.jobs[j].weight).sum();
                weight * end_lb
            }
        };
    }

    if state.left == 0 {
        return lb;
    }

    let used = state.used_machines();
    let open = state.open_batch();
    let can_join = open.is_some_and(|b| ctx.run_mode || b.jobs.len() < ctx.hi[b.family]);
    let mut earliest = Time::MAX;
    let mut per_job = 0;
    let mut total_weight = 0;
    for (j, job) in inst.jobs.iter().enumerate() {
        if !state.unscheduled[j] {
            continue;
        }
        let f = job.family;
        let mut best = Time::MAX;
        if let Some(b) = open {
            if can_join && b.family == f {
                best = b.end;
            }
        }
        for m in 0..used {
            let (front, last) = if state.open == Some(m) {
                (open_frontier, open.map(|b| b.family))
            } else {
                (state.machines[m].end, state.machines[m].last_family)
            };
            best = best.min((front + ctx.dist(last, f)).max(open_start));
        }
        if used < inst.num_machines {
            best = best.min(ctx.dist(None, f).max(open_start));
        }
        let est = best.max(job.release);
        earliest = earliest.min(est);
        per_job += job.weight * (est + job.processing);
        total_weight += job.weight;
    }

    // Eastman-Even-Isaacs bound for identical machines, shifted to `earliest`.
    let m = inst.num_machines as Time;
    let (mut cum, mut single, mut wp) = (0, 0, 0);
    for &j in &ctx.wspt {
        if state.unscheduled[j] {
            let job = &inst.jobs[j];
            cum += job.processing;
            single += job.weight * cum;
            wp += job.weight * job.processing;
        }
    }
    let pooled = earliest * total_weight + (2 * single + (m - 1) * wp + 2 * m - 1) / (2 * m);
    lb + per_job.max(pooled)
}

/// Whether the batch start is fixed by its first job.
pub(crate) fn start_fixed_at_open(ctx: &SearchContext) -> bool {
    ctx.cfg.variation.preemption == Preemption::Allowed && ctx.cfg.variation.initiation == Initiation::Flexible
}

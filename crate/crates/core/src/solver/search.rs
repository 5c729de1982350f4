//! Depth-first branch-and-bound over [`SearchState`].
//!
//! The children of the root (the first batch of the schedule) are tasks that
//! workers pull in order. Workers share the incumbent; the global lower bound
//! is the smallest bound among unfinished tasks, capped by the incumbent.

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::schedule::Schedule;
use crate::Time;

use super::state::{lower_bound, start_fixed_at_open, SearchContext, SearchState};
use super::symmetry::{apply_symmetry_breaking, sbt_allows};
use super::{BoundPoint, SolveResult, SolveStatus, TracePoint};

const CHECK_EVERY: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Move {
    Extend(usize),
    /// Close the open batch (if any) and open a new one: `(machine, job)`.
    Open(usize, usize),
}

struct Best {
    objective: Option<Time>,
    schedule: Option<Schedule>,
    trace: Vec<TracePoint>,
}

struct Bounds {
    value: Time,
    trace: Vec<BoundPoint>,
}

struct Shared<'a> {
    ctx: &'a SearchContext<'a>,
    started: Instant,
    deadline: Instant,
    incumbent: AtomicI64,
    best: Mutex<Best>,
    bounds: Mutex<Bounds>,
    nodes: AtomicU64,
    stop: AtomicBool,
    task_lb: Vec<Time>,
    done: Vec<AtomicBool>,
    next_task: AtomicUsize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Children in the order they are explored: earliest completion of the
/// placed job first, then larger `w/p`, then job, then machine. A non-zero
/// seed permutes the job tie-break.
fn children(st: &SearchState) -> Vec<Move> {
    let ctx = st.context();
    let inst = ctx.inst;
    let mut out: Vec<(Time, usize, usize, Move)> = Vec::new();
    match st.open_batch() {
        None => {
            for j in 0..inst.num_jobs() {
                if st.is_unscheduled(j) {
                    let (ready, _) = st.ready_after_close(0, inst.jobs[j].family);
                    let key = ready.max(inst.jobs[j].release) + inst.jobs[j].processing;
                    out.push((key, j, 0, Move::Open(0, j)));
                }
            }
        }
        Some(b) => {
            let open_machine = st.open.unwrap();
            if ctx.run_mode || b.jobs.len() < ctx.hi[b.family] {
                let last = *b.jobs.last().unwrap();
                for &j in inst.family_jobs(b.family) {
                    if st.is_unscheduled(j) && (!ctx.cfg.sbt || sbt_allows(st, last, j)) {
                        let key = b.end.max(inst.jobs[j].release) + inst.jobs[j].processing;
                        out.push((key, j, open_machine, Move::Extend(j)));
                    }
                }
            }
            if st.can_close() {
                let machines = (st.used_machines() + 1).min(inst.num_machines);
                let fixed = start_fixed_at_open(ctx);
                for j in 0..inst.num_jobs() {
                    if !st.is_unscheduled(j) {
                        continue;
                    }
                    let job = &inst.jobs[j];
                    for m in 0..machines {
                        let (ready, last) = st.ready_after_close(m, job.family);
                        if ctx.run_mode && last == Some(job.family) {
                            continue;
                        }
                        let start = ready.max(job.release);
                        if fixed && (start, m) < (b.start, open_machine) {
                            continue;
                        }
                        out.push((start + job.processing, j, m, Move::Open(m, j)));
                    }
                }
            }
        }
    }
    let seed = ctx.cfg.seed;
    let tie = |j: usize| if seed == 0 { j as u64 } else { splitmix64(seed ^ j as u64) };
    out.sort_by(|a, b| {
        let (ja, jb) = (&inst.jobs[a.1], &inst.jobs[b.1]);
        a.0.cmp(&b.0)
            .then((jb.weight * ja.processing).cmp(&(ja.weight * jb.processing)))
            .then(tie(a.1).cmp(&tie(b.1)))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(matches!(a.3, Move::Open(..)).cmp(&matches!(b.3, Move::Open(..))))
    });
    out.into_iter().map(|c| c.3).collect()
}

/// Applies a move, runs `f` if batch counts stay feasible, and undoes it.
fn with_move<R>(st: &mut SearchState, mv: Move, f: impl FnOnce(&mut SearchState) -> R) -> Option<R> {
    match mv {
        Move::Extend(j) => {
            st.extend(j);
            let r = st.counts_ok().then(|| f(st));
            st.retract();
            r
        }
        Move::Open(m, j) => {
            let rec = st.open.map(|_| st.close());
            st.open_new(m, j);
            let r = st.counts_ok().then(|| f(st));
            st.unopen();
            if let Some(rec) = rec {
                st.reopen(rec);
            }
            r
        }
    }
}

struct Worker<'s, 'a> {
    shared: &'s Shared<'a>,
    local_nodes: u64,
}

impl Worker<'_, '_> {
    fn stopped(&self) -> bool {
        self.shared.stop.load(Ordering::Relaxed)
    }

    fn tick(&mut self) {
        self.local_nodes += 1;
        if self.local_nodes % CHECK_EVERY == 0 {
            self.shared.nodes.fetch_add(CHECK_EVERY, Ordering::Relaxed);
            let cfg = &self.shared.ctx.cfg;
            let over_nodes = cfg
                .node_limit
                .is_some_and(|limit| self.shared.nodes.load(Ordering::Relaxed) >= limit);
            if over_nodes || Instant::now() >= self.shared.deadline {
                self.shared.stop.store(true, Ordering::Relaxed);
            }
        }
    }

    fn dfs(&mut self, st: &mut SearchState) {
        self.tick();
        if self.stopped() {
            return;
        }
        if st.left() == 0 {
            if st.can_close() {
                let cost = st.complete_cost();
                if cost < self.shared.incumbent.load(Ordering::Relaxed) {
                    self.record(st, cost);
                }
            }
            return;
        }
        if lower_bound(st) >= self.shared.incumbent.load(Ordering::Relaxed) {
            return;
        }
        for mv in children(st) {
            with_move(st, mv, |st| self.dfs(st));
            if self.stopped() {
                return;
            }
        }
    }

    fn record(&self, st: &SearchState, cost: Time) {
        let ctx = self.shared.ctx;
        debug_assert!(apply_symmetry_breaking(st, &ctx.cfg).is_empty());
        let mut best = self.shared.best.lock().unwrap();
        if best.objective.is_some_and(|o| o <= cost) {
            return;
        }
        let schedule = st.materialize();
        debug_assert_eq!(
            crate::feasibility::evaluate_twct(ctx.inst, &schedule, ctx.cfg.variation),
            Ok(cost)
        );
        best.objective = Some(cost);
        best.schedule = Some(schedule);
        best.trace.push(TracePoint {
            elapsed: self.shared.started.elapsed(),
            objective: cost,
        });
        self.shared.incumbent.store(cost, Ordering::Relaxed);
    }

    fn run_tasks(&mut self, root: &SearchState, tasks: &[Move]) {
        loop {
            if self.stopped() {
                break;
            }
            let i = self.shared.next_task.fetch_add(1, Ordering::Relaxed);
            if i >= tasks.len() {
                break;
            }
            if self.shared.task_lb[i] < self.shared.incumbent.load(Ordering::Relaxed) {
                let mut st = root.clone();
                with_move(&mut st, tasks[i], |st| self.dfs(st));
            }
            if !self.stopped() {
                self.shared.done[i].store(true, Ordering::Release);
                self.shared.update_bound();
            }
        }
        self.shared
            .nodes
            .fetch_add(self.local_nodes % CHECK_EVERY, Ordering::Relaxed);
    }
}

impl Shared<'_> {
    fn update_bound(&self) {
        let open_min = self
            .task_lb
            .iter()
            .zip(&self.done)
            .filter(|(_, d)| !d.load(Ordering::Acquire))
            .map(|(lb, _)| *lb)
            .min()
            .unwrap_or(Time::MAX);
        let candidate = open_min.min(self.incumbent.load(Ordering::Relaxed));
        if candidate == Time::MAX {
            return;
        }
        let mut bounds = self.bounds.lock().unwrap();
        if candidate > bounds.value {
            bounds.value = candidate;
            bounds.trace.push(BoundPoint {
                elapsed: self.started.elapsed(),
                bound: candidate,
            });
        }
    }
}

pub(super) fn run(ctx: &SearchContext) -> SolveResult {
    let started = Instant::now();
    let root = SearchState::new(ctx);
    let root_lb = lower_bound(&root);
    let tasks = children(&root);
    let mut scratch = root.clone();
    let task_lb: Vec<Time> = tasks
        .iter()
        .map(|&mv| with_move(&mut scratch, mv, |st| lower_bound(st)).unwrap_or(Time::MAX))
        .collect();

    let shared = Shared {
        ctx,
        started,
        deadline: started + ctx.cfg.time_limit,
        incumbent: AtomicI64::new(Time::MAX),
        best: Mutex::new(Best {
            objective: None,
            schedule: None,
            trace: Vec::new(),
        }),
        bounds: Mutex::new(Bounds {
            value: root_lb,
            trace: vec![BoundPoint {
                elapsed: started.elapsed(),
                bound: root_lb,
            }],
        }),
        nodes: AtomicU64::new(1),
        stop: AtomicBool::new(false),
        done: tasks.iter().map(|_| AtomicBool::new(false)).collect(),
        task_lb,
        next_task: AtomicUsize::new(0),
    };
    shared.update_bound();

    let workers = ctx.cfg.workers.clamp(1, tasks.len().max(1));
    if workers == 1 {
        Worker {
            shared: &shared,
            local_nodes: 0,
        }
        .run_tasks(&root, &tasks);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let (shared, root, tasks) = (&shared, &root, &tasks);
                scope.spawn(move || {
                    Worker {
                        shared,
                        local_nodes: 0,
                    }
                    .run_tasks(root, tasks)
                });
            }
        });
    }

    let complete = shared.done.iter().all(|d| d.load(Ordering::Acquire));
    let best = shared.best.into_inner().unwrap();
    let mut bounds = shared.bounds.into_inner().unwrap();
    let status = match (complete, best.objective) {
        (true, Some(obj)) => {
            if obj > bounds.value {
                bounds.value = obj;
                bounds.trace.push(BoundPoint {
                    elapsed: started.elapsed(),
                    bound: obj,
                });
            }
            SolveStatus::Optimal
        }
        (true, None) => SolveStatus::Infeasible,
        (false, Some(_)) => SolveStatus::Feasible,
        (false, None) => SolveStatus::Unknown,
    };
    if let Some(obj) = best.objective {
        debug_assert!(bounds.value <= obj);
        bounds.value = bounds.value.min(obj);
    }
    SolveResult {
        status,
        schedule: best.schedule,
        objective: best.objective,
        lower_bound: bounds.value,
        nodes: shared.nodes.into_inner(),
        elapsed: started.elapsed(),
        trace: best.trace,
        bound_trace: bounds.trace,
    }
}

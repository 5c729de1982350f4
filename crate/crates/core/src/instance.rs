//! Problem data: jobs, families, setup times and batch-size bounds.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::Time;

/// A job with weight `w_j`, release `r_j`, processing time `p_j` and family `f_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: u32,
    pub weight: i64,
    pub release: Time,
    pub processing: Time,
    pub family: usize,
}

/// Family setup times. `inter[f][g]` applies when a batch of family `g`
/// directly follows a batch of family `f` on a machine; `initial[g]` applies
/// before the first batch of a machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetupMatrix {
    pub inter: Vec<Vec<Time>>,
    pub initial: Vec<Time>,
}

impl SetupMatrix {
    /// Setup before a batch of family `to`, given the family of the previous
    /// batch on the same machine (`None` for the first batch).
    #[inline]
    pub fn before(&self, previous: Option<usize>, to: usize) -> Time {
        match previous {
            None => self.initial[to],
            Some(from) if from == to => 0,
            Some(from) => self.inter[from][to],
        }
    }

    pub fn max_inter(&self) -> Time {
        self.inter.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_initial(&self) -> Time {
        self.initial.iter().copied().max().unwrap_or(0)
    }

    pub fn num_families(&self) -> usize {
        self.initial.len()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.inter.len();
        (0..n).all(|f| (0..n).all(|g| self.inter[f][g] == self.inter[g][f]))
    }
}

/// Minimum (`l_f`) and maximum (`u_f`) number of jobs per batch of each family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchSizeBounds {
    pub min: Vec<usize>,
    pub max: Vec<usize>,
}

/// A serial-batch scheduling instance on identical parallel machines.
///
/// Construction never fails; structural problems are reported by
/// [`validate_instance`] so that malformed files can be diagnosed in full.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "InstanceDoc", from = "InstanceDoc")]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub num_machines: usize,
    pub num_families: usize,
    pub setups: SetupMatrix,
    pub bounds: BatchSizeBounds,
    family_jobs: Vec<Vec<usize>>,
    index_of: HashMap<u32, usize>,
}

impl Instance {
    pub fn new(
        jobs: Vec<Job>,
        num_machines: usize,
        num_families: usize,
        setups: SetupMatrix,
        bounds: BatchSizeBounds,
    ) -> Self {
        let mut family_jobs = vec![Vec::new(); num_families];
        let mut index_of = HashMap::with_capacity(jobs.len());
        for (idx, job) in jobs.iter().enumerate() {
            if let Some(list) = family_jobs.get_mut(job.family) {
                list.push(idx);
            }
            index_of.entry(job.id).or_insert(idx);
        }
        Self {
            jobs,
            num_machines,
            num_families,
            setups,
            bounds,
            family_jobs,
            index_of,
        }
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    /// Positions (not ids) of the jobs of family `f`, in input order.
    pub fn family_jobs(&self, f: usize) -> &[usize] {
        &self.family_jobs[f]
    }

    pub fn family_size(&self, f: usize) -> usize {
        self.family_jobs[f].len()
    }

    /// Position of the job with the given id.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn total_processing(&self) -> Time {
        self.jobs.iter().map(|j| j.processing).sum()
    }

    pub fn max_release(&self) -> Time {
        self.jobs.iter().map(|j| j.release).max().unwrap_or(0)
    }

    /// Copy of this instance with different batch-size bounds.
    pub fn with_bounds(&self, bounds: BatchSizeBounds) -> Self {
        Self::new(
            self.jobs.clone(),
            self.num_machines,
            self.num_families,
            self.setups.clone(),
            bounds,
        )
    }

    /// Copy of this instance with every weight multiplied by `factor`.
    pub fn with_scaled_weights(&self, factor: i64) -> Self {
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job {
                weight: j.weight * factor,
                ..j.clone()
            })
            .collect();
        Self::new(
            jobs,
            self.num_machines,
            self.num_families,
            self.setups.clone(),
            self.bounds.clone(),
        )
    }

    /// Keeps only the jobs whose ids are listed; families are preserved.
    pub fn restricted_to(&self, ids: &[u32]) -> Self {
        let jobs = self
            .jobs
            .iter()
            .filter(|j| ids.contains(&j.id))
            .cloned()
            .collect();
        Self::new(
            jobs,
            self.num_machines,
            self.num_families,
            self.setups.clone(),
            self.bounds.clone(),
        )
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }
}

/// On-disk layout of an [`Instance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub num_machines: usize,
    pub num_families: usize,
    pub jobs: Vec<Job>,
    pub setup_inter: Vec<Vec<Time>>,
    pub setup_initial: Vec<Time>,
    pub min_batch: Vec<usize>,
    pub max_batch: Vec<usize>,
}

impl From<InstanceDoc> for Instance {
    fn from(doc: InstanceDoc) -> Self {
        Instance::new(
            doc.jobs,
            doc.num_machines,
            doc.num_families,
            SetupMatrix {
                inter: doc.setup_inter,
                initial: doc.setup_initial,
            },
            BatchSizeBounds {
                min: doc.min_batch,
                max: doc.max_batch,
            },
        )
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            num_machines: inst.num_machines,
            num_families: inst.num_families,
            jobs: inst.jobs,
            setup_inter: inst.setups.inter,
            setup_initial: inst.setups.initial,
            min_batch: inst.bounds.min,
            max_batch: inst.bounds.max,
        }
    }
}

/// Identifier of a violated rule, shared by instance validation and
/// schedule feasibility checking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    // instance
    NoMachines,
    NoFamilies,
    DuplicateJobId,
    JobWeight,
    JobProcessing,
    JobRelease,
    JobFamily,
    EmptyFamily,
    SetupShape,
    SetupNegative,
    SetupDiagonal,
    TriangleInequality,
    BoundShape,
    BoundZero,
    BoundOrder,
    BoundUnreachable,
    // schedule
    MachineCount,
    UnknownJob,
    DuplicateJob,
    MissingJob,
    EmptyBatch,
    Release,
    FamilyMismatch,
    JobOverlap,
    SetupGap,
    InitialSetup,
    BatchTooSmall,
    BatchTooLarge,
    Preemption,
    Initiation,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_string(self).unwrap_or_default();
        f.write_str(text.trim_matches('"'))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

impl Violation {
    pub fn new(rule: Rule, detail: impl Into<String>) -> Self {
        Self {
            rule,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Checks every type invariant of an instance. An empty result means the
/// instance is well formed.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let nf = inst.num_families;

    if inst.num_machines == 0 {
        out.push(Violation::new(Rule::NoMachines, "num_machines must be at least 1"));
    }
    if nf == 0 {
        out.push(Violation::new(Rule::NoFamilies, "num_families must be at least 1"));
    }

    let mut seen = HashSet::new();
    for job in &inst.jobs {
        if !seen.insert(job.id) {
            out.push(Violation::new(
                Rule::DuplicateJobId,
                format!("job id {} appears more than once", job.id),
            ));
        }
        if job.weight < 1 {
            out.push(Violation::new(
                Rule::JobWeight,
                format!("job {} has weight {} < 1", job.id, job.weight),
            ));
        }
        if job.processing < 1 {
            out.push(Violation::new(
                Rule::JobProcessing,
                format!("job {} has processing time {} < 1", job.id, job.processing),
            ));
        }
        if job.release < 0 {
            out.push(Violation::new(
                Rule::JobRelease,
                format!("job {} has negative release {}", job.id, job.release),
            ));
        }
        if job.family >= nf {
            out.push(Violation::new(
                Rule::JobFamily,
                format!("job {} has family {} outside [0, {nf})", job.id, job.family),
            ));
        }
    }
    for f in 0..nf {
        if inst.family_size(f) == 0 {
            out.push(Violation::new(Rule::EmptyFamily, format!("family {f} has no jobs")));
        }
    }

    let setups = &inst.setups;
    let shape_ok = setups.inter.len() == nf
        && setups.inter.iter().all(|row| row.len() == nf)
        && setups.initial.len() == nf;
    if !shape_ok {
        out.push(Violation::new(
            Rule::SetupShape,
            format!("setup matrix must be {nf}x{nf} with {nf} initial setups"),
        ));
    } else {
        for f in 0..nf {
            if setups.initial[f] < 0 {
                out.push(Violation::new(
                    Rule::SetupNegative,
                    format!("initial setup of family {f} is {}", setups.initial[f]),
                ));
            }
            for g in 0..nf {
                if setups.inter[f][g] < 0 {
                    out.push(Violation::new(
                        Rule::SetupNegative,
                        format!("tau[{f}][{g}] = {}", setups.inter[f][g]),
                    ));
                }
            }
            if setups.inter[f][f] != 0 {
                out.push(Violation::new(
                    Rule::SetupDiagonal,
                    format!("tau[{f}][{f}] = {} must be 0", setups.inter[f][f]),
                ));
            }
        }
        let t = &setups.inter;
        for f in 0..nf {
            for g in 0..nf {
                for h in 0..nf {
                    if t[f][h] > t[f][g] + t[g][h] {
                        out.push(Violation::new(
                            Rule::TriangleInequality,
                            format!(
                                "tau[{f}][{h}] = {} > tau[{f}][{g}] + tau[{g}][{h}] = {}",
                                t[f][h],
                                t[f][g] + t[g][h]
                            ),
                        ));
                    }
                }
            }
        }
    }

    let bounds = &inst.bounds;
    if bounds.min.len() != nf || bounds.max.len() != nf {
        out.push(Violation::new(
            Rule::BoundShape,
            format!("min_batch and max_batch must both have {nf} entries"),
        ));
    } else {
        for f in 0..nf {
            let (lo, hi) = (bounds.min[f], bounds.max[f]);
            if lo == 0 || hi == 0 {
                out.push(Violation::new(
                    Rule::BoundZero,
                    format!("family {f} has batch bounds [{lo}, {hi}]; both must be positive"),
                ));
            }
            if lo > hi {
                out.push(Violation::new(
                    Rule::BoundOrder,
                    format!("family {f} has min batch {lo} > max batch {hi}"),
                ));
            }
            if lo > inst.family_size(f) {
                out.push(Violation::new(
                    Rule::BoundUnreachable,
                    format!(
                        "family {f} has min batch {lo} but only {} jobs",
                        inst.family_size(f)
                    ),
                ));
            }
        }
    }
    out
}

/// Violations that make an instance unusable for scheduling, i.e. everything
/// except batch-size reachability (which is an infeasibility, not malformed data).
pub(crate) fn structural_violations(inst: &Instance) -> Vec<Violation> {
    validate_instance(inst)
        .into_iter()
        .filter(|v| v.rule != Rule::BoundUnreachable)
        .collect()
}

/// Upper bound on the number of batches per family (`N_f`) and in total (`N`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchCounts {
    pub per_family: Vec<usize>,
    pub total: usize,
}

/// With sizing, `N_f = floor(|J_f| / l_f)`; without sizing every job may
/// form its own batch, so `N_f = |J_f|`.
pub fn max_batch_counts(inst: &Instance, sizing_enabled: bool) -> BatchCounts {
    let per_family: Vec<usize> = (0..inst.num_families)
        .map(|f| {
            let size = inst.family_size(f);
            if sizing_enabled {
                size / inst.bounds.min[f].max(1)
            } else {
                size
            }
        })
        .collect();
    let total = per_family.iter().sum();
    BatchCounts { per_family, total }
}

/// Whether `n` jobs can be split into batches whose sizes all lie in `[lo, hi]`.
#[inline]
pub fn splittable(n: usize, lo: usize, hi: usize) -> bool {
    if n == 0 {
        return true;
    }
    let lo = lo.max(1);
    if hi < lo {
        return false;
    }
    // k batches cover n iff k*lo <= n <= k*hi; the best candidate is the
    // smallest k with k*hi >= n.
    let k = n.div_ceil(hi);
    k * lo <= n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;

    #[test]
    fn table1_is_valid() {
        assert!(validate_instance(&table1()).is_empty());
    }

    #[test]
    fn triangle_violation_is_reported_once() {
        let mut inst = table1();
        inst.num_families = 3;
        inst.setups = SetupMatrix {
            inter: vec![vec![0, 2, 10], vec![5, 0, 3], vec![5, 5, 0]],
            initial: vec![1, 1, 1],
        };
        inst.bounds = BatchSizeBounds {
            min: vec![1, 1, 1],
            max: vec![3, 3, 3],
        };
        let mut jobs = inst.jobs.clone();
        jobs[4].family = 2;
        let inst = Instance::new(jobs, 1, 3, inst.setups, inst.bounds);
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, Rule::TriangleInequality);
        assert!(v[0].detail.contains("tau[0][2] = 10"));
        assert!(v[0].detail.contains("tau[0][1] + tau[1][2] = 5"));
    }

    #[test]
    fn bound_order_violation() {
        let inst = table1();
        let bad = inst.with_bounds(BatchSizeBounds {
            min: vec![4, 2],
            max: vec![3, 2],
        });
        let v = validate_instance(&bad);
        let order: Vec<_> = v.iter().filter(|v| v.rule == Rule::BoundOrder).collect();
        assert_eq!(order.len(), 1);
        // l_1 = 4 also exceeds |J_1| = 3
        assert!(v.iter().any(|v| v.rule == Rule::BoundUnreachable));
    }

    #[test]
    fn batch_counts() {
        let inst = table1();
        assert_eq!(
            max_batch_counts(&inst, true),
            BatchCounts {
                per_family: vec![1, 1],
                total: 2
            }
        );
        assert_eq!(
            max_batch_counts(&inst, false),
            BatchCounts {
                per_family: vec![3, 2],
                total: 5
            }
        );
        let jobs = (0..7)
            .map(|i| Job {
                id: i,
                weight: 1,
                release: 0,
                processing: 1,
                family: 0,
            })
            .collect();
        let seven = Instance::new(
            jobs,
            1,
            1,
            SetupMatrix {
                inter: vec![vec![0]],
                initial: vec![0],
            },
            BatchSizeBounds {
                min: vec![2],
                max: vec![7],
            },
        );
        assert_eq!(max_batch_counts(&seven, true).total, 3);
    }

    #[test]
    fn splittable_matches_enumeration() {
        for lo in 1..6 {
            for hi in lo..9 {
                for n in 0..30 {
                    let brute = n == 0 || (1..=n).any(|k| k * lo <= n && n <= k * hi);
                    assert_eq!(splittable(n, lo, hi), brute, "n={n} lo={lo} hi={hi}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip_uses_documented_keys() {
        let inst = table1();
        let text = inst.to_json();
        for key in [
            "num_machines",
            "num_families",
            "jobs",
            "setup_inter",
            "setup_initial",
            "min_batch",
            "max_batch",
        ] {
            assert!(text.contains(&format!("\"{key}\"")), "missing {key}");
        }
        assert_eq!(Instance::from_json(&text).unwrap(), inst);
    }
}

//! Reproducible random instances.
//!
//! # Random streams
//!
//! [`Rng`] is ChaCha8 (the `rand_chacha` 0.3 implementation) keyed with the
//! 64-bit seed in little-endian order followed by 24 zero bytes. Integers in
//! a closed range come from `rand` 0.8 `gen_range` (widening multiply with
//! rejection) and unit floats from `gen::<f64>()` (top 53 bits of a `u64`
//! times 2^-53). Suites give each instance its own stream seeded with
//! `splitmix64(splitmix64(splitmix64(seed) ^ class) ^ index)`, `class`
//! being the position of the (class, scale) pair in the suite.
//!
//! # Draw order
//!
//! [`gen_instance`] draws, in this order: setup arc weights (source arcs
//! first, then family arcs row by row, redrawing everything on a restart),
//! then per job its processing time, weight and family, then family
//! rebalancing, then per job its release.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instance::{BatchSizeBounds, Instance, Job, SetupMatrix};
use crate::schedule::Schedule;
use crate::solver::{solve, ModelVariant, SolverConfig};
use crate::variation::VariationConfig;
use crate::Time;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(seed: u64, class: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ class) ^ index)
}

const MAX_RESTARTS: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("no asymmetric setup matrix after {MAX_RESTARTS} restarts{}", .seed.map(|s| format!(" (seed {s})")).unwrap_or_default())]
    RestartLimit { seed: Option<u64> },
    #[error("core solve found no schedule within {nodes} nodes")]
    CoreBudgetExceeded { nodes: u64 },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenSpec {
    pub num_jobs: usize,
    pub num_families: usize,
    pub num_machines: usize,
    pub setup_scale: u32,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.into()));
        if self.num_families == 0 || self.num_families > self.num_jobs {
            return bad("need 1 <= families <= jobs");
        }
        if self.num_machines == 0 {
            return bad("need at least one machine");
        }
        if self.setup_scale == 0 {
            return bad("setup scale must be positive");
        }
        Ok(())
    }
}

/// Shortest-path setup times on a random complete digraph.
///
/// Node 0 is a source whose distances give the initial setups; nodes
/// `1..=F` are the families. Distances are scaled by `scale`, rounded, and
/// then closed under shortest paths again until nothing changes.
pub fn gen_setup_matrix(num_families: usize, scale: u32, rng: &mut Rng) -> Result<SetupMatrix, GenError> {
    let f = num_families;
    for _ in 0..MAX_RESTARTS {
        let mut g: DiGraph<(), f64> = DiGraph::new();
        let nodes: Vec<NodeIndex> = (0..=f).map(|_| g.add_node(())).collect();
        for to in 1..=f {
            g.add_edge(nodes[0], nodes[to], rng.gen::<f64>());
        }
        for from in 1..=f {
            for to in 1..=f {
                if from != to {
                    g.add_edge(nodes[from], nodes[to], rng.gen::<f64>());
                }
            }
        }
        // d[0] is the source row
        let mut d = vec![vec![0 as Time; f + 1]; f + 1];
        for from in 0..=f {
            let dist = dijkstra(&g, nodes[from], None, |e| *e.weight());
            for to in 1..=f {
                if to != from {
                    d[from][to] = (dist[&nodes[to]] * scale as f64).round() as Time;
                }
            }
        }
        close_metric(&mut d);
        let setups = SetupMatrix {
            inter: d[1..].iter().map(|row| row[1..].to_vec()).collect(),
            initial: d[0][1..].to_vec(),
        };
        if f < 2 || !setups.is_symmetric() {
            return Ok(setups);
        }
    }
    Err(GenError::RestartLimit { seed: None })
}

/// Floyd-Warshall passes until a fixed point. Entries never grow.
fn close_metric(d: &mut [Vec<Time>]) {
    let n = d.len();
    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if i != j && d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// `ceil((Σp + (F-1)·max τ + max τ0) / M)`.
pub fn cmax_lower_bound(jobs: &[Job], num_machines: usize, setups: &SetupMatrix) -> Time {
    let p: Time = jobs.iter().map(|j| j.processing).sum();
    let f = setups.num_families() as Time;
    let total = p + (f - 1).max(0) * setups.max_inter() + setups.max_initial();
    let m = num_machines as Time;
    (total + m - 1) / m
}

/// An instance with `l_f = 1` and `u_f = |J_f|`. Job ids are `1..=n`.
pub fn gen_instance(spec: &GenSpec, rng: &mut Rng) -> Result<Instance, GenError> {
    spec.validate()?;
    let setups = gen_setup_matrix(spec.num_families, spec.setup_scale, rng)
        .map_err(|_| GenError::RestartLimit { seed: Some(spec.seed) })?;
    let mut jobs: Vec<Job> = (0..spec.num_jobs)
        .map(|k| Job {
            id: k as u32 + 1,
            processing: rng.gen_range(1..=10),
            weight: rng.gen_range(1..=10),
            release: 0,
            family: rng.gen_range(0..spec.num_families),
        })
        .collect();
    // move a random job from a family with spare jobs into each empty one
    for f in 0..spec.num_families {
        let mut sizes = vec![0usize; spec.num_families];
        for j in &jobs {
            sizes[j.family] += 1;
        }
        if sizes[f] == 0 {
            let donors: Vec<usize> = (0..jobs.len()).filter(|&k| sizes[jobs[k].family] > 1).collect();
            let k = donors[rng.gen_range(0..donors.len())];
            jobs[k].family = f;
        }
    }
    let cmax = cmax_lower_bound(&jobs, spec.num_machines, &setups).max(1);
    for j in &mut jobs {
        j.release = rng.gen_range(1..=cmax);
    }
    let mut sizes = vec![0usize; spec.num_families];
    for j in &jobs {
        sizes[j.family] += 1;
    }
    let bounds = BatchSizeBounds {
        min: vec![1; spec.num_families],
        max: sizes,
    };
    Ok(Instance::new(jobs, spec.num_machines, spec.num_families, setups, bounds))
}

/// Shortest run of consecutive same-family jobs per family over all
/// machines. `None` for a family that does not appear.
pub fn min_run_lengths(inst: &Instance, sched: &Schedule) -> Vec<Option<usize>> {
    let mut out: Vec<Option<usize>> = vec![None; inst.num_families];
    for machine in &sched.machines {
        let mut i = 0;
        while i < machine.len() {
            let f = machine[i].family;
            let mut len = 0;
            while i < machine.len() && machine[i].family == f {
                len += machine[i].jobs.len();
                i += 1;
            }
            out[f] = Some(out[f].map_or(len, |m| m.min(len)));
        }
    }
    out
}

/// `l_f` uniform on `[l̄_f + 1, |J_f|]`, or `|J_f|` when that range is empty;
/// `u_f = |J_f|`.
pub fn bounds_from_runs(inst: &Instance, runs: &[Option<usize>], rng: &mut Rng) -> BatchSizeBounds {
    let mut min = Vec::with_capacity(inst.num_families);
    let mut max = Vec::with_capacity(inst.num_families);
    for (f, run) in runs.iter().enumerate() {
        let size = inst.family_size(f);
        let lo = run.unwrap_or(size) + 1;
        min.push(if lo <= size { rng.gen_range(lo..=size) } else { size });
        max.push(size);
    }
    BatchSizeBounds { min, max }
}

/// Schedules `inst` without batch sizing on a single worker, stopping after
/// `node_budget` nodes, and draws bounds from the result's runs.
pub fn derive_min_batch_sizes(inst: &Instance, rng: &mut Rng, node_budget: u64) -> Result<BatchSizeBounds, GenError> {
    let core = core_schedule(inst, node_budget)?;
    Ok(bounds_from_runs(inst, &min_run_lengths(inst, &core), rng))
}

pub fn core_schedule(inst: &Instance, node_budget: u64) -> Result<Schedule, GenError> {
    let cfg = SolverConfig {
        model_variant: ModelVariant::IA,
        variation: VariationConfig::IPF,
        sizing_enabled: false,
        time_limit: Duration::from_secs(3600),
        node_limit: Some(node_budget),
        workers: 1,
        ..SolverConfig::default()
    };
    solve(inst, &cfg)
        .ok()
        .and_then(|r| r.schedule)
        .ok_or(GenError::CoreBudgetExceeded { nodes: node_budget })
}

/// Jobs, families and machines of one instance class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub num_jobs: usize,
    pub num_families: usize,
    pub num_machines: usize,
}

/// The 13 classes: 15 jobs with 2 families on 2 machines, then for 25, 50
/// and 100 jobs every pairing of two family counts with two machine counts.
pub fn standard_grid() -> Vec<ClassSpec> {
    let rows: [(usize, &[usize], &[usize]); 4] = [
        (15, &[2], &[2]),
        (25, &[2, 3], &[2, 3]),
        (50, &[3, 5], &[3, 4]),
        (100, &[5, 7], &[4, 5]),
    ];
    let mut out = Vec::new();
    for (n, fams, machs) in rows {
        for &f in fams {
            for &m in machs {
                out.push(ClassSpec {
                    num_jobs: n,
                    num_families: f,
                    num_machines: m,
                });
            }
        }
    }
    out
}

pub const STANDARD_SCALES: [u32; 3] = [20, 50, 100];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub grid: Vec<ClassSpec>,
    pub scales: Vec<u32>,
    pub per_class: usize,
    pub seed: u64,
    /// Node budget of the sizing-free solve used to draw `l_f`; `None`
    /// leaves `l_f = 1`.
    pub core_nodes: Option<u64>,
}

impl SuiteConfig {
    pub fn desk(seed: u64) -> Self {
        Self {
            grid: standard_grid(),
            scales: STANDARD_SCALES.to_vec(),
            per_class: 3,
            seed,
            core_nodes: Some(20_000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub class: ClassSpec,
    pub setup_scale: u32,
    pub index: usize,
    pub seed: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub per_class: usize,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub instances: Vec<(String, Instance)>,
    pub manifest: Manifest,
}

/// Generates every class at every scale, `per_class` instances each, in
/// parallel. The output order and contents depend only on the config.
pub fn gen_suite(cfg: &SuiteConfig) -> Result<Suite, GenError> {
    let mut jobs = Vec::new();
    for (c, class) in cfg.grid.iter().enumerate() {
        for (s, &scale) in cfg.scales.iter().enumerate() {
            let class_id = (c * cfg.scales.len() + s) as u64;
            for index in 0..cfg.per_class {
                jobs.push((*class, scale, index, stream_seed(cfg.seed, class_id, index as u64)));
            }
        }
    }
    let generated: Vec<Result<(String, Instance, ManifestEntry), GenError>> = jobs
        .par_iter()
        .map(|&(class, scale, index, seed)| {
            let spec = GenSpec {
                num_jobs: class.num_jobs,
                num_families: class.num_families,
                num_machines: class.num_machines,
                setup_scale: scale,
                seed,
            };
            let mut rng = rng_from_seed(seed);
            let mut inst = gen_instance(&spec, &mut rng)?;
            if let Some(nodes) = cfg.core_nodes {
                inst = inst.with_bounds(derive_min_batch_sizes(&inst, &mut rng, nodes)?);
            }
            let file = format!(
                "j{}_f{}_m{}_s{}_{:03}.json",
                class.num_jobs, class.num_families, class.num_machines, scale, index
            );
            let text = inst.to_json();
            let entry = ManifestEntry {
                file: file.clone(),
                class,
                setup_scale: scale,
                index,
                seed,
                sha256: hex::encode(Sha256::digest(text.as_bytes())),
            };
            Ok((file, inst, entry))
        })
        .collect();
    let mut instances = Vec::with_capacity(generated.len());
    let mut entries = Vec::with_capacity(generated.len());
    for g in generated {
        let (file, inst, entry) = g?;
        instances.push((file, inst));
        entries.push(entry);
    }
    Ok(Suite {
        instances,
        manifest: Manifest {
            seed: cfg.seed,
            per_class: cfg.per_class,
            entries,
        },
    })
}

/// Writes each instance and `manifest.json` into `dir`.
pub fn write_suite(suite: &Suite, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (file, inst) in &suite.instances {
        std::fs::write(dir.join(file), inst.to_json())?;
    }
    std::fs::write(dir.join("manifest.json"), suite.manifest.to_json())
}

/// Number of instances per class, keyed by `(jobs, families, machines)`.
pub fn class_counts(manifest: &Manifest) -> BTreeMap<(usize, usize, usize), usize> {
    let mut out = BTreeMap::new();
    for e in &manifest.entries {
        *out.entry((e.class.num_jobs, e.class.num_families, e.class.num_machines)).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1_schedule, table1};
    use crate::instance::validate_instance;

    #[test]
    fn single_family_matrix() {
        let mut rng = rng_from_seed(7);
        let s = gen_setup_matrix(1, 20, &mut rng).unwrap();
        assert_eq!(s.inter, vec![vec![0]]);
        let mut rng = rng_from_seed(7);
        let w: f64 = rng.gen();
        assert_eq!(s.initial, vec![(w * 20.0).round() as Time]);
    }

    #[test]
    fn matrices_are_metric_and_asymmetric() {
        let mut rng = rng_from_seed(1);
        for f in 2..6 {
            let s = gen_setup_matrix(f, 50, &mut rng).unwrap();
            assert!(!s.is_symmetric());
            for a in 0..f {
                assert_eq!(s.inter[a][a], 0);
                for b in 0..f {
                    assert!((0..=50).contains(&s.inter[a][b]));
                    for c in 0..f {
                        assert!(s.inter[a][c] <= s.inter[a][b] + s.inter[b][c]);
                    }
                }
            }
        }
    }

    #[test]
    fn makespan_bound_examples() {
        let inst = table1();
        assert_eq!(cmax_lower_bound(&inst.jobs, 1, &inst.setups), 14);
        let jobs: Vec<Job> = [3, 4]
            .iter()
            .enumerate()
            .map(|(k, &p)| Job {
                id: k as u32,
                weight: 1,
                release: 0,
                processing: p,
                family: 0,
            })
            .collect();
        let s = SetupMatrix {
            inter: vec![vec![0]],
            initial: vec![2],
        };
        assert_eq!(cmax_lower_bound(&jobs, 1, &s), 9);
        assert_eq!(cmax_lower_bound(&jobs, 2, &s), 5);
    }

    #[test]
    fn instances_are_reproducible_and_in_range() {
        let spec = GenSpec {
            num_jobs: 15,
            num_families: 2,
            num_machines: 2,
            setup_scale: 20,
            seed: 1,
        };
        let a = gen_instance(&spec, &mut rng_from_seed(1)).unwrap();
        let b = gen_instance(&spec, &mut rng_from_seed(1)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(validate_instance(&a).is_empty());
        let cmax = cmax_lower_bound(&a.jobs, 2, &a.setups);
        for j in &a.jobs {
            assert!((1..=10).contains(&j.processing));
            assert!((1..=10).contains(&j.weight));
            assert!((1..=cmax).contains(&j.release));
        }
    }

    #[test]
    fn every_family_gets_a_job() {
        for seed in 0..50 {
            let spec = GenSpec {
                num_jobs: 5,
                num_families: 5,
                num_machines: 1,
                setup_scale: 20,
                seed,
            };
            let inst = gen_instance(&spec, &mut rng_from_seed(seed)).unwrap();
            assert!((0..5).all(|f| inst.family_size(f) == 1));
        }
    }

    #[test]
    fn table1_runs_and_bounds() {
        let inst = table1();
        let runs = min_run_lengths(&inst, &figure1_schedule(&inst));
        assert_eq!(runs, vec![Some(1), Some(2)]);
        for seed in 0..20 {
            let b = bounds_from_runs(&inst, &runs, &mut rng_from_seed(seed));
            assert!((2..=3).contains(&b.min[0]));
            assert_eq!(b.min[1], 2);
            assert_eq!(b.max, vec![3, 2]);
        }
    }

    #[test]
    fn grid_has_thirteen_classes() {
        let g = standard_grid();
        assert_eq!(g.len(), 13);
        assert_eq!(g.len() * STANDARD_SCALES.len() * 30, 1170);
    }

    #[test]
    fn small_suite_is_deterministic() {
        let cfg = SuiteConfig {
            grid: standard_grid()[..3].to_vec(),
            scales: vec![20, 100],
            per_class: 2,
            seed: 9,
            core_nodes: Some(2_000),
        };
        let a = gen_suite(&cfg).unwrap();
        let b = gen_suite(&cfg).unwrap();
        assert_eq!(a.instances.len(), 3 * 2 * 2);
        assert_eq!(a.manifest.sha256(), b.manifest.sha256());
        for (_, inst) in &a.instances {
            assert!(validate_instance(inst).is_empty());
        }
    }
}

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbatch::{splittable, BatchSizeBounds, Instance, Job, Sequencing, SetupMatrix, VariationConfig};
use sbatch::{Availability, Initiation, Preemption};

/// The four variation combinations exercised by the equivalence checks.
pub fn four_variations() -> [VariationConfig; 4] {
    [
        VariationConfig::IPF,
        VariationConfig::BC,
        VariationConfig::new(Availability::Item, Preemption::Forbidden, Initiation::Flexible),
        VariationConfig::new(Availability::Batch, Preemption::Allowed, Initiation::Flexible),
    ]
}

/// Random valid instance with at most `max_jobs` jobs, 2 machines and
/// 2 families. Setups are closed under shortest paths so the triangle
/// inequality holds; batch bounds are random but always splittable.
pub fn tiny_instance(seed: u64, max_jobs: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_jobs);
    let machines = rng.gen_range(1..=2);
    let families = rng.gen_range(1..=n.min(2));
    let jobs: Vec<Job> = (0..n)
        .map(|i| Job {
            id: i as u32 + 1,
            weight: rng.gen_range(1..=5),
            release: rng.gen_range(0..=10),
            processing: rng.gen_range(1..=5),
            family: if i < families { i } else { rng.gen_range(0..families) },
        })
        .collect();

    let size = families + 1;
    let mut d = vec![vec![0i64; size]; size];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = rng.gen_range(0..=6);
            }
        }
    }
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    // index `families` is the source node
    let inter = (0..families).map(|f| d[f][..families].to_vec()).collect();
    let initial = (0..families).map(|f| d[families][f]).collect();

    let mut min = Vec::new();
    let mut max = Vec::new();
    for f in 0..families {
        let count = jobs.iter().filter(|j| j.family == f).count();
        loop {
            let lo = rng.gen_range(1..=count);
            let hi = rng.gen_range(lo..=count);
            if splittable(count, lo, hi) {
                min.push(lo);
                max.push(hi);
                break;
            }
        }
    }
    Instance::new(
        jobs,
        machines,
        families,
        SetupMatrix { inter, initial },
        BatchSizeBounds { min, max },
    )
}

/// Random assignment of jobs to machines in random order, cut into batches
/// at every family change and at random points in between.
pub fn random_sequencing(inst: &Instance, seed: u64) -> Sequencing {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u32> = inst.jobs.iter().map(|j| j.id).collect();
    ids.shuffle(&mut rng);
    let mut machines: Vec<Vec<u32>> = vec![Vec::new(); inst.num_machines];
    for id in ids {
        machines[rng.gen_range(0..inst.num_machines)].push(id);
    }
    let family = |id: u32| inst.jobs[inst.index_of(id).unwrap()].family;
    let nested: Vec<Vec<Vec<u32>>> = machines
        .into_iter()
        .map(|order| {
            let mut batches: Vec<Vec<u32>> = Vec::new();
            for id in order {
                match batches.last_mut() {
                    Some(b) if family(b[0]) == family(id) && rng.gen_bool(0.6) => b.push(id),
                    _ => batches.push(vec![id]),
                }
            }
            batches
        })
        .collect();
    Sequencing::from_ids(inst, &nested)
}

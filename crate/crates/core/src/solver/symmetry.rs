//! Symmetry-breaking checks over labeled batches.
//!
//! Batch labels number the batches of a family. SB1 requires labels to be
//! used without gaps, SB2 requires starts to be non-decreasing in the label,
//! SB3 requires same-family batches on one machine to appear in label order.
//! SBT fixes the job order inside a batch to non-decreasing `(release, id)`,
//! which loses nothing when completion is the batch end and the batch cannot
//! start before its last release.
//!
//! The search assigns label `k` to the `k`-th batch of a family it opens and
//! opens batches in start order, so its states satisfy SB1 to SB3 by
//! construction. SBT does cut the search under batch availability with
//! complete initiation.

use super::state::SearchState;
use super::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryCut {
    /// Family `family` uses label `label` but not `label - 1`.
    Sb1 { family: usize, label: usize },
    /// Label `label` of `family` starts before label `label - 1`.
    Sb2 { family: usize, label: usize },
    /// On `machine`, label `label` of `family` precedes a smaller label.
    Sb3 { machine: usize, family: usize, label: usize },
    /// Batch at `position` on `machine` holds a job out of `(release, id)` order.
    Sbt { machine: usize, position: usize },
}

/// Lists every symmetry-breaking rule the state violates. An empty list
/// means the branch is kept.
pub fn apply_symmetry_breaking(state: &SearchState, cfg: &SolverConfig) -> Vec<SymmetryCut> {
    let inst = state.context().inst;
    let mut cuts = Vec::new();

    if cfg.sb {
        // (start, machine) per label, per family
        let mut seen: Vec<Vec<Option<i64>>> = vec![Vec::new(); inst.num_families];
        for ms in &state.machines {
            for b in &ms.batches {
                let slots = &mut seen[b.family];
                if slots.len() <= b.label {
                    slots.resize(b.label + 1, None);
                }
                slots[b.label] = Some(b.start);
            }
        }
        for (family, slots) in seen.iter().enumerate() {
            for label in 1..slots.len() {
                match (slots[label - 1], slots[label]) {
                    (None, Some(_)) => cuts.push(SymmetryCut::Sb1 { family, label }),
                    (Some(a), Some(b)) if b < a => cuts.push(SymmetryCut::Sb2 { family, label }),
                    _ => {}
                }
            }
        }
        for (machine, ms) in state.machines.iter().enumerate() {
            let mut last_label: Vec<Option<usize>> = vec![None; inst.num_families];
            for b in &ms.batches {
                if let Some(prev) = last_label[b.family] {
                    if b.label < prev {
                        cuts.push(SymmetryCut::Sb3 {
                            machine,
                            family: b.family,
                            label: b.label,
                        });
                    }
                }
                last_label[b.family] = Some(b.label);
            }
        }
    }

    if cfg.sbt {
        for (machine, ms) in state.machines.iter().enumerate() {
            for (position, b) in ms.batches.iter().enumerate() {
                let ordered = b.jobs.windows(2).all(|w| {
                    let (x, y) = (&inst.jobs[w[0]], &inst.jobs[w[1]]);
                    (x.release, x.id) <= (y.release, y.id)
                });
                if !ordered {
                    cuts.push(SymmetryCut::Sbt { machine, position });
                }
            }
        }
    }
    cuts
}

/// Incremental SBT test for appending job `j` to a batch ending with `last`.
#[inline]
pub(crate) fn sbt_allows(state: &SearchState, last: usize, j: usize) -> bool {
    let jobs = &state.context().inst.jobs;
    (jobs[last].release, jobs[last].id) <= (jobs[j].release, jobs[j].id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;
    use crate::solver::state::SearchContext;
    use crate::variation::VariationConfig;

    fn cfg(sb: bool, sbt: bool) -> SolverConfig {
        SolverConfig {
            variation: VariationConfig::BC,
            sizing_enabled: false,
            sb,
            sbt,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn index_ordered_batches_pass() {
        let inst = table1();
        let c = cfg(true, true);
        let ctx = SearchContext::new(&inst, &c);
        let mut st = SearchState::new(&ctx);
        st.open_new(0, 0);
        st.close();
        st.open_new(0, 1);
        st.close();
        assert!(apply_symmetry_breaking(&st, &c).is_empty());
    }

    #[test]
    fn swapped_labels_on_one_machine_are_cut() {
        let inst = table1();
        let c = cfg(true, false);
        let ctx = SearchContext::new(&inst, &c);
        let mut st = SearchState::new(&ctx);
        st.open_new(0, 0);
        st.close();
        st.open_new(0, 1);
        st.close();
        st.machines[0].batches[0].label = 1;
        st.machines[0].batches[1].label = 0;
        let cuts = apply_symmetry_breaking(&st, &c);
        assert!(cuts.contains(&SymmetryCut::Sb3 {
            machine: 0,
            family: 0,
            label: 0
        }));
        assert!(cuts.contains(&SymmetryCut::Sb2 { family: 0, label: 1 }));
    }

    #[test]
    fn label_gap_is_cut() {
        let inst = table1();
        let c = cfg(true, false);
        let ctx = SearchContext::new(&inst, &c);
        let mut st = SearchState::new(&ctx);
        st.open_new(0, 0);
        st.machines[0].batches[0].label = 1;
        assert_eq!(
            apply_symmetry_breaking(&st, &c),
            vec![SymmetryCut::Sb1 { family: 0, label: 1 }]
        );
    }

    #[test]
    fn sbt_forces_release_order() {
        // job 2 (release 5) before job 1 (release 1) violates SBT
        let inst = table1();
        let c = cfg(false, true);
        let ctx = SearchContext::new(&inst, &c);
        let mut st = SearchState::new(&ctx);
        st.open_new(0, inst.index_of(2).unwrap());
        st.extend(inst.index_of(1).unwrap());
        assert_eq!(
            apply_symmetry_breaking(&st, &c),
            vec![SymmetryCut::Sbt { machine: 0, position: 0 }]
        );
        assert!(!sbt_allows(&st, inst.index_of(2).unwrap(), inst.index_of(1).unwrap()));
        assert!(sbt_allows(&st, inst.index_of(1).unwrap(), inst.index_of(2).unwrap()));
        // sb alone ignores intra-batch order
        assert!(apply_symmetry_breaking(&st, &cfg(true, false)).is_empty());
    }
}

//! Subject-stratified k-fold splitting. Subjects (never trials) are the unit
//! of assignment, so no subject's trials cross a fold boundary.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{AgeGroup, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    folds: Vec<Vec<String>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn fold(&self, i: usize) -> &[String] {
        &self.folds[i]
    }

    pub fn folds(&self) -> &[Vec<String>] {
        &self.folds
    }

    /// All subjects outside fold `i`, i.e. the training subjects for that fold.
    pub fn complement(&self, i: usize) -> Vec<String> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().cloned())
            .collect()
    }
}

/// Shuffle each class's subjects deterministically by `seed` and deal them
/// round-robin into `k` folds. Per-class subject counts per fold differ by at
/// most one.
pub fn stratified_subject_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be >= 2, got {k}")));
    }
    let mut by_class: Vec<Vec<String>> = vec![Vec::new(); AgeGroup::ALL.len()];
    for sid in dataset.subject_ids() {
        let label = dataset.subject_label(sid).expect("indexed subject");
        by_class[label.index()].push(sid.to_string());
    }
    for (ci, subjects) in by_class.iter().enumerate() {
        if !subjects.is_empty() && subjects.len() < k {
            return Err(Error::InsufficientSubjects {
                class: AgeGroup::from_index(ci).unwrap().name().to_string(),
                have: subjects.len(),
                need: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for subjects in &mut by_class {
        // subject_ids() iterates a BTreeMap, so the pre-shuffle order is
        // already canonical regardless of trial order.
        subjects.shuffle(&mut rng);
        for (i, sid) in subjects.drain(..).enumerate() {
            folds[i % k].push(sid);
        }
    }
    Ok(FoldSplit { folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::flat_trial;
    use std::collections::BTreeSet;

    fn cohort(per_class: &[usize]) -> Dataset {
        let mut trials = Vec::new();
        for (ci, &n) in per_class.iter().enumerate() {
            let age = [25, 50, 70][ci];
            for s in 0..n {
                trials.push(flat_trial(&format!("c{ci}s{s}"), age, s as f64, 4));
            }
        }
        Dataset::new(trials).unwrap()
    }

    fn class_counts(ds: &Dataset, fold: &[String]) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for sid in fold {
            counts[ds.subject_label(sid).unwrap().index()] += 1;
        }
        counts
    }

    #[test]
    fn exact_divisibility_gives_one_per_class() {
        let ds = cohort(&[10, 10, 10]);
        let split = stratified_subject_kfold(&ds, 10, 3).unwrap();
        for i in 0..10 {
            assert_eq!(class_counts(&ds, split.fold(i)), [1, 1, 1]);
        }
    }

    #[test]
    fn six_subjects_two_folds() {
        let ds = cohort(&[6, 6, 6]);
        let split = stratified_subject_kfold(&ds, 2, 0).unwrap();
        assert_eq!(split.fold(0).len(), 9);
        assert_eq!(split.fold(1).len(), 9);
    }

    #[test]
    fn uneven_cohort_counts_differ_by_at_most_one() {
        let ds = cohort(&[37, 33, 30]);
        let split = stratified_subject_kfold(&ds, 10, 42).unwrap();
        // brute-force count check per class across folds
        for class in 0..3 {
            let counts: Vec<usize> = (0..10)
                .map(|i| class_counts(&ds, split.fold(i))[class])
                .collect();
            let lo = *counts.iter().min().unwrap();
            let hi = *counts.iter().max().unwrap();
            assert!(hi - lo <= 1, "class {class}: {counts:?}");
            assert_eq!(counts.iter().sum::<usize>(), [37, 33, 30][class]);
        }
    }

    #[test]
    fn folds_partition_subjects() {
        let ds = cohort(&[7, 5, 9]);
        let split = stratified_subject_kfold(&ds, 4, 17).unwrap();
        let mut seen = BTreeSet::new();
        for f in split.folds() {
            for sid in f {
                assert!(seen.insert(sid.clone()), "subject {sid} in two folds");
            }
        }
        let all: BTreeSet<String> = ds.subject_ids().map(String::from).collect();
        assert_eq!(seen, all);
    }

    #[test]
    fn too_few_subjects_is_an_error() {
        let ds = cohort(&[3, 10, 10]);
        assert!(matches!(
            stratified_subject_kfold(&ds, 5, 0),
            Err(Error::InsufficientSubjects { .. })
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = cohort(&[8, 8, 8]);
        let a = stratified_subject_kfold(&ds, 4, 9).unwrap();
        let b = stratified_subject_kfold(&ds, 4, 9).unwrap();
        assert_eq!(a, b);
    }
}

//! Stratified k-fold planning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::DrbMlEntry;

/// One fold's membership and class composition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub entry_ids: Vec<u32>,
    pub positives: usize,
    pub negatives: usize,
}

impl Fold {
    pub fn len(&self) -> usize {
        self.entry_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entry_ids.is_empty()
    }
}

/// A reproducible stratified split of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Splits entries into `k` stratified folds.
///
/// Each class is shuffled with a seeded PRNG and dealt round-robin starting
/// at fold 0, so per-fold class counts never differ from perfect
/// stratification by more than one. Deterministic for a fixed
/// `(entries, k, seed)`.
pub fn make_folds(entries: &[DrbMlEntry], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidFoldCount);
    }
    let mut positives: Vec<u32> = entries.iter().filter(|e| e.has_race()).map(|e| e.id).collect();
    let mut negatives: Vec<u32> = entries.iter().filter(|e| !e.has_race()).map(|e| e.id).collect();
    positives.sort_unstable();
    negatives.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let mut folds: Vec<Fold> = (0..k)
        .map(|_| Fold {
            entry_ids: Vec::new(),
            positives: 0,
            negatives: 0,
        })
        .collect();
    for (i, id) in positives.iter().enumerate() {
        let fold = &mut folds[i % k];
        fold.entry_ids.push(*id);
        fold.positives += 1;
    }
    for (i, id) in negatives.iter().enumerate() {
        let fold = &mut folds[i % k];
        fold.entry_ids.push(*id);
        fold.negatives += 1;
    }
    for fold in &mut folds {
        fold.entry_ids.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_entry, Microbenchmark};

    pub(crate) fn synthetic_corpus(positives: usize, negatives: usize) -> Vec<DrbMlEntry> {
        let mut entries = Vec::new();
        for i in 0..positives + negatives {
            let id = (i + 1) as u32;
            let racy = i < positives;
            let source = if racy {
                format!(
                    "/*\nData race pair: v{id}@4:3:W vs. v{id}@4:8:R\n*/\n#pragma omp parallel for\nfor (;;) v{id} = v{id} + 1;\n"
                )
            } else {
                format!("int main() {{ return {id}; }}\n")
            };
            let name = format!("DRB{id:03}-gen{id}-{}.c", if racy { "yes" } else { "no" });
            let bench = Microbenchmark::from_source(name, source);
            entries.push(build_entry(&bench, id, None).unwrap().entry);
        }
        entries
    }

    #[test]
    fn paper_scale_split() {
        let entries = synthetic_corpus(100, 98);
        let plan = make_folds(&entries, 5, 7).unwrap();
        let mut sizes: Vec<usize> = plan.folds.iter().map(Fold::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![40, 40, 40, 39, 39]);
        let full: usize = plan
            .folds
            .iter()
            .filter(|f| f.positives == 20 && f.negatives == 20)
            .count();
        let short: usize = plan
            .folds
            .iter()
            .filter(|f| f.positives == 20 && f.negatives == 19)
            .count();
        assert_eq!((full, short), (3, 2));
    }

    #[test]
    fn perfect_stratification() {
        let entries = synthetic_corpus(5, 5);
        let plan = make_folds(&entries, 5, 1).unwrap();
        for fold in &plan.folds {
            assert_eq!(fold.positives, 1);
            assert_eq!(fold.negatives, 1);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let entries = synthetic_corpus(30, 28);
        let a = make_folds(&entries, 5, 42).unwrap();
        let b = make_folds(&entries, 5, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_same_profile_different_membership() {
        let entries = synthetic_corpus(30, 28);
        let a = make_folds(&entries, 5, 1).unwrap();
        let b = make_folds(&entries, 5, 2).unwrap();
        let profile = |p: &FoldPlan| {
            let mut v: Vec<(usize, usize)> = p.folds.iter().map(|f| (f.positives, f.negatives)).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(profile(&a), profile(&b));
        assert_ne!(a.folds, b.folds);
    }

    #[test]
    fn folds_partition_the_dataset() {
        let entries = synthetic_corpus(17, 23);
        let plan = make_folds(&entries, 4, 9).unwrap();
        let mut seen: Vec<u32> = plan.folds.iter().flat_map(|f| f.entry_ids.clone()).collect();
        seen.sort_unstable();
        let mut expected: Vec<u32> = entries.iter().map(|e| e.id).collect();
        expected.sort_unstable();
        assert_eq!(seen, expected);
    }

    #[test]
    fn stratification_bound_holds() {
        let entries = synthetic_corpus(13, 7);
        let plan = make_folds(&entries, 3, 5).unwrap();
        for class in [true, false] {
            let counts: Vec<usize> = plan
                .folds
                .iter()
                .map(|f| if class { f.positives } else { f.negatives })
                .collect();
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1);
        }
    }

    #[test]
    fn zero_folds_rejected() {
        let entries = synthetic_corpus(2, 2);
        assert!(matches!(
            make_folds(&entries, 0, 1),
            Err(EvalError::InvalidFoldCount)
        ));
    }
}

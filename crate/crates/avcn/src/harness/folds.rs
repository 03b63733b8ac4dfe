//! Stratified cross-validation splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One fold: indices to train on and indices held out for testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified partition of `labels.len()` items into `folds` test folds.
///
/// Each class is shuffled independently and dealt round-robin, continuing
/// from where the previous class stopped, so every fold receives each class's
/// count within one of every other fold. Test folds are disjoint and cover
/// all indices; the train side is the complement. Deterministic in `seed`.
pub fn split_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if folds < 1 {
        return Err(Error::InvalidParameter("need at least one fold".into()));
    }
    if folds > labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds but only {} graphs",
            labels.len()
        )));
    }
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        per_class[c].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_folds: Vec<Vec<usize>> = vec![Vec::new(); folds];
    let mut offset = 0usize;
    for class_indices in per_class.iter_mut() {
        class_indices.shuffle(&mut rng);
        for (i, &idx) in class_indices.iter().enumerate() {
            test_folds[(offset + i) % folds].push(idx);
        }
        offset = (offset + class_indices.len()) % folds;
    }

    let mut splits = Vec::with_capacity(folds);
    for mut test in test_folds {
        test.sort_unstable();
        let mut cursor = 0;
        let mut train = Vec::with_capacity(labels.len() - test.len());
        for i in 0..labels.len() {
            if cursor < test.len() && test[cursor] == i {
                cursor += 1;
            } else {
                train.push(i);
            }
        }
        splits.push(FoldSplit { train, test });
    }
    Ok(splits)
}

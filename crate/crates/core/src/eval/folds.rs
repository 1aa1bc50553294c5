use rand::seq::SliceRandom;

use super::EvalError;
use crate::rng;

/// Fold assignments: `assignments[repeat][sample]` is the sample's test fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    pub k: usize,
    pub assignments: Vec<Vec<usize>>,
}

impl Folds {
    pub fn repeats(&self) -> usize {
        self.assignments.len()
    }

    /// (train, test) sample indices of one cell.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments[repeat].len()).partition(|&i| self.assignments[repeat][i] != fold)
    }
}

/// Repeated stratified k-fold assignment.
///
/// Within a repeat, each class is shuffled and dealt round-robin over the
/// folds (the second class continuing where the first stopped), so every
/// fold holds `floor` or `ceil` of its proportional share of each class.
pub fn stratified_kfold(labels: &[bool], k: usize, repeats: usize, seed: u64) -> Result<Folds, EvalError> {
    if k < 2 {
        return Err(EvalError::Input(format!("need at least 2 folds, got {k}")));
    }
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let minority = positives.len().min(negatives.len());
    if k > minority {
        return Err(EvalError::TooManyFolds { k, minority });
    }
    let assignments = (0..repeats)
        .map(|repeat| {
            let mut stream = rng::stream(seed, &[rng::TAG_FOLDS, repeat as u64]);
            let mut pos = positives.clone();
            let mut neg = negatives.clone();
            pos.shuffle(&mut stream);
            neg.shuffle(&mut stream);
            let mut fold_ids: Vec<usize> = (0..k).collect();
            fold_ids.shuffle(&mut stream);
            let mut assignment = vec![0; labels.len()];
            for (slot, &sample) in pos.iter().chain(&neg).enumerate() {
                assignment[sample] = fold_ids[slot % k];
            }
            assignment
        })
        .collect();
    Ok(Folds { k, assignments })
}

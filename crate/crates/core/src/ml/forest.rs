use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Grower, TreeModel, TreeParams};
use super::{Dataset, MlError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    /// Draw each tree's sample with replacement; off, every tree sees the
    /// full training set.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 500, mtry: None, bootstrap: true }
    }
}

/// Fully grown trees (minsplit 2, no pruning).
pub const FOREST_TREE_PARAMS: TreeParams = TreeParams { minsplit: 2, cp: 0.0, maxdepth: 30 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed of each tree's random stream.
    pub seeds: Vec<u64>,
    pub mtry: usize,
}

/// Random forest. Tree `t` draws its bootstrap sample and per-node feature
/// subsets from a stream derived from `(seed, t)`, so the result does not
/// depend on how trees are scheduled across threads.
pub fn fit_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel, MlError> {
    data.check_trainable()?;
    let p = data.columns.len();
    if p == 0 {
        return Err(MlError::InvalidData("no feature columns".into()));
    }
    if params.trees == 0 {
        return Err(MlError::InvalidData("a forest needs at least one tree".into()));
    }
    let mtry = params.mtry.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1));
    if !(1..=p).contains(&mtry) {
        return Err(MlError::InvalidData(format!("mtry {mtry} outside 1..={p}")));
    }
    let n = data.len();
    let grower = Grower {
        rows: &data.rows,
        labels: &data.labels,
        minsplit: FOREST_TREE_PARAMS.minsplit,
        maxdepth: FOREST_TREE_PARAMS.maxdepth,
    };
    let seeds: Vec<u64> = (0..params.trees as u64).map(|t| rng::derive_seed(seed, &[rng::TAG_FOREST, t])).collect();
    let trees = seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut stream = rng::stream(tree_seed, &[]);
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| stream.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut candidates = || -> Vec<usize> {
                if mtry == p {
                    (0..p).collect()
                } else {
                    sample(&mut stream, p, mtry).into_vec()
                }
            };
            TreeModel { root: grower.grow(&indices, 0, &mut candidates), params: FOREST_TREE_PARAMS }
        })
        .collect();
    Ok(ForestModel { trees, seeds, mtry })
}

impl ForestModel {
    /// Mean of the trees' leaf probabilities.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean decrease in Gini per feature, averaged over trees.
    pub fn gini_importance(&self, p: usize) -> Vec<f64> {
        let mut total = vec![0.0; p];
        for tree in &self.trees {
            tree.accumulate_importance(&mut total);
        }
        total.iter().map(|v| v / self.trees.len() as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::tree::{fit_tree, Node};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.gen_range(0.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|x| x[0] + 0.5 * x[1] + r.gen_range(-0.3..0.3) > 0.75).collect();
        let ids = (0..n).map(|i| i.to_string()).collect();
        Dataset::new((0..4).map(|j| format!("x{j}")).collect(), rows, labels, ids).unwrap()
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let data = noisy(150, 1);
        let forest =
            fit_forest(&data, &ForestParams { trees: 1, mtry: Some(4), bootstrap: false }, 9).unwrap();
        let tree = fit_tree(&data, &TreeParams { minsplit: 2, cp: 0.0, maxdepth: 30 }).unwrap();
        assert_eq!(forest.trees[0].root, tree.root);
        for row in &data.rows {
            assert_eq!(forest.predict_row(row), tree.predict_row(row));
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let data = noisy(120, 2);
        let params = ForestParams { trees: 25, ..ForestParams::default() };
        let a = fit_forest(&data, &params, 42).unwrap();
        let b = fit_forest(&data, &params, 42).unwrap();
        let c = fit_forest(&data, &params, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.mtry, 2);
    }

    #[test]
    fn mean_of_leaf_probabilities() {
        let leaf = |counts| TreeModel { root: Node::Leaf { counts }, params: FOREST_TREE_PARAMS };
        let forest = ForestModel { trees: vec![leaf([4, 6]), leaf([0, 5])], seeds: vec![0, 1], mtry: 1 };
        assert!((forest.predict_row(&[0.0]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_mtry() {
        let data = noisy(30, 3);
        for mtry in [0, 5] {
            let params = ForestParams { trees: 2, mtry: Some(mtry), bootstrap: true };
            assert!(fit_forest(&data, &params, 0).is_err());
        }
    }

    #[test]
    fn importance_favours_informative_features() {
        let data = noisy(300, 4);
        let forest = fit_forest(&data, &ForestParams { trees: 50, ..ForestParams::default() }, 5).unwrap();
        let imp = forest.gini_importance(4);
        assert!(imp[0] > imp[2] && imp[0] > imp[3], "{imp:?}");
    }
}

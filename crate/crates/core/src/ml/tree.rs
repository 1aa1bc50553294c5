use serde::{Deserialize, Serialize};

use super::{Dataset, MlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with fewer samples are not split.
    pub minsplit: usize,
    /// Complexity parameter: splits whose relative misclassification
    /// improvement is below this are pruned away.
    pub cp: f64,
    pub maxdepth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { minsplit: 20, cp: 0.01, maxdepth: 30 }
    }
}

/// Class counts are `[volunteer, hired]`. Samples with `x[feature] <=
/// threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        counts: [usize; 2],
        /// Weighted Gini decrease achieved by this split.
        decrease: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => *counts,
        }
    }

    pub fn samples(&self) -> usize {
        let [a, b] = self.counts();
        a + b
    }

    /// Probability of the hired class.
    pub fn probability(&self) -> f64 {
        let [neg, pos] = self.counts();
        if neg + pos == 0 {
            0.5
        } else {
            pos as f64 / (neg + pos) as f64
        }
    }

    fn risk(&self) -> usize {
        let [a, b] = self.counts();
        a.min(b)
    }

    fn leaf(&self) -> Node {
        Node::Leaf { counts: self.counts() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: Node,
    pub params: TreeParams,
}

/// Gini impurity of `[negatives, positives]`.
pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

/// `n * gini`, the quantity summed over children.
fn weighted_impurity(counts: [usize; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (counts[0] as f64, counts[1] as f64);
    n as f64 - (a * a + b * b) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Sum of `n * gini` over the two children.
    pub score: f64,
}

fn count(labels: &[bool], indices: &[usize]) -> [usize; 2] {
    let pos = indices.iter().filter(|&&i| labels[i]).count();
    [indices.len() - pos, pos]
}

/// Best Gini split of the samples `indices` (duplicates allowed) over
/// `features`. Thresholds are midpoints between consecutive distinct values;
/// ties go to the lowest feature index, then the lowest threshold.
pub fn best_split(rows: &[Vec<f64>], labels: &[bool], indices: &[usize], features: &[usize]) -> Option<Split> {
    let total = count(labels, indices);
    let mut features = features.to_vec();
    features.sort_unstable();
    let mut best: Option<Split> = None;
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(indices.len());
    for &feature in &features {
        column.clear();
        column.extend(indices.iter().map(|&i| (rows[i][feature], labels[i])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for k in 0..column.len().saturating_sub(1) {
            left[usize::from(column[k].1)] += 1;
            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo == hi {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = weighted_impurity(left) + weighted_impurity(right);
            if best.is_none_or(|b| score < b.score) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split { feature, threshold, score });
            }
        }
    }
    best
}

pub(super) struct Grower<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [bool],
    pub minsplit: usize,
    pub maxdepth: usize,
}

impl Grower<'_> {
    /// Grows a subtree; `candidates` yields the features to try at each node.
    pub fn grow(&self, indices: &[usize], depth: usize, candidates: &mut dyn FnMut() -> Vec<usize>) -> Node {
        let counts = count(self.labels, indices);
        let leaf = Node::Leaf { counts };
        if indices.len() < self.minsplit.max(2) || counts[0] == 0 || counts[1] == 0 || depth >= self.maxdepth {
            return leaf;
        }
        let parent = weighted_impurity(counts);
        let Some(split) = best_split(self.rows, self.labels, indices, &candidates()) else {
            return leaf;
        };
        if split.score >= parent - 1e-12 * parent.max(1.0) {
            return leaf;
        }
        let (left, right): (Vec<usize>, Vec<usize>) =
            indices.iter().partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            counts,
            decrease: parent - split.score,
            left: Box::new(self.grow(&left, depth + 1, candidates)),
            right: Box::new(self.grow(&right, depth + 1, candidates)),
        }
    }
}

/// (risk of the subtree's leaves, number of leaves)
fn subtree_risk(node: &Node) -> (usize, usize) {
    match node {
        Node::Leaf { .. } => (node.risk(), 1),
        Node::Split { left, right, .. } => {
            let (rl, ll) = subtree_risk(left);
            let (rr, lr) = subtree_risk(right);
            (rl + rr, ll + lr)
        }
    }
}

/// The internal node with the smallest cost-complexity per extra leaf, as
/// (complexity, path of left/right turns). Preorder first on ties.
fn weakest_link(node: &Node, root_risk: f64, path: &mut Vec<bool>) -> Option<(f64, Vec<bool>)> {
    let Node::Split { left, right, .. } = node else {
        return None;
    };
    let (risk, leaves) = subtree_risk(node);
    let own = (node.risk() as f64 - risk as f64) / ((leaves - 1) as f64 * root_risk);
    let mut best = Some((own, path.clone()));
    for (turn, child) in [(false, left), (true, right)] {
        path.push(turn);
        if let Some(candidate) = weakest_link(child, root_risk, path) {
            if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
                best = Some(candidate);
            }
        }
        path.pop();
    }
    best
}

fn collapse(node: &mut Node, path: &[bool]) {
    match (path.split_first(), node) {
        (None, n) => *n = n.leaf(),
        (Some((&turn, rest)), Node::Split { left, right, .. }) => collapse(if turn { right } else { left }, rest),
        (Some(_), Node::Leaf { .. }) => unreachable!("path leads through a leaf"),
    }
}

/// Weakest-link pruning: repeatedly collapse the split whose misclassification
/// improvement per added leaf, relative to the root's, is below `cp`.
fn prune(mut root: Node, cp: f64) -> Node {
    let root_risk = root.risk() as f64;
    if root_risk == 0.0 {
        return root.leaf();
    }
    while let Some((complexity, path)) = weakest_link(&root, root_risk, &mut Vec::new()) {
        if complexity >= cp {
            break;
        }
        collapse(&mut root, &path);
    }
    root
}

/// CART with Gini splits and complexity pruning.
pub fn fit_tree(data: &Dataset, params: &TreeParams) -> Result<TreeModel, MlError> {
    data.check_trainable()?;
    if params.cp < 0.0 || params.cp.is_nan() {
        return Err(MlError::InvalidData("cp must be >= 0".into()));
    }
    let all_features: Vec<usize> = (0..data.columns.len()).collect();
    let grower = Grower { rows: &data.rows, labels: &data.labels, minsplit: params.minsplit, maxdepth: params.maxdepth };
    let indices: Vec<usize> = (0..data.len()).collect();
    let grown = grower.grow(&indices, 0, &mut || all_features.clone());
    let root = if params.cp > 0.0 { prune(grown, params.cp) } else { grown };
    Ok(TreeModel { root, params: params.clone() })
}

impl TreeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { .. } => return node.probability(),
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn root_feature(&self) -> Option<usize> {
        match self.root {
            Node::Split { feature, .. } => Some(feature),
            Node::Leaf { .. } => None,
        }
    }

    /// Adds each split's Gini decrease to its feature's slot.
    pub(super) fn accumulate_importance(&self, into: &mut [f64]) {
        fn walk(node: &Node, into: &mut [f64]) {
            if let Node::Split { feature, decrease, left, right, .. } = node {
                into[*feature] += decrease;
                walk(left, into);
                walk(right, into);
            }
        }
        walk(&self.root, into);
    }

    pub fn leaves(&self) -> usize {
        subtree_risk(&self.root).1
    }

    /// One line per node, numbered like rpart (children of `k` are `2k` and
    /// `2k+1`): split condition, samples, share of all samples, and the
    /// volunteer ratio; leaves end with `*`.
    pub fn render(&self, columns: &[String]) -> String {
        let total = self.root.samples().max(1) as f64;
        let mut out = String::new();
        let mut stack: Vec<(&Node, usize, usize, String)> = vec![(&self.root, 1, 0, "root".to_string())];
        while let Some((node, id, depth, label)) = stack.pop() {
            let [vol, _] = node.counts();
            let n = node.samples();
            let ratio = if n == 0 { 0.0 } else { vol as f64 / n as f64 };
            out.push_str(&format!(
                "{:indent$}{id}) {label} {n} ({:.1}%) volunteer={ratio:.3}{}\n",
                "",
                100.0 * n as f64 / total,
                if matches!(node, Node::Leaf { .. }) { " *" } else { "" },
                indent = 2 * depth,
            ));
            if let Node::Split { feature, threshold, left, right, .. } = node {
                let name = columns.get(*feature).map_or("?", String::as_str);
                stack.push((right, 2 * id + 1, depth + 1, format!("{name} > {threshold:.4}")));
                stack.push((left, 2 * id, depth + 1, format!("{name} <= {threshold:.4}")));
            }
        }
        out
    }
}

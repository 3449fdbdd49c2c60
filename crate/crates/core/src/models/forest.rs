//! Random forest with balanced-subsample class weighting.
//!
//! Each tree sees a bootstrap sample of the rows and weights the two
//! classes inversely to their frequency in that bootstrap. Splits minimize
//! weighted Gini impurity over sqrt(d) randomly drawn candidate features,
//! thresholds at midpoints between adjacent distinct values, and trees grow
//! until nodes are pure or unsplittable. The forest probability is the mean
//! of the per-tree weighted leaf distributions.

use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct RfConfig {
    pub n_trees: usize,
    pub seed: u64,
    /// Balanced-subsample class weights; false fits every row with weight 1.
    pub balanced: bool,
    /// Candidate features per split; default floor(sqrt(d)), at least 1.
    pub mtry: Option<usize>,
    pub n_threads: usize,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 2000,
            seed: 0,
            balanced: true,
            mtry: None,
            n_threads: 1,
        }
    }
}

/// A binary tree stored as a flat node array; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Split feature, or -1 for a leaf.
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Weighted probability of class 1 (leaves only).
    pub p1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.feature < 0 {
                return node.p1;
            }
            i = if row[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub seed: u64,
    pub balanced: bool,
    pub n_features: usize,
}

impl ForestModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        assert_eq!(row.len(), self.n_features, "feature width mismatch");
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_proba_table(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }
}

/// Fits the forest. Per-tree RNG streams are derived from the master seed,
/// so results are independent of the thread count.
pub fn rf_fit(rows: &[Vec<f64>], labels: &[u8], cfg: &RfConfig) -> Result<ForestModel> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::Validation(format!(
            "need matching non-empty rows/labels, got {} rows, {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass(
            "random forest needs at least one row of each class".into(),
        ));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be positive".into()));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Validation("ragged or empty feature rows".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Validation("non-finite feature value".into()));
    }
    let mtry = cfg.mtry.unwrap_or(((d as f64).sqrt().floor() as usize).max(1)).min(d);

    // column-major copy for cache-friendly split scans
    let mut cols = vec![vec![0.0f64; rows.len()]; d];
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            cols[j][i] = x;
        }
    }

    let fit_tree = |t: usize| -> Tree {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(t as u64 + 1);
        grow_tree(&cols, labels, mtry, cfg.balanced, &mut rng)
    };

    let trees: Vec<Tree> = if cfg.n_threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.n_threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.n_trees).into_par_iter().map(fit_tree).collect())
    } else {
        (0..cfg.n_trees).map(fit_tree).collect()
    };

    Ok(ForestModel {
        trees,
        seed: cfg.seed,
        balanced: cfg.balanced,
        n_features: d,
    })
}

fn grow_tree(
    cols: &[Vec<f64>],
    labels: &[u8],
    mtry: usize,
    balanced: bool,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n = labels.len();
    let boot: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();

    // balanced subsample: w_c = n_boot / (2 * n_c_boot) on this bootstrap
    let n1: usize = boot.iter().filter(|&&i| labels[i as usize] == 1).count();
    let n0 = n - n1;
    let w = if balanced {
        [
            if n0 > 0 { n as f64 / (2.0 * n0 as f64) } else { 0.0 },
            if n1 > 0 { n as f64 / (2.0 * n1 as f64) } else { 0.0 },
        ]
    } else {
        [1.0, 1.0]
    };

    let mut nodes = vec![placeholder()];
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, boot)];
    let mut scratch: Vec<(f64, u8)> = Vec::new();

    while let Some((node_id, rows)) = stack.pop() {
        let mut cnt = [0usize; 2];
        for &i in &rows {
            cnt[labels[i as usize] as usize] += 1;
        }
        let wt = [w[0] * cnt[0] as f64, w[1] * cnt[1] as f64];
        if cnt[0] == 0 || cnt[1] == 0 {
            nodes[node_id] = leaf(wt);
            continue;
        }

        let candidates = rand::seq::index::sample(rng, cols.len(), mtry);
        let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
        for j in candidates.iter() {
            scratch.clear();
            scratch.extend(rows.iter().map(|&i| (cols[j][i as usize], labels[i as usize])));
            scratch.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left = [0.0f64; 2];
            for k in 0..scratch.len() - 1 {
                left[scratch[k].1 as usize] += w[scratch[k].1 as usize];
                if scratch[k].0 < scratch[k + 1].0 {
                    let right = [wt[0] - left[0], wt[1] - left[1]];
                    let score = gini_sum(left) + gini_sum(right);
                    if best.map_or(true, |(s, _, _)| score < s) {
                        best = Some((score, j, 0.5 * (scratch[k].0 + scratch[k + 1].0)));
                    }
                }
            }
        }

        match best {
            None => nodes[node_id] = leaf(wt),
            Some((_, feature, threshold)) => {
                let (mut lrows, mut rrows) = (Vec::new(), Vec::new());
                for &i in &rows {
                    if cols[feature][i as usize] <= threshold {
                        lrows.push(i);
                    } else {
                        rrows.push(i);
                    }
                }
                let left_id = nodes.len();
                nodes.push(placeholder());
                let right_id = nodes.len();
                nodes.push(placeholder());
                nodes[node_id] = TreeNode {
                    feature: feature as i32,
                    threshold,
                    left: left_id as u32,
                    right: right_id as u32,
                    p1: 0.0,
                };
                stack.push((right_id, rrows));
                stack.push((left_id, lrows));
            }
        }
    }
    Tree { nodes }
}

#[inline]
fn placeholder() -> TreeNode {
    TreeNode { feature: -1, threshold: 0.0, left: 0, right: 0, p1: 0.0 }
}

#[inline]
fn leaf(wt: [f64; 2]) -> TreeNode {
    let total = wt[0] + wt[1];
    TreeNode {
        feature: -1,
        threshold: 0.0,
        left: 0,
        right: 0,
        p1: if total > 0.0 { wt[1] / total } else { 0.0 },
    }
}

/// Weighted Gini impurity scaled by the side's weight: W * (1 - p0^2 - p1^2).
#[inline]
fn gini_sum(wt: [f64; 2]) -> f64 {
    let total = wt[0] + wt[1];
    if total <= 0.0 {
        0.0
    } else {
        total * (1.0 - (wt[0] / total).powi(2) - (wt[1] / total).powi(2))
    }
}

//! The comparison classifiers: CART decision tree (Gini, unlimited depth),
//! AdaBoost over depth-1 stumps, kNN, random forest, and Gaussian naive
//! Bayes. All operate on scaled features and break prediction ties toward
//! farm, matching the SVM conventions.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    DecisionTree,
    AdaBoost,
    Knn,
    RandomForest,
    NaiveBayes,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::DecisionTree,
        BaselineKind::AdaBoost,
        BaselineKind::Knn,
        BaselineKind::RandomForest,
        BaselineKind::NaiveBayes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::DecisionTree => "tree",
            BaselineKind::AdaBoost => "adaboost",
            BaselineKind::Knn => "knn",
            BaselineKind::RandomForest => "forest",
            BaselineKind::NaiveBayes => "nb",
        }
    }
}

/// Tunable knobs with the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub adaboost_rounds: usize,
    pub knn_k: usize,
    pub forest_trees: usize,
    pub nb_variance_floor: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            adaboost_rounds: 50,
            knn_k: 5,
            forest_trees: 100,
            nb_variance_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// `true` = farm.
    Leaf(bool),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> bool {
        match self {
            TreeNode::Leaf(farm) => *farm,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Predicted class for `x[feature] <= threshold` (negated on the other side).
    pub left_is_farm: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineModel {
    DecisionTree(TreeNode),
    AdaBoost(Vec<Stump>),
    Knn {
        k: usize,
        points: Vec<Vec<f64>>,
        farm: Vec<bool>,
    },
    RandomForest(Vec<TreeNode>),
    NaiveBayes {
        prior_farm: f64,
        mean_farm: Vec<f64>,
        var_farm: Vec<f64>,
        mean_base: Vec<f64>,
        var_base: Vec<f64>,
    },
}

pub fn train_baseline(
    kind: BaselineKind,
    x: &[Vec<f64>],
    farm: &[bool],
    params: &BaselineParams,
    seed: u64,
) -> Result<BaselineModel> {
    if x.is_empty() || x.len() != farm.len() {
        return Err(Error::InvalidInput("bad training arrays".into()));
    }
    if farm.iter().all(|&f| f) || farm.iter().all(|&f| !f) {
        return Err(Error::InvalidInput(
            "training set must contain both classes".into(),
        ));
    }
    Ok(match kind {
        BaselineKind::DecisionTree => {
            let idx: Vec<usize> = (0..x.len()).collect();
            BaselineModel::DecisionTree(grow_tree(x, farm, &idx, None, &mut no_rng()))
        }
        BaselineKind::AdaBoost => BaselineModel::AdaBoost(train_adaboost(x, farm, params.adaboost_rounds)),
        BaselineKind::Knn => BaselineModel::Knn {
            k: params.knn_k,
            points: x.to_vec(),
            farm: farm.to_vec(),
        },
        BaselineKind::RandomForest => {
            let d = x[0].len();
            let mtry = (d as f64).sqrt().round().max(1.0) as usize;
            let mut trees = Vec::with_capacity(params.forest_trees);
            for t in 0..params.forest_trees {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, t as u64));
                let idx: Vec<usize> = (0..x.len())
                    .map(|_| rng.gen_range(0..x.len()))
                    .collect();
                trees.push(grow_tree(x, farm, &idx, Some(mtry), &mut Some(rng)));
            }
            BaselineModel::RandomForest(trees)
        }
        BaselineKind::NaiveBayes => train_nb(x, farm, params.nb_variance_floor),
    })
}

pub fn predict_baseline(model: &BaselineModel, x: &[f64]) -> bool {
    match model {
        BaselineModel::DecisionTree(tree) => tree.predict(x),
        BaselineModel::AdaBoost(stumps) => {
            let score: f64 = stumps
                .iter()
                .map(|s| {
                    let left = x[s.feature] <= s.threshold;
                    let farm = if left { s.left_is_farm } else { !s.left_is_farm };
                    if farm { s.weight } else { -s.weight }
                })
                .sum();
            score >= 0.0
        }
        BaselineModel::Knn { k, points, farm } => {
            let mut dist: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .map(|(i, p)| (dist2(p, x), i))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let votes = dist
                .iter()
                .take(*k)
                .filter(|&&(_, i)| farm[i])
                .count();
            2 * votes >= *k
        }
        BaselineModel::RandomForest(trees) => {
            let votes = trees.iter().filter(|t| t.predict(x)).count();
            2 * votes >= trees.len()
        }
        BaselineModel::NaiveBayes {
            prior_farm,
            mean_farm,
            var_farm,
            mean_base,
            var_base,
        } => {
            let log_farm = prior_farm.ln() + log_gaussian(x, mean_farm, var_farm);
            let log_base = (1.0 - prior_farm).ln() + log_gaussian(x, mean_base, var_base);
            log_farm >= log_base
        }
    }
}

fn mix(seed: u64, stream: u64) -> u64 {
    // splitmix64 round over seed ^ golden-ratio stepped stream
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn no_rng() -> Option<ChaCha8Rng> {
    None
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn log_gaussian(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((xi, m), v)| {
            let d = xi - m;
            -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v)
        })
        .sum()
}

fn train_nb(x: &[Vec<f64>], farm: &[bool], floor: f64) -> BaselineModel {
    let d = x[0].len();
    let stats = |want: bool| -> (Vec<f64>, Vec<f64>, usize) {
        let rows: Vec<&Vec<f64>> = x
            .iter()
            .zip(farm)
            .filter(|(_, &f)| f == want)
            .map(|(r, _)| r)
            .collect();
        let n = rows.len();
        let mut mean = vec![0.0; d];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in &rows {
            for ((vv, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *vv += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|v| *v = (*v / n as f64).max(floor));
        (mean, var, n)
    };
    let (mean_farm, var_farm, n_farm) = stats(true);
    let (mean_base, var_base, _) = stats(false);
    BaselineModel::NaiveBayes {
        prior_farm: n_farm as f64 / x.len() as f64,
        mean_farm,
        var_farm,
        mean_base,
        var_base,
    }
}

/// Weighted Gini impurity of a boolean split.
fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn find_split(
    x: &[Vec<f64>],
    farm: &[bool],
    idx: &[usize],
    features: &[usize],
) -> Option<BestSplit> {
    let total_w = idx.len() as f64;
    let total_pos = idx.iter().filter(|&&i| farm[i]).count() as f64;
    let parent = gini(total_pos, total_w);
    if parent == 0.0 {
        return None;
    }

    let mut best: Option<BestSplit> = None;
    for &f in features {
        let mut vals: Vec<(f64, f64, f64)> = idx
            .iter()
            .map(|&i| (x[i][f], 1.0, if farm[i] { 1.0 } else { 0.0 }))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_w = 0.0;
        let mut left_pos = 0.0;
        for t in 0..vals.len().saturating_sub(1) {
            left_w += vals[t].1;
            left_pos += vals[t].2;
            if vals[t].0 == vals[t + 1].0 {
                continue;
            }
            let right_w = total_w - left_w;
            let right_pos = total_pos - left_pos;
            let impurity = (left_w * gini(left_pos, left_w)
                + right_w * gini(right_pos, right_w))
                / total_w;
            let threshold = 0.5 * (vals[t].0 + vals[t + 1].0);
            // Zero-gain splits are allowed (both children strictly shrink),
            // so structure like xor still resolves.
            let better = match &best {
                None => true,
                Some(b) => {
                    impurity < b.impurity - 1e-15
                        || (impurity < b.impurity + 1e-15
                            && (f, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn majority(farm: &[bool], idx: &[usize]) -> bool {
    let pos = idx.iter().filter(|&&i| farm[i]).count();
    2 * pos >= idx.len()
}

fn grow_tree(
    x: &[Vec<f64>],
    farm: &[bool],
    idx: &[usize],
    mtry: Option<usize>,
    rng: &mut Option<ChaCha8Rng>,
) -> TreeNode {
    if idx.is_empty() {
        return TreeNode::Leaf(true);
    }
    let first = farm[idx[0]];
    if idx.iter().all(|&i| farm[i] == first) {
        return TreeNode::Leaf(first);
    }
    let d = x[0].len();
    let features: Vec<usize> = match (mtry, rng.as_mut()) {
        (Some(m), Some(rng)) => {
            // Sample m distinct features.
            let mut pool: Vec<usize> = (0..d).collect();
            for i in 0..m.min(d) {
                let j = rng.gen_range(i..d);
                pool.swap(i, j);
            }
            let mut chosen: Vec<usize> = pool[..m.min(d)].to_vec();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    };
    match find_split(x, farm, idx, &features) {
        None => TreeNode::Leaf(majority(farm, idx)),
        Some(split) => {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &i in idx {
                if x[i][split.feature] <= split.threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.is_empty() || right.is_empty() {
                return TreeNode::Leaf(majority(farm, idx));
            }
            TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow_tree(x, farm, &left, mtry, rng)),
                right: Box::new(grow_tree(x, farm, &right, mtry, rng)),
            }
        }
    }
}

fn best_stump(x: &[Vec<f64>], farm: &[bool], weights: &[f64]) -> (usize, f64, bool, f64) {
    let d = x[0].len();
    let total: f64 = weights.iter().sum();
    let mut best = (0usize, f64::NEG_INFINITY, true, f64::INFINITY);
    for f in 0..d {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        // err(left_is_farm = true) with everything on the right initially:
        // left empty, right predicted !farm -> error = weight of farm points.
        let mut err_true: f64 = x
            .iter()
            .zip(farm)
            .zip(weights)
            .filter(|((_, &f), _)| f)
            .map(|(_, w)| w)
            .sum();
        for t in 0..order.len().saturating_sub(1) {
            let i = order[t];
            // Moving point i to the left side.
            if farm[i] {
                err_true -= weights[i];
            } else {
                err_true += weights[i];
            }
            if x[order[t]][f] == x[order[t + 1]][f] {
                continue;
            }
            let threshold = 0.5 * (x[order[t]][f] + x[order[t + 1]][f]);
            for (polarity, err) in [(true, err_true), (false, total - err_true)] {
                if err < best.3 - 1e-15
                    || (err < best.3 + 1e-15 && (f, threshold) < (best.0, best.1))
                {
                    best = (f, threshold, polarity, err);
                }
            }
        }
    }
    best
}

fn train_adaboost(x: &[Vec<f64>], farm: &[bool], rounds: usize) -> Vec<Stump> {
    let n = x.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    for _ in 0..rounds {
        let (feature, threshold, left_is_farm, err) = best_stump(x, farm, &weights);
        if err >= 0.5 {
            break;
        }
        let err = err.max(1e-12);
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        stumps.push(Stump {
            feature,
            threshold,
            left_is_farm,
            weight: alpha,
        });
        if err <= 1e-12 {
            break;
        }
        let mut z = 0.0;
        for i in 0..n {
            let left = x[i][feature] <= threshold;
            let predicted = if left { left_is_farm } else { !left_is_farm };
            let correct = predicted == farm[i];
            weights[i] *= if correct { (-alpha).exp() } else { alpha.exp() };
            z += weights[i];
        }
        for w in &mut weights {
            *w /= z;
        }
    }
    stumps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_free_data() -> (Vec<Vec<f64>>, Vec<bool>) {
        let x = vec![
            vec![0.0, 0.1],
            vec![0.2, -0.1],
            vec![0.1, 0.0],
            vec![1.0, 0.9],
            vec![1.2, 1.1],
            vec![0.9, 1.0],
        ];
        let y = vec![false, false, false, true, true, true];
        (x, y)
    }

    #[test]
    fn tree_pure_split_is_exact() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..10).map(|i| i >= 5).collect();
        let m = train_baseline(BaselineKind::DecisionTree, &x, &y, &BaselineParams::default(), 0)
            .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(predict_baseline(&m, xi), *yi);
        }
    }

    #[test]
    fn tree_handles_xor() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![false, true, true, false];
        let m = train_baseline(BaselineKind::DecisionTree, &x, &y, &BaselineParams::default(), 0)
            .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(predict_baseline(&m, xi), *yi);
        }
    }

    #[test]
    fn knn_k1_memorizes() {
        let (x, y) = xor_free_data();
        let params = BaselineParams {
            knn_k: 1,
            ..Default::default()
        };
        let m = train_baseline(BaselineKind::Knn, &x, &y, &params, 0).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(predict_baseline(&m, xi), *yi);
        }
    }

    #[test]
    fn adaboost_training_error_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..60 {
            let farm = rng.gen::<bool>();
            let center = if farm { 1.0 } else { -1.0 };
            x.push(vec![
                center + rng.gen::<f64>() * 2.5 - 1.25,
                center + rng.gen::<f64>() * 2.5 - 1.25,
            ]);
            y.push(farm);
        }
        let stumps = train_adaboost(&x, &y, 30);
        assert!(!stumps.is_empty());
        let train_err = |upto: usize| {
            let model = BaselineModel::AdaBoost(stumps[..upto].to_vec());
            let wrong = x
                .iter()
                .zip(&y)
                .filter(|(xi, &yi)| predict_baseline(&model, xi) != yi)
                .count();
            wrong as f64 / x.len() as f64
        };
        let first = train_err(1);
        let last = train_err(stumps.len());
        assert!(last <= first + 1e-12, "{last} > {first}");
        assert!(last <= 0.05, "final training error {last}");
    }

    #[test]
    fn nb_separates_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gauss = |rng: &mut ChaCha8Rng| {
            // Box-Muller
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..1000 {
            let farm = i % 2 == 0;
            let c = if farm { 1.0 } else { -1.0 };
            x.push(vec![c + 0.1 * gauss(&mut rng), c + 0.1 * gauss(&mut rng)]);
            y.push(farm);
        }
        let (train_x, test_x) = x.split_at(500);
        let (train_y, test_y) = y.split_at(500);
        let m = train_nb(train_x, train_y, 1e-9);
        let correct = test_x
            .iter()
            .zip(test_y)
            .filter(|(xi, &yi)| predict_baseline(&m, xi) == yi)
            .count();
        assert!(correct as f64 / test_x.len() as f64 >= 0.99);
    }

    #[test]
    fn forest_is_deterministic_given_seed() {
        let (x, y) = xor_free_data();
        let params = BaselineParams {
            forest_trees: 20,
            ..Default::default()
        };
        let m1 = train_baseline(BaselineKind::RandomForest, &x, &y, &params, 77).unwrap();
        let m2 = train_baseline(BaselineKind::RandomForest, &x, &y, &params, 77).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![true, true];
        assert!(train_baseline(BaselineKind::NaiveBayes, &x, &y, &BaselineParams::default(), 0)
            .is_err());
    }
}

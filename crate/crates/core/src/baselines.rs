//! Classical classifiers on top-50 output-map features.
//!
//! Features are the values of a single-channel output map at the propagated
//! corner locations, sorted in decreasing order and cut (or padded with their
//! minimum) to [`FEATURE_LEN`] entries. Labels are 1-based classes.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::OutputMap;
use crate::numkernel::{parallel_map, seeded_rng, Real};

pub const FEATURE_LEN: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub entry: u32,
    pub label: u8,
}

/// Sorts descending and cuts or pads (with the minimum) to [`FEATURE_LEN`].
pub fn extract_features(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::NoCorners);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let min = *v.last().unwrap();
    v.resize(FEATURE_LEN, min);
    Ok(v)
}

/// Features of a single-channel map at locations `s`.
pub fn map_features<T: Real>(map: &OutputMap<T>, s: &[(usize, usize)]) -> Result<Vec<f64>> {
    if map.d() != 1 {
        return Err(Error::shape("map_features", map.map.shape(), "one channel"));
    }
    let values: Vec<f64> = s.iter().map(|&(x, y)| map.value(0, x, y).as_f64()).collect();
    extract_features(&values)
}

/// CSV with an entry column, f1..f50 and the label.
pub fn features_csv(rows: &[FeatureVector]) -> String {
    let mut out = String::from("entry");
    for i in 1..=FEATURE_LEN {
        out.push_str(&format!(",f{i}"));
    }
    out.push_str(",label\n");
    for r in rows {
        out.push_str(&r.entry.to_string());
        for v in &r.values {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", r.label));
    }
    out
}

pub trait Classifier {
    /// 1-based class for one feature vector.
    fn predict(&self, x: &[f64]) -> u8;

    fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<u8> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

fn check_training(x: &[Vec<f64>], y: &[u8]) -> Result<(usize, usize)> {
    if x.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if x.len() != y.len() {
        return Err(Error::shape("features vs labels", x.len(), y.len()));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidArgument("feature rows must share a nonzero length".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    if y.contains(&0) {
        return Err(Error::InvalidArgument("labels are 1-based".into()));
    }
    Ok((dim, *y.iter().max().unwrap() as usize))
}

/// Index of the largest count; ties go to the lower class.
fn majority(counts: &[usize]) -> u8 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u8 + 1
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(u8),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct TreeConfig {
    pub min_leaf: usize,
    /// Features tried per split; `None` tries all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf: 2,
            max_features: None,
        }
    }
}

/// CART classification tree with Gini impurity.
#[derive(Clone, Debug)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    classes: usize,
    dim: usize,
    cfg: TreeConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &i in idx {
            c[self.y[i] as usize - 1] += 1;
        }
        c
    }

    /// Best (feature, threshold) by weighted child impurity, if any split
    /// leaves at least `min_leaf` samples per side.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let features: Vec<usize> = match self.cfg.max_features {
            Some(m) if m < self.dim => {
                let mut all: Vec<usize> = (0..self.dim).collect();
                for i in 0..m {
                    let j = rng.random_range(i..self.dim);
                    all.swap(i, j);
                }
                let mut f = all[..m].to_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.dim).collect(),
        };
        let n = idx.len();
        let min_leaf = self.cfg.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for &f in &features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0; self.classes];
            let mut right = self.counts(idx);
            for split in 1..n {
                let moved = self.y[order[split - 1]] as usize - 1;
                left[moved] += 1;
                right[moved] -= 1;
                let (lo, hi) = (self.x[order[split - 1]][f], self.x[order[split]][f]);
                if lo == hi || split < min_leaf || n - split < min_leaf {
                    continue;
                }
                let score = (split as f64 * gini(&left, split) + (n - split) as f64 * gini(&right, n - split)) / n as f64;
                if best.is_none_or(|(s, _, _)| score < s - 1e-12) {
                    best = Some((score, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        let parent = gini(&self.counts(idx), n);
        best.filter(|&(s, _, _)| s < parent - 1e-12).map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(&counts)));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || idx.len() < 2 * self.cfg.min_leaf.max(1) {
            return id;
        }
        if let Some((feature, threshold)) = self.best_split(&idx, rng) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
            let left = self.grow(l, rng);
            let right = self.grow(r, rng);
            self.nodes[id] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: TreeConfig, seed: u64) -> Result<Self> {
        let (dim, classes) = check_training(x, y)?;
        Self::fit_indices(x, y, (0..x.len()).collect(), dim, classes, cfg, seed)
    }

    fn fit_indices(
        x: &[Vec<f64>],
        y: &[u8],
        idx: Vec<usize>,
        dim: usize,
        classes: usize,
        cfg: TreeConfig,
        seed: u64,
    ) -> Result<Self> {
        let mut g = Grower {
            x,
            y,
            classes,
            dim,
            cfg,
            nodes: Vec::new(),
        };
        let mut rng = seeded_rng(seed);
        g.grow(idx, &mut rng);
        Ok(DecisionTree { nodes: g.nodes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Bagged trees with per-split feature subsampling and majority vote.
#[derive(Clone, Debug)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    classes: usize,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_trees: usize, min_leaf: usize, seed: u64) -> Result<Self> {
        let (dim, classes) = check_training(x, y)?;
        if n_trees == 0 {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        let cfg = TreeConfig {
            min_leaf,
            max_features: Some(((dim as f64).sqrt().round() as usize).max(1)),
        };
        let n = x.len();
        let trees = parallel_map(n_trees, |t| {
            let tree_seed = seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = seeded_rng(tree_seed);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            DecisionTree::fit_indices(x, y, idx, dim, classes, cfg, tree_seed.rotate_left(17))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { trees, classes })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

impl Classifier for RandomForest {
    fn predict(&self, x: &[f64]) -> u8 {
        let mut votes = vec![0; self.classes];
        for t in &self.trees {
            votes[t.predict(x) as usize - 1] += 1;
        }
        majority(&votes)
    }
}

/// Gaussian naive Bayes with empirical priors.
#[derive(Clone, Debug)]
pub struct GaussianNb {
    /// Per class: (log prior, means, variances); `None` for absent classes.
    classes: Vec<Option<(f64, Vec<f64>, Vec<f64>)>>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[u8], var_floor: f64) -> Result<Self> {
        let (dim, k) = check_training(x, y)?;
        let n = x.len() as f64;
        let classes = (1..=k as u8)
            .map(|c| {
                let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
                if rows.is_empty() {
                    return None;
                }
                let m = rows.len() as f64;
                let mean: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m).collect();
                let var: Vec<f64> = (0..dim)
                    .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / m).max(var_floor))
                    .collect();
                Some(((m / n).ln(), mean, var))
            })
            .collect();
        Ok(GaussianNb { classes })
    }

    /// Unnormalized log posterior of each class (−∞ for absent classes).
    pub fn log_posterior(&self, x: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| match c {
                None => f64::NEG_INFINITY,
                Some((prior, mean, var)) => {
                    prior
                        - 0.5
                            * x.iter()
                                .zip(mean)
                                .zip(var)
                                .map(|((v, m), s)| (2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s)
                                .sum::<f64>()
                }
            })
            .collect()
    }
}

fn argmax_lower(v: &[f64]) -> u8 {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.partial_cmp(&v[best]) == Some(Ordering::Greater) {
            best = i;
        }
    }
    best as u8 + 1
}

impl Classifier for GaussianNb {
    fn predict(&self, x: &[f64]) -> u8 {
        argmax_lower(&self.log_posterior(x))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LogRegConfig {
    pub l2: f64,
    pub lr: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            lr: 0.5,
            max_iter: 10_000,
            tol: 1e-5,
        }
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    mean: Vec<f64>,
    scale: Vec<f64>,
    classes: usize,
    /// classes×dim weights followed by classes biases.
    params: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub loss: f64,
}

/// Mean cross-entropy plus (l2/2)·|W|² and its gradient with respect to
/// `params` (classes×dim weights, then classes biases). Labels are 1-based.
pub fn logreg_loss_and_grad(params: &[f64], x: &[Vec<f64>], y: &[u8], classes: usize, l2: f64) -> (f64, Vec<f64>) {
    let dim = x[0].len();
    let (w, b) = params.split_at(classes * dim);
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let inv_n = 1.0 / x.len() as f64;
    let mut z = vec![0.0; classes];
    for (row, &label) in x.iter().zip(y) {
        for k in 0..classes {
            z[k] = b[k] + w[k * dim..(k + 1) * dim].iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        loss += max + sum.ln() - z[label as usize - 1];
        for k in 0..classes {
            let p = (z[k] - max).exp() / sum - if k + 1 == label as usize { 1.0 } else { 0.0 };
            for (g, v) in grad[k * dim..(k + 1) * dim].iter_mut().zip(row) {
                *g += p * v * inv_n;
            }
            grad[classes * dim + k] += p * inv_n;
        }
    }
    loss *= inv_n;
    for (g, v) in grad[..classes * dim].iter_mut().zip(w) {
        *g += l2 * v;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: LogRegConfig) -> Result<Self> {
        let (dim, classes) = check_training(x, y)?;
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..dim)
            .map(|j| {
                let sd = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let xs: Vec<Vec<f64>> = x.iter().map(|r| standardize(r, &mean, &scale)).collect();
        let mut params = vec![0.0; classes * (dim + 1)];
        let mut best = (f64::INFINITY, params.clone());
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iter {
            let (loss, grad) = logreg_loss_and_grad(&params, &xs, y, classes, cfg.l2);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("logistic regression diverged at iteration {iterations}")));
            }
            if loss < best.0 {
                best = (loss, params.clone());
            }
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < cfg.tol {
                converged = true;
                break;
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.lr * g;
            }
            iterations += 1;
        }
        if !converged {
            let (loss, _) = logreg_loss_and_grad(&params, &xs, y, classes, cfg.l2);
            if loss < best.0 {
                best = (loss, params);
            }
            log::warn!("logistic regression stopped after {iterations} iterations without reaching the gradient tolerance");
        }
        Ok(LogisticRegression {
            mean,
            scale,
            classes,
            params: best.1,
            converged,
            iterations,
            loss: best.0,
        })
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let row = standardize(x, &self.mean, &self.scale);
        let dim = row.len();
        let z: Vec<f64> = (0..self.classes)
            .map(|k| {
                self.params[self.classes * dim + k]
                    + self.params[k * dim..(k + 1) * dim].iter().zip(&row).map(|(a, v)| a * v).sum::<f64>()
            })
            .collect();
        crate::numkernel::softmax(&z, self.classes)
    }
}

fn standardize(row: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    row.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

impl Classifier for LogisticRegression {
    fn predict(&self, x: &[f64]) -> u8 {
        argmax_lower(&self.probabilities(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn clusters(per_class: usize, classes: u8, dim: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = seeded_rng(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 1..=classes {
            for _ in 0..per_class {
                x.push((0..dim).map(|j| if j % classes as usize == c as usize - 1 { 10.0 } else { 0.0 } + noise.sample(&mut rng)).collect());
                y.push(c);
            }
        }
        (x, y)
    }

    fn accuracy(m: &impl Classifier, x: &[Vec<f64>], y: &[u8]) -> f64 {
        m.predict_all(x).iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    #[test]
    fn feature_examples() {
        let v: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let f = extract_features(&v).unwrap();
        assert_eq!(f.len(), 50);
        assert_eq!(f[0], 59.0);
        assert_eq!(f[49], 10.0);
        let f = extract_features(&[0.2, 0.9, 0.5]).unwrap();
        assert_eq!(&f[..3], &[0.9, 0.5, 0.2]);
        assert!(f[3..].iter().all(|&v| v == 0.2));
        assert!(matches!(extract_features(&[]), Err(Error::NoCorners)));
        let csv = features_csv(&[FeatureVector { values: f, entry: 3, label: 2 }]);
        assert!(csv.starts_with("entry,f1,"));
        assert!(csv.lines().nth(1).unwrap().starts_with("3,0.9,0.5,0.2,"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 52);
    }

    #[test]
    fn tree_on_threshold_data() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| if i < 9 { 1 } else { 2 }).collect();
        let t = DecisionTree::fit(&x, &y, TreeConfig::default(), 0).unwrap();
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        assert_eq!(t.node_count(), 3);
    }

    #[test]
    fn constant_labels_give_constant_predictor() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y = vec![3u8; 10];
        let t = DecisionTree::fit(&x, &y, TreeConfig::default(), 0).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.predict(&[100.0, 5.0]), 3);
        let f = RandomForest::fit(&x, &y, 5, 2, 0).unwrap();
        assert_eq!(f.predict(&[-4.0, 1.0]), 3);
        let nb = GaussianNb::fit(&x, &y, 1e-9).unwrap();
        assert_eq!(nb.predict(&[0.0, 0.0]), 3);
    }

    #[test]
    fn six_separable_clusters_are_learned_by_all() {
        let (x, y) = clusters(8, 6, 50, 0.5, 1);
        assert_eq!(accuracy(&DecisionTree::fit(&x, &y, TreeConfig::default(), 0).unwrap(), &x, &y), 1.0);
        assert_eq!(accuracy(&RandomForest::fit(&x, &y, 50, 2, 0).unwrap(), &x, &y), 1.0);
        assert_eq!(accuracy(&GaussianNb::fit(&x, &y, 1e-9).unwrap(), &x, &y), 1.0);
        let lr = LogisticRegression::fit(&x, &y, LogRegConfig::default()).unwrap();
        assert_eq!(accuracy(&lr, &x, &y), 1.0);
    }

    #[test]
    fn forest_is_deterministic_and_beats_chance_on_noise() {
        let (x, y) = clusters(30, 3, 10, 6.0, 2);
        let (xt, yt) = clusters(30, 3, 10, 6.0, 3);
        let a = RandomForest::fit(&x, &y, 40, 2, 7).unwrap();
        let b = RandomForest::fit(&x, &y, 40, 2, 7).unwrap();
        assert_eq!(a.predict_all(&xt), b.predict_all(&xt));
        let forest_train = accuracy(&a, &x, &y);
        let tree_test = accuracy(&DecisionTree::fit(&x, &y, TreeConfig::default(), 0).unwrap(), &xt, &yt);
        assert!(forest_train >= tree_test, "{forest_train} < {tree_test}");
        assert!(accuracy(&a, &xt, &yt) > 0.5);
    }

    #[test]
    fn nb_prior_and_nearest_mean() {
        // identical likelihoods: the prior decides
        let x = vec![vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![0.0], vec![1.0]];
        let y = vec![1, 1, 2, 2, 2, 2];
        let nb = GaussianNb::fit(&x, &y, 1e-9).unwrap();
        assert_eq!(nb.predict(&[0.5]), 2);
        // one point per class: nearest mean wins
        let x = vec![vec![0.0, 0.0], vec![4.0, 4.0], vec![0.0, 8.0]];
        let nb = GaussianNb::fit(&x, &[1, 2, 3], 1e-9).unwrap();
        assert_eq!(nb.predict(&[3.0, 3.5]), 2);
        assert_eq!(nb.predict(&[0.5, 6.0]), 3);
    }

    #[test]
    fn logreg_zero_weights_are_uniform() {
        let x = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let (loss, _) = logreg_loss_and_grad(&[0.0; 9], &x, &[1, 3], 3, 1e-4);
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logreg_gradient_matches_finite_differences() {
        let (x, y) = clusters(4, 3, 4, 1.0, 5);
        let mut rng = seeded_rng(9);
        let params: Vec<f64> = (0..15).map(|_| rng.random_range(-0.5..0.5)).collect();
        let (_, grad) = logreg_loss_and_grad(&params, &x, &y, 3, 1e-2);
        let h = 1e-6;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            let up = logreg_loss_and_grad(&p, &x, &y, 3, 1e-2).0;
            p[i] -= 2.0 * h;
            let down = logreg_loss_and_grad(&p, &x, &y, 3, 1e-2).0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
            assert!(rel < 1e-5, "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn logreg_separable_two_class() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| if i < 10 { 1 } else { 2 }).collect();
        let m = LogisticRegression::fit(&x, &y, LogRegConfig::default()).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }
}

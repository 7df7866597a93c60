//! Hand-crafted lexicon features and a random forest over them.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::preprocess::is_punct_token;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    pub positive: HashSet<String>,
    pub negative: HashSet<String>,
    /// Words listed in both files and therefore dropped from both.
    pub overlap_dropped: usize,
}

fn read_word_list(path: &Path) -> Result<HashSet<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut words = HashSet::new();
    for raw in bytes.split(|&b| b == b'\n') {
        let line = match std::str::from_utf8(raw) {
            Ok(s) => s.to_string(),
            // Latin-1 fallback: every byte is its own code point.
            Err(_) => raw.iter().map(|&b| b as char).collect(),
        };
        let word = line.trim();
        if word.is_empty() || word.starts_with(';') {
            continue;
        }
        words.insert(word.to_lowercase());
    }
    Ok(words)
}

impl SentimentLexicon {
    pub fn new(
        positive: impl IntoIterator<Item = String>,
        negative: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut positive: HashSet<String> = positive.into_iter().map(|w| w.to_lowercase()).collect();
        let mut negative: HashSet<String> = negative.into_iter().map(|w| w.to_lowercase()).collect();
        let both: Vec<String> = positive.intersection(&negative).cloned().collect();
        for w in &both {
            positive.remove(w);
            negative.remove(w);
        }
        SentimentLexicon {
            positive,
            negative,
            overlap_dropped: both.len(),
        }
    }
}

/// One word per line; lines starting with `;` are comments.
pub fn load_lexicon(positive: &Path, negative: &Path) -> Result<SentimentLexicon> {
    Ok(SentimentLexicon::new(
        read_word_list(positive)?,
        read_word_list(negative)?,
    ))
}

pub const NUM_FEATURES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub positive: f64,
    pub negative: f64,
    pub punctuation: f64,
    pub words: f64,
    /// `1 / (negative + 1)`
    pub inv_negative: f64,
    /// `ln(negative + 1)`
    pub log_negative: f64,
}

impl FeatureVector {
    pub fn from_counts(positive: usize, negative: usize, punctuation: usize, words: usize) -> Self {
        let neg = negative as f64;
        FeatureVector {
            positive: positive as f64,
            negative: neg,
            punctuation: punctuation as f64,
            words: words as f64,
            inv_negative: 1.0 / (neg + 1.0),
            log_negative: (neg + 1.0).ln(),
        }
    }

    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.positive,
            self.negative,
            self.punctuation,
            self.words,
            self.inv_negative,
            self.log_negative,
        ]
    }
}

/// Features over the token stream before punctuation removal.
pub fn extract_features(tokens: &[String], lexicon: &SentimentLexicon) -> FeatureVector {
    let (mut pos, mut neg, mut punct, mut words) = (0, 0, 0, 0);
    for t in tokens {
        if is_punct_token(t) {
            punct += 1;
            continue;
        }
        words += 1;
        if lexicon.positive.contains(t) {
            pos += 1;
        } else if lexicon.negative.contains(t) {
            neg += 1;
        }
    }
    FeatureVector::from_counts(pos, neg, punct, words)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    /// `None` grows until purity or `min_leaf`.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            num_trees: 100,
            max_depth: Some(8),
            min_leaf: 2,
            features_per_split: (NUM_FEATURES as f64).sqrt().ceil() as usize,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::invalid("num_trees must be at least 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if !(1..=NUM_FEATURES).contains(&self.features_per_split) {
            return Err(Error::invalid(format!(
                "features_per_split must lie in 1..={NUM_FEATURES}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { counts: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

pub type FeatureRow = [f64; NUM_FEATURES];

pub fn gini(counts: &[usize; 3]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; 3]) -> ClassLabel {
    let mut best = 0;
    for c in 1..3 {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    ClassLabel::ALL[best]
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a> {
    rows: &'a [FeatureRow],
    labels: &'a [ClassLabel],
    cfg: &'a ForestConfig,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 3] {
        let mut c = [0; 3];
        for &i in idx {
            c[self.labels[i].code()] += 1;
        }
        c
    }

    fn best_split(&mut self, idx: &mut [usize], parent: &[usize; 3]) -> Option<BestSplit> {
        let mut features: Vec<usize> = (0..NUM_FEATURES).collect();
        self.rng.shuffle(&mut features);
        let n = idx.len();
        let mut best: Option<BestSplit> = None;
        for (examined, &f) in features.iter().enumerate() {
            // Keep drawing past the quota only while nothing splits.
            if examined >= self.cfg.features_per_split && best.is_some() {
                break;
            }
            let rows = self.rows;
            idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
            let mut left = [0usize; 3];
            for k in 0..n - 1 {
                left[self.labels[idx[k]].code()] += 1;
                let (lo, hi) = (rows[idx[k]][f], rows[idx[k + 1]][f]);
                if lo == hi {
                    continue;
                }
                let (nl, nr) = (k + 1, n - k - 1);
                if nl < self.cfg.min_leaf || nr < self.cfg.min_leaf {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
                let impurity = (nl as f64 * gini(&left) + nr as f64 * gini(&right)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: lo + (hi - lo) / 2.0,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.cfg.min_leaf {
            return id;
        }
        let Some(split) = self.best_split(idx, &counts) else {
            return id;
        };
        if split.impurity > gini(&counts) {
            return id;
        }
        let rows = self.rows;
        idx.sort_by(|&a, &b| rows[a][split.feature].total_cmp(&rows[b][split.feature]));
        let cut = idx.partition_point(|&i| rows[i][split.feature] <= split.threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub fn leaf(counts: [usize; 3]) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { counts }],
        }
    }

    /// CART on the (possibly repeating) sample `sample` of `rows`.
    pub fn fit(
        rows: &[FeatureRow],
        labels: &[ClassLabel],
        sample: &[usize],
        cfg: &ForestConfig,
        rng: &mut Rng,
    ) -> Self {
        let mut b = Builder {
            rows,
            labels,
            cfg,
            rng,
            nodes: Vec::new(),
        };
        let mut idx = sample.to_vec();
        b.grow(&mut idx, 0);
        DecisionTree { nodes: b.nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_counts(&self, x: &FeatureRow) -> &[usize; 3] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &FeatureRow) -> ClassLabel {
        majority(self.leaf_counts(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
    pub seed: u64,
}

pub fn bootstrap_sample(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.below(n)).collect()
}

/// Generator used for tree `index`: the bootstrap draw, then the split
/// feature draws.
pub fn tree_rng(seed: u64, index: usize) -> Rng {
    Rng::new(seed.wrapping_add(index as u64))
}

pub fn train_forest(
    features: &[FeatureVector],
    labels: &[ClassLabel],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RandomForest> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Shape {
            op: "train_forest",
            left: (features.len(), NUM_FEATURES),
            right: (labels.len(), 1),
        });
    }
    let distinct = labels.iter().collect::<HashSet<_>>().len();
    if distinct < 2 {
        return Err(Error::SingleClass(distinct));
    }
    let rows: Vec<FeatureRow> = features.iter().map(FeatureVector::to_array).collect();
    let trees = (0..cfg.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let sample = bootstrap_sample(rows.len(), &mut rng);
            DecisionTree::fit(&rows, labels, &sample, cfg, &mut rng)
        })
        .collect();
    Ok(RandomForest {
        trees,
        config: cfg.clone(),
        seed,
    })
}

/// Majority vote of the trees' leaf classes; probabilities are vote shares.
pub fn forest_predict(forest: &RandomForest, fv: &FeatureVector) -> (ClassLabel, [f64; 3]) {
    let x = fv.to_array();
    let mut votes = [0usize; 3];
    for tree in &forest.trees {
        votes[tree.predict(&x).code()] += 1;
    }
    let n = forest.trees.len().max(1) as f64;
    let probs = votes.map(|v| v as f64 / n);
    (ClassLabel::argmax(&probs), probs)
}

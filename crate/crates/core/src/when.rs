//! The "when is there enough context" task: featurization of discussion
//! steps, a from-scratch random forest over those features, sequential
//! first-positive inference producing `t_p`, and the fixed/random baselines.
//!
//! A classifier walks an ongoing discussion utterance by utterance and
//! predicts, after each one, whether enough information about the fix has
//! accumulated. The first positive prediction fixes `t_p`; no predictions
//! are made after it.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Example, Utterance, ValidationError, WhenPrediction};
use crate::rng::derived_rng;

#[derive(Debug, Error)]
pub enum WhenError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("step {t} outside [1, {max}]")]
    StepOutOfRange { t: usize, max: usize },
    #[error("{what} must be positive (got {got})")]
    NotPositive { what: &'static str, got: f64 },
    #[error("probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("training instances contain a single class")]
    SingleClass,
    #[error("need at least 2 training instances")]
    TooFewInstances,
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("bad model file: {0}")]
    BadModel(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// A non-bug discussion used to augment classifier training: it has a title
/// and utterances but no solution event, so every step is a negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscussion")]
pub struct Discussion {
    id: String,
    title_tokens: Vec<String>,
    utterances: Vec<Utterance>,
}

#[derive(Deserialize)]
struct RawDiscussion {
    id: String,
    title_tokens: Vec<String>,
    utterances: Vec<Utterance>,
}

impl TryFrom<RawDiscussion> for Discussion {
    type Error = ValidationError;
    fn try_from(raw: RawDiscussion) -> Result<Self, Self::Error> {
        Discussion::new(raw.id, raw.title_tokens, raw.utterances)
    }
}

impl Discussion {
    pub fn new(
        id: impl Into<String>,
        title_tokens: Vec<String>,
        utterances: Vec<Utterance>,
    ) -> Result<Self, ValidationError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ValidationError::new("discussion id is non-empty"));
        }
        if title_tokens.is_empty() {
            return Err(ValidationError::new("title_tokens non-empty"));
        }
        if utterances.is_empty() {
            return Err(ValidationError::new("utterances non-empty"));
        }
        for (i, u) in utterances.iter().enumerate() {
            if u.t() != i + 1 {
                return Err(ValidationError::new("utterance steps are 1..=T in order"));
            }
        }
        Ok(Discussion { id, title_tokens, utterances })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn title_tokens(&self) -> &[String] {
        &self.title_tokens
    }
    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }
}

impl crate::corpus::jsonl::JsonlRecord for Discussion {
    fn unique_id(&self) -> Option<&str> {
        Some(&self.id)
    }
}

/// Anything with a title and an utterance sequence can be featurized.
pub trait DiscussionLike {
    fn title_tokens(&self) -> &[String];
    fn utterances(&self) -> &[Utterance];
}

impl DiscussionLike for Example {
    fn title_tokens(&self) -> &[String] {
        Example::title_tokens(self)
    }
    fn utterances(&self) -> &[Utterance] {
        Example::utterances(self)
    }
}

impl DiscussionLike for Discussion {
    fn title_tokens(&self) -> &[String] {
        Discussion::title_tokens(self)
    }
    fn utterances(&self) -> &[Utterance] {
        Discussion::utterances(self)
    }
}

/// TF-IDF vocabulary fit on training text only (titles and utterances of the
/// training corpus plus augmentation). Immutable: featurizing cannot grow it.
#[derive(Debug, Clone, PartialEq)]
pub struct WhenVectorizer {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    idf: Vec<f64>,
}

impl WhenVectorizer {
    /// Fits vocabulary and idf over the documents of the training material:
    /// each title and each utterance is one document, idf = ln(N/df).
    pub fn fit(corpus: &[Example], augmentation: &[Discussion]) -> Result<Self, WhenError> {
        if corpus.is_empty() {
            return Err(WhenError::EmptyCorpus);
        }
        let mut docs: Vec<&[String]> = Vec::new();
        for e in corpus {
            docs.push(e.title_tokens());
            for u in e.utterances() {
                docs.push(u.tokens());
            }
        }
        for d in augmentation {
            docs.push(d.title_tokens());
            for u in d.utterances() {
                docs.push(u.tokens());
            }
        }
        let n_docs = docs.len();
        let idf_by_word = crate::generators::idf_over(docs.into_iter(), n_docs);
        let mut vocab: Vec<String> = idf_by_word.keys().map(|w| w.to_string()).collect();
        vocab.sort_unstable();
        let idf: Vec<f64> = vocab.iter().map(|w| idf_by_word[w.as_str()]).collect();
        let index: HashMap<String, u32> =
            vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(WhenVectorizer { vocab, index, idf })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Stable digest of the vocabulary and idf values; unchanged by any
    /// amount of featurization.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x100000001b3);
            }
        };
        for (w, idf) in self.vocab.iter().zip(&self.idf) {
            eat(w.as_bytes());
            eat(&idf.to_bits().to_le_bytes());
        }
        hash
    }

    /// L2-normalized tf-idf over the known vocabulary; unknown words are
    /// skipped (they cannot be added at featurization time).
    fn vector(&self, tokens: &[String]) -> BTreeMap<u32, f64> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for t in tokens {
            if let Some(&ix) = self.index.get(t) {
                *counts.entry(ix).or_insert(0) += 1;
            }
        }
        let mut vec: BTreeMap<u32, f64> = BTreeMap::new();
        for (ix, count) in counts {
            let w = (1.0 + (count as f64).ln()) * self.idf[ix as usize];
            if w != 0.0 {
                vec.insert(ix, w);
            }
        }
        let norm = vec.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for w in vec.values_mut() {
                *w /= norm;
            }
        }
        vec
    }
}

/// Features describing step `t` of a discussion: three TF-IDF views (title,
/// the step's utterance, all utterances so far) and six scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    tfidf_title: BTreeMap<u32, f64>,
    tfidf_ut: BTreeMap<u32, f64>,
    tfidf_agg: BTreeMap<u32, f64>,
    position_t: usize,
    len_ut: usize,
    author_index: usize,
    author_freq: f64,
    len_ratio: f64,
    title_len: usize,
}

/// Dense layout: the six scalars first, then the three vocabulary blocks.
const N_SCALARS: usize = 6;

impl FeatureVector {
    pub fn position_t(&self) -> usize {
        self.position_t
    }
    pub fn len_ut(&self) -> usize {
        self.len_ut
    }
    pub fn author_index(&self) -> usize {
        self.author_index
    }
    pub fn author_freq(&self) -> f64 {
        self.author_freq
    }
    pub fn len_ratio(&self) -> f64 {
        self.len_ratio
    }
    pub fn title_len(&self) -> usize {
        self.title_len
    }
    pub fn tfidf_title(&self) -> &BTreeMap<u32, f64> {
        &self.tfidf_title
    }
    pub fn tfidf_ut(&self) -> &BTreeMap<u32, f64> {
        &self.tfidf_ut
    }
    pub fn tfidf_agg(&self) -> &BTreeMap<u32, f64> {
        &self.tfidf_agg
    }

    /// Dense feature row of width `6 + 3·vocab_size`.
    pub fn to_dense(&self, vocab_size: usize) -> Vec<f64> {
        let mut row = vec![0.0; N_SCALARS + 3 * vocab_size];
        row[0] = self.position_t as f64;
        row[1] = self.len_ut as f64;
        row[2] = self.author_index as f64;
        row[3] = self.author_freq;
        row[4] = self.len_ratio;
        row[5] = self.title_len as f64;
        for (block, map) in
            [&self.tfidf_title, &self.tfidf_ut, &self.tfidf_agg].into_iter().enumerate()
        {
            let base = N_SCALARS + block * vocab_size;
            for (&ix, &w) in map {
                row[base + ix as usize] = w;
            }
        }
        row
    }
}

/// Features for step `t` (1-based) of a discussion, computed from the title
/// and utterances `1..=t` only.
pub fn featurize<D: DiscussionLike>(
    discussion: &D,
    t: usize,
    vectorizer: &WhenVectorizer,
) -> Result<FeatureVector, WhenError> {
    let utterances = discussion.utterances();
    if t < 1 || t > utterances.len() {
        return Err(WhenError::StepOutOfRange { t, max: utterances.len() });
    }
    let visible = &utterances[..t];
    let u_t = &visible[t - 1];

    // Authors indexed by order of first appearance among U_1..U_t.
    let mut entry_order: Vec<&str> = Vec::new();
    for u in visible {
        if !entry_order.contains(&u.author()) {
            entry_order.push(u.author());
        }
    }
    let author_index =
        entry_order.iter().position(|a| *a == u_t.author()).expect("author of a visible turn") + 1;
    let author_count = visible.iter().filter(|u| u.author() == u_t.author()).count();
    let total_len: usize = visible.iter().map(|u| u.tokens().len()).sum();
    let agg: Vec<String> = visible.iter().flat_map(|u| u.tokens().iter().cloned()).collect();

    Ok(FeatureVector {
        tfidf_title: vectorizer.vector(discussion.title_tokens()),
        tfidf_ut: vectorizer.vector(u_t.tokens()),
        tfidf_agg: vectorizer.vector(&agg),
        position_t: t,
        len_ut: u_t.tokens().len(),
        author_index,
        author_freq: author_count as f64 / t as f64,
        len_ratio: u_t.tokens().len() as f64 / total_len as f64,
        title_len: discussion.title_tokens().len(),
    })
}

/// One training row: a step of a discussion with its label (true only at the
/// gold step of a bug example) and sampling weight.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInstance {
    pub example_id: String,
    pub t: usize,
    pub label: bool,
    pub weight: f64,
    pub features: FeatureVector,
}

/// Builds training instances: bug examples contribute steps `1..=t_g` with a
/// single positive at `t_g`; augmentation discussions contribute all-negative
/// steps at base weight `aug_weight`. Class weights (`n/(2·n_class)` computed
/// from the assembled instances, unless overridden) multiply on top. Returns
/// the instances and the class weights applied.
pub fn make_instances(
    corpus: &[Example],
    augmentation: &[Discussion],
    vectorizer: &WhenVectorizer,
    aug_weight: f64,
    class_weights: Option<(f64, f64)>,
) -> Result<(Vec<StepInstance>, (f64, f64)), WhenError> {
    if corpus.is_empty() {
        return Err(WhenError::EmptyCorpus);
    }
    if !(aug_weight > 0.0) {
        return Err(WhenError::NotPositive { what: "aug_weight", got: aug_weight });
    }
    let mut instances: Vec<StepInstance> = Vec::new();
    for e in corpus {
        for t in 1..=e.t_g() {
            instances.push(StepInstance {
                example_id: e.id().to_string(),
                t,
                label: t == e.t_g(),
                weight: 1.0,
                features: featurize(e, t, vectorizer)?,
            });
        }
    }
    for d in augmentation {
        for t in 1..=d.utterances().len() {
            instances.push(StepInstance {
                example_id: d.id().to_string(),
                t,
                label: false,
                weight: aug_weight,
                features: featurize(d, t, vectorizer)?,
            });
        }
    }
    let (w_pos, w_neg) = match class_weights {
        Some(pair) => pair,
        None => {
            let n = instances.len() as f64;
            let n_pos = instances.iter().filter(|i| i.label).count() as f64;
            let n_neg = n - n_pos;
            if n_pos == 0.0 || n_neg == 0.0 {
                (1.0, 1.0) // single class present; nothing to balance
            } else {
                (n / (2.0 * n_pos), n / (2.0 * n_neg))
            }
        }
    };
    for inst in &mut instances {
        inst.weight *= if inst.label { w_pos } else { w_neg };
    }
    Ok((instances, (w_pos, w_neg)))
}

/// Example-level positive rate: the mean of `1/t_g` over bug examples, with
/// augmentation discussions counting as zero-positive examples.
pub fn estimate_p_pos(corpus: &[Example], n_augmentation: usize) -> Result<f64, WhenError> {
    if corpus.is_empty() {
        return Err(WhenError::EmptyCorpus);
    }
    let sum: f64 = corpus.iter().map(|e| 1.0 / e.t_g() as f64).sum();
    Ok(sum / (corpus.len() + n_augmentation) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { p: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { p } => return p,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature as usize] <= threshold { left } else { right } as usize;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub seed: u64,
    /// Features sampled per split; `None` means `⌊√d⌋` (at least 1).
    pub max_features: Option<usize>,
    /// Class weights recorded on the model (already baked into instance
    /// weights by `make_instances`).
    pub class_weights: (f64, f64),
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, seed: 0, max_features: None, class_weights: (1.0, 1.0) }
    }
}

/// A bagged ensemble of Gini-trained decision trees. Leaves hold the
/// weighted positive fraction of their training sample; the forest
/// probability is the mean over trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_features: usize,
    max_features: usize,
    seed: u64,
    class_weights: (f64, f64),
}

struct DensePoint {
    x: Vec<f64>,
    label: bool,
    weight: f64,
}

fn weighted_gini(w_pos: f64, w_neg: f64) -> f64 {
    let w = w_pos + w_neg;
    if w <= 0.0 {
        return 0.0;
    }
    let p = w_pos / w;
    let q = w_neg / w;
    1.0 - p * p - q * q
}

/// Grows one node over `idxs` (indices into the bootstrap sample), appending
/// to `nodes` and returning the node's index.
fn grow(
    points: &[DensePoint],
    sample: &[usize],
    idxs: Vec<usize>,
    d: usize,
    max_features: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> u32 {
    let w_pos: f64 = idxs.iter().filter(|&&i| points[sample[i]].label).map(|&i| points[sample[i]].weight).sum();
    let w_all: f64 = idxs.iter().map(|&i| points[sample[i]].weight).sum();
    let w_neg = w_all - w_pos;
    let leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf { p: if w_all > 0.0 { w_pos / w_all } else { 0.0 } });
        (nodes.len() - 1) as u32
    };
    if idxs.len() < 2 || w_pos == 0.0 || w_neg == 0.0 {
        return leaf(nodes);
    }

    // Sample max_features distinct feature ids (partial Fisher–Yates).
    let mut pool: Vec<u32> = (0..d as u32).collect();
    let n_try = max_features.min(d);
    for i in 0..n_try {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }

    let parent_gini = weighted_gini(w_pos, w_neg);
    let mut best: Option<(f64, u32, f64)> = None; // (decrease, feature, threshold)
    let mut column: Vec<(f64, bool, f64)> = Vec::with_capacity(idxs.len());
    for &feature in &pool[..n_try] {
        column.clear();
        column.extend(idxs.iter().map(|&i| {
            let pt = &points[sample[i]];
            (pt.x[feature as usize], pt.label, pt.weight)
        }));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        let mut left_pos = 0.0f64;
        let mut left_all = 0.0f64;
        for k in 0..column.len() - 1 {
            let (v, label, w) = column[k];
            left_all += w;
            if label {
                left_pos += w;
            }
            let v_next = column[k + 1].0;
            if v_next <= v {
                continue; // no boundary between equal values
            }
            let right_pos = w_pos - left_pos;
            let right_all = w_all - left_all;
            let decrease = parent_gini
                - (left_all / w_all) * weighted_gini(left_pos, left_all - left_pos)
                - (right_all / w_all) * weighted_gini(right_pos, right_all - right_pos);
            if decrease > best.map_or(1e-12, |(b, _, _)| b) {
                best = Some((decrease, feature, (v + v_next) / 2.0));
            }
        }
    }

    match best {
        None => leaf(nodes),
        Some((_, feature, threshold)) => {
            let (left_idxs, right_idxs): (Vec<usize>, Vec<usize>) = idxs
                .into_iter()
                .partition(|&i| points[sample[i]].x[feature as usize] <= threshold);
            // Reserve this node's slot before growing children.
            let at = nodes.len();
            nodes.push(Node::Leaf { p: 0.0 });
            let left = grow(points, sample, left_idxs, d, max_features, rng, nodes);
            let right = grow(points, sample, right_idxs, d, max_features, rng, nodes);
            nodes[at] = Node::Split { feature, threshold, left, right };
            at as u32
        }
    }
}

fn fit_forest_points(points: &[DensePoint], d: usize, cfg: &ForestConfig) -> Result<ForestModel, WhenError> {
    if points.len() < 2 {
        return Err(WhenError::TooFewInstances);
    }
    if points.iter().all(|p| p.label) || points.iter().all(|p| !p.label) {
        return Err(WhenError::SingleClass);
    }
    if cfg.n_trees == 0 {
        return Err(WhenError::NotPositive { what: "n_trees", got: 0.0 });
    }
    let max_features = cfg.max_features.unwrap_or_else(|| (d as f64).sqrt() as usize).max(1);
    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(cfg.seed, "tree", i as u64);
            let sample: Vec<usize> =
                (0..points.len()).map(|_| rng.random_range(0..points.len())).collect();
            let mut nodes = Vec::new();
            let root = grow(
                points,
                &sample,
                (0..sample.len()).collect(),
                d,
                max_features,
                &mut rng,
                &mut nodes,
            );
            debug_assert_eq!(root, 0);
            Tree { nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features: d,
        max_features,
        seed: cfg.seed,
        class_weights: cfg.class_weights,
    })
}

/// Trains the forest on featurized step instances.
pub fn train_forest(
    instances: &[StepInstance],
    vocab_size: usize,
    cfg: &ForestConfig,
) -> Result<ForestModel, WhenError> {
    let points: Vec<DensePoint> = instances
        .iter()
        .map(|i| DensePoint { x: i.features.to_dense(vocab_size), label: i.label, weight: i.weight })
        .collect();
    fit_forest_points(&points, N_SCALARS + 3 * vocab_size, cfg)
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
    pub fn n_features(&self) -> usize {
        self.n_features
    }
    pub fn max_features(&self) -> usize {
        self.max_features
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn class_weights(&self) -> (f64, f64) {
        self.class_weights
    }

    /// Mean leaf probability over the ensemble.
    pub fn predict_prob(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    #[cfg(test)]
    fn from_single_tree(nodes: Vec<Node>, n_features: usize) -> Self {
        ForestModel {
            trees: vec![Tree { nodes }],
            n_features,
            max_features: 1,
            seed: 0,
            class_weights: (1.0, 1.0),
        }
    }
}

/// The trained classifier bundle: the forest plus the vocabulary needed to
/// featurize unseen discussions.
#[derive(Debug, Clone, PartialEq)]
pub struct WhenModel {
    pub vectorizer: WhenVectorizer,
    pub forest: ForestModel,
}

/// Fits the vectorizer, assembles instances, and trains the forest in one
/// step. `class_weights = None` recomputes inverse class proportions.
pub fn train_when(
    corpus: &[Example],
    augmentation: &[Discussion],
    aug_weight: f64,
    class_weights: Option<(f64, f64)>,
    cfg: &ForestConfig,
) -> Result<WhenModel, WhenError> {
    let vectorizer = WhenVectorizer::fit(corpus, augmentation)?;
    let (instances, applied) =
        make_instances(corpus, augmentation, &vectorizer, aug_weight, class_weights)?;
    let cfg = ForestConfig { class_weights: applied, ..*cfg };
    let forest = train_forest(&instances, vectorizer.vocab_size(), &cfg)?;
    Ok(WhenModel { vectorizer, forest })
}

/// Walks steps `1..=max_t` in order and stops at the first step whose
/// positive probability reaches `threshold`; `t_p = None` if none does.
/// Probabilities are recorded only for evaluated steps — nothing is computed
/// past `t_p`.
pub fn infer_tp(
    model: &WhenModel,
    example: &Example,
    threshold: f64,
    max_t: usize,
) -> Result<WhenPrediction, WhenError> {
    if max_t < 1 || max_t > example.n_steps() {
        return Err(WhenError::StepOutOfRange { t: max_t, max: example.n_steps() });
    }
    let mut probs = Vec::new();
    for t in 1..=max_t {
        let fv = featurize(example, t, &model.vectorizer)?;
        let p = model.forest.predict_prob(&fv.to_dense(model.vectorizer.vocab_size()));
        probs.push(p);
        if p >= threshold {
            return Ok(WhenPrediction::new(example.id(), Some(t), probs)?);
        }
    }
    Ok(WhenPrediction::new(example.id(), None, probs)?)
}

/// Always predicts positive at the first utterance.
pub fn baseline_first(example: &Example) -> WhenPrediction {
    WhenPrediction::new(example.id(), Some(1), vec![1.0]).expect("fixed shape is valid")
}

/// Negative at t=1, positive at t=2 when the gold step allows it; otherwise
/// never positive.
pub fn baseline_second(example: &Example) -> WhenPrediction {
    if example.t_g() >= 2 {
        WhenPrediction::new(example.id(), Some(2), vec![0.0, 1.0]).expect("fixed shape is valid")
    } else {
        WhenPrediction::new(example.id(), None, vec![0.0]).expect("fixed shape is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandMode {
    /// Fair coin at every step.
    Uniform,
    /// Example-level label distribution; defaults to a positive rate of
    /// 0.549 unless overridden.
    Dist,
}

/// Draws positive with probability `p_pos` after each utterance up to
/// `max_t`, stopping at the first positive. The RNG is derived from the seed
/// and the example id, so results are independent of evaluation order.
pub fn baseline_random(
    example: &Example,
    mode: RandMode,
    p_pos: Option<f64>,
    seed: u64,
    max_t: usize,
) -> Result<WhenPrediction, WhenError> {
    let p = match mode {
        RandMode::Uniform => 0.5,
        RandMode::Dist => p_pos.unwrap_or(0.549),
    };
    if !(p > 0.0 && p <= 1.0) {
        return Err(WhenError::BadProbability(p));
    }
    if max_t < 1 || max_t > example.n_steps() {
        return Err(WhenError::StepOutOfRange { t: max_t, max: example.n_steps() });
    }
    let mut rng = derived_rng(seed, example.id(), 0);
    let mut probs = Vec::new();
    for t in 1..=max_t {
        let positive = rng.random::<f64>() < p;
        probs.push(if positive { 1.0 } else { 0.0 });
        if positive {
            return Ok(WhenPrediction::new(example.id(), Some(t), probs)?);
        }
    }
    Ok(WhenPrediction::new(example.id(), None, probs)?)
}

const MODEL_MAGIC: &[u8; 7] = b"IDWHEN1";

fn io_err(path: &Path, source: io::Error) -> WhenError {
    WhenError::Io { path: path.display().to_string(), source }
}

/// Writes the model as a versioned flat binary file: the magic string, the
/// vocabulary with idf values, forest metadata, then each tree's node array.
pub fn save_model(model: &WhenModel, path: &Path) -> Result<(), WhenError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    let v = &model.vectorizer;
    buf.extend_from_slice(&(v.vocab.len() as u32).to_le_bytes());
    for (word, idf) in v.vocab.iter().zip(&v.idf) {
        buf.extend_from_slice(&(word.len() as u32).to_le_bytes());
        buf.extend_from_slice(word.as_bytes());
        buf.extend_from_slice(&idf.to_le_bytes());
    }
    let f = &model.forest;
    buf.extend_from_slice(&(f.n_features as u32).to_le_bytes());
    buf.extend_from_slice(&(f.max_features as u32).to_le_bytes());
    buf.extend_from_slice(&f.seed.to_le_bytes());
    buf.extend_from_slice(&f.class_weights.0.to_le_bytes());
    buf.extend_from_slice(&f.class_weights.1.to_le_bytes());
    buf.extend_from_slice(&(f.trees.len() as u32).to_le_bytes());
    for tree in &f.trees {
        buf.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
        for node in &tree.nodes {
            match *node {
                Node::Leaf { p } => {
                    buf.push(0);
                    buf.extend_from_slice(&p.to_le_bytes());
                }
                Node::Split { feature, threshold, left, right } => {
                    buf.push(1);
                    buf.extend_from_slice(&feature.to_le_bytes());
                    buf.extend_from_slice(&threshold.to_le_bytes());
                    buf.extend_from_slice(&left.to_le_bytes());
                    buf.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WhenError> {
        if self.at + n > self.bytes.len() {
            return Err(WhenError::BadModel("unexpected end of file".into()));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8, WhenError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, WhenError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, WhenError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, WhenError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_model(path: &Path) -> Result<WhenModel, WhenError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor { bytes: &bytes, at: 0 };
    if cur.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
        return Err(WhenError::BadModel("missing IDWHEN1 magic".into()));
    }
    let vocab_len = cur.u32()? as usize;
    let mut vocab = Vec::with_capacity(vocab_len);
    let mut idf = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let len = cur.u32()? as usize;
        let word = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| WhenError::BadModel("vocabulary is not UTF-8".into()))?
            .to_string();
        vocab.push(word);
        idf.push(cur.f64()?);
    }
    let index: HashMap<String, u32> =
        vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    let vectorizer = WhenVectorizer { vocab, index, idf };

    let n_features = cur.u32()? as usize;
    let max_features = cur.u32()? as usize;
    let seed = cur.u64()?;
    let class_weights = (cur.f64()?, cur.f64()?);
    let n_trees = cur.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = cur.u32()? as usize;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let node = match cur.u8()? {
                0 => Node::Leaf { p: cur.f64()? },
                1 => Node::Split {
                    feature: cur.u32()?,
                    threshold: cur.f64()?,
                    left: cur.u32()?,
                    right: cur.u32()?,
                },
                tag => return Err(WhenError::BadModel(format!("unknown node tag {tag}"))),
            };
            nodes.push(node);
        }
        trees.push(Tree { nodes });
    }
    if cur.at != bytes.len() {
        return Err(WhenError::BadModel("trailing bytes after model".into()));
    }
    Ok(WhenModel {
        vectorizer,
        forest: ForestModel { trees, n_features, max_features, seed, class_weights },
    })
}

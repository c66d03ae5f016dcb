//! Non-neural description generators: title copying, span extraction,
//! LexRank sentence centrality, TF-IDF retrieval from a training index, and
//! the greedy extractive oracle as a diagnostic upper bound.
//!
//! Every generator reads the discussion only through a [`ContextView`], a
//! truncated window over the first `upto` utterances. Later utterances are
//! unreachable through the view, so a generator invoked at step `t` cannot
//! leak content from steps after `t`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Example, GeneratorOutput, Utterance, ValidationError};
use crate::filters::greedy_extractive_oracle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("{what} must be ≥ 1 (got {got})")]
    NotPositive { what: &'static str, got: usize },
    #[error("damping must lie in (0, 1) (got {0})")]
    BadDamping(f64),
    #[error("step {t} outside [1, {max}]")]
    StepOutOfRange { t: usize, max: usize },
    #[error("TF-IDF index needs a non-empty training set")]
    EmptyTrain,
    #[error("retrieval generator needs a TF-IDF index")]
    MissingIndex,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// A discussion truncated at a step: the title plus utterances `1..=step`.
/// The only way generators see an example.
#[derive(Debug, Clone, Copy)]
pub struct ContextView<'a> {
    example: &'a Example,
    upto: usize,
}

impl<'a> ContextView<'a> {
    /// View at the gold step `t_g`.
    pub fn at_tg(example: &'a Example) -> Self {
        ContextView { example, upto: example.t_g() }
    }

    /// View at an arbitrary step `t ∈ [1, T]`.
    pub fn at_step(example: &'a Example, t: usize) -> Result<Self, GeneratorError> {
        if t < 1 || t > example.n_steps() {
            return Err(GeneratorError::StepOutOfRange { t, max: example.n_steps() });
        }
        Ok(ContextView { example, upto: t })
    }

    pub fn example_id(&self) -> &'a str {
        self.example.id()
    }
    pub fn project(&self) -> &'a str {
        self.example.project()
    }
    pub fn title(&self) -> &'a [String] {
        self.example.title_tokens()
    }
    pub fn step(&self) -> usize {
        self.upto
    }
    /// Utterances visible in this view (`U_1..U_step`).
    pub fn utterances(&self) -> &'a [Utterance] {
        &self.example.utterances()[..self.upto]
    }
    /// The latest visible utterance.
    pub fn final_utterance(&self) -> &'a Utterance {
        self.example.utterance_at(self.upto)
    }
    /// All visible sentences as (utterance step, sentence index, tokens).
    pub fn sentences(&self) -> Vec<(usize, usize, &'a [String])> {
        self.example.sentences_upto(self.upto).collect()
    }
    /// The description is reference material, not context; only the
    /// diagnostic oracle generator may read it.
    fn reference(&self) -> &'a [String] {
        self.example.description_tokens()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanSource {
    /// The first utterance, `U_1`.
    First,
    /// The latest utterance in view (`U_{t_g}` at the gold step).
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Full,
    Lead,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfidfField {
    Title,
    Description,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfidfScope {
    Global,
    Project,
}

/// Default LexRank power-iteration damping; overridable per spec.
pub const LEXRANK_DAMPING: f64 = 0.85;

fn default_damping() -> f64 {
    LEXRANK_DAMPING
}

/// A generator selection with its parameters; `name()` is the identifier
/// recorded on outputs and used to pair systems in evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GeneratorSpec {
    CopyTitle,
    Span { source: SpanSource, span: SpanKind, k: usize },
    LexRank {
        threshold: f64,
        n_extract: usize,
        #[serde(default = "default_damping")]
        damping: f64,
    },
    Retrieval { field: TfidfField, scope: TfidfScope },
    OracleExtractive,
}

impl GeneratorSpec {
    pub fn name(&self) -> String {
        let source_name = |s: &SpanSource| match s {
            SpanSource::First => "u1",
            SpanSource::Final => "utg",
        };
        match self {
            GeneratorSpec::CopyTitle => "copy-title".to_string(),
            GeneratorSpec::Span { source, span: SpanKind::Full, .. } => {
                format!("full-{}", source_name(source))
            }
            GeneratorSpec::Span { source, span: SpanKind::Lead, k } => {
                format!("lead-{k}-{}", source_name(source))
            }
            GeneratorSpec::Span { source, span: SpanKind::Last, k } => {
                format!("last-{k}-{}", source_name(source))
            }
            GeneratorSpec::LexRank { threshold, n_extract, .. } => {
                format!("lexrank-{threshold}-{n_extract}")
            }
            GeneratorSpec::Retrieval { field, scope } => {
                let f = match field {
                    TfidfField::Title => "title",
                    TfidfField::Description => "desc",
                };
                let s = match scope {
                    TfidfScope::Global => "global",
                    TfidfScope::Project => "project",
                };
                format!("retrieval-{f}-{s}")
            }
            GeneratorSpec::OracleExtractive => "oracle-extractive".to_string(),
        }
    }
}

/// Emits the title verbatim as the description.
pub fn copy_title(view: &ContextView) -> Result<GeneratorOutput, GeneratorError> {
    Ok(GeneratorOutput::new(
        view.example_id(),
        GeneratorSpec::CopyTitle.name(),
        view.title().to_vec(),
        view.step(),
    )?)
}

/// Extracts a contiguous run of sentences from the first or latest visible
/// utterance: the whole utterance, the first `min(k, n)` sentences, or the
/// last `min(k, n)` sentences, in original order.
pub fn extract_span(
    view: &ContextView,
    source: SpanSource,
    span: SpanKind,
    k: usize,
) -> Result<GeneratorOutput, GeneratorError> {
    if k < 1 {
        return Err(GeneratorError::NotPositive { what: "span sentence count k", got: k });
    }
    let utterance = match source {
        SpanSource::First => view.example.utterance_at(1),
        SpanSource::Final => view.final_utterance(),
    };
    let n = utterance.n_sentences();
    let range = match span {
        SpanKind::Full => 0..n,
        SpanKind::Lead => 0..k.min(n),
        SpanKind::Last => n - k.min(n)..n,
    };
    let tokens: Vec<String> =
        range.flat_map(|s| utterance.sentence_tokens(s).iter().cloned()).collect();
    Ok(GeneratorOutput::new(
        view.example_id(),
        GeneratorSpec::Span { source, span, k }.name(),
        tokens,
        view.step(),
    )?)
}

/// Sparse TF-IDF vector: tf = 1 + ln(count), idf = ln(N/df), L2-normalized.
/// BTreeMap keeps summation order fixed so dot products are bit-stable.
pub(crate) fn tfidf_vector<'a>(
    tokens: &'a [String],
    idf: &HashMap<&str, f64>,
) -> BTreeMap<&'a str, f64> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut vec: BTreeMap<&str, f64> = BTreeMap::new();
    for (word, count) in counts {
        if let Some(&idf_w) = idf.get(word) {
            let w = (1.0 + (count as f64).ln()) * idf_w;
            if w != 0.0 {
                vec.insert(word, w);
            }
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

fn dot(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    // Iterate the smaller map for speed; BTreeMap order keeps sums stable.
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().map(|(w, x)| x * large.get(w).copied().unwrap_or(0.0)).sum()
}

pub(crate) fn idf_over<'a, I: Iterator<Item = &'a [String]>>(
    docs: I,
    n_docs: usize,
) -> HashMap<&'a str, f64> {
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let uniq: std::collections::BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for w in uniq {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    df.into_iter().map(|(w, d)| (w, (n_docs as f64 / d as f64).ln())).collect()
}

/// Stationary sentence centrality: cosine-similarity graph with edges at or
/// above `threshold` (no self-loops), power iteration on the row-normalized
/// adjacency with the given damping (degree-0 rows become uniform),
/// convergence when no component moves more than 1e-8, capped at 200
/// iterations. The result is a probability distribution.
fn lexrank_centrality(sentences: &[&[String]], threshold: f64, damping: f64) -> Vec<f64> {
    let n = sentences.len();
    let idf = idf_over(sentences.iter().copied(), n);
    let vectors: Vec<BTreeMap<&str, f64>> =
        sentences.iter().map(|s| tfidf_vector(s, &idf)).collect();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dot(&vectors[i], &vectors[j]) >= threshold {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let uniform = 1.0 / n as f64;
    let mut p = vec![uniform; n];
    for _ in 0..200 {
        let mut next = vec![(1.0 - damping) * uniform; n];
        for (j, targets) in neighbors.iter().enumerate() {
            if targets.is_empty() {
                for slot in next.iter_mut() {
                    *slot += damping * p[j] * uniform;
                }
            } else {
                let share = damping * p[j] / targets.len() as f64;
                for &i in targets {
                    next[i] += share;
                }
            }
        }
        let delta = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if delta < 1e-8 {
            break;
        }
    }
    p
}

/// Extracts the `n_extract` most central sentences of the visible discussion
/// (ties: earliest position), concatenated in original position order.
pub fn lexrank(
    view: &ContextView,
    threshold: f64,
    n_extract: usize,
    damping: f64,
) -> Result<GeneratorOutput, GeneratorError> {
    if n_extract < 1 {
        return Err(GeneratorError::NotPositive { what: "n_extract", got: n_extract });
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(GeneratorError::BadDamping(damping));
    }
    let flat = view.sentences();
    let sentences: Vec<&[String]> = flat.iter().map(|(_, _, s)| *s).collect();
    let scores = lexrank_centrality(&sentences, threshold, damping);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).expect("centrality is finite").then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = order.into_iter().take(n_extract).collect();
    chosen.sort_unstable();
    let tokens: Vec<String> =
        chosen.into_iter().flat_map(|i| sentences[i].iter().cloned()).collect();
    Ok(GeneratorOutput::new(
        view.example_id(),
        GeneratorSpec::LexRank { threshold, n_extract, damping }.name(),
        tokens,
        view.step(),
    )?)
}

/// TF-IDF index over one field of the training set. Immutable after build;
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct TfidfIndex {
    field: TfidfField,
    scope: TfidfScope,
    idf: HashMap<String, f64>,
    /// id → (project, timestamp, normalized vector, description tokens),
    /// sorted by id for deterministic scans.
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone)]
struct IndexEntry {
    id: String,
    project: String,
    ts: i64,
    vector: BTreeMap<String, f64>,
    description: Vec<String>,
}

/// What `retrieve` found: the nearest training example and its description.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit<'i> {
    pub train_id: &'i str,
    pub tokens: &'i [String],
    pub similarity: f64,
}

/// Builds the index: one TF-IDF vector per training example over the chosen
/// field, idf = ln(N/df) over that field's documents.
pub fn build_tfidf_index(
    train: &[Example],
    field: TfidfField,
    scope: TfidfScope,
) -> Result<TfidfIndex, GeneratorError> {
    if train.is_empty() {
        return Err(GeneratorError::EmptyTrain);
    }
    fn doc_of(e: &Example, field: TfidfField) -> &[String] {
        match field {
            TfidfField::Title => e.title_tokens(),
            TfidfField::Description => e.description_tokens(),
        }
    }
    let idf_borrowed = idf_over(train.iter().map(|e| doc_of(e, field)), train.len());
    let idf: HashMap<String, f64> =
        idf_borrowed.iter().map(|(w, v)| (w.to_string(), *v)).collect();
    let mut entries: Vec<IndexEntry> = train
        .iter()
        .map(|e| {
            let vector = tfidf_vector(doc_of(e, field), &idf_borrowed)
                .into_iter()
                .map(|(w, v)| (w.to_string(), v))
                .collect();
            IndexEntry {
                id: e.id().to_string(),
                project: e.project().to_string(),
                ts: e.resolution_ts(),
                vector,
                description: e.description_tokens().to_vec(),
            }
        })
        .collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(TfidfIndex { field, scope, idf, entries })
}

impl TfidfIndex {
    pub fn field(&self) -> TfidfField {
        self.field
    }
    pub fn scope(&self) -> TfidfScope {
        self.scope
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    #[cfg(test)]
    fn vector_of(&self, id: &str) -> Option<&BTreeMap<String, f64>> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.vector)
    }
}

/// Returns the training description whose indexed vector is most cosine-
/// similar to the query title. Ties (including all-zero similarity) go to
/// the earliest training timestamp, then lowest id. Project scope restricts
/// candidates to the same project, falling back to the whole index when the
/// project is unseen.
pub fn retrieve<'i>(
    query_title: &[String],
    index: &'i TfidfIndex,
    project: &str,
) -> Result<RetrievalHit<'i>, GeneratorError> {
    if index.is_empty() {
        return Err(GeneratorError::EmptyTrain);
    }
    let idf_borrowed: HashMap<&str, f64> =
        index.idf.iter().map(|(w, v)| (w.as_str(), *v)).collect();
    let query = tfidf_vector(query_title, &idf_borrowed);

    let same_project: Vec<&IndexEntry> = match index.scope {
        TfidfScope::Project => index.entries.iter().filter(|e| e.project == project).collect(),
        TfidfScope::Global => Vec::new(),
    };
    let candidates: Vec<&IndexEntry> = if same_project.is_empty() {
        index.entries.iter().collect()
    } else {
        same_project
    };

    let mut best: Option<(&IndexEntry, f64)> = None;
    for entry in candidates {
        let sim = query
            .iter()
            .map(|(w, x)| x * entry.vector.get(*w).copied().unwrap_or(0.0))
            .sum::<f64>();
        let better = match best {
            None => true,
            Some((cur, cur_sim)) => {
                sim > cur_sim
                    || (sim == cur_sim
                        && (entry.ts, entry.id.as_str()) < (cur.ts, cur.id.as_str()))
            }
        };
        if better {
            best = Some((entry, sim));
        }
    }
    let (entry, similarity) = best.expect("index verified non-empty");
    Ok(RetrievalHit { train_id: &entry.id, tokens: &entry.description, similarity })
}

/// Diagnostic upper bound: the greedy extractive oracle's selected sentences
/// concatenated in selection order. Empty when no sentence has positive
/// gain — the insufficiency signal.
pub fn oracle_extractive(view: &ContextView) -> Result<GeneratorOutput, GeneratorError> {
    let flat = view.sentences();
    let sentences: Vec<&[String]> = flat.iter().map(|(_, _, s)| *s).collect();
    let picks = greedy_extractive_oracle(&sentences, view.reference());
    let tokens: Vec<String> =
        picks.into_iter().flat_map(|i| sentences[i].iter().cloned()).collect();
    Ok(GeneratorOutput::new(
        view.example_id(),
        GeneratorSpec::OracleExtractive.name(),
        tokens,
        view.step(),
    )?)
}

/// Runs one generator over one view. `index` is required only for retrieval.
pub fn run_generator(
    spec: &GeneratorSpec,
    view: &ContextView,
    index: Option<&TfidfIndex>,
) -> Result<GeneratorOutput, GeneratorError> {
    match spec {
        GeneratorSpec::CopyTitle => copy_title(view),
        GeneratorSpec::Span { source, span, k } => extract_span(view, *source, *span, *k),
        GeneratorSpec::LexRank { threshold, n_extract, damping } => {
            lexrank(view, *threshold, *n_extract, *damping)
        }
        GeneratorSpec::Retrieval { .. } => {
            let index = index.ok_or(GeneratorError::MissingIndex)?;
            let hit = retrieve(view.title(), index, view.project())?;
            Ok(GeneratorOutput::new(
                view.example_id(),
                spec.name(),
                hit.tokens.to_vec(),
                view.step(),
            )?)
        }
        GeneratorSpec::OracleExtractive => oracle_extractive(view),
    }
}

/// The context step to generate at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepChoice {
    /// The gold step `t_g` of each example.
    Gold,
    /// A fixed step, clamped to each example's `T`.
    Fixed(usize),
}

/// Runs one generator over a corpus in parallel; outputs come back sorted by
/// example id regardless of thread scheduling.
pub fn generate_corpus(
    corpus: &[Example],
    spec: &GeneratorSpec,
    at: StepChoice,
    index: Option<&TfidfIndex>,
) -> Result<Vec<GeneratorOutput>, GeneratorError> {
    if let StepChoice::Fixed(t) = at {
        if t < 1 {
            return Err(GeneratorError::NotPositive { what: "generation step", got: t });
        }
    }
    if matches!(spec, GeneratorSpec::Retrieval { .. }) && index.is_none() {
        return Err(GeneratorError::MissingIndex);
    }
    let mut outputs = corpus
        .par_iter()
        .map(|example| {
            let view = match at {
                StepChoice::Gold => ContextView::at_tg(example),
                StepChoice::Fixed(t) => ContextView::at_step(example, t.min(example.n_steps()))?,
            };
            run_generator(spec, &view, index)
        })
        .collect::<Result<Vec<_>, GeneratorError>>()?;
    outputs.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(outputs)
}

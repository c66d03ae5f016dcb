//! Core data model: examples mined from bug-report discussions, raw issue
//! timelines, corpus splits, and the record types the pipeline stages exchange.
//!
//! Every type validates its invariants at construction *and* at
//! deserialization (via `#[serde(try_from = ...)]`), so a value that exists
//! is a value that holds. Fields are private; use the accessors.

pub mod jsonl;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An invariant violation. The message names the invariant that failed
/// (e.g. `"t_g ≤ T"`), so errors surfaced from file reads point at the rule,
/// not just the value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant violated: {0}")]
pub struct ValidationError(String);

impl ValidationError {
    pub(crate) fn new(msg: impl Into<String>) -> Self {
        ValidationError(msg.into())
    }

    /// The invariant description, without the "invariant violated" prefix.
    pub fn invariant(&self) -> &str {
        &self.0
    }
}

/// What kind of event a timeline entry is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Comment,
    Commit,
    PullRequest,
    Other,
}

/// Lifecycle state of an issue at archive time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueState {
    Open,
    Closed,
}

/// Where an example's reference description came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    CommitMessage,
    PrTitle,
}

impl fmt::Display for DescriptionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptionSource::CommitMessage => write!(f, "commit_message"),
            DescriptionSource::PrTitle => write!(f, "pr_title"),
        }
    }
}

/// One entry in a raw issue timeline: a comment, commit, PR, or other event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent")]
pub struct Event {
    kind: EventKind,
    actor: String,
    ts: i64,
    text: String,
    linked_issues: Vec<u64>,
}

#[derive(Deserialize)]
struct RawEvent {
    kind: EventKind,
    actor: String,
    ts: i64,
    text: String,
    linked_issues: Vec<u64>,
}

impl TryFrom<RawEvent> for Event {
    type Error = ValidationError;
    fn try_from(raw: RawEvent) -> Result<Self, Self::Error> {
        Event::new(raw.kind, raw.actor, raw.ts, raw.text, raw.linked_issues)
    }
}

impl Event {
    pub fn new(
        kind: EventKind,
        actor: impl Into<String>,
        ts: i64,
        text: impl Into<String>,
        linked_issues: Vec<u64>,
    ) -> Result<Self, ValidationError> {
        if ts < 1 {
            return Err(ValidationError::new("event ts is a positive epoch second"));
        }
        Ok(Event { kind, actor: actor.into(), ts, text: text.into(), linked_issues })
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }
    pub fn actor(&self) -> &str {
        &self.actor
    }
    pub fn ts(&self) -> i64 {
        self.ts
    }
    pub fn text(&self) -> &str {
        &self.text
    }
    pub fn linked_issues(&self) -> &[u64] {
        &self.linked_issues
    }
}

/// A raw issue discussion as archived or fetched: title, labels, state, and
/// the time-ordered event stream. Input to extraction; also usable unlabeled
/// as augmentation discussions for the when-classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimelineRepr")]
pub struct RawTimeline {
    project: String,
    issue_number: u64,
    title: String,
    labels: Vec<String>,
    state: IssueState,
    events: Vec<Event>,
}

#[derive(Deserialize)]
struct RawTimelineRepr {
    project: String,
    issue_number: u64,
    title: String,
    labels: Vec<String>,
    state: IssueState,
    events: Vec<Event>,
}

impl TryFrom<RawTimelineRepr> for RawTimeline {
    type Error = ValidationError;
    fn try_from(raw: RawTimelineRepr) -> Result<Self, Self::Error> {
        RawTimeline::new(raw.project, raw.issue_number, raw.title, raw.labels, raw.state, raw.events)
    }
}

impl RawTimeline {
    /// Builds a timeline; `events` must already be sorted by timestamp.
    pub fn new(
        project: impl Into<String>,
        issue_number: u64,
        title: impl Into<String>,
        labels: Vec<String>,
        state: IssueState,
        events: Vec<Event>,
    ) -> Result<Self, ValidationError> {
        let project = project.into();
        if project.is_empty() {
            return Err(ValidationError::new("timeline project is non-empty"));
        }
        if issue_number < 1 {
            return Err(ValidationError::new("issue_number ≥ 1"));
        }
        if events.windows(2).any(|w| w[0].ts > w[1].ts) {
            return Err(ValidationError::new("timeline events sorted by ts"));
        }
        Ok(RawTimeline { project, issue_number, title: title.into(), labels, state, events })
    }

    /// Builds a timeline from events in arbitrary order, sorting them by
    /// timestamp first (stable, so equal timestamps keep their given order).
    pub fn from_unordered(
        project: impl Into<String>,
        issue_number: u64,
        title: impl Into<String>,
        labels: Vec<String>,
        state: IssueState,
        mut events: Vec<Event>,
    ) -> Result<Self, ValidationError> {
        events.sort_by_key(Event::ts);
        RawTimeline::new(project, issue_number, title, labels, state, events)
    }

    pub fn project(&self) -> &str {
        &self.project
    }
    pub fn issue_number(&self) -> u64 {
        self.issue_number
    }
    pub fn title(&self) -> &str {
        &self.title
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn state(&self) -> IssueState {
        self.state
    }
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// The stable join key used for examples mined from this timeline.
    pub fn example_id(&self) -> String {
        format!("{}#{}", self.project, self.issue_number)
    }
}

/// One discussion utterance: the tokenized text of a comment, plus sentence
/// boundaries as `[start, end)` spans over the token list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUtterance")]
pub struct Utterance {
    t: usize,
    author: String,
    ts: i64,
    tokens: Vec<String>,
    sentences: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawUtterance {
    t: usize,
    author: String,
    ts: i64,
    tokens: Vec<String>,
    sentences: Vec<(usize, usize)>,
}

impl TryFrom<RawUtterance> for Utterance {
    type Error = ValidationError;
    fn try_from(raw: RawUtterance) -> Result<Self, Self::Error> {
        Utterance::new(raw.t, raw.author, raw.ts, raw.tokens, raw.sentences)
    }
}

impl Utterance {
    pub fn new(
        t: usize,
        author: impl Into<String>,
        ts: i64,
        tokens: Vec<String>,
        sentences: Vec<(usize, usize)>,
    ) -> Result<Self, ValidationError> {
        if t < 1 {
            return Err(ValidationError::new("utterance step t ≥ 1"));
        }
        if ts < 1 {
            return Err(ValidationError::new("utterance ts is a positive epoch second"));
        }
        if tokens.is_empty() {
            return Err(ValidationError::new("utterance tokens non-empty"));
        }
        // Sentence spans must partition [0, tokens.len()) contiguously.
        let mut expect = 0usize;
        for &(start, end) in &sentences {
            if start != expect || start >= end {
                return Err(ValidationError::new("sentence spans partition tokens"));
            }
            expect = end;
        }
        if expect != tokens.len() {
            return Err(ValidationError::new("sentence spans partition tokens"));
        }
        Ok(Utterance { t, author: author.into(), ts, tokens, sentences })
    }

    /// 1-based position of this utterance in the discussion.
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn author(&self) -> &str {
        &self.author
    }
    pub fn ts(&self) -> i64 {
        self.ts
    }
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
    /// Sentence boundaries as `[start, end)` token spans.
    pub fn sentence_spans(&self) -> &[(usize, usize)] {
        &self.sentences
    }
    pub fn n_sentences(&self) -> usize {
        self.sentences.len()
    }
    /// Tokens of the 0-based `s`-th sentence.
    pub fn sentence_tokens(&self, s: usize) -> &[String] {
        let (start, end) = self.sentences[s];
        &self.tokens[start..end]
    }
}

/// A supervised example: a discussion prefix plus the reference description
/// of the change that resolved it, and the gold step `t_g` — the number of
/// utterances posted strictly before the linked change event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExample")]
pub struct Example {
    id: String,
    project: String,
    title_tokens: Vec<String>,
    utterances: Vec<Utterance>,
    t_g: usize,
    description_tokens: Vec<String>,
    description_source: DescriptionSource,
    resolution_ts: i64,
}

#[derive(Deserialize)]
struct RawExample {
    id: String,
    project: String,
    title_tokens: Vec<String>,
    utterances: Vec<Utterance>,
    t_g: usize,
    description_tokens: Vec<String>,
    description_source: DescriptionSource,
    resolution_ts: i64,
}

impl TryFrom<RawExample> for Example {
    type Error = ValidationError;
    fn try_from(raw: RawExample) -> Result<Self, Self::Error> {
        Example::new(
            raw.id,
            raw.project,
            raw.title_tokens,
            raw.utterances,
            raw.t_g,
            raw.description_tokens,
            raw.description_source,
            raw.resolution_ts,
        )
    }
}

impl Example {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        project: impl Into<String>,
        title_tokens: Vec<String>,
        utterances: Vec<Utterance>,
        t_g: usize,
        description_tokens: Vec<String>,
        description_source: DescriptionSource,
        resolution_ts: i64,
    ) -> Result<Self, ValidationError> {
        let id = id.into();
        let project = project.into();
        if project.is_empty() {
            return Err(ValidationError::new("example project is non-empty"));
        }
        if !id.starts_with(&format!("{project}#")) {
            return Err(ValidationError::new("example id is project#issue_number"));
        }
        if title_tokens.is_empty() {
            return Err(ValidationError::new("title_tokens non-empty"));
        }
        if utterances.is_empty() {
            return Err(ValidationError::new("utterances non-empty"));
        }
        if description_tokens.is_empty() {
            return Err(ValidationError::new("description_tokens non-empty"));
        }
        for (i, u) in utterances.iter().enumerate() {
            if u.t() != i + 1 {
                return Err(ValidationError::new("utterance steps are 1..=T in order"));
            }
        }
        if t_g < 1 {
            return Err(ValidationError::new("t_g ≥ 1"));
        }
        if t_g > utterances.len() {
            return Err(ValidationError::new("t_g ≤ T"));
        }
        if resolution_ts < utterances[t_g - 1].ts() {
            return Err(ValidationError::new("resolution_ts ≥ ts of utterance t_g"));
        }
        Ok(Example {
            id,
            project,
            title_tokens,
            utterances,
            t_g,
            description_tokens,
            description_source,
            resolution_ts,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn project(&self) -> &str {
        &self.project
    }
    pub fn title_tokens(&self) -> &[String] {
        &self.title_tokens
    }
    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }
    /// Gold step: utterances 1..=t_g were posted before the linked change.
    pub fn t_g(&self) -> usize {
        self.t_g
    }
    pub fn description_tokens(&self) -> &[String] {
        &self.description_tokens
    }
    pub fn description_source(&self) -> DescriptionSource {
        self.description_source
    }
    pub fn resolution_ts(&self) -> i64 {
        self.resolution_ts
    }

    /// Total number of utterances, `T`.
    pub fn n_steps(&self) -> usize {
        self.utterances.len()
    }

    /// The 1-based `t`-th utterance. Panics if `t` is out of `[1, T]`.
    pub fn utterance_at(&self, t: usize) -> &Utterance {
        &self.utterances[t - 1]
    }

    /// Flattens the sentences of utterances `1..=upto` in discussion order as
    /// `(u, s, tokens)` with `u` the 1-based utterance step and `s` the
    /// 0-based sentence index within it.
    pub fn sentences_upto(&self, upto: usize) -> impl Iterator<Item = (usize, usize, &[String])> {
        self.utterances[..upto].iter().flat_map(|u| {
            (0..u.n_sentences()).map(move |s| (u.t(), s, u.sentence_tokens(s)))
        })
    }
}

/// Sorts a corpus by example id; the canonical order for derived artifacts.
pub fn sort_by_id(corpus: &mut [Example]) {
    corpus.sort_by(|a, b| a.id().cmp(b.id()));
}

/// Which part of a split an example belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Valid,
    Test,
}

impl fmt::Display for SplitPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPart::Train => write!(f, "train"),
            SplitPart::Valid => write!(f, "valid"),
            SplitPart::Test => write!(f, "test"),
        }
    }
}

/// A train/valid/test partition of a corpus, stored as id lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSplit")]
pub struct CorpusSplit {
    train: Vec<String>,
    valid: Vec<String>,
    test: Vec<String>,
}

#[derive(Deserialize)]
struct RawSplit {
    train: Vec<String>,
    valid: Vec<String>,
    test: Vec<String>,
}

impl TryFrom<RawSplit> for CorpusSplit {
    type Error = ValidationError;
    fn try_from(raw: RawSplit) -> Result<Self, Self::Error> {
        CorpusSplit::new(raw.train, raw.valid, raw.test)
    }
}

impl CorpusSplit {
    pub fn new(
        train: Vec<String>,
        valid: Vec<String>,
        test: Vec<String>,
    ) -> Result<Self, ValidationError> {
        let mut seen = BTreeSet::new();
        for id in train.iter().chain(&valid).chain(&test) {
            if !seen.insert(id.as_str()) {
                return Err(ValidationError::new("split parts are pairwise disjoint"));
            }
        }
        Ok(CorpusSplit { train, valid, test })
    }

    pub fn train(&self) -> &[String] {
        &self.train
    }
    pub fn valid(&self) -> &[String] {
        &self.valid
    }
    pub fn test(&self) -> &[String] {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self, part: SplitPart) -> &[String] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Valid => &self.valid,
            SplitPart::Test => &self.test,
        }
    }

    pub fn part_of(&self, id: &str) -> Option<SplitPart> {
        if self.train.iter().any(|x| x == id) {
            Some(SplitPart::Train)
        } else if self.valid.iter().any(|x| x == id) {
            Some(SplitPart::Valid)
        } else if self.test.iter().any(|x| x == id) {
            Some(SplitPart::Test)
        } else {
            None
        }
    }

    /// Checks that the split covers exactly the given corpus: every example id
    /// appears in some part, and every split id names a corpus example.
    pub fn verify_covers(&self, corpus: &[Example]) -> Result<(), ValidationError> {
        let corpus_ids: BTreeSet<&str> = corpus.iter().map(Example::id).collect();
        let split_ids: BTreeSet<&str> = self
            .train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .map(String::as_str)
            .collect();
        if let Some(missing) = corpus_ids.difference(&split_ids).next() {
            return Err(ValidationError::new(format!(
                "split covers the corpus (missing id {missing:?})"
            )));
        }
        if let Some(extra) = split_ids.difference(&corpus_ids).next() {
            return Err(ValidationError::new(format!(
                "split ids all name corpus examples (unknown id {extra:?})"
            )));
        }
        Ok(())
    }

    /// Selects the examples of one part, in the order the corpus provides them.
    pub fn select<'a>(&self, corpus: &'a [Example], part: SplitPart) -> Vec<&'a Example> {
        let wanted: BTreeSet<&str> = self.ids(part).iter().map(String::as_str).collect();
        corpus.iter().filter(|e| wanted.contains(e.id())).collect()
    }
}

/// Summary statistics over a corpus (or one split part of it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStats")]
pub struct CorpusStats {
    n_projects: usize,
    n_examples: usize,
    n_commit_messages: usize,
    n_pr_titles: usize,
    avg_t: f64,
    avg_t_g: f64,
    avg_utterance_len: f64,
    avg_title_len: f64,
    avg_description_len: f64,
}

#[derive(Deserialize)]
struct RawStats {
    n_projects: usize,
    n_examples: usize,
    n_commit_messages: usize,
    n_pr_titles: usize,
    avg_t: f64,
    avg_t_g: f64,
    avg_utterance_len: f64,
    avg_title_len: f64,
    avg_description_len: f64,
}

impl TryFrom<RawStats> for CorpusStats {
    type Error = ValidationError;
    fn try_from(raw: RawStats) -> Result<Self, Self::Error> {
        if raw.n_commit_messages + raw.n_pr_titles != raw.n_examples {
            return Err(ValidationError::new("n_commit_messages + n_pr_titles = n_examples"));
        }
        if raw.avg_t_g > raw.avg_t {
            return Err(ValidationError::new("avg_t_g ≤ avg_T"));
        }
        Ok(CorpusStats {
            n_projects: raw.n_projects,
            n_examples: raw.n_examples,
            n_commit_messages: raw.n_commit_messages,
            n_pr_titles: raw.n_pr_titles,
            avg_t: raw.avg_t,
            avg_t_g: raw.avg_t_g,
            avg_utterance_len: raw.avg_utterance_len,
            avg_title_len: raw.avg_title_len,
            avg_description_len: raw.avg_description_len,
        })
    }
}

impl CorpusStats {
    /// Computes statistics over a non-empty set of examples; `None` if empty.
    pub fn compute(corpus: &[Example]) -> Option<CorpusStats> {
        if corpus.is_empty() {
            return None;
        }
        let n = corpus.len() as f64;
        let projects: BTreeSet<&str> = corpus.iter().map(Example::project).collect();
        let n_commit = corpus
            .iter()
            .filter(|e| e.description_source() == DescriptionSource::CommitMessage)
            .count();
        let total_t: usize = corpus.iter().map(Example::n_steps).sum();
        let total_tg: usize = corpus.iter().map(Example::t_g).sum();
        let n_utterances: usize = total_t;
        let total_utt_tokens: usize = corpus
            .iter()
            .flat_map(|e| e.utterances().iter().map(|u| u.tokens().len()))
            .sum();
        let total_title: usize = corpus.iter().map(|e| e.title_tokens().len()).sum();
        let total_desc: usize = corpus.iter().map(|e| e.description_tokens().len()).sum();
        Some(CorpusStats {
            n_projects: projects.len(),
            n_examples: corpus.len(),
            n_commit_messages: n_commit,
            n_pr_titles: corpus.len() - n_commit,
            avg_t: total_t as f64 / n,
            avg_t_g: total_tg as f64 / n,
            avg_utterance_len: total_utt_tokens as f64 / n_utterances as f64,
            avg_title_len: total_title as f64 / n,
            avg_description_len: total_desc as f64 / n,
        })
    }

    pub fn n_projects(&self) -> usize {
        self.n_projects
    }
    pub fn n_examples(&self) -> usize {
        self.n_examples
    }
    pub fn n_commit_messages(&self) -> usize {
        self.n_commit_messages
    }
    pub fn n_pr_titles(&self) -> usize {
        self.n_pr_titles
    }
    /// Mean number of utterances per example.
    pub fn avg_t(&self) -> f64 {
        self.avg_t
    }
    pub fn avg_t_g(&self) -> f64 {
        self.avg_t_g
    }
    pub fn avg_utterance_len(&self) -> f64 {
        self.avg_utterance_len
    }
    pub fn avg_title_len(&self) -> f64 {
        self.avg_title_len
    }
    pub fn avg_description_len(&self) -> f64 {
        self.avg_description_len
    }
}

/// One sentence picked by the extractive oracle: 1-based utterance step `u`,
/// 0-based sentence index `s` within that utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OraclePick {
    pub u: usize,
    pub s: usize,
}

/// Per-example outcome of the noise filters: the three scores, the three
/// verdicts, and whether the example is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFilterReport")]
pub struct FilterReport {
    id: String,
    niwf: f64,
    overlap: f64,
    oracle: Vec<OraclePick>,
    generic: bool,
    uninformative: bool,
    insufficient: bool,
    kept: bool,
}

#[derive(Deserialize)]
struct RawFilterReport {
    id: String,
    niwf: f64,
    overlap: f64,
    oracle: Vec<OraclePick>,
    generic: bool,
    uninformative: bool,
    insufficient: bool,
    kept: bool,
}

impl TryFrom<RawFilterReport> for FilterReport {
    type Error = ValidationError;
    fn try_from(raw: RawFilterReport) -> Result<Self, Self::Error> {
        let built = FilterReport::new(
            raw.id,
            raw.niwf,
            raw.overlap,
            raw.oracle,
            raw.generic,
            raw.uninformative,
        )?;
        if built.insufficient != raw.insufficient {
            return Err(ValidationError::new("insufficient ⇔ oracle selection empty"));
        }
        if built.kept != raw.kept {
            return Err(ValidationError::new("kept ⇔ no filter fired"));
        }
        Ok(built)
    }
}

impl FilterReport {
    /// Builds a report from the scores and the generic/uninformative verdicts;
    /// `insufficient` and `kept` are derived, not caller-supplied.
    pub fn new(
        id: impl Into<String>,
        niwf: f64,
        overlap: f64,
        oracle: Vec<OraclePick>,
        generic: bool,
        uninformative: bool,
    ) -> Result<Self, ValidationError> {
        if !(0.0..=1.0).contains(&niwf) {
            return Err(ValidationError::new("niwf score in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&overlap) {
            return Err(ValidationError::new("overlap score in [0, 1]"));
        }
        let insufficient = oracle.is_empty();
        let kept = !(generic || uninformative || insufficient);
        Ok(FilterReport {
            id: id.into(),
            niwf,
            overlap,
            oracle,
            generic,
            uninformative,
            insufficient,
            kept,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn niwf(&self) -> f64 {
        self.niwf
    }
    pub fn overlap(&self) -> f64 {
        self.overlap
    }
    pub fn oracle(&self) -> &[OraclePick] {
        &self.oracle
    }
    pub fn generic(&self) -> bool {
        self.generic
    }
    pub fn uninformative(&self) -> bool {
        self.uninformative
    }
    pub fn insufficient(&self) -> bool {
        self.insufficient
    }
    pub fn kept(&self) -> bool {
        self.kept
    }
}

/// A generated description for one example: which generator produced it, the
/// tokens, and the discussion prefix length it saw. Tokens may be empty only
/// when a when-classifier never fired (the "no prediction" pipeline case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeneratorOutput")]
pub struct GeneratorOutput {
    id: String,
    generator: String,
    tokens: Vec<String>,
    at_step: usize,
}

#[derive(Deserialize)]
struct RawGeneratorOutput {
    id: String,
    generator: String,
    tokens: Vec<String>,
    at_step: usize,
}

impl TryFrom<RawGeneratorOutput> for GeneratorOutput {
    type Error = ValidationError;
    fn try_from(raw: RawGeneratorOutput) -> Result<Self, Self::Error> {
        GeneratorOutput::new(raw.id, raw.generator, raw.tokens, raw.at_step)
    }
}

impl GeneratorOutput {
    pub fn new(
        id: impl Into<String>,
        generator: impl Into<String>,
        tokens: Vec<String>,
        at_step: usize,
    ) -> Result<Self, ValidationError> {
        let generator = generator.into();
        if generator.is_empty() {
            return Err(ValidationError::new("generator name non-empty"));
        }
        if at_step < 1 {
            return Err(ValidationError::new("at_step ≥ 1"));
        }
        Ok(GeneratorOutput { id: id.into(), generator, tokens, at_step })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn generator(&self) -> &str {
        &self.generator
    }
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
    pub fn at_step(&self) -> usize {
        self.at_step
    }
}

/// A when-classifier decision for one example: the first step whose positive
/// probability crossed the threshold (`None` if none did within the cap), and
/// the probability recorded at every step that was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWhenPrediction")]
pub struct WhenPrediction {
    id: String,
    t_p: Option<usize>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWhenPrediction {
    id: String,
    t_p: Option<usize>,
    probs: Vec<f64>,
}

impl TryFrom<RawWhenPrediction> for WhenPrediction {
    type Error = ValidationError;
    fn try_from(raw: RawWhenPrediction) -> Result<Self, Self::Error> {
        WhenPrediction::new(raw.id, raw.t_p, raw.probs)
    }
}

impl WhenPrediction {
    pub fn new(
        id: impl Into<String>,
        t_p: Option<usize>,
        probs: Vec<f64>,
    ) -> Result<Self, ValidationError> {
        if probs.is_empty() {
            return Err(ValidationError::new("probs cover at least one step"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ValidationError::new("probs in [0, 1]"));
        }
        if let Some(t) = t_p {
            if t < 1 {
                return Err(ValidationError::new("t_p ≥ 1"));
            }
            // The scan stops at the crossing step, so its probability is last.
            if t != probs.len() {
                return Err(ValidationError::new("t_p = number of evaluated steps"));
            }
        }
        Ok(WhenPrediction { id: id.into(), t_p, probs })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn t_p(&self) -> Option<usize> {
        self.t_p
    }
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Checks the first-crossing property against a threshold: probabilities
    /// before `t_p` are below it, the one at `t_p` is at or above it.
    pub fn is_first_crossing(&self, threshold: f64) -> bool {
        match self.t_p {
            Some(t) => {
                self.probs[..t - 1].iter().all(|&p| p < threshold) && self.probs[t - 1] >= threshold
            }
            None => self.probs.iter().all(|&p| p < threshold),
        }
    }
}

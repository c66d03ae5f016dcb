//! Turning raw issue timelines into supervised examples.
//!
//! A [`RawTimeline`] (from an offline archive or a live fetch) either yields
//! exactly one [`Example`] or is rejected with exactly one [`RejectReason`];
//! nothing is dropped silently. Extraction applies a fixed sequence of
//! checks — bug-report screening, issue state, linked-change uniqueness,
//! discussion preprocessing, gold-step computation, actor counting, and a
//! description-vs-title comparison — each mapping to one reject code.
//!
//! The live-fetch client lives in [`github`].

pub mod github;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    DescriptionSource, EventKind, Example, IssueState, RawTimeline, Utterance, ValidationError,
};
use crate::text::stopwords::STOPWORDS;
use crate::text::{clean_description, preprocess_comment, tokenize, TokenizerConfig};
use crate::when::Discussion;

/// Knobs for the extraction checks.
///
/// `stopword_list` feeds only the description-vs-title comparison; discussion
/// text is preprocessed with stopwords intact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Require the timeline to look like a bug report (label or keyword).
    pub require_bug_label: bool,
    /// Lowercase whole-token keywords that mark a commit/PR as bug-related.
    pub bug_commit_keywords: Vec<String>,
    /// Minimum distinct actors (utterance authors plus the change author).
    pub min_actors: usize,
    /// Require the issue to be closed.
    pub require_closed: bool,
    /// Stopwords ignored when comparing the description against the title.
    pub stopword_list: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            require_bug_label: true,
            bug_commit_keywords: ["fix", "bug", "error", "fail", "repair", "defect", "patch"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            min_actors: 2,
            require_closed: true,
            stopword_list: STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl IngestConfig {
    /// Checks the config invariants: `min_actors ≥ 1`, and a non-empty
    /// keyword list whenever the bug-report screen is enabled (the screen
    /// consults the keywords, so an empty list would silently weaken it).
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.min_actors < 1 {
            return Err(IngestError::Config("min_actors is at least 1".into()));
        }
        if self.require_bug_label && self.bug_commit_keywords.is_empty() {
            return Err(IngestError::Config(
                "bug_commit_keywords must be non-empty when require_bug_label is set".into(),
            ));
        }
        Ok(())
    }
}

/// Why a timeline failed extraction. The code set is closed; `detail` is a
/// free-form human explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectCode {
    NotBug,
    NotClosed,
    TooFewActors,
    NoLinkedChange,
    MultipleDescriptions,
    MultiIssueChange,
    DescriptionEqualsTitle,
    EmptyDiscussion,
    TgOutOfRange,
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RejectCode::NotBug => "not_bug",
            RejectCode::NotClosed => "not_closed",
            RejectCode::TooFewActors => "too_few_actors",
            RejectCode::NoLinkedChange => "no_linked_change",
            RejectCode::MultipleDescriptions => "multiple_descriptions",
            RejectCode::MultiIssueChange => "multi_issue_change",
            RejectCode::DescriptionEqualsTitle => "description_equals_title",
            RejectCode::EmptyDiscussion => "empty_discussion",
            RejectCode::TgOutOfRange => "t_g_out_of_range",
        };
        f.write_str(name)
    }
}

/// One primary reject code plus a human-readable detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectReason {
    pub code: RejectCode,
    pub detail: String,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

/// The total outcome of [`extract_example`]: every timeline maps to exactly
/// one of these.
#[derive(Debug, Clone, PartialEq)]
pub enum Extraction {
    Accepted(Box<Example>),
    Rejected(RejectReason),
}

impl Extraction {
    pub fn example(&self) -> Option<&Example> {
        match self {
            Extraction::Accepted(e) => Some(e),
            Extraction::Rejected(_) => None,
        }
    }

    pub fn reject(&self) -> Option<&RejectReason> {
        match self {
            Extraction::Accepted(_) => None,
            Extraction::Rejected(r) => Some(r),
        }
    }
}

/// Errors outside the accept/reject universe: a bad config, or an internal
/// validation failure (a bug — the checks are meant to pre-empt them all).
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("ingest config: {0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Whole lowercase alphanumeric tokens of `text` (split on everything else).
/// This is deliberately simpler than the model tokenizer: keyword screening
/// wants raw words, not subtokenized ones.
fn whole_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
}

/// True iff any label contains `"bug"` case-insensitively, or any commit/PR
/// event's text contains a configured keyword as a whole lowercase token.
pub fn is_bug_report(timeline: &RawTimeline, cfg: &IngestConfig) -> bool {
    if timeline.labels().iter().any(|l| l.to_lowercase().contains("bug")) {
        return true;
    }
    let keywords: HashSet<String> =
        cfg.bug_commit_keywords.iter().map(|k| k.to_lowercase()).collect();
    timeline
        .events()
        .iter()
        .filter(|e| matches!(e.kind(), EventKind::Commit | EventKind::PullRequest))
        .any(|e| whole_tokens(e.text()).any(|w| keywords.contains(&w)))
}

/// Classifies the commit/PR events of a timeline by their issue links.
struct ChangeScan {
    /// Indices of events linked to this issue alone (or implicitly).
    candidates: Vec<usize>,
    /// Links of the first event that names this issue together with others.
    multi_linked: Option<Vec<u64>>,
}

fn scan_changes(timeline: &RawTimeline) -> ChangeScan {
    let own = timeline.issue_number();
    let mut scan = ChangeScan { candidates: Vec::new(), multi_linked: None };
    for (i, event) in timeline.events().iter().enumerate() {
        if !matches!(event.kind(), EventKind::Commit | EventKind::PullRequest) {
            continue;
        }
        let links: BTreeSet<u64> = event.linked_issues().iter().copied().collect();
        if links.is_empty() || (links.len() == 1 && links.contains(&own)) {
            // No explicit links means implicitly linked to the issue whose
            // timeline carries the event.
            scan.candidates.push(i);
        } else if links.contains(&own) {
            if scan.multi_linked.is_none() {
                scan.multi_linked = Some(links.into_iter().collect());
            }
        }
        // Links that name only other issues: the change belongs elsewhere
        // and simply does not count as linked to this issue.
    }
    scan
}

/// Runs the full extraction procedure on one timeline.
///
/// Checks run in a fixed order so each rejected timeline carries exactly one
/// primary code: bug screen, closed screen, linked-change analysis
/// (multi-issue, then none, then several), discussion preprocessing
/// (empty discussion / empty title), gold-step range, actor count, and
/// finally the description-vs-title comparison.
///
/// The gold step `t_g` counts surviving utterances posted before the change
/// event; an utterance sharing the change's timestamp counts as preceding
/// when it appears first in the (timestamp-sorted, stable) event order.
pub fn extract_example(
    timeline: &RawTimeline,
    cfg: &IngestConfig,
) -> Result<Extraction, IngestError> {
    cfg.validate()?;
    let rejected = |code: RejectCode, detail: String| {
        Ok(Extraction::Rejected(RejectReason { code, detail }))
    };

    if cfg.require_bug_label && !is_bug_report(timeline, cfg) {
        return rejected(
            RejectCode::NotBug,
            "no label contains \"bug\" and no commit/PR text contains a bug keyword".into(),
        );
    }
    if cfg.require_closed && timeline.state() != IssueState::Closed {
        return rejected(RejectCode::NotClosed, "issue is not closed".into());
    }

    let scan = scan_changes(timeline);
    if let Some(links) = scan.multi_linked {
        let listed: Vec<String> = links.iter().map(u64::to_string).collect();
        return rejected(
            RejectCode::MultiIssueChange,
            format!("a change event links issues {}", listed.join(", ")),
        );
    }
    if scan.candidates.is_empty() {
        return rejected(
            RejectCode::NoLinkedChange,
            "no commit or PR event is linked to this issue".into(),
        );
    }
    if scan.candidates.len() > 1 {
        return rejected(
            RejectCode::MultipleDescriptions,
            format!("{} commit/PR events are linked to this issue", scan.candidates.len()),
        );
    }
    let change_idx = scan.candidates[0];
    let change = &timeline.events()[change_idx];

    // Preprocess comments into utterances; comments that come out empty are
    // dropped, steps are reassigned consecutively, and t_g counts survivors
    // positioned before the change event.
    let tok_cfg = TokenizerConfig::default();
    let mut utterances = Vec::new();
    let mut before_change = 0usize;
    for (i, event) in timeline.events().iter().enumerate() {
        if event.kind() != EventKind::Comment {
            continue;
        }
        if let Some((tokens, sentences)) = preprocess_comment(event.text(), &tok_cfg) {
            let step = utterances.len() + 1;
            utterances.push(Utterance::new(step, event.actor(), event.ts(), tokens, sentences)?);
            if i < change_idx {
                before_change += 1;
            }
        }
    }
    if utterances.is_empty() {
        return rejected(
            RejectCode::EmptyDiscussion,
            "no comment survives preprocessing".into(),
        );
    }
    let title_tokens = tokenize(timeline.title(), &tok_cfg);
    if title_tokens.is_empty() {
        return rejected(
            RejectCode::EmptyDiscussion,
            "issue title has no tokens".into(),
        );
    }
    let t_g = before_change;
    if t_g == 0 {
        return rejected(
            RejectCode::TgOutOfRange,
            "the change event precedes every surviving utterance".into(),
        );
    }

    let mut actors: BTreeSet<&str> = utterances.iter().map(Utterance::author).collect();
    actors.insert(change.actor());
    if actors.len() < cfg.min_actors {
        return rejected(
            RejectCode::TooFewActors,
            format!("{} distinct actors, {} required", actors.len(), cfg.min_actors),
        );
    }

    let description = clean_description(change.text());
    let stop: HashSet<String> = cfg.stopword_list.iter().map(|s| s.to_lowercase()).collect();
    let desc_content: BTreeSet<&str> = description
        .iter()
        .map(String::as_str)
        .filter(|w| !stop.contains(*w))
        .collect();
    let title_content: HashSet<&str> = title_tokens
        .iter()
        .map(String::as_str)
        .filter(|w| !stop.contains(*w))
        .collect();
    if desc_content.iter().all(|w| title_content.contains(w)) {
        let detail = if description.is_empty() {
            "description is empty after cleaning".to_string()
        } else if desc_content.is_empty() {
            "description contains only stopwords".to_string()
        } else {
            "every content word of the description already appears in the title".to_string()
        };
        return rejected(RejectCode::DescriptionEqualsTitle, detail);
    }

    let source = match change.kind() {
        EventKind::Commit => DescriptionSource::CommitMessage,
        EventKind::PullRequest => DescriptionSource::PrTitle,
        _ => unreachable!("change candidates are commit or PR events"),
    };
    let example = Example::new(
        timeline.example_id(),
        timeline.project(),
        title_tokens,
        utterances,
        t_g,
        description,
        source,
        change.ts(),
    )?;
    Ok(Extraction::Accepted(Box::new(example)))
}

/// Accepted examples (sorted by id) and per-timeline rejections (sorted by
/// the timeline's example id) from a whole archive. The map over timelines is
/// pure, so it runs in parallel; the sorts fix the output order regardless of
/// thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveOutcome {
    pub examples: Vec<Example>,
    pub rejects: Vec<(String, RejectReason)>,
}

pub fn extract_archive(
    timelines: &[RawTimeline],
    cfg: &IngestConfig,
) -> Result<ArchiveOutcome, IngestError> {
    use rayon::prelude::*;
    cfg.validate()?;
    let results: Vec<(String, Extraction)> = timelines
        .par_iter()
        .map(|tl| extract_example(tl, cfg).map(|x| (tl.example_id(), x)))
        .collect::<Result<_, _>>()?;
    let mut outcome = ArchiveOutcome { examples: Vec::new(), rejects: Vec::new() };
    for (id, extraction) in results {
        match extraction {
            Extraction::Accepted(example) => outcome.examples.push(*example),
            Extraction::Rejected(reason) => outcome.rejects.push((id, reason)),
        }
    }
    outcome.examples.sort_by(|a, b| a.id().cmp(b.id()));
    outcome.rejects.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(outcome)
}

/// Counts rejections per code, in a fixed (code-ordered) map.
pub fn reject_histogram(rejects: &[(String, RejectReason)]) -> BTreeMap<RejectCode, usize> {
    let mut hist = BTreeMap::new();
    for (_, reason) in rejects {
        *hist.entry(reason.code).or_insert(0) += 1;
    }
    hist
}

/// Preprocesses a timeline into an unlabeled [`Discussion`] (for classifier
/// augmentation), ignoring change events entirely. Returns `None` when the
/// title or every comment comes out empty.
pub fn extract_discussion(timeline: &RawTimeline) -> Option<Discussion> {
    let tok_cfg = TokenizerConfig::default();
    let title_tokens = tokenize(timeline.title(), &tok_cfg);
    let mut utterances = Vec::new();
    for event in timeline.events() {
        if event.kind() != EventKind::Comment {
            continue;
        }
        if let Some((tokens, sentences)) = preprocess_comment(event.text(), &tok_cfg) {
            let step = utterances.len() + 1;
            let utterance =
                Utterance::new(step, event.actor(), event.ts(), tokens, sentences).ok()?;
            utterances.push(utterance);
        }
    }
    Discussion::new(timeline.example_id(), title_tokens, utterances).ok()
}

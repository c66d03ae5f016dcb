//! Noise filters over mined examples, time-based corpus splitting, and
//! corpus statistics.
//!
//! Three filters fire independently per example, each with a recorded score:
//!
//! * **generic** — the description's normalized inverse word frequency
//!   (NIWF) falls below a threshold: every word is common, so the message
//!   says nothing specific ("fix bug").
//! * **uninformative** — at least half of the description's unique
//!   non-stopword tokens already appear in the title: the description adds
//!   nothing over the title.
//! * **insufficient** — a greedy extractive oracle cannot select even one
//!   discussion sentence with positive gain against the description: the
//!   discussion does not contain the information needed to produce it.
//!
//! Every report carries all three scores; when counting drops, attribution
//! goes to the first failing filter in the order generic → uninformative →
//! insufficient.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    CorpusSplit, CorpusStats, Example, FilterReport, OraclePick, ValidationError,
};
use crate::text::stopwords::stopword_set;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("IWF table needs a non-empty training set")]
    EmptyTrainingSet,
    #[error("description token list is empty")]
    EmptyDescription,
    #[error("percentile {0} outside (0, 1)")]
    BadPercentile(f64),
    #[error("no score values to take a percentile of")]
    EmptyScores,
    #[error("description of {id:?} has no non-stopword tokens")]
    AllStopwordDescription { id: String },
    #[error("cannot split {n} examples three ways (need at least 3)")]
    SplitTooSmall { n: usize },
    #[error("split fractions must be positive and sum to 1 (got {0}, {1}, {2})")]
    BadFractions(f64, f64, f64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Document frequencies over training descriptions, with the normalization
/// bounds of the inverse word frequency `IWF(w) = ln(1+N) / (1 + df(w))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwfTable {
    doc_count: usize,
    doc_freq: HashMap<String, usize>,
    min_iwf: f64,
    max_iwf: f64,
}

/// Builds the IWF table from training descriptions. `df(w)` counts the
/// descriptions containing `w` (presence, not occurrences); the min/max IWF
/// over the observed vocabulary is recorded for normalization.
pub fn build_iwf_table(train_descriptions: &[Vec<String>]) -> Result<IwfTable, FilterError> {
    if train_descriptions.is_empty() {
        return Err(FilterError::EmptyTrainingSet);
    }
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    for desc in train_descriptions {
        let uniq: BTreeSet<&String> = desc.iter().collect();
        for word in uniq {
            *doc_freq.entry(word.clone()).or_insert(0) += 1;
        }
    }
    let n = train_descriptions.len();
    let numer = (1.0 + n as f64).ln();
    let mut min_iwf = f64::INFINITY;
    let mut max_iwf = f64::NEG_INFINITY;
    for &df in doc_freq.values() {
        let iwf = numer / (1.0 + df as f64);
        min_iwf = min_iwf.min(iwf);
        max_iwf = max_iwf.max(iwf);
    }
    if doc_freq.is_empty() {
        // Descriptions can't be empty (type invariant), so this is unreachable
        // from validated data, but keep the table well-formed regardless.
        min_iwf = 0.0;
        max_iwf = 0.0;
    }
    Ok(IwfTable { doc_count: n, doc_freq, min_iwf, max_iwf })
}

impl IwfTable {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    fn iwf(&self, word: &str) -> f64 {
        let df = self.doc_freq.get(word).copied().unwrap_or(0);
        (1.0 + self.doc_count as f64).ln() / (1.0 + df as f64)
    }

    /// Min-max-normalized IWF, clamped to [0, 1]. Unseen words have document
    /// frequency 0, the maximal IWF, and clamp to 1.0. When the observed
    /// vocabulary has a single IWF value (min = max), words at that value
    /// score 0 and rarer (unseen) words score 1.
    pub fn normalized(&self, word: &str) -> f64 {
        let iwf = self.iwf(word);
        if self.max_iwf > self.min_iwf {
            ((iwf - self.min_iwf) / (self.max_iwf - self.min_iwf)).clamp(0.0, 1.0)
        } else if iwf > self.max_iwf {
            1.0
        } else {
            0.0
        }
    }
}

/// NIWF specificity score of a description: the maximum normalized IWF over
/// its words. One rare word is enough to make a description specific.
pub fn niwf(description: &[String], table: &IwfTable) -> Result<f64, FilterError> {
    if description.is_empty() {
        return Err(FilterError::EmptyDescription);
    }
    Ok(description.iter().map(|w| table.normalized(w)).fold(0.0, f64::max))
}

/// Nearest-rank percentile: the value at 1-based index `⌈p·n⌉` of the
/// ascending sort. A small epsilon guards `p·n` values that are integers in
/// exact arithmetic but land just above in floating point.
pub fn niwf_threshold(train_scores: &[f64], percentile: f64) -> Result<f64, FilterError> {
    if train_scores.is_empty() {
        return Err(FilterError::EmptyScores);
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(FilterError::BadPercentile(percentile));
    }
    let mut sorted = train_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are not NaN"));
    let rank = (percentile * sorted.len() as f64 - 1e-9).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Fraction of the description's unique non-stopword tokens that also appear
/// in the title. The title side is matched raw (no stopword removal).
pub fn title_overlap(
    description: &[String],
    title: &[String],
    stopwords: &HashSet<&str>,
) -> Result<f64, FilterError> {
    let uniq: BTreeSet<&str> = description
        .iter()
        .map(String::as_str)
        .filter(|w| !stopwords.contains(*w))
        .collect();
    if uniq.is_empty() {
        return Err(FilterError::EmptyDescription);
    }
    let title_set: HashSet<&str> = title.iter().map(String::as_str).collect();
    let hits = uniq.iter().filter(|w| title_set.contains(*w)).count();
    Ok(hits as f64 / uniq.len() as f64)
}

/// n-gram bag of one sentence (n-grams never span sentences).
fn gram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Running match state for one n-gram order: selected-bag counts, total
/// selected grams, and the clipped match count against the reference. All
/// integers, so scores recomputed from them are bit-identical to a
/// from-scratch evaluation of the same selection.
struct GramState<'a> {
    reference: HashMap<&'a [String], usize>,
    ref_total: usize,
    selected: HashMap<&'a [String], usize>,
    total: usize,
    matches: usize,
}

impl<'a> GramState<'a> {
    fn new(reference: &'a [String], n: usize) -> Self {
        let ref_counts = gram_counts(reference, n);
        let ref_total = reference.len().saturating_sub(n - 1);
        GramState { reference: ref_counts, ref_total, selected: HashMap::new(), total: 0, matches: 0 }
    }

    /// Clipped matches and total if `candidate` were added.
    fn with_candidate(&self, candidate: &HashMap<&'a [String], usize>, cand_total: usize) -> (usize, usize) {
        let mut matches = self.matches;
        for (gram, &add) in candidate {
            let ref_count = self.reference.get(gram).copied().unwrap_or(0);
            let have = self.selected.get(gram).copied().unwrap_or(0);
            matches += ref_count.min(have + add) - ref_count.min(have);
        }
        (matches, self.total + cand_total)
    }

    fn commit(&mut self, candidate: &HashMap<&'a [String], usize>, cand_total: usize) {
        let (matches, total) = self.with_candidate(candidate, cand_total);
        self.matches = matches;
        self.total = total;
        for (gram, &add) in candidate {
            *self.selected.entry(gram).or_insert(0) += add;
        }
    }
}

fn f1(matches: usize, n_hyp: usize, n_ref: usize) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let p = matches as f64 / n_hyp as f64;
    let r = matches as f64 / n_ref as f64;
    2.0 * p * r / (p + r)
}

fn oracle_score(s1: (usize, usize), s2: (usize, usize), ref1: usize, ref2: usize) -> f64 {
    (f1(s1.0, s1.1, ref1) + f1(s2.0, s2.1, ref2)) / 2.0
}

/// Greedily selects sentences approximating the reference.
///
/// Score of a selection = mean of ROUGE-1 F1 and ROUGE-2 F1 of the combined
/// per-sentence n-gram bags against the reference. Each step adds the
/// sentence with the largest strictly positive score gain (ties: earliest
/// index); stops when no sentence improves the score. Returns indices in
/// selection order; empty when the discussion cannot cover the reference at
/// all.
pub fn greedy_extractive_oracle(sentences: &[&[String]], reference: &[String]) -> Vec<usize> {
    let cand_bags1: Vec<HashMap<&[String], usize>> =
        sentences.iter().map(|s| gram_counts(s, 1)).collect();
    let cand_bags2: Vec<HashMap<&[String], usize>> =
        sentences.iter().map(|s| gram_counts(s, 2)).collect();
    let totals1: Vec<usize> = sentences.iter().map(|s| s.len()).collect();
    let totals2: Vec<usize> = sentences.iter().map(|s| s.len().saturating_sub(1)).collect();

    let mut state1 = GramState::new(reference, 1);
    let mut state2 = GramState::new(reference, 2);
    let mut picked = vec![false; sentences.len()];
    let mut selection = Vec::new();
    let mut current = 0.0f64;

    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..sentences.len() {
            if picked[i] {
                continue;
            }
            let score = oracle_score(
                state1.with_candidate(&cand_bags1[i], totals1[i]),
                state2.with_candidate(&cand_bags2[i], totals2[i]),
                state1.ref_total,
                state2.ref_total,
            );
            // Strict comparison: ties keep the earliest candidate.
            if score > current && best.map_or(true, |(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        match best {
            Some((i, score)) => {
                state1.commit(&cand_bags1[i], totals1[i]);
                state2.commit(&cand_bags2[i], totals2[i]);
                picked[i] = true;
                selection.push(i);
                current = score;
            }
            None => return selection,
        }
    }
}

/// Runs all three filters over a corpus. Scores are computed for every
/// example regardless of earlier verdicts; reports and the kept subset come
/// back sorted by id, independent of thread count.
pub fn apply_filters(
    corpus: &[Example],
    table: &IwfTable,
    niwf_t: f64,
    overlap_t: f64,
) -> Result<(Vec<FilterReport>, Vec<Example>), FilterError> {
    let stopwords = stopword_set();
    let mut reports = corpus
        .par_iter()
        .map(|example| {
            let niwf_score = niwf(example.description_tokens(), table)?;
            let overlap = title_overlap(example.description_tokens(), example.title_tokens(), stopwords)
                .map_err(|_| FilterError::AllStopwordDescription { id: example.id().to_string() })?;
            let flat: Vec<(usize, usize, &[String])> =
                example.sentences_upto(example.n_steps()).collect();
            let sentences: Vec<&[String]> = flat.iter().map(|(_, _, s)| *s).collect();
            let picks: Vec<OraclePick> = greedy_extractive_oracle(&sentences, example.description_tokens())
                .into_iter()
                .map(|i| OraclePick { u: flat[i].0, s: flat[i].1 })
                .collect();
            let report = FilterReport::new(
                example.id(),
                niwf_score,
                overlap,
                picks,
                niwf_score < niwf_t,
                overlap >= overlap_t,
            )?;
            Ok(report)
        })
        .collect::<Result<Vec<_>, FilterError>>()?;
    reports.sort_by(|a, b| a.id().cmp(b.id()));
    let kept_ids: HashSet<&str> =
        reports.iter().filter(|r| r.kept()).map(FilterReport::id).collect();
    let mut kept: Vec<Example> =
        corpus.iter().filter(|e| kept_ids.contains(e.id())).cloned().collect();
    kept.sort_by(|a, b| a.id().cmp(b.id()));
    Ok((reports, kept))
}

/// Drop accounting with attribution to the first failing filter, in the
/// order generic → uninformative → insufficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub generic: usize,
    pub uninformative: usize,
    pub insufficient: usize,
    pub kept: usize,
}

pub fn drop_attribution(reports: &[FilterReport]) -> DropCounts {
    let mut counts = DropCounts { generic: 0, uninformative: 0, insufficient: 0, kept: 0 };
    for r in reports {
        if r.generic() {
            counts.generic += 1;
        } else if r.uninformative() {
            counts.uninformative += 1;
        } else if r.insufficient() {
            counts.insufficient += 1;
        } else {
            counts.kept += 1;
        }
    }
    counts
}

/// A time split plus whether the strict timestamp ordering between parts
/// holds (it can only be violated by tied timestamps at a boundary, which
/// the caller should surface as a warning).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub split: CorpusSplit,
    pub strict: bool,
}

/// Splits a corpus chronologically by resolution timestamp (ties broken by
/// id): the earliest `⌊f_train·n⌋` examples train, the next `⌊f_valid·n⌋`
/// validate, the remainder test.
pub fn split_by_time(
    corpus: &[Example],
    fractions: (f64, f64, f64),
) -> Result<SplitOutcome, FilterError> {
    let (ft, fv, fs) = fractions;
    if !(ft > 0.0 && fv > 0.0 && fs > 0.0) || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(FilterError::BadFractions(ft, fv, fs));
    }
    let n = corpus.len();
    if n < 3 {
        return Err(FilterError::SplitTooSmall { n });
    }
    let mut order: Vec<&Example> = corpus.iter().collect();
    order.sort_by(|a, b| a.resolution_ts().cmp(&b.resolution_ts()).then_with(|| a.id().cmp(b.id())));
    // Epsilon so fractions that hit an integer exactly are not floored down
    // by floating-point representation (e.g. 0.7 · 10).
    let n_train = ((ft * n as f64 + 1e-9).floor() as usize).min(n);
    let n_valid = ((fv * n as f64 + 1e-9).floor() as usize).min(n - n_train);
    let ids = |range: &[&Example]| range.iter().map(|e| e.id().to_string()).collect::<Vec<_>>();
    let split = CorpusSplit::new(
        ids(&order[..n_train]),
        ids(&order[n_train..n_train + n_valid]),
        ids(&order[n_train + n_valid..]),
    )?;
    let boundary_strict = |left: &[&Example], right: &[&Example]| match (left.last(), right.first()) {
        (Some(a), Some(b)) => a.resolution_ts() < b.resolution_ts(),
        _ => true, // an empty part imposes no ordering constraint
    };
    let strict = boundary_strict(&order[..n_train], &order[n_train..n_train + n_valid])
        && boundary_strict(&order[..n_train + n_valid], &order[n_train + n_valid..])
        && boundary_strict(&order[n_train..n_train + n_valid], &order[n_train + n_valid..]);
    Ok(SplitOutcome { split, strict })
}

/// Statistics for the whole corpus and, when a split is given, per part.
/// Empty parts have no statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBundle {
    pub total: CorpusStats,
    pub train: Option<CorpusStats>,
    pub valid: Option<CorpusStats>,
    pub test: Option<CorpusStats>,
}

pub fn corpus_stats(
    corpus: &[Example],
    split: Option<&CorpusSplit>,
) -> Result<StatsBundle, FilterError> {
    let total = CorpusStats::compute(corpus).ok_or(FilterError::EmptyCorpus)?;
    let (train, valid, test) = match split {
        Some(split) => {
            split.verify_covers(corpus)?;
            let part = |ids: &[String]| {
                let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
                let members: Vec<Example> =
                    corpus.iter().filter(|e| wanted.contains(e.id())).cloned().collect();
                CorpusStats::compute(&members)
            };
            (part(split.train()), part(split.valid()), part(split.test()))
        }
        None => (None, None, None),
    };
    Ok(StatsBundle { total, train, valid, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DescriptionSource;
    use crate::corpus::Utterance;
    use rand::Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(|t| t.to_string()).collect()
    }

    fn descs(list: &[&str]) -> Vec<Vec<String>> {
        list.iter().map(|d| toks(d)).collect()
    }

    /// Example with one single-sentence utterance per `discussion` entry.
    fn example(id: &str, title: &str, discussion: &[&str], desc: &str, ts: i64) -> Example {
        let utterances: Vec<Utterance> = discussion
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let tokens = toks(text);
                let len = tokens.len();
                Utterance::new(i + 1, "alice", 10 + i as i64, tokens, vec![(0, len)]).unwrap()
            })
            .collect();
        let t_g = utterances.len();
        Example::new(
            format!("p#{id}"),
            "p",
            toks(title),
            utterances,
            t_g,
            toks(desc),
            DescriptionSource::CommitMessage,
            ts,
        )
        .unwrap()
    }

    #[test]
    fn iwf_table_matches_hand_document_counts() {
        // 4 descriptions; df: a=3, b=2, c=1, d=1. Normalized IWF cancels the
        // ln(5) numerator: a → 0, b → (1/3−1/4)/(1/2−1/4) = 1/3, c,d → 1.
        let table =
            build_iwf_table(&descs(&["a b", "a c", "a", "b d"])).unwrap();
        assert_eq!(table.doc_count(), 4);
        assert!((table.normalized("a") - 0.0).abs() < 1e-12);
        assert!((table.normalized("b") - 1.0 / 3.0).abs() < 1e-12);
        assert!((table.normalized("c") - 1.0).abs() < 1e-12);
        assert!((table.normalized("unseen") - 1.0).abs() < 1e-12, "df 0 clamps to 1");
        // Repeated words count once per description.
        let table2 = build_iwf_table(&descs(&["a a a", "b"])).unwrap();
        assert_eq!(table2.normalized("a"), table2.normalized("b"));
    }

    #[test]
    fn niwf_takes_the_max_over_words() {
        let table = build_iwf_table(&descs(&["a b", "a c", "a", "b d"])).unwrap();
        assert_eq!(niwf(&toks("a"), &table).unwrap(), 0.0);
        assert_eq!(niwf(&toks("a c"), &table).unwrap(), 1.0, "rarest word dominates");
        assert!((niwf(&toks("a b"), &table).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(niwf(&[], &table), Err(FilterError::EmptyDescription)));
    }

    #[test]
    fn niwf_degenerate_single_description() {
        let table = build_iwf_table(&descs(&["fix"])).unwrap();
        // Single IWF value: observed word scores 0, unseen words score 1.
        assert_eq!(niwf(&toks("fix"), &table).unwrap(), 0.0);
        assert_eq!(niwf(&toks("anything"), &table).unwrap(), 1.0);
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(niwf_threshold(&grid, 0.10).unwrap(), 0.10);
        assert_eq!(niwf_threshold(&grid, 0.101).unwrap(), 0.11, "⌈10.1⌉ = 11th value");
        assert_eq!(niwf_threshold(&[0.3, 0.3, 0.3], 0.5).unwrap(), 0.3);
        assert_eq!(niwf_threshold(&[0.7], 0.10).unwrap(), 0.7);
        // Unsorted input is sorted internally.
        assert_eq!(niwf_threshold(&[0.9, 0.1, 0.5], 0.34).unwrap(), 0.5, "⌈1.02⌉ = 2nd");
        assert!(matches!(niwf_threshold(&grid, 0.0), Err(FilterError::BadPercentile(_))));
        assert!(matches!(niwf_threshold(&grid, 1.0), Err(FilterError::BadPercentile(_))));
        assert!(matches!(niwf_threshold(&[], 0.1), Err(FilterError::EmptyScores)));
    }

    #[test]
    fn title_overlap_counts_unique_nonstopword_tokens() {
        let sw = stopword_set();
        let title = toks("black screen appears when we seek over an ad group");
        // {fix, black, screen}: two of three appear in the title.
        assert!((title_overlap(&toks("fix black screen"), &title, sw).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(title_overlap(&toks("rewrite decoder"), &title, sw).unwrap(), 0.0);
        assert_eq!(title_overlap(&title, &title, sw).unwrap(), 1.0);
        // Duplicates in the description count once.
        assert!((title_overlap(&toks("seek seek wobble"), &title, sw).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            title_overlap(&toks("the of we"), &title, sw),
            Err(FilterError::EmptyDescription)
        ));
    }

    #[test]
    fn oracle_selects_exact_sentence() {
        let s1 = toks("the player stalls");
        let s2 = toks("fix the seek bug");
        let s3 = toks("thanks");
        let sentences: Vec<&[String]> = vec![&s1, &s2, &s3];
        assert_eq!(greedy_extractive_oracle(&sentences, &toks("fix the seek bug")), vec![1]);
    }

    #[test]
    fn oracle_empty_when_nothing_shared() {
        let s1 = toks("alpha beta");
        let s2 = toks("gamma");
        let sentences: Vec<&[String]> = vec![&s1, &s2];
        assert!(greedy_extractive_oracle(&sentences, &toks("delta epsilon")).is_empty());
    }

    #[test]
    fn oracle_breaks_ties_earliest_and_gains_strictly() {
        let s1 = toks("fix crash");
        let s2 = toks("fix crash");
        let sentences: Vec<&[String]> = vec![&s1, &s2];
        // Identical candidates: the first wins, and the duplicate adds no
        // gain, so selection stops after one step.
        assert_eq!(greedy_extractive_oracle(&sentences, &toks("fix crash")), vec![0]);
    }

    /// From-scratch reimplementation: rebuilds the full selection bags and
    /// rescans every candidate each round.
    fn naive_oracle(sentences: &[&[String]], reference: &[String]) -> Vec<usize> {
        fn score(selection: &[usize], sentences: &[&[String]], reference: &[String]) -> f64 {
            let mut total = 0.0;
            for n in 1..=2 {
                let mut bag: HashMap<Vec<String>, usize> = HashMap::new();
                let mut n_sel = 0usize;
                for &i in selection {
                    if sentences[i].len() >= n {
                        for g in sentences[i].windows(n) {
                            *bag.entry(g.to_vec()).or_insert(0) += 1;
                            n_sel += 1;
                        }
                    }
                }
                let mut ref_bag: HashMap<Vec<String>, usize> = HashMap::new();
                for g in reference.windows(n) {
                    *ref_bag.entry(g.to_vec()).or_insert(0) += 1;
                }
                let n_ref = reference.len().saturating_sub(n - 1);
                let matches: usize =
                    bag.iter().map(|(g, c)| (*c).min(ref_bag.get(g).copied().unwrap_or(0))).sum();
                let f = if matches == 0 {
                    0.0
                } else {
                    let p = matches as f64 / n_sel as f64;
                    let r = matches as f64 / n_ref as f64;
                    2.0 * p * r / (p + r)
                };
                total += f;
            }
            total / 2.0
        }
        let mut selection: Vec<usize> = Vec::new();
        loop {
            let current = score(&selection, sentences, reference);
            let mut best: Option<(usize, f64)> = None;
            for i in 0..sentences.len() {
                if selection.contains(&i) {
                    continue;
                }
                let mut trial = selection.clone();
                trial.push(i);
                let s = score(&trial, sentences, reference);
                if s > current && best.map_or(true, |(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            match best {
                Some((i, _)) => selection.push(i),
                None => return selection,
            }
        }
    }

    #[test]
    fn oracle_matches_naive_reimplementation() {
        let mut rng = crate::rng::seeded_rng(501);
        let vocab: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        for _ in 0..100 {
            let n_sent = rng.random_range(1..=8);
            let sentences_owned: Vec<Vec<String>> = (0..n_sent)
                .map(|_| {
                    (0..rng.random_range(1..=6))
                        .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                        .collect()
                })
                .collect();
            let reference: Vec<String> = (0..rng.random_range(1..=6))
                .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                .collect();
            let sentences: Vec<&[String]> =
                sentences_owned.iter().map(|s| s.as_slice()).collect();
            assert_eq!(
                greedy_extractive_oracle(&sentences, &reference),
                naive_oracle(&sentences, &reference),
                "sentences={sentences_owned:?} reference={reference:?}"
            );
        }
    }

    /// The hand-evaluated 10-example filter fixture. IWF table built from six
    /// training descriptions; thresholds niwf 0.5, overlap 0.5.
    ///
    /// Normalized scores from the table (df: fix=4, crash=2, docs=2, rest=1):
    /// fix → 0, crash/docs → 4/9 ≈ 0.444, all others and unseen → 1.
    fn filter_fixture() -> (Vec<Example>, IwfTable) {
        let table = build_iwf_table(&descs(&[
            "fix crash",
            "fix leak",
            "fix bug",
            "update docs crash",
            "improve speed",
            "fix docs",
        ]))
        .unwrap();
        let corpus = vec![
            // generic: niwf max(0, 4/9) < 0.5
            example("01", "player crashes on start", &["the crash hits me too"], "fix crash", 100),
            // uninformative: {fix, bug} ⊆ title
            example("02", "fix bug in parser", &["the parser fix bug hunt continues"], "fix bug", 110),
            // kept: rare words, low overlap, oracle finds the sentence
            example("03", "ui freeze", &["a memory leak patched upstream helps"], "memory leak patched", 120),
            // uninformative (and incidentally insufficient): title equality wins attribution
            example("04", "speed boost", &["unrelated chatter entirely"], "speed boost", 130),
            // insufficient: nothing in the discussion matches the description
            example("05", "crash report", &["stack trace attached", "cannot reproduce"], "null deref guard", 140),
            // generic: docs → 4/9
            example("06", "typo in readme", &["the docs look wrong"], "fix docs", 150),
            // kept: overlap 1/3 (pool only), oracle picks the leak sentence
            example("07", "pool crash", &["restarting helps somewhat", "the leak comes from the pool"], "leak fixed in pool", 160),
            // kept: two-sentence oracle selection
            example(
                "08",
                "weird behavior",
                &["the parser error happens daily", "try empty input file"],
                "parser error on empty input",
                170,
            ),
            // generic: crash/docs both 4/9
            example("09", "crash docs", &["documentation of the crash"], "crash docs", 180),
            // kept
            example("10", "screen artifacts", &["renderer tearing seen after patching"], "renderer tearing patched", 190),
        ];
        (corpus, table)
    }

    #[test]
    fn filter_fixture_matches_hand_verdicts() {
        let (corpus, table) = filter_fixture();
        let (reports, kept) = apply_filters(&corpus, &table, 0.5, 0.5).unwrap();
        assert_eq!(reports.len(), 10);
        let by_id: HashMap<&str, &FilterReport> =
            reports.iter().map(|r| (r.id(), r)).collect();
        let expect = [
            ("p#01", (true, false, false)),
            ("p#02", (false, true, false)),
            ("p#03", (false, false, false)),
            ("p#04", (false, true, true)),
            ("p#05", (false, false, true)),
            ("p#06", (true, false, false)),
            ("p#07", (false, false, false)),
            ("p#08", (false, false, false)),
            ("p#09", (true, true, false)),
            ("p#10", (false, false, false)),
        ];
        for (id, (generic, uninformative, insufficient)) in expect {
            let r = by_id[id];
            assert_eq!(
                (r.generic(), r.uninformative(), r.insufficient()),
                (generic, uninformative, insufficient),
                "verdicts for {id}"
            );
        }
        assert_eq!(
            kept.iter().map(Example::id).collect::<Vec<_>>(),
            vec!["p#03", "p#07", "p#08", "p#10"]
        );
        // Sequential attribution: 3 generic, 2 uninformative, 1 insufficient.
        let drops = drop_attribution(&reports);
        assert_eq!(
            drops,
            DropCounts { generic: 3, uninformative: 2, insufficient: 1, kept: 4 }
        );
        assert_eq!(drops.generic + drops.uninformative + drops.insufficient + drops.kept, 10);
        // Two-sentence oracle for p#08, in selection order.
        assert_eq!(by_id["p#08"].oracle().len(), 2);
    }

    #[test]
    fn filters_are_monotone_and_idempotent() {
        let (corpus, table) = filter_fixture();
        let kept_at = |niwf_t: f64, overlap_t: f64| {
            let (_, kept) = apply_filters(&corpus, &table, niwf_t, overlap_t).unwrap();
            kept.iter().map(|e| e.id().to_string()).collect::<BTreeSet<_>>()
        };
        let base = kept_at(0.5, 0.5);
        // Raising the NIWF threshold or lowering the overlap threshold can
        // only shrink the kept set.
        assert!(kept_at(0.8, 0.5).is_subset(&base));
        assert!(kept_at(0.5, 0.3).is_subset(&base));
        // Re-filtering the kept subset keeps everything.
        let (_, kept) = apply_filters(&corpus, &table, 0.5, 0.5).unwrap();
        let (reports2, kept2) = apply_filters(&kept, &table, 0.5, 0.5).unwrap();
        assert_eq!(kept2, kept);
        assert!(reports2.iter().all(FilterReport::kept));
    }

    #[test]
    fn split_by_time_counts_and_ordering() {
        let corpus: Vec<Example> = (0..10)
            .map(|i| example(&format!("{i:02}"), "title here", &["some words"], "desc words", 1000 + i))
            .collect();
        let outcome = split_by_time(&corpus, (0.8, 0.1, 0.1)).unwrap();
        assert!(outcome.strict);
        assert_eq!(outcome.split.train().len(), 8);
        assert_eq!(outcome.split.valid().len(), 1);
        assert_eq!(outcome.split.test().len(), 1);
        assert_eq!(outcome.split.valid(), &["p#08".to_string()]);
        assert_eq!(outcome.split.test(), &["p#09".to_string()]);
        outcome.split.verify_covers(&corpus).unwrap();
    }

    #[test]
    fn split_by_time_edge_cases() {
        // n = 3 → 2/0/1 by the floor rule.
        let corpus: Vec<Example> = (0..3)
            .map(|i| example(&format!("{i}"), "title here", &["some words"], "desc words", 1000 + i))
            .collect();
        let outcome = split_by_time(&corpus, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(
            (outcome.split.train().len(), outcome.split.valid().len(), outcome.split.test().len()),
            (2, 0, 1)
        );

        // Equal timestamps: deterministic id order, strictness relaxed.
        let tied: Vec<Example> = (0..5)
            .map(|i| example(&format!("{i}"), "title here", &["some words"], "desc words", 1000))
            .collect();
        let outcome = split_by_time(&tied, (0.8, 0.1, 0.1)).unwrap();
        assert!(!outcome.strict);
        assert_eq!(outcome.split.train(), &["p#0", "p#1", "p#2", "p#3"]);
        let again = split_by_time(&tied, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(outcome.split, again.split);

        let two: Vec<Example> = (0..2)
            .map(|i| example(&format!("{i}"), "title here", &["some words"], "desc words", 1000 + i))
            .collect();
        assert!(matches!(split_by_time(&two, (0.8, 0.1, 0.1)), Err(FilterError::SplitTooSmall { n: 2 })));
        assert!(matches!(
            split_by_time(&corpus, (0.8, 0.1, 0.2)),
            Err(FilterError::BadFractions(..))
        ));
    }

    #[test]
    fn stats_bundle_per_part() {
        let corpus: Vec<Example> = (0..4)
            .map(|i| example(&format!("{i}"), "title here", &["some words", "more words"], "desc words here", 1000 + i))
            .collect();
        let outcome = split_by_time(&corpus, (0.5, 0.25, 0.25)).unwrap();
        let bundle = corpus_stats(&corpus, Some(&outcome.split)).unwrap();
        assert_eq!(bundle.total.n_examples(), 4);
        assert_eq!(bundle.train.unwrap().n_examples(), 2);
        assert_eq!(bundle.valid.unwrap().n_examples(), 1);
        assert_eq!(bundle.test.unwrap().n_examples(), 1);

        // A split that does not cover the corpus is rejected.
        let bogus = CorpusSplit::new(vec!["p#0".into()], vec![], vec!["p#1".into()]).unwrap();
        assert!(corpus_stats(&corpus, Some(&bogus)).is_err());
    }

    #[test]
    fn single_example_stats() {
        let e = example("1", "a title", &["one two three", "four five", "six"], "the desc", 999);
        let stats = CorpusStats::compute(std::slice::from_ref(&e)).unwrap();
        assert_eq!(stats.avg_t(), 3.0);
        assert_eq!(stats.avg_t_g(), 3.0);
        assert_eq!(stats.avg_utterance_len(), 2.0);
    }
}

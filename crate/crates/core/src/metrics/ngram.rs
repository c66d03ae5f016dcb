//! Text-overlap metrics over token sequences.
//!
//! All of these treat tokens as opaque strings; scores depend only on the
//! token sequences, never on global state, and land in [0, 1] (or [0, 100]
//! for the percentage reports).

use std::collections::{HashMap, HashSet};

use super::MetricError;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> usize {
    let ref_counts = ngram_counts(reference, n);
    ngram_counts(hyp, n)
        .into_iter()
        .map(|(gram, count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// Sentence-level BLEU-4.
///
/// Geometric mean of modified n-gram precisions for n = 1..4. A zero match
/// count for n ≥ 2 is smoothed to `1 / (candidate n-gram count + 1)`; a zero
/// unigram precision makes the score 0. Brevity penalty
/// `exp(1 − |ref|/|hyp|)` applies when the hypothesis is shorter than the
/// reference. An empty hypothesis scores 0.
pub fn bleu4(hyp: &[String], reference: &[String]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let total = hyp.len().saturating_sub(n - 1);
        let matches = clipped_matches(hyp, reference, n);
        let p = if matches == 0 {
            if n == 1 {
                return Ok(0.0);
            }
            1.0 / (total as f64 + 1.0)
        } else {
            matches as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let bp = if hyp.len() < reference.len() {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / 4.0).exp())
}

/// Exact-match METEOR-style score.
///
/// Unigram alignment by repeatedly taking the longest common phrase of
/// still-unaligned positions (ties: earliest hypothesis position, then
/// earliest reference position). This maximizes the match count; the number
/// of phrases is the chunk count — greedy phrases are never adjacent in both
/// sequences, so no merging step is needed. Then
/// `F = 10PR / (R + 9P)`, `penalty = 0.5·(chunks/matches)³`,
/// `score = F·(1 − penalty)`. No stemming or synonym matching: scores are
/// comparable within this toolkit, not to other METEOR implementations.
pub fn meteor_lite(hyp: &[String], reference: &[String]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let (matches, chunks) = align_chunks(hyp, reference);
    if matches == 0 {
        return Ok(0.0);
    }
    let m = matches as f64;
    let p = m / hyp.len() as f64;
    let r = m / reference.len() as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    Ok(f * (1.0 - penalty))
}

/// Greedy longest-common-phrase alignment; returns (matches, chunks).
fn align_chunks(hyp: &[String], reference: &[String]) -> (usize, usize) {
    let mut free_h = vec![true; hyp.len()];
    let mut free_r = vec![true; reference.len()];
    let mut matches = 0;
    let mut chunks = 0;
    loop {
        let mut best: Option<(usize, usize, usize)> = None; // (len, hi, ri)
        for hi in 0..hyp.len() {
            for ri in 0..reference.len() {
                let mut k = 0;
                while hi + k < hyp.len()
                    && ri + k < reference.len()
                    && free_h[hi + k]
                    && free_r[ri + k]
                    && hyp[hi + k] == reference[ri + k]
                {
                    k += 1;
                }
                // Strict comparison keeps the earliest (hi, ri) on ties.
                if k > 0 && best.map_or(true, |(bk, _, _)| k > bk) {
                    best = Some((k, hi, ri));
                }
            }
        }
        match best {
            Some((k, hi, ri)) => {
                for d in 0..k {
                    free_h[hi + d] = false;
                    free_r[ri + d] = false;
                }
                matches += k;
                chunks += 1;
            }
            None => break,
        }
    }
    (matches, chunks)
}

fn precision_recall_f1(stat: usize, n_hyp: usize, n_ref: usize) -> (f64, f64, f64) {
    let p = if n_hyp > 0 { stat as f64 / n_hyp as f64 } else { 0.0 };
    let r = if n_ref > 0 { stat as f64 / n_ref as f64 } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// ROUGE-N with clipped n-gram counts; returns (precision, recall, F1).
pub fn rouge_n(
    hyp: &[String],
    reference: &[String],
    n: usize,
) -> Result<(f64, f64, f64), MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let clip = clipped_matches(hyp, reference, n);
    Ok(precision_recall_f1(
        clip,
        hyp.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    ))
}

/// Length of the longest common subsequence, by dynamic programming.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L: plain LCS-based precision/recall/F1 over the token sequences.
pub fn rouge_l(hyp: &[String], reference: &[String]) -> Result<(f64, f64, f64), MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(precision_recall_f1(lcs_len(hyp, reference), hyp.len(), reference.len()))
}

/// Percentage of the reference's n-gram occurrences (with multiplicity) that
/// never occur in the context. `None` when the reference is shorter than `n`.
pub fn novel_ngrams(reference: &[String], context: &[String], n: usize) -> Option<f64> {
    if reference.len() < n {
        return None;
    }
    let context_set: HashSet<&[String]> = context.windows(n).collect();
    let occurrences: Vec<&[String]> = reference.windows(n).collect();
    let novel = occurrences.iter().filter(|g| !context_set.contains(*g)).count();
    Some(100.0 * novel as f64 / occurrences.len() as f64)
}

/// Where a token sequence's n-grams come from: percentage found in the title,
/// and percentage found only in the utterances (present there, absent from
/// the title). Utterance n-grams are collected per utterance — n-grams never
/// span two utterances. `None` when `tokens` is shorter than `n`.
pub fn overlap_report(
    tokens: &[String],
    title: &[String],
    utterances: &[&[String]],
    n: usize,
) -> Option<(f64, f64)> {
    if tokens.len() < n {
        return None;
    }
    let title_set: HashSet<&[String]> = title.windows(n).collect();
    let utt_set: HashSet<&[String]> =
        utterances.iter().flat_map(|u| u.windows(n)).collect();
    let occurrences: Vec<&[String]> = tokens.windows(n).collect();
    let total = occurrences.len() as f64;
    let in_title = occurrences.iter().filter(|g| title_set.contains(*g)).count();
    let in_utt_only = occurrences
        .iter()
        .filter(|g| utt_set.contains(*g) && !title_set.contains(*g))
        .count();
    Some((100.0 * in_title as f64 / total, 100.0 * in_utt_only as f64 / total))
}

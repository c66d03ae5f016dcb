//! Evaluation: generation metrics, timing accuracy for the when-task, n-gram
//! provenance reports, and paired bootstrap significance testing.

pub mod bootstrap;
mod ngram;

pub use bootstrap::{bootstrap_compare, BootstrapConfig, BootstrapOutcome, Winner};
pub use ngram::{bleu4, lcs_len, meteor_lite, novel_ngrams, overlap_report, rouge_l, rouge_n};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ValidationError, WhenPrediction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("reference token list is empty")]
    EmptyReference,
    #[error("paired score vectors differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("no prediction for gold id {id:?}")]
    MissingPrediction { id: String },
    #[error("metric input is empty: {what}")]
    EmptyInput { what: &'static str },
    #[error("bad argument: {0}")]
    BadArgument(String),
}

/// The five generation scores for one example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
}

impl ExampleScores {
    pub const ZERO: ExampleScores =
        ExampleScores { bleu4: 0.0, meteor: 0.0, rouge1_f: 0.0, rouge2_f: 0.0, rouge_l_f: 0.0 };

    fn in_bounds(&self) -> bool {
        [self.bleu4, self.meteor, self.rouge1_f, self.rouge2_f, self.rouge_l_f]
            .iter()
            .all(|s| (0.0..=1.0).contains(s))
    }

    /// Field access by metric name, for table rendering and significance runs.
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Bleu4 => self.bleu4,
            Metric::Meteor => self.meteor,
            Metric::Rouge1 => self.rouge1_f,
            Metric::Rouge2 => self.rouge2_f,
            Metric::RougeL => self.rouge_l_f,
        }
    }
}

/// Names of the five generation metrics, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Bleu4,
    Meteor,
    Rouge1,
    Rouge2,
    RougeL,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::Bleu4, Metric::Meteor, Metric::Rouge1, Metric::Rouge2, Metric::RougeL];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Bleu4 => "bleu4",
            Metric::Meteor => "meteor",
            Metric::Rouge1 => "rouge1",
            Metric::Rouge2 => "rouge2",
            Metric::RougeL => "rougel",
        }
    }

    pub fn parse(name: &str) -> Option<Metric> {
        match name.to_ascii_lowercase().as_str() {
            "bleu4" | "bleu" => Some(Metric::Bleu4),
            "meteor" => Some(Metric::Meteor),
            "rouge1" => Some(Metric::Rouge1),
            "rouge2" => Some(Metric::Rouge2),
            "rougel" => Some(Metric::RougeL),
            _ => None,
        }
    }
}

/// Scores one hypothesis/reference pair on all five metrics. An empty
/// hypothesis (the "no prediction" pipeline case) scores zero everywhere.
pub fn score_pair(hyp: &[String], reference: &[String]) -> Result<ExampleScores, MetricError> {
    Ok(ExampleScores {
        bleu4: bleu4(hyp, reference)?,
        meteor: meteor_lite(hyp, reference)?,
        rouge1_f: rouge_n(hyp, reference, 1)?.2,
        rouge2_f: rouge_n(hyp, reference, 2)?.2,
        rouge_l_f: rouge_l(hyp, reference)?.2,
    })
}

/// Per-example scores plus their arithmetic means over the scored set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetricReport")]
pub struct MetricReport {
    per_example: BTreeMap<String, ExampleScores>,
    aggregate: ExampleScores,
    n: usize,
}

#[derive(Deserialize)]
struct RawMetricReport {
    per_example: BTreeMap<String, ExampleScores>,
    aggregate: ExampleScores,
    n: usize,
}

impl TryFrom<RawMetricReport> for MetricReport {
    type Error = ValidationError;
    fn try_from(raw: RawMetricReport) -> Result<Self, Self::Error> {
        let built = MetricReport::from_scores(raw.per_example)
            .map_err(|e| ValidationError::new(e.to_string()))?;
        if raw.n != built.n {
            return Err(ValidationError::new("n = number of scored examples"));
        }
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        if !(close(raw.aggregate.bleu4, built.aggregate.bleu4)
            && close(raw.aggregate.meteor, built.aggregate.meteor)
            && close(raw.aggregate.rouge1_f, built.aggregate.rouge1_f)
            && close(raw.aggregate.rouge2_f, built.aggregate.rouge2_f)
            && close(raw.aggregate.rouge_l_f, built.aggregate.rouge_l_f))
        {
            return Err(ValidationError::new("aggregate = mean of per-example scores"));
        }
        Ok(built)
    }
}

impl MetricReport {
    /// Builds a report from per-example scores; the aggregate is computed
    /// here, in ascending id order, so it is independent of insertion order.
    pub fn from_scores(
        per_example: BTreeMap<String, ExampleScores>,
    ) -> Result<MetricReport, MetricError> {
        if per_example.is_empty() {
            return Err(MetricError::EmptyInput { what: "per-example scores" });
        }
        if let Some((id, _)) = per_example.iter().find(|(_, s)| !s.in_bounds()) {
            return Err(MetricError::BadArgument(format!("scores for {id:?} outside [0, 1]")));
        }
        let n = per_example.len();
        let mut sums = [0.0f64; 5];
        for scores in per_example.values() {
            for (sum, metric) in sums.iter_mut().zip(Metric::ALL) {
                *sum += scores.get(metric);
            }
        }
        let aggregate = ExampleScores {
            bleu4: sums[0] / n as f64,
            meteor: sums[1] / n as f64,
            rouge1_f: sums[2] / n as f64,
            rouge2_f: sums[3] / n as f64,
            rouge_l_f: sums[4] / n as f64,
        };
        Ok(MetricReport { per_example, aggregate, n })
    }

    pub fn per_example(&self) -> &BTreeMap<String, ExampleScores> {
        &self.per_example
    }
    pub fn aggregate(&self) -> ExampleScores {
        self.aggregate
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// One metric's per-example values in ascending id order; the pairing
    /// order used for bootstrap comparisons.
    pub fn metric_vector(&self, metric: Metric) -> Vec<f64> {
        self.per_example.values().map(|s| s.get(metric)).collect()
    }
}

/// Accuracy-by-gold-step row: how often `t_p = t_g` among examples whose gold
/// step falls in the bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TgBucketRow {
    pub n: usize,
    pub pct_tp_eq_tg: f64,
}

/// Timing accuracy of when-predictions against gold steps.
///
/// The three percentages partition the examples: predicted early
/// (`t_p < t_g`), not predicted by the gold step (`t_p = None`, which
/// includes deployment-capped predictions past `t_g`), and exactly on time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhenAccuracyTable {
    pub n: usize,
    pub pct_tp_lt_tg: f64,
    pub pct_tp_none: f64,
    pub pct_tp_eq_tg: f64,
    /// Buckets "1", "2", "3", "4", "≥5" on the gold step.
    pub by_tg: BTreeMap<String, TgBucketRow>,
    /// Mean of `t_g − t_p` over predictions with `t_p ≤ t_g`; `None` when no
    /// prediction qualifies.
    pub avg_lead: Option<f64>,
}

fn tg_bucket(t_g: usize) -> &'static str {
    match t_g {
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        _ => "≥5",
    }
}

/// Tallies when-prediction timing against gold steps. Every gold id must
/// have a prediction; extra predictions are ignored.
pub fn when_accuracy(
    preds: &[WhenPrediction],
    golds: &BTreeMap<String, usize>,
) -> Result<WhenAccuracyTable, MetricError> {
    if golds.is_empty() {
        return Err(MetricError::EmptyInput { what: "gold steps" });
    }
    let by_id: BTreeMap<&str, &WhenPrediction> =
        preds.iter().map(|p| (p.id(), p)).collect();
    let mut n_lt = 0usize;
    let mut n_eq = 0usize;
    let mut n_none = 0usize;
    let mut lead_sum = 0usize;
    let mut lead_n = 0usize;
    let mut bucket_n: BTreeMap<String, (usize, usize)> = BTreeMap::new(); // (n, n_eq)
    for (id, &t_g) in golds {
        let pred = by_id
            .get(id.as_str())
            .ok_or_else(|| MetricError::MissingPrediction { id: id.clone() })?;
        let entry = bucket_n.entry(tg_bucket(t_g).to_string()).or_insert((0, 0));
        entry.0 += 1;
        match pred.t_p() {
            Some(t) if t == t_g => {
                n_eq += 1;
                entry.1 += 1;
            }
            Some(t) if t < t_g => n_lt += 1,
            // None, or predicted past the gold step under a deployment cap:
            // either way, no positive by t_g.
            _ => n_none += 1,
        }
        if let Some(t) = pred.t_p() {
            if t <= t_g {
                lead_sum += t_g - t;
                lead_n += 1;
            }
        }
    }
    let n = golds.len();
    let pct = |c: usize| 100.0 * c as f64 / n as f64;
    let by_tg = bucket_n
        .into_iter()
        .map(|(k, (count, eq))| {
            (k, TgBucketRow { n: count, pct_tp_eq_tg: 100.0 * eq as f64 / count as f64 })
        })
        .collect();
    Ok(WhenAccuracyTable {
        n,
        pct_tp_lt_tg: pct(n_lt),
        pct_tp_none: pct(n_none),
        pct_tp_eq_tg: pct(n_eq),
        by_tg,
        avg_lead: if lead_n > 0 { Some(lead_sum as f64 / lead_n as f64) } else { None },
    })
}

/// Mean scores within one overlap-percentage bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub n: usize,
    pub mean: ExampleScores,
}

/// Assigns a percentage in [0, 100] to its decile bucket: bucket 10 covers
/// [0, 10), bucket 20 covers [10, 20), ..., bucket 100 covers [90, 100].
pub fn decile_bucket(pct: f64) -> u32 {
    debug_assert!((0.0..=100.0).contains(&pct));
    ((pct / 10.0).floor() as u32).min(9) * 10 + 10
}

/// Groups per-example scores by the decile bucket of an overlap percentage
/// and averages each bucket.
pub fn bucket_report(items: &[(f64, ExampleScores)]) -> Result<BTreeMap<u32, BucketRow>, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyInput { what: "bucket items" });
    }
    let mut acc: BTreeMap<u32, (usize, [f64; 5])> = BTreeMap::new();
    for (pct, scores) in items {
        let entry = acc.entry(decile_bucket(*pct)).or_insert((0, [0.0; 5]));
        entry.0 += 1;
        for (sum, metric) in entry.1.iter_mut().zip(Metric::ALL) {
            *sum += scores.get(metric);
        }
    }
    Ok(acc
        .into_iter()
        .map(|(bucket, (n, sums))| {
            let d = n as f64;
            (
                bucket,
                BucketRow {
                    n,
                    mean: ExampleScores {
                        bleu4: sums[0] / d,
                        meteor: sums[1] / d,
                        rouge1_f: sums[2] / d,
                        rouge2_f: sums[3] / d,
                        rouge_l_f: sums[4] / d,
                    },
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(id: &str, t_p: Option<usize>, steps: usize) -> WhenPrediction {
        let n = t_p.unwrap_or(steps);
        let mut probs = vec![0.0; n];
        if t_p.is_some() {
            probs[n - 1] = 1.0;
        }
        WhenPrediction::new(id, t_p, probs).unwrap()
    }

    #[test]
    fn metric_report_aggregates_means() {
        let mut scores = BTreeMap::new();
        scores.insert(
            "a#1".to_string(),
            ExampleScores { bleu4: 0.2, meteor: 0.4, rouge1_f: 0.6, rouge2_f: 0.0, rouge_l_f: 1.0 },
        );
        scores.insert(
            "a#2".to_string(),
            ExampleScores { bleu4: 0.4, meteor: 0.2, rouge1_f: 0.2, rouge2_f: 1.0, rouge_l_f: 0.0 },
        );
        let report = MetricReport::from_scores(scores).unwrap();
        assert_eq!(report.n(), 2);
        assert!((report.aggregate().bleu4 - 0.3).abs() < 1e-12);
        assert!((report.aggregate().rouge2_f - 0.5).abs() < 1e-12);
        assert_eq!(report.metric_vector(Metric::Bleu4), vec![0.2, 0.4]);
    }

    #[test]
    fn when_accuracy_partitions_and_buckets() {
        // Hand tally: 10 examples.
        //   eq:  g1 (t_g=1), g4 (t_g=4), g5 (t_g=5), g9 (t_g=2)      → 40%
        //   lt:  g2 (1 < 2), g6 (2 < 6)                              → 20%
        //   none: g3, g7 (None), g8 (t_p=3 > t_g=2), g10 (None)      → 40%
        let golds: BTreeMap<String, usize> = [
            ("g1", 1usize),
            ("g2", 2),
            ("g3", 3),
            ("g4", 4),
            ("g5", 5),
            ("g6", 6),
            ("g7", 1),
            ("g8", 2),
            ("g9", 2),
            ("g10", 7),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let preds = vec![
            pred("g1", Some(1), 1),
            pred("g2", Some(1), 2),
            pred("g3", None, 3),
            pred("g4", Some(4), 4),
            pred("g5", Some(5), 5),
            pred("g6", Some(2), 6),
            pred("g7", None, 1),
            pred("g8", Some(3), 3),
            pred("g9", Some(2), 2),
            pred("g10", None, 7),
        ];
        let table = when_accuracy(&preds, &golds).unwrap();
        assert_eq!(table.n, 10);
        assert!((table.pct_tp_eq_tg - 40.0).abs() < 1e-9);
        assert!((table.pct_tp_lt_tg - 20.0).abs() < 1e-9);
        assert!((table.pct_tp_none - 40.0).abs() < 1e-9);
        assert!(
            (table.pct_tp_eq_tg + table.pct_tp_lt_tg + table.pct_tp_none - 100.0).abs() < 1e-9
        );
        // Buckets: t_g=1 → {g1 eq, g7 none} 50%; t_g=2 → {g2, g8, g9} 1/3;
        // t_g=3 → {g3} 0%; t_g=4 → {g4} 100%; ≥5 → {g5 eq, g6, g10} 1/3.
        assert_eq!(table.by_tg["1"].n, 2);
        assert!((table.by_tg["1"].pct_tp_eq_tg - 50.0).abs() < 1e-9);
        assert_eq!(table.by_tg["2"].n, 3);
        assert!((table.by_tg["2"].pct_tp_eq_tg - 100.0 / 3.0).abs() < 1e-9);
        assert!((table.by_tg["4"].pct_tp_eq_tg - 100.0).abs() < 1e-9);
        assert_eq!(table.by_tg["≥5"].n, 3);
        assert!((table.by_tg["≥5"].pct_tp_eq_tg - 100.0 / 3.0).abs() < 1e-9);
        // avg_lead over t_p ≤ t_g: g1 0, g2 1, g4 0, g5 0, g6 4, g9 0 → 5/6.
        assert!((table.avg_lead.unwrap() - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn when_accuracy_trivial_rows() {
        let golds: BTreeMap<String, usize> =
            [("a".to_string(), 2usize), ("b".to_string(), 3)].into_iter().collect();
        let exact = vec![pred("a", Some(2), 2), pred("b", Some(3), 3)];
        let table = when_accuracy(&exact, &golds).unwrap();
        assert!((table.pct_tp_eq_tg - 100.0).abs() < 1e-9);
        assert!((table.pct_tp_none - 0.0).abs() < 1e-9);

        let none = vec![pred("a", None, 2), pred("b", None, 3)];
        let table = when_accuracy(&none, &golds).unwrap();
        assert!((table.pct_tp_none - 100.0).abs() < 1e-9);
        assert_eq!(table.avg_lead, None);

        let missing = vec![pred("a", Some(2), 2)];
        assert!(matches!(
            when_accuracy(&missing, &golds),
            Err(MetricError::MissingPrediction { .. })
        ));
    }

    #[test]
    fn decile_buckets() {
        assert_eq!(decile_bucket(0.0), 10);
        assert_eq!(decile_bucket(9.999), 10);
        assert_eq!(decile_bucket(10.0), 20);
        assert_eq!(decile_bucket(95.0), 100);
        assert_eq!(decile_bucket(100.0), 100);
    }

    #[test]
    fn bucket_report_uniform_fixture() {
        // Two items per decile → equal bucket counts.
        let items: Vec<(f64, ExampleScores)> = (0..10)
            .flat_map(|d| {
                let pct = d as f64 * 10.0;
                [(pct, ExampleScores::ZERO), (pct + 5.0, ExampleScores::ZERO)]
            })
            .collect();
        let report = bucket_report(&items).unwrap();
        assert_eq!(report.len(), 10);
        assert!(report.values().all(|row| row.n == 2));
        assert_eq!(
            report.keys().copied().collect::<Vec<_>>(),
            vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
        );
    }
}

//! The combined real-time system: a when-classifier chooses the step `t_p`,
//! and a generator produces the description from the discussion truncated
//! at that step.
//!
//! [`run_pipeline`] handles one example; [`evaluate_pipeline`] scores a whole
//! corpus twice — once at the predicted step, once at the gold step — and
//! attaches paired-bootstrap significance per metric, so the cost of acting
//! early is measurable. When the classifier never fires (`t_p = None`) the
//! predicted description is the empty token list, which scores zero.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, GeneratorOutput, WhenPrediction};
use crate::generators::{run_generator, ContextView, GeneratorError, GeneratorSpec, TfidfIndex};
use crate::metrics::bootstrap::{bootstrap_compare, BootstrapConfig, BootstrapOutcome};
use crate::metrics::{score_pair, Metric, MetricError, MetricReport};
use crate::when::{
    baseline_first, baseline_random, baseline_second, infer_tp, RandMode, WhenError, WhenModel,
};

/// Which decision rule picks `t_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierChoice {
    /// The trained random forest, first threshold crossing.
    Forest,
    /// Always the first step.
    First,
    /// The second step when the discussion allows it, otherwise never.
    Second,
    /// Coin flip per step.
    RandUniform,
    /// Per-step Bernoulli at the positive-class rate.
    RandDist,
    /// The gold step itself — evaluation-only upper bound.
    GoldOracle,
}

impl ClassifierChoice {
    pub const ALL: [ClassifierChoice; 6] = [
        ClassifierChoice::Forest,
        ClassifierChoice::First,
        ClassifierChoice::Second,
        ClassifierChoice::RandUniform,
        ClassifierChoice::RandDist,
        ClassifierChoice::GoldOracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierChoice::Forest => "forest",
            ClassifierChoice::First => "first",
            ClassifierChoice::Second => "second",
            ClassifierChoice::RandUniform => "rand_uniform",
            ClassifierChoice::RandDist => "rand_dist",
            ClassifierChoice::GoldOracle => "gold_oracle",
        }
    }

    pub fn parse(name: &str) -> Option<ClassifierChoice> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// How many steps the classifier may scan before giving up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCap {
    /// Scan up to the gold step (the evaluation setting).
    Tg,
    /// Scan the whole discussion (the deployment setting).
    T,
}

impl StepCap {
    pub fn name(&self) -> &'static str {
        match self {
            StepCap::Tg => "tg",
            StepCap::T => "t",
        }
    }

    pub fn parse(name: &str) -> Option<StepCap> {
        match name.to_ascii_lowercase().as_str() {
            "tg" | "t_g" => Some(StepCap::Tg),
            "t" => Some(StepCap::T),
            _ => None,
        }
    }
}

/// Everything needed to run the combined system on one example.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub classifier: ClassifierChoice,
    pub generator: GeneratorSpec,
    /// Probability threshold for the forest's first crossing.
    pub threshold: f64,
    /// Base seed for the random baselines (each example derives its own
    /// stream from this and its id, so results are order-independent).
    pub seed: u64,
    pub cap: StepCap,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(PipelineError::Config(format!(
                "threshold {} must lie in (0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// The classifier decision and the text generated at it, for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub prediction: WhenPrediction,
    pub output: GeneratorOutput,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("pipeline config: {0}")]
    Config(String),
    #[error("the forest classifier needs a trained model")]
    MissingModel,
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    When(#[from] WhenError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Fails fast when the config names resources that were not supplied, so a
/// corpus run cannot die halfway through.
pub fn check_resources(
    cfg: &PipelineConfig,
    model: Option<&WhenModel>,
    index: Option<&TfidfIndex>,
) -> Result<(), PipelineError> {
    cfg.validate()?;
    if cfg.classifier == ClassifierChoice::Forest && model.is_none() {
        return Err(PipelineError::MissingModel);
    }
    if matches!(cfg.generator, GeneratorSpec::Retrieval { .. }) && index.is_none() {
        return Err(PipelineError::Config(format!(
            "generator `{}` needs a retrieval index",
            cfg.generator.name()
        )));
    }
    Ok(())
}

fn predict_tp(
    example: &Example,
    cfg: &PipelineConfig,
    model: Option<&WhenModel>,
) -> Result<WhenPrediction, PipelineError> {
    let max_t = match cfg.cap {
        StepCap::Tg => example.t_g(),
        StepCap::T => example.utterances().len(),
    };
    let prediction = match cfg.classifier {
        ClassifierChoice::Forest => {
            let model = model.ok_or(PipelineError::MissingModel)?;
            infer_tp(model, example, cfg.threshold, max_t)?
        }
        ClassifierChoice::First => baseline_first(example),
        ClassifierChoice::Second => baseline_second(example),
        ClassifierChoice::RandUniform => {
            baseline_random(example, RandMode::Uniform, None, cfg.seed, max_t)?
        }
        ClassifierChoice::RandDist => {
            baseline_random(example, RandMode::Dist, None, cfg.seed, max_t)?
        }
        ClassifierChoice::GoldOracle => {
            let mut probs = vec![0.0; example.t_g()];
            probs[example.t_g() - 1] = 1.0;
            WhenPrediction::new(example.id(), Some(example.t_g()), probs)
                .expect("gold prediction shape is valid")
        }
    };
    Ok(prediction)
}

/// Runs the classifier, then the generator on the context truncated at the
/// predicted step. `t_p = None` yields an empty token list whose `at_step`
/// records the last step the classifier evaluated.
pub fn run_pipeline(
    example: &Example,
    cfg: &PipelineConfig,
    model: Option<&WhenModel>,
    index: Option<&TfidfIndex>,
) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let prediction = predict_tp(example, cfg, model)?;
    let output = match prediction.t_p() {
        Some(t_p) => {
            let view = ContextView::at_step(example, t_p)?;
            run_generator(&cfg.generator, &view, index)?
        }
        None => GeneratorOutput::new(
            example.id(),
            cfg.generator.name(),
            Vec::new(),
            prediction.probs().len(),
        )
        .map_err(|e| PipelineError::Config(e.to_string()))?,
    };
    Ok(PipelineOutput { prediction, output })
}

/// The paired corpus evaluation: the same generator scored at the predicted
/// step and at the gold step, with per-metric bootstrap significance.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineEvaluation {
    /// Per-example decisions and predicted-step outputs, sorted by id.
    pub outputs: Vec<PipelineOutput>,
    pub at_tp: MetricReport,
    pub at_tg: MetricReport,
    /// Bootstrap comparison of @t_p (side A) vs @t_g (side B) per metric,
    /// in report order.
    pub significance: Vec<(Metric, BootstrapOutcome)>,
}

pub fn evaluate_pipeline(
    corpus: &[Example],
    cfg: &PipelineConfig,
    model: Option<&WhenModel>,
    index: Option<&TfidfIndex>,
    bootstrap: &BootstrapConfig,
) -> Result<PipelineEvaluation, PipelineError> {
    check_resources(cfg, model, index)?;
    if corpus.is_empty() {
        return Err(PipelineError::Config("evaluation corpus is empty".into()));
    }

    let per_example: Vec<(PipelineOutput, GeneratorOutput)> = corpus
        .par_iter()
        .map(|example| {
            let predicted = run_pipeline(example, cfg, model, index)?;
            let gold = run_generator(&cfg.generator, &ContextView::at_tg(example), index)?;
            Ok((predicted, gold))
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut scores_tp = BTreeMap::new();
    let mut scores_tg = BTreeMap::new();
    for (example, (predicted, gold)) in corpus.iter().zip(&per_example) {
        let reference = example.description_tokens();
        scores_tp.insert(example.id().to_string(), score_pair(predicted.output.tokens(), reference)?);
        scores_tg.insert(example.id().to_string(), score_pair(gold.tokens(), reference)?);
    }
    if scores_tp.len() != corpus.len() {
        return Err(PipelineError::Config("duplicate example ids in corpus".into()));
    }
    let at_tp = MetricReport::from_scores(scores_tp)?;
    let at_tg = MetricReport::from_scores(scores_tg)?;

    let significance = Metric::ALL
        .iter()
        .map(|&metric| {
            bootstrap_compare(
                &at_tp.metric_vector(metric),
                &at_tg.metric_vector(metric),
                bootstrap,
            )
            .map(|outcome| (metric, outcome))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut outputs: Vec<PipelineOutput> =
        per_example.into_iter().map(|(predicted, _)| predicted).collect();
    outputs.sort_by(|a, b| a.output.id().cmp(b.output.id()));

    Ok(PipelineEvaluation { outputs, at_tp, at_tg, significance })
}

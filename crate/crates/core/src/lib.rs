//! fixdesc: turn bug-report discussion threads into supervised corpora for
//! fix-description generation, run baseline generators over them, score the
//! output, and train a classifier that decides *when* a discussion contains
//! enough information to describe the fix.
//!
//! The crate is organized around a small set of data types ([`corpus`]) that
//! flow through a pipeline:
//!
//! 1. [`ingest`] turns raw issue timelines into [`corpus::Example`]s, locating
//!    the linked change event and the gold time step `t_g`.
//! 2. [`filters`] scores each example for generic, uninformative, or
//!    insufficient descriptions and drops the noise; it also cuts
//!    time-ordered train/valid/test splits.
//! 3. [`generators`] produce candidate descriptions from a truncated view of
//!    the discussion (copy-title, span extraction, LexRank, TF-IDF retrieval,
//!    and an extractive oracle).
//! 4. [`when`] trains a random-forest classifier over per-step features and
//!    scans each discussion for the first step whose positive probability
//!    crosses a threshold.
//! 5. [`metrics`] implements the generation metrics (BLEU-4, a METEOR-style
//!    scorer, ROUGE), timing accuracy, and paired bootstrap significance.
//! 6. [`pipeline`] wires a when-classifier to a generator so text is produced
//!    at the predicted step, and [`report`] renders the summary tables.
//!
//! Everything downstream of ingestion is deterministic: seeded RNGs, sorted
//! iteration orders, and order-preserving parallel folds mean two runs with
//! the same seed produce byte-identical files regardless of thread count.

pub mod config;
pub mod corpus;
pub mod filters;
pub mod generators;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod text;
pub mod when;

pub mod cli;

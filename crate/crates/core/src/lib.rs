//! Evaluation toolkit for reference-based video summarization benchmarks.
//!
//! The crate implements the full summarize-and-score pipeline (temporal
//! segmentation, importance-score pooling, knapsack segment selection,
//! F1 against reference summaries) together with the instruments used to
//! stress-test it: randomized scoring and segmentation baselines,
//! leave-one-out human baselines, Kendall/Spearman rank-correlation
//! evaluation, and accumulated-score correlation curves.
//!
//! Modules map onto pipeline stages:
//!
//! - [`datamodel`] — core value types (videos, frame scores, segmentations,
//!   summary masks) and their validation.
//! - [`ingest`] — dataset loading (TVSum-style TSV, neutral JSON),
//!   prediction-score files, and synthetic dataset generation.
//! - [`segmentation`] — uniform, one-peak, two-peak, KTS, and
//!   randomized-KTS segmenters.
//! - [`selection`] — score pooling and exact 0/1 knapsack selection under a
//!   length budget, with a brute-force oracle.
//! - [`metrics`] — F1 protocol, avg/max aggregation, leave-one-out
//!   baselines, Kendall τ-b and Spearman ρ.
//! - [`curves`] — accumulated-score correlation curves with concordance
//!   bounds and CSV/SVG emission.
//! - [`harness`] — seeded multi-trial experiment runners and report
//!   assembly.
//!
//! All randomness is driven by explicit 64-bit seeds through [`seeding`];
//! identical inputs produce byte-identical reports regardless of worker
//! parallelism.

pub mod curves;
pub mod datamodel;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod seeding;
pub mod segmentation;
pub mod selection;

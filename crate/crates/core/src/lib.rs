//! Core library for annotating memes for hatefulness with LLM agents and
//! checking the resulting labels.
//!
//! - [`annotation`]: agent responses and annotation-run state.
//! - [`labels`]: the coarse / fine-grained label taxonomy.
//! - [`dataset`]: manifests, label files, splits, distributions, class weights.
//! - [`metrics`]: Cohen's and Fleiss' kappa, accuracy and macro-F1.
//! - [`prompt`]: prompt templates and agent answer parsing.
//! - [`consolidation`]: agent-free consolidation rules.
//! - [`report`]: text tables for all reports.

pub mod annotation;
pub mod consolidation;
pub mod dataset;
pub mod labels;
pub mod metrics;
pub mod prompt;
pub mod report;

pub use labels::{CoarseLabel, FineLabel, HateLabel, LabelError};

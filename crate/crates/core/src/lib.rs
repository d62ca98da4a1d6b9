//! Substitute-based word embeddings on the unit sphere.
//!
//! The pipeline trains an interpolated Kneser-Ney n-gram model, computes a
//! top-K substitute distribution for every token of a corpus, samples
//! (word, substitute) pairs from those distributions, and embeds both sides
//! of the pairs on the unit sphere with a stochastic co-occurrence trainer.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod ngram;
pub mod pipeline;
pub mod scode;
pub mod substitutes;

pub use config::PipelineConfig;
pub use corpus::Vocabulary;
pub use discretize::CooccurrencePair;
pub use error::{Error, Result};
pub use eval::WordVectors;
pub use ngram::{CountTable, LanguageModel, NgramModel};
pub use scode::{EmbeddingSet, EmpiricalDistribution, TrainConfig};
pub use substitutes::{ContextWindow, SubstituteDistribution};

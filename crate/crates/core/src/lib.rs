//! Visual-grounding models for word embeddings and the behavioral modeling
//! pipeline built on top of them.
//!
//! The crate is organized around six subsystems:
//!
//! - [`embeddings`]: word-embedding and image-vector stores, cosine similarity,
//!   label-set similarity and nearest-neighbor retrieval.
//! - [`crossmodal`]: prototype/exemplar cross-modal mapping from text vectors
//!   to image vectors (ridge-regularized linear map, two retrieval procedures).
//! - [`zsg`]: zero-shot grounding — train a shared linear alignment through a
//!   caption encoder against image vectors, then ground a whole vocabulary.
//! - [`simulate`]: per-trial similarity measures, the Max choice rule, and the
//!   virtual-participant / accuracy condition reports.
//! - [`gam`]: penalized logistic additive models (centered B-spline smooths,
//!   PIRLS, AIC-based smoothness selection, summaries and partial effects).
//! - [`stats`]: exact binomial tests, Spearman correlation and word-similarity
//!   benchmark evaluation.
//!
//! [`fixture`] generates the deterministic synthetic datasets used by the test
//! suites and by pipeline smoke runs; [`fmt`] holds the shared numeric output
//! formatting.

pub mod crossmodal;
pub mod embeddings;
pub mod fixture;
pub mod fmt;
pub mod gam;
pub mod simulate;
pub mod stats;
pub mod zsg;

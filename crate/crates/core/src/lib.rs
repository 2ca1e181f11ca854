//! Depression detection over tweets.
//!
//! The crate covers the whole workflow: corpus ingestion and annotator
//! vote merging ([`corpus`]), tweet preprocessing ([`textprep`]), sparse
//! features ([`vectorize`]), Word2Vec / Doc2Vec embeddings ([`embed`]),
//! three shallow classifiers ([`shallow`]), an LSTM ([`lstm`]), confusion
//! matrix evaluation ([`eval`]), profile-level flagging ([`profiler`]) and a
//! portable model container ([`persist`]). [`pipeline`] wires them together
//! the way the `depdetect` binary uses them.

pub mod config;
pub mod corpus;
pub mod embed;
pub mod eval;
pub mod label;
pub mod lstm;
pub mod persist;
pub mod pipeline;
pub mod profiler;
pub mod rng;
pub mod shallow;
pub mod textprep;
pub mod vectorize;

pub use label::Label;

//! Knowledge-graph retrieval for knowledge-based visual question answering.
//!
//! The pipeline turns KG triples into sentences, indexes their Porter stems
//! with BM25, retrieves facts for a question plus textual image description,
//! and assembles the reader's background and knowledge contexts. Evaluation
//! covers exact-match, inclusion and stem answer accuracy, and inclusion-based
//! Recall@K. The [`signal`] module holds the attention-to-retriever
//! distillation math.
//!
//! Batch entry points take an [`Execution`] and run on rayon when the
//! `parallel` feature is enabled (the default).

pub mod evaluation;
pub mod exec;
pub mod kg;
pub mod query;
pub mod retrieval;
pub mod signal;
pub mod stemming;
pub mod verbalizer;

pub use exec::Execution;

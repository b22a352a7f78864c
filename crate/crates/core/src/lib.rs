//! Entity association mining over news corpora.
//!
//! The crate is organised as a chain of stages, each usable on its own:
//!
//! - [`corpus`]: JSONL ingestion and paragraph / sentence / token segmentation
//! - [`embed`]: embedding providers (built-in hashed term frequency, HTTP) and cosine
//! - [`filter`]: lexical phrase filtering and semantic relevance filtering
//! - [`dedup`]: average-linkage agglomerative clustering tuned by silhouette
//! - [`extract`]: gazetteer, product pattern, external annotator and event extractors
//! - [`associate`]: windowed co-occurrence counting, trend matrices and ranking
//! - [`graph`]: co-occurrence graph construction, neighbor queries and exports
//! - [`config`] and [`pipeline`]: config-driven orchestration with stage artifacts
//! - [`cli`]: the `assocmine` command line front end
//!
//! See the `examples/` directory of this crate for one runnable program per capability.

pub mod associate;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod dedup;
pub mod embed;
pub mod extract;
pub mod filter;
pub mod graph;
pub mod pipeline;
mod stopwords;

pub use associate::{Bucketing, CoocRecord, TrendMatrix, WindowLevel};
pub use config::PipelineConfig;
pub use corpus::{AnnotatedDoc, Article, Segmenter, Span, Token};
pub use extract::{EntityCatalog, EntityRecord, EntityType, Mention, Registry};
pub use graph::CoocGraph;
pub use pipeline::{Pipeline, RunOptions, Stage};

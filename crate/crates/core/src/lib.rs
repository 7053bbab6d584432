//! Personalized hierarchical concept-map summarization.
//!
//! The pipeline runs in two halves. The organizer turns a corpus into a
//! hierarchical concept map:
//!
//! - [`ingest`]: corpus loading, sentence segmentation, (subject, relation,
//!   object) extraction and mention normalization
//! - [`embedding`]: word vectors (loaded or trained) and similarity
//! - [`hierarchy`]: mention grouping, evenness-penalized k-means, gap
//!   statistic, recursive tree construction, labeling and pruning
//!
//! The summarizer learns what a particular user cares about and builds a
//! budgeted summary from the map:
//!
//! - [`features`]: per-concept feature vectors
//! - [`preference`]: query scheduling, Bradley-Terry utility learning,
//!   rankings and the reference-summary oracle
//! - [`policy`]: the summary MDP, exhaustive enumeration and linear TD(0)
//! - [`rouge`]: ROUGE-1/2/L scoring
//!
//! [`pipeline`] and [`experiments`] tie the pieces together for the CLI
//! and the HTTP service.

pub mod embedding;
pub mod experiments;
pub mod features;
pub mod hierarchy;
pub mod ingest;
pub mod pipeline;
pub mod policy;
pub mod preference;
pub mod rouge;
pub mod seed;

pub use embedding::VectorStore;
pub use hierarchy::{Concept, HierarchyNode};
pub use ingest::{Corpus, Document, Sentence, TripleMention};
pub use preference::{RankingTable, UtilityModel};
pub use policy::{Policy, SummarySelection};

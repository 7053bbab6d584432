//! End-to-end runs: corpus to concept map, then preferences to summary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{train_embeddings, EmbeddingError, TrainConfig, VectorStore};
use crate::features::{compute_stats, CorpusStats, FeatureError, FeatureMatrix};
use crate::hierarchy::{
    build_hierarchy, group_mentions, mentions_from_triples, prune_hierarchy, Concept, ConceptGraph, ExportNode,
    ExportOptions, HierarchyError, HierarchyNode, HierarchyParams,
};
use crate::ingest::{extract_corpus, Corpus, ExternalTriple, ExtractMode, IngestError, NormalizeStats, TripleMention};
use crate::policy::{generate_summary, train_td, Policy, PolicyError, PolicyHyper, SummarySelection, SummarySpace};
use crate::preference::{
    rank_concepts, Choice, LoopConfig, PreferenceError, PreferenceRecord, QueryLoop, QueryPair, RankingTable,
    SimulatedOracle, Strategy, TrainHyper, UtilityModel,
};
use crate::rouge::{rouge_all, RougeScore};
use crate::seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("no concepts survived extraction")]
    NoConcepts,
}

/// Settings for building the concept map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganizeConfig {
    pub extract_mode: ExtractMode,
    /// Cosine threshold for merging mention groups.
    pub tau: f64,
    pub hierarchy: HierarchyParams,
    /// Per-level pruning thresholds; empty keeps every node.
    pub prune_thresholds: Vec<f64>,
    pub embedding_dim: usize,
    pub embedding_epochs: usize,
    pub seed: u64,
}

impl Default for OrganizeConfig {
    fn default() -> Self {
        OrganizeConfig {
            extract_mode: ExtractMode::Heuristic,
            tau: 0.9,
            hierarchy: HierarchyParams::default(),
            prune_thresholds: Vec::new(),
            embedding_dim: 50,
            embedding_epochs: 50,
            seed: 42,
        }
    }
}

/// The concept map and everything derived from the corpus alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Organized {
    pub num_documents: usize,
    pub triples: Vec<TripleMention>,
    pub normalize_stats: NormalizeStats,
    pub concepts: Vec<Concept>,
    pub graph: ConceptGraph,
    pub hierarchy: HierarchyNode,
    pub stats: CorpusStats,
}

/// Extracts triples, groups mentions into concepts and builds the pruned
/// hierarchy. Without `vectors`, embeddings are trained on the corpus.
pub fn organize(
    corpus: &Corpus,
    external: &[ExternalTriple],
    vectors: Option<&VectorStore>,
    config: &OrganizeConfig,
) -> Result<Organized, PipelineError> {
    let sentences = corpus.sentences();
    let (triples, normalize_stats) = extract_corpus(&sentences, config.extract_mode, external)?;
    let trained;
    let store = match vectors {
        Some(store) => store,
        None => {
            let train = TrainConfig {
                dim: config.embedding_dim,
                epochs: config.embedding_epochs,
                seed: seed::mix(config.seed, 1),
                ..TrainConfig::default()
            };
            trained = train_embeddings(&sentences, &train)?;
            &trained
        }
    };
    let concepts = group_mentions(&mentions_from_triples(&triples), store, config.tau);
    if concepts.is_empty() {
        return Err(PipelineError::NoConcepts);
    }
    let graph = ConceptGraph::build(&triples, &concepts);
    let params = HierarchyParams { seed: seed::mix(config.seed, 2), ..config.hierarchy.clone() };
    let hierarchy = prune_hierarchy(&build_hierarchy(&concepts, &params)?, &config.prune_thresholds);
    let stats = compute_stats(corpus.documents.len(), &concepts, &graph);
    Ok(Organized { num_documents: corpus.documents.len(), triples, normalize_stats, concepts, graph, hierarchy, stats })
}

impl Organized {
    pub fn features(&self, set_size: usize) -> Result<FeatureMatrix, PipelineError> {
        Ok(FeatureMatrix::new(&self.stats, set_size)?)
    }

    pub fn space(&self) -> SummarySpace {
        SummarySpace::from_hierarchy(&self.hierarchy).with_concepts(&self.concepts, &self.graph)
    }

    pub fn export(&self, options: ExportOptions) -> ExportNode {
        ExportNode::from_node(&self.hierarchy, &self.concepts, options)
    }

    pub fn oracle<S: AsRef<str>>(&self, references: &[Vec<S>]) -> SimulatedOracle {
        SimulatedOracle::new(references, &self.concepts)
    }
}

/// Settings for one personalized summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub query_budget: usize,
    pub summary_budget: usize,
    pub feature_set: usize,
    pub strategy: Strategy,
    pub round_size: usize,
    pub utility: TrainHyper,
    pub policy: PolicyHyper,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            query_budget: 20,
            summary_budget: 10,
            feature_set: 10,
            strategy: Strategy::Chain,
            round_size: 5,
            utility: TrainHyper::default(),
            policy: PolicyHyper::default(),
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            query_budget: self.query_budget,
            strategy: self.strategy,
            round_size: self.round_size,
            hyper: TrainHyper { seed: seed::mix(self.seed, 3), ..self.utility.clone() },
        }
    }

    pub fn policy_hyper(&self) -> PolicyHyper {
        PolicyHyper { seed: seed::mix(self.seed, 4), ..self.policy.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub queries: Vec<QueryPair>,
    pub records: Vec<PreferenceRecord>,
    pub model: UtilityModel,
    pub ranking: RankingTable,
    pub policy: Policy,
    pub summary: SummarySelection,
}

/// Ranks the hierarchy labels with `model`, trains the TD policy and rolls
/// it out.
pub fn summarize(
    organized: &Organized,
    features: &FeatureMatrix,
    model: &UtilityModel,
    config: &RunConfig,
) -> Result<(RankingTable, Policy, SummarySelection), PipelineError> {
    let space = organized.space();
    let ranking = rank_concepts(model, &space.labels, features)?;
    let policy = train_td(&space, features, &ranking, config.summary_budget, &config.policy_hyper());
    let summary = generate_summary(&space, &policy, features, &ranking, config.summary_budget)?;
    Ok((ranking, policy, summary))
}

/// The full loop with an automatic responder in place of the user.
pub fn personalize(
    organized: &Organized,
    config: &RunConfig,
    mut respond: impl FnMut(&QueryPair) -> Choice,
) -> Result<Run, PipelineError> {
    let features = organized.features(config.feature_set)?;
    let mut queries = Vec::new();
    let mut session = QueryLoop::new(config.loop_config(), &features);
    let model = session
        .run(&organized.hierarchy, &features, |pair| {
            queries.push(pair.clone());
            respond(pair)
        })?
        .clone();
    let (ranking, policy, summary) = summarize(organized, &features, &model, config)?;
    Ok(Run { queries, records: session.records, model, ranking, policy, summary })
}

/// ROUGE-1/2/L of a summary's label tokens against the references.
pub fn score_summary<S: AsRef<str>>(
    summary: &SummarySelection,
    references: &[Vec<S>],
    word_limit: Option<usize>,
) -> Vec<RougeScore> {
    rouge_all(&summary.tokens(), references, word_limit)
}

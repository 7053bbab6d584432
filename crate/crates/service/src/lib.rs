//! HTTP service for interactive sessions: upload a corpus, answer pairwise
//! concept queries, get a personalized summary.
//!
//! Sessions are event-sourced. Each one is an append-only log on disk and is
//! rebuilt by replay when the service starts.

pub mod api;
pub mod session;
pub mod store;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use summation_core::ingest::Corpus;
use summation_core::pipeline::{organize, Organized, OrganizeConfig};

pub use api::router;
use session::Session;
use store::{CorpusMeta, Store};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub data_dir: PathBuf,
    pub port: u16,
    pub seed: u64,
}

impl Config {
    /// Reads `SUMMATION_DATA_DIR`, `SUMMATION_PORT` and `SUMMATION_SEED`.
    pub fn from_env() -> Result<Self, String> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let port = match var("SUMMATION_PORT") {
            Some(v) => v.parse().map_err(|_| format!("SUMMATION_PORT: not a port number: {v:?}"))?,
            None => 8080,
        };
        let seed = match var("SUMMATION_SEED") {
            Some(v) => v.parse().map_err(|_| format!("SUMMATION_SEED: not an unsigned integer: {v:?}"))?,
            None => 42,
        };
        let data_dir = var("SUMMATION_DATA_DIR").map_or_else(|| PathBuf::from("summation-data"), PathBuf::from);
        Ok(Config { data_dir, port, seed })
    }
}

#[derive(Debug, Clone)]
pub enum CorpusStatus {
    Building,
    Ready(Arc<Organized>),
    Failed(String),
}

pub struct AppState {
    pub store: Store,
    pub seed: u64,
    pub corpora: RwLock<HashMap<String, CorpusStatus>>,
    pub sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

pub fn organize_config(seed: u64) -> OrganizeConfig {
    OrganizeConfig { seed, ..OrganizeConfig::default() }
}

pub fn build_corpus(meta: &CorpusMeta, jsonl: &str) -> CorpusStatus {
    let built = Corpus::parse_jsonl(jsonl)
        .map_err(|e| e.to_string())
        .and_then(|corpus| organize(&corpus, &[], None, &organize_config(meta.seed)).map_err(|e| e.to_string()));
    match built {
        Ok(org) => CorpusStatus::Ready(Arc::new(org)),
        Err(e) => CorpusStatus::Failed(e),
    }
}

impl AppState {
    pub fn new(store: Store, seed: u64) -> Self {
        AppState { store, seed, corpora: RwLock::default(), sessions: RwLock::default() }
    }

    /// Rebuilds every stored corpus and replays every stored session. Blocks.
    pub fn load(store: Store, seed: u64) -> Result<Self, String> {
        let state = AppState::new(store, seed);
        let corpora = state.store.corpora().map_err(|e| format!("reading corpora: {e}"))?;
        for (meta, text) in corpora {
            let status = build_corpus(&meta, &text);
            state.corpora.write().expect("lock").insert(meta.corpus_id, status);
        }
        for id in state.store.session_ids().map_err(|e| format!("listing sessions: {e}"))? {
            let (header, events) = state.store.read_session(&id).map_err(|e| format!("session {id}: {e}"))?;
            let organized = match state.corpora.read().expect("lock").get(&header.corpus_id) {
                Some(CorpusStatus::Ready(org)) => org.clone(),
                _ => return Err(format!("session {id}: corpus {} is unavailable", header.corpus_id)),
            };
            let session = Session::replay(header, &events, organized).map_err(|e| format!("session {id}: {e}"))?;
            state.sessions.write().expect("lock").insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_defaults_and_errors() {
        // one test touches the environment to avoid races between tests
        std::env::remove_var("SUMMATION_DATA_DIR");
        std::env::remove_var("SUMMATION_PORT");
        std::env::remove_var("SUMMATION_SEED");
        assert_eq!(Config::from_env().unwrap(), Config { data_dir: "summation-data".into(), port: 8080, seed: 42 });
        std::env::set_var("SUMMATION_PORT", "nope");
        assert!(Config::from_env().is_err());
        std::env::set_var("SUMMATION_PORT", "9000");
        std::env::set_var("SUMMATION_SEED", "7");
        std::env::set_var("SUMMATION_DATA_DIR", "/tmp/x");
        assert_eq!(Config::from_env().unwrap(), Config { data_dir: "/tmp/x".into(), port: 9000, seed: 7 });
    }
}

//! One user's query/feedback/summary session. All methods are synchronous;
//! callers serialize access per session.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use summation_core::features::{check_set_size, FeatureMatrix};
use summation_core::pipeline::{summarize, Organized, RunConfig};
use summation_core::policy::{Policy, SummarySelection};
use summation_core::preference::{chain_pairs, Choice, PreferenceRecord, QueryLoop, QueryPair, UtilityModel};
use thiserror::Error;

use crate::store::{Mark, SessionEvent, SessionHeader};

pub const MAX_QUERY_BUDGET: usize = 1000;
pub const MAX_SUMMARY_BUDGET: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Querying,
    Trained,
    Done,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Internal(String),
}

fn internal(e: impl std::fmt::Display) -> SessionError {
    SessionError::Internal(e.to_string())
}

pub fn validate(header: &SessionHeader) -> Result<(), SessionError> {
    check_set_size(header.feature_set_size).map_err(|e| SessionError::Unprocessable(e.to_string()))?;
    if header.query_budget > MAX_QUERY_BUDGET {
        return Err(SessionError::Unprocessable(format!("query_budget must be at most {MAX_QUERY_BUDGET}")));
    }
    if header.summary_budget == 0 || header.summary_budget > MAX_SUMMARY_BUDGET {
        return Err(SessionError::Unprocessable(format!("summary_budget must be between 1 and {MAX_SUMMARY_BUDGET}")));
    }
    if header.round_size == 0 {
        return Err(SessionError::Unprocessable("round_size must be positive".into()));
    }
    Ok(())
}

pub fn run_config(header: &SessionHeader) -> RunConfig {
    RunConfig {
        query_budget: header.query_budget,
        summary_budget: header.summary_budget,
        feature_set: header.feature_set_size,
        round_size: header.round_size,
        seed: header.seed,
        ..RunConfig::default()
    }
}

/// Client-facing snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub corpus_id: String,
    pub state: SessionState,
    pub query_budget: usize,
    pub queries_served: usize,
    pub budget_remaining: usize,
    pub preferences: Vec<PreferenceRecord>,
    pub pending: Option<QueryPair>,
    pub model: UtilityModel,
    pub summary_budget: usize,
    pub feature_set_size: usize,
    pub summary: Option<SummarySelection>,
}

pub struct Session {
    pub header: SessionHeader,
    pub state: SessionState,
    organized: Arc<Organized>,
    features: FeatureMatrix,
    query_loop: QueryLoop,
    policy: Option<Policy>,
    summary: Option<SummarySelection>,
}

impl Session {
    pub fn new(header: SessionHeader, organized: Arc<Organized>) -> Result<Self, SessionError> {
        validate(&header)?;
        let features = organized.features(header.feature_set_size).map_err(internal)?;
        let query_loop = QueryLoop::new(run_config(&header).loop_config(), &features);
        let mut session =
            Session { state: SessionState::Querying, query_loop, features, organized, header, policy: None, summary: None };
        session.settle()?;
        Ok(session)
    }

    pub fn run_config(&self) -> RunConfig {
        run_config(&self.header)
    }

    pub fn model(&self) -> &UtilityModel {
        &self.query_loop.model
    }

    pub fn policy(&self) -> Option<&Policy> {
        self.policy.as_ref()
    }

    pub fn label(&self, concept: usize) -> String {
        self.organized.concepts.iter().find(|c| c.id == concept).map(|c| c.canonical_label.clone()).unwrap_or_default()
    }

    /// Moves to `Trained` once no further query can be served.
    fn settle(&mut self) -> Result<(), SessionError> {
        if self.state != SessionState::Querying || self.query_loop.pending.is_some() {
            return Ok(());
        }
        let unasked = chain_pairs(&self.organized.hierarchy).len().saturating_sub(self.query_loop.records.len());
        if self.query_loop.remaining() == 0 || unasked == 0 {
            self.finish()?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), SessionError> {
        self.query_loop.pending = None;
        self.query_loop.finish(&self.features).map_err(internal)?;
        self.state = SessionState::Trained;
        Ok(())
    }

    /// The pending query, a fresh one, or `None` when querying is over.
    pub fn next_query(&mut self) -> Result<Option<QueryPair>, SessionError> {
        if self.state != SessionState::Querying {
            return Ok(None);
        }
        let next = self.query_loop.next_query(&self.organized.hierarchy, &self.features).map_err(internal)?;
        if next.is_none() {
            self.finish()?;
        }
        Ok(next)
    }

    pub fn answer(&mut self, choice: Choice) -> Result<PreferenceRecord, SessionError> {
        match self.state {
            SessionState::Done => return Err(SessionError::Conflict("session is done".into())),
            SessionState::Trained => return Err(SessionError::Conflict("querying is over".into())),
            SessionState::Querying => {}
        }
        if self.query_loop.pending.is_none() {
            return Err(SessionError::Conflict("no pending query".into()));
        }
        let record = self.query_loop.answer(choice, &self.features).map_err(internal)?;
        self.settle()?;
        Ok(record)
    }

    /// Ends querying early, dropping any pending query.
    pub fn skip(&mut self) -> Result<(), SessionError> {
        match self.state {
            SessionState::Querying => self.finish(),
            _ => Ok(()),
        }
    }

    /// Trains the policy on first use and returns the summary.
    pub fn summary(&mut self) -> Result<&SummarySelection, SessionError> {
        if self.state == SessionState::Querying {
            return Err(SessionError::Unprocessable(format!(
                "{} queries remain; answer them or skip the rest",
                self.query_loop.remaining()
            )));
        }
        if self.summary.is_none() {
            let (_, policy, summary) =
                summarize(&self.organized, &self.features, &self.query_loop.model, &self.run_config()).map_err(internal)?;
            self.policy = Some(policy);
            self.summary = Some(summary);
        }
        self.state = SessionState::Done;
        Ok(self.summary.as_ref().expect("summary was just set"))
    }

    /// Rebuilds a session from its log.
    pub fn replay(header: SessionHeader, events: &[SessionEvent], organized: Arc<Organized>) -> Result<Self, SessionError> {
        let mut session = Session::new(header, organized)?;
        for (i, event) in events.iter().enumerate() {
            match event {
                SessionEvent::Answer(entry) => {
                    let pair = session.next_query()?;
                    let expected = entry.record().pair;
                    if pair.as_ref() != Some(&expected) {
                        return Err(SessionError::Internal(format!(
                            "log event {}: expected query {expected:?}, replay produced {pair:?}",
                            i + 1
                        )));
                    }
                    session.answer(entry.choice)?;
                }
                SessionEvent::Mark(m) => match m.event {
                    Mark::Skip => session.skip()?,
                    Mark::Summary => {
                        session.summary()?;
                    }
                },
            }
        }
        Ok(session)
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.header.session_id.clone(),
            corpus_id: self.header.corpus_id.clone(),
            state: self.state,
            query_budget: self.header.query_budget,
            queries_served: self.query_loop.served,
            budget_remaining: self.query_loop.remaining(),
            preferences: self.query_loop.records.clone(),
            pending: self.query_loop.pending.clone(),
            model: self.query_loop.model.clone(),
            summary_budget: self.header.summary_budget,
            feature_set_size: self.header.feature_set_size,
            summary: self.summary.clone(),
        }
    }
}

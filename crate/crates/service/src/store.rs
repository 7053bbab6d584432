//! On-disk layout under the data directory.
//!
//! ```text
//! corpora/<id>.jsonl        corpus as submitted
//! corpora/<id>.meta.json    build settings
//! sessions/<id>.jsonl       header line, then one line per event
//! ```
//!
//! Session logs are append-only. Answer lines use the preference log format;
//! replaying them through a fresh query loop rebuilds the session exactly.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use summation_core::preference::PreferenceLogEntry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub corpus_id: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    pub corpus_id: String,
    pub query_budget: usize,
    pub summary_budget: usize,
    pub feature_set_size: usize,
    pub round_size: usize,
    pub seed: u64,
    pub created: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    /// Querying ended early at the user's request.
    Skip,
    /// The summary was generated.
    Summary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkEvent {
    pub event: Mark,
    pub timestamp: String,
}

/// A line of a session log after the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SessionEvent {
    Answer(PreferenceLogEntry),
    Mark(MarkEvent),
}

impl SessionEvent {
    pub fn mark(event: Mark, timestamp: String) -> Self {
        SessionEvent::Mark(MarkEvent { event, timestamp })
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("corpora"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn corpus_path(&self, id: &str) -> PathBuf {
        self.root.join("corpora").join(format!("{id}.jsonl"))
    }

    fn meta_path(&self, id: &str) -> PathBuf {
        self.root.join("corpora").join(format!("{id}.meta.json"))
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.jsonl"))
    }

    pub fn save_corpus(&self, meta: &CorpusMeta, jsonl: &str) -> std::io::Result<()> {
        fs::write(self.corpus_path(&meta.corpus_id), jsonl)?;
        fs::write(self.meta_path(&meta.corpus_id), serde_json::to_string(meta)?)
    }

    /// Every stored corpus, sorted by id.
    pub fn corpora(&self) -> std::io::Result<Vec<(CorpusMeta, String)>> {
        let mut out = Vec::new();
        for path in sorted_entries(&self.root.join("corpora"), ".meta.json")? {
            let meta: CorpusMeta = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let text = fs::read_to_string(self.corpus_path(&meta.corpus_id))?;
            out.push((meta, text));
        }
        Ok(out)
    }

    pub fn create_session(&self, header: &SessionHeader) -> std::io::Result<()> {
        let mut file = OpenOptions::new().write(true).create_new(true).open(self.session_path(&header.session_id))?;
        writeln!(file, "{}", serde_json::to_string(header)?)?;
        file.sync_data()
    }

    pub fn append(&self, session_id: &str, event: &SessionEvent) -> std::io::Result<()> {
        let mut file = OpenOptions::new().append(true).open(self.session_path(session_id))?;
        writeln!(file, "{}", serde_json::to_string(event)?)?;
        file.sync_data()
    }

    pub fn read_session(&self, session_id: &str) -> std::io::Result<(SessionHeader, Vec<SessionEvent>)> {
        read_log(&self.session_path(session_id))
    }

    /// Ids of every stored session, sorted.
    pub fn session_ids(&self) -> std::io::Result<Vec<String>> {
        Ok(sorted_entries(&self.root.join("sessions"), ".jsonl")?
            .iter()
            .filter_map(|p| p.file_name()?.to_str()?.strip_suffix(".jsonl").map(String::from))
            .collect())
    }
}

fn sorted_entries(dir: &Path, suffix: &str) -> std::io::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)))
        .collect();
    paths.sort();
    Ok(paths)
}

fn invalid(line: usize, e: serde_json::Error) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {e}"))
}

pub fn read_log(path: &Path) -> std::io::Result<(SessionHeader, Vec<SessionEvent>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "empty session log"))??;
    let header = serde_json::from_str(&first).map_err(|e| invalid(1, e))?;
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line).map_err(|e| invalid(i + 2, e))?);
        }
    }
    Ok((header, events))
}

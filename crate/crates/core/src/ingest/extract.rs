use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexicon::{self, is_capitalized};
use super::segment::tokenize;
use super::{IngestError, Sentence, Span, TripleMention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractMode {
    Heuristic,
    Preextracted,
}

/// One record of a pre-extracted triples file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalTriple {
    pub doc_id: String,
    pub sent_index: usize,
    pub subject: String,
    pub relation: String,
    pub object: String,
}

pub fn parse_external_triples(text: &str) -> Result<Vec<ExternalTriple>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ExternalTriple = serde_json::from_str(line)
            .map_err(|e| IngestError::Format { line: i + 1, message: e.to_string() })?;
        for (field, value) in [("subject", &record.subject), ("relation", &record.relation), ("object", &record.object)] {
            if tokenize(value).is_empty() {
                return Err(IngestError::Format { line: i + 1, message: format!("{field} has no word tokens") });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_external_triples(path: impl AsRef<Path>) -> Result<Vec<ExternalTriple>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_external_triples(&text)
}

/// Extracts raw (un-normalized) triples from one sentence.
///
/// Heuristic mode finds the first verb group; the subject is the noun-phrase
/// run directly before it and the object is the rest of the clause after it.
/// At most one triple is produced per sentence. Pre-extracted mode returns
/// the external records addressed to this sentence.
pub fn extract_triples(
    sentence: &Sentence,
    mode: ExtractMode,
    external: &[ExternalTriple],
) -> Result<Vec<TripleMention>, IngestError> {
    match mode {
        ExtractMode::Heuristic => Ok(heuristic(sentence).into_iter().collect()),
        ExtractMode::Preextracted => external
            .iter()
            .filter(|r| r.doc_id == sentence.doc_id && r.sent_index == sentence.index)
            .map(|r| from_external(sentence, r))
            .collect(),
    }
}

fn from_external(sentence: &Sentence, record: &ExternalTriple) -> Result<TripleMention, IngestError> {
    let span = |text: &str, field: &str| -> Result<Span, IngestError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(IngestError::Format { line: 0, message: format!("{field} has no word tokens") });
        }
        let start = find_subsequence(&sentence.tokens, &tokens);
        Ok(Span::new(tokens, start))
    };
    Ok(TripleMention {
        subject: span(&record.subject, "subject")?,
        relation: span(&record.relation, "relation")?,
        object: span(&record.object, "object")?,
        doc_id: sentence.doc_id.clone(),
        sent_index: sentence.index,
    })
}

fn find_subsequence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn lower(token: &str) -> String {
    token.to_lowercase()
}

/// Verb test in context: a capitalized word after position 0 is a proper
/// noun, and a word right after a determiner or preposition is a noun.
fn is_verb_at(tokens: &[String], i: usize) -> bool {
    let token = &tokens[i];
    if i > 0 && is_capitalized(token) {
        return false;
    }
    if i > 0 {
        let prev = lower(&tokens[i - 1]);
        if lexicon::is_determiner(&prev) || lexicon::is_preposition(&prev) || lexicon::is_possessive(&prev) {
            return false;
        }
    }
    lexicon::is_verb_form(&lower(token))
}

fn is_verb_continuation(tokens: &[String], i: usize) -> bool {
    let token = &tokens[i];
    if is_capitalized(token) {
        return false;
    }
    let l = lower(token);
    lexicon::is_verb_form(&l) || lexicon::is_gerund(&l)
}

/// Returns `[start, end)` of the first verb group.
fn verb_group(tokens: &[String]) -> Option<(usize, usize)> {
    let start = (0..tokens.len()).find(|&i| is_verb_at(tokens, i))?;
    let mut end = start + 1;
    loop {
        if end >= tokens.len() {
            break;
        }
        let l = lower(&tokens[end]);
        if is_verb_continuation(tokens, end) {
            end += 1;
        } else if end + 1 < tokens.len()
            && (((lexicon::is_group_adverb(&l) || (l.ends_with("ly") && l.len() > 4)) && is_verb_continuation(tokens, end + 1))
                || (l == "to" && lexicon::verb_forms().contains(&lower(&tokens[end + 1]))))
        {
            // adverb or "to" followed by a verb
            end += 2;
        } else {
            break;
        }
    }
    Some((start, end))
}

fn heuristic(sentence: &Sentence) -> Option<TripleMention> {
    let tokens = &sentence.tokens;
    let (v_start, v_end) = verb_group(tokens)?;

    // Walk left from the verb over the noun-phrase run.
    let mut s_start = v_start;
    while s_start > 0 {
        let token = &tokens[s_start - 1];
        let l = lower(token);
        if lexicon::is_determiner(&l) || lexicon::is_pronoun(&l) {
            s_start -= 1;
            break;
        }
        if lexicon::is_conjunction(&l) || lexicon::is_noun_like(token) {
            s_start -= 1;
            continue;
        }
        break;
    }
    while s_start < v_start && lexicon::is_conjunction(&lower(&tokens[s_start])) {
        s_start += 1;
    }
    if s_start == v_start {
        return None;
    }

    // The object runs to the end of the clause.
    let mut o_end = v_end;
    while o_end < tokens.len() {
        let l = lower(&tokens[o_end]);
        if lexicon::is_subordinator(&l) {
            break;
        }
        if lexicon::is_conjunction(&l) && o_end + 1 < tokens.len() && is_verb_at(tokens, o_end + 1) {
            break;
        }
        if o_end > v_end && is_verb_at(tokens, o_end) {
            break;
        }
        o_end += 1;
    }
    if o_end == v_end {
        return None;
    }

    Some(TripleMention {
        subject: Span::new(tokens[s_start..v_start].to_vec(), Some(s_start)),
        relation: Span::new(tokens[v_start..v_end].to_vec(), Some(v_start)),
        object: Span::new(tokens[v_end..o_end].to_vec(), Some(v_end)),
        doc_id: sentence.doc_id.clone(),
        sent_index: sentence.index,
    })
}

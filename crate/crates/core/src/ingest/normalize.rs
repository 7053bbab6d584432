use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lexicon;
use super::{Sentence, Span, TripleMention};

pub const MAX_CONCEPT_TOKENS: usize = 5;

/// Counts of what normalization did. Drops are never errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeStats {
    pub input: usize,
    pub output: usize,
    pub conjunct_splits: usize,
    pub pronouns_resolved: usize,
    pub dropped_unresolved_pronoun: usize,
    pub dropped_too_long: usize,
    pub dropped_no_noun: usize,
}

/// Applies the mention rules to concept arguments (subject and object):
///
/// 1. split on "and"/"or" into one triple per conjunct (subject × object);
/// 2. strip leading determiners;
/// 3. replace a pronoun-only argument with the most recent preceding
///    concept argument of the same document, falling back to the nearest
///    preceding noun-like token run in the sentence context; drop the
///    triple if neither exists;
/// 4. drop the triple if an argument has more than five tokens or no
///    noun-like token.
///
/// Relations are passed through untouched. Input order is preserved.
pub fn normalize_mentions(triples: &[TripleMention], sentence_context: &[Sentence]) -> (Vec<TripleMention>, NormalizeStats) {
    let sentences: HashMap<(&str, usize), &Sentence> =
        sentence_context.iter().map(|s| ((s.doc_id.as_str(), s.index), s)).collect();
    let mut stats = NormalizeStats { input: triples.len(), ..Default::default() };
    let mut out = Vec::new();
    // most recent surviving concept argument per document
    let mut last_argument: HashMap<String, Span> = HashMap::new();

    for triple in triples {
        let subjects = split_conjuncts(&triple.subject);
        let objects = split_conjuncts(&triple.object);
        if subjects.is_empty() || objects.is_empty() {
            stats.dropped_no_noun += 1;
            continue;
        }
        stats.conjunct_splits += subjects.len() * objects.len() - 1;

        for subject in &subjects {
            for object in &objects {
                let mut candidate = triple.clone();
                candidate.subject = subject.clone();
                candidate.object = object.clone();

                let mut resolved = true;
                for which in [Arg::Subject, Arg::Object] {
                    let span = which.get(&candidate).clone();
                    if !is_pronoun_only(&span) {
                        continue;
                    }
                    let antecedent = match which {
                        // the subject of the same triple precedes its object
                        Arg::Object if is_valid_argument(&candidate.subject) => Some(candidate.subject.clone()),
                        _ => last_argument.get(&candidate.doc_id).cloned(),
                    }
                    .or_else(|| scan_context(&sentences, &candidate, &span));
                    match antecedent {
                        Some(a) => {
                            *which.get_mut(&mut candidate) = a;
                            stats.pronouns_resolved += 1;
                        }
                        None => {
                            resolved = false;
                            break;
                        }
                    }
                }
                if !resolved {
                    stats.dropped_unresolved_pronoun += 1;
                    continue;
                }
                if candidate.subject.len() > MAX_CONCEPT_TOKENS || candidate.object.len() > MAX_CONCEPT_TOKENS {
                    stats.dropped_too_long += 1;
                    continue;
                }
                if !has_noun(&candidate.subject) || !has_noun(&candidate.object) {
                    stats.dropped_no_noun += 1;
                    continue;
                }
                last_argument.insert(candidate.doc_id.clone(), candidate.object.clone());
                out.push(candidate);
            }
        }
    }
    stats.output = out.len();
    (out, stats)
}

#[derive(Clone, Copy)]
enum Arg {
    Subject,
    Object,
}

impl Arg {
    fn get(self, t: &TripleMention) -> &Span {
        match self {
            Arg::Subject => &t.subject,
            Arg::Object => &t.object,
        }
    }

    fn get_mut(self, t: &mut TripleMention) -> &mut Span {
        match self {
            Arg::Subject => &mut t.subject,
            Arg::Object => &mut t.object,
        }
    }
}

fn lower(token: &str) -> String {
    token.to_lowercase()
}

pub(crate) fn strip_determiners(span: &Span) -> Span {
    let skip = span.tokens.iter().take_while(|t| lexicon::is_determiner(&lower(t))).count();
    Span::new(span.tokens[skip..].to_vec(), span.start.map(|s| s + skip))
}

fn split_conjuncts(span: &Span) -> Vec<Span> {
    let mut parts = Vec::new();
    let mut begin = 0;
    for i in 0..=span.tokens.len() {
        if i == span.tokens.len() || lexicon::is_conjunction(&lower(&span.tokens[i])) {
            if i > begin {
                let part = Span::new(span.tokens[begin..i].to_vec(), span.start.map(|s| s + begin));
                let part = strip_determiners(&part);
                if !part.is_empty() {
                    parts.push(part);
                }
            }
            begin = i + 1;
        }
    }
    parts
}

fn is_pronoun_only(span: &Span) -> bool {
    !span.is_empty() && span.tokens.iter().all(|t| lexicon::is_pronoun(&lower(t)))
}

fn has_noun(span: &Span) -> bool {
    span.tokens.iter().any(|t| lexicon::is_noun_like(t))
}

fn is_valid_argument(span: &Span) -> bool {
    !span.is_empty() && span.len() <= MAX_CONCEPT_TOKENS && has_noun(span) && !is_pronoun_only(span)
}

/// Nearest noun-like token run before `pronoun`, searching backwards through
/// the current sentence and then earlier sentences of the same document.
fn scan_context(sentences: &HashMap<(&str, usize), &Sentence>, triple: &TripleMention, pronoun: &Span) -> Option<Span> {
    let limit = pronoun.start.unwrap_or(0);
    if let Some(sentence) = sentences.get(&(triple.doc_id.as_str(), triple.sent_index)) {
        if let Some(span) = last_noun_run(&sentence.tokens[..limit.min(sentence.tokens.len())]) {
            return Some(span);
        }
    }
    (0..triple.sent_index).rev().find_map(|index| {
        sentences.get(&(triple.doc_id.as_str(), index)).and_then(|s| last_noun_run(&s.tokens))
    })
}

fn last_noun_run(tokens: &[String]) -> Option<Span> {
    let end = tokens.iter().rposition(|t| lexicon::is_noun_like(t))? + 1;
    let mut start = end - 1;
    while start > 0 && lexicon::is_noun_like(&tokens[start - 1]) {
        start -= 1;
    }
    Some(Span::new(tokens[start..end].to_vec(), Some(start)))
}

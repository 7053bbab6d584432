//! Grouping argument mentions into concepts, and the concept graph built from
//! triples and sentence co-occurrence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, embed_concept, VectorStore};
use crate::ingest::{lexicon, TripleMention};

/// One occurrence of a concept argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMention {
    pub tokens: Vec<String>,
    pub doc_id: String,
    pub sent_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
}

impl ConceptMention {
    pub fn surface(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: usize,
    pub canonical_label: String,
    pub mentions: Vec<ConceptMention>,
    pub vector: Vec<f64>,
    pub frequency: usize,
    /// Number of exact-match groups merged into this one by similarity.
    pub merge_count: usize,
}

impl Concept {
    pub fn label_tokens(&self) -> Vec<String> {
        self.canonical_label.split(' ').map(str::to_string).collect()
    }
}

/// Case-folded surface with leading determiners removed.
pub fn mention_key<S: AsRef<str>>(tokens: &[S]) -> String {
    let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let skip = lower.iter().take_while(|t| lexicon::is_determiner(t)).count();
    lower[skip..].join(" ")
}

/// Subject and object mentions of the triples, in order.
pub fn mentions_from_triples(triples: &[TripleMention]) -> Vec<ConceptMention> {
    triples
        .iter()
        .flat_map(|t| {
            [&t.subject, &t.object].into_iter().map(|span| ConceptMention {
                tokens: span.tokens.clone(),
                doc_id: t.doc_id.clone(),
                sent_index: t.sent_index,
                start: span.start,
            })
        })
        .collect()
}

struct Group {
    mentions: Vec<usize>,
    vector: Vec<f64>,
}

/// Most frequent surface form; ties go to the earliest mention.
fn canonical_surface(mentions: &[ConceptMention], members: &[usize]) -> String {
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for &m in members {
        let entry = counts.entry(mentions[m].surface()).or_insert((0, m));
        entry.0 += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(surface, _)| surface)
        .expect("group is nonempty")
}

/// Two-stage grouping: exact match on [`mention_key`], then a greedy merge in
/// descending frequency order where each group joins the most similar
/// existing concept whose seed vector has cosine `>= tau`, or starts a new
/// one. Concept ids follow creation order.
pub fn group_mentions(mentions: &[ConceptMention], store: &VectorStore, tau: f64) -> Vec<Concept> {
    let mut key_index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (i, mention) in mentions.iter().enumerate() {
        let key = mention_key(&mention.tokens);
        if key.is_empty() {
            continue;
        }
        let g = *key_index.entry(key).or_insert_with(|| {
            groups.push(Group { mentions: Vec::new(), vector: Vec::new() });
            groups.len() - 1
        });
        groups[g].mentions.push(i);
    }
    for group in &mut groups {
        let surface = canonical_surface(mentions, &group.mentions);
        let tokens: Vec<&str> = surface.split(' ').collect();
        group.vector = embed_concept(&tokens, store).vector;
    }

    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&g| (std::cmp::Reverse(groups[g].mentions.len()), groups[g].mentions[0]));

    // (seed group, member groups)
    let mut merged: Vec<(usize, Vec<usize>)> = Vec::new();
    for g in order {
        let mut best: Option<(usize, f64)> = None;
        for (c, (seed, _)) in merged.iter().enumerate() {
            let sim = cosine(&groups[*seed].vector, &groups[g].vector).unwrap_or(0.0);
            if sim >= tau && best.is_none_or(|(_, b)| sim > b) {
                best = Some((c, sim));
            }
        }
        match best {
            Some((c, _)) => merged[c].1.push(g),
            None => merged.push((g, vec![g])),
        }
    }

    merged
        .into_iter()
        .enumerate()
        .map(|(id, (_, member_groups))| {
            let mut members: Vec<usize> = member_groups.iter().flat_map(|&g| groups[g].mentions.iter().copied()).collect();
            members.sort_unstable();
            let canonical_label = canonical_surface(mentions, &members);
            let tokens: Vec<&str> = canonical_label.split(' ').collect();
            let vector = embed_concept(&tokens, store).vector;
            Concept {
                id,
                canonical_label,
                frequency: members.len(),
                mentions: members.iter().map(|&m| mentions[m].clone()).collect(),
                vector,
                merge_count: member_groups.len() - 1,
            }
        })
        .collect()
}

/// A relation edge between two distinct concepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub from: usize,
    pub to: usize,
    /// Most frequent relation phrase for the pair.
    pub phrase: String,
    pub count: usize,
}

/// Relations from triples plus sentence-level co-occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptGraph {
    pub relations: Vec<Relation>,
    /// `(a, b)` with `a < b` → number of sentences mentioning both.
    #[serde(with = "pair_map")]
    pub cooccurrence: BTreeMap<(usize, usize), usize>,
}

mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(usize, usize), usize>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(&(a, b), &c)| (a, b, c)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), usize>, D::Error> {
        let rows = Vec::<(usize, usize, usize)>::deserialize(d)?;
        Ok(rows.into_iter().map(|(a, b, c)| ((a, b), c)).collect())
    }
}

impl ConceptGraph {
    pub fn build(triples: &[TripleMention], concepts: &[Concept]) -> Self {
        let mut by_key: HashMap<String, usize> = HashMap::new();
        for concept in concepts {
            for mention in &concept.mentions {
                by_key.entry(mention_key(&mention.tokens)).or_insert(concept.id);
            }
        }
        let mut phrases: BTreeMap<(usize, usize), BTreeMap<String, usize>> = BTreeMap::new();
        let mut sentences: BTreeMap<(String, usize), BTreeSet<usize>> = BTreeMap::new();
        for t in triples {
            let (Some(&a), Some(&b)) = (by_key.get(&mention_key(&t.subject.tokens)), by_key.get(&mention_key(&t.object.tokens))) else {
                continue;
            };
            let in_sentence = sentences.entry((t.doc_id.clone(), t.sent_index)).or_default();
            in_sentence.insert(a);
            in_sentence.insert(b);
            if a != b {
                let phrase = t.relation.tokens.iter().map(|x| x.to_lowercase()).collect::<Vec<_>>().join(" ");
                *phrases.entry((a, b)).or_default().entry(phrase).or_default() += 1;
            }
        }
        let relations = phrases
            .into_iter()
            .map(|((from, to), counts)| {
                let count = counts.values().sum();
                let phrase = counts
                    .iter()
                    .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
                    .map(|(p, _)| p.clone())
                    .expect("at least one phrase");
                Relation { from, to, phrase, count }
            })
            .collect();
        let mut cooccurrence = BTreeMap::new();
        for ids in sentences.values() {
            let ids: Vec<usize> = ids.iter().copied().collect();
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    *cooccurrence.entry((ids[i], ids[j])).or_insert(0) += 1;
                }
            }
        }
        ConceptGraph { relations, cooccurrence }
    }

    pub fn cooccurrence_count(&self, a: usize, b: usize) -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        self.cooccurrence.get(&key).copied().unwrap_or(0)
    }

    /// Concepts that co-occur with `id` in at least one sentence.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        self.cooccurrence
            .keys()
            .filter_map(|&(a, b)| if a == id { Some(b) } else if b == id { Some(a) } else { None })
            .collect()
    }
}

use super::{Document, Sentence};

const TERMINATORS: [char; 3] = ['.', '!', '?'];

/// Splits on runs of `.`, `!` or `?` that are followed either by the end of
/// the text or by whitespace and then an uppercase letter. Sentences with no
/// word tokens are dropped and do not consume an index.
pub fn segment_and_tokenize(doc: &Document) -> Vec<Sentence> {
    let text = doc.text.as_str();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && TERMINATORS.contains(&chars[j].1) {
            j += 1;
        }
        let end_byte = if j < chars.len() { chars[j].0 } else { text.len() };
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = k == chars.len() || (k > j && chars[k].1.is_uppercase());
        if boundary {
            push_sentence(&mut sentences, doc, &text[start..end_byte]);
            start = end_byte;
        }
        i = j;
    }
    if start < text.len() {
        push_sentence(&mut sentences, doc, &text[start..]);
    }
    sentences
}

fn push_sentence(out: &mut Vec<Sentence>, doc: &Document, raw: &str) {
    let raw = raw.trim();
    let tokens = tokenize(raw);
    if tokens.is_empty() {
        return;
    }
    out.push(Sentence { doc_id: doc.id.clone(), index: out.len(), tokens, raw: raw.to_string() });
}

/// Word tokens: maximal alphanumeric runs, keeping an apostrophe or hyphen
/// that sits between two alphanumerics ("don't", "long-term"). Punctuation
/// separates tokens and is not itself emitted. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        let joiner = matches!(c, '\'' | '-' | '\u{2019}')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if joiner {
            current.push(if c == '\u{2019}' { '\'' } else { c });
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

//! Closed-class word lists and the token-level heuristics built on them.
//!
//! There is no tagger here. A token is *noun-like* when it is not a
//! closed-class word and not a known verb form; a capitalized token that is
//! not closed-class counts as a proper noun regardless of the verb lists.

pub const DETERMINERS: &[&str] = &["the", "a", "an"];

pub const PRONOUNS: &[&str] = &[
    "i", "me", "my", "you", "your", "he", "him", "his", "she", "her", "it", "its", "we", "us",
    "our", "they", "them", "their", "this", "these", "those", "itself", "themselves",
];

const PREPOSITIONS: &[&str] = &[
    "about", "above", "across", "after", "against", "along", "among", "around", "as", "at",
    "before", "behind", "below", "beneath", "beside", "between", "beyond", "by", "despite",
    "down", "during", "except", "for", "from", "in", "inside", "into", "like", "near", "of",
    "off", "on", "onto", "out", "outside", "over", "past", "per", "since", "than", "through",
    "throughout", "to", "toward", "towards", "under", "underneath", "until", "up", "upon",
    "via", "with", "within", "without",
];

/// Words that open a subordinate or relative clause; extraction spans stop here.
pub const SUBORDINATORS: &[&str] = &[
    "that", "which", "who", "whom", "whose", "because", "while", "although", "though",
    "whereas", "when", "where", "whether", "if", "unless", "so", "but", "however",
];

const OTHER_STOPWORDS: &[&str] = &[
    "and", "or", "nor", "yet", "not", "no", "also", "very", "more", "most", "less", "least",
    "many", "much", "some", "any", "all", "each", "every", "both", "either", "neither",
    "other", "another", "such", "only", "just", "then", "there", "here", "too", "own", "same",
    "few", "several", "what", "how", "why", "whatever", "whoever", "again", "ever", "even",
    "still", "already", "often", "never", "always", "now", "thus", "therefore", "hence",
    "instead", "rather", "quite", "almost", "well", "one",
];

pub const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "having",
    "do", "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might",
    "must", "isn't", "aren't", "wasn't", "weren't", "hasn't", "haven't", "hadn't", "don't",
    "doesn't", "didn't", "won't", "wouldn't", "can't", "cannot", "couldn't", "shouldn't",
    "mustn't",
];

/// Adverbs allowed inside a verb group ("is not covered", "has also grown").
const GROUP_ADVERBS: &[&str] = &["not", "also", "often", "never", "always", "still", "already", "now", "largely", "mainly", "directly", "only"];

/// Regular verbs; inflections are generated by [`verb_forms`].
const REGULAR_VERBS: &[&str] = &[
    "accept", "account", "achieve", "add", "affect", "aim", "allocate", "allow", "announce",
    "appear", "apply", "approve", "argue", "arrive", "ask", "assess", "assist", "attack",
    "avoid", "ban", "believe", "benefit", "block", "boost", "call", "care", "cause", "change",
    "claim", "collect", "combine", "compare", "complete", "concern", "consider", "contain",
    "continue", "contribute", "control", "cover", "create", "cure", "cut", "damage",
    "decide", "decline", "deliver", "demand", "depend", "describe", "destroy", "detect",
    "determine", "develop", "die", "diagnose", "discover", "discuss", "drop", "earn",
    "enable", "encourage", "end", "enhance", "ensure", "enter", "establish", "estimate",
    "examine", "expand", "expect", "explain", "expose", "extend", "face", "fail", "fall",
    "fight", "finance", "fix", "focus", "follow", "force", "form", "fund", "gain", "generate",
    "govern", "grant", "guide", "handle", "happen", "harm", "help", "hire", "host", "identify",
    "ignore", "improve", "include", "increase", "indicate", "influence", "inform", "infect",
    "inhibit", "involve", "join", "launch", "lack", "last", "learn", "limit", "link", "list",
    "live", "locate", "look", "lower", "maintain", "manage", "mark", "measure", "monitor",
    "move", "need", "note", "obtain", "occur", "offer", "open", "operate", "oppose", "order",
    "organize", "organise", "own", "pay", "perform", "permit", "place", "plan", "play",
    "predict", "prefer", "prepare", "present", "prevent", "produce", "promise", "promote",
    "protect", "prove", "provide", "publish", "purchase", "raise", "reach", "receive",
    "recommend", "record", "reduce", "refer", "reflect", "refuse", "regulate", "reject",
    "relate", "release", "rely", "remain", "remove", "replace", "report", "represent",
    "require", "rescue", "research", "resist", "respond", "restore", "result", "return",
    "reveal", "review", "rise", "save", "screen", "search", "seem", "serve", "settle",
    "share", "shift", "show", "sign", "slow", "solve", "spread", "start", "state", "stay",
    "stop", "strengthen", "study", "subsidise", "subsidize", "succeed", "suffer", "suggest",
    "supply", "support", "survive", "target", "test", "threaten", "train", "transform",
    "treat", "trigger", "try", "turn", "underpin", "undergo", "use", "visit", "vote", "wait",
    "want", "warn", "watch", "work", "worry", "yield",
];

/// Irregular forms that are verbs in every inflection listed.
const IRREGULAR_FORMS: &[&str] = &[
    "became", "become", "becomes", "began", "begin", "begins", "begun", "bought", "brought",
    "build", "builds", "built", "buy", "buys", "bring", "brings", "came", "come", "comes",
    "chose", "chosen", "drew", "drawn", "drove", "driven", "fell", "fallen", "felt", "find",
    "finds", "found", "gave", "get", "gets", "give", "gives", "given", "go", "goes", "gone",
    "got", "grew", "grow", "grows", "grown", "held", "hold", "holds", "kept", "keep",
    "keeps", "knew", "know", "knows", "known", "lead", "leads", "led", "leave", "leaves",
    "left", "lost", "lose", "loses", "made", "make", "makes", "meant", "mean", "means", "met",
    "meet", "meets", "paid", "put", "puts", "ran", "rose", "risen", "run", "runs", "said",
    "say", "says", "saw", "see", "sees", "seen", "sent", "send", "sends", "set", "sets",
    "sold", "sell", "sells", "spent", "spend", "spends", "stood", "stand", "stands", "struck",
    "take", "takes", "taken", "took", "taught", "teach", "teaches", "thought", "think",
    "thinks", "told", "tell", "tells", "underwent", "undergone", "understood", "went", "won",
    "win", "wins", "wrote", "write", "writes", "written",
];

/// Words ending in "ed" that are not past tenses.
const ED_EXCEPTIONS: &[&str] = &["hundred", "indeed", "naked", "sacred", "wicked", "kindred", "shed", "bed", "red"];

fn contains(list: &[&str], lower: &str) -> bool {
    list.contains(&lower)
}

fn regular_inflections(base: &str) -> Vec<String> {
    let mut out = vec![base.to_string()];
    let bytes = base.as_bytes();
    let last = *bytes.last().unwrap_or(&b' ');
    let before_last = if bytes.len() >= 2 { bytes[bytes.len() - 2] } else { b' ' };
    let is_vowel = |c: u8| matches!(c, b'a' | b'e' | b'i' | b'o' | b'u');
    // third person
    if last == b'y' && !is_vowel(before_last) {
        out.push(format!("{}ies", &base[..base.len() - 1]));
        out.push(format!("{}ied", &base[..base.len() - 1]));
    } else {
        if base.ends_with('s') || base.ends_with("sh") || base.ends_with("ch") || base.ends_with('x') || base.ends_with('z') || base.ends_with('o') {
            out.push(format!("{base}es"));
        } else {
            out.push(format!("{base}s"));
        }
        if last == b'e' {
            out.push(format!("{base}d"));
        } else {
            out.push(format!("{base}ed"));
            // ban -> banned, stop -> stopped, underpin -> underpinned
            let len = bytes.len();
            if len >= 3
                && !is_vowel(last)
                && is_vowel(before_last)
                && !is_vowel(bytes[len - 3])
                && !matches!(last, b'w' | b'x' | b'y')
            {
                out.push(format!("{base}{}ed", last as char));
            }
        }
    }
    out
}

fn gerund(base: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(stem) = base.strip_suffix('e') {
        if !base.ends_with("ee") {
            out.push(format!("{stem}ing"));
        }
    }
    out.push(format!("{base}ing"));
    let bytes = base.as_bytes();
    if let Some(&last) = bytes.last() {
        out.push(format!("{base}{}ing", last as char));
    }
    out
}

/// Finite and participle forms of every regular verb (no gerunds).
pub fn verb_forms() -> &'static std::collections::HashSet<String> {
    use std::sync::OnceLock;
    static FORMS: OnceLock<std::collections::HashSet<String>> = OnceLock::new();
    FORMS.get_or_init(|| {
        let mut set: std::collections::HashSet<String> =
            IRREGULAR_FORMS.iter().map(|s| s.to_string()).collect();
        for verb in REGULAR_VERBS {
            set.extend(regular_inflections(verb));
        }
        set
    })
}

fn gerund_forms() -> &'static std::collections::HashSet<String> {
    use std::sync::OnceLock;
    static FORMS: OnceLock<std::collections::HashSet<String>> = OnceLock::new();
    FORMS.get_or_init(|| {
        let mut set = std::collections::HashSet::new();
        for verb in REGULAR_VERBS {
            set.extend(gerund(verb));
        }
        for verb in ["be", "have", "do", "become", "begin", "bring", "build", "buy", "come", "find", "get", "give", "go", "grow", "hold", "keep", "know", "lead", "leave", "lose", "make", "mean", "meet", "run", "say", "see", "send", "sell", "spend", "stand", "take", "teach", "think", "tell", "undergo", "win", "write"] {
            set.extend(gerund(verb));
        }
        set
    })
}

pub fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

pub fn is_determiner(lower: &str) -> bool {
    contains(DETERMINERS, lower)
}

pub fn is_pronoun(lower: &str) -> bool {
    contains(PRONOUNS, lower)
}

pub fn is_possessive(lower: &str) -> bool {
    matches!(lower, "my" | "your" | "his" | "her" | "its" | "our" | "their")
}

pub fn is_preposition(lower: &str) -> bool {
    contains(PREPOSITIONS, lower)
}

pub fn is_subordinator(lower: &str) -> bool {
    contains(SUBORDINATORS, lower)
}

pub fn is_conjunction(lower: &str) -> bool {
    lower == "and" || lower == "or"
}

pub fn is_auxiliary(lower: &str) -> bool {
    contains(AUXILIARIES, lower)
}

pub fn is_group_adverb(lower: &str) -> bool {
    contains(GROUP_ADVERBS, lower)
}

pub fn is_closed_class(lower: &str) -> bool {
    is_determiner(lower)
        || is_pronoun(lower)
        || is_preposition(lower)
        || is_subordinator(lower)
        || is_auxiliary(lower)
        || contains(OTHER_STOPWORDS, lower)
}

/// Finite verb or participle, judged on the lower-cased token.
pub fn is_verb_form(lower: &str) -> bool {
    if is_auxiliary(lower) || verb_forms().contains(lower) {
        return true;
    }
    lower.len() >= 5
        && lower.ends_with("ed")
        && !lower.ends_with("eed")
        && !contains(ED_EXCEPTIONS, lower)
        && lower.chars().all(|c| c.is_alphabetic())
}

pub fn is_gerund(lower: &str) -> bool {
    gerund_forms().contains(lower)
}

pub fn is_noun_like(token: &str) -> bool {
    if !token.chars().any(char::is_alphanumeric) {
        return false;
    }
    let lower = token.to_lowercase();
    if is_closed_class(&lower) {
        return false;
    }
    is_capitalized(token) || !is_verb_form(&lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inflections_cover_doubling() {
        assert!(is_verb_form("underpinned"));
        assert!(is_verb_form("underpins"));
        assert!(is_verb_form("studies"));
        assert!(is_verb_form("studied"));
        assert!(is_verb_form("provides"));
        assert!(is_verb_form("provided"));
        assert!(is_verb_form("banned"));
        assert!(is_gerund("providing"));
        assert!(is_gerund("reducing"));
    }

    #[test]
    fn noun_likeness() {
        assert!(is_noun_like("treatment"));
        assert!(is_noun_like("cancer"));
        assert!(is_noun_like("Scheme"));
        assert!(!is_noun_like("the"));
        assert!(!is_noun_like("It"));
        assert!(!is_noun_like("by"));
        assert!(!is_noun_like("underpinned"));
        // capitalized mid-sentence wins over the verb lists
        assert!(is_noun_like("Reading"));
        assert!(is_noun_like("Funds"));
        assert!(!is_noun_like("--"));
    }

    #[test]
    fn ed_exceptions_are_not_verbs() {
        assert!(!is_verb_form("hundred"));
        assert!(!is_verb_form("speed"));
        assert!(is_verb_form("targeted"));
    }
}

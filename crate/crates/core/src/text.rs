//! Tokenization, sentence splitting and the fallback part-of-speech tagger.
//!
//! Input that already carries tokens and tags is used as-is; everything here is
//! only consulted when a corpus arrives as raw text.

use serde::{Deserialize, Serialize};

/// One token with optional part-of-speech and named-entity tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            pos: None,
            ne: None,
        }
    }
}

const EDGE_PUNCT: &[char] = &[
    '.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']', '{', '}', '\u{2026}', '\u{201c}',
    '\u{201d}', '*', '<', '>', '`',
];

fn normalize_apostrophes(s: &str) -> String {
    s.replace(['\u{2019}', '\u{2018}'], "'")
}

/// Whitespace + punctuation tokenizer.
///
/// Leading and trailing punctuation is stripped from every whitespace chunk,
/// internal apostrophes and hyphens are kept (`didn't`, `seven-and-a-half`).
/// Chunks made only of punctuation produce no token.
pub fn tokenize(text: &str) -> Vec<String> {
    let text = normalize_apostrophes(text);
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        // "a;b" and "school..." style glue
        for piece in chunk.split([';', '\u{2026}']) {
            let trimmed = piece
                .trim_matches(|c: char| EDGE_PUNCT.contains(&c) || c == '\'' || c == '-');
            let trimmed = trimmed.trim_end_matches('.');
            if trimmed.chars().any(|c| c.is_alphanumeric()) {
                out.push(trimmed.to_string());
            }
        }
    }
    out
}

/// Lowercased tokens.
pub fn tokenize_lower(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Splits text into sentences at `.`, `!`, `?` (and runs of them) followed by
/// whitespace or end of text. Newlines also end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            push_sentence(&mut sentences, &mut current);
            i += 1;
            continue;
        }
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            while i + 1 < chars.len() && matches!(chars[i + 1], '.' | '!' | '?') {
                i += 1;
                current.push(chars[i]);
            }
            if i + 1 >= chars.len() || chars[i + 1].is_whitespace() {
                push_sentence(&mut sentences, &mut current);
            }
        }
        i += 1;
    }
    push_sentence(&mut sentences, &mut current);
    sentences
}

fn push_sentence(out: &mut Vec<String>, current: &mut String) {
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    current.clear();
}

/// The 25 coarse Penn Treebank tags counted by the part-of-speech features.
/// Tags outside this list are folded onto the closest member by [`coarse_tag`],
/// punctuation and symbols are dropped.
pub const POS_TAGS: [&str; 25] = [
    "CC", "CD", "DT", "EX", "IN", "JJ", "MD", "NN", "NNS", "NNP", "NNPS", "PRP", "PRP$", "RB",
    "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WRB",
];

pub fn coarse_tag(tag: &str) -> Option<&'static str> {
    let folded = match tag {
        "JJR" | "JJS" => "JJ",
        "RBR" | "RBS" | "RP" => "RB",
        "PDT" => "DT",
        "WP$" => "WP",
        "FW" => "NN",
        other => other,
    };
    POS_TAGS.iter().copied().find(|t| *t == folded)
}

pub fn pos_index(tag: &str) -> Option<usize> {
    let t = coarse_tag(tag)?;
    POS_TAGS.iter().position(|x| *x == t)
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any", "no",
    "another", "all", "both", "either", "neither",
];
const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "from", "up", "down", "of", "off", "over",
    "under", "since", "because", "if", "while", "than", "as", "like", "without", "within",
    "across", "toward", "towards", "upon", "whether", "though", "although", "unless", "until",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "yet", "so"];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "yourselves",
    "mine", "yours", "hers", "ours", "theirs", "i'm", "you're", "we're", "they're", "it's",
    "he's", "she's", "i've", "we've", "you've", "they've", "i'll", "we'll", "you'll", "i'd",
    "that's",
];
const POSSESSIVES: &[&str] = &["my", "your", "his", "her", "its", "our", "their"];
const MODALS: &[&str] = &[
    "can", "could", "may", "might", "must", "shall", "should", "will", "would", "won't",
    "can't", "cannot", "couldn't", "shouldn't", "wouldn't", "ought",
];
const WH_DET: &[&str] = &["which", "whatever", "whichever"];
const WH_PRON: &[&str] = &["who", "whom", "what", "whoever", "whose"];
const WH_ADV: &[&str] = &["where", "when", "why", "how", "whenever", "wherever"];
const INTERJECTIONS: &[&str] = &["oh", "yes", "no", "well", "hi", "hello", "thanks", "ok", "okay", "wow"];
const VBZ_WORDS: &[&str] = &["is", "has", "does", "doesn't", "isn't", "hasn't", "'s"];
const VBP_WORDS: &[&str] = &[
    "are", "am", "have", "do", "don't", "aren't", "haven't", "'re", "'ve",
];
const VBD_WORDS: &[&str] = &[
    "was", "were", "had", "did", "didn't", "wasn't", "weren't", "hadn't", "said", "went",
    "made", "got", "took", "came", "saw", "knew", "thought", "told", "found", "gave", "left",
    "felt", "became", "began", "brought", "bought", "built", "held", "kept", "lost", "meant",
    "met", "paid", "ran", "sat", "sent", "spent", "stood", "understood", "won", "wrote",
    "lied", "let", "put", "set", "cut", "hit", "led", "heard", "sold", "fought", "taught",
    "caught", "drove", "fell", "grew", "spoke", "chose", "broke", "forgot",
];
const VBN_WORDS: &[&str] = &["been", "done", "gone", "seen", "known", "taken", "given", "written", "shown"];
const BASE_AFTER: &[&str] = &["to", "will", "would", "can", "could", "should", "must", "might", "may", "shall", "won't", "can't", "cannot", "don't", "didn't", "doesn't", "let's"];

/// Rule-based fallback tagger emitting Penn Treebank tags.
///
/// Closed-class words come from fixed lists; open-class words are guessed from
/// suffixes and capitalization. Coarse but deterministic.
pub fn fallback_pos_tags(tokens: &[String]) -> Vec<String> {
    let mut tags: Vec<String> = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let lower = tok.to_lowercase();
        let prev = if i > 0 { Some(tokens[i - 1].to_lowercase()) } else { None };
        let tag = tag_word(tok, &lower, i, prev.as_deref(), tags.last().map(|s| s.as_str()));
        tags.push(tag.to_string());
    }
    tags
}

fn tag_word(tok: &str, lower: &str, idx: usize, prev: Option<&str>, prev_tag: Option<&str>) -> &'static str {
    let w = lower;
    if w.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.' || c == '$' || c == '%')
        && w.chars().any(|c| c.is_ascii_digit())
    {
        return "CD";
    }
    if w == "there" && idx == 0 {
        return "EX";
    }
    if w == "to" {
        return "TO";
    }
    let is = |list: &[&str]| list.contains(&w);
    if is(MODALS) {
        return "MD";
    }
    if is(VBZ_WORDS) {
        return "VBZ";
    }
    if is(VBP_WORDS) {
        return "VBP";
    }
    if w == "be" {
        return "VB";
    }
    if w == "being" {
        return "VBG";
    }
    if is(VBN_WORDS) {
        return "VBN";
    }
    if is(VBD_WORDS) {
        return "VBD";
    }
    if is(DETERMINERS) {
        return "DT";
    }
    if is(CONJUNCTIONS) {
        return "CC";
    }
    if is(PREPOSITIONS) {
        return "IN";
    }
    if is(POSSESSIVES) {
        return "PRP$";
    }
    if is(PRONOUNS) {
        return "PRP";
    }
    if is(WH_DET) {
        return "WDT";
    }
    if is(WH_PRON) {
        return "WP";
    }
    if is(WH_ADV) {
        return "WRB";
    }
    if is(INTERJECTIONS) {
        return "UH";
    }
    if matches!(w, "not" | "n't" | "never" | "very" | "also" | "just" | "too" | "here" | "now" | "then" | "there" | "still" | "already" | "even" | "only") {
        return "RB";
    }
    let capitalized = tok.chars().next().map(|c| c.is_uppercase()).unwrap_or(false);
    if capitalized && idx > 0 {
        return if w.ends_with('s') && w.len() > 3 && !w.ends_with("ss") { "NNPS" } else { "NNP" };
    }
    if let Some(p) = prev {
        if BASE_AFTER.contains(&p) {
            return "VB";
        }
    }
    if w.ends_with("ly") && w.len() > 4 {
        return "RB";
    }
    if w.ends_with("ing") && w.len() > 4 {
        return "VBG";
    }
    if w.ends_with("ed") && w.len() > 3 {
        // "was impeached", "have seen": participle after an auxiliary
        if matches!(prev_tag, Some("VBZ") | Some("VBP") | Some("VBD") | Some("VB") | Some("VBN")) {
            return "VBN";
        }
        return "VBD";
    }
    const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish", "ary", "est"];
    if w.len() > 4 && ADJ_SUFFIXES.iter().any(|s| w.ends_with(s)) {
        return "JJ";
    }
    if matches!(prev_tag, Some("PRP")) && !w.ends_with('s') {
        return "VBP";
    }
    if matches!(prev_tag, Some("PRP")) && w.ends_with('s') {
        return "VBZ";
    }
    if w.ends_with('s') && !w.ends_with("ss") && w.len() > 3 {
        return "NNS";
    }
    "NN"
}

/// Content words for query generation: nouns, verbs and adjectives.
pub fn is_content_tag(tag: &str) -> bool {
    tag.starts_with("NN") || tag.starts_with("VB") || tag.starts_with("JJ")
}

/// Capitalization heuristic for named-entity spans: maximal runs of
/// capitalized tokens that do not start a sentence. A capitalized sentence
/// opener is accepted only when it continues into another capitalized token.
pub fn fallback_entities(text: &str) -> Vec<String> {
    let mut spans = Vec::new();
    for sentence in split_sentences(&text.replace(';', ".\n")) {
        let toks = tokenize(&sentence);
        let mut i = 0;
        while i < toks.len() {
            if is_capitalized(&toks[i]) {
                let start = i;
                while i < toks.len() && is_capitalized(&toks[i]) {
                    i += 1;
                    // a possessive closes the name: "Qatar's National Day"
                    if toks[i - 1].ends_with("'s") {
                        break;
                    }
                }
                let run: Vec<&str> = toks[start..i]
                    .iter()
                    .map(|t| t.trim_end_matches("'s"))
                    .collect();
                let run = if start == 0 { &run[1..] } else { &run[..] };
                let words: Vec<&str> = run
                    .iter()
                    .copied()
                    .filter(|w| !matches!(w.to_lowercase().as_str(), "i" | "i'm" | "i've" | "i'll" | "i'd"))
                    .collect();
                if !words.is_empty() {
                    spans.push(words.join(" "));
                }
            } else {
                i += 1;
            }
        }
    }
    spans
}

fn is_capitalized(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_uppercase())
}

/// Counts named-entity spans in a tag sequence. Accepts IOB (`B-PER`, `I-PER`,
/// `O`) and plain per-token types; consecutive tokens with the same plain type
/// form one span.
pub fn entity_spans(tags: &[Option<String>]) -> Vec<String> {
    let mut spans = Vec::new();
    let mut current: Option<String> = None;
    for tag in tags {
        let tag = tag.as_deref().unwrap_or("O");
        if tag == "O" || tag.is_empty() {
            current = None;
            continue;
        }
        let (begin, ty) = if let Some(t) = tag.strip_prefix("B-") {
            (true, t)
        } else if let Some(t) = tag.strip_prefix("I-") {
            (false, t)
        } else {
            (false, tag)
        };
        let continues = !begin && current.as_deref() == Some(ty);
        if !continues {
            spans.push(ty.to_string());
            current = Some(ty.to_string());
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_strips_punctuation_and_keeps_contractions() {
        assert_eq!(tokenize("I didn't say nuclear."), vec!["I", "didn't", "say", "nuclear"]);
        assert_eq!(tokenize("Why? Why?? Why???"), vec!["Why", "Why", "Why"]);
        assert_eq!(tokenize("seven-and-a-half years, we've"), vec!["seven-and-a-half", "years", "we've"]);
        assert!(tokenize(" ... !! ").is_empty());
        assert_eq!(tokenize("school; and"), vec!["school", "and"]);
    }

    #[test]
    fn sentences_split_on_terminal_runs() {
        let s = split_sentences("Why? Why?? Why???");
        assert_eq!(s, vec!["Why?", "Why??", "Why???"]);
        let s = split_sentences("there is a french school here. don't know the ages");
        assert_eq!(s.len(), 2);
        assert_eq!(split_sentences("3.5 million jobs."), vec!["3.5 million jobs."]);
    }

    #[test]
    fn fallback_tagger_marks_past_and_future() {
        let toks = tokenize("he was impeached");
        let tags = fallback_pos_tags(&toks);
        assert_eq!(tags, vec!["PRP", "VBD", "VBN"]);
        let tags = fallback_pos_tags(&tokenize("they will open a second school"));
        assert_eq!(tags[1], "MD");
        assert_eq!(tags[2], "VB");
    }

    #[test]
    fn coarse_tags_fold_to_25() {
        assert_eq!(POS_TAGS.len(), 25);
        assert_eq!(coarse_tag("JJS"), Some("JJ"));
        assert_eq!(coarse_tag("."), None);
        assert_eq!(pos_index("WRB"), Some(24));
    }

    #[test]
    fn entity_heuristic_finds_multiword_names() {
        let ents = fallback_entities("Hi; Just wanted to confirm Qatar's National Day. Is it 18th of December? Thanks.");
        assert_eq!(ents, vec!["Qatar", "National Day", "December"]);
        let ents = fallback_entities("Hillary Clinton attacked those same women.");
        assert_eq!(ents, vec!["Clinton"]);
    }

    #[test]
    fn iob_spans() {
        let tags: Vec<Option<String>> = ["B-PER", "I-PER", "O", "B-LOC", "B-LOC", "ORG", "ORG"]
            .iter()
            .map(|s| Some(s.to_string()))
            .collect();
        assert_eq!(entity_spans(&tags), vec!["PER", "LOC", "LOC", "ORG"]);
    }
}

//! Cue lexicons and normalized cue frequencies.
//!
//! Lexicon files are UTF-8, one cue per line, `#` starts a comment. Cues may
//! be multi-word; they are matched greedily left to right, longest first,
//! without overlap.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("empty text")]
    EmptyText,
    #[error("lexicon {0} has no entries")]
    EmptyLexicon(String),
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasType {
    Factives,
    Implicatives,
    Assertives,
    Hedges,
    ReportVerbs,
    WikiBias,
    Modals,
    Negations,
    StrongSubj,
    WeakSubj,
    Positives,
    Negatives,
}

impl BiasType {
    pub const ALL: [BiasType; 12] = [
        BiasType::Factives,
        BiasType::Implicatives,
        BiasType::Assertives,
        BiasType::Hedges,
        BiasType::ReportVerbs,
        BiasType::WikiBias,
        BiasType::Modals,
        BiasType::Negations,
        BiasType::StrongSubj,
        BiasType::WeakSubj,
        BiasType::Positives,
        BiasType::Negatives,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            BiasType::Factives => "factives",
            BiasType::Implicatives => "implicatives",
            BiasType::Assertives => "assertives",
            BiasType::Hedges => "hedges",
            BiasType::ReportVerbs => "report_verbs",
            BiasType::WikiBias => "wiki_bias",
            BiasType::Modals => "modals",
            BiasType::Negations => "negations",
            BiasType::StrongSubj => "strong_subj",
            BiasType::WeakSubj => "weak_subj",
            BiasType::Positives => "positives",
            BiasType::Negatives => "negatives",
        }
    }

    fn builtin_source(self) -> &'static str {
        match self {
            BiasType::Factives => include_str!("../resources/lexicons/factives.txt"),
            BiasType::Implicatives => include_str!("../resources/lexicons/implicatives.txt"),
            BiasType::Assertives => include_str!("../resources/lexicons/assertives.txt"),
            BiasType::Hedges => include_str!("../resources/lexicons/hedges.txt"),
            BiasType::ReportVerbs => include_str!("../resources/lexicons/report_verbs.txt"),
            BiasType::WikiBias => include_str!("../resources/lexicons/wiki_bias.txt"),
            BiasType::Modals => include_str!("../resources/lexicons/modals.txt"),
            BiasType::Negations => include_str!("../resources/lexicons/negations.txt"),
            BiasType::StrongSubj => include_str!("../resources/lexicons/strong_subj.txt"),
            BiasType::WeakSubj => include_str!("../resources/lexicons/weak_subj.txt"),
            BiasType::Positives => include_str!("../resources/lexicons/positives.txt"),
            BiasType::Negatives => include_str!("../resources/lexicons/negatives.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasLexicon {
    pub name: String,
    entries: HashSet<Vec<String>>,
    max_len: usize,
}

impl BiasLexicon {
    pub fn new<I, S>(name: impl Into<String>, cues: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let mut entries = HashSet::new();
        for cue in cues {
            let words: Vec<String> = cue
                .as_ref()
                .split_whitespace()
                .map(|w| w.to_lowercase().replace('\u{2019}', "'"))
                .collect();
            if !words.is_empty() {
                entries.insert(words);
            }
        }
        if entries.is_empty() {
            return Err(LexiconError::EmptyLexicon(name));
        }
        let max_len = entries.iter().map(Vec::len).max().unwrap_or(1);
        Ok(BiasLexicon {
            name,
            entries,
            max_len,
        })
    }

    pub fn parse(name: impl Into<String>, source: &str) -> Result<Self, LexiconError> {
        let cues = source.lines().filter_map(|l| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some(l)
        });
        BiasLexicon::new(name, cues)
    }

    pub fn from_file(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let src = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        BiasLexicon::parse(name, &src)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.entries.contains(&[word.to_lowercase()][..])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Single-word entries.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|e| e.len() == 1)
            .map(|e| e[0].as_str())
    }

    /// Number of non-overlapping cue occurrences in `tokens`.
    pub fn count_matches<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        let lower: Vec<String> = tokens
            .iter()
            .map(|t| t.as_ref().to_lowercase().replace('\u{2019}', "'"))
            .collect();
        let mut i = 0;
        let mut count = 0;
        while i < lower.len() {
            let longest = self.max_len.min(lower.len() - i);
            let hit = (1..=longest)
                .rev()
                .find(|&n| self.entries.contains(&lower[i..i + n]));
            match hit {
                Some(n) => {
                    count += 1;
                    i += n;
                }
                None => i += 1,
            }
        }
        count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CueFrequency {
    pub bias_type: BiasType,
    pub value: f64,
}

/// Cue matches divided by the number of words.
pub fn cue_frequency<S: AsRef<str>>(
    tokens: &[S],
    bias_type: BiasType,
    lexicon: &BiasLexicon,
) -> Result<CueFrequency, LexiconError> {
    if tokens.is_empty() {
        return Err(LexiconError::EmptyText);
    }
    let value = lexicon.count_matches(tokens) as f64 / tokens.len() as f64;
    Ok(CueFrequency { bias_type, value })
}

/// The twelve bias lexicons plus optional separate sentiment word lists.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    lexicons: BTreeMap<BiasType, BiasLexicon>,
    /// Positive/negative word lists used for the two sentiment-count features;
    /// default to the `positives`/`negatives` bias lexicons.
    pub sentiment_positive: Option<BiasLexicon>,
    pub sentiment_negative: Option<BiasLexicon>,
}

impl LexiconSet {
    /// The small lexicons compiled into the crate.
    pub fn builtin() -> Self {
        let lexicons = BiasType::ALL
            .iter()
            .map(|b| {
                let lex = BiasLexicon::parse(b.file_stem(), b.builtin_source())
                    .expect("built-in lexicon is non-empty");
                (*b, lex)
            })
            .collect();
        LexiconSet {
            lexicons,
            sentiment_positive: None,
            sentiment_negative: None,
        }
    }

    /// Loads `<dir>/<bias_type>.txt` for every bias type; optional
    /// `sentiment_positive.txt` / `sentiment_negative.txt` override the
    /// sentiment word lists.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let dir = dir.as_ref();
        let mut lexicons = BTreeMap::new();
        for b in BiasType::ALL {
            let path = dir.join(format!("{}.txt", b.file_stem()));
            lexicons.insert(b, BiasLexicon::from_file(b.file_stem(), path)?);
        }
        let optional = |stem: &str| -> Result<Option<BiasLexicon>, LexiconError> {
            let p = dir.join(format!("{stem}.txt"));
            if p.exists() {
                BiasLexicon::from_file(stem, p).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(LexiconSet {
            lexicons,
            sentiment_positive: optional("sentiment_positive")?,
            sentiment_negative: optional("sentiment_negative")?,
        })
    }

    pub fn get(&self, b: BiasType) -> &BiasLexicon {
        &self.lexicons[&b]
    }

    pub fn set(&mut self, b: BiasType, lex: BiasLexicon) {
        self.lexicons.insert(b, lex);
    }

    /// Twelve cue frequencies (in [`BiasType::ALL`] order) followed by the
    /// multi-word cue count. Empty text yields all zeros.
    pub fn linguistic_features<S: AsRef<str>>(&self, tokens: &[S]) -> [f64; 13] {
        let mut out = [0.0; 13];
        if tokens.is_empty() {
            return out;
        }
        for (i, b) in BiasType::ALL.iter().enumerate() {
            out[i] = cue_frequency(tokens, *b, self.get(*b))
                .map(|c| c.value)
                .unwrap_or(0.0);
        }
        let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        out[12] = self.multiword_cue_count(&lower) as f64;
        out
    }

    pub fn negation_count<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        negation_count(tokens, self.get(BiasType::Negations))
    }

    pub fn sentiment_counts<S: AsRef<str>>(&self, tokens: &[S]) -> (usize, usize) {
        let pos = self
            .sentiment_positive
            .as_ref()
            .unwrap_or_else(|| self.get(BiasType::Positives));
        let neg = self
            .sentiment_negative
            .as_ref()
            .unwrap_or_else(|| self.get(BiasType::Negatives));
        (pos.count_matches(tokens), neg.count_matches(tokens))
    }

    /// Matches of `I/we + verb`, `I/we + adverb + verb`, `I/we + modal + verb`
    /// and `I/we + modal + adverb + verb` over lowercased tokens. Verbs come
    /// from the factive, assertive, implicative and report-verb lexicons,
    /// adverbs are `-ly` entries of the strong-subjectivity lexicon. Each
    /// pronoun starts at most one match.
    pub fn multiword_cue_count<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        let is_verb = |w: &str| {
            [
                BiasType::Factives,
                BiasType::Assertives,
                BiasType::Implicatives,
                BiasType::ReportVerbs,
            ]
            .iter()
            .any(|b| self.get(*b).contains_word(w))
        };
        let is_modal = |w: &str| self.get(BiasType::Modals).contains_word(w);
        let is_adverb = |w: &str| w.ends_with("ly") && self.get(BiasType::StrongSubj).contains_word(w);

        let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        let at = |i: usize| toks.get(i).copied().unwrap_or("");
        let mut count = 0;
        for i in 0..toks.len() {
            if toks[i] != "i" && toks[i] != "we" {
                continue;
            }
            let (a, b, c) = (at(i + 1), at(i + 2), at(i + 3));
            let matched = is_verb(a)
                || (is_adverb(a) && is_verb(b))
                || (is_modal(a) && is_verb(b))
                || (is_modal(a) && is_adverb(b) && is_verb(c));
            if matched {
                count += 1;
            }
        }
        count
    }
}

pub fn negation_count<S: AsRef<str>>(tokens: &[S], negations: &BiasLexicon) -> usize {
    negations.count_matches(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, tokenize_lower};
    use proptest::prelude::*;

    fn lex(words: &[&str]) -> BiasLexicon {
        BiasLexicon::new("t", words).unwrap()
    }

    #[test]
    fn hedge_frequency_is_matches_over_words() {
        let tokens = ["it", "is", "approximately", "true", "and", "possibly", "not", "false"];
        let hedges = lex(&["approximately", "possibly", "perhaps"]);
        let f = cue_frequency(&tokens, BiasType::Hedges, &hedges).unwrap();
        assert_eq!(f.value, 0.25);
    }

    #[test]
    fn no_matches_is_zero_and_empty_is_error() {
        let f = cue_frequency(&["a", "b"], BiasType::Hedges, &lex(&["zzz"])).unwrap();
        assert_eq!(f.value, 0.0);
        let empty: [&str; 0] = [];
        assert!(matches!(
            cue_frequency(&empty, BiasType::Hedges, &lex(&["zzz"])),
            Err(LexiconError::EmptyText)
        ));
    }

    #[test]
    fn factives_in_worked_example() {
        // Word count done by hand: 15 + 24 + 6 words in the three sentences.
        let e1 = "know that they will open a second school; and they are a nice french school... \
                  I know that they provide a qualified french education and add with that the history \
                  and arabic language to be adapted to the qatar. I think that's an interesting addition.";
        let tokens = tokenize(e1);
        assert_eq!(tokens.len(), 45);
        let f = cue_frequency(&tokens, BiasType::Factives, &lex(&["know"])).unwrap();
        assert!((f.value - 2.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn ngram_cues_match_greedily_without_overlap() {
        let l = lex(&["find out", "out", "kind of"]);
        let toks = tokenize_lower("we will find out what kind of out");
        assert_eq!(l.count_matches(&toks), 3);
    }

    #[test]
    fn multiword_patterns() {
        let set = LexiconSet::builtin();
        assert_eq!(set.multiword_cue_count(&tokenize_lower("i believe it works")), 1);
        assert_eq!(set.multiword_cue_count(&tokenize_lower("we can obviously see this")), 1);
        assert_eq!(set.multiword_cue_count(&tokenize_lower("I certainly know")), 1);
        assert_eq!(set.multiword_cue_count(&tokenize_lower("we could figure out")), 1);
        assert_eq!(set.multiword_cue_count(&tokenize_lower("believe it")), 0);
    }

    #[test]
    fn negation_counts() {
        let set = LexiconSet::builtin();
        assert_eq!(set.negation_count(&tokenize("I didn't say nuclear.")), 1);
        let fixture = lex(&["never", "ever", "not"]);
        assert_eq!(negation_count(&tokenize("never ever not"), &fixture), 3);
        assert_eq!(set.negation_count(&tokenize("")), 0);
    }

    #[test]
    fn sentiment_lists() {
        let set = LexiconSet::builtin();
        let (_, neg) = set.sentiment_counts(&tokenize("Murders are up."));
        assert!(neg >= 1);
    }

    #[test]
    fn builtin_has_all_twelve_and_loads_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        for b in BiasType::ALL {
            std::fs::write(dir.path().join(format!("{}.txt", b.file_stem())), "# c\nfoo\n\nbar baz # x\n").unwrap();
        }
        let set = LexiconSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.get(BiasType::Modals).len(), 2);
        assert!(set.sentiment_positive.is_none());
        std::fs::write(dir.path().join("hedges.txt"), "# only comments\n").unwrap();
        assert!(matches!(LexiconSet::load_dir(dir.path()), Err(LexiconError::EmptyLexicon(_))));
    }

    proptest! {
        #[test]
        fn frequency_is_case_invariant(words in prop::collection::vec("[a-d]{1,3}", 1..20), upper in any::<bool>()) {
            let l = lex(&["a", "bb", "c d"]);
            let toks: Vec<String> = words.iter().map(|w| if upper { w.to_uppercase() } else { w.clone() }).collect();
            let a = cue_frequency(&words, BiasType::Hedges, &l).unwrap().value;
            let b = cue_frequency(&toks, BiasType::Hedges, &l).unwrap().value;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn disjoint_lexicons_add(words in prop::collection::vec("[a-f]{1,2}", 0..30)) {
            let l1 = ["a", "b", "cd"];
            let l2 = ["e", "ff", "c"];
            let union: Vec<&str> = l1.iter().chain(l2.iter()).copied().collect();
            let m = |ws: &[&str]| lex(ws).count_matches(&words);
            prop_assert_eq!(m(&union), m(&l1) + m(&l2));
        }

        #[test]
        fn frequency_one_iff_all_tokens_match(words in prop::collection::vec("[a-e]", 1..15)) {
            // unigram lexicon: every matched cue covers exactly one word
            let l = lex(&["a", "b", "c"]);
            let all = words.iter().all(|w| l.contains_word(w));
            let v = cue_frequency(&words, BiasType::Hedges, &l).unwrap().value;
            prop_assert_eq!(v == 1.0, all);
        }
    }
}

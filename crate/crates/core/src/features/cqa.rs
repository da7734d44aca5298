//! Answer-level features for veracity classification and bag-of-words
//! features for question classification.
//!
//! Layout: thread_support(5), forum_support(36 per forum filter),
//! hq_support(k), web_support(36 per web filter), credibility(31),
//! linguistic(13), discourse(20), embedding_block(configured width, zero
//! until filled by a trained encoder).
//!
//! Credibility slots: URLs, images, emails, phone numbers, tokens, sentences,
//! tokens per sentence, positive smileys, negative smileys, `!` runs of
//! length 1, 2 and 3+, `?` runs of length 1, 2 and 3+, interrogative
//! sentences, nouns, verbs, adjectives, adverbs, pronouns, words missing from
//! the general-domain vectors, 1st/2nd/3rd person pronouns, the same three
//! divided by their total, pronoun share of tokens, characters, uppercase
//! share of letters.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{FeatureError, Layout, TfidfVocab};
use crate::corpus::{CqaThread, Goodness};
use crate::discourse::{self, RstNode};
use crate::embeddings::{cos, VectorStore};
use crate::evidence::{
    build_query, hq_support, similarity_bundle, EvidenceResult, IdfTable, Query, SimilarityBundle,
    SimilarityResources, SourceFilter, CELLS_PER_FILTER,
};
use crate::lexicons::LexiconSet;
use crate::text;

pub const CREDIBILITY_DIM: usize = 31;

pub const CONTEXT_GROUPS: [&str; 3] = ["thread_support", "forum_support", "hq_support"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CqaFeatureConfig {
    pub forum_filters: Vec<SourceFilter>,
    pub web_filters: Vec<SourceFilter>,
    pub hq_k: usize,
    pub embedding_block: usize,
}

impl Default for CqaFeatureConfig {
    fn default() -> Self {
        CqaFeatureConfig {
            forum_filters: vec![SourceFilter::All],
            web_filters: vec![SourceFilter::Reputed, SourceFilter::Forum, SourceFilter::Other],
            hq_k: 4,
            embedding_block: 210,
        }
    }
}

impl CqaFeatureConfig {
    pub fn layout(&self) -> Layout {
        Layout::new([
            ("thread_support", 5),
            ("forum_support", CELLS_PER_FILTER * self.forum_filters.len()),
            ("hq_support", self.hq_k),
            ("web_support", CELLS_PER_FILTER * self.web_filters.len()),
            ("credibility", CREDIBILITY_DIM),
            ("linguistic", 13),
            ("discourse", discourse::FEATURE_DIM),
            ("embedding_block", self.embedding_block),
        ])
    }

    pub fn selection_mask(
        &self,
        ablate: &[String],
        only: &[String],
    ) -> Result<Vec<std::ops::Range<usize>>, FeatureError> {
        let mut out = Vec::new();
        for n in ablate {
            out.extend(self.resolve(n)?);
        }
        if !only.is_empty() {
            let mut keep = Vec::new();
            for n in only {
                keep.extend(self.resolve(n)?);
            }
            out.extend(super::complement(self.layout().total(), &keep));
        }
        Ok(out)
    }

    /// Index ranges named by a group or by `context`, which covers the
    /// thread, forum and high-quality-post support groups.
    pub fn resolve(&self, name: &str) -> Result<Vec<std::ops::Range<usize>>, FeatureError> {
        let layout = self.layout();
        let names: &[&str] = if name == "context" {
            &CONTEXT_GROUPS
        } else {
            std::slice::from_ref(&name)
        };
        names
            .iter()
            .map(|n| layout.range(n).ok_or_else(|| FeatureError::UnknownGroup(name.to_string())))
            .collect()
    }
}

/// (cosine to the other Good answers, reciprocal rank among all answers,
/// reciprocal rank among Good answers, percentile among all, percentile among
/// Good). Percentile is `(N - rank + 1) / N`; Good-list values are 0 for
/// answers that are not Good.
pub fn thread_support(thread: &CqaThread, idx: usize, store: Option<&VectorStore>) -> [f64; 5] {
    let n = thread.answers.len();
    let rank = idx + 1;
    let good: Vec<usize> = (0..n)
        .filter(|&i| thread.answers[i].goodness == Goodness::Good)
        .collect();
    let cosine = store.map_or(0.0, |s| {
        let own = s.sentence_vector(&text::tokenize(&thread.answers[idx].text));
        let rest: Vec<String> = good
            .iter()
            .filter(|&&i| i != idx)
            .flat_map(|&i| text::tokenize(&thread.answers[i].text))
            .collect();
        cos(&own, &s.sentence_vector(&rest))
    });
    let (good_rr, good_pct) = match good.iter().position(|&i| i == idx) {
        Some(p) => {
            let g = good.len() as f64;
            (1.0 / (p + 1) as f64, (g - p as f64) / g)
        }
        None => (0.0, 0.0),
    };
    [
        cosine,
        1.0 / rank as f64,
        good_rr,
        (n - rank + 1) as f64 / n as f64,
        good_pct,
    ]
}

struct Patterns {
    url: Regex,
    image: Regex,
    email: Regex,
    phone: Regex,
    smile: Regex,
    frown: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        url: Regex::new(r"(?i)\b(?:https?://|www\.)[^\s<>]+").unwrap(),
        image: Regex::new(r"(?i)(?:<img\b|\[img\]|\S+\.(?:jpe?g|png|gif|bmp)\b)").unwrap(),
        email: Regex::new(r"\b[\w.+-]+@[\w-]+(?:\.[\w-]+)+\b").unwrap(),
        phone: Regex::new(r"\+?\d(?:[ -]?\d){6,14}").unwrap(),
        smile: Regex::new(r"(?:[:;=]-?[)D\]pP]|\^_\^|<3)").unwrap(),
        frown: Regex::new(r"(?:[:;=]'?-?[(\[/]|-_-)").unwrap(),
    })
}

/// Maximal runs of `c`, bucketed by length 1, 2 and 3 or more.
fn runs(text: &str, c: char) -> [f64; 3] {
    let mut out = [0.0; 3];
    let mut len = 0usize;
    for ch in text.chars().chain(std::iter::once('\0')) {
        if ch == c {
            len += 1;
        } else if len > 0 {
            out[len.min(3) - 1] += 1.0;
            len = 0;
        }
    }
    out
}

const FIRST: &[&str] = &["i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"];
const SECOND: &[&str] = &["you", "your", "yours", "yourself", "yourselves", "u", "ur"];
const THIRD: &[&str] = &[
    "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself", "they",
    "them", "their", "theirs", "themselves",
];

/// The 31 credibility values described in the module header. `general` is the
/// general-domain vector store used for the out-of-vocabulary count.
pub fn credibility_features(answer: &str, general: Option<&VectorStore>) -> [f64; CREDIBILITY_DIM] {
    let p = patterns();
    let tokens = text::tokenize(answer);
    let sentences = text::split_sentences(answer);
    let tags = text::fallback_pos_tags(&tokens);
    let count = |re: &Regex| re.find_iter(answer).count() as f64;
    let n_tok = tokens.len() as f64;
    let n_sent = sentences.len() as f64;
    let bang = runs(answer, '!');
    let quest = runs(answer, '?');
    let interrogative = sentences.iter().filter(|s| s.trim_end().ends_with('?')).count() as f64;
    let tag_count = |f: &dyn Fn(&str) -> bool| tags.iter().filter(|t| f(t)).count() as f64;
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let person = |set: &[&str]| lower.iter().filter(|w| set.contains(&w.as_str())).count() as f64;
    let (p1, p2, p3) = (person(FIRST), person(SECOND), person(THIRD));
    let ptotal = p1 + p2 + p3;
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let oov = general.map_or(0.0, |g| {
        tokens
            .iter()
            .filter(|t| t.chars().any(char::is_alphabetic) && !g.contains(t))
            .count() as f64
    });
    let letters = answer.chars().filter(|c| c.is_alphabetic()).count() as f64;
    let upper = answer.chars().filter(|c| c.is_uppercase()).count() as f64;
    [
        count(&p.url),
        count(&p.image),
        count(&p.email),
        count(&p.phone),
        n_tok,
        n_sent,
        ratio(n_tok, n_sent),
        count(&p.smile),
        count(&p.frown),
        bang[0],
        bang[1],
        bang[2],
        quest[0],
        quest[1],
        quest[2],
        interrogative,
        tag_count(&|t| t.starts_with("NN")),
        tag_count(&|t| t.starts_with("VB") || t == "MD"),
        tag_count(&|t| t.starts_with("JJ")),
        tag_count(&|t| t.starts_with("RB")),
        tag_count(&|t| t.starts_with("PRP") || t.starts_with("WP")),
        oov,
        p1,
        p2,
        p3,
        ratio(p1, ptotal),
        ratio(p2, ptotal),
        ratio(p3, ptotal),
        ratio(ptotal, n_tok),
        answer.chars().count() as f64,
        ratio(upper, letters),
    ]
}

/// Search evidence gathered for one answer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnswerEvidence {
    /// Results from the open web, all engines combined.
    pub web: Vec<EvidenceResult>,
    /// Results from the forum-restricted search.
    pub forum: Vec<EvidenceResult>,
}

#[derive(Debug, Clone, Copy)]
pub struct CqaResources<'a> {
    pub lexicons: &'a LexiconSet,
    pub idf: &'a IdfTable,
    /// In-domain vectors for thread support and embedding similarities.
    pub in_domain: Option<&'a VectorStore>,
    /// General-domain vectors for the OOV count.
    pub general: Option<&'a VectorStore>,
    /// Sentences of the trusted high-quality posts.
    pub hq_sentences: Option<&'a [String]>,
    /// Trees keyed by answer id, question as unit 0 and answer as unit 1.
    pub discourse: Option<&'a BTreeMap<String, RstNode>>,
}

pub struct CqaExtractor<'a> {
    config: CqaFeatureConfig,
    res: CqaResources<'a>,
    layout: Layout,
}

impl<'a> CqaExtractor<'a> {
    pub fn new(config: CqaFeatureConfig, res: CqaResources<'a>) -> Self {
        if res.in_domain.is_none() {
            log::warn!("no in-domain vectors: embedding similarities are zero");
        }
        if res.hq_sentences.is_none() {
            log::warn!("no high-quality posts: hq_support is zero");
        }
        if res.discourse.is_none() {
            log::warn!("no discourse trees: discourse features are zero");
        }
        let layout = config.layout();
        CqaExtractor { config, res, layout }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn query_for(&self, thread: &CqaThread, idx: usize) -> Result<Query, crate::evidence::EvidenceError> {
        let a = &thread.answers[idx];
        build_query(&thread.question.id, &thread.question.text(), &a.id, &a.text, self.res.idf, None)
    }

    pub fn extract(&self, thread: &CqaThread, idx: usize, evidence: Option<&AnswerEvidence>) -> Vec<f64> {
        let q = thread.question.text();
        let answer = &thread.answers[idx];
        let sim = SimilarityResources {
            idf: self.res.idf,
            vectors: self.res.in_domain,
        };
        let mut out = Vec::with_capacity(self.layout.total());
        out.extend(thread_support(thread, idx, self.res.in_domain));

        let bundle = |results: &[EvidenceResult]| similarity_bundle(&q, &answer.text, results, &sim);
        let empty = SimilarityBundle::zeros();
        let forum = evidence.map_or_else(|| empty.clone(), |e| bundle(&e.forum));
        out.extend(forum.select(&self.config.forum_filters));

        match (self.res.hq_sentences, self.query_for(thread, idx)) {
            (Some(posts), Ok(query)) if !posts.is_empty() => {
                out.extend(hq_support(&query, &answer.text, posts, self.config.hq_k, &sim))
            }
            _ => out.extend(std::iter::repeat_n(0.0, self.config.hq_k)),
        }

        let web = evidence.map_or(empty, |e| bundle(&e.web));
        out.extend(web.select(&self.config.web_filters));

        out.extend(credibility_features(&answer.text, self.res.general));
        out.extend(self.res.lexicons.linguistic_features(&text::tokenize_lower(&answer.text)));
        let tree = self.res.discourse.and_then(|m| m.get(&answer.id));
        let targets: HashSet<u64> = [1].into_iter().collect();
        out.extend(discourse::discourse_features(tree, &targets));
        out.extend(std::iter::repeat_n(0.0, self.config.embedding_block));
        debug_assert_eq!(out.len(), self.layout.total());
        out
    }

    /// Writes a trained encoder's output into the embedding block.
    pub fn fill_embedding_block(&self, features: &mut [f64], block: &[f64]) -> Result<(), FeatureError> {
        let r = self.layout.range("embedding_block").expect("cqa group");
        if block.len() != r.len() {
            return Err(FeatureError::Config(format!(
                "embedding block has {} values, layout expects {}",
                block.len(),
                r.len()
            )));
        }
        features[r].copy_from_slice(block);
        Ok(())
    }
}

/// TF-IDF bag of words over question text, fitted on training questions.
pub fn question_vocab(questions: &[String]) -> TfidfVocab {
    let docs: Vec<Vec<String>> = questions.iter().map(|q| text::tokenize_lower(q)).collect();
    TfidfVocab::fit(&docs, None)
}

pub fn question_bow(question: &str, vocab: &TfidfVocab) -> Vec<f64> {
    vocab.transform(&text::tokenize_lower(question))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Answer, Question, QuestionClass};
    use crate::evidence::{RawResult, SourceClassifier};

    fn thread(texts: &[(&str, Goodness)]) -> CqaThread {
        CqaThread {
            question: Question {
                id: "Q1".into(),
                subject: "National day".into(),
                body: "Hi; Just wanted to confirm Qatar's National Day. Is it 18th of December? Thanks.".into(),
                category: "Qatar Living".into(),
                datetime: String::new(),
                user: String::new(),
                excluded: false,
            },
            question_class: Some(QuestionClass::Factual),
            answers: texts
                .iter()
                .enumerate()
                .map(|(i, (t, g))| Answer {
                    id: format!("Q1_C{}", i + 1),
                    text: t.to_string(),
                    user: String::new(),
                    goodness: *g,
                    factuality: None,
                    fine_label: None,
                })
                .collect(),
        }
    }

    #[test]
    fn thread_ranks_and_percentiles() {
        let answers: Vec<(&str, Goodness)> = (0..10)
            .map(|i| ("yes it is", if i % 2 == 0 { Goodness::Good } else { Goodness::Bad }))
            .collect();
        let t = thread(&answers);
        assert_eq!(thread_support(&t, 0, None), [0.0, 1.0, 1.0, 1.0, 1.0]);
        let second = thread_support(&t, 1, None);
        assert!((second[3] - 0.9).abs() < 1e-12);
        assert_eq!(second[2], 0.0);
        let third = thread_support(&t, 2, None);
        assert!((third[1] - 1.0 / 3.0).abs() < 1e-12);
        // second Good of five
        assert!((third[2] - 0.5).abs() < 1e-12);
        assert!((third[4] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lone_good_answer_gets_no_self_support() {
        let store = VectorStore::from_pairs([("yes", vec![1.0, 0.0]), ("no", vec![0.0, 1.0])]).unwrap();
        let t = thread(&[("yes", Goodness::Good), ("yes", Goodness::Bad)]);
        assert_eq!(thread_support(&t, 0, Some(&store))[0], 0.0);
        let t = thread(&[("yes", Goodness::Good), ("yes", Goodness::Good)]);
        assert!((thread_support(&t, 0, Some(&store))[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn credibility_counts() {
        let f = credibility_features("see http://a.b or mail c@d.com", None);
        assert_eq!((f[0], f[2]), (1.0, 1.0));
        let f = credibility_features("Why? Why?? Why???", None);
        assert_eq!(f[12..15], [1.0, 1.0, 1.0]);
        assert_eq!(f[15], 3.0);
        let f = credibility_features("Great stuff!!! :) call 5555 1234", None);
        assert_eq!(f[9..12], [0.0, 0.0, 1.0]);
        assert_eq!((f[3], f[7]), (1.0, 1.0));
        let f = credibility_features("Doha traffic today", None);
        assert_eq!(f[25..29], [0.0; 4]);
        let f = credibility_features("I told you they know", None);
        assert_eq!(f[22..25], [1.0, 1.0, 1.0]);
        assert!((f[25] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f[28] - 0.6).abs() < 1e-12);
        let g = VectorStore::from_pairs([("told", vec![1.0])]).unwrap();
        assert_eq!(credibility_features("I told you", Some(&g))[21], 2.0);
        assert!(credibility_features("", None).iter().all(|v| v.is_finite()));
    }

    fn resources<'a>(lex: &'a LexiconSet, idf: &'a IdfTable) -> CqaResources<'a> {
        CqaResources {
            lexicons: lex,
            idf,
            in_domain: None,
            general: None,
            hq_sentences: None,
            discourse: None,
        }
    }

    #[test]
    fn extraction_layout_and_web_block() {
        let lex = LexiconSet::builtin();
        let idf = IdfTable::default();
        let cfg = CqaFeatureConfig::default();
        assert_eq!(cfg.layout().total(), 5 + 36 + 4 + 108 + 31 + 13 + 20 + 210);
        let ex = CqaExtractor::new(cfg, resources(&lex, &idf));
        let t = thread(&[("yes; it is 18th Dec.", Goodness::Good)]);
        let none = ex.extract(&t, 0, None);
        assert_eq!(none.len(), ex.layout().total());
        let web = ex.layout().range("web_support").unwrap();
        assert!(none[web.clone()].iter().all(|&v| v == 0.0));

        let classifier = SourceClassifier::default();
        let r = EvidenceResult::classify(
            RawResult {
                url: "iloveqatar.net".into(),
                snippet: "yes it is 18th Dec".into(),
                page_text: None,
            },
            "bing",
            &classifier,
        )
        .unwrap();
        let ev = AnswerEvidence {
            web: vec![r],
            forum: Vec::new(),
        };
        let with = ex.extract(&t, 0, Some(&ev));
        assert!(with[web].iter().any(|&v| v > 0.0));
        assert_eq!(with, ex.extract(&t, 0, Some(&ev)));
    }

    #[test]
    fn hq_support_through_extractor() {
        let lex = LexiconSet::builtin();
        let idf = IdfTable::default();
        let posts = vec![
            "the national day of qatar is celebrated on december 18".to_string(),
            "visa rules changed".to_string(),
        ];
        let mut res = resources(&lex, &idf);
        res.hq_sentences = Some(&posts);
        let ex = CqaExtractor::new(CqaFeatureConfig::default(), res);
        let t = thread(&[("the national day of qatar is celebrated on december 18", Goodness::Good)]);
        let f = ex.extract(&t, 0, None);
        let hq = ex.layout().range("hq_support").unwrap();
        // verbatim sentence: containment 1, no vectors so cosine 0
        assert!((f[hq.start] - 0.5).abs() < 1e-12);
        assert_eq!(f[hq.clone()].len(), 4);

        let words = ["the", "national", "day", "of", "qatar", "is", "celebrated", "on", "december", "18", "visa", "rules", "changed"];
        let store = VectorStore::from_pairs(
            words.iter().enumerate().map(|(i, w)| (*w, (0..13).map(|k| if k == i { 1.0 } else { 0.1 }).collect::<Vec<f64>>())),
        )
        .unwrap();
        res.in_domain = Some(&store);
        let ex = CqaExtractor::new(CqaFeatureConfig::default(), res);
        let f = ex.extract(&t, 0, None);
        assert!((f[hq.start] - 1.0).abs() < 1e-9);

        let other = vec!["camels race at the track".to_string()];
        res.hq_sentences = Some(&other);
        let ex = CqaExtractor::new(CqaFeatureConfig::default(), res);
        let t = thread(&[("bank loans need a salary certificate", Goodness::Good)]);
        let f = ex.extract(&t, 0, None);
        assert!(f[hq].iter().all(|&v| v < 0.2));
    }

    #[test]
    fn question_bow_cases() {
        let qs = vec!["where to buy a car".to_string(), "where is the souq".to_string()];
        let v = question_vocab(&qs);
        assert!(question_bow("zzz qqq", &v).iter().all(|&x| x == 0.0));
        assert_eq!(question_bow("where is", &v), question_bow("where is", &v));
        let b = question_bow("where souq", &v);
        let i_where = v.terms.iter().position(|t| t == "where").unwrap();
        let i_souq = v.terms.iter().position(|t| t == "souq").unwrap();
        assert!((b[i_where] - 1.0).abs() < 1e-12);
        assert!((b[i_souq] - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn context_covers_support_groups() {
        let cfg = CqaFeatureConfig::default();
        let mask = cfg.selection_mask(&["context".to_string()], &[]).unwrap();
        assert_eq!(mask, vec![0..5, 5..41, 41..45]);
        let only = cfg.selection_mask(&[], &["context".to_string()]).unwrap();
        assert_eq!(only, vec![45..cfg.layout().total()]);
        assert!(cfg.selection_mask(&["contexts".to_string()], &[]).is_err());
    }

    #[test]
    fn fill_block_checks_width() {
        let lex = LexiconSet::builtin();
        let idf = IdfTable::default();
        let ex = CqaExtractor::new(CqaFeatureConfig::default(), resources(&lex, &idf));
        let mut f = vec![0.0; ex.layout().total()];
        assert!(ex.fill_embedding_block(&mut f, &[1.0; 3]).is_err());
        ex.fill_embedding_block(&mut f, &[1.0; 210]).unwrap();
        assert_eq!(f.iter().sum::<f64>(), 210.0);
    }
}

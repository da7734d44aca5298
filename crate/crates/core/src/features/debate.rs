//! Check-worthiness features for debate sentences.
//!
//! Flattened layout, in order: position(3), segment_sizes(3), metadata(8),
//! topics(K + 3), embeddings(D + 3), contradictions(5), known_similarity(3),
//! discourse(20), claimbuster(1045), sentiment(2), named_entities(1),
//! linguistic(13), tense(1), length(1). With K = D = 300 this is 1711 values.
//!
//! Within groups: topics and embeddings hold the raw sentence representation
//! followed by cosines with the previous, current and next segment;
//! contradictions hold the target count, previous and next sentence of the
//! segment, then previous and next segment totals; discourse holds 18
//! relation indicators then nuclei and satellites; claimbuster holds 998
//! TF-IDF weights, 25 POS counts, 20 entity-type counts, a sentiment score and
//! the token count.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{complement, FeatureError, Layout, TfidfVocab};
use crate::corpus::{segment_debate, Debate, Segment, SystemEvent};
use crate::discourse::{self, RstNode};
use crate::embeddings::{cos, VectorStore};
use crate::lexicons::LexiconSet;
use crate::text;
use crate::topics::{self, TopicModel};

pub const BOW_DIM: usize = 998;
pub const CLAIMBUSTER_DIM: usize = BOW_DIM + text::POS_TAGS.len() + NE_TYPES.len() + 2;

pub const NE_TYPES: [&str; 20] = [
    "PERSON",
    "ORGANIZATION",
    "GPE",
    "LOCATION",
    "FACILITY",
    "NORP",
    "DATE",
    "TIME",
    "MONEY",
    "PERCENT",
    "QUANTITY",
    "ORDINAL",
    "CARDINAL",
    "EVENT",
    "WORK_OF_ART",
    "LAW",
    "LANGUAGE",
    "PRODUCT",
    "JOB_TITLE",
    "OTHER",
];

/// Slot in [`NE_TYPES`] for an entity type label; unknown labels go to OTHER.
pub fn ne_type_index(label: &str) -> usize {
    let up = label.to_uppercase();
    let canon = match up.as_str() {
        "PER" | "PERS" => "PERSON",
        "ORG" => "ORGANIZATION",
        "LOC" => "LOCATION",
        "FAC" => "FACILITY",
        "GSP" => "GPE",
        other => other,
    };
    NE_TYPES
        .iter()
        .position(|t| *t == canon)
        .unwrap_or(NE_TYPES.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextPart {
    Position,
    SegmentSizes,
    Metadata,
    TopicCosines,
    EmbeddingCosines,
    ContradictionNeighbors,
    DiscourseIndicators,
}

impl ContextPart {
    pub const ALL: [ContextPart; 7] = [
        ContextPart::Position,
        ContextPart::SegmentSizes,
        ContextPart::Metadata,
        ContextPart::TopicCosines,
        ContextPart::EmbeddingCosines,
        ContextPart::ContradictionNeighbors,
        ContextPart::DiscourseIndicators,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebateFeatureConfig {
    pub topics_k: usize,
    pub embedding_dim: usize,
    /// Slots zeroed by the `context` ablation.
    pub context_parts: Vec<ContextPart>,
}

impl Default for DebateFeatureConfig {
    fn default() -> Self {
        DebateFeatureConfig {
            topics_k: 300,
            embedding_dim: 300,
            context_parts: ContextPart::ALL.to_vec(),
        }
    }
}

pub const GROUPS: [&str; 14] = [
    "position",
    "segment_sizes",
    "metadata",
    "topics",
    "embeddings",
    "contradictions",
    "known_similarity",
    "discourse",
    "claimbuster",
    "sentiment",
    "named_entities",
    "linguistic",
    "tense",
    "length",
];

impl DebateFeatureConfig {
    pub fn layout(&self) -> Layout {
        let sizes = [
            3,
            3,
            8,
            self.topics_k + 3,
            self.embedding_dim + 3,
            5,
            3,
            discourse::FEATURE_DIM,
            CLAIMBUSTER_DIM,
            2,
            1,
            13,
            1,
            1,
        ];
        Layout::new(GROUPS.iter().copied().zip(sizes))
    }

    fn part_range(&self, layout: &Layout, part: ContextPart) -> Range<usize> {
        let r = |g: &str| layout.range(g).expect("debate group");
        match part {
            ContextPart::Position => r("position"),
            ContextPart::SegmentSizes => r("segment_sizes"),
            ContextPart::Metadata => r("metadata"),
            ContextPart::TopicCosines => {
                let t = r("topics");
                t.end - 3..t.end
            }
            ContextPart::EmbeddingCosines => {
                let e = r("embeddings");
                e.end - 3..e.end
            }
            ContextPart::ContradictionNeighbors => {
                let c = r("contradictions");
                c.start + 1..c.end
            }
            ContextPart::DiscourseIndicators => {
                let d = r("discourse");
                d.start..d.start + 18
            }
        }
    }

    /// Index ranges named by a group or by `context`.
    pub fn resolve(&self, name: &str) -> Result<Vec<Range<usize>>, FeatureError> {
        let layout = self.layout();
        if name == "context" {
            return Ok(self
                .context_parts
                .iter()
                .map(|p| self.part_range(&layout, *p))
                .collect());
        }
        layout
            .range(name)
            .map(|r| vec![r])
            .ok_or_else(|| FeatureError::UnknownGroup(name.to_string()))
    }

    /// Ranges to zero for an ablation list and an optional keep-only list.
    pub fn selection_mask(
        &self,
        ablate: &[String],
        only: &[String],
    ) -> Result<Vec<Range<usize>>, FeatureError> {
        let mut out = Vec::new();
        for name in ablate {
            out.extend(self.resolve(name)?);
        }
        if !only.is_empty() {
            let mut keep = Vec::new();
            for name in only {
                keep.extend(self.resolve(name)?);
            }
            out.extend(complement(self.layout().total(), &keep));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tense {
    Past,
    Present,
    Future,
}

impl Tense {
    pub fn value(self) -> f64 {
        match self {
            Tense::Past => 0.0,
            Tense::Present => 1.0,
            Tense::Future => 2.0,
        }
    }
}

/// Future when the sentence contains "will" or "have to", else Past when any
/// verb is tagged past tense, else Present.
pub fn tense<S: AsRef<str>, T: AsRef<str>>(words: &[S], tags: &[T]) -> Tense {
    let lower: Vec<String> = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
    let future = lower.iter().any(|w| w == "will" || w == "won't" || w.ends_with("'ll"))
        || lower.windows(2).any(|p| matches!(p[1].as_str(), "to") && matches!(p[0].as_str(), "have" | "has"));
    if future {
        Tense::Future
    } else if tags.iter().any(|t| t.as_ref() == "VBD") {
        Tense::Past
    } else {
        Tense::Present
    }
}

/// Bag-of-words vocabulary for the claimbuster group: the 998 most frequent
/// training terms.
pub fn claimbuster_vocab<D, S>(documents: &[D]) -> TfidfVocab
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    TfidfVocab::fit(documents, Some(BOW_DIM))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefSentence {
    pub debate_id: String,
    pub sentence_id: u64,
    pub speaker: String,
    pub words: BTreeSet<String>,
    pub check_worthy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalClaim {
    pub words: BTreeSet<String>,
    /// Set when the claim is itself a debate sentence, so it can be excluded.
    pub origin: Option<(String, u64)>,
}

/// Reference sentences for the known-similarity features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownRefs {
    pub training: Vec<RefSentence>,
    pub external: Vec<ExternalClaim>,
}

pub fn word_types<S: AsRef<str>>(words: &[S]) -> BTreeSet<String> {
    words.iter().map(|w| w.as_ref().to_lowercase()).collect()
}

impl KnownRefs {
    /// Training references from labelled debates; `label(debate, i)` gives the
    /// check-worthiness of sentence `i`.
    pub fn from_debates(debates: &[&Debate], label: impl Fn(&Debate, usize) -> bool) -> Self {
        let mut training = Vec::new();
        for d in debates {
            for (i, s) in d.sentences.iter().enumerate() {
                training.push(RefSentence {
                    debate_id: d.id.clone(),
                    sentence_id: s.id,
                    speaker: s.speaker.clone(),
                    words: word_types(&s.words()),
                    check_worthy: label(d, i),
                });
            }
        }
        KnownRefs {
            training,
            external: Vec::new(),
        }
    }

    pub fn add_external(&mut self, text: &str, origin: Option<(String, u64)>) {
        self.external.push(ExternalClaim {
            words: word_types(&text::tokenize(text)),
            origin,
        });
    }

    /// (signed max overlap, same-speaker variant, external-claims variant).
    pub fn features(&self, debate_id: &str, sentence_id: u64, speaker: &str, words: &BTreeSet<String>) -> [f64; 3] {
        let is_self = |d: &str, id: u64| d == debate_id && id == sentence_id;
        let mut v1: Option<f64> = None;
        let mut v2: Option<f64> = None;
        for r in &self.training {
            if is_self(&r.debate_id, r.sentence_id) {
                continue;
            }
            let overlap = words.intersection(&r.words).count() as f64;
            let signed = if r.check_worthy { overlap } else { -overlap };
            v1 = Some(v1.map_or(signed, |m| m.max(signed)));
            let same = if r.speaker == speaker { signed } else { 0.0 };
            v2 = Some(v2.map_or(same, |m| m.max(same)));
        }
        let v3 = self
            .external
            .iter()
            .filter(|c| !matches!(&c.origin, Some((d, id)) if is_self(d, *id)))
            .map(|c| words.intersection(&c.words).count() as f64)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        [v1.unwrap_or(0.0), v2.unwrap_or(0.0), v3.unwrap_or(0.0)]
    }
}

/// Everything the extractor reads. Lexicons and the bag-of-words vocabulary
/// are required; the rest zero their groups when absent.
#[derive(Debug, Clone, Copy)]
pub struct DebateResources<'a> {
    pub lexicons: &'a LexiconSet,
    pub claimbuster: &'a TfidfVocab,
    pub vectors: Option<&'a VectorStore>,
    pub topics: Option<&'a TopicModel>,
    /// Trees keyed by `"<debate_id>/<segment index>"`.
    pub discourse: Option<&'a BTreeMap<String, RstNode>>,
    pub known: Option<&'a KnownRefs>,
}

pub fn discourse_key(debate_id: &str, segment_index: usize) -> String {
    format!("{debate_id}/{segment_index}")
}

/// A sentence located within its debate and segment.
#[derive(Debug, Clone, Copy)]
pub struct SentenceContext<'d> {
    pub debate: &'d Debate,
    pub segments: &'d [Segment],
    pub segment: usize,
    pub position: usize,
    pub sentence: usize,
}

impl<'d> SentenceContext<'d> {
    pub fn all(debate: &'d Debate, segments: &'d [Segment]) -> Vec<SentenceContext<'d>> {
        let mut out = Vec::with_capacity(debate.sentences.len());
        let mut sentence = 0;
        for (si, seg) in segments.iter().enumerate() {
            for position in 0..seg.len() {
                out.push(SentenceContext {
                    debate,
                    segments,
                    segment: si,
                    position,
                    sentence,
                });
                sentence += 1;
            }
        }
        out
    }

    pub fn current(&self) -> &'d Segment {
        &self.segments[self.segment]
    }

    pub fn previous(&self) -> Option<&'d Segment> {
        self.segment.checked_sub(1).map(|i| &self.segments[i])
    }

    pub fn next(&self) -> Option<&'d Segment> {
        self.segments.get(self.segment + 1)
    }
}

/// (is_first, is_last, 1 / rank within the segment).
pub fn position_features(ctx: &SentenceContext) -> [f64; 3] {
    let n = ctx.current().len();
    [
        (ctx.position == 0) as u8 as f64,
        (ctx.position + 1 == n) as u8 as f64,
        1.0 / (ctx.position + 1) as f64,
    ]
}

pub fn segment_size_features(ctx: &SentenceContext) -> [f64; 3] {
    [
        ctx.previous().map_or(0, Segment::len) as f64,
        ctx.current().len() as f64,
        ctx.next().map_or(0, Segment::len) as f64,
    ]
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Opponent mention, is-moderator, speaker one-hot (first candidate, second
/// candidate, moderator), applause, laugh, crosstalk.
pub fn metadata_features(ctx: &SentenceContext) -> [f64; 8] {
    let d = ctx.debate;
    let s = &d.sentences[ctx.sentence];
    let moderator = s.is_moderator || d.is_moderator(&s.speaker);
    let words: Vec<String> = s
        .lower_words()
        .into_iter()
        .map(|w| w.strip_suffix("'s").map(str::to_string).unwrap_or(w))
        .collect();
    let mention = match d.opponent_of(&s.speaker) {
        Some(opp) if !moderator => d
            .name_forms(&opp)
            .iter()
            .any(|form| contains_phrase(&words, &text::tokenize_lower(form))),
        _ => false,
    };
    let cands = d.candidates();
    let b = |x: bool| x as u8 as f64;
    [
        b(mention),
        b(moderator),
        b(!moderator && cands.first() == Some(&s.speaker)),
        b(!moderator && cands.get(1) == Some(&s.speaker)),
        b(moderator),
        b(s.has_event(SystemEvent::Applause)),
        b(s.has_event(SystemEvent::Laugh)),
        b(s.has_event(SystemEvent::Crosstalk)),
    ]
}

/// Per-debate values shared by all of its sentences.
struct DebateCache {
    sentence_negations: Vec<usize>,
    segment_negations: Vec<usize>,
    segment_topics: Vec<Option<Vec<f64>>>,
    segment_vectors: Vec<Option<Vec<f64>>>,
}

pub struct DebateExtractor<'a> {
    config: DebateFeatureConfig,
    res: DebateResources<'a>,
    layout: Layout,
    stop: HashSet<&'static str>,
}

impl<'a> DebateExtractor<'a> {
    pub fn new(config: DebateFeatureConfig, res: DebateResources<'a>) -> Result<Self, FeatureError> {
        if let Some(t) = res.topics {
            if t.k != config.topics_k {
                return Err(FeatureError::Config(format!(
                    "topic model has {} topics, layout expects {}",
                    t.k, config.topics_k
                )));
            }
        } else {
            log::warn!("no topic model: topic features are zero");
        }
        if let Some(v) = res.vectors {
            if v.dim() != config.embedding_dim {
                return Err(FeatureError::Config(format!(
                    "word vectors have dimension {}, layout expects {}",
                    v.dim(),
                    config.embedding_dim
                )));
            }
        } else {
            log::warn!("no word vectors: embedding features are zero");
        }
        if res.discourse.is_none() {
            log::warn!("no discourse trees: discourse features are zero");
        }
        if res.known.is_none() {
            log::warn!("no reference sentences: known-similarity features are zero");
        }
        if res.claimbuster.terms.len() > BOW_DIM || res.claimbuster.terms.len() != res.claimbuster.idf.len() {
            return Err(FeatureError::Config("bag-of-words vocabulary is malformed".into()));
        }
        let layout = config.layout();
        Ok(DebateExtractor {
            config,
            res,
            layout,
            stop: topics::stopwords(),
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn config(&self) -> &DebateFeatureConfig {
        &self.config
    }

    fn cache(&self, debate: &Debate, segments: &[Segment]) -> DebateCache {
        let sentence_negations: Vec<usize> = debate
            .sentences
            .iter()
            .map(|s| self.res.lexicons.negation_count(&s.lower_words()))
            .collect();
        let mut segment_negations = Vec::with_capacity(segments.len());
        let mut segment_topics = Vec::with_capacity(segments.len());
        let mut segment_vectors = Vec::with_capacity(segments.len());
        let mut start = 0;
        for seg in segments {
            let range = start..start + seg.len();
            start = range.end;
            segment_negations.push(sentence_negations[range.clone()].iter().sum());
            let words: Vec<String> = debate.sentences[range].iter().flat_map(|s| s.words()).collect();
            segment_topics.push(self.res.topics.map(|m| {
                m.infer_distribution(&topics::preprocess(&words, &self.stop))
            }));
            segment_vectors.push(self.res.vectors.map(|v| v.sentence_vector(&words)));
        }
        DebateCache {
            sentence_negations,
            segment_negations,
            segment_topics,
            segment_vectors,
        }
    }

    /// Feature vectors for every sentence of a debate, in sentence order.
    pub fn extract_debate(&self, debate: &Debate) -> Vec<Vec<f64>> {
        let segments = segment_debate(debate);
        let cache = self.cache(debate, &segments);
        SentenceContext::all(debate, &segments)
            .iter()
            .map(|ctx| self.extract_cached(ctx, &cache))
            .collect()
    }

    pub fn extract(&self, ctx: &SentenceContext) -> Vec<f64> {
        let cache = self.cache(ctx.debate, ctx.segments);
        self.extract_cached(ctx, &cache)
    }

    fn extract_cached(&self, ctx: &SentenceContext, cache: &DebateCache) -> Vec<f64> {
        let d = ctx.debate;
        let s = &d.sentences[ctx.sentence];
        let words = s.words();
        let lower = s.lower_words();
        let tags = s.pos_tags();
        let mut out = Vec::with_capacity(self.layout.total());

        out.extend(position_features(ctx));
        out.extend(segment_size_features(ctx));
        out.extend(metadata_features(ctx));

        // topics
        let k = self.config.topics_k;
        match self.res.topics {
            Some(m) => {
                let dist = m.infer_distribution(&topics::preprocess(&words, &self.stop));
                out.extend(&dist);
                out.extend(self.neighbor_cosines(ctx, &dist, &cache.segment_topics));
            }
            None => out.extend(std::iter::repeat_n(0.0, k + 3)),
        }

        // embeddings
        let dim = self.config.embedding_dim;
        match self.res.vectors {
            Some(v) => {
                let vec = v.sentence_vector(&words);
                out.extend(&vec);
                out.extend(self.neighbor_cosines(ctx, &vec, &cache.segment_vectors));
            }
            None => out.extend(std::iter::repeat_n(0.0, dim + 3)),
        }

        // contradictions
        let seg_start = ctx.sentence - ctx.position;
        let seg_len = ctx.current().len();
        let neg = |i: Option<usize>| i.map_or(0.0, |i| cache.sentence_negations[i] as f64);
        out.push(cache.sentence_negations[ctx.sentence] as f64);
        out.push(neg(ctx.sentence.checked_sub(1).filter(|&i| i >= seg_start)));
        out.push(neg(Some(ctx.sentence + 1).filter(|&i| i < seg_start + seg_len)));
        out.push(ctx.segment.checked_sub(1).map_or(0.0, |i| cache.segment_negations[i] as f64));
        out.push(cache.segment_negations.get(ctx.segment + 1).map_or(0.0, |&c| c as f64));

        // known similarity
        match self.res.known {
            Some(k) => out.extend(k.features(&d.id, s.id, &s.speaker, &word_types(&words))),
            None => out.extend([0.0; 3]),
        }

        // discourse
        let tree = self
            .res
            .discourse
            .and_then(|m| m.get(&discourse_key(&d.id, ctx.current().index_in_debate)));
        let targets: HashSet<u64> = [s.id].into_iter().collect();
        out.extend(discourse::discourse_features(tree, &targets));

        // claimbuster
        out.extend(self.res.claimbuster.transform_padded(&lower, BOW_DIM));
        let mut pos = [0.0; text::POS_TAGS.len()];
        for t in &tags {
            if let Some(i) = text::pos_index(t) {
                pos[i] += 1.0;
            }
        }
        out.extend(pos);
        let entities = entity_types(s);
        let mut ne = [0.0; NE_TYPES.len()];
        for e in &entities {
            ne[ne_type_index(e)] += 1.0;
        }
        out.extend(ne);
        let (p, n) = self.res.lexicons.sentiment_counts(&lower);
        out.push((p as f64 - n as f64) / (p as f64 + n as f64 + 1.0));
        out.push(words.len() as f64);

        out.push(p as f64);
        out.push(n as f64);
        out.push(entities.len() as f64);
        out.extend(self.res.lexicons.linguistic_features(&lower));
        out.push(tense(&words, &tags).value());
        out.push(s.text.chars().count() as f64);

        debug_assert_eq!(out.len(), self.layout.total());
        out
    }

    fn neighbor_cosines(&self, ctx: &SentenceContext, v: &[f64], segs: &[Option<Vec<f64>>]) -> [f64; 3] {
        let at = |i: Option<usize>| {
            i.and_then(|i| segs.get(i))
                .and_then(|s| s.as_deref())
                .map_or(0.0, |s| cos(v, s))
        };
        [
            at(ctx.segment.checked_sub(1)),
            at(Some(ctx.segment)),
            at(Some(ctx.segment + 1)),
        ]
    }
}

/// Entity types from ingested tags when any token carries one, otherwise the
/// capitalization heuristic with every span typed OTHER.
pub fn entity_types(s: &crate::corpus::Sentence) -> Vec<String> {
    if s.tokens.iter().any(|t| t.ne.is_some()) {
        let tags: Vec<Option<String>> = s.tokens.iter().map(|t| t.ne.clone()).collect();
        text::entity_spans(&tags)
    } else {
        text::fallback_entities(&s.text)
            .into_iter()
            .map(|_| "OTHER".to_string())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnnotationMatrix, Sentence};
    use crate::text::Token;
    use proptest::prelude::*;

    fn sentence(id: u64, speaker: &str, text: &str) -> Sentence {
        Sentence {
            id,
            text: text.into(),
            speaker: speaker.into(),
            is_moderator: speaker == "Holt",
            events: Vec::new(),
            tokens: text::tokenize(text).into_iter().map(Token::new).collect(),
        }
    }

    fn debate(rows: &[(&str, &str)]) -> Debate {
        let mut annotations = AnnotationMatrix::default();
        let sentences: Vec<Sentence> = rows
            .iter()
            .enumerate()
            .map(|(i, (sp, t))| {
                annotations.push(i as u64, [false; 9]);
                sentence(i as u64, sp, t)
            })
            .collect();
        Debate {
            id: "d1".into(),
            sentences,
            annotations,
            moderators: vec!["Holt".into()],
            aliases: BTreeMap::new(),
        }
    }

    fn fixture() -> Debate {
        debate(&[
            ("Holt", "Good evening."),
            ("Holt", "Secretary Clinton, you have two minutes."),
            ("Clinton", "Thank you."),
            ("Clinton", "Donald thinks that climate change is a hoax perpetrated by the Chinese."),
            ("Clinton", "I think it's real."),
            ("Clinton", "I did not say that."),
            ("Clinton", "We will never stop."),
            ("Trump", "I did not."),
            ("Trump", "I do not say that."),
        ])
    }

    #[test]
    fn layout_sums_to_1711() {
        let c = DebateFeatureConfig::default();
        let l = c.layout();
        assert_eq!(l.total(), 1711);
        assert_eq!(l.size("claimbuster"), Some(1045));
        assert_eq!(l.size("topics"), Some(303));
        assert_eq!(l.size("embeddings"), Some(303));
        assert_eq!(CLAIMBUSTER_DIM, 1045);
    }

    #[test]
    fn position_and_sizes() {
        let d = fixture();
        let segs = segment_debate(&d);
        let ctxs = SentenceContext::all(&d, &segs);
        assert_eq!(position_features(&ctxs[0]), [1.0, 0.0, 1.0]);
        // Clinton: 5 sentences; 3rd of 5
        assert_eq!(position_features(&ctxs[4]), [0.0, 0.0, 1.0 / 3.0]);
        assert_eq!(position_features(&ctxs[6]), [0.0, 1.0, 0.2]);
        assert_eq!(segment_size_features(&ctxs[0]), [0.0, 2.0, 5.0]);
        assert_eq!(segment_size_features(&ctxs[3]), [2.0, 5.0, 2.0]);
        assert_eq!(segment_size_features(&ctxs[8]), [5.0, 2.0, 0.0]);
        let single = debate(&[("Clinton", "a."), ("Clinton", "b."), ("Clinton", "c.")]);
        let ss = segment_debate(&single);
        let c = SentenceContext::all(&single, &ss);
        assert_eq!(segment_size_features(&c[1]), [0.0, 3.0, 0.0]);
        let only = debate(&[("Clinton", "a.")]);
        let os = segment_debate(&only);
        assert_eq!(position_features(&SentenceContext::all(&only, &os)[0]), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn metadata_opponent_and_events() {
        let mut d = fixture();
        d.sentences[3].events.push(SystemEvent::Applause);
        let segs = segment_debate(&d);
        let ctxs = SentenceContext::all(&d, &segs);
        let m = metadata_features(&ctxs[3]);
        assert_eq!(m, [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let m = metadata_features(&ctxs[0]);
        assert_eq!(m[..5], [0.0, 1.0, 0.0, 0.0, 1.0]);
        let m = metadata_features(&ctxs[7]);
        assert_eq!(m[..5], [0.0, 0.0, 0.0, 1.0, 0.0]);
        let t = debate(&[
            ("Clinton", "Hello."),
            ("Trump", "Hillary Clinton attacked those same women."),
            ("Clinton", "They're doing it to try to influence the election for Donald Trump."),
        ]);
        let ts = segment_debate(&t);
        let tc = SentenceContext::all(&t, &ts);
        assert_eq!(metadata_features(&tc[1])[0], 1.0);
        assert_eq!(metadata_features(&tc[2])[0], 1.0);
        assert_eq!(metadata_features(&tc[0])[0], 0.0);
    }

    #[test]
    fn tense_rules() {
        let t = |s: &str| {
            let w = text::tokenize(s);
            let tags = text::fallback_pos_tags(&w);
            tense(&w, &tags)
        };
        assert_eq!(t("they will open a second school"), Tense::Future);
        assert_eq!(t("he was impeached"), Tense::Past);
        assert_eq!(t("I think it's real."), Tense::Present);
        assert_eq!(t("we have to fix what was broken"), Tense::Future);
    }

    #[test]
    fn known_similarity_signs() {
        let d = fixture();
        let mut refs = KnownRefs::from_debates(&[&d], |_, i| i == 5);
        let w = word_types(&text::tokenize("I did not say that."));
        // sentence 5 itself excluded; sentence 8 negative with overlap 4 (i, not, say, that)
        let f = refs.features("d2", 99, "Trump", &w);
        assert_eq!(f[0], 5.0);
        let f_self = refs.features("d1", 5, "Clinton", &w);
        // only negative references remain; "Good evening." overlaps nothing
        assert_eq!(f_self[0], 0.0);
        let only_neg = KnownRefs::from_debates(&[&debate(&[("Trump", "I did not say that.")])], |_, _| false);
        assert_eq!(only_neg.features("x", 0, "Trump", &w)[0], -5.0);
        assert_eq!(only_neg.features("x", 0, "Clinton", &w)[1], 0.0);
        refs.add_external("We've weakened America's place in the world.", None);
        let target = word_types(&text::tokenize(
            "For the last seven-and-a-half years, we've seen America's place in the world weakened.",
        ));
        assert_eq!(refs.features("z", 0, "Trump", &target)[2], 7.0);
        assert_eq!(KnownRefs::default().features("z", 0, "Trump", &target), [0.0; 3]);
    }

    #[test]
    fn claimbuster_bow_hand_values() {
        let docs = vec![
            text::tokenize_lower("the economy grows"),
            text::tokenize_lower("the economy shrinks"),
            text::tokenize_lower("jobs"),
        ];
        let v = claimbuster_vocab(&docs);
        // df: the 2, economy 2, grows 1, jobs 1, shrinks 1 -> order by df desc then alpha
        assert_eq!(v.terms, vec!["economy", "the", "grows", "jobs", "shrinks"]);
        let b = v.transform_padded(&text::tokenize_lower("The economy the"), BOW_DIM);
        let idf2 = (4.0f64 / 3.0).ln() + 1.0;
        assert!((b[0] - idf2).abs() < 1e-12);
        assert!((b[1] - 2.0 * idf2).abs() < 1e-12);
        assert!(v.transform_padded(&["zzz"], BOW_DIM).iter().all(|&x| x == 0.0));
        assert_eq!(b.len(), BOW_DIM);
    }

    fn small_config() -> DebateFeatureConfig {
        DebateFeatureConfig {
            topics_k: 2,
            embedding_dim: 2,
            ..Default::default()
        }
    }

    #[test]
    fn full_extraction_values() {
        let d = fixture();
        let lex = LexiconSet::builtin();
        let vocab = claimbuster_vocab(&d.sentences.iter().map(|s| s.lower_words()).collect::<Vec<_>>());
        let store = VectorStore::from_pairs([("hoax", vec![1.0, 0.0]), ("real", vec![0.0, 1.0])]).unwrap();
        let res = DebateResources {
            lexicons: &lex,
            claimbuster: &vocab,
            vectors: Some(&store),
            topics: None,
            discourse: None,
            known: None,
        };
        let ex = DebateExtractor::new(small_config(), res).unwrap();
        let rows = ex.extract_debate(&d);
        assert_eq!(rows.len(), 9);
        let l = ex.layout();
        for r in &rows {
            assert_eq!(r.len(), l.total());
        }
        let c = l.range("contradictions").unwrap();
        // "I did not say that." (5): own 1, prev "I think it's real." 0, next "We will never stop." 1,
        // previous segment (Holt) 0, next segment (Trump) 2
        assert_eq!(rows[5][c.clone()], [1.0, 0.0, 1.0, 0.0, 2.0]);
        // Trump's first sentence sees the two cues of Clinton's segment
        assert_eq!(rows[7][c.start + 3], 2.0);
        let e = l.range("embeddings").unwrap();
        assert_eq!(rows[3][e.start..e.start + 2], [1.0, 0.0]);
        assert_eq!(rows[0][l.range("topics").unwrap()], [0.0; 5]);
        let tn = l.range("tense").unwrap().start;
        assert_eq!(rows[6][tn], Tense::Future.value());
        let len = l.range("length").unwrap().start;
        assert_eq!(rows[2][len], "Thank you.".len() as f64);
        let cb = l.range("claimbuster").unwrap();
        assert_eq!(rows[2][cb.end - 1], 2.0);
        // same input, same bits
        assert_eq!(rows, ex.extract_debate(&d));
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let lex = LexiconSet::builtin();
        let vocab = claimbuster_vocab::<Vec<String>, String>(&[]);
        let store = VectorStore::from_pairs([("a", vec![1.0, 0.0, 0.0])]).unwrap();
        let res = DebateResources {
            lexicons: &lex,
            claimbuster: &vocab,
            vectors: Some(&store),
            topics: None,
            discourse: None,
            known: None,
        };
        assert!(matches!(
            DebateExtractor::new(small_config(), res),
            Err(FeatureError::Config(_))
        ));
    }

    #[test]
    fn selection_masks() {
        let c = DebateFeatureConfig::default();
        let ctx = c.resolve("context").unwrap();
        let n: usize = ctx.iter().map(|r| r.len()).sum();
        assert_eq!(n, 3 + 3 + 8 + 3 + 3 + 4 + 18);
        assert!(c.resolve("nope").is_err());
        let only = c.selection_mask(&[], &["tense".into()]).unwrap();
        let zeroed: usize = only.iter().map(|r| r.len()).sum();
        assert_eq!(zeroed, 1710);
    }

    proptest! {
        #[test]
        fn ablation_zeroes_exactly_the_named_slots(
            values in prop::collection::vec(-5.0f64..5.0, 1711),
            pick in prop::sample::subsequence(vec!["context", "discourse", "topics", "claimbuster", "tense", "metadata"], 1..3),
        ) {
            let c = DebateFeatureConfig::default();
            let names: Vec<String> = pick.iter().map(|s| s.to_string()).collect();
            let mask = c.selection_mask(&names, &[]).unwrap();
            let mut masked = values.clone();
            super::super::zero_ranges(&mut masked, &mask);
            let mut inside = vec![false; 1711];
            for r in &mask { for i in r.clone() { inside[i] = true; } }
            for i in 0..1711 {
                if inside[i] { prop_assert_eq!(masked[i], 0.0); } else { prop_assert_eq!(masked[i], values[i]); }
            }
        }
    }
}

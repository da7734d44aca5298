//! Debate transcripts and community-QA threads.
//!
//! Transcripts are line-delimited JSON, one record per sentence:
//!
//! ```text
//! {"debate_id":"1st","sentence_id":17,"speaker":"Clinton","is_moderator":false,
//!  "text":"Donald thinks that climate change is a hoax.","events":["applause"],
//!  "annotations":{"CT":1,"ABC":1,"CNN":1,"WP":1,"NPR":0,"PF":0,"TG":1,"NYT":0,"FC":1}}
//! ```
//!
//! `events` are system messages (applause, laugh, crosstalk) that *follow* the
//! sentence. A record without `sentence_id` is debate metadata:
//! `{"debate_id":"1st","moderators":["Holt"],"aliases":{"Trump":["Donald","Trump"]}}`.
//!
//! cQA threads are one JSON object per line, mirroring [`CqaThread`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{self, Token};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: line {line}: schema error: {msg}")]
    Schema { path: String, line: usize, msg: String },
    #[error("{0}: no records")]
    NoRecords(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The nine fact-checking sources, in annotation-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    CT,
    ABC,
    CNN,
    WP,
    NPR,
    PF,
    TG,
    NYT,
    FC,
}

impl Source {
    pub const ALL: [Source; 9] = [
        Source::CT,
        Source::ABC,
        Source::CNN,
        Source::WP,
        Source::NPR,
        Source::PF,
        Source::TG,
        Source::NYT,
        Source::FC,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Source::CT => "CT",
            Source::ABC => "ABC",
            Source::CNN => "CNN",
            Source::WP => "WP",
            Source::NPR => "NPR",
            Source::PF => "PF",
            Source::TG => "TG",
            Source::NYT => "NYT",
            Source::FC => "FC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: &str) -> Option<Source> {
        Source::ALL
            .iter()
            .copied()
            .find(|s| s.code().eq_ignore_ascii_case(code))
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemEvent {
    Applause,
    Laugh,
    #[serde(alias = "cross-talk", alias = "cross_talk")]
    Crosstalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: u64,
    pub text: String,
    pub speaker: String,
    pub is_moderator: bool,
    /// System messages that immediately follow this sentence.
    pub events: Vec<SystemEvent>,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn words(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    pub fn lower_words(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.to_lowercase()).collect()
    }

    /// Tags from the input when every token has one, otherwise the fallback tagger.
    pub fn pos_tags(&self) -> Vec<String> {
        if !self.tokens.is_empty() && self.tokens.iter().all(|t| t.pos.is_some()) {
            self.tokens.iter().map(|t| t.pos.clone().unwrap()).collect()
        } else {
            text::fallback_pos_tags(&self.words())
        }
    }

    pub fn has_event(&self, ev: SystemEvent) -> bool {
        self.events.contains(&ev)
    }
}

/// Binary source-by-sentence annotation cells with the derived ANY column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationMatrix {
    rows: Vec<u64>,
    cells: Vec<[bool; 9]>,
}

impl AnnotationMatrix {
    pub fn push(&mut self, sentence_id: u64, cells: [bool; 9]) {
        self.rows.push(sentence_id);
        self.cells.push(cells);
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn cell(&self, row: usize, source: Source) -> bool {
        self.cells[row][source.index()]
    }

    pub fn row(&self, row: usize) -> [bool; 9] {
        self.cells[row]
    }

    pub fn any(&self, row: usize) -> bool {
        self.cells[row].iter().any(|&c| c)
    }

    /// Number of sources that selected the sentence.
    pub fn votes(&self, row: usize) -> usize {
        self.cells[row].iter().filter(|&&c| c).count()
    }

    pub fn source_count(&self, source: Source) -> usize {
        self.cells.iter().filter(|r| r[source.index()]).count()
    }

    pub fn any_count(&self) -> usize {
        (0..self.rows.len()).filter(|&i| self.any(i)).count()
    }

    pub fn total_annotations(&self) -> usize {
        self.cells.iter().map(|r| r.iter().filter(|&&c| c).count()).sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Debate {
    pub id: String,
    pub sentences: Vec<Sentence>,
    /// Row `i` belongs to `sentences[i]`.
    pub annotations: AnnotationMatrix,
    pub moderators: Vec<String>,
    /// Extra surface forms per speaker, used for opponent-mention detection.
    pub aliases: BTreeMap<String, Vec<String>>,
}

/// Built-in name variants for the 2016 participants; merged with any aliases
/// given in the transcript metadata.
const DEFAULT_ALIASES: &[(&str, &[&str])] = &[
    ("clinton", &["hillary", "clinton"]),
    ("trump", &["donald", "trump"]),
    ("kaine", &["tim", "kaine"]),
    ("pence", &["mike", "pence"]),
];

impl Debate {
    pub fn is_moderator(&self, speaker: &str) -> bool {
        self.moderators.iter().any(|m| m.eq_ignore_ascii_case(speaker))
    }

    /// The two non-moderator speakers with most sentences, in order of first appearance.
    pub fn candidates(&self) -> Vec<String> {
        let mut counts: Vec<(String, usize, usize)> = Vec::new();
        for (pos, s) in self.sentences.iter().enumerate() {
            if s.is_moderator || self.is_moderator(&s.speaker) {
                continue;
            }
            match counts.iter_mut().find(|c| c.0 == s.speaker) {
                Some(c) => c.1 += 1,
                None => counts.push((s.speaker.clone(), 1, pos)),
            }
        }
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        counts.truncate(2);
        counts.sort_by_key(|c| c.2);
        counts.into_iter().map(|c| c.0).collect()
    }

    pub fn opponent_of(&self, speaker: &str) -> Option<String> {
        let cands = self.candidates();
        if cands.len() != 2 || !cands.iter().any(|c| c == speaker) {
            return None;
        }
        cands.into_iter().find(|c| c != speaker)
    }

    /// Lowercased surface forms that refer to `speaker`.
    pub fn name_forms(&self, speaker: &str) -> Vec<String> {
        let key = speaker.to_lowercase();
        let mut forms: Vec<String> = vec![key.clone()];
        for (name, extra) in DEFAULT_ALIASES {
            if *name == key {
                forms.extend(extra.iter().map(|s| s.to_string()));
            }
        }
        for (name, extra) in &self.aliases {
            if name.eq_ignore_ascii_case(speaker) {
                forms.extend(extra.iter().map(|s| s.to_lowercase()));
            }
        }
        forms.sort();
        forms.dedup();
        forms
    }

    pub fn labels_any(&self) -> Vec<bool> {
        (0..self.sentences.len()).map(|i| self.annotations.any(i)).collect()
    }

    pub fn labels_for(&self, source: Source) -> Vec<bool> {
        (0..self.sentences.len())
            .map(|i| self.annotations.cell(i, source))
            .collect()
    }

    pub fn index_of(&self, sentence_id: u64) -> Option<usize> {
        self.sentences.iter().position(|s| s.id == sentence_id)
    }
}

/// A maximal run of consecutive sentences by one speaker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub speaker: String,
    pub sentence_ids: Vec<u64>,
    pub index_in_debate: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.sentence_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence_ids.is_empty()
    }
}

pub fn segment_debate(debate: &Debate) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for s in &debate.sentences {
        match segments.last_mut() {
            Some(seg) if seg.speaker == s.speaker => seg.sentence_ids.push(s.id),
            _ => {
                let index_in_debate = segments.len();
                segments.push(Segment {
                    speaker: s.speaker.clone(),
                    sentence_ids: vec![s.id],
                    index_in_debate,
                });
            }
        }
    }
    segments
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DebateStats {
    pub debate_id: String,
    pub sentences: usize,
    pub positives: usize,
    pub total_annotations: usize,
    pub per_source: BTreeMap<String, usize>,
}

pub fn debate_stats(debate: &Debate) -> DebateStats {
    DebateStats {
        debate_id: debate.id.clone(),
        sentences: debate.sentences.len(),
        positives: debate.annotations.any_count(),
        total_annotations: debate.annotations.total_annotations(),
        per_source: Source::ALL
            .iter()
            .map(|s| (s.code().to_string(), debate.annotations.source_count(*s)))
            .collect(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SentenceRecord {
    #[serde(rename = "debate_id")]
    _debate_id: String,
    sentence_id: u64,
    speaker: String,
    #[serde(default)]
    is_moderator: bool,
    text: String,
    #[serde(default)]
    events: Vec<SystemEvent>,
    annotations: BTreeMap<String, u8>,
    #[serde(default)]
    tokens: Option<Vec<Token>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRecord {
    #[serde(rename = "debate_id")]
    _debate_id: String,
    #[serde(default)]
    moderators: Vec<String>,
    #[serde(default)]
    aliases: BTreeMap<String, Vec<String>>,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

fn default_tokens(text: &str) -> Vec<Token> {
    text::tokenize(text).into_iter().map(Token::new).collect()
}

/// Parses a transcript file. Debates come back in order of first appearance.
pub fn load_debates(path: impl AsRef<Path>) -> Result<Vec<Debate>, CorpusError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(CorpusError::NoRecords(p));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, Debate> = HashMap::new();
    let mut seen: HashSet<(String, u64)> = HashSet::new();

    for (line_no, line) in lines {
        let parse_err = |msg: String| CorpusError::Parse {
            path: p.clone(),
            line: line_no,
            msg,
        };
        let schema_err = |msg: String| CorpusError::Schema {
            path: p.clone(),
            line: line_no,
            msg,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let debate_id = value
            .get("debate_id")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err("missing debate_id".into()))?
            .to_string();
        let debate = by_id.entry(debate_id.clone()).or_insert_with(|| {
            order.push(debate_id.clone());
            Debate {
                id: debate_id.clone(),
                sentences: Vec::new(),
                annotations: AnnotationMatrix::default(),
                moderators: Vec::new(),
                aliases: BTreeMap::new(),
            }
        });

        if value.get("sentence_id").is_none() {
            let meta: MetaRecord =
                serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
            for m in meta.moderators {
                if !debate.moderators.contains(&m) {
                    debate.moderators.push(m);
                }
            }
            debate.aliases.extend(meta.aliases);
            continue;
        }

        let rec: SentenceRecord =
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(schema_err(format!("sentence {} has empty text", rec.sentence_id)));
        }
        if rec.speaker.trim().is_empty() {
            return Err(schema_err(format!("sentence {} has no speaker", rec.sentence_id)));
        }
        if !seen.insert((debate_id.clone(), rec.sentence_id)) {
            return Err(schema_err(format!(
                "duplicate sentence id {} in debate {}",
                rec.sentence_id, debate_id
            )));
        }
        let mut cells = [false; 9];
        let mut present = [false; 9];
        for (col, v) in &rec.annotations {
            let source = Source::from_code(col)
                .ok_or_else(|| schema_err(format!("unknown source column {col:?}")))?;
            if *v > 1 {
                return Err(schema_err(format!("annotation {col} must be 0 or 1, got {v}")));
            }
            cells[source.index()] = *v == 1;
            present[source.index()] = true;
        }
        if let Some(missing) = Source::ALL.iter().find(|s| !present[s.index()]) {
            return Err(schema_err(format!("missing source column {missing}")));
        }
        if rec.is_moderator && !debate.moderators.contains(&rec.speaker) {
            debate.moderators.push(rec.speaker.clone());
        }
        let tokens = match rec.tokens {
            Some(t) if !t.is_empty() => t,
            _ => default_tokens(&rec.text),
        };
        debate.annotations.push(rec.sentence_id, cells);
        debate.sentences.push(Sentence {
            id: rec.sentence_id,
            text: rec.text,
            speaker: rec.speaker,
            is_moderator: rec.is_moderator,
            events: rec.events,
            tokens,
        });
    }
    let debates: Vec<Debate> = order
        .into_iter()
        .map(|id| by_id.remove(&id).unwrap())
        .filter(|d| !d.sentences.is_empty())
        .collect();
    if debates.is_empty() {
        return Err(CorpusError::NoRecords(p));
    }
    Ok(debates)
}

pub fn save_debates(path: impl AsRef<Path>, debates: &[Debate]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for d in debates {
        if !d.moderators.is_empty() || !d.aliases.is_empty() {
            let meta = serde_json::json!({
                "debate_id": d.id,
                "moderators": d.moderators,
                "aliases": d.aliases,
            });
            writeln!(out, "{meta}").map_err(io)?;
        }
        for (i, s) in d.sentences.iter().enumerate() {
            let annotations: BTreeMap<&str, u8> = Source::ALL
                .iter()
                .map(|src| (src.code(), d.annotations.cell(i, *src) as u8))
                .collect();
            let rec = serde_json::json!({
                "debate_id": d.id,
                "sentence_id": s.id,
                "speaker": s.speaker,
                "is_moderator": s.is_moderator,
                "text": s.text,
                "events": s.events,
                "annotations": annotations,
                "tokens": s.tokens,
            });
            writeln!(out, "{rec}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Token sidecar: one JSON object per line, `{"key": "<doc>/<unit>", "tokens": [...]}`,
/// where `<doc>` is a debate id (or thread id) and `<unit>` a sentence id (or answer id).
pub fn load_token_sidecar(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, Vec<Token>>, CorpusError> {
    #[derive(Deserialize)]
    struct Rec {
        key: String,
        tokens: Vec<Token>,
    }
    let path = path.as_ref();
    let p = path.display().to_string();
    let mut out = HashMap::new();
    for (line, text) in read_lines(path)? {
        let rec: Rec = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            path: p.clone(),
            line,
            msg: e.to_string(),
        })?;
        out.insert(rec.key, rec.tokens);
    }
    Ok(out)
}

/// Replaces sentence tokens with sidecar entries keyed `debate_id/sentence_id`.
pub fn apply_token_sidecar(debates: &mut [Debate], sidecar: &HashMap<String, Vec<Token>>) -> usize {
    let mut applied = 0;
    for d in debates.iter_mut() {
        for s in d.sentences.iter_mut() {
            if let Some(toks) = sidecar.get(&format!("{}/{}", d.id, s.id)) {
                s.tokens = toks.clone();
                applied += 1;
            }
        }
    }
    applied
}

// ---------------------------------------------------------------------------
// community QA

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuestionClass {
    Factual,
    Opinion,
    Socializing,
}

impl QuestionClass {
    pub const ALL: [QuestionClass; 3] = [
        QuestionClass::Factual,
        QuestionClass::Opinion,
        QuestionClass::Socializing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Goodness {
    Good,
    PotentiallyUseful,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factuality {
    Positive,
    Negative,
}

/// Fine-grained answer labels; only `True` maps to the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FineLabel {
    #[serde(rename = "Factual - True")]
    True,
    #[serde(rename = "Factual - False")]
    False,
    #[serde(rename = "Factual - Partially True")]
    PartiallyTrue,
    #[serde(rename = "Factual - Conditionally True")]
    ConditionallyTrue,
    #[serde(rename = "Factual - Responder Unsure")]
    ResponderUnsure,
    #[serde(rename = "NonFactual")]
    NonFactual,
}

impl FineLabel {
    pub const ALL: [FineLabel; 6] = [
        FineLabel::True,
        FineLabel::False,
        FineLabel::PartiallyTrue,
        FineLabel::ConditionallyTrue,
        FineLabel::ResponderUnsure,
        FineLabel::NonFactual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FineLabel::True => "Factual - True",
            FineLabel::False => "Factual - False",
            FineLabel::PartiallyTrue => "Factual - Partially True",
            FineLabel::ConditionallyTrue => "Factual - Conditionally True",
            FineLabel::ResponderUnsure => "Factual - Responder Unsure",
            FineLabel::NonFactual => "NonFactual",
        }
    }

    pub fn parse(s: &str) -> Option<FineLabel> {
        FineLabel::ALL.iter().copied().find(|l| l.name() == s)
    }

    pub fn coarse(self) -> Factuality {
        match self {
            FineLabel::True => Factuality::Positive,
            _ => Factuality::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub subject: String,
    pub body: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub datetime: String,
    #[serde(default)]
    pub user: String,
    /// Multi-question posts are kept but excluded from the label statistics.
    #[serde(default)]
    pub excluded: bool,
}

impl Question {
    pub fn text(&self) -> String {
        if self.body.is_empty() {
            self.subject.clone()
        } else if self.subject.is_empty() {
            self.body.clone()
        } else {
            format!("{} {}", self.subject, self.body)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub user: String,
    pub goodness: Goodness,
    #[serde(default)]
    pub factuality: Option<Factuality>,
    #[serde(default, with = "fine_label_serde")]
    pub fine_label: Option<FineLabel>,
}

mod fine_label_serde {
    use super::FineLabel;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<FineLabel>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|l| l.name()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<FineLabel>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        match raw {
            None => Ok(None),
            Some(s) => FineLabel::parse(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown fine label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqaThread {
    pub question: Question,
    #[serde(default)]
    pub question_class: Option<QuestionClass>,
    #[serde(default)]
    pub answers: Vec<Answer>,
}

impl CqaThread {
    /// Answers carrying a factuality label (the classification targets).
    pub fn labeled_answers(&self) -> impl Iterator<Item = (usize, &Answer)> {
        self.answers
            .iter()
            .enumerate()
            .filter(|(_, a)| a.factuality.is_some())
    }
}

pub fn load_cqa(path: impl AsRef<Path>) -> Result<Vec<CqaThread>, CorpusError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(CorpusError::NoRecords(p));
    }
    let mut threads = Vec::with_capacity(lines.len());
    let mut ids = HashSet::new();
    for (line, text) in lines {
        let schema_err = |msg: String| CorpusError::Schema {
            path: p.clone(),
            line,
            msg,
        };
        let mut thread: CqaThread = serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("unknown fine label") {
                schema_err(msg)
            } else {
                CorpusError::Parse {
                    path: p.clone(),
                    line,
                    msg,
                }
            }
        })?;
        if !ids.insert(thread.question.id.clone()) {
            return Err(schema_err(format!("duplicate question id {}", thread.question.id)));
        }
        for a in thread.answers.iter_mut() {
            if let Some(fine) = a.fine_label {
                match a.factuality {
                    None => a.factuality = Some(fine.coarse()),
                    Some(f) if f != fine.coarse() => {
                        return Err(schema_err(format!(
                            "answer {}: fine label {:?} contradicts factuality {:?}",
                            a.id,
                            fine.name(),
                            f
                        )))
                    }
                    _ => {}
                }
            }
            if a.factuality.is_some() && a.goodness != Goodness::Good {
                return Err(schema_err(format!(
                    "answer {}: factuality label on a non-Good answer",
                    a.id
                )));
            }
        }
        threads.push(thread);
    }
    Ok(threads)
}

pub fn save_cqa(path: impl AsRef<Path>, threads: &[CqaThread]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for t in threads {
        let line = serde_json::to_string(t).expect("thread serializes");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CqaStats {
    pub threads: usize,
    pub excluded: usize,
    pub factual: usize,
    pub opinion: usize,
    pub socializing: usize,
    pub positive: usize,
    pub negative: usize,
    pub fine: BTreeMap<String, usize>,
}

pub fn cqa_stats(threads: &[CqaThread]) -> CqaStats {
    let mut st = CqaStats {
        threads: threads.len(),
        ..Default::default()
    };
    for t in threads {
        if t.question.excluded {
            st.excluded += 1;
            continue;
        }
        match t.question_class {
            Some(QuestionClass::Factual) => st.factual += 1,
            Some(QuestionClass::Opinion) => st.opinion += 1,
            Some(QuestionClass::Socializing) => st.socializing += 1,
            None => {}
        }
        for a in &t.answers {
            match a.factuality {
                Some(Factuality::Positive) => st.positive += 1,
                Some(Factuality::Negative) => st.negative += 1,
                None => {}
            }
            if let Some(f) = a.fine_label {
                *st.fine.entry(f.name().to_string()).or_default() += 1;
            }
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(debate: &str, id: u64, speaker: &str, text: &str, ann: [u8; 9]) -> String {
        let annotations: BTreeMap<&str, u8> = Source::ALL
            .iter()
            .zip(ann)
            .map(|(s, v)| (s.code(), v))
            .collect();
        serde_json::json!({
            "debate_id": debate, "sentence_id": id, "speaker": speaker,
            "text": text, "annotations": annotations,
        })
        .to_string()
    }

    fn write(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn debate_from_speakers(speakers: &[&str]) -> Debate {
        let lines: Vec<String> = speakers
            .iter()
            .enumerate()
            .map(|(i, s)| record("d", i as u64, s, "some text", [0; 9]))
            .collect();
        load_debates(write(&lines).path()).unwrap().remove(0)
    }

    #[test]
    fn empty_file_has_no_records() {
        let f = write(&[]);
        let err = load_debates(f.path()).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write(&[record("d", 1, "A", "x", [0; 9]), "{not json".into()]);
        match load_debates(f.path()).unwrap_err() {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_source_column_is_schema_error() {
        let bad = r#"{"debate_id":"d","sentence_id":1,"speaker":"A","text":"x","annotations":{"CT":0,"ABC":0,"CNN":0,"WP":0,"NPR":0,"PF":0,"TG":0,"NYT":0,"FC":0,"BBC":1}}"#;
        let f = write(&[bad.to_string()]);
        assert!(matches!(load_debates(f.path()), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn duplicate_sentence_id_rejected() {
        let f = write(&[record("d", 1, "A", "x", [0; 9]), record("d", 1, "A", "y", [0; 9])]);
        assert!(matches!(load_debates(f.path()), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn any_column_is_or_of_sources() {
        let f = write(&[
            record("d", 1, "Clinton", "So we're now on the precipice.", [0; 9]),
            record("d", 2, "Clinton", "Donald thinks that climate change is a hoax perpetrated by the Chinese.", [1, 1, 1, 1, 0, 0, 1, 0, 1]),
            record("d", 3, "Trump", "I did not.", [1, 1, 0, 1, 1, 1, 0, 0, 0]),
        ]);
        let d = load_debates(f.path()).unwrap().remove(0);
        assert_eq!(d.labels_any(), vec![false, true, true]);
        assert_eq!(d.annotations.votes(1), 6);
        assert_eq!(d.annotations.votes(2), 5);
        assert_eq!(d.annotations.any_count(), 2);
        let per_source: usize = Source::ALL.iter().map(|s| d.annotations.source_count(*s)).sum();
        assert!(per_source >= d.annotations.any_count());
    }

    #[test]
    fn segments_are_maximal_runs() {
        let d = debate_from_speakers(&["A", "A", "B", "A"]);
        let sizes: Vec<usize> = segment_debate(&d).iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![2, 1, 1]);

        let d = debate_from_speakers(&["A"; 5]);
        assert_eq!(segment_debate(&d).len(), 1);
        assert_eq!(segment_debate(&d)[0].len(), 5);

        let mut speakers = vec!["Clinton"; 7];
        speakers.push("Trump");
        let d = debate_from_speakers(&speakers);
        assert_eq!(segment_debate(&d).len(), 2);
    }

    #[test]
    fn moderator_flags_and_candidates() {
        let mut lines = vec![r#"{"debate_id":"d","moderators":["HOLT"]}"#.to_string()];
        lines.push(record("d", 0, "HOLT", "Good evening.", [0; 9]));
        lines.push(record("d", 1, "Clinton", "Thank you.", [0; 9]));
        lines.push(record("d", 2, "Trump", "Thank you.", [0; 9]));
        let d = load_debates(write(&lines).path()).unwrap().remove(0);
        assert!(d.is_moderator("Holt"));
        assert_eq!(d.candidates(), vec!["Clinton", "Trump"]);
        assert_eq!(d.opponent_of("Clinton").as_deref(), Some("Trump"));
        assert!(d.name_forms("Trump").contains(&"donald".to_string()));
    }

    #[test]
    fn debate_round_trip() {
        let f = write(&[
            r#"{"debate_id":"x","moderators":["M"],"aliases":{"A":["Al"]}}"#.to_string(),
            record("x", 3, "M", "Welcome.", [0; 9]),
            record("x", 4, "A", "We did it!", [0, 1, 0, 0, 0, 0, 0, 0, 1]),
            record("y", 1, "B", "Other debate.", [1; 9]),
        ]);
        let first = load_debates(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_debates(out.path(), &first).unwrap();
        let second = load_debates(out.path()).unwrap();
        assert_eq!(first, second);
    }

    fn thread_json(answers: &str, class: &str) -> String {
        format!(
            r#"{{"question":{{"id":"Q1","subject":"s","body":"b","category":"c","datetime":"d","user":"u"}},"question_class":{class},"answers":[{answers}]}}"#
        )
    }

    #[test]
    fn cqa_fine_label_inventory_enforced() {
        let good = r#"{"id":"A1","text":"t","goodness":"Good","fine_label":"Factual - Partially True"}"#;
        let f = write(&[thread_json(good, "\"Factual\"")]);
        let threads = load_cqa(f.path()).unwrap();
        assert_eq!(threads[0].answers[0].factuality, Some(Factuality::Negative));

        let bad = r#"{"id":"A1","text":"t","goodness":"Good","fine_label":"Factual - Mostly True"}"#;
        let f = write(&[thread_json(bad, "\"Factual\"")]);
        assert!(matches!(load_cqa(f.path()), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn cqa_factuality_only_on_good_answers() {
        let bad = r#"{"id":"A1","text":"t","goodness":"Bad","factuality":"Positive"}"#;
        let f = write(&[thread_json(bad, "\"Factual\"")]);
        assert!(matches!(load_cqa(f.path()), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn cqa_zero_answers_accepted_and_round_trips() {
        let f = write(&[thread_json("", "\"Opinion\""), thread_json("", "null").replace("Q1", "Q2")]);
        let threads = load_cqa(f.path()).unwrap();
        assert!(threads[0].answers.is_empty());
        let st = cqa_stats(&threads);
        assert_eq!((st.factual, st.opinion, st.socializing), (0, 1, 0));
        let out = tempfile::NamedTempFile::new().unwrap();
        save_cqa(out.path(), &threads).unwrap();
        assert_eq!(load_cqa(out.path()).unwrap(), threads);
    }

    #[test]
    fn sidecar_tokens_replace_fallback() {
        let f = write(&[record("d", 1, "A", "He was impeached.", [0; 9])]);
        let mut debates = load_debates(f.path()).unwrap();
        let side = write(&[r#"{"key":"d/1","tokens":[{"surface":"He","pos":"PRP"},{"surface":"was","pos":"VBD"},{"surface":"impeached","pos":"VBN"},{"surface":".","pos":"."}]}"#.to_string()]);
        let sidecar = load_token_sidecar(side.path()).unwrap();
        assert_eq!(apply_token_sidecar(&mut debates, &sidecar), 1);
        assert_eq!(debates[0].sentences[0].pos_tags(), vec!["PRP", "VBD", "VBN", "."]);
    }
}

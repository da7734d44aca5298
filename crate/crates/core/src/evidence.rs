//! Search-based evidence: query generation, source classification, a
//! file cache in front of pluggable search clients, and similarity scoring
//! between Q/A text and the returned snippets and pages.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embeddings::{cos, VectorStore};
use crate::text;

pub const CACHE_FORMAT_VERSION: u32 = 1;
pub const MAX_QUERY_TERMS: usize = 10;
pub const MIN_QUERY_TERMS: usize = 5;

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("unqueryable: no content words")]
    Unqueryable,
    #[error("no cached evidence for query {0:?}")]
    NoCachedEvidence(String),
    #[error("search transport failure (retriable): {0}")]
    Transport(String),
    #[error("search client error: {0}")]
    Client(String),
    #[error("result for {0} has an empty snippet")]
    EmptySnippet(String),
    #[error("cache entry {path}: {msg}")]
    Cache { path: String, msg: String },
    #[error("evidence io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl EvidenceError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, EvidenceError::Transport(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvidenceError + '_ {
    move |source| EvidenceError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Document frequencies with smoothed IDF: `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub n_docs: u64,
    pub df: HashMap<String, u64>,
}

impl IdfTable {
    pub fn from_documents<I, D, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = IdfTable::default();
        for doc in docs {
            table.n_docs += 1;
            let seen: HashSet<String> = doc.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
            for w in seen {
                *table.df.entry(w).or_insert(0) += 1;
            }
        }
        table
    }

    pub fn idf(&self, word: &str) -> f64 {
        let df = self.df.get(&word.to_lowercase()).copied().unwrap_or(0);
        ((1.0 + self.n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    /// Sparse TF-IDF vector over lowercased tokens.
    pub fn tfidf<S: AsRef<str>>(&self, tokens: &[S]) -> HashMap<String, f64> {
        let mut tf: HashMap<String, f64> = HashMap::new();
        for t in tokens {
            *tf.entry(t.as_ref().to_lowercase()).or_insert(0.0) += 1.0;
        }
        tf.into_iter()
            .map(|(w, c)| {
                let v = c * self.idf(&w);
                (w, v)
            })
            .collect()
    }

    pub fn cosine<S: AsRef<str>, T: AsRef<str>>(&self, a: &[S], b: &[T]) -> f64 {
        sparse_cosine(&self.tfidf(a), &self.tfidf(b))
    }
}

pub fn sparse_cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(w, x)| large.get(w).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `|A ∩ B| / |A|` over lowercased word unigram sets.
pub fn containment<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> f64 {
    let sa: HashSet<String> = a.iter().map(|t| t.as_ref().to_lowercase()).collect();
    if sa.is_empty() {
        return 0.0;
    }
    let sb: HashSet<String> = b.iter().map(|t| t.as_ref().to_lowercase()).collect();
    sa.intersection(&sb).count() as f64 / sa.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTerm {
    pub text: String,
    pub entity: bool,
    /// TF-IDF weight; entities rank above every content word.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub terms: Vec<QueryTerm>,
    pub origin: (String, String),
}

impl Query {
    /// Fewer terms than the preferred minimum because the text ran out.
    pub fn is_short(&self) -> bool {
        self.terms.len() < MIN_QUERY_TERMS
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Entity terms quoted, words bare.
    pub fn render(&self) -> String {
        self.terms
            .iter()
            .map(|t| {
                if t.entity {
                    format!("\"{}\"", t.text)
                } else {
                    t.text.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn normalized_terms(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.text.trim().to_lowercase()).collect()
    }

    /// Removes the lowest-weighted term; false when nothing is left to drop.
    pub fn drop_lowest(&mut self) -> bool {
        if self.terms.len() <= 1 {
            return false;
        }
        let idx = self
            .terms
            .iter()
            .enumerate()
            .rev()
            .min_by(|a, b| a.1.score.total_cmp(&b.1.score))
            .map(|(i, _)| i)
            .unwrap();
        self.terms.remove(idx);
        true
    }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static STOP: OnceLock<HashSet<&'static str>> = OnceLock::new();
    STOP.get_or_init(crate::topics::stopwords)
}

fn strip_possessive(w: &str) -> &str {
    w.strip_suffix("'s").unwrap_or(w)
}

/// Named entities first (in order of appearance), then nouns, verbs and
/// adjectives of the question and answer by descending TF-IDF, capped at ten
/// terms. `entities` overrides the capitalization heuristic when given.
pub fn build_query(
    question_id: &str,
    question: &str,
    answer_id: &str,
    answer: &str,
    idf: &IdfTable,
    entities: Option<&[String]>,
) -> Result<Query, EvidenceError> {
    let joined = format!("{question}\n{answer}");
    let tokens = text::tokenize(&joined);
    let tags = text::fallback_pos_tags(&tokens);

    let stop = stopwords();
    let mut tf: HashMap<String, usize> = HashMap::new();
    let mut first: Vec<(String, String)> = Vec::new();
    for (tok, tag) in tokens.iter().zip(&tags) {
        if !text::is_content_tag(tag) {
            continue;
        }
        let surface = strip_possessive(tok);
        let key = surface.to_lowercase();
        if !surface.chars().any(char::is_alphabetic) || stop.contains(key.as_str()) {
            continue;
        }
        let count = tf.entry(key.clone()).or_insert(0);
        if *count == 0 {
            first.push((key, surface.to_string()));
        }
        *count += 1;
    }
    if first.is_empty() {
        return Err(EvidenceError::Unqueryable);
    }

    let ents: Vec<String> = match entities {
        Some(e) => e.to_vec(),
        None => text::fallback_entities(&joined),
    };
    let mut terms: Vec<QueryTerm> = Vec::new();
    let mut used: HashSet<String> = HashSet::new();
    for e in ents {
        if used.insert(e.to_lowercase()) {
            terms.push(QueryTerm {
                text: e,
                entity: true,
                score: f64::INFINITY,
            });
        }
    }
    let mut words: Vec<QueryTerm> = first
        .into_iter()
        .filter(|(key, _)| !used.contains(key))
        .map(|(key, surface)| QueryTerm {
            score: tf[&key] as f64 * idf.idf(&key),
            text: surface,
            entity: false,
        })
        .collect();
    // stable: equal weights keep text order
    words.sort_by(|a, b| b.score.total_cmp(&a.score));
    terms.extend(words);
    terms.truncate(MAX_QUERY_TERMS);
    Ok(Query {
        terms,
        origin: (question_id.to_string(), answer_id.to_string()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceType {
    Reputed,
    Forum,
    Other,
}

/// Domain lists deciding source type and whether a result is Qatar-related.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceClassifier {
    pub reputed: Vec<String>,
    /// Host suffixes that mark government or academic sites as reputed.
    pub reputed_suffixes: Vec<String>,
    pub forum: Vec<String>,
    /// Substrings of the host that make a result Qatar-related.
    pub related_domain_patterns: Vec<String>,
    pub related_tlds: Vec<String>,
    /// Lowercase substrings of page text that make a result Qatar-related.
    pub related_text_patterns: Vec<String>,
}

impl Default for SourceClassifier {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        SourceClassifier {
            reputed: s(&[
                "dohanews.co",
                "cnn.com",
                "bbc.com",
                "bbc.co.uk",
                "reuters.com",
                "aljazeera.com",
                "aljazeera.net",
                "gulf-times.com",
                "thepeninsulaqatar.com",
                "qatar-tribune.com",
                "arabnews.com",
                "gulfnews.com",
                "nytimes.com",
                "theguardian.com",
                "washingtonpost.com",
                "apnews.com",
                "wikipedia.org",
                "timeanddate.com",
                "hukoomi.qa",
                "gov.qa",
            ]),
            reputed_suffixes: s(&[".gov", ".gov.qa", ".edu", ".edu.qa", ".gov.uk"]),
            forum: s(&[
                "qatarliving.com",
                "iloveqatar.net",
                "expatwoman.com",
                "reddit.com",
                "quora.com",
                "tripadvisor.com",
                "answers.yahoo.com",
                "stackexchange.com",
                "internations.org",
            ]),
            related_domain_patterns: s(&["qatar", "doha"]),
            related_tlds: s(&[".qa"]),
            related_text_patterns: Vec::new(),
        }
    }
}

/// Lowercased host of a URL; bare domains are accepted.
pub fn host_of(url: &str) -> String {
    let candidate = if url.contains("://") {
        url.to_string()
    } else {
        format!("http://{url}")
    };
    match url::Url::parse(&candidate) {
        Ok(u) => u.host_str().unwrap_or("").trim_start_matches("www.").to_lowercase(),
        Err(_) => url.trim().to_lowercase(),
    }
}

fn domain_match(host: &str, domain: &str) -> bool {
    let d = domain.trim_start_matches("www.").to_lowercase();
    host == d || host.ends_with(&format!(".{d}"))
}

impl SourceClassifier {
    pub fn classify_source(&self, url: &str) -> SourceType {
        let host = host_of(url);
        if self.forum.iter().any(|d| domain_match(&host, d)) {
            SourceType::Forum
        } else if self.reputed.iter().any(|d| domain_match(&host, d))
            || self.reputed_suffixes.iter().any(|s| host.ends_with(&s.to_lowercase()))
        {
            SourceType::Reputed
        } else {
            SourceType::Other
        }
    }

    pub fn is_qatar_related(&self, url: &str, page_text: Option<&str>) -> bool {
        let host = host_of(url);
        if self.related_domain_patterns.iter().any(|p| host.contains(&p.to_lowercase())) {
            return true;
        }
        if self.related_tlds.iter().any(|t| host.ends_with(&t.to_lowercase())) {
            return true;
        }
        match page_text {
            Some(t) if !self.related_text_patterns.is_empty() => {
                let t = t.to_lowercase();
                self.related_text_patterns.iter().any(|p| t.contains(&p.to_lowercase()))
            }
            _ => false,
        }
    }
}

/// A hit as returned by a search client, before classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResult {
    pub url: String,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub url: String,
    pub source_type: SourceType,
    pub qatar_related: bool,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_text: Option<String>,
    pub engine: String,
}

impl EvidenceResult {
    pub fn classify(
        raw: RawResult,
        engine: &str,
        classifier: &SourceClassifier,
    ) -> Result<Self, EvidenceError> {
        if raw.snippet.trim().is_empty() {
            return Err(EvidenceError::EmptySnippet(raw.url));
        }
        Ok(EvidenceResult {
            source_type: classifier.classify_source(&raw.url),
            qatar_related: classifier.is_qatar_related(&raw.url, raw.page_text.as_deref()),
            url: raw.url,
            snippet: raw.snippet,
            page_text: raw.page_text,
            engine: engine.to_string(),
        })
    }
}

pub trait SearchClient {
    fn engine(&self) -> &str;
    fn search(&self, query: &Query) -> Result<Vec<RawResult>, EvidenceError>;
}

/// Canned responses keyed by rendered query; useful for tests and replay.
#[derive(Debug, Clone, Default)]
pub struct StaticClient {
    pub engine: String,
    pub responses: HashMap<String, Vec<RawResult>>,
}

impl SearchClient for StaticClient {
    fn engine(&self) -> &str {
        &self.engine
    }

    fn search(&self, query: &Query) -> Result<Vec<RawResult>, EvidenceError> {
        Ok(self
            .responses
            .get(&query.render())
            .cloned()
            .unwrap_or_default())
    }
}

/// Runs an external program with the rendered query as its last argument and
/// reads one JSON [`RawResult`] per stdout line. The API key is passed through
/// the environment variable named by `api_key_env`, if set.
#[derive(Debug, Clone)]
pub struct CommandClient {
    pub engine: String,
    pub program: String,
    pub args: Vec<String>,
    pub api_key_env: Option<String>,
}

impl SearchClient for CommandClient {
    fn engine(&self) -> &str {
        &self.engine
    }

    fn search(&self, query: &Query) -> Result<Vec<RawResult>, EvidenceError> {
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args).arg(query.render());
        if let Some(var) = &self.api_key_env {
            let key = std::env::var(var)
                .map_err(|_| EvidenceError::Client(format!("environment variable {var} not set")))?;
            cmd.env(var, key);
        }
        let out = cmd
            .output()
            .map_err(|e| EvidenceError::Transport(format!("{}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(EvidenceError::Transport(format!(
                "{} exited with {}",
                self.program, out.status
            )));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        stdout
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| EvidenceError::Client(e.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchMode {
    Offline,
    Live,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    format_version: u32,
    engine: String,
    terms: Vec<String>,
    results: Vec<EvidenceResult>,
}

/// One JSON file per (engine, normalized query terms).
#[derive(Debug, Clone)]
pub struct EvidenceCache {
    dir: PathBuf,
}

impl EvidenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EvidenceCache { dir: dir.into() }
    }

    pub fn key(engine: &str, terms: &[String]) -> String {
        let mut h = Sha256::new();
        h.update(engine.as_bytes());
        for t in terms {
            h.update([0x1f]);
            h.update(t.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn path_for(&self, engine: &str, query: &Query) -> PathBuf {
        self.dir
            .join(format!("{}.json", Self::key(engine, &query.normalized_terms())))
    }

    pub fn get(&self, engine: &str, query: &Query) -> Result<Option<Vec<EvidenceResult>>, EvidenceError> {
        let path = self.path_for(engine, query);
        let raw = match fs::read_to_string(&path) {
            Ok(r) => r,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let entry: CacheEntry = serde_json::from_str(&raw).map_err(|e| EvidenceError::Cache {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        if entry.format_version != CACHE_FORMAT_VERSION {
            return Err(EvidenceError::Cache {
                path: path.display().to_string(),
                msg: format!("unsupported format version {}", entry.format_version),
            });
        }
        Ok(Some(entry.results))
    }

    /// Writes to a temporary file in the cache directory, then renames.
    pub fn put(&self, engine: &str, query: &Query, results: &[EvidenceResult]) -> Result<(), EvidenceError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.path_for(engine, query);
        let entry = CacheEntry {
            format_version: CACHE_FORMAT_VERSION,
            engine: engine.to_string(),
            terms: query.normalized_terms(),
            results: results.to_vec(),
        };
        let json = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        let mut tmp = tempfile_in(&self.dir)?;
        tmp.1.write_all(json.as_bytes()).map_err(io_err(&tmp.0))?;
        tmp.1.sync_all().map_err(io_err(&tmp.0))?;
        drop(tmp.1);
        fs::rename(&tmp.0, &path).map_err(io_err(&path))
    }
}

fn tempfile_in(dir: &Path) -> Result<(PathBuf, fs::File), EvidenceError> {
    for attempt in 0u32..100 {
        let name = format!(".tmp-{}-{}-{attempt}", std::process::id(), unique());
        let path = dir.join(name);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => return Ok((path, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&path)(e)),
        }
    }
    Err(EvidenceError::Cache {
        path: dir.display().to_string(),
        msg: "could not create temporary file".into(),
    })
}

fn unique() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    COUNTER.fetch_add(1, Ordering::Relaxed)
}

/// Cached results when present; otherwise a live search (written back to the
/// cache) or, offline, an error.
pub fn fetch(
    query: &Query,
    client: &dyn SearchClient,
    cache: &EvidenceCache,
    mode: FetchMode,
    classifier: &SourceClassifier,
) -> Result<Vec<EvidenceResult>, EvidenceError> {
    let engine = client.engine();
    if let Some(hit) = cache.get(engine, query)? {
        return Ok(hit);
    }
    if mode == FetchMode::Offline {
        return Err(EvidenceError::NoCachedEvidence(query.render()));
    }
    let results = client
        .search(query)?
        .into_iter()
        .filter(|r| !r.snippet.trim().is_empty())
        .map(|r| EvidenceResult::classify(r, engine, classifier))
        .collect::<Result<Vec<_>, _>>()?;
    cache.put(engine, query, &results)?;
    Ok(results)
}

/// Re-issues the query with its lowest-weighted term dropped while fewer than
/// `wanted` results come back and more than the minimum term count remain.
/// Returns the query actually used together with its results.
pub fn fetch_with_retry(
    mut query: Query,
    client: &dyn SearchClient,
    cache: &EvidenceCache,
    mode: FetchMode,
    classifier: &SourceClassifier,
    wanted: usize,
) -> Result<(Query, Vec<EvidenceResult>), EvidenceError> {
    loop {
        let results = fetch(&query, client, cache, mode, classifier)?;
        if results.len() >= wanted || query.len() <= MIN_QUERY_TERMS {
            return Ok((query, results));
        }
        query.drop_lowest();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Question,
    Answer,
    QuestionAnswer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    Snippet,
    Page,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    TfidfCosine,
    EmbeddingCosine,
    Containment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Aggregate {
    Max,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFilter {
    All,
    Reputed,
    Forum,
    Other,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Question, Side::Answer, Side::QuestionAnswer];
    fn name(self) -> &'static str {
        match self {
            Side::Question => "q",
            Side::Answer => "a",
            Side::QuestionAnswer => "qa",
        }
    }
}

impl Granularity {
    pub const ALL: [Granularity; 2] = [Granularity::Snippet, Granularity::Page];
    fn name(self) -> &'static str {
        match self {
            Granularity::Snippet => "snippet",
            Granularity::Page => "page",
        }
    }
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::TfidfCosine, Measure::EmbeddingCosine, Measure::Containment];
    fn name(self) -> &'static str {
        match self {
            Measure::TfidfCosine => "tfidf",
            Measure::EmbeddingCosine => "emb",
            Measure::Containment => "contain",
        }
    }
}

impl Aggregate {
    pub const ALL: [Aggregate; 2] = [Aggregate::Max, Aggregate::Avg];
    fn name(self) -> &'static str {
        match self {
            Aggregate::Max => "max",
            Aggregate::Avg => "avg",
        }
    }

    fn apply(self, xs: &[f64]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        match self {
            Aggregate::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Avg => xs.iter().sum::<f64>() / xs.len() as f64,
        }
    }
}

impl SourceFilter {
    pub const ALL: [SourceFilter; 4] = [
        SourceFilter::All,
        SourceFilter::Reputed,
        SourceFilter::Forum,
        SourceFilter::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceFilter::All => "all",
            SourceFilter::Reputed => "reputed",
            SourceFilter::Forum => "forum",
            SourceFilter::Other => "other",
        }
    }

    pub fn admits(self, t: SourceType) -> bool {
        match self {
            SourceFilter::All => true,
            SourceFilter::Reputed => t == SourceType::Reputed,
            SourceFilter::Forum => t == SourceType::Forum,
            SourceFilter::Other => t == SourceType::Other,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        SourceFilter::ALL.into_iter().find(|f| f.name() == name)
    }
}

pub const CELLS_PER_FILTER: usize = 3 * 2 * 3 * 2;

/// Scores for every (filter, side, granularity, measure, aggregate) cell, in
/// that nesting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBundle {
    values: Vec<f64>,
}

fn cell_index(f: SourceFilter, s: Side, g: Granularity, m: Measure, a: Aggregate) -> usize {
    let fi = f as usize;
    let si = s as usize;
    let gi = g as usize;
    let mi = m as usize;
    let ai = a as usize;
    (((fi * 3 + si) * 2 + gi) * 3 + mi) * 2 + ai
}

impl SimilarityBundle {
    pub fn get(&self, f: SourceFilter, s: Side, g: Granularity, m: Measure, a: Aggregate) -> f64 {
        self.values[cell_index(f, s, g, m, a)]
    }

    /// Flattened cells for the chosen filters, filter-major.
    pub fn select(&self, filters: &[SourceFilter]) -> Vec<f64> {
        filters
            .iter()
            .flat_map(|&f| {
                let start = f as usize * CELLS_PER_FILTER;
                self.values[start..start + CELLS_PER_FILTER].iter().copied()
            })
            .collect()
    }

    pub fn names(prefix: &str, filters: &[SourceFilter]) -> Vec<String> {
        let mut out = Vec::new();
        for f in filters {
            for s in Side::ALL {
                for g in Granularity::ALL {
                    for m in Measure::ALL {
                        for a in Aggregate::ALL {
                            out.push(format!(
                                "{prefix}_{}_{}_{}_{}_{}",
                                f.name(),
                                s.name(),
                                g.name(),
                                m.name(),
                                a.name()
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn zeros() -> Self {
        SimilarityBundle {
            values: vec![0.0; 4 * CELLS_PER_FILTER],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Resources for similarity scoring.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityResources<'a> {
    pub idf: &'a IdfTable,
    pub vectors: Option<&'a VectorStore>,
}

struct Scored {
    tokens: Vec<String>,
    tfidf: HashMap<String, f64>,
    vector: Option<Vec<f64>>,
}

impl Scored {
    fn new(tokens: Vec<String>, res: &SimilarityResources) -> Self {
        Scored {
            tfidf: res.idf.tfidf(&tokens),
            vector: res.vectors.map(|v| v.sentence_vector(&tokens)),
            tokens,
        }
    }

    fn score(&self, other: &Scored, m: Measure) -> f64 {
        match m {
            Measure::TfidfCosine => sparse_cosine(&self.tfidf, &other.tfidf),
            Measure::EmbeddingCosine => match (&self.vector, &other.vector) {
                (Some(a), Some(b)) => cos(a, b),
                _ => 0.0,
            },
            Measure::Containment => containment(&self.tokens, &other.tokens),
        }
    }
}

/// Rolling windows of three consecutive sentences; shorter texts form a single
/// window.
pub fn sentence_triplets(page: &str) -> Vec<String> {
    let sents = text::split_sentences(page);
    if sents.len() <= 3 {
        return if sents.is_empty() { Vec::new() } else { vec![sents.join(" ")] };
    }
    sents.windows(3).map(|w| w.join(" ")).collect()
}

/// Similarities between the question, answer and their concatenation and the
/// Qatar-related results. Page scores aggregate over sentence triplets within a
/// page and then over pages with the same aggregate.
pub fn similarity_bundle(
    question: &str,
    answer: &str,
    results: &[EvidenceResult],
    res: &SimilarityResources,
) -> SimilarityBundle {
    let mut bundle = SimilarityBundle::zeros();
    let related: Vec<&EvidenceResult> = results.iter().filter(|r| r.qatar_related).collect();
    if related.is_empty() {
        return bundle;
    }
    let q = text::tokenize_lower(question);
    let a = text::tokenize_lower(answer);
    let qa: Vec<String> = q.iter().chain(&a).cloned().collect();
    let sides = [Scored::new(q, res), Scored::new(a, res), Scored::new(qa, res)];

    struct PerResult {
        source: SourceType,
        snippet: Scored,
        triplets: Option<Vec<Scored>>,
    }
    let per: Vec<PerResult> = related
        .iter()
        .map(|r| PerResult {
            source: r.source_type,
            snippet: Scored::new(text::tokenize_lower(&r.snippet), res),
            triplets: r.page_text.as_deref().map(|p| {
                sentence_triplets(p)
                    .iter()
                    .map(|t| Scored::new(text::tokenize_lower(t), res))
                    .collect()
            }),
        })
        .collect();

    for f in SourceFilter::ALL {
        let chosen: Vec<&PerResult> = per.iter().filter(|p| f.admits(p.source)).collect();
        for (si, side) in Side::ALL.iter().enumerate() {
            for m in Measure::ALL {
                for agg in Aggregate::ALL {
                    let snippet_scores: Vec<f64> = chosen
                        .iter()
                        .map(|p| sides[si].score(&p.snippet, m))
                        .collect();
                    let page_scores: Vec<f64> = chosen
                        .iter()
                        .filter_map(|p| p.triplets.as_ref())
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            let xs: Vec<f64> = t.iter().map(|x| sides[si].score(x, m)).collect();
                            agg.apply(&xs)
                        })
                        .collect();
                    bundle.values[cell_index(f, *side, Granularity::Snippet, m, agg)] =
                        agg.apply(&snippet_scores);
                    bundle.values[cell_index(f, *side, Granularity::Page, m, agg)] =
                        agg.apply(&page_scores);
                }
            }
        }
    }
    bundle
}

/// Support from trusted posts: the `k` post sentences closest to the query by
/// TF-IDF cosine, each scored against the answer with the entailment proxy
/// `0.5 * containment + 0.5 * embedding cosine`. Missing slots are 0.
pub fn hq_support(
    query: &Query,
    answer: &str,
    post_sentences: &[String],
    k: usize,
    res: &SimilarityResources,
) -> Vec<f64> {
    let qtoks: Vec<String> = query
        .terms
        .iter()
        .flat_map(|t| text::tokenize_lower(&t.text))
        .collect();
    let qvec = res.idf.tfidf(&qtoks);
    let mut ranked: Vec<(usize, f64)> = post_sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (i, sparse_cosine(&qvec, &res.idf.tfidf(&text::tokenize_lower(s)))))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let answer = Scored::new(text::tokenize_lower(answer), res);
    let mut out: Vec<f64> = ranked
        .iter()
        .take(k)
        .map(|&(i, _)| {
            let s = Scored::new(text::tokenize_lower(&post_sentences[i]), res);
            0.5 * answer.score(&s, Measure::Containment) + 0.5 * answer.score(&s, Measure::EmbeddingCosine)
        })
        .collect();
    out.resize(k, 0.0);
    out
}

//! Resource file locations and loading.
//!
//! A data directory may hold any of these files; absent optional resources
//! zero their feature groups.
//!
//! | file | contents |
//! |---|---|
//! | `debates.jsonl` | debate transcripts |
//! | `cqa.jsonl` | forum threads |
//! | `lexicons/` | `<bias_type>.txt` cue lists |
//! | `vectors.txt` | word vectors for the debate features |
//! | `topics.json` | trained topic model |
//! | `rst_debates.jsonl`, `rst_cqa.jsonl` | discourse trees |
//! | `relation_map.txt` | parser label to relation class mapping |
//! | `external_claims.jsonl` | previously fact-checked claims |
//! | `cqa_vectors.txt`, `general_vectors.txt` | in-domain and general vectors |
//! | `hq_sentences.txt` | sentences of trusted forum posts, one per line |
//! | `idf.json` | document frequencies |
//! | `evidence.json` | search evidence keyed by answer id |

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{load_cqa, load_debates, CorpusError, CqaThread, Debate};
use crate::discourse::{load_rst, DiscourseError, RelationMap, RstNode};
use crate::embeddings::{load_vectors, EmbeddingError, VectorStore};
use crate::evidence::IdfTable;
use crate::features::cqa::AnswerEvidence;
use crate::lexicons::{LexiconError, LexiconSet};
use crate::pipeline::{ClaimText, CqaInputs, DebateInputs};
use crate::text;
use crate::topics::{TopicError, TopicModel};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("missing resource files: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{name} is required for this task but not configured")]
    Required { name: &'static str },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Discourse(#[from] DiscourseError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub debates: Option<PathBuf>,
    pub cqa: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub rst_debates: Option<PathBuf>,
    pub rst_cqa: Option<PathBuf>,
    pub relation_map: Option<PathBuf>,
    pub external_claims: Option<PathBuf>,
    pub cqa_vectors: Option<PathBuf>,
    pub general_vectors: Option<PathBuf>,
    pub hq_sentences: Option<PathBuf>,
    pub idf: Option<PathBuf>,
    pub evidence: Option<PathBuf>,
}

impl ResourcePaths {
    /// Picks up every known file that exists under `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        let pick = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        ResourcePaths {
            debates: pick("debates.jsonl"),
            cqa: pick("cqa.jsonl"),
            lexicons: pick("lexicons"),
            vectors: pick("vectors.txt"),
            topics: pick("topics.json"),
            rst_debates: pick("rst_debates.jsonl"),
            rst_cqa: pick("rst_cqa.jsonl"),
            relation_map: pick("relation_map.txt"),
            external_claims: pick("external_claims.jsonl"),
            cqa_vectors: pick("cqa_vectors.txt"),
            general_vectors: pick("general_vectors.txt"),
            hq_sentences: pick("hq_sentences.txt"),
            idf: pick("idf.json"),
            evidence: pick("evidence.json"),
        }
    }

    /// Relative paths are taken relative to `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let r = |p: &Option<PathBuf>| p.as_ref().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) });
        ResourcePaths {
            debates: r(&self.debates),
            cqa: r(&self.cqa),
            lexicons: r(&self.lexicons),
            vectors: r(&self.vectors),
            topics: r(&self.topics),
            rst_debates: r(&self.rst_debates),
            rst_cqa: r(&self.rst_cqa),
            relation_map: r(&self.relation_map),
            external_claims: r(&self.external_claims),
            cqa_vectors: r(&self.cqa_vectors),
            general_vectors: r(&self.general_vectors),
            hq_sentences: r(&self.hq_sentences),
            idf: r(&self.idf),
            evidence: r(&self.evidence),
        }
    }

    /// Configured entries as `(name, path)`, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, &Path)> {
        [
            ("debates", &self.debates),
            ("cqa", &self.cqa),
            ("lexicons", &self.lexicons),
            ("vectors", &self.vectors),
            ("topics", &self.topics),
            ("rst_debates", &self.rst_debates),
            ("rst_cqa", &self.rst_cqa),
            ("relation_map", &self.relation_map),
            ("external_claims", &self.external_claims),
            ("cqa_vectors", &self.cqa_vectors),
            ("general_vectors", &self.general_vectors),
            ("hq_sentences", &self.hq_sentences),
            ("idf", &self.idf),
            ("evidence", &self.evidence),
        ]
        .into_iter()
        .filter_map(|(n, p)| p.as_deref().map(|p| (n, p)))
        .collect()
    }

    /// Fails listing every configured path that does not exist.
    pub fn check_exist(&self) -> Result<(), ResourceError> {
        let missing: Vec<String> = self
            .entries()
            .into_iter()
            .filter(|(_, p)| !p.exists())
            .map(|(n, p)| format!("{n}={}", p.display()))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ResourceError::Missing(missing))
        }
    }

    /// SHA-256 of every configured resource; directories hash their files in
    /// name order.
    pub fn hashes(&self) -> Result<BTreeMap<String, String>, ResourceError> {
        self.entries()
            .into_iter()
            .map(|(n, p)| Ok((n.to_string(), path_sha256(p)?)))
            .collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ResourceError + '_ {
    move |source| ResourceError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn path_sha256(path: &Path) -> Result<String, ResourceError> {
    let mut h = Sha256::new();
    let mut files = Vec::new();
    if path.is_dir() {
        for e in fs::read_dir(path).map_err(io_err(path))? {
            let p = e.map_err(io_err(path))?.path();
            if p.is_file() {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut buf = vec![0u8; 1 << 16];
    for f in files {
        if path.is_dir() {
            h.update(f.file_name().unwrap_or_default().as_encoded_bytes());
        }
        let mut r = fs::File::open(&f).map_err(io_err(&f))?;
        loop {
            let n = r.read(&mut buf).map_err(io_err(&f))?;
            if n == 0 {
                break;
            }
            h.update(&buf[..n]);
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ResourceError> {
    let raw = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&raw).map_err(|source| ResourceError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ResourceError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ResourceError::Json {
            path: path.display().to_string(),
            source,
        })?);
    }
    Ok(out)
}

/// Everything loaded from a [`ResourcePaths`].
#[derive(Debug)]
pub struct Resources {
    pub debates: Vec<Debate>,
    pub threads: Vec<CqaThread>,
    pub lexicons: LexiconSet,
    pub vectors: Option<VectorStore>,
    pub topics: Option<TopicModel>,
    pub rst_debates: Option<BTreeMap<String, RstNode>>,
    pub rst_cqa: Option<BTreeMap<String, RstNode>>,
    pub external_claims: Vec<ClaimText>,
    pub cqa_vectors: Option<VectorStore>,
    pub general_vectors: Option<VectorStore>,
    pub hq_sentences: Option<Vec<String>>,
    pub idf: IdfTable,
    pub evidence: Option<BTreeMap<String, AnswerEvidence>>,
}

impl Resources {
    pub fn load(paths: &ResourcePaths) -> Result<Self, ResourceError> {
        paths.check_exist()?;
        let map = match &paths.relation_map {
            Some(p) => RelationMap::from_file(p)?,
            None => RelationMap::default(),
        };
        let threads = paths.cqa.as_ref().map(load_cqa).transpose()?.unwrap_or_default();
        let idf = match &paths.idf {
            Some(p) => read_json(p)?,
            None => IdfTable::from_documents(threads.iter().flat_map(|t| {
                std::iter::once(text::tokenize_lower(&t.question.text()))
                    .chain(t.answers.iter().map(|a| text::tokenize_lower(&a.text)))
            })),
        };
        let hq_sentences = match &paths.hq_sentences {
            Some(p) => Some(
                fs::read_to_string(p)
                    .map_err(io_err(p))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
            ),
            None => None,
        };
        Ok(Resources {
            debates: paths.debates.as_ref().map(load_debates).transpose()?.unwrap_or_default(),
            threads,
            lexicons: match &paths.lexicons {
                Some(d) => LexiconSet::load_dir(d)?,
                None => LexiconSet::builtin(),
            },
            vectors: paths.vectors.as_ref().map(|p| load_vectors(p, None)).transpose()?,
            topics: paths.topics.as_ref().map(TopicModel::load).transpose()?,
            rst_debates: paths.rst_debates.as_ref().map(|p| load_rst(p, &map)).transpose()?,
            rst_cqa: paths.rst_cqa.as_ref().map(|p| load_rst(p, &map)).transpose()?,
            external_claims: paths
                .external_claims
                .as_ref()
                .map(|p| read_jsonl(p))
                .transpose()?
                .unwrap_or_default(),
            cqa_vectors: paths.cqa_vectors.as_ref().map(|p| load_vectors(p, None)).transpose()?,
            general_vectors: paths.general_vectors.as_ref().map(|p| load_vectors(p, None)).transpose()?,
            hq_sentences,
            idf,
            evidence: paths.evidence.as_ref().map(|p| read_json(p)).transpose()?,
        })
    }

    pub fn debate_inputs(&self) -> Result<DebateInputs<'_>, ResourceError> {
        if self.debates.is_empty() {
            return Err(ResourceError::Required { name: "debates" });
        }
        Ok(DebateInputs {
            debates: &self.debates,
            lexicons: &self.lexicons,
            vectors: self.vectors.as_ref(),
            topics: self.topics.as_ref(),
            discourse: self.rst_debates.as_ref(),
            external_claims: &self.external_claims,
        })
    }

    pub fn cqa_inputs(&self) -> Result<CqaInputs<'_>, ResourceError> {
        if self.threads.is_empty() {
            return Err(ResourceError::Required { name: "cqa" });
        }
        Ok(CqaInputs {
            threads: &self.threads,
            lexicons: &self.lexicons,
            idf: &self.idf,
            in_domain: self.cqa_vectors.as_ref(),
            general: self.general_vectors.as_ref(),
            hq_sentences: self.hq_sentences.as_deref(),
            discourse: self.rst_cqa.as_ref(),
            evidence: self.evidence.as_ref(),
        })
    }
}

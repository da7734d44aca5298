//! Pre-trained word vectors, averaged sentence vectors and cosine similarity.
//!
//! Text format: an optional `<count> <dim>` header line, then one
//! `word v1 ... vd` row per line.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: bad number {token:?}")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("dimension {found} does not match expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("vector store is empty")]
    Empty,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot read vectors from {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            table: HashMap::new(),
        }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut store: Option<VectorStore> = None;
        for (i, (w, v)) in pairs.into_iter().enumerate() {
            let s = store.get_or_insert_with(|| VectorStore::new(v.len()));
            s.insert(i + 1, w.into(), v)?;
        }
        store.ok_or(EmbeddingError::Empty)
    }

    fn insert(&mut self, line: usize, word: String, v: Vec<f64>) -> Result<(), EmbeddingError> {
        if v.len() != self.dim {
            return Err(EmbeddingError::Arity {
                line,
                expected: self.dim,
                found: v.len(),
            });
        }
        if self.table.contains_key(&word) {
            return Err(EmbeddingError::DuplicateWord { line, word });
        }
        self.table.insert(word, v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Exact lookup first, then the lowercased form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.table
            .get(word)
            .or_else(|| self.table.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Mean of the in-vocabulary token vectors; zero vector when none are known.
    pub fn sentence_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for t in tokens {
            if let Some(v) = self.get(t.as_ref()) {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
                n += 1;
            }
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            acc.iter_mut().for_each(|a| *a *= inv);
        }
        acc
    }
}

pub fn load_vectors(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<VectorStore, EmbeddingError> {
    let path = path.as_ref();
    let io = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut store: Option<VectorStore> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if line_no == 1 && rest.len() == 1 {
            if let (Ok(_count), Ok(dim)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                store = Some(VectorStore::new(dim));
                continue;
            }
        }
        let mut values = Vec::with_capacity(rest.len());
        for tok in rest {
            values.push(tok.parse::<f64>().map_err(|_| EmbeddingError::BadNumber {
                line: line_no,
                token: tok.to_string(),
            })?);
        }
        let s = store.get_or_insert_with(|| VectorStore::new(values.len()));
        s.insert(line_no, word.to_string(), values)?;
    }
    let store = store.ok_or(EmbeddingError::Empty)?;
    if let Some(expected) = expected_dim {
        if store.dim != expected {
            return Err(EmbeddingError::Dimension {
                expected,
                found: store.dim,
            });
        }
    }
    Ok(store)
}

/// Cosine similarity; 0.0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

/// [`cosine`] for vectors known to have equal length.
pub(crate) fn cos(u: &[f64], v: &[f64]) -> f64 {
    cosine(u, v).expect("equal-length vectors")
}

//! Shared feature-vector layout, masking and the tab-separated dump format.

pub mod cqa;
pub mod debate;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown feature group {0:?}")]
    UnknownGroup(String),
    #[error("dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
    #[error("feature io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub size: usize,
}

/// Ordered named groups with fixed sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub groups: Vec<GroupSpec>,
}

impl Layout {
    pub fn new<S: Into<String>>(groups: impl IntoIterator<Item = (S, usize)>) -> Self {
        Layout {
            groups: groups
                .into_iter()
                .map(|(name, size)| GroupSpec {
                    name: name.into(),
                    size,
                })
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }

    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        let mut start = 0;
        for g in &self.groups {
            if g.name == name {
                return Some(start..start + g.size);
            }
            start += g.size;
        }
        None
    }

    pub fn size(&self, name: &str) -> Option<usize> {
        self.range(name).map(|r| r.len())
    }

    /// Column names `group:index`.
    pub fn column_names(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| (0..g.size).map(move |i| format!("{}:{i}", g.name)))
            .collect()
    }
}

/// Document-frequency ranked vocabulary with smoothed IDF
/// `ln((1 + N) / (1 + df)) + 1`. Ties in frequency break alphabetically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocab {
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfidfVocab {
    pub fn fit<D, S>(documents: &[D], cap: Option<usize>) -> Self
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            let seen: HashSet<String> = doc.as_ref().iter().map(|w| w.as_ref().to_lowercase()).collect();
            for w in seen {
                *df.entry(w).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(cap) = cap {
            ranked.truncate(cap);
        }
        let n = documents.len() as f64;
        let idf = ranked
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        Self::from_parts(ranked.into_iter().map(|(w, _)| w).collect(), idf)
    }

    pub fn from_parts(terms: Vec<String>, idf: Vec<f64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        TfidfVocab { terms, idf, index }
    }

    /// Restores the lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Raw term count times IDF, one slot per vocabulary term.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        self.transform_padded(tokens, self.terms.len())
    }

    /// [`transform`](Self::transform) zero-padded to `width` slots.
    pub fn transform_padded<S: AsRef<str>>(&self, tokens: &[S], width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width.max(self.terms.len())];
        for t in tokens {
            if let Some(&i) = self.index.get(&t.as_ref().to_lowercase()) {
                out[i] += self.idf[i];
            }
        }
        out
    }
}

/// Zeroes every index in `ranges`.
pub fn zero_ranges(values: &mut [f64], ranges: &[Range<usize>]) {
    for r in ranges {
        values[r.clone()].iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Complement of `keep` within `0..total`.
pub fn complement(total: usize, keep: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut mark = vec![false; total];
    for r in keep {
        mark[r.clone()].iter_mut().for_each(|m| *m = true);
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < total {
        if mark[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < total && !mark[i] {
            i += 1;
        }
        out.push(start..i);
    }
    out
}

/// A feature dump: one row per item, `id` then one column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDump {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl FeatureDump {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        let path = path.as_ref();
        let io = |source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
        self.write_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "id")?;
        for c in &self.columns {
            write!(w, "\t{c}")?;
        }
        writeln!(w)?;
        for (id, values) in &self.rows {
            write!(w, "{id}")?;
            for v in values {
                // shortest representation that parses back to the same bits
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let io = |source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        };
        let reader = BufReader::new(fs::File::open(path).map_err(io)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or(FeatureError::Dump {
                line: 1,
                msg: "missing header".into(),
            })?
            .map_err(io)?;
        let mut cols = header.split('\t');
        if cols.next() != Some("id") {
            return Err(FeatureError::Dump {
                line: 1,
                msg: "first column must be id".into(),
            });
        }
        let columns: Vec<String> = cols.map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(io)?;
            if line.is_empty() {
                continue;
            }
            let line_no = i + 2;
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| FeatureError::Dump {
                        line: line_no,
                        msg: format!("bad value {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != columns.len() {
                return Err(FeatureError::Dump {
                    line: line_no,
                    msg: format!("{} values for {} columns", values.len(), columns.len()),
                });
            }
            rows.push((id, values));
        }
        Ok(FeatureDump { columns, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_ranges_and_complement() {
        let l = Layout::new([("a", 2), ("b", 3), ("c", 1)]);
        assert_eq!(l.total(), 6);
        assert_eq!(l.range("b"), Some(2..5));
        assert_eq!(l.range("z"), None);
        assert_eq!(l.column_names()[2], "b:0");
        assert_eq!(complement(6, &[2..5]), vec![0..2, 5..6]);
        let mut v = vec![1.0; 6];
        zero_ranges(&mut v, &[0..1, 4..6]);
        assert_eq!(v, vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn dump_round_trips_bit_exact() {
        let dump = FeatureDump {
            columns: vec!["g:0".into(), "g:1".into()],
            rows: vec![
                ("d/1".into(), vec![0.1 + 0.2, -1e-300]),
                ("d/2".into(), vec![f64::MAX, 1.0 / 3.0]),
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.tsv");
        dump.write(&p).unwrap();
        let back = FeatureDump::read(&p).unwrap();
        assert_eq!(back, dump);
        for ((_, a), (_, b)) in back.rows.iter().zip(&dump.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

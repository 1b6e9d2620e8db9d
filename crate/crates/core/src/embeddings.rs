//! Word-embedding and image-vector stores plus the similarity primitives used
//! by every downstream subsystem.
//!
//! Lookup is exact-match and case-sensitive; multiword labels keep their
//! underscore form and are treated as single tokens. Labels missing from the
//! vocabulary are skipped by [`EmbeddingSpace::mean_label_similarity`], never
//! imputed. Vectors are stored un-normalized; normalization happens inside
//! [`cosine`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: non-numeric component {value:?}")]
    NonNumeric {
        path: String,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: non-finite component {value}")]
    NonFinite {
        path: String,
        line: usize,
        value: f64,
    },
    #[error("{path}:{line}: duplicate entry {word:?}")]
    Duplicate {
        path: String,
        line: usize,
        word: String,
    },
    #[error("{path}:{line}: empty token")]
    EmptyToken { path: String, line: usize },
    #[error("{path}: no entries")]
    Empty { path: String },
    #[error("{path}: malformed header {header:?}")]
    BadHeader { path: String, header: String },
    #[error("zero-norm vector passed to cosine")]
    ZeroNorm,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("word {word:?} not in vocabulary")]
    OutOfVocabulary { word: String },
    #[error("no in-vocabulary label for target {target:?}")]
    NoUsableLabel { target: String },
    #[error("query dimension {query} does not match store dimension {store}")]
    QueryDimension { query: usize, store: usize },
    #[error("nearest-neighbor query against an empty store")]
    EmptyStore,
    #[error("k must be at least 1")]
    ZeroK,
}

/// Immutable vocabulary → dense-vector store.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
    name: String,
}

impl EmbeddingSpace {
    /// Build a space from (word, vector) pairs, enforcing the store invariants.
    pub fn new<I>(name: &str, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for (line, (word, vector)) in entries.into_iter().enumerate() {
            let line = line + 1;
            validate_entry(&word, &vector, &mut dim, name, line)?;
            if map.insert(word.clone(), vector).is_some() {
                return Err(EmbeddingError::Duplicate {
                    path: name.to_string(),
                    line,
                    word,
                });
            }
        }
        match dim {
            Some(dim) => Ok(Self {
                dim,
                entries: map,
                name: name.to_string(),
            }),
            None => Err(EmbeddingError::Empty {
                path: name.to_string(),
            }),
        }
    }

    /// Load a whitespace-separated `word v1 ... vd` text file. The dimension is
    /// inferred from the first entry unless `expected_dim` pins it.
    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let path_str = path.display().to_string();
        let mut entries = BTreeMap::new();
        let mut dim = expected_dim;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut parts = raw.split_whitespace();
            let word = parts.next().expect("non-empty line has a first token");
            let vector = parse_components(parts, &path_str, line)?;
            validate_entry(word, &vector, &mut dim, &path_str, line)?;
            if entries.insert(word.to_string(), vector).is_some() {
                return Err(EmbeddingError::Duplicate {
                    path: path_str,
                    line,
                    word: word.to_string(),
                });
            }
        }
        match dim {
            Some(dim) if !entries.is_empty() => Ok(Self {
                dim,
                entries,
                name: default_name(path),
            }),
            _ => Err(EmbeddingError::Empty { path: path_str }),
        }
    }

    /// Serialize in the same `word v1 ... vd` format, vocabulary sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, vector) in &self.entries {
            out.push_str(word);
            for v in vector {
                // Shortest round-trippable float formatting keeps reloads exact.
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact-match lookup; absence is a value, not a fault.
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Vocabulary in sorted order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Mean cosine similarity between `target` and every in-vocabulary label.
    ///
    /// Labels absent from the vocabulary are skipped; the returned count says
    /// how many survived. An out-of-vocabulary target and an all-skipped label
    /// list are distinct errors.
    pub fn mean_label_similarity(
        &self,
        target: &str,
        labels: &[String],
    ) -> Result<LabelSimilarity, EmbeddingError> {
        let target_vec = self
            .vector(target)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary {
                word: target.to_string(),
            })?;
        let mut sum = 0.0;
        let mut used = 0usize;
        for label in labels {
            if let Some(vec) = self.vector(label) {
                sum += cosine(target_vec, vec)?;
                used += 1;
            }
        }
        if used == 0 {
            return Err(EmbeddingError::NoUsableLabel {
                target: target.to_string(),
            });
        }
        Ok(LabelSimilarity {
            mean: sum / used as f64,
            used,
        })
    }
}

/// Result of a label-set similarity query: the mean cosine and how many labels
/// were actually in vocabulary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelSimilarity {
    pub mean: f64,
    pub used: usize,
}

/// Immutable image-id → dense-vector store.
#[derive(Debug, Clone)]
pub struct ImageVectorStore {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl ImageVectorStore {
    pub fn new<I>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for (line, (id, vector)) in entries.into_iter().enumerate() {
            let line = line + 1;
            validate_entry(&id, &vector, &mut dim, "image vectors", line)?;
            if map.insert(id.clone(), vector).is_some() {
                return Err(EmbeddingError::Duplicate {
                    path: "image vectors".to_string(),
                    line,
                    word: id,
                });
            }
        }
        match dim {
            Some(dim) => Ok(Self { dim, entries: map }),
            None => Err(EmbeddingError::Empty {
                path: "image vectors".to_string(),
            }),
        }
    }

    /// Load a CSV file with header `image_id,v1,...,vd`.
    pub fn load_csv(path: &Path) -> Result<Self, EmbeddingError> {
        let path_str = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| csv_io_error(&path_str, e))?;
        {
            let header = reader.headers().map_err(|e| csv_io_error(&path_str, e))?;
            let first = header.get(0).unwrap_or("");
            if first != "image_id" {
                return Err(EmbeddingError::BadHeader {
                    path: path_str,
                    header: first.to_string(),
                });
            }
        }
        let mut entries = BTreeMap::new();
        let mut dim = None;
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| csv_io_error(&path_str, e))?;
            let mut fields = record.iter();
            let id = fields.next().unwrap_or("").to_string();
            let vector = parse_components(fields, &path_str, line)?;
            validate_entry(&id, &vector, &mut dim, &path_str, line)?;
            if entries.insert(id.clone(), vector).is_some() {
                return Err(EmbeddingError::Duplicate {
                    path: path_str,
                    line,
                    word: id,
                });
            }
        }
        match dim {
            Some(dim) => Ok(Self { dim, entries }),
            None => Err(EmbeddingError::Empty { path: path_str }),
        }
    }

    /// Serialize as CSV with header `image_id,v1,...,vd`, ids sorted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id");
        for i in 1..=self.dim {
            let _ = write!(out, ",v{i}");
        }
        out.push('\n');
        for (id, vector) in &self.entries {
            out.push_str(id);
            for v in vector {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }
}

/// Anything nearest-neighbor retrieval can run over.
pub trait VectorStore {
    fn store_dim(&self) -> usize;
    fn store_len(&self) -> usize;
    fn entries(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_>;
}

impl VectorStore for EmbeddingSpace {
    fn store_dim(&self) -> usize {
        self.dim
    }
    fn store_len(&self) -> usize {
        self.len()
    }
    fn entries(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_> {
        Box::new(self.iter())
    }
}

impl VectorStore for ImageVectorStore {
    fn store_dim(&self) -> usize {
        self.dim
    }
    fn store_len(&self) -> usize {
        self.len()
    }
    fn entries(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_> {
        Box::new(self.iter())
    }
}

/// Cosine similarity, clamped into [-1, 1] against rounding overshoot.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Top-k entries by descending cosine to `query`; ties broken by ascending id.
pub fn nearest_neighbors<S: VectorStore + ?Sized>(
    store: &S,
    query: &[f64],
    k: usize,
) -> Result<Vec<(String, f64)>, EmbeddingError> {
    if k == 0 {
        return Err(EmbeddingError::ZeroK);
    }
    if store.store_len() == 0 {
        return Err(EmbeddingError::EmptyStore);
    }
    if query.len() != store.store_dim() {
        return Err(EmbeddingError::QueryDimension {
            query: query.len(),
            store: store.store_dim(),
        });
    }
    let mut scored = Vec::with_capacity(store.store_len());
    for (id, vector) in store.entries() {
        scored.push((id.to_string(), cosine(query, vector)?));
    }
    scored.sort_by(|(id_a, sim_a), (id_b, sim_b)| {
        sim_b
            .partial_cmp(sim_a)
            .expect("cosine values are finite")
            .then_with(|| id_a.cmp(id_b))
    });
    scored.truncate(k);
    Ok(scored)
}

fn validate_entry(
    key: &str,
    vector: &[f64],
    dim: &mut Option<usize>,
    path: &str,
    line: usize,
) -> Result<(), EmbeddingError> {
    if key.is_empty() {
        return Err(EmbeddingError::EmptyToken {
            path: path.to_string(),
            line,
        });
    }
    match *dim {
        Some(expected) if expected != vector.len() => {
            return Err(EmbeddingError::DimensionMismatch {
                path: path.to_string(),
                line,
                expected,
                found: vector.len(),
            });
        }
        None => {
            if vector.is_empty() {
                return Err(EmbeddingError::DimensionMismatch {
                    path: path.to_string(),
                    line,
                    expected: 1,
                    found: 0,
                });
            }
            *dim = Some(vector.len());
        }
        _ => {}
    }
    for &v in vector {
        if !v.is_finite() {
            return Err(EmbeddingError::NonFinite {
                path: path.to_string(),
                line,
                value: v,
            });
        }
    }
    Ok(())
}

fn parse_components<'a, I>(parts: I, path: &str, line: usize) -> Result<Vec<f64>, EmbeddingError>
where
    I: Iterator<Item = &'a str>,
{
    parts
        .map(|p| {
            p.parse::<f64>().map_err(|_| EmbeddingError::NonNumeric {
                path: path.to_string(),
                line,
                value: p.to_string(),
            })
        })
        .collect()
}

fn csv_io_error(path: &str, err: csv::Error) -> EmbeddingError {
    EmbeddingError::Io {
        path: path.to_string(),
        source: std::io::Error::other(err.to_string()),
    }
}

fn default_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".to_string())
}

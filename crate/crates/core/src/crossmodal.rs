//! Cross-modal prototype/exemplar mapping: average image vectors into class
//! prototypes, fit a linear text→vision map by ridge regression, and retrieve
//! images for unseen words.
//!
//! The map is the closed-form multivariate ridge minimizer
//! `M = (TᵀT + λI)⁻¹TᵀV`. Exemplar training feeds one row per (word, image)
//! pair with the word vector repeated; prototype training feeds one row per
//! (word, prototype). Retrieval is either one-step (nearest training image to
//! the predicted vector) or two-step (nearest prototype, then the nearest
//! image to that prototype — within its class by default, globally behind
//! [`RetrievalScope::Global`]).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::embeddings::{
    cosine, nearest_neighbors, EmbeddingError, EmbeddingSpace, ImageVectorStore,
};

/// Condition-number ceiling for the text Gram matrix when fitting at λ = 0.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum CrossModalError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("training matrices are empty")]
    EmptyTraining,
    #[error(
        "text Gram matrix is numerically singular (condition number {cond:.3e} exceeds \
         {MAX_CONDITION:.0e}); supply a positive ridge lambda"
    )]
    SingularSystem { cond: f64 },
    #[error("ridge lambda must be non-negative, got {lambda}")]
    NegativeLambda { lambda: f64 },
    #[error("class {class:?} references unknown image id {image_id:?}")]
    UnknownImage { class: String, image_id: String },
    #[error("class {class:?} has no member images")]
    EmptyClass { class: String },
    #[error("no class membership entries")]
    EmptyMembership,
    #[error("prototype table is empty")]
    EmptyPrototypes,
    #[error(
        "no training rows: no class word is in the embedding vocabulary (skipped: {skipped:?})"
    )]
    NoTrainingRows { skipped: Vec<String> },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    BadMapFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: {reason}")]
    BadMembershipLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// How a linear map was trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    Prototype,
    Exemplar,
    ZsgAlignment,
}

impl fmt::Display for MapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapMode::Prototype => "prototype",
            MapMode::Exemplar => "exemplar",
            MapMode::ZsgAlignment => "zsg-alignment",
        })
    }
}

impl FromStr for MapMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prototype" => Ok(MapMode::Prototype),
            "exemplar" => Ok(MapMode::Exemplar),
            "zsg-alignment" => Ok(MapMode::ZsgAlignment),
            other => Err(format!("unknown map mode {other:?}")),
        }
    }
}

/// Training descriptor carried alongside a fitted map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMeta {
    pub mode: MapMode,
    pub lambda: f64,
}

/// Dense d_in × d_out linear map between vector spaces, applied on the right:
/// `prediction = t · M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    meta: MapMeta,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, meta: MapMeta) -> Result<Self, CrossModalError> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(CrossModalError::EmptyTraining);
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(CrossModalError::NonFinite { what: "map matrix" });
        }
        Ok(Self { matrix, meta })
    }

    pub fn identity(dim: usize, meta: MapMeta) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            meta,
        }
    }

    pub fn d_in(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn meta(&self) -> MapMeta {
        self.meta
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Row-vector product `t · M`.
    pub fn apply(&self, t: &[f64]) -> Result<Vec<f64>, CrossModalError> {
        if t.len() != self.d_in() {
            return Err(CrossModalError::DimensionMismatch {
                what: "input vector length",
                expected: self.d_in(),
                found: t.len(),
            });
        }
        let mut out = vec![0.0; self.d_out()];
        for (i, &ti) in t.iter().enumerate() {
            if ti == 0.0 {
                continue;
            }
            for (j, slot) in out.iter_mut().enumerate() {
                *slot += ti * self.matrix[(i, j)];
            }
        }
        Ok(out)
    }

    /// Serialize as text: header `d_in d_out mode lambda`, then d_in rows of
    /// d_out reals. Floats use shortest round-trippable formatting, so a
    /// reload reproduces the matrix bit-exactly.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!(
            "{} {} {} {}\n",
            self.d_in(),
            self.d_out(),
            self.meta.mode,
            self.meta.lambda
        );
        for i in 0..self.d_in() {
            for j in 0..self.d_out() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", self.matrix[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, CrossModalError> {
        let path_str = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| CrossModalError::Io {
            path: path_str.clone(),
            source,
        })?;
        let bad = |line: usize, reason: String| CrossModalError::BadMapFile {
            path: path_str.clone(),
            line,
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| bad(1, "empty map file".to_string()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad(
                1,
                format!("expected header `d_in d_out mode lambda`, found {header:?}"),
            ));
        }
        let d_in: usize = fields[0]
            .parse()
            .map_err(|_| bad(1, format!("bad d_in {:?}", fields[0])))?;
        let d_out: usize = fields[1]
            .parse()
            .map_err(|_| bad(1, format!("bad d_out {:?}", fields[1])))?;
        let mode = MapMode::from_str(fields[2]).map_err(|e| bad(1, e))?;
        let lambda: f64 = fields[3]
            .parse()
            .map_err(|_| bad(1, format!("bad lambda {:?}", fields[3])))?;
        let mut matrix = DMatrix::zeros(d_in, d_out);
        let mut rows_seen = 0usize;
        for (idx, line) in lines {
            if rows_seen >= d_in {
                return Err(bad(idx + 1, format!("expected exactly {d_in} rows")));
            }
            let values: Result<Vec<f64>, _> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| bad(idx + 1, format!("non-numeric component {tok:?}")))
                })
                .collect();
            let values = values?;
            if values.len() != d_out {
                return Err(bad(
                    idx + 1,
                    format!("expected {d_out} components, found {}", values.len()),
                ));
            }
            for (j, v) in values.into_iter().enumerate() {
                matrix[(rows_seen, j)] = v;
            }
            rows_seen += 1;
        }
        if rows_seen != d_in {
            return Err(bad(
                text.lines().count(),
                format!("expected {d_in} rows, found {rows_seen}"),
            ));
        }
        LinearMap::new(matrix, MapMeta { mode, lambda })
    }
}

/// Class → member image ids, as ingested from a `class,image_id` CSV.
#[derive(Debug, Clone)]
pub struct ClassMembership {
    map: BTreeMap<String, Vec<String>>,
}

impl ClassMembership {
    pub fn new(map: BTreeMap<String, Vec<String>>) -> Result<Self, CrossModalError> {
        if map.is_empty() {
            return Err(CrossModalError::EmptyMembership);
        }
        for (class, members) in &map {
            if members.is_empty() {
                return Err(CrossModalError::EmptyClass {
                    class: class.clone(),
                });
            }
        }
        let map = map
            .into_iter()
            .map(|(class, mut members)| {
                members.sort();
                (class, members)
            })
            .collect();
        Ok(Self { map })
    }

    /// Load a CSV file with header `class,image_id`, one membership per row.
    pub fn load_csv(path: &Path) -> Result<Self, CrossModalError> {
        let path_str = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| CrossModalError::Io {
            path: path_str.clone(),
            source,
        })?;
        let bad = |line: usize, reason: String| CrossModalError::BadMembershipLine {
            path: path_str.clone(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "class,image_id" => {}
            Some((_, header)) => {
                return Err(bad(
                    1,
                    format!("expected header `class,image_id`, found {header:?}"),
                ))
            }
            None => return Err(bad(1, "empty membership file".to_string())),
        }
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 2 {
                return Err(bad(
                    line,
                    format!("expected 2 fields, found {}", fields.len()),
                ));
            }
            let (class, image_id) = (fields[0].trim(), fields[1].trim());
            if class.is_empty() || image_id.is_empty() {
                return Err(bad(line, "empty class or image id".to_string()));
            }
            let members = map.entry(class.to_string()).or_default();
            if members.iter().any(|m| m == image_id) {
                return Err(bad(
                    line,
                    format!("duplicate membership {class:?},{image_id:?}"),
                ));
            }
            members.push(image_id.to_string());
        }
        Self::new(map)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn members(&self, class: &str) -> Option<&[String]> {
        self.map.get(class).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.map.iter().map(|(c, m)| (c.as_str(), m.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One class's averaged image vector plus the members it was averaged from.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeEntry {
    pub prototype: Vec<f64>,
    pub members: Vec<String>,
}

/// Class word → prototype vector and member images.
#[derive(Debug, Clone)]
pub struct PrototypeTable {
    dim: usize,
    classes: BTreeMap<String, PrototypeEntry>,
}

impl PrototypeTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, class: &str) -> Option<&PrototypeEntry> {
        self.classes.get(class)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PrototypeEntry)> {
        self.classes.iter().map(|(c, e)| (c.as_str(), e))
    }
}

/// Componentwise arithmetic mean of each class's member image vectors.
pub fn build_prototypes(
    store: &ImageVectorStore,
    membership: &ClassMembership,
) -> Result<PrototypeTable, CrossModalError> {
    let dim = store.dim();
    let mut classes = BTreeMap::new();
    for (class, members) in membership.iter() {
        if members.is_empty() {
            return Err(CrossModalError::EmptyClass {
                class: class.to_string(),
            });
        }
        let mut mean = vec![0.0; dim];
        for member in members {
            let vector = store
                .vector(member)
                .ok_or_else(|| CrossModalError::UnknownImage {
                    class: class.to_string(),
                    image_id: member.clone(),
                })?;
            for (slot, v) in mean.iter_mut().zip(vector) {
                *slot += v;
            }
        }
        let count = members.len() as f64;
        for slot in &mut mean {
            *slot /= count;
        }
        classes.insert(
            class.to_string(),
            PrototypeEntry {
                prototype: mean,
                members: members.to_vec(),
            },
        );
    }
    Ok(PrototypeTable { dim, classes })
}

/// Aligned training matrices plus bookkeeping about which class words were
/// dropped for being out of vocabulary.
#[derive(Debug, Clone)]
pub struct TrainingRows {
    pub t: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Word behind each row, in row order.
    pub row_words: Vec<String>,
    /// Class words skipped because the embedding space lacks them.
    pub skipped_words: Vec<String>,
}

/// One row per class word: text vector → prototype vector.
pub fn prototype_rows(
    space: &EmbeddingSpace,
    protos: &PrototypeTable,
) -> Result<TrainingRows, CrossModalError> {
    if protos.is_empty() {
        return Err(CrossModalError::EmptyPrototypes);
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (class, entry) in protos.iter() {
        match space.vector(class) {
            Some(t) => rows.push((class.to_string(), t.to_vec(), entry.prototype.clone())),
            None => skipped.push(class.to_string()),
        }
    }
    assemble_rows(rows, skipped, space.dim(), protos.dim())
}

/// One row per (class word, member image) pair, the word vector repeated.
pub fn exemplar_rows(
    space: &EmbeddingSpace,
    store: &ImageVectorStore,
    membership: &ClassMembership,
) -> Result<TrainingRows, CrossModalError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (class, members) in membership.iter() {
        let Some(t) = space.vector(class) else {
            skipped.push(class.to_string());
            continue;
        };
        for member in members {
            let v = store
                .vector(member)
                .ok_or_else(|| CrossModalError::UnknownImage {
                    class: class.to_string(),
                    image_id: member.clone(),
                })?;
            rows.push((class.to_string(), t.to_vec(), v.to_vec()));
        }
    }
    assemble_rows(rows, skipped, space.dim(), store.dim())
}

fn assemble_rows(
    rows: Vec<(String, Vec<f64>, Vec<f64>)>,
    skipped: Vec<String>,
    d_in: usize,
    d_out: usize,
) -> Result<TrainingRows, CrossModalError> {
    if rows.is_empty() {
        return Err(CrossModalError::NoTrainingRows { skipped });
    }
    let n = rows.len();
    let mut t = DMatrix::zeros(n, d_in);
    let mut v = DMatrix::zeros(n, d_out);
    let mut row_words = Vec::with_capacity(n);
    for (i, (word, tv, vv)) in rows.into_iter().enumerate() {
        for (j, x) in tv.into_iter().enumerate() {
            t[(i, j)] = x;
        }
        for (j, x) in vv.into_iter().enumerate() {
            v[(i, j)] = x;
        }
        row_words.push(word);
    }
    Ok(TrainingRows {
        t,
        v,
        row_words,
        skipped_words: skipped,
    })
}

/// Default ridge strength: 1e-2 · trace(TᵀT) / d_in.
pub fn default_lambda(t: &DMatrix<f64>) -> f64 {
    1e-2 * t.iter().map(|x| x * x).sum::<f64>() / t.ncols() as f64
}

/// Closed-form multivariate ridge fit `M = (TᵀT + λI)⁻¹TᵀV`, the minimizer of
/// `‖TM − V‖² + λ‖M‖²`. At λ = 0 the Gram matrix must be well conditioned.
pub fn fit_linear_map(
    t: &DMatrix<f64>,
    v: &DMatrix<f64>,
    lambda: f64,
    mode: MapMode,
) -> Result<LinearMap, CrossModalError> {
    if t.nrows() == 0 || t.ncols() == 0 || v.ncols() == 0 {
        return Err(CrossModalError::EmptyTraining);
    }
    if v.nrows() != t.nrows() {
        return Err(CrossModalError::DimensionMismatch {
            what: "target row count",
            expected: t.nrows(),
            found: v.nrows(),
        });
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(CrossModalError::NegativeLambda { lambda });
    }
    if t.iter().any(|x| !x.is_finite()) {
        return Err(CrossModalError::NonFinite {
            what: "text matrix",
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CrossModalError::NonFinite {
            what: "target matrix",
        });
    }
    let d_in = t.ncols();
    let gram = t.transpose() * t;
    if lambda == 0.0 {
        let cond = condition_number(&gram);
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Err(CrossModalError::SingularSystem { cond });
        }
    }
    let system = &gram + DMatrix::identity(d_in, d_in) * lambda;
    let chol = nalgebra::Cholesky::new(system).ok_or(CrossModalError::SingularSystem {
        cond: f64::INFINITY,
    })?;
    let matrix = chol.solve(&(t.transpose() * v));
    LinearMap::new(matrix, MapMeta { mode, lambda })
}

/// Condition number of the Gram matrix TᵀT, the quantity that decides
/// whether an unregularized fit is accepted.
pub fn gram_condition(t: &DMatrix<f64>) -> f64 {
    condition_number(&(t.transpose() * t))
}

/// Frobenius norm of the training residual T·M − V.
pub fn residual_frobenius(
    map: &LinearMap,
    t: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<f64, CrossModalError> {
    if t.ncols() != map.d_in() {
        return Err(CrossModalError::DimensionMismatch {
            what: "input dimension",
            expected: map.d_in(),
            found: t.ncols(),
        });
    }
    if v.nrows() != t.nrows() || v.ncols() != map.d_out() {
        return Err(CrossModalError::DimensionMismatch {
            what: "target dimension",
            expected: map.d_out(),
            found: v.ncols(),
        });
    }
    let resid = t * map.matrix() - v;
    Ok(resid.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Ratio of largest to smallest singular value.
fn condition_number(m: &DMatrix<f64>) -> f64 {
    let singular = m.clone().svd(false, false).singular_values;
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for &s in singular.iter() {
        max = max.max(s);
        min = min.min(s);
    }
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Map a word's text vector into image space: `t · M`.
pub fn predict_image_vector(
    map: &LinearMap,
    space: &EmbeddingSpace,
    word: &str,
) -> Result<Vec<f64>, CrossModalError> {
    if space.dim() != map.d_in() {
        return Err(CrossModalError::DimensionMismatch {
            what: "embedding dimension",
            expected: map.d_in(),
            found: space.dim(),
        });
    }
    let t = space
        .vector(word)
        .ok_or_else(|| EmbeddingError::OutOfVocabulary {
            word: word.to_string(),
        })?;
    map.apply(t)
}

/// One-step retrieval: the training image nearest the predicted vector.
pub fn retrieve_exemplar(
    map: &LinearMap,
    space: &EmbeddingSpace,
    word: &str,
    training: &ImageVectorStore,
) -> Result<String, CrossModalError> {
    let predicted = predict_image_vector(map, space, word)?;
    let top = nearest_neighbors(training, &predicted, 1)?;
    Ok(top.into_iter().next().expect("k=1 yields one entry").0)
}

/// Where the second retrieval step searches for the final image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetrievalScope {
    /// Only the winning prototype's member images.
    #[default]
    WithinClass,
    /// Every training image.
    Global,
}

/// Two-step retrieval: nearest prototype to the prediction, then the image
/// nearest that prototype vector.
pub fn retrieve_prototype(
    map: &LinearMap,
    space: &EmbeddingSpace,
    word: &str,
    protos: &PrototypeTable,
    training: &ImageVectorStore,
    scope: RetrievalScope,
) -> Result<String, CrossModalError> {
    if protos.is_empty() {
        return Err(CrossModalError::EmptyPrototypes);
    }
    let predicted = predict_image_vector(map, space, word)?;
    // Step 1: winning class by cosine to the prediction. Iteration is in
    // ascending class order and only a strict improvement replaces the
    // incumbent, so ties resolve to the lexicographically first class.
    let mut winner: Option<(&str, &PrototypeEntry, f64)> = None;
    for (class, entry) in protos.iter() {
        let sim = cosine(&predicted, &entry.prototype)?;
        if winner.is_none_or(|(_, _, best)| sim > best) {
            winner = Some((class, entry, sim));
        }
    }
    let (class, entry, _) = winner.expect("non-empty table has a winner");
    // Step 2: image nearest the winning prototype vector.
    match scope {
        RetrievalScope::Global => {
            let top = nearest_neighbors(training, &entry.prototype, 1)?;
            Ok(top.into_iter().next().expect("k=1 yields one entry").0)
        }
        RetrievalScope::WithinClass => {
            let mut best: Option<(&str, f64)> = None;
            for member in &entry.members {
                let vector =
                    training
                        .vector(member)
                        .ok_or_else(|| CrossModalError::UnknownImage {
                            class: class.to_string(),
                            image_id: member.clone(),
                        })?;
                let sim = cosine(&entry.prototype, vector)?;
                if best.is_none_or(|(_, b)| sim > b) {
                    best = Some((member, sim));
                }
            }
            Ok(best.expect("classes are non-empty").0.to_string())
        }
    }
}

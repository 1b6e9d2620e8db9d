//! Trial measures and choice simulation: compute the five per-trial
//! similarity/count measures, run the Max choice rule, and aggregate
//! per-condition reports against participant data.
//!
//! The design has five cells — word type (abstract/concrete) crossed with
//! visual-neighbour distance (far/near), plus a concrete-only max cell — and
//! every report aggregates them in the fixed order A.Far, A.Near, C.Far,
//! C.Near, C.Max with an unweighted mean.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::embeddings::{cosine, EmbeddingError, EmbeddingSpace, ImageVectorStore};
use crate::fmt::{dec2, sig6};
use crate::stats::{proportions_test, BinomialTest, StatsError};

/// Most object labels a trial image may carry.
pub const MAX_LABELS: usize = 10;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    BadLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: malformed header, expected {expected:?}")]
    BadHeader { path: String, expected: String },
    #[error("duplicate trial id {trial_id:?}")]
    DuplicateTrial { trial_id: String },
    #[error("trial {trial_id:?}: distance `max` requires word type `concrete`")]
    MaxRequiresConcrete { trial_id: String },
    #[error("trial {trial_id:?}: {which} image has {count} labels (limit {MAX_LABELS})")]
    TooManyLabels {
        trial_id: String,
        which: Choice,
        count: usize,
    },
    #[error("trial {trial_id:?}: empty field {field}")]
    EmptyField {
        trial_id: String,
        field: &'static str,
    },
    #[error("trial {trial_id:?}: target {target:?} not in vocabulary")]
    OovTarget { trial_id: String, target: String },
    #[error("trial {trial_id:?}: unknown image id {image_id:?}")]
    UnknownImage { trial_id: String, image_id: String },
    #[error("trial {trial_id:?}: no in-vocabulary label on the {which} image")]
    NoUsableLabels { trial_id: String, which: Choice },
    #[error("no usable trials")]
    EmptyTrials,
    #[error("design cell {cell} has no trials")]
    EmptyCell { cell: Cell },
    #[error("duplicate response for participant {participant_id:?} on trial {trial_id:?}")]
    DuplicateResponse {
        participant_id: String,
        trial_id: String,
    },
    #[error("response references unknown trial {trial_id:?} (participant {participant_id:?})")]
    UnknownTrial {
        participant_id: String,
        trial_id: String,
    },
    #[error(
        "response for participant {participant_id:?} on trial {trial_id:?} has no model choice"
    )]
    OrphanResponse {
        participant_id: String,
        trial_id: String,
    },
    #[error("no responses")]
    EmptyResponses,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Abstract vs. concrete target noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WordType {
    Abstract,
    Concrete,
}

impl fmt::Display for WordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordType::Abstract => "abstract",
            WordType::Concrete => "concrete",
        })
    }
}

impl FromStr for WordType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abstract" => Ok(WordType::Abstract),
            "concrete" => Ok(WordType::Concrete),
            other => Err(format!("unknown word type {other:?}")),
        }
    }
}

/// Visual-neighbour distance condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Distance {
    Far,
    Near,
    Max,
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distance::Far => "far",
            Distance::Near => "near",
            Distance::Max => "max",
        })
    }
}

impl FromStr for Distance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "far" => Ok(Distance::Far),
            "near" => Ok(Distance::Near),
            "max" => Ok(Distance::Max),
            other => Err(format!("unknown distance {other:?}")),
        }
    }
}

/// Which of a trial's two images a choice (or a label list) refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Choice {
    Predicted,
    Random,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::Predicted => "predicted",
            Choice::Random => "random",
        })
    }
}

impl FromStr for Choice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "predicted" => Ok(Choice::Predicted),
            "random" => Ok(Choice::Random),
            other => Err(format!("unknown choice {other:?}")),
        }
    }
}

/// The five design cells, in fixed report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cell {
    AbstractFar,
    AbstractNear,
    ConcreteFar,
    ConcreteNear,
    ConcreteMax,
}

impl Cell {
    pub const ALL: [Cell; 5] = [
        Cell::AbstractFar,
        Cell::AbstractNear,
        Cell::ConcreteFar,
        Cell::ConcreteNear,
        Cell::ConcreteMax,
    ];

    pub fn from_factors(word_type: WordType, distance: Distance) -> Option<Cell> {
        match (word_type, distance) {
            (WordType::Abstract, Distance::Far) => Some(Cell::AbstractFar),
            (WordType::Abstract, Distance::Near) => Some(Cell::AbstractNear),
            (WordType::Abstract, Distance::Max) => None,
            (WordType::Concrete, Distance::Far) => Some(Cell::ConcreteFar),
            (WordType::Concrete, Distance::Near) => Some(Cell::ConcreteNear),
            (WordType::Concrete, Distance::Max) => Some(Cell::ConcreteMax),
        }
    }

    pub fn index(&self) -> usize {
        Cell::ALL
            .iter()
            .position(|c| c == self)
            .expect("cell listed")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cell::AbstractFar => "A.Far",
            Cell::AbstractNear => "A.Near",
            Cell::ConcreteFar => "C.Far",
            Cell::ConcreteNear => "C.Near",
            Cell::ConcreteMax => "C.Max",
        })
    }
}

/// One experimental item: a target word, its condition factors, and the two
/// candidate images with their object labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub trial_id: String,
    pub target: String,
    pub word_type: WordType,
    pub distance: Distance,
    pub pred_image_id: String,
    pub rand_image_id: String,
    pub pred_labels: Vec<String>,
    pub rand_labels: Vec<String>,
    pub is_catch: bool,
}

impl Trial {
    /// Validate the design invariants: the max cell is concrete-only, label
    /// lists carry at most [`MAX_LABELS`] entries, and ids are non-empty.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        trial_id: String,
        target: String,
        word_type: WordType,
        distance: Distance,
        pred_image_id: String,
        rand_image_id: String,
        pred_labels: Vec<String>,
        rand_labels: Vec<String>,
        is_catch: bool,
    ) -> Result<Self, SimulateError> {
        if trial_id.is_empty() {
            return Err(SimulateError::EmptyField {
                trial_id,
                field: "trial_id",
            });
        }
        for (value, field) in [
            (&target, "target"),
            (&pred_image_id, "pred_image_id"),
            (&rand_image_id, "rand_image_id"),
        ] {
            if value.is_empty() {
                return Err(SimulateError::EmptyField { trial_id, field });
            }
        }
        if distance == Distance::Max && word_type != WordType::Concrete {
            return Err(SimulateError::MaxRequiresConcrete { trial_id });
        }
        for (labels, which) in [
            (&pred_labels, Choice::Predicted),
            (&rand_labels, Choice::Random),
        ] {
            if labels.len() > MAX_LABELS {
                return Err(SimulateError::TooManyLabels {
                    trial_id,
                    which,
                    count: labels.len(),
                });
            }
        }
        Ok(Self {
            trial_id,
            target,
            word_type,
            distance,
            pred_image_id,
            rand_image_id,
            pred_labels,
            rand_labels,
            is_catch,
        })
    }

    pub fn cell(&self) -> Cell {
        Cell::from_factors(self.word_type, self.distance)
            .expect("construction enforces the factor combination")
    }
}

const TRIAL_HEADER: &str =
    "trial_id,target,word_type,distance,pred_image_id,rand_image_id,pred_labels,rand_labels,is_catch";

/// Load trials from CSV. Labels are semicolon-joined within their field;
/// lines starting with `#` are ignored.
pub fn load_trials(path: &Path) -> Result<Vec<Trial>, SimulateError> {
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| SimulateError::Io {
        path: path_str.clone(),
        source,
    })?;
    let mut lines = data_lines(&text);
    match lines.next() {
        Some((_, header)) if header == TRIAL_HEADER => {}
        _ => {
            return Err(SimulateError::BadHeader {
                path: path_str,
                expected: TRIAL_HEADER.to_string(),
            })
        }
    }
    let mut trials = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, raw) in lines {
        let bad = |reason: String| SimulateError::BadLine {
            path: path_str.clone(),
            line,
            reason,
        };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 9 {
            return Err(bad(format!("expected 9 fields, found {}", fields.len())));
        }
        let word_type = WordType::from_str(fields[2]).map_err(&bad)?;
        let distance = Distance::from_str(fields[3]).map_err(&bad)?;
        let is_catch = match fields[8] {
            "true" => true,
            "false" => false,
            other => {
                return Err(bad(format!(
                    "is_catch must be true or false, got {other:?}"
                )))
            }
        };
        let trial = Trial::new(
            fields[0].to_string(),
            fields[1].to_string(),
            word_type,
            distance,
            fields[4].to_string(),
            fields[5].to_string(),
            split_labels(fields[6]),
            split_labels(fields[7]),
            is_catch,
        )?;
        if !seen.insert(trial.trial_id.clone()) {
            return Err(SimulateError::DuplicateTrial {
                trial_id: trial.trial_id,
            });
        }
        trials.push(trial);
    }
    if trials.is_empty() {
        return Err(SimulateError::EmptyTrials);
    }
    Ok(trials)
}

/// Serialize trials in the same CSV layout [`load_trials`] reads.
pub fn trials_csv(trials: &[Trial]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(TRIAL_HEADER);
    out.push('\n');
    for t in trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t.trial_id,
            t.target,
            t.word_type,
            t.distance,
            t.pred_image_id,
            t.rand_image_id,
            t.pred_labels.join(";"),
            t.rand_labels.join(";"),
            t.is_catch
        );
    }
    out
}

fn split_labels(field: &str) -> Vec<String> {
    field
        .split(';')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Iterate (1-based line number, line), skipping blanks and `#` comments.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// The five measures derived from one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMeasures {
    /// Mean cosine between target and the predicted image's in-vocabulary
    /// labels.
    pub pred_sim: f64,
    /// Same for the random image's labels.
    pub rand_sim: f64,
    /// Cosine between the two image vectors.
    pub inter_image_sim: f64,
    /// In-vocabulary label counts.
    pub pred_n_obj: usize,
    pub rand_n_obj: usize,
}

/// Compute the five measures. Out-of-vocabulary labels are skipped; a target
/// out of vocabulary, an unknown image id, and a label list with no
/// in-vocabulary entry are distinct errors.
pub fn compute_trial_measures(
    trial: &Trial,
    space: &EmbeddingSpace,
    images: &ImageVectorStore,
) -> Result<TrialMeasures, SimulateError> {
    let label_mean = |labels: &[String], which: Choice| {
        space
            .mean_label_similarity(&trial.target, labels)
            .map_err(|e| match e {
                EmbeddingError::OutOfVocabulary { word } => SimulateError::OovTarget {
                    trial_id: trial.trial_id.clone(),
                    target: word,
                },
                EmbeddingError::NoUsableLabel { .. } => SimulateError::NoUsableLabels {
                    trial_id: trial.trial_id.clone(),
                    which,
                },
                other => SimulateError::Embedding(other),
            })
    };
    let pred = label_mean(&trial.pred_labels, Choice::Predicted)?;
    let rand = label_mean(&trial.rand_labels, Choice::Random)?;
    let image_vector = |id: &str| {
        images
            .vector(id)
            .ok_or_else(|| SimulateError::UnknownImage {
                trial_id: trial.trial_id.clone(),
                image_id: id.to_string(),
            })
    };
    let inter = cosine(
        image_vector(&trial.pred_image_id)?,
        image_vector(&trial.rand_image_id)?,
    )?;
    Ok(TrialMeasures {
        pred_sim: pred.mean,
        rand_sim: rand.mean,
        inter_image_sim: inter,
        pred_n_obj: pred.used,
        rand_n_obj: rand.used,
    })
}

/// The Max choice rule: predicted iff pred_sim ≥ rand_sim (ties go to
/// predicted).
pub fn max_select(m: &TrialMeasures) -> Choice {
    if m.pred_sim >= m.rand_sim {
        Choice::Predicted
    } else {
        Choice::Random
    }
}

/// One usable trial with its measures and model choice.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial_id: String,
    pub word_type: WordType,
    pub distance: Distance,
    pub measures: TrialMeasures,
    pub choice: Choice,
}

impl TrialRow {
    pub fn cell(&self) -> Cell {
        Cell::from_factors(self.word_type, self.distance).expect("rows come from validated trials")
    }
}

/// Why a trial was left out of the reports.
#[derive(Debug, Clone, PartialEq)]
pub enum ExclusionReason {
    CatchTrial,
    OovTarget { target: String },
    NoUsableLabels { which: Choice },
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionReason::CatchTrial => f.write_str("catch trial"),
            ExclusionReason::OovTarget { target } => {
                write!(f, "target {target:?} not in vocabulary")
            }
            ExclusionReason::NoUsableLabels { which } => {
                write!(f, "no in-vocabulary label on the {which} image")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub trial_id: String,
    pub reason: ExclusionReason,
}

/// Outcome of running measures + Max over a trial list: usable rows in
/// trial-id order, exclusions with reasons, and the trials where the tie rule
/// fired.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialEvaluation {
    pub rows: Vec<TrialRow>,
    pub exclusions: Vec<Exclusion>,
    pub ties: Vec<String>,
}

/// Evaluate every trial. Catch trials are excluded unless `include_catch`;
/// out-of-vocabulary targets and label-less images become logged exclusions;
/// an unknown image id is a hard error.
pub fn evaluate_trials(
    trials: &[Trial],
    space: &EmbeddingSpace,
    images: &ImageVectorStore,
    include_catch: bool,
) -> Result<TrialEvaluation, SimulateError> {
    let mut eval = TrialEvaluation::default();
    for trial in trials {
        if trial.is_catch && !include_catch {
            eval.exclusions.push(Exclusion {
                trial_id: trial.trial_id.clone(),
                reason: ExclusionReason::CatchTrial,
            });
            continue;
        }
        let measures = match compute_trial_measures(trial, space, images) {
            Ok(m) => m,
            Err(SimulateError::OovTarget { trial_id, target }) => {
                eval.exclusions.push(Exclusion {
                    trial_id,
                    reason: ExclusionReason::OovTarget { target },
                });
                continue;
            }
            Err(SimulateError::NoUsableLabels { trial_id, which }) => {
                eval.exclusions.push(Exclusion {
                    trial_id,
                    reason: ExclusionReason::NoUsableLabels { which },
                });
                continue;
            }
            Err(other) => return Err(other),
        };
        if measures.pred_sim == measures.rand_sim {
            eval.ties.push(trial.trial_id.clone());
        }
        eval.rows.push(TrialRow {
            trial_id: trial.trial_id.clone(),
            word_type: trial.word_type,
            distance: trial.distance,
            measures,
            choice: max_select(&measures),
        });
    }
    eval.rows.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
    eval.exclusions.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
    eval.ties.sort();
    Ok(eval)
}

/// Per-condition selection percentages for one virtual participant, next to
/// the human per-cell means.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub label: String,
    /// Percentage of trials per cell where the model chose the predicted
    /// image, in [`Cell::ALL`] order.
    pub cells: [f64; 5],
    /// Unweighted mean of the five cells.
    pub mean: f64,
    pub participant_cells: [f64; 5],
    pub participant_mean: f64,
    /// |model mean − participant mean|.
    pub delta: f64,
}

impl ConditionReport {
    /// Build a report directly from per-cell percentages (model and
    /// participant), computing both means and the absolute difference.
    pub fn from_cell_percentages(
        label: &str,
        cells: [f64; 5],
        participant_cells: [f64; 5],
    ) -> Self {
        let mean = cells.iter().sum::<f64>() / 5.0;
        let participant_mean = participant_cells.iter().sum::<f64>() / 5.0;
        Self {
            label: label.to_string(),
            cells,
            mean,
            participant_cells,
            participant_mean,
            delta: (mean - participant_mean).abs(),
        }
    }
}

/// Aggregate evaluated rows into a [`ConditionReport`]; every cell needs at
/// least one trial.
pub fn report_from_rows(
    label: &str,
    rows: &[TrialRow],
    participant_cells: [f64; 5],
) -> Result<ConditionReport, SimulateError> {
    if rows.is_empty() {
        return Err(SimulateError::EmptyTrials);
    }
    let mut predicted = [0usize; 5];
    let mut total = [0usize; 5];
    for row in rows {
        let idx = row.cell().index();
        total[idx] += 1;
        if row.choice == Choice::Predicted {
            predicted[idx] += 1;
        }
    }
    let mut cells = [0.0; 5];
    for (idx, cell) in Cell::ALL.iter().enumerate() {
        if total[idx] == 0 {
            return Err(SimulateError::EmptyCell { cell: *cell });
        }
        cells[idx] = 100.0 * predicted[idx] as f64 / total[idx] as f64;
    }
    Ok(ConditionReport::from_cell_percentages(
        label,
        cells,
        participant_cells,
    ))
}

/// Run the whole virtual-participant pipeline: evaluate trials (catch trials
/// excluded) and aggregate per-cell percentages against the human means.
pub fn virtual_report(
    trials: &[Trial],
    space: &EmbeddingSpace,
    images: &ImageVectorStore,
    participant_cells: [f64; 5],
) -> Result<ConditionReport, SimulateError> {
    let eval = evaluate_trials(trials, space, images, false)?;
    report_from_rows(
        &format!("Max: {}", space.name()),
        &eval.rows,
        participant_cells,
    )
}

/// Which cross-modal setup a response set was collected under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    Prototype,
    Exemplar,
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setup::Prototype => "prototype",
            Setup::Exemplar => "exemplar",
        })
    }
}

impl FromStr for Setup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prototype" => Ok(Setup::Prototype),
            "exemplar" => Ok(Setup::Exemplar),
            other => Err(format!("unknown setup {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseRow {
    pub participant_id: String,
    pub trial_id: String,
    pub choice: Choice,
}

/// Participant responses, unique per (participant, trial), all referencing
/// known trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSet {
    pub setup: Setup,
    pub rows: Vec<ResponseRow>,
}

const RESPONSE_HEADER: &str = "participant_id,trial_id,choice";

impl ResponseSet {
    pub fn new(
        setup: Setup,
        rows: Vec<ResponseRow>,
        known_trials: &BTreeSet<String>,
    ) -> Result<Self, SimulateError> {
        if rows.is_empty() {
            return Err(SimulateError::EmptyResponses);
        }
        let mut seen = BTreeSet::new();
        for row in &rows {
            if !known_trials.contains(&row.trial_id) {
                return Err(SimulateError::UnknownTrial {
                    participant_id: row.participant_id.clone(),
                    trial_id: row.trial_id.clone(),
                });
            }
            if !seen.insert((row.participant_id.clone(), row.trial_id.clone())) {
                return Err(SimulateError::DuplicateResponse {
                    participant_id: row.participant_id.clone(),
                    trial_id: row.trial_id.clone(),
                });
            }
        }
        Ok(Self { setup, rows })
    }

    /// Load a CSV file with header `participant_id,trial_id,choice`.
    pub fn load_csv(
        path: &Path,
        setup: Setup,
        known_trials: &BTreeSet<String>,
    ) -> Result<Self, SimulateError> {
        let path_str = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| SimulateError::Io {
            path: path_str.clone(),
            source,
        })?;
        let mut lines = data_lines(&text);
        match lines.next() {
            Some((_, header)) if header == RESPONSE_HEADER => {}
            _ => {
                return Err(SimulateError::BadHeader {
                    path: path_str,
                    expected: RESPONSE_HEADER.to_string(),
                })
            }
        }
        let mut rows = Vec::new();
        for (line, raw) in lines {
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 3 {
                return Err(SimulateError::BadLine {
                    path: path_str.clone(),
                    line,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let choice = Choice::from_str(fields[2]).map_err(|reason| SimulateError::BadLine {
                path: path_str.clone(),
                line,
                reason,
            })?;
            rows.push(ResponseRow {
                participant_id: fields[0].to_string(),
                trial_id: fields[1].to_string(),
                choice,
            });
        }
        Self::new(setup, rows, known_trials)
    }

    /// Serialize in the same CSV layout [`ResponseSet::load_csv`] reads.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from(RESPONSE_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                row.participant_id, row.trial_id, row.choice
            );
        }
        out
    }

    /// Keep only responses whose trial survived evaluation; returns the
    /// retained set and the dropped (participant, trial) pairs.
    pub fn retain_trials(
        &self,
        surviving: &BTreeSet<String>,
    ) -> (ResponseSet, Vec<(String, String)>) {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for row in &self.rows {
            if surviving.contains(&row.trial_id) {
                kept.push(row.clone());
            } else {
                dropped.push((row.participant_id.clone(), row.trial_id.clone()));
            }
        }
        (
            ResponseSet {
                setup: self.setup,
                rows: kept,
            },
            dropped,
        )
    }
}

/// Per-cell percentage of responses the model choice reproduces, plus the
/// unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub label: String,
    pub cells: [f64; 5],
    pub mean: f64,
}

impl AccuracyReport {
    pub fn from_cell_percentages(label: &str, cells: [f64; 5]) -> Self {
        Self {
            label: label.to_string(),
            cells,
            mean: cells.iter().sum::<f64>() / 5.0,
        }
    }
}

/// Fraction of (participant, trial) rows where the model choice equals the
/// participant choice, aggregated per cell. Every response must reference an
/// evaluated trial, and every cell needs at least one response.
pub fn accuracy_vs_participants(
    label: &str,
    rows: &[TrialRow],
    responses: &ResponseSet,
) -> Result<AccuracyReport, SimulateError> {
    if responses.rows.is_empty() {
        return Err(SimulateError::EmptyResponses);
    }
    let by_trial: BTreeMap<&str, &TrialRow> =
        rows.iter().map(|r| (r.trial_id.as_str(), r)).collect();
    let mut matches = [0usize; 5];
    let mut total = [0usize; 5];
    for response in &responses.rows {
        let row = by_trial.get(response.trial_id.as_str()).ok_or_else(|| {
            SimulateError::OrphanResponse {
                participant_id: response.participant_id.clone(),
                trial_id: response.trial_id.clone(),
            }
        })?;
        let idx = row.cell().index();
        total[idx] += 1;
        if row.choice == response.choice {
            matches[idx] += 1;
        }
    }
    let mut cells = [0.0; 5];
    for (idx, cell) in Cell::ALL.iter().enumerate() {
        if total[idx] == 0 {
            return Err(SimulateError::EmptyCell { cell: *cell });
        }
        cells[idx] = 100.0 * matches[idx] as f64 / total[idx] as f64;
    }
    Ok(AccuracyReport::from_cell_percentages(label, cells))
}

/// Result of the above-chance proportions test over model choices.
#[derive(Debug, Clone, PartialEq)]
pub struct AboveChance {
    pub successes: u64,
    pub n: u64,
    pub test: BinomialTest,
}

/// Exact two-sided binomial test of the predicted-image selection count
/// against chance 1/2.
pub fn above_chance_check(rows: &[TrialRow]) -> Result<AboveChance, SimulateError> {
    if rows.is_empty() {
        return Err(SimulateError::EmptyTrials);
    }
    let successes = rows
        .iter()
        .filter(|r| r.choice == Choice::Predicted)
        .count() as u64;
    let n = rows.len() as u64;
    Ok(AboveChance {
        successes,
        n,
        test: proportions_test(successes, n, 0.5)?,
    })
}

const MEASURES_HEADER: &str =
    "trial_id,word_type,distance,pred_sim,rand_sim,inter_image_sim,pred_n_obj,rand_n_obj,choice";

/// Serialize evaluated rows (five measures + choice) as CSV, floats at six
/// significant digits.
pub fn measures_csv(rows: &[TrialRow]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(MEASURES_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.trial_id,
            row.word_type,
            row.distance,
            sig6(row.measures.pred_sim),
            sig6(row.measures.rand_sim),
            sig6(row.measures.inter_image_sim),
            row.measures.pred_n_obj,
            row.measures.rand_n_obj,
            row.choice
        );
    }
    out
}

/// Read back a measures CSV produced by [`measures_csv`] (comment lines
/// allowed).
pub fn load_measures_csv(path: &Path) -> Result<Vec<TrialRow>, SimulateError> {
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| SimulateError::Io {
        path: path_str.clone(),
        source,
    })?;
    let mut lines = data_lines(&text);
    match lines.next() {
        Some((_, header)) if header == MEASURES_HEADER => {}
        _ => {
            return Err(SimulateError::BadHeader {
                path: path_str,
                expected: MEASURES_HEADER.to_string(),
            })
        }
    }
    let mut rows = Vec::new();
    for (line, raw) in lines {
        let bad = |reason: String| SimulateError::BadLine {
            path: path_str.clone(),
            line,
            reason,
        };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 9 {
            return Err(bad(format!("expected 9 fields, found {}", fields.len())));
        }
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("non-numeric value {s:?}")))
        };
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("non-integer count {s:?}")))
        };
        rows.push(TrialRow {
            trial_id: fields[0].to_string(),
            word_type: WordType::from_str(fields[1]).map_err(&bad)?,
            distance: Distance::from_str(fields[2]).map_err(&bad)?,
            measures: TrialMeasures {
                pred_sim: parse_f(fields[3])?,
                rand_sim: parse_f(fields[4])?,
                inter_image_sim: parse_f(fields[5])?,
                pred_n_obj: parse_n(fields[6])?,
                rand_n_obj: parse_n(fields[7])?,
            },
            choice: Choice::from_str(fields[8]).map_err(&bad)?,
        });
    }
    if rows.is_empty() {
        return Err(SimulateError::EmptyTrials);
    }
    Ok(rows)
}

const REPORT_HEADER: &str = "row,A.Far,A.Near,C.Far,C.Near,C.Max,mean,delta";

/// Render condition reports as a table: one participants row (taken from the
/// first report) and one row per model, percentages at two decimals.
pub fn condition_reports_csv(reports: &[ConditionReport]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    if let Some(first) = reports.first() {
        out.push_str("Participants");
        for v in first.participant_cells {
            let _ = write!(out, ",{}", dec2(v));
        }
        let _ = writeln!(out, ",{},", dec2(first.participant_mean));
    }
    for report in reports {
        out.push_str(&report.label);
        for v in report.cells {
            let _ = write!(out, ",{}", dec2(v));
        }
        let _ = writeln!(out, ",{},{}", dec2(report.mean), dec2(report.delta));
    }
    out
}

const ACCURACY_HEADER: &str = "row,A.Far,A.Near,C.Far,C.Near,C.Max,mean";

/// Render accuracy reports as a table, percentages at two decimals.
pub fn accuracy_reports_csv(reports: &[AccuracyReport]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(ACCURACY_HEADER);
    out.push('\n');
    for report in reports {
        out.push_str(&report.label);
        for v in report.cells {
            let _ = write!(out, ",{}", dec2(v));
        }
        let _ = writeln!(out, ",{}", dec2(report.mean));
    }
    out
}

/// Render exclusions as CSV.
pub fn exclusions_csv(exclusions: &[Exclusion]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("trial_id,reason\n");
    for e in exclusions {
        let _ = writeln!(out, "{},{}", e.trial_id, e.reason);
    }
    out
}

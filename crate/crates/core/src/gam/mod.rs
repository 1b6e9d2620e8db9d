//! Penalized logistic additive model over the trial measures: parametric
//! factor terms, count covariates, one interaction, and univariate smooths
//! built from centered cubic B-splines with a second-order difference
//! penalty. Smoothness is selected by AIC over a λ grid; inference is
//! Wald-type on the penalized coefficients.

pub mod basis;
pub mod design;
pub mod fit;
pub mod summary;

pub use basis::{CenteredBasis, SplineBasis};
pub use design::{build_design, DesignMatrix, SmoothBlock};
pub use fit::{compare_aic, fit_gam, predict_choice, predict_prob, AicRow, GamFit, GridPoint};
pub use summary::{
    partial_effects, summarize, summary_csv, GamSummary, ParametricSummary, PartialEffect,
    SmoothSummary,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::simulate::{Distance, TrialMeasures, WordType};

#[derive(Debug, Error)]
pub enum GamError {
    #[error("basis dimension k must be at least 4, got {k}")]
    BasisTooSmall { k: usize },
    #[error("covariate range is empty (lo {lo}, hi {hi})")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("λ grid must be non-empty")]
    EmptyGrid,
    #[error("λ grid must be sorted ascending without duplicates")]
    UnsortedGrid,
    #[error("λ values must be finite and non-negative, got {value}")]
    BadLambda { value: f64 },
    #[error("interaction requires both word-type and distance terms")]
    InteractionNeedsFactors,
    #[error("no rows")]
    NoRows,
    #[error("factor level {level} absent from the data")]
    MissingLevel { level: String },
    #[error("covariate {name} has zero range (constant column)")]
    ZeroRange { name: String },
    #[error("non-finite covariate {name} in row {row}")]
    NonFinite { name: String, row: usize },
    #[error("need more rows than columns: n = {n}, columns = {p}")]
    TooFewRows { n: usize, p: usize },
    #[error("system matrix is singular during fitting")]
    Singular,
    #[error("no convergence after {iters} iterations (λ = {lambdas:?}); deviance trace {trace:?}")]
    NonConvergence {
        iters: usize,
        lambdas: Vec<f64>,
        trace: Vec<f64>,
    },
    #[error("quasi-separation detected: |coefficient| for column {column} exceeds {limit}")]
    Separation { column: String, limit: f64 },
    #[error("unknown smooth term {name:?}")]
    UnknownSmooth { name: String },
    #[error("partial-effect grid needs at least 2 points, got {n}")]
    GridTooSmall { n: usize },
    #[error("need at least 2 fits to compare, got {n}")]
    TooFewFits { n: usize },
    #[error("fits were made on different response vectors")]
    ResponseMismatch,
    #[error("model spec line {line}: {reason}")]
    BadSpecLine { line: usize, reason: String },
}

/// Coefficient magnitude beyond which the fit is treated as separated.
pub const SEPARATION_LIMIT: f64 = 50.0;

/// Which trial measure a smooth term applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothTerm {
    RandSim,
    PredSim,
    InterSim,
}

impl SmoothTerm {
    pub const ALL: [SmoothTerm; 3] = [
        SmoothTerm::RandSim,
        SmoothTerm::PredSim,
        SmoothTerm::InterSim,
    ];

    /// The underlying covariate name, matching the measures CSV column.
    pub fn covariate(&self) -> &'static str {
        match self {
            SmoothTerm::RandSim => "rand_sim",
            SmoothTerm::PredSim => "pred_sim",
            SmoothTerm::InterSim => "inter_image_sim",
        }
    }

    /// Reporting name of the smooth.
    pub fn label(&self) -> String {
        format!("s({})", self.covariate())
    }

    pub fn value(&self, m: &TrialMeasures) -> f64 {
        match self {
            SmoothTerm::RandSim => m.rand_sim,
            SmoothTerm::PredSim => m.pred_sim,
            SmoothTerm::InterSim => m.inter_image_sim,
        }
    }
}

impl fmt::Display for SmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.covariate())
    }
}

impl FromStr for SmoothTerm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rand_sim" => Ok(SmoothTerm::RandSim),
            "pred_sim" => Ok(SmoothTerm::PredSim),
            "inter_image_sim" => Ok(SmoothTerm::InterSim),
            other => Err(format!("unknown smooth term {other:?}")),
        }
    }
}

/// Which terms enter the model and how the smooths are parameterized.
#[derive(Debug, Clone, PartialEq)]
pub struct GamSpec {
    /// Word-type dummy (reference: abstract).
    pub word_type: bool,
    /// Distance dummies (reference: far).
    pub distance: bool,
    /// Predicted/random in-vocabulary object counts as linear covariates.
    pub n_objects: bool,
    /// word_type=concrete × distance=near interaction.
    pub interaction: bool,
    pub smooths: Vec<SmoothTerm>,
    /// Basis dimension per smooth (k ≥ 4).
    pub basis_dim: usize,
    /// Candidate smoothing parameters, ascending.
    pub lambda_grid: Vec<f64>,
    /// Search an independent λ per smooth instead of one shared value.
    pub per_smooth_grid: bool,
}

/// The default λ candidates: decade steps from 1e-3 to 1e6.
pub fn decade_grid() -> Vec<f64> {
    (-3..=6).map(|e| 10f64.powi(e)).collect()
}

impl GamSpec {
    /// Every term: factors, counts, interaction, and all three smooths.
    pub fn full() -> Self {
        Self {
            word_type: true,
            distance: true,
            n_objects: true,
            interaction: true,
            smooths: SmoothTerm::ALL.to_vec(),
            basis_dim: 5,
            lambda_grid: decade_grid(),
            per_smooth_grid: false,
        }
    }

    pub fn intercept_only() -> Self {
        Self {
            word_type: false,
            distance: false,
            n_objects: false,
            interaction: false,
            smooths: Vec::new(),
            basis_dim: 5,
            lambda_grid: decade_grid(),
            per_smooth_grid: false,
        }
    }

    /// All parametric terms, no smooths.
    pub fn parametric_only() -> Self {
        Self {
            smooths: Vec::new(),
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<(), GamError> {
        if self.basis_dim < 4 {
            return Err(GamError::BasisTooSmall { k: self.basis_dim });
        }
        if self.interaction && !(self.word_type && self.distance) {
            return Err(GamError::InteractionNeedsFactors);
        }
        if self.lambda_grid.is_empty() {
            return Err(GamError::EmptyGrid);
        }
        for &l in &self.lambda_grid {
            if !l.is_finite() || l < 0.0 {
                return Err(GamError::BadLambda { value: l });
            }
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GamError::UnsortedGrid);
        }
        Ok(())
    }

    /// Parse a plain-text key-value model spec. Defaults to the full model;
    /// keys override individual settings. Keys: `word_type`, `distance`,
    /// `n_objects`, `interaction`, `per_smooth_grid` (on/off), `smooths`
    /// (comma list of covariate names, may be empty), `k` (integer),
    /// `lambda_grid` (comma list of floats).
    pub fn from_key_values(text: &str) -> Result<Self, GamError> {
        let mut spec = Self::full();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let bad = |reason: String| GamError::BadSpecLine { line, reason };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| bad("expected key = value".to_string()))?;
            let key = key.trim();
            let value = value.trim();
            let parse_switch = |v: &str| match v {
                "on" | "true" => Ok(true),
                "off" | "false" => Ok(false),
                other => Err(bad(format!("expected on/off, got {other:?}"))),
            };
            match key {
                "word_type" => spec.word_type = parse_switch(value)?,
                "distance" => spec.distance = parse_switch(value)?,
                "n_objects" => spec.n_objects = parse_switch(value)?,
                "interaction" => spec.interaction = parse_switch(value)?,
                "per_smooth_grid" => spec.per_smooth_grid = parse_switch(value)?,
                "smooths" => {
                    let mut smooths = Vec::new();
                    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        smooths.push(SmoothTerm::from_str(part).map_err(&bad)?);
                    }
                    spec.smooths = smooths;
                }
                "k" => {
                    spec.basis_dim = value
                        .parse()
                        .map_err(|_| bad(format!("bad basis dimension {value:?}")))?;
                }
                "lambda_grid" => {
                    let mut grid = Vec::new();
                    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        grid.push(
                            part.parse::<f64>()
                                .map_err(|_| bad(format!("bad λ value {part:?}")))?,
                        );
                    }
                    spec.lambda_grid = grid;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// One modelling row: the factors and measures of a trial plus one binary
/// response (true when the participant chose the predicted image).
#[derive(Debug, Clone, PartialEq)]
pub struct GamRow {
    pub word_type: WordType,
    pub distance: Distance,
    pub measures: TrialMeasures,
    pub y: bool,
}

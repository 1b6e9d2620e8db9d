//! Model matrix assembly: dummy-coded factors (reference levels abstract and
//! far), linear count covariates, the word-type × distance interaction, and
//! one centered spline block per smooth term.

use nalgebra::{DMatrix, DVector};

use crate::simulate::{Distance, WordType};

use super::basis::CenteredBasis;
use super::{GamError, GamRow, GamSpec, SmoothTerm};

/// One smooth's slice of the design: its centered basis and the first of its
/// `k−1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBlock {
    pub term: SmoothTerm,
    pub basis: CenteredBasis,
    pub offset: usize,
}

impl SmoothBlock {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Column range of this block within the full design.
    pub fn columns(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim()
    }
}

/// The assembled model matrix with its response and reporting metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub col_names: Vec<String>,
    /// Number of leading parametric (unpenalized) columns.
    pub n_param: usize,
    pub smooth_blocks: Vec<SmoothBlock>,
    pub spec: GamSpec,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Build the design row for a (possibly unseen) trial using the stored
    /// knots and centering; smooth covariates beyond the training range are
    /// extended linearly.
    pub fn row_for(&self, row: &GamRow) -> Result<DVector<f64>, GamError> {
        check_finite(row, &self.spec, 0)?;
        let mut out = DVector::zeros(self.p());
        for (j, value) in parametric_values(row, &self.spec).into_iter().enumerate() {
            out[j] = value;
        }
        for block in &self.smooth_blocks {
            let centered = block.basis.row(block.term.value(&row.measures));
            for (i, value) in centered.iter().enumerate() {
                out[block.offset + i] = *value;
            }
        }
        Ok(out)
    }
}

fn check_finite(row: &GamRow, spec: &GamSpec, index: usize) -> Result<(), GamError> {
    let mut used: Vec<(&str, f64)> = Vec::new();
    if spec.n_objects {
        used.push(("pred_n_obj", row.measures.pred_n_obj as f64));
        used.push(("rand_n_obj", row.measures.rand_n_obj as f64));
    }
    for term in &spec.smooths {
        used.push((term.covariate(), term.value(&row.measures)));
    }
    for (name, value) in used {
        if !value.is_finite() {
            return Err(GamError::NonFinite {
                name: name.to_string(),
                row: index,
            });
        }
    }
    Ok(())
}

/// Parametric column values for one row, in column order.
fn parametric_values(row: &GamRow, spec: &GamSpec) -> Vec<f64> {
    let concrete = (row.word_type == WordType::Concrete) as u8 as f64;
    let near = (row.distance == Distance::Near) as u8 as f64;
    let max = (row.distance == Distance::Max) as u8 as f64;
    let mut values = vec![1.0];
    if spec.word_type {
        values.push(concrete);
    }
    if spec.distance {
        values.push(near);
        values.push(max);
    }
    if spec.n_objects {
        values.push(row.measures.pred_n_obj as f64);
        values.push(row.measures.rand_n_obj as f64);
    }
    if spec.interaction {
        values.push(concrete * near);
    }
    values
}

fn parametric_names(spec: &GamSpec) -> Vec<String> {
    let mut names = vec!["(Intercept)".to_string()];
    if spec.word_type {
        names.push("word_type=concrete".to_string());
    }
    if spec.distance {
        names.push("distance=near".to_string());
        names.push("distance=max".to_string());
    }
    if spec.n_objects {
        names.push("pred_n_obj".to_string());
        names.push("rand_n_obj".to_string());
    }
    if spec.interaction {
        names.push("word_type=concrete:distance=near".to_string());
    }
    names
}

/// Assemble the design matrix. Every referenced factor level must occur in
/// the data, and every continuous covariate must have non-zero range.
pub fn build_design(rows: &[GamRow], spec: &GamSpec) -> Result<DesignMatrix, GamError> {
    spec.validate()?;
    if rows.is_empty() {
        return Err(GamError::NoRows);
    }
    for (index, row) in rows.iter().enumerate() {
        check_finite(row, spec, index)?;
    }

    if spec.word_type {
        for (level, wt) in [
            ("word_type=abstract", WordType::Abstract),
            ("word_type=concrete", WordType::Concrete),
        ] {
            if !rows.iter().any(|r| r.word_type == wt) {
                return Err(GamError::MissingLevel {
                    level: level.to_string(),
                });
            }
        }
    }
    if spec.distance {
        for (level, d) in [
            ("distance=far", Distance::Far),
            ("distance=near", Distance::Near),
            ("distance=max", Distance::Max),
        ] {
            if !rows.iter().any(|r| r.distance == d) {
                return Err(GamError::MissingLevel {
                    level: level.to_string(),
                });
            }
        }
    }
    if spec.interaction
        && !rows
            .iter()
            .any(|r| r.word_type == WordType::Concrete && r.distance == Distance::Near)
    {
        return Err(GamError::MissingLevel {
            level: "word_type=concrete:distance=near".to_string(),
        });
    }
    if spec.n_objects {
        for (name, pick) in [
            (
                "pred_n_obj",
                (|r: &GamRow| r.measures.pred_n_obj) as fn(&GamRow) -> usize,
            ),
            ("rand_n_obj", |r: &GamRow| r.measures.rand_n_obj),
        ] {
            let first = pick(&rows[0]);
            if rows.iter().all(|r| pick(r) == first) {
                return Err(GamError::ZeroRange {
                    name: name.to_string(),
                });
            }
        }
    }

    let mut smooth_blocks = Vec::new();
    let mut col_names = parametric_names(spec);
    let n_param = col_names.len();
    let mut offset = n_param;
    for term in &spec.smooths {
        let xs: Vec<f64> = rows.iter().map(|r| term.value(&r.measures)).collect();
        let basis = CenteredBasis::from_training(spec.basis_dim, &xs).map_err(|e| match e {
            GamError::EmptyRange { .. } => GamError::ZeroRange {
                name: term.covariate().to_string(),
            },
            other => other,
        })?;
        for i in 1..=basis.dim() {
            col_names.push(format!("{}.{i}", term.label()));
        }
        let dim = basis.dim();
        smooth_blocks.push(SmoothBlock {
            term: *term,
            basis,
            offset,
        });
        offset += dim;
    }

    let p = offset;
    let mut x = DMatrix::zeros(rows.len(), p);
    let mut y = DVector::zeros(rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (j, value) in parametric_values(row, spec).into_iter().enumerate() {
            x[(i, j)] = value;
        }
        for block in &smooth_blocks {
            let centered = block.basis.row(block.term.value(&row.measures));
            for (k, value) in centered.iter().enumerate() {
                x[(i, block.offset + k)] = *value;
            }
        }
        y[i] = row.y as u8 as f64;
    }

    Ok(DesignMatrix {
        x,
        y,
        col_names,
        n_param,
        smooth_blocks,
        spec: spec.clone(),
    })
}

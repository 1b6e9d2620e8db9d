//! Inference tables for a fitted model — parametric estimates with normal
//! z-tests and smooth terms with Wald chi-square over their coefficient
//! blocks — plus partial-effect curves with pointwise standard errors.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::fmt::{dec4, sig6};

use super::fit::GamFit;
use super::GamError;

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSummary {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSummary {
    pub term: String,
    pub edf: f64,
    pub chi_sq: Option<f64>,
    pub p_value: Option<f64>,
}

/// Two-block summary: parametric coefficients and smooth terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GamSummary {
    pub parametric: Vec<ParametricSummary>,
    pub smooths: Vec<SmoothSummary>,
}

/// Two-sided normal p-value for a z statistic.
pub fn two_sided_normal_p(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Wald statistic βᵀ V⁻¹ β for one coefficient block; `None` when the
/// covariance block is singular.
pub fn wald_block(beta: &DVector<f64>, cov: &DMatrix<f64>) -> Option<f64> {
    let chol = cov.clone().cholesky()?;
    let solved = chol.solve(beta);
    let stat = beta.dot(&solved);
    stat.is_finite().then_some(stat)
}

/// Build both summary blocks from a converged fit.
pub fn summarize(fit: &GamFit) -> GamSummary {
    let parametric = (0..fit.design.n_param)
        .map(|j| {
            let estimate = fit.beta[j];
            let variance = fit.covariance[(j, j)];
            let std_error = if variance > 0.0 {
                variance.sqrt()
            } else {
                f64::NAN
            };
            let z_value = (std_error.is_finite() && std_error > 0.0).then(|| estimate / std_error);
            ParametricSummary {
                term: fit.design.col_names[j].clone(),
                estimate,
                std_error,
                z_value,
                p_value: z_value.map(two_sided_normal_p),
            }
        })
        .collect();

    let smooths = fit
        .design
        .smooth_blocks
        .iter()
        .zip(&fit.smooth_edf)
        .map(|(block, (term, edf))| {
            let cols = block.columns();
            let beta_block = DVector::from_iterator(block.dim(), cols.clone().map(|j| fit.beta[j]));
            let mut cov_block = DMatrix::zeros(block.dim(), block.dim());
            for (a, ja) in cols.clone().enumerate() {
                for (b, jb) in cols.clone().enumerate() {
                    cov_block[(a, b)] = fit.covariance[(ja, jb)];
                }
            }
            let chi_sq = wald_block(&beta_block, &cov_block);
            let p_value = chi_sq.and_then(|stat| {
                let dist = ChiSquared::new(block.dim() as f64).ok()?;
                Some(dist.sf(stat).clamp(0.0, 1.0))
            });
            SmoothSummary {
                term: term.clone(),
                edf: *edf,
                chi_sq,
                p_value,
            }
        })
        .collect();

    GamSummary {
        parametric,
        smooths,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(dec4).unwrap_or_else(|| "NA".to_string())
}

/// Render the two-block summary as CSV at four decimals. Parametric rows
/// fill estimate/std_error/z_value; smooth rows fill edf/chi_sq; unavailable
/// statistics print as `NA`.
pub fn summary_csv(summary: &GamSummary) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("block,term,estimate,std_error,z_value,p_value,edf,chi_sq\n");
    for row in &summary.parametric {
        let _ = writeln!(
            out,
            "A,{},{},{},{},{},,",
            row.term,
            dec4(row.estimate),
            dec4(row.std_error),
            opt(row.z_value),
            opt(row.p_value),
        );
    }
    for row in &summary.smooths {
        let _ = writeln!(
            out,
            "B,{},,,,{},{},{}",
            row.term,
            opt(row.p_value),
            dec4(row.edf),
            opt(row.chi_sq),
        );
    }
    out
}

/// A smooth's contribution on an equally spaced grid, other terms at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialEffect {
    pub term: String,
    pub xs: Vec<f64>,
    pub effect: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl PartialEffect {
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("x,effect,se\n");
        for i in 0..self.xs.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                sig6(self.xs[i]),
                sig6(self.effect[i]),
                sig6(self.std_error[i])
            );
        }
        out
    }
}

/// Evaluate one smooth's partial effect on `grid_size` equally spaced points
/// across its observed training range, with pointwise standard errors from
/// the covariance block. The term may be named by its label (`s(pred_sim)`)
/// or its covariate (`pred_sim`).
pub fn partial_effects(
    fit: &GamFit,
    term: &str,
    grid_size: usize,
) -> Result<PartialEffect, GamError> {
    if grid_size < 2 {
        return Err(GamError::GridTooSmall { n: grid_size });
    }
    let block = fit
        .design
        .smooth_blocks
        .iter()
        .find(|b| b.term.label() == term || b.term.covariate() == term)
        .ok_or_else(|| GamError::UnknownSmooth {
            name: term.to_string(),
        })?;
    let (lo, hi) = (block.basis.basis.lo, block.basis.basis.hi);
    let cols = block.columns();
    let beta_block = DVector::from_iterator(block.dim(), cols.clone().map(|j| fit.beta[j]));
    let mut cov_block = DMatrix::zeros(block.dim(), block.dim());
    for (a, ja) in cols.clone().enumerate() {
        for (b, jb) in cols.clone().enumerate() {
            cov_block[(a, b)] = fit.covariance[(ja, jb)];
        }
    }
    let mut xs = Vec::with_capacity(grid_size);
    let mut effect = Vec::with_capacity(grid_size);
    let mut std_error = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let x = lo + (hi - lo) * i as f64 / (grid_size - 1) as f64;
        let row = block.basis.row(x);
        let variance = (row.transpose() * &cov_block * &row)[(0, 0)];
        xs.push(x);
        effect.push(row.dot(&beta_block));
        std_error.push(variance.max(0.0).sqrt());
    }
    Ok(PartialEffect {
        term: block.term.label(),
        xs,
        effect,
        std_error,
    })
}

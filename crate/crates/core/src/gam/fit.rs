//! Penalized iteratively reweighted least squares for the logistic additive
//! model, AIC-driven selection of the smoothing parameter, prediction, and
//! model comparison.

use nalgebra::{DMatrix, DVector};

use crate::simulate::Choice;

use super::design::DesignMatrix;
use super::{GamError, GamRow, SEPARATION_LIMIT};

const MAX_ITERATIONS: usize = 200;
const REL_TOLERANCE: f64 = 1e-8;
// Tight enough that a separated fit's coefficients (≈ 2·|ln MU_CLAMP| for a
// two-level factor) grow past the separation limit instead of stalling
// below it at the clamp equilibrium.
const MU_CLAMP: f64 = 1e-12;

/// One λ candidate evaluated during the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// λ per smooth, in smooth order.
    pub lambdas: Vec<f64>,
    pub aic: f64,
    pub edf_total: f64,
    pub deviance: f64,
}

/// A converged penalized fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GamFit {
    pub design: DesignMatrix,
    pub beta: DVector<f64>,
    /// Selected λ per smooth, labelled by the smooth name.
    pub lambdas: Vec<(String, f64)>,
    /// Effective degrees of freedom per smooth block.
    pub smooth_edf: Vec<(String, f64)>,
    pub edf_total: f64,
    /// Unpenalized binomial deviance at the fitted coefficients.
    pub deviance: f64,
    /// deviance + 2·edf_total.
    pub aic: f64,
    /// Penalized Fisher inverse (XᵀWX + S)⁻¹ at convergence.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    /// Penalized deviance after initialization and after every iteration.
    pub trace: Vec<f64>,
    /// Every λ candidate with its AIC, in search order.
    pub grid_log: Vec<GridPoint>,
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn clamped_mu(eta: f64) -> f64 {
    sigmoid(eta).clamp(MU_CLAMP, 1.0 - MU_CLAMP)
}

fn binomial_deviance(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let mut dev = 0.0;
    for i in 0..y.len() {
        let mu = clamped_mu(eta[i]);
        dev -= 2.0 * (y[i] * mu.ln() + (1.0 - y[i]) * (1.0 - mu).ln());
    }
    dev
}

/// Block-diagonal penalty for one λ vector (zeros over parametric columns).
fn penalty_matrix(design: &DesignMatrix, lambdas: &[f64]) -> DMatrix<f64> {
    let p = design.p();
    let mut s = DMatrix::zeros(p, p);
    for (block, &lambda) in design.smooth_blocks.iter().zip(lambdas) {
        let sb = &block.basis.penalty;
        for i in 0..sb.nrows() {
            for j in 0..sb.ncols() {
                s[(block.offset + i, block.offset + j)] += lambda * sb[(i, j)];
            }
        }
    }
    s
}

struct PirlsResult {
    beta: DVector<f64>,
    deviance: f64,
    iterations: usize,
    trace: Vec<f64>,
    /// XᵀWX at the converged weights.
    fisher: DMatrix<f64>,
}

/// Run PIRLS at a fixed penalty. Step-halving keeps the penalized deviance
/// non-increasing; |β| beyond the separation limit aborts with the culprit
/// column.
fn pirls(
    design: &DesignMatrix,
    s: &DMatrix<f64>,
    lambdas: &[f64],
) -> Result<PirlsResult, GamError> {
    let x = &design.x;
    let y = &design.y;
    let n = design.n();
    let p = design.p();
    let mut beta = DVector::zeros(p);
    let pen = |b: &DVector<f64>| {
        let eta = x * b;
        binomial_deviance(y, &eta) + (b.transpose() * s * b)[(0, 0)]
    };
    let mut pen_dev = pen(&beta);
    let mut trace = vec![pen_dev];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let eta = x * &beta;
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwz = DVector::zeros(p);
        for i in 0..n {
            let mu = clamped_mu(eta[i]);
            let w = mu * (1.0 - mu);
            let z = eta[i] + (y[i] - mu) / w;
            let row = x.row(i);
            for a in 0..p {
                let wa = w * row[a];
                xtwz[a] += wa * z;
                for b in a..p {
                    xtwx[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let system = &xtwx + s;
        let chol = system.cholesky().ok_or(GamError::Singular)?;
        let proposal = chol.solve(&xtwz);

        // Step-halve back toward the previous iterate until the penalized
        // deviance stops increasing.
        let mut candidate = proposal;
        let mut new_pen = pen(&candidate);
        for _ in 0..30 {
            if new_pen.is_finite() && new_pen <= pen_dev + 1e-10 {
                break;
            }
            candidate = (&candidate + &beta) * 0.5;
            new_pen = pen(&candidate);
        }
        beta = candidate;
        trace.push(new_pen);

        let (max_abs, argmax) =
            beta.iter()
                .enumerate()
                .map(|(j, b)| (b.abs(), j))
                .fold(
                    (0.0f64, 0),
                    |acc, (v, j)| if v > acc.0 { (v, j) } else { acc },
                );
        if max_abs > SEPARATION_LIMIT {
            return Err(GamError::Separation {
                column: design.col_names[argmax].clone(),
                limit: SEPARATION_LIMIT,
            });
        }

        if (pen_dev - new_pen).abs() <= REL_TOLERANCE * (new_pen.abs() + REL_TOLERANCE) {
            converged = true;
            break;
        }
        pen_dev = new_pen;
    }

    if !converged {
        return Err(GamError::NonConvergence {
            iters: iterations,
            lambdas: lambdas.to_vec(),
            trace,
        });
    }

    // Recompute the Fisher information at the converged coefficients.
    let eta = x * &beta;
    let mut fisher = DMatrix::zeros(p, p);
    for i in 0..n {
        let mu = clamped_mu(eta[i]);
        let w = mu * (1.0 - mu);
        let row = x.row(i);
        for a in 0..p {
            for b in a..p {
                fisher[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            fisher[(a, b)] = fisher[(b, a)];
        }
    }
    Ok(PirlsResult {
        deviance: binomial_deviance(y, &eta),
        beta,
        iterations,
        trace,
        fisher,
    })
}

/// Diagonal of the influence matrix (XᵀWX + S)⁻¹ XᵀWX, from which the
/// effective degrees of freedom are read per column.
fn influence_diagonal(fisher: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Vec<f64>, GamError> {
    let system = fisher + s;
    let chol = system.cholesky().ok_or(GamError::Singular)?;
    let h = chol.solve(fisher);
    Ok((0..h.nrows()).map(|j| h[(j, j)]).collect())
}

fn lambda_candidates(grid: &[f64], m: usize, per_smooth: bool) -> Vec<Vec<f64>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    if !per_smooth {
        return grid.iter().map(|&l| vec![l; m]).collect();
    }
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(out.len() * grid.len());
        for prefix in &out {
            for &l in grid {
                let mut v = prefix.clone();
                v.push(l);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Fit the model: PIRLS at every λ candidate, keep the AIC-minimizing one
/// (ties go to the earlier candidate).
pub fn fit_gam(design: &DesignMatrix) -> Result<GamFit, GamError> {
    let n = design.n();
    let p = design.p();
    if n <= p {
        return Err(GamError::TooFewRows { n, p });
    }
    let m = design.smooth_blocks.len();
    let candidates = lambda_candidates(&design.spec.lambda_grid, m, design.spec.per_smooth_grid);

    let mut grid_log = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, Vec<f64>, PirlsResult, Vec<f64>)> = None;
    for lambdas in candidates {
        let s = penalty_matrix(design, &lambdas);
        let result = pirls(design, &s, &lambdas)?;
        let diag = influence_diagonal(&result.fisher, &s)?;
        let edf_total: f64 = diag.iter().sum();
        let aic = result.deviance + 2.0 * edf_total;
        grid_log.push(GridPoint {
            lambdas: lambdas.clone(),
            aic,
            edf_total,
            deviance: result.deviance,
        });
        let replace = match &best {
            None => true,
            Some((best_aic, ..)) => aic < *best_aic,
        };
        if replace {
            best = Some((aic, lambdas, result, diag));
        }
    }
    let (aic, lambdas, result, diag) = best.expect("grid is non-empty");

    let s = penalty_matrix(design, &lambdas);
    let system = &result.fisher + &s;
    let covariance = system.cholesky().ok_or(GamError::Singular)?.inverse();

    let smooth_edf: Vec<(String, f64)> = design
        .smooth_blocks
        .iter()
        .map(|block| {
            (
                block.term.label(),
                block.columns().map(|j| diag[j]).sum::<f64>(),
            )
        })
        .collect();
    let edf_total: f64 = diag.iter().sum();

    Ok(GamFit {
        design: design.clone(),
        beta: result.beta,
        lambdas: design
            .smooth_blocks
            .iter()
            .zip(&lambdas)
            .map(|(block, &l)| (block.term.label(), l))
            .collect(),
        smooth_edf,
        edf_total,
        deviance: result.deviance,
        aic,
        covariance,
        iterations: result.iterations,
        trace: result.trace,
        grid_log,
    })
}

/// Inverse-logit of the linear predictor for each row; smooth covariates
/// outside the training range are extended linearly.
pub fn predict_prob(fit: &GamFit, rows: &[GamRow]) -> Result<Vec<f64>, GamError> {
    rows.iter()
        .map(|row| {
            let x = fit.design.row_for(row)?;
            Ok(sigmoid(x.dot(&fit.beta)))
        })
        .collect()
}

/// Threshold at 1/2; exactly 1/2 counts as the predicted image.
pub fn predict_choice(fit: &GamFit, rows: &[GamRow]) -> Result<Vec<Choice>, GamError> {
    Ok(predict_prob(fit, rows)?
        .into_iter()
        .map(|p| {
            if p >= 0.5 {
                Choice::Predicted
            } else {
                Choice::Random
            }
        })
        .collect())
}

/// One line of the model-comparison ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct AicRow {
    pub label: String,
    pub aic: f64,
    /// AIC distance from the best model.
    pub delta: f64,
    pub edf_total: f64,
    pub deviance: f64,
}

/// Rank fits of the same response vector by ascending AIC; equal AICs keep
/// their input order.
pub fn compare_aic(fits: &[(&str, &GamFit)]) -> Result<Vec<AicRow>, GamError> {
    if fits.len() < 2 {
        return Err(GamError::TooFewFits { n: fits.len() });
    }
    let reference = &fits[0].1.design.y;
    for (_, fit) in &fits[1..] {
        if fit.design.y != *reference {
            return Err(GamError::ResponseMismatch);
        }
    }
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| {
        fits[a]
            .1
            .aic
            .partial_cmp(&fits[b].1.aic)
            .expect("finite AIC")
    });
    let best = fits[order[0]].1.aic;
    Ok(order
        .into_iter()
        .map(|i| {
            let (label, fit) = fits[i];
            AicRow {
                label: label.to_string(),
                aic: fit.aic,
                delta: fit.aic - best,
                edf_total: fit.edf_total,
                deviance: fit.deviance,
            }
        })
        .collect())
}

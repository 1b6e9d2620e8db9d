use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use lexiground_core::fmt::sig6;
use lexiground_core::gam::{
    build_design, compare_aic, fit_gam, partial_effects, predict_choice, summarize, summary_csv,
    GamFit, GamRow, GamSpec,
};
use lexiground_core::simulate::{
    accuracy_reports_csv, evaluate_trials, load_trials, AccuracyReport, Cell, Choice, ResponseSet,
    TrialRow,
};
use serde::Serialize;

use super::{load_images, load_spaces, provenance, to_json};
use crate::config::RunConfig;
use crate::error::{runtime, validation, CliError};
use crate::output::OutputSet;
use crate::svg::partial_effect_svg;

#[derive(Serialize)]
struct LambdaJson {
    term: String,
    lambda: f64,
}

#[derive(Serialize)]
struct EdfJson {
    term: String,
    edf: f64,
}

#[derive(Serialize)]
struct GridJson {
    lambdas: Vec<f64>,
    aic: f64,
    edf_total: f64,
    deviance: f64,
}

#[derive(Serialize)]
struct FitJson {
    config_hash: String,
    seed: u64,
    space: String,
    responses: usize,
    /// Responses dropped because their trial was excluded in some space.
    responses_dropped: usize,
    lambdas: Vec<LambdaJson>,
    smooth_edf: Vec<EdfJson>,
    edf_total: f64,
    deviance: f64,
    aic: f64,
    iterations: usize,
    grid: Vec<GridJson>,
}

/// Fit the penalized logistic additive model of participant choices in each
/// selected space and write coefficient summaries, partial-effect curves,
/// and (with both spaces) the AIC comparison.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_out_dir()?;
    let trials_path = cfg.require_path("trials")?;
    let responses_path = cfg.require_path("responses")?;
    let spec = match cfg.optional_path("gam_spec")? {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|err| validation(format!("cannot read {}: {err}", path.display())))?;
            GamSpec::from_key_values(&text).map_err(validation)?
        }
        None => GamSpec::full(),
    };
    let images = load_images(cfg)?;
    let trials = load_trials(trials_path).map_err(runtime)?;
    let spaces = load_spaces(cfg)?;

    let known_trials: BTreeSet<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
    let responses =
        ResponseSet::load_csv(responses_path, cfg.setup, &known_trials).map_err(runtime)?;

    // Evaluate each space, then keep only trials that survived in every
    // space: the fits being compared must model the same response vector.
    let mut evals = Vec::new();
    let mut shared: Option<BTreeSet<String>> = None;
    for (name, space) in &spaces {
        let eval = evaluate_trials(&trials, space, &images, cfg.include_catch).map_err(runtime)?;
        let ids: BTreeSet<String> = eval.rows.iter().map(|r| r.trial_id.clone()).collect();
        shared = Some(match shared {
            None => ids,
            Some(acc) => acc.intersection(&ids).cloned().collect(),
        });
        evals.push((name.clone(), eval));
    }
    let shared = shared.expect("at least one space");
    let (kept, dropped) = responses.retain_trials(&shared);
    if kept.rows.is_empty() {
        return Err(CliError::Runtime(
            "no responses left after dropping excluded trials".to_string(),
        ));
    }

    let hash = cfg.config_hash();
    let head = provenance(&hash, cfg.seed);
    let mut out = OutputSet::new(&cfg.out_dir);
    let mut fits: Vec<(String, GamFit)> = Vec::new();
    let mut accuracy_reports = Vec::new();

    for (name, eval) in &evals {
        let by_trial: BTreeMap<&str, &TrialRow> =
            eval.rows.iter().map(|r| (r.trial_id.as_str(), r)).collect();
        let gam_rows: Vec<GamRow> = kept
            .rows
            .iter()
            .map(|resp| {
                let row = by_trial[resp.trial_id.as_str()];
                GamRow {
                    word_type: row.word_type,
                    distance: row.distance,
                    measures: row.measures,
                    y: resp.choice == Choice::Predicted,
                }
            })
            .collect();

        let design = build_design(&gam_rows, &spec).map_err(runtime)?;
        let fit = fit_gam(&design).map_err(runtime)?;
        let summary = summarize(&fit);
        out.add(
            &format!("gam_summary_{name}.csv"),
            format!("{head}{}", summary_csv(&summary)),
        );

        for block in &fit.design.smooth_blocks {
            let effect = partial_effects(&fit, block.term.covariate(), 100).map_err(runtime)?;
            out.add(
                &format!("partial_{}_{name}.csv", block.term.covariate()),
                format!("{head}{}", effect.to_csv()),
            );
            out.add(
                &format!("partial_{}_{name}.svg", block.term.covariate()),
                partial_effect_svg(&effect, &hash, cfg.seed),
            );
        }

        let report = FitJson {
            config_hash: hash.clone(),
            seed: cfg.seed,
            space: name.clone(),
            responses: gam_rows.len(),
            responses_dropped: dropped.len(),
            lambdas: fit
                .lambdas
                .iter()
                .map(|(term, lambda)| LambdaJson {
                    term: term.clone(),
                    lambda: *lambda,
                })
                .collect(),
            smooth_edf: fit
                .smooth_edf
                .iter()
                .map(|(term, edf)| EdfJson {
                    term: term.clone(),
                    edf: *edf,
                })
                .collect(),
            edf_total: fit.edf_total,
            deviance: fit.deviance,
            aic: fit.aic,
            iterations: fit.iterations,
            grid: fit
                .grid_log
                .iter()
                .map(|point| GridJson {
                    lambdas: point.lambdas.clone(),
                    aic: point.aic,
                    edf_total: point.edf_total,
                    deviance: point.deviance,
                })
                .collect(),
        };
        out.add(&format!("gam_fit_{name}.json"), to_json(&report)?);

        accuracy_reports.push(model_accuracy(name, &fit, &gam_rows)?);
        fits.push((name.clone(), fit));
    }

    out.add(
        "gam_accuracy.csv",
        format!("{head}{}", accuracy_reports_csv(&accuracy_reports)),
    );

    if fits.len() == 2 {
        let pairs: Vec<(&str, &GamFit)> = fits.iter().map(|(n, f)| (n.as_str(), f)).collect();
        let ranking = compare_aic(&pairs).map_err(runtime)?;
        let mut csv = format!("{head}row,aic,delta_aic,edf,deviance\n");
        for row in &ranking {
            use std::fmt::Write as _;
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                row.label,
                sig6(row.aic),
                sig6(row.delta),
                sig6(row.edf_total),
                sig6(row.deviance)
            );
        }
        out.add("aic_comparison.csv", csv);
    }

    out.flush()
}

/// Per-cell percentage of responses the fitted model reproduces.
fn model_accuracy(space: &str, fit: &GamFit, rows: &[GamRow]) -> Result<AccuracyReport, CliError> {
    let choices = predict_choice(fit, rows).map_err(runtime)?;
    let mut matches = [0usize; 5];
    let mut total = [0usize; 5];
    for (row, choice) in rows.iter().zip(&choices) {
        let cell = Cell::from_factors(row.word_type, row.distance)
            .expect("trial factors form a valid cell");
        let idx = cell.index();
        total[idx] += 1;
        if (*choice == Choice::Predicted) == row.y {
            matches[idx] += 1;
        }
    }
    let mut cells = [0.0; 5];
    for (idx, cell) in Cell::ALL.iter().enumerate() {
        if total[idx] == 0 {
            return Err(CliError::Runtime(format!(
                "no responses in condition cell {cell}"
            )));
        }
        cells[idx] = 100.0 * matches[idx] as f64 / total[idx] as f64;
    }
    Ok(AccuracyReport::from_cell_percentages(
        &format!("GAM: {space}"),
        cells,
    ))
}

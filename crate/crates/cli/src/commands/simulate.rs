use std::collections::BTreeSet;

use lexiground_core::fmt::dec2;
use lexiground_core::simulate::{
    above_chance_check, accuracy_reports_csv, accuracy_vs_participants, condition_reports_csv,
    evaluate_trials, exclusions_csv, load_trials, measures_csv, report_from_rows, AccuracyReport,
    Cell, ResponseSet, TrialEvaluation,
};
use lexiground_core::stats::sign_test;
use serde::Serialize;

use super::{load_images, load_spaces, provenance, to_json, TestJson};
use crate::config::RunConfig;
use crate::error::{runtime, CliError};
use crate::output::OutputSet;

#[derive(Serialize)]
struct SpaceSummary {
    space: String,
    trials_evaluated: usize,
    excluded: usize,
    tie_trials: Vec<String>,
    cells: [f64; 5],
    mean: f64,
    delta: f64,
    above_chance: TestJson,
    accuracy_cells: Option<[f64; 5]>,
    accuracy_mean: Option<f64>,
    /// Responses dropped because their trial did not survive evaluation.
    responses_dropped: Option<usize>,
}

#[derive(Serialize)]
struct ComparisonRow {
    comparison: &'static str,
    cell: String,
    textual: f64,
    grounded: f64,
    winner: &'static str,
}

#[derive(Serialize)]
struct ComparisonSummary {
    rows: Vec<ComparisonRow>,
    grounded_wins: u64,
    ties: u64,
    n: u64,
    sign_test: Option<TestJson>,
}

#[derive(Serialize)]
struct SimulateSummary {
    config_hash: String,
    seed: u64,
    setup: String,
    include_catch: bool,
    participant_cells: [f64; 5],
    participant_mean: f64,
    spaces: Vec<SpaceSummary>,
    comparison: Option<ComparisonSummary>,
}

/// Evaluate the trial list in each selected space, aggregate the virtual
/// participant against the human condition means, and (with responses) score
/// per-response accuracy. With both spaces, also compare them cell by cell
/// under a paired sign test.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_out_dir()?;
    let trials_path = cfg.require_path("trials")?;
    let responses_path = cfg.optional_path("responses")?;
    let cells = cfg.require_cells()?;
    let images = load_images(cfg)?;
    let trials = load_trials(trials_path).map_err(runtime)?;
    let spaces = load_spaces(cfg)?;

    let known_trials: BTreeSet<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
    let responses = responses_path
        .map(|p| ResponseSet::load_csv(p, cfg.setup, &known_trials).map_err(runtime))
        .transpose()?;

    let hash = cfg.config_hash();
    let head = provenance(&hash, cfg.seed);
    let mut out = OutputSet::new(&cfg.out_dir);

    let mut evals: Vec<(String, TrialEvaluation)> = Vec::new();
    let mut reports = Vec::new();
    let mut accuracy_reports: Vec<AccuracyReport> = Vec::new();
    let mut space_summaries = Vec::new();

    for (name, space) in &spaces {
        let eval = evaluate_trials(&trials, space, &images, cfg.include_catch).map_err(runtime)?;
        out.add(
            &format!("measures_{name}.csv"),
            format!("{head}{}", measures_csv(&eval.rows)),
        );
        out.add(
            &format!("exclusions_{name}.csv"),
            format!("{head}{}", exclusions_csv(&eval.exclusions)),
        );
        let report =
            report_from_rows(&format!("Max: {name}"), &eval.rows, cells).map_err(runtime)?;
        let chance = above_chance_check(&eval.rows).map_err(runtime)?;

        let mut accuracy_cells = None;
        let mut accuracy_mean = None;
        let mut responses_dropped = None;
        if let Some(responses) = &responses {
            let surviving: BTreeSet<String> =
                eval.rows.iter().map(|r| r.trial_id.clone()).collect();
            let (kept, dropped) = responses.retain_trials(&surviving);
            let accuracy = accuracy_vs_participants(&format!("Max: {name}"), &eval.rows, &kept)
                .map_err(runtime)?;
            accuracy_cells = Some(accuracy.cells);
            accuracy_mean = Some(accuracy.mean);
            responses_dropped = Some(dropped.len());
            accuracy_reports.push(accuracy);
        }

        space_summaries.push(SpaceSummary {
            space: name.clone(),
            trials_evaluated: eval.rows.len(),
            excluded: eval.exclusions.len(),
            tie_trials: eval.ties.clone(),
            cells: report.cells,
            mean: report.mean,
            delta: report.delta,
            above_chance: TestJson::from_test(&chance.test),
            accuracy_cells,
            accuracy_mean,
            responses_dropped,
        });
        reports.push(report);
        evals.push((name.clone(), eval));
    }

    out.add(
        "condition_report.csv",
        format!("{head}{}", condition_reports_csv(&reports)),
    );
    if !accuracy_reports.is_empty() {
        out.add(
            "accuracy.csv",
            format!("{head}{}", accuracy_reports_csv(&accuracy_reports)),
        );
    }

    let comparison = if spaces.len() == 2 {
        let cmp = compare_spaces(&reports, &accuracy_reports)?;
        out.add("comparison.csv", comparison_csv(&head, &cmp));
        Some(cmp)
    } else {
        None
    };

    let summary = SimulateSummary {
        config_hash: hash.clone(),
        seed: cfg.seed,
        setup: cfg.setup.to_string(),
        include_catch: cfg.include_catch,
        participant_cells: cells,
        participant_mean: reports[0].participant_mean,
        spaces: space_summaries,
        comparison,
    };
    out.add("summary.json", to_json(&summary)?);
    out.flush()
}

/// Cell-by-cell pairing of the two spaces: closeness to the participant
/// percentage in every condition cell, plus response accuracy when present.
/// Wins are counted for the grounded space and tied cells drop out of the
/// sign test.
fn compare_spaces(
    reports: &[lexiground_core::simulate::ConditionReport],
    accuracy: &[AccuracyReport],
) -> Result<ComparisonSummary, CliError> {
    let (textual, grounded) = (&reports[0], &reports[1]);
    let mut rows = Vec::new();
    for (idx, cell) in Cell::ALL.iter().enumerate() {
        let t = (textual.cells[idx] - textual.participant_cells[idx]).abs();
        let g = (grounded.cells[idx] - grounded.participant_cells[idx]).abs();
        rows.push(ComparisonRow {
            comparison: "closeness",
            cell: cell.to_string(),
            textual: t,
            grounded: g,
            winner: winner_of(t, g, false),
        });
    }
    if accuracy.len() == 2 {
        let (t_acc, g_acc) = (&accuracy[0], &accuracy[1]);
        for (idx, cell) in Cell::ALL.iter().enumerate() {
            rows.push(ComparisonRow {
                comparison: "accuracy",
                cell: cell.to_string(),
                textual: t_acc.cells[idx],
                grounded: g_acc.cells[idx],
                winner: winner_of(t_acc.cells[idx], g_acc.cells[idx], true),
            });
        }
    }
    let grounded_wins = rows.iter().filter(|r| r.winner == "grounded").count() as u64;
    let ties = rows.iter().filter(|r| r.winner == "tie").count() as u64;
    let n = rows.len() as u64 - ties;
    let sign = if n > 0 {
        Some(TestJson::from_test(
            &sign_test(grounded_wins, n).map_err(runtime)?,
        ))
    } else {
        None
    };
    Ok(ComparisonSummary {
        rows,
        grounded_wins,
        ties,
        n,
        sign_test: sign,
    })
}

fn winner_of(textual: f64, grounded: f64, higher_is_better: bool) -> &'static str {
    if textual == grounded {
        "tie"
    } else if (grounded > textual) == higher_is_better {
        "grounded"
    } else {
        "textual"
    }
}

fn comparison_csv(head: &str, cmp: &ComparisonSummary) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(head);
    out.push_str("comparison,cell,textual,grounded,winner\n");
    for row in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.comparison,
            row.cell,
            dec2(row.textual),
            dec2(row.grounded),
            row.winner
        );
    }
    out
}

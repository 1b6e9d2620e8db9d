use lexiground_core::crossmodal::{
    build_prototypes, default_lambda, exemplar_rows, fit_linear_map, gram_condition,
    prototype_rows, residual_frobenius, ClassMembership, MapMode,
};
use lexiground_core::simulate::Setup;
use serde::Serialize;

use super::{load_images, load_spaces, to_json};
use crate::config::RunConfig;
use crate::error::{runtime, CliError};
use crate::output::OutputSet;

#[derive(Serialize)]
struct TrainMapReport {
    config_hash: String,
    seed: u64,
    space: String,
    setup: String,
    lambda: f64,
    rows: usize,
    skipped_words: Vec<String>,
    d_in: usize,
    d_out: usize,
    /// Condition number of the Gram matrix; absent when it overflows.
    condition_number: Option<f64>,
    residual_frobenius: f64,
    residual_rms: f64,
}

/// Fit the text-to-image linear map for each selected space and write the
/// map plus a fit report.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_out_dir()?;
    let membership_path = cfg.require_path("membership")?;
    let images = load_images(cfg)?;
    let membership = ClassMembership::load_csv(membership_path).map_err(runtime)?;
    let spaces = load_spaces(cfg)?;

    let hash = cfg.config_hash();
    let mut out = OutputSet::new(&cfg.out_dir);
    for (name, space) in &spaces {
        let rows = match cfg.setup {
            Setup::Prototype => {
                let protos = build_prototypes(&images, &membership).map_err(runtime)?;
                prototype_rows(space, &protos).map_err(runtime)?
            }
            Setup::Exemplar => exemplar_rows(space, &images, &membership).map_err(runtime)?,
        };
        let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(&rows.t));
        let mode = match cfg.setup {
            Setup::Prototype => MapMode::Prototype,
            Setup::Exemplar => MapMode::Exemplar,
        };
        let map = fit_linear_map(&rows.t, &rows.v, lambda, mode).map_err(runtime)?;
        let cond = gram_condition(&rows.t);
        let resid = residual_frobenius(&map, &rows.t, &rows.v).map_err(runtime)?;
        let n_rows = rows.t.nrows();
        let report = TrainMapReport {
            config_hash: hash.clone(),
            seed: cfg.seed,
            space: name.clone(),
            setup: cfg.setup.to_string(),
            lambda,
            rows: n_rows,
            skipped_words: rows.skipped_words.clone(),
            d_in: map.d_in(),
            d_out: map.d_out(),
            condition_number: cond.is_finite().then_some(cond),
            residual_frobenius: resid,
            residual_rms: resid / ((n_rows * map.d_out()) as f64).sqrt(),
        };
        out.add(&format!("map_{}_{}.txt", cfg.setup, name), map.to_text());
        out.add(
            &format!("train_map_report_{}_{}.json", cfg.setup, name),
            to_json(&report)?,
        );
    }
    out.flush()
}

use lexiground_core::embeddings::EmbeddingSpace;
use lexiground_core::zsg::{ground, train_alignment, CaptionCorpus, EncoderConfig, Split};
use serde::Serialize;

use super::{load_images, provenance, to_json};
use crate::config::RunConfig;
use crate::error::{runtime, CliError};
use crate::output::OutputSet;

#[derive(Serialize)]
struct GroundReport {
    config_hash: String,
    seed: u64,
    encoder: String,
    hidden_dim: usize,
    epochs_requested: usize,
    epochs_run: usize,
    best_epoch: usize,
    stopped_early: bool,
    train_samples: usize,
    val_samples: usize,
    d_text: usize,
    d_grounded: usize,
    /// Validation MSE before any training; absent on a zero-epoch run.
    initial_val_mse: Option<f64>,
    /// Validation MSE at the kept epoch; absent on a zero-epoch run.
    best_val_mse: Option<f64>,
}

/// Train the caption alignment on the textual space and write the grounded
/// vocabulary, the alignment map, and the per-epoch training log.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_out_dir()?;
    let embeddings_path = cfg.require_path("embeddings")?;
    let train_path = cfg.require_path("captions_train")?;
    let val_path = cfg.require_path("captions_val")?;
    let images = load_images(cfg)?;
    let space = EmbeddingSpace::load(embeddings_path, None)
        .map_err(runtime)?
        .with_name("textual");
    let train =
        CaptionCorpus::load_tsv(train_path, Split::Train, &space, &images).map_err(runtime)?;
    let val =
        CaptionCorpus::load_tsv(val_path, Split::Validation, &space, &images).map_err(runtime)?;

    let enc = EncoderConfig {
        encoder_kind: cfg.encoder,
        hidden_dim: cfg.hidden_dim,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        early_stop_patience: cfg.patience,
        grounded_dim: cfg.grounded_dim,
    };
    let (map, log) = train_alignment(&space, &train, &val, &images, &enc).map_err(runtime)?;
    let grounded = ground(&space, &map).map_err(runtime)?;

    let hash = cfg.config_hash();
    let report = GroundReport {
        config_hash: hash.clone(),
        seed: cfg.seed,
        encoder: cfg.encoder.to_string(),
        hidden_dim: cfg.hidden_dim,
        epochs_requested: cfg.epochs,
        epochs_run: log.rows.len().saturating_sub(1),
        best_epoch: log.best_epoch,
        stopped_early: log.stopped_early,
        train_samples: train.len(),
        val_samples: val.len(),
        d_text: space.dim(),
        d_grounded: grounded.dim(),
        initial_val_mse: log.rows.first().map(|r| r.val_mse),
        best_val_mse: log.rows.get(log.best_epoch).map(|r| r.val_mse),
    };

    let mut out = OutputSet::new(&cfg.out_dir);
    out.add("grounded_embeddings.txt", grounded.to_text());
    out.add("alignment_map.txt", map.to_text());
    out.add(
        "training_log.csv",
        format!("{}{}", provenance(&hash, cfg.seed), log.to_csv()),
    );
    out.add("ground_report.json", to_json(&report)?);
    out.flush()
}

//! Zero-shot grounding: train a linear alignment M by regressing encoded
//! captions onto image vectors, then ground a whole vocabulary as `g = t·M`.
//!
//! The caption encoder (mean-pool or a single-layer gated recurrent network)
//! is training scaffolding: after training only M survives, and grounding a
//! word never requires captions. Training is plain mini-batch SGD on mean
//! squared error, single-threaded, and bit-reproducible for a fixed seed.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crossmodal::{
    default_lambda, fit_linear_map, CrossModalError, LinearMap, MapMeta, MapMode,
};
use crate::embeddings::{EmbeddingError, EmbeddingSpace, ImageVectorStore};

#[derive(Debug, Error)]
pub enum ZsgError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    BadCaptionLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{split} caption corpus is empty")]
    EmptyCorpus { split: Split },
    #[error("caption for image {image_id:?} has no in-vocabulary token")]
    AllTokensOov { image_id: String },
    #[error("caption references unknown image id {image_id:?}")]
    UnknownImage { image_id: String },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(
        "mean-pool encoder needs grounded dimension {grounded} to equal the image dimension \
         {image}; set grounded_dim accordingly or use the gated-recurrent encoder"
    )]
    MeanPoolDimension { grounded: usize, image: usize },
    #[error("bad encoder config: {reason}")]
    BadConfig { reason: String },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    CrossModal(#[from] CrossModalError),
}

/// Which corpus a caption set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
        })
    }
}

/// One image paired with one tokenized caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionSample {
    pub image_id: String,
    pub tokens: Vec<String>,
}

/// Caption corpus validated against an image store and a vocabulary: every
/// image id resolves, and every caption keeps at least one in-vocabulary
/// token.
#[derive(Debug, Clone)]
pub struct CaptionCorpus {
    samples: Vec<CaptionSample>,
    split: Split,
}

impl CaptionCorpus {
    pub fn new(
        samples: Vec<CaptionSample>,
        split: Split,
        space: &EmbeddingSpace,
        images: &ImageVectorStore,
    ) -> Result<Self, ZsgError> {
        if samples.is_empty() {
            return Err(ZsgError::EmptyCorpus { split });
        }
        for sample in &samples {
            if !images.contains(&sample.image_id) {
                return Err(ZsgError::UnknownImage {
                    image_id: sample.image_id.clone(),
                });
            }
            if !sample.tokens.iter().any(|t| space.contains(t)) {
                return Err(ZsgError::AllTokensOov {
                    image_id: sample.image_id.clone(),
                });
            }
        }
        Ok(Self { samples, split })
    }

    /// Load a TSV file with lines `image_id<TAB>caption text`, caption
    /// tokenized on whitespace.
    pub fn load_tsv(
        path: &Path,
        split: Split,
        space: &EmbeddingSpace,
        images: &ImageVectorStore,
    ) -> Result<Self, ZsgError> {
        let path_str = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ZsgError::Io {
            path: path_str.clone(),
            source,
        })?;
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let Some((image_id, caption)) = raw.split_once('\t') else {
                return Err(ZsgError::BadCaptionLine {
                    path: path_str.clone(),
                    line,
                    reason: "expected `image_id<TAB>caption text`".to_string(),
                });
            };
            let image_id = image_id.trim();
            let tokens: Vec<String> = caption.split_whitespace().map(str::to_string).collect();
            if image_id.is_empty() || tokens.is_empty() {
                return Err(ZsgError::BadCaptionLine {
                    path: path_str.clone(),
                    line,
                    reason: "empty image id or caption".to_string(),
                });
            }
            samples.push(CaptionSample {
                image_id: image_id.to_string(),
                tokens,
            });
        }
        Self::new(samples, split, space, images)
    }

    pub fn samples(&self) -> &[CaptionSample] {
        &self.samples
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Caption encoder architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    MeanPool,
    GatedRecurrent,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::MeanPool => "mean-pool",
            EncoderKind::GatedRecurrent => "gated-recurrent",
        })
    }
}

/// Hyperparameters for alignment training. `grounded_dim` is the output
/// dimension of M; it defaults to the textual dimension (square M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub encoder_kind: EncoderKind,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping.
    pub early_stop_patience: usize,
    pub grounded_dim: Option<usize>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            encoder_kind: EncoderKind::MeanPool,
            hidden_dim: 16,
            epochs: 50,
            batch_size: 8,
            learning_rate: 0.05,
            seed: 7,
            early_stop_patience: 0,
            grounded_dim: None,
        }
    }
}

impl EncoderConfig {
    fn validate(&self) -> Result<(), ZsgError> {
        let bad = |reason: &str| {
            Err(ZsgError::BadConfig {
                reason: reason.to_string(),
            })
        };
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if self.grounded_dim == Some(0) {
            return bad("grounded_dim must be positive");
        }
        Ok(())
    }
}

/// Single-layer gated recurrent encoder plus a linear readout into image
/// space. The readout exists only so the hidden state can be trained against
/// image vectors; [`encode_caption`] returns the hidden state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GruEncoder {
    // Update gate, reset gate, candidate: input (h×d_g), recurrent (h×h),
    // bias (h×1).
    wz: DMatrix<f64>,
    uz: DMatrix<f64>,
    bz: DMatrix<f64>,
    wr: DMatrix<f64>,
    ur: DMatrix<f64>,
    br: DMatrix<f64>,
    wh: DMatrix<f64>,
    uh: DMatrix<f64>,
    bh: DMatrix<f64>,
    // Readout into image space: (d_img×h), (d_img×1).
    wo: DMatrix<f64>,
    bo: DMatrix<f64>,
}

impl GruEncoder {
    /// Seeded uniform init: weights in ±1/√fan_in, biases zero.
    fn init(d_g: usize, hidden: usize, d_img: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
        };
        Self {
            wz: uniform(hidden, d_g, d_g),
            uz: uniform(hidden, hidden, hidden),
            bz: DMatrix::zeros(hidden, 1),
            wr: uniform(hidden, d_g, d_g),
            ur: uniform(hidden, hidden, hidden),
            br: DMatrix::zeros(hidden, 1),
            wh: uniform(hidden, d_g, d_g),
            uh: uniform(hidden, hidden, hidden),
            bh: DMatrix::zeros(hidden, 1),
            wo: uniform(d_img, hidden, hidden),
            bo: DMatrix::zeros(d_img, 1),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            wz: DMatrix::zeros(self.wz.nrows(), self.wz.ncols()),
            uz: DMatrix::zeros(self.uz.nrows(), self.uz.ncols()),
            bz: DMatrix::zeros(self.bz.nrows(), self.bz.ncols()),
            wr: DMatrix::zeros(self.wr.nrows(), self.wr.ncols()),
            ur: DMatrix::zeros(self.ur.nrows(), self.ur.ncols()),
            br: DMatrix::zeros(self.br.nrows(), self.br.ncols()),
            wh: DMatrix::zeros(self.wh.nrows(), self.wh.ncols()),
            uh: DMatrix::zeros(self.uh.nrows(), self.uh.ncols()),
            bh: DMatrix::zeros(self.bh.nrows(), self.bh.ncols()),
            wo: DMatrix::zeros(self.wo.nrows(), self.wo.ncols()),
            bo: DMatrix::zeros(self.bo.nrows(), self.bo.ncols()),
        }
    }

    fn fields_mut(&mut self) -> [&mut DMatrix<f64>; 11] {
        [
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wh,
            &mut self.uh,
            &mut self.bh,
            &mut self.wo,
            &mut self.bo,
        ]
    }

    fn fields(&self) -> [&DMatrix<f64>; 11] {
        [
            &self.wz, &self.uz, &self.bz, &self.wr, &self.ur, &self.br, &self.wh, &self.uh,
            &self.bh, &self.wo, &self.bo,
        ]
    }

    fn hidden_dim(&self) -> usize {
        self.uz.nrows()
    }

    /// Run the recurrent pass, keeping per-step caches for backprop.
    fn forward(&self, xs: &[DVector<f64>]) -> GruTrace {
        let h_dim = self.hidden_dim();
        let mut h = DVector::zeros(h_dim);
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let z = (&self.wz * x + &self.uz * &h + self.bz.column(0)).map(sigmoid);
            let r = (&self.wr * x + &self.ur * &h + self.br.column(0)).map(sigmoid);
            let rh = r.component_mul(&h);
            let cand = (&self.wh * x + &self.uh * &rh + self.bh.column(0)).map(f64::tanh);
            let h_new = h.component_mul(&z.map(|v| 1.0 - v)) + cand.component_mul(&z);
            steps.push(GruStep {
                h_prev: h,
                z,
                r,
                cand,
            });
            h = h_new;
        }
        GruTrace { steps, h_last: h }
    }

    /// Readout prediction in image space for a completed pass.
    fn predict(&self, trace: &GruTrace) -> DVector<f64> {
        &self.wo * &trace.h_last + self.bo.column(0)
    }

    /// Backpropagate `d_pred` (gradient of the loss w.r.t. the readout
    /// prediction) through the readout and the recurrent pass. Returns
    /// parameter gradients and per-step input gradients dL/dx_t.
    fn backward(
        &self,
        xs: &[DVector<f64>],
        trace: &GruTrace,
        d_pred: &DVector<f64>,
    ) -> (GruEncoder, Vec<DVector<f64>>) {
        let mut grads = self.zeros_like();
        grads.wo = d_pred * trace.h_last.transpose();
        grads.bo = DMatrix::from_column_slice(d_pred.len(), 1, d_pred.as_slice());
        let mut dh = self.wo.transpose() * d_pred;
        let mut dxs = vec![DVector::zeros(0); xs.len()];
        for (t, step) in trace.steps.iter().enumerate().rev() {
            let h_next_minus_prev = &step.cand - &step.h_prev;
            // h_t = (1−z)⊙h_prev + z⊙cand
            let dz_pre = dh
                .component_mul(&h_next_minus_prev)
                .component_mul(&step.z)
                .component_mul(&step.z.map(|v| 1.0 - v));
            let dcand_pre = dh
                .component_mul(&step.z)
                .component_mul(&step.cand.map(|v| 1.0 - v * v));
            let mut dh_prev = dh.component_mul(&step.z.map(|v| 1.0 - v));

            let rh = step.r.component_mul(&step.h_prev);
            grads.wh += &dcand_pre * xs[t].transpose();
            grads.uh += &dcand_pre * rh.transpose();
            grads.bh += DMatrix::from_column_slice(dcand_pre.len(), 1, dcand_pre.as_slice());
            let drh = self.uh.transpose() * &dcand_pre;
            let dr_pre = drh
                .component_mul(&step.h_prev)
                .component_mul(&step.r)
                .component_mul(&step.r.map(|v| 1.0 - v));
            dh_prev += drh.component_mul(&step.r);

            grads.wr += &dr_pre * xs[t].transpose();
            grads.ur += &dr_pre * step.h_prev.transpose();
            grads.br += DMatrix::from_column_slice(dr_pre.len(), 1, dr_pre.as_slice());
            dh_prev += self.ur.transpose() * &dr_pre;

            grads.wz += &dz_pre * xs[t].transpose();
            grads.uz += &dz_pre * step.h_prev.transpose();
            grads.bz += DMatrix::from_column_slice(dz_pre.len(), 1, dz_pre.as_slice());
            dh_prev += self.uz.transpose() * &dz_pre;

            dxs[t] = self.wz.transpose() * &dz_pre
                + self.wr.transpose() * &dr_pre
                + self.wh.transpose() * &dcand_pre;
            dh = dh_prev;
        }
        (grads, dxs)
    }
}

struct GruStep {
    h_prev: DVector<f64>,
    z: DVector<f64>,
    r: DVector<f64>,
    cand: DVector<f64>,
}

struct GruTrace {
    steps: Vec<GruStep>,
    h_last: DVector<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A caption encoder: either parameter-free mean pooling or a trained gated
/// recurrent network.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    MeanPool,
    GatedRecurrent(Box<GruEncoder>),
}

impl Encoder {
    pub fn mean_pool() -> Self {
        Encoder::MeanPool
    }

    /// Freshly initialized gated recurrent encoder with the given shapes.
    pub fn gated_recurrent(d_in: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Encoder::GatedRecurrent(Box::new(GruEncoder::init(
            d_in, hidden_dim, output_dim, &mut rng,
        )))
    }
}

/// Encode one caption: map each in-vocabulary token through M, then pool.
/// Mean-pool returns the arithmetic mean of the mapped vectors; the gated
/// recurrent encoder returns its final hidden state.
pub fn encode_caption(
    map: &LinearMap,
    space: &EmbeddingSpace,
    caption: &[String],
    encoder: &Encoder,
) -> Result<Vec<f64>, ZsgError> {
    if space.dim() != map.d_in() {
        return Err(ZsgError::DimensionMismatch {
            what: "embedding dimension",
            expected: map.d_in(),
            found: space.dim(),
        });
    }
    let mapped: Vec<DVector<f64>> = caption
        .iter()
        .filter_map(|tok| space.vector(tok))
        .map(|t| DVector::from_vec(map.apply(t).expect("dimension checked above")))
        .collect();
    if mapped.is_empty() {
        return Err(ZsgError::AllTokensOov {
            image_id: caption.join(" "),
        });
    }
    match encoder {
        Encoder::MeanPool => {
            let mut mean = DVector::zeros(map.d_out());
            for x in &mapped {
                mean += x;
            }
            mean /= mapped.len() as f64;
            Ok(mean.as_slice().to_vec())
        }
        Encoder::GatedRecurrent(gru) => {
            if gru.wz.ncols() != map.d_out() {
                return Err(ZsgError::DimensionMismatch {
                    what: "encoder input dimension",
                    expected: gru.wz.ncols(),
                    found: map.d_out(),
                });
            }
            let trace = gru.forward(&mapped);
            Ok(trace.h_last.as_slice().to_vec())
        }
    }
}

/// One epoch's mean squared errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Per-epoch training record. Epoch 0 is the pre-training evaluation of the
/// initialized parameters; the log is empty when training ran zero epochs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub rows: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{}", row.epoch, row.train_mse, row.val_mse);
        }
        out
    }
}

/// A caption resolved into raw text token vectors and its target image
/// vector.
struct Prepared {
    tokens: Vec<DVector<f64>>,
    target: DVector<f64>,
}

fn prepare(
    corpus: &CaptionCorpus,
    space: &EmbeddingSpace,
    images: &ImageVectorStore,
) -> Result<Vec<Prepared>, ZsgError> {
    corpus
        .samples()
        .iter()
        .map(|sample| {
            let tokens: Vec<DVector<f64>> = sample
                .tokens
                .iter()
                .filter_map(|tok| space.vector(tok))
                .map(DVector::from_column_slice)
                .collect();
            if tokens.is_empty() {
                return Err(ZsgError::AllTokensOov {
                    image_id: sample.image_id.clone(),
                });
            }
            let target = images
                .vector(&sample.image_id)
                .ok_or_else(|| ZsgError::UnknownImage {
                    image_id: sample.image_id.clone(),
                })?;
            Ok(Prepared {
                tokens,
                target: DVector::from_column_slice(target),
            })
        })
        .collect()
}

/// The training-time predictor: mapped tokens pooled by the encoder, with the
/// gated recurrent hidden state pushed through its readout into image space.
fn predict_sample(m: &DMatrix<f64>, encoder: &Encoder, sample: &Prepared) -> DVector<f64> {
    match encoder {
        Encoder::MeanPool => {
            let mut mean = DVector::zeros(m.nrows());
            for tok in &sample.tokens {
                mean += tok;
            }
            mean /= sample.tokens.len() as f64;
            m.transpose() * mean
        }
        Encoder::GatedRecurrent(gru) => {
            let xs: Vec<DVector<f64>> = sample.tokens.iter().map(|t| m.transpose() * t).collect();
            let trace = gru.forward(&xs);
            gru.predict(&trace)
        }
    }
}

/// Per-sample loss: squared error averaged over image dimensions.
fn sample_mse(m: &DMatrix<f64>, encoder: &Encoder, sample: &Prepared) -> f64 {
    let diff = predict_sample(m, encoder, sample) - &sample.target;
    diff.norm_squared() / sample.target.len() as f64
}

fn mean_mse(m: &DMatrix<f64>, encoder: &Encoder, samples: &[Prepared]) -> f64 {
    samples
        .iter()
        .map(|s| sample_mse(m, encoder, s))
        .sum::<f64>()
        / samples.len() as f64
}

/// Accumulated gradients for one mini-batch.
struct Grads {
    m: DMatrix<f64>,
    encoder: Option<GruEncoder>,
}

fn sample_grads(m: &DMatrix<f64>, encoder: &Encoder, sample: &Prepared, grads: &mut Grads) {
    let d_img = sample.target.len() as f64;
    match encoder {
        Encoder::MeanPool => {
            let mut xbar = DVector::zeros(m.nrows());
            for tok in &sample.tokens {
                xbar += tok;
            }
            xbar /= sample.tokens.len() as f64;
            let pred = m.transpose() * &xbar;
            let d_pred = (pred - &sample.target) * (2.0 / d_img);
            grads.m += &xbar * d_pred.transpose();
        }
        Encoder::GatedRecurrent(gru) => {
            let xs: Vec<DVector<f64>> = sample.tokens.iter().map(|t| m.transpose() * t).collect();
            let trace = gru.forward(&xs);
            let d_pred = (gru.predict(&trace) - &sample.target) * (2.0 / d_img);
            let (enc_grads, dxs) = gru.backward(&xs, &trace, &d_pred);
            let acc = grads
                .encoder
                .as_mut()
                .expect("gated-recurrent batches carry encoder gradients");
            for (slot, g) in acc.fields_mut().into_iter().zip(enc_grads.fields()) {
                *slot += g;
            }
            for (tok, dx) in sample.tokens.iter().zip(&dxs) {
                grads.m += tok * dx.transpose();
            }
        }
    }
}

/// Train the alignment M against image vectors and return it with the
/// per-epoch log. The encoder is discarded; the M from the epoch with the
/// lowest validation MSE (epoch 0 included) is returned.
pub fn train_alignment(
    space: &EmbeddingSpace,
    corpus: &CaptionCorpus,
    val: &CaptionCorpus,
    images: &ImageVectorStore,
    cfg: &EncoderConfig,
) -> Result<(LinearMap, TrainingLog), ZsgError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(ZsgError::EmptyCorpus {
            split: Split::Train,
        });
    }
    if val.is_empty() {
        return Err(ZsgError::EmptyCorpus {
            split: Split::Validation,
        });
    }
    let d_text = space.dim();
    let d_img = images.dim();
    let d_g = cfg.grounded_dim.unwrap_or(d_text);
    if cfg.encoder_kind == EncoderKind::MeanPool && d_g != d_img {
        return Err(ZsgError::MeanPoolDimension {
            grounded: d_g,
            image: d_img,
        });
    }
    let train_samples = prepare(corpus, space, images)?;
    let val_samples = prepare(val, space, images)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut m = init_alignment(d_text, d_g, d_img, &train_samples, &mut rng)?;
    let mut encoder = match cfg.encoder_kind {
        EncoderKind::MeanPool => Encoder::MeanPool,
        EncoderKind::GatedRecurrent => Encoder::GatedRecurrent(Box::new(GruEncoder::init(
            d_g,
            cfg.hidden_dim,
            d_img,
            &mut rng,
        ))),
    };

    let meta = MapMeta {
        mode: MapMode::ZsgAlignment,
        lambda: 0.0,
    };
    if cfg.epochs == 0 {
        return Ok((LinearMap::new(m, meta)?, TrainingLog::default()));
    }

    let mut log = TrainingLog::default();
    let train_mse0 = mean_mse(&m, &encoder, &train_samples);
    let val_mse0 = mean_mse(&m, &encoder, &val_samples);
    if !train_mse0.is_finite() || !val_mse0.is_finite() {
        return Err(ZsgError::Divergence { epoch: 0 });
    }
    log.rows.push(EpochStats {
        epoch: 0,
        train_mse: train_mse0,
        val_mse: val_mse0,
    });
    let mut best = (val_mse0, m.clone(), 0usize);
    let mut epochs_without_improvement = 0usize;

    let mut indices: Vec<usize> = (0..train_samples.len()).collect();
    for epoch in 1..=cfg.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            let mut grads = Grads {
                m: DMatrix::zeros(d_text, d_g),
                encoder: match &encoder {
                    Encoder::MeanPool => None,
                    Encoder::GatedRecurrent(gru) => Some(gru.zeros_like()),
                },
            };
            for &idx in batch {
                sample_grads(&m, &encoder, &train_samples[idx], &mut grads);
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            m -= &grads.m * scale;
            if let (Encoder::GatedRecurrent(gru), Some(enc_grads)) =
                (&mut encoder, grads.encoder.as_ref())
            {
                for (param, grad) in gru.fields_mut().into_iter().zip(enc_grads.fields()) {
                    *param -= grad * scale;
                }
            }
        }
        let train_mse = mean_mse(&m, &encoder, &train_samples);
        let val_mse = mean_mse(&m, &encoder, &val_samples);
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(ZsgError::Divergence { epoch });
        }
        log.rows.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
        if val_mse < best.0 {
            best = (val_mse, m.clone(), epoch);
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if cfg.early_stop_patience > 0 && epochs_without_improvement >= cfg.early_stop_patience
            {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = best.2;
    Ok((LinearMap::new(best.1, meta)?, log))
}

/// Initial M: identity when square, the closed-form ridge solution of the
/// caption-mean → image regression when mapping straight into image space,
/// and a seeded uniform matrix otherwise.
fn init_alignment(
    d_text: usize,
    d_g: usize,
    d_img: usize,
    train_samples: &[Prepared],
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>, ZsgError> {
    if d_g == d_text {
        return Ok(DMatrix::identity(d_text, d_text));
    }
    if d_g == d_img {
        let n = train_samples.len();
        let mut t = DMatrix::zeros(n, d_text);
        let mut v = DMatrix::zeros(n, d_img);
        for (i, sample) in train_samples.iter().enumerate() {
            let mut xbar = DVector::zeros(d_text);
            for tok in &sample.tokens {
                xbar += tok;
            }
            xbar /= sample.tokens.len() as f64;
            t.row_mut(i).copy_from(&xbar.transpose());
            v.row_mut(i).copy_from(&sample.target.transpose());
        }
        let lambda = default_lambda(&t);
        let fitted = fit_linear_map(&t, &v, lambda, MapMode::ZsgAlignment)?;
        return Ok(fitted.matrix().clone());
    }
    let scale = 1.0 / (d_text as f64).sqrt();
    Ok(DMatrix::from_fn(d_text, d_g, |_, _| {
        rng.random_range(-scale..scale)
    }))
}

/// Ground a whole vocabulary: every vector mapped through M, name suffixed
/// "-grounded".
pub fn ground(space: &EmbeddingSpace, m: &LinearMap) -> Result<EmbeddingSpace, ZsgError> {
    if space.dim() != m.d_in() {
        return Err(ZsgError::DimensionMismatch {
            what: "embedding dimension",
            expected: m.d_in(),
            found: space.dim(),
        });
    }
    let entries: Vec<(String, Vec<f64>)> = space
        .iter()
        .map(|(word, t)| {
            (
                word.to_string(),
                m.apply(t).expect("dimension checked above"),
            )
        })
        .collect();
    let name = format!("{}-grounded", space.name());
    Ok(EmbeddingSpace::new(&name, entries)?)
}

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lexiground_core::simulate::Setup;
use lexiground_core::zsg::EncoderKind;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Which embedding space(s) a command operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceChoice {
    Textual,
    Grounded,
    Both,
}

impl SpaceChoice {
    /// Space names in fixed report order.
    pub fn names(self) -> &'static [&'static str] {
        match self {
            SpaceChoice::Textual => &["textual"],
            SpaceChoice::Grounded => &["grounded"],
            SpaceChoice::Both => &["textual", "grounded"],
        }
    }
}

impl fmt::Display for SpaceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceChoice::Textual => "textual",
            SpaceChoice::Grounded => "grounded",
            SpaceChoice::Both => "both",
        })
    }
}

impl FromStr for SpaceChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "textual" => Ok(SpaceChoice::Textual),
            "grounded" => Ok(SpaceChoice::Grounded),
            "both" => Ok(SpaceChoice::Both),
            other => Err(format!(
                "unknown space {other:?} (expected textual, grounded, or both)"
            )),
        }
    }
}

/// Parse an encoder name. Kept here because the encoder enum itself does not
/// implement `FromStr`.
pub fn parse_encoder(s: &str) -> Result<EncoderKind, String> {
    match s {
        "mean-pool" => Ok(EncoderKind::MeanPool),
        "gated-recurrent" => Ok(EncoderKind::GatedRecurrent),
        other => Err(format!(
            "unknown encoder {other:?} (expected mean-pool or gated-recurrent)"
        )),
    }
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on/off, got {other:?}")),
    }
}

/// Effective run configuration: every path, mode, and hyperparameter a
/// command can consume. Built from defaults, then a key-value config file,
/// then command-line flags — later sources win.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embeddings: Option<PathBuf>,
    pub grounded_embeddings: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub membership: Option<PathBuf>,
    pub captions_train: Option<PathBuf>,
    pub captions_val: Option<PathBuf>,
    pub trials: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub gam_spec: Option<PathBuf>,
    pub space: SpaceChoice,
    pub setup: Setup,
    /// Ridge strength for the linear map; `None` means the data-scaled
    /// default.
    pub lambda: Option<f64>,
    pub encoder: EncoderKind,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without validation improvement before early stop; 0 disables.
    pub patience: usize,
    /// Output dimension of the alignment map; `None` keeps it square.
    pub grounded_dim: Option<usize>,
    /// Mean per-cell percentage of participant predicted-image choices.
    pub participant_cells: Option<[f64; 5]>,
    pub include_catch: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            embeddings: None,
            grounded_embeddings: None,
            images: None,
            membership: None,
            captions_train: None,
            captions_val: None,
            trials: None,
            responses: None,
            benchmark: None,
            gam_spec: None,
            space: SpaceChoice::Textual,
            setup: Setup::Prototype,
            lambda: None,
            encoder: EncoderKind::MeanPool,
            hidden_dim: 16,
            epochs: 50,
            batch_size: 8,
            learning_rate: 0.05,
            patience: 0,
            grounded_dim: None,
            participant_cells: None,
            include_catch: false,
            seed: 7,
            out_dir: PathBuf::from("out"),
        }
    }
}

const PATH_KEYS: [&str; 10] = [
    "embeddings",
    "grounded_embeddings",
    "images",
    "membership",
    "captions_train",
    "captions_val",
    "trials",
    "responses",
    "benchmark",
    "gam_spec",
];

impl RunConfig {
    /// Defaults, overlaid with a key-value file when one is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|err| {
                CliError::Validation(format!("cannot read config {}: {err}", path.display()))
            })?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        Ok(cfg)
    }

    fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("{origin}:{line}: expected key = value"))
            })?;
            self.set_key(key.trim(), value.trim())
                .map_err(|reason| CliError::Validation(format!("{origin}:{line}: {reason}")))?;
        }
        Ok(())
    }

    /// Apply one configuration setting by key name.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        if value.is_empty() {
            return Err(format!("empty value for key {key:?}"));
        }
        match key {
            "embeddings" => self.embeddings = Some(PathBuf::from(value)),
            "grounded_embeddings" => self.grounded_embeddings = Some(PathBuf::from(value)),
            "images" => self.images = Some(PathBuf::from(value)),
            "membership" => self.membership = Some(PathBuf::from(value)),
            "captions_train" => self.captions_train = Some(PathBuf::from(value)),
            "captions_val" => self.captions_val = Some(PathBuf::from(value)),
            "trials" => self.trials = Some(PathBuf::from(value)),
            "responses" => self.responses = Some(PathBuf::from(value)),
            "benchmark" => self.benchmark = Some(PathBuf::from(value)),
            "gam_spec" => self.gam_spec = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "space" => self.space = value.parse()?,
            "setup" => self.setup = value.parse()?,
            "encoder" => self.encoder = parse_encoder(value)?,
            "lambda" => {
                self.lambda = if value == "auto" {
                    None
                } else {
                    let l: f64 = value
                        .parse()
                        .map_err(|_| format!("bad lambda value {value:?}"))?;
                    if !l.is_finite() || l < 0.0 {
                        return Err(format!("lambda must be finite and >= 0, got {value}"));
                    }
                    Some(l)
                };
            }
            "hidden_dim" => self.hidden_dim = parse_positive(key, value)?,
            "epochs" => {
                self.epochs = value
                    .parse()
                    .map_err(|_| format!("bad epochs value {value:?}"))?;
            }
            "batch_size" => self.batch_size = parse_positive(key, value)?,
            "patience" => {
                self.patience = value
                    .parse()
                    .map_err(|_| format!("bad patience value {value:?}"))?;
            }
            "learning_rate" => {
                let r: f64 = value
                    .parse()
                    .map_err(|_| format!("bad learning_rate value {value:?}"))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(format!("learning_rate must be positive, got {value}"));
                }
                self.learning_rate = r;
            }
            "grounded_dim" => {
                self.grounded_dim = if value == "auto" {
                    None
                } else {
                    Some(parse_positive(key, value)?)
                };
            }
            "participant_cells" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 5 {
                    return Err(format!(
                        "participant_cells needs 5 comma-separated values, found {}",
                        parts.len()
                    ));
                }
                let mut cells = [0.0; 5];
                for (slot, part) in cells.iter_mut().zip(&parts) {
                    let v: f64 = part
                        .parse()
                        .map_err(|_| format!("bad participant cell value {part:?}"))?;
                    if !v.is_finite() {
                        return Err(format!("participant cell value must be finite, got {part}"));
                    }
                    *slot = v;
                }
                self.participant_cells = Some(cells);
            }
            "include_catch" => self.include_catch = parse_switch(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("bad seed value {value:?}"))?;
            }
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Canonical plain-text rendering of every setting, the hash input.
    pub fn canonical_string(&self) -> String {
        use std::fmt::Write as _;
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "(none)".to_string())
        };
        let mut out = String::new();
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "benchmark = {}", path(&self.benchmark));
        let _ = writeln!(out, "captions_train = {}", path(&self.captions_train));
        let _ = writeln!(out, "captions_val = {}", path(&self.captions_val));
        let _ = writeln!(out, "embeddings = {}", path(&self.embeddings));
        let _ = writeln!(out, "encoder = {}", self.encoder);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "gam_spec = {}", path(&self.gam_spec));
        let _ = writeln!(
            out,
            "grounded_dim = {}",
            self.grounded_dim
                .map(|d| d.to_string())
                .unwrap_or_else(|| "auto".to_string())
        );
        let _ = writeln!(
            out,
            "grounded_embeddings = {}",
            path(&self.grounded_embeddings)
        );
        let _ = writeln!(out, "hidden_dim = {}", self.hidden_dim);
        let _ = writeln!(out, "images = {}", path(&self.images));
        let _ = writeln!(
            out,
            "include_catch = {}",
            if self.include_catch { "on" } else { "off" }
        );
        let _ = writeln!(
            out,
            "lambda = {}",
            self.lambda
                .map(|l| l.to_string())
                .unwrap_or_else(|| "auto".to_string())
        );
        let _ = writeln!(out, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(out, "membership = {}", path(&self.membership));
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let cells = self
            .participant_cells
            .map(|c| {
                c.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .unwrap_or_else(|| "(none)".to_string());
        let _ = writeln!(out, "participant_cells = {cells}");
        let _ = writeln!(out, "responses = {}", path(&self.responses));
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "setup = {}", self.setup);
        let _ = writeln!(out, "space = {}", self.space);
        let _ = writeln!(out, "trials = {}", path(&self.trials));
        out
    }

    /// Short hex digest of the canonical configuration, embedded in every
    /// report so outputs can be traced to the settings that produced them.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            use std::fmt::Write as _;
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    fn path_for(&self, key: &str) -> Option<&Path> {
        let field = match key {
            "embeddings" => &self.embeddings,
            "grounded_embeddings" => &self.grounded_embeddings,
            "images" => &self.images,
            "membership" => &self.membership,
            "captions_train" => &self.captions_train,
            "captions_val" => &self.captions_val,
            "trials" => &self.trials,
            "responses" => &self.responses,
            "benchmark" => &self.benchmark,
            "gam_spec" => &self.gam_spec,
            other => unreachable!("not a path key: {other}"),
        };
        field.as_deref()
    }

    /// The named path, which must be configured and exist on disk.
    pub fn require_path(&self, key: &str) -> Result<&Path, CliError> {
        debug_assert!(PATH_KEYS.contains(&key));
        match self.path_for(key) {
            Some(p) if p.exists() => Ok(p),
            Some(p) => Err(CliError::Validation(format!(
                "{key} path {} does not exist",
                p.display()
            ))),
            None => Err(CliError::Validation(format!(
                "config key {key:?} is required for this command"
            ))),
        }
    }

    /// The named path if configured; configured-but-missing is an error.
    pub fn optional_path(&self, key: &str) -> Result<Option<&Path>, CliError> {
        debug_assert!(PATH_KEYS.contains(&key));
        match self.path_for(key) {
            Some(p) if p.exists() => Ok(Some(p)),
            Some(p) => Err(CliError::Validation(format!(
                "{key} path {} does not exist",
                p.display()
            ))),
            None => Ok(None),
        }
    }

    /// The embeddings file backing a named space.
    pub fn space_path(&self, name: &str) -> Result<&Path, CliError> {
        match name {
            "textual" => self.require_path("embeddings"),
            "grounded" => self.require_path("grounded_embeddings"),
            other => unreachable!("unknown space name {other}"),
        }
    }

    pub fn require_cells(&self) -> Result<[f64; 5], CliError> {
        self.participant_cells.ok_or_else(|| {
            CliError::Validation(
                "config key \"participant_cells\" is required for this command".to_string(),
            )
        })
    }

    /// Reject an output directory path that exists but is not a directory.
    pub fn check_out_dir(&self) -> Result<(), CliError> {
        if self.out_dir.exists() && !self.out_dir.is_dir() {
            return Err(CliError::Validation(format!(
                "out_dir {} exists and is not a directory",
                self.out_dir.display()
            )));
        }
        Ok(())
    }
}

fn parse_positive(key: &str, value: &str) -> Result<usize, String> {
    let n: usize = value
        .parse()
        .map_err(|_| format!("bad {key} value {value:?}"))?;
    if n == 0 {
        return Err(format!("{key} must be positive"));
    }
    Ok(n)
}

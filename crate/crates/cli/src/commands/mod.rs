pub mod bench;
pub mod fit_gam;
pub mod ground;
pub mod simulate;
pub mod stats;
pub mod train_map;

use lexiground_core::embeddings::{EmbeddingSpace, ImageVectorStore};
use lexiground_core::stats::{BinomialMethod, BinomialTest};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{runtime, CliError};

/// Comment lines prepended to every CSV artifact, tying it to the settings
/// and seed that produced it.
pub fn provenance(config_hash: &str, seed: u64) -> String {
    format!("# config_hash={config_hash}\n# seed={seed}\n")
}

/// Load every space the run operates on, named `textual` / `grounded` in
/// fixed order.
pub fn load_spaces(cfg: &RunConfig) -> Result<Vec<(String, EmbeddingSpace)>, CliError> {
    let mut spaces = Vec::new();
    for &name in cfg.space.names() {
        let path = cfg.space_path(name)?;
        let space = EmbeddingSpace::load(path, None)
            .map_err(runtime)?
            .with_name(name);
        spaces.push((name.to_string(), space));
    }
    Ok(spaces)
}

pub fn load_images(cfg: &RunConfig) -> Result<ImageVectorStore, CliError> {
    let path = cfg.require_path("images")?;
    ImageVectorStore::load_csv(path).map_err(runtime)
}

/// JSON shape of a binomial test result, shared across report files.
#[derive(Serialize)]
pub struct TestJson {
    pub successes: u64,
    pub n: u64,
    pub p0: f64,
    pub estimate: f64,
    pub p_two_sided: f64,
    pub p_greater: f64,
    pub p_less: f64,
    pub method: &'static str,
}

impl TestJson {
    pub fn from_test(test: &BinomialTest) -> Self {
        Self {
            successes: test.successes,
            n: test.n,
            p0: test.p0,
            estimate: test.estimate,
            p_two_sided: test.p_value,
            p_greater: test.p_greater,
            p_less: test.p_less,
            method: method_name(test.method),
        }
    }
}

pub fn method_name(method: BinomialMethod) -> &'static str {
    match method {
        BinomialMethod::Exact => "exact",
        BinomialMethod::NormalApprox => "normal-approximation",
    }
}

/// Serialize a report struct as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|err| CliError::Runtime(format!("cannot serialize report: {err}")))?;
    text.push('\n');
    Ok(text)
}

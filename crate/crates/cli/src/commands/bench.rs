use lexiground_core::fmt::sig6;
use lexiground_core::stats::{benchmark_eval, BenchmarkPairs};

use super::{load_spaces, provenance};
use crate::config::RunConfig;
use crate::error::{runtime, CliError};
use crate::output::OutputSet;

/// Correlate each selected space's cosine similarities with a human
/// similarity benchmark and write one ranking row per space.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_out_dir()?;
    let pairs_path = cfg.require_path("benchmark")?;
    let pairs = BenchmarkPairs::load_tsv(pairs_path).map_err(runtime)?;
    let spaces = load_spaces(cfg)?;

    let hash = cfg.config_hash();
    let mut csv = format!(
        "{}space,benchmark,rho,covered,total,coverage\n",
        provenance(&hash, cfg.seed)
    );
    for (name, space) in &spaces {
        let report = benchmark_eval(space, &pairs).map_err(runtime)?;
        use std::fmt::Write as _;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            name,
            pairs.name,
            sig6(report.rho),
            report.covered,
            report.total,
            sig6(report.coverage())
        );
    }

    let mut out = OutputSet::new(&cfg.out_dir);
    out.add("bench.csv", csv);
    out.flush()
}

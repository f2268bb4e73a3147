//! Runs the analysis on a sweep described by a TOML file (default grid if
//! no path is given) and prints the single-feature table.

use order_recovery::analysis::{analyze, AnalysisConfig};
use order_recovery::dataset::{generate_sweep, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => SweepConfig::load(p.as_ref())?,
        None => SweepConfig::default(),
    };
    let records = generate_sweep(&cfg)?;
    let analysis = AnalysisConfig {
        permutation: false,
        interpretable_tree: false,
        ..AnalysisConfig::default()
    };
    let report = analyze(&records, &analysis)?;
    print!("{}", report.to_text());
    Ok(())
}

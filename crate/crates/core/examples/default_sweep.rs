//! Generates the default benchmark sweep and prints the analysis report.

use std::time::Instant;

use order_recovery::analysis::{analyze, AnalysisConfig};
use order_recovery::dataset::{generate_sweep, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = Instant::now();
    let records = generate_sweep(&SweepConfig::default())?;
    eprintln!(
        "generated {} records in {:.1?}",
        records.len(),
        start.elapsed()
    );
    let start = Instant::now();
    let report = analyze(&records, &AnalysisConfig::default())?;
    eprintln!("analyzed in {:.1?}", start.elapsed());
    print!("{}", report.to_text());
    Ok(())
}

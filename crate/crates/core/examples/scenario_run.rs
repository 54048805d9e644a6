//! Runs a bundled scenario end to end and writes its CSV and reports.
//!
//! ```text
//! cargo run --example scenario_run -- scenarios/anharmonic.json
//! ```

use std::path::PathBuf;

use susy_hj::scenario::{self, load_config};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/susy_harmonic.json"));
    let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));

    let run = scenario::run_scenario(&cfg);
    print!("{}", run.report.to_text());

    let dir = std::env::temp_dir().join("susy-hj-example");
    run.write(&dir).unwrap();
    println!("wrote {}", dir.join("trajectory.csv").display());
    for line in run.to_csv().lines().take(4) {
        println!("  {line}");
    }
}

//! Sweeps the energy of the SUSY oscillator scenario in parallel.

use std::path::Path;

use susy_hj::scenario::{self, load_config};

fn main() {
    let cfg = load_config(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/susy_harmonic.json")).unwrap();
    let rows = scenario::sweep(&cfg, "E", &[0.3, 0.5, 1.0, 2.0], None).unwrap();
    for row in &rows {
        let dev = row.report.deviations;
        println!(
            "E = {:4}: {:16} dx = {:9.2e} dq0 = {:9.2e} residual = {:9.2e}",
            row.value,
            row.report.status.as_str(),
            dev.map_or(f64::NAN, |d| d.x),
            dev.map_or(f64::NAN, |d| d.q0),
            row.report.max_residual().unwrap_or(f64::NAN),
        );
    }
    print!("{}", scenario::summary_csv(&rows));
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use susy_hj::scenario::{self, ComparisonReport, ScenarioConfig};

#[derive(Parser)]
#[command(name = "susy-hj", version, about = "Hamilton-Jacobi vs Euler-Lagrange scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV and report files (default: the config's `outputs`, else ./out/<name>)
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Suppress the report on stdout
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run both pipelines and compare them
    Run { config: PathBuf },
    /// Run once per value of a numeric field, constant, or the energy `E`
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Constraint-algebra checks only
    Verify { config: PathBuf },
}

fn output_dir(cli_dir: &Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    cli_dir
        .clone()
        .or_else(|| cfg.outputs.clone())
        .unwrap_or_else(|| Path::new("out").join(cfg.name.as_deref().unwrap_or("scenario")))
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    scenario::load_config(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn finish(report: &ComparisonReport, quiet: bool) -> ExitCode {
    if !quiet {
        print!("{}", report.to_text());
    }
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config } => {
            let cfg = match load(config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let run = scenario::run_scenario(&cfg);
            let dir = output_dir(&cli.output_dir, &cfg);
            if let Err(e) = run.write(&dir) {
                eprintln!("error: writing {}: {e}", dir.display());
                return ExitCode::from(3);
            }
            finish(&run.report, cli.quiet)
        }
        Command::Verify { config } => {
            let cfg = match load(config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let report = scenario::verify_constraints(&cfg);
            if let Some(dir) = &cli.output_dir {
                if let Err(e) = report.write(dir) {
                    eprintln!("error: writing {}: {e}", dir.display());
                    return ExitCode::from(3);
                }
            }
            finish(&report, cli.quiet)
        }
        Command::Sweep { config, param, values } => {
            let cfg = match load(config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = output_dir(&cli.output_dir, &cfg);
            let rows = match scenario::sweep(&cfg, param, values, Some(&dir)) {
                Ok(r) => r,
                Err(scenario::SweepError::Io(e)) => {
                    eprintln!("error: writing {}: {e}", dir.display());
                    return ExitCode::from(3);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if !cli.quiet {
                for row in &rows {
                    println!(
                        "{param}={:<12} {}{}",
                        row.value,
                        row.report.status.as_str(),
                        row.report.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default()
                    );
                }
                println!("summary: {}", dir.join("summary.csv").display());
            }
            let code = rows.iter().map(|r| r.report.exit_code()).max().unwrap_or(0);
            ExitCode::from(code as u8)
        }
    }
}

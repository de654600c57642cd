use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lab_cli::{run_experiment, ExperimentConfig, STATUS_CONFIG};

/// Numerical experiments on finitely generated groups of interval
/// diffeomorphisms.
#[derive(Debug, Parser)]
#[command(name = "lab", version)]
struct Cli {
    /// One of flatten, transport, collision, wreath, probe, growth, certify.
    command: String,
    /// Configuration file (key=value sections).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { STATUS_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cfg = match ExperimentConfig::from_file(&cli.command, &cli.config, cli.out, cli.threads) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("lab: {e}");
            return ExitCode::from(e.status() as u8);
        }
    };
    let result = run_experiment(&cfg);
    println!("{}", result.summary);
    for p in &result.paths {
        println!("wrote {}", p.display());
    }
    log::info!("finished in {:.3} s", result.wall_time.as_secs_f64());
    ExitCode::from(result.status as u8)
}

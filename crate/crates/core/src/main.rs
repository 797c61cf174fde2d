use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use oran_v2x::experiments::{parse_config, run_experiment, write_outputs, Experiment};
use oran_v2x::{Error, Result};

/// Run one experiment and write its CSV tables.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// beam, mac, relay, overhead or rsu
    experiment: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Seeds to run; replaces the `seeds` key of the config. Repeatable.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
}

fn run(cli: &Cli) -> Result<()> {
    let experiment: Experiment = cli.experiment.parse()?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text, experiment)?;
    if !cli.seeds.is_empty() {
        cfg.seeds.clone_from(&cli.seeds);
    }
    let rows = run_experiment(&cfg)?;
    let files = write_outputs(&cli.out, &cfg, &rows)?;
    println!("{}", files.detail.display());
    println!("{}", files.summary.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

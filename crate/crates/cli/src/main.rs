//! Command-line front end: run scenarios, calibrate sensors, benchmark the
//! sensor bus, analyze and plot traces.

use std::path::PathBuf;
use std::process::ExitCode;

use amphisense::harness::{
    cmd_analyze, cmd_bus_bench, cmd_calibrate, cmd_plot, cmd_run, CommandOptions, Outcome,
};
use clap::{Parser, Subcommand};
use log::{debug, info};

#[derive(Parser)]
#[command(name = "amphisense", version, about = "Amphibious robot sensing simulator")]
struct Cli {
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the seed in the input file
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and check its expectations
    Run { scenario: PathBuf },
    /// Characterize and fit every sensor on the jig
    Calibrate { jig: PathBuf },
    /// Simulate the sensor ring and report per-module rates
    BusBench { line: PathBuf },
    /// Compute metrics from a trace CSV
    Analyze {
        trace: PathBuf,
        /// Take expectations and fin layout from this scenario
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Render the figures of a plot spec as SVG
    Plot { trace: PathBuf, spec: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info })
        .format_target(false)
        .format_timestamp(None)
        .init();
    let opts = CommandOptions {
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(scenario, &opts),
        Command::Calibrate { jig } => cmd_calibrate(jig, &opts),
        Command::BusBench { line } => cmd_bus_bench(line, &opts),
        Command::Analyze { trace, scenario } => cmd_analyze(trace, scenario.as_deref(), &opts),
        Command::Plot { trace, spec } => cmd_plot(trace, spec, &opts),
    };
    match result {
        Ok(outcome) => report(&outcome),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn report(outcome: &Outcome) -> ExitCode {
    for line in outcome.report.lines() {
        println!("{line}");
    }
    for f in &outcome.files {
        debug!("wrote {}", f.display());
    }
    info!("{} files written", outcome.files.len());
    if outcome.exit_code() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

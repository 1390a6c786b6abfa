use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hom_cascade::cascade::{TAU_B_PS, TAU_X_PS};
use hom_cascade::commands::{run_command, Command, Overrides};
use hom_cascade::config::{parse_config, RunConfig};
use hom_cascade::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Biexciton-exciton cascade HOM simulation and coincidence analysis.
#[derive(Debug, Parser)]
#[command(name = "hom-cascade", version)]
struct Cli {
    /// simulate-hom | sweep-visibility | trajectories | postselect |
    /// analyze-histogram | analyze-conditional | fit-lifetime |
    /// calibrate-sensor | synthesize
    command: String,

    /// JSON run configuration; defaults to the measured lifetimes.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed for every stochastic step.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,

    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,

    /// Detector response FWHM (ps) for simulate-hom.
    #[arg(long = "fwhm-ps")]
    fwhm_ps: Option<f64>,

    /// Biexciton cutoffs (ps) for postselect, comma separated.
    #[arg(long = "cut-ps", value_delimiter = ',')]
    cut_ps: Option<Vec<f64>>,

    /// Biexciton-time windows (ps) for analyze-conditional, comma separated.
    #[arg(long = "window-ps", value_delimiter = ',')]
    window_ps: Option<Vec<f64>>,

    /// Input histogram or event CSV for the analysis commands.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Number of trajectories.
    #[arg(long = "n-traj")]
    n_traj: Option<usize>,

    /// analyze-histogram: also report g2(0).
    #[arg(long)]
    g2: bool,
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let record = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim(), EXIT_USAGE),
    };
    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(e) => return fail(e.kind(), &e.to_string(), EXIT_USAGE),
    };
    let config = match &cli.config {
        Some(path) => parse_config(path),
        None => RunConfig::from_lifetimes(TAU_B_PS, TAU_X_PS),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => return fail(e.kind(), &e.to_string(), EXIT_USAGE),
    };
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
        plots: cli.plots,
        fwhm: cli.fwhm_ps,
        cuts: cli.cut_ps,
        windows: cli.window_ps,
        input: cli.input,
        n_traj: cli.n_traj,
        g2: cli.g2,
    };
    match run_command(command, config, &overrides) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e @ Error::Usage(_)) => fail(e.kind(), &e.to_string(), EXIT_USAGE),
        Err(e) => fail(e.kind(), &e.to_string(), EXIT_RUNTIME),
    }
}

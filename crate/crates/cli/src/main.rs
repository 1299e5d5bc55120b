use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod config;
mod output;
mod svg;

use output::Format;

/// Design and characterization of open-access Fabry-Perot microcavities.
#[derive(Debug, Parser)]
#[command(name = "microcavity", version, about)]
struct Cli {
    /// Directory for CSV/JSON/SVG artifacts; nothing is written without it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Flat `key = value` file supplying default flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mode, loss and enhancement figures for one cavity geometry.
    Design(cmd::design::DesignArgs),
    /// Recompute waist and mode volume of the reference assemblies.
    Table1,
    /// Linewidth, calibration and mode-ladder analysis of a scan.
    Spectrum(cmd::spectrum::SpectrumArgs),
    /// Radius-of-curvature fit of a mirror surface map.
    Profile(cmd::profile::ProfileArgs),
    /// Finesse versus cavity length for a calibrated loss model.
    Sweep(cmd::sweep::SweepArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let report = match &cli.command {
        Command::Design(a) => cmd::design::run(a)?,
        Command::Table1 => cmd::table1::run()?,
        Command::Spectrum(a) => cmd::spectrum::run(a)?,
        Command::Profile(a) => cmd::profile::run(a)?,
        Command::Sweep(a) => cmd::sweep::run(a)?,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", report.render(cli.format)?);
    if let Some(dir) = &cli.out_dir {
        for path in report.write_artifacts(dir)? {
            eprintln!("wrote {path}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match config::merge_into_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

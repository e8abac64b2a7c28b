use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neat_cli::{cmd_bench, cmd_export, cmd_inspect, cmd_run, parse_seeds, BenchArgs, CliError, ExportArgs, RunArgs, THREADS_ENV};
use neat_core::export::FormulaStyle;

#[derive(Parser)]
#[command(name = "neat", version, about = "Evolve, inspect and export NEAT networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Plain,
    Typeset,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one network per seed and write stats, genomes and a manifest.
    Run {
        #[arg(long, conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Repeat the run recorded in a manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Override a config field, e.g. `--set pop_size=300`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// `3`, `0..9` (inclusive) or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print a genome's tables and validity.
    Inspect { genome: PathBuf },
    /// Write a topology diagram and/or formula next to the genome.
    Export {
        genome: PathBuf,
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        formula: bool,
        #[arg(long, value_enum, default_value = "plain")]
        style: Style,
        /// Print constants at full precision.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time a run, or a sweep over population sizes.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated population sizes.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        #[arg(long, short)]
        quiet: bool,
    },
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run { config, manifest, overrides, seeds, out, threads, quiet } => {
            let seeds = seeds.as_deref().map(parse_seeds).transpose()?;
            cmd_run(&RunArgs { config, manifest, overrides, seeds, out, threads, quiet })?;
            Ok(0)
        }
        Command::Inspect { genome } => {
            let report = cmd_inspect(&genome)?;
            print!("{}", report.text);
            Ok(0)
        }
        Command::Export { genome, dot, formula, style, exact, out } => {
            let style = match style {
                Style::Plain => FormulaStyle::Plain,
                Style::Typeset => FormulaStyle::Typeset,
            };
            for p in cmd_export(&ExportArgs { genome, dot, formula, style, exact, out })? {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Bench { config, overrides, seed, sweep, out, threads, quiet } => {
            cmd_bench(&BenchArgs { config, overrides, seed, sweep, out, threads, quiet })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

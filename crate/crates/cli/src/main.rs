use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hsdpa_ee_cli::commands::{self, Overrides, Source};
use hsdpa_ee_cli::config::ExperimentSpec;
use hsdpa_ee_cli::{presets, CliError};

/// Energy-efficient power control and link adaptation simulator for HSDPA.
#[derive(Debug, Parser)]
#[command(name = "hsdpa-ee", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario per strategy and write trace.csv and metrics.csv.
    Run(ExperimentArgs),
    /// Run the [sweep] block and write series.csv.
    Sweep(ExperimentArgs),
    /// Write a synthetic MCS table CSV.
    Tablegen {
        #[arg(long, default_value_t = 1.0)]
        step_db: f64,
        #[arg(long, default_value_t = 30)]
        entries: usize,
        #[arg(long, default_value = "mcs_table.csv")]
        out: PathBuf,
    },
    /// List the bundled presets, or print one.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct SourceArgs {
    /// Experiment file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled experiment, e.g. figure7.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Base seed; repetitions derive their seeds from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Repetitions per sweep point.
    #[arg(long)]
    reps: Option<u32>,
}

impl ExperimentArgs {
    fn split(self) -> (Source, Overrides) {
        (
            Source {
                config: self.source.config,
                preset: self.source.preset,
            },
            Overrides {
                seed: self.seed,
                out: self.out,
                reps: self.reps,
            },
        )
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HSDPA_EE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("HSDPA_EE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn list_presets() -> Result<String, CliError> {
    let mut out = String::new();
    for (name, text) in presets::PRESETS {
        let spec = ExperimentSpec::from_toml(text)?;
        let what = match &spec.sweep {
            Some(s) => format!("{} over {} values", s.variable, s.values.len()),
            None => format!("{} TTIs", spec.scenario.duration_ttis),
        };
        let desc = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
        out.push_str(&format!(
            "{name:<9} {:<6} {what:<28} {desc}\n",
            commands::preset_command(&spec)
        ));
    }
    Ok(out)
}

fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run(args) => {
            configure_threads()?;
            let (source, overrides) = args.split();
            commands::cmd_run(&source, &overrides).map(|o| o.summary())
        }
        Command::Sweep(args) => {
            configure_threads()?;
            let (source, overrides) = args.split();
            commands::cmd_sweep(&source, &overrides).map(|o| o.summary())
        }
        Command::Tablegen { step_db, entries, out } => {
            let table = commands::cmd_tablegen(step_db, entries, &out)?;
            let first = table.entries()[0].sinr_threshold_db;
            let last = table.entries()[table.entries().len() - 1].sinr_threshold_db;
            Ok(format!(
                "wrote {} entries ({first} .. {last} dB) to {}",
                table.entries().len(),
                out.display()
            ))
        }
        Command::Presets { show: None } => list_presets(),
        Command::Presets { show: Some(name) } => presets::preset(&name)
            .map(str::to_string)
            .ok_or_else(|| CliError::Invalid(format!("unknown preset {name:?}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            println!("{}", summary.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

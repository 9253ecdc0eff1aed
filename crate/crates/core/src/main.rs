use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use resetlab::config::{apply_override, ExperimentConfig};
use resetlab::runner::run_experiment;
use resetlab::{plots, presets, Error};

/// Spectral and dynamical analysis of bath-reset quantum channels.
#[derive(Parser)]
#[command(name = "resetlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run { config: PathBuf },
    /// Run a built-in preset, optionally with key=value overrides.
    Preset {
        name: String,
        /// Dotted-path override, e.g. `layout.n_s=3` or `model.jxxx=0.5`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (defaults to out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved config instead of running it.
        #[arg(long)]
        print: bool,
    },
    /// Check a config file against the schema.
    Validate { config: PathBuf },
    /// Write gnuplot scripts for the CSV outputs in a directory.
    Plots { dir: PathBuf },
    /// List the built-in presets.
    List,
}

fn configure_threads() {
    if let Ok(v) = std::env::var("RESETLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring RESETLAB_THREADS={v:?}"),
        }
    }
}

fn run(cfg: &ExperimentConfig) -> Result<i32, Error> {
    let report = run_experiment(cfg)?;
    for name in &report.manifest.outputs {
        println!("{}", report.output_dir.join(name).display());
    }
    for e in &report.manifest.errors {
        eprintln!("error in {}: {}", e.analysis, e.message);
    }
    Ok(report.exit_code())
}

// Writes to stdout, ignoring a closed pipe (e.g. `resetlab list | head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { config } => run(&ExperimentConfig::load(&config)?),
        Command::Preset { name, overrides, out, print } => {
            let mut doc = presets::find(&name)?.document();
            for o in &overrides {
                apply_override(&mut doc, o)?;
            }
            let mut cfg = ExperimentConfig::from_value(doc)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if print {
                out!("{}", cfg.to_json_pretty()?);
                return Ok(0);
            }
            run(&cfg)
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?;
            out!("{}: OK", config.display());
            Ok(0)
        }
        Command::Plots { dir } => {
            for p in plots::emit_plots(&dir)? {
                out!("{}", p.display());
            }
            Ok(0)
        }
        Command::List => {
            for p in presets::list_presets() {
                out!("{:<6} {:<8} {}", p.name, p.figure, p.description);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

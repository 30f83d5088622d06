use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bitensor_core::scenario::{self, builtin, Config, ConfigError, EvalError, RunOptions};

#[derive(Parser)]
#[command(name = "bitensor", version, about = "Verify harmonic and biharmonic map identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a config file or of a builtin scenario.
    Run {
        /// Config file; omit to run the builtin named by --scenario.
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// Node count per axis for every quadrature check.
        #[arg(long)]
        grid: Option<usize>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(long)]
        parallel: bool,
        /// JSON report path; overrides `[output] report`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Suppress the per-check summary.
        #[arg(long, short)]
        quiet: bool,
    },
    /// List builtin scenarios and their anchors.
    ListScenarios,
    /// Print every pointwise tensor of a map at one point as JSON.
    Eval {
        config: PathBuf,
        /// Coordinates, e.g. "th=0.7,ph=1.2".
        #[arg(long)]
        at: String,
        #[arg(long)]
        map: String,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            let rows = builtin::list_scenarios();
            let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
            let table: String = rows
                .iter()
                .map(|(name, anchor)| format!("{name:width$}  \"{anchor}\"\n"))
                .collect();
            emit(&table);
            ExitCode::SUCCESS
        }
        Command::Eval { config, at, map } => {
            let cfg = match Config::load(&config) {
                Ok(c) => c,
                Err(e) => return config_error(&e),
            };
            match scenario::eval_point(&cfg, &map, &at) {
                Ok(v) => {
                    emit(&format!("{}\n", serde_json::to_string_pretty(&v).expect("json")));
                    ExitCode::SUCCESS
                }
                Err(EvalError::Config(e)) => config_error(&e),
                Err(EvalError::Geometry(e)) => {
                    eprintln!("evaluation failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Run {
            config,
            scenario,
            grid,
            tol_scale,
            parallel,
            report,
            quiet,
        } => {
            let (cfg, scenario) = match (&config, &scenario) {
                (Some(path), _) => (Config::load(path), scenario),
                (None, Some(name)) => match builtin::find(name) {
                    Some(b) => (b.config(), None),
                    None => return config_error(&ConfigError::new("--scenario", format!("no builtin scenario `{name}`"))),
                },
                (None, None) => {
                    return config_error(&ConfigError::new("run", "give a config path or --scenario NAME"))
                }
            };
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => return config_error(&e),
            };
            let opts = RunOptions {
                scenario,
                grid,
                tol_scale,
                parallel,
            };
            let result = match scenario::run(&cfg, &opts) {
                Ok(r) => r,
                Err(e) => return config_error(&e),
            };
            if !quiet {
                emit(&result.summary());
            }
            let path = report.or_else(|| {
                cfg.raw.output.as_ref().and_then(|o| o.report.clone()).map(PathBuf::from)
            });
            if let Some(path) = path {
                if let Err(e) = std::fs::write(&path, result.to_json()) {
                    eprintln!("cannot write report {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if result.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvpose_cli::commands::{self, Outputs};
use mvpose_cli::config::ExperimentConfig;
use mvpose_cli::{CliError, Result};

/// Multi-view 6D object pose estimation experiments.
///
/// Exit codes: 0 success, 2 config or usage error, 3 I/O error, 4 self-test failure.
#[derive(Parser)]
#[command(name = "mvpose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory [default: `output.dir` from the config, else ./mvpose-out]
    #[arg(long, env = "MVPOSE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate sessions and ground truth for every configured seed.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the estimator on a stored session, or simulate and run a config.
    Run {
        #[arg(long, required_unless_present = "config")]
        session: Option<PathBuf>,
        /// Ground truth for `--session` [default: sibling truth-<seed>.json]
        #[arg(long, requires = "session")]
        truth: Option<PathBuf>,
        /// Experiment config; with `--session` only estimator and evaluation settings are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate a parameter grid such as `rig.count=2,4,8;noise.symmetry_aliasing=off,on`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the acceptance checks; exits with 4 if any fails.
    Selftest {
        /// Only these criteria, e.g. `1,2,9`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn out_dir(arg: OutArg, config_text: Option<&str>) -> PathBuf {
    arg.out
        .or_else(|| {
            config_text
                .and_then(|t| ExperimentConfig::from_toml(t).ok())
                .and_then(|c| c.output.dir)
        })
        .unwrap_or_else(|| PathBuf::from("mvpose-out"))
}

fn finish(out: &Outputs, dir: &Path) -> Result<()> {
    out.write_to(dir)?;
    for line in &out.messages {
        println!("{line}");
    }
    println!("wrote {} files to {}", out.files.len(), dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let text = commands::read_config(&config)?;
            let outputs = commands::simulate(&text)?;
            finish(&outputs, &out_dir(out, Some(&text)))
        }
        Command::Run {
            session,
            truth,
            config,
            out,
        } => {
            let text = config.as_deref().map(commands::read_config).transpose()?;
            let outputs = match session {
                Some(session) => {
                    let truth = truth.unwrap_or_else(|| commands::sibling_truth_path(&session));
                    commands::run_stored(&session, &truth, text.as_deref())?
                }
                None => commands::run_config(text.as_deref().expect("clap requires --config"))?,
            };
            finish(&outputs, &out_dir(out, text.as_deref()))
        }
        Command::Sweep { config, grid, out } => {
            let text = commands::read_config(&config)?;
            let outputs = commands::sweep(&text, &grid)?;
            finish(&outputs, &out_dir(out, Some(&text)))
        }
        Command::Selftest { only, out } => {
            let (outputs, timed) = commands::selftest(&only)?;
            finish(&outputs, &out_dir(out, None))?;
            let failed: Vec<String> = timed
                .iter()
                .filter(|t| !t.ok())
                .map(|t| t.result.id.to_string())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::SelftestFailed(format!("criteria {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

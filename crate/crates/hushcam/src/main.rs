use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hushcam::pipeline::{cmd_compress, cmd_reconstruct, cmd_synth, cmd_sweep, RunSummary};
use hushcam::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hushcam", version, about = "Compressive acquisition and valence classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set m_values=[500,50]` or
    /// `--set classifier.kind=knn`. Applied in order after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic corpus as image files plus labels.csv.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Measure every image at every m and write sample archives and a manifest.
    Compress {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Cross-validate the classifier at every m.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Read samples from a compress output directory instead of
        /// measuring the dataset in-line.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Recover images by basis pursuit and write a gallery with a PSNR sidecar.
    Reconstruct {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        archive: Option<PathBuf>,
        /// Image ids (file stems); defaults to `reconstruct_ids` from the config.
        #[arg(long = "id", value_delimiter = ',')]
        ids: Vec<String>,
    },
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(args.config.as_deref(), &args.overrides)
}

fn run(cli: Cli) -> Result<RunSummary, Error> {
    match cli.command {
        Command::Synth { cfg } => cmd_synth(&load(&cfg)?),
        Command::Compress { cfg } => cmd_compress(&load(&cfg)?),
        Command::Sweep { cfg, archive } => {
            let (report, summary) = cmd_sweep(&load(&cfg)?, archive.as_deref())?;
            for r in &report.rows {
                println!(
                    "m={:<5} ratio={:.3}% train={:.3} test={:.3}",
                    r.m, r.compression_ratio_percent, r.train_accuracy, r.test_accuracy
                );
            }
            Ok(summary)
        }
        Command::Reconstruct { cfg, archive, ids } => {
            let (rows, summary) = cmd_reconstruct(&load(&cfg)?, archive.as_deref(), &ids)?;
            for r in rows.iter().filter(|r| r.m.is_some()) {
                let psnr = r.psnr.map_or("-".to_string(), |p| format!("{p:.2} dB"));
                let flag = if r.converged == Some(false) { " (not converged)" } else { "" };
                println!("{} m={} psnr={psnr}{flag}", r.id, r.m.unwrap_or(0));
            }
            Ok(summary)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            eprintln!("wrote {} files", summary.written.len());
            if summary.failures.is_empty() {
                return ExitCode::SUCCESS;
            }
            for f in &summary.failures {
                eprintln!("failed: {}: {}", f.item, f.reason);
            }
            eprintln!("error: {}", Error::Partial { failed: summary.failures.len() });
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use molgen::commands::{self, CmdResult};

#[derive(Parser)]
#[command(name = "molgen", version, about = "Train and sample a graph VAE with an edge transformer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a QM9 CSV into a dataset file.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run both training stages and write the best checkpoint.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample molecules and write one SMILES per line.
    Generate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score generated SMILES against a training set.
    Evaluate {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long = "train-set")]
        train_set: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Sweep one property-tied latent coordinate.
    Traverse {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        property: String,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export encoded coordinates against a property label.
    Scatter {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        property: String,
        #[arg(long = "free-dim")]
        free_dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cmd: Command) -> CmdResult<()> {
    match cmd {
        Command::Ingest { input, out, limit } => {
            let rep = commands::ingest(&input, &out, limit)?;
            println!(
                "{} molecules written ({} unsupported, {} malformed skipped)",
                rep.molecules, rep.skipped_unsupported, rep.skipped_malformed
            );
        }
        Command::Train { dataset, config, out } => {
            let outcome = commands::train_file(&dataset, &config, &out)?;
            if let Some(last) = outcome.history.last() {
                println!("trained {} epochs, final validation loss {:.6}", last.epoch + 1, last.val_loss);
            }
        }
        Command::Generate { ckpt, n, seed, out } => commands::generate_file(&ckpt, n, seed, &out)?,
        Command::Evaluate {
            generated,
            train_set,
            report,
        } => {
            let r = commands::evaluate_file(&generated, &train_set, &report)?;
            println!(
                "validity {:.4} uniqueness {:.4} novelty {:.4} vun {:.4}",
                r.validity, r.uniqueness, r.novelty, r.vun
            );
        }
        Command::Traverse {
            ckpt,
            property,
            lo,
            hi,
            steps,
            out,
        } => commands::traverse_file(&ckpt, &property, lo, hi, steps, &out)?,
        Command::Scatter {
            ckpt,
            dataset,
            property,
            free_dim,
            out,
        } => commands::scatter_file(&ckpt, &dataset, &property, free_dim, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("molgen: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabppo::config::{DataSource, Overrides, RunConfig, TrainerKind};
use tabppo::run::{self, EvalData};
use tabppo::{Error, Result};
use tabppo_core::EncoderKind;

#[derive(Parser)]
#[command(name = "tabppo", version, about = "Tabular intrusion detection trained with PPO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its schema.
    Generate(Common),
    /// Train a model and evaluate it on the held-out split.
    Train(Common),
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train the three ablation variants on the same data and seed.
    Ablate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, value_enum)]
    trainer: Option<TrainerKind>,
    #[arg(long, value_enum)]
    encoder: Option<EncoderArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EncoderArg {
    Transformer,
    Mlp,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            data: self.data.clone(),
            label_column: self.label_column.clone(),
            trainer: self.trainer,
            encoder: self.encoder.map(|e| match e {
                EncoderArg::Transformer => EncoderKind::Transformer,
                EncoderArg::Mlp => EncoderKind::Mlp,
            }),
            seed: self.seed,
            epochs: self.epochs,
            out: self.out.clone(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.resolve()?;
            let DataSource::Synthetic(spec) = &cfg.data else {
                return Err(Error::Config("generate needs a synthetic data source".into()));
            };
            let path = run::generate(spec, &cfg.out_dir)?;
            println!("{}", path.display());
        }
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let outcome = run::train(&cfg)?;
            print!("{}", outcome.report.to_table());
            println!("outputs in {}", outcome.config.out_dir.display());
        }
        Command::Eval { common, checkpoint } => {
            let data = match (&common.data, &common.config) {
                (Some(path), _) => EvalData::Csv {
                    path: path.clone(),
                    label_column: common.label_column.clone(),
                },
                (None, Some(_)) => match common.resolve()?.data {
                    DataSource::Csv { path, label_column, .. } => EvalData::Csv {
                        path,
                        label_column: Some(label_column),
                    },
                    DataSource::Synthetic(spec) => EvalData::Synthetic(spec),
                },
                (None, None) => return Err(Error::Config("eval needs --data or --config".into())),
            };
            let report = run::evaluate(&checkpoint, &data)?;
            print!("{}", report.to_table());
        }
        Command::Ablate(common) => {
            let cfg = common.resolve()?;
            let rows = run::ablate(&cfg)?;
            print!("{}", run::render_ablation(&rows));
            if let Some(e) = rows.iter().find_map(|r| r.result.as_ref().err()) {
                return Ok(ExitCode::from(e.exit_code()));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

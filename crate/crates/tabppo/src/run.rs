//! The four commands: generate, train, eval and ablate.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tabppo_core::data::{generate_synthetic_raw, prepare, Prepared};
use tabppo_core::heads::NetSpec;
use tabppo_core::metrics::{confusion, report};
use tabppo_core::rl::{ce_epoch, ppo_epoch, predict_dataset, TrainerState};
use tabppo_core::{ClassReport, Dataset, EncoderKind, EpochMetrics, FeatureSchema, PolicyValueNet, SyntheticSpec};

use crate::checkpoint::{save_schema, Checkpoint};
use crate::config::{DataSource, RunConfig, TrainerKind};
use crate::csvio::{read_raw, read_with_schema, write_csv};
use crate::error::{Error, Result};

pub const DATA_FILE: &str = "data.csv";
pub const SCHEMA_FILE: &str = "schema.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_KV_FILE: &str = "report.kv";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::io(path))
}

/// Writes `out_dir/data.csv` and `out_dir/schema.json` for `spec`. The
/// schema here is fitted on every row; training refits on its train split.
pub fn generate(spec: &SyntheticSpec, out_dir: &Path) -> Result<PathBuf> {
    let raw = generate_synthetic_raw(spec)?;
    create_dir(out_dir)?;
    let csv = out_dir.join(DATA_FILE);
    write_csv(&raw, &csv)?;
    save_schema(&out_dir.join(SCHEMA_FILE), &FeatureSchema::fit(&raw)?)?;
    log::info!("wrote {} rows to {}", raw.n_rows(), csv.display());
    Ok(csv)
}

/// Split and encoded data for one run.
#[derive(Debug, Clone)]
pub struct RunData {
    pub prepared: Prepared,
    pub label_column: Option<String>,
}

pub fn load_data(cfg: &RunConfig) -> Result<RunData> {
    let (raw, label_column) = match &cfg.data {
        DataSource::Csv {
            path,
            label_column,
            hints,
        } => (read_raw(path, label_column, hints)?, Some(label_column.clone())),
        DataSource::Synthetic(spec) => (generate_synthetic_raw(spec)?, None),
    };
    let prepared = prepare(&raw, cfg.train_fraction, cfg.seed)?;
    for &c in &prepared.undersized_classes {
        log::warn!("class `{}` has fewer than two samples; none held out", prepared.schema.labels[c]);
    }
    Ok(RunData { prepared, label_column })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub config: RunConfig,
    pub log: Vec<EpochMetrics>,
    pub report: ClassReport,
    pub checkpoint: Checkpoint,
}

/// Loads data per `cfg` and trains. See [`train_on`].
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    train_on(cfg, &data)
}

/// Trains on already loaded data and writes the resolved config, schema,
/// checkpoint, per-epoch log and the test-split report into `cfg.out_dir`.
pub fn train_on(cfg: &RunConfig, data: &RunData) -> Result<TrainOutcome> {
    let mut cfg = cfg.clone();
    cfg.materialize();
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    create_dir(&out)?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    let Prepared { schema, train, test, .. } = &data.prepared;
    save_schema(&out.join(SCHEMA_FILE), schema)?;

    let spec = NetSpec::for_schema(cfg.encoder.clone(), schema);
    let mut net = PolicyValueNet::new(spec, cfg.seed)?;
    let ce = cfg.ce_config();
    let (rate, window) = match cfg.trainer {
        TrainerKind::Ppo => (cfg.ppo.learning_rate, cfg.reward.window_k),
        TrainerKind::Ce => (ce.learning_rate, 1),
    };
    let mut state = TrainerState::new(&net, rate, window, cfg.seed);
    if cfg.trainer == TrainerKind::Ppo && cfg.ppo.entropy_coef != 0.0 {
        log::warn!("entropy bonus in use: entropy_coef = {}", cfg.ppo.entropy_coef);
    }
    log::info!(
        "training {:?} encoder with {:?} for {} epochs, seed {}",
        cfg.encoder.kind,
        cfg.trainer,
        cfg.epochs,
        cfg.seed
    );

    let metrics_path = out.join(METRICS_FILE);
    let file = File::create(&metrics_path).map_err(Error::io(&metrics_path))?;
    let mut metrics = BufWriter::new(file);
    let mut log = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let m = match cfg.trainer {
            TrainerKind::Ppo => ppo_epoch(&mut net, &mut state, train, Some(test), &cfg.ppo, &cfg.reward)?,
            TrainerKind::Ce => ce_epoch(&mut net, &mut state, train, Some(test), &ce)?,
        };
        log::info!(
            "epoch {}: train acc {:.4}, test acc {:.4}, test macro F1 {:.4}",
            m.epoch,
            m.train_accuracy,
            m.test_accuracy.unwrap_or(f64::NAN),
            m.test_macro_f1.unwrap_or(f64::NAN)
        );
        let line = serde_json::to_string(&m).expect("metrics serialize");
        writeln!(metrics, "{line}").map_err(Error::io(&metrics_path))?;
        metrics.flush().map_err(Error::io(&metrics_path))?;
        log.push(m);
    }

    let report = report_for(&net, test, schema)?;
    let mut text = format!(
        "trainer: {:?}\nencoder: {:?}\nseed: {}\nepochs: {}\n",
        cfg.trainer, cfg.encoder.kind, cfg.seed, cfg.epochs
    );
    if cfg.trainer == TrainerKind::Ppo && cfg.ppo.entropy_coef != 0.0 {
        text.push_str(&format!("entropy_coef: {}\n", cfg.ppo.entropy_coef));
    }
    text.push('\n');
    text.push_str(&report.to_table());
    write_file(&out.join(REPORT_FILE), &text)?;
    write_file(&out.join(REPORT_KV_FILE), &report.to_key_values())?;

    let checkpoint = Checkpoint::new(cfg.trainer, data.label_column.clone(), schema.clone(), &net, state);
    checkpoint.save(&out.join(CHECKPOINT_FILE))?;
    Ok(TrainOutcome {
        config: cfg,
        log,
        report,
        checkpoint,
    })
}

fn report_for(net: &PolicyValueNet, ds: &Dataset, schema: &FeatureSchema) -> Result<ClassReport> {
    let preds = predict_dataset(net, ds)?;
    let cm = confusion(&ds.labels, &preds, ds.n_classes)?;
    Ok(report(&cm, &schema.labels)?)
}

/// Where `eval` reads its rows from.
#[derive(Debug, Clone)]
pub enum EvalData {
    Csv { path: PathBuf, label_column: Option<String> },
    /// Every row of a regenerated synthetic table.
    Synthetic(SyntheticSpec),
}

pub fn evaluate(checkpoint: &Path, data: &EvalData) -> Result<ClassReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let net = ck.net()?;
    let ds = match data {
        EvalData::Csv { path, label_column } => {
            let label = label_column
                .clone()
                .or_else(|| ck.label_column.clone())
                .unwrap_or_else(|| crate::csvio::LABEL_COLUMN.to_string());
            read_with_schema(path, &label, &ck.schema)?
        }
        EvalData::Synthetic(spec) => ck.schema.encode(&generate_synthetic_raw(spec)?)?,
    };
    report_for(&net, &ds, &ck.schema)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub name: &'static str,
    pub slug: &'static str,
    pub encoder: EncoderKind,
    pub trainer: TrainerKind,
}

pub const VARIANTS: [Variant; 3] = [
    Variant {
        name: "TT+PPO",
        slug: "tt_ppo",
        encoder: EncoderKind::Transformer,
        trainer: TrainerKind::Ppo,
    },
    Variant {
        name: "TT+CE (no PPO)",
        slug: "tt_ce",
        encoder: EncoderKind::Transformer,
        trainer: TrainerKind::Ce,
    },
    Variant {
        name: "MLP+PPO (no TT)",
        slug: "mlp_ppo",
        encoder: EncoderKind::Mlp,
        trainer: TrainerKind::Ppo,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct VariantScore {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Class with the fewest training samples and its test F1.
    pub rarest_class: String,
    pub rarest_f1: f64,
}

#[derive(Debug)]
pub struct AblationRow {
    pub variant: Variant,
    pub seed: u64,
    pub result: Result<VariantScore>,
}

/// Runs the three variants on the same data and seed. A failing variant
/// does not stop the others.
pub fn ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let counts = data.prepared.train.class_counts();
    let rarest = (0..counts.len()).min_by_key(|&c| (counts[c], c)).unwrap_or(0);
    let rarest_name = data.prepared.schema.labels[rarest].clone();
    let mut rows = Vec::with_capacity(VARIANTS.len());
    for v in VARIANTS {
        let mut vc = cfg.clone();
        vc.encoder.kind = v.encoder;
        vc.trainer = v.trainer;
        vc.out_dir = cfg.out_dir.join(v.slug);
        log::info!("ablation variant {} with seed {}", v.name, vc.seed);
        let result = train_on(&vc, &data).map(|o| VariantScore {
            accuracy: o.report.accuracy,
            macro_f1: o.report.macro_f1,
            rarest_class: rarest_name.clone(),
            rarest_f1: o.report.class(&rarest_name).map_or(0.0, |c| c.f1),
        });
        if let Err(e) = &result {
            log::error!("variant {} failed: {e}", v.name);
        }
        rows.push(AblationRow {
            variant: v,
            seed: vc.seed,
            result,
        });
    }
    Ok(rows)
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:<18} {:>6} {:>10} {:>10} {:>14}\n",
        "Variant", "Seed", "Accuracy", "Macro F1", "Rarest F1"
    );
    for row in rows {
        match &row.result {
            Ok(s) => out.push_str(&format!(
                "{:<18} {:>6} {:>9.2}% {:>9.2}% {:>14.4}\n",
                row.variant.name,
                row.seed,
                100.0 * s.accuracy,
                100.0 * s.macro_f1,
                s.rarest_f1
            )),
            Err(e) => out.push_str(&format!("{:<18} {:>6} failed: {e}\n", row.variant.name, row.seed)),
        }
    }
    if let Some(Ok(s)) = rows.iter().map(|r| r.result.as_ref()).find(|r| r.is_ok()) {
        out.push_str(&format!("rarest class: {}\n", s.rarest_class));
    }
    out
}

mod common;

use tabppo::checkpoint::Checkpoint;
use tabppo::config::{DataSource, RunConfig, TrainerKind};
use tabppo::csvio::SchemaHints;
use tabppo::run::{self, EvalData, CHECKPOINT_FILE, CONFIG_FILE, DATA_FILE, METRICS_FILE, SCHEMA_FILE};
use tabppo_core::heads::NetSpec;
use tabppo_core::rl::evaluate;
use tabppo_core::{EncoderKind, PolicyValueNet};

use common::{small_config, small_spec};

#[test]
fn generate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(5);
    let a = run::generate(&spec, &dir.path().join("a")).unwrap();
    let b = run::generate(&spec, &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let schema = |d: &str| std::fs::read(dir.path().join(d).join(SCHEMA_FILE)).unwrap();
    assert_eq!(schema("a"), schema("b"));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1 + 140);
    assert_eq!(text.lines().filter(|l| l.ends_with(",class_2")).count(), 20);
}

#[test]
fn train_writes_all_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = run::train(&small_config(&dir.path().join("first"), 2)).unwrap();
    assert_eq!(first.log.len(), 2);
    for f in [CONFIG_FILE, SCHEMA_FILE, CHECKPOINT_FILE, METRICS_FILE, "report.txt", "report.kv"] {
        assert!(dir.path().join("first").join(f).exists(), "{f} missing");
    }
    let mut cfg = RunConfig::load(&dir.path().join("first").join(CONFIG_FILE)).unwrap();
    assert_eq!(cfg.ppo.episode_length, Some(16));
    cfg.out_dir = dir.path().join("second");
    run::train(&cfg).unwrap();
    let log = |d: &str| std::fs::read_to_string(dir.path().join(d).join(METRICS_FILE)).unwrap();
    assert_eq!(log("first"), log("second"));
    assert_eq!(log("first").lines().count(), 2);
}

#[test]
fn zero_epochs_checkpoint_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0);
    let outcome = run::train(&cfg).unwrap();
    let ck = Checkpoint::load(&dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ck, outcome.checkpoint);
    let init = PolicyValueNet::new(NetSpec::for_schema(cfg.encoder.clone(), &ck.schema), cfg.seed).unwrap();
    assert_eq!(&ck.params, init.params());
}

#[test]
fn checkpoint_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run::train(&small_config(dir.path(), 1)).unwrap();
    let ck = Checkpoint::load(&dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ck, outcome.checkpoint);
    let bits = |p: &tabppo_core::ParamStore| {
        p.ids().flat_map(|id| p.get(id).data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    assert_eq!(bits(&ck.params), bits(&outcome.checkpoint.params));
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    run::train(&small_config(dir.path(), 0)).unwrap();
    let path = dir.path().join(CHECKPOINT_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\"format_version\": 1", "\"format_version\": 9")).unwrap();
    let err = Checkpoint::load(&path).unwrap_err();
    assert!(err.to_string().contains("format version"), "{err}");
    std::fs::write(&path, "{").unwrap();
    assert!(Checkpoint::load(&path).is_err());
}

#[test]
fn eval_of_overfit_model_on_its_training_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    let mut spec = small_spec(9);
    spec.samples_per_class = vec![25, 25];
    spec.n_classes = 2;
    let csv = run::generate(&spec, &data_dir).unwrap();
    let mut cfg = small_config(&dir.path().join("run"), 60);
    cfg.data = DataSource::Csv {
        path: csv.clone(),
        label_column: "label".into(),
        hints: SchemaHints::default(),
    };
    cfg.trainer = TrainerKind::Ce;
    cfg.ppo.minibatch_size = 8;
    cfg.train_fraction = 0.5;
    let outcome = run::train(&cfg).unwrap();
    let data = EvalData::Csv {
        path: csv,
        label_column: None,
    };
    let ck = dir.path().join("run").join(CHECKPOINT_FILE);
    let a = run::evaluate(&ck, &data).unwrap();
    let b = run::evaluate(&ck, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_table(), b.to_table());
    assert_eq!(a.total, 50);

    let loaded = run::load_data(&outcome.config).unwrap();
    let net = Checkpoint::load(&ck).unwrap().net().unwrap();
    let train = evaluate(&net, &loaded.prepared.train, &loaded.prepared.schema.labels).unwrap();
    assert_eq!(train.total, 26);
    assert!(train.accuracy >= 0.95, "training accuracy {}", train.accuracy);
}

#[test]
fn eval_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    run::train(&small_config(dir.path(), 0)).unwrap();
    let csv = dir.path().join(DATA_FILE);
    std::fs::write(&csv, "cat_0,num_0,label\nv1,0.5,class_0\n").unwrap();
    let err = run::evaluate(
        &dir.path().join(CHECKPOINT_FILE),
        &EvalData::Csv {
            path: csv,
            label_column: None,
        },
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("cat_1"), "{err}");
}

#[test]
fn ablate_runs_three_variants_with_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 1);
    cfg.seed = 4;
    let rows = run::ablate(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.seed == 4 && r.result.is_ok()));
    let kinds: Vec<_> = rows.iter().map(|r| (r.variant.encoder, r.variant.trainer)).collect();
    assert_eq!(
        kinds,
        vec![
            (EncoderKind::Transformer, TrainerKind::Ppo),
            (EncoderKind::Transformer, TrainerKind::Ce),
            (EncoderKind::Mlp, TrainerKind::Ppo),
        ]
    );
    let table = run::render_ablation(&rows);
    assert_eq!(table.lines().filter(|l| l.contains("PPO") || l.contains("CE")).count(), 3);
    for slug in ["tt_ppo", "tt_ce", "mlp_ppo"] {
        let cfg = RunConfig::load(&dir.path().join(slug).join(CONFIG_FILE)).unwrap();
        assert_eq!(cfg.seed, 4);
    }
}

#[test]
fn ablate_reports_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1);
    std::fs::write(dir.path().join("tt_ce"), "not a directory").unwrap();
    let rows = run::ablate(&cfg).unwrap();
    assert!(rows[0].result.is_ok());
    assert!(rows[1].result.is_err());
    assert!(rows[2].result.is_ok());
    assert!(run::render_ablation(&rows).contains("failed"));
}

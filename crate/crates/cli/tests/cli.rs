use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use emogait::affect::{extract_affective, FeatureDefinitionTable};
use emogait::generator::{build_emotion_schedule, rollout, TrajectorySpec};
use emogait::model::ModelConfig;
use emogait::motion_io::{
    gait_to_bvh, parse_bvh, save_document, save_gait, CorpusManifest, ManifestEntry, Split, MANIFEST_FILE,
};
use emogait::movement::{extract_movement, ContactConfig};
use emogait::synthetic::{self, WalkSpec, WalkStyle};
use emogait::trainer::{self, Checkpoint, TrainConfig, BEST_CHECKPOINT, LAST_CHECKPOINT, LOSS_LOG};
use emogait::{EmotionVector, Gait};
use tempfile::TempDir;

fn emogait(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emogait"))
        .args(args)
        .env_remove("EMOGAIT_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gaits() -> Vec<Gait> {
    synthetic::fixture_gaits(60).unwrap()
}

/// A corpus directory of the fixture gaits, all unassigned.
fn write_corpus(dir: &Path) {
    let mut manifest = CorpusManifest::new(0);
    for (i, g) in gaits().iter().enumerate() {
        let path = format!("clips/fixture_{i}.json");
        save_gait(&dir.join(&path), g).unwrap();
        manifest.entries.push(ManifestEntry {
            path,
            emotion: g.emotion.clone(),
            split: Split::Unassigned,
        });
    }
    manifest.save(&dir.join(MANIFEST_FILE)).unwrap();
}

fn write_tiny_config(path: &Path) {
    let cfg = serde_json::json!({ "model": ModelConfig::tiny(), "train": { "epochs": 1 } });
    fs::write(path, cfg.to_string()).unwrap();
}

fn library_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 1,
        seed,
        ..TrainConfig::default()
    }
}

/// Corpus plus a one-epoch model trained through the binary.
struct Trained {
    dir: TempDir,
}

impl Trained {
    fn corpus(&self) -> PathBuf {
        self.dir.path().join("corpus")
    }
    fn run(&self) -> PathBuf {
        self.dir.path().join("run")
    }
    fn config(&self) -> PathBuf {
        self.dir.path().join("tiny.json")
    }
    fn checkpoint(&self) -> PathBuf {
        self.run().join(BEST_CHECKPOINT)
    }
}

fn trained() -> &'static Trained {
    static T: OnceLock<Trained> = OnceLock::new();
    T.get_or_init(|| {
        let t = Trained {
            dir: tempfile::tempdir().unwrap(),
        };
        write_corpus(&t.corpus());
        write_tiny_config(&t.config());
        let out = emogait(&[
            "train",
            "--config",
            s(&t.config()),
            "--corpus",
            s(&t.corpus()),
            "--out-dir",
            s(&t.run()),
            "--seed",
            "3",
            "--deterministic",
        ]);
        assert_ok(&out);
        t
    })
}

#[test]
fn extract_writes_affective_and_movement_columns() {
    let dir = tempfile::tempdir().unwrap();
    let gait = gaits().remove(2);
    let input = dir.path().join("g.json");
    let csv = dir.path().join("f.csv");
    save_gait(&input, &gait).unwrap();
    let out = emogait(&["extract", "--in", s(&input), "--out", s(&csv)]);
    assert_ok(&out);

    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 1 + 18 + 7);
    assert_eq!(header[0], "frame");
    assert_eq!(header[19..], ["h", "s", "s_bar", "delta", "kappa", "theta", "omega"]);
    assert_eq!(lines.len(), 1 + gait.len());

    let defs = FeatureDefinitionTable::default();
    let movement = extract_movement(&gait, &ContactConfig::default()).unwrap();
    for (t, line) in lines[1..].iter().enumerate() {
        let values: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(values[0], t as f64);
        assert_eq!(
            values[1..19],
            extract_affective(&gait.frames[t], &defs).unwrap().to_vec()[..]
        );
        assert_eq!(values[19..], movement.row(t));
    }

    let piped = emogait(&["extract", "--in", s(&input)]);
    assert_ok(&piped);
    assert_eq!(stdout(&piped), text);
}

#[test]
fn ingest_windows_bvh_files_and_split_tags_them() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    fs::create_dir_all(&raw).unwrap();
    for (i, frames) in [250usize, 500, 100].into_iter().enumerate() {
        let walk = synthetic::walk(
            &WalkSpec::straight(frames, WalkStyle::HAPPY),
            EmotionVector::one_hot(0, 4),
        );
        fs::write(
            raw.join(format!("walk{i}.bvh")),
            gait_to_bvh(&walk.unwrap().gait).unwrap(),
        )
        .unwrap();
    }
    let corpus = dir.path().join("corpus");
    let out = emogait(&[
        "ingest",
        "--in",
        s(&raw),
        "--emotion",
        "0,0,1,0",
        "--out-dir",
        s(&corpus),
    ]);
    assert_ok(&out);
    assert_eq!(stdout(&out).lines().count(), 3);

    let (manifest, base) = CorpusManifest::load(&corpus).unwrap();
    // 250 and 500 frames give 1 and 2 windows of 60 frames at stride 4
    assert_eq!(manifest.entries.len(), 3);
    let loaded = manifest.load_gaits(&base, None).unwrap();
    let source = parse_bvh(&fs::read_to_string(raw.join("walk1.bvh")).unwrap(), "walk1").unwrap();
    for g in &loaded {
        assert_eq!(g.len(), 60);
        assert_eq!(g.emotion, EmotionVector::one_hot(2, 4));
    }
    assert_eq!(loaded[2].frames[1].positions, source.frames[240 + 4]);

    let out = emogait(&[
        "split",
        "--corpus",
        s(&corpus),
        "--split",
        "0.34,0.33,0.33",
        "--seed",
        "5",
    ]);
    assert_ok(&out);
    let (split, _) = CorpusManifest::load(&corpus).unwrap();
    assert_eq!(split.seed, 5);
    assert_eq!(stdout(&out).trim(), "train=1 val=1 test=1");
    let again = emogait(&[
        "split",
        "--corpus",
        s(&corpus.join(MANIFEST_FILE)),
        "--split",
        "0.34,0.33,0.33",
        "--seed",
        "5",
    ]);
    assert_ok(&again);
    assert_eq!(CorpusManifest::load(&corpus).unwrap().0, split);
}

#[test]
fn training_matches_the_library_byte_for_byte() {
    let t = trained();
    let log = fs::read_to_string(t.run().join(LOSS_LOG)).unwrap();
    assert_eq!(log.lines().count(), 2, "header plus one epoch: {log}");

    let lib = tempfile::tempdir().unwrap();
    trainer::train_to_dir(
        &gaits(),
        &[],
        &ModelConfig::tiny(),
        &library_train_config(3),
        lib.path(),
        false,
    )
    .unwrap();
    for name in [BEST_CHECKPOINT, LAST_CHECKPOINT, LOSS_LOG] {
        assert_eq!(
            fs::read(t.run().join(name)).unwrap(),
            fs::read(lib.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn deterministic_runs_write_identical_files() {
    let t = trained();
    let again = tempfile::tempdir().unwrap();
    let out = emogait(&[
        "train",
        "--config",
        s(&t.config()),
        "--corpus",
        s(&t.corpus()),
        "--out-dir",
        s(again.path()),
        "--seed",
        "3",
        "--deterministic",
    ]);
    assert_ok(&out);
    for name in [BEST_CHECKPOINT, LAST_CHECKPOINT, LOSS_LOG, "config.json"] {
        assert_eq!(
            fs::read(t.run().join(name)).unwrap(),
            fs::read(again.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn eval_prints_the_library_report() {
    let t = trained();
    let out = emogait(&["eval", "--checkpoint", s(&t.checkpoint()), "--test-set", s(&t.corpus())]);
    assert_ok(&out);
    let model = Checkpoint::load(&t.checkpoint()).unwrap().to_model().unwrap();
    let report = trainer::evaluate(&model, &gaits()).unwrap();
    assert_eq!(
        stdout(&out),
        format!(
            "pose_error={} rotation_error_deg={}\n",
            report.pose_error, report.rotation_error_deg
        )
    );
}

#[test]
fn generate_and_transition_match_library_rollouts() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let seed = gaits().remove(0);
    let seed_path = dir.path().join("seed.json");
    save_gait(&seed_path, &seed).unwrap();
    let path = TrajectorySpec::bend(0.5, 0.6, 1.0, 5.0).unwrap();
    let path_file = dir.path().join("path.txt");
    fs::write(&path_file, path.to_text()).unwrap();
    let model = Checkpoint::load(&t.checkpoint()).unwrap().to_model().unwrap();
    let common = |name: &str| {
        vec![
            "--checkpoint".to_string(),
            s(&t.checkpoint()).into(),
            "--seed-gait".into(),
            s(&seed_path).into(),
            "--trajectory".into(),
            s(&path_file).into(),
            "--steps".into(),
            "20".into(),
            "--out-dir".into(),
            s(dir.path()).into(),
            "--name".into(),
            name.into(),
        ]
    };
    let run = |cmd: &str, name: &str, extra: &[&str]| {
        let mut args = vec![cmd.to_string()];
        args.extend(common(name));
        args.extend(extra.iter().map(|a| a.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = emogait(&refs);
        assert_ok(&out);
    };

    run("generate", "single", &["--emotion", "0,1,0,0", "--bvh"]);
    let sad = EmotionVector::one_hot(1, 4);
    let expected = rollout(&model, &seed, &path, &vec![sad.clone(); 20], 20).unwrap();
    let lib = dir.path().join("lib_single.json");
    save_document(&lib, &expected.document()).unwrap();
    assert_eq!(
        fs::read(dir.path().join("single.json")).unwrap(),
        fs::read(&lib).unwrap()
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("single.bvh")).unwrap(),
        gait_to_bvh(&expected.gait).unwrap()
    );

    run(
        "transition",
        "mixed",
        &["--emotion", "1,0,0,0", "--to-emotion", "0,0,0,1"],
    );
    let schedule = build_emotion_schedule(&EmotionVector::one_hot(0, 4), &EmotionVector::one_hot(3, 4), 20).unwrap();
    let expected = rollout(&model, &seed, &path, &schedule, 20).unwrap();
    save_document(&lib, &expected.document()).unwrap();
    assert_eq!(
        fs::read(dir.path().join("mixed.json")).unwrap(),
        fs::read(&lib).unwrap()
    );
}

#[test]
fn print_config_applies_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"seed": 9, "train": {"epochs": 5, "lr": 0.01}, "ingest": {"window": 30}}"#,
    )
    .unwrap();
    let out = emogait(&[
        "--config",
        s(&cfg),
        "train",
        "--corpus",
        "x",
        "--epochs",
        "2",
        "--print-config",
    ]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["train"]["epochs"], 2);
    assert_eq!(v["train"]["lr"], 0.01);
    assert_eq!(v["train"]["seed"], 9);
    assert_eq!(v["augment"]["seed"], 9);
    assert_eq!(v["ingest"]["window"], 30);
    assert_eq!(v["ingest"]["stride"], 4);

    let out = emogait(&[
        "--config",
        s(&cfg),
        "--seed",
        "1",
        "train",
        "--corpus",
        "x",
        "--print-config",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!((v["seed"].as_u64(), v["train"]["seed"].as_u64()), (Some(1), Some(1)));
    assert_eq!(v["train"]["epochs"], 5);
}

#[test]
fn exit_statuses_separate_bad_input_from_numerical_failure() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emogait(&["--help"]).status.code(), Some(0));
    assert_eq!(
        emogait(&["extract", "--in", "a.json", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        emogait(&["extract", "--in", s(&dir.path().join("missing.json"))])
            .status
            .code(),
        Some(1)
    );
    let bad_cfg = dir.path().join("bad.json");
    fs::write(&bad_cfg, r#"{"train": {"epoch": 3}}"#).unwrap();
    assert_eq!(
        emogait(&["--config", s(&bad_cfg), "eval", "--checkpoint", "c", "--test-set", "t"])
            .status
            .code(),
        Some(1)
    );

    let mut blown = Checkpoint::load(&t.checkpoint()).unwrap();
    for p in blown.params.iter_mut().filter(|p| p.name.starts_with("enc1")) {
        p.value.iter_mut().for_each(|v| *v = 1e300);
    }
    let path = dir.path().join("blown.json");
    blown.save(&path).unwrap();
    let out = emogait(&["eval", "--checkpoint", s(&path), "--test-set", s(&t.corpus())]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let out = Command::new(env!("CARGO_BIN_EXE_emogait"))
        .args(["split", "--corpus", "nowhere"])
        .env("EMOGAIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("EMOGAIT_THREADS"));
}

#[test]
fn augment_matches_the_library_manifest() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let seed = gaits().remove(1);
    let seed_path = dir.path().join("seed.json");
    save_gait(&seed_path, &seed).unwrap();
    let path = TrajectorySpec::straight(6.0, 0.3).unwrap();
    let path_file = dir.path().join("path.txt");
    fs::write(&path_file, path.to_text()).unwrap();
    let cli_out = dir.path().join("cli");
    let out = emogait(&[
        "augment",
        "--checkpoint",
        s(&t.checkpoint()),
        "--seed-gait",
        s(&seed_path),
        "--trajectory",
        s(&path_file),
        "--emotion",
        "1,0,0,0",
        "--emotion",
        "0,0,1,1",
        "--pairs",
        "1",
        "--steps",
        "20",
        "--seed",
        "4",
        "--out-dir",
        s(&cli_out),
    ]);

    let model = Checkpoint::load(&t.checkpoint()).unwrap().to_model().unwrap();
    let emotions = vec![EmotionVector::one_hot(0, 4), EmotionVector::parse("0,0,1,1").unwrap()];
    let lib_out = dir.path().join("lib");
    let report = emogait::generator::augment_corpus(&model, &[seed], &[path], &emotions, 1, 20, 4, &lib_out).unwrap();
    assert_eq!(
        stdout(&out).trim(),
        format!(
            "generated={} failed={}",
            report.manifest.entries.len(),
            report.failures.len()
        )
    );
    let expected_status = if report.manifest.entries.is_empty() { 2 } else { 0 };
    assert_eq!(out.status.code(), Some(expected_status));
    assert_eq!(
        fs::read(cli_out.join(MANIFEST_FILE)).unwrap(),
        fs::read(lib_out.join(MANIFEST_FILE)).unwrap()
    );
    for entry in &report.manifest.entries {
        assert_eq!(
            fs::read(cli_out.join(&entry.path)).unwrap(),
            fs::read(lib_out.join(&entry.path)).unwrap()
        );
    }
}

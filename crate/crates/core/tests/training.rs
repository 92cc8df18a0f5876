use emogait::model::ModelConfig;
use emogait::synthetic;
use emogait::trainer::{self, Checkpoint, TrainConfig, BEST_CHECKPOINT, LAST_CHECKPOINT, LOSS_LOG, LOSS_LOG_HEADER};
use emogait::Gait;

fn short_gaits() -> Vec<Gait> {
    synthetic::fixture_gaits(30).unwrap()
}

fn quick(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_learning_rate_leaves_the_loss_unchanged() {
    let cfg = TrainConfig {
        lr: 0.0,
        beta_curriculum: 1.0,
        ..quick(3, 4)
    };
    let out = trainer::train(&short_gaits(), &[], &ModelConfig::tiny(), &cfg, None, |_, _| Ok(())).unwrap();
    assert_eq!(out.log.len(), 3);
    let first = out.log[0].train_total;
    assert!(first.is_finite() && first > 0.0);
    for row in &out.log {
        assert_eq!(row.train_total, first);
        assert_eq!(row.train_parts, out.log[0].train_parts);
        assert_eq!(row.tf_prob, 1.0);
        assert_eq!(row.lr, 0.0);
    }
    let values = |c: &Checkpoint| c.params.iter().map(|p| p.value.clone()).collect::<Vec<_>>();
    assert_eq!(values(&out.last), values(&out.best));
}

#[test]
fn training_reduces_the_loss() {
    let out = trainer::train(&short_gaits(), &[], &ModelConfig::tiny(), &quick(8, 1), None, |_, _| {
        Ok(())
    })
    .unwrap();
    let first = out.log.first().unwrap().train_total;
    let last = out.log.last().unwrap().train_total;
    assert!(last < 0.5 * first, "loss went from {first} to {last}");
}

#[test]
fn runs_are_reproducible_per_seed() {
    let gaits = short_gaits();
    let run = |seed| {
        trainer::train(
            &gaits,
            &gaits[..1],
            &ModelConfig::tiny(),
            &quick(2, seed),
            None,
            |_, _| Ok(()),
        )
        .unwrap()
    };
    let (a, b, c) = (run(3), run(3), run(4));
    assert_eq!(a.last.to_json().unwrap(), b.last.to_json().unwrap());
    assert_eq!(a.log, b.log);
    assert_ne!(a.last.params, c.last.params);
    assert!(a.log.iter().all(|r| r.val_total.is_some_and(f64::is_finite)));
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let gaits = short_gaits();
    let model = ModelConfig::tiny();
    let split = tempfile::tempdir().unwrap();
    trainer::train_to_dir(&gaits, &[], &model, &quick(2, 5), split.path(), false).unwrap();
    let resumed = trainer::train_to_dir(&gaits, &[], &model, &quick(4, 5), split.path(), true).unwrap();

    let whole = tempfile::tempdir().unwrap();
    let straight = trainer::train_to_dir(&gaits, &[], &model, &quick(4, 5), whole.path(), false).unwrap();

    assert_eq!(resumed.last.params, straight.last.params);
    assert_eq!(resumed.last.step, straight.last.step);
    assert_eq!(resumed.last.epoch, 4);

    let log = std::fs::read_to_string(split.path().join(LOSS_LOG)).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], LOSS_LOG_HEADER);
    assert_eq!(lines.len(), 5);
    assert_eq!(log, std::fs::read_to_string(whole.path().join(LOSS_LOG)).unwrap());
    assert!(split.path().join(BEST_CHECKPOINT).exists());
    let on_disk = Checkpoint::load(&split.path().join(LAST_CHECKPOINT)).unwrap();
    assert_eq!(on_disk, resumed.last);
}

#[test]
fn checkpoint_restores_identical_predictions() {
    let gaits = short_gaits();
    let out = trainer::train(&gaits, &[], &ModelConfig::tiny(), &quick(1, 2), None, |_, _| Ok(())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    out.last.save(&path).unwrap();
    let a = out.last.to_model().unwrap();
    let b = Checkpoint::load(&path).unwrap().to_model().unwrap();
    let truth = trainer::corpus_features(&gaits, &a.contact).unwrap();
    let (pa, _) = a.predict_next(&truth[0][..20]).unwrap();
    let (pb, _) = b.predict_next(&truth[0][..20]).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn checkpoint_rejects_a_mismatched_layout() {
    let out = trainer::train(&short_gaits(), &[], &ModelConfig::tiny(), &quick(1, 2), None, |_, _| {
        Ok(())
    })
    .unwrap();
    let mut bad = out.last.clone();
    bad.model.h3 += 1;
    assert!(bad.to_model().is_err());
    let mut bad = out.last.clone();
    bad.format = "something-else".into();
    assert!(bad.to_model().is_err());
}

#[test]
fn evaluation_skips_short_clips() {
    let gaits = short_gaits();
    let out = trainer::train(&gaits, &[], &ModelConfig::tiny(), &quick(1, 2), None, |_, _| Ok(())).unwrap();
    let model = out.last.to_model().unwrap();
    assert!(trainer::evaluate(&model, &gaits).is_err());
    let mut mixed = synthetic::fixture_gaits(60).unwrap();
    mixed.truncate(1);
    mixed.push(gaits[0].clone());
    let report = trainer::evaluate(&model, &mixed).unwrap();
    assert_eq!((report.clips, report.skipped), (1, 1));
    assert!(report.pose_error.is_finite() && report.rotation_error_deg.is_finite());
}

#[test]
fn invalid_configurations_are_rejected() {
    let gaits = short_gaits();
    let bad = TrainConfig {
        beta_curriculum: 1.5,
        ..quick(1, 0)
    };
    assert!(trainer::train(&gaits, &[], &ModelConfig::tiny(), &bad, None, |_, _| Ok(())).is_err());
    let long_context = TrainConfig {
        min_context: 40,
        ..quick(1, 0)
    };
    assert!(trainer::train(&gaits, &[], &ModelConfig::tiny(), &long_context, None, |_, _| Ok(())).is_err());
    assert!(trainer::train(&[], &[], &ModelConfig::tiny(), &quick(1, 0), None, |_, _| Ok(())).is_err());
}

#[test]
fn a_single_gait_is_memorized() {
    let gait = synthetic::fixture_gaits(60).unwrap().remove(0);
    let out = trainer::train(&[gait], &[], &ModelConfig::tiny(), &quick(300, 0), None, |_, _| Ok(())).unwrap();
    let first = out.log.first().unwrap().train_total;
    let last = out.log.last().unwrap().train_total;
    assert!(last < 0.01 * first, "loss went from {first} to {last}");
}

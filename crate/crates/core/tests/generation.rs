use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use emogait::affect::{extract_affective, FeatureDefinitionTable};
use emogait::generator::{self, augment_corpus, build_emotion_schedule, rollout, TrajectorySpec};
use emogait::model::ModelConfig;
use emogait::motion_io::{load_gait, CorpusManifest, GaitDocument, Split, MANIFEST_FILE};
use emogait::movement::{self, extract_movement, ContactConfig};
use emogait::rollout::GaitModel;
use emogait::synthetic;
use emogait::trainer::{self, TrainConfig};
use emogait::{EmotionVector, Gait};

fn seeds() -> Vec<Gait> {
    synthetic::fixture_gaits(60).unwrap()
}

/// The overfit model: shorter training leaves heels sliding too much for
/// contacts to be detected in generated gaits.
fn model() -> &'static GaitModel {
    static MODEL: OnceLock<GaitModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let cfg = TrainConfig {
            epochs: 300,
            ..TrainConfig::default()
        };
        let out = trainer::train(&seeds(), &[], &ModelConfig::tiny(), &cfg, None, |_, _| Ok(())).unwrap();
        out.best.to_model().unwrap()
    })
}

fn features_extract(g: &Gait) {
    let defs = FeatureDefinitionTable::default();
    for (t, f) in g.frames.iter().enumerate() {
        extract_affective(f, &defs).unwrap_or_else(|e| panic!("frame {t}: {e}"));
    }
    extract_movement(g, &ContactConfig::default()).unwrap();
}

#[test]
fn zero_steps_returns_the_seed_frames() {
    let seed = &seeds()[0];
    let path = TrajectorySpec::straight(5.0, 0.0).unwrap();
    let r = rollout(model(), seed, &path, &[], 0).unwrap();
    assert_eq!(r.gait.frames, seed.frames[..generator::SEED_FRAMES]);
    assert!(r.root_deviation().is_empty());
}

#[test]
fn rollout_checks_its_inputs() {
    let seed = &seeds()[0];
    let path = TrajectorySpec::straight(5.0, 0.0).unwrap();
    let schedule = vec![seed.emotion.clone(); 3];
    assert!(rollout(model(), seed, &path, &schedule, 4).is_err());
    let short = synthetic::fixture_gaits(10).unwrap();
    assert!(rollout(model(), &short[0], &path, &schedule, 3).is_err());
}

#[test]
fn rollouts_are_deterministic_and_follow_the_schedule() {
    let seed = &seeds()[2];
    let path = TrajectorySpec::bend(0.5, -FRAC_PI_2, 1.0, 10.0).unwrap();
    let schedule = build_emotion_schedule(&EmotionVector::one_hot(2, 4), &EmotionVector::one_hot(1, 4), 120).unwrap();
    let a = rollout(model(), seed, &path, &schedule, 120).unwrap();
    let b = rollout(model(), seed, &path, &schedule, 120).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.gait.len(), generator::SEED_FRAMES + 120);
    assert_eq!(a.gait.emotion, EmotionVector::one_hot(1, 4));
    let doc = a.document();
    assert_eq!(doc.schedule.as_deref(), Some(&schedule[..]));
    let back: GaitDocument = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(back.into_gait().unwrap(), a.gait);
    features_extract(&a.gait);
}

#[test]
fn generated_roots_stay_on_the_path() {
    let seed = &seeds()[3];
    let stride = generator::mean_stride(seed, &model().contact).unwrap();
    let mut speeds: Vec<f64> = seeds()
        .iter()
        .flat_map(|g| movement::path_speed(&g.root_path()))
        .collect();
    speeds.sort_by(f64::total_cmp);
    let p95 = speeds[(0.95 * (speeds.len() - 1) as f64).round() as usize];
    for path in [
        TrajectorySpec::straight(10.0, 1.0).unwrap(),
        TrajectorySpec::bend(1.0, FRAC_PI_2, 0.8, 10.0).unwrap(),
    ] {
        let r = rollout(model(), seed, &path, &vec![seed.emotion.clone(); 150], 150).unwrap();
        let worst = r.root_deviation().into_iter().fold(0.0, f64::max);
        assert!(worst < 0.05 * stride, "deviation {worst} vs stride {stride}");
        let steps = movement::path_speed(&r.gait.root_path());
        let fastest = steps[generator::SEED_FRAMES..].iter().copied().fold(0.0, f64::max);
        assert!(fastest <= 3.0 * p95, "step of {fastest} against p95 speed {p95}");
        // the character keeps moving forward along the path
        let start = r.gait.frames[generator::SEED_FRAMES].positions[0];
        let end = r.gait.frames.last().unwrap().positions[0];
        assert!((end[0] - start[0]).hypot(end[2] - start[2]) > stride);
    }
}

#[test]
fn augmentation_writes_every_item() {
    let dir = tempfile::tempdir().unwrap();
    let trajectories = vec![
        TrajectorySpec::straight(8.0, 0.0).unwrap(),
        TrajectorySpec::bend(1.0, FRAC_PI_2, 1.5, 8.0).unwrap(),
    ];
    let emotions = vec![
        EmotionVector::one_hot(0, 4),
        EmotionVector::one_hot(1, 4),
        EmotionVector::new(vec![0.25; 4]).unwrap(),
    ];
    let report = augment_corpus(model(), &seeds(), &trajectories, &emotions, 1, 80, 12, dir.path()).unwrap();
    // items whose feet cannot be labelled are reported instead of written
    assert_eq!(report.manifest.entries.len() + report.failures.len(), 2 * 3 + 2);
    assert!(report.failures.len() <= 2, "{:?}", report.failures);
    let singles = report
        .manifest
        .entries
        .iter()
        .filter(|e| e.path.starts_with("gen_"))
        .count();
    let failed_singles = report.failures.iter().filter(|f| f.starts_with("gen_")).count();
    assert_eq!(singles + failed_singles, 6);

    let (saved, base) = CorpusManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(saved, report.manifest);
    for entry in &saved.entries {
        assert_eq!(entry.split, Split::Unassigned);
        let g = load_gait(&base.join(&entry.path)).unwrap();
        assert_eq!(g.len(), generator::SEED_FRAMES + 80);
        assert_eq!(g.emotion, entry.emotion);
        features_extract(&g);
    }
}

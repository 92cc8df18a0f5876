use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use emogait::affect::{extract_affective, FeatureDefinitionTable};
use emogait::generator::{self, build_emotion_schedule, rollout, TrajectorySpec};
use emogait::motion_io::{
    gait_to_bvh, load_gait, parse_bvh, save_document, save_gait, split_corpus, window_and_downsample, CorpusManifest,
    ManifestEntry, Split, MANIFEST_FILE,
};
use emogait::movement::{extract_movement, ContactConfig, MOVEMENT_COLUMNS};
use emogait::rng;
use emogait::trainer::{self, Checkpoint};
use emogait::{EmotionVector, Error, Gait};

use crate::args::{
    AugmentArgs, EvalArgs, ExportArgs, ExtractArgs, GenerateArgs, IngestArgs, RolloutArgs, SplitArgs, TrainArgs,
    TransitionArgs,
};
use crate::config::RunConfig;

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn load_manifest(p: &Path) -> Result<(CorpusManifest, PathBuf)> {
    let path = manifest_path(p);
    CorpusManifest::load(&path).with_context(|| format!("loading manifest {}", path.display()))
}

/// Gaits tagged `preferred`, or every gait when none carry that tag.
fn corpus_gaits(manifest: &CorpusManifest, base: &Path, preferred: Split) -> Result<Vec<Gait>> {
    let split = (manifest.count(preferred) > 0).then_some(preferred);
    if split.is_none() {
        log::info!("no {preferred:?} entries, using the whole corpus");
    }
    Ok(manifest.load_gaits(base, split)?)
}

fn parse_emotion(text: &str) -> Result<EmotionVector> {
    EmotionVector::parse(text).with_context(|| format!("bad emotion {text:?}"))
}

/// Reads a gait document, or a BVH file labelled with the uniform emotion.
pub fn read_gait(path: &Path, emotions: usize) -> Result<Gait> {
    let is_bvh = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bvh"));
    let gait = if is_bvh {
        let text = fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        parse_bvh(&text, &stem)?.into_gait(EmotionVector::normalized(vec![1.0; emotions])?)?
    } else {
        load_gait(path)?
    };
    Ok(gait)
}

fn bvh_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("bvh")));
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

pub fn ingest(cfg: &RunConfig, args: &IngestArgs) -> Result<()> {
    let emotion = parse_emotion(&args.emotion)?;
    let path = args.out_dir.join(MANIFEST_FILE);
    let mut manifest = if path.exists() {
        CorpusManifest::load(&path)?.0
    } else {
        CorpusManifest::new(cfg.manifest_seed())
    };
    if let Some(seed) = cfg.seed {
        manifest.seed = seed;
    }
    let files = bvh_files(&args.inputs)?;
    if files.is_empty() {
        bail!(Error::validation("no BVH files to ingest"));
    }
    for file in files {
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let gait = parse_bvh(&text, &stem)
            .and_then(|clip| clip.into_gait(emotion.clone()))
            .with_context(|| format!("parsing {}", file.display()))?;
        let windows = window_and_downsample(&gait, cfg.ingest.stride, cfg.ingest.window)?;
        if windows.is_empty() {
            log::warn!("{}: {} frames is too short for one window", file.display(), gait.len());
        }
        for (k, w) in windows.iter().enumerate() {
            let rel = format!("clips/{stem}_{k:03}.json");
            save_gait(&args.out_dir.join(&rel), w)?;
            manifest.entries.retain(|e| e.path != rel);
            manifest.entries.push(ManifestEntry {
                path: rel,
                emotion: emotion.clone(),
                split: Split::Unassigned,
            });
        }
        println!("{}: {} gait(s)", file.display(), windows.len());
    }
    manifest.save(&path)?;
    Ok(())
}

/// Per-frame CSV of the affective columns followed by the movement columns.
pub fn features_csv(gait: &Gait, defs: &FeatureDefinitionTable, contact: &ContactConfig) -> Result<String> {
    defs.validate(gait.skeleton.joint_count())?;
    let movement = extract_movement(gait, contact)?;
    let mut out = String::from("frame");
    for name in defs
        .column_names(Some(&gait.skeleton))
        .iter()
        .map(String::as_str)
        .chain(MOVEMENT_COLUMNS)
    {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, frame) in gait.frames.iter().enumerate() {
        let affective = extract_affective(frame, defs).with_context(|| format!("frame {t}"))?;
        write!(out, "{t}")?;
        for v in affective.to_vec().into_iter().chain(movement.row(t)) {
            write!(out, ",{v}")?;
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn extract(cfg: &RunConfig, args: &ExtractArgs) -> Result<()> {
    let gait = read_gait(&args.input, cfg.model.emotions)?;
    let csv = features_csv(&gait, &cfg.features, &cfg.train.contact)?;
    match &args.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn split(cfg: &RunConfig, args: &SplitArgs) -> Result<()> {
    let path = manifest_path(&args.corpus);
    let (mut manifest, _) = load_manifest(&path)?;
    if let Some(seed) = cfg.seed {
        manifest.seed = seed;
    }
    let [train, val, test] = cfg.split;
    let out = split_corpus(&manifest, (train, val, test))?;
    out.save(&path)?;
    println!(
        "train={} val={} test={}",
        out.count(Split::Train),
        out.count(Split::Val),
        out.count(Split::Test)
    );
    Ok(())
}

pub fn train(cfg: &RunConfig, args: &TrainArgs) -> Result<()> {
    let (manifest, base) = load_manifest(&args.corpus)?;
    let train_gaits = corpus_gaits(&manifest, &base, Split::Train)?;
    let val = manifest.load_gaits(&base, Some(Split::Val))?;
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("config.json"), cfg.to_json()?)?;
    let outcome = trainer::train_to_dir(&train_gaits, &val, &cfg.model, &cfg.train, &args.out_dir, args.resume)?;
    println!(
        "epochs={} best_epoch={} best_score={}",
        outcome.last.epoch, outcome.best.epoch, outcome.best.best_score
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let model = Checkpoint::load(&args.checkpoint)?.to_model()?;
    let (manifest, base) = load_manifest(&args.test_set)?;
    let gaits = corpus_gaits(&manifest, &base, Split::Test)?;
    let report = trainer::evaluate(&model, &gaits)?;
    println!("{report}");
    Ok(())
}

fn run_rollout(
    cfg: &RunConfig,
    args: &RolloutArgs,
    schedule: impl FnOnce(&Gait, usize) -> Result<Vec<EmotionVector>>,
) -> Result<()> {
    let model = Checkpoint::load(&args.checkpoint)?.to_model()?;
    let seed = load_gait(&args.seed_gait)?;
    let path = TrajectorySpec::load(&args.trajectory)?;
    let steps = cfg.generate.steps;
    let schedule = schedule(&seed, steps)?;
    let out = rollout(&model, &seed, &path, &schedule, steps)?;
    fs::create_dir_all(&args.out_dir)?;
    let json = args.out_dir.join(format!("{}.json", args.name));
    save_document(&json, &out.document())?;
    println!("{}", json.display());
    if args.bvh {
        let bvh = args.out_dir.join(format!("{}.bvh", args.name));
        fs::write(&bvh, gait_to_bvh(&out.gait)?)?;
        println!("{}", bvh.display());
    }
    let worst = out.root_deviation().into_iter().fold(0.0, f64::max);
    log::info!("largest root deviation from the path: {worst}");
    Ok(())
}

pub fn generate(cfg: &RunConfig, args: &GenerateArgs) -> Result<()> {
    let emotion = args.emotion.as_deref().map(parse_emotion).transpose()?;
    run_rollout(cfg, &args.rollout, |seed, steps| {
        Ok(vec![emotion.unwrap_or_else(|| seed.emotion.clone()); steps])
    })
}

pub fn transition(cfg: &RunConfig, args: &TransitionArgs) -> Result<()> {
    let from = parse_emotion(&args.emotion)?;
    let to = parse_emotion(&args.to_emotion)?;
    run_rollout(cfg, &args.rollout, |_, steps| {
        Ok(build_emotion_schedule(&from, &to, steps)?)
    })
}

pub fn augment(cfg: &RunConfig, args: &AugmentArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let model = checkpoint.to_model()?;
    let aug = &cfg.augment;
    let mut seeds = match &args.corpus {
        Some(corpus) => {
            let (manifest, base) = load_manifest(corpus)?;
            corpus_gaits(&manifest, &base, Split::Train)?
        }
        None => Vec::new(),
    };
    for p in &args.seed_gait {
        seeds.push(load_gait(p)?);
    }
    let trajectories = if args.trajectory.is_empty() {
        generator::random_trajectories(aug.trajectories, &mut rng::stream(aug.seed, "augment/trajectories"))?
    } else {
        args.trajectory
            .iter()
            .map(|p| TrajectorySpec::load(p))
            .collect::<emogait::Result<_>>()?
    };
    let emotions = if args.emotion.is_empty() {
        let mut draw = rng::stream(aug.seed, "augment/emotions");
        generator::random_emotions(aug.emotions, checkpoint.model.emotions, &mut draw)?
    } else {
        args.emotion.iter().map(|e| parse_emotion(e)).collect::<Result<_>>()?
    };
    let report = generator::augment_corpus(
        &model,
        &seeds,
        &trajectories,
        &emotions,
        aug.pairs_per_trajectory,
        aug.steps,
        aug.seed,
        &args.out_dir,
    )?;
    for failure in &report.failures {
        log::warn!("{failure}");
    }
    if args.bvh {
        for entry in &report.manifest.entries {
            let json = args.out_dir.join(&entry.path);
            fs::write(json.with_extension("bvh"), gait_to_bvh(&load_gait(&json)?)?)?;
        }
    }
    println!(
        "generated={} failed={}",
        report.manifest.entries.len(),
        report.failures.len()
    );
    if report.manifest.entries.is_empty() {
        bail!(Error::numerical("every augmentation item failed"));
    }
    Ok(())
}

pub fn export_bvh(cfg: &RunConfig, args: &ExportArgs) -> Result<()> {
    let gait = read_gait(&args.input, cfg.model.emotions)?;
    fs::write(&args.out, gait_to_bvh(&gait)?)?;
    Ok(())
}

//! Curriculum training, evaluation and checkpoints.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, GradBuffer, Parameter, ParameterStore, Tape};
use crate::error::{Error, Result};
use crate::geom;
use crate::kinematics::{Gait, Skeleton};
use crate::model::{
    gait_features, EmotiveNet, FeatureStats, FrameFeatures, LossParts, LossWeights, ModelConfig, Objective, Target,
};
use crate::movement::ContactConfig;
use crate::rng;
use crate::rollout::GaitModel;

/// Frames shown to the model before evaluation starts predicting.
pub const EVAL_SEED_FRAMES: usize = 18;
/// Frames predicted per evaluated clip.
pub const EVAL_PREDICTED_FRAMES: usize = 42;

pub const CHECKPOINT_FORMAT: &str = "emogait-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub lr_decay_per_epoch: f64,
    pub beta_curriculum: f64,
    pub epochs: usize,
    /// Gaits per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub clip_norm: f64,
    /// Ground-truth frames that always precede the first prediction.
    pub min_context: usize,
    pub contact: ContactConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            lr_decay_per_epoch: 0.999,
            beta_curriculum: 0.995,
            epochs: 300,
            batch_size: 32,
            seed: 0,
            weights: LossWeights::default(),
            clip_norm: 5.0,
            min_context: EVAL_SEED_FRAMES,
            contact: ContactConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::validation(format!(
                "lr must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if !(self.beta_curriculum > 0.0 && self.beta_curriculum <= 1.0) {
            return Err(Error::validation(format!(
                "beta_curriculum must lie in (0, 1], got {}",
                self.beta_curriculum
            )));
        }
        if !(self.lr_decay_per_epoch > 0.0 && self.lr_decay_per_epoch <= 1.0) {
            return Err(Error::validation("lr_decay_per_epoch must lie in (0, 1]"));
        }
        if self.batch_size == 0 || self.min_context < 2 {
            return Err(Error::validation("batch_size must be >= 1 and min_context >= 2"));
        }
        Ok(())
    }
}

/// Learning rate in effect during epoch `epoch` (0-based).
pub fn learning_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    cfg.lr * cfg.lr_decay_per_epoch.powi(epoch as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub epoch: usize,
    pub teacher_forcing_prob: f64,
}

impl CurriculumState {
    pub fn at(beta: f64, epoch: usize) -> Self {
        CurriculumState {
            epoch,
            teacher_forcing_prob: beta.powi(epoch as i32),
        }
    }
}

/// Draws whether the next input step is the ground truth.
pub fn teacher_forced(prob: f64, rng: &mut impl Rng) -> bool {
    rng.gen::<f64>() < prob
}

/// Returns `truth` with probability `prob`, otherwise `predicted`.
pub fn curriculum_mix<T>(truth: T, predicted: T, prob: f64, rng: &mut impl Rng) -> T {
    if teacher_forced(prob, rng) {
        truth
    } else {
        predicted
    }
}

/// One row of the loss log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_total: f64,
    pub train_parts: LossParts<f64>,
    pub val_total: Option<f64>,
    pub lr: f64,
    pub tf_prob: f64,
}

pub const LOSS_LOG_HEADER: &str = "epoch,train_total,motion,pose,affective,root,foot,val_total,lr,tf_prob";

impl EpochLog {
    pub fn csv_row(&self) -> String {
        let p = &self.train_parts;
        let val = self.val_total.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.epoch, self.train_total, p.motion, p.pose, p.affective, p.root, p.foot, val, self.lr, self.tf_prob
        )
    }
}

pub fn loss_log_csv(rows: &[EpochLog]) -> String {
    let mut out = String::from(LOSS_LOG_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Serialized training state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub skeleton: Skeleton,
    pub stats: FeatureStats,
    /// Completed epochs.
    pub epoch: usize,
    /// Score used to pick the best checkpoint (validation loss when a
    /// validation set exists, training loss otherwise).
    pub best_score: f64,
    pub step: u64,
    pub params: Vec<Parameter>,
}

impl Checkpoint {
    pub fn from_model(model: &GaitModel, train: &TrainConfig, epoch: usize, best_score: f64) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: model.net.config.clone(),
            train: train.clone(),
            skeleton: model.objective.skeleton.clone(),
            stats: model.stats.clone(),
            epoch,
            best_score,
            step: model.store.step(),
            params: model.store.params().to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<GaitModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let store = ParameterStore::from_parts(self.params.clone(), self.step)?;
        let net = EmotiveNet::attach(&store, self.model.clone())?;
        Ok(GaitModel {
            net,
            store,
            stats: self.stats.clone(),
            objective: Objective::new(self.skeleton.clone(), self.train.weights)?,
            contact: self.train.contact,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Checkpoint::from_json(&text)
    }
}

/// Features of each gait of a corpus.
pub fn corpus_features(gaits: &[Gait], contact: &ContactConfig) -> Result<Vec<Vec<FrameFeatures>>> {
    let defs = crate::affect::FeatureDefinitionTable::default();
    gaits
        .par_iter()
        .enumerate()
        .map(|(i, g)| gait_features(g, contact, &defs).map_err(|e| prefix(e, &format!("gait {i}"))))
        .collect()
}

fn prefix(e: Error, context: &str) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("{context}: {m}")),
        Error::DegeneratePose(m) => Error::DegeneratePose(format!("{context}: {m}")),
        Error::Validation(m) => Error::Validation(format!("{context}: {m}")),
        other => other,
    }
}

/// A freshly initialised model fitted to the statistics of `train`.
pub fn init_model(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    skeleton: &Skeleton,
    train: &[Vec<FrameFeatures>],
) -> Result<GaitModel> {
    let mut store = ParameterStore::new();
    let mut init = rng::stream(train_cfg.seed, "init");
    let net = EmotiveNet::new(&mut store, model_cfg.clone(), &mut init)?;
    let stats = FeatureStats::fit(train.iter().flatten())?;
    Ok(GaitModel {
        net,
        store,
        stats,
        objective: Objective::new(skeleton.clone(), train_cfg.weights)?,
        contact: train_cfg.contact,
    })
}

struct SampleResult {
    grads: GradBuffer,
    parts: LossParts<f64>,
    total: f64,
    frame: Option<FrameFeatures>,
}

/// Loss and gradient for predicting `truth[t]` from `history`.
fn sample(
    model: &GaitModel,
    history: &[FrameFeatures],
    truth: &FrameFeatures,
    need_frame: bool,
) -> Result<SampleResult> {
    let inputs = model.window_inputs(history)?;
    let target = Target::new(truth, &inputs.frame, &model.objective.feet);
    let tape = Tape::new();
    let bound = model.store.bind(&tape);
    let pred = model.net.forward(&tape, &bound, &inputs, &model.stats)?;
    let parts = model.objective.prediction_parts(&pred, &target);
    let total = parts.total(&model.objective.weights);
    let value = total.scalar();
    if !value.is_finite() {
        return Err(Error::numerical("non-finite loss"));
    }
    let grads = tape.backward(total)?;
    let frame = if need_frame {
        let values = crate::model::PredictionValues::read(&pred)?;
        Some(model.compose_frame(&values, &inputs.frame, history, &GaitModel::truth_placement(truth))?)
    } else {
        None
    };
    Ok(SampleResult {
        grads: bound.collect(&grads),
        parts: parts.values(),
        total: value,
        frame,
    })
}

/// Mean loss with teacher forcing off: every frame after `min_context` is
/// predicted from the model's own output, on the recorded root path.
pub fn free_running_loss(
    model: &GaitModel,
    gaits: &[Vec<FrameFeatures>],
    min_context: usize,
) -> Result<LossParts<f64>> {
    let per_gait: Vec<(LossParts<f64>, usize)> = gaits
        .par_iter()
        .map(|truth| {
            let mut sum = LossParts::default();
            let mut count = 0;
            if truth.len() <= min_context {
                return Ok((sum, 0));
            }
            let mut history: Vec<FrameFeatures> = truth[..min_context].to_vec();
            for recorded in &truth[min_context..] {
                let (pred, local) = model.predict_next(&history)?;
                let target = Target::new(recorded, &local, &model.objective.feet);
                let parts = model
                    .objective
                    .parts(&pred.q_raw, [pred.h, pred.s, pred.delta], &target);
                sum.add_scaled(&parts, 1.0);
                count += 1;
                let frame = model.compose_frame(&pred, &local, &history, &GaitModel::truth_placement(recorded))?;
                history.push(frame);
            }
            Ok((sum, count))
        })
        .collect::<Result<_>>()?;
    let mut total = LossParts::default();
    let n: usize = per_gait.iter().map(|(_, c)| c).sum();
    for (p, _) in &per_gait {
        total.add_scaled(p, 1.0 / n.max(1) as f64);
    }
    Ok(total)
}

/// Output of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Where to continue from.
pub struct ResumeState {
    pub model: GaitModel,
    pub epoch: usize,
    pub best: Checkpoint,
}

/// Trains on `train` gaits, scoring `val` gaits (if any) after each epoch.
///
/// Every epoch walks all training gaits frame by frame. At frame `t` the
/// gaits long enough to have one form batches; each gait predicts frame
/// `t` from its history window, the batch-mean loss takes one Adam step,
/// and a per-gait coin with probability `β^E` decides whether the history
/// grows by the recorded frame or by the prediction.
pub fn train(
    train: &[Gait],
    val: &[Gait],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    resume: Option<ResumeState>,
    mut on_epoch: impl FnMut(&EpochLog, &Checkpoint) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model_cfg.validate()?;
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let truth = corpus_features(train, &cfg.contact)?;
    let val_truth = corpus_features(val, &cfg.contact)?;
    if truth.iter().all(|g| g.len() <= cfg.min_context) {
        return Err(Error::validation(format!(
            "every training gait is too short for {} context frames",
            cfg.min_context
        )));
    }
    let (mut model, start, mut best) = match resume {
        Some(r) => (r.model, r.epoch, r.best),
        None => {
            let m = init_model(model_cfg, cfg, &train[0].skeleton, &truth)?;
            let best = Checkpoint::from_model(&m, cfg, 0, f64::INFINITY);
            (m, 0, best)
        }
    };
    let adam = AdamConfig::default();
    let max_len = truth.iter().map(Vec::len).max().unwrap_or(0);
    let mut log = Vec::new();
    for epoch in start..cfg.epochs {
        let lr = learning_rate(cfg, epoch);
        let curriculum = CurriculumState::at(cfg.beta_curriculum, epoch);
        let mut coin = rng::stream(cfg.seed, &format!("curriculum/{epoch}"));
        let mut histories: Vec<Vec<FrameFeatures>> = truth
            .iter()
            .map(|g| g[..cfg.min_context.min(g.len())].to_vec())
            .collect();
        let mut sum = LossParts::default();
        let mut sum_total = 0.0;
        let mut samples = 0usize;
        for t in cfg.min_context..max_len {
            let active: Vec<usize> = (0..truth.len()).filter(|&g| truth[g].len() > t).collect();
            for chunk in active.chunks(cfg.batch_size) {
                let results: Vec<SampleResult> = chunk
                    .par_iter()
                    .map(|&g| {
                        sample(
                            &model,
                            &histories[g],
                            &truth[g][t],
                            curriculum.teacher_forcing_prob < 1.0,
                        )
                        .map_err(|e| prefix(e, &format!("epoch {epoch}, frame {t}, gait {g}")))
                    })
                    .collect::<Result<_>>()?;
                let scale = 1.0 / chunk.len() as f64;
                let mut grads = GradBuffer::zeros_like(&model.store);
                for r in &results {
                    grads.add_scaled(&r.grads, scale);
                    sum.add_scaled(&r.parts, 1.0);
                    sum_total += r.total;
                    samples += 1;
                }
                model.store.zero_grad();
                model.store.accumulate(&grads, 1.0);
                model.store.clip_grad_norm(cfg.clip_norm);
                model.store.adam_step(lr, &adam)?;
                for (&g, r) in chunk.iter().zip(results) {
                    let recorded = truth[g][t].clone();
                    let next = match r.frame {
                        Some(predicted) => {
                            curriculum_mix(recorded, predicted, curriculum.teacher_forcing_prob, &mut coin)
                        }
                        None => recorded,
                    };
                    histories[g].push(next);
                }
            }
        }
        let n = samples.max(1) as f64;
        let mut train_parts = LossParts::default();
        train_parts.add_scaled(&sum, 1.0 / n);
        let train_total = sum_total / n;
        let val_total = if val_truth.is_empty() {
            None
        } else {
            Some(free_running_loss(&model, &val_truth, cfg.min_context)?.total(&cfg.weights))
        };
        let row = EpochLog {
            epoch: epoch + 1,
            train_total,
            train_parts,
            val_total,
            lr,
            tf_prob: curriculum.teacher_forcing_prob,
        };
        log::info!("{}", row.csv_row());
        let score = val_total.unwrap_or(train_total);
        if score <= best.best_score || !best.best_score.is_finite() {
            best = Checkpoint::from_model(&model, cfg, epoch + 1, score);
        }
        let last = Checkpoint::from_model(&model, cfg, epoch + 1, best.best_score);
        on_epoch(&row, &last)?;
        log.push(row);
    }
    let last = Checkpoint::from_model(&model, cfg, cfg.epochs.max(start), best.best_score);
    Ok(TrainOutcome { best, last, log })
}

/// File names used by [`train_to_dir`].
pub const BEST_CHECKPOINT: &str = "checkpoint.json";
pub const LAST_CHECKPOINT: &str = "last.json";
pub const LOSS_LOG: &str = "loss_log.csv";

/// Runs [`train`] writing the loss log, the latest checkpoint after every
/// epoch and the best checkpoint at the end. With `resume`, training
/// continues from `out_dir/last.json` and appends to the log.
pub fn train_to_dir(
    train_gaits: &[Gait],
    val: &[Gait],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    out_dir: &Path,
    resume: bool,
) -> Result<TrainOutcome> {
    fs::create_dir_all(out_dir)?;
    let log_path = out_dir.join(LOSS_LOG);
    let state = if resume {
        let last = Checkpoint::load(&out_dir.join(LAST_CHECKPOINT))?;
        let best = Checkpoint::load(&out_dir.join(BEST_CHECKPOINT)).unwrap_or_else(|_| last.clone());
        Some(ResumeState {
            model: last.to_model()?,
            epoch: last.epoch,
            best,
        })
    } else {
        fs::write(&log_path, format!("{LOSS_LOG_HEADER}\n"))?;
        None
    };
    let mut log_file = fs::OpenOptions::new().append(true).create(true).open(&log_path)?;
    let last_path: PathBuf = out_dir.join(LAST_CHECKPOINT);
    let outcome = train(train_gaits, val, model_cfg, cfg, state, |row, last| {
        writeln!(log_file, "{}", row.csv_row())?;
        last.save(&last_path)
    })?;
    outcome.best.save(&out_dir.join(BEST_CHECKPOINT))?;
    outcome.last.save(&last_path)?;
    Ok(outcome)
}

/// Test-set accuracy under the seed/predict protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean joint position error relative to the clip's bounding-box
    /// diagonal.
    pub pose_error: f64,
    /// Mean absolute Euler angle error in degrees.
    pub rotation_error_deg: f64,
    pub clips: usize,
    pub skipped: usize,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pose_error={} rotation_error_deg={}",
            self.pose_error, self.rotation_error_deg
        )
    }
}

/// Longest diagonal of the axis-aligned box around every joint of a clip.
pub fn bounding_box_diagonal(frames: &[FrameFeatures]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in frames.iter().flat_map(|f| &f.positions) {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    geom::norm3(geom::sub3(hi, lo))
}

/// Per-clip error sums: `(position error / diagonal, joint count, rotation
/// error in degrees, angle count)`.
pub fn clip_errors(truth: &[FrameFeatures], predicted: &[FrameFeatures]) -> (f64, usize, f64, usize) {
    let diag = bounding_box_diagonal(truth);
    let (mut pos, mut np, mut rot, mut nr) = (0.0, 0, 0.0, 0);
    for (a, b) in truth.iter().zip(predicted) {
        for (x, y) in a.positions.iter().zip(&b.positions).skip(1) {
            pos += geom::norm3(geom::sub3(*x, *y)) / diag;
            np += 1;
        }
        for (q, r) in a.rotations.iter().zip(&b.rotations) {
            let e = geom::quat_to_euler_zyx(q.to_array());
            let f = geom::quat_to_euler_zyx(r.to_array());
            for k in 0..3 {
                rot += geom::wrap_signed(e[k] - f[k]).abs().to_degrees();
                nr += 1;
            }
        }
    }
    (pos, np, rot, nr)
}

/// Shows each clip's first 18 frames and predicts the next 42 on the
/// recorded root path. Clips shorter than 60 frames are skipped.
pub fn evaluate(model: &GaitModel, gaits: &[Gait]) -> Result<EvalReport> {
    let needed = EVAL_SEED_FRAMES + EVAL_PREDICTED_FRAMES;
    let usable: Vec<&Gait> = gaits.iter().filter(|g| g.len() >= needed).collect();
    let skipped = gaits.len() - usable.len();
    if skipped > 0 {
        log::warn!("skipping {skipped} clip(s) shorter than {needed} frames");
    }
    let per_clip: Vec<(f64, usize, f64, usize)> = usable
        .par_iter()
        .map(|g| {
            let truth = gait_features(g, &model.contact, &model.objective.defs)?;
            let truth = &truth[..needed];
            let mut history = truth[..EVAL_SEED_FRAMES].to_vec();
            for recorded in &truth[EVAL_SEED_FRAMES..] {
                let (frame, _) = model.step(&history, &GaitModel::truth_placement(recorded))?;
                history.push(frame);
            }
            Ok(clip_errors(&truth[EVAL_SEED_FRAMES..], &history[EVAL_SEED_FRAMES..]))
        })
        .collect::<Result<_>>()?;
    let (mut pos, mut np, mut rot, mut nr) = (0.0, 0, 0.0, 0);
    for (a, b, c, d) in per_clip {
        pos += a;
        np += b;
        rot += c;
        nr += d;
    }
    if np == 0 {
        return Err(Error::validation(format!("no clip has at least {needed} frames")));
    }
    Ok(EvalReport {
        pose_error: pos / np as f64,
        rotation_error_deg: rot / nr as f64,
        clips: usable.len(),
        skipped,
    })
}

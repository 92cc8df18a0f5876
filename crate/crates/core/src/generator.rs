//! Rollouts along desired trajectories, emotion transitions and corpus
//! augmentation.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affect;
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::Gait;
use crate::model::{gait_features, EmotionVector, FrameFeatures};
use crate::motion_io::{save_document, CorpusManifest, GaitDocument, ManifestEntry, Split, MANIFEST_FILE};
use crate::movement::{self, ContactConfig, Foot, FootJoints};
use crate::rng;
use crate::rollout::{frames_to_gait, GaitModel, Placement};

/// Seed frames taken from the start of the seed gait.
pub const SEED_FRAMES: usize = 18;
/// Default rollout length.
pub const DEFAULT_STEPS: usize = 200;

/// Per-step emotions interpolated linearly between two endpoints, each step
/// L1-normalized. Endpoints are normalized first and reproduced exactly.
pub fn build_emotion_schedule(start: &EmotionVector, end: &EmotionVector, steps: usize) -> Result<Vec<EmotionVector>> {
    if steps < 2 {
        return Err(Error::validation(format!(
            "a schedule needs at least 2 steps, got {steps}"
        )));
    }
    if start.len() != end.len() {
        return Err(Error::validation(format!(
            "emotion lengths differ: {} vs {}",
            start.len(),
            end.len()
        )));
    }
    let a = start.normalize()?;
    let b = end.normalize()?;
    let mut out = Vec::with_capacity(steps);
    out.push(a.clone());
    for i in 1..steps - 1 {
        let w = i as f64 / (steps - 1) as f64;
        let mixed: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (1.0 - w) * x + w * y)
            .collect();
        out.push(EmotionVector::normalized(mixed)?);
    }
    out.push(b);
    Ok(out)
}

/// A desired path on the ground plane given as `(x, z)` waypoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub waypoints: Vec<[f64; 2]>,
}

impl TrajectorySpec {
    pub fn new(waypoints: Vec<[f64; 2]>) -> Result<Self> {
        let mut clean: Vec<[f64; 2]> = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            if !(w[0].is_finite() && w[1].is_finite()) {
                return Err(Error::validation(format!("waypoint {w:?} is not finite")));
            }
            // repeated points carry no direction
            if clean.last().is_none_or(|p| dist2(*p, w) > 1e-12) {
                clean.push(w);
            }
        }
        if clean.len() < 2 {
            return Err(Error::validation("a trajectory needs at least 2 distinct waypoints"));
        }
        Ok(TrajectorySpec { waypoints: clean })
    }

    /// Reads one `x z` pair per line; blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: std::result::Result<Vec<f64>, _> = nums.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 2 => points.push([v[0], v[1]]),
                _ => {
                    return Err(Error::Parse {
                        line: n + 1,
                        msg: format!("expected two numbers \"x z\", got {line:?}"),
                    })
                }
            }
        }
        TrajectorySpec::new(points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read trajectory {}: {e}", path.display())))?;
        TrajectorySpec::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.waypoints.iter().map(|w| format!("{} {}\n", w[0], w[1])).collect()
    }

    /// A straight path of `length` along `heading`.
    pub fn straight(length: f64, heading: f64) -> Result<Self> {
        TrajectorySpec::new(vec![[0.0, 0.0], [length * heading.sin(), length * heading.cos()]])
    }

    /// Straight along +Z for `before`, then a circular turn of `angle`
    /// (positive turns toward +X) with `radius`, then straight for `after`.
    pub fn bend(before: f64, angle: f64, radius: f64, after: f64) -> Result<Self> {
        let mut pts = vec![[0.0, 0.0], [0.0, before]];
        let segments = ((angle.abs() * radius / 0.05).ceil() as usize).max(4);
        let side = angle.signum();
        let centre = [side * radius, before];
        for i in 1..=segments {
            let a = angle.abs() * i as f64 / segments as f64;
            pts.push([centre[0] - side * radius * a.cos(), centre[1] + radius * a.sin()]);
        }
        let end = *pts.last().expect("non-empty");
        pts.push([end[0] + after * angle.sin(), end[1] + after * angle.cos()]);
        TrajectorySpec::new(pts)
    }

    fn segment_lengths(&self) -> Vec<f64> {
        self.waypoints.windows(2).map(|w| dist2(w[0], w[1])).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Point and unit tangent at arc length `u`. Beyond either end the path
    /// continues along its first or last segment.
    pub fn point_at(&self, u: f64) -> ([f64; 2], [f64; 2]) {
        let lens = self.segment_lengths();
        let mut acc = 0.0;
        let last = lens.len() - 1;
        for (i, &len) in lens.iter().enumerate() {
            if u <= acc + len || i == last {
                let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
                let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                let along = u - acc;
                return ([a[0] + dir[0] * along, a[1] + dir[1] * along], dir);
            }
            acc += len;
        }
        unreachable!("trajectory has at least one segment")
    }

    /// `steps` points spaced `spacing` apart along the path from its start.
    pub fn resample(&self, steps: usize, spacing: f64) -> Vec<[f64; 2]> {
        (0..steps).map(|i| self.point_at(i as f64 * spacing).0).collect()
    }

    /// Ground-plane distance from `p` to the path, including its straight
    /// continuation past the final waypoint.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let n = self.waypoints.len();
        let mut best = f64::INFINITY;
        for i in 0..n - 1 {
            let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
            let open_end = i == n - 2;
            best = best.min(segment_distance(p, a, b, open_end));
        }
        best
    }

    /// The same path moved rigidly so it starts at `origin` with initial
    /// heading `heading`.
    pub fn anchored(&self, origin: [f64; 2], heading: f64) -> TrajectorySpec {
        let (_, t0) = self.point_at(0.0);
        let turn = heading - movement::heading(t0);
        let (s, c) = turn.sin_cos();
        let w0 = self.waypoints[0];
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| {
                let d = [w[0] - w0[0], w[1] - w0[1]];
                // rotation about +Y acting on (x, z)
                [origin[0] + c * d[0] + s * d[1], origin[1] - s * d[0] + c * d[1]]
            })
            .collect();
        TrajectorySpec { waypoints }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2], open_end: bool) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let mut t = (ab[0] * ap[0] + ab[1] * ap[1]) / (ab[0] * ab[0] + ab[1] * ab[1]);
    t = if open_end { t.max(0.0) } else { t.clamp(0.0, 1.0) };
    dist2(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Mean root distance travelled between consecutive contacts of the same
/// foot.
pub fn mean_stride(gait: &Gait, contact: &ContactConfig) -> Result<f64> {
    let fj = FootJoints::resolve(&gait.skeleton)?;
    let contacts = movement::detect_foot_contacts(gait, &fj, contact)?;
    let mut strides = Vec::new();
    for foot in [Foot::Left, Foot::Right] {
        let frames: Vec<usize> = contacts.iter().filter(|c| c.foot == foot).map(|c| c.frame).collect();
        for w in frames.windows(2) {
            let (a, b) = (gait.frames[w[0]].positions[0], gait.frames[w[1]].positions[0]);
            strides.push((b[0] - a[0]).hypot(b[2] - a[2]));
        }
    }
    if strides.is_empty() {
        return Err(Error::InsufficientSteps { found: contacts.len() });
    }
    Ok(strides.iter().sum::<f64>() / strides.len() as f64)
}

/// A generated gait: the seed frames followed by the predicted ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub gait: Gait,
    /// Emotion per predicted frame.
    pub schedule: Vec<EmotionVector>,
    /// The trajectory as placed in the world.
    pub trajectory: TrajectorySpec,
    pub seed_frames: usize,
}

impl Rollout {
    pub fn document(&self) -> GaitDocument {
        let mut doc = GaitDocument::from_gait(&self.gait);
        doc.schedule = Some(self.schedule.clone());
        doc
    }

    /// Ground-plane distance of each predicted root from the trajectory.
    pub fn root_deviation(&self) -> Vec<f64> {
        self.gait.frames[self.seed_frames..]
            .iter()
            .map(|f| {
                let r = f.positions[0];
                self.trajectory.distance_to([r[0], r[2]])
            })
            .collect()
    }
}

/// Generates `steps` frames after the first 18 frames of `seed`.
///
/// The trajectory is anchored at the last seed root, turned to the seed's
/// direction of travel. Each step the root advances along the path by the
/// predicted speed, its height is the seed's mean root height plus the
/// predicted deviation, and the pose is turned to face the path tangent
/// offset by the predicted facing difference.
pub fn rollout(
    model: &GaitModel,
    seed: &Gait,
    trajectory: &TrajectorySpec,
    schedule: &[EmotionVector],
    steps: usize,
) -> Result<Rollout> {
    if seed.len() < SEED_FRAMES {
        return Err(Error::validation(format!(
            "seed gait has {} frames, need at least {SEED_FRAMES}",
            seed.len()
        )));
    }
    if schedule.len() != steps {
        return Err(Error::validation(format!(
            "schedule has {} steps, rollout has {steps}",
            schedule.len()
        )));
    }
    let features = gait_features(seed, &model.contact, &model.objective.defs)?;
    let mut history: Vec<FrameFeatures> = features[..SEED_FRAMES].to_vec();
    let last_root = history[SEED_FRAMES - 1].positions[0];
    let first_root = history[0].positions[0];
    let travel = [last_root[0] - first_root[0], last_root[2] - first_root[2]];
    let start_heading = if travel[0].hypot(travel[1]) > 1e-9 {
        movement::heading(travel)
    } else {
        history[SEED_FRAMES - 1].alpha
    };
    let path = trajectory.anchored([last_root[0], last_root[2]], start_heading);
    let base_height = seed.frames.iter().map(|f| f.positions[0][1]).sum::<f64>() / seed.len() as f64;
    let mut arc = 0.0;
    for (k, emotion) in schedule.iter().enumerate() {
        let prev = history.last().expect("seeded history").clone();
        let (pred, local) = model.predict_next(&history)?;
        if !(pred.h.is_finite() && pred.s.is_finite() && pred.delta.is_finite()) {
            return Err(Error::numerical(format!("step {k}: non-finite prediction")));
        }
        arc += pred.s.max(0.0);
        let (p, tangent) = path.point_at(arc);
        let root: Vec3 = [p[0], base_height + pred.h, p[1]];
        let before = history[history.len() - 2].positions[0];
        let prev_step = [prev.positions[0][0] - before[0], prev.positions[0][2] - before[2]];
        let step = [root[0] - prev.positions[0][0], root[2] - prev.positions[0][2]];
        let kappa = dist2(step, prev_step);
        // keep the side the character was already turned toward
        let side = geom::wrap_signed_f64(prev.alpha - movement::heading(tangent)).signum();
        let side = if side == 0.0 { 1.0 } else { side };
        let facing = movement::heading(tangent) + side * pred.delta;
        let place = Placement {
            root,
            kappa,
            facing: Some(facing),
            emotion: emotion.as_slice().to_vec(),
        };
        let mut frame = model
            .compose_frame(&pred, &local, &history, &place)
            .map_err(|e| Error::numerical(format!("step {k}: {e}")))?;
        // compose_frame tolerates degenerate poses for training's sake;
        // generated output must not contain them
        affect::extract_from_positions(&frame.positions, &model.objective.defs)
            .map_err(|e| Error::degenerate(format!("step {k}: {e}")))?;
        frame.s = step[0].hypot(step[1]);
        frame.s_bar = movement::low_pass_step(prev.s_bar, frame.s);
        if let Some(d) = movement::facing_offset(frame.alpha, step) {
            frame.delta = d;
        }
        if frame.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("step {k}: non-finite pose")));
        }
        history.push(frame);
    }
    let emotion = schedule.last().cloned().unwrap_or_else(|| seed.emotion.clone());
    Ok(Rollout {
        gait: frames_to_gait(&history, seed, emotion),
        schedule: schedule.to_vec(),
        trajectory: path,
        seed_frames: SEED_FRAMES,
    })
}

/// Counts and inputs of an augmentation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub trajectories: usize,
    pub emotions: usize,
    pub pairs_per_trajectory: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            trajectories: 4,
            emotions: 10,
            pairs_per_trajectory: 5,
            steps: DEFAULT_STEPS,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Full-scale counts: 20 trajectories, 100 emotions, 50 pairs.
    pub fn full() -> Self {
        AugmentConfig {
            trajectories: 20,
            emotions: 100,
            pairs_per_trajectory: 50,
            ..Default::default()
        }
    }

    pub fn item_count(&self) -> usize {
        self.trajectories * (self.emotions + self.pairs_per_trajectory)
    }
}

/// Random emotion vectors, uniform on the probability simplex.
pub fn random_emotions(count: usize, components: usize, rng: &mut impl Rng) -> Result<Vec<EmotionVector>> {
    (0..count)
        .map(|_| {
            // normalized exponentials are Dirichlet(1, ..., 1)
            let v: Vec<f64> = (0..components).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            EmotionVector::normalized(v)
        })
        .collect()
}

/// Random paths with a straight lead-in, one bend and a straight exit.
pub fn random_trajectories(count: usize, rng: &mut impl Rng) -> Result<Vec<TrajectorySpec>> {
    (0..count)
        .map(|_| {
            let angle = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
            let radius = rng.gen_range(0.5..3.0);
            TrajectorySpec::bend(rng.gen_range(0.5..2.0), angle, radius, 10.0)
        })
        .collect()
}

/// One generated item of an augmentation run.
#[derive(Clone, Debug, PartialEq)]
enum Item {
    Single {
        trajectory: usize,
        emotion: usize,
    },
    Transition {
        trajectory: usize,
        pair: usize,
        from: usize,
        to: usize,
    },
}

/// Result of [`augment_corpus`].
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentReport {
    pub manifest: CorpusManifest,
    pub failures: Vec<String>,
}

/// Generates single-emotion gaits for every trajectory and emotion, and
/// transition gaits for random emotion pairs on every trajectory, writing
/// each as a gait document with its schedule into `out_dir` together with a
/// manifest. Seed gaits are used in turn.
///
/// Items whose rollout fails, or whose result has too few detectable foot
/// contacts to derive a stepping phase, are left out of the manifest and
/// listed in [`AugmentReport::failures`].
#[allow(clippy::too_many_arguments)]
pub fn augment_corpus(
    model: &GaitModel,
    seeds: &[Gait],
    trajectories: &[TrajectorySpec],
    emotions: &[EmotionVector],
    pairs_per_trajectory: usize,
    steps: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<AugmentReport> {
    if seeds.is_empty() || trajectories.is_empty() || emotions.is_empty() {
        return Err(Error::validation(
            "augmentation needs seed gaits, trajectories and emotions",
        ));
    }
    if pairs_per_trajectory > 0 && emotions.len() < 2 {
        return Err(Error::validation("transitions need at least 2 emotions"));
    }
    let mut pick = rng::stream(seed, "augment/pairs");
    let mut items = Vec::new();
    for t in 0..trajectories.len() {
        for e in 0..emotions.len() {
            items.push(Item::Single {
                trajectory: t,
                emotion: e,
            });
        }
    }
    let indices: Vec<usize> = (0..emotions.len()).collect();
    for t in 0..trajectories.len() {
        for p in 0..pairs_per_trajectory {
            let chosen: Vec<usize> = indices.choose_multiple(&mut pick, 2).copied().collect();
            items.push(Item::Transition {
                trajectory: t,
                pair: p,
                from: chosen[0],
                to: chosen[1],
            });
        }
    }
    fs::create_dir_all(out_dir)?;
    let outcomes: Vec<std::result::Result<ManifestEntry, String>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let seed_gait = &seeds[i % seeds.len()];
            let (name, traj, schedule) = match *item {
                Item::Single { trajectory, emotion } => (
                    format!("gen_t{trajectory:02}_e{emotion:03}.json"),
                    trajectory,
                    vec![emotions[emotion].clone(); steps],
                ),
                Item::Transition {
                    trajectory,
                    pair,
                    from,
                    to,
                } => (
                    format!("trans_t{trajectory:02}_p{pair:03}.json"),
                    trajectory,
                    if steps >= 2 {
                        build_emotion_schedule(&emotions[from], &emotions[to], steps).map_err(|e| format!("{e}"))?
                    } else {
                        vec![emotions[to].clone(); steps]
                    },
                ),
            };
            let run = || -> Result<ManifestEntry> {
                let out = rollout(model, seed_gait, &trajectories[traj], &schedule, steps)?;
                // a gait whose steps cannot be labelled is useless as training data
                movement::extract_movement(&out.gait, &model.contact)?;
                let path: PathBuf = out_dir.join(&name);
                save_document(&path, &out.document())?;
                Ok(ManifestEntry {
                    path: name.clone(),
                    emotion: out.gait.emotion.clone(),
                    split: Split::Unassigned,
                })
            };
            run().map_err(|e| format!("{name}: {e}"))
        })
        .collect();
    let mut manifest = CorpusManifest::new(seed);
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(entry) => manifest.entries.push(entry),
            Err(msg) => {
                log::warn!("augmentation item failed: {msg}");
                failures.push(msg);
            }
        }
    }
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(AugmentReport { manifest, failures })
}

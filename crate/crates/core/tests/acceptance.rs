//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::hint::black_box;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use emogait::affect::{extract_from_positions, FeatureDefinitionTable, AFFECTIVE_DIM};
use emogait::autodiff::{finite_difference_check, Bound, Tape, Var};
use emogait::generator::{self, build_emotion_schedule, random_emotions, TrajectorySpec};
use emogait::geom::Vec3;
use emogait::kinematics::{forward_kinematics, rotations_from_positions};
use emogait::model::{
    loss_affective, loss_foot, loss_motion, loss_pose, loss_root, EncoderInputs, ModelConfig, Target,
};
use emogait::motion_io::{gait_from_json, gait_to_bvh, gait_to_json, parse_bvh};
use emogait::movement::{self, ContactConfig, Foot};
use emogait::rollout::GaitModel;
use emogait::synthetic::{self, WalkSpec, WalkStyle};
use emogait::trainer::{self, learning_rate, teacher_forced, Checkpoint, TrainConfig, TrainOutcome};
use emogait::{EmotionVector, Gait, Result, Skeleton, Versor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// independent geometry used as oracles

fn matrix_of(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn matrix_chain_fk(skel: &Skeleton, root: Vec3, q: &[[f64; 4]]) -> Vec<Vec3> {
    let mut out = vec![root];
    for j in 1..skel.joint_count() {
        let p = out[skel.parents[j] as usize];
        let b = apply(&matrix_of(q[j - 1]), skel.offsets[j]);
        out.push([p[0] + b[0], p[1] + b[1], p[2] + b[2]]);
    }
    out
}

/// Rodrigues rotation matrix.
fn axis_angle_matrix(axis: Vec3, angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn random_unit_quat(rng: &mut impl Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return q.map(|v| v / n);
        }
    }
}

fn random_pose(skel: &Skeleton, rng: &mut impl Rng) -> (Vec3, Vec<[f64; 4]>) {
    let root = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
    let q = (1..skel.joint_count()).map(|_| random_unit_quat(rng)).collect();
    (root, q)
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn versors(q: &[[f64; 4]]) -> Vec<Versor> {
    q.iter().map(|v| Versor::new(v[0], v[1], v[2], v[3])).collect()
}

fn fixtures() -> Vec<Gait> {
    synthetic::fixture_gaits(60).expect("fixture gaits")
}

// ---------------------------------------------------------------------------

fn kinematics_oracle() -> Check {
    let start = Instant::now();
    let skel = Skeleton::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut fk_err, mut trip_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (root, q) = random_pose(&skel, &mut rng);
        let pose = forward_kinematics(&skel, root, &versors(&q)).map_err(|e| e.to_string())?;
        let oracle = matrix_chain_fk(&skel, root, &q);
        for (a, b) in pose.positions.iter().zip(&oracle) {
            fk_err = fk_err.max(dist(*a, *b));
        }
        let recovered = rotations_from_positions(&skel, &pose.positions).map_err(|e| e.to_string())?;
        let again = forward_kinematics(&skel, root, &recovered).map_err(|e| e.to_string())?;
        for (a, b) in again.positions.iter().zip(&pose.positions) {
            trip_err = trip_err.max(dist(*a, *b));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        fk_err <= 1e-9 && trip_err <= 1e-6 && secs < 5.0,
        format!("fk max err {fk_err:.2e}, round-trip max err {trip_err:.2e}, {secs:.2}s"),
    )
}

fn feature_invariance() -> Check {
    let start = Instant::now();
    let skel = Skeleton::standard();
    let defs = FeatureDefinitionTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut poses: Vec<Vec<Vec3>> = (0..50)
        .map(|_| {
            let (root, q) = random_pose(&skel, &mut rng);
            matrix_chain_fk(&skel, root, &q)
        })
        .collect();
    let mut corpus = fixtures();
    corpus.extend(synthetic::random_corpus(4, 60, 7).expect("corpus"));
    poses.extend(corpus.iter().flat_map(|g| g.frames.iter().map(|f| f.positions.clone())));

    let mut worst = 0.0f64;
    for (i, p) in poses.iter().enumerate() {
        let base = extract_from_positions(p, &defs)
            .map_err(|e| format!("pose {i}: {e}"))?
            .to_vec();
        let axis = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let rot = axis_angle_matrix(axis, rng.gen_range(-PI..PI));
        let shift: Vec3 = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
        let variants: Vec<Vec<Vec3>> = [0.5, 2.0, 10.0]
            .iter()
            .map(|&s| p.iter().map(|v| v.map(|x| x * s)).collect())
            .chain(std::iter::once(
                p.iter()
                    .map(|v| {
                        let r = apply(&rot, *v);
                        [r[0] + shift[0], r[1] + shift[1], r[2] + shift[2]]
                    })
                    .collect(),
            ))
            .collect();
        for v in variants {
            let f = extract_from_positions(&v, &defs)
                .map_err(|e| format!("pose {i}: {e}"))?
                .to_vec();
            for (a, b) in base.iter().zip(&f) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-9 && secs < 10.0,
        format!(
            "{} poses x {AFFECTIVE_DIM} features, max deviation {worst:.2e}, {secs:.2}s",
            poses.len()
        ),
    )
}

fn movement_anchors() -> Check {
    let cfg = ContactConfig::default();
    let mut walks = Vec::new();
    for (c, style) in [WalkStyle::HAPPY, WalkStyle::SAD, WalkStyle::ANGRY, WalkStyle::NEUTRAL]
        .into_iter()
        .enumerate()
    {
        for first in [2, 5, 9] {
            let mut spec = WalkSpec::straight(60, style);
            spec.first_left_contact = first;
            spec.turn_rate = 0.004 * c as f64;
            walks.push(synthetic::walk(&spec, EmotionVector::one_hot(c, 4)).map_err(|e| e.to_string())?);
        }
    }
    let (mut anchors, mut omega_err, mut h_err, mut delta_err) = (0, 0.0f64, 0.0f64, 0.0f64);
    for (i, w) in walks.iter().enumerate() {
        let m = movement::extract_movement(&w.gait, &cfg).map_err(|e| format!("walk {i}: {e}"))?;
        let planted: Vec<_> = w.contacts.iter().copied().filter(|c| c.frame > 0).collect();
        if m.contacts != planted {
            return Err(format!("walk {i}: detected {:?}, planted {:?}", m.contacts, planted));
        }
        for c in &planted {
            let want = if c.foot == Foot::Left { 0.0 } else { PI };
            if m.theta[c.frame] != want {
                return Err(format!("walk {i}: theta {} at {:?}", m.theta[c.frame], c));
            }
            anchors += 1;
        }
        for pair in planted.windows(2) {
            let rate = PI / (pair[1].frame - pair[0].frame) as f64;
            for t in pair[0].frame + 1..=pair[1].frame {
                omega_err = omega_err.max((m.omega[t] - rate).abs());
            }
        }
        h_err = h_err.max((m.h.iter().sum::<f64>() / m.h.len() as f64).abs());
        let path = w.gait.root_path();
        for t in 0..path.len() {
            let (a, b) = if t == 0 { (0, 1) } else { (t - 1, t) };
            let tau = [path[b][0] - path[a][0], path[b][2] - path[a][2]];
            let travel = tau[0].atan2(tau[1]);
            let oracle = ((m.alpha[t] - travel + PI).rem_euclid(2.0 * PI) - PI).abs();
            delta_err = delta_err.max((m.delta[t] - oracle).abs());
        }
    }
    ensure(
        omega_err <= 1e-9 && h_err <= 1e-9 && delta_err <= 1e-12,
        format!("{anchors} exact anchors, omega err {omega_err:.2e}, mean h {h_err:.2e}, delta err {delta_err:.2e}"),
    )
}

fn sample_setup(model_cfg: &ModelConfig) -> Result<(GaitModel, EncoderInputs, Target)> {
    let gaits = fixtures();
    let cfg = TrainConfig::default();
    let truth = trainer::corpus_features(&gaits, &cfg.contact)?;
    let model = trainer::init_model(model_cfg, &cfg, &gaits[0].skeleton, &truth)?;
    let inputs = model.window_inputs(&truth[1][..25])?;
    let target = Target::new(&truth[1][25], &inputs.frame, &model.objective.feet);
    Ok((model, inputs, target))
}

fn sample_loss<'t>(
    model: &GaitModel,
    inputs: &EncoderInputs,
    target: &Target,
    tape: &'t Tape,
    bound: &Bound<'t>,
) -> Result<Var<'t>> {
    let pred = model.net.forward(tape, bound, inputs, &model.stats)?;
    Ok(model
        .objective
        .prediction_parts(&pred, target)
        .total(&model.objective.weights))
}

fn gradient_integrity() -> Check {
    let start = Instant::now();
    let (model, inputs, target) = sample_setup(&ModelConfig::tiny()).map_err(|e| e.to_string())?;
    let report = finite_difference_check(&model.store, 1e-5, 240, 11, |tape, bound| {
        sample_loss(&model, &inputs, &target, tape, bound)
    })
    .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        report.coordinates >= 200 && report.max_rel_error < 1e-3 && secs < 120.0,
        format!(
            "{} coordinates, max relative error {:.2e} (analytic {:.3e}, numeric {:.3e}), {secs:.1}s",
            report.coordinates, report.max_rel_error, report.worst_analytic, report.worst_numeric
        ),
    )
}

fn loss_zeros() -> Check {
    let gaits = fixtures();
    let truth = trainer::corpus_features(&gaits, &ContactConfig::default()).map_err(|e| e.to_string())?;
    let (model, _, _) = sample_setup(&ModelConfig::tiny()).map_err(|e| e.to_string())?;
    let mut direct = 0.0f64;
    let mut composed = 0.0f64;
    for frames in &truth {
        for (t, f) in frames.iter().enumerate().step_by(7) {
            let q: Vec<[f64; 4]> = f.rotations.iter().map(|v| v.to_array()).collect();
            let feet = model.objective.feet.feet().map(|j| f.positions[j]);
            let root = f.root_features();
            let terms = [
                loss_motion(&q, &q, 1.0),
                loss_pose(&f.positions, &f.positions),
                loss_affective(&f.affective, &f.affective),
                loss_root(root, root),
                loss_foot(&feet, &feet),
            ];
            direct = terms.iter().fold(direct, |m, v| m.max(v.abs()));

            let window = &frames[t.saturating_sub(10)..=t];
            let inputs = model.window_inputs(window).map_err(|e| e.to_string())?;
            let target = Target::new(f, &inputs.frame, &model.objective.feet);
            let parts = model.objective.parts(&target.q, target.root, &target);
            let v = parts.values();
            composed = [v.motion, v.pose, v.affective, v.root, v.foot]
                .iter()
                .fold(composed, |m, x| m.max(x.abs()));
        }
    }
    ensure(
        direct <= 1e-12 && composed <= 1e-12,
        format!("max term on ground truth {direct:.2e}, through FK and feature re-extraction {composed:.2e}"),
    )
}

fn overfit_config() -> TrainConfig {
    TrainConfig {
        epochs: 300,
        ..TrainConfig::default()
    }
}

fn overfit_run() -> Result<(TrainOutcome, Duration)> {
    let start = Instant::now();
    let outcome = trainer::train(
        &fixtures(),
        &[],
        &ModelConfig::tiny(),
        &overfit_config(),
        None,
        |_, _| Ok(()),
    )?;
    Ok((outcome, start.elapsed()))
}

fn overfit(run: &(TrainOutcome, Duration)) -> Check {
    let (outcome, elapsed) = run;
    let model = outcome.best.to_model().map_err(|e| e.to_string())?;
    let report = trainer::evaluate(&model, &fixtures()).map_err(|e| e.to_string())?;
    let secs = elapsed.as_secs_f64();
    ensure(
        report.clips == 4 && report.pose_error < 0.05 && report.rotation_error_deg < 1.0 && secs < 900.0,
        format!(
            "{} clips, pose_error {:.4}, rotation_error {:.3} deg, best epoch {}, trained in {secs:.0}s",
            report.clips, report.pose_error, report.rotation_error_deg, outcome.best.epoch
        ),
    )
}

fn curriculum_statistics(run: &(TrainOutcome, Duration)) -> Check {
    let cfg = overfit_config();
    let draws = 20_000;
    let mut worst_z = 0.0f64;
    for epoch in [0usize, 1, 50, 138, 300, 1000] {
        let p = 0.995f64.powi(epoch as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(epoch as u64 + 100);
        let hits = (0..draws).filter(|_| teacher_forced(p, &mut rng)).count();
        let freq = hits as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let z = if se == 0.0 {
            if freq == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (freq - p).abs() / se
        };
        worst_z = worst_z.max(z);
    }
    // black_box keeps the oracle from being constant-folded with a
    // different pow routine than the one used at run time
    let decayed = |base: f64, e: usize| black_box(base).powi(black_box(e as i32));
    let mut lr_exact = (0..=1000).all(|e| learning_rate(&cfg, e) == 0.001 * decayed(0.999, e));
    let mut tf_exact = true;
    for (e, row) in run.0.log.iter().enumerate() {
        lr_exact &= row.lr == 0.001 * decayed(0.999, e);
        tf_exact &= row.tf_prob == decayed(0.995, e);
    }
    ensure(
        worst_z <= 3.0 && lr_exact && tf_exact,
        format!(
            "{draws} draws per epoch, worst deviation {worst_z:.2} SE, lr exact: {lr_exact}, logged tf prob exact: {tf_exact}"
        ),
    )
}

fn emotion_schedules() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ends = random_emotions(40, 4, &mut rng).map_err(|e| e.to_string())?;
    ends.extend((0..4).map(|c| EmotionVector::one_hot(c, 4)));
    ends.push(EmotionVector::new(vec![2.0, 1.0, 0.0, 1.0]).map_err(|e| e.to_string())?);
    let (mut sum_err, mut schedules) = (0.0f64, 0);
    for (i, a) in ends.iter().enumerate() {
        let b = &ends[(i * 7 + 3) % ends.len()];
        for steps in [2, 3, 17, 200] {
            let s = build_emotion_schedule(a, b, steps).map_err(|e| e.to_string())?;
            let (na, nb) = (a.normalize().unwrap(), b.normalize().unwrap());
            if s.len() != steps || s[0] != na || s[steps - 1] != nb {
                return Err(format!("schedule {i}/{steps} misses an endpoint"));
            }
            for v in &s {
                sum_err = sum_err.max((v.as_slice().iter().sum::<f64>() - 1.0).abs());
            }
            for k in 0..4 {
                let dir = nb.as_slice()[k] - na.as_slice()[k];
                for w in s.windows(2) {
                    let step = w[1].as_slice()[k] - w[0].as_slice()[k];
                    if step * dir.signum() < -1e-12 || (dir == 0.0 && step.abs() > 1e-12) {
                        return Err(format!("schedule {i}/{steps} component {k} not monotone"));
                    }
                }
            }
            schedules += 1;
        }
    }
    ensure(
        sum_err <= 1e-9,
        format!("{schedules} schedules, max sum error {sum_err:.2e}"),
    )
}

fn rollout_sanity(run: &(TrainOutcome, Duration)) -> Check {
    let model = run.0.best.to_model().map_err(|e| e.to_string())?;
    let paths = [
        ("straight", TrajectorySpec::straight(30.0, 0.0).unwrap()),
        ("bend", TrajectorySpec::bend(1.0, FRAC_PI_2, 1.5, 30.0).unwrap()),
    ];
    let mut failures = Vec::new();
    let mut worst_dev = 0.0f64;
    for seed in fixtures() {
        let stride = generator::mean_stride(&seed, &model.contact).map_err(|e| e.to_string())?;
        for (name, path) in &paths {
            let schedule = vec![seed.emotion.clone(); 200];
            let r = generator::rollout(&model, &seed, path, &schedule, 200).map_err(|e| format!("{name}: {e}"))?;
            let finite = r
                .gait
                .frames
                .iter()
                .all(|f| f.positions.iter().flatten().all(|v| v.is_finite()));
            let unit = r
                .gait
                .frames
                .iter()
                .flat_map(|f| &f.rotations)
                .map(|q| (q.norm() - 1.0).abs())
                .fold(0.0f64, f64::max);
            let continuous = r.gait.frames.windows(2).all(|w| {
                w[0].rotations
                    .iter()
                    .zip(&w[1].rotations)
                    .all(|(a, b)| a.dot(*b) >= 0.0)
            });
            let dev = r.root_deviation();
            let rel_dev = dev.iter().sum::<f64>() / dev.len() as f64 / stride;
            worst_dev = worst_dev.max(rel_dev);
            if !(r.gait.len() == 218 && finite && unit <= 1e-9 && continuous && rel_dev < 0.05) {
                failures.push(format!(
                    "{} {name}: finite {finite}, unit err {unit:.1e}, continuous {continuous}, deviation {:.2}% of stride",
                    seed.emotion,
                    100.0 * rel_dev
                ));
            }
        }
    }
    ensure(
        failures.is_empty(),
        format!(
            "8 rollouts of 200 steps, worst mean root deviation {:.1e}% of stride{}{}",
            100.0 * worst_dev,
            if failures.is_empty() { "" } else { "; " },
            failures.join("; ")
        ),
    )
}

fn format_round_trips() -> Check {
    let mut gaits = fixtures();
    gaits.extend(synthetic::random_corpus(3, 40, 5).map_err(|e| e.to_string())?);
    let mut bvh_err = 0.0f64;
    for g in &gaits {
        let text = gait_to_bvh(g).map_err(|e| e.to_string())?;
        let clip = parse_bvh(&text, "round-trip").map_err(|e| e.to_string())?;
        if clip.frames.len() != g.len() {
            return Err("BVH frame count changed".into());
        }
        for (a, b) in clip.frames.iter().zip(&g.frames) {
            for (p, q) in a.iter().zip(&b.positions) {
                bvh_err = bvh_err.max(dist(*p, *q));
            }
        }
        let json = gait_to_json(g).map_err(|e| e.to_string())?;
        let back = gait_from_json(&json).map_err(|e| e.to_string())?;
        if back != *g || gait_to_json(&back).map_err(|e| e.to_string())? != json {
            return Err("gait JSON round-trip is not exact".into());
        }
    }

    let train = synthetic::fixture_gaits(30).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    let run = |threads: usize| -> std::result::Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| {
            let out = trainer::train(&train, &[], &ModelConfig::tiny(), &cfg, None, |_, _| Ok(()))?;
            Checkpoint::to_json(&out.last)
        })
        .map_err(|e| e.to_string())
    };
    let (a, b) = (run(1)?, run(3)?);
    ensure(
        bvh_err <= 1e-4 && a == b,
        format!(
            "BVH max position err {bvh_err:.2e}, JSON exact, checkpoints identical: {} ({} bytes)",
            a == b,
            a.len()
        ),
    )
}

fn run(index: usize, name: &str, failures: &mut Vec<usize>, check: impl FnOnce() -> Check) {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(msg)
    });
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => println!("criterion {index:>2} {name}: PASS ({detail}) [{secs:.1}s]"),
        Err(detail) => {
            println!("criterion {index:>2} {name}: FAIL ({detail}) [{secs:.1}s]");
            failures.push(index);
        }
    }
}

fn main() {
    // `cargo test -- --list` and friends expect no work to be done
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failures = Vec::new();
    run(1, "kinematics oracle", &mut failures, kinematics_oracle);
    run(2, "feature invariances", &mut failures, feature_invariance);
    run(3, "movement anchors", &mut failures, movement_anchors);
    run(4, "gradient integrity", &mut failures, gradient_integrity);
    run(5, "loss zeros", &mut failures, loss_zeros);

    let trained = panic::catch_unwind(overfit_run);
    let trained = match trained {
        Ok(Ok(r)) => Some(r),
        Ok(Err(e)) => {
            println!("overfit training failed: {e}");
            None
        }
        Err(_) => None,
    };
    let need = |r: &Option<(TrainOutcome, Duration)>| r.as_ref().cloned().ok_or_else(|| "no trained model".to_string());
    run(6, "overfit reproduction", &mut failures, || overfit(&need(&trained)?));
    run(7, "curriculum statistics", &mut failures, || {
        curriculum_statistics(&need(&trained)?)
    });
    run(8, "emotion schedules", &mut failures, emotion_schedules);
    run(9, "rollout sanity", &mut failures, || rollout_sanity(&need(&trained)?));
    run(10, "format round-trips", &mut failures, format_round_trips);

    if failures.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}

//! Root-joint and stepping features: height deviation, speed and its
//! low-pass, heading, orientation difference, curvature, foot contacts and
//! the stepping phase built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::{joints, Gait, Skeleton};

/// Pole of the causal speed filter: `s̄[t] = POLE·s̄[t-1] + (1-POLE)·s[t]`.
pub const LOW_PASS_POLE: f64 = 0.8;

const STILL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Foot {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contact {
    pub frame: usize,
    pub foot: Foot,
}

/// Thresholds of the contact detector, relative to body scale and pace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactConfig {
    /// Heel height band above the clip minimum, as a fraction of leg length.
    pub height_fraction: f64,
    /// Heel horizontal speed limit, as a fraction of mean root speed.
    pub speed_fraction: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            height_fraction: 0.05,
            speed_fraction: 0.1,
        }
    }
}

/// Indices of the joints the movement features read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootJoints {
    pub left_hip: usize,
    pub right_hip: usize,
    pub left_heel: usize,
    pub left_toe: usize,
    pub right_heel: usize,
    pub right_toe: usize,
}

impl Default for FootJoints {
    fn default() -> Self {
        FootJoints {
            left_hip: joints::L_HIP,
            right_hip: joints::R_HIP,
            left_heel: joints::L_HEEL,
            left_toe: joints::L_TOE,
            right_heel: joints::R_HEEL,
            right_toe: joints::R_TOE,
        }
    }
}

impl FootJoints {
    /// Looks the joints up by their standard names.
    pub fn resolve(skel: &Skeleton) -> Result<Self> {
        let find = |k: usize| {
            let name = joints::NAMES[k];
            skel.index_of(name)
                .ok_or_else(|| Error::validation(format!("skeleton has no joint named {name}")))
        };
        Ok(FootJoints {
            left_hip: find(joints::L_HIP)?,
            right_hip: find(joints::R_HIP)?,
            left_heel: find(joints::L_HEEL)?,
            left_toe: find(joints::L_TOE)?,
            right_heel: find(joints::R_HEEL)?,
            right_toe: find(joints::R_TOE)?,
        })
    }

    /// Heel and toe joints in the order `[lh, lt, rh, rt]`.
    pub fn feet(&self) -> [usize; 4] {
        [self.left_heel, self.left_toe, self.right_heel, self.right_toe]
    }
}

/// Heel and toe trajectories of one gait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FootPositions {
    pub lh: Vec<Vec3>,
    pub lt: Vec<Vec3>,
    pub rh: Vec<Vec3>,
    pub rt: Vec<Vec3>,
}

impl FootPositions {
    pub fn from_gait(gait: &Gait, fj: &FootJoints) -> Self {
        let track = |j: usize| gait.frames.iter().map(|f| f.positions[j]).collect();
        FootPositions {
            lh: track(fj.left_heel),
            lt: track(fj.left_toe),
            rh: track(fj.right_heel),
            rt: track(fj.right_toe),
        }
    }
}

/// Every per-frame movement feature of a gait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovementFeatures {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub contacts: Vec<Contact>,
}

pub const MOVEMENT_COLUMNS: [&str; 7] = ["h", "s", "s_bar", "delta", "kappa", "theta", "omega"];

impl MovementFeatures {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Values in [`MOVEMENT_COLUMNS`] order for frame `t`.
    pub fn row(&self, t: usize) -> [f64; 7] {
        [
            self.h[t],
            self.s[t],
            self.s_bar[t],
            self.delta[t],
            self.kappa[t],
            self.theta[t],
            self.omega[t],
        ]
    }
}

/// `h[t] = y[t] - mean(y)`.
pub fn height_deviation(heights: &[f64]) -> Vec<f64> {
    if heights.is_empty() {
        return Vec::new();
    }
    let mean = heights.iter().sum::<f64>() / heights.len() as f64;
    heights.iter().map(|y| y - mean).collect()
}

pub fn root_height_deviation(gait: &Gait) -> Vec<f64> {
    let ys: Vec<f64> = gait.frames.iter().map(|f| f.positions[0][1]).collect();
    height_deviation(&ys)
}

/// Ground-plane forward differences `τ[t] = p[t] - p[t-1]` in `(x, z)`,
/// with `τ[0] = τ[1]`.
pub fn ground_steps(path: &[Vec3]) -> Vec<[f64; 2]> {
    let mut tau: Vec<[f64; 2]> = path
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][2] - w[0][2]])
        .collect();
    if let Some(&first) = tau.first() {
        tau.insert(0, first);
    }
    tau
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Ground-plane root speed per frame, `s[0] = s[1]`.
pub fn path_speed(path: &[Vec3]) -> Vec<f64> {
    ground_steps(path).into_iter().map(norm2).collect()
}

/// One step of the causal speed filter.
#[inline]
pub fn low_pass_step(previous: f64, s: f64) -> f64 {
    LOW_PASS_POLE * previous + (1.0 - LOW_PASS_POLE) * s
}

pub fn low_pass(s: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len());
    for (t, &x) in s.iter().enumerate() {
        out.push(if t == 0 { x } else { low_pass_step(out[t - 1], x) });
    }
    out
}

pub fn root_speed(gait: &Gait) -> (Vec<f64>, Vec<f64>) {
    let s = path_speed(&gait.root_path());
    let s_bar = low_pass(&s);
    (s, s_bar)
}

/// Heading angle of a ground-plane direction, `atan2(x, z)`, so that +Z is
/// 0 and +X is π/2.
#[inline]
pub fn heading(dir: [f64; 2]) -> f64 {
    dir[0].atan2(dir[1])
}

/// Heading of the facing direction `(left_hip - right_hip) × up`.
///
/// With +Y up and the left hip on +X this points along +Z, the direction
/// the toes point in the rest pose.
pub fn pose_heading(positions: &[Vec3], fj: &FootJoints) -> Result<f64> {
    let across = geom::sub3(positions[fj.left_hip], positions[fj.right_hip]);
    // v × up for up = +Y is (-v.z, 0, v.x)
    let forward = [-across[2], across[0]];
    if norm2(forward) < 1e-12 {
        return Err(Error::degenerate("hips coincide on the ground plane; facing undefined"));
    }
    Ok(heading(forward))
}

pub fn root_orientation(gait: &Gait, fj: &FootJoints) -> Result<Vec<f64>> {
    gait.frames
        .iter()
        .enumerate()
        .map(|(t, f)| pose_heading(&f.positions, fj).map_err(|e| Error::degenerate(format!("frame {t}: {e}"))))
        .collect()
}

/// Unsigned angle between the facing `[sin α, cos α]` and a travel step.
/// Returns `None` when the step is too short to define a direction.
pub fn facing_offset(alpha: f64, tau: [f64; 2]) -> Option<f64> {
    let n = norm2(tau);
    if n <= STILL_EPS {
        return None;
    }
    let (sa, ca) = alpha.sin_cos();
    // atan2 of cross and dot equals the clamped arccos of the normalized
    // dot product, without its precision loss near 0 and π
    let dot = sa * tau[0] + ca * tau[1];
    let cross = sa * tau[1] - ca * tau[0];
    Some(cross.abs().atan2(dot))
}

/// δ per frame from headings and a root path; stationary frames carry the
/// previous value forward (0 before any motion).
pub fn orientation_difference_path(alpha: &[f64], path: &[Vec3]) -> Vec<f64> {
    let tau = ground_steps(path);
    let mut out = Vec::with_capacity(alpha.len());
    let mut last = 0.0;
    for (a, t) in alpha.iter().zip(tau) {
        if let Some(d) = facing_offset(*a, t) {
            last = d;
        }
        out.push(last);
    }
    out
}

pub fn orientation_difference(alpha: &[f64], gait: &Gait) -> Vec<f64> {
    orientation_difference_path(alpha, &gait.root_path())
}

/// `κ[t] = ‖τ[t] - τ[t-1]‖` from the first defined frame on; earlier
/// frames copy the first defined value.
pub fn curvature_path(path: &[Vec3]) -> Vec<f64> {
    let n = path.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let tau = ground_steps(path);
    let mut kappa = vec![0.0; n];
    for t in 2..n {
        kappa[t] = norm2([tau[t][0] - tau[t - 1][0], tau[t][1] - tau[t - 1][1]]);
    }
    kappa[0] = kappa[2];
    kappa[1] = kappa[2];
    kappa
}

pub fn trajectory_curvature(gait: &Gait) -> Vec<f64> {
    curvature_path(&gait.root_path())
}

/// Detects heel strikes from per-frame joint positions.
///
/// A frame is in contact for a foot when the heel is within
/// `height_fraction · leg_length` of the lowest heel height of the clip and
/// moves horizontally slower than `speed_fraction` times the mean root speed.
/// Each contact run reports its first frame; a run that is already in
/// progress at frame 0 is skipped because its strike is not observed. A foot
/// striking twice in a row keeps only the earlier strike, and of two feet
/// striking on the same frame only the one continuing the alternation is
/// kept.
pub fn detect_contacts_in(
    frames: &[&[Vec3]],
    leg_length: f64,
    fj: &FootJoints,
    cfg: &ContactConfig,
) -> Result<Vec<Contact>> {
    let n = frames.len();
    if n < 2 {
        return Err(Error::InsufficientSteps { found: 0 });
    }
    let root: Vec<Vec3> = frames.iter().map(|f| f[0]).collect();
    let mean_speed = path_speed(&root).iter().sum::<f64>() / n as f64;
    let min_heel = frames
        .iter()
        .flat_map(|f| [f[fj.left_heel][1], f[fj.right_heel][1]])
        .fold(f64::INFINITY, f64::min);
    let height_limit = min_heel + cfg.height_fraction * leg_length;
    let speed_limit = cfg.speed_fraction * mean_speed;

    let mut events = Vec::new();
    for (foot, heel) in [(Foot::Left, fj.left_heel), (Foot::Right, fj.right_heel)] {
        let path: Vec<Vec3> = frames.iter().map(|f| f[heel]).collect();
        let speed = path_speed(&path);
        // a run already under way at frame 0 has an unobserved strike
        let mut inside = true;
        for t in 0..n {
            let down = path[t][1] < height_limit && speed[t] < speed_limit;
            if down && !inside {
                events.push(Contact { frame: t, foot });
            }
            inside = down;
        }
    }
    events.sort_by_key(|c| (c.frame, c.foot == Foot::Right));
    let mut contacts: Vec<Contact> = Vec::with_capacity(events.len());
    for c in events {
        // of two strikes on one frame the first that alternates wins (left
        // when nothing precedes them)
        let alternates = contacts.last().is_none_or(|p| p.foot != c.foot);
        let taken = contacts.last().is_some_and(|p| p.frame == c.frame);
        if alternates && !taken {
            contacts.push(c);
        }
    }
    if contacts.len() < 2 {
        return Err(Error::InsufficientSteps { found: contacts.len() });
    }
    Ok(contacts)
}

pub fn detect_foot_contacts(gait: &Gait, fj: &FootJoints, cfg: &ContactConfig) -> Result<Vec<Contact>> {
    let frames: Vec<&[Vec3]> = gait.frames.iter().map(|f| f.positions.as_slice()).collect();
    detect_contacts_in(&frames, gait.skeleton.leg_length(), fj, cfg)
}

fn contact_phase(foot: Foot) -> f64 {
    match foot {
        Foot::Left => 0.0,
        Foot::Right => PI,
    }
}

/// Stepping phase θ and its per-frame advance ω.
///
/// θ is 0 at left and π at right contacts and grows linearly by π between
/// consecutive contacts, wrapping at 2π. Frames outside the contact span
/// extrapolate with the nearest half-period's rate.
pub fn stepping_phase(contacts: &[Contact], len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if contacts.len() < 2 {
        return Err(Error::InsufficientSteps { found: contacts.len() });
    }
    for w in contacts.windows(2) {
        if w[0].foot == w[1].foot || w[1].frame <= w[0].frame {
            return Err(Error::validation(format!(
                "contacts must alternate feet at increasing frames, got {:?} then {:?}",
                w[0], w[1]
            )));
        }
    }
    let two_pi = 2.0 * PI;
    let last = contacts.len() - 1;
    let mut theta = Vec::with_capacity(len);
    for t in 0..len {
        // half-period index i with contacts[i].frame <= t < contacts[i+1].frame,
        // clamped to the first/last half-period for extrapolation
        let i = match contacts.iter().rposition(|c| c.frame <= t) {
            None => 0,
            Some(i) => i.min(last - 1),
        };
        let (a, b) = (contacts[i], contacts[i + 1]);
        let frac = (t as f64 - a.frame as f64) / (b.frame - a.frame) as f64;
        let value = if frac == 0.0 {
            contact_phase(a.foot)
        } else {
            (contact_phase(a.foot) + PI * frac).rem_euclid(two_pi)
        };
        theta.push(value);
    }
    let omega = phase_rate(&theta);
    Ok((theta, omega))
}

/// `ω[t] = (θ[t] - θ[t-1]) mod 2π`, `ω[0] = ω[1]`.
pub fn phase_rate(theta: &[f64]) -> Vec<f64> {
    let mut omega: Vec<f64> = theta.windows(2).map(|w| (w[1] - w[0]).rem_euclid(2.0 * PI)).collect();
    if let Some(&first) = omega.first() {
        omega.insert(0, first);
    }
    omega.resize(theta.len(), 0.0);
    omega
}

/// All movement features of a gait.
pub fn extract_movement(gait: &Gait, cfg: &ContactConfig) -> Result<MovementFeatures> {
    let fj = FootJoints::resolve(&gait.skeleton)?;
    let path = gait.root_path();
    let h = root_height_deviation(gait);
    let s = path_speed(&path);
    let s_bar = low_pass(&s);
    let alpha = root_orientation(gait, &fj)?;
    let delta = orientation_difference_path(&alpha, &path);
    let kappa = curvature_path(&path);
    let contacts = detect_foot_contacts(gait, &fj, cfg)?;
    let (theta, omega) = stepping_phase(&contacts, gait.len())?;
    Ok(MovementFeatures {
        h,
        s,
        s_bar,
        alpha,
        delta,
        kappa,
        theta,
        omega,
        contacts,
    })
}

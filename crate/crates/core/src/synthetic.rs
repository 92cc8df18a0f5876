//! Procedural walking fixtures on the standard skeleton.
//!
//! The walker plants each heel at a known frame, keeps it still through
//! stance, and solves the legs with two-bone IK so every bone keeps its
//! rest length. Style parameters are blended from the emotion vector, which
//! gives small labelled corpora for tests, benchmarks and demos.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::{joints::*, Gait, Skeleton, Versor};
use crate::model::EmotionVector;
use crate::movement::{Contact, Foot};
use crate::rng;

/// Heel height above the ground during stance; the toe then touches y = 0.
const HEEL_REST: f64 = 0.04;

/// Kinematic style of a walk. Speeds and durations are per frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStyle {
    /// Root ground speed, length units per frame.
    pub speed: f64,
    /// Frames per full gait cycle (rounded to an even count).
    pub cycle_frames: f64,
    /// Fraction of the cycle each foot is planted.
    pub stance_fraction: f64,
    /// Forward torso pitch, radians.
    pub lean: f64,
    /// Extra forward head pitch, radians.
    pub head_droop: f64,
    /// Peak arm swing about the shoulder, radians.
    pub arm_swing: f64,
    pub elbow_bend: f64,
    /// Shoulder elevation, radians.
    pub shoulder_raise: f64,
    /// Sideways arm opening, radians.
    pub arm_abduction: f64,
    /// Vertical root bob amplitude, length units.
    pub bob: f64,
    /// Peak heel lift during swing, length units.
    pub heel_lift: f64,
}

impl WalkStyle {
    pub const HAPPY: WalkStyle = WalkStyle {
        speed: 0.065,
        cycle_frames: 20.0,
        stance_fraction: 0.6,
        lean: -0.05,
        head_droop: -0.12,
        arm_swing: 0.45,
        elbow_bend: 0.35,
        shoulder_raise: 0.02,
        arm_abduction: 0.08,
        bob: 0.02,
        heel_lift: 0.14,
    };
    pub const SAD: WalkStyle = WalkStyle {
        speed: 0.035,
        cycle_frames: 26.0,
        stance_fraction: 0.64,
        lean: 0.25,
        head_droop: 0.4,
        arm_swing: 0.1,
        elbow_bend: 0.08,
        shoulder_raise: -0.08,
        arm_abduction: 0.02,
        bob: 0.006,
        heel_lift: 0.1,
    };
    pub const ANGRY: WalkStyle = WalkStyle {
        speed: 0.07,
        cycle_frames: 18.0,
        stance_fraction: 0.6,
        lean: 0.12,
        head_droop: 0.05,
        arm_swing: 0.5,
        elbow_bend: 0.7,
        shoulder_raise: 0.1,
        arm_abduction: 0.18,
        bob: 0.015,
        heel_lift: 0.15,
    };
    pub const NEUTRAL: WalkStyle = WalkStyle {
        speed: 0.05,
        cycle_frames: 22.0,
        stance_fraction: 0.62,
        lean: 0.03,
        head_droop: 0.0,
        arm_swing: 0.3,
        elbow_bend: 0.2,
        shoulder_raise: 0.0,
        arm_abduction: 0.05,
        bob: 0.012,
        heel_lift: 0.12,
    };

    /// Blend of the four base styles weighted by the first four emotion
    /// components; extra components count as neutral.
    pub fn for_emotion(emotion: &EmotionVector) -> Result<Self> {
        let m = emotion.normalize()?;
        let c = m.as_slice();
        let w = |i: usize| c.get(i).copied().unwrap_or(0.0);
        let extra: f64 = c.iter().skip(4).sum();
        let parts = [
            (w(0), Self::HAPPY),
            (w(1), Self::SAD),
            (w(2), Self::ANGRY),
            (w(3) + extra, Self::NEUTRAL),
        ];
        let mix = |f: fn(&WalkStyle) -> f64| parts.iter().map(|(k, s)| k * f(s)).sum::<f64>();
        Ok(WalkStyle {
            speed: mix(|s| s.speed),
            cycle_frames: mix(|s| s.cycle_frames),
            stance_fraction: mix(|s| s.stance_fraction),
            lean: mix(|s| s.lean),
            head_droop: mix(|s| s.head_droop),
            arm_swing: mix(|s| s.arm_swing),
            elbow_bend: mix(|s| s.elbow_bend),
            shoulder_raise: mix(|s| s.shoulder_raise),
            arm_abduction: mix(|s| s.arm_abduction),
            bob: mix(|s| s.bob),
            heel_lift: mix(|s| s.heel_lift),
        })
    }

    /// Perturbs every parameter by up to `±amount` relative.
    pub fn jittered(&self, amount: f64, rng: &mut impl Rng) -> Self {
        let mut j = |v: f64| v * (1.0 + rng.gen_range(-amount..=amount));
        WalkStyle {
            speed: j(self.speed),
            cycle_frames: j(self.cycle_frames),
            stance_fraction: self.stance_fraction,
            lean: j(self.lean),
            head_droop: j(self.head_droop),
            arm_swing: j(self.arm_swing),
            elbow_bend: j(self.elbow_bend),
            shoulder_raise: j(self.shoulder_raise),
            arm_abduction: j(self.arm_abduction),
            bob: j(self.bob),
            heel_lift: j(self.heel_lift),
        }
    }
}

/// Where and how long to walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub frames: usize,
    pub frame_rate: f64,
    pub style: WalkStyle,
    /// Initial heading, `atan2(x, z)` convention.
    pub heading: f64,
    /// Constant heading change per frame; 0 walks a straight line.
    pub turn_rate: f64,
    /// Ground position `(x, z)` of the root at frame 0.
    pub start: [f64; 2],
    /// Frame of the first left heel strike; right strikes fall half a cycle
    /// later.
    pub first_left_contact: usize,
}

impl WalkSpec {
    pub fn straight(frames: usize, style: WalkStyle) -> Self {
        WalkSpec {
            frames,
            frame_rate: 20.0,
            style,
            heading: 0.0,
            turn_rate: 0.0,
            start: [0.0, 0.0],
            first_left_contact: 3,
        }
    }
}

/// A generated gait with the contact frames it was built around.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWalk {
    pub gait: Gait,
    pub contacts: Vec<Contact>,
}

struct Walker<'a> {
    spec: &'a WalkSpec,
    skel: Skeleton,
    cycle: i64,
    stance: i64,
    base_height: f64,
}

fn yaw(a: f64) -> Versor {
    Versor::from_axis_angle([0.0, 1.0, 0.0], a)
}

fn about_x(a: f64) -> Versor {
    Versor::from_axis_angle([1.0, 0.0, 0.0], a)
}

fn about_z(a: f64) -> Versor {
    Versor::from_axis_angle([0.0, 0.0, 1.0], a)
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

impl<'a> Walker<'a> {
    fn new(spec: &'a WalkSpec) -> Result<Self> {
        let st = &spec.style;
        let cycle = (2.0 * (st.cycle_frames / 2.0).round()) as i64;
        if cycle < 6 || st.speed.is_nan() || st.speed <= 0.0 {
            return Err(Error::validation(format!(
                "walk needs a cycle of at least 6 frames and positive speed, got {cycle} / {}",
                st.speed
            )));
        }
        let stance = ((st.stance_fraction * cycle as f64).round() as i64).clamp(cycle / 2 + 1, cycle - 3);
        let skel = Skeleton::standard();
        let reach = geom::norm3(skel.offsets[L_KNEE]) + geom::norm3(skel.offsets[L_HEEL]);
        // the heel sits below the hip at mid-stance and travels half the
        // stance distance either way; keep the leg slightly bent at the ends
        let half_travel = st.speed * (stance as f64 + 1.0) / 2.0;
        let vertical = (0.96 * reach).powi(2) - half_travel * half_travel;
        if vertical <= 0.25 {
            return Err(Error::validation(format!(
                "stride of {half_travel} per half stance is too long for the leg"
            )));
        }
        let hip_drop = -skel.offsets[L_HIP][1];
        let base_height = HEEL_REST + hip_drop + vertical.sqrt() - st.bob;
        Ok(Walker {
            spec,
            skel,
            cycle,
            stance,
            base_height,
        })
    }

    fn heading_at(&self, t: f64) -> f64 {
        self.spec.heading + self.spec.turn_rate * t
    }

    /// Root ground position at (possibly fractional or negative) time `t`.
    fn ground_at(&self, t: f64) -> [f64; 2] {
        let (a0, w, v) = (self.spec.heading, self.spec.turn_rate, self.spec.style.speed);
        let [x0, z0] = self.spec.start;
        if w.abs() < 1e-12 {
            [x0 + v * t * a0.sin(), z0 + v * t * a0.cos()]
        } else {
            let a = a0 + w * t;
            [x0 + v / w * (a0.cos() - a.cos()), z0 + v / w * (a.sin() - a0.sin())]
        }
    }

    fn root_at(&self, t: usize) -> Vec3 {
        let g = self.ground_at(t as f64);
        let phase = 2.0 * PI * (t as f64 - self.spec.first_left_contact as f64) / self.cycle as f64;
        // two bobs per cycle, lowest at each heel strike
        let y = self.base_height + self.spec.style.bob * (1.0 - (2.0 * phase).cos());
        [g[0], y, g[1]]
    }

    fn first_contact(&self, foot: Foot) -> i64 {
        let c = self.spec.first_left_contact as i64;
        match foot {
            Foot::Left => c,
            Foot::Right => c + self.cycle / 2,
        }
    }

    /// Heel ground point and foot heading of the stance that starts at `strike`.
    fn plant(&self, foot: Foot, strike: i64) -> ([f64; 2], f64) {
        let mid = strike as f64 + (self.stance - 1) as f64 / 2.0;
        let a = self.heading_at(mid);
        let g = self.ground_at(mid);
        let side = match foot {
            Foot::Left => 1.0,
            Foot::Right => -1.0,
        };
        let lateral = self.skel.offsets[L_HIP][0].abs() * side;
        let off = yaw(a).rotate([lateral, 0.0, 0.0]);
        ([g[0] + off[0], g[1] + off[2]], a)
    }

    /// Heel position and foot orientation at frame `t`.
    fn foot_at(&self, foot: Foot, t: usize) -> (Vec3, Versor) {
        let t = t as i64;
        let c0 = self.first_contact(foot);
        let k = (t - c0).div_euclid(self.cycle);
        let strike = c0 + k * self.cycle;
        let since = t - strike;
        let (p0, a0) = self.plant(foot, strike);
        if since < self.stance {
            return ([p0[0], HEEL_REST, p0[1]], yaw(a0));
        }
        let (p1, a1) = self.plant(foot, strike + self.cycle);
        let swing = self.cycle - self.stance + 1;
        let step = (since - self.stance + 1) as f64;
        let u = step / swing as f64;
        // horizontal travel finishes one frame before touchdown so the
        // strike frame is the first still frame
        let s = smoothstep(step / (swing - 1) as f64);
        let xz = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
        let y = HEEL_REST + self.spec.style.heel_lift * (PI * u).sin().max(0.0).sqrt();
        let pitch = 0.35 * (PI * u).sin();
        let a = a0 + s * geom::wrap_signed_f64(a1 - a0);
        ([xz[0], y, xz[1]], yaw(a) * about_x(-pitch))
    }

    #[allow(clippy::too_many_arguments)]
    fn leg(
        &self,
        out: &mut [Vec3],
        hip: usize,
        knee: usize,
        heel: usize,
        toe: usize,
        foot: Foot,
        t: usize,
    ) -> Result<()> {
        let (heel_pos, foot_rot) = self.foot_at(foot, t);
        let h = out[hip];
        let l1 = geom::norm3(self.skel.offsets[knee]);
        let l2 = geom::norm3(self.skel.offsets[heel]);
        let span = geom::sub3(heel_pos, h);
        let d = geom::norm3(span);
        if d >= 0.999 * (l1 + l2) || d <= (l1 - l2).abs() {
            return Err(Error::validation(format!(
                "frame {t}: heel target {d:.4} away from the hip is out of reach"
            )));
        }
        let u = geom::scale3(span, 1.0 / d);
        let a = self.heading_at(t as f64);
        let fwd = [a.sin(), 0.0, a.cos()];
        let pole = geom::sub3(fwd, geom::scale3(u, geom::dot3(fwd, u)));
        let pole = geom::scale3(pole, 1.0 / geom::norm3(pole));
        let cos_b = ((l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)).clamp(-1.0, 1.0);
        let sin_b = (1.0 - cos_b * cos_b).sqrt();
        out[knee] = geom::add3(
            h,
            geom::add3(geom::scale3(u, l1 * cos_b), geom::scale3(pole, l1 * sin_b)),
        );
        out[heel] = heel_pos;
        out[toe] = geom::add3(heel_pos, foot_rot.rotate(self.skel.offsets[toe]));
        Ok(())
    }

    fn frame(&self, t: usize) -> Result<Vec<Vec3>> {
        let st = &self.spec.style;
        let o = &self.skel.offsets;
        let mut p = vec![[0.0; 3]; self.skel.joint_count()];
        let a = self.heading_at(t as f64);
        let phase = 2.0 * PI * (t as f64 - self.spec.first_left_contact as f64) / self.cycle as f64;
        p[ROOT] = self.root_at(t);

        let pelvis = yaw(a);
        p[L_HIP] = geom::add3(p[ROOT], pelvis.rotate(o[L_HIP]));
        p[R_HIP] = geom::add3(p[ROOT], pelvis.rotate(o[R_HIP]));
        self.leg(&mut p, L_HIP, L_KNEE, L_HEEL, L_TOE, Foot::Left, t)?;
        self.leg(&mut p, R_HIP, R_KNEE, R_HEEL, R_TOE, Foot::Right, t)?;

        let torso = yaw(a - 0.05 * st.arm_swing * phase.cos()) * about_x(st.lean) * about_z(0.03 * phase.sin());
        p[SPINE] = geom::add3(p[ROOT], torso.rotate(o[SPINE]));
        p[CHEST] = geom::add3(p[SPINE], torso.rotate(o[CHEST]));
        p[NECK] = geom::add3(p[CHEST], torso.rotate(o[NECK]));
        p[HEAD] = geom::add3(p[NECK], (torso * about_x(st.head_droop)).rotate(o[HEAD]));

        for (s, e, w, hand, side) in [
            (L_SHOULDER, L_ELBOW, L_WRIST, L_HAND, 1.0),
            (R_SHOULDER, R_ELBOW, R_WRIST, R_HAND, -1.0),
        ] {
            p[s] = geom::add3(p[NECK], (torso * about_z(side * st.shoulder_raise)).rotate(o[s]));
            // the left arm is furthest back at the left heel strike
            let swing = side * st.arm_swing * phase.cos();
            let arm = torso * about_z(side * st.arm_abduction) * about_x(swing);
            p[e] = geom::add3(p[s], arm.rotate(o[e]));
            let fore = arm * about_x(-st.elbow_bend);
            p[w] = geom::add3(p[e], fore.rotate(o[w]));
            p[hand] = geom::add3(p[w], fore.rotate(o[hand]));
        }
        Ok(p)
    }

    fn contacts(&self) -> Vec<Contact> {
        let n = self.spec.frames as i64;
        let mut out = Vec::new();
        for foot in [Foot::Left, Foot::Right] {
            let mut c = self.first_contact(foot);
            while c < n {
                if c >= 0 {
                    out.push(Contact {
                        frame: c as usize,
                        foot,
                    });
                }
                c += self.cycle;
            }
        }
        out.sort_by_key(|c| c.frame);
        out
    }
}

/// Generates one walk.
pub fn walk(spec: &WalkSpec, emotion: EmotionVector) -> Result<SyntheticWalk> {
    if spec.frames < 2 {
        return Err(Error::validation("a walk needs at least 2 frames"));
    }
    let walker = Walker::new(spec)?;
    let frames = (0..spec.frames).map(|t| walker.frame(t)).collect::<Result<Vec<_>>>()?;
    let gait = Gait::from_positions(walker.skel.clone(), frames, spec.frame_rate, emotion)?;
    Ok(SyntheticWalk {
        contacts: walker.contacts(),
        gait,
    })
}

/// One straight walk per basic emotion, in [`crate::model::EMOTION_NAMES`]
/// order.
pub fn fixture_gaits(frames: usize) -> Result<Vec<Gait>> {
    (0..4)
        .map(|c| {
            let emotion = EmotionVector::one_hot(c, 4);
            let style = WalkStyle::for_emotion(&emotion)?;
            Ok(walk(&WalkSpec::straight(frames, style), emotion)?.gait)
        })
        .collect()
}

/// `count` walks with random blended emotions, headings, gentle turns and
/// style jitter.
pub fn random_corpus(count: usize, frames: usize, seed: u64) -> Result<Vec<Gait>> {
    let mut rng = rng::stream(seed, "synthetic");
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen::<f64>().powi(3)).collect();
            let emotion = EmotionVector::normalized(raw)?;
            let style = WalkStyle::for_emotion(&emotion)?.jittered(0.1, &mut rng);
            let spec = WalkSpec {
                frames,
                frame_rate: 20.0,
                style,
                heading: rng.gen_range(-PI..PI),
                turn_rate: rng.gen_range(-0.01..0.01),
                start: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                first_left_contact: rng.gen_range(0..8),
            };
            Ok(walk(&spec, emotion)?.gait)
        })
        .collect()
}

//! The five training losses, written once over [`Real`] so they evaluate on
//! plain numbers and on tape variables alike.

use serde::{Deserialize, Serialize};

use super::config::LossWeights;
use crate::geom::{self, Real, Vec3};

fn lift3<R: Real>(like: R, v: Vec3) -> [R; 3] {
    [like.lift(v[0]), like.lift(v[1]), like.lift(v[2])]
}

/// Per-joint rotation loss: squared norm of the wrapped Euler difference
/// between the truth and the normalized prediction, plus
/// `lambda_versor · (‖raw‖ - 1)²`.
pub fn loss_motion<R: Real>(q_true: &[[f64; 4]], q_raw: &[[R; 4]], lambda_versor: f64) -> R {
    assert_eq!(q_true.len(), q_raw.len(), "versor count mismatch");
    let mut total = q_raw[0][0].lift(0.0);
    for (t, raw) in q_true.iter().zip(q_raw) {
        let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt_r();
        let unit = [raw[0] / norm, raw[1] / norm, raw[2] / norm, raw[3] / norm];
        let e_hat = geom::quat_to_euler_zyx(unit);
        let e = geom::quat_to_euler_zyx(*t);
        for k in 0..3 {
            let d = geom::wrap_signed(-e_hat[k] + e[k]);
            total = total + d * d;
        }
        let stretch = norm - 1.0;
        total = total + stretch * stretch * lambda_versor;
    }
    total
}

/// Squared distance between root-relative joint positions, joints `1..J`.
pub fn loss_pose<R: Real>(x_true: &[Vec3], x_hat: &[[R; 3]]) -> R {
    assert_eq!(x_true.len(), x_hat.len(), "joint count mismatch");
    let root_hat = x_hat[0];
    let mut total = root_hat[0].lift(0.0);
    for j in 1..x_true.len() {
        let rel = geom::sub3(x_true[j], x_true[0]);
        let rel_hat = geom::sub3(x_hat[j], root_hat);
        let d = geom::sub3(lift3(total, rel), rel_hat);
        total = total + geom::dot3(d, d);
    }
    total
}

/// Squared distance between affective vectors.
pub fn loss_affective<R: Real>(a_true: &[f64], a_hat: &[R]) -> R {
    assert_eq!(a_true.len(), a_hat.len(), "affective length mismatch");
    let mut total = a_hat[0].lift(0.0);
    for (a, b) in a_true.iter().zip(a_hat) {
        let d = -*b + *a;
        total = total + d * d;
    }
    total
}

/// L1 distance between `[h, s, δ]` and its prediction.
pub fn loss_root<R: Real>(root_true: [f64; 3], root_hat: [R; 3]) -> R {
    let mut total = root_hat[0].lift(0.0);
    for k in 0..3 {
        total = total + (-root_hat[k] + root_true[k]).abs_r();
    }
    total
}

/// L1 distance over the heel and toe coordinates `[lh, lt, rh, rt]`.
pub fn loss_foot<R: Real>(feet_true: &[Vec3; 4], feet_hat: &[[R; 3]; 4]) -> R {
    let mut total = feet_hat[0][0].lift(0.0);
    for (t, h) in feet_true.iter().zip(feet_hat) {
        for k in 0..3 {
            total = total + (-h[k] + t[k]).abs_r();
        }
    }
    total
}

/// Values of the individual loss terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts<R> {
    pub motion: R,
    pub pose: R,
    pub affective: R,
    pub root: R,
    pub foot: R,
}

impl<R: Real> LossParts<R> {
    pub fn total(&self, w: &LossWeights) -> R {
        self.motion * w.motion
            + self.pose * w.pose
            + self.affective * w.affective
            + self.root * w.root
            + self.foot * w.foot
    }

    pub fn values(&self) -> LossParts<f64> {
        LossParts {
            motion: self.motion.val(),
            pose: self.pose.val(),
            affective: self.affective.val(),
            root: self.root.val(),
            foot: self.foot.val(),
        }
    }
}

impl LossParts<f64> {
    pub fn add_scaled(&mut self, o: &LossParts<f64>, s: f64) {
        self.motion += s * o.motion;
        self.pose += s * o.pose;
        self.affective += s * o.affective;
        self.root += s * o.root;
        self.foot += s * o.foot;
    }
}

pub fn total_loss<R: Real>(parts: &LossParts<R>, weights: &LossWeights) -> R {
    parts.total(weights)
}

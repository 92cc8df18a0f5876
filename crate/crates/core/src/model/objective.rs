//! Per-sample training objective: forward kinematics of the prediction,
//! re-extraction of its affective features and the five loss terms.

use serde::{Deserialize, Serialize};

use super::config::LossWeights;
use super::inputs::{feet_of, FrameFeatures, LocalFrame};
use super::losses::{self, LossParts};
use super::network::Prediction;
use crate::affect::{affective_generic, FeatureDefinitionTable};
use crate::autodiff::Var;
use crate::error::Result;
use crate::geom::{self, Real, Vec3};
use crate::kinematics::{fk_generic, Skeleton};
use crate::movement::FootJoints;

/// Ground truth for one predicted frame, in the window's local frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub q: Vec<[f64; 4]>,
    pub positions: Vec<Vec3>,
    pub affective: Vec<f64>,
    pub root: [f64; 3],
    pub feet: [Vec3; 4],
}

impl Target {
    pub fn new(frame: &FrameFeatures, local: &LocalFrame, fj: &FootJoints) -> Self {
        let positions: Vec<Vec3> = frame.positions.iter().map(|p| local.point_to_local(*p)).collect();
        Target {
            q: frame
                .rotations
                .iter()
                .map(|q| local.versor_to_local(*q).to_array())
                .collect(),
            feet: feet_of(&positions, fj),
            positions,
            affective: frame.affective.clone(),
            root: frame.root_features(),
        }
    }
}

/// Fixed data shared by every loss evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub skeleton: Skeleton,
    pub defs: FeatureDefinitionTable,
    pub feet: FootJoints,
    pub weights: LossWeights,
}

impl Objective {
    pub fn new(skeleton: Skeleton, weights: LossWeights) -> Result<Self> {
        let feet = FootJoints::resolve(&skeleton)?;
        let defs = FeatureDefinitionTable::default();
        defs.validate(skeleton.joint_count())?;
        Ok(Objective {
            skeleton,
            defs,
            feet,
            weights,
        })
    }

    /// Loss terms for raw predicted quadruples and root features. The pose
    /// is placed on the true root position.
    pub fn parts<R: Real>(&self, q_raw: &[[R; 4]], root_hat: [R; 3], target: &Target) -> LossParts<R> {
        let like = root_hat[0];
        let unit: Vec<[R; 4]> = q_raw.iter().map(|q| geom::quat_normalize(*q)).collect();
        let r = target.positions[0];
        let root = [like.lift(r[0]), like.lift(r[1]), like.lift(r[2])];
        let x_hat = fk_generic(&self.skeleton, root, &unit);
        let a_hat = affective_generic(&x_hat, &self.defs);
        let feet_hat = feet_of(&x_hat, &self.feet);
        LossParts {
            motion: losses::loss_motion(&target.q, q_raw, self.weights.versor),
            pose: losses::loss_pose(&target.positions, &x_hat),
            affective: losses::loss_affective(&target.affective, &a_hat),
            root: losses::loss_root(target.root, root_hat),
            foot: losses::loss_foot(&target.feet, &feet_hat),
        }
    }

    pub fn prediction_parts<'t>(&self, pred: &Prediction<'t>, target: &Target) -> LossParts<Var<'t>> {
        self.parts(&pred.q_raw, [pred.h, pred.s, pred.delta], target)
    }
}

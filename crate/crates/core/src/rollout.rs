//! Autoregressive stepping shared by training, evaluation and generation:
//! predict the next frame from a history and turn the prediction back into
//! a full [`FrameFeatures`] record.

use std::f64::consts::PI;

use crate::affect;
use crate::autodiff::ParameterStore;
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::{forward_kinematics, Gait, Versor};
use crate::model::{
    assemble_window, EmotiveNet, EncoderInputs, FeatureStats, FrameFeatures, LocalFrame, Objective, PredictionValues,
};
use crate::movement::{self, ContactConfig};

/// Frames of recent history searched for foot contacts when the stepping
/// phase of a generated frame is re-derived.
pub const PHASE_HISTORY: usize = 60;

/// A network with its weights and everything needed to run it on gaits.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitModel {
    pub net: EmotiveNet,
    pub store: ParameterStore,
    pub stats: FeatureStats,
    pub objective: Objective,
    pub contact: ContactConfig,
}

/// Where a generated frame goes and what it is told about its path.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    /// World root position.
    pub root: Vec3,
    pub kappa: f64,
    /// World heading to turn the pose to, if any.
    pub facing: Option<f64>,
    pub emotion: Vec<f64>,
}

/// The last `len` frames of `history` (all of them if shorter).
pub fn tail(history: &[FrameFeatures], len: usize) -> Vec<&FrameFeatures> {
    history[history.len().saturating_sub(len)..].iter().collect()
}

impl GaitModel {
    pub fn window_inputs(&self, history: &[FrameFeatures]) -> Result<EncoderInputs> {
        assemble_window(&tail(history, self.net.config.window), &self.stats)
    }

    /// One prediction from the end of `history`.
    pub fn predict_next(&self, history: &[FrameFeatures]) -> Result<(PredictionValues, LocalFrame)> {
        let inputs = self.window_inputs(history)?;
        let pred = self.net.infer(&self.store, &inputs, &self.stats)?;
        Ok((pred, inputs.frame))
    }

    /// Builds the frame that follows `history` from a prediction expressed in
    /// `local`. Affective features, facing and stepping phase are
    /// re-extracted from the generated pose; where the pose is too
    /// degenerate for that, the previous frame's values carry over.
    pub fn compose_frame(
        &self,
        pred: &PredictionValues,
        local: &LocalFrame,
        history: &[FrameFeatures],
        place: &Placement,
    ) -> Result<FrameFeatures> {
        let prev = history
            .last()
            .ok_or_else(|| Error::validation("cannot extend an empty history"))?;
        let skel = &self.objective.skeleton;
        let fj = &self.objective.feet;
        let mut rotations: Vec<Versor> = pred
            .q
            .iter()
            .map(|q| local.versor_to_world(Versor::new(q[0], q[1], q[2], q[3])))
            .collect();
        let mut pose = forward_kinematics(skel, place.root, &rotations)?;
        let mut alpha = movement::pose_heading(&pose.positions, fj).unwrap_or(prev.alpha);
        if let Some(target) = place.facing {
            let turn = Versor::yaw(geom::wrap_signed_f64(target - alpha));
            rotations = rotations.into_iter().map(|q| turn * q).collect();
            pose = forward_kinematics(skel, place.root, &rotations)?;
            alpha = movement::pose_heading(&pose.positions, fj).unwrap_or(target);
        }
        let rotations: Vec<Versor> = rotations
            .into_iter()
            .zip(&prev.rotations)
            .map(|(q, p)| if q.dot(*p) < 0.0 { -q } else { q })
            .collect();
        let affective = affect::extract_from_positions(&pose.positions, &self.objective.defs)
            .map(|a| a.to_vec())
            .unwrap_or_else(|_| prev.affective.clone());
        let mut frame = FrameFeatures {
            positions: pose.positions,
            rotations,
            affective,
            h: pred.h,
            s: pred.s,
            s_bar: movement::low_pass_step(prev.s_bar, pred.s),
            delta: pred.delta,
            kappa: place.kappa,
            theta: prev.theta,
            omega: prev.omega,
            alpha,
            emotion: place.emotion.clone(),
        };
        let (theta, omega) = self.phase_after(history, &frame);
        frame.theta = theta;
        frame.omega = omega;
        Ok(frame)
    }

    /// Stepping phase of `next` from contacts detected over recent history,
    /// or the previous phase advanced by its rate when too few are found.
    /// The rate is that of the last completed half-period.
    fn phase_after(&self, history: &[FrameFeatures], next: &FrameFeatures) -> (f64, f64) {
        let prev = history.last().expect("non-empty history");
        let recent = tail(history, PHASE_HISTORY - 1);
        let mut frames: Vec<&[Vec3]> = recent.iter().map(|f| f.positions.as_slice()).collect();
        frames.push(&next.positions);
        let n = frames.len();
        let detected = movement::detect_contacts_in(
            &frames,
            self.objective.skeleton.leg_length(),
            &self.objective.feet,
            &self.contact,
        )
        .and_then(|c| movement::stepping_phase(&c, n).map(|(theta, _)| (c, theta)));
        match detected {
            Ok((contacts, theta)) => {
                let [a, b] = [contacts[contacts.len() - 2], contacts[contacts.len() - 1]];
                (theta[n - 1], PI / (b.frame - a.frame) as f64)
            }
            Err(_) => ((prev.theta + prev.omega).rem_euclid(2.0 * PI), prev.omega),
        }
    }

    /// Predicts and composes the next frame.
    pub fn step(&self, history: &[FrameFeatures], place: &Placement) -> Result<(FrameFeatures, PredictionValues)> {
        let (pred, local) = self.predict_next(history)?;
        let frame = self.compose_frame(&pred, &local, history, place)?;
        Ok((frame, pred))
    }

    /// Placement on the recorded root path of `truth`.
    pub fn truth_placement(truth: &FrameFeatures) -> Placement {
        Placement {
            root: truth.positions[0],
            kappa: truth.kappa,
            facing: None,
            emotion: truth.emotion.clone(),
        }
    }
}

/// Packs frames into a gait with the skeleton and frame rate of `template`.
pub fn frames_to_gait(frames: &[FrameFeatures], template: &Gait, emotion: crate::model::EmotionVector) -> Gait {
    Gait {
        skeleton: template.skeleton.clone(),
        frames: frames
            .iter()
            .map(|f| crate::kinematics::Pose {
                positions: f.positions.clone(),
                rotations: f.rotations.clone(),
            })
            .collect(),
        frame_rate: template.frame_rate,
        emotion,
    }
}

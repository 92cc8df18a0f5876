//! Per-frame features and the assembly of encoder input windows.
//!
//! Windows are expressed in a heading-local frame: the last frame of the
//! window is moved to the ground-plane origin and turned to face +Z. Every
//! movement and affective feature is invariant under that change, so only
//! the versors and the positions used by the losses are affected.

use serde::{Deserialize, Serialize};

use crate::affect::{self, FeatureDefinitionTable, AFFECTIVE_DIM};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::{Gait, Versor};
use crate::movement::{self, ContactConfig, FootJoints};

/// Width of the control block `[sin θ, cos θ, ω, s̄, κ]`.
pub const CONTROL_DIM: usize = 5;
/// Width of the root block `[h, s, δ]`.
pub const ROOT_DIM: usize = 3;

/// Everything the model reads or predicts about one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub positions: Vec<Vec3>,
    pub rotations: Vec<Versor>,
    pub affective: Vec<f64>,
    pub h: f64,
    pub s: f64,
    pub s_bar: f64,
    pub delta: f64,
    pub kappa: f64,
    pub theta: f64,
    pub omega: f64,
    /// Facing heading.
    pub alpha: f64,
    pub emotion: Vec<f64>,
}

impl FrameFeatures {
    pub fn controls(&self) -> [f64; CONTROL_DIM] {
        [self.theta.sin(), self.theta.cos(), self.omega, self.s_bar, self.kappa]
    }

    pub fn root_features(&self) -> [f64; ROOT_DIM] {
        [self.h, self.s, self.delta]
    }
}

/// Feature extraction for every frame of a gait.
pub fn gait_features(
    gait: &Gait,
    contact: &ContactConfig,
    defs: &FeatureDefinitionTable,
) -> Result<Vec<FrameFeatures>> {
    let mv = movement::extract_movement(gait, contact)?;
    gait.frames
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let affective = affect::extract_from_positions(&f.positions, defs)
                .map_err(|e| Error::degenerate(format!("frame {t}: {e}")))?
                .to_vec();
            Ok(FrameFeatures {
                positions: f.positions.clone(),
                rotations: f.rotations.clone(),
                affective,
                h: mv.h[t],
                s: mv.s[t],
                s_bar: mv.s_bar[t],
                delta: mv.delta[t],
                kappa: mv.kappa[t],
                theta: mv.theta[t],
                omega: mv.omega[t],
                alpha: mv.alpha[t],
                emotion: gait.emotion.as_slice().to_vec(),
            })
        })
        .collect()
}

/// A ground-plane frame of reference: origin on the floor under a root
/// position and a heading that becomes +Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub heading: f64,
}

impl LocalFrame {
    pub fn of(frame: &FrameFeatures) -> Self {
        let r = frame.positions[0];
        LocalFrame {
            origin: [r[0], 0.0, r[2]],
            heading: frame.alpha,
        }
    }

    fn local_rotation(&self) -> Versor {
        Versor::yaw(-self.heading)
    }

    pub fn point_to_local(&self, p: Vec3) -> Vec3 {
        self.local_rotation().rotate(geom::sub3(p, self.origin))
    }

    pub fn point_to_world(&self, p: Vec3) -> Vec3 {
        geom::add3(Versor::yaw(self.heading).rotate(p), self.origin)
    }

    pub fn versor_to_local(&self, q: Versor) -> Versor {
        self.local_rotation() * q
    }

    pub fn versor_to_world(&self, q: Versor) -> Versor {
        Versor::yaw(self.heading) * q
    }
}

/// Mean and spread used to standardize encoder inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub affective_mean: Vec<f64>,
    pub affective_std: Vec<f64>,
    pub control_mean: Vec<f64>,
    pub control_std: Vec<f64>,
    pub root_mean: Vec<f64>,
    pub root_std: Vec<f64>,
    /// Local-frame versor components; also the output scale of the
    /// predicted versors.
    pub versor_mean: Vec<f64>,
    pub versor_std: Vec<f64>,
}

/// Smallest versor component spread used for scaling. Components that
/// barely move are centred but not blown up.
pub const VERSOR_STD_FLOOR: f64 = 0.01;

fn mean_std(rows: &[Vec<f64>], width: usize, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; width];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; width];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    // near-constant columns are centred but left unscaled
    let std = var
        .into_iter()
        .map(|v| if v.sqrt() < 1e-6 { 1.0 } else { v.sqrt().max(floor) })
        .collect();
    (mean, std)
}

impl FeatureStats {
    /// Statistics that leave inputs unchanged.
    pub fn identity(bones: usize) -> Self {
        FeatureStats {
            versor_mean: vec![0.0; 4 * bones],
            versor_std: vec![1.0; 4 * bones],
            affective_mean: vec![0.0; AFFECTIVE_DIM],
            affective_std: vec![1.0; AFFECTIVE_DIM],
            control_mean: vec![0.0; CONTROL_DIM],
            control_std: vec![1.0; CONTROL_DIM],
            root_mean: vec![0.0; ROOT_DIM],
            root_std: vec![1.0; ROOT_DIM],
        }
    }

    pub fn fit<'a>(frames: impl IntoIterator<Item = &'a FrameFeatures>) -> Result<Self> {
        let mut aff = Vec::new();
        let mut ctl = Vec::new();
        let mut root = Vec::new();
        let mut quads = Vec::new();
        for f in frames {
            let local = LocalFrame::of(f);
            quads.push(
                f.rotations
                    .iter()
                    .flat_map(|q| local.versor_to_local(*q).to_array())
                    .collect::<Vec<f64>>(),
            );
            aff.push(f.affective.clone());
            ctl.push(f.controls().to_vec());
            root.push(f.root_features().to_vec());
        }
        if aff.is_empty() {
            return Err(Error::validation("feature statistics need at least one frame"));
        }
        let (affective_mean, affective_std) = mean_std(&aff, AFFECTIVE_DIM, 0.0);
        let (control_mean, control_std) = mean_std(&ctl, CONTROL_DIM, 0.0);
        let (root_mean, root_std) = mean_std(&root, ROOT_DIM, 0.0);
        let (versor_mean, versor_std) = mean_std(&quads, quads[0].len(), VERSOR_STD_FLOOR);
        Ok(FeatureStats {
            versor_mean,
            versor_std,
            affective_mean,
            affective_std,
            control_mean,
            control_std,
            root_mean,
            root_std,
        })
    }
}

fn push_standardized(out: &mut Vec<f64>, values: &[f64], mean: &[f64], std: &[f64]) {
    out.extend(values.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s));
}

/// Row-major encoder inputs for one window of `rows` frames.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInputs {
    pub rows: usize,
    /// `rows x (18 + C)`: affective features and emotion.
    pub i1: Vec<f64>,
    /// `rows x (5 + C)`: controls and emotion.
    pub i2: Vec<f64>,
    /// `rows x 4(J-1)`: standardized local-frame versors.
    pub q: Vec<f64>,
    /// Local-frame versors of the last row, unscaled.
    pub last_q: Vec<f64>,
    /// `rows x 3`: `[h, s, δ]`.
    pub root: Vec<f64>,
    pub frame: LocalFrame,
}

/// Builds the encoder inputs for `window`, expressed relative to its last
/// frame.
pub fn assemble_window(window: &[&FrameFeatures], stats: &FeatureStats) -> Result<EncoderInputs> {
    let last = window
        .last()
        .ok_or_else(|| Error::shape("cannot assemble an empty window"))?;
    let frame = LocalFrame::of(last);
    let mut inputs = EncoderInputs {
        rows: window.len(),
        i1: Vec::new(),
        i2: Vec::new(),
        q: Vec::new(),
        last_q: Vec::new(),
        root: Vec::new(),
        frame,
    };
    let bones = last.rotations.len();
    for (t, f) in window.iter().enumerate() {
        if f.affective.len() != AFFECTIVE_DIM || f.rotations.len() != bones {
            return Err(Error::shape(format!("window frame {t} has inconsistent widths")));
        }
        push_standardized(
            &mut inputs.i1,
            &f.affective,
            &stats.affective_mean,
            &stats.affective_std,
        );
        inputs.i1.extend_from_slice(&f.emotion);
        push_standardized(&mut inputs.i2, &f.controls(), &stats.control_mean, &stats.control_std);
        inputs.i2.extend_from_slice(&f.emotion);
        push_standardized(&mut inputs.root, &f.root_features(), &stats.root_mean, &stats.root_std);
        // one shared left factor keeps the hemisphere alignment of the source
        let local: Vec<f64> = f
            .rotations
            .iter()
            .flat_map(|q| frame.versor_to_local(*q).to_array())
            .collect();
        if local.len() != stats.versor_mean.len() {
            return Err(Error::shape(format!(
                "window frame {t} has {} versor components, statistics cover {}",
                local.len(),
                stats.versor_mean.len()
            )));
        }
        push_standardized(&mut inputs.q, &local, &stats.versor_mean, &stats.versor_std);
        inputs.last_q = local;
    }
    Ok(inputs)
}

/// Heel and toe positions `[lh, lt, rh, rt]` of a pose.
pub fn feet_of<T: Copy>(positions: &[T], fj: &FootJoints) -> [T; 4] {
    fj.feet().map(|j| positions[j])
}

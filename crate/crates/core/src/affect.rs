//! Scale-independent per-frame pose affective features: joint angles,
//! distance ratios and triangle-area ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Real, Vec3};
use crate::kinematics::{joints::*, Pose, Skeleton};

pub const ANGLE_COUNT: usize = 11;
pub const DISTANCE_COUNT: usize = 4;
pub const AREA_COUNT: usize = 3;
pub const AFFECTIVE_DIM: usize = ANGLE_COUNT + DISTANCE_COUNT + AREA_COUNT;

/// Angle at `apex` subtended by joints `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleDef {
    pub apex: usize,
    pub a: usize,
    pub b: usize,
}

/// `|num.0 - num.1| / |den.0 - den.1|`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceDef {
    pub num: (usize, usize),
    pub den: (usize, usize),
}

/// `area(num) / area(den)`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaDef {
    pub num: (usize, usize, usize),
    pub den: (usize, usize, usize),
}

/// Joint indices of the 18 affective features, in output order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDefinitionTable {
    pub angles: Vec<AngleDef>,
    pub distances: Vec<DistanceDef>,
    pub areas: Vec<AreaDef>,
}

impl Default for FeatureDefinitionTable {
    fn default() -> Self {
        let angle = |apex, a, b| AngleDef { apex, a, b };
        let dist = |num, den| DistanceDef { num, den };
        let area = |num, den| AreaDef { num, den };
        let torso = (NECK, ROOT);
        FeatureDefinitionTable {
            angles: vec![
                angle(NECK, L_SHOULDER, R_SHOULDER),
                angle(L_SHOULDER, NECK, L_ELBOW),
                angle(R_SHOULDER, NECK, R_ELBOW),
                angle(L_ELBOW, L_SHOULDER, L_WRIST),
                angle(R_ELBOW, R_SHOULDER, R_WRIST),
                angle(NECK, HEAD, ROOT),
                // one root angle only: the pelvis is rigid, so the right-hip
                // twin carries almost the same information
                angle(ROOT, NECK, L_HIP),
                angle(L_HIP, ROOT, L_KNEE),
                angle(R_HIP, ROOT, R_KNEE),
                angle(L_KNEE, L_HIP, L_HEEL),
                angle(R_KNEE, R_HIP, R_HEEL),
            ],
            distances: vec![
                dist((L_HEEL, R_HEEL), torso),
                dist((L_HAND, R_HAND), torso),
                dist((HEAD, ROOT), torso),
                dist((L_TOE, R_TOE), torso),
            ],
            areas: vec![
                area((L_HAND, R_HAND, NECK), (L_TOE, R_TOE, ROOT)),
                area((L_ELBOW, R_ELBOW, NECK), (L_KNEE, R_KNEE, ROOT)),
                area((HEAD, L_SHOULDER, R_SHOULDER), (L_HIP, R_HIP, ROOT)),
            ],
        }
    }
}

impl FeatureDefinitionTable {
    pub fn validate(&self, joint_count: usize) -> Result<()> {
        if self.angles.len() != ANGLE_COUNT || self.distances.len() != DISTANCE_COUNT || self.areas.len() != AREA_COUNT
        {
            return Err(Error::validation(format!(
                "feature table has {}/{}/{} entries, need {ANGLE_COUNT}/{DISTANCE_COUNT}/{AREA_COUNT}",
                self.angles.len(),
                self.distances.len(),
                self.areas.len()
            )));
        }
        let mut idx = Vec::new();
        for a in &self.angles {
            idx.extend([a.apex, a.a, a.b]);
        }
        for d in &self.distances {
            idx.extend([d.num.0, d.num.1, d.den.0, d.den.1]);
        }
        for t in &self.areas {
            idx.extend([t.num.0, t.num.1, t.num.2, t.den.0, t.den.1, t.den.2]);
        }
        if let Some(bad) = idx.into_iter().find(|&j| j >= joint_count) {
            return Err(Error::validation(format!(
                "feature table references joint {bad} but skeleton has {joint_count}"
            )));
        }
        Ok(())
    }

    /// Column names in output order.
    pub fn column_names(&self, skel: Option<&Skeleton>) -> Vec<String> {
        let name = |j: usize| {
            skel.and_then(|s| s.names.get(j).cloned())
                .unwrap_or_else(|| j.to_string())
        };
        let mut out = Vec::with_capacity(AFFECTIVE_DIM);
        for (i, a) in self.angles.iter().enumerate() {
            out.push(format!("angle{}_{}", i + 1, name(a.apex)));
        }
        for i in 0..self.distances.len() {
            out.push(format!("dist_ratio{}", i + 1));
        }
        for i in 0..self.areas.len() {
            out.push(format!("area_ratio{}", i + 1));
        }
        out
    }
}

/// The 18 affective features of one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffectiveVector {
    pub angles: Vec<f64>,
    pub distance_ratios: Vec<f64>,
    pub area_ratios: Vec<f64>,
}

impl AffectiveVector {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(AFFECTIVE_DIM);
        v.extend_from_slice(&self.angles);
        v.extend_from_slice(&self.distance_ratios);
        v.extend_from_slice(&self.area_ratios);
        v
    }
}

pub fn joint_angle(positions: &[Vec3], apex: usize, a: usize, b: usize) -> Result<f64> {
    let u = geom::sub3(positions[a], positions[apex]);
    let v = geom::sub3(positions[b], positions[apex]);
    if geom::norm3(u) < 1e-12 || geom::norm3(v) < 1e-12 || geom::norm3(geom::sub3(u, v)) < 1e-12 {
        return Err(Error::degenerate(format!(
            "coincident joints in angle ({apex}, {a}, {b})"
        )));
    }
    Ok(geom::angle_between(u, v))
}

pub fn distance_ratio(positions: &[Vec3], num: (usize, usize), den: (usize, usize)) -> Result<f64> {
    let d = geom::norm3(geom::sub3(positions[den.0], positions[den.1]));
    if d <= 1e-9 {
        return Err(Error::degenerate(format!(
            "distance ratio denominator ({}, {}) is {d}",
            den.0, den.1
        )));
    }
    Ok(geom::norm3(geom::sub3(positions[num.0], positions[num.1])) / d)
}

pub fn area_ratio(positions: &[Vec3], num: (usize, usize, usize), den: (usize, usize, usize)) -> Result<f64> {
    let d = geom::triangle_area(positions[den.0], positions[den.1], positions[den.2]);
    if d <= 1e-12 {
        return Err(Error::degenerate(format!(
            "area ratio denominator ({}, {}, {}) is {d}",
            den.0, den.1, den.2
        )));
    }
    Ok(geom::triangle_area(positions[num.0], positions[num.1], positions[num.2]) / d)
}

/// All 18 features of a pose, with degenerate geometry reported by feature
/// index.
pub fn extract_affective(pose: &Pose, defs: &FeatureDefinitionTable) -> Result<AffectiveVector> {
    extract_from_positions(&pose.positions, defs)
}

pub fn extract_from_positions(positions: &[Vec3], defs: &FeatureDefinitionTable) -> Result<AffectiveVector> {
    let tag = |k: usize, e: Error| Error::degenerate(format!("feature {k}: {e}"));
    let angles = defs
        .angles
        .iter()
        .enumerate()
        .map(|(k, d)| joint_angle(positions, d.apex, d.a, d.b).map_err(|e| tag(k, e)))
        .collect::<Result<Vec<_>>>()?;
    let distance_ratios = defs
        .distances
        .iter()
        .enumerate()
        .map(|(k, d)| distance_ratio(positions, d.num, d.den).map_err(|e| tag(ANGLE_COUNT + k, e)))
        .collect::<Result<Vec<_>>>()?;
    let area_ratios = defs
        .areas
        .iter()
        .enumerate()
        .map(|(k, d)| area_ratio(positions, d.num, d.den).map_err(|e| tag(ANGLE_COUNT + DISTANCE_COUNT + k, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AffectiveVector {
        angles,
        distance_ratios,
        area_ratios,
    })
}

/// Unchecked feature extraction over any [`Real`]; the same formulas as
/// [`extract_affective`].
pub fn affective_generic<R: Real>(positions: &[[R; 3]], defs: &FeatureDefinitionTable) -> Vec<R> {
    let mut out = Vec::with_capacity(AFFECTIVE_DIM);
    for d in &defs.angles {
        let u = geom::sub3(positions[d.a], positions[d.apex]);
        let v = geom::sub3(positions[d.b], positions[d.apex]);
        out.push(geom::angle_between(u, v));
    }
    let dist = |i: usize, j: usize| geom::norm3(geom::sub3(positions[i], positions[j]));
    for d in &defs.distances {
        out.push(dist(d.num.0, d.num.1) / dist(d.den.0, d.den.1));
    }
    let area = |t: (usize, usize, usize)| geom::triangle_area(positions[t.0], positions[t.1], positions[t.2]);
    for d in &defs.areas {
        out.push(area(d.num) / area(d.den));
    }
    out
}

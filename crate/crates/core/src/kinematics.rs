//! Pose-tree skeleton, versor algebra and forward kinematics.
//!
//! Rotations are per-bone and global: joint `j` sits at
//! `R_j * offset_j + X_parent(j)`. The root has no rotation and its position
//! comes straight from the data. Y is up; the XZ plane is the ground.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Real, Vec3};
use crate::model::EmotionVector;

/// Joint indices of the standard 21-joint body.
pub mod joints {
    pub const ROOT: usize = 0;
    pub const SPINE: usize = 1;
    pub const CHEST: usize = 2;
    pub const NECK: usize = 3;
    pub const HEAD: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const L_HAND: usize = 8;
    pub const R_SHOULDER: usize = 9;
    pub const R_ELBOW: usize = 10;
    pub const R_WRIST: usize = 11;
    pub const R_HAND: usize = 12;
    pub const L_HIP: usize = 13;
    pub const L_KNEE: usize = 14;
    pub const L_HEEL: usize = 15;
    pub const L_TOE: usize = 16;
    pub const R_HIP: usize = 17;
    pub const R_KNEE: usize = 18;
    pub const R_HEEL: usize = 19;
    pub const R_TOE: usize = 20;

    pub const NAMES: [&str; 21] = [
        "root",
        "spine",
        "chest",
        "neck",
        "head",
        "left_shoulder",
        "left_elbow",
        "left_wrist",
        "left_hand_index",
        "right_shoulder",
        "right_elbow",
        "right_wrist",
        "right_hand_index",
        "left_hip",
        "left_knee",
        "left_heel",
        "left_toe",
        "right_hip",
        "right_knee",
        "right_heel",
        "right_toe",
    ];
}

/// Directed joint tree. Joints are stored in topological order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub names: Vec<String>,
    /// Parent index per joint, `-1` for the root.
    pub parents: Vec<i64>,
    pub offsets: Vec<Vec3>,
}

impl Skeleton {
    pub fn new(names: Vec<String>, parents: Vec<i64>, offsets: Vec<Vec3>) -> Result<Self> {
        let skel = Skeleton {
            names,
            parents,
            offsets,
        };
        skel.validate()?;
        Ok(skel)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.parents.len();
        if n == 0 {
            return Err(Error::validation("skeleton has no joints"));
        }
        if self.offsets.len() != n || self.names.len() != n {
            return Err(Error::shape(format!(
                "skeleton has {} parents, {} offsets, {} names",
                n,
                self.offsets.len(),
                self.names.len()
            )));
        }
        if self.parents[0] != -1 {
            return Err(Error::validation("joint 0 must be the root (parent -1)"));
        }
        if self.offsets[0] != [0.0; 3] {
            return Err(Error::validation("root offset must be zero"));
        }
        for (j, &p) in self.parents.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= j {
                return Err(Error::validation(format!(
                    "joint {j} ({}) has parent {p}; parents must precede children",
                    self.names[j]
                )));
            }
        }
        if self.offsets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite skeleton offset"));
        }
        Ok(())
    }

    /// The standard 21-joint body in its rest pose, facing +Z, left on +X,
    /// units in meters.
    pub fn standard() -> Self {
        use joints::*;
        let mut parents = vec![-1i64; 21];
        let mut offsets = vec![[0.0; 3]; 21];
        let mut set = |j: usize, p: usize, o: Vec3| {
            parents[j] = p as i64;
            offsets[j] = o;
        };
        set(SPINE, ROOT, [0.0, 0.12, 0.0]);
        set(CHEST, SPINE, [0.0, 0.2, 0.0]);
        set(NECK, CHEST, [0.0, 0.22, 0.0]);
        set(HEAD, NECK, [0.0, 0.18, 0.02]);
        for (s, e, w, h, side) in [
            (L_SHOULDER, L_ELBOW, L_WRIST, L_HAND, 1.0),
            (R_SHOULDER, R_ELBOW, R_WRIST, R_HAND, -1.0),
        ] {
            set(s, NECK, [0.18 * side, -0.04, 0.0]);
            set(e, s, [0.02 * side, -0.28, 0.0]);
            set(w, e, [0.0, -0.25, 0.02]);
            set(h, w, [0.0, -0.08, 0.01]);
        }
        for (hip, knee, heel, toe, side) in [
            (L_HIP, L_KNEE, L_HEEL, L_TOE, 1.0),
            (R_HIP, R_KNEE, R_HEEL, R_TOE, -1.0),
        ] {
            set(hip, ROOT, [0.1 * side, -0.06, 0.0]);
            set(knee, hip, [0.0, -0.42, 0.01]);
            set(heel, knee, [0.0, -0.42, -0.02]);
            set(toe, heel, [0.0, -0.04, 0.15]);
        }
        Skeleton {
            names: NAMES.iter().map(|s| s.to_string()).collect(),
            parents,
            offsets,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        let p = self.parents[j];
        (p >= 0).then_some(p as usize)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn children(&self, j: usize) -> Vec<usize> {
        (0..self.joint_count()).filter(|&c| self.parent(c) == Some(j)).collect()
    }

    /// Joints without children.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.joint_count())
            .filter(|&j| !self.parents.contains(&(j as i64)))
            .collect()
    }

    /// Joint positions with identity rotations and the root at the origin.
    pub fn rest_positions(&self) -> Vec<Vec3> {
        let mut out = vec![[0.0; 3]; self.joint_count()];
        for j in 1..self.joint_count() {
            let p = self.parent(j).expect("non-root joint has a parent");
            out[j] = geom::add3(out[p], self.offsets[j]);
        }
        out
    }

    /// Sum of bone lengths from the root down the left leg, or the longest
    /// root-to-leaf chain when the standard names are absent.
    pub fn leg_length(&self) -> f64 {
        let chain_len = |mut j: usize| {
            let mut len = 0.0;
            while let Some(p) = self.parent(j) {
                len += geom::norm3(self.offsets[j]);
                j = p;
            }
            len
        };
        match self.index_of(joints::NAMES[joints::L_HEEL]) {
            Some(h) => chain_len(h),
            None => self.leaves().into_iter().map(chain_len).fold(0.0, f64::max),
        }
    }
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Versor {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Versor {
    fn from(a: [f64; 4]) -> Self {
        Versor {
            w: a[0],
            x: a[1],
            y: a[2],
            z: a[3],
        }
    }
}

impl From<Versor> for [f64; 4] {
    fn from(q: Versor) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl std::ops::Mul for Versor {
    type Output = Versor;

    fn mul(self, b: Versor) -> Versor {
        let a = self;
        Versor {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }
}

impl std::ops::Neg for Versor {
    type Output = Versor;

    fn neg(self) -> Versor {
        Versor {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl Versor {
    pub const IDENTITY: Versor = Versor {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Versor { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = geom::norm3(axis);
        let (s, c) = (angle / 2.0).sin_cos();
        Versor::new(c, axis[0] / n * s, axis[1] / n * s, axis[2] / n * s)
    }

    /// `Rz(z) * Ry(y) * Rx(x)`, the inverse of [`quat_to_euler`].
    pub fn from_euler_zyx(angles: Vec3) -> Self {
        Versor::from_axis_angle([0.0, 0.0, 1.0], angles[0])
            * Versor::from_axis_angle([0.0, 1.0, 0.0], angles[1])
            * Versor::from_axis_angle([1.0, 0.0, 0.0], angles[2])
    }

    pub fn to_array(self) -> [f64; 4] {
        self.into()
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, o: Versor) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Versor::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Self {
        Versor::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        geom::quat_rotate(self.to_array(), v)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let Versor { w, x, y, z } = self;
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

    /// Rotation about +Y (yaw on the ground plane).
    pub fn yaw(angle: f64) -> Self {
        Versor::from_axis_angle([0.0, 1.0, 0.0], angle)
    }

    /// Shortest-arc rotation taking direction `from` onto direction `to`.
    ///
    /// For antiparallel inputs the result is a half turn about `up x from`,
    /// or about +X when `from` is vertical.
    pub fn shortest_arc(from: Vec3, to: Vec3) -> Result<Self> {
        let (nf, nt) = (geom::norm3(from), geom::norm3(to));
        if nf < 1e-12 || nt < 1e-12 {
            return Err(Error::degenerate("zero-length direction in shortest arc"));
        }
        let a = geom::scale3(from, 1.0 / nf);
        let b = geom::scale3(to, 1.0 / nt);
        let d = geom::dot3(a, b);
        if d < -1.0 + 1e-12 {
            let mut axis = geom::cross3([0.0, 1.0, 0.0], a);
            if geom::norm3(axis) < 1e-6 {
                axis = [1.0, 0.0, 0.0];
            }
            return Ok(Versor::from_axis_angle(axis, std::f64::consts::PI));
        }
        let c = geom::cross3(a, b);
        Ok(Versor::new(1.0 + d, c[0], c[1], c[2]).normalize())
    }
}

/// One frame: world joint positions plus the per-bone versors `q_1..q_{J-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub positions: Vec<Vec3>,
    pub rotations: Vec<Versor>,
}

impl Pose {
    pub fn root_position(&self) -> Vec3 {
        self.positions[0]
    }

    /// Applies `p -> rotation * p * scale + translation` to positions and
    /// left-multiplies every versor by `rotation`.
    pub fn transformed(&self, rotation: Versor, scale: f64, translation: Vec3) -> Pose {
        Pose {
            positions: self
                .positions
                .iter()
                .map(|&p| geom::add3(geom::scale3(rotation.rotate(p), scale), translation))
                .collect(),
            rotations: self.rotations.iter().map(|&q| rotation * q).collect(),
        }
    }
}

/// A walking sequence on one skeleton with one emotion label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gait {
    pub skeleton: Skeleton,
    pub frames: Vec<Pose>,
    pub frame_rate: f64,
    pub emotion: EmotionVector,
}

impl Gait {
    /// Builds a gait from positions alone, recovering hemisphere-aligned
    /// shortest-arc versors for every bone.
    pub fn from_positions(
        skeleton: Skeleton,
        frames: Vec<Vec<Vec3>>,
        frame_rate: f64,
        emotion: EmotionVector,
    ) -> Result<Self> {
        let mut poses = Vec::with_capacity(frames.len());
        for (t, positions) in frames.into_iter().enumerate() {
            let rotations = rotations_from_positions(&skeleton, &positions)
                .map_err(|e| Error::degenerate(format!("frame {t}: {e}")))?;
            poses.push(Pose { positions, rotations });
        }
        align_pose_rotations(&mut poses);
        let gait = Gait {
            skeleton,
            frames: poses,
            frame_rate,
            emotion,
        };
        gait.validate()?;
        Ok(gait)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.skeleton.validate()?;
        if self.frames.len() < 2 {
            return Err(Error::validation(format!(
                "gait needs at least 2 frames, has {}",
                self.frames.len()
            )));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::validation("frame rate must be positive"));
        }
        let j = self.skeleton.joint_count();
        for (t, f) in self.frames.iter().enumerate() {
            if f.positions.len() != j || f.rotations.len() != j - 1 {
                return Err(Error::shape(format!(
                    "frame {t}: {} positions / {} rotations for {j} joints",
                    f.positions.len(),
                    f.rotations.len()
                )));
            }
            if f.positions.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("frame {t}: non-finite position")));
            }
        }
        Ok(())
    }

    pub fn root_path(&self) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.root_position()).collect()
    }
}

fn check_unit(q: &Versor, joint: usize, tol: f64) -> Result<()> {
    let n = q.norm();
    if !n.is_finite() || (n - 1.0).abs() > tol {
        return Err(Error::validation(format!("versor for joint {joint} has norm {n}")));
    }
    Ok(())
}

/// Places every joint from the root position and the per-bone versors.
pub fn forward_kinematics(skel: &Skeleton, root: Vec3, rotations: &[Versor]) -> Result<Pose> {
    let j = skel.joint_count();
    if rotations.len() + 1 != j {
        return Err(Error::shape(format!(
            "{} rotations for {j} joints (need {})",
            rotations.len(),
            j - 1
        )));
    }
    for (i, q) in rotations.iter().enumerate() {
        check_unit(q, i + 1, 1e-6)?;
    }
    let quats: Vec<[f64; 4]> = rotations.iter().map(|q| q.to_array()).collect();
    Ok(Pose {
        positions: fk_generic(skel, root, &quats),
        rotations: rotations.to_vec(),
    })
}

/// Unchecked forward kinematics over any [`Real`].
pub fn fk_generic<R: Real>(skel: &Skeleton, root: [R; 3], rotations: &[[R; 4]]) -> Vec<[R; 3]> {
    let mut out = Vec::with_capacity(skel.joint_count());
    out.push(root);
    for j in 1..skel.joint_count() {
        let p = skel.parents[j] as usize;
        let bone = geom::quat_rotate(rotations[j - 1], skel.offsets[j]);
        let x = geom::add3(out[p], bone);
        out.push(x);
    }
    out
}

/// Recovers, per bone, the shortest-arc versor from the rest offset to the
/// observed bone direction. Twist about the bone axis is zero.
pub fn rotations_from_positions(skel: &Skeleton, positions: &[Vec3]) -> Result<Vec<Versor>> {
    let j = skel.joint_count();
    if positions.len() != j {
        return Err(Error::shape(format!("{} positions for {j} joints", positions.len())));
    }
    (1..j)
        .map(|k| {
            let p = skel.parents[k] as usize;
            let bone = geom::sub3(positions[k], positions[p]);
            if geom::norm3(bone) < 1e-12 {
                return Err(Error::degenerate(format!(
                    "zero-length bone at joint {k} ({})",
                    skel.names[k]
                )));
            }
            if geom::norm3(skel.offsets[k]) < 1e-12 {
                return Err(Error::degenerate(format!(
                    "zero offset at joint {k} ({})",
                    skel.names[k]
                )));
            }
            Versor::shortest_arc(skel.offsets[k], bone)
        })
        .collect()
}

/// Intrinsic Z-Y-X Euler angles in `[0, 2π)`, ordered `(z, y, x)`.
pub fn quat_to_euler(q: Versor) -> Vec3 {
    geom::quat_to_euler_zyx(q.to_array())
}

/// Chooses signs so the first versor has `w >= 0` and consecutive versors
/// have a nonnegative dot product.
pub fn hemisphere_align(seq: &[Versor]) -> Vec<Versor> {
    let mut out: Vec<Versor> = Vec::with_capacity(seq.len());
    for &q in seq {
        let aligned = match out.last() {
            None if q.w < 0.0 => -q,
            None => q,
            Some(&prev) if prev.dot(q) < 0.0 => -q,
            Some(_) => q,
        };
        out.push(aligned);
    }
    out
}

/// Hemisphere-aligns every joint's versor track across a frame sequence.
pub fn align_pose_rotations(frames: &mut [Pose]) {
    let Some(first) = frames.first() else { return };
    let bones = first.rotations.len();
    for b in 0..bones {
        let track: Vec<Versor> = frames.iter().map(|f| f.rotations[b]).collect();
        for (f, q) in frames.iter_mut().zip(hemisphere_align(&track)) {
            f.rotations[b] = q;
        }
    }
}

/// Sign-aligns `q` to `reference`.
pub fn align_to(q: Versor, reference: Versor) -> Versor {
    if q.dot(reference) < 0.0 {
        -q
    } else {
        q
    }
}

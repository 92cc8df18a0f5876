//! Scalar abstraction and small fixed-size vector/quaternion helpers.
//!
//! Everything geometric (forward kinematics, affective features, Euler
//! decomposition) is written once against [`Real`] so the same code runs on
//! plain `f64` at data time and on tape variables during training.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Vec3 = [f64; 3];

/// A real scalar that may carry derivative information.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant living in the same context as `self`.
    fn lift(self, v: f64) -> Self;
    fn val(self) -> f64;
    /// Square root with a zero derivative at the origin.
    fn sqrt_r(self) -> Self;
    fn sin_r(self) -> Self;
    fn cos_r(self) -> Self;
    /// `asin` of the argument clamped to [-1, 1].
    fn asin_r(self) -> Self;
    fn atan2_r(self, x: Self) -> Self;
    fn abs_r(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lift(self, v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt_r(self) -> Self {
        self.max(0.0).sqrt()
    }
    #[inline]
    fn sin_r(self) -> Self {
        self.sin()
    }
    #[inline]
    fn cos_r(self) -> Self {
        self.cos()
    }
    #[inline]
    fn asin_r(self) -> Self {
        self.clamp(-1.0, 1.0).asin()
    }
    #[inline]
    fn atan2_r(self, x: Self) -> Self {
        self.atan2(x)
    }
    #[inline]
    fn abs_r(self) -> Self {
        self.abs()
    }
}

#[inline]
pub fn add3<R: Real>(a: [R; 3], b: [R; 3]) -> [R; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3<R: Real>(a: [R; 3], b: [R; 3]) -> [R; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot3<R: Real>(a: [R; 3], b: [R; 3]) -> R {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<R: Real>(a: [R; 3], b: [R; 3]) -> [R; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<R: Real>(a: [R; 3]) -> R {
    dot3(a, a).sqrt_r()
}

#[inline]
pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Rotates a constant vector by a unit quaternion `[w, x, y, z]`.
pub fn quat_rotate<R: Real>(q: [R; 4], v: Vec3) -> [R; 3] {
    let [w, x, y, z] = q;
    // t = 2 (u x v)
    let t = [
        (y * v[2] - z * v[1]) * 2.0,
        (z * v[0] - x * v[2]) * 2.0,
        (x * v[1] - y * v[0]) * 2.0,
    ];
    // v' = v + w t + u x t
    let ut = cross3([x, y, z], t);
    [
        w * t[0] + ut[0] + v[0],
        w * t[1] + ut[1] + v[1],
        w * t[2] + ut[2] + v[2],
    ]
}

pub fn quat_normalize<R: Real>(q: [R; 4]) -> [R; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt_r();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Intrinsic Z-Y-X Euler angles `(z, y, x)` of a unit quaternion, each
/// shifted into `[0, 2π)`.
///
/// Invariant under `q -> -q`. At gimbal lock (|pitch| within 1e-6 of π/2)
/// the x angle is pinned to zero.
pub fn quat_to_euler_zyx<R: Real>(q: [R; 4]) -> [R; 3] {
    let [w, x, y, z] = q;
    let sin_pitch = (w * y - z * x) * 2.0;
    let pitch = sin_pitch.asin_r();
    let (yaw, roll) = if (PI / 2.0 - pitch.val().abs()) < 1e-6 {
        (z.atan2_r(w) * 2.0, w.lift(0.0))
    } else {
        let yaw = ((w * z + x * y) * 2.0).atan2_r(-((y * y + z * z) * 2.0) + 1.0);
        let roll = ((w * x + y * z) * 2.0).atan2_r(-((x * x + y * y) * 2.0) + 1.0);
        (yaw, roll)
    };
    [wrap_positive(yaw), wrap_positive(pitch), wrap_positive(roll)]
}

/// Shifts an angle into `[0, 2π)` by a constant multiple of 2π.
#[inline]
pub fn wrap_positive<R: Real>(a: R) -> R {
    let k = (a.val() / (2.0 * PI)).floor();
    let out = a - k * 2.0 * PI;
    if out.val() >= 2.0 * PI {
        out - 2.0 * PI
    } else {
        out
    }
}

/// Shifts an angle difference into `(-π, π]` by a constant multiple of 2π.
#[inline]
pub fn wrap_signed<R: Real>(a: R) -> R {
    let v = a.val();
    let mut k = ((v + PI) / (2.0 * PI)).floor();
    // (-π, π]: an exact -π maps to π
    if v - k * 2.0 * PI <= -PI {
        k -= 1.0;
    }
    a - k * 2.0 * PI
}

pub fn wrap_signed_f64(a: f64) -> f64 {
    wrap_signed(a)
}

/// Unsigned angle between two vectors, in `[0, π]`.
///
/// Computed as `atan2(|a x b|, a.b)`, which equals the clamped arccos of
/// the normalized dot product but keeps finite derivatives near 0 and π.
pub fn angle_between<R: Real>(a: [R; 3], b: [R; 3]) -> R {
    norm3(cross3(a, b)).atan2_r(dot3(a, b))
}

/// Area of the triangle spanned by three points.
pub fn triangle_area<R: Real>(p: [R; 3], q: [R; 3], r: [R; 3]) -> R {
    norm3(cross3(sub3(q, p), sub3(r, p))) * 0.5
}

//! Quaternion and rigid-pose algebra.
//!
//! Conventions, fixed crate-wide:
//! - Quaternions are Hamilton, scalar-first `(w, x, y, z)`, right-handed.
//! - Rotations act on camera-frame vectors; the camera frame is x right,
//!   y down, z forward (in front of the camera).
//! - `q` and `-q` encode the same rotation. Quaternions are stored as
//!   produced, without sign canonicalization, because the matching losses
//!   are sign-sensitive by construction; rotation equality is always tested
//!   through [`UnitQuaternion::angle_to`], never component-wise.
//!
//! The relative translation between two poses uses an untangled form that is
//! independent of the object coordinate system: image-plane pixel offsets
//! `(vx, vy)` plus a log depth ratio `vz`.

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub fn vec3_add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn vec3_sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn vec3_scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn vec3_dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn vec3_cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn vec3_norm(a: Vec3) -> f64 {
    vec3_dot(a, a).sqrt()
}

/// Quaternion of arbitrary norm, as emitted by an estimator before
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RawQuaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Scale to unit norm, preserving direction.
    pub fn normalized(&self) -> Result<UnitQuaternion> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(Error::ZeroNormQuaternion);
        }
        Ok(UnitQuaternion {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        })
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl From<UnitQuaternion> for RawQuaternion {
    fn from(q: UnitQuaternion) -> Self {
        Self {
            w: q.w,
            x: q.x,
            y: q.y,
            z: q.z,
        }
    }
}

/// Unit-norm rotation quaternion. Construction always normalizes, so the
/// norm stays within 1e-9 of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(try_from = "RawQuaternion")]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<RawQuaternion> for UnitQuaternion {
    type Error = Error;

    fn try_from(q: RawQuaternion) -> Result<Self> {
        q.normalized()
    }
}

impl<'de> Deserialize<'de> for UnitQuaternion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawQuaternion::deserialize(d)?;
        raw.normalized().map_err(serde::de::Error::custom)
    }
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Rotation of `angle_rad` about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let n = vec3_norm(axis);
        if n < 1e-12 {
            return Self::identity();
        }
        let half = angle_rad / 2.0;
        let s = half.sin() / n;
        Self {
            w: half.cos(),
            x: axis[0] * s,
            y: axis[1] * s,
            z: axis[2] * s,
        }
    }

    pub fn from_axis_angle_deg(axis: Vec3, angle_deg: f64) -> Self {
        Self::from_axis_angle(axis, angle_deg.to_radians())
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Inverse rotation; equals the conjugate for unit quaternions.
    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * other`, renormalized: applies `other` first,
    /// then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let (aw, ax, ay, az) = (self.w, self.x, self.y, self.z);
        let (bw, bx, by, bz) = (other.w, other.x, other.y, other.z);
        let raw = RawQuaternion {
            w: aw * bw - ax * bx - ay * by - az * bz,
            x: aw * bx + ax * bw + ay * bz - az * by,
            y: aw * by - ax * bz + ay * bw + az * bx,
            z: aw * bz + ax * by - ay * bx + az * bw,
        };
        // Products of unit quaternions stay within ~1 ulp of unit norm, so
        // this cannot hit the zero-norm branch.
        raw.normalized().expect("unit quaternion product")
    }

    /// Rotate a vector.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // q v q* expanded; t = 2 (im(q) x v)
        let im = [self.x, self.y, self.z];
        let t = vec3_scale(vec3_cross(im, v), 2.0);
        vec3_add(vec3_add(v, vec3_scale(t, self.w)), vec3_cross(im, t))
    }

    /// Rotation-angle distance in degrees: `2 acos(min(1, |<a,b>|))`, in
    /// [0, 180] and invariant under either sign flip.
    ///
    /// Evaluated through the chordal distance (`4 asin(|a -+ b| / 2)`, sign
    /// chosen by the shorter arc), which keeps full precision where acos
    /// loses half its digits: identical inputs measure exactly 0.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let mut d2_minus = 0.0;
        let mut d2_plus = 0.0;
        for (a, b) in self.components().iter().zip(other.components()) {
            d2_minus += (a - b) * (a - b);
            d2_plus += (a + b) * (a + b);
        }
        let half_chord = (0.5 * d2_minus.min(d2_plus).sqrt()).min(1.0);
        (4.0 * half_chord.asin()).to_degrees()
    }

    /// Angle of this rotation in degrees (distance to the identity).
    pub fn rotation_angle_deg(&self) -> f64 {
        self.angle_to(&Self::identity())
    }

    /// Shortest-arc spherical interpolation; `s=0` gives `self`, `s=1` gives
    /// `other` up to sign.
    pub fn slerp(&self, other: &Self, s: f64) -> Self {
        let mut d = self.dot(other);
        let mut b = *other;
        if d < 0.0 {
            b = Self {
                w: -b.w,
                x: -b.x,
                y: -b.y,
                z: -b.z,
            };
            d = -d;
        }
        d = d.min(1.0);
        let theta = d.acos();
        if theta < 1e-9 {
            // Nearly parallel: normalized lerp.
            let raw = RawQuaternion {
                w: self.w + s * (b.w - self.w),
                x: self.x + s * (b.x - self.x),
                y: self.y + s * (b.y - self.y),
                z: self.z + s * (b.z - self.z),
            };
            return raw.normalized().expect("slerp of near-equal rotations");
        }
        let sin_theta = theta.sin();
        let wa = ((1.0 - s) * theta).sin() / sin_theta;
        let wb = (s * theta).sin() / sin_theta;
        let raw = RawQuaternion {
            w: wa * self.w + wb * b.w,
            x: wa * self.x + wb * b.x,
            y: wa * self.y + wb * b.y,
            z: wa * self.z + wb * b.z,
        };
        raw.normalized().expect("slerp blend")
    }
}

/// Object pose in the camera frame: rotation plus translation in meters.
/// Any visible object has translation z > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Pose {
    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn z(&self) -> f64 {
        self.translation[2]
    }

    /// Map an object-frame point into the camera frame.
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        vec3_add(self.rotation.rotate(p), self.translation)
    }

    /// Rotation-angle distance to another pose, degrees.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }
}

/// Rotation taking `src`'s orientation to `tgt`'s: `tgt.rotation` composed
/// with the inverse of `src.rotation`. Applying it on the left of `src`
/// reproduces `tgt`.
pub fn relative_rotation(src: &Pose, tgt: &Pose) -> UnitQuaternion {
    tgt.rotation.compose(&src.rotation.conjugate())
}

/// Relative translation in untangled form: image-plane pixel offsets plus a
/// log depth ratio, independent of the object coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UntangledDelta {
    /// Horizontal image-plane offset, pixels.
    pub vx: f64,
    /// Vertical image-plane offset, pixels.
    pub vy: f64,
    /// Log depth ratio ln(src_z / tgt_z), dimensionless.
    pub vz: f64,
}

impl UntangledDelta {
    pub fn new(vx: f64, vy: f64, vz: f64) -> Self {
        Self { vx, vy, vz }
    }

    pub fn components(&self) -> Vec3 {
        [self.vx, self.vy, self.vz]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            vx: self.vx * s,
            vy: self.vy * s,
            vz: self.vz * s,
        }
    }
}

/// Untangled translation difference from `src` to `tgt`:
/// `vx = fx (tx/tz - sx/sz)`, `vy = fy (ty/tz - sy/sz)`, `vz = ln(sz/tz)`.
pub fn untangle(src: &Pose, tgt: &Pose, cam: &CameraIntrinsics) -> Result<UntangledDelta> {
    let [sx, sy, sz] = src.translation;
    let [tx, ty, tz] = tgt.translation;
    if sz <= 0.0 {
        return Err(Error::NonPositiveDepth(sz));
    }
    if tz <= 0.0 {
        return Err(Error::NonPositiveDepth(tz));
    }
    Ok(UntangledDelta {
        vx: cam.fx * (tx / tz - sx / sz),
        vy: cam.fy * (ty / tz - sy / sz),
        vz: (sz / tz).ln(),
    })
}

/// Apply a relative pose to `src`: the exact inverse of [`untangle`] on the
/// translation part, with `delta_rot` composed on the left of the rotation.
pub fn entangle(
    src: &Pose,
    delta_rot: &UnitQuaternion,
    delta_t: &UntangledDelta,
    cam: &CameraIntrinsics,
) -> Result<Pose> {
    let [sx, sy, sz] = src.translation;
    if sz <= 0.0 {
        return Err(Error::NonPositiveDepth(sz));
    }
    let tz = sz * (-delta_t.vz).exp();
    let tx = tz * (sx / sz + delta_t.vx / cam.fx);
    let ty = tz * (sy / sz + delta_t.vy / cam.fy);
    Ok(Pose {
        rotation: delta_rot.compose(&src.rotation),
        translation: [tx, ty, tz],
    })
}

/// Per-component mean and standard deviation over the 7 relative-pose
/// parameters (quaternion w,x,y,z then untangled vx,vy,vz), used to map the
/// parameters to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: [f64; 7],
    pub std: [f64; 7],
}

impl StandardizationStats {
    /// Identity mapping (zero mean, unit std).
    pub fn identity() -> Self {
        Self {
            mean: [0.0; 7],
            std: [1.0; 7],
        }
    }

    /// Population moments of a sample pool. Fails on an empty pool or a
    /// degenerate component with zero spread.
    pub fn from_samples(samples: &[[f64; 7]]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("standardization sample pool"));
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; 7];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; 7];
        for s in samples {
            for i in 0..7 {
                let d = s[i] - mean[i];
                var[i] += d * d;
            }
        }
        let mut std = [0.0; 7];
        for i in 0..7 {
            std[i] = (var[i] / n).sqrt();
            if std[i] <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "standardization component {i} has zero variance"
                )));
            }
        }
        Ok(Self { mean, std })
    }

    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig(
                "standardization std components must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// `(raw - mean) / std`, component-wise.
    pub fn standardize(&self, raw: [f64; 7]) -> [f64; 7] {
        let mut out = [0.0; 7];
        for i in 0..7 {
            out[i] = (raw[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    /// Exact inverse of [`Self::standardize`].
    pub fn destandardize(&self, standardized: [f64; 7]) -> [f64; 7] {
        let mut out = [0.0; 7];
        for i in 0..7 {
            out[i] = standardized[i] * self.std[i] + self.mean[i];
        }
        out
    }
}

//! Rigid poses, quaternion SLERP and exposure pose sampling.

use std::ops::Mul;

use crate::error::{Error, Result};

/// Below this angle between the inputs, SLERP falls back to normalized lerp.
const SLERP_LINEAR_ANGLE: f64 = 1e-6;

/// Quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (angle / 2.0).sin_cos();
        Quat::new(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Quat {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    fn scale(&self, k: f64) -> Quat {
        Quat::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    fn plus(&self, o: &Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }

    /// Rotation angle between two unit quaternions, insensitive to sign.
    pub fn angle_to(&self, o: &Quat) -> f64 {
        // atan2 of |a - b| and |a + b| stays accurate for tiny angles
        let (a, b) = if self.dot(o) < 0.0 { (*self, o.scale(-1.0)) } else { (*self, *o) };
        let d = a.plus(&b.scale(-1.0)).norm();
        let s = a.plus(&b).norm();
        4.0 * d.atan2(s)
    }

    /// Rotate a vector by this unit quaternion.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let p = Quat::new(0.0, v[0], v[1], v[2]);
        let r = *self * p * self.conjugate();
        [r.x, r.y, r.z]
    }
}

impl Mul for Quat {
    type Output = Quat;

    fn mul(self, b: Quat) -> Quat {
        let a = self;
        Quat::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// Constant angular velocity interpolation along the shorter arc.
pub fn slerp(q0: Quat, q1: Quat, s: f64) -> Result<Quat> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::arg(format!("slerp parameter {s} outside [0, 1]")));
    }
    let mut q1 = q1;
    let mut d = q0.dot(&q1);
    if d < 0.0 {
        q1 = q1.scale(-1.0);
        d = -d;
    }
    let d = d.min(1.0);
    let half_angle = d.acos();
    let out = if 2.0 * half_angle < SLERP_LINEAR_ANGLE {
        q0.scale(1.0 - s).plus(&q1.scale(s))
    } else {
        let sin = half_angle.sin();
        let a = ((1.0 - s) * half_angle).sin() / sin;
        let b = (s * half_angle).sin() / sin;
        q0.scale(a).plus(&q1.scale(b))
    };
    Ok(out.normalized())
}

/// Camera pose at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    /// Microseconds.
    pub t: u64,
    /// Meters, world frame.
    pub translation: [f64; 3],
    pub rotation: Quat,
}

impl Pose {
    pub fn new(t: u64, translation: [f64; 3], rotation: Quat) -> Result<Self> {
        if (rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!(
                "pose at {t} us: rotation norm {} is not 1",
                rotation.norm()
            )));
        }
        Ok(Pose {
            t,
            translation,
            rotation,
        })
    }
}

/// Time-sorted pose samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseTrack {
    poses: Vec<Pose>,
}

impl PoseTrack {
    pub fn new(poses: Vec<Pose>) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::arg(format!(
                "a pose track needs at least 2 poses, got {}",
                poses.len()
            )));
        }
        if let Some(i) = poses.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::arg(format!(
                "pose timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(PoseTrack { poses })
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn span(&self) -> (u64, u64) {
        (self.poses[0].t, self.poses[self.poses.len() - 1].t)
    }

    /// Pose at fractional time `t` (microseconds).
    pub fn interpolate_at(&self, t: f64) -> Result<([f64; 3], Quat)> {
        let (start, end) = self.span();
        if !(t >= start as f64 && t <= end as f64) {
            return Err(Error::OutOfRange {
                t: t.max(0.0).round() as u64,
                start,
                end,
            });
        }
        let i = self.poses.partition_point(|p| (p.t as f64) <= t);
        if i > 0 && self.poses[i - 1].t as f64 == t {
            let p = &self.poses[i - 1];
            return Ok((p.translation, p.rotation));
        }
        let (a, b) = (&self.poses[i - 1], &self.poses[i]);
        let s = (t - a.t as f64) / (b.t - a.t) as f64;
        let mut tr = [0.0; 3];
        for k in 0..3 {
            tr[k] = a.translation[k] + s * (b.translation[k] - a.translation[k]);
        }
        Ok((tr, slerp(a.rotation, b.rotation, s)?))
    }

    /// Pose at integer time `t`; exact at sample timestamps.
    pub fn interpolate_pose(&self, t: u64) -> Result<Pose> {
        let (translation, rotation) = self.interpolate_at(t as f64)?;
        Ok(Pose {
            t,
            translation,
            rotation,
        })
    }

    /// `m` poses evenly spaced over the closed exposure interval, endpoints
    /// included. Timestamps are rounded to the microsecond; interpolation
    /// uses the exact fractional time.
    pub fn sample_exposure_poses(&self, t_mid: u64, tau: u64, m: usize) -> Result<Vec<Pose>> {
        if m < 2 {
            return Err(Error::arg(format!("need at least 2 exposure poses, got {m}")));
        }
        let start = t_mid as f64 - tau as f64 / 2.0;
        let step = tau as f64 / (m - 1) as f64;
        (0..m)
            .map(|k| {
                let t = if 2 * k + 1 == m {
                    t_mid as f64
                } else {
                    start + k as f64 * step
                };
                let (translation, rotation) = self.interpolate_at(t).map_err(|e| match e {
                    Error::OutOfRange { start, end, .. } => Error::arg(format!(
                        "exposure [{}, {}] us leaves the pose track span [{start}, {end}] us",
                        t_mid as f64 - tau as f64 / 2.0,
                        t_mid as f64 + tau as f64 / 2.0
                    )),
                    other => other,
                })?;
                Ok(Pose {
                    t: t.round() as u64,
                    translation,
                    rotation,
                })
            })
            .collect()
    }
}

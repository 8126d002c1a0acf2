//! Pose CSV: `t_us,tx,ty,tz,qw,qx,qy,qz`, one row per pose.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Pose, PoseTrack, Quat};

pub const POSES_CSV_HEADER: &str = "t_us,tx,ty,tz,qw,qx,qy,qz";

/// Rows whose quaternion norm is further than this from 1 are reported.
pub const QUAT_NORM_WARN: f64 = 1e-3;

pub fn read_poses(path: &Path) -> Result<PoseTrack> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(path, &text)
}

pub fn parse_poses(path: &Path, text: &str) -> Result<PoseTrack> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == POSES_CSV_HEADER => {}
        Some((_, h)) => {
            return Err(Error::format(
                path,
                format!("line 1: expected header {POSES_CSV_HEADER:?}, found {:?}", h.trim()),
            ))
        }
        None => return Err(Error::format(path, "empty pose file")),
    }
    let mut poses: Vec<Pose> = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::format(
                path,
                format!("row {row}: expected 8 fields, found {}", fields.len()),
            ));
        }
        let t: u64 = fields[0]
            .parse()
            .map_err(|_| Error::format(path, format!("row {row}: bad timestamp {:?}", fields[0])))?;
        let mut v = [0.0f64; 7];
        for (k, f) in fields[1..].iter().enumerate() {
            v[k] = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::format(path, format!("row {row}: bad number {f:?}")))?;
        }
        if let Some(prev) = poses.last() {
            if t <= prev.t {
                return Err(Error::format(
                    path,
                    format!("row {row}: timestamp {t} not after previous {}", prev.t),
                ));
            }
        }
        let q = Quat::new(v[3], v[4], v[5], v[6]);
        let n = q.norm();
        if n == 0.0 {
            return Err(Error::format(path, format!("row {row}: zero quaternion")));
        }
        if (n - 1.0).abs() > QUAT_NORM_WARN {
            log::warn!("{}: row {row}: quaternion norm {n:.6} normalized", path.display());
        }
        // already-unit rows are kept bit-exact
        let q = if (n - 1.0).abs() > 1e-12 { q.normalized() } else { q };
        poses.push(
            Pose::new(t, [v[0], v[1], v[2]], q)
                .map_err(|e| Error::format(path, format!("row {row}: {e}")))?,
        );
    }
    PoseTrack::new(poses).map_err(|e| Error::format(path, e.to_string()))
}

/// Shortest round-trip formatting, so reading back gives the same values.
pub fn format_poses(track: &PoseTrack) -> String {
    let mut out = String::from(POSES_CSV_HEADER);
    out.push('\n');
    for p in track.poses() {
        let [tx, ty, tz] = p.translation;
        let q = p.rotation;
        let _ = writeln!(out, "{},{tx:?},{ty:?},{tz:?},{:?},{:?},{:?},{:?}", p.t, q.w, q.x, q.y, q.z);
    }
    out
}

pub fn write_poses(path: &Path, track: &PoseTrack) -> Result<()> {
    fs::write(path, format_poses(track)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_make_a_track() {
        let text = "t_us,tx,ty,tz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n10000,0.1,0,0,1,0,0,0\n";
        let tr = parse_poses(Path::new("p.csv"), text).unwrap();
        assert_eq!(tr.poses().len(), 2);
        assert_eq!(tr.poses()[1].translation, [0.1, 0.0, 0.0]);
    }

    #[test]
    fn slightly_off_norm_is_normalized() {
        let text = "t_us,tx,ty,tz,qw,qx,qy,qz\n0,0,0,0,0.999,0,0,0\n5,0,0,0,1,0,0,0\n";
        let tr = parse_poses(Path::new("p.csv"), text).unwrap();
        assert!((tr.poses()[0].rotation.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_timestamp_names_row() {
        let text = "t_us,tx,ty,tz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n7,0,0,0,1,0,0,0\n7,0,0,0,1,0,0,0\n";
        let msg = parse_poses(Path::new("p.csv"), text).unwrap_err().to_string();
        assert!(msg.contains("row 4"), "{msg}");
    }

    #[test]
    fn round_trip_is_exact() {
        let q = Quat::from_axis_angle([0.3, -0.5, 0.8], 1.234_567);
        let poses = vec![
            Pose::new(0, [0.1, -2.5e-7, 3.0], Quat::IDENTITY).unwrap(),
            Pose::new(10_000, [1.0 / 3.0, 0.0, -7.25], q).unwrap(),
        ];
        let tr = PoseTrack::new(poses).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("poses.csv");
        write_poses(&p, &tr).unwrap();
        assert_eq!(read_poses(&p).unwrap(), tr);
    }
}

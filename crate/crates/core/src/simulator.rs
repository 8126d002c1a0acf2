//! Event generation from dense frame sequences and blur synthesis by
//! exposure averaging.
//!
//! Between consecutive frames each pixel's log intensity is interpolated
//! linearly in time. A pixel keeps a reference level, starting at its log
//! intensity in the first frame; every time the interpolated signal moves a
//! full threshold away from the reference an event fires at the
//! interpolated crossing time and the reference steps by that threshold.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataio::{self, DatasetManifest, ReadOptions, ViewEntry};
use crate::error::{Error, Result};
use crate::events::{ColorMode, Event, EventStream, ThresholdConfig};
use crate::geometry::{Pose, PoseTrack};
use crate::image::{luma_bt601, mosaic, Domain, GammaCurve, ImageBuffer};
use crate::integrator::Exposure;

/// Log-domain slack when testing whether a crossing level was reached.
const CROSSING_TOL: f64 = 1e-9;

pub const DEFAULT_LOG_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: u64,
    /// Linear domain.
    pub image: ImageBuffer,
    pub pose: Option<Pose>,
}

impl Frame {
    pub fn new(t: u64, image: ImageBuffer) -> Self {
        Frame { t, image, pose: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::arg(format!("need at least 2 frames, got {}", frames.len())));
        }
        let first = &frames[0].image;
        for (i, f) in frames.iter().enumerate() {
            if f.image.domain() != Domain::Linear {
                return Err(Error::arg(format!("frame {i} is not in the linear domain")));
            }
            if !f.image.same_shape(first) {
                return Err(Error::arg(format!(
                    "frame {i} is {}x{}x{}, frame 0 is {}x{}x{}",
                    f.image.width(),
                    f.image.height(),
                    f.image.channels(),
                    first.width(),
                    first.height(),
                    first.channels()
                )));
            }
            if i > 0 && f.t <= frames[i - 1].t {
                return Err(Error::arg(format!(
                    "frame {i} timestamp {} us is not after {} us",
                    f.t,
                    frames[i - 1].t
                )));
            }
        }
        if first.width() > u16::MAX as usize || first.height() > u16::MAX as usize {
            return Err(Error::arg("frame size exceeds the event coordinate range"));
        }
        Ok(FrameSequence { frames })
    }

    /// Load numbered images (`.png` or `.pfm`, sorted by file name) from
    /// `dir`. Timestamps come from `timestamps.txt` (one microsecond value
    /// per line) when present, otherwise from `fps`. A `poses.csv` in the
    /// directory is interpolated onto the frame times.
    pub fn load_dir(dir: &Path, fps: f64, opts: ReadOptions) -> Result<Self> {
        let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in listing {
            let p = entry.map_err(|e| Error::io(dir, e))?.path();
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if matches!(ext.as_deref(), Some("png") | Some("pfm")) {
                paths.push(p);
            }
        }
        paths.sort();
        if paths.len() < 2 {
            return Err(Error::Dataset(format!(
                "{}: need at least 2 frame images, found {}",
                dir.display(),
                paths.len()
            )));
        }
        let ts_path = dir.join("timestamps.txt");
        let times: Vec<u64> = if ts_path.is_file() {
            let text = fs::read_to_string(&ts_path).map_err(|e| Error::io(&ts_path, e))?;
            let ts = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    l.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::format(&ts_path, format!("line {}: bad timestamp {:?}", i + 1, l.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            if ts.len() != paths.len() {
                return Err(Error::format(
                    &ts_path,
                    format!("{} timestamps for {} frames", ts.len(), paths.len()),
                ));
            }
            ts
        } else {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Error::arg(format!("fps must be > 0, got {fps}")));
            }
            (0..paths.len()).map(|k| (k as f64 * 1e6 / fps).round() as u64).collect()
        };
        let pose_path = dir.join("poses.csv");
        let track = if pose_path.is_file() {
            Some(dataio::read_poses(&pose_path)?)
        } else {
            None
        };
        let frames = paths
            .iter()
            .zip(&times)
            .map(|(p, &t)| {
                let pose = match &track {
                    Some(tr) => Some(tr.interpolate_pose(t).map_err(|e| Error::Dataset(format!("{}: {e}", p.display())))?),
                    None => None,
                };
                Ok(Frame {
                    t,
                    image: dataio::read_image_linear(p, opts)?,
                    pose,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FrameSequence::new(frames).map_err(|e| Error::Dataset(format!("{}: {e}", dir.display())))
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].image.width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].image.height()
    }

    /// `[first, last + last spacing)`: each frame stands for the interval up
    /// to the next one.
    pub fn extent(&self) -> (u64, u64) {
        let n = self.frames.len();
        let last = self.frames[n - 1].t;
        (self.frames[0].t, last + (last - self.frames[n - 2].t))
    }

    pub fn pose_track(&self) -> Option<PoseTrack> {
        let poses: Option<Vec<Pose>> = self.frames.iter().map(|f| f.pose).collect();
        poses.and_then(|p| PoseTrack::new(p).ok())
    }

    /// Frame whose timestamp is closest to `t` (earlier one on ties).
    pub fn nearest(&self, t: u64) -> &Frame {
        let i = self.frames.partition_point(|f| f.t <= t);
        if i == 0 {
            return &self.frames[0];
        }
        if i == self.frames.len() {
            return &self.frames[i - 1];
        }
        let (a, b) = (&self.frames[i - 1], &self.frames[i]);
        if t - a.t <= b.t - t {
            a
        } else {
            b
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulatorConfig {
    pub thresholds: ThresholdConfig,
    /// Minimum gap between emitted events at one pixel, microseconds.
    pub refractory_us: u64,
    /// Intensities are clamped to at least this before taking logs.
    pub log_floor: f64,
    pub color: ColorMode,
}

impl SimulatorConfig {
    pub fn new(thresholds: ThresholdConfig, color: ColorMode) -> Self {
        SimulatorConfig {
            thresholds,
            refractory_us: 0,
            log_floor: DEFAULT_LOG_FLOOR,
            color,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_floor > 0.0 && self.log_floor <= 0.1) {
            return Err(Error::arg(format!("log floor must be in (0, 0.1], got {}", self.log_floor)));
        }
        Ok(())
    }
}

/// The single-channel signal the sensor thresholds: luma for monochrome
/// events, the pixel's own Bayer channel otherwise. 1-channel frames are
/// used as they are.
fn sensed_plane(img: &ImageBuffer, color: ColorMode) -> Result<ImageBuffer> {
    if img.channels() == 1 {
        return Ok(img.clone());
    }
    match color {
        ColorMode::Mono => luma_bt601(img),
        ColorMode::Bayer(p) => mosaic(img, p),
    }
}

/// Events for one pixel given its log level at each frame time.
fn pixel_events(logs: &[f64], times: &[u64], x: u16, y: u16, cfg: &SimulatorConfig, out: &mut Vec<Event>) {
    let thr = &cfg.thresholds;
    let l0 = logs[0];
    let (mut pos, mut neg) = (0i64, 0i64);
    let mut last_emit: Option<u64> = None;
    let mut emit = |t: u64, p: i8, out: &mut Vec<Event>| {
        if last_emit.is_some_and(|lt| t - lt < cfg.refractory_us) {
            return;
        }
        last_emit = Some(t);
        out.push(Event::new(t, x, y, p));
    };
    for k in 0..logs.len() - 1 {
        let (la, lb) = (logs[k], logs[k + 1]);
        if la == lb {
            continue;
        }
        let (ta, dt) = (times[k] as f64, (times[k + 1] - times[k]) as f64);
        let when = |level: f64| -> u64 {
            let s = ((level - la) / (lb - la)).clamp(0.0, 1.0);
            (ta + s * dt).round() as u64
        };
        if lb > la {
            loop {
                let level = l0 + thr.log_change(pos + 1, neg);
                if level > lb + CROSSING_TOL {
                    break;
                }
                pos += 1;
                emit(when(level), 1, out);
            }
        } else {
            loop {
                let level = l0 + thr.log_change(pos, neg + 1);
                if level < lb - CROSSING_TOL {
                    break;
                }
                neg += 1;
                emit(when(level), -1, out);
            }
        }
    }
}

pub fn events_from_frames(seq: &FrameSequence, cfg: &SimulatorConfig) -> Result<EventStream> {
    cfg.validate()?;
    let planes = seq
        .frames
        .iter()
        .map(|f| sensed_plane(&f.image, cfg.color))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<u64> = seq.frames.iter().map(|f| f.t).collect();
    let (w, h) = (seq.width(), seq.height());
    let floor = cfg.log_floor;
    let per_pixel: Vec<Vec<Event>> = (0..w * h)
        .into_par_iter()
        .map(|pix| {
            let logs: Vec<f64> = planes.iter().map(|p| p.data()[pix].max(floor).ln()).collect();
            let mut out = Vec::new();
            pixel_events(&logs, &times, (pix % w) as u16, (pix / w) as u16, cfg, &mut out);
            out
        })
        .collect();
    EventStream::build(per_pixel.into_iter().flatten().collect(), w as u16, h as u16)
}

/// Pixel-wise mean, summed in the given order.
pub fn mean_images(images: &[&ImageBuffer]) -> Result<ImageBuffer> {
    let first = images.first().ok_or_else(|| Error::arg("mean of zero images"))?;
    let mut acc = vec![0.0; first.data().len()];
    for img in images {
        if !img.same_shape(first) {
            return Err(Error::arg("mean of images with different shapes"));
        }
        for (a, v) in acc.iter_mut().zip(img.data()) {
            *a += v;
        }
    }
    let n = images.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    ImageBuffer::new(first.width(), first.height(), first.channels(), first.domain(), acc)
}

/// Mean of the frames with `t_mid - tau/2 <= t < t_mid + tau/2`.
pub fn synthesize_blur(seq: &FrameSequence, t_mid: u64, tau: u64) -> Result<ImageBuffer> {
    let exp = Exposure::new(t_mid, tau)?;
    let (first, end) = seq.extent();
    if exp.start() < first as f64 || exp.end() > end as f64 {
        return Err(Error::arg(format!(
            "exposure [{}, {}) us is not covered by the sequence [{first}, {end}) us",
            exp.start(),
            exp.end()
        )));
    }
    let inside: Vec<&ImageBuffer> = seq
        .frames
        .iter()
        .filter(|f| (f.t as f64) >= exp.start() && (f.t as f64) < exp.end())
        .map(|f| &f.image)
        .collect();
    if inside.is_empty() {
        return Err(Error::arg(format!("no frame falls inside the exposure around {t_mid} us")));
    }
    mean_images(&inside)
}

/// Mid-exposure times of the views `render_dataset` produces.
pub fn view_times(seq: &FrameSequence, tau: u64, period: u64) -> Result<Vec<u64>> {
    if tau == 0 || period == 0 {
        return Err(Error::arg("exposure and period must be > 0"));
    }
    let (first, end) = seq.extent();
    if end - first < tau {
        return Err(Error::arg(format!(
            "sequence spans {} us, shorter than one {tau} us exposure",
            end - first
        )));
    }
    let n = (end - first - tau) / period + 1;
    Ok((0..n).map(|k| first + tau.div_ceil(2) + k * period).collect())
}

/// Write a simulated dataset into `out_dir`: `events.evt1`, 16-bit gamma
/// PNG blurry and mid-exposure sharp frames, `poses.csv` when every frame
/// has a pose, and `manifest.json`. Bayer datasets store mosaics.
pub fn render_dataset(
    seq: &FrameSequence,
    tau: u64,
    period: u64,
    cfg: &SimulatorConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let times = view_times(seq, tau, period)?;
    let events = events_from_frames(seq, cfg)?;
    let gamma = GammaCurve::default();
    for sub in ["blur", "sharp"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    dataio::write_events(&out_dir.join("events.evt1"), &events)?;
    let stored = |img: &ImageBuffer| -> Result<ImageBuffer> {
        match cfg.color {
            ColorMode::Bayer(p) if img.channels() == 3 => mosaic(img, p),
            _ => Ok(img.clone()),
        }
    };
    let mut views = Vec::with_capacity(times.len());
    for (k, &t_mid) in times.iter().enumerate() {
        let blur = stored(&synthesize_blur(seq, t_mid, tau)?)?;
        let sharp = stored(&seq.nearest(t_mid).image)?;
        let (b, s) = (format!("blur/{k:04}.png"), format!("sharp/{k:04}.png"));
        dataio::write_image(&out_dir.join(&b), &blur, gamma, 16)?;
        dataio::write_image(&out_dir.join(&s), &sharp, gamma, 16)?;
        views.push(ViewEntry::new(t_mid, b, Some(s)));
    }
    let thr = cfg.thresholds;
    let mut m = DatasetManifest::new(tau, thr.theta_pos, "events.evt1", views);
    if thr.theta_pos != thr.theta_neg {
        m.theta = None;
        m.theta_pos = Some(thr.theta_pos);
        m.theta_neg = Some(thr.theta_neg);
    }
    m.color = cfg.color;
    m.gamma = gamma;
    let (first, end) = seq.extent();
    m.event_span_us = Some([first, end]);
    m.width = Some(seq.width() as u16);
    m.height = Some(seq.height() as u16);
    if let Some(track) = seq.pose_track() {
        dataio::write_poses(&out_dir.join("poses.csv"), &track)?;
        m.poses = Some("poses.csv".into());
    }
    dataio::write_manifest(&out_dir.join("manifest.json"), &m)?;
    m.base_dir = out_dir.to_path_buf();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, 1, Domain::Linear, |x, y, _| f(x, y)).unwrap()
    }

    fn cfg(theta: f64) -> SimulatorConfig {
        SimulatorConfig::new(ThresholdConfig::symmetric(theta).unwrap(), ColorMode::Mono)
    }

    fn seq_from(values: &[f64], dt: u64) -> FrameSequence {
        FrameSequence::new(
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| Frame::new(k as u64 * dt, gray(1, 1, |_, _| v)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_sequence_is_silent() {
        let s = seq_from(&[0.3; 5], 1000);
        assert!(events_from_frames(&s, &cfg(0.2)).unwrap().is_empty());
        let b = synthesize_blur(&s, 2000, 4000).unwrap();
        assert_eq!(b.data(), &[0.3]);
    }

    #[test]
    fn ramp_of_two_thresholds() {
        let theta: f64 = 0.2;
        let s = seq_from(&[0.5, 0.5 * (2.0 * theta).exp()], 1000);
        let ev = events_from_frames(&s, &cfg(theta)).unwrap();
        let got: Vec<(u64, i8)> = ev.events().iter().map(|e| (e.t, e.p)).collect();
        assert_eq!(got, vec![(500, 1), (1000, 1)]);
    }

    #[test]
    fn falling_steps_and_refractory() {
        let s = seq_from(&[1.0, (-0.65f64).exp()], 1000);
        let ev = events_from_frames(&s, &cfg(0.2)).unwrap();
        let got: Vec<(u64, i8)> = ev.events().iter().map(|e| (e.t, e.p)).collect();
        assert_eq!(got, vec![(308, -1), (615, -1), (923, -1)]);
        let mut c = cfg(0.2);
        c.refractory_us = 400;
        let ev = events_from_frames(&s, &c).unwrap();
        let got: Vec<u64> = ev.events().iter().map(|e| e.t).collect();
        // the middle event is dropped but the reference still moves
        assert_eq!(got, vec![308, 923]);
    }

    #[test]
    fn bad_sequences_rejected() {
        assert!(FrameSequence::new(vec![Frame::new(0, gray(2, 2, |_, _| 0.1))]).is_err());
        let frames = vec![Frame::new(0, gray(2, 2, |_, _| 0.1)), Frame::new(5, gray(3, 2, |_, _| 0.1))];
        assert!(FrameSequence::new(frames).is_err());
        let frames = vec![Frame::new(5, gray(2, 2, |_, _| 0.1)), Frame::new(5, gray(2, 2, |_, _| 0.1))];
        assert!(FrameSequence::new(frames).is_err());
    }

    fn random_smooth(rng: &mut impl Rng, w: usize, h: usize, n: usize, dt: u64) -> FrameSequence {
        let (a, b, c, ph): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
        let frames = (0..n)
            .map(|k| {
                let s = k as f64 / n as f64;
                Frame::new(
                    k as u64 * dt,
                    gray(w, h, |x, y| {
                        0.45 + 0.3 * (6.0 * a * s + 0.3 * x as f64 * b + 0.2 * y as f64 + ph * 6.0).sin()
                            + 0.15 * (9.0 * c * s - 0.17 * y as f64 * a).cos()
                    }),
                )
            })
            .collect();
        FrameSequence::new(frames).unwrap()
    }

    /// Brute force: sample the interpolated log signal `sub` times per frame
    /// interval and fire whenever it has moved a threshold past the
    /// reference; an event is stamped with the first sample that sees it.
    fn oversampled_events(logs: &[f64], times: &[u64], theta: f64, sub: usize) -> Vec<(f64, i8)> {
        let mut out = Vec::new();
        let mut r = logs[0];
        for k in 0..logs.len() - 1 {
            for j in 1..=sub {
                let s = j as f64 / sub as f64;
                let l = logs[k] + s * (logs[k + 1] - logs[k]);
                let t = times[k] as f64 + s * (times[k + 1] - times[k]) as f64;
                while l - r >= theta - 1e-9 {
                    r += theta;
                    out.push((t, 1));
                }
                while r - l >= theta - 1e-9 {
                    r -= theta;
                    out.push((t, -1));
                }
            }
        }
        out
    }

    #[test]
    fn matches_oversampled_counter() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let theta = 0.15;
        let seq = random_smooth(&mut rng, 8, 6, 30, 1000);
        let ev = events_from_frames(&seq, &cfg(theta)).unwrap();
        let times: Vec<u64> = seq.frames().iter().map(|f| f.t).collect();
        let step = 1000.0 / 100.0;
        let mut total = 0;
        for y in 0..6 {
            for x in 0..8 {
                let logs: Vec<f64> = seq.frames().iter().map(|f| f.image.get(x, y, 0).max(1e-3).ln()).collect();
                let want = oversampled_events(&logs, &times, theta, 100);
                let got = ev.pixel_events(x, y).unwrap();
                assert_eq!(got.len(), want.len(), "pixel ({x}, {y})");
                for (g, (t, p)) in got.iter().zip(&want) {
                    assert_eq!(g.p, *p);
                    assert!((g.t as f64 - t).abs() <= step + 0.5, "{} vs {t}", g.t);
                }
                total += got.len();
            }
        }
        assert!(total > 100, "{total}");
    }

    #[test]
    fn scale_invariant_counts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let seq = random_smooth(&mut rng, 6, 5, 20, 1000);
        let base = events_from_frames(&seq, &cfg(0.2)).unwrap();
        for k in [0.5, 2.0] {
            let scaled = FrameSequence::new(
                seq.frames()
                    .iter()
                    .map(|f| Frame::new(f.t, f.image.scaled(k)))
                    .collect(),
            )
            .unwrap();
            let mut c = cfg(0.2);
            c.log_floor = DEFAULT_LOG_FLOOR * k;
            let ev = events_from_frames(&scaled, &c).unwrap();
            assert_eq!(ev.len(), base.len());
        }
    }

    #[test]
    fn replay_tracks_frames_within_threshold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let theta = 0.2;
        let seq = random_smooth(&mut rng, 5, 4, 25, 1000);
        let ev = events_from_frames(&seq, &cfg(theta)).unwrap();
        let thr = ThresholdConfig::symmetric(theta).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                let l0 = seq.frames()[0].image.get(x, y, 0).ln();
                let px = ev.pixel_events(x, y).unwrap();
                for f in seq.frames() {
                    let upto: Vec<Event> = px.iter().copied().filter(|e| e.t <= f.t).collect();
                    let (p, n) = crate::events::count_polarities(&upto);
                    let replay = l0 + thr.log_change(p, n);
                    assert!((replay - f.image.get(x, y, 0).ln()).abs() < theta + 1e-9);
                }
            }
        }
    }

    #[test]
    fn blur_mean_and_window() {
        let s = seq_from(&[0.2, 0.8, 0.1, 0.9], 1000);
        // [1000, 3000) holds frames at 1000 and 2000
        assert!((synthesize_blur(&s, 2000, 2000).unwrap().data()[0] - 0.45).abs() < 1e-15);
        let s = seq_from(&[0.2, 0.8], 1000);
        assert_eq!(synthesize_blur(&s, 1000, 2000).unwrap().data(), &[0.5]);
        assert!(synthesize_blur(&s, 1500, 2000).is_err());
    }

    #[test]
    fn forty_frame_blur_matches_summation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let seq = random_smooth(&mut rng, 7, 5, 60, 1000);
        let blur = synthesize_blur(&seq, 30_000, 40_000).unwrap();
        for y in 0..5 {
            for x in 0..7 {
                // reverse-order pairwise summation as an independent check
                let mut vals: Vec<f64> = (10..50).rev().map(|k| seq.frames()[k].image.get(x, y, 0)).collect();
                while vals.len() > 1 {
                    vals = vals.chunks(2).map(|c| c.iter().sum()).collect();
                }
                assert!((blur.get(x, y, 0) - vals[0] / 40.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn mean_is_order_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let seq = random_smooth(&mut rng, 9, 7, 40, 1000);
        let mut imgs: Vec<&ImageBuffer> = seq.frames().iter().map(|f| &f.image).collect();
        let a = mean_images(&imgs).unwrap();
        imgs.shuffle(&mut rng);
        let b = mean_images(&imgs).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn view_count_for_one_second() {
        let frames = (0..1000).map(|k| Frame::new(k * 1000, gray(1, 1, |_, _| 0.5))).collect();
        let seq = FrameSequence::new(frames).unwrap();
        let ts = view_times(&seq, 40_000, 40_000).unwrap();
        assert_eq!(ts.len(), 25);
        assert_eq!((ts[0], ts[24]), (20_000, 980_000));
    }

    #[test]
    fn rendered_dataset_loads_and_round_trips() {
        let frames = (0..120)
            .map(|k| {
                Frame::new(
                    k * 1000,
                    ImageBuffer::from_fn(12, 8, 3, Domain::Linear, |x, y, c| {
                        0.3 + 0.2 * ((x as f64 - 0.05 * k as f64) * 0.7 + y as f64 * 0.3 + c as f64).sin()
                    })
                    .unwrap(),
                )
            })
            .collect();
        let seq = FrameSequence::new(frames).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for color in [ColorMode::Mono, ColorMode::Bayer(crate::events::BayerPattern::Rggb)] {
            let out = dir.path().join(color.to_string().replace(':', "_"));
            let mut c = cfg(0.2);
            c.color = color;
            let m = render_dataset(&seq, 40_000, 40_000, &c, &out).unwrap();
            assert_eq!(m.views.len(), 3);
            let text = fs::read_to_string(out.join("manifest.json")).unwrap();
            assert_eq!(dataio::read_manifest(&out.join("manifest.json")).unwrap().to_json(), text);
            let ds = crate::dataset::Dataset::load(&out.join("manifest.json")).unwrap();
            let channels = if color == ColorMode::Mono { 3 } else { 1 };
            assert_eq!(ds.views[0].blur.channels(), channels);
            assert!(ds.views.iter().all(|v| v.sharp.is_some()));
            assert!(!ds.events.is_empty());
        }
    }
}

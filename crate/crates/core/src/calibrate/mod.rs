//! Contrast-threshold and response-curve calibration.
//!
//! Deblurring a single view reproduces its blurry input for every threshold,
//! so one exposure carries no information about the threshold. What does is
//! consistency across views: the latent of view `i`, carried forward by the
//! events between the two mid-exposure times, should match the latent of
//! view `i + 1`. The loss below measures that mismatch in log intensity,
//! which makes it independent of the overall exposure level.

pub mod response;
pub mod search;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::events::{window, ColorMode, ThresholdConfig};
use crate::image::{luma_bt601, ImageBuffer};
use crate::integrator::{edi_deblur, warp_intensity};
use crate::simulator::DEFAULT_LOG_FLOOR;

pub use response::{FitOptions, ResponseCurve, ResponseFit, ResponseSample};
use search::grid_then_golden;

/// Threshold a real color event camera was hand-tuned to in prior work;
/// reported next to fitted values for comparison.
pub const REAL_CAMERA_THETA: f64 = 0.25;

pub const DEFAULT_BRACKET: (f64, f64) = (0.05, 1.0);

pub const FLAT_LOSS_WARNING: &str = "loss flat, theta unidentifiable";

/// Residual weight per Bayer channel (R, G, B).
pub const BAYER_CHANNEL_WEIGHTS: [f64; 3] = [0.4, 0.2, 0.4];

fn check_pairs(ds: &Dataset) -> Result<()> {
    if ds.views.len() < 2 {
        return Err(Error::arg(format!(
            "calibration needs at least 2 views, dataset has {}",
            ds.views.len()
        )));
    }
    if let Some((a, b)) = ds.event_span() {
        for (i, w) in ds.views.windows(2).enumerate() {
            if w[0].t_mid < a || w[1].t_mid > b {
                return Err(Error::Dataset(format!(
                    "no events cover the gap between views[{i}] and views[{}] ([{}, {}] us; events span [{a}, {b}) us)",
                    i + 1,
                    w[0].t_mid,
                    w[1].t_mid
                )));
            }
        }
    }
    Ok(())
}

fn latents(ds: &Dataset, thr: ThresholdConfig) -> Result<Vec<ImageBuffer>> {
    ds.views
        .par_iter()
        .map(|v| edi_deblur(&v.blur, &ds.events, v.t_mid, ds.tau(), thr, ds.color()))
        .collect()
}

fn log_mse(a: &ImageBuffer, b: &ImageBuffer, floor: f64) -> f64 {
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| {
            let d = p.max(floor).ln() - q.max(floor).ln();
            d * d
        })
        .sum();
    sum / a.data().len() as f64
}

/// Mean over consecutive view pairs of the log-domain squared difference
/// between the forward-warped latent of the first view and the latent of
/// the second.
pub fn consistency_loss(ds: &Dataset, thr: ThresholdConfig, floor: f64) -> Result<f64> {
    check_pairs(ds)?;
    let lat = latents(ds, thr)?;
    let per_pair: Vec<f64> = (0..ds.views.len() - 1)
        .into_par_iter()
        .map(|i| {
            let pred = warp_intensity(&lat[i], &ds.events, ds.views[i].t_mid, ds.views[i + 1].t_mid, thr, ds.color())?;
            Ok(log_mse(&pred, &lat[i + 1], floor))
        })
        .collect::<Result<_>>()?;
    // pair order keeps the sum independent of scheduling
    Ok(per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdSearch {
    pub lo: f64,
    pub hi: f64,
    /// Fit separate positive and negative thresholds after the symmetric fit.
    pub asymmetric: bool,
    pub floor: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            lo: DEFAULT_BRACKET.0,
            hi: DEFAULT_BRACKET.1,
            asymmetric: false,
            floor: DEFAULT_LOG_FLOOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub theta_pos: f64,
    pub theta_neg: f64,
    pub loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub pairs: usize,
    pub pixels_per_pair: usize,
    /// Consistency loss at the estimate.
    pub loss: f64,
    /// Root mean square log-intensity residual at the estimate.
    pub rms_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub theta_hat: f64,
    pub theta_pos: f64,
    pub theta_neg: f64,
    pub bracket: [f64; 2],
    pub identifiable: bool,
    pub warnings: Vec<String>,
    pub trace: Vec<TracePoint>,
    pub residuals: ResidualStats,
    pub reference_theta_real_camera: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseFit>,
    pub notes: Vec<String>,
}

impl CalibrationReport {
    pub fn thresholds(&self) -> Result<ThresholdConfig> {
        ThresholdConfig::new(self.theta_pos, self.theta_neg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "theta_hat {:.4} (pos {:.4}, neg {:.4}) in [{}, {}]\nloss {:.6e}, rms log residual {:.4}, {} pairs\nreference real-camera theta {}\n",
            self.theta_hat,
            self.theta_pos,
            self.theta_neg,
            self.bracket[0],
            self.bracket[1],
            self.residuals.loss,
            self.residuals.rms_log,
            self.residuals.pairs,
            self.reference_theta_real_camera
        );
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        if let Some(r) = &self.response {
            out.push_str(&format!(
                "response: {} knots, objective {:.6e} -> {:.6e} in {} sweeps over {} samples\n",
                r.curve.n_knots(),
                r.objective_initial,
                r.objective_final,
                r.sweeps,
                r.samples
            ));
        }
        out
    }
}

fn search_theta(
    ds: &Dataset,
    opts: &ThresholdSearch,
    trace: &mut Vec<TracePoint>,
    make: impl Fn(f64) -> Result<ThresholdConfig>,
) -> Result<search::SearchResult> {
    let r = grid_then_golden(
        |x| consistency_loss(ds, make(x)?, opts.floor),
        opts.lo,
        opts.hi,
        8,
        1e-3,
    )?;
    for s in &r.trace {
        let t = make(s.x)?;
        trace.push(TracePoint {
            theta_pos: t.theta_pos,
            theta_neg: t.theta_neg,
            loss: s.loss,
        });
    }
    Ok(r)
}

/// Estimate the contrast threshold by minimizing [`consistency_loss`] with a
/// coarse grid and golden-section refinement.
pub fn fit_threshold(ds: &Dataset, opts: &ThresholdSearch) -> Result<CalibrationReport> {
    if !(opts.lo > 0.0 && opts.lo < opts.hi && opts.hi.is_finite()) {
        return Err(Error::arg(format!("invalid threshold bracket [{}, {}]", opts.lo, opts.hi)));
    }
    check_pairs(ds)?;
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let sym = search_theta(ds, opts, &mut trace, ThresholdConfig::symmetric)?;
    let (mut pos, mut neg) = (sym.x, sym.x);
    let identifiable = !sym.flat;
    if sym.flat {
        log::warn!("{FLAT_LOSS_WARNING}");
        warnings.push(FLAT_LOSS_WARNING.to_string());
        let t = REAL_CAMERA_THETA.clamp(opts.lo, opts.hi);
        (pos, neg) = (t, t);
    } else if opts.asymmetric {
        for _ in 0..2 {
            pos = search_theta(ds, opts, &mut trace, |x| ThresholdConfig::new(x, neg))?.x;
            neg = search_theta(ds, opts, &mut trace, |x| ThresholdConfig::new(pos, x))?.x;
        }
    }
    let thr = ThresholdConfig::new(pos, neg)?;
    let loss = consistency_loss(ds, thr, opts.floor)?;
    let v = &ds.views[0].blur;
    Ok(CalibrationReport {
        theta_hat: 0.5 * (pos + neg),
        theta_pos: pos,
        theta_neg: neg,
        bracket: [opts.lo, opts.hi],
        identifiable,
        warnings,
        trace,
        residuals: ResidualStats {
            pairs: ds.views.len() - 1,
            pixels_per_pair: v.width() * v.height(),
            loss,
            rms_log: loss.sqrt(),
        },
        reference_theta_real_camera: REAL_CAMERA_THETA,
        response: None,
        notes: vec![
            "theta minimizes the log-domain mismatch between event-warped latents of consecutive views".into(),
            "the response is a monotone piecewise-linear curve per polarity fitted by constrained least squares, standing in for a learned response network".into(),
        ],
    })
}

/// The single-channel signal each event pixel sees.
fn sensed(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() == 3 {
        luma_bt601(img)
    } else {
        Ok(img.clone())
    }
}

/// Log level of a pixel at `t` relative to its event reference, when the
/// crossings around `t` pin it: both neighbours have the same polarity, so
/// the signal is passing monotonically from one level to the next. Up to two
/// crossings of that run on each side are interpolated through (Lagrange in
/// time), which follows a signal that speeds up or slows down. Across a
/// reversal the level is only known to within a threshold and `None` is
/// returned.
fn pinned_offset(hist: &[crate::events::Event], t: u64, thr: &ThresholdConfig) -> Option<f64> {
    let i = hist.partition_point(|e| e.t < t);
    let (a, b) = (hist.get(i.checked_sub(1)?)?, hist.get(i)?);
    if a.p != b.p {
        return None;
    }
    let step = thr.step(b.p);
    let lo = if i >= 2 && hist[i - 2].p == a.p && hist[i - 2].t < a.t { i - 2 } else { i - 1 };
    let hi = if hist.get(i + 1).is_some_and(|e| e.p == b.p && e.t > b.t) { i + 1 } else { i };
    // level at each crossing, relative to the one just before t
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|j| (hist[j].t as f64, (j as f64 - (i - 1) as f64) * step))
        .collect();
    let x = t as f64;
    let level: f64 = pts
        .iter()
        .enumerate()
        .map(|(m, &(xm, ym))| {
            let basis: f64 = pts
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != m)
                .map(|(_, &(xn, _))| (x - xn) / (xm - xn))
                .product();
            ym * basis
        })
        .sum();
    // a wild polynomial means the run is too irregular to trust
    (level.is_finite() && level * step.signum() >= -1e-9 && level.abs() <= step.abs() * (1.0 + 1e-9))
        .then_some(level)
}

/// Residual samples for [`response::fit_response_samples`]. For each pixel,
/// the views at which a nearby crossing pins the log level are chained in
/// time order; each consecutive link gives the two frame intensities and
/// the log change the events report between them. Frames are the sharp
/// ground truth when every view has one, otherwise deblurred latents.
pub fn response_samples(ds: &Dataset, thr: ThresholdConfig, opts: &FitOptions) -> Result<Vec<ResponseSample>> {
    check_pairs(ds)?;
    let frames: Vec<ImageBuffer> = if ds.manifest.has_ground_truth() {
        ds.views.iter().map(|v| v.sharp.clone().expect("checked")).collect()
    } else {
        latents(ds, thr)?
    };
    let frames = frames.iter().map(sensed).collect::<Result<Vec<_>>>()?;
    let w = frames[0].width();
    let n_pix = w * frames[0].height();
    let mut candidates = Vec::new();
    for pix in 0..n_pix {
        let (x, y) = (pix % w, pix / w);
        let hist = ds.events.pixel_events(x, y)?;
        let weight = match ds.color() {
            ColorMode::Mono => 1.0,
            ColorMode::Bayer(pat) => BAYER_CHANNEL_WEIGHTS[pat.channel_of(x, y).index()],
        };
        let mut prev: Option<(usize, f64)> = None;
        for (k, v) in ds.views.iter().enumerate() {
            let Some(off) = pinned_offset(hist, v.t_mid, &thr) else {
                continue;
            };
            if let Some((j, off_j)) = prev {
                let (p, n) = crate::events::count_polarities(window(hist, ds.views[j].t_mid, v.t_mid));
                let change = thr.log_change(p, n) + off - off_j;
                let (i0, i1) = (frames[j].data()[pix], frames[k].data()[pix]);
                candidates.push(ResponseSample {
                    i0,
                    i1,
                    log_change: change,
                    polarity: if change >= 0.0 { 1 } else { -1 },
                    weight,
                });
            }
            prev = Some((k, off));
        }
    }
    Ok(response::strided_subset(candidates.len(), opts.max_samples, opts.seed)
        .into_iter()
        .map(|k| candidates[k])
        .collect())
}

/// Fit the response curve for a fixed threshold.
pub fn fit_response(ds: &Dataset, thr: ThresholdConfig, opts: &FitOptions) -> Result<ResponseFit> {
    let samples = response_samples(ds, thr, opts)?;
    response::fit_response_samples(&samples, opts)
}

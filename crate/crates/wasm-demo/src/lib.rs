//! Browser bindings: a simulated translating-texture scene that can be
//! deblurred at any threshold, scrubbed through its exposure, and scored by
//! the calibration loss.

use std::f64::consts::PI;

use evdi::calibrate::{consistency_loss, fit_threshold, ThresholdSearch};
use evdi::dataio::{DatasetManifest, ViewEntry};
use evdi::image::{to_gamma, Domain};
use evdi::integrator::{edi_deblur, warp_intensity, Exposure};
use evdi::simulator::{events_from_frames, synthesize_blur, view_times, Frame, FrameSequence, SimulatorConfig, DEFAULT_LOG_FLOOR};
use evdi::{ColorMode, Dataset, GammaCurve, ImageBuffer, Result, ThresholdConfig, View};
use wasm_bindgen::prelude::*;

pub const WIDTH: usize = 128;
pub const HEIGHT: usize = 96;
pub const EXPOSURE_US: u64 = 40_000;
const FRAMES: u64 = 200;

fn texture(u: f64, y: f64) -> f64 {
    0.5 + 0.25 * (2.0 * PI * u / 23.0 + 0.3).sin()
        + 0.15 * (2.0 * PI * u / 7.3 + 1.1).sin()
        + 0.05 * (2.0 * PI * y / 11.0 + 0.7).sin()
}

/// Simulated dataset held in memory; the shown view is the middle one.
pub struct DemoScene {
    pub dataset: Dataset,
    pub view: usize,
}

impl DemoScene {
    /// 1 kHz texture drifting at `speed` px/s, events at threshold `theta`,
    /// 40 ms views every 40 ms.
    pub fn new(theta: f64, speed: f64) -> Result<Self> {
        let thr = ThresholdConfig::symmetric(theta)?;
        let frames = (0..FRAMES)
            .map(|k| {
                let shift = speed * k as f64 * 1e-3;
                let img = ImageBuffer::from_fn(WIDTH, HEIGHT, 1, Domain::Linear, |x, y, _| {
                    texture(x as f64 - shift, y as f64)
                })?;
                Ok(Frame::new(k * 1000, img))
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = FrameSequence::new(frames)?;
        let events = events_from_frames(&seq, &SimulatorConfig::new(thr, ColorMode::Mono))?;
        let times = view_times(&seq, EXPOSURE_US, EXPOSURE_US)?;
        let views = times
            .iter()
            .map(|&t| {
                Ok(View {
                    t_mid: t,
                    blur: synthesize_blur(&seq, t, EXPOSURE_US)?,
                    sharp: Some(seq.nearest(t).image.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let entries = times
            .iter()
            .enumerate()
            .map(|(k, &t)| ViewEntry::new(t, format!("blur/{k:04}.png"), Some(format!("sharp/{k:04}.png"))))
            .collect();
        let mut manifest = DatasetManifest::new(EXPOSURE_US, theta, "events.evt1", entries);
        let (first, end) = seq.extent();
        manifest.event_span_us = Some([first, end]);
        let view = views.len() / 2;
        Ok(DemoScene {
            dataset: Dataset {
                manifest,
                events,
                poses: None,
                views,
                thresholds: thr,
            },
            view,
        })
    }

    fn shown(&self) -> &View {
        &self.dataset.views[self.view]
    }

    pub fn blur(&self) -> &ImageBuffer {
        &self.shown().blur
    }

    pub fn sharp(&self) -> &ImageBuffer {
        self.shown().sharp.as_ref().expect("simulated views carry ground truth")
    }

    pub fn deblur(&self, theta: f64) -> Result<ImageBuffer> {
        let v = self.shown();
        let ds = &self.dataset;
        edi_deblur(&v.blur, &ds.events, v.t_mid, ds.tau(), ThresholdConfig::symmetric(theta)?, ColorMode::Mono)
    }

    /// Latent frame at fraction `s` in [0, 1] of the exposure.
    pub fn latent_at(&self, theta: f64, s: f64) -> Result<ImageBuffer> {
        let v = self.shown();
        let ds = &self.dataset;
        let exp = Exposure::new(v.t_mid, ds.tau())?;
        let (lo, hi) = exp.integer_bounds();
        let t = (lo as f64 + s.clamp(0.0, 1.0) * (hi - 1 - lo) as f64).round() as u64;
        let latent = self.deblur(theta)?;
        warp_intensity(&latent, &ds.events, v.t_mid, t, ThresholdConfig::symmetric(theta)?, ColorMode::Mono)
    }

    /// PSNR against the sharp frame, gamma domain.
    pub fn psnr(&self, img: &ImageBuffer) -> Result<f64> {
        let g = GammaCurve::default();
        evdi::metrics::psnr(&to_gamma(&img.clamped(0.0, 1.0), g)?, &to_gamma(self.sharp(), g)?)
    }

    /// Calibration loss at `n` thresholds evenly spaced over `[lo, hi]`.
    pub fn loss_curve(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64;
                consistency_loss(&self.dataset, ThresholdConfig::symmetric(t)?, DEFAULT_LOG_FLOOR)
            })
            .collect()
    }

    pub fn fit_theta(&self) -> Result<f64> {
        Ok(fit_threshold(&self.dataset, &ThresholdSearch::default())?.theta_hat)
    }
}

/// Gamma-encoded RGBA bytes for a canvas `ImageData`.
pub fn to_rgba(img: &ImageBuffer) -> Result<Vec<u8>> {
    let enc = to_gamma(&img.clamped(0.0, 1.0), GammaCurve::default())?;
    let c = enc.channels();
    let mut out = Vec::with_capacity(enc.n_pixels() * 4);
    for px in enc.data().chunks(c) {
        let rgb = if c >= 3 { [px[0], px[1], px[2]] } else { [px[0]; 3] };
        out.extend(rgb.iter().map(|v| (v * 255.0).round() as u8));
        out.push(255);
    }
    Ok(out)
}

fn js(e: evdi::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Scene {
    inner: DemoScene,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(constructor)]
    pub fn new(theta: f64, speed: f64) -> std::result::Result<Scene, JsError> {
        Ok(Scene {
            inner: DemoScene::new(theta, speed).map_err(js)?,
        })
    }

    pub fn width(&self) -> usize {
        WIDTH
    }

    pub fn height(&self) -> usize {
        HEIGHT
    }

    pub fn blur_rgba(&self) -> std::result::Result<Vec<u8>, JsError> {
        to_rgba(self.inner.blur()).map_err(js)
    }

    pub fn sharp_rgba(&self) -> std::result::Result<Vec<u8>, JsError> {
        to_rgba(self.inner.sharp()).map_err(js)
    }

    pub fn deblur_rgba(&self, theta: f64) -> std::result::Result<Vec<u8>, JsError> {
        to_rgba(&self.inner.deblur(theta).map_err(js)?).map_err(js)
    }

    pub fn latent_rgba(&self, theta: f64, s: f64) -> std::result::Result<Vec<u8>, JsError> {
        to_rgba(&self.inner.latent_at(theta, s).map_err(js)?).map_err(js)
    }

    /// `[psnr(blur), psnr(deblur at theta)]` in dB.
    pub fn psnr_pair(&self, theta: f64) -> std::result::Result<Vec<f64>, JsError> {
        let d = self.inner.deblur(theta).map_err(js)?;
        Ok(vec![
            self.inner.psnr(self.inner.blur()).map_err(js)?,
            self.inner.psnr(&d).map_err(js)?,
        ])
    }

    pub fn loss_curve(&self, lo: f64, hi: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
        self.inner.loss_curve(lo, hi, n).map_err(js)
    }

    pub fn fit_theta(&self) -> std::result::Result<f64, JsError> {
        self.inner.fit_theta().map_err(js)
    }
}

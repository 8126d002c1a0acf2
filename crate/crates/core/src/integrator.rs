//! Event single and double integrals: accumulation, brightness warping,
//! the exact deblurring kernel and latent video reconstruction.
//!
//! Brightness at time `h` relative to a reference time `r` is
//! `exp(E(h))` with `E(h) = sum of signed steps of events in [r, h)` for
//! `h >= r` and minus the steps in `[h, r)` otherwise. `E` is piecewise
//! constant between events, so every integral here is a finite sum over the
//! event timestamps, never a sampled quadrature.

use std::ops::Add;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{count_polarities, window, ColorMode, Event, EventStream, ThresholdConfig};
use crate::image::{Domain, ImageBuffer};

/// Exposure interval `[t_mid - tau/2, t_mid + tau/2)` in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exposure {
    pub t_mid: u64,
    pub tau: u64,
}

impl Exposure {
    pub fn new(t_mid: u64, tau: u64) -> Result<Self> {
        if tau == 0 {
            return Err(Error::arg("exposure time must be > 0"));
        }
        if 2 * t_mid < tau {
            return Err(Error::arg(format!(
                "exposure centered at {t_mid} us with tau {tau} us starts before t = 0"
            )));
        }
        Ok(Exposure { t_mid, tau })
    }

    pub fn start(&self) -> f64 {
        self.t_mid as f64 - self.tau as f64 / 2.0
    }

    pub fn end(&self) -> f64 {
        self.t_mid as f64 + self.tau as f64 / 2.0
    }

    /// First and one-past-last integer microsecond inside the window.
    pub fn integer_bounds(&self) -> (u64, u64) {
        (self.start().ceil() as u64, self.end().ceil() as u64)
    }
}

/// Per-pixel positive and negative event counts over a window; the signed
/// accumulation `pos * theta_pos - neg * theta_neg` is derived on demand so
/// adjacent windows add exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct AccumulatorImage {
    width: usize,
    height: usize,
    thresholds: ThresholdConfig,
    pos: Vec<u32>,
    neg: Vec<u32>,
}

impl AccumulatorImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self, x: usize, y: usize) -> (u32, u32) {
        let i = y * self.width + x;
        (self.pos[i], self.neg[i])
    }

    /// Accumulated log-intensity change at `(x, y)`.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        let (p, n) = self.counts(x, y);
        self.thresholds.log_change(p as i64, n as i64)
    }

    pub fn values(&self) -> Vec<f64> {
        self.pos
            .iter()
            .zip(&self.neg)
            .map(|(&p, &n)| self.thresholds.log_change(p as i64, n as i64))
            .collect()
    }
}

impl Add for &AccumulatorImage {
    type Output = Result<AccumulatorImage>;

    fn add(self, rhs: &AccumulatorImage) -> Result<AccumulatorImage> {
        if self.width != rhs.width || self.height != rhs.height || self.thresholds != rhs.thresholds {
            return Err(Error::arg("accumulators differ in shape or thresholds"));
        }
        Ok(AccumulatorImage {
            width: self.width,
            height: self.height,
            thresholds: self.thresholds,
            pos: self.pos.iter().zip(&rhs.pos).map(|(a, b)| a + b).collect(),
            neg: self.neg.iter().zip(&rhs.neg).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Signed accumulation of all events in `[t0, t1)`.
pub fn accumulate(stream: &EventStream, t0: u64, t1: u64, thr: ThresholdConfig) -> Result<AccumulatorImage> {
    if t0 > t1 {
        return Err(Error::arg(format!("window start {t0} > end {t1}")));
    }
    let n = stream.n_pixels();
    let (pos, neg) = (0..n)
        .into_par_iter()
        .map(|pix| {
            let (p, q) = count_polarities(window(stream.pixel_slice(pix), t0, t1));
            (p as u32, q as u32)
        })
        .unzip();
    Ok(AccumulatorImage {
        width: stream.width() as usize,
        height: stream.height() as usize,
        thresholds: thr,
        pos,
        neg,
    })
}

/// Log-brightness change of one pixel from `from` to `to`.
#[inline]
fn pixel_log_change(events: &[Event], from: u64, to: u64, thr: &ThresholdConfig) -> f64 {
    if to >= from {
        let (p, n) = count_polarities(window(events, from, to));
        thr.log_change(p, n)
    } else {
        let (p, n) = count_polarities(window(events, to, from));
        -thr.log_change(p, n)
    }
}

/// `int_lo^hi exp(E(h)) dh` for one pixel, `E` referenced to `t_ref`.
pub(crate) fn pixel_exp_integral(events: &[Event], t_ref: u64, lo: f64, hi: f64, thr: &ThresholdConfig) -> f64 {
    debug_assert!(lo <= hi);
    let n_ref = events.partition_point(|e| e.t < t_ref);
    let i0 = events.partition_point(|e| e.t as f64 <= lo);
    let i1 = i0 + events[i0..].partition_point(|e| (e.t as f64) < hi);
    // signed counts at h just above lo
    let (mut pos, mut neg) = if i0 >= n_ref {
        count_polarities(&events[n_ref..i0])
    } else {
        let (p, n) = count_polarities(&events[i0..n_ref]);
        (-p, -n)
    };
    let mut prev = lo;
    let mut sum = 0.0;
    for e in &events[i0..i1] {
        let t = e.t as f64;
        sum += (t - prev) * thr.log_change(pos, neg).exp();
        if e.p > 0 {
            pos += 1;
        } else {
            neg += 1;
        }
        prev = t;
    }
    sum + (hi - prev) * thr.log_change(pos, neg).exp()
}

fn check_frame(img: &ImageBuffer, stream: &EventStream, mode: ColorMode, op: &str) -> Result<()> {
    if img.domain() != Domain::Linear {
        return Err(Error::arg(format!("{op}: image must be in the linear domain")));
    }
    if img.width() != stream.width() as usize || img.height() != stream.height() as usize {
        return Err(Error::arg(format!(
            "{op}: image {}x{} does not match sensor {}x{}",
            img.width(),
            img.height(),
            stream.width(),
            stream.height()
        )));
    }
    if matches!(mode, ColorMode::Bayer(_)) && img.channels() != 1 {
        return Err(Error::arg(format!(
            "{op}: Bayer events need a 1-channel mosaic, got {} channels",
            img.channels()
        )));
    }
    Ok(())
}

/// Multiply each pixel (all of its channels) by `factor(pixel)`.
fn scale_pixels(img: &ImageBuffer, factor: impl Fn(usize) -> f64 + Sync) -> ImageBuffer {
    let c = img.channels();
    let mut out = img.clone();
    let w = img.width();
    out.data_mut()
        .par_chunks_mut(w * c)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, px) in row.chunks_exact_mut(c).enumerate() {
                let k = factor(y * w + x);
                px.iter_mut().for_each(|v| *v *= k);
            }
        });
    out
}

/// Carry a linear-domain frame from time `t` to `t_target` with the events
/// in between. A pixel's own events drive all of its channels, which covers
/// both monochrome events on RGB/gray frames and Bayer events on a mosaic.
pub fn warp_intensity(
    img: &ImageBuffer,
    stream: &EventStream,
    t: u64,
    t_target: u64,
    thr: ThresholdConfig,
    mode: ColorMode,
) -> Result<ImageBuffer> {
    check_frame(img, stream, mode, "warp_intensity")?;
    Ok(scale_pixels(img, |pix| {
        pixel_log_change(stream.pixel_slice(pix), t, t_target, &thr).exp()
    }))
}

/// Mean of `exp(E(h))` over the exposure, `E` referenced to mid-exposure.
#[derive(Clone, Debug, PartialEq)]
pub struct EdiKernelImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl EdiKernelImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Exact piecewise-constant double-integral kernel.
pub fn edi_kernel(stream: &EventStream, t_mid: u64, tau: u64, thr: ThresholdConfig) -> Result<EdiKernelImage> {
    let exp = Exposure::new(t_mid, tau)?;
    let (lo, hi) = (exp.start(), exp.end());
    let data = (0..stream.n_pixels())
        .into_par_iter()
        .map(|pix| pixel_exp_integral(stream.pixel_slice(pix), t_mid, lo, hi, &thr) / tau as f64)
        .collect();
    Ok(EdiKernelImage {
        width: stream.width() as usize,
        height: stream.height() as usize,
        data,
    })
}

/// Latent sharp frame at mid-exposure: `blur / kernel`.
pub fn edi_deblur(
    blur: &ImageBuffer,
    stream: &EventStream,
    t_mid: u64,
    tau: u64,
    thr: ThresholdConfig,
    mode: ColorMode,
) -> Result<ImageBuffer> {
    check_frame(blur, stream, mode, "edi_deblur")?;
    let kernel = edi_kernel(stream, t_mid, tau, thr)?;
    assert!(
        kernel.data.iter().all(|&k| k > 0.0 && k.is_finite()),
        "double-integral kernel must be positive"
    );
    Ok(scale_pixels(blur, |pix| 1.0 / kernel.data[pix]))
}

/// Time range a latent video may be queried over: the exposure joined with
/// the span of observed events.
pub fn query_span(stream: &EventStream, exposure: Exposure) -> (u64, u64) {
    let lo = exposure.start().ceil() as u64;
    let hi = exposure.end().floor() as u64;
    match stream.time_range() {
        Some((first, last)) => (lo.min(first), hi.max(last)),
        None => (lo, hi),
    }
}

/// Latent frames at `query_ts`, propagated from the mid-exposure deblur.
pub fn reconstruct_video(
    blur: &ImageBuffer,
    stream: &EventStream,
    t_mid: u64,
    tau: u64,
    thr: ThresholdConfig,
    mode: ColorMode,
    query_ts: &[u64],
) -> Result<Vec<ImageBuffer>> {
    let exposure = Exposure::new(t_mid, tau)?;
    let (start, end) = query_span(stream, exposure);
    if let Some(&t) = query_ts.iter().find(|&&t| t < start || t > end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let latent = edi_deblur(blur, stream, t_mid, tau, thr, mode)?;
    query_ts
        .iter()
        .map(|&t| warp_intensity(&latent, stream, t_mid, t, thr, mode))
        .collect()
}

/// Latent video as `n` box-filtered frames tiling the exposure: frame `j` is
/// the mean latent brightness over the `j`-th of `n` equal sub-intervals, so
/// the frames average back to the blurry input.
pub fn reconstruct_box_frames(
    blur: &ImageBuffer,
    stream: &EventStream,
    t_mid: u64,
    tau: u64,
    thr: ThresholdConfig,
    mode: ColorMode,
    n: usize,
) -> Result<Vec<ImageBuffer>> {
    if n == 0 {
        return Err(Error::arg("frame count must be > 0"));
    }
    let exposure = Exposure::new(t_mid, tau)?;
    let latent = edi_deblur(blur, stream, t_mid, tau, thr, mode)?;
    let cell = tau as f64 / n as f64;
    Ok((0..n)
        .map(|j| {
            let lo = exposure.start() + j as f64 * cell;
            let hi = if j + 1 == n { exposure.end() } else { lo + cell };
            scale_pixels(&latent, |pix| {
                pixel_exp_integral(stream.pixel_slice(pix), t_mid, lo, hi, &thr) / (hi - lo)
            })
        })
        .collect())
}

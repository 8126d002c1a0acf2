//! PSNR and SSIM with a peak value of 1.0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{luma_bt601, ImageBuffer};

/// Value reported when the images are identical.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::arg(format!(
            "shape mismatch: {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

/// Mean squared error, summed row by row in a fixed order.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    let row = a.width() * a.channels();
    if row == 0 || a.height() == 0 {
        return Ok(0.0);
    }
    let partial: Vec<f64> = a
        .data()
        .par_chunks(row)
        .zip(b.data().par_chunks(row))
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum())
        .collect();
    Ok(partial.iter().sum::<f64>() / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian taps.
fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Valid-mode separable Gaussian filter of a single-channel plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut horiz = vec![0.0; ow * h];
    horiz.par_chunks_mut(ow).enumerate().for_each(|(y, out)| {
        let row = &plane[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = taps.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(t, v)| t * v).sum();
        }
    });
    let mut out = vec![0.0; ow * oh];
    out.par_chunks_mut(ow).enumerate().for_each(|(y, o)| {
        for (x, v) in o.iter_mut().enumerate() {
            *v = (0..SSIM_WINDOW).map(|k| taps[k] * horiz[(y + k) * ow + x]).sum();
        }
    });
    out
}

/// Mean local SSIM over all fully contained 11x11 Gaussian windows
/// (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1). Color images are
/// compared on BT.601 luma.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::arg(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let (pa, pb) = if a.channels() == 3 {
        (luma_bt601(a)?.into_data(), luma_bt601(b)?.into_data())
    } else {
        (a.data().to_vec(), b.data().to_vec())
    };
    let (w, h) = (a.width(), a.height());
    let taps = gaussian_taps();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        pa.iter().zip(&pb).map(|(&x, &y)| f(x, y)).collect()
    };
    let mu_a = filter_valid(&pa, w, h, &taps);
    let mu_b = filter_valid(&pb, w, h, &taps);
    let e_aa = filter_valid(&prod(&|x, _| x * x), w, h, &taps);
    let e_bb = filter_valid(&prod(&|_, y| y * y), w, h, &taps);
    let e_ab = filter_valid(&prod(&|x, y| x * y), w, h, &taps);

    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / mu_a.len() as f64)
}

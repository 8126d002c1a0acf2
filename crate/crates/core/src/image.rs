//! Image buffers, gamma curves, BT.601 luma and Bayer mosaics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{BayerPattern, Channel};

/// BT.601 luma weights for R, G and B.
pub const BT601: [f64; 3] = [0.299, 0.587, 0.114];

/// Photometric domain of the stored values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Proportional to scene radiance; required by every integral.
    Linear,
    /// Display-encoded.
    Gamma,
}

/// Interleaved multi-channel raster of `f64` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    domain: Domain,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        domain: Domain,
        data: Vec<f64>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::arg(format!("channels must be 1 or 3, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::arg(format!(
                "buffer length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite sample at index {i}")));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            domain,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, domain: Domain, value: f64) -> Result<Self> {
        Self::new(width, height, channels, domain, vec![value; width * height * channels])
    }

    /// Build from a per-pixel function returning one value per channel.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        domain: Domain,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, domain, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Same buffer re-tagged; values untouched.
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Apply `f` to every sample, producing a buffer in `domain`.
    pub(crate) fn map(&self, domain: Domain, f: impl Fn(f64) -> f64 + Sync) -> ImageBuffer {
        let data = self.data.par_iter().map(|&v| f(v)).collect();
        ImageBuffer {
            data,
            domain,
            ..*self
        }
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> ImageBuffer {
        self.map(self.domain, |v| v.clamp(lo, hi))
    }

    /// Multiply every sample by `k`.
    pub fn scaled(&self, k: f64) -> ImageBuffer {
        self.map(self.domain, |v| v * k)
    }

    fn check_nonnegative(&self, op: &str) -> Result<()> {
        match self.data.iter().position(|&v| v < 0.0) {
            Some(i) => Err(Error::arg(format!(
                "{op}: negative sample {} at index {i}",
                self.data[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Display transfer curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaCurve {
    Srgb,
    /// `encoded = linear^(1/gamma)`.
    Power(f64),
}

impl Default for GammaCurve {
    fn default() -> Self {
        GammaCurve::Power(2.2)
    }
}

impl GammaCurve {
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::arg(format!("gamma must be finite and > 0, got {gamma}")));
        }
        Ok(GammaCurve::Power(gamma))
    }

    #[inline]
    pub fn decode(self, v: f64) -> f64 {
        match self {
            GammaCurve::Srgb => {
                if v <= 0.04045 {
                    v / 12.92
                } else {
                    ((v + 0.055) / 1.055).powf(2.4)
                }
            }
            GammaCurve::Power(g) => v.powf(g),
        }
    }

    #[inline]
    pub fn encode(self, v: f64) -> f64 {
        match self {
            GammaCurve::Srgb => {
                if v <= 0.0031308 {
                    v * 12.92
                } else {
                    1.055 * v.powf(1.0 / 2.4) - 0.055
                }
            }
            GammaCurve::Power(g) => v.powf(1.0 / g),
        }
    }
}

impl fmt::Display for GammaCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaCurve::Srgb => f.write_str("srgb"),
            GammaCurve::Power(g) => write!(f, "power:{g}"),
        }
    }
}

impl FromStr for GammaCurve {
    type Err = Error;

    /// Accepts `srgb`, `power:<gamma>` or a bare number.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("srgb") {
            return Ok(GammaCurve::Srgb);
        }
        let num = s.strip_prefix("power:").unwrap_or(s);
        let g: f64 = num
            .parse()
            .map_err(|_| Error::arg(format!("unknown gamma curve {s:?}")))?;
        GammaCurve::power(g)
    }
}

impl Serialize for GammaCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GammaCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decode display values to linear intensity.
pub fn to_linear(img: &ImageBuffer, curve: GammaCurve) -> Result<ImageBuffer> {
    img.check_nonnegative("to_linear")?;
    Ok(img.map(Domain::Linear, |v| curve.decode(v)))
}

/// Encode linear intensity for display.
pub fn to_gamma(img: &ImageBuffer, curve: GammaCurve) -> Result<ImageBuffer> {
    img.check_nonnegative("to_gamma")?;
    Ok(img.map(Domain::Gamma, |v| curve.encode(v)))
}

/// BT.601 luma, written relative to green so a gray triple maps to its
/// exact gray value.
#[inline]
pub fn luma_of(r: f64, g: f64, b: f64) -> f64 {
    g + BT601[0] * (r - g) + BT601[2] * (b - g)
}

pub fn luma_bt601(rgb: &ImageBuffer) -> Result<ImageBuffer> {
    if rgb.channels != 3 {
        return Err(Error::arg(format!(
            "luma needs 3 channels, got {}",
            rgb.channels
        )));
    }
    let data = rgb
        .data
        .chunks_exact(3)
        .map(|px| luma_of(px[0], px[1], px[2]))
        .collect();
    Ok(ImageBuffer {
        width: rgb.width,
        height: rgb.height,
        channels: 1,
        domain: rgb.domain,
        data,
    })
}

/// Sample each pixel's own Bayer channel.
pub fn mosaic(rgb: &ImageBuffer, pattern: BayerPattern) -> Result<ImageBuffer> {
    if rgb.channels != 3 {
        return Err(Error::arg(format!(
            "mosaic needs 3 channels, got {}",
            rgb.channels
        )));
    }
    let mut data = Vec::with_capacity(rgb.n_pixels());
    for y in 0..rgb.height {
        for x in 0..rgb.width {
            data.push(rgb.get(x, y, pattern.channel_of(x, y).index()));
        }
    }
    Ok(ImageBuffer {
        width: rgb.width,
        height: rgb.height,
        channels: 1,
        domain: rgb.domain,
        data,
    })
}

/// Reflect an out-of-range coordinate by two so Bayer parity is kept.
#[inline]
fn reflect(i: isize, n: usize) -> Option<usize> {
    let n = n as isize;
    let r = if i < 0 {
        i + 2
    } else if i >= n {
        i - 2
    } else {
        i
    };
    (0..n).contains(&r).then_some(r as usize)
}

/// Bilinear demosaic: each missing channel is the mean of the same-channel
/// samples in the 3x3 neighborhood. Borders reflect by two pixels.
pub fn demosaic_bilinear(raw: &ImageBuffer, pattern: BayerPattern) -> Result<ImageBuffer> {
    if raw.channels != 1 {
        return Err(Error::arg(format!(
            "demosaic needs a 1-channel mosaic, got {} channels",
            raw.channels
        )));
    }
    let (w, h) = (raw.width, raw.height);
    let mut data = vec![0.0; w * h * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let own = pattern.channel_of(x, y);
            for c in [Channel::R, Channel::G, Channel::B] {
                let out = &mut row[x * 3 + c.index()];
                if c == own {
                    *out = raw.get(x, y, 0);
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0usize);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (Some(sx), Some(sy)) =
                            (reflect(x as isize + dx, w), reflect(y as isize + dy, h))
                        else {
                            continue;
                        };
                        if pattern.channel_of(sx, sy) == c {
                            sum += raw.get(sx, sy, 0);
                            n += 1;
                        }
                    }
                }
                *out = if n > 0 { sum / n as f64 } else { 0.0 };
            }
        }
    });
    ImageBuffer::new(w, h, 3, raw.domain, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gray(v: f64) -> ImageBuffer {
        ImageBuffer::filled(1, 1, 1, Domain::Gamma, v).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(ImageBuffer::new(2, 2, 2, Domain::Linear, vec![0.0; 8]).is_err());
        assert!(ImageBuffer::new(2, 2, 1, Domain::Linear, vec![0.0; 3]).is_err());
        assert!(ImageBuffer::new(1, 1, 1, Domain::Linear, vec![f64::NAN]).is_err());
    }

    #[test]
    fn gamma_endpoints_are_fixed() {
        for curve in [GammaCurve::Srgb, GammaCurve::Power(2.2), GammaCurve::Power(1.8)] {
            assert_eq!(curve.decode(0.0), 0.0);
            assert_abs_diff_eq!(curve.decode(1.0), 1.0, epsilon = 1e-15);
            assert_eq!(curve.encode(0.0), 0.0);
            assert_abs_diff_eq!(curve.encode(1.0), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn power_and_srgb_reference_values() {
        // 0.5^2.2 = exp(2.2 ln 0.5)
        let expected = (2.2 * 0.5f64.ln()).exp();
        let lin = to_linear(&gray(0.5), GammaCurve::Power(2.2)).unwrap();
        assert_abs_diff_eq!(lin.data()[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(lin.data()[0], 0.2176, epsilon = 5e-5);
        let back = to_gamma(&lin, GammaCurve::Power(2.2)).unwrap();
        assert_abs_diff_eq!(back.data()[0], 0.5, epsilon = 1e-12);

        let s = to_linear(&gray(0.04045), GammaCurve::Srgb).unwrap();
        assert_abs_diff_eq!(s.data()[0], 0.04045 / 12.92, epsilon = 1e-15);
        assert_abs_diff_eq!(s.data()[0], 0.003131, epsilon = 1e-6);
        assert_eq!(lin.domain(), Domain::Linear);
        assert_eq!(back.domain(), Domain::Gamma);
    }

    #[test]
    fn negative_input_is_rejected() {
        let img = ImageBuffer::new(2, 1, 1, Domain::Gamma, vec![0.1, -0.1]).unwrap();
        assert!(to_linear(&img, GammaCurve::default()).is_err());
        assert!(to_gamma(&img, GammaCurve::default()).is_err());
    }

    #[test]
    fn gamma_curve_parses() {
        assert_eq!("srgb".parse::<GammaCurve>().unwrap(), GammaCurve::Srgb);
        assert_eq!("power:2.4".parse::<GammaCurve>().unwrap(), GammaCurve::Power(2.4));
        assert_eq!("2.2".parse::<GammaCurve>().unwrap(), GammaCurve::Power(2.2));
        assert!("power:-1".parse::<GammaCurve>().is_err());
        assert!("cubic".parse::<GammaCurve>().is_err());
    }

    #[test]
    fn luma_coefficients() {
        let weights_sum: f64 = BT601.iter().sum();
        assert_abs_diff_eq!(weights_sum, 1.0, epsilon = 1e-15);
        let img = ImageBuffer::new(
            3,
            1,
            3,
            Domain::Linear,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.37, 0.37, 0.37],
        )
        .unwrap();
        let y = luma_bt601(&img).unwrap();
        assert_abs_diff_eq!(y.data()[0], 0.299, epsilon = 1e-15);
        assert_abs_diff_eq!(y.data()[1], 0.587, epsilon = 1e-15);
        assert_eq!(y.data()[2], 0.37);
        assert!(luma_bt601(&gray(0.3)).is_err());
    }

    #[test]
    fn mosaic_samples_own_channel() {
        let red = ImageBuffer::from_fn(4, 4, 3, Domain::Linear, |_, _, c| if c == 0 { 1.0 } else { 0.0 })
            .unwrap();
        let m = mosaic(&red, BayerPattern::Rggb).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if x % 2 == 0 && y % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(m.get(x, y, 0), expect);
            }
        }
        let grayimg = ImageBuffer::filled(5, 3, 3, Domain::Linear, 0.4).unwrap();
        assert!(mosaic(&grayimg, BayerPattern::Gbrg).unwrap().data().iter().all(|&v| v == 0.4));
        assert!(mosaic(&gray(0.1), BayerPattern::Rggb).is_err());
    }

    #[test]
    fn demosaic_constant_and_tiny() {
        for pattern in BayerPattern::ALL {
            let raw = ImageBuffer::filled(2, 2, 1, Domain::Linear, 0.3).unwrap();
            let rgb = demosaic_bilinear(&raw, pattern).unwrap();
            assert!(rgb.data().iter().all(|&v| (v - 0.3).abs() < 1e-15));
            let raw = ImageBuffer::filled(7, 5, 1, Domain::Linear, 0.6).unwrap();
            let rgb = demosaic_bilinear(&raw, pattern).unwrap();
            assert!(rgb.data().iter().all(|&v| (v - 0.6).abs() < 1e-15));
        }
    }

    #[test]
    fn demosaic_exact_on_affine_interior() {
        // channelwise affine image: brute-force comparison away from borders
        let coef = [(0.1, 0.02, 0.01), (0.5, -0.01, 0.015), (0.3, 0.005, -0.007)];
        let img = ImageBuffer::from_fn(12, 10, 3, Domain::Linear, |x, y, c| {
            let (a, bx, by) = coef[c];
            a + bx * x as f64 + by * y as f64 + 0.2
        })
        .unwrap();
        for pattern in BayerPattern::ALL {
            let rec = demosaic_bilinear(&mosaic(&img, pattern).unwrap(), pattern).unwrap();
            for y in 1..9 {
                for x in 1..11 {
                    for c in 0..3 {
                        assert_abs_diff_eq!(rec.get(x, y, c), img.get(x, y, c), epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn demosaic_horizontal_ramp() {
        let img = ImageBuffer::from_fn(16, 8, 3, Domain::Linear, |x, _, _| 0.05 * x as f64).unwrap();
        let rec = demosaic_bilinear(&mosaic(&img, BayerPattern::Rggb).unwrap(), BayerPattern::Rggb).unwrap();
        let mut max_err: f64 = 0.0;
        for y in 1..7 {
            for x in 1..15 {
                for c in 0..3 {
                    max_err = max_err.max((rec.get(x, y, c) - img.get(x, y, c)).abs());
                }
            }
        }
        assert!(max_err < 1e-12, "{max_err}");
    }

    proptest! {
        #[test]
        fn gamma_inverse_and_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 1.0f64..3.0) {
            for curve in [GammaCurve::Srgb, GammaCurve::Power(g)] {
                prop_assert!((curve.encode(curve.decode(a)) - a).abs() <= 1e-6);
                prop_assert!((curve.decode(curve.encode(a)) - a).abs() <= 1e-6);
                if a < b {
                    prop_assert!(curve.decode(a) < curve.decode(b));
                    prop_assert!(curve.encode(a) < curve.encode(b));
                }
            }
        }
    }
}

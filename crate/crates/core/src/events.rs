//! Event representation, validated streams and per-pixel indexing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of offending indices carried by an out-of-bounds error.
const MAX_REPORTED: usize = 16;

/// A single brightness-change event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    /// -1 or +1.
    pub p: i8,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: i8) -> Self {
        Event { t, x, y, p }
    }

    pub fn is_positive(&self) -> bool {
        self.p > 0
    }
}

/// Contrast thresholds in log-intensity units, one per polarity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub theta_pos: f64,
    pub theta_neg: f64,
}

impl ThresholdConfig {
    pub fn new(theta_pos: f64, theta_neg: f64) -> Result<Self> {
        for (name, v) in [("theta_pos", theta_pos), ("theta_neg", theta_neg)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(ThresholdConfig {
            theta_pos,
            theta_neg,
        })
    }

    pub fn symmetric(theta: f64) -> Result<Self> {
        Self::new(theta, theta)
    }

    /// Signed log-intensity step of one event of polarity `p`.
    #[inline]
    pub fn step(&self, p: i8) -> f64 {
        if p > 0 {
            self.theta_pos
        } else {
            -self.theta_neg
        }
    }

    /// Log-intensity change of `pos` positive and `neg` negative events.
    #[inline]
    pub fn log_change(&self, pos: i64, neg: i64) -> f64 {
        pos as f64 * self.theta_pos - neg as f64 * self.theta_neg
    }
}

/// Color filter layout of a 2x2 Bayer tile, named in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BayerPattern {
    Rggb,
    Grbg,
    Gbrg,
    Bggr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [
        BayerPattern::Rggb,
        BayerPattern::Grbg,
        BayerPattern::Gbrg,
        BayerPattern::Bggr,
    ];

    fn tile(self) -> [Channel; 4] {
        use Channel::*;
        match self {
            BayerPattern::Rggb => [R, G, G, B],
            BayerPattern::Grbg => [G, R, B, G],
            BayerPattern::Gbrg => [G, B, R, G],
            BayerPattern::Bggr => [B, G, G, R],
        }
    }

    /// Channel sensed by pixel `(x, y)`.
    #[inline]
    pub fn channel_of(self, x: usize, y: usize) -> Channel {
        self.tile()[(y & 1) * 2 + (x & 1)]
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BayerPattern::Rggb => "RGGB",
            BayerPattern::Grbg => "GRBG",
            BayerPattern::Gbrg => "GBRG",
            BayerPattern::Bggr => "BGGR",
        };
        f.write_str(s)
    }
}

impl FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RGGB" => Ok(BayerPattern::Rggb),
            "GRBG" => Ok(BayerPattern::Grbg),
            "GBRG" => Ok(BayerPattern::Gbrg),
            "BGGR" => Ok(BayerPattern::Bggr),
            other => Err(Error::arg(format!("unknown Bayer layout {other:?}"))),
        }
    }
}

/// How events relate to the channels of the frames they accompany.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ColorMode {
    /// One luma-driven event stream applied to every channel.
    #[default]
    Mono,
    /// Each pixel reports changes of its own Bayer channel; frames are
    /// 1-channel mosaics.
    Bayer(BayerPattern),
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorMode::Mono => f.write_str("mono"),
            ColorMode::Bayer(p) => write!(f, "bayer:{p}"),
        }
    }
}

impl FromStr for ColorMode {
    type Err = Error;

    /// `mono`, `bayer` (RGGB) or `bayer:<layout>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "mono" | "monochrome" => Ok(ColorMode::Mono),
            "bayer" => Ok(ColorMode::Bayer(BayerPattern::Rggb)),
            _ => match lower.strip_prefix("bayer:") {
                Some(layout) => Ok(ColorMode::Bayer(layout.parse()?)),
                None => Err(Error::arg(format!("unknown color mode {s:?}"))),
            },
        }
    }
}

impl Serialize for ColorMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColorMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A time-sorted event stream with a pixel-major index.
///
/// Events are ordered by `(t, y, x)`; events sharing all three keep their
/// input order. The pixel index holds a second copy of the events grouped
/// by pixel, each group in time order, so a pixel's history is a contiguous
/// slice.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    width: u16,
    height: u16,
    events: Vec<Event>,
    pixel_offsets: Vec<usize>,
    by_pixel: Vec<Event>,
}

impl EventStream {
    /// Validate, sort and index raw events.
    pub fn build(mut raw: Vec<Event>, width: u16, height: u16) -> Result<Self> {
        let mut bad = Vec::new();
        let mut bad_count = 0;
        for (i, e) in raw.iter().enumerate() {
            if e.p != 1 && e.p != -1 {
                return Err(Error::InvalidPolarity {
                    index: i,
                    value: e.p,
                });
            }
            if e.x >= width || e.y >= height {
                bad_count += 1;
                if bad.len() < MAX_REPORTED {
                    bad.push(i);
                }
            }
        }
        if bad_count > 0 {
            return Err(Error::OutOfBounds {
                width,
                height,
                count: bad_count,
                indices: bad,
            });
        }
        raw.sort_by_key(|e| (e.t, e.y, e.x));
        Ok(Self::from_sorted(raw, width, height))
    }

    pub fn empty(width: u16, height: u16) -> Self {
        Self::from_sorted(Vec::new(), width, height)
    }

    /// Events must already be validated and sorted.
    fn from_sorted(events: Vec<Event>, width: u16, height: u16) -> Self {
        let n_pixels = width as usize * height as usize;
        let mut pixel_offsets = vec![0usize; n_pixels + 1];
        for e in &events {
            pixel_offsets[e.y as usize * width as usize + e.x as usize + 1] += 1;
        }
        for i in 0..n_pixels {
            pixel_offsets[i + 1] += pixel_offsets[i];
        }
        let mut cursor = pixel_offsets.clone();
        let mut by_pixel = vec![Event::new(0, 0, 0, 1); events.len()];
        for e in &events {
            let pix = e.y as usize * width as usize + e.x as usize;
            by_pixel[cursor[pix]] = *e;
            cursor[pix] += 1;
        }
        EventStream {
            width,
            height,
            events,
            pixel_offsets,
            by_pixel,
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// First and last event timestamps.
    pub fn time_range(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Events with `t0 <= t < t1`, as a new stream on the same sensor.
    pub fn slice(&self, t0: u64, t1: u64) -> Result<EventStream> {
        if t0 > t1 {
            return Err(Error::arg(format!("slice start {t0} > end {t1}")));
        }
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        Ok(Self::from_sorted(
            self.events[lo..hi].to_vec(),
            self.width,
            self.height,
        ))
    }

    /// Time-ordered events of pixel `(x, y)`.
    pub fn pixel_events(&self, x: usize, y: usize) -> Result<&[Event]> {
        if x >= self.width as usize || y >= self.height as usize {
            return Err(Error::arg(format!(
                "pixel ({x}, {y}) outside {}x{} sensor",
                self.width, self.height
            )));
        }
        Ok(self.pixel_slice(y * self.width as usize + x))
    }

    /// Time-ordered events of the pixel with row-major index `pix`.
    #[inline]
    pub(crate) fn pixel_slice(&self, pix: usize) -> &[Event] {
        &self.by_pixel[self.pixel_offsets[pix]..self.pixel_offsets[pix + 1]]
    }
}

/// Signed event counts `(positive, negative)` over a pixel history slice.
#[inline]
pub(crate) fn count_polarities(events: &[Event]) -> (i64, i64) {
    let pos = events.iter().filter(|e| e.p > 0).count() as i64;
    (pos, events.len() as i64 - pos)
}

/// Sub-slice of a time-ordered pixel history with `t0 <= t < t1`.
#[inline]
pub(crate) fn window(events: &[Event], t0: u64, t1: u64) -> &[Event] {
    let lo = events.partition_point(|e| e.t < t0);
    let hi = lo + events[lo..].partition_point(|e| e.t < t1);
    &events[lo..hi]
}

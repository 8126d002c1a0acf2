//! Dataset manifest (JSON).
//!
//! ```json
//! {
//!   "exposure_us": 40000,
//!   "theta": 0.2,
//!   "events": "events.evt1",
//!   "poses": "poses.csv",
//!   "color": "mono",
//!   "gamma": "power:2.2",
//!   "linear_png": false,
//!   "event_span_us": [0, 1000000],
//!   "views": [
//!     { "t_mid_us": 20000, "blur": "blur/0000.png", "sharp": "sharp/0000.png" }
//!   ]
//! }
//! ```
//!
//! `theta` may be replaced by the pair `theta_pos`/`theta_neg`. `width` and
//! `height` are needed only for CSV events. Paths are relative to the
//! manifest's directory. Unknown keys, at the top level and inside views,
//! survive a read/write round trip.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::events::{ColorMode, ThresholdConfig};
use crate::image::GammaCurve;

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_default_color(c: &ColorMode) -> bool {
    *c == ColorMode::Mono
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub t_mid_us: u64,
    pub blur: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharp: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ViewEntry {
    pub fn new(t_mid_us: u64, blur: impl Into<String>, sharp: Option<String>) -> Self {
        ViewEntry {
            t_mid_us,
            blur: blur.into(),
            sharp,
            extra: Map::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub exposure_us: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_pos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_neg: Option<f64>,
    pub events: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poses: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_color")]
    pub color: ColorMode,
    #[serde(default)]
    pub gamma: GammaCurve,
    #[serde(default, skip_serializing_if = "is_false")]
    pub linear_png: bool,
    /// Interval `[start, end)` covered by the event recording.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_span_us: Option<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u16>,
    pub views: Vec<ViewEntry>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    /// Minimal manifest with a symmetric threshold.
    pub fn new(exposure_us: u64, theta: f64, events: impl Into<String>, views: Vec<ViewEntry>) -> Self {
        DatasetManifest {
            exposure_us,
            theta: Some(theta),
            theta_pos: None,
            theta_neg: None,
            events: events.into(),
            poses: None,
            color: ColorMode::Mono,
            gamma: GammaCurve::default(),
            linear_png: false,
            event_span_us: None,
            width: None,
            height: None,
            views,
            extra: Map::new(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn thresholds(&self) -> Result<ThresholdConfig> {
        match (self.theta, self.theta_pos, self.theta_neg) {
            (_, Some(p), Some(n)) => ThresholdConfig::new(p, n),
            (Some(t), None, None) => ThresholdConfig::symmetric(t),
            _ => Err(Error::Dataset(
                "missing key `theta` (or both `theta_pos` and `theta_neg`)".into(),
            )),
        }
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn sensor_size(&self) -> Option<(u16, u16)> {
        self.width.zip(self.height)
    }

    /// Check view timestamps and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.thresholds()?;
        if self.exposure_us == 0 {
            return Err(Error::Dataset("`exposure_us` must be positive".into()));
        }
        if self.views.is_empty() {
            return Err(Error::Dataset("`views` is empty".into()));
        }
        if let Some(i) = self.views.windows(2).position(|w| w[1].t_mid_us <= w[0].t_mid_us) {
            return Err(Error::Dataset(format!(
                "views[{}].t_mid_us = {} is not after the previous view's {}",
                i + 1,
                self.views[i + 1].t_mid_us,
                self.views[i].t_mid_us
            )));
        }
        if let Some([a, b]) = self.event_span_us {
            if b <= a {
                return Err(Error::Dataset(format!("`event_span_us` [{a}, {b}] is empty")));
            }
        }
        let check = |key: String, rel: &str| -> Result<()> {
            let p = self.resolve(rel);
            if p.is_file() {
                Ok(())
            } else {
                Err(Error::Dataset(format!("{key}: file not found: {}", p.display())))
            }
        };
        check("events".into(), &self.events)?;
        if let Some(p) = &self.poses {
            check("poses".into(), p)?;
        }
        for (i, v) in self.views.iter().enumerate() {
            check(format!("views[{i}].blur"), &v.blur)?;
            if let Some(s) = &v.sharp {
                check(format!("views[{i}].sharp"), s)?;
            }
        }
        Ok(())
    }

    pub fn has_ground_truth(&self) -> bool {
        !self.views.is_empty() && self.views.iter().all(|v| v.sharp.is_some())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Parse without touching the file system.
    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::format(path, format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::format(path, "manifest must be a JSON object"))?;
        for key in ["exposure_us", "events", "views"] {
            if !obj.contains_key(key) {
                return Err(Error::format(path, format!("missing required key `{key}`")));
            }
        }
        if !obj.contains_key("theta") && !(obj.contains_key("theta_pos") && obj.contains_key("theta_neg")) {
            return Err(Error::format(
                path,
                "missing required key `theta` (or both `theta_pos` and `theta_neg`)",
            ));
        }
        if let Some(views) = obj.get("views").and_then(Value::as_array) {
            for (i, v) in views.iter().enumerate() {
                for key in ["t_mid_us", "blur"] {
                    if v.get(key).is_none() {
                        return Err(Error::format(path, format!("missing required key `views[{i}].{key}`")));
                    }
                }
            }
        }
        let mut m: DatasetManifest =
            serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }
}

/// Read and validate a manifest; relative paths resolve against its directory.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m = DatasetManifest::from_json(path, &text)?;
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<()> {
    fs::write(path, m.to_json()).map_err(|e| Error::io(path, e))
}

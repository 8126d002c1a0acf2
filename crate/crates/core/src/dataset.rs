//! A manifest with its files loaded: events, linear-domain view images and
//! the optional pose track.

use std::path::{Path, PathBuf};

use crate::dataio::{self, read_events, read_image_linear, read_poses, DatasetManifest, ReadOptions};
use crate::error::{Error, Result};
use crate::events::{ColorMode, EventStream, ThresholdConfig};
use crate::geometry::PoseTrack;
use crate::image::{GammaCurve, ImageBuffer};
use crate::integrator::{self, Exposure};

#[derive(Clone, Debug)]
pub struct View {
    pub t_mid: u64,
    /// Linear domain.
    pub blur: ImageBuffer,
    /// Linear domain.
    pub sharp: Option<ImageBuffer>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub events: EventStream,
    pub poses: Option<PoseTrack>,
    pub views: Vec<View>,
    pub thresholds: ThresholdConfig,
}

impl Dataset {
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = dataio::read_manifest(manifest_path)?;
        Self::from_manifest(manifest)
    }

    pub fn from_manifest(manifest: DatasetManifest) -> Result<Self> {
        manifest.validate()?;
        let thresholds = manifest.thresholds()?;
        let events = read_events(&manifest.resolve(&manifest.events), manifest.sensor_size())?;
        let poses = match &manifest.poses {
            Some(p) => Some(read_poses(&manifest.resolve(p))?),
            None => None,
        };
        let opts = ReadOptions {
            gamma: manifest.gamma,
            png_is_linear: manifest.linear_png,
        };
        let load = |rel: &str, key: String| -> Result<ImageBuffer> {
            let path = manifest.resolve(rel);
            let img = read_image_linear(&path, opts)?;
            check_image(&img, &events, manifest.color, &key, &path)?;
            Ok(img)
        };
        let views = manifest
            .views
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(View {
                    t_mid: v.t_mid_us,
                    blur: load(&v.blur, format!("views[{i}].blur"))?,
                    sharp: match &v.sharp {
                        Some(s) => Some(load(s, format!("views[{i}].sharp"))?),
                        None => None,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset {
            manifest,
            events,
            poses,
            views,
            thresholds,
        };
        for i in 0..ds.views.len() {
            ds.check_coverage(i)?;
        }
        Ok(ds)
    }

    pub fn tau(&self) -> u64 {
        self.manifest.exposure_us
    }

    pub fn color(&self) -> ColorMode {
        self.manifest.color
    }

    pub fn gamma(&self) -> GammaCurve {
        self.manifest.gamma
    }

    pub fn exposure(&self, view: usize) -> Result<Exposure> {
        let v = self
            .views
            .get(view)
            .ok_or_else(|| Error::arg(format!("view {view} out of range (dataset has {})", self.views.len())))?;
        Exposure::new(v.t_mid, self.tau())
    }

    /// Time interval the event recording covers: the manifest's
    /// `event_span_us` when present, else the observed event times.
    pub fn event_span(&self) -> Option<(u64, u64)> {
        match self.manifest.event_span_us {
            Some([a, b]) => Some((a, b)),
            None => self.events.time_range().map(|(a, b)| (a, b + 1)),
        }
    }

    /// A view's exposure must lie inside the recorded event interval. With
    /// no declared span and no events at all the scene is taken as static.
    fn check_coverage(&self, view: usize) -> Result<()> {
        let exp = self
            .exposure(view)
            .map_err(|e| Error::Dataset(format!("views[{view}]: {e}")))?;
        let Some((a, b)) = self.event_span() else {
            return Ok(());
        };
        let (lo, hi) = exp.integer_bounds();
        if lo < a || hi > b {
            return Err(Error::Dataset(format!(
                "views[{view}] (t_mid {} us): exposure [{lo}, {hi}) us is not covered by events recorded over [{a}, {b}) us",
                self.views[view].t_mid
            )));
        }
        Ok(())
    }
}

fn check_image(img: &ImageBuffer, events: &EventStream, color: ColorMode, key: &str, path: &Path) -> Result<()> {
    if img.width() != events.width() as usize || img.height() != events.height() as usize {
        return Err(Error::Dataset(format!(
            "{key} ({}): image {}x{} does not match sensor {}x{}",
            path.display(),
            img.width(),
            img.height(),
            events.width(),
            events.height()
        )));
    }
    if matches!(color, ColorMode::Bayer(_)) && img.channels() != 1 {
        return Err(Error::Dataset(format!(
            "{key} ({}): Bayer datasets store 1-channel mosaics, got {} channels",
            path.display(),
            img.channels()
        )));
    }
    Ok(())
}

/// Mid-exposure deblurred image for every view, linear domain. Bayer
/// datasets yield mosaics, so each pixel carries its own channel.
pub fn edi_prior_images(ds: &Dataset, thr: ThresholdConfig) -> Result<Vec<ImageBuffer>> {
    ds.views
        .iter()
        .map(|v| integrator::edi_deblur(&v.blur, &ds.events, v.t_mid, ds.tau(), thr, ds.color()))
        .collect()
}

/// Write `edi_NNNN.pfm` per view into `out_dir`; returns the paths.
pub fn write_edi_priors(ds: &Dataset, thr: ThresholdConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let priors = edi_prior_images(ds, thr)?;
    priors
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let p = out_dir.join(format!("edi_{i:04}.pfm"));
            dataio::images::write_pfm(&p, img)?;
            Ok(p)
        })
        .collect()
}

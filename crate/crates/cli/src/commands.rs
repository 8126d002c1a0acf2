use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use evdi::calibrate::{self, FitOptions, ThresholdSearch};
use evdi::dataio::{self, ReadOptions};
use evdi::image::{to_gamma, Domain};
use evdi::integrator::{self, Exposure};
use evdi::simulator::{self, FrameSequence, SimulatorConfig};
use evdi::{ColorMode, Dataset, ImageBuffer, ThresholdConfig};

use crate::{CalibrateArgs, DeblurArgs, EvaluateArgs, MetricDomain, PriorsArgs, ReconstructArgs, SimulateArgs};

/// A failed command, carrying its exit status class.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<evdi::Error> for Failure {
    fn from(e: evdi::Error) -> Self {
        match e {
            evdi::Error::InvalidArgument(_) | evdi::Error::OutOfRange { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> CmdResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be > 0, got {v}")))
    }
}

fn ms_to_us(name: &str, ms: f64) -> CmdResult<u64> {
    let us = (positive(name, ms)? * 1000.0).round();
    if us < 1.0 {
        return Err(usage(format!("--{name} {ms} ms is below one microsecond")));
    }
    Ok(us as u64)
}

fn thresholds(theta: Option<f64>, ds: &Dataset) -> CmdResult<ThresholdConfig> {
    match theta {
        Some(t) => Ok(ThresholdConfig::symmetric(positive("theta", t)?)?),
        None => Ok(ds.thresholds),
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_view(manifest: &Path, view: usize) -> CmdResult<Dataset> {
    let ds = Dataset::load(manifest)?;
    if view >= ds.views.len() {
        return Err(usage(format!(
            "--view {view} out of range: dataset has {} view(s)",
            ds.views.len()
        )));
    }
    Ok(ds)
}

/// Linear latent written as `<stem>.pfm` plus a 16-bit gamma `<stem>.png`.
fn write_latent(stem: &Path, img: &ImageBuffer, ds: &Dataset) -> CmdResult<[PathBuf; 2]> {
    let pfm = stem.with_extension("pfm");
    let png = stem.with_extension("png");
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    dataio::write_image(&pfm, img, ds.gamma(), 16)?;
    dataio::write_image(&png, img, ds.gamma(), 16)?;
    Ok([pfm, png])
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    positive("fps", a.fps)?;
    let tau = ms_to_us("exposure-ms", a.exposure_ms)?;
    let period = match a.period_ms {
        Some(p) => ms_to_us("period-ms", p)?,
        None => tau,
    };
    let thr = ThresholdConfig::new(positive("theta", a.theta)?, positive("theta-neg", a.theta_neg.unwrap_or(a.theta))?)?;
    let color: ColorMode = a.mode.parse()?;
    if !a.frames.is_dir() {
        return Err(usage(format!("--frames {}: not a directory", a.frames.display())));
    }
    let opts = ReadOptions {
        png_is_linear: a.linear_png,
        ..ReadOptions::default()
    };
    let seq = FrameSequence::load_dir(&a.frames, a.fps, opts)?;
    log::info!("loaded {} frames of {}x{}", seq.len(), seq.width(), seq.height());
    let mut cfg = SimulatorConfig::new(thr, color);
    cfg.refractory_us = a.refractory_us;
    create_dir(&a.out)?;
    let m = simulator::render_dataset(&seq, tau, period, &cfg, &a.out)?;
    let events = dataio::read_events(&m.resolve(&m.events), m.sensor_size())?;
    println!("views {}", m.views.len());
    println!("events {}", events.len());
    Ok(())
}

pub fn deblur(a: &DeblurArgs) -> CmdResult {
    let ds = load_view(&a.manifest, a.view)?;
    let thr = thresholds(a.theta, &ds)?;
    let v = &ds.views[a.view];
    let img = match a.at {
        Some(t) => integrator::reconstruct_video(&v.blur, &ds.events, v.t_mid, ds.tau(), thr, ds.color(), &[t])?
            .pop()
            .expect("one query"),
        None => integrator::edi_deblur(&v.blur, &ds.events, v.t_mid, ds.tau(), thr, ds.color())?,
    };
    for p in write_latent(&a.out, &img, &ds)? {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> CmdResult {
    let rate = positive("rate", a.rate)?;
    let ds = load_view(&a.manifest, a.view)?;
    let thr = thresholds(a.theta, &ds)?;
    let v = &ds.views[a.view];
    let tau = ds.tau();
    let n = ((rate * tau as f64 / 1e6).round() as usize).max(1);
    let exp = Exposure::new(v.t_mid, tau)?;
    let cell = tau as f64 / n as f64;
    let centres: Vec<u64> = (0..n)
        .map(|j| (exp.start() + (j as f64 + 0.5) * cell).round() as u64)
        .collect();
    let frames = if a.instant {
        integrator::reconstruct_video(&v.blur, &ds.events, v.t_mid, tau, thr, ds.color(), &centres)?
    } else {
        integrator::reconstruct_box_frames(&v.blur, &ds.events, v.t_mid, tau, thr, ds.color(), n)?
    };
    create_dir(&a.out)?;
    for (j, f) in frames.iter().enumerate() {
        write_latent(&a.out.join(format!("frame_{j:04}")), f, &ds)?;
    }
    let ts: String = centres.iter().map(|t| format!("{t}\n")).collect();
    write_text(&a.out.join("timestamps.txt"), &ts)?;
    println!("frames {n}");
    Ok(())
}

pub fn calibrate(a: &CalibrateArgs, seed: u64) -> CmdResult {
    positive("theta-min", a.theta_min)?;
    if !(a.theta_max.is_finite() && a.theta_max > a.theta_min) {
        return Err(usage(format!("--theta-max must exceed --theta-min, got {}", a.theta_max)));
    }
    if a.knots < 2 {
        return Err(usage(format!("--knots must be at least 2, got {}", a.knots)));
    }
    let ds = Dataset::load(&a.manifest)?;
    if ds.views.len() < 2 {
        return Err(usage(format!(
            "calibration needs at least 2 views, {} has {}",
            a.manifest.display(),
            ds.views.len()
        )));
    }
    let search = ThresholdSearch {
        lo: a.theta_min,
        hi: a.theta_max,
        asymmetric: a.asymmetric,
        ..ThresholdSearch::default()
    };
    let mut report = calibrate::fit_threshold(&ds, &search)?;
    if a.fit_response {
        let opts = FitOptions {
            n_knots: a.knots,
            seed,
            ..FitOptions::default()
        };
        report.response = Some(calibrate::fit_response(&ds, report.thresholds()?, &opts)?);
    }
    write_text(&a.out, &report.to_json())?;
    print!("{}", report.summary());
    Ok(())
}

fn image_names(dir: &Path) -> CmdResult<BTreeSet<String>> {
    let listing = fs::read_dir(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let mut names = BTreeSet::new();
    for entry in listing {
        let p = entry.map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?.path();
        let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png") | Some("pfm")) {
            names.insert(p.file_name().expect("listed file").to_string_lossy().into_owned());
        }
    }
    Ok(names)
}

fn metric_image(path: &Path, domain: MetricDomain) -> CmdResult<ImageBuffer> {
    let opts = ReadOptions::default();
    let img = dataio::read_image(path, opts)?;
    Ok(match (domain, img.domain()) {
        (MetricDomain::Gamma, Domain::Gamma) | (MetricDomain::Linear, Domain::Linear) => img,
        (MetricDomain::Linear, Domain::Gamma) => dataio::read_image_linear(path, opts)?,
        (MetricDomain::Gamma, Domain::Linear) => to_gamma(&img.clamped(0.0, 1.0), opts.gamma)?,
    })
}

fn list_diff(a: &BTreeSet<String>, b: &BTreeSet<String>) -> String {
    a.difference(b).cloned().collect::<Vec<_>>().join(", ")
}

pub fn evaluate(a: &EvaluateArgs) -> CmdResult {
    let pred = image_names(&a.pred)?;
    let gt = image_names(&a.gt)?;
    if pred != gt {
        return Err(Failure::Data(format!(
            "prediction and ground-truth file sets differ; only in {}: [{}]; only in {}: [{}]",
            a.pred.display(),
            list_diff(&pred, &gt),
            a.gt.display(),
            list_diff(&gt, &pred)
        )));
    }
    if pred.is_empty() {
        return Err(Failure::Data(format!("{}: no PNG or PFM images", a.pred.display())));
    }
    let mut rows = Vec::with_capacity(pred.len());
    for name in &pred {
        let p = metric_image(&a.pred.join(name), a.metric_domain)?;
        let g = metric_image(&a.gt.join(name), a.metric_domain)?;
        if !p.same_shape(&g) {
            return Err(Failure::Data(format!(
                "{name}: shape {}x{}x{} vs ground truth {}x{}x{}",
                p.width(),
                p.height(),
                p.channels(),
                g.width(),
                g.height(),
                g.channels()
            )));
        }
        rows.push((name.clone(), evdi::metrics::psnr(&p, &g)?, evdi::metrics::ssim(&p, &g)?));
    }
    let n = rows.len() as f64;
    let mean_psnr = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let mean_ssim = rows.iter().map(|r| r.2).sum::<f64>() / n;

    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
    let mut table = format!("{:<width$}  {:>8}  {:>8}\n", "image", "psnr_db", "ssim");
    let mut csv = String::from("image,psnr_db,ssim\n");
    for (name, p, s) in rows.iter().map(|r| (r.0.as_str(), r.1, r.2)).chain([("mean", mean_psnr, mean_ssim)]) {
        table.push_str(&format!("{name:<width$}  {p:>8.3}  {s:>8.5}\n"));
        csv.push_str(&format!("{name},{p:.6},{s:.8}\n"));
    }
    // `--out t.csv` puts the table in t.txt
    let csv_path = a.out.with_extension("csv");
    let table_path = if csv_path == a.out { a.out.with_extension("txt") } else { a.out.clone() };
    write_text(&table_path, &table)?;
    write_text(&csv_path, &csv)?;
    print!("{table}");
    Ok(())
}

pub fn priors(a: &PriorsArgs) -> CmdResult {
    let ds = Dataset::load(&a.manifest)?;
    let thr = thresholds(a.theta, &ds)?;
    let paths = evdi::dataset::write_edi_priors(&ds, thr, &a.out)?;
    println!("priors {}", paths.len());
    Ok(())
}

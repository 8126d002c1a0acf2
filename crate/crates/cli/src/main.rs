use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "evdi", version, about = "Event-aided deblurring and synthetic dataset tools")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "EVDI_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for sampled steps (response-fit residual sampling).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LogLevel {
    Off,
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Off => log::LevelFilter::Off,
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a dataset (events, blurry and sharp views, manifest) from a
    /// high-rate frame directory.
    Simulate(SimulateArgs),
    /// Deblur one view to its mid-exposure (or `--at`) latent frame.
    Deblur(DeblurArgs),
    /// Latent video across one view's exposure.
    Reconstruct(ReconstructArgs),
    /// Estimate the contrast threshold and optionally the response curve.
    Calibrate(CalibrateArgs),
    /// PSNR/SSIM of predicted images against ground truth.
    Evaluate(EvaluateArgs),
    /// Write the deblurred prior image of every view as PFM.
    Priors(PriorsArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Directory of numbered PNG/PFM frames (optional timestamps.txt, poses.csv).
    #[arg(long)]
    pub frames: PathBuf,
    /// Frame rate used when the directory has no timestamps.txt.
    #[arg(long, default_value_t = 1000.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 40.0)]
    pub exposure_ms: f64,
    /// Spacing between view mid-exposures; defaults to the exposure.
    #[arg(long)]
    pub period_ms: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub theta: f64,
    /// Negative threshold when it differs from `--theta`.
    #[arg(long)]
    pub theta_neg: Option<f64>,
    /// `mono`, `bayer` (RGGB) or `bayer:<layout>`.
    #[arg(long, default_value = "mono")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub refractory_us: u64,
    /// Frame PNGs hold linear values rather than gamma-encoded ones.
    #[arg(long)]
    pub linear_png: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DeblurArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub view: usize,
    /// Defaults to the manifest's threshold.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Output timestamp in microseconds instead of mid-exposure.
    #[arg(long)]
    pub at: Option<u64>,
    /// Output path; `.pfm` and `.png` siblings are written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub view: usize,
    /// Output frame rate in Hz.
    #[arg(long)]
    pub rate: f64,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Point samples at cell centres instead of cell-averaged frames.
    #[arg(long)]
    pub instant: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also fit the per-polarity response curve at the estimated threshold.
    #[arg(long)]
    pub fit_response: bool,
    /// Refine separate positive and negative thresholds.
    #[arg(long)]
    pub asymmetric: bool,
    #[arg(long, default_value_t = evdi::calibrate::DEFAULT_BRACKET.0)]
    pub theta_min: f64,
    #[arg(long, default_value_t = evdi::calibrate::DEFAULT_BRACKET.1)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 8)]
    pub knots: usize,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricDomain {
    Gamma,
    Linear,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Plain-text table; a CSV copy goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricDomain::Gamma)]
    pub metric_domain: MetricDomain,
}

#[derive(Args, Debug)]
pub struct PriorsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Deblur(a) => commands::deblur(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Calibrate(a) => commands::calibrate(&a, cli.seed),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Priors(a) => commands::priors(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
        Err(_) => {
            eprintln!("error: internal assertion failed");
            ExitCode::from(3)
        }
    }
}

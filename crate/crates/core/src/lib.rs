//! Event-aided motion deblurring toolkit.
//!
//! Exact event single and double integrals for deblurring blurry frames
//! with the events recorded during their exposure, an ESIM-style event
//! simulator with blur synthesis, contrast-threshold and response-curve
//! calibration, pose interpolation and the file formats that tie them
//! together.

pub mod calibrate;
pub mod dataio;
pub mod dataset;
pub mod error;
pub mod events;
pub mod geometry;
pub mod image;
pub mod integrator;
pub mod metrics;
pub mod simulator;

pub use dataset::{Dataset, View};
pub use error::{Error, Result};
pub use events::{BayerPattern, Channel, ColorMode, Event, EventStream, ThresholdConfig};
pub use geometry::{Pose, PoseTrack, Quat};
pub use image::{Domain, GammaCurve, ImageBuffer};

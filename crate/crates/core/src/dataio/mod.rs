//! File formats: EVT1/CSV events, PNG/PFM images, pose CSV and the JSON
//! dataset manifest.

pub mod events;
pub mod images;
pub mod manifest;
pub mod poses;

pub use events::{read_events, write_events};
pub use images::{read_image, read_image_linear, write_image, ReadOptions};
pub use manifest::{read_manifest, write_manifest, DatasetManifest, ViewEntry};
pub use poses::{read_poses, write_poses};

//! Labelled reverberant-speech dataset synthesis.

pub mod airset;
pub mod build;
pub mod calibration;
pub mod config;
pub mod manifest;
pub mod mix;
pub mod segment;

pub use airset::{generate_air_set, AugmentedAir};
pub use build::{build_dataset, regenerate_row};
pub use calibration::{fit_calibration, Calibration, CalibrationSet};
pub use config::{PipelineConfig, CONFIG_SCHEMA};
pub use manifest::{read_rows, Manifest, ManifestHeader, ManifestRow, Partition};
pub use mix::{mix_parts, mix_sample, select_segment, MixParts, MixRecipe};
pub use segment::{segment_corpus, segment_signal, Segment};

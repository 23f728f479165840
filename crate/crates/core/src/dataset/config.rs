use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::calibration::CalibrationSet;
use crate::error::{Error, Result};

/// JSON schema every pipeline config is checked against before use.
pub const CONFIG_SCHEMA: &str = include_str!("../../schema/pipeline_config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSources {
    #[serde(default = "defaults::speakers")]
    pub speakers: usize,
    #[serde(default = "defaults::files_per_speaker")]
    pub files_per_speaker: usize,
    #[serde(default = "defaults::file_duration")]
    pub file_duration: f64,
    #[serde(default = "defaults::noise_files")]
    pub noise_files: usize,
    #[serde(default = "defaults::noise_duration")]
    pub noise_duration: f64,
    #[serde(default = "defaults::airs")]
    pub airs: usize,
}

impl Default for SyntheticSources {
    fn default() -> Self {
        SyntheticSources {
            speakers: defaults::speakers(),
            files_per_speaker: defaults::files_per_speaker(),
            file_duration: defaults::file_duration(),
            noise_files: defaults::noise_files(),
            noise_duration: defaults::noise_duration(),
            airs: defaults::airs(),
        }
    }
}

/// Source material. Directories take precedence; anything not given by a
/// directory is generated when `synthetic` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Sources {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speech_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSources>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for PartitionFractions {
    fn default() -> Self {
        PartitionFractions {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl PartitionFractions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "defaults::sample_rate")]
    pub sample_rate: u32,
    pub sources: Sources,
    #[serde(default)]
    pub partitions: PartitionFractions,
    #[serde(default = "defaults::chunk")]
    pub speech_chunk: f64,
    #[serde(default = "defaults::chunk")]
    pub noise_chunk: f64,
    #[serde(default = "defaults::segment_length")]
    pub segment_length: f64,
    #[serde(default = "defaults::target_loudness")]
    pub target_loudness: f64,
    #[serde(default = "defaults::augmentations_per_air")]
    pub augmentations_per_air: usize,
    #[serde(default = "defaults::mixes_per_segment")]
    pub mixes_per_segment: usize,
    #[serde(default = "defaults::t60_range")]
    pub t60_range: [f64; 2],
    #[serde(default = "defaults::drr_range")]
    pub drr_range: [f64; 2],
    #[serde(default = "defaults::snr_range")]
    pub snr_range: [f64; 2],
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub log_level: Option<String>,
    #[serde(default)]
    pub calibration: Option<CalibrationSet>,
}

mod defaults {
    pub fn sample_rate() -> u32 {
        16_000
    }
    pub fn chunk() -> f64 {
        8.0
    }
    pub fn segment_length() -> f64 {
        4.0
    }
    pub fn target_loudness() -> f64 {
        -23.0
    }
    pub fn augmentations_per_air() -> usize {
        500
    }
    pub fn mixes_per_segment() -> usize {
        100
    }
    pub fn t60_range() -> [f64; 2] {
        [0.1, 1.5]
    }
    pub fn drr_range() -> [f64; 2] {
        [-6.0, 18.0]
    }
    pub fn snr_range() -> [f64; 2] {
        [-5.0, 20.0]
    }
    pub fn speakers() -> usize {
        2
    }
    pub fn files_per_speaker() -> usize {
        1
    }
    pub fn file_duration() -> f64 {
        16.0
    }
    pub fn noise_files() -> usize {
        3
    }
    pub fn noise_duration() -> f64 {
        16.0
    }
    pub fn airs() -> usize {
        2
    }
}

impl PipelineConfig {
    /// Desk-scale config generating everything synthetically.
    pub fn synthetic(master_seed: u64) -> Self {
        PipelineConfig {
            sample_rate: defaults::sample_rate(),
            sources: Sources {
                synthetic: Some(SyntheticSources::default()),
                ..Sources::default()
            },
            partitions: PartitionFractions::default(),
            speech_chunk: defaults::chunk(),
            noise_chunk: defaults::chunk(),
            segment_length: defaults::segment_length(),
            target_loudness: defaults::target_loudness(),
            augmentations_per_air: 10,
            mixes_per_segment: 5,
            t60_range: defaults::t60_range(),
            drr_range: defaults::drr_range(),
            snr_range: defaults::snr_range(),
            master_seed,
            threads: None,
            log_level: None,
            calibration: None,
        }
    }

    /// Parse and validate a config document: schema first, then the
    /// cross-field rules the schema cannot express.
    pub fn from_json(doc: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(doc)?;
        validate_against_schema(&value)?;
        let cfg: PipelineConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&doc)
    }

    pub fn validate(&self) -> Result<()> {
        validate_against_schema(&serde_json::to_value(self)?)?;
        let ordered = |name: &str, r: [f64; 2]| {
            if r[0] <= r[1] {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be [low, high], got {r:?}")))
            }
        };
        ordered("t60_range", self.t60_range)?;
        ordered("drr_range", self.drr_range)?;
        ordered("snr_range", self.snr_range)?;
        let total: f64 = self.partitions.as_array().iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "partition fractions must sum to 1, got {total}"
            )));
        }
        if self.segment_length > self.speech_chunk {
            return Err(Error::Config(
                "segment_length cannot exceed speech_chunk".into(),
            ));
        }
        let s = &self.sources;
        let covered = |dir: &Option<PathBuf>| dir.is_some() || s.synthetic.is_some();
        if !(covered(&s.speech_dir) && covered(&s.noise_dir) && covered(&s.air_dir)) {
            return Err(Error::Config(
                "speech, noise and AIR sources each need a directory or the synthetic block".into(),
            ));
        }
        Ok(())
    }
}

pub fn validate_against_schema(value: &serde_json::Value) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA)?;
    let compiled = jsonschema::JSONSchema::compile(&schema)
        .map_err(|e| Error::Config(format!("schema does not compile: {e}")))?;
    if let Err(errors) = compiled.validate(value) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{}: {}", e.instance_path, e))
            .collect();
        return Err(Error::Config(msgs.join("; ")));
    }
    Ok(())
}

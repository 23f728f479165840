//! Impulse-response container, direct-path localization and the early/late
//! partition used for DRR measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the early window around the direct path, in seconds.
pub const DIRECT_TOLERANCE: f64 = 0.0025;

/// A single-channel acoustic impulse response (or any mono signal) held in
/// double precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Air {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Air {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Degenerate("signal is empty".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite sample at index {i}")));
        }
        Ok(Air {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    /// Multiply every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Air {
        Air {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Build a sibling signal at the same rate. Internal constructors that
    /// already guarantee finiteness go through here.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Air {
        Air {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate: u32) -> Air {
        debug_assert!(sample_rate > 0);
        Air {
            samples,
            sample_rate,
        }
    }

    pub(crate) fn seconds_to_samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate as f64).round().max(0.0) as usize
    }
}

pub(crate) fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Early response and late field of an [`Air`], partitioned around the
/// direct path.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyLateSplit {
    pub early: Air,
    pub late: Air,
    pub direct_index: usize,
    /// Half-width of the early window in seconds.
    pub tolerance: f64,
    /// Inclusive sample range of the early window after edge truncation.
    pub early_range: (usize, usize),
}

impl EarlyLateSplit {
    pub fn early_energy(&self) -> f64 {
        self.early.energy()
    }

    pub fn late_energy(&self) -> f64 {
        self.late.energy()
    }
}

/// Index of the largest absolute sample. Ties go to the earliest index.
pub fn find_direct_path(air: &Air) -> Result<usize> {
    let mut best = 0usize;
    let mut peak = 0.0f64;
    for (i, &x) in air.samples.iter().enumerate() {
        if x.abs() > peak {
            peak = x.abs();
            best = i;
        }
    }
    if peak == 0.0 {
        return Err(Error::Degenerate("signal is all zeros".into()));
    }
    Ok(best)
}

pub fn split_early_late(air: &Air, tolerance: f64) -> Result<EarlyLateSplit> {
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be non-negative, got {tolerance}"
        )));
    }
    let direct_index = find_direct_path(air)?;
    let half = air.seconds_to_samples(tolerance);
    let lo = direct_index.saturating_sub(half);
    let hi = (direct_index + half).min(air.len() - 1);

    let mut early = vec![0.0; air.len()];
    let mut late = air.samples.clone();
    early[lo..=hi].copy_from_slice(&air.samples[lo..=hi]);
    late[lo..=hi].iter_mut().for_each(|x| *x = 0.0);

    Ok(EarlyLateSplit {
        early: air.with_samples(early),
        late: air.with_samples(late),
        direct_index,
        tolerance,
        early_range: (lo, hi),
    })
}

/// Direct-to-reverberant ratio in dB.
pub fn measure_drr(split: &EarlyLateSplit) -> Result<f64> {
    let late = split.late_energy();
    if late <= 0.0 {
        return Err(Error::Anechoic);
    }
    Ok(10.0 * (split.early_energy() / late).log10())
}

/// Convenience: split with the default tolerance and measure DRR.
pub fn drr_of(air: &Air) -> Result<f64> {
    measure_drr(&split_early_late(air, DIRECT_TOLERANCE)?)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::air::Air;
use crate::convolve::convolve;
use crate::error::{Error, Result};
use crate::levels::{active_speech_level, rms_level};
use crate::rng::stream_rng;

/// Everything needed to regenerate one mixture from its source files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRecipe {
    pub speech_ref: String,
    pub air_ref: String,
    pub noise_ref: String,
    /// Active speech level of the reverberant speech over noise RMS, dB.
    pub snr: f64,
    /// Circular shift applied to the noise, in samples.
    pub noise_shift: usize,
    pub segment_start: usize,
    pub segment_len: usize,
    pub seed: u64,
}

/// Components of a full-length mixture before segment extraction.
#[derive(Debug, Clone)]
pub struct MixParts {
    pub reverberant: Vec<f64>,
    /// Shifted noise, already scaled by `noise_gain`.
    pub noise: Vec<f64>,
    pub speech_level: f64,
    pub noise_rms: f64,
    pub noise_gain: f64,
}

impl MixParts {
    pub fn mixture(&self) -> Vec<f64> {
        self.reverberant
            .iter()
            .zip(&self.noise)
            .map(|(s, n)| s + n)
            .collect()
    }
}

/// Convolve speech with the AIR and add circularly shifted noise scaled to
/// the requested SNR.
pub fn mix_parts(speech: &Air, air: &Air, noise: &Air, snr: f64, noise_shift: usize) -> Result<MixParts> {
    for sig in [air, noise] {
        if sig.sample_rate() != speech.sample_rate() {
            return Err(Error::RateMismatch {
                expected: speech.sample_rate(),
                actual: sig.sample_rate(),
            });
        }
    }
    let reverberant = convolve(speech.samples(), air.samples());
    let n = noise.samples();
    let shifted: Vec<f64> = (0..reverberant.len())
        .map(|i| n[(i + noise_shift) % n.len()])
        .collect();

    let speech_level = active_speech_level(&Air::from_parts(reverberant.clone(), speech.sample_rate()))?.value;
    let noise_rms = rms_level(&Air::from_parts(shifted.clone(), speech.sample_rate()));
    if noise_rms.silent {
        return Err(Error::Silence);
    }
    let noise_gain = 10f64.powf((speech_level - noise_rms.value - snr) / 20.0);
    Ok(MixParts {
        reverberant,
        noise: shifted.into_iter().map(|v| v * noise_gain).collect(),
        speech_level,
        noise_rms: noise_rms.value,
        noise_gain,
    })
}

/// The mixture segment described by `recipe`.
pub fn mix_sample(recipe: &MixRecipe, speech: &Air, air: &Air, noise: &Air) -> Result<Air> {
    let full = mix_parts(speech, air, noise, recipe.snr, recipe.noise_shift)?.mixture();
    let end = recipe.segment_start + recipe.segment_len;
    if end > full.len() {
        return Err(Error::InvalidArgument(format!(
            "segment [{}, {end}) exceeds mixture of {} samples",
            recipe.segment_start,
            full.len()
        )));
    }
    Air::new(full[recipe.segment_start..end].to_vec(), speech.sample_rate())
}

pub const SEGMENT_TRIES: usize = 100;
/// Segments more than this far below the full-signal RMS are redrawn.
pub const SEGMENT_GATE_DB: f64 = 20.0;

/// Random start of a `length`-sample window whose RMS is within
/// `SEGMENT_GATE_DB` of the whole signal's. After `SEGMENT_TRIES` misses
/// the loudest window drawn so far is returned.
pub fn select_segment(mixture: &[f64], length: usize, seed: u64) -> usize {
    if mixture.len() <= length || length == 0 {
        return 0;
    }
    let mut prefix = Vec::with_capacity(mixture.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in mixture {
        acc += v * v;
        prefix.push(acc);
    }
    let full_ms = acc / mixture.len() as f64;
    let gate = full_ms * 10f64.powf(-SEGMENT_GATE_DB / 10.0);

    let mut rng = stream_rng(seed);
    let mut best = (0usize, f64::NEG_INFINITY);
    for _ in 0..SEGMENT_TRIES {
        let start = rng.gen_range(0..=mixture.len() - length);
        let ms = (prefix[start + length] - prefix[start]) / length as f64;
        if ms >= gate {
            return start;
        }
        if ms > best.1 {
            best = (start, ms);
        }
    }
    best.0
}

//! Synthetic signals: decay-model impulse responses, a speech-like surrogate
//! and white noise. Used by the self-contained dataset mode and by tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::air::{Air, DIRECT_TOLERANCE};
use crate::rng::{gaussian, stream_rng};

/// Parameters of an exponentially decaying noise field with an additive
/// stationary floor. The floor is drawn independently of the decay noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySignal {
    pub level: f64,
    pub tau: f64,
    pub noise_floor: f64,
    pub onset: f64,
    pub duration: f64,
    pub sample_rate: u32,
}

pub fn decay_signal(spec: &DecaySignal, seed: u64) -> Air {
    let fs = spec.sample_rate as f64;
    let n = (spec.duration * fs).round() as usize;
    let mut rng = stream_rng(seed);
    let decay = gaussian(&mut rng, n);
    let floor = gaussian(&mut rng, n);
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let d = if t >= spec.onset {
                spec.level * (-(t - spec.onset) / spec.tau).exp() * decay[i]
            } else {
                0.0
            };
            d + spec.noise_floor * floor[i]
        })
        .collect();
    Air::from_parts(x, spec.sample_rate)
}

/// A synthetic room impulse response: a direct-path spike followed by a
/// decaying late field and a noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAir {
    pub t60: f64,
    /// Approximate DRR; the direct amplitude is set from the late-field
    /// energy, the floor inside the early window is ignored.
    pub drr: f64,
    pub noise_floor: f64,
    pub direct_delay: f64,
    pub duration: f64,
    pub sample_rate: u32,
}

impl SyntheticAir {
    pub fn new(t60: f64, drr: f64, sample_rate: u32) -> Self {
        SyntheticAir {
            t60,
            drr,
            noise_floor: 1e-3,
            direct_delay: 0.01,
            duration: 0.01 + 1.5 * t60 + 0.3,
            sample_rate,
        }
    }

    pub fn tau(&self) -> f64 {
        self.t60 / 1000f64.ln()
    }

    pub fn direct_index(&self) -> usize {
        (self.direct_delay * self.sample_rate as f64).round() as usize
    }

    pub fn generate(&self, seed: u64) -> Air {
        let fs = self.sample_rate as f64;
        let direct = self.direct_index();
        let tol = (DIRECT_TOLERANCE * fs).round() as usize;
        let onset = (direct + tol + 1) as f64 / fs;
        let late = decay_signal(
            &DecaySignal {
                level: 1.0,
                tau: self.tau(),
                noise_floor: self.noise_floor,
                onset,
                duration: self.duration,
                sample_rate: self.sample_rate,
            },
            seed,
        );
        let mut x = late.into_samples();
        let late_energy: f64 = x[direct + tol + 1..].iter().map(|v| v * v).sum();
        let amp = (10f64.powf(self.drr / 10.0) * late_energy).sqrt();
        x[direct] = amp;
        Air::from_parts(x, self.sample_rate)
    }
}

/// Speech-like surrogate: one-pole coloured noise gated into syllables and
/// phrases with pauses. `tilt` in [0, 1) sets the low-pass colouring.
pub fn speech_surrogate(duration: f64, sample_rate: u32, tilt: f64, seed: u64) -> Air {
    let fs = sample_rate as f64;
    let n = (duration * fs).round() as usize;
    let mut rng = stream_rng(seed);
    let white = gaussian(&mut rng, n);
    let mut coloured = Vec::with_capacity(n);
    let mut state = 0.0;
    for w in white {
        state = tilt * state + (1.0 - tilt) * w;
        coloured.push(state);
    }

    let mut gate = vec![0.0; n];
    let mut pos = (rng.gen_range(0.05..0.3) * fs) as usize;
    while pos < n {
        let phrase_end = pos + (rng.gen_range(1.0..3.0) * fs) as usize;
        while pos < phrase_end.min(n) {
            let syl = (rng.gen_range(0.12..0.3) * fs) as usize;
            let amp = rng.gen_range(0.5..1.0);
            for k in 0..syl.min(n - pos) {
                let phase = std::f64::consts::PI * k as f64 / syl as f64;
                gate[pos + k] = amp * phase.sin();
            }
            pos += syl + (rng.gen_range(0.02..0.08) * fs) as usize;
        }
        pos += (rng.gen_range(0.3..0.8) * fs) as usize;
    }
    let x = coloured.iter().zip(&gate).map(|(c, g)| 0.3 * c * g).collect();
    Air::from_parts(x, sample_rate)
}

pub fn white_noise(duration: f64, sample_rate: u32, rms: f64, seed: u64) -> Air {
    let n = (duration * sample_rate as f64).round() as usize;
    let x = gaussian(&mut stream_rng(seed), n)
        .into_iter()
        .map(|g| rms * g)
        .collect();
    Air::from_parts(x, sample_rate)
}

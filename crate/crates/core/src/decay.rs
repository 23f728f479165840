//! Two-stage decay model: an exponentially decaying late field plus a
//! stationary noise floor.
//!
//! The model envelope is `10·log10(A²·exp(-2(t-t0)/τ) + σ²)`. It is fitted
//! to a short-time energy envelope by simplex descent in the log domain, and
//! the fit is then used to replace the noise-floor-dominated tail with a
//! synthesized noise-free continuation.

use std::f64::consts::{FRAC_PI_2, LN_10};

use serde::{Deserialize, Serialize};

use crate::air::{find_direct_path, Air, DIRECT_TOLERANCE};
use crate::error::{Error, Result};
use crate::rng::{gaussian, stream_rng};
use crate::simplex;

pub const FRAME_LEN: f64 = 0.010;
pub const FRAME_HOP: f64 = 0.005;
pub const ENVELOPE_FLOOR_DB: f64 = -120.0;
/// Length of the raised-cosine splice at the noise-floor onset.
pub const CROSSFADE: f64 = 0.010;

const MAX_ITERATIONS: usize = 500;
const STEP_TOLERANCE: f64 = 1e-4;
const MIN_FIT_SPAN: f64 = 0.100;
const DB_PER_NEPER: f64 = 20.0 / LN_10;

const LN_TAU_MIN: f64 = -6.907_755_278_982_137; // ln(1e-3)
const LN_TAU_MAX: f64 = 4.605_170_185_988_092; // ln(100)
const LN_SIGMA_MIN: f64 = -18.420_680_743_952_367; // ln(1e-8)
const LN_LEVEL_LIMIT: f64 = 50.0;

/// Fitted parameters of the decay model for one (sub)band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    /// Amplitude of the decaying term at the onset (linear RMS).
    pub level: f64,
    /// Amplitude time constant in seconds.
    pub tau: f64,
    /// RMS level of the stationary noise floor (linear).
    pub noise_floor: f64,
    /// Late-field onset in seconds from the start of the signal.
    pub onset: f64,
    /// Subband index, `None` for fullband.
    pub band_index: Option<usize>,
    pub sample_period: f64,
    /// Duration of the signal the model was fitted to, in seconds.
    pub duration: f64,
}

impl DecayModel {
    pub fn t60(&self) -> f64 {
        measure_t60(self)
    }

    /// Model envelope in dB at time `t` (seconds).
    pub fn envelope_db(&self, t: f64) -> f64 {
        let decay = if t >= self.onset {
            self.level * self.level * (-2.0 * (t - self.onset) / self.tau).exp()
        } else {
            0.0
        };
        10.0 * (decay + self.noise_floor * self.noise_floor).log10()
    }
}

/// Short-time energy in dB, one value per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEnvelope {
    pub frames: Vec<f64>,
    pub frame_len: f64,
    pub frame_hop: f64,
    pub sample_rate: u32,
    /// Duration of the analysed signal in seconds.
    pub duration: f64,
}

impl EnergyEnvelope {
    /// Center time of frame `i` in seconds.
    pub fn frame_time(&self, i: usize) -> f64 {
        let hop = (self.frame_hop * self.sample_rate as f64).round();
        let len = (self.frame_len * self.sample_rate as f64).round();
        (i as f64 * hop + 0.5 * len) / self.sample_rate as f64
    }
}

/// Outcome of a decay fit, including the diagnostics exported per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub rms_error_db: f64,
    pub iterations: usize,
    /// False when the envelope shows no decay worth the name: the fitted
    /// decay starts less than 10 dB above the floor, or tau exceeds the
    /// fitted span.
    pub decay_observed: bool,
}

pub fn compute_envelope(signal: &Air, frame_len: f64, frame_hop: f64) -> Result<EnergyEnvelope> {
    if !(frame_hop > 0.0 && frame_len >= frame_hop) {
        return Err(Error::InvalidArgument(format!(
            "need frame_len >= frame_hop > 0, got {frame_len} / {frame_hop}"
        )));
    }
    let fs = signal.sample_rate() as f64;
    let len = ((frame_len * fs).round() as usize).max(1);
    let hop = ((frame_hop * fs).round() as usize).max(1);
    let x = signal.samples();
    if x.len() < len {
        return Err(Error::Degenerate(format!(
            "signal of {} samples is shorter than one {len}-sample frame",
            x.len()
        )));
    }
    let count = 1 + (x.len() - len) / hop;
    let frames = (0..count)
        .map(|i| {
            let frame = &x[i * hop..i * hop + len];
            let ms = frame.iter().map(|v| v * v).sum::<f64>() / len as f64;
            (10.0 * ms.log10()).max(ENVELOPE_FLOOR_DB)
        })
        .collect();
    Ok(EnergyEnvelope {
        frames,
        frame_len,
        frame_hop,
        sample_rate: signal.sample_rate(),
        duration: signal.duration(),
    })
}

#[inline]
fn model_db(params: &[f64; 3], dt: f64) -> f64 {
    let decay = 2.0 * params[0] - 2.0 * dt * (-params[1]).exp();
    let floor = 2.0 * params[2];
    let (hi, lo) = if decay > floor { (decay, floor) } else { (floor, decay) };
    (10.0 / LN_10) * (hi + (lo - hi).exp().ln_1p())
}

fn clamp_params(p: &[f64; 3]) -> [f64; 3] {
    [
        p[0].clamp(-LN_LEVEL_LIMIT, LN_LEVEL_LIMIT),
        p[1].clamp(LN_TAU_MIN, LN_TAU_MAX),
        p[2].clamp(LN_SIGMA_MIN, LN_LEVEL_LIMIT),
    ]
}

fn linear_fit(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mt)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Starting point from a two-piece linear reading of the dB envelope:
/// tail median gives the floor, the slope of the head gives tau, its
/// intercept gives the level.
fn initial_guess(ts: &[f64], ys: &[f64], span: f64) -> [f64; 3] {
    let n = ts.len();
    let tail = (n / 5).max(3).min(n);
    let floor_db = median(ys[n - tail..].to_vec());
    let peak = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let head_end = ys
        .iter()
        .position(|&y| y < floor_db + 10.0)
        .unwrap_or(n)
        .max(3)
        .min(n);
    let (slope, intercept) = linear_fit(&ts[..head_end], &ys[..head_end]);

    let tau = if slope < -1e-3 {
        (-DB_PER_NEPER / slope).clamp(1e-3, 100.0)
    } else {
        span
    };
    let level_db = if slope < -1e-3 { intercept } else { peak };
    let floor_db = if peak - floor_db < 10.0 {
        floor_db
    } else if head_end == n {
        // decay never reaches a plateau in view
        ys[n - 1] - 20.0
    } else {
        floor_db
    };
    clamp_params(&[
        level_db / DB_PER_NEPER,
        tau.ln(),
        floor_db / DB_PER_NEPER,
    ])
}

/// Fit the decay model to `env`, using only frames that start at or after
/// `onset` (seconds) and are above the digital-silence floor.
pub fn fit_decay_model(env: &EnergyEnvelope, onset: f64) -> Result<DecayFit> {
    let fs = env.sample_rate as f64;
    let half_frame = 0.5 * (env.frame_len * fs).round() / fs;
    let (ts, ys): (Vec<f64>, Vec<f64>) = env
        .frames
        .iter()
        .enumerate()
        .filter_map(|(i, &y)| {
            let t = env.frame_time(i);
            (t - half_frame >= onset - 1e-12 && y > ENVELOPE_FLOOR_DB + 1e-9).then_some((t - onset, y))
        })
        .unzip();
    let span = ts.last().map_or(0.0, |t| t - ts[0]);
    if ts.len() < 3 || span < MIN_FIT_SPAN {
        return Err(Error::Degenerate(format!(
            "envelope spans {span:.3} s past the onset; at least {MIN_FIT_SPAN} s is needed"
        )));
    }

    let objective = |p: &[f64; 3]| -> f64 {
        let p = clamp_params(p);
        ts.iter()
            .zip(&ys)
            .map(|(&t, &y)| {
                let e = model_db(&p, t) - y;
                e * e
            })
            .sum::<f64>()
            / ts.len() as f64
    };

    let base = initial_guess(&ts, &ys, span);
    let starts = [
        base,
        [base[0], base[1] + 0.4, base[2] - 2.3],
        [base[0], base[1] - 0.4, base[2] + 1.1],
    ];
    let mut best: Option<simplex::SimplexResult<3>> = None;
    let mut total_iterations = 0;
    for start in starts {
        let r = simplex::minimize(
            objective,
            start,
            [0.5, 0.3, 1.0],
            STEP_TOLERANCE,
            MAX_ITERATIONS,
        );
        total_iterations += r.iterations;
        let better = match &best {
            None => true,
            Some(b) => (r.converged && !b.converged) || (r.converged == b.converged && r.value < b.value),
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    let p = clamp_params(&best.x);
    let model = DecayModel {
        level: p[0].exp(),
        tau: p[1].exp(),
        noise_floor: p[2].exp(),
        onset,
        band_index: None,
        sample_period: 1.0 / fs,
        duration: env.duration,
    };
    let rms_error_db = best.value.sqrt();
    if !best.converged {
        return Err(Error::FitFailure {
            best: Box::new(model),
            rms_error_db,
            iterations: total_iterations,
        });
    }
    let decay_observed =
        model.level > model.noise_floor * 10f64.sqrt() && model.tau < span;
    Ok(DecayFit {
        model,
        rms_error_db,
        iterations: total_iterations,
        decay_observed,
    })
}

/// Reverberation time `ln(1000)·tau`.
pub fn measure_t60(model: &DecayModel) -> f64 {
    1000f64.ln() * model.tau
}

/// Where the decaying term meets the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorOnset {
    /// Crossing time in seconds, clamped to the signal duration.
    pub time: f64,
    /// The floor is at or above the decay level from the start.
    pub noise_dominated: bool,
    /// The crossing lies beyond the end of the signal.
    pub beyond_end: bool,
}

pub fn detect_noise_floor_onset(model: &DecayModel) -> FloorOnset {
    if model.noise_floor >= model.level {
        return FloorOnset {
            time: model.onset,
            noise_dominated: true,
            beyond_end: false,
        };
    }
    let raw = if model.noise_floor > 0.0 {
        model.onset + model.tau * (model.level / model.noise_floor).ln()
    } else {
        f64::INFINITY
    };
    FloorOnset {
        time: raw.min(model.duration),
        noise_dominated: false,
        beyond_end: raw >= model.duration,
    }
}

/// Gaussian noise shaped by the noise-free decay `A·exp(-(t-t0)/τ)`,
/// zero before the onset. Deterministic for a fixed seed.
pub fn synthesize_noise_free_late(model: &DecayModel, length: usize, seed: u64) -> Vec<f64> {
    let noise = gaussian(&mut stream_rng(seed), length);
    noise
        .into_iter()
        .enumerate()
        .map(|(n, g)| {
            let t = n as f64 * model.sample_period;
            if t < model.onset {
                0.0
            } else {
                model.level * (-(t - model.onset) / model.tau).exp() * g
            }
        })
        .collect()
}

/// Replace the noise-floor-dominated tail with a synthesized noise-free
/// late field, joined by an equal-power raised-cosine crossfade centred at
/// the floor onset. Returns the input unchanged when the floor is not
/// reached within the signal.
pub fn remove_noise_floor(signal: &Air, model: &DecayModel, seed: u64) -> Air {
    remove_noise_floor_extended(signal, model, seed, signal.len())
}

/// As [`remove_noise_floor`], but the output is `out_len` samples long
/// (never shorter than the input). Samples past the input end come from
/// the synthesized late field; if the floor is not reached, the splice
/// closes at the input end.
pub fn remove_noise_floor_extended(signal: &Air, model: &DecayModel, seed: u64, out_len: usize) -> Air {
    let x = signal.samples();
    let len = x.len();
    let out_len = out_len.max(len);
    let fs = signal.sample_rate() as f64;
    let floor = detect_noise_floor_onset(model);
    let end = len as f64 / fs;
    if (floor.beyond_end || floor.time >= end) && out_len == len {
        return signal.clone();
    }

    let width = ((CROSSFADE * fs).round() as usize).max(2);
    let half = width / 2;
    let centre = ((floor.time * fs).round() as usize).min(len.saturating_sub(width - half));
    let start = centre.saturating_sub(half);
    let stop = (start + width).min(len);

    let synth = synthesize_noise_free_late(model, out_len, seed);
    let mut out = Vec::with_capacity(out_len);
    out.extend_from_slice(&x[..start]);
    let span = (stop - start) as f64;
    for n in start..stop {
        let u = (n - start) as f64 + 0.5;
        let phase = FRAC_PI_2 * u / span;
        out.push(x[n] * phase.cos() + synth[n] * phase.sin());
    }
    out.extend_from_slice(&synth[stop..]);
    Air::from_parts(out, signal.sample_rate())
}

/// Late-field onset used for fitting: direct path plus the early tolerance.
pub fn late_onset(air: &Air) -> Result<f64> {
    let direct = find_direct_path(air)?;
    let tol = air.seconds_to_samples(DIRECT_TOLERANCE);
    Ok((direct + tol) as f64 / air.sample_rate() as f64)
}

/// Envelope and fit of `signal` from `onset`, tagging the model with `band`.
pub fn fit_signal(signal: &Air, onset: f64, band: Option<usize>) -> Result<DecayFit> {
    let env = compute_envelope(signal, FRAME_LEN, FRAME_HOP)?;
    let mut fit = fit_decay_model(&env, onset).map_err(|e| match e {
        Error::FitFailure {
            mut best,
            rms_error_db,
            iterations,
        } => {
            best.band_index = band;
            Error::FitFailure {
                best,
                rms_error_db,
                iterations,
            }
        }
        other => other,
    })?;
    fit.model.band_index = band;
    Ok(fit)
}

/// Fullband decay fit of an impulse response, onset at direct path + 2.5 ms.
pub fn estimate_decay(air: &Air) -> Result<DecayFit> {
    fit_signal(air, late_onset(air)?, None)
}

/// Fullband T60 of an impulse response. Errors when no decay is observed.
pub fn estimate_t60(air: &Air) -> Result<f64> {
    let fit = estimate_decay(air)?;
    if !fit.decay_observed {
        return Err(Error::NoDecay { tau: fit.model.tau });
    }
    Ok(fit.model.t60())
}

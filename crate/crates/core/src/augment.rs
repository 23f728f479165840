//! Retargeting the DRR and T60 of an impulse response.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::air::{drr_of, split_early_late, Air, EarlyLateSplit, DIRECT_TOLERANCE};
use crate::decay::{
    estimate_decay, estimate_t60, fit_signal, late_onset, remove_noise_floor_extended,
};
use crate::error::{Error, Result};
use crate::filterbank::{analyze, design_filterbank, synthesize, SubbandSet};
use crate::rng::{derive_seed, stream};

/// Length of the Hann window around the direct path, in seconds.
pub const DIRECT_WINDOW: f64 = 0.005;
/// Relative margin added to the gain when direct-path dominance binds.
pub const DOMINANCE_MARGIN: f64 = 1e-6;
/// Output covers at least onset + this multiple of the target T60.
pub const TAIL_FACTOR: f64 = 1.2;
pub const MAX_TARGET_T60: f64 = 10.0;
/// Relative T60 miss above which the fullband ratio is corrected once from
/// the measured result.
pub const REFINE_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub target_t60: Option<f64>,
    pub target_drr: Option<f64>,
    pub seed: u64,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.target_t60.is_none() && self.target_drr.is_none() {
            return Err(Error::InvalidArgument(
                "at least one of target T60 or target DRR is required".into(),
            ));
        }
        if let Some(t60) = self.target_t60 {
            if !(t60 > 0.0 && t60 <= MAX_TARGET_T60) {
                return Err(Error::InvalidArgument(format!(
                    "target T60 must lie in (0, {MAX_TARGET_T60}] s, got {t60}"
                )));
            }
        }
        if let Some(drr) = self.target_drr {
            if !drr.is_finite() {
                return Err(Error::InvalidArgument("target DRR must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub requested: AugmentSpec,
    /// Fullband T60 re-measured on the output; `None` if no decay could be fitted.
    pub achieved_t60: Option<f64>,
    pub achieved_drr: f64,
    /// Gain applied to the windowed direct path (1 when DRR was not touched).
    pub alpha: f64,
    /// The DRR gain was raised to keep the direct path dominant, so the
    /// achieved DRR lies above the request.
    pub clipped: bool,
}

/// Full-length Hann window of `DIRECT_WINDOW` centred on `direct`, peak 1.
pub fn direct_window(len: usize, direct: usize, sample_rate: u32) -> Vec<f64> {
    let half = ((DIRECT_WINDOW * sample_rate as f64 / 2.0).round() as usize).max(1);
    let mut w = vec![0.0; len];
    let lo = direct.saturating_sub(half);
    let hi = (direct + half).min(len - 1);
    for (t, v) in w.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let k = t as f64 - direct as f64;
        *v = 0.5 * (1.0 + (std::f64::consts::PI * k / half as f64).cos());
    }
    w
}

/// Coefficients `(a, b, c)` of `a·α² + 2b·α + c` = early energy after
/// scaling the windowed direct path by α.
pub fn drr_quadratic(early: &[f64], window: &[f64]) -> (f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for (&h, &w) in early.iter().zip(window) {
        let e = h * h;
        a += w * w * e;
        b += (1.0 - w) * w * e;
        c += (1.0 - w) * (1.0 - w) * e;
    }
    (a, b, c)
}

/// Largest real α for which the windowed early response reaches `target` dB
/// against the late field.
pub fn solve_drr_gain(early: &Air, late: &Air, window: &[f64], target: f64) -> Result<f64> {
    if window.len() != early.len() || late.len() != early.len() {
        return Err(Error::InvalidArgument(
            "early, late and window must have equal lengths".into(),
        ));
    }
    let late_energy = late.energy();
    if late_energy <= 0.0 {
        return Err(Error::Anechoic);
    }
    let (a, b, c) = drr_quadratic(early.samples(), window);
    if a <= 0.0 {
        return Err(Error::Degenerate("no early energy under the window".into()));
    }
    let constant = c - 10f64.powf(target / 10.0) * late_energy;
    let quarter = b * b - a * constant;
    if quarter < 0.0 {
        return Err(Error::NoRealRoot {
            discriminant: 4.0 * quarter,
        });
    }
    let root = quarter.sqrt();
    // b >= 0 always; take the other root first to avoid cancellation
    let other = -(b + root);
    if other != 0.0 {
        Ok(constant / other)
    } else {
        Ok((root - b) / a)
    }
}

/// Smallest gain that keeps the scaled direct sample strictly the largest
/// absolute value in the response.
fn dominance_bound(air: &[f64], split: &EarlyLateSplit, window: &[f64]) -> f64 {
    let direct = split.direct_index;
    let peak = air[direct].abs();
    let late_peak = split
        .late
        .samples()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut bound = late_peak / peak;
    let (lo, hi) = split.early_range;
    for t in lo..=hi {
        if t == direct {
            continue;
        }
        let (w, v) = (window[t], air[t].abs());
        let den = peak - w * v;
        if w < 1.0 && den > 0.0 {
            bound = bound.max((1.0 - w) * v / den);
        }
    }
    bound
}

pub fn augment_drr(air: &Air, target: f64) -> Result<(Air, AugmentReport)> {
    let split = split_early_late(air, DIRECT_TOLERANCE)?;
    if split.late_energy() <= 0.0 {
        return Err(Error::Anechoic);
    }
    let window = direct_window(air.len(), split.direct_index, air.sample_rate());
    let bound = dominance_bound(air.samples(), &split, &window);
    let (alpha, clipped) = match solve_drr_gain(&split.early, &split.late, &window, target) {
        Ok(alpha) if alpha >= bound => (alpha, false),
        Ok(_) | Err(Error::NoRealRoot { .. }) => (bound * (1.0 + DOMINANCE_MARGIN), true),
        Err(e) => return Err(e),
    };

    let mut out = air.samples().to_vec();
    let (lo, hi) = split.early_range;
    for t in lo..=hi {
        let w = window[t];
        out[t] *= alpha * w + (1.0 - w);
    }
    let out = air.with_samples(out);
    let report = AugmentReport {
        requested: AugmentSpec {
            target_t60: None,
            target_drr: Some(target),
            seed: 0,
        },
        achieved_t60: estimate_t60(&out).ok(),
        achieved_drr: drr_of(&out)?,
        alpha,
        clipped,
    };
    Ok((out, report))
}

/// Reshape one noise-free band from decay `fitted_tau` to `desired_tau`
/// by an exponential gain from `onset` (seconds) on.
pub fn augment_t60_subband(band: &Air, fitted_tau: f64, desired_tau: f64, onset: f64) -> Air {
    let fs = band.sample_rate() as f64;
    let rate = (fitted_tau - desired_tau) / (fitted_tau * desired_tau);
    let out = band
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let t = n as f64 / fs;
            if t >= onset {
                x * (-(t - onset) * rate).exp()
            } else {
                x
            }
        })
        .collect();
    band.with_samples(out)
}

/// Fullband-shape-preserving T60 retargeting: every subband decay is scaled
/// by the ratio of the target to the measured fullband decay, after its
/// noise floor has been replaced by a synthesized noise-free tail. When
/// the remeasured output misses the target by more than
/// [`REFINE_THRESHOLD`], the ratio is rescaled by target over achieved and
/// the bands are reshaped once more; the closer result is kept.
pub fn augment_t60_fullband(air: &Air, target_t60: f64, seed: u64) -> Result<(Air, AugmentReport)> {
    if !(target_t60 > 0.0 && target_t60 <= MAX_TARGET_T60) {
        return Err(Error::InvalidArgument(format!(
            "target T60 must lie in (0, {MAX_TARGET_T60}] s, got {target_t60}"
        )));
    }
    if split_early_late(air, DIRECT_TOLERANCE)?.late_energy() <= 0.0 {
        return Err(Error::Anechoic);
    }
    let onset = late_onset(air)?;
    let full = estimate_decay(air)?;
    if !full.decay_observed {
        return Err(Error::NoDecay {
            tau: full.model.tau,
        });
    }
    let desired_tau = target_t60 / 1000f64.ln();
    let ratio = desired_tau / full.model.tau;

    let fs = air.sample_rate() as f64;
    let out_len = air
        .len()
        .max((onset * fs).round() as usize + (TAIL_FACTOR * target_t60 * fs).ceil() as usize);
    let spec = design_filterbank(air.sample_rate())?;
    let set = analyze(air, &spec)?;

    // noise-free bands and their fitted decays; these do not depend on the ratio
    let cleaned = set
        .bands
        .par_iter()
        .enumerate()
        .map(|(m, band)| -> Result<Option<(Air, f64)>> {
            if band.samples().iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            let wrap = |e: Error| Error::Band {
                band: m,
                source: Box::new(e),
            };
            let fit = fit_signal(band, onset, Some(m)).map_err(wrap)?;
            if !fit.decay_observed {
                return Err(wrap(Error::NoDecay { tau: fit.model.tau }));
            }
            let clean = remove_noise_floor_extended(
                band,
                &fit.model,
                derive_seed(seed, stream::BAND_NOISE, m as u64),
                out_len,
            );
            Ok(Some((clean, fit.model.tau)))
        })
        .collect::<Result<Vec<_>>>()?;

    let retarget = |ratio: f64| -> Result<(Air, Option<f64>)> {
        let bands = cleaned
            .par_iter()
            .map(|b| match b {
                Some((clean, tau)) => augment_t60_subband(clean, *tau, ratio * tau, onset),
                None => Air::from_parts(vec![0.0; out_len], air.sample_rate()),
            })
            .collect();
        let out = synthesize(&SubbandSet {
            bands,
            spec: spec.clone(),
        })?;
        let t60 = estimate_t60(&out).ok();
        Ok((out, t60))
    };
    let miss = |t60: Option<f64>| t60.map_or(f64::INFINITY, |t| (t / target_t60 - 1.0).abs());

    let (mut out, mut achieved) = retarget(ratio)?;
    if let Some(t60) = achieved.filter(|_| miss(achieved) > REFINE_THRESHOLD) {
        let second = retarget(ratio * target_t60 / t60)?;
        if miss(second.1) < miss(achieved) {
            (out, achieved) = second;
        }
    }

    let report = AugmentReport {
        requested: AugmentSpec {
            target_t60: Some(target_t60),
            target_drr: None,
            seed,
        },
        achieved_t60: achieved,
        achieved_drr: drr_of(&out)?,
        alpha: 1.0,
        clipped: false,
    };
    Ok((out, report))
}

/// T60 retargeting first, then DRR, as requested by `spec`.
pub fn augment(air: &Air, spec: &AugmentSpec) -> Result<(Air, AugmentReport)> {
    spec.validate()?;
    let mut current = air.clone();
    let mut alpha = 1.0;
    let mut clipped = false;
    if let Some(t60) = spec.target_t60 {
        current = augment_t60_fullband(&current, t60, spec.seed)?.0;
    }
    if let Some(drr) = spec.target_drr {
        let (out, r) = augment_drr(&current, drr)?;
        current = out;
        alpha = r.alpha;
        clipped = r.clipped;
    }
    let report = AugmentReport {
        requested: *spec,
        achieved_t60: estimate_t60(&current).ok(),
        achieved_drr: drr_of(&current)?,
        alpha,
        clipped,
    };
    Ok((current, report))
}

//! Signal level measures used by the dataset recipe: active speech level
//! (P.56 method B), plain RMS and gated integrated loudness.

use serde::{Deserialize, Serialize};

use crate::air::Air;
use crate::error::{Error, Result};

/// P.56 envelope smoothing time constant in seconds.
pub const P56_TIME_CONSTANT: f64 = 0.03;
/// P.56 hangover in seconds.
pub const P56_HANGOVER: f64 = 0.2;
/// P.56 margin between active level and threshold, in dB.
pub const P56_MARGIN: f64 = 15.9;
const P56_THRESHOLDS: i32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelMethod {
    P56Active,
    Rms,
    LufsIntegrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    /// dB re full scale (dBov for the active level, LUFS for loudness).
    pub value: f64,
    pub method: LevelMethod,
    /// Set when the signal is digitally silent; `value` is then `-inf`.
    pub silent: bool,
    /// Fraction of samples judged active (P.56 only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub activity: Option<f64>,
}

pub fn rms_level(signal: &Air) -> LevelReport {
    let x = signal.samples();
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    LevelReport {
        value: 10.0 * ms.log10(),
        method: LevelMethod::Rms,
        silent: ms == 0.0,
        activity: None,
    }
}

/// Active speech level per P.56 method B.
pub fn active_speech_level(signal: &Air) -> Result<LevelReport> {
    let fs = signal.sample_rate() as f64;
    let x = signal.samples();
    if (x.len() as f64) < fs {
        return Err(Error::Degenerate(
            "active speech level needs at least 1 s of signal".into(),
        ));
    }
    let g = (-1.0 / (fs * P56_TIME_CONSTANT)).exp();
    let hangover = (fs * P56_HANGOVER).ceil() as usize;
    let thresholds: Vec<f64> = (0..P56_THRESHOLDS)
        .map(|j| 2f64.powi(j - P56_THRESHOLDS))
        .collect();

    let mut active = vec![0usize; thresholds.len()];
    let mut hang = vec![hangover; thresholds.len()];
    let (mut p, mut q) = (0.0, 0.0);
    let mut energy = 0.0;
    for &v in x {
        energy += v * v;
        p = g * p + (1.0 - g) * v.abs();
        q = g * q + (1.0 - g) * p;
        for j in 0..thresholds.len() {
            if q >= thresholds[j] {
                active[j] += 1;
                hang[j] = 0;
            } else if hang[j] < hangover {
                active[j] += 1;
                hang[j] += 1;
            } else {
                break;
            }
        }
    }
    if energy == 0.0 || active[0] == 0 {
        return Err(Error::Silence);
    }

    let level = |j: usize| 10.0 * (energy / active[j] as f64).log10();
    let thr_db = |j: usize| 20.0 * thresholds[j].log10();
    let mut prev_delta = level(0) - thr_db(0);
    if prev_delta < P56_MARGIN {
        return Err(Error::Silence);
    }
    for j in 1..thresholds.len() {
        if active[j] == 0 {
            break;
        }
        let delta = level(j) - thr_db(j);
        if delta <= P56_MARGIN {
            let frac = (prev_delta - P56_MARGIN) / (prev_delta - delta);
            let value = level(j - 1) + frac * (level(j) - level(j - 1));
            let ms = energy / x.len() as f64;
            return Ok(LevelReport {
                value,
                method: LevelMethod::P56Active,
                silent: false,
                activity: Some(ms / 10f64.powf(value / 10.0)),
            });
        }
        prev_delta = delta;
    }
    // never crossed the margin: the signal is active at every threshold
    let j = active.iter().rposition(|&a| a > 0).unwrap_or(0);
    Ok(LevelReport {
        value: level(j),
        method: LevelMethod::P56Active,
        silent: false,
        activity: Some(active[j] as f64 / x.len() as f64),
    })
}

/// Gated integrated loudness (K-weighted, 400 ms blocks, 75 % overlap,
/// -70 LUFS absolute and -10 LU relative gates).
pub fn integrated_loudness(signal: &Air) -> Result<LevelReport> {
    let mut meter = ebur128::EbuR128::new(1, signal.sample_rate(), ebur128::Mode::I)
        .map_err(|e| Error::InvalidArgument(format!("loudness meter: {e}")))?;
    meter
        .add_frames_f64(signal.samples())
        .map_err(|e| Error::InvalidArgument(format!("loudness meter: {e}")))?;
    let value = meter
        .loudness_global()
        .map_err(|e| Error::InvalidArgument(format!("loudness meter: {e}")))?;
    if !value.is_finite() {
        return Err(Error::Silence);
    }
    Ok(LevelReport {
        value,
        method: LevelMethod::LufsIntegrated,
        silent: false,
        activity: None,
    })
}

/// Scale `signal` so its integrated loudness equals `target` LUFS.
pub fn normalize_loudness(signal: &Air, target: f64) -> Result<Air> {
    let current = integrated_loudness(signal)?.value;
    Ok(signal.scaled(10f64.powf((target - current) / 20.0)))
}

pub fn measure(signal: &Air, method: LevelMethod) -> Result<LevelReport> {
    match method {
        LevelMethod::P56Active => active_speech_level(signal),
        LevelMethod::Rms => Ok(rms_level(signal)),
        LevelMethod::LufsIntegrated => integrated_loudness(signal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, stream_rng};

    fn air(x: Vec<f64>) -> Air {
        Air::new(x, 16_000).unwrap()
    }

    #[test]
    fn rms_constants() {
        assert!(rms_level(&air(vec![1.0; 100])).value.abs() < 1e-12);
        let half = rms_level(&air(vec![0.5; 100])).value;
        assert!((half + 6.0206).abs() < 1e-4);
        let zero = rms_level(&air(vec![0.0; 100]));
        assert!(zero.silent && zero.value == f64::NEG_INFINITY);
    }

    #[test]
    fn rms_of_unit_gaussian() {
        let x = gaussian(&mut stream_rng(1), 16_000);
        assert!(rms_level(&air(x)).value.abs() < 0.1);
    }

    #[test]
    fn rms_gain_is_exact() {
        let x = gaussian(&mut stream_rng(2), 1000);
        let base = rms_level(&air(x.clone())).value;
        let k: f64 = 0.37;
        let scaled = rms_level(&air(x.iter().map(|v| v * k).collect())).value;
        assert!((scaled - base - 20.0 * k.log10()).abs() < 1e-12);
    }

    #[test]
    fn square_wave_active_level_is_rms() {
        let x: Vec<f64> = (0..32_000).map(|n| if (n / 40) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let rep = active_speech_level(&air(x.clone())).unwrap();
        assert!((rep.value - rms_level(&air(x)).value).abs() < 0.1, "{rep:?}");
    }

    #[test]
    fn half_duty_bursts_sit_three_db_up() {
        // 20 s bursts of noise separated by 20 s of silence
        let fs = 8000;
        let burst = 20 * fs;
        let noise = gaussian(&mut stream_rng(3), 2 * burst);
        let mut x = vec![0.0; 4 * burst];
        let amp = 10f64.powf(-23.0 / 20.0);
        x[..burst].iter_mut().zip(&noise).for_each(|(v, n)| *v = amp * n);
        x[2 * burst..3 * burst]
            .iter_mut()
            .zip(&noise[burst..])
            .for_each(|(v, n)| *v = amp * n);
        let signal = Air::new(x, fs as u32).unwrap();
        let overall = rms_level(&signal).value;
        let active = active_speech_level(&signal).unwrap();
        // hangover and envelope release add ~0.3 s per burst
        assert!((active.value - (overall + 3.0103)).abs() < 0.15, "{active:?} {overall}");
        assert!((active.value + 23.0).abs() < 0.15);
    }

    #[test]
    fn silence_is_an_error() {
        assert!(matches!(
            active_speech_level(&air(vec![0.0; 16_000])),
            Err(Error::Silence)
        ));
        assert!(matches!(
            integrated_loudness(&air(vec![0.0; 16_000])),
            Err(Error::Silence)
        ));
    }

    #[test]
    fn loudness_round_trip() {
        let x: Vec<f64> = gaussian(&mut stream_rng(4), 48_000).iter().map(|v| 0.05 * v).collect();
        let y = normalize_loudness(&air(x), -23.0).unwrap();
        let l = integrated_loudness(&y).unwrap().value;
        assert!((l + 23.0).abs() < 0.1, "{l}");
        let again = normalize_loudness(&y, -23.0).unwrap();
        let gain = again.samples()[10] / y.samples()[10];
        assert!((20.0 * gain.log10()).abs() < 0.1);
    }

    #[test]
    fn loudness_normalization_is_scale_free() {
        let x: Vec<f64> = gaussian(&mut stream_rng(5), 48_000).iter().map(|v| 0.05 * v).collect();
        let a = normalize_loudness(&air(x.clone()), -23.0).unwrap();
        let b = normalize_loudness(&air(x.iter().map(|v| v * 3.0).collect()), -23.0).unwrap();
        for (p, q) in a.samples().iter().zip(b.samples()) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}

//! Zero-phase, power-complementary third-octave filterbank.
//!
//! Bands are split off one edge at a time, lowest first: a forward-backward
//! Butterworth lowpass at the edge takes the band, and the band is
//! subtracted from the running residual, which therefore carries the
//! complementary highpass. With a forward-backward Butterworth pair the
//! squared responses `|L|²` and `1-|L|²` are exactly the lowpass and highpass
//! of the same prototype, so the band responses sum to one at every
//! frequency and synthesis is a plain sum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::air::Air;
use crate::error::{Error, Result};

pub const LOWEST_CENTER: f64 = 100.0;
pub const PROTOTYPE_ORDER: usize = 6;
/// Padding length in multiples of the filter's 60 dB decay length.
const PAD_DECAYS: f64 = 3.0;
const MAX_RIPPLE_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterbankSpec {
    pub sample_rate: u32,
    pub center_frequencies: Vec<f64>,
    /// Crossover frequencies between adjacent bands (geometric midpoints).
    pub edges: Vec<f64>,
    pub prototype_order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub bands: Vec<Air>,
    pub spec: FilterbankSpec,
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff: f64, q: f64, sample_rate: f64) -> Biquad {
        let w0 = 2.0 * PI * cutoff / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b = (1.0 - cos) / 2.0 / a0;
        Biquad {
            b: [b, 2.0 * b, b],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    /// Samples for the impulse response to fall by 60 dB.
    fn decay_length(&self) -> f64 {
        let radius = self.a[1].abs().sqrt().max(1e-12);
        1000f64.ln() / -radius.ln()
    }

    fn response(&self, w: f64) -> (f64, f64) {
        // H(e^{jw}) = B(z)/A(z), z^{-1} = e^{-jw}
        let (s1, c1) = w.sin_cos();
        let (s2, c2) = (2.0 * w).sin_cos();
        let br = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let bi = -self.b[1] * s1 - self.b[2] * s2;
        let ar = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let ai = -self.a[0] * s1 - self.a[1] * s2;
        let den = ar * ar + ai * ai;
        ((br * ar + bi * ai) / den, (bi * ar - br * ai) / den)
    }

    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Butterworth lowpass of the given (even) order as biquad sections.
fn butterworth_lowpass(cutoff: f64, order: usize, sample_rate: f64) -> Vec<Biquad> {
    (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            Biquad::lowpass(cutoff, 1.0 / (2.0 * theta.cos()), sample_rate)
        })
        .collect()
}

fn squared_magnitude(sections: &[Biquad], w: f64) -> f64 {
    sections
        .iter()
        .map(|s| {
            let (re, im) = s.response(w);
            re * re + im * im
        })
        .product()
}

/// Forward-backward application with odd-reflection padding at both ends.
fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let decay = sections.iter().map(Biquad::decay_length).fold(0.0, f64::max);
    let pad = (PAD_DECAYS * decay).ceil() as usize;
    let reflect = pad.min(n.saturating_sub(1));

    let mut buf = Vec::with_capacity(n + 2 * pad);
    buf.resize(pad - reflect, 0.0);
    let first = x[0];
    buf.extend((1..=reflect).rev().map(|k| 2.0 * first - x[k]));
    buf.extend_from_slice(x);
    let last = x[n - 1];
    buf.extend((1..=reflect).map(|k| 2.0 * last - x[n - 1 - k]));
    buf.resize(n + 2 * pad, 0.0);

    for s in sections {
        s.run(&mut buf);
    }
    buf.reverse();
    for s in sections {
        s.run(&mut buf);
    }
    buf.reverse();
    buf[pad..pad + n].to_vec()
}

impl FilterbankSpec {
    fn edge_filters(&self) -> Vec<Vec<Biquad>> {
        self.edges
            .iter()
            .map(|&e| butterworth_lowpass(e, self.prototype_order, self.sample_rate as f64))
            .collect()
    }

    /// Zero-phase response of each band at `freq` Hz (the squared one-pass
    /// magnitude), evaluated from the designed sections.
    pub fn band_responses(&self, freq: f64) -> Vec<f64> {
        let w = 2.0 * PI * freq / self.sample_rate as f64;
        let mut out = Vec::with_capacity(self.center_frequencies.len());
        let mut residual = 1.0;
        for sections in self.edge_filters() {
            let low = squared_magnitude(&sections, w);
            out.push(residual * low);
            residual *= 1.0 - low;
        }
        out.push(residual);
        out
    }

    /// Sum of the band responses at `freq`; unity for a complementary bank.
    pub fn power_sum(&self, freq: f64) -> f64 {
        self.band_responses(freq).iter().sum()
    }

    pub fn len(&self) -> usize {
        self.center_frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_frequencies.is_empty()
    }
}

/// Third-octave centers from 100 Hz up to the last one below 0.4·fs.
pub fn design_filterbank(sample_rate: u32) -> Result<FilterbankSpec> {
    if sample_rate < 8000 {
        return Err(Error::InvalidArgument(format!(
            "filterbank needs a sample rate of at least 8000 Hz, got {sample_rate}"
        )));
    }
    let fs = sample_rate as f64;
    let centers: Vec<f64> = (0..)
        .map(|k| LOWEST_CENTER * 2f64.powf(k as f64 / 3.0))
        .take_while(|&c| c < 0.4 * fs)
        .collect();
    if centers.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "{sample_rate} Hz hosts only {} third-octave bands",
            centers.len()
        )));
    }
    let edges = centers.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let spec = FilterbankSpec {
        sample_rate,
        center_frequencies: centers,
        edges,
        prototype_order: PROTOTYPE_ORDER,
    };

    let ripple = (0..=400)
        .map(|i| {
            let f = 20.0 * (0.49 * fs / 20.0).powf(i as f64 / 400.0);
            (10.0 * spec.power_sum(f).log10()).abs()
        })
        .fold(0.0, f64::max);
    if ripple > MAX_RIPPLE_DB {
        return Err(Error::FilterbankRipple { ripple_db: ripple });
    }
    Ok(spec)
}

pub fn analyze(air: &Air, spec: &FilterbankSpec) -> Result<SubbandSet> {
    if air.sample_rate() != spec.sample_rate {
        return Err(Error::RateMismatch {
            expected: spec.sample_rate,
            actual: air.sample_rate(),
        });
    }
    let mut residual = air.samples().to_vec();
    let mut bands = Vec::with_capacity(spec.len());
    for sections in spec.edge_filters() {
        let band = filtfilt(&sections, &residual);
        residual.iter_mut().zip(&band).for_each(|(r, b)| *r -= b);
        bands.push(air.with_samples(band));
    }
    bands.push(air.with_samples(residual));
    Ok(SubbandSet {
        bands,
        spec: spec.clone(),
    })
}

/// Elementwise sum of the bands.
pub fn synthesize(set: &SubbandSet) -> Result<Air> {
    let first = set
        .bands
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty band set".into()))?;
    let len = first.len();
    if let Some(b) = set.bands.iter().find(|b| b.len() != len) {
        return Err(Error::InvalidArgument(format!(
            "band length mismatch: {} vs {len}",
            b.len()
        )));
    }
    let mut out = vec![0.0; len];
    for band in &set.bands {
        out.iter_mut().zip(band.samples()).for_each(|(o, v)| *o += v);
    }
    Ok(first.with_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_at_16k() {
        let spec = design_filterbank(16_000).unwrap();
        let c = &spec.center_frequencies;
        assert!((c[0] - 100.0).abs() < 1e-12);
        assert!((c[1] - 125.992_104_989).abs() < 1e-6);
        assert!((c[2] - 158.740_105_196).abs() < 1e-6);
        assert!(*c.last().unwrap() < 6400.0);
        for w in c.windows(2) {
            assert!((w[1] / w[0] - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        }
        assert_eq!(spec.edges.len(), c.len() - 1);
    }

    #[test]
    fn centers_at_8k_stay_below_3200() {
        let spec = design_filterbank(8000).unwrap();
        assert!(*spec.center_frequencies.last().unwrap() < 3200.0);
    }

    #[test]
    fn low_rates_rejected() {
        assert!(design_filterbank(4000).is_err());
    }

    #[test]
    fn butterworth_matches_analytic_magnitude() {
        let fs = 16_000.0;
        let sections = butterworth_lowpass(1000.0, 4, fs);
        for f in [100.0, 500.0, 1000.0, 2000.0, 5000.0] {
            let w = 2.0 * PI * f / fs;
            let ratio = (w / 2.0).tan() / (PI * 1000.0 / fs).tan();
            let expected = 1.0 / (1.0 + ratio.powi(8));
            assert!((squared_magnitude(&sections, w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_gives_zero_bands() {
        let spec = design_filterbank(16_000).unwrap();
        let air = Air::new(vec![0.0; 4000], 16_000).unwrap();
        let set = analyze(&air, &spec).unwrap();
        assert!(set.bands.iter().all(|b| b.samples().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rate_mismatch_rejected() {
        let spec = design_filterbank(16_000).unwrap();
        let air = Air::new(vec![0.0; 100], 8000).unwrap();
        assert!(matches!(analyze(&air, &spec), Err(Error::RateMismatch { .. })));
    }

    #[test]
    fn synthesize_checks_lengths() {
        let spec = design_filterbank(16_000).unwrap();
        let a = Air::new(vec![1.0; 10], 16_000).unwrap();
        let b = Air::new(vec![1.0; 11], 16_000).unwrap();
        let set = SubbandSet {
            bands: vec![a.clone(), b],
            spec: spec.clone(),
        };
        assert!(synthesize(&set).is_err());
        let single = SubbandSet {
            bands: vec![a.clone()],
            spec,
        };
        assert_eq!(synthesize(&single).unwrap(), a);
    }
}

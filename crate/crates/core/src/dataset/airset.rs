use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::calibration::CalibrationSet;
use crate::air::Air;
use crate::augment::{augment, AugmentReport, AugmentSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, stream_rng};

pub const MAX_RETRIES: usize = 10;

/// One augmented response with its calibrated ground-truth labels.
#[derive(Debug, Clone)]
pub struct AugmentedAir {
    pub source_index: usize,
    pub draw_index: usize,
    pub air: Air,
    pub report: AugmentReport,
    pub label_t60: f64,
    pub label_drr: f64,
    /// Retries consumed before this draw succeeded.
    pub retries: usize,
}

/// Targets for `count` draws: one uniform draw inside each of `count`
/// equal strata, in shuffled order, so the requested values cover the
/// range evenly.
fn stratified(range: [f64; 2], count: usize, rng: &mut impl Rng) -> Vec<f64> {
    let width = (range[1] - range[0]) / count as f64;
    let mut strata: Vec<usize> = (0..count).collect();
    strata.shuffle(rng);
    strata
        .into_iter()
        .map(|k| range[0] + width * (k as f64 + rng.gen::<f64>()))
        .collect()
}

fn uniform(range: [f64; 2], rng: &mut impl Rng) -> f64 {
    range[0] + (range[1] - range[0]) * rng.gen::<f64>()
}

/// `count_per_air` augmentations of every seed response with T60 and DRR
/// targets spread uniformly over the given ranges. Labels are the values
/// re-measured on each output, mapped through `calibration`. Failed draws
/// are retried with fresh targets; draws that keep failing are skipped.
pub fn generate_air_set(
    seed_airs: &[Air],
    count_per_air: usize,
    t60_range: [f64; 2],
    drr_range: [f64; 2],
    seed: u64,
    calibration: Option<&CalibrationSet>,
) -> Result<Vec<AugmentedAir>> {
    if !(t60_range[0] > 0.0 && t60_range[0] <= t60_range[1]) || drr_range[0] > drr_range[1] {
        return Err(Error::InvalidArgument(format!(
            "invalid target ranges T60 {t60_range:?}, DRR {drr_range:?}"
        )));
    }
    let cal = calibration.copied().unwrap_or_default();

    let mut jobs = Vec::with_capacity(seed_airs.len() * count_per_air);
    for i in 0..seed_airs.len() {
        let mut rng = stream_rng(derive_seed(seed, stream::AIR_DRAW, i as u64));
        let t60s = stratified(t60_range, count_per_air, &mut rng);
        let drrs = stratified(drr_range, count_per_air, &mut rng);
        for (j, (t60, drr)) in t60s.into_iter().zip(drrs).enumerate() {
            jobs.push((i, j, t60, drr));
        }
    }

    let results: Vec<Option<AugmentedAir>> = jobs
        .into_par_iter()
        .map(|(i, j, t60, drr)| {
            let key = ((i as u64) << 32) | j as u64;
            let item_seed = derive_seed(seed, stream::AIR_DRAW, key ^ (1 << 63));
            let mut rng = stream_rng(item_seed);
            let mut target = (t60, drr);
            for retries in 0..=MAX_RETRIES {
                let spec = AugmentSpec {
                    target_t60: Some(target.0),
                    target_drr: Some(target.1),
                    seed: rng.gen(),
                };
                match augment(&seed_airs[i], &spec) {
                    Ok((air, report)) => {
                        if let Some(t60) = report.achieved_t60 {
                            return Some(AugmentedAir {
                                source_index: i,
                                draw_index: j,
                                label_t60: cal.t60.apply(t60),
                                label_drr: cal.drr.apply(report.achieved_drr),
                                air,
                                report,
                                retries,
                            });
                        }
                        warn!("air {i} draw {j}: output T60 not measurable, resampling");
                    }
                    Err(e) => warn!("air {i} draw {j}: {e}, resampling"),
                }
                target = (uniform(t60_range, &mut rng), uniform(drr_range, &mut rng));
            }
            warn!("air {i} draw {j}: skipped after {MAX_RETRIES} retries");
            None
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map from raw estimator output to calibrated label units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::identity()
    }
}

impl Calibration {
    pub fn identity() -> Self {
        Calibration {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.slope * raw + self.intercept
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope.is_finite() && self.slope != 0.0 && self.intercept.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "calibration needs a finite nonzero slope, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CalibrationSet {
    pub t60: Calibration,
    pub drr: Calibration,
}

/// Least-squares line mapping `estimates` onto `labels`.
pub fn fit_calibration(estimates: &[f64], labels: &[f64]) -> Result<Calibration> {
    if estimates.len() != labels.len() || estimates.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two paired points, got {} / {}",
            estimates.len(),
            labels.len()
        )));
    }
    let n = estimates.len() as f64;
    let me = estimates.iter().sum::<f64>() / n;
    let ml = labels.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (e, l) in estimates.iter().zip(labels) {
        sxx += (e - me) * (e - me);
        sxy += (e - me) * (l - ml);
    }
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("estimates are constant".into()));
    }
    let slope = sxy / sxx;
    let cal = Calibration {
        slope,
        intercept: ml - slope * me,
    };
    cal.validate()?;
    Ok(cal)
}

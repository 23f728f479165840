//! Paired-estimate statistics: bias, MSE and Pearson correlation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    /// Mean of estimate minus label.
    pub bias: f64,
    pub mse: f64,
    /// `None` when either series is constant.
    pub pearson: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown report format {s:?}"))),
        }
    }
}

pub fn evaluate(estimates: &[f64], labels: &[f64]) -> Result<EvalStats> {
    if estimates.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} estimates vs {} labels",
            estimates.len(),
            labels.len()
        )));
    }
    let n = estimates.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two pairs".into()));
    }
    let nf = n as f64;
    let bias = estimates.iter().zip(labels).map(|(e, l)| e - l).sum::<f64>() / nf;
    let mse = estimates
        .iter()
        .zip(labels)
        .map(|(e, l)| (e - l) * (e - l))
        .sum::<f64>()
        / nf;

    let me = estimates.iter().sum::<f64>() / nf;
    let ml = labels.iter().sum::<f64>() / nf;
    let (mut cov, mut ve, mut vl) = (0.0, 0.0, 0.0);
    for (e, l) in estimates.iter().zip(labels) {
        cov += (e - me) * (l - ml);
        ve += (e - me) * (e - me);
        vl += (l - ml) * (l - ml);
    }
    // sample (n-1) normalisation; it cancels in the ratio
    let (cov, ve, vl) = (cov / (nf - 1.0), ve / (nf - 1.0), vl / (nf - 1.0));
    let pearson = (ve > 0.0 && vl > 0.0).then(|| (cov / (ve.sqrt() * vl.sqrt())).clamp(-1.0, 1.0));
    Ok(EvalStats {
        bias,
        mse,
        pearson,
        n,
    })
}

/// Render stats under a method name. JSON keeps full precision so it
/// round-trips; text and CSV use four decimals.
pub fn report(method: &str, stats: &EvalStats, format: ReportFormat) -> String {
    let pearson = |p: Option<f64>| p.map_or("nan".to_string(), |v| format!("{v:.4}"));
    match format {
        ReportFormat::Json => {
            let mut value = serde_json::to_value(stats).expect("stats serialize");
            value["method"] = serde_json::Value::String(method.to_string());
            value.to_string()
        }
        ReportFormat::Csv => format!(
            "method,bias,mse,pearson,n\n{},{:.4},{:.4},{},{}\n",
            method,
            stats.bias,
            stats.mse,
            pearson(stats.pearson),
            stats.n
        ),
        ReportFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:<16} {:>10} {:>10} {:>10} {:>8}", "Method", "Bias", "MSE", "rho", "n");
            let _ = writeln!(
                s,
                "{:<16} {:>10.4} {:>10.4} {:>10} {:>8}",
                method,
                stats.bias,
                stats.mse,
                pearson(stats.pearson),
                stats.n
            );
            s
        }
    }
}

pub fn parse_json_report(doc: &str) -> Result<EvalStats> {
    Ok(serde_json::from_str(doc)?)
}

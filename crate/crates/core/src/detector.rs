//! Threshold calibration on healthy validation outputs, the sign decision
//! rule, and the magnification coefficient.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default percentile of healthy residuals used for the threshold.
pub const DEFAULT_PERCENTILE: f64 = 99.5;

/// Threshold multipliers of the reference hyperparameter grid.
pub const GAMMA_PRESETS: [f64; 7] = [1.1, 1.2, 1.5, 1.7, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub gamma: f64,
    pub p: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Healthy,
    Abnormal,
}

impl Label {
    /// `+1` healthy, `-1` abnormal.
    pub fn sign(self) -> i8 {
        match self {
            Label::Healthy => 1,
            Label::Abnormal => -1,
        }
    }

    pub fn is_abnormal(self) -> bool {
        self == Label::Abnormal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Health indicator `|1 − Y|`.
    pub score: f64,
    pub label: Label,
    /// `score / threshold`.
    pub magnification: f64,
}

/// Health indicator `|1 − y|`.
#[inline]
pub fn residual(y: f64) -> f64 {
    (1.0 - y).abs()
}

/// `p`-th percentile by linear interpolation between order statistics
/// (rank `(n − 1)·p/100`).
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid(format!("percentile must lie in [0,100], got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

impl DetectorConfig {
    /// `threshold = γ · percentile_p(|1 − Y_val|)`.
    pub fn calibrate(y_val: &[f64], gamma: f64, p: f64) -> Result<Self> {
        if y_val.is_empty() {
            return Err(Error::EmptyInput);
        }
        if y_val.len() < 2 {
            return Err(Error::invalid("calibration needs at least two outputs"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
        }
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::invalid(format!("p must lie in (0,100], got {p}")));
        }
        if y_val.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("validation outputs"));
        }
        let residuals: Vec<f64> = y_val.iter().map(|&y| residual(y)).collect();
        let threshold = gamma * percentile(&residuals, p)?;
        Ok(DetectorConfig { gamma, p, threshold })
    }

    /// Same percentile, different multiplier.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        DetectorConfig {
            gamma,
            p: self.p,
            threshold: self.threshold / self.gamma * gamma,
        }
    }

    /// Labels each output; a score exactly at the threshold counts as healthy.
    pub fn decide(&self, y_test: &[f64]) -> Result<Vec<Detection>> {
        if !(self.threshold > 0.0) {
            return Err(Error::Uncalibrated);
        }
        Ok(y_test
            .iter()
            .map(|&y| {
                let score = residual(y);
                let label = if self.threshold - score >= 0.0 {
                    Label::Healthy
                } else {
                    Label::Abnormal
                };
                Detection {
                    score,
                    label,
                    magnification: score / self.threshold,
                }
            })
            .collect())
    }
}

/// Writes detections as CSV with columns `index,score,label,magnification`.
pub fn write_detections<W: Write>(writer: W, detections: &[Detection]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["index", "score", "label", "magnification"])?;
    for (i, d) in detections.iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            d.score.to_string(),
            d.label.sign().to_string(),
            d.magnification.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

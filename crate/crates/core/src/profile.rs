//! Radial profiles `r -> value` with a least-squares slope of
//! `log value` against `log (1 - r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thresholds::{DECAY_RATIO, MIN_FIT_POINTS, RATIO_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(log(1 - r), log v)` for the points with `v > floor`.
pub fn fit_log_log(radii: &[f64], values: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > RATIO_FLOOR && v.is_finite())
        .map(|(&r, &v)| ((1.0 - r).ln(), v.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some(SlopeFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub label: String,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Option<SlopeFit>,
}

impl RadialProfile {
    pub fn new(label: impl Into<String>, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::Dimension("profile radii and values differ in length".into()));
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) || radii[0] < 0.0 || radii[radii.len() - 1] >= 1.0 {
            return Err(Error::BadParameters("profile radii must increase inside [0, 1)".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadParameters("profile values must be finite and nonnegative".into()));
        }
        let fit = fit_log_log(&radii, &values);
        Ok(Self {
            label: label.into(),
            radii,
            values,
            fit,
        })
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `last / first`, floored.
    pub fn tail_ratio(&self) -> f64 {
        self.last() / self.first().max(RATIO_FLOOR)
    }

    /// `max / min`, floored.
    pub fn spread(&self) -> f64 {
        self.max() / self.min().max(RATIO_FLOOR)
    }

    /// Limit-zero proxy: positive fitted slope and `last < DECAY_RATIO * first`.
    pub fn vanishes(&self) -> bool {
        self.slope().is_some_and(|s| s > 0.0) && self.last() < DECAY_RATIO * self.first()
    }

    pub fn all_zero(&self) -> bool {
        self.values.iter().all(|&v| v <= RATIO_FLOOR)
    }

    /// Slope fitted on the first `i + 1` samples.
    pub fn slope_to_date(&self, i: usize) -> Option<f64> {
        fit_log_log(&self.radii[..=i], &self.values[..=i]).map(|f| f.slope)
    }

    /// CSV with header `r,value,slope_to_date`; the slope column is empty
    /// until enough points are available.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value,slope_to_date\n");
        for i in 0..self.radii.len() {
            let slope = self.slope_to_date(i).map(|s| format!("{s:.12e}")).unwrap_or_default();
            out.push_str(&format!("{:.17e},{:.17e},{}\n", self.radii[i], self.values[i], slope));
        }
        out
    }
}

use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic_with, LogisticOptions};
use crate::error::{Error, Result};
use crate::numeric::sigmoid;

pub const PLATT_C: f64 = 1e6;
pub const PLATT_MAX_ITER: usize = 1000;

/// `sigma(slope * margin + offset)`, or the raw margin when calibration was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub slope: f64,
    pub offset: f64,
    pub identity_fallback: bool,
}

impl CalibrationModel {
    pub fn identity() -> Self {
        CalibrationModel {
            slope: 1.0,
            offset: 0.0,
            identity_fallback: true,
        }
    }
}

/// One-dimensional logistic fit of labels on margins; falls back to the
/// identity when the labels hold a single class.
pub fn fit_platt(margins: &[f64], labels: &[bool]) -> Result<CalibrationModel> {
    if margins.len() != labels.len() {
        return Err(Error::Fit(format!("{} margins but {} labels", margins.len(), labels.len())));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Ok(CalibrationModel::identity());
    }
    let x: Vec<Vec<f64>> = margins.iter().map(|&m| vec![m]).collect();
    let opts = LogisticOptions {
        max_iter: PLATT_MAX_ITER,
        ..LogisticOptions::new(PLATT_C)
    };
    let fit = fit_logistic_with(&x, labels, None, &opts)?;
    Ok(CalibrationModel {
        slope: fit.coefficients[0],
        offset: fit.intercept,
        identity_fallback: false,
    })
}

pub fn calibrated_score(cal: &CalibrationModel, margin: f64) -> f64 {
    if cal.identity_fallback {
        margin
    } else {
        sigmoid(cal.slope * margin + cal.offset)
    }
}

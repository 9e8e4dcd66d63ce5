use serde::Serialize;

use crate::error::{Error, Result};

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "r_squared: lengths differ ({} vs {})",
            truth.len(),
            pred.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::UndefinedRSquared("fewer than two points".into()));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedRSquared("truth is constant".into()));
    }
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub load: f64,
    pub truth: f64,
    pub pred: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    pub points: Vec<ErrorPoint>,
    pub mean: f64,
    /// Points skipped because `|truth|` was below the floor.
    pub excluded: usize,
}

/// Pointwise `100·|pred − truth| / |truth|` and its arithmetic mean.
pub fn percentage_error_curve(truth: &[f64], pred: &[f64], loads: &[f64], floor: f64) -> Result<ErrorCurve> {
    if truth.len() != pred.len() || truth.len() != loads.len() {
        return Err(Error::InvalidInput(
            "percentage_error_curve: series lengths differ".into(),
        ));
    }
    let mut points = Vec::with_capacity(truth.len());
    let mut excluded = 0;
    for ((&t, &p), &l) in truth.iter().zip(pred).zip(loads) {
        if t.abs() <= floor {
            excluded += 1;
            continue;
        }
        points.push(ErrorPoint {
            load: l,
            truth: t,
            pred: p,
            percent: 100.0 * (p - t).abs() / t.abs(),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "every truth value is below the percentage-error floor".into(),
        ));
    }
    let mean = points.iter().map(|p| p.percent).sum::<f64>() / points.len() as f64;
    Ok(ErrorCurve {
        points,
        mean,
        excluded,
    })
}

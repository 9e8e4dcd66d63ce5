//! Correlation-based screening of candidate Pi sets.
//!
//! Each non-target group is correlated against the raw target quantity and a set
//! is scored by the root-mean-square of those coefficients.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::dataset::{format_float, Dataset};
use crate::error::{Error, Result};
use crate::pi_engine::PiSet;

pub const DEFAULT_VALID_FLOOR: f64 = 0.95;

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero variance in one of the series".into(),
        ));
    }
    let r = sxy / (sxx * syy).sqrt();
    if !r.is_finite() {
        return Err(Error::UndefinedCorrelation(format!("non-finite coefficient {r}")));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// `sqrt(mean(r²))`; zero for an empty slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|r| r * r).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// Pearson r of each non-target group against the target, in set order.
    pub per_group_r: Vec<f64>,
    /// Groups whose correlation was undefined and scored as 0.
    pub undefined: Vec<bool>,
    pub rms_score: f64,
    pub valid_fraction: f64,
    pub valid_records: usize,
    pub invalid_reason: Option<String>,
}

impl CorrelationReport {
    pub fn is_valid(&self) -> bool {
        self.invalid_reason.is_none()
    }
}

/// Scores one set on `data`. Records on which any group fails to evaluate are
/// skipped; the set is marked invalid when fewer than `valid_floor` of the
/// records survive or no group carries a defined correlation.
pub fn score_pi_set(set: &PiSet, data: &Dataset, valid_floor: f64) -> Result<CorrelationReport> {
    let data = data.project(&set.quantities)?;
    let inputs = set.input_indices();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); inputs.len()];
    let mut target = Vec::new();
    for rec in data.records() {
        let Ok(values) = set.evaluate_all(&rec.values) else {
            continue;
        };
        for (s, &k) in series.iter_mut().zip(&inputs) {
            s.push(values[k]);
        }
        target.push(rec.values[set.target]);
    }
    let total = data.len();
    let valid_records = target.len();
    let valid_fraction = if total == 0 {
        0.0
    } else {
        valid_records as f64 / total as f64
    };

    let mut per_group_r = Vec::with_capacity(inputs.len());
    let mut undefined = Vec::with_capacity(inputs.len());
    for s in &series {
        match (valid_records >= 2).then(|| pearson(s, &target)) {
            Some(Ok(r)) => {
                per_group_r.push(r);
                undefined.push(false);
            }
            _ => {
                per_group_r.push(0.0);
                undefined.push(true);
            }
        }
    }
    let rms_score = rms(&per_group_r);

    let invalid_reason = if valid_records < 2 {
        Some(format!(
            "only {valid_records} of {total} records evaluate finitely"
        ))
    } else if valid_fraction < valid_floor {
        Some(format!(
            "valid fraction {valid_fraction:.3} below floor {valid_floor}"
        ))
    } else if !undefined.is_empty() && undefined.iter().all(|&u| u) {
        let constant_target = target.iter().all(|&v| v == target[0]);
        Some(if constant_target {
            "undefined correlation: target series is constant".to_string()
        } else {
            "undefined correlation: every group is constant".to_string()
        })
    } else {
        None
    };

    Ok(CorrelationReport {
        per_group_r,
        undefined,
        rms_score,
        valid_fraction,
        valid_records,
        invalid_reason,
    })
}

#[derive(Debug, Clone)]
pub struct RankedSet {
    /// Position of the set in the candidate list.
    pub set_index: usize,
    pub set: PiSet,
    pub report: CorrelationReport,
}

#[derive(Debug, Clone, Default)]
pub struct Ranking {
    pub ranked: Vec<RankedSet>,
    /// `(set_index, reason)` for each excluded set.
    pub rejected: Vec<(usize, String)>,
}

/// Scores every set and returns the valid ones by descending RMS score, ties
/// broken by lexicographic exponent order, truncated to `top_k`.
pub fn rank_pi_sets(
    sets: &[PiSet],
    data: &Dataset,
    top_k: usize,
    valid_floor: f64,
) -> Result<Ranking> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("no candidate pi sets".into()));
    }
    let reports: Vec<CorrelationReport> = sets
        .par_iter()
        .map(|s| score_pi_set(s, data, valid_floor))
        .collect::<Result<_>>()?;

    let mut ranking = Ranking::default();
    for (i, (set, report)) in sets.iter().zip(reports).enumerate() {
        match &report.invalid_reason {
            Some(reason) => ranking.rejected.push((i, reason.clone())),
            None => ranking.ranked.push(RankedSet {
                set_index: i,
                set: set.clone(),
                report,
            }),
        }
    }
    ranking.ranked.sort_by(|a, b| {
        match b.report.rms_score.total_cmp(&a.report.rms_score) {
            Ordering::Equal => a.set.exponent_matrix().cmp(&b.set.exponent_matrix()),
            other => other,
        }
    });
    ranking.ranked.truncate(top_k);
    Ok(ranking)
}

/// Ranking report CSV: `set_index,rms_score,valid_fraction,r_group_2,…`.
pub fn write_ranking_csv<W: Write>(ranking: &Ranking, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let width = ranking
        .ranked
        .iter()
        .map(|r| r.report.per_group_r.len())
        .max()
        .unwrap_or(0);
    let mut header = vec![
        "set_index".to_string(),
        "rms_score".to_string(),
        "valid_fraction".to_string(),
    ];
    header.extend((0..width).map(|k| format!("r_group_{}", k + 2)));
    w.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
    for r in &ranking.ranked {
        let mut row = vec![
            r.set_index.to_string(),
            format_float(r.report.rms_score),
            format_float(r.report.valid_fraction),
        ];
        row.extend(r.report.per_group_r.iter().map(|&v| format_float(v)));
        row.resize(header.len(), String::new());
        w.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

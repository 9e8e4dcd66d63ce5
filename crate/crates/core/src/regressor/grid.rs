//! Cartesian hyperparameter search with per-point derived seeds.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::train::{fit, MlpConfig, Split};
use crate::dataset::format_float;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub hidden_layers: Vec<usize>,
    pub units: Vec<usize>,
    pub dropout: Vec<f64>,
    pub learning_rate: Vec<f64>,
    #[serde(default = "one")]
    pub repeats: usize,
}

fn one() -> usize {
    1
}

impl GridSpec {
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &hidden_layers in &self.hidden_layers {
            for &units in &self.units {
                for &dropout in &self.dropout {
                    for &learning_rate in &self.learning_rate {
                        out.push(GridPoint {
                            hidden_layers,
                            units,
                            dropout,
                            learning_rate,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hidden_layers: usize,
    pub units: usize,
    pub dropout: f64,
    pub learning_rate: f64,
}

impl GridPoint {
    fn canonical(&self) -> String {
        format!(
            "hidden_layers={};units={};dropout={};learning_rate={}",
            self.hidden_layers,
            self.units,
            format_float(self.dropout),
            format_float(self.learning_rate)
        )
    }

    /// `seed ⊕ H(config) ⊕ repeat`, with `H` the first 8 bytes of SHA-256.
    pub fn seed(&self, seed: u64, repeat: usize) -> u64 {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        seed ^ u64::from_le_bytes(head) ^ repeat as u64
    }

    pub fn config(&self, base: &MlpConfig, seed: u64, repeat: usize) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden_layers,
            units_per_layer: self.units,
            dropout_rate: self.dropout,
            learning_rate: self.learning_rate,
            seed: self.seed(seed, repeat),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    /// Validation R² per repeat; `-inf` marks a diverged or unscorable run.
    pub r2: Vec<f64>,
    pub mean_r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub rows: Vec<GridRow>,
}

/// Trains every grid point `spec.repeats` times. Points run on the rayon pool;
/// results are merged in grid order.
pub fn grid_search(
    xs: &[Vec<f64>],
    ys: &[f64],
    groups: &[String],
    spec: &GridSpec,
    base: &MlpConfig,
    split: Split,
    seed: u64,
) -> Result<GridSearchResult> {
    let points = spec.points();
    if points.is_empty() || spec.repeats == 0 {
        return Err(Error::InvalidInput("grid search needs at least one point and one repeat".into()));
    }
    for p in &points {
        p.config(base, seed, 0).validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..spec.repeats).map(move |r| (i, r)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let cfg = points[i].config(base, seed, r);
            match fit(xs, ys, groups, &cfg, split) {
                Ok(f) => Ok(f.r2_val.unwrap_or(f64::NEG_INFINITY)),
                Err(Error::TrainingDiverged { .. }) => Ok(f64::NEG_INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut scores = scores.into_iter();
    let mut rows = Vec::with_capacity(points.len());
    for point in points {
        let r2 = (0..spec.repeats)
            .map(|_| scores.next().expect("one score per job"))
            .collect::<Result<Vec<f64>>>()?;
        let mean_r2 = r2.iter().sum::<f64>() / r2.len() as f64;
        rows.push(GridRow { point, r2, mean_r2 });
    }
    Ok(GridSearchResult { rows })
}

fn fmt_r2(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format_float(v)
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.iter().any(|o| o.to_bits() == v.to_bits()) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

impl GridSearchResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["hidden_layers", "units", "dropout", "learning_rate", "repeats", "mean_r2"])
            .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.point.hidden_layers.to_string(),
                r.point.units.to_string(),
                format_float(r.point.dropout),
                format_float(r.point.learning_rate),
                r.r2.len().to_string(),
                fmt_r2(r.mean_r2),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn unit_values(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.rows.iter().map(|r| r.point.units).collect();
        u.sort_unstable();
        u.dedup();
        u
    }

    pub fn dropout_values(&self) -> Vec<f64> {
        distinct(self.rows.iter().map(|r| r.point.dropout))
    }

    /// Best mean R² over the remaining hyperparameters for each
    /// (units, dropout) cell; rows follow `unit_values`, columns `dropout_values`.
    pub fn heatmap(&self) -> Vec<Vec<f64>> {
        let drops = self.dropout_values();
        self.unit_values()
            .iter()
            .map(|&u| {
                drops
                    .iter()
                    .map(|&d| {
                        self.rows
                            .iter()
                            .filter(|r| r.point.units == u && r.point.dropout.to_bits() == d.to_bits())
                            .map(|r| r.mean_r2)
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect()
            })
            .collect()
    }

    /// Best mean R² over the remaining hyperparameters for each units value.
    pub fn marginal_units(&self) -> Vec<(usize, f64)> {
        self.unit_values()
            .into_iter()
            .map(|u| {
                let best = self
                    .rows
                    .iter()
                    .filter(|r| r.point.units == u)
                    .map(|r| r.mean_r2)
                    .fold(f64::NEG_INFINITY, f64::max);
                (u, best)
            })
            .collect()
    }

    pub fn write_heatmap_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Format(e.to_string());
        let mut header = vec!["units".to_string()];
        header.extend(self.dropout_values().iter().map(|d| format!("dropout={d}")));
        w.write_record(&header).map_err(err)?;
        for (u, row) in self.unit_values().iter().zip(self.heatmap()) {
            let mut rec = vec![u.to_string()];
            rec.extend(row.into_iter().map(fmt_r2));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_marginal_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["units", "best_mean_r2"]).map_err(err)?;
        for (u, r) in self.marginal_units() {
            w.write_record([u.to_string(), fmt_r2(r)]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

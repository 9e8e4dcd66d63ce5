//! Learned-vs-baseline comparison on records with known targets.

use std::io::Write;

use serde::Serialize;

use crate::dataset::{format_float, Dataset, Record};
use crate::error::{Error, Result};
use crate::regressor::{percentage_error_curve, r_squared, ErrorCurve, TrainedModel};
use crate::scaling::{apply_scaling, compute_distortions, prediction_factor, ReferenceRow};

pub const DEFAULT_ERROR_FLOOR: f64 = 1e-12;

/// Where the δ₁ = 1 baseline takes its reference row from.
#[derive(Debug, Clone, Copy)]
pub enum BaselineReference<'a> {
    /// The model's own reference row.
    Model,
    /// The record of `machine_id` in `data` at the same run and `t` as each
    /// prototype record (a corresponding state).
    Corresponding { data: &'a Dataset, machine_id: &'a str },
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaPoint {
    pub machine_id: String,
    pub run_id: String,
    pub t: f64,
    pub delta_true: f64,
    pub delta_pred: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub learned: ErrorCurve,
    pub baseline: ErrorCurve,
    pub r2_delta: Option<f64>,
    pub deltas: Vec<DeltaPoint>,
    /// Records skipped because the set could not be evaluated on them or no
    /// baseline reference existed.
    pub skipped: usize,
}

fn corresponding<'a>(data: &'a Dataset, machine_id: &str, rec: &Record) -> Option<&'a Record> {
    data.records().iter().find(|r| {
        r.key.machine_id == machine_id && r.key.run_id == rec.key.run_id && r.key.t.to_bits() == rec.key.t.to_bits()
    })
}

pub fn validate_model(
    model: &TrainedModel,
    truth: &Dataset,
    baseline: BaselineReference<'_>,
    floor: f64,
) -> Result<ValidationReport> {
    let set = model.pi_set()?;
    let truth = truth.project(&set.quantities)?;
    let baseline_data = match baseline {
        BaselineReference::Corresponding { data, machine_id } => Some((data.project(&set.quantities)?, machine_id)),
        BaselineReference::Model => None,
    };
    let reference = &model.reference_row;
    let schema = &model.feature_schema;
    let mut true_target = Vec::new();
    let mut learned = Vec::new();
    let mut base = Vec::new();
    let mut loads = Vec::new();
    let mut deltas = Vec::new();
    let mut skipped = 0;
    for rec in truth.records() {
        if rec.key.same_as(&reference.key) {
            continue;
        }
        let v = &rec.values;
        let (Ok(d), Ok(delta_true)) = (
            compute_distortions(&set, reference, v),
            prediction_factor(&set, reference, v),
        ) else {
            skipped += 1;
            continue;
        };
        let proto_pi: Result<Vec<f64>> = set.input_indices().into_iter().map(|k| set.evaluate(k, v)).collect();
        let Ok(proto_pi) = proto_pi else {
            skipped += 1;
            continue;
        };
        let delta_pred = model.predict_features(&schema.features(&d, &proto_pi))?;
        let base_ref = match &baseline_data {
            None => Some(reference.clone()),
            Some((data, machine)) => corresponding(data, machine, rec).and_then(|r| ReferenceRow::from_record(&set, r).ok()),
        };
        let Some(base_ref) = base_ref else {
            skipped += 1;
            continue;
        };
        let est = apply_scaling(&set, reference, v, delta_pred)?;
        let est_base = apply_scaling(&set, &base_ref, v, 1.0)?;
        true_target.push(v[set.target]);
        learned.push(est);
        base.push(est_base);
        loads.push(rec.key.t);
        deltas.push(DeltaPoint {
            machine_id: rec.key.machine_id.clone(),
            run_id: rec.key.run_id.clone(),
            t: rec.key.t,
            delta_true,
            delta_pred,
        });
    }
    if true_target.is_empty() {
        return Err(Error::InvalidInput("no validation record could be scored".into()));
    }
    let dt: Vec<f64> = deltas.iter().map(|p| p.delta_true).collect();
    let dp: Vec<f64> = deltas.iter().map(|p| p.delta_pred).collect();
    Ok(ValidationReport {
        learned: percentage_error_curve(&true_target, &learned, &loads, floor)?,
        baseline: percentage_error_curve(&true_target, &base, &loads, floor)?,
        r2_delta: r_squared(&dt, &dp).ok(),
        deltas,
        skipped,
    })
}

impl ValidationReport {
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["metric", "value"]).map_err(err)?;
        let r2 = self.r2_delta.map_or("undefined".to_string(), format_float);
        let rows = [
            ("learned_mean_percent_error", format_float(self.learned.mean)),
            ("baseline_mean_percent_error", format_float(self.baseline.mean)),
            ("r2_delta", r2),
            ("points", self.learned.points.len().to_string()),
            ("excluded_below_floor", self.learned.excluded.to_string()),
            ("skipped", self.skipped.to_string()),
        ];
        for (k, v) in rows {
            w.write_record([k, v.as_str()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_errors_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record([
            "load",
            "truth",
            "learned",
            "learned_percent_error",
            "baseline",
            "baseline_percent_error",
        ])
        .map_err(err)?;
        for (l, b) in self.learned.points.iter().zip(&self.baseline.points) {
            w.write_record([
                format_float(l.load),
                format_float(l.truth),
                format_float(l.pred),
                format_float(l.percent),
                format_float(b.pred),
                format_float(b.percent),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaledRow {
    pub key: crate::dataset::RecordKey,
    pub delta_pred: f64,
    pub target_pred: f64,
    /// δ₁ = 1 estimate against the model's reference row.
    pub baseline: f64,
}

/// Predicts the target for every record of `data`. The target column may be
/// absent.
pub fn predict_targets(model: &TrainedModel, data: &Dataset) -> Result<Vec<ScaledRow>> {
    let set = model.pi_set()?;
    let missing: Vec<&String> = set
        .quantities
        .iter()
        .enumerate()
        .filter(|&(q, name)| q != set.target && data.column_index(name).is_none())
        .map(|(_, n)| n)
        .collect();
    if let Some(name) = missing.first() {
        return Err(Error::SchemaMismatch(format!("dataset has no column `{name}`")));
    }
    let cols: Vec<Option<usize>> = set.quantities.iter().map(|n| data.column_index(n)).collect();
    let reference = &model.reference_row;
    data.records()
        .iter()
        .map(|rec| {
            let v: Vec<f64> = cols
                .iter()
                .map(|c| c.map_or(f64::NAN, |i| rec.values[i]))
                .collect();
            let d = compute_distortions(&set, reference, &v)?;
            let proto_pi = set
                .input_indices()
                .into_iter()
                .map(|k| set.evaluate(k, &v))
                .collect::<Result<Vec<f64>>>()?;
            let delta_pred = model.predict_features(&model.feature_schema.features(&d, &proto_pi))?;
            Ok(ScaledRow {
                key: rec.key.clone(),
                delta_pred,
                target_pred: apply_scaling(&set, reference, &v, delta_pred)?,
                baseline: apply_scaling(&set, reference, &v, 1.0)?,
            })
        })
        .collect()
}

pub fn write_scaled_csv<W: Write>(target: &str, rows: &[ScaledRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "machine_id".to_string(),
        "run_id".to_string(),
        "t".to_string(),
        "delta1_pred".to_string(),
        format!("{target}_pred"),
        format!("{target}_baseline"),
    ])
    .map_err(err)?;
    for r in rows {
        w.write_record([
            r.key.machine_id.clone(),
            r.key.run_id.clone(),
            format_float(r.key.t),
            format_float(r.delta_pred),
            format_float(r.target_pred),
            format_float(r.baseline),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

//! Distortion ratios, prediction-factor training pairs and target recovery.
//!
//! For a fixed reference ("model") row `m` and a prototype row `p`, every
//! non-target group yields a distortion `dₖ = πₖᵐ / πₖᵖ` and the target group
//! yields the prediction factor `δ₁ = π₁ᵐ / π₁ᵖ`. Given `δ₁`, the prototype
//! target is recovered from `π₁ᵖ = π₁ᵐ / δ₁` using the prototype's other
//! quantities.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_float, Dataset, Record, RecordKey};
use crate::error::{Error, Result};
use crate::pi_engine::PiSet;

/// Pairs with `|δ₁|` or any `|dₖ|` outside these bounds are dropped.
pub const RATIO_BOUNDS: (f64, f64) = (1e-6, 1e6);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub key: RecordKey,
    pub values: Vec<f64>,
    /// Every group of the active set evaluated on `values`, in set order.
    pub pi_values: Vec<f64>,
}

impl ReferenceRow {
    pub fn from_record(set: &PiSet, record: &Record) -> Result<Self> {
        let pi_values = set.evaluate_all(&record.values).map_err(|e| {
            Error::ReferenceSelection(format!("row {} is not valid for the set: {e}", record.key))
        })?;
        if let Some(k) = pi_values.iter().position(|&v| v == 0.0) {
            return Err(Error::ReferenceSelection(format!(
                "row {}: group π{} evaluates to zero",
                record.key,
                k + 1
            )));
        }
        Ok(Self {
            key: record.key.clone(),
            values: record.values.clone(),
            pi_values,
        })
    }

    pub fn target_pi(&self, set: &PiSet) -> f64 {
        self.pi_values[set.target_index]
    }
}

/// Distortion ratios `d₂…dₙ`, one per non-target group in set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionVector(pub Vec<f64>);

impl DistortionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPair {
    pub distortions: DistortionVector,
    pub delta1: f64,
    pub proto_key: RecordKey,
    /// Prototype values of the non-target groups, in set order.
    pub proto_pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefSelector {
    Explicit { key: RecordKey },
    Seeded { machine_id: String, seed: u64 },
}

/// Regressor inputs derived from a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    /// Group positions (in set order) feeding the distortion features.
    pub distortion_groups: Vec<usize>,
    /// Also append the raw prototype Pi values of those groups.
    pub include_raw_pi: bool,
}

impl FeatureSchema {
    pub fn for_set(set: &PiSet, include_raw_pi: bool) -> Self {
        Self {
            distortion_groups: set.input_indices(),
            include_raw_pi,
        }
    }

    pub fn width(&self) -> usize {
        self.distortion_groups.len() * if self.include_raw_pi { 2 } else { 1 }
    }

    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .distortion_groups
            .iter()
            .map(|k| format!("d_{}", k + 1))
            .collect();
        if self.include_raw_pi {
            out.extend(self.distortion_groups.iter().map(|k| format!("pi_{}_p", k + 1)));
        }
        out
    }

    pub fn features(&self, distortions: &DistortionVector, proto_pi: &[f64]) -> Vec<f64> {
        let mut out = distortions.0.clone();
        if self.include_raw_pi {
            out.extend_from_slice(proto_pi);
        }
        out
    }

    pub fn pair_features(&self, pair: &ScalingPair) -> Vec<f64> {
        self.features(&pair.distortions, &pair.proto_pi)
    }
}

fn proto_pi_values(set: &PiSet, proto: &[f64]) -> Result<Vec<f64>> {
    set.input_indices()
        .into_iter()
        .map(|k| set.evaluate(k, proto))
        .collect()
}

/// `dₖ = πₖᵐ / πₖᵖ` for every non-target group.
pub fn compute_distortions(set: &PiSet, reference: &ReferenceRow, proto: &[f64]) -> Result<DistortionVector> {
    let mut d = Vec::with_capacity(set.len().saturating_sub(1));
    for k in set.input_indices() {
        let pi_p = set.evaluate(k, proto)?;
        if pi_p == 0.0 || !pi_p.is_finite() {
            return Err(Error::DistortionUndefined {
                group: k + 1,
                value: pi_p,
            });
        }
        d.push(reference.pi_values[k] / pi_p);
    }
    Ok(DistortionVector(d))
}

/// Exact prediction factor `δ₁ = π₁ᵐ / π₁ᵖ` for a prototype whose target is known.
pub fn prediction_factor(set: &PiSet, reference: &ReferenceRow, proto: &[f64]) -> Result<f64> {
    let pi_p = set.evaluate(set.target_index, proto)?;
    if pi_p == 0.0 {
        return Err(Error::DistortionUndefined {
            group: set.target_index + 1,
            value: pi_p,
        });
    }
    Ok(reference.target_pi(set) / pi_p)
}

/// Recovers the prototype target from `π₁ᵖ = π₁ᵐ / δ₁`. The target entry of
/// `proto` is ignored.
pub fn apply_scaling(set: &PiSet, reference: &ReferenceRow, proto: &[f64], delta1: f64) -> Result<f64> {
    if delta1 == 0.0 {
        return Err(Error::ZeroPredictionFactor);
    }
    if !delta1.is_finite() {
        return Err(Error::InvalidInput(format!("prediction factor {delta1} is not finite")));
    }
    let group = set.target_group();
    if group.exponents[set.target] != 1 {
        return Err(Error::Invariant(format!(
            "π₁ = {} is not linear in the target",
            group.display
        )));
    }
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    for (q, (&e, &v)) in group.exponents.iter().zip(proto).enumerate() {
        if e == 0 || q == set.target {
            continue;
        }
        let fail = |reason: &str| Error::PiEvaluation {
            quantity: set.quantities[q].clone(),
            reason: reason.to_string(),
        };
        if !v.is_finite() {
            return Err(fail("non-finite prototype input"));
        }
        if v == 0.0 {
            return Err(fail("zero prototype input cannot be inverted"));
        }
        if e > 0 {
            num *= v.powi(e as i32);
        } else {
            den *= v.powi((-e) as i32);
        }
    }
    let pi_p = reference.target_pi(set) / delta1;
    let out = pi_p * den / num;
    if !out.is_finite() {
        return Err(Error::InvalidInput(format!("scaled target is not finite ({out})")));
    }
    Ok(out)
}

/// Classical similitude estimate, `δ₁ = 1`.
pub fn baseline_pi_scaling(set: &PiSet, reference: &ReferenceRow, proto: &[f64]) -> Result<f64> {
    apply_scaling(set, reference, proto, 1.0)
}

/// Fixes the reference row for `set` on `data` (already projected to the set's
/// quantities).
pub fn select_reference(set: &PiSet, data: &Dataset, selector: &RefSelector) -> Result<ReferenceRow> {
    match selector {
        RefSelector::Explicit { key } => {
            let rec = data
                .find(key)
                .ok_or_else(|| Error::ReferenceSelection(format!("no record with key {key}")))?;
            ReferenceRow::from_record(set, rec)
        }
        RefSelector::Seeded { machine_id, seed } => {
            let candidates: Vec<ReferenceRow> = data
                .records()
                .iter()
                .filter(|r| &r.key.machine_id == machine_id)
                .filter_map(|r| ReferenceRow::from_record(set, r).ok())
                .collect();
            if candidates.is_empty() {
                return Err(Error::ReferenceSelection(format!(
                    "machine `{machine_id}` has no row valid for the set"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let i = rng.random_range(0..candidates.len());
            Ok(candidates.into_iter().nth(i).expect("index in range"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairSet {
    pub reference: ReferenceRow,
    pub pairs: Vec<ScalingPair>,
    /// Pairs dropped because a ratio fell outside [`RATIO_BOUNDS`].
    pub dropped_out_of_range: usize,
    /// Records on which the set could not be evaluated.
    pub skipped_invalid: usize,
}

fn in_bounds(v: f64) -> bool {
    let a = v.abs();
    a.is_finite() && a >= RATIO_BOUNDS.0 && a <= RATIO_BOUNDS.1
}

enum PairOutcome {
    Pair(ScalingPair),
    OutOfRange,
    Invalid,
}

fn make_pair(set: &PiSet, reference: &ReferenceRow, rec: &Record) -> PairOutcome {
    let (Ok(distortions), Ok(delta1), Ok(proto_pi)) = (
        compute_distortions(set, reference, &rec.values),
        prediction_factor(set, reference, &rec.values),
        proto_pi_values(set, &rec.values),
    ) else {
        return PairOutcome::Invalid;
    };
    if !in_bounds(delta1) || !distortions.0.iter().all(|&d| in_bounds(d)) {
        return PairOutcome::OutOfRange;
    }
    PairOutcome::Pair(ScalingPair {
        distortions,
        delta1,
        proto_key: rec.key.clone(),
        proto_pi,
    })
}

/// Pairs one reference row against every other record of `data`.
pub fn build_training_pairs(set: &PiSet, data: &Dataset, selector: &RefSelector) -> Result<PairSet> {
    let data = data.project(&set.quantities)?;
    let reference = select_reference(set, &data, selector)?;
    pairs_against(set, &data, reference)
}

/// Pairs a fixed reference row against every record of `data` except itself.
pub fn pairs_against(set: &PiSet, data: &Dataset, reference: ReferenceRow) -> Result<PairSet> {
    let data = data.project(&set.quantities)?;
    let outcomes: Vec<PairOutcome> = data
        .records()
        .par_iter()
        .filter(|r| !r.key.same_as(&reference.key))
        .map(|r| make_pair(set, &reference, r))
        .collect();
    let mut out = PairSet {
        reference,
        pairs: Vec::new(),
        dropped_out_of_range: 0,
        skipped_invalid: 0,
    };
    for o in outcomes {
        match o {
            PairOutcome::Pair(p) => out.pairs.push(p),
            PairOutcome::OutOfRange => out.dropped_out_of_range += 1,
            PairOutcome::Invalid => out.skipped_invalid += 1,
        }
    }
    if out.pairs.is_empty() {
        return Err(Error::InvalidInput(
            "no usable (reference, prototype) pairs in the dataset".into(),
        ));
    }
    Ok(out)
}

/// Audit dump: `proto_machine,proto_run,proto_t,d_2…d_n,delta1`.
pub fn write_pairs_csv<W: Write>(set: &PiSet, pairs: &[ScalingPair], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "proto_machine".to_string(),
        "proto_run".to_string(),
        "proto_t".to_string(),
    ];
    header.extend(set.input_indices().iter().map(|k| format!("d_{}", k + 1)));
    header.push("delta1".into());
    w.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
    for p in pairs {
        let mut row = vec![
            p.proto_key.machine_id.clone(),
            p.proto_key.run_id.clone(),
            format_float(p.proto_key.t),
        ];
        row.extend(p.distortions.0.iter().map(|&d| format_float(d)));
        row.push(format_float(p.delta1));
        w.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

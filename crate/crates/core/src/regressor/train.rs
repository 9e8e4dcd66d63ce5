use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::r_squared;
use super::mlp::{Activation, Dense, Mlp};
use crate::error::{Error, Result};
use crate::pi_engine::{PiSet, PiSetFile};
use crate::scaling::{DistortionVector, FeatureSchema, PairSet, ReferenceRow};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const MIN_PAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: usize,
    #[serde(default = "default_units")]
    pub units_per_layer: usize,
    #[serde(default)]
    pub dropout_rate: f64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub activation: Activation,
    /// Stop after this many epochs without validation improvement.
    #[serde(default)]
    pub patience: Option<usize>,
}

fn default_hidden_layers() -> usize {
    2
}
fn default_units() -> usize {
    32
}
fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    32
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: default_hidden_layers(),
            units_per_layer: default_units(),
            dropout_rate: 0.0,
            learning_rate: default_lr(),
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: 0,
            activation: Activation::Relu,
            patience: None,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.units_per_layer < 1 {
            return Err(Error::InvalidInput("units_per_layer must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput(format!(
                "dropout_rate {} is outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning_rate {} must be a positive finite number",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidInput("batch_size must be ≥ 1".into()));
        }
        if self.activation == Activation::Identity {
            return Err(Error::InvalidInput("hidden activation must be relu or tanh".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Split {
    /// Hold out whole (machine, run) groups.
    ByRun { val_fraction: f64 },
    /// Hold out a random fraction of pairs.
    ByFraction { val_fraction: f64 },
}

impl Default for Split {
    fn default() -> Self {
        Split::ByRun { val_fraction: 0.2 }
    }
}

/// Training and validation row indices.
pub fn split_indices(groups: &[String], split: Split, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5917);
    match split {
        Split::ByRun { val_fraction } => {
            check_fraction(val_fraction)?;
            let mut ids: Vec<&String> = groups.iter().collect();
            ids.sort();
            ids.dedup();
            if ids.len() < 2 {
                return Err(Error::Split(format!(
                    "by_run split needs at least 2 runs, found {}",
                    ids.len()
                )));
            }
            ids.shuffle(&mut rng);
            let n_val = ((ids.len() as f64 * val_fraction).round() as usize).clamp(1, ids.len() - 1);
            let held: Vec<&String> = ids[..n_val].to_vec();
            let (mut train, mut val) = (Vec::new(), Vec::new());
            for (i, g) in groups.iter().enumerate() {
                if held.contains(&g) {
                    val.push(i);
                } else {
                    train.push(i);
                }
            }
            Ok((train, val))
        }
        Split::ByFraction { val_fraction } => {
            check_fraction(val_fraction)?;
            let mut idx: Vec<usize> = (0..groups.len()).collect();
            idx.shuffle(&mut rng);
            let n_val = (groups.len() as f64 * val_fraction).round() as usize;
            if n_val == 0 || n_val >= groups.len() {
                return Err(Error::Split(format!(
                    "fraction {val_fraction} of {} pairs leaves an empty side",
                    groups.len()
                )));
            }
            let mut val = idx[..n_val].to_vec();
            let mut train = idx[n_val..].to_vec();
            val.sort_unstable();
            train.sort_unstable();
            Ok((train, val))
        }
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::Split(format!("validation fraction {f} is outside (0, 1)")))
    }
}

/// Per-feature standardization from training statistics; the target is
/// standardized the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 && std.is_finite() { std } else { 1.0 })
}

impl Normalization {
    pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> Self {
        let width = xs.first().map_or(0, Vec::len);
        let (mean, std) = (0..width)
            .map(|j| mean_std(xs.iter().map(move |x| x[j])))
            .unzip();
        let (target_mean, target_std) = mean_std(ys.iter().copied());
        Self {
            mean,
            std,
            target_mean,
            target_std,
        }
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn destandardize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    fn target_forward(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    fn target_back(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}

/// A trained network together with its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub net: Mlp,
    pub normalization: Normalization,
    pub r2_train: Option<f64>,
    pub r2_val: Option<f64>,
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z = self.normalization.standardize(x);
        self.normalization.target_back(self.net.forward(&z))
    }
}

fn r2_or_none(truth: &[f64], pred: &[f64]) -> Option<f64> {
    r_squared(truth, pred).ok()
}

/// Trains on raw feature rows `xs` and targets `ys`; `groups` labels each row
/// with its run for the by-run split.
pub fn fit(xs: &[Vec<f64>], ys: &[f64], groups: &[String], cfg: &MlpConfig, split: Split) -> Result<Fitted> {
    cfg.validate()?;
    if xs.len() != ys.len() || xs.len() != groups.len() {
        return Err(Error::InvalidInput("feature, target and group counts differ".into()));
    }
    if xs.len() < MIN_PAIRS {
        return Err(Error::InvalidInput(format!(
            "training needs at least {MIN_PAIRS} pairs, got {}",
            xs.len()
        )));
    }
    let width = xs[0].len();
    if width == 0 || xs.iter().any(|x| x.len() != width) {
        return Err(Error::InvalidFeature("feature rows must share a nonzero width".into()));
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidFeature("non-finite training value".into()));
    }
    let (train_idx, val_idx) = split_indices(groups, split, cfg.seed)?;
    if val_idx.is_empty() || train_idx.is_empty() {
        return Err(Error::Split("split produced an empty side".into()));
    }
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| xs[i].clone()).collect();
    let train_y: Vec<f64> = train_idx.iter().map(|&i| ys[i]).collect();
    let norm = Normalization::fit(&train_x, &train_y);
    let z_train: Vec<Vec<f64>> = train_x.iter().map(|x| norm.standardize(x)).collect();
    let t_train: Vec<f64> = train_y.iter().map(|&y| norm.target_forward(y)).collect();
    let z_val: Vec<Vec<f64>> = val_idx.iter().map(|&i| norm.standardize(&xs[i])).collect();
    let t_val: Vec<f64> = val_idx.iter().map(|&i| norm.target_forward(ys[i])).collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::new(width, cfg.hidden_layers, cfg.units_per_layer, cfg.activation, &mut init_rng);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let keep = 1.0 - cfg.dropout_rate;
    let widths = net.hidden_widths();

    let mut order: Vec<usize> = (0..z_train.len()).collect();
    let mut best: Option<(f64, Mlp)> = None;
    let mut stale = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| z_train[i].as_slice()).collect();
            let by: Vec<f64> = batch.iter().map(|&i| t_train[i]).collect();
            let masks: Option<Vec<Vec<Vec<f64>>>> = (cfg.dropout_rate > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| {
                        widths
                            .iter()
                            .map(|&w| {
                                (0..w)
                                    .map(|_| {
                                        if dropout_rng.random::<f64>() < keep {
                                            1.0 / keep
                                        } else {
                                            0.0
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            });
            let (loss, grads) = net.loss_and_gradient(&bx, &by, masks.as_deref());
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            net.sgd_step(&grads, cfg.learning_rate);
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        if let Some(patience) = cfg.patience {
            let val_loss = mse(&net, &z_val, &t_val);
            match &best {
                Some((b, _)) if val_loss >= *b => {
                    stale += 1;
                    if stale > patience {
                        break;
                    }
                }
                _ => {
                    best = Some((val_loss, net.clone()));
                    stale = 0;
                }
            }
        }
    }
    if let Some((_, b)) = best {
        net = b;
    }

    let fitted = Fitted {
        net,
        normalization: norm,
        r2_train: None,
        r2_val: None,
    };
    let pred_train: Vec<f64> = train_x.iter().map(|x| fitted.predict(x)).collect();
    let val_y: Vec<f64> = val_idx.iter().map(|&i| ys[i]).collect();
    let pred_val: Vec<f64> = val_idx.iter().map(|&i| fitted.predict(&xs[i])).collect();
    if pred_train.iter().chain(&pred_val).any(|p| !p.is_finite()) {
        return Err(Error::TrainingDiverged { epoch: cfg.epochs });
    }
    Ok(Fitted {
        r2_train: r2_or_none(&train_y, &pred_train),
        r2_val: r2_or_none(&val_y, &pred_val),
        ..fitted
    })
}

fn mse(net: &Mlp, zs: &[Vec<f64>], ts: &[f64]) -> f64 {
    zs.iter()
        .zip(ts)
        .map(|(z, t)| (net.forward(z) - t).powi(2))
        .sum::<f64>()
        / zs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2_train: Option<f64>,
    pub r2_val: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub feature_schema: FeatureSchema,
    pub normalization: Normalization,
    pub layers: Vec<Dense>,
    pub pi_set: PiSetFile,
    pub reference_row: ReferenceRow,
    pub metrics: Metrics,
    pub seed: u64,
    pub config: MlpConfig,
}

/// Feature matrix, δ₁ targets and run labels for a pair set.
pub fn design_matrix(pairs: &PairSet, schema: &FeatureSchema) -> (Vec<Vec<f64>>, Vec<f64>, Vec<String>) {
    let xs = pairs.pairs.iter().map(|p| schema.pair_features(p)).collect();
    let ys = pairs.pairs.iter().map(|p| p.delta1).collect();
    let groups = pairs
        .pairs
        .iter()
        .map(|p| format!("{}/{}", p.proto_key.machine_id, p.proto_key.run_id))
        .collect();
    (xs, ys, groups)
}

/// Fits δ₁ against the distortion features of `pairs`.
pub fn train(
    set: &PiSet,
    pairs: &PairSet,
    schema: FeatureSchema,
    cfg: &MlpConfig,
    split: Split,
) -> Result<TrainedModel> {
    let (xs, ys, groups) = design_matrix(pairs, &schema);
    let fitted = fit(&xs, &ys, &groups, cfg, split)?;
    Ok(TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        feature_schema: schema,
        normalization: fitted.normalization,
        layers: fitted.net.layers,
        pi_set: PiSetFile::from_sets(std::slice::from_ref(set))?,
        reference_row: pairs.reference.clone(),
        metrics: Metrics {
            r2_train: fitted.r2_train,
            r2_val: fitted.r2_val,
        },
        seed: cfg.seed,
        config: cfg.clone(),
    })
}

impl TrainedModel {
    pub fn pi_set(&self) -> Result<PiSet> {
        self.pi_set
            .clone()
            .into_sets()?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Format("model artifact holds no pi set".into()))
    }

    fn network(&self) -> Mlp {
        Mlp {
            layers: self.layers.clone(),
        }
    }

    /// Checks shape and normalization invariants after loading.
    pub fn check(&self) -> Result<()> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "model schema_version {} is not supported (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let net = self.network();
        let width = self.feature_schema.width();
        if !net.shapes_chain() || net.inputs() != width || self.normalization.mean.len() != width {
            return Err(Error::Format("model layer shapes do not chain to the feature schema".into()));
        }
        if self
            .normalization
            .std
            .iter()
            .chain(std::iter::once(&self.normalization.target_std))
            .any(|s| !(*s > 0.0))
        {
            return Err(Error::Format("normalization std must be positive".into()));
        }
        Ok(())
    }

    pub fn predict_features(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_schema.width() {
            return Err(Error::InvalidFeature(format!(
                "expected {} features, got {}",
                self.feature_schema.width(),
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeature("non-finite feature value".into()));
        }
        let z = self.normalization.standardize(features);
        let out = self.normalization.target_back(self.network().forward(&z));
        if !out.is_finite() {
            return Err(Error::InvalidFeature(format!("prediction is not finite ({out})")));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedModel =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        model.check()?;
        Ok(model)
    }
}

/// Forward pass with dropout disabled. Only valid for models whose schema has
/// no raw-Pi features; use [`TrainedModel::predict_features`] otherwise.
pub fn predict_delta(model: &TrainedModel, d: &DistortionVector) -> Result<f64> {
    if model.feature_schema.include_raw_pi {
        return Err(Error::InvalidFeature(
            "model also expects raw prototype Pi features".into(),
        ));
    }
    model.predict_features(d.as_slice())
}

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simiscale::pi_engine::{PiSet, PiSetFile};
use simiscale::regressor::{train, Activation, MlpConfig, Split, TrainedModel};
use simiscale::scaling::{build_training_pairs, DistortionVector, FeatureSchema, PairSet, RefSelector, ReferenceRow, ScalingPair};
use simiscale::selection::rank_pi_sets;
use simiscale::testbench::{generate_fleet, FleetSpec};
use simiscale::validation::{predict_targets, validate_model, BaselineReference};
use simiscale::{enumerate_pi_sets, Dataset, EnumerationLimits, QuantityRegistry, Record, RecordKey};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_fleet() -> FleetSpec {
    FleetSpec::load(configs().join("fleet_small.toml")).unwrap()
}

fn acceptance_set() -> PiSet {
    PiSetFile::load(configs().join("pi_set_acceptance.json")).unwrap().remove(0)
}

#[test]
fn one_run_two_machines_eight_loads() {
    let mut spec = small_fleet();
    spec.runs.truncate(1);
    let data = generate_fleet(&spec, 0).unwrap();
    assert_eq!(data.len(), 16);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 17);
}

#[test]
fn bucket_mass_scales_with_cube_of_lambda() {
    let data = generate_fleet(&small_fleet(), 0).unwrap();
    let mb = |m: &str| data.records().iter().find(|r| r.key.machine_id == m).unwrap().values[6];
    let ratio = mb("full") / mb("mini");
    assert!((ratio / 9.636f64.powi(3) - 1.0).abs() < 1e-12);
    assert!((ratio - 894.8).abs() / 894.8 < 1e-3);
}

#[test]
fn csv_round_trip_is_exact() {
    let data = generate_fleet(&small_fleet(), 3).unwrap();
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(buf.as_slice(), "mem").unwrap();
    assert_eq!(back, data);
}

#[test]
fn analyze_on_bench_data_ranks_six_group_sets() {
    let registry = QuantityRegistry::load(configs().join("registry_bucket.json")).unwrap();
    let data = generate_fleet(&small_fleet(), 1).unwrap();
    let sets = enumerate_pi_sets(&registry, "F21", EnumerationLimits::default()).unwrap();
    let ranking = rank_pi_sets(&sets, &data, 5, 0.95).unwrap();
    assert!(!ranking.ranked.is_empty());
    assert_eq!(ranking.ranked[0].set.len(), 6);
    let scores: Vec<f64> = ranking.ranked.iter().map(|r| r.report.rms_score).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn linear_prediction_factor_is_learned() {
    let set = acceptance_set();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let coef = [0.3, -0.2, 0.15, 0.1, -0.25];
    let pairs: Vec<ScalingPair> = (0..400)
        .map(|i| {
            let d: Vec<f64> = (0..5).map(|_| rng.random_range(0.7..1.4)).collect();
            let delta1 = 1.0 + coef.iter().zip(&d).map(|(c, x)| c * (x - 1.0)).sum::<f64>();
            ScalingPair {
                distortions: DistortionVector(d.clone()),
                delta1,
                proto_key: RecordKey::new("m", &format!("r{}", i % 20), i as f64),
                proto_pi: d,
            }
        })
        .collect();

    // Least-squares oracle: the relation is exactly affine in the features.
    let rows: Vec<Vec<f64>> = pairs.iter().map(|p| std::iter::once(1.0).chain(p.distortions.0.iter().copied()).collect()).collect();
    let ata: Vec<Vec<f64>> = (0..6).map(|i| (0..6).map(|j| rows.iter().map(|r| r[i] * r[j]).sum()).collect()).collect();
    let aty: Vec<f64> = (0..6).map(|i| rows.iter().zip(&pairs).map(|(r, p)| r[i] * p.delta1).sum()).collect();
    let beta = solve(ata, aty);
    for (b, c) in beta[1..].iter().zip(coef) {
        assert!((b - c).abs() < 1e-9);
    }

    let reference = ReferenceRow {
        key: RecordKey::new("ref", "r", 0.0),
        values: vec![1.0; 9],
        pi_values: vec![1.0; 6],
    };
    let pair_set = PairSet { reference, pairs, dropped_out_of_range: 0, skipped_invalid: 0 };
    let cfg = MlpConfig {
        hidden_layers: 1,
        units_per_layer: 16,
        activation: Activation::Tanh,
        epochs: 300,
        batch_size: 16,
        seed: 2,
        ..MlpConfig::default()
    };
    let model = train(&set, &pair_set, FeatureSchema::for_set(&set, false), &cfg, Split::default()).unwrap();
    assert!(model.metrics.r2_val.unwrap() >= 0.99, "{:?}", model.metrics);
}

fn quick_model(data: &Dataset, set: &PiSet) -> TrainedModel {
    let pairs = build_training_pairs(set, data, &RefSelector::Seeded { machine_id: "mini".into(), seed: 0 }).unwrap();
    let cfg = MlpConfig { hidden_layers: 1, units_per_layer: 4, epochs: 5, ..MlpConfig::default() };
    train(set, &pairs, FeatureSchema::for_set(set, false), &cfg, Split::ByFraction { val_fraction: 0.2 }).unwrap()
}

#[test]
fn undistorted_baseline_is_exact() {
    let set = acceptance_set();
    let data = generate_fleet(&small_fleet(), 2).unwrap();
    let model = quick_model(&data, &set);
    let full = data.filter(|r| r.key.machine_id == "full");
    let report = validate_model(&model, &full, BaselineReference::Corresponding { data: &data, machine_id: "mini" }, 1e-12).unwrap();
    assert_eq!(report.skipped, 0);
    assert!(report.baseline.mean < 1e-7, "{}", report.baseline.mean);
    let mean = report.learned.points.iter().map(|p| p.percent).sum::<f64>() / report.learned.points.len() as f64;
    assert!((mean - report.learned.mean).abs() <= 8.0 * f64::EPSILON * mean);
}

#[test]
fn model_file_round_trip_predicts_identically() {
    let set = acceptance_set();
    let data = generate_fleet(&small_fleet(), 2).unwrap();
    let model = quick_model(&data, &set);
    let dir = std::env::temp_dir().join(format!("simiscale-model-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    model.save(&path).unwrap();
    let back = TrainedModel::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back.to_json().unwrap(), model.to_json().unwrap());
    let a = predict_targets(&model, &data).unwrap();
    let b = predict_targets(&back, &data).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.target_pred.to_bits(), y.target_pred.to_bits());
    }
}

#[test]
fn scaling_without_target_column() {
    let set = acceptance_set();
    let data = generate_fleet(&small_fleet(), 2).unwrap();
    let model = quick_model(&data, &set);
    let names: Vec<String> = data.names()[1..].to_vec();
    let proto = data.project(&names).unwrap();
    let with = predict_targets(&model, &data).unwrap();
    let without = predict_targets(&model, &proto).unwrap();
    for (a, b) in with.iter().zip(&without) {
        assert_eq!(a.target_pred.to_bits(), b.target_pred.to_bits());
    }
    let missing = data.project(&data.names()[..5]).unwrap();
    assert!(predict_targets(&model, &missing).is_err());
}

#[test]
fn record_with_zero_group_cannot_be_reference() {
    let set = acceptance_set();
    let rec = Record { key: RecordKey::new("m", "r", 0.0), values: vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0] };
    assert!(ReferenceRow::from_record(&set, &rec).is_err());
}

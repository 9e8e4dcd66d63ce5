//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p simiscale-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simiscale::dimensions::{DimVector, FundamentalUnit, Quantity, Role};
use simiscale::pi_engine::{build_dimensional_matrix, nullspace_basis, PiSet, PiSetFile};
use simiscale::regressor::{r_squared, Activation, Mlp};
use simiscale::scaling::{apply_scaling, baseline_pi_scaling, compute_distortions, prediction_factor, ReferenceRow};
use simiscale::selection::{pearson, rms, score_pi_set};
use simiscale::testbench::{
    generate_fleet, solve_bucket_statics, solve_cylinder_forces, solve_quasi_static, ArmGeometry, FleetSpec,
    LinkageGeometry, LoadCase,
};
use simiscale::{enumerate_pi_sets, Dataset, EnumerationLimits, QuantityRegistry, Rational, Record, RecordKey};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_simiscale")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn acceptance_set() -> PiSet {
    PiSetFile::load(configs().join("pi_set_acceptance.json")).unwrap().remove(0)
}

fn simiscale(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`simiscale {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn read_metric(csv_path: &Path, key: &str) -> Result<f64, String> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| e.to_string())?;
    text.lines()
        .filter_map(|l| l.split_once(','))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| format!("{key} missing from {}", csv_path.display()))
}

fn ac1() -> Outcome {
    let t0 = Instant::now();
    let registry = QuantityRegistry::load(configs().join("registry_bucket.json")).map_err(|e| e.to_string())?;
    let p = registry.quantities().len();
    let f = registry.fundamental_count();
    let n = simiscale::dimensions::pi_count(p, f).map_err(|e| e.to_string())?;
    let basis = nullspace_basis(&build_dimensional_matrix(&registry));
    check(p == 9 && f == 3 && n == 6 && basis.len() == 6, || {
        format!("p={p} f={f} n={n} nullspace={}", basis.len())
    })?;
    let sets = enumerate_pi_sets(&registry, "F21", EnumerationLimits::default()).map_err(|e| e.to_string())?;
    check(sets.iter().all(|s| s.len() == 6), || "a set without 6 groups".into())?;
    let want = [1, -1, 0, 0, 0, 0, 0, 0, 0];
    let hits = sets.iter().filter(|s| s.target_group().exponents == want).count();
    check(hits > 0, || "no set has π₁ = F21·F31^-1".into())?;
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!("n = 9 - 3 = {n}; {hits} of {} sets have π₁ = F21·F31^-1", sets.len()))
}

fn random_registry(rng: &mut ChaCha8Rng) -> (QuantityRegistry, Vec<Vec<Rational>>) {
    let symbols = ["M", "L", "T", "Θ"];
    let n_units = rng.random_range(2..=4);
    let units: Vec<FundamentalUnit> = symbols[..n_units].iter().map(|s| FundamentalUnit::new(s, "")).collect();
    let p = rng.random_range(3..=10);
    let target = rng.random_range(0..p);
    let mut dims = Vec::with_capacity(p);
    let quantities = (0..p)
        .map(|q| {
            let e: Vec<Rational> = (0..n_units)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        Rational::new(rng.random_range(-3..=3), 2)
                    } else {
                        Rational::from_integer(rng.random_range(-2..=2))
                    }
                })
                .collect();
            dims.push(e.clone());
            Quantity {
                name: format!("q{q}"),
                dim: DimVector::new(e),
                role: if q == target { Role::Target } else { Role::Input },
                unit_label: String::new(),
            }
        })
        .collect();
    (QuantityRegistry::new(units, quantities).unwrap(), dims)
}

fn ac2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut registries, mut groups, mut attempts) = (0, 0usize, 0);
    let limits = EnumerationLimits { max_sets: 64, max_abs_exponent: 4 };
    while registries < 60 {
        attempts += 1;
        check(attempts < 10_000, || "could not build enough feasible registries".into())?;
        let (registry, dims) = random_registry(&mut rng);
        let target = registry.target().name.clone();
        let Ok(sets) = enumerate_pi_sets(&registry, &target, limits) else {
            continue;
        };
        if sets.is_empty() {
            continue;
        }
        registries += 1;
        for set in &sets {
            for g in &set.groups {
                // Induced dimension, summed independently of the library.
                for u in 0..dims[0].len() {
                    let total = g
                        .exponents
                        .iter()
                        .zip(&dims)
                        .fold(Rational::from_integer(0), |acc, (&e, d)| acc + d[u] * Rational::from_integer(e));
                    check(total == Rational::from_integer(0), || {
                        format!("group {} has nonzero exponent {total} on unit {u}", g.display)
                    })?;
                }
                groups += 1;
            }
        }
    }
    within(t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{groups} groups from {registries} random registries, all exactly dimensionless"))
}

fn ac3() -> Outcome {
    let t0 = Instant::now();
    let spec = FleetSpec::load(configs().join("fleet_small.toml")).map_err(|e| e.to_string())?;
    check(spec.distortion.is_empty(), || "fleet_small.toml must be undistorted".into())?;
    let set = acceptance_set();
    let data = generate_fleet(&spec, 7).map_err(|e| e.to_string())?.project(&set.quantities).map_err(|e| e.to_string())?;
    let (mut worst_f21, mut worst_d, mut checked) = (0.0f64, 0.0f64, 0);
    for model in data.records().iter().filter(|r| r.key.machine_id == "mini") {
        let reference = ReferenceRow::from_record(&set, model).map_err(|e| e.to_string())?;
        for proto in data.records().iter().filter(|r| {
            r.key.machine_id == "full" && r.key.run_id == model.key.run_id && r.key.t == model.key.t
        }) {
            let est = baseline_pi_scaling(&set, &reference, &proto.values).map_err(|e| e.to_string())?;
            let truth = proto.values[set.target];
            worst_f21 = worst_f21.max(((est - truth) / truth).abs());
            let d = compute_distortions(&set, &reference, &proto.values).map_err(|e| e.to_string())?;
            worst_d = d.0.iter().fold(worst_d, |w, &x| w.max((x - 1.0).abs()));
            checked += 1;
        }
    }
    check(checked > 0 && checked * 2 == data.len(), || format!("only {checked} corresponding pairs"))?;
    check(worst_f21 < 1e-9, || format!("F21 relative error {worst_f21:e}"))?;
    check(worst_d < 1e-9, || format!("max |d - 1| = {worst_d:e}"))?;
    within(t0.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{checked} records: max F21 rel. error {worst_f21:.1e}, max |d-1| {worst_d:.1e}"))
}

fn ac4(dir: &Path) -> Outcome {
    let t0 = Instant::now();
    let cfg = configs().join("acceptance.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.join("ac4");
    let out_s = out.to_str().unwrap();
    let data = out.join("dataset.csv");
    let data_s = data.to_str().unwrap();
    simiscale(&["generate", "--config", cfg, "--out", out_s, "--serial"])?;
    simiscale(&["train", "--config", cfg, "--data", data_s, "--out", out_s, "--serial"])?;
    let model = out.join("model.json");
    simiscale(&["validate", "--config", cfg, "--data", data_s, "--model", model.to_str().unwrap(), "--out", out_s, "--serial"])?;
    let summary = out.join("summary.csv");
    let r2 = read_metric(&summary, "r2_delta")?;
    let learned = read_metric(&summary, "learned_mean_percent_error")?;
    let baseline = read_metric(&summary, "baseline_mean_percent_error")?;
    let elapsed = t0.elapsed();
    let detail = format!(
        "held-out R²(δ₁) {r2:.4}; mean F21 error learned {learned:.3}% vs baseline {baseline:.3}% (ratio {:.3}); {elapsed:.1?}",
        learned / baseline
    );
    check(r2 >= 0.95, || format!("R² below 0.95: {detail}"))?;
    check(learned <= 0.25 * baseline, || format!("error ratio above 0.25: {detail}"))?;
    within(elapsed, Duration::from_secs(180))?;
    Ok(detail)
}

fn ac5() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut params = 0;
    for trial in 0..20 {
        let inputs = rng.random_range(1..=4);
        let act = if trial % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let net = Mlp::new(inputs, rng.random_range(1..=3), rng.random_range(2..=8), act, &mut rng);
        let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let analytic = net.loss_and_gradient(&refs, &ys, None).1.flatten();
        let base = net.params();
        let mut probe = net.clone();
        for (i, a) in analytic.iter().enumerate() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_params(&p);
            let up = probe.loss_and_gradient(&refs, &ys, None).0;
            p[i] = base[i] - h;
            probe.set_params(&p);
            let down = probe.loss_and_gradient(&refs, &ys, None).0;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            params += 1;
        }
    }
    check(worst < 1e-4, || format!("worst relative error {worst:e}"))?;
    within(t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{params} parameters over 20 networks, worst relative error {worst:.2e}"))
}

fn ulps(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    if a.signum() != b.signum() {
        return u64::MAX;
    }
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

fn random_record(rng: &mut ChaCha8Rng, p: usize, i: usize) -> Record {
    Record {
        key: RecordKey::new("m", "r", i as f64),
        values: (0..p).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect(),
    }
}

fn ac6() -> Outcome {
    let t0 = Instant::now();
    let set = acceptance_set();
    let p = set.quantities.len();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst = 0;
    for i in 0..1000 {
        let reference = ReferenceRow::from_record(&set, &random_record(&mut rng, p, 2 * i)).map_err(|e| e.to_string())?;
        let proto = random_record(&mut rng, p, 2 * i + 1);
        let delta = prediction_factor(&set, &reference, &proto.values).map_err(|e| e.to_string())?;
        let est = apply_scaling(&set, &reference, &proto.values, delta).map_err(|e| e.to_string())?;
        worst = worst.max(ulps(est, proto.values[set.target]));
    }
    check(worst <= 8, || format!("worst round trip {worst} ulps"))?;
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1000 pairs, worst round trip {worst} ulps"))
}

fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / vx.sqrt() / vy.sqrt()
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let names: Vec<String> = ["y", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
    // y·a^-1 is the target group; b·a^-1 and c·a^-1 are scored against y.
    let set = PiSet::from_exponents(names.clone(), 0, 0, vec![vec![1, -1, 0, 0], vec![0, -1, 1, 0], vec![0, -1, 0, 1]]);
    for _ in 0..100 {
        let n = rng.random_range(5..200);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let slope = rng.random_range(-2.0..2.0);
        let y: Vec<f64> = x.iter().map(|v| slope * v + rng.random_range(-5.0..5.0)).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((r - direct_pearson(&x, &y)).abs());

        let rs: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let direct_rms = (rs.iter().map(|v| v * v).sum::<f64>() / rs.len() as f64).sqrt();
        worst = worst.max((rms(&rs) - direct_rms).abs());

        let pred: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        let my = y.iter().sum::<f64>() / n as f64;
        let direct_r2 = 1.0
            - y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                / y.iter().map(|a| (a - my).powi(2)).sum::<f64>();
        worst = worst.max((r_squared(&y, &pred).map_err(|e| e.to_string())? - direct_r2).abs());
        if r_squared(&y, &y).map_err(|e| e.to_string())? != 1.0 {
            return Err("r_squared(truth, truth) != 1".into());
        }
        if r_squared(&y, &vec![my; n]).map_err(|e| e.to_string())? != 0.0 {
            return Err("r_squared(truth, mean) != 0".into());
        }

        let mut data = Dataset::new(names.clone());
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(0.5..5.0)).collect()).collect();
        for i in 0..n {
            data.push(Record { key: RecordKey::new("m", "r", i as f64), values: cols.iter().map(|c| c[i]).collect() })
                .map_err(|e| e.to_string())?;
        }
        let report = score_pi_set(&set, &data, 0.95).map_err(|e| e.to_string())?;
        let g = |k: usize| -> Vec<f64> { (0..n).map(|i| cols[k][i] / cols[1][i]).collect() };
        let r_b = direct_pearson(&g(2), &cols[0]);
        let r_c = direct_pearson(&g(3), &cols[0]);
        worst = worst.max((report.rms_score - ((r_b * r_b + r_c * r_c) / 2.0).sqrt()).abs());
    }
    check(worst <= 1e-12, || format!("worst deviation {worst:e}"))?;
    Ok(format!("100 series: worst deviation from direct formulas {worst:.1e}; R² identities exact"))
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn rel_vec(terms: &[[f64; 2]]) -> f64 {
    let sx: f64 = terms.iter().map(|t| t[0]).sum();
    let sy: f64 = terms.iter().map(|t| t[1]).sum();
    let mag: f64 = terms.iter().map(|t| t[0].hypot(t[1])).sum();
    if mag == 0.0 {
        0.0
    } else {
        sx.hypot(sy) / mag
    }
}

fn rel_scalar(terms: &[f64]) -> f64 {
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / mag
    }
}

fn ac8() -> Outcome {
    let geom = |mass: f64| LinkageGeometry {
        link_attach: [0.0, 1.0],
        link_dir: [1.0, 0.0],
        bucket_com: [0.5, 0.0],
        tip: [1.0, -0.2],
        bucket_mass: mass,
        arm: ArmGeometry {
            base_pivot: [-2.0, -0.5],
            com: [-1.0, 0.0],
            mass: 0.0,
            lift_attach: [-1.5, -0.3],
            lift_dir: [0.6, 0.8],
            crank_pivot: [-0.8, 0.6],
            tilt_attach: [-1.0, 1.2],
            tilt_dir: [1.0, 0.0],
        },
        g: 9.81,
    };
    let sol = solve_bucket_statics(&geom(100.0), &LoadCase::still(0.0)).map_err(|e| e.to_string())?;
    // Moments about O: 1·s = 0.5·981 → s = 490.5 pulling along -x; F31 = (490.5, 981).
    let f31 = sol.f31[0].hypot(sol.f31[1]);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    check(
        rel(sol.f21[0], -490.5) < 1e-9 && sol.f21[1].abs() < 1e-9 * 490.5 && rel(f31, 490.5 * 5f64.sqrt()) < 1e-9,
        || format!("hand case gave F21 {:?}, |F31| {f31}", sol.f21),
    )?;
    check((f31 * 10.0).floor() / 10.0 == 1096.7, || format!("|F31| = {f31}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 500 {
        let mut p = || [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let arm = ArmGeometry {
            base_pivot: p(),
            com: p(),
            mass: 0.0,
            lift_attach: p(),
            lift_dir: unit(p()),
            crank_pivot: p(),
            tilt_attach: p(),
            tilt_dir: unit(p()),
        };
        let mut g = LinkageGeometry {
            link_attach: p(),
            link_dir: unit(p()),
            bucket_com: p(),
            tip: p(),
            bucket_mass: 0.0,
            arm,
            g: 9.81,
        };
        let mut load = LoadCase::still(0.0);
        load.load_com = Some(p());
        let r = p();
        load.reaction = [50.0 * r[0], 50.0 * r[1]];
        load.accel_dir = unit(p());
        g.bucket_mass = rng.random_range(0.1..100.0);
        g.arm.mass = rng.random_range(0.1..100.0);
        load.load_mass = rng.random_range(0.0..50.0);
        load.a1 = rng.random_range(-3.0..3.0);
        load.alpha1 = rng.random_range(-3.0..3.0);
        load.inertia = rng.random_range(0.0..20.0);
        let Ok(b) = solve_quasi_static(&g, &load) else { continue };
        let Ok(c) = solve_cylinder_forces(&g, &load, &b) else { continue };

        let m = g.bucket_mass + load.load_mass;
        let lc = load.load_com.unwrap();
        let com = [
            (g.bucket_com[0] * g.bucket_mass + lc[0] * load.load_mass) / m,
            (g.bucket_com[1] * g.bucket_mass + lc[1] * load.load_mass) / m,
        ];
        let w = [0.0, -m * g.g];
        let ma = [-m * load.a1 * load.accel_dir[0], -m * load.a1 * load.accel_dir[1]];
        let w_arm = [0.0, -g.arm.mass * g.g];
        let tilt = [c.p_tilt * g.arm.tilt_dir[0], c.p_tilt * g.arm.tilt_dir[1]];
        let lift = [c.p_lift * g.arm.lift_dir[0], c.p_lift * g.arm.lift_dir[1]];
        let neg = |v: [f64; 2]| [-v[0], -v[1]];
        let about = |o: [f64; 2], pt: [f64; 2], f: [f64; 2]| cross([pt[0] - o[0], pt[1] - o[1]], f);
        let bp = g.arm.base_pivot;
        let cp = g.arm.crank_pivot;
        // Bucket translation and rotation about O, crank rotation about its
        // pivot, arm+crank rotation about the base pivot, whole machine.
        let res = [
            rel_vec(&[b.f21, b.f31, w, load.reaction, ma]),
            rel_scalar(&[cross(g.link_attach, b.f21), cross(com, w), cross(g.tip, load.reaction), -load.inertia * load.alpha1]),
            rel_scalar(&[about(cp, g.link_attach, neg(b.f21)), about(cp, g.arm.tilt_attach, tilt)]),
            rel_scalar(&[
                about(bp, [0.0, 0.0], neg(b.f31)),
                about(bp, g.link_attach, neg(b.f21)),
                about(bp, g.arm.tilt_attach, tilt),
                about(bp, g.arm.com, w_arm),
                about(bp, g.arm.lift_attach, lift),
            ]),
            rel_vec(&[c.f43, load.reaction, tilt, lift, w, w_arm, ma]),
        ];
        worst = res.iter().fold(worst, |a, &b| a.max(b));
        checked += 1;
    }
    check(worst <= 1e-9, || format!("worst residual {worst:e}"))?;
    Ok(format!("hand case |F31| = {f31:.3} N; 500 random configurations, worst residual {worst:.1e}"))
}

fn ac9(dir: &Path) -> Outcome {
    let quick = configs().join("quick.toml");
    let quick = quick.to_str().unwrap();
    let run = |tag: &str| -> Result<PathBuf, String> {
        let out = dir.join(format!("ac9_{tag}"));
        let o = out.to_str().unwrap();
        simiscale(&["generate", "--config", quick, "--seed", "5", "--out", o, "--serial"])?;
        let data = out.join("dataset.csv");
        let d = data.to_str().unwrap();
        simiscale(&["train", "--config", quick, "--seed", "5", "--data", d, "--out", o, "--serial"])?;
        simiscale(&["gridsearch", "--config", quick, "--seed", "5", "--data", d, "--out", o, "--serial"])?;
        Ok(out)
    };
    let (a, b) = (run("a")?, run("b")?);
    let files = [
        "dataset.csv",
        "model.json",
        "pairs.csv",
        "grid.csv",
        "heatmap.csv",
        "marginal_units.csv",
        "heatmap.svg",
        "marginal_units.svg",
    ];
    for f in files {
        let x = std::fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let y = std::fs::read(b.join(f)).map_err(|e| format!("{f}: {e}"))?;
        check(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} output files byte-identical across two runs", files.len()))
}

fn ac10(dir: &Path) -> Outcome {
    let out = dir.join("ac10");
    let o = out.to_str().unwrap();
    let acc = configs().join("acceptance.toml");
    simiscale(&["generate", "--config", acc.to_str().unwrap(), "--out", o, "--serial"])?;
    let data = out.join("dataset.csv");
    let grid = configs().join("grid_units.toml");
    simiscale(&["gridsearch", "--config", grid.to_str().unwrap(), "--data", data.to_str().unwrap(), "--out", o, "--serial"])?;
    let text = std::fs::read_to_string(out.join("marginal_units.csv")).map_err(|e| e.to_string())?;
    let marginal: Vec<(usize, f64)> = text
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(u, r)| (u.parse().unwrap(), r.parse().unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let at = |u: usize| marginal.iter().find(|m| m.0 == u).map(|m| m.1).ok_or(format!("units={u} missing"));
    let (r1, r16) = (at(1)?, at(16)?);
    let curve: Vec<String> = marginal.iter().map(|(u, r)| format!("{u}:{r:.4}")).collect();
    check(r16 >= r1, || format!("R²(16) < R²(1): {}", curve.join(" ")))?;
    Ok(format!("best mean R² by units {}", curve.join(" ")))
}

fn main() {
    let dir = std::env::temp_dir().join(format!("simiscale-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("AC1", "Buckingham count", Box::new(ac1)),
        ("AC2", "dimensionlessness fuzz", Box::new(ac2)),
        ("AC3", "similitude oracle", Box::new(ac3)),
        ("AC4", "distortion-aware scaling beats the classical law", Box::new(|| ac4(&dir))),
        ("AC5", "gradient check", Box::new(ac5)),
        ("AC6", "round-trip identity", Box::new(ac6)),
        ("AC7", "metric oracles", Box::new(ac7)),
        ("AC8", "statics oracle", Box::new(ac8)),
        ("AC9", "reproducibility", Box::new(|| ac9(&dir))),
        ("AC10", "grid-search shape", Box::new(|| ac10(&dir))),
    ];
    let mut failed = 0;
    for (id, name, f) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail}");
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Multi-scale fleets of the bucket linkage with injected scale distortions.
//!
//! Bucket-fixed points (Link B attachment, centres of mass, tip) are given in
//! the bucket frame and rotated by each run's tilt angle; arm points are fixed.
//! A machine with scale λ has lengths ×λ, masses ×λ³, a₁ ×1 and α₁ ×λ⁻¹ before
//! distortion. Record times `t` hold the nominal load at base scale, so the
//! same (run, t) on two machines is a corresponding state.

use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::statics::{
    add, norm, residuals, rotate, scale, solve_cylinder_forces, solve_quasi_static, sub, unit, ArmGeometry,
    LinkageGeometry, LoadCase, Vec2,
};
use crate::dataset::{Dataset, Record, RecordKey};
use crate::error::{Error, Result};

/// Recorded quantities, in registry order.
pub const QUANTITIES: [&str; 9] = ["F21", "F31", "P_f_tilt", "P_f_lift", "x_b", "y_b", "m_b", "a1", "alpha1"];

/// Physical parameters a physics-stage rule may distort.
pub const PHYSICS_TARGETS: [&str; 10] = [
    "bucket_mass",
    "arm_mass",
    "load_mass",
    "gyration",
    "bucket_com",
    "load_com",
    "link_attach",
    "tip",
    "a1",
    "alpha1",
];

const RESIDUAL_LIMIT: f64 = 1e-9;

fn default_g() -> f64 {
    9.81
}

/// Base (λ = 1) geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseGeometry {
    #[serde(default = "default_g")]
    pub g: f64,
    pub bucket_mass: f64,
    pub arm_mass: f64,
    /// Bucket radius of gyration about its own centre of mass.
    pub gyration: f64,
    /// Bucket frame.
    pub link_attach: Vec2,
    pub bucket_com: Vec2,
    pub load_com: Vec2,
    pub tip: Vec2,
    /// Arm frame.
    pub arm_base: Vec2,
    pub arm_com: Vec2,
    pub lift_attach: Vec2,
    pub lift_anchor: Vec2,
    pub crank_pivot: Vec2,
    /// Crank end carrying Link B.
    pub crank_end: Vec2,
    pub tilt_attach: Vec2,
    pub tilt_anchor: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSweep {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl LoadSweep {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub id: String,
    /// Bucket tilt (rad).
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub alpha1: f64,
    /// Reaction at the tip at base scale (N).
    #[serde(default)]
    pub reaction: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub id: String,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Alters a physical parameter before solving.
    Physics,
    /// Alters a recorded quantity after solving.
    Record,
}

/// Multiplies `target` by `λ^exponent_offset · exp(noise·z)`, `z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionRule {
    pub target: String,
    pub stage: Stage,
    #[serde(default)]
    pub exponent_offset: f64,
    #[serde(default)]
    pub noise: f64,
    /// Machines the rule applies to; all when absent.
    #[serde(default)]
    pub machines: Option<Vec<String>>,
}

impl DistortionRule {
    fn applies_to(&self, machine: &str) -> bool {
        self.machines
            .as_ref()
            .is_none_or(|ms| ms.iter().any(|m| m == machine))
    }
}

fn default_runs() -> Vec<RunSpec> {
    vec![RunSpec {
        id: "r0".into(),
        theta: 0.0,
        a1: 0.0,
        alpha1: 0.0,
        reaction: [0.0, 0.0],
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub geometry: BaseGeometry,
    pub loads: LoadSweep,
    #[serde(default = "default_runs")]
    pub runs: Vec<RunSpec>,
    pub machines: Vec<MachineSpec>,
    #[serde(default)]
    pub distortion: Vec<DistortionRule>,
}

impl FleetSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: FleetSpec = toml::from_str(text).map_err(|e| Error::Format(format!("fleet spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.machines.is_empty() {
            return bad("fleet has no machines".into());
        }
        let mut ids = BTreeSet::new();
        for m in &self.machines {
            if !(m.scale > 0.0 && m.scale.is_finite()) {
                return bad(format!("machine `{}` has scale {} (must be > 0)", m.id, m.scale));
            }
            if m.id.is_empty() || !ids.insert(m.id.as_str()) {
                return bad(format!("machine id `{}` is empty or repeated", m.id));
            }
        }
        let mut runs = BTreeSet::new();
        for r in &self.runs {
            if r.id.is_empty() || !runs.insert(r.id.as_str()) {
                return bad(format!("run id `{}` is empty or repeated", r.id));
            }
        }
        let l = &self.loads;
        if !(l.min >= 0.0 && l.step > 0.0 && l.max >= l.min && l.max.is_finite()) {
            return bad(format!("load sweep {l:?} is invalid"));
        }
        let g = &self.geometry;
        if !(g.bucket_mass >= 0.0 && g.arm_mass >= 0.0 && g.gyration >= 0.0 && g.g > 0.0) {
            return bad("geometry masses, gyration and g must be non-negative (g > 0)".into());
        }
        for rule in &self.distortion {
            let known = match rule.stage {
                Stage::Physics => PHYSICS_TARGETS.contains(&rule.target.as_str()),
                Stage::Record => QUANTITIES.contains(&rule.target.as_str()),
            };
            if !known {
                return bad(format!(
                    "distortion target `{}` is not valid for stage {:?}",
                    rule.target, rule.stage
                ));
            }
            if !(rule.exponent_offset.is_finite() && rule.noise >= 0.0 && rule.noise.is_finite()) {
                return bad(format!("distortion on `{}` has a non-finite parameter", rule.target));
            }
            if let Some(ms) = &rule.machines {
                if let Some(m) = ms.iter().find(|m| !ids.contains(m.as_str())) {
                    return bad(format!("distortion names unknown machine `{m}`"));
                }
            }
        }
        Ok(())
    }
}

/// Per-record multiplier for every distortion target.
struct Factors<'a> {
    rules: &'a [DistortionRule],
    values: Vec<f64>,
}

impl Factors<'_> {
    fn get(&self, stage: Stage, target: &str) -> f64 {
        self.rules
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| r.stage == stage && r.target == target)
            .map(|(_, v)| *v)
            .product()
    }
}

/// Physical state of one machine in one run at one load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub geometry: LinkageGeometry,
    pub load: LoadCase,
    /// Combined centre of mass in the bucket frame.
    pub com_body: Vec2,
}

fn snapshot(base: &BaseGeometry, lambda: f64, run: &RunSpec, nominal_load: f64, f: &Factors) -> Result<Snapshot> {
    let p = |t: &str| f.get(Stage::Physics, t);
    let m3 = lambda.powi(3);
    let len = |v: Vec2| scale(v, lambda);
    let bucket_mass = base.bucket_mass * m3 * p("bucket_mass");
    let arm_mass = base.arm_mass * m3 * p("arm_mass");
    let load_mass = nominal_load * m3 * p("load_mass");
    let gyration = base.gyration * lambda * p("gyration");
    let bucket_com_b = scale(len(base.bucket_com), p("bucket_com"));
    let load_com_b = scale(len(base.load_com), p("load_com"));
    let link_b = scale(len(base.link_attach), p("link_attach"));
    let tip_b = scale(len(base.tip), p("tip"));

    let pose = |v: Vec2| rotate(v, run.theta);
    let link_attach = pose(link_b);
    let crank_end = len(base.crank_end);
    let lift_attach = len(base.lift_attach);
    let tilt_attach = len(base.tilt_attach);
    let geometry = LinkageGeometry {
        link_attach,
        link_dir: unit(sub(link_attach, crank_end))?,
        bucket_com: pose(bucket_com_b),
        tip: pose(tip_b),
        bucket_mass,
        arm: ArmGeometry {
            base_pivot: len(base.arm_base),
            com: len(base.arm_com),
            mass: arm_mass,
            lift_attach,
            lift_dir: unit(sub(lift_attach, len(base.lift_anchor)))?,
            crank_pivot: len(base.crank_pivot),
            tilt_attach,
            tilt_dir: unit(sub(tilt_attach, len(base.tilt_anchor)))?,
        },
        g: base.g,
    };
    let sq = |v: Vec2| norm(v) * norm(v);
    let inertia = bucket_mass * (gyration * gyration + sq(bucket_com_b)) + load_mass * sq(load_com_b);
    let load = LoadCase {
        load_mass,
        load_com: Some(pose(load_com_b)),
        reaction: scale(run.reaction, m3),
        a1: run.a1 * p("a1"),
        accel_dir: [0.0, 1.0],
        alpha1: run.alpha1 / lambda * p("alpha1"),
        inertia,
    };
    let total = bucket_mass + load_mass;
    let com_body = if total > 0.0 {
        scale(add(scale(bucket_com_b, bucket_mass), scale(load_com_b, load_mass)), 1.0 / total)
    } else {
        bucket_com_b
    };
    Ok(Snapshot {
        geometry,
        load,
        com_body,
    })
}

/// Solves one snapshot and returns the recorded quantities in [`QUANTITIES`] order.
pub fn simulate(snap: &Snapshot) -> Result<[f64; 9]> {
    let b = solve_quasi_static(&snap.geometry, &snap.load)?;
    let c = solve_cylinder_forces(&snap.geometry, &snap.load, &b)?;
    let r = residuals(&snap.geometry, &snap.load, &b, &c);
    if r.max() > RESIDUAL_LIMIT {
        return Err(Error::Invariant(format!("solver residual {:.3e} exceeds limit", r.max())));
    }
    let out = [
        norm(b.f21),
        norm(b.f31),
        c.p_tilt,
        c.p_lift,
        snap.com_body[0],
        snap.com_body[1],
        b.mass,
        snap.load.a1,
        snap.load.alpha1,
    ];
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("non-finite simulated quantity".into()));
    }
    Ok(out)
}

fn machine_records(spec: &FleetSpec, index: usize, seed: u64) -> Result<Vec<Record>> {
    let machine = &spec.machines[index];
    let lambda = machine.scale;
    let rules: Vec<DistortionRule> = spec
        .distortion
        .iter()
        .filter(|r| r.applies_to(&machine.id))
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let loads = spec.loads.values();
    let mut out = Vec::with_capacity(spec.runs.len() * loads.len());
    for run in &spec.runs {
        for &nominal in &loads {
            let values: Vec<f64> = rules
                .iter()
                .map(|r| {
                    let noise = if r.noise > 0.0 {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (r.noise * z).exp()
                    } else {
                        1.0
                    };
                    lambda.powf(r.exponent_offset) * noise
                })
                .collect();
            let factors = Factors {
                rules: &rules,
                values,
            };
            let diag = |e: Error| {
                Error::SingularMechanism(format!(
                    "machine `{}` run `{}` load {nominal}: {e}",
                    machine.id, run.id
                ))
            };
            let snap = snapshot(&spec.geometry, lambda, run, nominal, &factors).map_err(diag)?;
            let mut q = simulate(&snap).map_err(diag)?;
            for (name, v) in QUANTITIES.iter().zip(q.iter_mut()) {
                *v *= factors.get(Stage::Record, name);
            }
            out.push(Record {
                key: RecordKey::new(&machine.id, &run.id, nominal),
                values: q.to_vec(),
            });
        }
    }
    Ok(out)
}

/// One record per (machine, run, load step), in that order.
pub fn generate_fleet(spec: &FleetSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let per_machine: Vec<Result<Vec<Record>>> = (0..spec.machines.len())
        .into_par_iter()
        .map(|i| machine_records(spec, i, seed))
        .collect();
    let mut ds = Dataset::new(QUANTITIES.iter().map(|s| s.to_string()).collect());
    for recs in per_machine {
        for r in recs? {
            ds.push(r)?;
        }
    }
    Ok(ds)
}

/// Undistorted snapshot, for tests and examples.
pub fn nominal_snapshot(base: &BaseGeometry, lambda: f64, run: &RunSpec, nominal_load: f64) -> Result<Snapshot> {
    snapshot(
        base,
        lambda,
        run,
        nominal_load,
        &Factors {
            rules: &[],
            values: Vec::new(),
        },
    )
}

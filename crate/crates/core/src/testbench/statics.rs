//! Planar bucket-linkage equilibrium.
//!
//! The bucket (with its load) is pinned to the main arm at `O` (the origin) and
//! driven by Link B, a two-force member acting along `û` through `A`. Link B's
//! other end sits on a massless bell crank pivoted on the arm and pushed by the
//! tilt cylinder; the lift cylinder acts on the arm, which is pinned to the
//! chassis at its base pivot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, k: f64) -> Vec2 {
    [a[0] * k, a[1] * k]
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn unit(a: Vec2) -> Result<Vec2> {
    let n = norm(a);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::SingularMechanism(format!("zero-length direction {a:?}")));
    }
    Ok(scale(a, 1.0 / n))
}

pub fn rotate(a: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    pub base_pivot: Vec2,
    pub com: Vec2,
    pub mass: f64,
    pub lift_attach: Vec2,
    /// Line of action of the lift cylinder on the arm.
    pub lift_dir: Vec2,
    pub crank_pivot: Vec2,
    pub tilt_attach: Vec2,
    /// Line of action of the tilt cylinder on the crank.
    pub tilt_dir: Vec2,
}

/// One posed configuration, all points in the frame with `O` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkageGeometry {
    /// Link B attachment on the bucket.
    pub link_attach: Vec2,
    pub link_dir: Vec2,
    /// Centre of mass of the empty bucket.
    pub bucket_com: Vec2,
    pub tip: Vec2,
    pub bucket_mass: f64,
    pub arm: ArmGeometry,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub load_mass: f64,
    /// Centre of mass of the load; defaults to the bucket's.
    pub load_com: Option<Vec2>,
    /// External reaction at the tip.
    pub reaction: Vec2,
    pub a1: f64,
    pub accel_dir: Vec2,
    pub alpha1: f64,
    /// Moment of inertia of the combined body about `O`.
    pub inertia: f64,
}

impl LoadCase {
    pub fn still(load_mass: f64) -> Self {
        Self {
            load_mass,
            load_com: None,
            reaction: [0.0, 0.0],
            a1: 0.0,
            accel_dir: [0.0, 1.0],
            alpha1: 0.0,
            inertia: 0.0,
        }
    }
}

const UNIT_TOL: f64 = 1e-12;

fn check_unit(name: &str, v: Vec2) -> Result<()> {
    if (norm(v) - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!("{name} {v:?} is not unit-norm")));
    }
    Ok(())
}

impl LinkageGeometry {
    pub fn validate(&self) -> Result<()> {
        check_unit("link_dir", self.link_dir)?;
        check_unit("lift_dir", self.arm.lift_dir)?;
        check_unit("tilt_dir", self.arm.tilt_dir)?;
        if norm(self.link_attach) == 0.0 {
            return Err(Error::InvalidInput("Link B attachment coincides with O".into()));
        }
        if self.bucket_mass < 0.0 || self.arm.mass < 0.0 || !(self.g > 0.0) {
            return Err(Error::InvalidInput("masses must be ≥ 0 and g > 0".into()));
        }
        let pts = [
            self.link_attach,
            self.bucket_com,
            self.tip,
            self.arm.base_pivot,
            self.arm.com,
            self.arm.lift_attach,
            self.arm.crank_pivot,
            self.arm.tilt_attach,
        ];
        if pts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite geometry".into()));
        }
        Ok(())
    }

    /// Uniform similitude scaling: lengths ×λ, masses ×λ³.
    pub fn scaled(&self, lambda: f64) -> Self {
        let l = |p: Vec2| scale(p, lambda);
        let m3 = lambda.powi(3);
        Self {
            link_attach: l(self.link_attach),
            link_dir: self.link_dir,
            bucket_com: l(self.bucket_com),
            tip: l(self.tip),
            bucket_mass: self.bucket_mass * m3,
            arm: ArmGeometry {
                base_pivot: l(self.arm.base_pivot),
                com: l(self.arm.com),
                mass: self.arm.mass * m3,
                lift_attach: l(self.arm.lift_attach),
                lift_dir: self.arm.lift_dir,
                crank_pivot: l(self.arm.crank_pivot),
                tilt_attach: l(self.arm.tilt_attach),
                tilt_dir: self.arm.tilt_dir,
            },
            g: self.g,
        }
    }
}

impl LoadCase {
    fn validate(&self) -> Result<()> {
        if self.load_mass < 0.0 || self.inertia < 0.0 {
            return Err(Error::InvalidInput("load mass and inertia must be ≥ 0".into()));
        }
        check_unit("accel_dir", self.accel_dir)
    }

    /// Similitude scaling with `g` fixed: masses ×λ³, lengths ×λ, a₁ ×1,
    /// α₁ ×λ⁻¹, I ×λ⁵.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            load_mass: self.load_mass * lambda.powi(3),
            load_com: self.load_com.map(|p| scale(p, lambda)),
            reaction: scale(self.reaction, lambda.powi(3)),
            a1: self.a1,
            accel_dir: self.accel_dir,
            alpha1: self.alpha1 / lambda,
            inertia: self.inertia * lambda.powi(5),
        }
    }
}

/// Mass and centre of mass of bucket plus load.
pub fn combined_body(geom: &LinkageGeometry, load: &LoadCase) -> (f64, Vec2) {
    let m = geom.bucket_mass + load.load_mass;
    if m == 0.0 {
        return (0.0, geom.bucket_com);
    }
    let lc = load.load_com.unwrap_or(geom.bucket_com);
    let com = scale(
        add(scale(geom.bucket_com, geom.bucket_mass), scale(lc, load.load_mass)),
        1.0 / m,
    );
    (m, com)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketSolution {
    /// Force of Link B on the bucket, `s·û`.
    pub f21: Vec2,
    /// Force of the arm on the bucket at `O`.
    pub f31: Vec2,
    /// Signed Link B force `s`.
    pub link_force: f64,
    pub mass: f64,
    pub com: Vec2,
}

fn singular_tol(a: Vec2, b: Vec2) -> f64 {
    1e-12 * norm(a) * norm(b)
}

/// Bucket equilibrium with prescribed accelerations:
/// `F21 + F31 + W + R = m·a₁` and `r21×F21 + r_w×W + r_R×R = I_o·α₁`.
pub fn solve_quasi_static(geom: &LinkageGeometry, load: &LoadCase) -> Result<BucketSolution> {
    geom.validate()?;
    load.validate()?;
    let arm = cross(geom.link_attach, geom.link_dir);
    if arm.abs() <= singular_tol(geom.link_attach, geom.link_dir) {
        return Err(Error::SingularMechanism(
            "Link B line of action passes through O".into(),
        ));
    }
    let (m, com) = combined_body(geom, load);
    let w = [0.0, -m * geom.g];
    let s = (load.inertia * load.alpha1 - cross(com, w) - cross(geom.tip, load.reaction)) / arm;
    let f21 = scale(geom.link_dir, s);
    let inertial = scale(load.accel_dir, m * load.a1);
    let f31 = sub(sub(sub(inertial, w), load.reaction), f21);
    Ok(BucketSolution {
        f21,
        f31,
        link_force: s,
        mass: m,
        com,
    })
}

/// Static case, `a₁ = α₁ = 0`.
pub fn solve_bucket_statics(geom: &LinkageGeometry, load: &LoadCase) -> Result<BucketSolution> {
    let still = LoadCase {
        a1: 0.0,
        alpha1: 0.0,
        ..*load
    };
    solve_quasi_static(geom, &still)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderSolution {
    pub p_tilt: f64,
    pub p_lift: f64,
    /// Chassis reaction on the arm at its base pivot.
    pub f43: Vec2,
}

/// Tilt force from the bell-crank moment balance, lift force from the moment
/// balance of arm and crank about the base pivot, then the base reaction.
pub fn solve_cylinder_forces(
    geom: &LinkageGeometry,
    _load: &LoadCase,
    bucket: &BucketSolution,
) -> Result<CylinderSolution> {
    let arm = &geom.arm;
    let tilt_arm = cross(sub(arm.tilt_attach, arm.crank_pivot), arm.tilt_dir);
    if tilt_arm.abs() <= singular_tol(sub(arm.tilt_attach, arm.crank_pivot), arm.tilt_dir) {
        return Err(Error::SingularMechanism(
            "tilt cylinder acts through the crank pivot".into(),
        ));
    }
    let lift_arm = cross(sub(arm.lift_attach, arm.base_pivot), arm.lift_dir);
    if lift_arm.abs() <= singular_tol(sub(arm.lift_attach, arm.base_pivot), arm.lift_dir) {
        return Err(Error::SingularMechanism(
            "lift cylinder acts through the arm base pivot".into(),
        ));
    }
    // Link B pulls the crank with −s·û along the line through A.
    let on_crank = scale(geom.link_dir, -bucket.link_force);
    let p_tilt = -cross(sub(geom.link_attach, arm.crank_pivot), on_crank) / tilt_arm;

    let w_arm = [0.0, -arm.mass * geom.g];
    let tilt = scale(arm.tilt_dir, p_tilt);
    let on_arm_at_o = scale(bucket.f31, -1.0);
    let rel = |p: Vec2| sub(p, arm.base_pivot);
    let moment = cross(rel([0.0, 0.0]), on_arm_at_o)
        + cross(rel(geom.link_attach), on_crank)
        + cross(rel(arm.tilt_attach), tilt)
        + cross(rel(arm.com), w_arm);
    let p_lift = -moment / lift_arm;
    let lift = scale(arm.lift_dir, p_lift);
    let f43 = scale(add(add(add(on_arm_at_o, on_crank), add(tilt, lift)), w_arm), -1.0);
    Ok(CylinderSolution { p_tilt, p_lift, f43 })
}

/// Back-substitution residuals, each relative to the magnitude of the terms
/// entering its balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub bucket_force: f64,
    pub bucket_moment: f64,
    pub crank_moment: f64,
    pub arm_moment: f64,
    pub overall_force: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.bucket_force,
            self.bucket_moment,
            self.crank_moment,
            self.arm_moment,
            self.overall_force,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn relative(terms: &[Vec2]) -> f64 {
    let sum = terms.iter().fold([0.0, 0.0], |acc, t| add(acc, *t));
    let mag: f64 = terms.iter().map(|t| norm(*t)).sum();
    if mag == 0.0 {
        0.0
    } else {
        norm(sum) / mag
    }
}

fn relative_scalar(terms: &[f64]) -> f64 {
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / mag
    }
}

pub fn residuals(
    geom: &LinkageGeometry,
    load: &LoadCase,
    bucket: &BucketSolution,
    cyl: &CylinderSolution,
) -> Residuals {
    let arm = &geom.arm;
    let (m, com) = combined_body(geom, load);
    let w = [0.0, -m * geom.g];
    let minus_ma = scale(load.accel_dir, -m * load.a1);
    let bucket_force = relative(&[bucket.f21, bucket.f31, w, load.reaction, minus_ma]);
    let bucket_moment = relative_scalar(&[
        cross(geom.link_attach, bucket.f21),
        cross(com, w),
        cross(geom.tip, load.reaction),
        -load.inertia * load.alpha1,
    ]);
    let on_crank = scale(bucket.f21, -1.0);
    let tilt = scale(arm.tilt_dir, cyl.p_tilt);
    let crank_moment = relative_scalar(&[
        cross(sub(geom.link_attach, arm.crank_pivot), on_crank),
        cross(sub(arm.tilt_attach, arm.crank_pivot), tilt),
    ]);
    let lift = scale(arm.lift_dir, cyl.p_lift);
    let w_arm = [0.0, -arm.mass * geom.g];
    let rel = |p: Vec2| sub(p, arm.base_pivot);
    let arm_moment = relative_scalar(&[
        cross(rel([0.0, 0.0]), scale(bucket.f31, -1.0)),
        cross(rel(geom.link_attach), on_crank),
        cross(rel(arm.tilt_attach), tilt),
        cross(rel(arm.com), w_arm),
        cross(rel(arm.lift_attach), lift),
    ]);
    // Whole mechanism: F43 + R + P_tilt + P_lift + weights = m·a₁.
    let overall_force = relative(&[cyl.f43, load.reaction, tilt, lift, w, w_arm, minus_ma]);
    Residuals {
        bucket_force,
        bucket_moment,
        crank_moment,
        arm_moment,
        overall_force,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hand_geometry(mass: f64) -> LinkageGeometry {
        LinkageGeometry {
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
        }
    }

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn hand_example() {
        let geom = hand_geometry(100.0);
        let sol = solve_bucket_statics(&geom, &LoadCase::still(0.0)).unwrap();
        assert!(rel_eq(sol.f21[0], -490.5, 1e-12));
        assert_eq!(sol.f21[1], 0.0);
        assert!(rel_eq(sol.f31[0], 490.5, 1e-12));
        assert!(rel_eq(sol.f31[1], 981.0, 1e-12));
        // |F31| = 490.5·√5 = 1096.791…
        assert!(rel_eq(norm(sol.f31), 490.5 * 5f64.sqrt(), 1e-12));
        assert_eq!((norm(sol.f31) * 10.0).floor() / 10.0, 1096.7);
    }

    #[test]
    fn zero_mass_gives_zero_forces() {
        let geom = hand_geometry(0.0);
        let b = solve_bucket_statics(&geom, &LoadCase::still(0.0)).unwrap();
        let c = solve_cylinder_forces(&geom, &LoadCase::still(0.0), &b).unwrap();
        assert_eq!(b.f21, [0.0, 0.0]);
        assert_eq!(norm(b.f31), 0.0);
        assert_eq!((c.p_tilt, c.p_lift), (0.0, 0.0));
    }

    #[test]
    fn singular_link_rejected() {
        let mut geom = hand_geometry(1.0);
        geom.link_dir = [0.0, 1.0];
        assert!(matches!(
            solve_bucket_statics(&geom, &LoadCase::still(0.0)),
            Err(Error::SingularMechanism(_))
        ));
    }

    #[test]
    fn zero_accelerations_match_statics() {
        let geom = hand_geometry(3.0);
        let mut load = LoadCase::still(1.0);
        load.load_com = Some([0.7, 0.1]);
        load.inertia = 2.0;
        let a = solve_bucket_statics(&geom, &load).unwrap();
        let b = solve_quasi_static(&geom, &load).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inertial_term_depends_on_product() {
        let geom = hand_geometry(0.0);
        let mut a = LoadCase::still(2.0);
        a.a1 = 1.0;
        let mut b = LoadCase::still(4.0);
        b.a1 = 0.5;
        let sa = solve_quasi_static(&geom, &a).unwrap();
        let sb = solve_quasi_static(&geom, &b).unwrap();
        let inertial = |s: &BucketSolution, m: f64| add(add(s.f21, s.f31), [0.0, -m * 9.81]);
        let ia = inertial(&sa, 2.0);
        let ib = inertial(&sb, 4.0);
        assert!((ia[1] - 2.0).abs() < 1e-12 && (ib[1] - 2.0).abs() < 1e-12);
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (LinkageGeometry, LoadCase) {
        let mut p = || [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let geom = LinkageGeometry {
            link_attach: p(),
            link_dir: unit(p()).unwrap(),
            bucket_com: p(),
            tip: p(),
            bucket_mass: 0.0,
            arm: ArmGeometry {
                base_pivot: p(),
                com: p(),
                mass: 0.0,
                lift_attach: p(),
                lift_dir: unit(p()).unwrap(),
                crank_pivot: p(),
                tilt_attach: p(),
                tilt_dir: unit(p()).unwrap(),
            },
            g: 9.81,
        };
        let load_com = Some(p());
        let reaction = scale(p(), 50.0);
        let accel_dir = unit(p()).unwrap();
        let geom = LinkageGeometry {
            bucket_mass: rng.random_range(0.1..100.0),
            arm: ArmGeometry {
                mass: rng.random_range(0.1..100.0),
                ..geom.arm
            },
            ..geom
        };
        let load = LoadCase {
            load_mass: rng.random_range(0.0..50.0),
            load_com,
            reaction,
            a1: rng.random_range(-3.0..3.0),
            accel_dir,
            alpha1: rng.random_range(-3.0..3.0),
            inertia: rng.random_range(0.0..20.0),
        };
        (geom, load)
    }

    #[test]
    fn random_back_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 500 {
            let (geom, load) = random_case(&mut rng);
            let Ok(b) = solve_quasi_static(&geom, &load) else {
                continue;
            };
            let Ok(c) = solve_cylinder_forces(&geom, &load, &b) else {
                continue;
            };
            let r = residuals(&geom, &load, &b, &c);
            assert!(r.max() <= 1e-9, "{r:?}");
            checked += 1;
        }
    }

    #[test]
    fn similitude_scales_forces_by_lambda_cubed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (geom, load) = random_case(&mut rng);
        let b0 = solve_quasi_static(&geom, &load).unwrap();
        let c0 = solve_cylinder_forces(&geom, &load, &b0).unwrap();
        for lambda in [0.1, 0.5, 2.0, 10.0] {
            let g = geom.scaled(lambda);
            let l = load.scaled(lambda);
            let b = solve_quasi_static(&g, &l).unwrap();
            let c = solve_cylinder_forces(&g, &l, &b).unwrap();
            let k = lambda.powi(3);
            for (x, y) in [
                (b.f21[0], b0.f21[0]),
                (b.f21[1], b0.f21[1]),
                (b.f31[0], b0.f31[0]),
                (b.f31[1], b0.f31[1]),
                (c.p_tilt, c0.p_tilt),
                (c.p_lift, c0.p_lift),
                (c.f43[0], c0.f43[0]),
                (c.f43[1], c0.f43[1]),
            ] {
                assert!(rel_eq(x, y * k, 1e-9), "λ={lambda}: {x} vs {}", y * k);
            }
        }
    }
}

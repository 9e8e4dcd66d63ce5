//! Synthetic bucket-linkage bench: exact planar equilibrium and multi-scale fleets.

pub mod fleet;
pub mod statics;

pub use fleet::{generate_fleet, BaseGeometry, DistortionRule, FleetSpec, LoadSweep, MachineSpec, RunSpec, Stage};
pub use statics::{
    residuals, solve_bucket_statics, solve_cylinder_forces, solve_quasi_static, ArmGeometry, BucketSolution,
    CylinderSolution, LinkageGeometry, LoadCase, Residuals,
};

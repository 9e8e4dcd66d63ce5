//! Dimensional analysis with learned distortion correction for scaling
//! measurements between geometrically similar machines.

pub mod dataset;
pub mod dimensions;
pub mod error;
pub mod pi_engine;
pub mod regressor;
pub mod scaling;
pub mod selection;
pub mod testbench;
pub mod validation;

pub use dataset::{Dataset, Record, RecordKey};
pub use dimensions::{QuantityRegistry, Rational};
pub use error::{Error, Result};
pub use pi_engine::{enumerate_pi_sets, EnumerationLimits, PiGroup, PiSet};

//! Feed-forward regressor for the prediction factor δ₁.

pub mod grid;
pub mod metrics;
pub mod mlp;
pub mod train;

pub use grid::{grid_search, GridPoint, GridRow, GridSearchResult, GridSpec};
pub use metrics::{percentage_error_curve, r_squared, ErrorCurve, ErrorPoint};
pub use mlp::{Activation, Dense, Gradients, Mlp};
pub use train::{
    design_matrix, fit, predict_delta, split_indices, train, Fitted, Metrics, MlpConfig, Normalization,
    Split, TrainedModel, MODEL_SCHEMA_VERSION,
};

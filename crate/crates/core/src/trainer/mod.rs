//! Mini-batch SGD on an L2-regularized linear classifier, convergence
//! tracking and the total training time model.

mod metrics;
mod model;
mod reference;
mod run;

pub use metrics::{overlap_time, relative_fvd, total_time, OverlapMode, TimeModel};
pub use model::{
    apply_step, batch_gradient, objective, sigmoid, softplus, Gradient, LinearModel, Loss,
};
pub use reference::{reference_minimum, ReferenceSolution};
pub use run::{
    run_training, ConvergenceReport, EpochRecord, PhaseCost, RunOptions, TrainConfig,
    DIVERGENCE_FACTOR,
};

//! Inverse rendering: the polarized rendering loss and its gradients,
//! per-pixel map recovery, and depth from normal integration.

mod fit;
mod integrate;
mod loss;
pub mod model;

pub use fit::{
    fit_svbrdf, invert_diffuse_dop, DepthPrior, FitConfig, FitInput, FitMode, FitReport, FitResult, Schedule,
    SpecularParam, Timings,
};
pub use integrate::{integrate_normals, NZ_FLOOR};
pub use loss::{
    loss_gradients, polarized_render_loss, LossBreakdown, LossOptions, LossWeights, Observation, ParamGradients,
    RenderLoss, KINK_TOLERANCE,
};

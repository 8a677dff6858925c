//! Exact simulation of `X_T` for `dX = alpha(X) dt + dW`.
//!
//! Endpoints are proposed from the biased density `h`, and each proposal is
//! accepted by an `exp(-r T J)`-coin built from J-coins on a Brownian bridge
//! that is only ever revealed at the finitely many times the coins look at.

mod bridge;
mod sampler;
mod spec;

pub use bridge::BridgeSkeleton;
pub use sampler::{
    exact_sample, exact_sample_segmented, j_coin, sample_h, segment_count, segment_horizon,
    ExactDraw, JCoin, SampleOptions, SEGMENT_MARGIN,
};
pub use spec::{ConstantDrift, DiffusionSpec, Drift, SineDrift, ZeroDrift, PHI_TOLERANCE};

//! Exact simulation of events whose probability can only be approximated.
//!
//! The crate is organised bottom-up:
//!
//! * [`source`]: seeded uniform streams, coin abstractions and run records.
//! * [`martingale`]: coins driven by estimators, deterministic bounds,
//!   monotone random bounds and reverse-time super/submartingale bounds,
//!   plus the two-point unbiased estimator built on top of them.
//! * [`factory`]: Bernstein polynomial envelopes turned into bound streams.
//! * [`alternating`]: the direct factory for alternating series such as `exp(-a p)`.
//! * [`diffusion`]: exact rejection sampling of `dX = alpha(X) dt + dW` at a fixed time.
//! * [`harness`]: statistical checks, reports and the command implementations
//!   used by the `coinforge` binary.

pub mod alternating;
pub mod diffusion;
mod error;
pub mod factory;
pub mod harness;
pub mod martingale;
pub mod source;

pub use error::{Error, Result};
pub use source::{
    BernoulliCoin, CoinResult, CoinSource, Role, SoftCoin, SoftSampler, UniformSource,
};

use serde::Serialize;

use super::bridge::BridgeSkeleton;
use super::spec::DiffusionSpec;
use crate::alternating::exp_decision;
use crate::error::{contract, Error, Result};
use crate::martingale::RunOptions;
use crate::source::{CoinSource, UniformSource};

/// Largest `r T` accepted per segment by [`segment_horizon`].
pub const SEGMENT_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Cap on outer proposals, and separately on endpoint rejection draws.
    pub max_proposals: u64,
    pub run: RunOptions,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            max_proposals: 1_000_000,
            run: RunOptions::default(),
        }
    }
}

/// One draw of `X_T` with its cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactDraw {
    pub value: f64,
    /// Endpoint proposals `u ~ h` that went through the acceptance coin.
    pub proposals: u64,
    /// Gaussian draws spent inside the endpoint rejection sampler.
    pub endpoint_draws: u64,
    pub j_coins: u64,
    /// Interior bridge points revealed over all proposals.
    pub bridge_points: u64,
    /// Segments chained to reach the horizon.
    pub segments: u64,
}

/// Draws from the density proportional to `exp(A(u) - (u - x)^2 / 2T)`.
///
/// Uses the drift's closed-form sampler when it has one, otherwise rejection
/// from `N(x, T)` accepting with probability `exp(A(u) - A_max)`. Returns
/// the value and the number of Gaussian proposals.
pub fn sample_h(
    spec: &DiffusionSpec,
    src: &mut UniformSource,
    opts: &SampleOptions,
) -> Result<(f64, u64)> {
    if let Some(u) = spec.drift.sample_endpoint(spec.start, spec.horizon, src) {
        return Ok((u, 1));
    }
    let a_max = spec
        .antiderivative_max
        .or_else(|| spec.drift.antiderivative_sup())
        .ok_or_else(|| {
            Error::Config(format!(
                "drift `{}` has no bound on its antiderivative and no endpoint sampler",
                spec.drift.name()
            ))
        })?;
    let sd = spec.horizon.sqrt();
    for draws in 1..=opts.max_proposals {
        let u = spec.start + sd * src.next_normal();
        let log_ratio = spec.drift.antiderivative(u) - a_max;
        if log_ratio > 1e-12 {
            return Err(contract(format!(
                "A({u}) exceeds the declared maximum {a_max}"
            )));
        }
        if src.next_uniform() <= log_ratio.exp() {
            return Ok((u, draws));
        }
    }
    Err(Error::NotConverged(opts.max_proposals))
}

/// `I(psi < phi(W_chi))` with `chi ~ U(0,T)`, revealing the bridge at `chi`.
pub fn j_coin(
    skel: &mut BridgeSkeleton,
    spec: &DiffusionSpec,
    src: &mut UniformSource,
) -> Result<bool> {
    let chi = src.next_uniform() * skel.horizon();
    let psi = src.next_uniform();
    let w = skel.reveal(chi, src)?;
    Ok(psi < spec.phi(w)?)
}

/// J-coins on one proposal's bridge.
pub struct JCoin<'a> {
    skel: &'a mut BridgeSkeleton,
    spec: &'a DiffusionSpec,
    src: &'a mut UniformSource,
    tossed: u64,
}

impl<'a> JCoin<'a> {
    pub fn new(
        skel: &'a mut BridgeSkeleton,
        spec: &'a DiffusionSpec,
        src: &'a mut UniformSource,
    ) -> Self {
        Self {
            skel,
            spec,
            src,
            tossed: 0,
        }
    }
}

impl CoinSource for JCoin<'_> {
    fn toss(&mut self) -> Result<bool> {
        self.tossed += 1;
        j_coin(self.skel, self.spec, self.src)
    }

    fn consumed(&self) -> u64 {
        self.tossed
    }
}

/// Exact draw of `X_T` for one interval with `r T < 1`.
pub fn exact_sample(
    spec: &DiffusionSpec,
    src: &mut UniformSource,
    opts: &SampleOptions,
) -> Result<ExactDraw> {
    let rate = spec.rate();
    if !(rate < 1.0) {
        return Err(contract(format!(
            "exact sampling needs r*T < 1, got r*T = {rate}; split the horizon into segments"
        )));
    }
    let mut draw = ExactDraw {
        value: f64::NAN,
        proposals: 0,
        endpoint_draws: 0,
        j_coins: 0,
        bridge_points: 0,
        segments: 1,
    };
    while draw.proposals < opts.max_proposals {
        let (u, used) = sample_h(spec, src, opts)?;
        draw.proposals += 1;
        draw.endpoint_draws += used;
        let mut skel = BridgeSkeleton::new(spec.start, spec.horizon, u)?;
        let g0 = src.next_uniform();
        let mut coin = JCoin::new(&mut skel, spec, src);
        let (accept, _) = exp_decision(rate, &mut coin, g0, &opts.run)?;
        draw.j_coins += coin.consumed();
        draw.bridge_points += (skel.len() - 2) as u64;
        if accept {
            draw.value = u;
            return Ok(draw);
        }
    }
    Err(Error::NotConverged(opts.max_proposals))
}

/// Smallest `m` with `r * total / m <= 0.9`.
pub fn segment_count(r: f64, total: f64) -> u64 {
    let mut m = 1u64;
    while r * (total / m as f64) > SEGMENT_MARGIN {
        m += 1;
    }
    m
}

/// Splits `[0, total]` into equal pieces short enough for [`exact_sample`].
/// Every piece starts at `spec.start`; [`exact_sample_segmented`] rewrites
/// the starts as it chains.
pub fn segment_horizon(spec: &DiffusionSpec, total: f64) -> Result<Vec<DiffusionSpec>> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(crate::error::invalid(format!(
            "horizon {total} must be positive"
        )));
    }
    let m = segment_count(spec.r, total);
    let piece = spec.with_horizon(total / m as f64);
    Ok(vec![piece; m as usize])
}

/// Exact draw of `X_total` by chaining [`exact_sample`] over the segments,
/// each starting from the previous output.
pub fn exact_sample_segmented(
    spec: &DiffusionSpec,
    total: f64,
    src: &mut UniformSource,
    opts: &SampleOptions,
) -> Result<ExactDraw> {
    let pieces = segment_horizon(spec, total)?;
    let mut out = ExactDraw {
        value: spec.start,
        proposals: 0,
        endpoint_draws: 0,
        j_coins: 0,
        bridge_points: 0,
        segments: pieces.len() as u64,
    };
    for piece in pieces {
        let d = exact_sample(&piece.with_start(out.value), src, opts)?;
        out.value = d.value;
        out.proposals += d.proposals;
        out.endpoint_draws += d.endpoint_draws;
        out.j_coins += d.j_coins;
        out.bridge_points += d.bridge_points;
    }
    Ok(out)
}

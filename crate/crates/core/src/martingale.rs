//! Coins for events of unknown probability `s`.
//!
//! Four drivers of increasing generality:
//!
//! * [`estimator_coin`]: one draw of an unbiased `[0,1]`-valued estimator.
//! * [`sequence_coin`]: deterministic lower/upper bounds converging to `s`.
//! * [`monotone_coin`]: random bounds that are pathwise monotone.
//! * [`martingale_coin`]: random bounds whose lower sequence is a reverse-time
//!   supermartingale and upper sequence a reverse-time submartingale. They
//!   are turned into pathwise monotone bounds with the same expectations by
//!   [`TildeState::step`].
//!
//! All drivers draw the decision uniform `G_0` once, up front, and compare
//! `G_0 <= lower` (decide 1) and `G_0 > upper` (decide 0) at every step.

use serde::Serialize;

use crate::error::{contract, invalid, Error, Result};
use crate::source::{CoinResult, UniformSource};

pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Iteration guard and floating-point slack shared by the drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iterations: u64,
    /// Slack allowed on monotonicity and ordering checks.
    pub tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// One emitted step: bounds `L_n <= U_n` together with the conditional
/// means `L*_n = E(L_{n-1} | F_n)` and `U*_n = E(U_{n-1} | F_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundStep {
    pub lower: f64,
    pub upper: f64,
    pub lower_star: f64,
    pub upper_star: f64,
}

impl BoundStep {
    pub fn new(lower: f64, upper: f64, lower_star: f64, upper_star: f64) -> Self {
        Self {
            lower,
            upper,
            lower_star,
            upper_star,
        }
    }

    /// Step with `L* = 0`, `U* = 1`, the convention for the first step.
    pub fn first(lower: f64, upper: f64) -> Self {
        Self::new(lower, upper, 0.0, 1.0)
    }
}

/// Stateful generator of bound steps. Each call to `advance` conditions on
/// every step emitted before it.
///
/// The first step behaves as if preceded by `L_0 = 0`, `U_0 = 1`, so its
/// `lower_star` is 0 and its `upper_star` is 1. Streams that follow an
/// index schedule consume several inputs per step internally.
pub trait BoundStream {
    fn advance(&mut self) -> Result<BoundStep>;

    /// Input coins tossed so far.
    fn coins_consumed(&self) -> u64 {
        0
    }
}

impl<S: BoundStream + ?Sized> BoundStream for &mut S {
    fn advance(&mut self) -> Result<BoundStep> {
        (**self).advance()
    }

    fn coins_consumed(&self) -> u64 {
        (**self).coins_consumed()
    }
}

/// Decides a coin from a single unbiased estimate.
///
/// `G_0` is drawn from `src` before the estimator is called. The estimate
/// must lie in `[0,1]`.
pub fn estimator_coin(
    mut estimator: impl FnMut() -> f64,
    src: &mut UniformSource,
) -> Result<CoinResult> {
    let start = src.counter();
    let g0 = src.next_uniform();
    let estimate = estimator();
    if !(0.0..=1.0).contains(&estimate) {
        return Err(contract(format!("estimate {estimate} outside [0,1]")));
    }
    Ok(CoinResult {
        value: g0 <= estimate,
        iterations: 1,
        coins_consumed: 0,
        uniforms_consumed: src.counter() - start,
    })
}

/// Decides a coin from deterministic bounds `(l_n, u_n)` converging to `s`.
///
/// Bounds are monotonized on the fly by running sup/inf. Running out of
/// bounds before a decision is reported as [`Error::NotConverged`].
pub fn sequence_coin(
    bounds: impl IntoIterator<Item = (f64, f64)>,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult> {
    let start = src.counter();
    let g0 = src.next_uniform();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut n = 0;
    for (l, u) in bounds.into_iter() {
        n += 1;
        if n > opts.max_iterations {
            break;
        }
        lower = lower.max(l);
        upper = upper.min(u);
        if lower > upper + opts.tolerance {
            return Err(contract(format!(
                "bounds crossed at n={n}: lower {lower} > upper {upper}"
            )));
        }
        if g0 <= lower {
            return Ok(decided(true, n, 0, src.counter() - start));
        }
        if g0 > upper {
            return Ok(decided(false, n, 0, src.counter() - start));
        }
    }
    Err(Error::NotConverged(n.min(opts.max_iterations)))
}

fn decided(value: bool, iterations: u64, coins: u64, uniforms: u64) -> CoinResult {
    CoinResult {
        value,
        iterations,
        coins_consumed: coins,
        uniforms_consumed: uniforms,
    }
}

/// Decides a coin from a stream whose bounds are pathwise monotone.
///
/// Only `lower` and `upper` of each step are used. Bounds may leave `[0,1]`
/// as long as `lower <= 1` and `upper >= 0`.
pub fn monotone_coin<S: BoundStream>(
    mut stream: S,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult> {
    let start = src.counter();
    let coins_start = stream.coins_consumed();
    let g0 = src.next_uniform();
    let (value, n) = run_monotone(&mut stream, g0, opts)?;
    Ok(decided(
        value,
        n,
        stream.coins_consumed() - coins_start,
        src.counter() - start,
    ))
}

/// Monotone driver with an externally supplied decision uniform.
pub(crate) fn run_monotone<S: BoundStream + ?Sized>(
    stream: &mut S,
    g0: f64,
    opts: &RunOptions,
) -> Result<(bool, u64)> {
    let tol = opts.tolerance;
    let mut prev: Option<(f64, f64)> = None;
    for n in 1..=opts.max_iterations {
        let step = stream.advance()?;
        let (l, u) = (step.lower, step.upper);
        if l > u + tol {
            return Err(contract(format!("step {n}: lower {l} > upper {u}")));
        }
        if l > 1.0 + tol || u < -tol {
            return Err(contract(format!(
                "step {n}: bounds ({l}, {u}) need lower <= 1 and upper >= 0"
            )));
        }
        if let Some((pl, pu)) = prev {
            if l < pl - tol || u > pu + tol {
                return Err(contract(format!(
                    "step {n}: bounds ({l}, {u}) not monotone after ({pl}, {pu})"
                )));
            }
        }
        if g0 <= l {
            return Ok((true, n));
        }
        if g0 > u {
            return Ok((false, n));
        }
        prev = Some((l, u));
    }
    Err(Error::NotConverged(opts.max_iterations))
}

/// Pathwise monotone bounds built online from martingale bound steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TildeState {
    pub lower: f64,
    pub upper: f64,
}

impl Default for TildeState {
    fn default() -> Self {
        Self::initial()
    }
}

impl TildeState {
    pub fn initial() -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Absorbs one step:
    ///
    /// ```text
    /// lower' = lower + (L - L*) / (U* - L*) * (upper - lower)
    /// upper' = upper - (U* - U) / (U* - L*) * (upper - lower)
    /// ```
    ///
    /// so that `upper' - lower' = (upper - lower) (U - L) / (U* - L*)`.
    /// Increments that are negative only by rounding (within `tol`) are
    /// treated as zero. A step with `U* == L*` collapses the state to
    /// `(lower, lower)`: the gap cannot shrink any further and the coin is
    /// decided by `G_0 <= lower`.
    pub fn step(&self, step: &BoundStep, tol: f64) -> Result<TildeState> {
        let BoundStep {
            lower: l,
            upper: u,
            lower_star: ls,
            upper_star: us,
        } = *step;
        if [l, u, ls, us].iter().any(|x| !x.is_finite()) {
            return Err(contract(format!("non-finite step {step:?}")));
        }
        if l > u + tol || ls > l + tol || u > us + tol {
            return Err(contract(format!(
                "step violates L* <= L <= U <= U*: {step:?}"
            )));
        }
        let width = us - ls;
        if width <= 0.0 {
            return Ok(TildeState {
                lower: self.lower,
                upper: self.lower,
            });
        }
        let gap = self.gap();
        let lower = self.lower + ((l - ls).max(0.0) / width) * gap;
        let upper = self.upper - ((us - u).max(0.0) / width) * gap;
        Ok(TildeState {
            lower,
            upper: upper.max(lower),
        })
    }
}

/// Decides a coin from reverse-time super/submartingale bounds.
pub fn martingale_coin<S: BoundStream>(
    mut stream: S,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult> {
    let start = src.counter();
    let coins_start = stream.coins_consumed();
    let g0 = src.next_uniform();
    let (value, n) = run_martingale(&mut stream, g0, opts, |_, _, _| {})?;
    Ok(decided(
        value,
        n,
        stream.coins_consumed() - coins_start,
        src.counter() - start,
    ))
}

/// Martingale driver with an observer called after every step with the
/// step, the state before it and the state after it.
pub fn run_martingale<S, F>(
    stream: &mut S,
    g0: f64,
    opts: &RunOptions,
    mut observe: F,
) -> Result<(bool, u64)>
where
    S: BoundStream + ?Sized,
    F: FnMut(&BoundStep, &TildeState, &TildeState),
{
    let mut tilde = TildeState::initial();
    for n in 1..=opts.max_iterations {
        let step = stream.advance()?;
        let next = tilde.step(&step, opts.tolerance)?;
        observe(&step, &tilde, &next);
        tilde = next;
        if g0 <= tilde.lower {
            return Ok((true, n));
        }
        if g0 > tilde.upper {
            return Ok((false, n));
        }
    }
    Err(Error::NotConverged(opts.max_iterations))
}

/// Stream over deterministic bounds. `L*`/`U*` are the previous bounds
/// (0 and 1 before the first step), which is exact for deterministic
/// sequences that are monotone.
pub struct DeterministicStream<I> {
    bounds: I,
    prev: (f64, f64),
    monotonize: bool,
    n: u64,
}

impl<I: Iterator<Item = (f64, f64)>> DeterministicStream<I> {
    pub fn new(bounds: impl IntoIterator<IntoIter = I>) -> Self {
        Self {
            bounds: bounds.into_iter(),
            prev: (0.0, 1.0),
            monotonize: false,
            n: 0,
        }
    }

    /// Same as `new`, with running sup/inf applied to the bounds.
    pub fn monotonized(bounds: impl IntoIterator<IntoIter = I>) -> Self {
        Self {
            monotonize: true,
            ..Self::new(bounds)
        }
    }
}

impl<I: Iterator<Item = (f64, f64)>> BoundStream for DeterministicStream<I> {
    fn advance(&mut self) -> Result<BoundStep> {
        let (mut l, mut u) = self.bounds.next().ok_or(Error::NotConverged(self.n))?;
        if self.monotonize && self.n > 0 {
            l = l.max(self.prev.0);
            u = u.min(self.prev.1);
        }
        self.n += 1;
        let step = BoundStep::new(l, u, self.prev.0, self.prev.1);
        self.prev = (l, u);
        Ok(step)
    }
}

/// Maps a stream with bounds in `[-M, M]` into `[0, 1]` via
/// `x -> (M + x) / 2M`. The first step always gets `L* = 0`, `U* = 1`.
pub struct RescaledStream<S> {
    inner: S,
    half_range: f64,
    first: bool,
}

impl<S: BoundStream> RescaledStream<S> {
    pub fn new(inner: S, half_range: f64) -> Result<Self> {
        if !(half_range > 0.0 && half_range.is_finite()) {
            return Err(invalid(format!(
                "range bound M={half_range} must be positive"
            )));
        }
        Ok(Self {
            inner,
            half_range,
            first: true,
        })
    }

    fn map(&self, x: f64) -> Result<f64> {
        let m = self.half_range;
        if !(-m..=m).contains(&x) {
            return Err(contract(format!("bound {x} outside [-{m}, {m}]")));
        }
        Ok((m + x) / (2.0 * m))
    }
}

impl<S: BoundStream> BoundStream for RescaledStream<S> {
    fn advance(&mut self) -> Result<BoundStep> {
        let raw = self.inner.advance()?;
        let lower = self.map(raw.lower)?;
        let upper = self.map(raw.upper)?;
        let step = if self.first {
            self.first = false;
            BoundStep::first(lower, upper)
        } else {
            BoundStep::new(
                lower,
                upper,
                self.map(raw.lower_star)?,
                self.map(raw.upper_star)?,
            )
        };
        Ok(step)
    }

    fn coins_consumed(&self) -> u64 {
        self.inner.coins_consumed()
    }
}

/// Unbiased two-point estimator of a quantity `s` in `[-M, M]`.
///
/// Runs [`martingale_coin`] on the rescaled stream, which targets
/// `(M + s) / 2M`, and returns `2M C - M`, i.e. `+M` or `-M`.
pub fn unbiased_estimator<S: BoundStream>(
    stream: S,
    half_range: f64,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<f64> {
    let rescaled = RescaledStream::new(stream, half_range)?;
    let coin = martingale_coin(rescaled, src, opts)?;
    Ok(if coin.value { half_range } else { -half_range })
}

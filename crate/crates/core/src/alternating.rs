//! Direct factory for `f(p) = sum_k (-1)^k a_k p^k` with
//! `1 >= a_0 >= a_1 >= ... >= 0`.
//!
//! With `P_n = X_1 X_2 ... X_n` the bounds
//!
//! ```text
//! L_0 = 0,  U_0 = a_0
//! odd n:  L_n = U_{n-1} - a_n P_n,  U_n = U_{n-1}
//! even n: U_n = L_{n-1} + a_n P_n,  L_n = L_{n-1}
//! ```
//!
//! are pathwise monotone with `E U_n - E L_n = a_n p^n`, so
//! [`crate::martingale::monotone_coin`] turns them into an `f(p)`-coin.
//! The `X_k` may also be `[0,1]`-valued draws with conditional mean `p`;
//! the products stay nonincreasing and the expectations are unchanged.

use crate::error::{contract, invalid, Result};
use crate::martingale::{monotone_coin, run_monotone, BoundStep, BoundStream, RunOptions};
use crate::source::{CoinResult, CoinSource, SoftCoin, UniformSource};

/// `a_k = a^k / k!`, computed by `a_k = a_{k-1} a / k`.
#[derive(Debug, Clone)]
pub struct ExpSeries {
    a: f64,
    k: u64,
    term: f64,
}

impl ExpSeries {
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid(format!("exp rate a={a} outside [0,1]")));
        }
        Ok(Self { a, k: 0, term: 1.0 })
    }
}

impl Iterator for ExpSeries {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.term;
        self.k += 1;
        self.term *= self.a / self.k as f64;
        Some(out)
    }
}

/// Monotone bound stream for an alternating series. An exhausted
/// coefficient iterator means all further coefficients are zero.
pub struct AlternatingStream<'a, I, C: ?Sized> {
    coeffs: I,
    coin: &'a mut C,
    n: u64,
    prod: f64,
    last_coeff: f64,
    lower: f64,
    upper: f64,
}

impl<'a, I, C> AlternatingStream<'a, I, C>
where
    I: Iterator<Item = f64>,
    C: SoftCoin + ?Sized,
{
    pub fn new(coeffs: impl IntoIterator<IntoIter = I>, coin: &'a mut C) -> Result<Self> {
        let mut coeffs = coeffs.into_iter();
        let a0 = coeffs.next().unwrap_or(0.0);
        if !(0.0..=1.0).contains(&a0) {
            return Err(contract(format!(
                "leading coefficient a_0={a0} outside [0,1]"
            )));
        }
        Ok(Self {
            coeffs,
            coin,
            n: 0,
            prod: 1.0,
            last_coeff: a0,
            lower: 0.0,
            upper: a0,
        })
    }

    pub fn index(&self) -> u64 {
        self.n
    }

    /// Running product of the coin draws.
    pub fn product(&self) -> f64 {
        self.prod
    }
}

impl<I, C> BoundStream for AlternatingStream<'_, I, C>
where
    I: Iterator<Item = f64>,
    C: SoftCoin + ?Sized,
{
    fn advance(&mut self) -> Result<BoundStep> {
        self.n += 1;
        let a_n = self.coeffs.next().unwrap_or(0.0);
        if !(a_n >= 0.0 && a_n <= self.last_coeff) {
            return Err(contract(format!(
                "coefficient a_{}={a_n} breaks 0 <= a_n <= a_(n-1)={}",
                self.n, self.last_coeff
            )));
        }
        self.last_coeff = a_n;
        if self.prod > 0.0 {
            self.prod *= self.coin.draw()?;
        }
        let (prev_lower, prev_upper) = if self.n == 1 {
            (0.0, 1.0)
        } else {
            (self.lower, self.upper)
        };
        if self.n % 2 == 1 {
            self.lower = self.upper - a_n * self.prod;
        } else {
            self.upper = self.lower + a_n * self.prod;
        }
        Ok(BoundStep::new(
            self.lower, self.upper, prev_lower, prev_upper,
        ))
    }

    fn coins_consumed(&self) -> u64 {
        self.coin.consumed()
    }
}

/// Bound stream for the series `coeffs` driven by `coin`.
pub fn alt_bounds<'a, I, C>(
    coeffs: impl IntoIterator<IntoIter = I>,
    coin: &'a mut C,
) -> Result<AlternatingStream<'a, I, C>>
where
    I: Iterator<Item = f64>,
    C: SoftCoin + ?Sized,
{
    AlternatingStream::new(coeffs, coin)
}

/// An `exp(-a p)`-coin from a p-coin, `0 <= a <= 1`.
///
/// `coins_consumed` is the number of p-coins tossed; it exceeds `n` with
/// probability `(ap)^n / n!`, so its mean is `e^{ap} <= e`.
pub fn exp_coin<C: CoinSource>(
    a: f64,
    coin: &mut C,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult> {
    generalized_exp_coin(a, coin, src, opts)
}

/// An `exp(-a J)`-coin where, given some latent state, the draws of
/// `soft_coin` are iid in `[0,1]` with mean `J`.
pub fn generalized_exp_coin<S: SoftCoin + ?Sized>(
    a: f64,
    soft_coin: &mut S,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult> {
    let stream = AlternatingStream::new(ExpSeries::new(a)?, soft_coin)?;
    monotone_coin(stream, src, opts)
}

/// [`generalized_exp_coin`] with the decision uniform supplied by the caller.
/// Returns the decision and the number of iterations.
pub(crate) fn exp_decision<S: SoftCoin + ?Sized>(
    a: f64,
    soft_coin: &mut S,
    g0: f64,
    opts: &RunOptions,
) -> Result<(bool, u64)> {
    let mut stream = AlternatingStream::new(ExpSeries::new(a)?, soft_coin)?;
    run_monotone(&mut stream, g0, opts)
}

use serde::Serialize;

use super::bernstein::hypergeom_condmean;
use super::envelope::EnvelopeCoefficients;
use crate::error::{contract, Error, Result};
use crate::martingale::{martingale_coin, BoundStep, BoundStream, RunOptions, DEFAULT_TOLERANCE};
use crate::source::{CoinResult, CoinSource, UniformSource};

/// Number of p-coin tosses and heads seen so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HeadsState {
    pub tosses: u64,
    pub heads: u64,
}

impl HeadsState {
    pub fn record(&mut self, head: bool) {
        self.tosses += 1;
        self.heads += head as u64;
    }
}

/// Bound stream `L = a(n, H_n)`, `U = b(n, H_n)` over the envelope's
/// schedule. `L*`/`U*` are the hypergeometric conditional means of the
/// previous scheduled rows given `H_n`.
pub struct EnvelopeStream<'a, E: ?Sized, C: ?Sized> {
    env: &'a E,
    coin: &'a mut C,
    state: HeadsState,
    position: usize,
    previous: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a, E, C> EnvelopeStream<'a, E, C>
where
    E: EnvelopeCoefficients + ?Sized,
    C: CoinSource + ?Sized,
{
    pub fn new(env: &'a E, coin: &'a mut C) -> Self {
        Self {
            env,
            coin,
            state: HeadsState::default(),
            position: 0,
            previous: None,
        }
    }

    pub fn state(&self) -> HeadsState {
        self.state
    }
}

impl<E, C> BoundStream for EnvelopeStream<'_, E, C>
where
    E: EnvelopeCoefficients + ?Sized,
    C: CoinSource + ?Sized,
{
    fn advance(&mut self) -> Result<BoundStep> {
        let n = self
            .env
            .schedule()
            .get(self.position)
            .ok_or(Error::NotConverged(self.position as u64))?;
        self.position += 1;
        while self.state.tosses < n {
            let head = self.coin.toss()?;
            self.state.record(head);
        }
        let k = self.state.heads;
        let lower_row = self.env.lower_row(n);
        let upper_row = self.env.upper_row(n);
        let (l, u) = (lower_row[k as usize], upper_row[k as usize]);
        let tol = DEFAULT_TOLERANCE;
        if !(l >= -tol && l <= u + tol && u <= 1.0 + tol) {
            return Err(contract(format!(
                "envelope coefficients at n={n}, k={k} violate 0 <= a <= b <= 1: ({l}, {u})"
            )));
        }
        let step = match &self.previous {
            None => BoundStep::first(l, u),
            Some((prev_lower, prev_upper)) => {
                let m = prev_lower.len() as u64 - 1;
                let (ls, us) = match self.env.conditional_means(m, n, k) {
                    Some(means) => means,
                    None => (
                        hypergeom_condmean(prev_lower, n, k)?,
                        hypergeom_condmean(prev_upper, n, k)?,
                    ),
                };
                BoundStep::new(l, u, ls, us)
            }
        };
        self.previous = Some((lower_row, upper_row));
        Ok(step)
    }

    fn coins_consumed(&self) -> u64 {
        self.state.tosses
    }
}

/// Bound stream for an `f(p)`-coin from an envelope of `f` and a p-coin.
pub fn envelope_bounds<'a, E, C>(env: &'a E, coin: &'a mut C) -> EnvelopeStream<'a, E, C>
where
    E: EnvelopeCoefficients + ?Sized,
    C: CoinSource + ?Sized,
{
    EnvelopeStream::new(env, coin)
}

/// One `f(p)`-coin: [`envelope_bounds`] fed to [`martingale_coin`].
pub fn factory_coin<E, C>(
    env: &E,
    coin: &mut C,
    src: &mut UniformSource,
    opts: &RunOptions,
) -> Result<CoinResult>
where
    E: EnvelopeCoefficients + ?Sized,
    C: CoinSource + ?Sized,
{
    martingale_coin(envelope_bounds(env, coin), src, opts)
}

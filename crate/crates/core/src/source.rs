//! Seeded randomness and coin abstractions.
//!
//! Every sampler in the crate takes its randomness from a [`UniformSource`].
//! Independent sources are obtained from one root seed by selecting a
//! distinct ChaCha stream, see [`UniformSource::split`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Purpose of a derived stream within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    /// The single decision uniform `G_0` of a coin run.
    Decision = 0,
    /// The input p-coin (or other coin source) of a factory.
    Coin = 1,
    /// Everything else: proposals, bridge points, estimator internals.
    Auxiliary = 2,
}

/// Deterministic stream of iid uniform(0,1) values.
///
/// Values lie in `[0, 1)` and `counter` grows by one per uniform drawn.
/// Standard normal draws are served from the same generator and counted
/// separately.
#[derive(Debug, Clone)]
pub struct UniformSource {
    rng: ChaCha12Rng,
    seed: u64,
    stream: u64,
    counter: u64,
    normals: u64,
}

impl UniformSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Source on an explicit ChaCha stream of `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            seed,
            stream,
            counter: 0,
            normals: 0,
        }
    }

    /// Derived source for `(replication, role)` under a root seed.
    ///
    /// The stream id is `((replication + 1) << 2) | role`; stream 0 stays
    /// reserved for [`UniformSource::new`]. Distinct keys never share a
    /// stream for `replication < 2^62 - 1`.
    pub fn split(seed: u64, replication: u64, role: Role) -> Self {
        Self::with_stream(seed, ((replication + 1) << 2) | role as u64)
    }

    pub fn next_uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.random::<f64>()
    }

    pub fn next_normal(&mut self) -> f64 {
        self.normals += 1;
        self.rng.sample(StandardNormal)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of uniforms drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn normals_drawn(&self) -> u64 {
        self.normals
    }
}

/// Supplier of `{0,1}` outcomes with a consumption counter.
pub trait CoinSource {
    fn toss(&mut self) -> Result<bool>;

    /// Tosses served so far.
    fn consumed(&self) -> u64;
}

/// Supplier of values in `[0,1]` whose conditional mean plays the role of
/// the coin's success probability. Every [`CoinSource`] is one.
pub trait SoftCoin {
    fn draw(&mut self) -> Result<f64>;

    fn consumed(&self) -> u64;
}

impl<C: CoinSource> SoftCoin for C {
    fn draw(&mut self) -> Result<f64> {
        Ok(if self.toss()? { 1.0 } else { 0.0 })
    }

    fn consumed(&self) -> u64 {
        CoinSource::consumed(self)
    }
}

/// Adapts a closure into a [`SoftCoin`].
pub struct SoftSampler<F> {
    sampler: F,
    consumed: u64,
}

impl<F: FnMut() -> Result<f64>> SoftSampler<F> {
    pub fn new(sampler: F) -> Self {
        Self {
            sampler,
            consumed: 0,
        }
    }
}

impl<F: FnMut() -> Result<f64>> SoftCoin for SoftSampler<F> {
    fn draw(&mut self) -> Result<f64> {
        self.consumed += 1;
        let x = (self.sampler)()?;
        if !(0.0..=1.0).contains(&x) {
            return Err(crate::error::contract(format!(
                "soft coin value {x} outside [0,1]"
            )));
        }
        Ok(x)
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }
}

/// A p-coin: each toss is `I{u <= p}` for a fresh uniform `u`.
#[derive(Debug, Clone)]
pub struct BernoulliCoin {
    p: f64,
    src: UniformSource,
    consumed: u64,
}

impl BernoulliCoin {
    pub fn new(p: f64, src: UniformSource) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("coin probability {p} outside [0,1]")));
        }
        Ok(Self {
            p,
            src,
            consumed: 0,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl CoinSource for BernoulliCoin {
    fn toss(&mut self) -> Result<bool> {
        self.consumed += 1;
        let u = self.src.next_uniform();
        // p = 0 must never fire even though u = 0 is a possible draw
        Ok(self.p > 0.0 && u <= self.p)
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }
}

/// Outcome of one coin run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoinResult {
    pub value: bool,
    /// Number of bound steps examined, `N >= 1`.
    pub iterations: u64,
    pub coins_consumed: u64,
    pub uniforms_consumed: u64,
}

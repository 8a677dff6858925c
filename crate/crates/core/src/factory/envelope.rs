use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Strictly increasing sequence of toss counts `n_1 < n_2 < ...` at which
/// envelope coefficients are consulted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Schedule {
    /// `1, 2, 4, 8, ...`
    #[default]
    PowersOfTwo,
    /// `1, 2, 3, ...`
    Consecutive,
    Explicit(Vec<u64>),
}

impl Schedule {
    pub fn explicit(indices: Vec<u64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("empty schedule"));
        }
        if indices[0] == 0 {
            return Err(invalid("schedule indices start at 1"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("schedule must be strictly increasing"));
        }
        Ok(Schedule::Explicit(indices))
    }

    /// The `i`-th index (0-based), or `None` past the end.
    pub fn get(&self, i: usize) -> Option<u64> {
        match self {
            Schedule::PowersOfTwo => (i < 63).then(|| 1u64 << i),
            Schedule::Consecutive => Some(i as u64 + 1),
            Schedule::Explicit(v) => v.get(i).copied(),
        }
    }

    /// All indices not exceeding `n_max`.
    pub fn up_to(&self, n_max: u64) -> Vec<u64> {
        (0..)
            .map_while(|i| self.get(i))
            .take_while(|&n| n <= n_max)
            .collect()
    }

    pub fn contains(&self, n: u64) -> bool {
        match self {
            Schedule::PowersOfTwo => n.is_power_of_two(),
            Schedule::Consecutive => n >= 1,
            Schedule::Explicit(v) => v.binary_search(&n).is_ok(),
        }
    }
}

/// Bernstein-basis envelope coefficients `a(n,k) <= b(n,k)`, `0 <= k <= n`,
/// for every `n` in the schedule.
///
/// `lower_row`/`upper_row` are only called with scheduled `n`. Providers
/// that know their coefficients exactly expose them through the `*_exact`
/// methods so validation can run in rational arithmetic.
pub trait EnvelopeCoefficients: Send + Sync {
    fn schedule(&self) -> &Schedule;

    fn lower_row(&self, n: u64) -> Vec<f64>;

    fn upper_row(&self, n: u64) -> Vec<f64>;

    fn lower_row_exact(&self, _n: u64) -> Option<Vec<BigRational>> {
        None
    }

    fn upper_row_exact(&self, _n: u64) -> Option<Vec<BigRational>> {
        None
    }

    /// Closed-form `(E(a(m, H_m) | H_n = k), E(b(m, H_m) | H_n = k))`, used
    /// instead of summing the hypergeometric weights when available.
    fn conditional_means(&self, _m: u64, _n: u64, _k: u64) -> Option<(f64, f64)> {
        None
    }

    /// The limit function `f(p)`, when known.
    fn target(&self, _p: f64) -> Option<f64> {
        None
    }

    fn name(&self) -> &str {
        "envelope"
    }
}

fn to_f64_row(row: &[BigRational]) -> Vec<f64> {
    row.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
}

fn ratio(num: u64, den: u64) -> BigRational {
    if den == 0 {
        return BigRational::zero();
    }
    BigRational::new(num.into(), den.into())
}

/// `a(n,k) = b(n,k) = k/n`; simulates `f(p) = p` with zero gap.
#[derive(Debug, Clone, Default)]
pub struct IdentityEnvelope {
    schedule: Schedule,
}

impl IdentityEnvelope {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule }
    }

    fn row(n: u64) -> Vec<BigRational> {
        (0..=n).map(|k| ratio(k, n)).collect()
    }
}

impl EnvelopeCoefficients for IdentityEnvelope {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lower_row(&self, n: u64) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    fn upper_row(&self, n: u64) -> Vec<f64> {
        self.lower_row(n)
    }

    fn lower_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        Some(Self::row(n))
    }

    fn upper_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        Some(Self::row(n))
    }

    fn conditional_means(&self, _m: u64, n: u64, k: u64) -> Option<(f64, f64)> {
        let v = k as f64 / n as f64;
        Some((v, v))
    }

    fn target(&self, p: f64) -> Option<f64> {
        Some(p)
    }

    fn name(&self) -> &str {
        "identity"
    }
}

/// Envelope of `f(p) = p^2`:
/// `a(n,k) = k(k-1) / (n(n-1))` (and `a(1,k) = 0`), `b(n,k) = (k/n)^2`.
///
/// The lower row is unbiased for `p^2`, the upper row overshoots by
/// `p(1-p)/n`, so `h_n - g_n = p(1-p)/n` for `n >= 2`.
#[derive(Debug, Clone, Default)]
pub struct SquareEnvelope {
    schedule: Schedule,
}

impl SquareEnvelope {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule }
    }

    fn lower_exact(n: u64) -> Vec<BigRational> {
        (0..=n)
            .map(|k| ratio(k * k.saturating_sub(1), n * (n - 1)))
            .collect()
    }

    fn upper_exact(n: u64) -> Vec<BigRational> {
        (0..=n).map(|k| ratio(k * k, n * n)).collect()
    }
}

impl EnvelopeCoefficients for SquareEnvelope {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lower_row(&self, n: u64) -> Vec<f64> {
        if n < 2 {
            return vec![0.0; n as usize + 1];
        }
        let d = (n * (n - 1)) as f64;
        (0..=n)
            .map(|k| (k * k.saturating_sub(1)) as f64 / d)
            .collect()
    }

    fn upper_row(&self, n: u64) -> Vec<f64> {
        let nf = n as f64;
        (0..=n).map(|k| (k as f64 / nf).powi(2)).collect()
    }

    fn lower_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        Some(Self::lower_exact(n))
    }

    fn upper_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        Some(Self::upper_exact(n))
    }

    /// Factorial moments of the hypergeometric law:
    /// `E(H_m (H_m - 1) | H_n = k) = m (m-1) k (k-1) / (n (n-1))`.
    fn conditional_means(&self, m: u64, n: u64, k: u64) -> Option<(f64, f64)> {
        if m == 0 || m >= n || k > n {
            return None;
        }
        let falling = if m < 2 {
            0.0
        } else {
            (k * k.saturating_sub(1)) as f64 / (n * (n - 1)) as f64
        };
        let (mf, mean) = (m as f64, k as f64 / n as f64);
        let second =
            ((mf - 1.0) * (k * k.saturating_sub(1)) as f64 / (n * (n - 1)) as f64 + mean) / mf;
        Some((falling, second))
    }

    fn target(&self, p: f64) -> Option<f64> {
        Some(p * p)
    }

    fn name(&self) -> &str {
        "p2"
    }
}

/// Coefficients held in a table, typically loaded from an envelope file.
#[derive(Debug, Clone)]
pub struct TabulatedEnvelope {
    schedule: Schedule,
    lower: BTreeMap<u64, Vec<BigRational>>,
    upper: BTreeMap<u64, Vec<BigRational>>,
    lower_f: BTreeMap<u64, Vec<f64>>,
    upper_f: BTreeMap<u64, Vec<f64>>,
    name: String,
}

impl TabulatedEnvelope {
    /// Builds a table from complete rows. `rows[n] = (a(n, 0..=n), b(n, 0..=n))`
    /// must be present for every scheduled `n`.
    pub fn from_rows(
        schedule: Vec<u64>,
        mut rows: BTreeMap<u64, (Vec<BigRational>, Vec<BigRational>)>,
    ) -> Result<Self> {
        let schedule = Schedule::explicit(schedule)?;
        let mut lower = BTreeMap::new();
        let mut upper = BTreeMap::new();
        for n in schedule.up_to(u64::MAX) {
            let (a, b) = rows
                .remove(&n)
                .ok_or_else(|| invalid(format!("missing coefficients for n={n}")))?;
            if a.len() as u64 != n + 1 || b.len() as u64 != n + 1 {
                return Err(invalid(format!("row n={n} must have {} entries", n + 1)));
            }
            lower.insert(n, a);
            upper.insert(n, b);
        }
        if let Some(n) = rows.keys().next() {
            return Err(invalid(format!("coefficients for n={n} not in schedule")));
        }
        let lower_f = lower.iter().map(|(&n, r)| (n, to_f64_row(r))).collect();
        let upper_f = upper.iter().map(|(&n, r)| (n, to_f64_row(r))).collect();
        Ok(Self {
            schedule,
            lower,
            upper,
            lower_f,
            upper_f,
            name: "table".into(),
        })
    }

    /// Copies the exact rows of `env` for scheduled `n <= n_max`.
    pub fn snapshot(env: &dyn EnvelopeCoefficients, n_max: u64) -> Result<Self> {
        let schedule = env.schedule().up_to(n_max);
        let mut rows = BTreeMap::new();
        for &n in &schedule {
            let a = env
                .lower_row_exact(n)
                .ok_or_else(|| invalid("snapshot needs exact coefficients"))?;
            let b = env
                .upper_row_exact(n)
                .ok_or_else(|| invalid("snapshot needs exact coefficients"))?;
            rows.insert(n, (a, b));
        }
        Self::from_rows(schedule, rows).map(|t| t.with_name(env.name()))
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Overwrites one `(a(n,k), b(n,k))` pair.
    pub fn set(&mut self, n: u64, k: u64, a: BigRational, b: BigRational) -> Result<()> {
        let (Some(lo), Some(hi)) = (self.lower.get_mut(&n), self.upper.get_mut(&n)) else {
            return Err(invalid(format!("n={n} not in schedule")));
        };
        if k > n {
            return Err(invalid(format!("k={k} exceeds n={n}")));
        }
        self.lower_f.get_mut(&n).unwrap()[k as usize] = a.to_f64().unwrap_or(f64::NAN);
        self.upper_f.get_mut(&n).unwrap()[k as usize] = b.to_f64().unwrap_or(f64::NAN);
        lo[k as usize] = a;
        hi[k as usize] = b;
        Ok(())
    }
}

impl EnvelopeCoefficients for TabulatedEnvelope {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lower_row(&self, n: u64) -> Vec<f64> {
        self.lower_f[&n].clone()
    }

    fn upper_row(&self, n: u64) -> Vec<f64> {
        self.upper_f[&n].clone()
    }

    fn lower_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        self.lower.get(&n).cloned()
    }

    fn upper_row_exact(&self, n: u64) -> Option<Vec<BigRational>> {
        self.upper.get(&n).cloned()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

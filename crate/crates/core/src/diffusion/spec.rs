use std::fmt;
use std::sync::Arc;

use crate::error::{contract, invalid, Error, Result};
use crate::source::UniformSource;

/// Slack on `phi` leaving `[0,1]` before a spec is declared invalid.
pub const PHI_TOLERANCE: f64 = 1e-9;

/// Drift `alpha` of `dX = alpha(X) dt + dW` with its derivative and the
/// antiderivative `A(u) = int_0^u alpha`.
pub trait Drift: Send + Sync {
    fn name(&self) -> &str;

    fn alpha(&self, u: f64) -> f64;

    fn alpha_prime(&self, u: f64) -> f64;

    fn antiderivative(&self, u: f64) -> f64;

    /// `sup_u A(u)` when finite; enables the default Gaussian rejection
    /// sampler for the endpoint density.
    fn antiderivative_sup(&self) -> Option<f64> {
        None
    }

    /// Exact draw from the density proportional to
    /// `exp(A(u) - (u - x)^2 / 2T)`, for drifts where it is available in
    /// closed form. Overrides the rejection sampler.
    fn sample_endpoint(&self, _x: f64, _horizon: f64, _src: &mut UniformSource) -> Option<f64> {
        None
    }
}

/// `alpha = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDrift;

impl Drift for ZeroDrift {
    fn name(&self) -> &str {
        "zero"
    }
    fn alpha(&self, _u: f64) -> f64 {
        0.0
    }
    fn alpha_prime(&self, _u: f64) -> f64 {
        0.0
    }
    fn antiderivative(&self, _u: f64) -> f64 {
        0.0
    }
    fn antiderivative_sup(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `alpha = sin`, `A(u) = 1 - cos u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineDrift;

impl Drift for SineDrift {
    fn name(&self) -> &str {
        "sine"
    }
    fn alpha(&self, u: f64) -> f64 {
        u.sin()
    }
    fn alpha_prime(&self, u: f64) -> f64 {
        u.cos()
    }
    fn antiderivative(&self, u: f64) -> f64 {
        1.0 - u.cos()
    }
    fn antiderivative_sup(&self) -> Option<f64> {
        Some(2.0)
    }
}

/// `alpha = beta` constant; `(alpha^2 + alpha')/2` is the constant
/// `beta^2/2`, so `phi` is constant too. The endpoint density is
/// Gaussian with mean `x + beta T` and variance `T`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrift(pub f64);

impl Drift for ConstantDrift {
    fn name(&self) -> &str {
        "constant"
    }
    fn alpha(&self, _u: f64) -> f64 {
        self.0
    }
    fn alpha_prime(&self, _u: f64) -> f64 {
        0.0
    }
    fn antiderivative(&self, u: f64) -> f64 {
        self.0 * u
    }
    fn sample_endpoint(&self, x: f64, horizon: f64, src: &mut UniformSource) -> Option<f64> {
        Some(x + self.0 * horizon + horizon.sqrt() * src.next_normal())
    }
}

/// Everything the exact sampler needs for one time interval `[0, T]`.
///
/// `ell` and `r` bound `(alpha^2 + alpha')/2` between `ell` and `ell + r`.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub drift: Arc<dyn Drift>,
    pub ell: f64,
    pub r: f64,
    pub horizon: f64,
    pub start: f64,
    /// Overrides [`Drift::antiderivative_sup`] for the rejection sampler.
    pub antiderivative_max: Option<f64>,
    /// Interval scanned by [`DiffusionSpec::validate`]; defaults to
    /// `start -/+ 10`.
    pub check_interval: Option<(f64, f64)>,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("drift", &self.drift.name())
            .field("ell", &self.ell)
            .field("r", &self.r)
            .field("horizon", &self.horizon)
            .field("start", &self.start)
            .finish()
    }
}

impl DiffusionSpec {
    pub fn new(drift: Arc<dyn Drift>, ell: f64, r: f64, horizon: f64, start: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("range r={r} must be positive")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon T={horizon} must be positive")));
        }
        if !ell.is_finite() || !start.is_finite() {
            return Err(invalid("ell and start must be finite"));
        }
        Ok(Self {
            drift,
            ell,
            r,
            horizon,
            start,
            antiderivative_max: None,
            check_interval: None,
        })
    }

    /// Zero drift with `ell = 0`, `r = 1/2`; any positive `r` gives `phi = 0`.
    pub fn zero(start: f64, horizon: f64) -> Result<Self> {
        Self::new(Arc::new(ZeroDrift), 0.0, 0.5, horizon, start)
    }

    /// `alpha = sin` with the tight bounds `ell = -1/2`, `r = 9/8`.
    pub fn sine(start: f64, horizon: f64) -> Result<Self> {
        Self::new(Arc::new(SineDrift), -0.5, 9.0 / 8.0, horizon, start)
    }

    /// Constant drift `beta` tuned so that `phi` equals `level` everywhere.
    pub fn constant_phi(beta: f64, level: f64, r: f64, start: f64, horizon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(invalid(format!("phi level {level} outside [0,1]")));
        }
        let ell = beta * beta / 2.0 - level * r;
        Self::new(Arc::new(ConstantDrift(beta)), ell, r, horizon, start)
    }

    /// Named preset: `zero` or `sine`.
    pub fn preset(name: &str, start: f64, horizon: f64) -> Result<Self> {
        match name {
            "zero" => Self::zero(start, horizon),
            "sine" => Self::sine(start, horizon),
            other => Err(Error::Config(format!(
                "unknown drift preset `{other}` (expected zero or sine)"
            ))),
        }
    }

    pub fn with_start(&self, start: f64) -> Self {
        Self {
            start,
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    /// `r T`, the rate of the exponential acceptance coin.
    pub fn rate(&self) -> f64 {
        self.r * self.horizon
    }

    fn raw_phi(&self, u: f64) -> f64 {
        let a = self.drift.alpha(u);
        ((a * a + self.drift.alpha_prime(u)) / 2.0 - self.ell) / self.r
    }

    /// `phi(u) = ((alpha^2 + alpha')/2 - ell) / r`, required to lie in
    /// `[0,1]` up to [`PHI_TOLERANCE`].
    pub fn phi(&self, u: f64) -> Result<f64> {
        let v = self.raw_phi(u);
        if !(-PHI_TOLERANCE..=1.0 + PHI_TOLERANCE).contains(&v) {
            return Err(contract(format!(
                "phi({u}) = {v} outside [0,1]: ell={} r={} do not bound the drift",
                self.ell, self.r
            )));
        }
        Ok(v.clamp(0.0, 1.0))
    }

    /// Scans `phi` on a 10^4-point grid of the check interval. Returns the
    /// observed `(min, max)` of `phi`.
    pub fn validate(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self
            .check_interval
            .unwrap_or((self.start - 10.0, self.start + 10.0));
        if !(lo < hi) {
            return Err(invalid("empty check interval"));
        }
        let points = 10_000;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..points {
            let u = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let v = self.raw_phi(u);
            min = min.min(v);
            max = max.max(v);
            self.phi(u)?;
        }
        Ok((min, max))
    }
}

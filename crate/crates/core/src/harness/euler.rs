use rayon::prelude::*;

use crate::diffusion::DiffusionSpec;
use crate::error::{invalid, Result};
use crate::source::{Role, UniformSource};

/// Euler-Maruyama paths of `dX = alpha(X) dt + dW` from `spec.start` to
/// `horizon`, returning the endpoints. The step is shrunk so that it
/// divides the horizon.
pub fn euler_maruyama_reference(
    spec: &DiffusionSpec,
    horizon: f64,
    step: f64,
    n: usize,
    src: &mut UniformSource,
) -> Result<Vec<f64>> {
    let (steps, dt) = grid(horizon, step)?;
    Ok((0..n).map(|_| euler_path(spec, steps, dt, src)).collect())
}

/// Parallel variant: path `i` uses its own source split from `seed`.
pub fn euler_maruyama_batch(
    spec: &DiffusionSpec,
    horizon: f64,
    step: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (steps, dt) = grid(horizon, step)?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            euler_path(
                spec,
                steps,
                dt,
                &mut UniformSource::split(seed, i, Role::Auxiliary),
            )
        })
        .collect())
}

fn grid(horizon: f64, step: f64) -> Result<(u64, f64)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!("step {step} must be positive")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon {horizon} must be positive")));
    }
    let steps = (horizon / step - 1e-9).ceil().max(1.0) as u64;
    Ok((steps, horizon / steps as f64))
}

fn euler_path(spec: &DiffusionSpec, steps: u64, dt: f64, src: &mut UniformSource) -> f64 {
    let sd = dt.sqrt();
    let mut x = spec.start;
    for _ in 0..steps {
        x += spec.drift.alpha(x) * dt + sd * src.next_normal();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{ks_statistic, mean_var};

    #[test]
    fn grid_divides_horizon() {
        assert_eq!(grid(0.5, 1e-4).unwrap().0, 5000);
        assert_eq!(grid(1.0, 0.3).unwrap().0, 4);
        assert!(grid(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_drift_is_exact_gaussian() {
        let spec = DiffusionSpec::zero(1.0, 2.0).unwrap();
        let xs =
            euler_maruyama_reference(&spec, 2.0, 0.5, 50_000, &mut UniformSource::new(3)).unwrap();
        let (m, v) = mean_var(&xs);
        assert!((m - 1.0).abs() < 3.0 * (2.0f64 / 50_000.0).sqrt());
        assert!((v - 2.0).abs() < 3.0 * 2.0 * (2.0f64 / 50_000.0).sqrt());
    }

    #[test]
    fn batch_is_deterministic_and_step_halving_is_below_noise() {
        let spec = DiffusionSpec::sine(0.0, 0.5).unwrap();
        let a = euler_maruyama_batch(&spec, 0.5, 2e-3, 4000, 5).unwrap();
        assert_eq!(a, euler_maruyama_batch(&spec, 0.5, 2e-3, 4000, 5).unwrap());
        let b = euler_maruyama_batch(&spec, 0.5, 1e-3, 4000, 6).unwrap();
        // the 1% two-sample critical value at n = m = 4000
        assert!(ks_statistic(&a, &b) < 1.6276 * (2.0f64 / 4000.0).sqrt());
    }
}

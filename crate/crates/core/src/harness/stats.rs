use serde::Serialize;

use super::report::Check;

pub const DEFAULT_SIGMA: f64 = 3.0;
pub const KS_ALPHA: f64 = 0.01;

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// `c(alpha) sqrt((n + m) / (n m))` with `c(alpha) = sqrt(-ln(alpha/2) / 2)`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub n: usize,
    pub m: usize,
}

impl KsResult {
    pub fn pass(&self) -> bool {
        self.statistic < self.critical
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> KsResult {
    KsResult {
        statistic: ks_statistic(a, b),
        critical: ks_critical(alpha, a.len(), b.len()),
        n: a.len(),
        m: b.len(),
    }
}

/// `|hits/reps - p| <= sigma * sqrt(p (1-p) / reps)`.
pub fn frequency_check(name: &str, hits: u64, reps: u64, expected: f64, sigma: f64) -> Check {
    let observed = if reps == 0 {
        f64::NAN
    } else {
        hits as f64 / reps as f64
    };
    if reps < 2 {
        return Check::undecided(
            name,
            "frequency",
            observed,
            Some(expected),
            reps,
            "insufficient replications",
        );
    }
    let stderr = (expected * (1.0 - expected) / reps as f64).sqrt();
    let pass = (observed - expected).abs() <= sigma * stderr;
    Check::new(name, "frequency", observed, Some(expected), reps, pass).with_stderr(stderr)
}

/// Sample mean against a known mean with known standard deviation.
pub fn mean_check(name: &str, xs: &[f64], expected: f64, sd: f64, sigma: f64) -> Check {
    let (mean, _) = mean_var(xs);
    let n = xs.len() as u64;
    if n < 2 {
        return Check::undecided(
            name,
            "mean",
            mean,
            Some(expected),
            n,
            "insufficient replications",
        );
    }
    let stderr = sd / (n as f64).sqrt();
    Check::new(
        name,
        "mean",
        mean,
        Some(expected),
        n,
        (mean - expected).abs() <= sigma * stderr,
    )
    .with_stderr(stderr)
}

/// Sample variance against the variance `v` of a Gaussian, whose sample
/// variance has standard error `v sqrt(2/n)`.
pub fn gaussian_variance_check(name: &str, xs: &[f64], v: f64, sigma: f64) -> Check {
    let (_, var) = mean_var(xs);
    let n = xs.len() as u64;
    if n < 2 {
        return Check::undecided(
            name,
            "variance",
            var,
            Some(v),
            n,
            "insufficient replications",
        );
    }
    let stderr = v * (2.0 / n as f64).sqrt();
    Check::new(
        name,
        "variance",
        var,
        Some(v),
        n,
        (var - v).abs() <= sigma * stderr,
    )
    .with_stderr(stderr)
}

/// Sample mean below `bound` up to `sigma` standard errors.
pub fn mean_bound_check(name: &str, xs: &[f64], bound: f64, sigma: f64) -> Check {
    let (mean, var) = mean_var(xs);
    let n = xs.len() as u64;
    if n < 2 {
        return Check::undecided(
            name,
            "upper_bound",
            mean,
            Some(bound),
            n,
            "insufficient replications",
        );
    }
    let stderr = (var / n as f64).sqrt();
    Check::new(
        name,
        "upper_bound",
        mean,
        Some(bound),
        n,
        mean <= bound + sigma * stderr,
    )
    .with_stderr(stderr)
}

pub fn ks_check(name: &str, a: &[f64], b: &[f64], alpha: f64) -> Check {
    let ks = ks_two_sample(a, b, alpha);
    let mut c = Check::new(name, "ks", ks.statistic, None, ks.n as u64, ks.pass());
    c.critical = Some(ks.critical);
    c.reference_samples = Some(ks.m as u64);
    c
}

/// Summary of a per-run cost such as iterations or coins tossed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsumptionStats {
    pub mean: f64,
    pub sd: f64,
    pub min: u64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
}

impl ConsumptionStats {
    pub fn from_counts(counts: &[u64]) -> Option<Self> {
        if counts.is_empty() {
            return None;
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, var) = mean_var(&xs);
        let q = |p: f64| {
            sorted[(((sorted.len() as f64) * p).ceil() as usize).clamp(1, sorted.len()) - 1]
        };
        Some(Self {
            mean,
            sd: if var.is_nan() { 0.0 } else { var.sqrt() },
            min: sorted[0],
            p50: q(0.5),
            p90: q(0.9),
            p99: q(0.99),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_critical_value() {
        let c = ks_critical(0.01, 10_000, 10_000);
        assert!((c - 1.627_624 * (2.0f64 / 10_000.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn ks_statistic_brute_force() {
        // oracle: evaluate both empirical CDFs at every sample point
        let a = [0.1, 0.4, 0.4, 0.9, 1.3];
        let b = [0.2, 0.4, 1.0];
        let ecdf =
            |xs: &[f64], t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
        let want = a
            .iter()
            .chain(&b)
            .map(|&t| (ecdf(&a, t) - ecdf(&b, t)).abs())
            .fold(0.0, f64::max);
        assert!((ks_statistic(&a, &b) - want).abs() < 1e-15);
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn frequency_checks() {
        assert!(frequency_check("f", 5_000, 10_000, 0.5, 3.0).pass == Some(true));
        assert!(frequency_check("f", 5_200, 10_000, 0.5, 3.0).pass == Some(false));
        let single = frequency_check("f", 1, 1, 0.5, 3.0);
        assert_eq!(single.pass, None);
        assert_eq!(single.note.as_deref(), Some("insufficient replications"));
    }

    #[test]
    fn consumption_quantiles() {
        let s = ConsumptionStats::from_counts(&[5, 1, 2, 3, 4, 6, 7, 8, 9, 10]).unwrap();
        assert_eq!((s.min, s.p50, s.p90, s.p99, s.max), (1, 5, 9, 10, 10));
        assert!((s.mean - 5.5).abs() < 1e-15);
        assert!(ConsumptionStats::from_counts(&[]).is_none());
    }
}

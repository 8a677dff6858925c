//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Reference values are recomputed here from closed forms, exact rational
//! arithmetic or an independent Euler-Maruyama simulator driven by its own
//! generator, never taken from the library under test.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use coinforge::alternating::exp_coin;
use coinforge::diffusion::{
    exact_sample, exact_sample_segmented, segment_horizon, DiffusionSpec, SampleOptions,
};
use coinforge::factory::{
    envelope_bounds, factory_coin, validate_envelope, Schedule, SquareEnvelope,
};
use coinforge::harness::selftest;
use coinforge::martingale::{run_martingale, unbiased_estimator, RunOptions, TildeState};
use coinforge::{BernoulliCoin, CoinResult, Result, Role, UniformSource};

const REPS: u64 = 100_000;
const SIGMA: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(observed: f64, expected: f64, stderr: f64) -> bool {
    (observed - expected).abs() <= SIGMA * stderr
}

fn freq_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn exp_runs(a: f64, p: f64, seed: u64) -> Result<Vec<CoinResult>> {
    let opts = RunOptions::default();
    (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut coin = BernoulliCoin::new(p, UniformSource::split(seed, r, Role::Coin))?;
            exp_coin(
                a,
                &mut coin,
                &mut UniformSource::split(seed, r, Role::Decision),
                &opts,
            )
        })
        .collect()
}

fn criterion_1() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, p, seed) in [(0.5, 0.3, 101), (1.0, 0.9, 102)] {
        let runs = exp_runs(a, p, seed)?;
        let freq = runs.iter().filter(|r| r.value).count() as f64 / REPS as f64;
        let want = f64::exp(-a * p);
        let ok = within(freq, want, freq_se(want, REPS));
        pass &= ok;
        parts.push(format!("(a={a}, p={p}) freq={freq:.6} want={want:.6}"));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn criterion_2() -> Result<Outcome> {
    let (a, p) = (0.5, 0.3);
    let runs = exp_runs(a, p, 201)?;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut factorial = 1.0;
    for n in 1..=6u64 {
        factorial *= n as f64;
        let want = (a * p).powi(n as i32) / factorial;
        let got = runs.iter().filter(|r| r.coins_consumed > n).count() as f64 / REPS as f64;
        let ok = within(got, want, freq_se(want, REPS));
        pass &= ok;
        parts.push(format!("P(N>{n})={got:.2e}/{want:.2e}"));
    }
    let coins: Vec<f64> = runs.iter().map(|r| r.coins_consumed as f64).collect();
    let mean = coins.iter().sum::<f64>() / REPS as f64;
    let sd = (coins.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (REPS - 1) as f64).sqrt();
    let bound_ok = mean <= std::f64::consts::E + SIGMA * sd / (REPS as f64).sqrt();
    pass &= bound_ok;
    parts.push(format!(
        "E N={mean:.4} <= e (exact e^(ap)={:.4})",
        (a * p).exp()
    ));
    Ok(Outcome {
        pass,
        detail: parts.join(" "),
    })
}

fn criterion_3() -> Result<Outcome> {
    let p = 0.5;
    let env = SquareEnvelope::new(Schedule::PowersOfTwo);
    let opts = RunOptions::default();
    let runs: Vec<CoinResult> = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut coin = BernoulliCoin::new(p, UniformSource::split(301, r, Role::Coin))?;
            factory_coin(
                &env,
                &mut coin,
                &mut UniformSource::split(301, r, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<_>>()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2u64, 4, 8, 16] {
        let want = p * (1.0 - p) / n as f64;
        let got = runs.iter().filter(|r| r.coins_consumed > n).count() as f64 / REPS as f64;
        pass &= within(got, want, freq_se(want, REPS));
        parts.push(format!("P(N>{n})={got:.5}/{want:.5}"));
    }
    let freq = runs.iter().filter(|r| r.value).count() as f64 / REPS as f64;
    pass &= within(freq, p * p, freq_se(p * p, REPS));
    parts.push(format!("freq={freq:.5}/0.25"));
    Ok(Outcome {
        pass,
        detail: parts.join(" "),
    })
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn rat(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn square_lower(n: u64, k: u64) -> BigRational {
    if n < 2 {
        BigRational::zero()
    } else {
        rat(k * k.saturating_sub(1), n * (n - 1))
    }
}

fn square_upper(n: u64, k: u64) -> BigRational {
    rat(k * k, n * n)
}

fn criterion_4() -> Result<Outcome> {
    let n_max = 30u64;
    let mut violations = 0usize;
    let mut pairs = 0usize;
    for n in 1..=n_max {
        for k in 0..=n {
            let (a, b) = (square_lower(n, k), square_upper(n, k));
            if a < BigRational::zero() || a > b || b > BigRational::one() {
                violations += 1;
            }
        }
        for m in 1..n {
            pairs += 1;
            for k in 0..=n {
                let total = binomial(n, k);
                let mut lower_mean = BigRational::zero();
                let mut upper_mean = BigRational::zero();
                for i in k.saturating_sub(n - m)..=k.min(m) {
                    let w =
                        BigRational::new(binomial(n - m, k - i) * binomial(m, i), total.clone());
                    lower_mean += &w * square_lower(m, i);
                    upper_mean += w * square_upper(m, i);
                }
                if square_lower(n, k) < lower_mean || square_upper(n, k) > upper_mean {
                    violations += 1;
                }
            }
        }
    }
    let report = validate_envelope(&SquareEnvelope::new(Schedule::Consecutive), n_max, &[0.5]);
    let pass =
        violations == 0 && report.exact && report.is_valid() && report.pairs_checked == pairs;
    Ok(Outcome {
        pass,
        detail: format!(
            "oracle: {pairs} pairs, {violations} violations; library: {} pairs, {} violations (exact={})",
            report.pairs_checked,
            report.violations.len(),
            report.exact
        ),
    })
}

fn criterion_5() -> Result<Outcome> {
    let env = SquareEnvelope::new(Schedule::PowersOfTwo);
    let opts = RunOptions::default();
    let mut steps = 0u64;
    let mut worst_step = 0.0f64;
    let mut worst_product = 0.0f64;
    let mut monotone = true;
    for r in 0..1000u64 {
        let p = UniformSource::split(501, r, Role::Auxiliary).next_uniform();
        let mut coin = BernoulliCoin::new(p, UniformSource::split(501, r, Role::Coin))?;
        let mut stream = envelope_bounds(&env, &mut coin);
        let g0 = UniformSource::split(501, r, Role::Decision).next_uniform();
        let mut product = 1.0f64;
        run_martingale(&mut stream, g0, &opts, |s, before: &TildeState, after| {
            steps += 1;
            let ratio = (s.upper - s.lower) / (s.upper_star - s.lower_star);
            product *= ratio;
            let want = before.gap() * ratio;
            let scale = want.abs().max(f64::MIN_POSITIVE);
            worst_step = worst_step.max((after.gap() - want).abs() / scale);
            worst_product = worst_product
                .max((after.gap() - product).abs() / product.abs().max(f64::MIN_POSITIVE));
            monotone &= after.lower >= before.lower
                && after.upper <= before.upper
                && after.lower <= after.upper;
        })?;
    }
    let pass = worst_step <= 1e-12 && worst_product <= 1e-12 && monotone;
    Ok(Outcome {
        pass,
        detail: format!(
            "{steps} steps; max rel. error per step {worst_step:.1e}, vs running product {worst_product:.1e}; monotone={monotone}"
        ),
    })
}

fn criterion_6() -> Result<Outcome> {
    // s = p^2 = 0.2 through random envelope bounds, rescaled from [-1, 1]
    let s = 0.2f64;
    let p = s.sqrt();
    let env = SquareEnvelope::new(Schedule::PowersOfTwo);
    let opts = RunOptions::default();
    let draws: Vec<f64> = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut coin = BernoulliCoin::new(p, UniformSource::split(601, r, Role::Coin))?;
            let stream = envelope_bounds(&env, &mut coin);
            unbiased_estimator(
                stream,
                1.0,
                &mut UniformSource::split(601, r, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<_>>()?;
    let two_point = draws.iter().all(|&d| d == 1.0 || d == -1.0);
    let mean = draws.iter().sum::<f64>() / REPS as f64;
    let band = 3.0 * (0.96f64 / REPS as f64).sqrt();
    Ok(Outcome {
        pass: two_point && (mean - s).abs() <= band,
        detail: format!(
            "mean={mean:.5} target=0.2 band=+-{band:.5} values in {{-1,+1}}={two_point}"
        ),
    })
}

/// Independent Euler-Maruyama endpoints of `dX = sin(X) dt + dW`.
fn oracle_sine_paths(x: f64, horizon: f64, step: f64, n: usize, seed: u64) -> Vec<f64> {
    let steps = (horizon / step).round() as usize;
    let dt = horizon / steps as f64;
    let sd = dt.sqrt();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut v = x;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                v += v.sin() * dt + sd * z;
            }
            v
        })
        .collect()
}

/// `(D, critical value at 1%)` for two samples.
fn ks(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let ecdf = |xs: &[f64], t: f64| xs.partition_point(|&x| x <= t) as f64 / xs.len() as f64;
    let d = a
        .iter()
        .chain(&b)
        .map(|&t| (ecdf(&a, t) - ecdf(&b, t)).abs())
        .fold(0.0, f64::max);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let c = (-(0.01f64 / 2.0).ln() / 2.0).sqrt();
    (d, c * ((n + m) / (n * m)).sqrt())
}

fn criterion_7() -> Result<Outcome> {
    let n = 10_000u64;
    let opts = SampleOptions::default();
    let sine = DiffusionSpec::sine(0.0, 0.5)?;
    let exact: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            exact_sample(
                &sine,
                &mut UniformSource::split(701, i, Role::Decision),
                &opts,
            )
            .map(|d| d.value)
        })
        .collect::<Result<_>>()?;
    let reference = oracle_sine_paths(0.0, 0.5, 1e-4, n as usize, 702);
    let (d, crit) = ks(&exact, &reference);

    let zero = DiffusionSpec::zero(0.0, 1.0)?;
    let draws = (0..n)
        .into_par_iter()
        .map(|i| {
            exact_sample(
                &zero,
                &mut UniformSource::split(703, i, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let first_proposal = draws.iter().all(|d| d.proposals == 1);
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mean_ok = mean.abs() <= 3.0 / 100.0;
    let var_ok = (var - 1.0).abs() <= 3.0 * (2.0f64 / n as f64).sqrt();
    Ok(Outcome {
        pass: d < crit && mean_ok && var_ok && first_proposal,
        detail: format!(
            "sine T=0.5: D={d:.4} < {crit:.4}; zero T=1: mean={mean:.4} var={var:.4}, all first-proposal={first_proposal}"
        ),
    })
}

fn criterion_8() -> Result<Outcome> {
    let n = 10_000u64;
    let total = 2.0;
    let opts = SampleOptions::default();
    let sine = DiffusionSpec::sine(0.0, total)?;
    let pieces = segment_horizon(&sine, total)?.len();
    let exact = (0..n)
        .into_par_iter()
        .map(|i| {
            exact_sample_segmented(
                &sine,
                total,
                &mut UniformSource::split(801, i, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let chained = exact.iter().all(|d| d.segments == 3);
    let xs: Vec<f64> = exact.iter().map(|d| d.value).collect();
    let reference = oracle_sine_paths(0.0, total, 1e-4, n as usize, 802);
    let (d, crit) = ks(&xs, &reference);
    Ok(Outcome {
        pass: pieces == 3 && chained && d < crit,
        detail: format!(
            "T=2 in {pieces} segments of length {:.4}: D={d:.4} < {crit:.4}",
            total / pieces as f64
        ),
    })
}

fn criterion_9() -> Result<Outcome> {
    let a = selftest(909)?.to_json()?;
    let b = selftest(909)?.to_json()?;
    let other = selftest(910)?.to_json()?;
    Ok(Outcome {
        pass: a == b && a != other && !a.contains("timestamp"),
        detail: format!(
            "{} bytes, identical={}, differs for another seed={}",
            a.len(),
            a == b,
            a != other
        ),
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("exponential factory frequency", criterion_1),
        ("exponential factory tail and mean cost", criterion_2),
        ("martingale coin tail law, p2 envelope", criterion_3),
        ("p2 envelope exact validity, m < n <= 30", criterion_4),
        ("tilde construction telescoping", criterion_5),
        ("two-point unbiased estimator", criterion_6),
        ("exact diffusion vs Euler-Maruyama", criterion_7),
        ("segmented diffusion vs Euler-Maruyama", criterion_8),
        ("selftest determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (verdict, detail) = match run() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {} [{verdict}] {name}: {detail} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

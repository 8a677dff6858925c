use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{CommonSettings, ConfigMap};
use super::euler::euler_maruyama_batch;
use super::report::{to_csv, Check, CommandOutput, TestReport};
use super::stats::{
    frequency_check, gaussian_variance_check, ks_check, mean_bound_check, mean_check, KS_ALPHA,
};
use crate::alternating::exp_coin;
use crate::diffusion::{
    exact_sample, exact_sample_segmented, segment_count, DiffusionSpec, SampleOptions,
};
use crate::error::{contract, Error, Result};
use crate::factory::{
    bernstein_eval, default_grid, factory_coin, load_envelope, validate_envelope,
    EnvelopeCoefficients, IdentityEnvelope, Schedule, SquareEnvelope,
};
use crate::martingale::{
    estimator_coin, sequence_coin, unbiased_estimator, DeterministicStream, RunOptions,
};
use crate::source::{BernoulliCoin, CoinResult, CoinSource, Role, UniformSource};

pub const DEFAULT_COIN_REPS: u64 = 10_000;
pub const DEFAULT_SDE_SAMPLES: u64 = 10_000;
pub const DEFAULT_EM_STEP: f64 = 1e-4;
/// Largest index checked when validating a built-in envelope.
pub const DEFAULT_VALIDATE_N_MAX: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeChoice {
    Builtin(String),
    File(PathBuf),
}

impl EnvelopeChoice {
    /// `p2` and `identity` name the built-in envelopes; anything else is a path.
    pub fn parse(s: &str) -> Self {
        match s {
            "p2" | "identity" => Self::Builtin(s.to_string()),
            path => Self::File(PathBuf::from(path)),
        }
    }

    pub fn load(&self) -> Result<Arc<dyn EnvelopeCoefficients>> {
        Ok(match self {
            Self::Builtin(name) if name == "p2" => {
                Arc::new(SquareEnvelope::new(Schedule::PowersOfTwo))
            }
            Self::Builtin(_) => Arc::new(IdentityEnvelope::new(Schedule::PowersOfTwo)),
            Self::File(path) => Arc::new(load_envelope(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoinTarget {
    /// Estimator coin for `p^2`: four p-coins, estimate `H (H - 1) / 12`.
    Estimator { p: f64 },
    /// Deterministic dyadic bounds on `p` itself.
    Sequence { p: f64 },
    /// Alternating-series coin for `exp(-a p)`.
    AltExp { a: f64, p: f64 },
    /// Polynomial-envelope factory coin.
    Envelope { envelope: EnvelopeChoice, p: f64 },
}

impl CoinTarget {
    pub fn from_config(map: &ConfigMap) -> Result<Self> {
        let target = map.get("target").ok_or_else(|| {
            Error::Config("missing `target` (alg1, alg2, alg3-alt-exp, alg4-envelope)".into())
        })?;
        let p = map
            .parsed::<f64>("p")?
            .ok_or_else(|| Error::Config("missing coin probability `p`".into()))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("p = {p} outside [0,1]")));
        }
        Ok(match target {
            "alg1" => Self::Estimator { p },
            "alg2" => Self::Sequence { p },
            "alg3-alt-exp" => {
                let a = map.f64_or("a", 1.0)?;
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::Config(format!("a = {a} outside [0,1]")));
                }
                Self::AltExp { a, p }
            }
            "alg4-envelope" => Self::Envelope {
                envelope: EnvelopeChoice::parse(map.get("envelope").unwrap_or("p2")),
                p,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown target `{other}` (expected alg1, alg2, alg3-alt-exp or alg4-envelope)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct RunRow {
    rep: u64,
    value: Option<u8>,
    iterations: u64,
    coins: u64,
    uniforms: u64,
}

fn run_options(map: &ConfigMap) -> Result<RunOptions> {
    Ok(RunOptions {
        max_iterations: map.count_or("max_iterations", RunOptions::default().max_iterations)?,
        ..RunOptions::default()
    })
}

fn base_report(command: &str, map: &ConfigMap, common: &CommonSettings) -> TestReport {
    let mut report = TestReport::new(command, common.seed);
    for (k, v) in map.entries() {
        if k != "out" && k != "seed" {
            report.setting(k, v);
        }
    }
    report.setting("reps", common.reps);
    report.setting("sigma", common.sigma);
    report
}

/// Runs replications of a coin target and checks its frequency and cost.
pub fn cmd_coin(map: &ConfigMap, env_seed: Option<&str>) -> Result<CommandOutput> {
    let common = CommonSettings::from_config(map, env_seed, DEFAULT_COIN_REPS)?;
    let target = CoinTarget::from_config(map)?;
    let opts = run_options(map)?;
    let mut report = base_report("coin", map, &common);
    let seed = common.seed;

    let envelope = match &target {
        CoinTarget::Envelope { envelope, .. } => Some(envelope.load()?),
        _ => None,
    };
    let one = |r: u64| -> Result<Option<CoinResult>> {
        let mut dec = UniformSource::split(seed, r, Role::Decision);
        let coin_src = UniformSource::split(seed, r, Role::Coin);
        let res = match &target {
            CoinTarget::Estimator { p } => {
                let mut coin = BernoulliCoin::new(*p, coin_src)?;
                let mut tossed = Ok(());
                let mut res = estimator_coin(
                    || {
                        let mut h = 0u32;
                        for _ in 0..4 {
                            match coin.toss() {
                                Ok(b) => h += b as u32,
                                Err(e) => tossed = Err(e),
                            }
                        }
                        (h * h.saturating_sub(1)) as f64 / 12.0
                    },
                    &mut dec,
                )?;
                tossed?;
                res.coins_consumed = coin.consumed();
                res
            }
            CoinTarget::Sequence { p } => {
                let bounds = (1..=60).map(|n| {
                    let scale = 2f64.powi(n);
                    let lo = (p * scale).floor() / scale;
                    (lo, lo + 1.0 / scale)
                });
                sequence_coin(bounds, &mut dec, &opts)?
            }
            CoinTarget::AltExp { a, p } => {
                let mut coin = BernoulliCoin::new(*p, coin_src)?;
                exp_coin(*a, &mut coin, &mut dec, &opts)?
            }
            CoinTarget::Envelope { p, .. } => {
                let env = envelope.as_deref().expect("loaded above");
                let mut coin = BernoulliCoin::new(*p, coin_src)?;
                match factory_coin(env, &mut coin, &mut dec, &opts) {
                    Ok(res) => res,
                    Err(Error::NotConverged(_)) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(Some(res))
    };
    let runs: Vec<Option<CoinResult>> = (0..common.reps)
        .into_par_iter()
        .map(one)
        .collect::<Result<_>>()?;

    let decided: Vec<&CoinResult> = runs.iter().flatten().collect();
    let undecided = runs.len() - decided.len();
    let hits = decided.iter().filter(|r| r.value).count() as u64;
    let reps = decided.len() as u64;
    let sigma = common.sigma;

    match &target {
        CoinTarget::Estimator { p } => {
            report.push(frequency_check("frequency", hits, reps, p * p, sigma))
        }
        CoinTarget::Sequence { p } => {
            report.push(frequency_check("frequency", hits, reps, *p, sigma))
        }
        CoinTarget::AltExp { a, p } => {
            report.push(frequency_check(
                "frequency",
                hits,
                reps,
                (-a * p).exp(),
                sigma,
            ));
            let ap = a * p;
            let mut term = 1.0;
            for n in 1..=6u64 {
                term *= ap / n as f64;
                let beyond = decided.iter().filter(|r| r.coins_consumed > n).count() as u64;
                report.push(frequency_check(
                    &format!("tail_coins_gt_{n}"),
                    beyond,
                    reps,
                    term,
                    sigma,
                ));
            }
            if reps >= 2 {
                let coins: Vec<f64> = decided.iter().map(|r| r.coins_consumed as f64).collect();
                report.push(
                    mean_bound_check("mean_coins_le_e", &coins, std::f64::consts::E, sigma)
                        .with_note(format!("exact mean is e^(ap) = {}", ap.exp())),
                );
            }
        }
        CoinTarget::Envelope { p, .. } => {
            let env = envelope.as_deref().expect("loaded above");
            let schedule: Vec<u64> = env.schedule().up_to(1 << 20).into_iter().take(64).collect();
            let gap_at = |n: u64| {
                bernstein_eval(&env.upper_row(n), *p) - bernstein_eval(&env.lower_row(n), *p)
            };
            match env.target(*p) {
                Some(f) => report.push(frequency_check("frequency", hits, reps, f, sigma)),
                None => {
                    let last = *schedule.last().expect("schedules are non-empty");
                    let (lo, hi) = (
                        bernstein_eval(&env.lower_row(last), *p),
                        bernstein_eval(&env.upper_row(last), *p),
                    );
                    let mid = (lo + hi) / 2.0;
                    let mut c = frequency_check("frequency", hits, reps, mid, sigma);
                    if let (Some(se), Some(_)) = (c.stderr, c.pass) {
                        let slack = (hi - lo) / 2.0 + undecided as f64 / runs.len() as f64;
                        c.pass = Some((c.observed - mid).abs() <= sigma * se + slack);
                    }
                    report.push(c.with_note(format!(
                        "target unknown; compared with the envelope at n={last} (slack {:.3e})",
                        (hi - lo) / 2.0
                    )));
                }
            }
            for &n in schedule.iter().filter(|&&n| n >= 2).take(4) {
                let beyond = decided.iter().filter(|r| r.coins_consumed > n).count() as u64;
                report.push(frequency_check(
                    &format!("tail_coins_gt_{n}"),
                    beyond,
                    reps,
                    gap_at(n),
                    sigma,
                ));
            }
            if undecided > 0 {
                report.notes.push(format!(
                    "{undecided} runs exhausted the envelope schedule and are excluded"
                ));
            }
        }
    }
    if common.reps < 2 {
        report
            .notes
            .push("insufficient replications: no pass/fail on frequency".into());
    }

    let pick = |f: fn(&CoinResult) -> u64| decided.iter().map(|r| f(r)).collect::<Vec<_>>();
    report.consumption("iterations", &pick(|r| r.iterations));
    report.consumption("coins", &pick(|r| r.coins_consumed));
    report.consumption("uniforms", &pick(|r| r.uniforms_consumed));

    let rows = runs.iter().enumerate().map(|(i, r)| match r {
        Some(r) => RunRow {
            rep: i as u64,
            value: Some(r.value as u8),
            iterations: r.iterations,
            coins: r.coins_consumed,
            uniforms: r.uniforms_consumed,
        },
        None => RunRow {
            rep: i as u64,
            value: None,
            iterations: 0,
            coins: 0,
            uniforms: 0,
        },
    });
    let table = to_csv(rows)?;
    Ok(CommandOutput {
        report,
        table: Some(("runs.csv".into(), table)),
    })
}

/// Checks an envelope's range and martingale conditions.
pub fn cmd_validate_envelope(map: &ConfigMap) -> Result<CommandOutput> {
    let choice = EnvelopeChoice::parse(
        map.get("envelope")
            .ok_or_else(|| Error::Config("missing envelope file".into()))?,
    );
    let env = choice.load()?;
    let n_max = match (map.count_or("n_max", 0)?, &choice) {
        (0, EnvelopeChoice::File(_)) => *env.schedule().up_to(u64::MAX).last().expect("non-empty"),
        (0, EnvelopeChoice::Builtin(_)) => DEFAULT_VALIDATE_N_MAX,
        (n, _) => n,
    };
    let result = validate_envelope(env.as_ref(), n_max, &default_grid());
    let mut report = TestReport::new("validate-envelope", 0);
    for (k, v) in map.entries() {
        if k != "out" {
            report.setting(k, v);
        }
    }
    report.setting("n_max", n_max);
    let mut check = Check::new(
        "envelope_conditions",
        "violations",
        result.violations.len() as f64,
        Some(0.0),
        result.pairs_checked as u64,
        result.is_valid(),
    );
    if let Some(v) = result.violations.first() {
        check = check.with_note(format!("first violation: {}", serde_json::to_string(v)?));
    }
    report.push(check);
    report.details = serde_json::to_value(&result)?;
    Ok(CommandOutput {
        report,
        table: None,
    })
}

/// Reads a drift preset and its numeric parameters. The preset may be given
/// as `preset`, or through `alpha`, `A` and `alpha_prime`, which must then
/// name the same preset.
pub fn spec_from_config(map: &ConfigMap) -> Result<DiffusionSpec> {
    let names: Vec<(&str, &str)> = ["preset", "alpha", "A", "alpha_prime"]
        .iter()
        .filter_map(|k| map.get(k).map(|v| (*k, v)))
        .collect();
    let Some(&(_, name)) = names.first() else {
        return Err(Error::Config(
            "missing drift preset (`preset`, or `alpha`/`A`/`alpha_prime`)".into(),
        ));
    };
    if let Some((k, v)) = names.iter().find(|(_, v)| *v != name) {
        return Err(Error::Config(format!(
            "`{k} = {v}` does not match preset `{name}`; drift functions must come from one preset"
        )));
    }
    let x = map.f64_or("x", 0.0)?;
    let horizon = map.f64_or("T", 1.0)?;
    let mut spec = DiffusionSpec::preset(name, x, horizon)?;
    spec.ell = map.f64_or("ell", spec.ell)?;
    spec.r = map.f64_or("r", spec.r)?;
    let spec = DiffusionSpec::new(spec.drift, spec.ell, spec.r, spec.horizon, spec.start)
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SampleRow {
    rep: u64,
    value: f64,
    proposals: u64,
    endpoint_draws: u64,
    j_coins: u64,
    bridge_points: u64,
    segments: u64,
}

/// Exact samples of `X_T`, with moment checks for the zero preset and a
/// two-sample KS comparison against Euler-Maruyama.
pub fn cmd_sde(map: &ConfigMap, env_seed: Option<&str>) -> Result<CommandOutput> {
    let common = CommonSettings::from_config(map, env_seed, DEFAULT_SDE_SAMPLES)?;
    let spec = spec_from_config(map)?;
    spec.validate()?;
    let segment = map.bool_or("segment", false)?;
    let compare = map.bool_or("compare", true)?;
    let em_step = map.f64_or("em_step", DEFAULT_EM_STEP)?;
    if !(em_step > 0.0) {
        return Err(Error::Config(format!(
            "em_step must be positive, got {em_step}"
        )));
    }
    let total = spec.horizon;
    if !segment && !(spec.rate() < 1.0) {
        return Err(contract(format!(
            "r*T = {} but exact sampling requires r*T < 1; pass --segment to split [0, {total}]",
            spec.rate()
        )));
    }
    let pieces = if segment {
        segment_count(spec.r, total)
    } else {
        1
    };

    let opts = SampleOptions {
        run: run_options(map)?,
        ..SampleOptions::default()
    };
    let seed = common.seed;
    let draws = (0..common.reps)
        .into_par_iter()
        .map(|i| {
            let mut src = UniformSource::split(seed, i, Role::Decision);
            if segment {
                exact_sample_segmented(&spec, total, &mut src, &opts)
            } else {
                exact_sample(&spec, &mut src, &opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();

    let mut report = base_report("sde", map, &common);
    report.setting("drift", spec.drift.name());
    report.setting("segment", segment);
    report.setting("compare", compare);
    let sigma = common.sigma;
    if spec.drift.name() == "zero" {
        report.push(mean_check("mean", &values, spec.start, total.sqrt(), sigma));
        report.push(gaussian_variance_check("variance", &values, total, sigma));
    }
    if compare {
        let reference = euler_maruyama_batch(&spec, total, em_step, values.len(), seed)?;
        report.push(
            ks_check("ks_vs_euler_maruyama", &values, &reference, KS_ALPHA)
                .with_note(format!("reference step {em_step}, alpha {KS_ALPHA}")),
        );
    }
    let proposals: Vec<u64> = draws.iter().map(|d| d.proposals).collect();
    let total_proposals: u64 = proposals.iter().sum();
    report.consumption("proposals", &proposals);
    report.consumption(
        "j_coins",
        &draws.iter().map(|d| d.j_coins).collect::<Vec<_>>(),
    );
    report.consumption(
        "bridge_points",
        &draws.iter().map(|d| d.bridge_points).collect::<Vec<_>>(),
    );
    report.details = json!({
        "segments": pieces,
        "segment_length": total / pieces as f64,
        "rate_per_segment": spec.r * total / pieces as f64,
        "acceptance_rate": (values.len() as u64 * pieces) as f64 / total_proposals as f64,
        "ell": spec.ell,
        "r": spec.r,
    });

    let rows = draws.iter().enumerate().map(|(i, d)| SampleRow {
        rep: i as u64,
        value: d.value,
        proposals: d.proposals,
        endpoint_draws: d.endpoint_draws,
        j_coins: d.j_coins,
        bridge_points: d.bridge_points,
        segments: d.segments,
    });
    let table = to_csv(rows)?;
    Ok(CommandOutput {
        report,
        table: Some(("samples.csv".into(), table)),
    })
}

/// A desk-scale pass over every sampler. Deterministic for a given seed.
pub fn selftest(seed: u64) -> Result<TestReport> {
    let sigma = super::stats::DEFAULT_SIGMA;
    let mut report = TestReport::new("selftest", seed);
    let opts = RunOptions::default();
    let reps = 20_000u64;

    let (a, p) = (0.5, 0.3);
    let exp_runs: Vec<CoinResult> = (0..reps)
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
        .collect::<Result<_>>()?;
    let hits = exp_runs.iter().filter(|r| r.value).count() as u64;
    report.push(frequency_check(
        "exp_coin_frequency",
        hits,
        reps,
        (-a * p).exp(),
        sigma,
    ));
    let beyond = exp_runs.iter().filter(|r| r.coins_consumed > 1).count() as u64;
    report.push(frequency_check(
        "exp_coin_tail_gt_1",
        beyond,
        reps,
        a * p,
        sigma,
    ));

    let square = SquareEnvelope::new(Schedule::PowersOfTwo);
    let p = 0.4;
    let env_runs: Vec<CoinResult> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut coin = BernoulliCoin::new(p, UniformSource::split(seed ^ 1, r, Role::Coin))?;
            factory_coin(
                &square,
                &mut coin,
                &mut UniformSource::split(seed ^ 1, r, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<_>>()?;
    let hits = env_runs.iter().filter(|r| r.value).count() as u64;
    report.push(frequency_check(
        "p2_envelope_frequency",
        hits,
        reps,
        p * p,
        sigma,
    ));
    let beyond = env_runs.iter().filter(|r| r.coins_consumed > 4).count() as u64;
    report.push(frequency_check(
        "p2_envelope_tail_gt_4",
        beyond,
        reps,
        p * (1.0 - p) / 4.0,
        sigma,
    ));

    let validation = validate_envelope(
        &SquareEnvelope::new(Schedule::Consecutive),
        16,
        &default_grid(),
    );
    report.push(Check::new(
        "p2_envelope_exact_validation",
        "violations",
        validation.violations.len() as f64,
        Some(0.0),
        validation.pairs_checked as u64,
        validation.is_valid(),
    ));

    let s = 0.2;
    let estimates: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let bounds = (1..=60).map(|n| {
                let w = 2f64.powi(-n);
                ((s - w).max(-1.0), (s + w).min(1.0))
            });
            unbiased_estimator(
                DeterministicStream::new(bounds),
                1.0,
                &mut UniformSource::split(seed ^ 2, r, Role::Decision),
                &opts,
            )
        })
        .collect::<Result<_>>()?;
    report.push(mean_check(
        "unbiased_estimator_mean",
        &estimates,
        s,
        (1.0 - s * s).sqrt(),
        sigma,
    ));

    let sample_opts = SampleOptions::default();
    let sample = |spec: &DiffusionSpec, n: u64, stream_seed: u64| -> Result<Vec<f64>> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                exact_sample(
                    spec,
                    &mut UniformSource::split(stream_seed, i, Role::Decision),
                    &sample_opts,
                )
                .map(|d| d.value)
            })
            .collect()
    };
    let zero = DiffusionSpec::zero(0.0, 1.0)?;
    let xs = sample(&zero, 4_000, seed ^ 3)?;
    report.push(mean_check("zero_drift_mean", &xs, 0.0, 1.0, sigma));
    report.push(gaussian_variance_check(
        "zero_drift_variance",
        &xs,
        1.0,
        sigma,
    ));

    let sine = DiffusionSpec::sine(0.0, 0.5)?;
    let xs = sample(&sine, 2_000, seed ^ 4)?;
    let reference = euler_maruyama_batch(&sine, 0.5, 1e-3, 2_000, seed ^ 4)?;
    report.push(ks_check(
        "sine_drift_ks_vs_euler_maruyama",
        &xs,
        &reference,
        KS_ALPHA,
    ));
    Ok(report)
}

pub fn cmd_selftest(map: &ConfigMap, env_seed: Option<&str>) -> Result<CommandOutput> {
    let common = CommonSettings::from_config(map, env_seed, 1)?;
    Ok(CommandOutput {
        report: selftest(common.seed)?,
        table: None,
    })
}

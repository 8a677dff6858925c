//! Plain Rust entry points behind the Python classes and functions.

use std::collections::BTreeMap;

use coinforge::alternating::exp_coin;
use coinforge::diffusion::{
    exact_sample, exact_sample_segmented, DiffusionSpec, ExactDraw, SampleOptions,
};
use coinforge::factory::{default_grid, factory_coin, validate_envelope};
use coinforge::harness::{self, ConfigMap, EnvelopeChoice};
use coinforge::martingale::{unbiased_estimator, DeterministicStream, RunOptions};
use coinforge::{BernoulliCoin, CoinResult, Error, Result, Role, UniformSource};

pub fn parse_role(role: &str) -> Result<Role> {
    match role {
        "decision" => Ok(Role::Decision),
        "coin" => Ok(Role::Coin),
        "auxiliary" => Ok(Role::Auxiliary),
        other => Err(Error::InvalidParameter(format!(
            "unknown role `{other}` (decision, coin, auxiliary)"
        ))),
    }
}

/// `exp(-a p)`-coin for replication `rep` of `seed`.
pub fn exp_coin_run(a: f64, p: f64, seed: u64, rep: u64) -> Result<CoinResult> {
    let mut coin = BernoulliCoin::new(p, UniformSource::split(seed, rep, Role::Coin))?;
    exp_coin(
        a,
        &mut coin,
        &mut UniformSource::split(seed, rep, Role::Decision),
        &RunOptions::default(),
    )
}

/// Envelope factory coin; `envelope` is `p2`, `identity` or a file path.
pub fn envelope_coin_run(envelope: &str, p: f64, seed: u64, rep: u64) -> Result<CoinResult> {
    let env = EnvelopeChoice::parse(envelope).load()?;
    let mut coin = BernoulliCoin::new(p, UniformSource::split(seed, rep, Role::Coin))?;
    factory_coin(
        env.as_ref(),
        &mut coin,
        &mut UniformSource::split(seed, rep, Role::Decision),
        &RunOptions::default(),
    )
}

/// Two-point estimate (`+M` or `-M`) of `s` from dyadic bounds.
pub fn two_point_estimate(s: f64, half_range: f64, seed: u64, rep: u64) -> Result<f64> {
    let bounds = (1..=60).map(move |n| {
        let w = half_range * 2f64.powi(-n);
        ((s - w).max(-half_range), (s + w).min(half_range))
    });
    unbiased_estimator(
        DeterministicStream::new(bounds),
        half_range,
        &mut UniformSource::split(seed, rep, Role::Decision),
        &RunOptions::default(),
    )
}

pub fn validate_envelope_json(envelope: &str, n_max: u64) -> Result<String> {
    let env = EnvelopeChoice::parse(envelope).load()?;
    Ok(serde_json::to_string(&validate_envelope(
        env.as_ref(),
        n_max,
        &default_grid(),
    ))?)
}

pub fn diffusion_spec(
    preset: &str,
    x: f64,
    horizon: f64,
    ell: Option<f64>,
    r: Option<f64>,
) -> Result<DiffusionSpec> {
    let mut map = ConfigMap::new();
    map.set("preset", preset)?;
    map.set("x", x)?;
    map.set("T", horizon)?;
    if let Some(ell) = ell {
        map.set("ell", ell)?;
    }
    if let Some(r) = r {
        map.set("r", r)?;
    }
    let spec = harness::spec_from_config(&map)?;
    spec.validate()?;
    Ok(spec)
}

pub fn diffusion_draw(
    spec: &DiffusionSpec,
    seed: u64,
    rep: u64,
    segment: bool,
) -> Result<ExactDraw> {
    let mut src = UniformSource::split(seed, rep, Role::Decision);
    let opts = SampleOptions::default();
    if segment {
        exact_sample_segmented(spec, spec.horizon, &mut src, &opts)
    } else {
        exact_sample(spec, &mut src, &opts)
    }
}

/// Runs a CLI subcommand; returns the report JSON and the exit code.
pub fn run_command(name: &str, settings: &BTreeMap<String, String>) -> Result<(String, i32)> {
    let mut map = ConfigMap::new();
    for (k, v) in settings {
        map.set(k, v)?;
    }
    let out = harness::run_command(name, &map, None)?;
    if let Some(dir) = map.path("out") {
        out.write_to(&dir)?;
    }
    let code = harness::exit_code(&Ok(out.report.clone()));
    Ok((out.report.to_json()?, code))
}

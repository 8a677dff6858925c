//! Statistical checks, reports and the commands behind the `coinforge`
//! binary.
//!
//! Reports are JSON, per-run data is CSV. A report passes when none of its
//! checks failed; checks that cannot be decided (one replication) are
//! recorded with `pass: null`.

mod commands;
mod config;
mod euler;
mod report;
pub mod stats;

pub use commands::{
    cmd_coin, cmd_sde, cmd_selftest, cmd_validate_envelope, selftest, spec_from_config, CoinTarget,
    EnvelopeChoice, DEFAULT_COIN_REPS, DEFAULT_EM_STEP, DEFAULT_SDE_SAMPLES,
    DEFAULT_VALIDATE_N_MAX,
};
pub use config::{CommonSettings, ConfigMap, KNOWN_KEYS, SEED_ENV};
pub use euler::{euler_maruyama_batch, euler_maruyama_reference};
pub use report::{Check, CommandOutput, TestReport};
pub use stats::{ks_two_sample, ConsumptionStats, KsResult};

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_STATISTICAL_FAILURE: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

/// Exit status for a command outcome.
pub fn exit_code(outcome: &Result<TestReport, Error>) -> i32 {
    match outcome {
        Ok(report) if report.pass => EXIT_PASS,
        Ok(_) => EXIT_STATISTICAL_FAILURE,
        Err(_) => EXIT_CONFIG_ERROR,
    }
}

/// Dispatches a subcommand by name.
pub fn run_command(
    name: &str,
    map: &ConfigMap,
    env_seed: Option<&str>,
) -> Result<CommandOutput, Error> {
    match name {
        "coin" => cmd_coin(map, env_seed),
        "validate-envelope" => cmd_validate_envelope(map),
        "sde" => cmd_sde(map, env_seed),
        "selftest" => cmd_selftest(map, env_seed),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

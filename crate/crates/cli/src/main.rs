use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coinforge::harness::{self, ConfigMap, EXIT_CONFIG_ERROR, SEED_ENV};
use coinforge::Error;

#[derive(Parser)]
#[command(
    name = "coinforge",
    version,
    about = "Exact coins and diffusion samples, with statistical checks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; falls back to the config file, then $COINFORGE_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replications (coin runs or diffusion samples). Accepts 1e5.
    #[arg(long, global = true)]
    reps: Option<String>,
    /// Pass band of frequency checks, in standard errors.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Directory for report.json and the per-run CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Leave the timestamp out so reruns produce identical reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coin target and check its frequency and cost.
    Coin {
        /// alg1, alg2, alg3-alt-exp or alg4-envelope.
        target: Option<String>,
        /// Rate a in exp(-a p) (alg3-alt-exp, default 1).
        #[arg(long)]
        a: Option<f64>,
        /// Success probability of the input coin.
        #[arg(long)]
        p: Option<f64>,
        /// p2, identity, or an envelope file.
        #[arg(long)]
        envelope: Option<String>,
        /// Give up on a run after this many iterations.
        #[arg(long)]
        max_iterations: Option<u64>,
    },
    /// Check the range and martingale conditions of an envelope.
    ValidateEnvelope {
        /// p2, identity, or an envelope file.
        envelope: Option<String>,
        /// Largest degree checked (default: last row of a file, else 64).
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Exact samples of X_T for a drift preset.
    Sde {
        /// zero or sine.
        #[arg(long)]
        preset: Option<String>,
        /// Horizon T.
        #[arg(long = "T", alias = "horizon")]
        horizon: Option<f64>,
        /// Start X_0.
        #[arg(long)]
        x: Option<f64>,
        /// Override the lower bound of (alpha^2 + alpha')/2.
        #[arg(long)]
        ell: Option<f64>,
        /// Override the range of (alpha^2 + alpha')/2.
        #[arg(long)]
        r: Option<f64>,
        /// Chain exact samples over pieces with r*T <= 0.9.
        #[arg(long)]
        segment: bool,
        /// Euler-Maruyama reference step.
        #[arg(long)]
        em_step: Option<f64>,
        /// Skip the Euler-Maruyama comparison.
        #[arg(long)]
        no_compare: bool,
    },
    /// Quick deterministic pass over every sampler.
    Selftest,
}

fn put<T: ToString>(map: &mut ConfigMap, key: &str, value: Option<T>) -> Result<(), Error> {
    match value {
        Some(v) => map.set(key, v),
        None => Ok(()),
    }
}

fn flags(cli: &Cli) -> Result<(&'static str, ConfigMap), Error> {
    let mut m = ConfigMap::new();
    let c = &cli.common;
    put(&mut m, "seed", c.seed)?;
    put(&mut m, "reps", c.reps.as_ref())?;
    put(&mut m, "sigma", c.sigma)?;
    put(
        &mut m,
        "out",
        c.out.as_ref().map(|p| p.display().to_string()),
    )?;
    let name = match &cli.command {
        Command::Coin {
            target,
            a,
            p,
            envelope,
            max_iterations,
        } => {
            put(&mut m, "target", target.as_ref())?;
            put(&mut m, "a", *a)?;
            put(&mut m, "p", *p)?;
            put(&mut m, "envelope", envelope.as_ref())?;
            put(&mut m, "max_iterations", *max_iterations)?;
            "coin"
        }
        Command::ValidateEnvelope { envelope, n_max } => {
            put(&mut m, "envelope", envelope.as_ref())?;
            put(&mut m, "n_max", *n_max)?;
            "validate-envelope"
        }
        Command::Sde {
            preset,
            horizon,
            x,
            ell,
            r,
            segment,
            em_step,
            no_compare,
        } => {
            put(&mut m, "preset", preset.as_ref())?;
            put(&mut m, "T", *horizon)?;
            put(&mut m, "x", *x)?;
            put(&mut m, "ell", *ell)?;
            put(&mut m, "r", *r)?;
            put(&mut m, "segment", segment.then_some(true))?;
            put(&mut m, "em_step", *em_step)?;
            put(&mut m, "compare", no_compare.then_some(false))?;
            "sde"
        }
        Command::Selftest => "selftest",
    };
    Ok((name, m))
}

fn run(cli: &Cli) -> Result<harness::CommandOutput, Error> {
    let (name, flag_map) = flags(cli)?;
    let mut map = match &cli.common.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::new(),
    };
    map.overlay(&flag_map);
    let env_seed = std::env::var(SEED_ENV).ok();
    let mut out = harness::run_command(name, &map, env_seed.as_deref())?;
    if !cli.common.no_timestamp {
        out.report.stamp();
    }
    if let Some(dir) = map.path("out") {
        out.write_to(&dir)?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli);
    let code = match &outcome {
        Ok(out) => {
            match out.report.to_json() {
                Ok(json) => print!("{json}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG_ERROR as u8);
                }
            }
            for c in &out.report.checks {
                let verdict = match c.pass {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "----",
                };
                let against = match (c.expected, c.critical) {
                    (_, Some(crit)) => format!(" critical={crit:.6}"),
                    (Some(e), None) => format!(" expected={e:.6}"),
                    (None, None) => String::new(),
                };
                eprintln!("{verdict} {} observed={:.6}{against}", c.name, c.observed);
            }
            harness::exit_code(&Ok(out.report.clone()))
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG_ERROR
        }
    };
    ExitCode::from(code as u8)
}

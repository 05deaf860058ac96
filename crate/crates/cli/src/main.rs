use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shockdetect::config::{Overrides, RunConfig};
use shockdetect::output::OutDir;
use shockdetect::{commands, selftest, CliError};

/// Bayesian detection of a drift change triggered by a Poisson shock.
#[derive(Debug, Parser)]
#[command(name = "shockdetect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value function, optimal threshold and error certificates.
    Solve(Common),
    /// Least-delay rule under a false-alarm budget.
    Variational(Common),
    /// Monte Carlo estimates of a threshold rule.
    Simulate(Common),
    /// Iterates v_0..v_10 for the worked example (mu = 1, lambda = 2, p = 0.5, c = 0.5).
    Figure1(Common),
    /// Closed-form oracle suite; exit code 5 on any failure.
    Selftest(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    pi0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Threshold for `simulate`.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            mu: self.mu,
            lambda: self.lambda,
            p: self.p,
            c: self.c,
            pi0: self.pi0,
            alpha: self.alpha,
            r: self.r,
            grid_size: self.grid_size,
            epsilon: self.epsilon,
            dt: self.dt,
            n_paths: self.n_paths,
            seed: self.seed,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, kind) = match &cli.command {
        Command::Solve(c) => (c, "solve"),
        Command::Variational(c) => (c, "variational"),
        Command::Simulate(c) => (c, "simulate"),
        Command::Figure1(c) => (c, "figure1"),
        Command::Selftest(c) => (c, "selftest"),
    };
    let cfg = common.config()?;
    let out = OutDir::create(&common.out)?;
    let summary = match kind {
        "solve" => commands::solve(&cfg, &out)?,
        "variational" => commands::variational(&cfg, &out)?,
        "simulate" => commands::simulate(&cfg, &out)?,
        "figure1" => commands::figure1(&cfg, &out)?,
        _ => {
            let checks = selftest::run(&cfg)?;
            print!("{}", selftest::render(&checks));
            out.write_json("selftest.json", &checks)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::SelftestFailed(failed));
            }
            return Ok(());
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shockdetect: {e}");
            e.into()
        }
    }
}

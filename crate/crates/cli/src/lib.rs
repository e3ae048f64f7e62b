//! Command-line front end for secure state estimation experiments.

pub mod commands;
pub mod files;

use std::io::Write;
use std::path::PathBuf;

use anyhow::bail;
use clap::{Parser, ValueEnum};

use secest::estimator::Method;

/// Exit status for input and parse problems, and anything unexpected.
pub const EXIT_USAGE: i32 = 1;
/// Exit status when a structural property blocks the command.
pub const EXIT_STRUCTURE: i32 = 2;
/// Exit status when no attack hypothesis explains the window.
pub const EXIT_INFEASIBLE: i32 = 3;

/// Error carrying a specific process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(code: i32, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    err.downcast_ref::<Failure>().map_or(EXIT_USAGE, |f| f.code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Estimate the state for one system and scenario.
    Estimate,
    /// Check sparse strong observability at (r, s).
    CheckSso,
    /// Random-system benchmark over a grid of output counts.
    BenchRandom,
    /// Plant-shaped benchmark.
    BenchPlant,
    /// Write two indistinguishable scenarios for a system that is not
    /// sparse strongly observable.
    Witness,
    /// Run an estimation and write the final clause set in OPB format.
    ExportOpb,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "secest", version, about = "Secure state estimation under sparse sensor and actuator attacks")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// System JSON with row-major matrices A, B, C, D.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Attacked-input bound; overrides the scenario file.
    #[arg(short = 'r')]
    pub r: Option<usize>,
    /// Attacked-output bound; overrides the scenario file.
    #[arg(short = 's')]
    pub s: Option<usize>,
    /// Certificate method(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the final clause set of the estimation here.
    #[arg(long)]
    pub dump_opb: Option<PathBuf>,
    /// Horizon of the plain strong observability check in check-sso.
    #[arg(long)]
    pub tau: Option<usize>,
    /// State dimension for bench-random.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Input count for bench-random.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Output counts swept by bench-random, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16,20,24")]
    pub p_grid: Vec<usize>,
    /// Skip the sparse strong observability check before estimating.
    #[arg(long)]
    pub skip_sso_check: bool,
}

impl RunConfig {
    /// Checks that the fields the command needs are present.
    pub fn validate(&self) -> anyhow::Result<()> {
        let need_system = !matches!(self.command, Command::BenchRandom | Command::BenchPlant);
        if need_system && self.system.is_none() {
            bail!("{:?} needs --system", self.command);
        }
        if matches!(self.command, Command::Estimate | Command::ExportOpb) && self.scenario.is_none() {
            bail!("{:?} needs --scenario", self.command);
        }
        if matches!(self.command, Command::CheckSso | Command::Witness) && (self.r.is_none() || self.s.is_none()) {
            bail!("{:?} needs -r and -s", self.command);
        }
        if matches!(self.command, Command::BenchRandom | Command::BenchPlant) {
            if self.trials == 0 {
                bail!("--trials must be at least 1");
            }
            if self.out.is_none() {
                bail!("{:?} needs --out", self.command);
            }
        }
        if self.command == Command::Witness && self.out.is_none() {
            bail!("witness needs --out");
        }
        if self.command == Command::BenchRandom && self.p_grid.is_empty() {
            bail!("--p-grid must list at least one output count");
        }
        if self.method.len() > 1 && matches!(self.command, Command::Estimate | Command::ExportOpb) {
            bail!("{:?} takes a single --method", self.command);
        }
        Ok(())
    }

    /// Single method for estimation commands.
    pub fn single_method(&self) -> Method {
        self.method.first().copied().unwrap_or(Method::Method2)
    }

    /// Methods compared by the benchmarks.
    pub fn bench_methods(&self) -> Vec<Method> {
        if self.method.is_empty() {
            vec![Method::Method1, Method::Method2]
        } else {
            self.method.clone()
        }
    }
}

/// Runs one command, writing human-readable progress to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    cfg.validate()?;
    match cfg.command {
        Command::Estimate => commands::estimate(cfg, out).map(drop),
        Command::CheckSso => commands::check_sso(cfg, out).map(drop),
        Command::BenchRandom => commands::bench_random(cfg, out).map(drop),
        Command::BenchPlant => commands::bench_plant(cfg, out).map(drop),
        Command::Witness => commands::witness(cfg, out).map(drop),
        Command::ExportOpb => commands::export_opb(cfg, out),
    }
}

mod commands;
mod config;
mod report;

use clap::Parser;
use commands::{Command, RunOptions};
use config::{BlockChoice, Format, RunConfig, SectionKind};
use conerig::modes::BlockKind;
use conerig::verify::Identity;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] conerig::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use conerig::Error as E;
        match self {
            CliError::Core(E::Refused(_)) => 3,
            CliError::Core(E::Inconsistency(_)) => 4,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        use conerig::Error as E;
        match self {
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Domain(_) => "domain",
                E::Validation(_) => "validation",
                E::Parse { .. } => "parse",
                E::Unsupported(_) => "unsupported",
                E::Inconsistency(_) => "inconsistency",
                E::Refused(_) => "refused",
                E::Io(_) => "io",
            },
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: u8,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// Mode-by-mode rigidity analysis of a hyperbolic cone tube.
///
/// Settings come from `--config` (JSON, see README) and are overridden by flags.
#[derive(Debug, Parser)]
#[command(name = "conerig", version, allow_negative_numbers = true)]
struct Cli {
    command: Command,
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    n: Option<usize>,
    /// Cone angle in radians.
    #[arg(long, conflicts_with = "beta")]
    alpha: Option<f64>,
    /// 2π / α.
    #[arg(long)]
    beta: Option<f64>,
    /// Tube radius.
    #[arg(long)]
    a: Option<f64>,
    /// Circle cross-section length.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, value_enum)]
    cross_section: Option<SectionKind>,
    /// JSON-lines file of cross-section modes.
    #[arg(long)]
    eigendata: Option<PathBuf>,
    #[arg(long)]
    pmax: Option<u32>,
    #[arg(long)]
    qmax: Option<u32>,

    /// Restrict to one block: coupled3, coupled2 or scalar.
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    p: Option<i64>,
    /// Alias of `--p` for scalar blocks.
    #[arg(long, conflicts_with = "p")]
    p_prime: Option<i64>,
    /// Defaults to 1 (the first circle mode at ℓ = 2π).
    #[arg(long)]
    lambda_prime: Option<f64>,
    #[arg(long)]
    mu_prime: Option<f64>,

    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Frobenius truncation order.
    #[arg(long)]
    order: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    poincare_samples: Option<usize>,
    /// Identity to check (repeatable); default is the full suite for n = 3, W1 and WS otherwise.
    #[arg(long)]
    identity: Vec<String>,

    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Record wall-clock phases (makes the report non-reproducible).
    #[arg(long)]
    timings: bool,
}

impl Cli {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let g = &mut c.geometry;
        if let Some(n) = self.n {
            g.n = n;
        }
        if let Some(a) = self.alpha {
            g.alpha = Some(a);
            g.beta = None;
        }
        if let Some(b) = self.beta {
            g.beta = Some(b);
            g.alpha = None;
        }
        if let Some(a) = self.a {
            g.a = a;
        }
        if let Some(l) = self.length {
            g.length = Some(l);
        }
        if let Some(s) = self.cross_section {
            g.cross_section = s;
        }
        if let Some(e) = &self.eigendata {
            g.eigendata = Some(e.clone());
            if self.cross_section.is_none() {
                g.cross_section = SectionKind::Tabulated;
            }
        }
        if let Some(v) = self.pmax {
            c.modes.p_max = v;
        }
        if let Some(v) = self.qmax {
            c.modes.q_max = v;
        }
        if let Some(v) = self.points {
            c.solver.points = v;
        }
        if let Some(v) = self.gamma {
            c.solver.gamma = v;
        }
        if let Some(v) = self.order {
            c.solver.order = v;
        }
        if let Some(v) = self.seed {
            c.verify.seed = v;
        }
        if let Some(v) = self.samples {
            c.verify.samples = v;
        }
        if let Some(v) = self.poincare_samples {
            c.verify.poincare_samples = v;
        }
        if let Some(f) = self.format {
            c.output.format = f;
        }
        if let Some(p) = &self.output {
            c.output.path = Some(p.clone());
        }
        c.finalize()
    }

    fn options(&self) -> Result<RunOptions, CliError> {
        let choice = match &self.block {
            Some(kind) => Some(BlockChoice {
                kind: kind.parse::<BlockKind>()?,
                p: self.p.or(self.p_prime),
                lambda_prime: Some(self.lambda_prime.unwrap_or(1.0)),
                mu_prime: self.mu_prime,
            }),
            None if self.p.is_some() || self.p_prime.is_some() => {
                return Err(CliError::Validation("--p needs --block".into()));
            }
            None => None,
        };
        let identities = self
            .identity
            .iter()
            .map(|s| Identity::from_name(s).ok_or_else(|| CliError::Validation(format!("unknown identity '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunOptions { choice, identities, timings: self.timings })
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let cfg = cli.config()?;
    let opts = cli.options()?;
    log::info!("{} with {:?}", cli.command.name(), cfg.geometry);
    let report = commands::run(cli.command, &cfg, &opts)?;
    match &cfg.output.path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
            report.write(cfg.output.format, &mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write(cfg.output.format, &mut lock)?;
            lock.flush()?;
        }
    }
    if report.outcome.exit_code != 0 {
        log::warn!("{}", report.outcome.message);
    }
    Ok(report.outcome.exit_code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(e.kind(), e.to_string(), e.exit_code()),
    }
}

fn fail(kind: &str, message: String, exit_code: u8) -> ExitCode {
    let body = ErrorReport { error: ErrorBody { kind, message, exit_code } };
    let line = serde_json::to_string(&body).expect("error report serializes");
    let _ = writeln!(std::io::stderr(), "{line}");
    ExitCode::from(exit_code)
}

//! Argument parsing and the process-level driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use crate::commands::{self, Report};
use crate::config::{
    BallsBinsArgs, BirthdayBoundArgs, CollisionRatio, CollisionRatioArgs, Command, DegreeCheckArgs, Format, GbsCheckArgs,
    LossCheckArgs, ReductionDemoArgs, RoutePermutationArgs, RunConfig,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bosonlab", version, about = "Desk-scale experiments on shallow linear-optical circuits")]
pub struct Cli {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BOSONLAB_THREADS")]
    pub threads: Option<usize>,
    /// Write the resolved configuration to this path before running.
    #[arg(long, global = true)]
    pub dump_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Collision-free ratio of local versus global Haar circuits.
    CollisionRatio(CollisionRatioArgs),
    /// Collision probability against the 2N²/M bound.
    BirthdayBound(BirthdayBoundArgs),
    /// Singleton statistics of balls into bins.
    BallsBins(BallsBinsArgs),
    /// Route a permutation through BB* switch gates.
    RoutePermutation(RoutePermutationArgs),
    /// Worst-to-average extrapolation on perturbed circuits.
    ReductionDemo(ReductionDemoArgs),
    /// Polynomial degree of p·Q along the perturbation path.
    DegreeCheck(DegreeCheckArgs),
    /// Post-selection on no-loss trajectories.
    LossCheck(LossCheckArgs),
    /// Squeezed-state embedding identity.
    GbsCheck(GbsCheckArgs),
}

/// Combine a config file (if any) with the command-line flags.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let file = cli.config.as_deref().map(RunConfig::load).transpose()?;
    macro_rules! merged {
        ($variant:ident, $args:expr) => {{
            let base = match file.as_ref().map(|f| &f.command) {
                Some(Command::$variant(p)) => p.clone(),
                Some(other) => bail!(
                    "config file describes {}, not the requested subcommand",
                    other.name()
                ),
                None => Default::default(),
            };
            Command::$variant($args.merge(base))
        }};
    }
    let command = match cli.command {
        Some(Sub::CollisionRatio(a)) if a.full_scale == Some(true) => {
            Command::CollisionRatio(a.merge(CollisionRatio::full_scale()))
        }
        Some(Sub::CollisionRatio(a)) => merged!(CollisionRatio, a),
        Some(Sub::BirthdayBound(a)) => merged!(BirthdayBound, a),
        Some(Sub::BallsBins(a)) => merged!(BallsBins, a),
        Some(Sub::RoutePermutation(a)) => merged!(RoutePermutation, a),
        Some(Sub::ReductionDemo(a)) => merged!(ReductionDemo, a),
        Some(Sub::DegreeCheck(a)) => merged!(DegreeCheck, a),
        Some(Sub::LossCheck(a)) => merged!(LossCheck, a),
        Some(Sub::GbsCheck(a)) => merged!(GbsCheck, a),
        None => match &file {
            Some(f) => f.command.clone(),
            None => bail!("no subcommand given and no --config file"),
        },
    };
    Ok(RunConfig {
        command,
        seed: cli.seed.or(file.as_ref().map(|f| f.seed)).unwrap_or(0),
        out: cli.out.or(file.as_ref().and_then(|f| f.out.clone())),
        format: cli.format.or(file.as_ref().and_then(|f| f.format)),
    })
}

fn execute(cfg: &RunConfig, threads: Option<usize>) -> Result<Report> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(t);
    }
    pool.build()?.install(|| commands::run(cfg))
}

/// Parse `args`, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads;
    let dump = cli.dump_config.clone();
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = dump {
        if let Err(e) = cfg.to_json().map_err(anyhow::Error::from).and_then(|t| Ok(std::fs::write(&path, t)?)) {
            eprintln!("error: cannot write {}: {e:#}", path.display());
            return EXIT_USAGE;
        }
    }
    let report = match execute(&cfg, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    eprint!("{}", report.summary);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &report.artifact).map_err(anyhow::Error::from),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.artifact.as_bytes())
                .and_then(|_| if report.artifact.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                .map_err(anyhow::Error::from)
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return EXIT_USAGE;
    }
    if report.passed {
        eprintln!("{}: PASS", cfg.command.name());
        EXIT_PASS
    } else {
        eprintln!("{}: FAIL", cfg.command.name());
        EXIT_ASSERTION
    }
}

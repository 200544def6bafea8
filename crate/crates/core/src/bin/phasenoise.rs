//! Command-line front end: SEP curves, analytic bounds and oracle comparisons.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasenoise_core::analysis::{error_floor, union_bound};
use phasenoise_core::harness::{
    oracle_agreement, parse_grid, run_experiment, write_csv, ConstellationKind, Method, Scenario, ScenarioConfig,
};
use phasenoise_core::{eb_n0_to_n0, Constellation, Result};

#[derive(Parser)]
#[command(name = "phasenoise", version, about = "Symbol detection under random phase noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo SEP curves, written as CSV.
    Run(RunArgs),
    /// Analytic union bound on the GAP detector's SEP over an Eb/N0 grid.
    Bound(AnalyticArgs),
    /// High-SNR error floor of the GAP detector.
    Floor(FloorArgs),
    /// Hard-decision agreement of each detector with quadrature ML.
    OracleCompare(OracleArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated detector names, e.g. `GAP,EUC,MAP`.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    /// Eb/N0 grid as `start:step:stop` or a single value, in dB.
    #[arg(long)]
    ebn0: Option<String>,
    /// `gaussian_iid` or `wiener_ekf`.
    #[arg(long)]
    scenario: Option<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(names) = &self.detectors {
            cfg.detectors = names.iter().map(|n| n.trim().parse::<Method>()).collect::<Result<_>>()?;
        }
        if let Some(grid) = &self.ebn0 {
            cfg.eb_n0_db = parse_grid(grid)?;
        }
        if let Some(scenario) = &self.scenario {
            cfg.scenario = scenario.parse::<Scenario>()?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstellationArgs {
    #[arg(long, value_enum, default_value_t = Shape::Qam)]
    constellation: Shape,
    #[arg(long, default_value_t = 16)]
    order: usize,
    /// Residual phase-error variance, rad².
    #[arg(long, default_value_t = 1e-2)]
    sigma_p2: f64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Shape {
    Qam,
    Spiral,
}

impl ConstellationArgs {
    fn build(&self) -> Result<Constellation> {
        let kind = match self.constellation {
            Shape::Qam => ConstellationKind::Qam,
            Shape::Spiral => ConstellationKind::Spiral,
        };
        ScenarioConfig {
            constellation: kind,
            order: self.order,
            ..ScenarioConfig::default()
        }
        .build_constellation()
    }
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    constellation: ConstellationArgs,
    #[arg(long, default_value = "10:2:40")]
    ebn0: String,
}

#[derive(Args)]
struct FloorArgs {
    #[command(flatten)]
    constellation: ConstellationArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Random observations per Eb/N0 point.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Quadrature nodes.
    #[arg(long, default_value_t = 4096)]
    points: usize,
}

fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Run(args) => {
            let curve = run_experiment(&args.experiment.config()?)?;
            match args.out {
                Some(path) => phasenoise_core::harness::emit_csv(&curve, path)?,
                None => write_csv(&curve, stdout.lock())?,
            }
        }
        Command::Bound(args) => {
            let c = args.constellation.build()?;
            let sp2 = args.constellation.sigma_p2;
            let mut out = stdout.lock();
            writeln!(out, "eb_n0_db,n0,union_bound,error_floor")?;
            for db in parse_grid(&args.ebn0)? {
                let n0 = eb_n0_to_n0(db, c.bits_per_symbol())?;
                let bound = union_bound(&c, n0, sp2)?;
                writeln!(out, "{db:?},{n0:?},{:?},{:?}", bound.total, bound.floor)?;
            }
        }
        Command::Floor(args) => {
            let c = args.constellation.build()?;
            let floor = error_floor(&c, args.constellation.sigma_p2)?;
            writeln!(stdout.lock(), "{floor:?}")?;
        }
        Command::OracleCompare(args) => {
            let cfg = args.experiment.config()?;
            let mut out = stdout.lock();
            writeln!(out, "detector,eb_n0_db,agreed,samples,rate")?;
            for a in oracle_agreement(&cfg, args.samples, args.points)? {
                writeln!(out, "{},{:?},{},{},{:?}", a.detector, a.eb_n0_db, a.agreed, a.samples, a.rate())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rydpump_cli::config::{load_config, preset, ExperimentConfig};
use rydpump_cli::experiments;
use rydpump_cli::table::ResultTable;
use rydpump_cli::CliError;

#[derive(Parser)]
#[command(
    name = "rydpump",
    version,
    about = "Dissipative Rydberg pumping simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bell fidelity vs Δ33 from the master equation, against the rate model.
    Fig2(Common),
    /// AF populations of the square plaquette over time from trajectories.
    Fig3(Common),
    /// Steady AF population vs B/J from trajectories and diagonalization.
    #[command(name = "fig3-inset")]
    Fig3Inset(Common),
    /// Steady ground-basis populations of the frustrated triangle.
    Triangle(Common),
    /// Master-equation populations for one or two atoms.
    Master(Common),
    /// Trajectory-averaged populations.
    Mcwf(Common),
    /// Rate-model pumping rates and equilibrium AF population.
    Rates(Common),
    /// Transverse-field Ising spectrum data vs B/J.
    Ising(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config, or a metadata sidecar from an earlier run; the built-in
    /// preset is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Fig2(c) => ("fig2", c),
            Command::Fig3(c) => ("fig3", c),
            Command::Fig3Inset(c) => ("fig3-inset", c),
            Command::Triangle(c) => ("triangle", c),
            Command::Master(c) => ("master", c),
            Command::Mcwf(c) => ("mcwf", c),
            Command::Rates(c) => ("rates", c),
            Command::Ising(c) => ("ising", c),
        }
    }
}

fn trace_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_trace.csv"))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (name, common) = cli.command.parts();
    let mut cfg: ExperimentConfig = match &common.config {
        Some(path) => load_config(path)?,
        None => preset(name)?,
    };
    if let Some(seed) = common.seed {
        cfg.solver.seed = Some(seed);
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.path.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    cfg.output.path = Some(out.display().to_string());
    let jobs = common
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }

    let tables: Vec<ResultTable> = match &cli.command {
        Command::Fig2(_) => experiments::run_fig2(&cfg, jobs)?,
        Command::Fig3(_) => vec![experiments::run_fig3(&cfg, jobs)?],
        Command::Fig3Inset(_) => vec![experiments::run_fig3_inset(&cfg, jobs)?],
        Command::Triangle(_) => vec![experiments::run_triangle(&cfg, jobs)?],
        Command::Master(_) => vec![experiments::run_master(&cfg)?],
        Command::Mcwf(_) => vec![experiments::run_mcwf(&cfg, jobs)?],
        Command::Rates(_) => vec![experiments::run_rates(&cfg)?],
        Command::Ising(_) => vec![experiments::run_ising(&cfg)?],
    };
    for (k, table) in tables.iter().enumerate() {
        let path = if k == 0 {
            out.clone()
        } else {
            trace_path(&out)
        };
        table.write(&path)?;
        eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcgraph_cli::run::Overrides;
use mcgraph_cli::{batch, execute, Command};

/// Prescribed mean curvature graphs: solvability analysis, solves and barrier checks.
///
/// Log verbosity is read from MCGRAPH_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "mcgraph", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// output directory
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    over: Over,
}

#[derive(Args, Clone, Copy)]
struct Over {
    /// override the solver mesh size
    #[arg(long)]
    mesh_h: Option<f64>,
    /// override the Newton tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
}

impl From<Over> for Overrides {
    fn from(o: Over) -> Self {
        Overrides {
            mesh_h: o.mesh_h,
            tol: o.tol,
            seed: o.seed,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// classify the scenario's boundary against the Serrin-type condition
    Analyze(Common),
    /// solve the Dirichlet problem with the scenario's boundary data
    Solve(Common),
    /// build the barriers at the worst boundary point and check the supersolution inequality
    VerifyBarriers(Common),
    /// paired violating and control solves with failing boundary data
    DemoNonexistence(Common),
    /// run several scenarios in parallel, each with its own experiment
    Batch {
        /// scenario files
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        over: Over,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCGRAPH_LOG", "warn")).init();
    let cli = Cli::parse();
    let single = |cmd, c: Common| execute(Some(cmd), &c.scenario, &c.out, c.over.into());
    let status = match cli.cmd {
        Cmd::Analyze(c) => single(Command::Analyze, c),
        Cmd::Solve(c) => single(Command::Solve, c),
        Cmd::VerifyBarriers(c) => single(Command::VerifyBarriers, c),
        Cmd::DemoNonexistence(c) => single(Command::DemoNonexistence, c),
        Cmd::Batch { scenario, out, over } => batch(&scenario, &out, over.into()),
    };
    ExitCode::from(status as u8)
}

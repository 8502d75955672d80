//! Scenario-driven runner for the `mcgraph` library: parses a TOML scenario, runs one
//! experiment and writes a report, CSV fields and a hashed manifest.

pub mod artifacts;
pub mod expr;
pub mod run;
pub mod scenario;

use std::path::{Path, PathBuf};

use run::{exit, Overrides, RunError};
use scenario::{ExperimentBlock, Loaded, Scenario};

/// The experiment a subcommand asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Solve,
    VerifyBarriers,
    DemoNonexistence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Solve => "solve",
            Command::VerifyBarriers => "verify-barriers",
            Command::DemoNonexistence => "demo-nonexistence",
        }
    }
}

/// The scenario's experiment block when it matches `cmd`, the defaults for `cmd`
/// otherwise.
pub fn experiment_for(cmd: Command, loaded: &Loaded) -> ExperimentBlock {
    let own = &loaded.scenario.experiment;
    if own.name() == cmd.name() {
        return own.clone();
    }
    let defaults = match cmd {
        Command::Analyze => r#"kind = "analyze""#,
        Command::Solve => r#"kind = "solve""#,
        Command::VerifyBarriers => r#"kind = "verify-barriers""#,
        Command::DemoNonexistence => r#"kind = "demo-nonexistence""#,
    };
    toml::from_str(defaults).expect("experiment defaults parse")
}

fn report_error(e: &RunError) -> i32 {
    log::error!("{e}");
    eprintln!("error: {e}");
    e.exit_code()
}

/// Runs one scenario file; returns the process exit status.
pub fn execute(cmd: Option<Command>, scenario: &Path, out: &Path, ov: Overrides) -> i32 {
    let loaded = match Scenario::load(scenario, ov.seed) {
        Ok(l) => l,
        Err(e) => return report_error(&e.into()),
    };
    let experiment = match cmd {
        Some(c) => experiment_for(c, &loaded),
        None => loaded.scenario.experiment.clone(),
    };
    match run::run(&loaded, &experiment, out, ov) {
        Ok(outcome) => {
            println!(
                "{}: {} -> {} ({} artifacts in {})",
                scenario.display(),
                experiment.name(),
                serde_json::to_string(&outcome.report.status).unwrap_or_default(),
                outcome.manifest.artifacts.len() + 1,
                out.display()
            );
            outcome.exit_code()
        }
        Err(e) => report_error(&e),
    }
}

/// Runs each scenario's own experiment in parallel, one subdirectory of `out` per file
/// (named after its stem). The status is the largest individual status.
pub fn batch(scenarios: &[PathBuf], out: &Path, ov: Overrides) -> i32 {
    let mut stems: Vec<String> = Vec::new();
    for p in scenarios {
        let stem = p.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        if stems.contains(&stem) {
            eprintln!("error: two scenarios share the output name {stem}");
            return exit::INVALID_SCENARIO;
        }
        stems.push(stem);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(&stems)
            .map(|(p, stem)| scope.spawn(move || execute(None, p, &out.join(stem), ov)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or(exit::FAILURE))
            .max()
            .unwrap_or(exit::OK)
    })
}

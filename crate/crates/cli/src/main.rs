//! `sio`: Fredholm classification of `aP + bQ` from scene files.

mod commands;
mod report;
mod scene;

use clap::{Parser, Subcommand};
use commands::{Outcome, Suite};
use report::CommandEcho;
use scene::Scene;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Scene { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sio_core::Error),
}

#[derive(Debug, Parser)]
#[command(name = "sio", version, about = "Fredholm theory of aP + bQ on weighted variable-exponent spaces")]
struct Cli {
    /// Scene file (JSON, version "sio-scene/1").
    #[arg(long, global = true)]
    scene: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV side file with singular values (classify, verify commutator).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Truncation sweep, e.g. "64,128,256".
    #[arg(long, global = true)]
    trunc: Option<String>,
    /// Tolerance override: rank threshold (classify), residual or decay bound (verify), norm bisection (norm).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized test vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print wall-clock time to stderr.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundedness of the Cauchy singular integral on the scene's space.
    SpaceCheck,
    /// Fredholm classification of a symbol, pair or algebra element.
    Classify {
        #[arg(long)]
        target: String,
    },
    /// Linear dilation of an algebra element to a single pair.
    Dilate {
        #[arg(long)]
        target: String,
        /// Where to write the dilated scene.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Operator identity checks on the finite-section engine.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        target: Option<String>,
    },
    /// Luxemburg norm of a scene function.
    Norm {
        #[arg(long)]
        target: String,
    },
}

fn parse_sweep(s: &str) -> Result<Vec<usize>, CliError> {
    let sweep = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| CliError::Usage(format!("--trunc: \"{x}\": {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sweep)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Folds command-line overrides into the scene so the embedded config is self-contained.
fn apply_overrides(cli: &Cli, scene: &mut Scene) -> Result<(), CliError> {
    if let Some(t) = &cli.trunc {
        scene.engine.sweep = parse_sweep(t)?;
    }
    if let Some(seed) = cli.seed {
        scene.engine.seed = seed;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive and finite, got {tol}")));
        }
        let eng = &mut scene.engine;
        match &cli.command {
            Command::Classify { .. } => eng.rank_tol = tol,
            Command::Verify { suite: Suite::Commutator, .. } => eng.compact_tol = tol,
            Command::Verify { .. } => eng.residual_tol = tol,
            Command::Norm { .. } => eng.norm_tol = tol,
            Command::SpaceCheck | Command::Dilate { .. } => {
                return Err(CliError::Usage("--tol has no meaning for this command".into()))
            }
        }
    }
    if scene.engine.sweep.is_empty() {
        return Err(CliError::Scene { path: "engine.sweep".into(), message: "sweep must not be empty".into() });
    }
    Ok(())
}

fn echo(command: &Command) -> CommandEcho {
    match command {
        Command::SpaceCheck => CommandEcho { name: "space-check", target: None, suite: None },
        Command::Classify { target } => CommandEcho { name: "classify", target: Some(target.clone()), suite: None },
        Command::Dilate { target, .. } => CommandEcho { name: "dilate", target: Some(target.clone()), suite: None },
        Command::Verify { suite, target } => CommandEcho { name: "verify", target: target.clone(), suite: Some(*suite) },
        Command::Norm { target } => CommandEcho { name: "norm", target: Some(target.clone()), suite: None },
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let path = cli.scene.as_deref().ok_or_else(|| CliError::Usage("--scene is required".into()))?;
    let mut scene = Scene::parse(&read(path)?).map_err(|e| match e {
        CliError::Scene { path: p, message } => CliError::Scene { path: format!("{}: {p}", path.display()), message },
        other => other,
    })?;
    apply_overrides(cli, &mut scene)?;
    let started = Instant::now();
    let outcome: Outcome = match &cli.command {
        Command::SpaceCheck => commands::space_check(&scene)?,
        Command::Classify { target } => commands::classify(&scene, target)?,
        Command::Dilate { target, .. } => commands::dilate_element(&scene, target)?,
        Command::Verify { suite, target } => commands::verify(&scene, *suite, target.as_deref())?,
        Command::Norm { target } => commands::norm(&scene, target)?,
    };
    if cli.timings {
        eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
    }
    let text = report::render(&echo(&cli.command), &scene, &outcome);
    match &cli.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &cli.csv {
        write(p, &report::render_csv(&outcome.csv))?;
    }
    if let (Command::Dilate { emit: Some(p), .. }, Some(s)) = (&cli.command, &outcome.emitted) {
        write(p, &(serde_json::to_string_pretty(s).expect("scene serializes") + "\n"))?;
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

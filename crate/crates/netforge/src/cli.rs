use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use netforge_core::actions::{load_registry, ActionRegistry, DEFAULT_TIMEOUT};
use netforge_core::bnd::{parse_bnd, validate_structure};
use netforge_core::orchestrator::{
    replay_case_study, Engine, EngineError, EngineOptions, ExperimentStatus, Workspace,
};
use netforge_core::planner::{plan, PlanningOutcome, Request};
use netforge_core::sim::LatencyModel;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSATISFIABLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "netforge", version, about = "Plan, deploy and evaluate blockchain network architectures")]
pub struct Cli {
    /// Directory holding experiment records, logs and datasets.
    #[arg(long, global = true, env = "NETFORGE_WORKSPACE", default_value = "netforge-workspace")]
    pub workspace: PathBuf,

    /// Action pool manifest; defaults to the built-in seven-action pool.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    /// Bound on a single external action invocation, in seconds.
    #[arg(long, global = true, default_value_t = DEFAULT_TIMEOUT.as_secs())]
    pub timeout: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a BND model and print the verification report.
    Validate { model: PathBuf },
    /// Print the shortest execution plan for a request.
    Plan { request: PathBuf },
    /// Plan and execute a request.
    Run {
        request: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Inspect the action pool.
    Actions {
        #[command(subcommand)]
        command: ActionsCommand,
    },
    /// Replay the bundled thirteen-experiment case study.
    ReplayCaseStudy {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        rounds: u32,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Tear down the channels an experiment deployed.
    Teardown { experiment_id: String },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[command(flatten)]
        exec: ExecArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ActionsCommand {
    /// Print every action descriptor.
    List,
}

#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Tear deployed channels down after execution.
    #[arg(long)]
    pub teardown: bool,
    /// Continue with independent calls after a failure.
    #[arg(long)]
    pub keep_going: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Sleep for testbed-scale action durations multiplied by this factor.
    #[arg(long, default_value_t = 0.0)]
    pub simulate_latency: f64,
}

impl ExecArgs {
    pub fn options(&self, timeout: Duration) -> EngineOptions {
        EngineOptions {
            seed: self.seed,
            latency: LatencyModel::scaled(self.simulate_latency),
            timeout,
            fail_fast: !self.keep_going,
            teardown_after: self.teardown,
            ..EngineOptions::default()
        }
    }
}

impl Default for ExecArgs {
    fn default() -> Self {
        Self {
            teardown: false,
            keep_going: false,
            seed: 42,
            simulate_latency: 0.0,
        }
    }
}

/// A failure carrying its exit code.
#[derive(Debug)]
struct Exit(i32, anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_USAGE, e.into())
}

fn failed(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_FAILED, e.into())
}

/// Runs the CLI with the given arguments (program name first) and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(Exit(code, e)) => {
            let _ = writeln!(err, "error: {e:#}");
            code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let timeout = Duration::from_secs(cli.timeout);
    match &cli.command {
        Command::Validate { model } => {
            let text = read(model)?;
            let model = parse_bnd(&text).map_err(|e| Exit(EXIT_INVALID, e.into()))?;
            let report = validate_structure(&model);
            print_json(out, &report)?;
            Ok(if report.has_errors() { EXIT_INVALID } else { EXIT_OK })
        }
        Command::Plan { request } => {
            let (request, _) = read_request(request)?;
            let registry = registry(cli, timeout)?;
            let outcome = plan(&request, &registry).map_err(|e| Exit(EXIT_INVALID, e.into()))?;
            writeln!(out, "{}", outcome.to_json_string()).map_err(failed)?;
            if let PlanningOutcome::Unsatisfiable { unmatched } = &outcome {
                for c in unmatched {
                    let _ = writeln!(err, "unmatched: {}", serde_json::to_string(c).unwrap_or_default());
                }
                return Ok(EXIT_UNSATISFIABLE);
            }
            Ok(EXIT_OK)
        }
        Command::Run { request, exec } => {
            let (request, document) = read_request(request)?;
            let engine = engine(cli, exec, timeout)?;
            let record = engine.run(&request, document).map_err(failed)?;
            print_json(
                out,
                &json!({
                    "experiment_id": record.experiment_id,
                    "status": record.status,
                    "state": record.runtime_state.as_ref().map(|s| s.tuple()),
                    "endpoints": record.endpoints,
                    "datasets": record.datasets,
                    "diagnostics": record.diagnostics,
                }),
            )?;
            Ok(match record.status {
                ExperimentStatus::Succeeded => EXIT_OK,
                ExperimentStatus::Unsatisfiable => EXIT_UNSATISFIABLE,
                _ if record.verification.as_ref().is_some_and(|r| r.has_errors()) => EXIT_INVALID,
                _ => EXIT_FAILED,
            })
        }
        Command::Actions {
            command: ActionsCommand::List,
        } => {
            let registry = registry(cli, timeout)?;
            print_json(out, &registry.descriptors())?;
            Ok(EXIT_OK)
        }
        Command::ReplayCaseStudy { rounds, exec } => {
            let registry = registry(cli, timeout)?;
            let summary = replay_case_study(
                &Workspace::new(&cli.workspace),
                *rounds as usize,
                Arc::new(registry),
                exec.options(timeout),
            )
            .map_err(failed)?;
            print_json(out, &summary)?;
            let any = |s: ExperimentStatus| summary.results.iter().any(|r| r.status == s);
            Ok(if any(ExperimentStatus::Failed) {
                EXIT_FAILED
            } else if any(ExperimentStatus::Unsatisfiable) {
                EXIT_UNSATISFIABLE
            } else {
                EXIT_OK
            })
        }
        Command::Teardown { experiment_id } => {
            let engine = engine(cli, &ExecArgs::default(), timeout)?;
            let record = engine.teardown(experiment_id).map_err(|e| match e {
                EngineError::UnknownExperiment(_) => usage(e),
                other => failed(other),
            })?;
            print_json(
                out,
                &json!({
                    "experiment_id": record.experiment_id,
                    "torn_down": record.torn_down,
                    "diagnostics": record.diagnostics,
                }),
            )?;
            Ok(if record.torn_down { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Serve { bind, exec } => {
            let engine = Arc::new(engine(cli, exec, timeout)?);
            let _ = writeln!(err, "listening on http://{bind}");
            let rt = tokio::runtime::Runtime::new().map_err(failed)?;
            rt.block_on(crate::http::serve(engine, *bind)).map_err(failed)?;
            Ok(EXIT_OK)
        }
    }
}

fn read(path: &Path) -> Result<String, Exit> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn read_request(path: &Path) -> Result<(Request, Value), Exit> {
    let text = read(path)?;
    let document: Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", path.display()))
        .map_err(|e| Exit(EXIT_INVALID, e))?;
    let request = Request::from_json_value(&document).map_err(|e| Exit(EXIT_INVALID, e.into()))?;
    Ok((request, document))
}

fn registry(cli: &Cli, timeout: Duration) -> Result<ActionRegistry, Exit> {
    match &cli.registry {
        Some(path) => load_registry(path, timeout).map_err(usage),
        None => Ok(ActionRegistry::case_study()),
    }
}

fn engine(cli: &Cli, exec: &ExecArgs, timeout: Duration) -> Result<Engine, Exit> {
    let registry = registry(cli, timeout)?;
    Engine::new(
        Workspace::new(&cli.workspace),
        Arc::new(registry),
        exec.options(timeout),
    )
    .map_err(failed)
}

fn print_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), Exit> {
    let text = serde_json::to_string_pretty(value).map_err(failed)?;
    writeln!(out, "{text}").map_err(failed)
}

//! Plan execution, experiment records and activity timing.
//!
//! Each experiment lives in its own directory of the workspace:
//!
//! ```text
//! experiments/<id>/record.json
//! experiments/<id>/log.jsonl
//! experiments/<id>/datasets/<channel>-<metric_group>.csv
//! ```

mod engine;
mod overheads;
mod replay;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bnd::VerificationReport;
use crate::planner::{CallInput, PlanError, PlanningOutcome, RequestComponent, RequestState};

pub use engine::{Engine, EngineOptions};
pub use overheads::{
    compute_overheads, compute_overheads_from_durations, ActivityStats, OverheadReport,
};
pub use replay::{replay_case_study, ReplayResult, ReplaySummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Activity {
    LoadModules,
    CreateExpRecord,
    Verify,
    Deploy,
    Evaluation,
    StoreExpRecord,
    PlanningOverheads,
    OrchestrationOverheads,
}

impl Activity {
    pub const ALL: [Activity; 8] = [
        Activity::LoadModules,
        Activity::CreateExpRecord,
        Activity::Verify,
        Activity::Deploy,
        Activity::Evaluation,
        Activity::StoreExpRecord,
        Activity::PlanningOverheads,
        Activity::OrchestrationOverheads,
    ];

    /// Activities counted as experiment overhead.
    pub const OVERHEAD: [Activity; 4] = [
        Activity::CreateExpRecord,
        Activity::PlanningOverheads,
        Activity::OrchestrationOverheads,
        Activity::StoreExpRecord,
    ];

    /// Activities that do the requested work.
    pub const WORK: [Activity; 3] = [Activity::Verify, Activity::Deploy, Activity::Evaluation];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::LoadModules => "LOAD-MODULES",
            Activity::CreateExpRecord => "CREATE-EXP-RECORD",
            Activity::Verify => "VERIFY",
            Activity::Deploy => "DEPLOY",
            Activity::Evaluation => "EVALUATION",
            Activity::StoreExpRecord => "STORE-EXP-RECORD",
            Activity::PlanningOverheads => "PLANNING-OVERHEADS",
            Activity::OrchestrationOverheads => "ORCHESTRATION-OVERHEADS",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityLogEntry {
    pub experiment_id: String,
    pub activity: Activity,
    pub start: u64,
    pub end: u64,
    pub detail: String,
}

impl ActivityLogEntry {
    pub fn duration_ms(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentStatus {
    Created,
    Running,
    Succeeded,
    Failed,
    Unsatisfiable,
}

impl ExperimentStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, ExperimentStatus::Created | ExperimentStatus::Running)
    }
}

impl fmt::Display for ExperimentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentStatus::Created => "created",
            ExperimentStatus::Running => "running",
            ExperimentStatus::Succeeded => "succeeded",
            ExperimentStatus::Failed => "failed",
            ExperimentStatus::Unsatisfiable => "unsatisfiable",
        };
        f.write_str(s)
    }
}

/// One executed plan call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub action_id: String,
    pub input: CallInput,
    pub success: bool,
    pub start: u64,
    pub end: u64,
}

/// A channel deployed by an experiment and the action that deployed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub channel: String,
    pub action_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub request: Value,
    pub status: ExperimentStatus,
    #[serde(default)]
    pub plan: Option<PlanningOutcome>,
    #[serde(default)]
    pub components: Vec<RequestComponent>,
    #[serde(default)]
    pub runtime_state: Option<RequestState>,
    #[serde(default)]
    pub verification: Option<VerificationReport>,
    #[serde(default)]
    pub calls: Vec<CallRecord>,
    #[serde(default)]
    pub endpoints: BTreeMap<String, Vec<String>>,
    /// Dataset paths relative to the workspace root.
    #[serde(default)]
    pub datasets: Vec<String>,
    #[serde(default)]
    pub deployments: Vec<Deployment>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default)]
    pub torn_down: bool,
    /// Lives in `log.jsonl`, not in `record.json`.
    #[serde(skip)]
    pub activity_log: Vec<ActivityLogEntry>,
}

impl ExperimentRecord {
    pub fn new(experiment_id: String, request: Value) -> Self {
        Self {
            experiment_id,
            request,
            status: ExperimentStatus::Created,
            plan: None,
            components: Vec::new(),
            runtime_state: None,
            verification: None,
            calls: Vec::new(),
            endpoints: BTreeMap::new(),
            datasets: Vec::new(),
            deployments: Vec::new(),
            diagnostics: Vec::new(),
            torn_down: false,
            activity_log: Vec::new(),
        }
    }

    /// Total span from the first to the last logged activity.
    pub fn wall_time_ms(&self) -> u64 {
        let start = self.activity_log.iter().map(|e| e.start).min();
        let end = self.activity_log.iter().map(|e| e.end).max();
        match (start, end) {
            (Some(s), Some(e)) => e - s,
            _ => 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EngineError + '_ {
    move |source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Directory layout of an engine workspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn experiments_dir(&self) -> PathBuf {
        self.root.join("experiments")
    }

    pub fn experiment_dir(&self, id: &str) -> PathBuf {
        self.experiments_dir().join(id)
    }

    pub fn record_path(&self, id: &str) -> PathBuf {
        self.experiment_dir(id).join("record.json")
    }

    pub fn log_path(&self, id: &str) -> PathBuf {
        self.experiment_dir(id).join("log.jsonl")
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.experiment_dir(id).join("datasets")
    }

    /// Mirror of the simulated channel registry.
    pub fn sim_state_dir(&self) -> PathBuf {
        self.root.join("sim-targets")
    }

    /// Engine-level log holding LOAD-MODULES entries.
    pub fn engine_log_path(&self) -> PathBuf {
        self.root.join("engine.jsonl")
    }

    /// Workspace-relative form of `path` when it lies inside the workspace.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    /// Experiment ids in creation order.
    pub fn list_experiments(&self) -> Result<Vec<String>, EngineError> {
        let dir = self.experiments_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if entry.path().join("record.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Fresh, time-sortable experiment id. Ids from one process are strictly
/// increasing even within the same millisecond.
pub fn new_experiment_id() -> String {
    static GEN: Mutex<ulid::Generator> = Mutex::new(ulid::Generator::new());
    let mut gen = GEN.lock().unwrap_or_else(|p| p.into_inner());
    gen.generate()
        .unwrap_or_else(|_| ulid::Ulid::new())
        .to_string()
        .to_lowercase()
}

pub(crate) fn append_log(path: &Path, entries: &[ActivityLogEntry]) -> Result<(), EngineError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).expect("log entry serializes");
        buf.push(b'\n');
    }
    file.write_all(&buf).map_err(io_err(path))
}

pub fn read_log(path: &Path) -> Result<Vec<ActivityLogEntry>, EngineError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| EngineError::Corrupt {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

/// Reads `record.json` and fills the activity log from `log.jsonl`.
pub fn load_record(workspace: &Workspace, id: &str) -> Result<ExperimentRecord, EngineError> {
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(EngineError::UnknownExperiment(id.to_string()));
    }
    let path = workspace.record_path(id);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(EngineError::UnknownExperiment(id.to_string()))
        }
        Err(e) => return Err(io_err(&path)(e)),
    };
    let mut record: ExperimentRecord =
        serde_json::from_slice(&bytes).map_err(|e| EngineError::Corrupt {
            path: path.clone(),
            reason: e.to_string(),
        })?;
    record.activity_log = read_log(&workspace.log_path(id))?;
    Ok(record)
}

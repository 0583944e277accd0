use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    compute_overheads, io_err, Activity, Engine, EngineError, EngineOptions, ExperimentStatus,
    OverheadReport, Workspace,
};
use crate::actions::ActionRegistry;
use crate::planner::{PlanningOutcome, RequestComponent};
use crate::sim::load_case_study;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub round: usize,
    /// Case-study experiment (`baseline`, `d01` .. `d12`).
    pub case: String,
    pub experiment_id: String,
    pub status: ExperimentStatus,
    pub invocations: usize,
    pub datasets: usize,
    pub overhead_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched: Vec<RequestComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub rounds: usize,
    pub experiments: usize,
    pub invocations: usize,
    pub per_action: BTreeMap<String, usize>,
    /// Dataset files present on disk for the replayed experiments.
    pub dataset_files: usize,
    pub succeeded: usize,
    pub success_rate: f64,
    /// Mean per-experiment sum of the overhead activities.
    pub mean_experiment_overhead_ms: f64,
    pub overheads: OverheadReport,
    pub results: Vec<ReplayResult>,
}

/// Runs the thirteen bundled experiments `rounds` times, in bundle order.
pub fn replay_case_study(
    workspace: &Workspace,
    rounds: usize,
    registry: Arc<ActionRegistry>,
    options: EngineOptions,
) -> Result<ReplaySummary, EngineError> {
    let engine = Engine::new(workspace.clone(), registry, options)?;
    let cases = load_case_study();
    let mut results = Vec::new();
    let mut per_action: BTreeMap<String, usize> = BTreeMap::new();
    let mut log = Vec::new();
    let mut dataset_files = 0;

    for round in 1..=rounds.max(1) {
        for case in &cases {
            let record = engine.run(&case.request, case.document.clone())?;
            for call in &record.calls {
                *per_action.entry(call.action_id.clone()).or_insert(0) += 1;
            }
            let dir = workspace.dataset_dir(&record.experiment_id);
            let files = if dir.exists() {
                std::fs::read_dir(&dir)
                    .map_err(io_err(&dir))?
                    .filter_map(Result::ok)
                    .filter(|e| e.path().is_file())
                    .count()
            } else {
                0
            };
            dataset_files += files;
            let overhead_ms = record
                .activity_log
                .iter()
                .filter(|e| Activity::OVERHEAD.contains(&e.activity))
                .map(|e| e.duration_ms() as f64)
                .sum();
            let unmatched = match &record.plan {
                Some(PlanningOutcome::Unsatisfiable { unmatched }) => unmatched.clone(),
                _ => Vec::new(),
            };
            results.push(ReplayResult {
                round,
                case: case.id.clone(),
                experiment_id: record.experiment_id.clone(),
                status: record.status,
                invocations: record.calls.len(),
                datasets: files,
                overhead_ms,
                unmatched,
            });
            log.extend(record.activity_log);
        }
    }

    let experiments = results.len();
    let succeeded = results
        .iter()
        .filter(|r| r.status == ExperimentStatus::Succeeded)
        .count();
    Ok(ReplaySummary {
        rounds: rounds.max(1),
        experiments,
        invocations: per_action.values().sum(),
        per_action,
        dataset_files,
        succeeded,
        success_rate: succeeded as f64 / experiments as f64,
        mean_experiment_overhead_ms: results.iter().map(|r| r.overhead_ms).sum::<f64>()
            / experiments as f64,
        overheads: compute_overheads(&log),
        results,
    })
}

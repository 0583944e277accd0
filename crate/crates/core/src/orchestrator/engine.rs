use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;

use super::{
    append_log, io_err, load_record, Activity, ActivityLogEntry, CallRecord, Deployment,
    EngineError, ExperimentRecord, ExperimentStatus, Workspace,
};
use crate::actions::{
    ActionInput, ActionOutcome, ActionRegistry, InvocationContext, OutcomePayload,
    DEFAULT_TIMEOUT,
};
use crate::bnd::extract_channel_fragment;
use crate::clock::epoch_ms;
use crate::planner::{
    ActionCall, CallInput, PlanningOutcome, PlanningProblem, Request, RequestComponent,
    RequestState, Status,
};
use crate::sim::{LatencyModel, SimTargets};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub seed: u64,
    pub latency: LatencyModel,
    pub timeout: Duration,
    /// Rows per synthetic dataset.
    pub dataset_rows: usize,
    /// Stop at the first failed call.
    pub fail_fast: bool,
    /// Tear deployed channels down once execution ends.
    pub teardown_after: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            latency: LatencyModel::NONE,
            timeout: DEFAULT_TIMEOUT,
            dataset_rows: 100,
            fail_fast: true,
            teardown_after: false,
        }
    }
}

/// Consecutive intervals sharing their boundary instants, so logged
/// activities tile the experiment's wall time without gaps.
struct Timeline {
    last: Instant,
}

impl Timeline {
    fn starting_at(at: Instant) -> Self {
        Self { last: at }
    }

    /// Closes the current interval and returns its (start, end) in epoch ms.
    fn close(&mut self) -> (u64, u64) {
        let now = Instant::now();
        let span = (epoch_ms(self.last), epoch_ms(now));
        self.last = now;
        span
    }
}

#[derive(Debug)]
pub struct Engine {
    workspace: Workspace,
    registry: Arc<ActionRegistry>,
    targets: Arc<SimTargets>,
    options: EngineOptions,
}

impl Engine {
    /// Prepares the workspace and records the registry load as LOAD-MODULES
    /// in the engine log.
    pub fn new(
        workspace: Workspace,
        registry: Arc<ActionRegistry>,
        options: EngineOptions,
    ) -> Result<Self, EngineError> {
        let dir = workspace.experiments_dir();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        if let Some(span) = registry.load_span() {
            append_log(
                &workspace.engine_log_path(),
                &[ActivityLogEntry {
                    experiment_id: String::new(),
                    activity: Activity::LoadModules,
                    start: span.start,
                    end: span.end,
                    detail: format!("{} actions", registry.len()),
                }],
            )?;
        }
        let targets = Arc::new(SimTargets::persistent(workspace.sim_state_dir()));
        Ok(Self {
            workspace,
            registry,
            targets,
            options,
        })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn registry(&self) -> &ActionRegistry {
        &self.registry
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn targets(&self) -> &SimTargets {
        &self.targets
    }

    /// Creates and persists a fresh record with status `created`.
    pub fn create_experiment(&self, document: Value) -> Result<ExperimentRecord, EngineError> {
        Ok(self.create_timed(document, Instant::now())?.0)
    }

    fn create_timed(
        &self,
        document: Value,
        started: Instant,
    ) -> Result<(ExperimentRecord, Timeline), EngineError> {
        let mut tl = Timeline::starting_at(started);
        let id = super::new_experiment_id();
        let dir = self.workspace.experiment_dir(&id);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut record = ExperimentRecord::new(id, document);
        self.write_record(&record)?;
        let (start, end) = tl.close();
        self.log(&mut record, Activity::CreateExpRecord, start, end, "")?;
        Ok((record, tl))
    }

    /// Plans, executes and stores a request in one go.
    pub fn run(&self, request: &Request, document: Value) -> Result<ExperimentRecord, EngineError> {
        let (record, tl) = self.create_timed(document, Instant::now())?;
        self.proceed_timed(record, request, tl)
    }

    /// Plans, executes and stores an experiment created earlier.
    pub fn proceed(
        &self,
        record: ExperimentRecord,
        request: &Request,
    ) -> Result<ExperimentRecord, EngineError> {
        self.proceed_timed(record, request, Timeline::starting_at(Instant::now()))
    }

    fn proceed_timed(
        &self,
        mut record: ExperimentRecord,
        request: &Request,
        mut tl: Timeline,
    ) -> Result<ExperimentRecord, EngineError> {
        let planned = self.plan_step(&mut record, request, &mut tl)?;
        if planned {
            self.execute_step(&mut record, request, &mut tl)?;
        }
        self.store(&mut record, &mut tl)?;
        Ok(record)
    }

    /// Returns whether there is a plan to execute.
    fn plan_step(
        &self,
        record: &mut ExperimentRecord,
        request: &Request,
        tl: &mut Timeline,
    ) -> Result<bool, EngineError> {
        let (detail, executable) = match PlanningProblem::from_request(request) {
            Ok(problem) => {
                record.components = problem.components().to_vec();
                record.runtime_state = Some(problem.start_state(&self.registry));
                let outcome = problem.search(&self.registry);
                let detail = match &outcome {
                    PlanningOutcome::Plan(p) => format!("{} calls", p.calls.len()),
                    PlanningOutcome::Unsatisfiable { unmatched } => {
                        format!("unsatisfiable, {} unmatched", unmatched.len())
                    }
                };
                let executable = outcome.is_satisfiable();
                if let PlanningOutcome::Unsatisfiable { unmatched } = &outcome {
                    record.status = ExperimentStatus::Unsatisfiable;
                    for c in unmatched {
                        record
                            .diagnostics
                            .push(format!("no action can handle {}", describe(c)));
                    }
                }
                record.plan = Some(outcome);
                (detail, executable)
            }
            Err(e) => {
                let mut state = RequestState::new(0, 0);
                state.v = Status::Failed;
                record.runtime_state = Some(state);
                record.status = ExperimentStatus::Failed;
                record.diagnostics.push(format!("planning failed: {e}"));
                ("planning failed".to_string(), false)
            }
        };
        let (start, end) = tl.close();
        self.log(record, Activity::PlanningOverheads, start, end, &detail)?;
        Ok(executable)
    }

    fn execute_step(
        &self,
        record: &mut ExperimentRecord,
        request: &Request,
        tl: &mut Timeline,
    ) -> Result<(), EngineError> {
        let Some(PlanningOutcome::Plan(plan)) = record.plan.clone() else {
            return Ok(());
        };
        let mut state = record
            .runtime_state
            .clone()
            .expect("planning sets the runtime state");
        record.status = ExperimentStatus::Running;
        record.runtime_state = Some(state.clone());
        self.write_record(record)?;

        let dataset_dir = self.workspace.dataset_dir(&record.experiment_id);
        let experiment_id = record.experiment_id.clone();
        let ctx = InvocationContext {
            experiment_id: &experiment_id,
            dataset_dir,
            targets: &self.targets,
            seed: self.options.seed,
            dataset_rows: self.options.dataset_rows,
            latency: self.options.latency,
            timeout: self.options.timeout,
        };

        for (i, call) in plan.calls.iter().enumerate() {
            let index = call
                .input
                .component()
                .and_then(|c| record.components.iter().position(|x| *x == c));
            if let CallInput::Evaluate { channel, .. } = &call.input {
                let deployed = record
                    .components
                    .iter()
                    .position(|c| *c == RequestComponent::Deploy { channel: channel.clone() })
                    .is_some_and(|d| state.component(d) == Status::Done);
                if !deployed {
                    record.diagnostics.push(format!(
                        "skipped {}: channel `{channel}` is not deployed",
                        call_detail(call)
                    ));
                    continue;
                }
            }
            let prepared = self.prepare_input(record, request, call);
            let (gap_start, call_start) = tl.close();
            self.log(
                record,
                Activity::OrchestrationOverheads,
                gap_start,
                call_start,
                &format!("before call {}", i + 1),
            )?;

            let outcome = match prepared {
                Err(reason) => ActionOutcome::failure(reason),
                Ok(input) => match self.registry.get(&call.action_id) {
                    None => ActionOutcome::failure(format!("unknown action `{}`", call.action_id)),
                    Some(entry) => entry
                        .invoke(&ctx, &input)
                        .unwrap_or_else(|e| ActionOutcome::failure(e.to_string())),
                },
            };
            let (_, call_end) = tl.close();
            let activity = match call.input {
                CallInput::Verify => Activity::Verify,
                CallInput::Deploy { .. } => Activity::Deploy,
                CallInput::Evaluate { .. } => Activity::Evaluation,
            };
            self.log(record, activity, call_start, call_end, &call_detail(call))?;

            let success = self.absorb(record, &mut state, call, index, outcome);
            record.calls.push(CallRecord {
                action_id: call.action_id.clone(),
                input: call.input.clone(),
                success,
                start: call_start,
                end: call_end,
            });
            record.runtime_state = Some(state.clone());
            let verify_failed = matches!(call.input, CallInput::Verify) && !success;
            if !success && (self.options.fail_fast || verify_failed) {
                break;
            }
        }

        record.status = if state.has_failure() {
            ExperimentStatus::Failed
        } else if state.is_goal() {
            ExperimentStatus::Succeeded
        } else {
            record
                .diagnostics
                .push(format!("execution ended in non-goal state {state}"));
            ExperimentStatus::Failed
        };
        let (start, end) = tl.close();
        self.log(record, Activity::OrchestrationOverheads, start, end, "after calls")?;
        if self.options.teardown_after {
            self.teardown_deployments(record, &ctx, Some(tl))?;
        }
        record.runtime_state = Some(state);
        Ok(())
    }

    fn prepare_input(
        &self,
        record: &ExperimentRecord,
        request: &Request,
        call: &ActionCall,
    ) -> Result<ActionInput, String> {
        let fragment = |channel: &str| {
            extract_channel_fragment(&request.model, channel).map_err(|e| e.to_string())
        };
        Ok(match &call.input {
            CallInput::Verify => ActionInput::Verify {
                request: record.request.clone(),
            },
            CallInput::Deploy { channel } => ActionInput::Deploy {
                fragment: fragment(channel)?,
            },
            CallInput::Evaluate { channel, group } => ActionInput::Evaluate {
                fragment: fragment(channel)?,
                metric_group: group.clone(),
                endpoints: record.endpoints.get(channel).cloned().unwrap_or_default(),
            },
        })
    }

    /// Folds one outcome into the record and state; returns whether the call succeeded.
    fn absorb(
        &self,
        record: &mut ExperimentRecord,
        state: &mut RequestState,
        call: &ActionCall,
        index: Option<usize>,
        outcome: ActionOutcome,
    ) -> bool {
        let detail = call_detail(call);
        if !outcome.is_success() {
            record
                .diagnostics
                .push(format!("{detail} failed: {}", outcome.diagnostics));
            match index {
                Some(i) => state.set_component(i, Status::Failed),
                None => state.v = Status::Failed,
            }
            return false;
        }
        match (&call.input, outcome.payload) {
            (CallInput::Verify, OutcomePayload::VerifyReport(report)) => {
                let errors = report.has_errors();
                if errors {
                    record.diagnostics.push(format!(
                        "{detail}: verification reported {} error(s)",
                        report.count(crate::bnd::Severity::Error)
                    ));
                }
                record.verification = Some(report);
                state.v = if errors { Status::Failed } else { Status::Done };
                return !errors;
            }
            (CallInput::Verify, _) => state.v = Status::Done,
            (CallInput::Deploy { channel }, payload) => {
                let endpoints = match payload {
                    OutcomePayload::DeployResult { endpoints, .. } => endpoints,
                    _ => Vec::new(),
                };
                record.endpoints.insert(channel.clone(), endpoints);
                record.deployments.push(Deployment {
                    channel: channel.clone(),
                    action_id: call.action_id.clone(),
                });
            }
            (CallInput::Evaluate { .. }, payload) => {
                if let OutcomePayload::EvalResult { datasets } = payload {
                    record.datasets.extend(
                        datasets
                            .iter()
                            .map(|d| self.workspace.relative(std::path::Path::new(d))),
                    );
                }
            }
        }
        if let Some(i) = index {
            state.set_component(i, Status::Done);
        }
        true
    }

    /// Tears deployed channels down in reverse deployment order.
    fn teardown_deployments(
        &self,
        record: &mut ExperimentRecord,
        ctx: &InvocationContext<'_>,
        mut tl: Option<&mut Timeline>,
    ) -> Result<(), EngineError> {
        let mut all_ok = true;
        for dep in record.deployments.clone().iter().rev() {
            let input = ActionInput::Teardown {
                channel_id: dep.channel.clone(),
                endpoints: record.endpoints.get(&dep.channel).cloned().unwrap_or_default(),
            };
            let outcome = match self.registry.get(&dep.action_id) {
                Some(entry) => entry
                    .invoke(ctx, &input)
                    .unwrap_or_else(|e| ActionOutcome::failure(e.to_string())),
                None => match self.targets.teardown(ctx.experiment_id, &dep.channel) {
                    Ok(()) => ActionOutcome::success(OutcomePayload::TeardownResult),
                    Err(e) => ActionOutcome::failure(e.to_string()),
                },
            };
            if !outcome.is_success() {
                all_ok = false;
                record.diagnostics.push(format!(
                    "teardown {}/{} failed: {}",
                    dep.action_id, dep.channel, outcome.diagnostics
                ));
            }
            if let Some(tl) = tl.as_deref_mut() {
                let (start, end) = tl.close();
                let detail = format!("teardown {}/{}", dep.action_id, dep.channel);
                self.log(record, Activity::OrchestrationOverheads, start, end, &detail)?;
            }
        }
        record.torn_down = all_ok;
        Ok(())
    }

    /// Tears down every channel an experiment deployed. Repeating it is a no-op.
    pub fn teardown(&self, id: &str) -> Result<ExperimentRecord, EngineError> {
        let mut record = load_record(&self.workspace, id)?;
        if record.torn_down {
            return Ok(record);
        }
        let mut tl = Timeline::starting_at(Instant::now());
        let ctx = InvocationContext {
            experiment_id: id,
            dataset_dir: self.workspace.dataset_dir(id),
            targets: &self.targets,
            seed: self.options.seed,
            dataset_rows: self.options.dataset_rows,
            latency: self.options.latency,
            timeout: self.options.timeout,
        };
        self.teardown_deployments(&mut record, &ctx, Some(&mut tl))?;
        self.store(&mut record, &mut tl)?;
        Ok(record)
    }

    pub fn load_record(&self, id: &str) -> Result<ExperimentRecord, EngineError> {
        load_record(&self.workspace, id)
    }

    fn store(&self, record: &mut ExperimentRecord, tl: &mut Timeline) -> Result<(), EngineError> {
        let start = epoch_ms(tl.last);
        self.write_record(record)?;
        let (_, end) = tl.close();
        let detail = record.status.to_string();
        self.log(record, Activity::StoreExpRecord, start, end, &detail)
    }

    /// Writes `record.json` through a temporary file so readers never see a
    /// partial document.
    fn write_record(&self, record: &ExperimentRecord) -> Result<(), EngineError> {
        let path = self.workspace.record_path(&record.experiment_id);
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(record).expect("record serializes");
        std::fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    fn log(
        &self,
        record: &mut ExperimentRecord,
        activity: Activity,
        start: u64,
        end: u64,
        detail: &str,
    ) -> Result<(), EngineError> {
        let entry = ActivityLogEntry {
            experiment_id: record.experiment_id.clone(),
            activity,
            start,
            end,
            detail: detail.to_string(),
        };
        append_log(
            &self.workspace.log_path(&record.experiment_id),
            std::slice::from_ref(&entry),
        )?;
        record.activity_log.push(entry);
        Ok(())
    }
}

fn describe(c: &RequestComponent) -> String {
    match c {
        RequestComponent::Deploy { channel } => format!("deploy `{channel}`"),
        RequestComponent::Evaluate { channel, group } => {
            format!("evaluate `{group}` on `{channel}`")
        }
    }
}

fn call_detail(call: &ActionCall) -> String {
    match &call.input {
        CallInput::Verify => call.action_id.clone(),
        CallInput::Deploy { channel } => format!("{}/{channel}", call.action_id),
        CallInput::Evaluate { channel, group } => {
            format!("{}/{channel}/{group}", call.action_id)
        }
    }
}

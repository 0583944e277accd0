use std::sync::Arc;

use netforge_core::actions::{
    builtin_descriptor, ActionError, ActionHandler, ActionInput, ActionOutcome,
    ActionRegistry, InvocationContext, RegistryEntry,
};
use netforge_core::orchestrator::{
    compute_overheads, load_record, Activity, Engine, EngineOptions, ExperimentStatus, Workspace,
};
use netforge_core::planner::{Request, Status};
use netforge_core::sim::load_case_study;
use serde_json::Value;

const LAB: &str = include_str!("../../../bundles/examples/lab.request.json");
const WORKED: &str = include_str!("../../../bundles/examples/lab-worked.request.json");

#[derive(Debug)]
struct Failing;

impl ActionHandler for Failing {
    fn invoke(
        &self,
        _: &InvocationContext<'_>,
        _: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        Ok(ActionOutcome::failure("injected failure"))
    }
}

fn engine(dir: &std::path::Path, registry: ActionRegistry, options: EngineOptions) -> Engine {
    Engine::new(Workspace::new(dir), Arc::new(registry), options).unwrap()
}

fn doc(text: &str) -> (Request, Value) {
    let v: Value = serde_json::from_str(text).unwrap();
    (Request::from_json_value(&v).unwrap(), v)
}

#[test]
fn d11_runs_nine_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), ActionRegistry::case_study(), EngineOptions::default());
    let d11 = load_case_study().into_iter().find(|c| c.id == "d11").unwrap();
    let r = e.run(&d11.request, d11.document).unwrap();
    assert_eq!(r.status, ExperimentStatus::Succeeded);
    assert_eq!(r.calls.len(), 9);
    assert!(r.runtime_state.as_ref().unwrap().is_goal());
    assert_eq!(r.endpoints.len(), 4);
}

#[test]
fn record_round_trips_and_log_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(
        dir.path(),
        ActionRegistry::builtin(&["Verifier", "Depl_PoW_x64", "Depl_PoA_mixed", "Eval_Perf_Eth"])
            .unwrap(),
        EngineOptions::default(),
    );
    let (req, v) = doc(LAB);
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Succeeded);
    assert_eq!(r.endpoints["Intra-lab"].len(), 5);
    assert_eq!(r.endpoints["Inter-lab"].len(), 1);
    assert_eq!(r.datasets.len(), 2);
    for d in &r.datasets {
        assert!(dir.path().join(d).is_file(), "{d}");
    }

    let loaded = load_record(e.workspace(), &r.experiment_id).unwrap();
    assert_eq!(loaded, r);

    let work = r
        .activity_log
        .iter()
        .filter(|x| Activity::WORK.contains(&x.activity))
        .count();
    assert_eq!(work, r.calls.len());
    for pair in r.activity_log.windows(2) {
        assert!(pair[0].end <= pair[1].start, "{pair:?}");
    }
    // Activities tile the experiment: shared boundaries, no untracked gaps.
    let total: u64 = r.activity_log.iter().map(|x| x.duration_ms()).sum();
    assert_eq!(total, r.wall_time_ms());
    let report = compute_overheads(&r.activity_log);
    assert!(report.total_overhead_mean >= 0.0);
}

#[test]
fn injected_deploy_failure_stops_execution() {
    let dir = tempfile::tempdir().unwrap();
    let mut registry = ActionRegistry::new();
    for name in ["Verifier", "Depl_PoW_x64"] {
        registry.push(ActionRegistry::builtin(&[name]).unwrap().entries()[0].clone()).unwrap();
    }
    registry
        .push(RegistryEntry::new(builtin_descriptor("Depl_PoA_mixed").unwrap(), Arc::new(Failing)))
        .unwrap();
    registry.push(ActionRegistry::builtin(&["Eval_Perf_Eth"]).unwrap().entries()[0].clone()).unwrap();
    let e = engine(dir.path(), registry, EngineOptions::default());
    let (req, v) = doc(LAB);
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Failed);
    let state = r.runtime_state.unwrap();
    let failed: Vec<usize> = state
        .components()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Status::Failed)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(failed.len(), 1);
    assert!(!state.is_goal());
    // Inter-lab deployed, Intra-lab failed, no evaluations ran.
    assert_eq!(r.calls.len(), 3);
    assert!(!r.activity_log.iter().any(|x| x.activity == Activity::Evaluation));
    assert!(r.diagnostics.iter().any(|d| d.contains("injected failure")));
}

#[test]
fn keep_going_evaluates_the_deployed_channel() {
    let dir = tempfile::tempdir().unwrap();
    let mut registry = ActionRegistry::new();
    registry
        .push(RegistryEntry::new(builtin_descriptor("Depl_PoW_x64").unwrap(), Arc::new(Failing)))
        .unwrap();
    for name in ["Depl_PoA_mixed", "Eval_Perf_Eth"] {
        registry.push(ActionRegistry::builtin(&[name]).unwrap().entries()[0].clone()).unwrap();
    }
    let options = EngineOptions {
        fail_fast: false,
        ..EngineOptions::default()
    };
    let e = engine(dir.path(), registry, options);
    let (req, v) = doc(LAB);
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Failed);
    let evaluated: Vec<&str> = r
        .calls
        .iter()
        .filter(|c| c.action_id == "Eval_Perf_Eth")
        .map(|c| if c.success { "ok" } else { "fail" })
        .collect();
    assert_eq!(evaluated, ["ok"]);
    assert!(r.diagnostics.iter().any(|d| d.starts_with("skipped")));
    let state = r.runtime_state.unwrap();
    assert_eq!(state.components().iter().filter(|s| **s == Status::Failed).count(), 1);
}

#[test]
fn verifier_errors_abort_before_deploy() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), ActionRegistry::case_study(), EngineOptions::default());
    let mut v: Value = serde_json::from_str(LAB).unwrap();
    // A host without `os` is a structural error but does not affect matching.
    for vertex in v["model"]["vertices"].as_array_mut().unwrap() {
        if vertex["id"] == "Onboard 1" {
            vertex["props"].as_object_mut().unwrap().remove("os");
        }
    }
    let req = Request::from_json_value(&v).unwrap();
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Failed);
    assert_eq!(r.calls.len(), 1);
    assert_eq!(r.runtime_state.unwrap().v, Status::Failed);
    assert!(r.verification.unwrap().has_errors());
}

#[test]
fn empty_plan_succeeds_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), ActionRegistry::new(), EngineOptions::default());
    let v = serde_json::json!({"model": {"vertices": [], "edges": []}, "metrics": []});
    let req = Request::from_json_value(&v).unwrap();
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Succeeded);
    assert!(r.calls.is_empty());
    assert!(!r
        .activity_log
        .iter()
        .any(|x| Activity::WORK.contains(&x.activity)));
}

#[test]
fn unsatisfiable_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(
        dir.path(),
        ActionRegistry::builtin(&["Depl_PoA_mixed", "Eval_Perf_Eth"]).unwrap(),
        EngineOptions::default(),
    );
    let (req, v) = doc(LAB);
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Unsatisfiable);
    assert!(r.calls.is_empty());
    assert!(!r.plan.unwrap().is_satisfiable());
}

#[test]
fn teardown_after_and_explicit_teardown() {
    let dir = tempfile::tempdir().unwrap();
    let registry = ActionRegistry::builtin(&["Depl_PoW_x64", "Depl_PoA_mixed", "Eval_Perf_Eth"])
        .unwrap();
    let options = EngineOptions {
        teardown_after: true,
        ..EngineOptions::default()
    };
    let e = engine(dir.path(), registry.clone(), options);
    let (req, v) = doc(LAB);
    let r = e.run(&req, v.clone()).unwrap();
    assert!(r.torn_down);
    assert_eq!(e.targets().deployed_count(), 0);

    let e = engine(dir.path(), registry, EngineOptions::default());
    let r = e.run(&req, v).unwrap();
    assert!(!r.torn_down);
    assert!(e.targets().is_deployed(&r.experiment_id, "Intra-lab"));
    let t = e.teardown(&r.experiment_id).unwrap();
    assert!(t.torn_down);
    assert!(!e.targets().is_deployed(&r.experiment_id, "Intra-lab"));
    // Idempotent.
    assert!(e.teardown(&r.experiment_id).unwrap().torn_down);
}

#[test]
fn worked_request_runs_six_calls() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(
        dir.path(),
        ActionRegistry::builtin(&[
            "Verifier",
            "Depl_PoW_x64",
            "Depl_PoA_mixed",
            "Eval_Perf_Eth",
            "EvalPerformanceEthereum",
        ])
        .unwrap(),
        EngineOptions::default(),
    );
    let (req, v) = doc(WORKED);
    let r = e.run(&req, v).unwrap();
    assert_eq!(r.status, ExperimentStatus::Succeeded);
    assert_eq!(r.calls.len(), 6);
    assert_eq!(r.calls[0].action_id, "Verifier");
}

#[test]
fn unknown_ids_and_distinct_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), ActionRegistry::new(), EngineOptions::default());
    assert!(e.load_record("nope").is_err());
    assert!(e.load_record("../x").is_err());
    let a = e.create_experiment(Value::Null).unwrap();
    let b = e.create_experiment(Value::Null).unwrap();
    assert!(a.experiment_id < b.experiment_id);
    assert!(e.workspace().record_path(&a.experiment_id).is_file());
    assert_eq!(e.load_record(&a.experiment_id).unwrap().status, ExperimentStatus::Created);
}

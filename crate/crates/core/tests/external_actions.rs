#![cfg(unix)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use netforge_core::actions::{load_registry, ActionError, ActionKind};
use netforge_core::orchestrator::{Engine, EngineOptions, ExperimentStatus, Workspace};
use netforge_core::planner::{plan, Request};
use serde_json::Value;

const LAB: &str = include_str!("../../../bundles/examples/lab.request.json");

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

const POW_DESCRIBE: &str = r#"{"action_id":"ExtPoW","kind":"deployer","platforms":["Ethereum PoW"],"archs":["x64"],"supports_mixed":false,"teardown":true}"#;

fn pow_deployer(dir: &Path, deploy_body: &str) -> PathBuf {
    script(
        dir,
        "ext-pow",
        &format!(
            "case \"$1\" in\n\
             describe) echo '{POW_DESCRIBE}' ;;\n\
             deploy) {deploy_body} ;;\n\
             teardown) cat > /dev/null; echo '{{}}' ;;\n\
             *) echo \"unknown verb $1\" >&2; exit 4 ;;\n\
             esac\n"
        ),
    )
}

fn manifest(dir: &Path, lines: &[&str]) -> PathBuf {
    let path = dir.join("pool.manifest");
    std::fs::write(&path, lines.join("\n")).unwrap();
    path
}

fn run_lab(dir: &Path, manifest: &Path) -> netforge_core::ExperimentRecord {
    let registry = load_registry(manifest, Duration::from_secs(2)).unwrap();
    let ws = dir.join("ws");
    let engine = Engine::new(Workspace::new(ws), Arc::new(registry), EngineOptions {
        timeout: Duration::from_millis(500),
        ..EngineOptions::default()
    })
    .unwrap();
    let doc: Value = serde_json::from_str(LAB).unwrap();
    engine.run(&Request::from_json_value(&doc).unwrap(), doc).unwrap()
}

#[test]
fn external_deployer_serves_a_channel() {
    let dir = tempfile::tempdir().unwrap();
    pow_deployer(
        dir.path(),
        r#"cat > "$(dirname "$0")/last-request.json"; echo '{"status":"success","endpoints":["http://workstation:8545"]}'"#,
    );
    let m = manifest(
        dir.path(),
        &["exec:ext-pow   # relative to the manifest", "builtin:Depl_PoA_mixed", "builtin:Eval_Perf_Eth"],
    );
    let registry = load_registry(&m, Duration::from_secs(2)).unwrap();
    let desc = &registry.get("ExtPoW").unwrap().descriptor;
    assert_eq!(desc.kind, ActionKind::Deployer);
    assert!(desc.platforms.contains("ethereum-pow"));
    assert!(registry.load_span().is_some());

    let doc: Value = serde_json::from_str(LAB).unwrap();
    let p = plan(&Request::from_json_value(&doc).unwrap(), &registry).unwrap();
    assert_eq!(p.plan().unwrap().calls[0].action_id, "ExtPoW");

    let r = run_lab(dir.path(), &m);
    assert_eq!(r.status, ExperimentStatus::Succeeded, "{:?}", r.diagnostics);
    assert_eq!(r.endpoints["Inter-lab"], ["http://workstation:8545"]);

    let sent: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("last-request.json")).unwrap())
            .unwrap();
    assert_eq!(sent["input_kind"], "deploy");
    assert_eq!(sent["experiment_id"], r.experiment_id.as_str());
    let vertices = sent["channel_fragment"]["vertices"].as_array().unwrap();
    assert!(vertices.iter().any(|v| v["id"] == "Inter-lab"));
    assert!(!vertices.iter().any(|v| v["id"] == "Intra-lab"));
}

#[test]
fn nonzero_exit_is_a_failure_with_stderr() {
    let dir = tempfile::tempdir().unwrap();
    pow_deployer(dir.path(), "cat > /dev/null; echo 'geth refused to start' >&2; exit 3");
    let m = manifest(dir.path(), &["exec:ext-pow", "builtin:Depl_PoA_mixed", "builtin:Eval_Perf_Eth"]);
    let r = run_lab(dir.path(), &m);
    assert_eq!(r.status, ExperimentStatus::Failed);
    let diag = r.diagnostics.join("\n");
    assert!(diag.contains("status 3"), "{diag}");
    assert!(diag.contains("geth refused to start"), "{diag}");
}

#[test]
fn garbage_response_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    pow_deployer(dir.path(), "cat > /dev/null; echo 'not json'");
    let m = manifest(dir.path(), &["exec:ext-pow", "builtin:Depl_PoA_mixed", "builtin:Eval_Perf_Eth"]);
    let r = run_lab(dir.path(), &m);
    assert_eq!(r.status, ExperimentStatus::Failed);
    assert!(r.diagnostics.join("\n").contains("not JSON"));
}

#[test]
fn reported_failure_keeps_its_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    pow_deployer(
        dir.path(),
        r#"cat > /dev/null; echo '{"status":"failure","diagnostics":"no quorum"}'"#,
    );
    let m = manifest(dir.path(), &["exec:ext-pow", "builtin:Depl_PoA_mixed", "builtin:Eval_Perf_Eth"]);
    let r = run_lab(dir.path(), &m);
    assert_eq!(r.status, ExperimentStatus::Failed);
    assert!(r.diagnostics.join("\n").contains("no quorum"));
}

#[test]
fn slow_action_times_out() {
    let dir = tempfile::tempdir().unwrap();
    pow_deployer(dir.path(), "exec sleep 5");
    let m = manifest(dir.path(), &["exec:ext-pow", "builtin:Depl_PoA_mixed", "builtin:Eval_Perf_Eth"]);
    let started = std::time::Instant::now();
    let r = run_lab(dir.path(), &m);
    assert!(started.elapsed() < Duration::from_secs(4));
    assert_eq!(r.status, ExperimentStatus::Failed);
    assert!(r.diagnostics.join("\n").contains("timed out"));
}

#[test]
fn bad_descriptors_and_manifests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    script(dir.path(), "broken", "echo '{\"action_id\":\"X\"}'");
    let m = manifest(dir.path(), &["exec:broken"]);
    assert!(matches!(
        load_registry(&m, Duration::from_secs(2)),
        Err(ActionError::Describe { .. })
    ));

    let m = manifest(dir.path(), &["exec:missing-binary"]);
    assert!(matches!(
        load_registry(&m, Duration::from_secs(2)),
        Err(ActionError::Describe { .. })
    ));

    let m = manifest(dir.path(), &["builtin:DeplPoA", "builtin:deplpoa"]);
    assert!(matches!(
        load_registry(&m, Duration::from_secs(2)),
        Err(ActionError::DuplicateId(_))
    ));

    let m = manifest(dir.path(), &["docker:image"]);
    assert!(matches!(
        load_registry(&m, Duration::from_secs(2)),
        Err(ActionError::Manifest(_))
    ));
}

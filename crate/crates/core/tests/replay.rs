use std::sync::Arc;

use netforge_core::actions::ActionRegistry;
use netforge_core::orchestrator::{replay_case_study, EngineOptions, ExperimentStatus, Workspace};

#[test]
fn one_round_counts() {
    let dir = tempfile::tempdir().unwrap();
    let s = replay_case_study(
        &Workspace::new(dir.path()),
        1,
        Arc::new(ActionRegistry::case_study()),
        EngineOptions::default(),
    )
    .unwrap();
    assert_eq!(s.experiments, 13);
    assert_eq!(s.invocations, 73);
    assert_eq!(s.dataset_files, 59);
    assert_eq!(s.succeeded, 13);
    let counts: Vec<(&str, usize)> = s.per_action.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    assert_eq!(
        counts,
        [
            ("DeplBaseline", 1),
            ("DeplPoA", 8),
            ("DeplPoA_x64_ARM", 8),
            ("DeplPoW_x64_ARM", 13),
            ("EvalBaseline", 1),
            ("EvalPerformanceEthereum", 29),
            ("Verifier", 13)
        ]
    );
    assert!(s.mean_experiment_overhead_ms < 100.0, "{}", s.mean_experiment_overhead_ms);
    assert!(s.results.iter().all(|r| r.status == ExperimentStatus::Succeeded));
}

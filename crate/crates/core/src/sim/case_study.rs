//! The bundled thirteen-experiment case study: a baseline and twelve
//! architectures (D1 to D12) on a two-cluster edge testbed.
//!
//! The BND graphs are reconstructions. Channel counts, coverage, miner
//! placement and consensus follow the architecture table; node placement is
//! chosen so that planning against the seven-action pool reproduces the
//! per-experiment invocation counts. See `bundles/case-study/README.md`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::planner::{ExecutionPlan, MetricRequest, Request};

pub const CASE_STUDY_EXPERIMENT_IDS: &[&str] = &[
    "baseline", "d01", "d02", "d03", "d04", "d05", "d06", "d07", "d08", "d09", "d10", "d11", "d12",
];

const EXPECTED: &str = include_str!("../../../../bundles/case-study/expected.json");
const MANIFEST: &str = include_str!("../../../../bundles/registries/case-study.manifest");

fn model_text(file: &str) -> &'static str {
    match file {
        "baseline.bnd.json" => include_str!("../../../../bundles/case-study/baseline.bnd.json"),
        "d01.bnd.json" => include_str!("../../../../bundles/case-study/d01.bnd.json"),
        "d02.bnd.json" => include_str!("../../../../bundles/case-study/d02.bnd.json"),
        "d03.bnd.json" => include_str!("../../../../bundles/case-study/d03.bnd.json"),
        "d04.bnd.json" => include_str!("../../../../bundles/case-study/d04.bnd.json"),
        "d05.bnd.json" => include_str!("../../../../bundles/case-study/d05.bnd.json"),
        "d06.bnd.json" => include_str!("../../../../bundles/case-study/d06.bnd.json"),
        "d07.bnd.json" => include_str!("../../../../bundles/case-study/d07.bnd.json"),
        "d08.bnd.json" => include_str!("../../../../bundles/case-study/d08.bnd.json"),
        "d09.bnd.json" => include_str!("../../../../bundles/case-study/d09.bnd.json"),
        "d10.bnd.json" => include_str!("../../../../bundles/case-study/d10.bnd.json"),
        "d11.bnd.json" => include_str!("../../../../bundles/case-study/d11.bnd.json"),
        "d12.bnd.json" => include_str!("../../../../bundles/case-study/d12.bnd.json"),
        other => panic!("no bundled model `{other}`"),
    }
}

/// Expected shape of a plan: total call count and calls per action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSignature {
    pub calls: usize,
    pub actions: BTreeMap<String, usize>,
}

impl PlanSignature {
    pub fn of(plan: &ExecutionPlan) -> Self {
        let mut actions = BTreeMap::new();
        for c in &plan.calls {
            *actions.entry(c.action_id.clone()).or_insert(0) += 1;
        }
        Self {
            calls: plan.calls.len(),
            actions,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseStudyExperiment {
    pub id: String,
    pub request: Request,
    /// The request as a JSON document, the form submitted to the engine.
    pub document: Value,
    pub expected: PlanSignature,
}

#[derive(Deserialize)]
struct ExpectedFile {
    experiments: Vec<ExpectedEntry>,
}

#[derive(Deserialize)]
struct ExpectedEntry {
    id: String,
    model: String,
    metrics: Vec<MetricRequest>,
    expected: PlanSignature,
}

/// Baseline first, then D1 to D12.
pub fn load_case_study() -> Vec<CaseStudyExperiment> {
    let file: ExpectedFile = serde_json::from_str(EXPECTED).expect("bundled expected.json");
    file.experiments
        .into_iter()
        .map(|e| {
            let model: Value =
                serde_json::from_str(model_text(&e.model)).expect("bundled model is JSON");
            let document = serde_json::json!({ "model": model, "metrics": e.metrics });
            let request = Request::from_json_value(&document).expect("bundled request is valid");
            CaseStudyExperiment {
                id: e.id,
                request,
                document,
                expected: e.expected,
            }
        })
        .collect()
}

/// Registry manifest naming the seven case-study actions.
pub fn case_study_manifest() -> &'static str {
    MANIFEST
}

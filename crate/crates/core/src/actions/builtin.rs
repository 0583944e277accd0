//! In-process actions backed by the simulated target infrastructure.

use std::sync::Arc;

use super::{
    ActionDescriptor, ActionError, ActionHandler, ActionInput, ActionOutcome, InvocationContext,
    OutcomePayload, RegistryEntry,
};
use crate::bnd::{validate_structure, Finding, Severity, VerificationReport};
use crate::planner::Request;
use crate::sim::{generate_dataset, Phase, SimChannelInstance, SyntheticDatasetSpec};

pub(crate) const CASE_STUDY_POOL: &[&str] = &[
    "Verifier",
    "DeplPoA",
    "DeplPoA_x64_ARM",
    "DeplPoW_x64_ARM",
    "DeplBaseline",
    "EvalPerformanceEthereum",
    "EvalBaseline",
];

const LAB_POOL: &[&str] = &["Depl_PoW_x64", "Depl_PoA_mixed", "Eval_Perf_Eth"];

/// Names accepted by `builtin:<name>` manifest lines.
pub fn builtin_names() -> Vec<&'static str> {
    CASE_STUDY_POOL.iter().chain(LAB_POOL).copied().collect()
}

/// Descriptor of a built-in action. Name lookup ignores ASCII case.
pub fn builtin_descriptor(name: &str) -> Option<ActionDescriptor> {
    let canonical = builtin_names()
        .into_iter()
        .find(|n| n.eq_ignore_ascii_case(name))?;
    let both = ["x64", "armv7"];
    let desc = match canonical {
        "Verifier" => ActionDescriptor::verifier(
            "Verifier",
            "Structural verification: schema validation and BND consistency checks",
        ),
        "DeplPoA" => ActionDescriptor::deployer("DeplPoA", ["Ethereum PoA (Clique)"], ["x64"], false)
            .with_description("Deploys Clique PoA Ethereum channels on x64 hosts"),
        "DeplPoA_x64_ARM" => {
            ActionDescriptor::deployer("DeplPoA_x64_ARM", ["Ethereum PoA (Clique)"], both, true)
                .with_description("Deploys Clique PoA Ethereum channels on mixed x64/ARMv7 hosts")
        }
        "DeplPoW_x64_ARM" => {
            ActionDescriptor::deployer("DeplPoW_x64_ARM", ["Ethereum PoW (Ethash)"], both, true)
                .with_description("Deploys Ethash PoW Ethereum channels on mixed x64/ARMv7 hosts")
        }
        "DeplBaseline" => ActionDescriptor::deployer("DeplBaseline", ["Baseline"], both, true)
            .with_description("Registers a baseline channel without active blockchain nodes"),
        "EvalPerformanceEthereum" => ActionDescriptor::evaluator(
            "EvalPerformanceEthereum",
            ["Ethereum"],
            ["performance", "resource-consumption"],
        )
        .with_description("Benchmarks Ethereum channels while sampling host resource usage"),
        "EvalBaseline" => {
            ActionDescriptor::evaluator("EvalBaseline", ["Baseline"], ["resource-consumption"])
                .with_description("Measures idle resource consumption of baseline channels")
        }
        "Depl_PoW_x64" => ActionDescriptor::deployer("Depl_PoW_x64", ["Ethereum PoW"], ["x64"], true)
            .with_description("PoW Ethereum deployer for x64 hosts"),
        "Depl_PoA_mixed" => {
            ActionDescriptor::deployer("Depl_PoA_mixed", ["Ethereum PoA"], both, true)
                .with_description("PoA Ethereum deployer for x64 and ARMv7 hosts")
        }
        "Eval_Perf_Eth" => {
            ActionDescriptor::evaluator("Eval_Perf_Eth", ["Ethereum"], ["performance"])
                .with_description("Latency and throughput benchmark for Ethereum channels")
        }
        _ => return None,
    };
    let mut desc = desc.normalized().expect("built-in descriptors are well formed");
    if desc.kind == super::ActionKind::Deployer {
        desc.teardown = true;
    }
    Some(desc)
}

pub(crate) fn builtin_entry(name: &str) -> Result<RegistryEntry, ActionError> {
    let descriptor = builtin_descriptor(name)
        .ok_or_else(|| ActionError::Manifest(format!("unknown built-in action `{name}`")))?;
    let handler: Arc<dyn ActionHandler> = match descriptor.action_id.as_str() {
        "Verifier" => Arc::new(SimVerifier),
        "EvalPerformanceEthereum" => Arc::new(SimEvaluator {
            companion_resources: true,
        }),
        "EvalBaseline" | "Eval_Perf_Eth" => Arc::new(SimEvaluator {
            companion_resources: false,
        }),
        _ => Arc::new(SimDeployer),
    };
    Ok(RegistryEntry::new(descriptor, handler))
}

/// Parses the request and runs the structural validator over its model.
#[derive(Debug)]
struct SimVerifier;

impl ActionHandler for SimVerifier {
    fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        let ActionInput::Verify { request } = input else {
            return Ok(ActionOutcome::failure("verifier expects a verify input"));
        };
        ctx.latency.pause(Phase::Verify, ctx.experiment_id, ctx.seed);
        let report = match Request::from_json_value(request) {
            Ok(req) => validate_structure(&req.model),
            Err(e) => VerificationReport::from_findings(vec![Finding {
                severity: Severity::Error,
                rule: "schema".into(),
                message: e.to_string(),
                entities: vec![],
            }]),
        };
        Ok(ActionOutcome::success(OutcomePayload::VerifyReport(report)))
    }
}

#[derive(Debug)]
struct SimDeployer;

impl ActionHandler for SimDeployer {
    fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        match input {
            ActionInput::Deploy { fragment } => {
                ctx.latency.pause(Phase::Deploy, ctx.experiment_id, ctx.seed);
                match ctx.targets.provision(ctx.experiment_id, fragment) {
                    Ok(instance) => Ok(ActionOutcome::success(OutcomePayload::DeployResult {
                        channel_id: instance.channel_id,
                        endpoints: instance.endpoints,
                    })),
                    Err(e) => Ok(ActionOutcome::failure(e.to_string())),
                }
            }
            ActionInput::Teardown { channel_id, .. } => {
                match ctx.targets.teardown(ctx.experiment_id, channel_id) {
                    Ok(()) => Ok(ActionOutcome::success(OutcomePayload::TeardownResult)),
                    Err(e) => Ok(ActionOutcome::failure(e.to_string())),
                }
            }
            _ => Ok(ActionOutcome::failure("deployer expects deploy or teardown input")),
        }
    }
}

/// Writes synthetic datasets for the requested metric group. With
/// `companion_resources`, a performance run also emits the host resource
/// trace sampled during the benchmark.
#[derive(Debug)]
struct SimEvaluator {
    companion_resources: bool,
}

impl ActionHandler for SimEvaluator {
    fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        let ActionInput::Evaluate {
            fragment,
            metric_group,
            endpoints,
        } = input
        else {
            return Ok(ActionOutcome::failure("evaluator expects an evaluate input"));
        };
        // Channels deployed by non-simulated actions are known only through
        // the endpoints their deployer reported.
        let instance = match ctx.targets.get(ctx.experiment_id, fragment.channel_id()) {
            Ok(i) => Ok(i),
            Err(e) if endpoints.is_empty() => Err(e),
            Err(_) => SimChannelInstance::observed(ctx.experiment_id, fragment, endpoints),
        };
        let instance = match instance {
            Ok(i) => i,
            Err(e) => return Ok(ActionOutcome::failure(e.to_string())),
        };
        ctx.latency.pause(Phase::Evaluate, ctx.experiment_id, ctx.seed);
        let group = crate::token::normalize(metric_group);
        let mut groups = vec![group.clone()];
        if self.companion_resources && group == "performance" {
            groups.push("resource-consumption".into());
        }
        let mut datasets = Vec::new();
        for g in groups {
            let spec = SyntheticDatasetSpec::new(&g, ctx.dataset_rows, ctx.seed);
            match generate_dataset(&instance, &spec, &ctx.dataset_dir) {
                Ok(path) => datasets.push(path.to_string_lossy().into_owned()),
                Err(e) => return Ok(ActionOutcome::failure(e.to_string())),
            }
        }
        Ok(ActionOutcome::success(OutcomePayload::EvalResult { datasets }))
    }
}

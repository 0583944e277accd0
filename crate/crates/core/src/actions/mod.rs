//! Composable actions.
//!
//! An action is a self-contained unit of automation of one of three kinds:
//! verifiers check an incoming request, deployers bring up one channel and
//! evaluators measure one metric group on one deployed channel. Actions are
//! chosen by matching their [`ActionDescriptor`] against the requirements of
//! a request component.

mod builtin;
mod external;
mod registry;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bnd::{ChannelFragment, ChannelRequirements, VerificationReport};
use crate::sim::{LatencyModel, SimTargets};
use crate::token::{self, normalize};

pub use builtin::{builtin_descriptor, builtin_names};
pub use external::{describe_external, ExternalAction};
pub use registry::{load_registry, load_registry_str, ActionRegistry, RegistryEntry};

/// Default bound on one external action invocation.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Verifier,
    Deployer,
    Evaluator,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::Verifier => "verifier",
            ActionKind::Deployer => "deployer",
            ActionKind::Evaluator => "evaluator",
        })
    }
}

/// Capability features of an action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub action_id: String,
    pub kind: ActionKind,
    #[serde(default)]
    pub platforms: BTreeSet<String>,
    #[serde(default)]
    pub archs: BTreeSet<String>,
    #[serde(default)]
    pub supports_mixed: bool,
    #[serde(default)]
    pub metric_groups: BTreeSet<String>,
    /// Supported host operating systems; empty means unspecified.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub os: BTreeSet<String>,
    /// Deployers only: whether the action can tear its channel down.
    #[serde(default)]
    pub teardown: bool,
    #[serde(default)]
    pub description: String,
}

impl ActionDescriptor {
    pub fn deployer<P, A>(id: &str, platforms: P, archs: A, supports_mixed: bool) -> Self
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        A: IntoIterator,
        A::Item: AsRef<str>,
    {
        Self {
            action_id: id.to_string(),
            kind: ActionKind::Deployer,
            platforms: tokens(platforms),
            archs: tokens(archs),
            supports_mixed,
            metric_groups: BTreeSet::new(),
            os: BTreeSet::new(),
            teardown: false,
            description: String::new(),
        }
    }

    pub fn evaluator<P, G>(id: &str, platforms: P, metric_groups: G) -> Self
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        G: IntoIterator,
        G::Item: AsRef<str>,
    {
        Self {
            action_id: id.to_string(),
            kind: ActionKind::Evaluator,
            platforms: tokens(platforms),
            archs: BTreeSet::new(),
            supports_mixed: false,
            metric_groups: tokens(metric_groups),
            os: BTreeSet::new(),
            teardown: false,
            description: String::new(),
        }
    }

    pub fn verifier(id: &str, description: &str) -> Self {
        Self {
            action_id: id.to_string(),
            kind: ActionKind::Verifier,
            platforms: BTreeSet::new(),
            archs: BTreeSet::new(),
            supports_mixed: false,
            metric_groups: BTreeSet::new(),
            os: BTreeSet::new(),
            teardown: false,
            description: description.to_string(),
        }
    }

    pub fn with_description(mut self, description: &str) -> Self {
        self.description = description.to_string();
        self
    }

    /// Normalizes every capability token and checks the per-kind shape.
    pub fn normalized(mut self) -> Result<Self, ActionError> {
        let norm = |set: BTreeSet<String>| -> BTreeSet<String> {
            set.iter().map(|t| normalize(t)).filter(|t| !t.is_empty()).collect()
        };
        self.platforms = norm(self.platforms);
        self.archs = norm(self.archs);
        self.metric_groups = norm(self.metric_groups);
        self.os = norm(self.os);
        if self.action_id.trim().is_empty() {
            return Err(ActionError::InvalidDescriptor("empty action_id".into()));
        }
        let bad = |why: &str| {
            Err(ActionError::InvalidDescriptor(format!(
                "{} `{}`: {why}",
                self.kind, self.action_id
            )))
        };
        match self.kind {
            ActionKind::Deployer => {
                if self.platforms.is_empty() || self.archs.is_empty() {
                    return bad("deployers need platforms and archs");
                }
                if !self.metric_groups.is_empty() {
                    return bad("deployers carry no metric groups");
                }
            }
            ActionKind::Evaluator => {
                if self.platforms.is_empty() || self.metric_groups.is_empty() {
                    return bad("evaluators need platforms and metric_groups");
                }
                if !self.archs.is_empty() {
                    return bad("evaluators carry no archs");
                }
            }
            ActionKind::Verifier => {
                if !(self.platforms.is_empty()
                    && self.archs.is_empty()
                    && self.metric_groups.is_empty())
                {
                    return bad("verifiers carry only a description");
                }
            }
        }
        Ok(self)
    }
}

fn tokens<I>(items: I) -> BTreeSet<String>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    items.into_iter().map(|s| normalize(s.as_ref())).collect()
}

/// Matching switches. The OS dimension is ignored unless enabled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    pub match_os: bool,
}

/// Whether a deployer can handle a channel: platform prefix match, host
/// architectures covered, and mixed-architecture support when needed.
pub fn matches_deployer(
    desc: &ActionDescriptor,
    req: &ChannelRequirements,
) -> Result<bool, ActionError> {
    matches_deployer_with(desc, req, MatchOptions::default())
}

pub fn matches_deployer_with(
    desc: &ActionDescriptor,
    req: &ChannelRequirements,
    opts: MatchOptions,
) -> Result<bool, ActionError> {
    expect_kind(desc, ActionKind::Deployer)?;
    let platform = token::matches_any(&req.platform, &desc.platforms);
    let archs = req.archs.is_subset(&desc.archs);
    let mixed = !req.mixed || desc.supports_mixed;
    let os = !opts.match_os || desc.os.is_empty() || req.os.is_subset(&desc.os);
    Ok(platform && archs && mixed && os)
}

/// Whether an evaluator can measure `metric_group` on a channel running `platform`.
pub fn matches_evaluator(
    desc: &ActionDescriptor,
    platform: &str,
    metric_group: &str,
) -> Result<bool, ActionError> {
    expect_kind(desc, ActionKind::Evaluator)?;
    Ok(token::matches_any(platform, &desc.platforms)
        && desc.metric_groups.contains(&normalize(metric_group)))
}

fn expect_kind(desc: &ActionDescriptor, want: ActionKind) -> Result<(), ActionError> {
    if desc.kind == want {
        Ok(())
    } else {
        Err(ActionError::KindMismatch {
            action_id: desc.action_id.clone(),
            expected: want,
            found: desc.kind,
        })
    }
}

/// Input handed to an action. The variant must match the action's kind;
/// `Teardown` is only valid for deployers.
#[derive(Debug, Clone)]
pub enum ActionInput {
    Verify {
        request: Value,
    },
    Deploy {
        fragment: ChannelFragment,
    },
    Evaluate {
        fragment: ChannelFragment,
        metric_group: String,
        endpoints: Vec<String>,
    },
    Teardown {
        channel_id: String,
        endpoints: Vec<String>,
    },
}

impl ActionInput {
    pub fn verb(&self) -> &'static str {
        match self {
            ActionInput::Verify { .. } => "verify",
            ActionInput::Deploy { .. } => "deploy",
            ActionInput::Evaluate { .. } => "evaluate",
            ActionInput::Teardown { .. } => "teardown",
        }
    }

    pub fn required_kind(&self) -> ActionKind {
        match self {
            ActionInput::Verify { .. } => ActionKind::Verifier,
            ActionInput::Deploy { .. } | ActionInput::Teardown { .. } => ActionKind::Deployer,
            ActionInput::Evaluate { .. } => ActionKind::Evaluator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutcomePayload {
    VerifyReport(VerificationReport),
    DeployResult {
        channel_id: String,
        endpoints: Vec<String>,
    },
    EvalResult {
        datasets: Vec<String>,
    },
    TeardownResult,
    Nothing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub status: OutcomeStatus,
    pub payload: OutcomePayload,
    pub diagnostics: String,
}

impl ActionOutcome {
    pub fn success(payload: OutcomePayload) -> Self {
        Self {
            status: OutcomeStatus::Success,
            payload,
            diagnostics: String::new(),
        }
    }

    /// A failed outcome. Diagnostics are never empty.
    pub fn failure(diagnostics: impl Into<String>) -> Self {
        let mut diagnostics = diagnostics.into();
        if diagnostics.trim().is_empty() {
            diagnostics = "action failed without diagnostics".into();
        }
        Self {
            status: OutcomeStatus::Failure,
            payload: OutcomePayload::Nothing,
            diagnostics,
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == OutcomeStatus::Success
    }
}

/// Everything an invocation may need besides its input.
#[derive(Debug, Clone)]
pub struct InvocationContext<'a> {
    pub experiment_id: &'a str,
    /// Directory evaluators write their datasets into.
    pub dataset_dir: PathBuf,
    pub targets: &'a SimTargets,
    pub seed: u64,
    pub dataset_rows: usize,
    pub latency: LatencyModel,
    pub timeout: Duration,
}

/// Executes one action. Built-in actions run in-process; external ones
/// through the subprocess protocol.
pub trait ActionHandler: Send + Sync + fmt::Debug {
    fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError>;
}

#[derive(Debug, thiserror::Error)]
pub enum ActionError {
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("describe failed for `{path}`: {reason}")]
    Describe { path: String, reason: String },
    #[error("duplicate action id `{0}`")]
    DuplicateId(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("action `{action_id}` is a {found}, expected a {expected}")]
    KindMismatch {
        action_id: String,
        expected: ActionKind,
        found: ActionKind,
    },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("protocol error from `{action_id}`: {reason}")]
    Protocol { action_id: String, reason: String },
    #[error("action `{action_id}` timed out after {timeout:?}")]
    Timeout { action_id: String, timeout: Duration },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(platform: &str, archs: &[&str]) -> ChannelRequirements {
        ChannelRequirements::new("ch", platform, archs.iter().copied())
    }

    #[test]
    fn pow_deployer_matches_inter_lab() {
        let d = ActionDescriptor::deployer(
            "DeplPoW_x64_ARM",
            ["Ethereum PoW (Ethash)"],
            ["x64", "armv7"],
            true,
        );
        assert!(matches_deployer(&d, &req("ethereum-pow", &["x64"])).unwrap());
    }

    #[test]
    fn x64_only_deployer_rejects_mixed_channel() {
        let d = ActionDescriptor::deployer("DeplPoA", ["Ethereum PoA (Clique)"], ["x64"], false);
        let r = req("ethereum-poa", &["x64", "armv7"]);
        assert!(r.mixed);
        assert!(!matches_deployer(&d, &r).unwrap());
    }

    #[test]
    fn empty_archs_match_on_platform_alone() {
        let d = ActionDescriptor::deployer("DeplBaseline", ["Baseline"], ["x64", "armv7"], true);
        assert!(matches_deployer(&d, &req("baseline", &[])).unwrap());
        let d = ActionDescriptor::deployer("DeplPoA", ["Ethereum PoA (Clique)"], ["x64"], false);
        assert!(matches_deployer(&d, &req("ethereum-poa", &[])).unwrap());
        assert!(!matches_deployer(&d, &req("baseline", &[])).unwrap());
    }

    #[test]
    fn mixed_requires_support() {
        let d = ActionDescriptor::deployer("d", ["ethereum-poa"], ["x64", "armv7"], false);
        assert!(!matches_deployer(&d, &req("ethereum-poa", &["x64", "armv7"])).unwrap());
        assert!(matches_deployer(&d, &req("ethereum-poa", &["armv7"])).unwrap());
    }

    #[test]
    fn os_only_checked_when_enabled() {
        let mut d = ActionDescriptor::deployer("d", ["ethereum-poa"], ["x64"], false);
        d.os = ["ubuntu".to_string()].into();
        let mut r = req("ethereum-poa", &["x64"]);
        r.os = ["windows".to_string()].into();
        assert!(matches_deployer(&d, &r).unwrap());
        assert!(!matches_deployer_with(&d, &r, MatchOptions { match_os: true }).unwrap());
    }

    #[test]
    fn evaluator_matching() {
        let e = ActionDescriptor::evaluator(
            "EvalPerformanceEthereum",
            ["Ethereum"],
            ["performance", "resource consumption"],
        );
        assert!(matches_evaluator(&e, "ethereum-poa", "performance").unwrap());
        assert!(matches_evaluator(&e, "ethereum-pow-ethash", "resource-consumption").unwrap());
        assert!(!matches_evaluator(&e, "ethereum-poa", "security").unwrap());
        let b = ActionDescriptor::evaluator("EvalBaseline", ["baseline"], ["resource-consumption"]);
        assert!(!matches_evaluator(&b, "ethereum-pow", "resource-consumption").unwrap());
        assert!(matches_evaluator(&b, "baseline", "resource-consumption").unwrap());
    }

    #[test]
    fn kind_mismatch() {
        let e = ActionDescriptor::evaluator("e", ["ethereum"], ["performance"]);
        assert!(matches!(
            matches_deployer(&e, &req("ethereum", &[])),
            Err(ActionError::KindMismatch { .. })
        ));
        let v = ActionDescriptor::verifier("v", "checks");
        assert!(matches!(
            matches_evaluator(&v, "ethereum", "performance"),
            Err(ActionError::KindMismatch { .. })
        ));
    }

    #[test]
    fn descriptor_shape_rules() {
        assert!(ActionDescriptor::deployer("d", ["ethereum"], Vec::<&str>::new(), false)
            .normalized()
            .is_err());
        assert!(ActionDescriptor::evaluator("e", ["ethereum"], Vec::<&str>::new())
            .normalized()
            .is_err());
        let mut v = ActionDescriptor::verifier("v", "x");
        v.platforms.insert("ethereum".into());
        assert!(v.normalized().is_err());
        let d = ActionDescriptor::deployer("d", ["Ethereum PoA"], ["X64"], false)
            .normalized()
            .unwrap();
        assert!(d.platforms.contains("ethereum-poa"));
        assert!(d.archs.contains("x64"));
    }

    #[test]
    fn failure_diagnostics_never_empty() {
        assert!(!ActionOutcome::failure("").diagnostics.is_empty());
        assert_eq!(ActionOutcome::failure("boom").diagnostics, "boom");
    }
}

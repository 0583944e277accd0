//! Request decomposition and shortest-plan search.
//!
//! A request becomes `n` deployment components (one per channel) and `m`
//! evaluation components (one per metric request). Progress is tracked in a
//! [`RequestState`] tuple and a breadth-first search over unit-cost action
//! calls finds a shortest sequence reaching the all-done state.

mod request;
mod search;
mod state;

use serde::{Deserialize, Serialize};

use crate::bnd::BndError;

pub use request::{MetricRequest, Request};
pub use search::{
    apply_call, available_calls, decompose_request, initial_state, is_goal, plan, step_cost,
    PlanningProblem,
};
pub use state::{RequestState, Status};

/// One unit of work the request decomposes into.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RequestComponent {
    Deploy { channel: String },
    Evaluate { channel: String, group: String },
}

impl RequestComponent {
    pub fn channel(&self) -> &str {
        match self {
            RequestComponent::Deploy { channel } | RequestComponent::Evaluate { channel, .. } => {
                channel
            }
        }
    }

    pub fn is_deploy(&self) -> bool {
        matches!(self, RequestComponent::Deploy { .. })
    }
}

/// Input part of a planned call.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CallInput {
    Verify,
    Deploy { channel: String },
    Evaluate { channel: String, group: String },
}

impl From<&RequestComponent> for CallInput {
    fn from(c: &RequestComponent) -> Self {
        match c {
            RequestComponent::Deploy { channel } => CallInput::Deploy {
                channel: channel.clone(),
            },
            RequestComponent::Evaluate { channel, group } => CallInput::Evaluate {
                channel: channel.clone(),
                group: group.clone(),
            },
        }
    }
}

impl CallInput {
    pub fn component(&self) -> Option<RequestComponent> {
        match self {
            CallInput::Verify => None,
            CallInput::Deploy { channel } => Some(RequestComponent::Deploy {
                channel: channel.clone(),
            }),
            CallInput::Evaluate { channel, group } => Some(RequestComponent::Evaluate {
                channel: channel.clone(),
                group: group.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionCall {
    pub action_id: String,
    pub input: CallInput,
}

impl ActionCall {
    pub fn new(action_id: impl Into<String>, input: CallInput) -> Self {
        Self {
            action_id: action_id.into(),
            input,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub calls: Vec<ActionCall>,
    pub total_cost: u32,
}

/// Result of planning: a shortest plan, or the components no action can handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanDocument", into = "PlanDocument")]
pub enum PlanningOutcome {
    Plan(ExecutionPlan),
    Unsatisfiable { unmatched: Vec<RequestComponent> },
}

impl PlanningOutcome {
    pub fn is_satisfiable(&self) -> bool {
        matches!(self, PlanningOutcome::Plan(_))
    }

    pub fn plan(&self) -> Option<&ExecutionPlan> {
        match self {
            PlanningOutcome::Plan(p) => Some(p),
            PlanningOutcome::Unsatisfiable { .. } => None,
        }
    }

    /// Compact JSON, the exact bytes printed by `plan` and stored in records.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct PlanDocument {
    satisfiable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calls: Option<Vec<ActionCall>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unmatched: Option<Vec<RequestComponent>>,
}

impl From<PlanningOutcome> for PlanDocument {
    fn from(o: PlanningOutcome) -> Self {
        match o {
            PlanningOutcome::Plan(p) => PlanDocument {
                satisfiable: true,
                calls: Some(p.calls),
                cost: Some(p.total_cost),
                unmatched: None,
            },
            PlanningOutcome::Unsatisfiable { unmatched } => PlanDocument {
                satisfiable: false,
                calls: None,
                cost: None,
                unmatched: Some(unmatched),
            },
        }
    }
}

impl TryFrom<PlanDocument> for PlanningOutcome {
    type Error = String;

    fn try_from(d: PlanDocument) -> Result<Self, Self::Error> {
        if d.satisfiable {
            let calls = d.calls.ok_or("satisfiable plan without `calls`")?;
            let total_cost = d.cost.unwrap_or(calls.len() as u32);
            Ok(PlanningOutcome::Plan(ExecutionPlan { calls, total_cost }))
        } else {
            Ok(PlanningOutcome::Unsatisfiable {
                unmatched: d.unmatched.unwrap_or_default(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Model(#[from] BndError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("metric request names unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("call {call} is not applicable in state {state}")]
    IllegalCall { call: String, state: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_json_shape() {
        let o = PlanningOutcome::Plan(ExecutionPlan {
            calls: vec![
                ActionCall::new("Verifier", CallInput::Verify),
                ActionCall::new(
                    "DeplPoA",
                    CallInput::Deploy {
                        channel: "ch1".into(),
                    },
                ),
                ActionCall::new(
                    "EvalPerformanceEthereum",
                    CallInput::Evaluate {
                        channel: "ch1".into(),
                        group: "performance".into(),
                    },
                ),
            ],
            total_cost: 3,
        });
        let text = o.to_json_string();
        assert_eq!(
            text,
            r#"{"satisfiable":true,"calls":[{"action_id":"Verifier","input":{"kind":"verify"}},{"action_id":"DeplPoA","input":{"kind":"deploy","channel":"ch1"}},{"action_id":"EvalPerformanceEthereum","input":{"kind":"evaluate","channel":"ch1","group":"performance"}}],"cost":3}"#
        );
        assert_eq!(serde_json::from_str::<PlanningOutcome>(&text).unwrap(), o);

        let u = PlanningOutcome::Unsatisfiable {
            unmatched: vec![RequestComponent::Deploy {
                channel: "ch4".into(),
            }],
        };
        assert_eq!(
            u.to_json_string(),
            r#"{"satisfiable":false,"unmatched":[{"kind":"deploy","channel":"ch4"}]}"#
        );
    }
}

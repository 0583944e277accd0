use std::collections::{HashSet, VecDeque};

use super::{
    ActionCall, CallInput, ExecutionPlan, PlanError, PlanningOutcome, Request, RequestComponent,
    RequestState, Status,
};
use crate::actions::{
    matches_deployer_with, matches_evaluator, ActionKind, ActionRegistry, MatchOptions,
};
use crate::bnd::{derive_channel_requirements, extract_channel_fragment, ChannelRequirements};

/// Registry entry index and component index (`None` for verification).
type Move = (usize, Option<usize>);

/// Search node: state, parent index (`usize::MAX` at the root), move taken.
type Node = (RequestState, usize, Move);

/// Deployment components sorted by channel, then evaluation components
/// sorted by (channel, group).
pub fn decompose_request(request: &Request) -> Vec<RequestComponent> {
    let mut deploys: Vec<RequestComponent> = crate::bnd::list_channels(&request.model)
        .into_iter()
        .map(|channel| RequestComponent::Deploy { channel })
        .collect();
    deploys.sort();
    let mut evals: Vec<RequestComponent> = request
        .metric_requests
        .iter()
        .map(|m| RequestComponent::Evaluate {
            channel: m.channel.clone(),
            group: m.group.clone(),
        })
        .collect();
    evals.sort();
    deploys.extend(evals);
    deploys
}

/// The all-pending tuple of length `3 + n + m`.
pub fn initial_state(n: usize, m: usize) -> RequestState {
    RequestState::new(n, m)
}

pub fn is_goal(state: &RequestState) -> bool {
    state.is_goal()
}

/// Every call costs one unit.
pub fn step_cost(_state: &RequestState, _call: &ActionCall) -> u32 {
    1
}

/// Components plus what matching needs to know about each of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningProblem {
    components: Vec<RequestComponent>,
    /// Requirements of each deployment component, index-aligned.
    requirements: Vec<ChannelRequirements>,
    /// Platform token of each evaluation component's channel.
    eval_platforms: Vec<String>,
    pub options: MatchOptions,
}

impl PlanningProblem {
    pub fn from_request(request: &Request) -> Result<Self, PlanError> {
        let mut requirements = Vec::new();
        for channel in crate::bnd::list_channels(&request.model) {
            let fragment = extract_channel_fragment(&request.model, &channel)?;
            requirements.push(derive_channel_requirements(&fragment)?);
        }
        let evals = request
            .metric_requests
            .iter()
            .map(|m| (m.channel.clone(), m.group.clone()))
            .collect();
        Self::new(requirements, evals)
    }

    /// Builds a problem straight from channel requirements and
    /// (channel, group) metric requests.
    pub fn new(
        mut requirements: Vec<ChannelRequirements>,
        mut evals: Vec<(String, String)>,
    ) -> Result<Self, PlanError> {
        requirements.sort_by(|a, b| a.channel_id.cmp(&b.channel_id));
        evals.sort();
        let mut components: Vec<RequestComponent> = requirements
            .iter()
            .map(|r| RequestComponent::Deploy {
                channel: r.channel_id.clone(),
            })
            .collect();
        let mut eval_platforms = Vec::with_capacity(evals.len());
        for (channel, group) in evals {
            let req = requirements
                .iter()
                .find(|r| r.channel_id == channel)
                .ok_or_else(|| PlanError::UnknownChannel(channel.clone()))?;
            eval_platforms.push(req.platform.clone());
            components.push(RequestComponent::Evaluate { channel, group });
        }
        Ok(Self {
            components,
            requirements,
            eval_platforms,
            options: MatchOptions::default(),
        })
    }

    pub fn components(&self) -> &[RequestComponent] {
        &self.components
    }

    pub fn requirements(&self) -> &[ChannelRequirements] {
        &self.requirements
    }

    pub fn n(&self) -> usize {
        self.requirements.len()
    }

    pub fn m(&self) -> usize {
        self.eval_platforms.len()
    }

    /// Whether registry entry `entry` can handle component `index`.
    fn handles(&self, registry: &ActionRegistry, entry: usize, index: usize) -> bool {
        let desc = &registry.entries()[entry].descriptor;
        if index < self.n() {
            desc.kind == ActionKind::Deployer
                && matches_deployer_with(desc, &self.requirements[index], self.options)
                    .unwrap_or(false)
        } else {
            let RequestComponent::Evaluate { group, .. } = &self.components[index] else {
                return false;
            };
            desc.kind == ActionKind::Evaluator
                && matches_evaluator(desc, &self.eval_platforms[index - self.n()], group)
                    .unwrap_or(false)
        }
    }

    /// The planning start state. Blocks nothing can act on start done: `v`
    /// when the registry has no verifier, `d` when there are no channels and
    /// `e` when no metrics were requested.
    pub fn start_state(&self, registry: &ActionRegistry) -> RequestState {
        let mut s = initial_state(self.n(), self.m());
        if registry.verifiers().next().is_none() {
            s.v = Status::Done;
        }
        s.refresh_aggregates();
        s
    }

    fn index_of(&self, input: &CallInput) -> Option<usize> {
        let c = input.component()?;
        self.components.iter().position(|x| *x == c)
    }

    /// Unmatched components: those no action of the right kind can handle.
    pub fn unmatched(&self, registry: &ActionRegistry) -> Vec<RequestComponent> {
        (0..self.components.len())
            .filter(|&i| !(0..registry.len()).any(|a| self.handles(registry, a, i)))
            .map(|i| self.components[i].clone())
            .collect()
    }

    /// Breadth-first search from [`start_state`](Self::start_state).
    pub fn search(&self, registry: &ActionRegistry) -> PlanningOutcome {
        let table: Vec<Vec<bool>> = (0..registry.len())
            .map(|a| {
                (0..self.components.len())
                    .map(|i| self.handles(registry, a, i))
                    .collect()
            })
            .collect();

        let start = self.start_state(registry);
        if start.is_goal() {
            return PlanningOutcome::Plan(ExecutionPlan {
                calls: Vec::new(),
                total_cost: 0,
            });
        }
        // (state, parent, move) with move = (entry, component or None for verify)
        let mut nodes: Vec<Node> =
            vec![(start.clone(), usize::MAX, (0, None))];
        let mut visited: HashSet<RequestState> = HashSet::from([start]);
        let mut queue = VecDeque::from([0usize]);

        while let Some(idx) = queue.pop_front() {
            let state = nodes[idx].0.clone();
            for mv in moves(&state, registry) {
                let next = step(&state, mv, &table);
                if !visited.insert(next.clone()) {
                    continue;
                }
                let goal = next.is_goal();
                nodes.push((next, idx, mv));
                if goal {
                    return PlanningOutcome::Plan(self.reconstruct(&nodes, registry));
                }
                queue.push_back(nodes.len() - 1);
            }
        }
        PlanningOutcome::Unsatisfiable {
            unmatched: self.unmatched(registry),
        }
    }

    fn reconstruct(
        &self,
        nodes: &[Node],
        registry: &ActionRegistry,
    ) -> ExecutionPlan {
        let mut calls = Vec::new();
        let mut cost = 0;
        let mut idx = nodes.len() - 1;
        while nodes[idx].1 != usize::MAX {
            let (_, parent, (entry, comp)) = &nodes[idx];
            let input = match comp {
                None => CallInput::Verify,
                Some(i) => CallInput::from(&self.components[*i]),
            };
            let call = ActionCall::new(registry.entries()[*entry].id(), input);
            cost += step_cost(&nodes[*parent].0, &call);
            calls.push(call);
            idx = *parent;
        }
        calls.reverse();
        ExecutionPlan {
            calls,
            total_cost: cost,
        }
    }
}

/// Gated move generation, action-major: verifiers while `v` is pending, then
/// deployers on pending deployments, then evaluators on pending evaluations.
fn moves(state: &RequestState, registry: &ActionRegistry) -> Vec<Move> {
    let entries = registry.entries();
    let pending = |range: std::ops::Range<usize>| -> Vec<usize> {
        range
            .filter(|&i| state.component(i) == Status::Pending)
            .collect()
    };
    let (kind, comps) = if state.v == Status::Pending {
        return entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind() == ActionKind::Verifier)
            .map(|(a, _)| (a, None))
            .collect();
    } else if state.d == Status::Pending {
        (ActionKind::Deployer, pending(0..state.n()))
    } else if state.e == Status::Pending {
        (ActionKind::Evaluator, pending(state.n()..state.n() + state.m()))
    } else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (a, e) in entries.iter().enumerate() {
        if e.kind() == kind {
            out.extend(comps.iter().map(|&i| (a, Some(i))));
        }
    }
    out
}

/// A verifier marks `v` done; a matching action marks its component done;
/// a non-matching one changes nothing.
fn step(
    state: &RequestState,
    (entry, comp): Move,
    table: &[Vec<bool>],
) -> RequestState {
    let mut next = state.clone();
    match comp {
        None => next.v = Status::Done,
        Some(i) => {
            if table[entry][i] {
                next.set_component(i, Status::Done);
            }
        }
    }
    next
}

/// The calls applicable in `state`, in the order the search expands them.
pub fn available_calls(
    problem: &PlanningProblem,
    state: &RequestState,
    registry: &ActionRegistry,
) -> Vec<ActionCall> {
    moves(state, registry)
        .into_iter()
        .map(|(a, comp)| {
            let input = match comp {
                None => CallInput::Verify,
                Some(i) => CallInput::from(&problem.components[i]),
            };
            ActionCall::new(registry.entries()[a].id(), input)
        })
        .collect()
}

/// Applies one call. Fails if the call is not among [`available_calls`].
pub fn apply_call(
    problem: &PlanningProblem,
    state: &RequestState,
    call: &ActionCall,
    registry: &ActionRegistry,
) -> Result<RequestState, PlanError> {
    let illegal = || PlanError::IllegalCall {
        call: format!("{}:{:?}", call.action_id, call.input),
        state: state.to_string(),
    };
    let entry = registry
        .entries()
        .iter()
        .position(|e| e.id() == call.action_id)
        .ok_or_else(illegal)?;
    let comp = match &call.input {
        CallInput::Verify => None,
        other => Some(problem.index_of(other).ok_or_else(illegal)?),
    };
    if !moves(state, registry).contains(&(entry, comp)) {
        return Err(illegal());
    }
    let mut next = state.clone();
    match comp {
        None => next.v = Status::Done,
        Some(i) => {
            if problem.handles(registry, entry, i) {
                next.set_component(i, Status::Done);
            }
        }
    }
    Ok(next)
}

/// Decomposes, derives requirements and searches for a shortest plan.
pub fn plan(request: &Request, registry: &ActionRegistry) -> Result<PlanningOutcome, PlanError> {
    Ok(PlanningProblem::from_request(request)?.search(registry))
}

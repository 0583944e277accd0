//! Random planning instances and a brute-force satisfiability oracle with
//! its own matching predicate.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use netforge_core::actions::{
    ActionDescriptor, ActionError, ActionHandler, ActionInput, ActionOutcome, ActionRegistry,
    InvocationContext, RegistryEntry,
};
use netforge_core::bnd::ChannelRequirements;
use netforge_core::planner::{
    apply_call, is_goal, CallInput, PlanningOutcome, PlanningProblem, RequestComponent,
};
use rand::Rng;

#[derive(Debug)]
struct Noop;

impl ActionHandler for Noop {
    fn invoke(
        &self,
        _: &InvocationContext<'_>,
        _: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        Ok(ActionOutcome::failure("not executed in planning tests"))
    }
}

pub const PLATFORMS: &[&str] = &["alpha", "alpha-one", "alpha-two", "beta"];
pub const ARCHS: &[&str] = &["x64", "armv7"];
pub const GROUPS: &[&str] = &["g1", "g2"];

#[derive(Debug, Clone)]
pub enum Cap {
    Verifier,
    Deployer {
        platforms: Vec<usize>,
        archs: Vec<usize>,
        mixed: bool,
    },
    Evaluator {
        platforms: Vec<usize>,
        groups: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Instance {
    /// (platform, archs) per channel.
    pub channels: Vec<(usize, Vec<usize>)>,
    /// (channel, group) pairs, distinct.
    pub evals: Vec<(usize, usize)>,
    pub actions: Vec<Cap>,
}

fn random_subset(rng: &mut impl Rng, len: usize) -> Vec<usize> {
    (0..len).filter(|_| rng.gen_bool(0.5)).collect()
}

/// n + m <= 4, at most five actions.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(0..=4);
    let channels = (0..n)
        .map(|_| (rng.gen_range(0..PLATFORMS.len()), random_subset(rng, ARCHS.len())))
        .collect();
    let mut evals = BTreeSet::new();
    if n > 0 {
        for _ in 0..rng.gen_range(0..=(4 - n)) {
            evals.insert((rng.gen_range(0..n), rng.gen_range(0..GROUPS.len())));
        }
    }
    let actions = (0..rng.gen_range(0..=5))
        .map(|_| match rng.gen_range(0..7) {
            0 => Cap::Verifier,
            1..=3 => Cap::Deployer {
                platforms: random_subset(rng, PLATFORMS.len()),
                archs: random_subset(rng, ARCHS.len()),
                mixed: rng.gen_bool(0.5),
            },
            _ => Cap::Evaluator {
                platforms: random_subset(rng, PLATFORMS.len()),
                groups: random_subset(rng, GROUPS.len()),
            },
        })
        .collect();
    Instance {
        channels,
        evals: evals.into_iter().collect(),
        actions,
    }
}

fn names(idx: &[usize], table: &[&str]) -> Vec<String> {
    idx.iter().map(|i| table[*i].to_string()).collect()
}

pub fn build(inst: &Instance) -> (PlanningProblem, ActionRegistry) {
    let reqs = inst
        .channels
        .iter()
        .enumerate()
        .map(|(i, (p, a))| ChannelRequirements::new(format!("c{i}"), PLATFORMS[*p], names(a, ARCHS)))
        .collect();
    let evals = inst
        .evals
        .iter()
        .map(|(c, g)| (format!("c{c}"), GROUPS[*g].to_string()))
        .collect();
    let problem = PlanningProblem::new(reqs, evals).unwrap();
    let entries = inst
        .actions
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let id = format!("a{i}");
            let d = match c {
                Cap::Verifier => ActionDescriptor::verifier(&id, "v"),
                Cap::Deployer { platforms, archs, mixed } => ActionDescriptor::deployer(
                    &id,
                    names(platforms, PLATFORMS),
                    names(archs, ARCHS),
                    *mixed,
                ),
                Cap::Evaluator { platforms, groups } => ActionDescriptor::evaluator(
                    &id,
                    names(platforms, PLATFORMS),
                    names(groups, GROUPS),
                ),
            };
            RegistryEntry::new(d, Arc::new(Noop))
        })
        .collect();
    (problem, ActionRegistry::from_entries(entries).unwrap())
}

/// Token-prefix relation on `-`-separated segments, in either direction.
fn related(a: &str, b: &str) -> bool {
    let (x, y): (Vec<&str>, Vec<&str>) = (a.split('-').collect(), b.split('-').collect());
    let k = x.len().min(y.len());
    x[..k] == y[..k]
}

fn can_deploy(cap: &Cap, platform: usize, archs: &[usize]) -> bool {
    match cap {
        Cap::Deployer { platforms, archs: have, mixed } => {
            platforms.iter().any(|p| related(PLATFORMS[*p], PLATFORMS[platform]))
                && archs.iter().all(|a| have.contains(a))
                && (archs.len() <= 1 || *mixed)
        }
        _ => false,
    }
}

fn can_evaluate(cap: &Cap, platform: usize, group: usize) -> bool {
    match cap {
        Cap::Evaluator { platforms, groups } => {
            platforms.iter().any(|p| related(PLATFORMS[*p], PLATFORMS[platform]))
                && groups.contains(&group)
        }
        _ => false,
    }
}

type Predicate = Box<dyn Fn(&Cap) -> bool>;

/// Enumerates every assignment of an action to each component; satisfiable
/// if one assignment makes every call succeed. Also returns the components
/// no action can handle.
pub fn oracle(inst: &Instance) -> (bool, BTreeSet<String>) {
    let mut targets: Vec<(String, Predicate)> = Vec::new();
    for (i, (p, a)) in inst.channels.iter().enumerate() {
        let (p, a) = (*p, a.clone());
        targets.push((format!("deploy c{i}"), Box::new(move |c| can_deploy(c, p, &a))));
    }
    for (c, g) in &inst.evals {
        let (p, g2) = (inst.channels[*c].0, *g);
        targets.push((
            format!("evaluate c{c} {}", GROUPS[*g]),
            Box::new(move |cap| can_evaluate(cap, p, g2)),
        ));
    }
    let k = inst.actions.len();
    let mut satisfiable = targets.is_empty();
    for code in 0..k.pow(targets.len() as u32) {
        let mut rest = code;
        let ok = targets.iter().all(|(_, f)| {
            let a = rest % k;
            rest /= k;
            f(&inst.actions[a])
        });
        if ok {
            satisfiable = true;
            break;
        }
    }
    let unmatched = targets
        .iter()
        .filter(|(_, f)| !inst.actions.iter().any(f))
        .map(|(name, _)| name.clone())
        .collect();
    (satisfiable, unmatched)
}

fn label(c: &RequestComponent) -> String {
    match c {
        RequestComponent::Deploy { channel } => format!("deploy {channel}"),
        RequestComponent::Evaluate { channel, group } => format!("evaluate {channel} {group}"),
    }
}

/// Compares BFS against the oracle. Returns whether the instance was
/// satisfiable, or a description of the first mismatch.
pub fn check(inst: &Instance) -> Result<bool, String> {
    let (problem, registry) = build(inst);
    let (sat, unmatched) = oracle(inst);
    let has_verifier = inst.actions.iter().any(|c| matches!(c, Cap::Verifier));
    match problem.search(&registry) {
        PlanningOutcome::Plan(plan) => {
            if !sat {
                return Err("planner found a plan the oracle rejects".into());
            }
            let expected = usize::from(has_verifier) + problem.n() + problem.m();
            if plan.calls.len() != expected || plan.total_cost as usize != expected {
                return Err(format!("plan length {} != {expected}", plan.calls.len()));
            }
            let mut state = problem.start_state(&registry);
            for call in &plan.calls {
                state = apply_call(&problem, &state, call, &registry).map_err(|e| e.to_string())?;
            }
            if !is_goal(&state) {
                return Err(format!("plan replays to non-goal state {state}"));
            }
            let phase = |i: &CallInput| match i {
                CallInput::Verify => 0,
                CallInput::Deploy { .. } => 1,
                CallInput::Evaluate { .. } => 2,
            };
            if !plan.calls.windows(2).all(|w| phase(&w[0].input) <= phase(&w[1].input)) {
                return Err("calls out of phase order".into());
            }
            Ok(true)
        }
        PlanningOutcome::Unsatisfiable { unmatched: got } => {
            if sat {
                return Err("oracle found a plan the planner missed".into());
            }
            let got: BTreeSet<String> = got.iter().map(label).collect();
            if got.is_empty() || got != unmatched {
                return Err(format!("unmatched {got:?} != {unmatched:?}"));
            }
            Ok(false)
        }
    }
}

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::model::{BndModel, EdgeKind, VertexKind};
use crate::token::normalize;

/// Severity of one verification finding, ordered from mildest to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Recommendation,
    Warning,
    Error,
}

/// Overall verdict of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoProblem,
    Recommendations,
    Warnings,
    Errors,
}

impl From<Severity> for Verdict {
    fn from(s: Severity) -> Self {
        match s {
            Severity::Recommendation => Verdict::Recommendations,
            Severity::Warning => Verdict::Warnings,
            Severity::Error => Verdict::Errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub rule: String,
    pub message: String,
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
}

impl VerificationReport {
    /// Builds a report whose verdict is the worst finding severity.
    pub fn from_findings(findings: Vec<Finding>) -> Self {
        let verdict = findings
            .iter()
            .map(|f| Verdict::from(f.severity))
            .max()
            .unwrap_or(Verdict::NoProblem);
        Self { verdict, findings }
    }

    pub fn has_errors(&self) -> bool {
        self.verdict == Verdict::Errors
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }
}

/// Tunables for the heuristic rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationConfig {
    /// Hardware architecture tokens considered too weak to host a mining node.
    pub low_power_archs: BTreeSet<String>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            low_power_archs: ["armv6", "armv7"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub const NODE_TYPES: &[&str] = &["full", "mining", "lightweight", "remote", "interface"];

/// Checks structural rules (errors) and deployment heuristics (warnings,
/// recommendations) on a parsed model.
pub fn validate_structure(model: &BndModel) -> VerificationReport {
    validate_structure_with(model, &ValidationConfig::default())
}

pub fn validate_structure_with(model: &BndModel, config: &ValidationConfig) -> VerificationReport {
    let mut findings = Vec::new();
    let mut push = |severity, rule: &str, message: String, entities: Vec<String>| {
        findings.push(Finding {
            severity,
            rule: rule.to_string(),
            message,
            entities,
        })
    };

    for e in model.edges() {
        let (want_from, want_to) = e.kind.endpoints();
        let from = model.vertex(&e.from).map(|v| v.kind);
        let to = model.vertex(&e.to).map(|v| v.kind);
        if from != Some(want_from) || to != Some(want_to) {
            push(
                Severity::Error,
                "edge-endpoint",
                format!(
                    "{} edge `{}` must connect {} -> {}, found {} -> {}",
                    e.kind,
                    e.id,
                    want_from,
                    want_to,
                    from.map_or("?", |k| k.as_str()),
                    to.map_or("?", |k| k.as_str()),
                ),
                vec![e.id.clone(), e.from.clone(), e.to.clone()],
            );
        }
    }

    for v in model.vertices() {
        match v.kind {
            VertexKind::BNode => {
                match v.props.text("node_type").map(|t| normalize(&t)) {
                    Some(t) if NODE_TYPES.contains(&t.as_str()) => {}
                    Some(t) => push(
                        Severity::Error,
                        "node-type",
                        format!("BNode `{}` has unknown node_type `{t}`", v.id),
                        vec![v.id.clone()],
                    ),
                    None => push(
                        Severity::Error,
                        "required-property",
                        format!("BNode `{}` lacks node_type", v.id),
                        vec![v.id.clone()],
                    ),
                }
                for kind in [EdgeKind::InChannel, EdgeKind::DeployOnNode] {
                    let n = model.outgoing(&v.id, kind).count();
                    if n != 1 {
                        push(
                            Severity::Error,
                            "bnode-cardinality",
                            format!("BNode `{}` has {n} {kind} edges, expected exactly 1", v.id),
                            vec![v.id.clone()],
                        );
                    }
                }
                let n = model.incoming(&v.id, EdgeKind::ControlBNode).count();
                if n != 1 {
                    push(
                        Severity::Error,
                        "bnode-cardinality",
                        format!("BNode `{}` has {n} ControlBNode edges, expected exactly 1", v.id),
                        vec![v.id.clone()],
                    );
                }
            }
            VertexKind::Channel => {
                let ok = v
                    .props
                    .text("consensus_protocol")
                    .is_some_and(|c| !c.trim().is_empty());
                if !ok {
                    push(
                        Severity::Error,
                        "required-property",
                        format!("Channel `{}` lacks consensus_protocol", v.id),
                        vec![v.id.clone()],
                    );
                }
            }
            VertexKind::ComputeNode => {
                for prop in ["hostname", "hw_arch", "os"] {
                    if v.props.get(prop).is_none() {
                        push(
                            Severity::Error,
                            "required-property",
                            format!("ComputeNode `{}` lacks {prop}", v.id),
                            vec![v.id.clone()],
                        );
                    }
                }
            }
            _ => {}
        }
    }

    // Heuristics below only look at well-typed edges.
    let typed = |e: &&super::Edge| {
        let (f, t) = e.kind.endpoints();
        model.vertex(&e.from).map(|v| v.kind) == Some(f)
            && model.vertex(&e.to).map(|v| v.kind) == Some(t)
    };

    for e in model.edges_of(EdgeKind::DeployOnNode).filter(typed) {
        let bnode = model.vertex(&e.from).expect("typed edge");
        let host = model.vertex(&e.to).expect("typed edge");
        let mining = bnode
            .props
            .text("node_type")
            .is_some_and(|t| normalize(&t) == "mining");
        let arch = host.props.text("hw_arch").map(|a| normalize(&a));
        if let (true, Some(arch)) = (mining, arch) {
            if config.low_power_archs.contains(&arch) {
                push(
                    Severity::Warning,
                    "mining-on-low-power-host",
                    format!(
                        "mining node `{}` is deployed on resource-constrained host `{}` ({arch})",
                        bnode.id, host.id
                    ),
                    vec![bnode.id.clone(), host.id.clone()],
                );
            }
        }
    }

    let mut host_nets: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut net_hosts: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in model.edges_of(EdgeKind::InNetwork).filter(typed) {
        host_nets.entry(&e.from).or_default().push(&e.to);
        net_hosts.entry(&e.to).or_default().push(&e.from);
    }

    for ch in model.vertices_of(VertexKind::Channel) {
        let bnodes: Vec<&str> = model
            .incoming(&ch.id, EdgeKind::InChannel)
            .filter(typed)
            .map(|e| e.from.as_str())
            .collect();
        if bnodes.is_empty() {
            continue;
        }
        let has_miner = bnodes.iter().any(|b| {
            model
                .vertex(b)
                .and_then(|v| v.props.text("node_type"))
                .is_some_and(|t| normalize(&t) == "mining")
        });
        if !has_miner {
            push(
                Severity::Recommendation,
                "channel-without-miner",
                format!("channel `{}` has no mining node", ch.id),
                vec![ch.id.clone()],
            );
        }

        let hosts: BTreeSet<&str> = bnodes
            .iter()
            .flat_map(|b| model.outgoing(b, EdgeKind::DeployOnNode).filter(typed))
            .map(|e| e.to.as_str())
            .collect();
        if hosts.len() > 1 {
            let start = *hosts.iter().next().expect("non-empty");
            let reached = reachable_hosts(start, &host_nets, &net_hosts);
            let stranded: Vec<String> = hosts
                .iter()
                .filter(|h| !reached.contains(**h))
                .map(|h| h.to_string())
                .collect();
            if !stranded.is_empty() {
                let mut entities = vec![ch.id.clone()];
                entities.extend(stranded.iter().cloned());
                push(
                    Severity::Warning,
                    "channel-hosts-disconnected",
                    format!(
                        "hosts of channel `{}` share no network path: {}",
                        ch.id,
                        stranded.join(", ")
                    ),
                    entities,
                );
            }
        }
    }

    VerificationReport::from_findings(findings)
}

fn reachable_hosts<'a>(
    start: &'a str,
    host_nets: &HashMap<&'a str, Vec<&'a str>>,
    net_hosts: &HashMap<&'a str, Vec<&'a str>>,
) -> HashSet<&'a str> {
    let mut seen = HashSet::from([start]);
    let mut seen_nets = HashSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(h) = queue.pop_front() {
        for net in host_nets.get(h).into_iter().flatten() {
            if !seen_nets.insert(*net) {
                continue;
            }
            for peer in net_hosts.get(net).into_iter().flatten() {
                if seen.insert(*peer) {
                    queue.push_back(peer);
                }
            }
        }
    }
    seen
}

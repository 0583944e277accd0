use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::{BndModel, Edge, EdgeKind, Vertex, VertexKind};
use super::BndError;
use crate::token::normalize;

/// The slice of a model needed to deploy one channel: the channel vertex,
/// its blockchain nodes, the hosts they run on, the participants that
/// control them and the connecting edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelFragment {
    pub channel: Vertex,
    pub bnodes: Vec<Vertex>,
    pub hosts: Vec<Vertex>,
    pub participants: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl ChannelFragment {
    pub fn channel_id(&self) -> &str {
        &self.channel.id
    }

    /// Host of the given blockchain node, if the fragment records one.
    pub fn host_of(&self, bnode_id: &str) -> Option<&Vertex> {
        let edge = self
            .edges
            .iter()
            .find(|e| e.kind == EdgeKind::DeployOnNode && e.from == bnode_id)?;
        self.hosts.iter().find(|h| h.id == edge.to)
    }

    /// The fragment as a standalone model (channel first, then nodes,
    /// hosts and participants).
    pub fn to_model(&self) -> BndModel {
        let mut vertices = vec![self.channel.clone()];
        vertices.extend(self.bnodes.iter().cloned());
        vertices.extend(self.hosts.iter().cloned());
        vertices.extend(self.participants.iter().cloned());
        BndModel::new(vertices, self.edges.clone()).expect("fragment is closed over its edges")
    }

    /// Rebuilds a fragment from a standalone model holding exactly one channel.
    pub fn from_model(model: &BndModel) -> Result<Self, BndError> {
        let mut channels = model.vertices_of(VertexKind::Channel);
        let channel = channels
            .next()
            .ok_or_else(|| BndError::Schema("fragment has no channel".into()))?;
        if channels.next().is_some() {
            return Err(BndError::Schema("fragment has more than one channel".into()));
        }
        extract_channel_fragment(model, &channel.id)
    }
}

/// Capability demand of one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRequirements {
    pub channel_id: String,
    pub platform: String,
    pub archs: BTreeSet<String>,
    pub mixed: bool,
    /// Host operating systems; only consulted when OS matching is enabled.
    #[serde(default)]
    pub os: BTreeSet<String>,
}

impl ChannelRequirements {
    pub fn new(
        channel_id: impl Into<String>,
        platform: impl Into<String>,
        archs: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let archs: BTreeSet<String> = archs.into_iter().map(Into::into).collect();
        Self {
            channel_id: channel_id.into(),
            platform: platform.into(),
            mixed: archs.len() > 1,
            archs,
            os: BTreeSet::new(),
        }
    }
}

/// Channel ids of a model in lexicographic order.
pub fn list_channels(model: &BndModel) -> Vec<String> {
    let mut ids: Vec<String> = model
        .vertices_of(VertexKind::Channel)
        .map(|v| v.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Follows In-Channel edges from the channel to its nodes, then each node's
/// Deploy-on-Node host and Control-BNode participant.
pub fn extract_channel_fragment(
    model: &BndModel,
    channel_id: &str,
) -> Result<ChannelFragment, BndError> {
    let channel = model
        .vertex(channel_id)
        .filter(|v| v.kind == VertexKind::Channel)
        .ok_or_else(|| BndError::UnknownChannel(channel_id.to_string()))?;

    let mut bnode_ids = BTreeSet::new();
    let mut edges = Vec::new();
    for e in model.incoming(channel_id, EdgeKind::InChannel) {
        if model.vertex(&e.from).map(|v| v.kind) == Some(VertexKind::BNode) {
            bnode_ids.insert(e.from.as_str());
            edges.push(e.clone());
        }
    }

    let mut host_ids = BTreeSet::new();
    let mut participant_ids = BTreeSet::new();
    for &b in &bnode_ids {
        for e in model.outgoing(b, EdgeKind::DeployOnNode) {
            if model.vertex(&e.to).map(|v| v.kind) == Some(VertexKind::ComputeNode) {
                host_ids.insert(e.to.as_str());
                edges.push(e.clone());
            }
        }
        for e in model.incoming(b, EdgeKind::ControlBNode) {
            if model.vertex(&e.from).map(|v| v.kind) == Some(VertexKind::Participant) {
                participant_ids.insert(e.from.as_str());
                edges.push(e.clone());
            }
        }
    }

    let collect = |ids: &BTreeSet<&str>| -> Vec<Vertex> {
        ids.iter()
            .map(|id| model.vertex(id).expect("edge endpoints exist").clone())
            .collect()
    };
    Ok(ChannelFragment {
        channel: channel.clone(),
        bnodes: collect(&bnode_ids),
        hosts: collect(&host_ids),
        participants: collect(&participant_ids),
        edges,
    })
}

/// Normalized platform token plus the set of host architectures.
pub fn derive_channel_requirements(
    fragment: &ChannelFragment,
) -> Result<ChannelRequirements, BndError> {
    let channel = &fragment.channel;
    let consensus = channel
        .props
        .text("consensus_protocol")
        .filter(|c| !c.trim().is_empty())
        .ok_or_else(|| BndError::MissingProperty {
            entity: channel.id.clone(),
            property: "consensus_protocol".into(),
        })?;
    let mut archs = BTreeSet::new();
    let mut os = BTreeSet::new();
    for host in &fragment.hosts {
        let arch = host
            .props
            .text("hw_arch")
            .ok_or_else(|| BndError::MissingProperty {
                entity: host.id.clone(),
                property: "hw_arch".into(),
            })?;
        archs.insert(normalize(&arch));
        if let Some(o) = host.props.text("os") {
            os.insert(normalize(&o));
        }
    }
    Ok(ChannelRequirements {
        channel_id: channel.id.clone(),
        platform: normalize(&consensus),
        mixed: archs.len() > 1,
        archs,
        os,
    })
}

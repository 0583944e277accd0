//! Simulated target infrastructure.
//!
//! Stands in for real hosts: deploying a channel registers an instance with
//! one `sim://` endpoint per blockchain node, and evaluating it writes a
//! seeded synthetic CSV dataset.

mod case_study;
mod dataset;
mod latency;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::bnd::{derive_channel_requirements, ChannelFragment, VertexKind, BndModel};
use crate::clock;

pub use case_study::{
    case_study_manifest, load_case_study, CaseStudyExperiment, PlanSignature,
    CASE_STUDY_EXPERIMENT_IDS,
};
pub use dataset::{generate_dataset, SyntheticDatasetSpec};
pub use latency::{LatencyModel, Phase};

/// A physical host of the simulated testbed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimHost {
    pub hostname: String,
    pub hw_arch: String,
    pub cluster: String,
}

/// Hosts described by the ComputeNode vertices of a model.
pub fn sim_hosts(model: &BndModel) -> Vec<SimHost> {
    model
        .vertices_of(VertexKind::ComputeNode)
        .map(|v| SimHost {
            hostname: v.props.text("hostname").unwrap_or_else(|| v.id.clone()),
            hw_arch: v.props.text("hw_arch").unwrap_or_default(),
            cluster: v.props.text("cluster").unwrap_or_default(),
        })
        .collect()
}

/// A deployed (simulated) channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimChannelInstance {
    pub experiment_id: String,
    pub channel_id: String,
    pub platform: String,
    pub endpoints: Vec<String>,
    pub hosts: Vec<String>,
    pub deployed_at: u64,
}

impl SimChannelInstance {
    /// Describes a channel deployed outside the simulator, from its fragment
    /// and the endpoints its deployer reported.
    pub fn observed(
        experiment: &str,
        fragment: &ChannelFragment,
        endpoints: &[String],
    ) -> Result<Self, SimError> {
        let req = derive_channel_requirements(fragment)
            .map_err(|e| SimError::Fragment(e.to_string()))?;
        Ok(Self {
            experiment_id: experiment.to_string(),
            channel_id: fragment.channel_id().to_string(),
            platform: req.platform,
            endpoints: endpoints.to_vec(),
            hosts: fragment
                .hosts
                .iter()
                .map(|h| h.props.text("hostname").unwrap_or_else(|| h.id.clone()))
                .collect(),
            deployed_at: 0,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("channel `{channel}` is already deployed in experiment `{experiment}`")]
    AlreadyDeployed { experiment: String, channel: String },
    #[error("channel `{channel}` is not deployed in experiment `{experiment}`")]
    NotDeployed { experiment: String, channel: String },
    #[error("invalid fragment: {0}")]
    Fragment(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type Key = (String, String);

/// Registry of deployed simulated channels keyed by (experiment, channel).
///
/// With a state directory, instances are mirrored to
/// `<dir>/<experiment>/<channel>.json` so later processes can find them.
#[derive(Debug, Default)]
pub struct SimTargets {
    instances: Mutex<HashMap<Key, SimChannelInstance>>,
    state_dir: Option<PathBuf>,
}

impl SimTargets {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn persistent(state_dir: impl Into<PathBuf>) -> Self {
        Self {
            instances: Mutex::new(HashMap::new()),
            state_dir: Some(state_dir.into()),
        }
    }

    fn state_file(&self, experiment: &str, channel: &str) -> Option<PathBuf> {
        self.state_dir
            .as_ref()
            .map(|d| d.join(safe_name(experiment)).join(format!("{}.json", safe_name(channel))))
    }

    /// Registers a fragment as deployed. One endpoint per blockchain node,
    /// `sim://<hostname>/<bnode>`.
    pub fn provision(
        &self,
        experiment: &str,
        fragment: &ChannelFragment,
    ) -> Result<SimChannelInstance, SimError> {
        let req = derive_channel_requirements(fragment)
            .map_err(|e| SimError::Fragment(e.to_string()))?;
        let key = (experiment.to_string(), fragment.channel_id().to_string());
        let mut map = self.instances.lock().expect("sim registry poisoned");
        let on_disk = self
            .state_file(experiment, fragment.channel_id())
            .is_some_and(|p| p.exists());
        if map.contains_key(&key) || on_disk {
            return Err(SimError::AlreadyDeployed {
                experiment: key.0,
                channel: key.1,
            });
        }
        let endpoints = fragment
            .bnodes
            .iter()
            .map(|b| {
                let host = fragment
                    .host_of(&b.id)
                    .map(|h| h.props.text("hostname").unwrap_or_else(|| h.id.clone()))
                    .unwrap_or_else(|| "unassigned".into());
                format!("sim://{}/{}", url_segment(&host), url_segment(&b.id))
            })
            .collect();
        let hosts = fragment
            .hosts
            .iter()
            .map(|h| h.props.text("hostname").unwrap_or_else(|| h.id.clone()))
            .collect();
        let instance = SimChannelInstance {
            experiment_id: experiment.to_string(),
            channel_id: fragment.channel_id().to_string(),
            platform: req.platform,
            endpoints,
            hosts,
            deployed_at: clock::now_ms(),
        };
        if let Some(path) = self.state_file(experiment, fragment.channel_id()) {
            std::fs::create_dir_all(path.parent().expect("state file has a parent"))?;
            std::fs::write(&path, serde_json::to_vec(&instance).expect("serializable"))?;
        }
        map.insert(key, instance.clone());
        Ok(instance)
    }

    pub fn get(&self, experiment: &str, channel: &str) -> Result<SimChannelInstance, SimError> {
        let key = (experiment.to_string(), channel.to_string());
        if let Some(i) = self.instances.lock().expect("sim registry poisoned").get(&key) {
            return Ok(i.clone());
        }
        if let Some(path) = self.state_file(experiment, channel) {
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(instance) = serde_json::from_slice::<SimChannelInstance>(&bytes) {
                    return Ok(instance);
                }
            }
        }
        Err(SimError::NotDeployed {
            experiment: key.0,
            channel: key.1,
        })
    }

    pub fn is_deployed(&self, experiment: &str, channel: &str) -> bool {
        self.get(experiment, channel).is_ok()
    }

    pub fn teardown(&self, experiment: &str, channel: &str) -> Result<(), SimError> {
        let key = (experiment.to_string(), channel.to_string());
        let removed = self
            .instances
            .lock()
            .expect("sim registry poisoned")
            .remove(&key)
            .is_some();
        let mut removed_file = false;
        if let Some(path) = self.state_file(experiment, channel) {
            if path.exists() {
                std::fs::remove_file(&path)?;
                removed_file = true;
            }
        }
        if removed || removed_file {
            Ok(())
        } else {
            Err(SimError::NotDeployed {
                experiment: key.0,
                channel: key.1,
            })
        }
    }

    pub fn deployed_count(&self) -> usize {
        self.instances.lock().expect("sim registry poisoned").len()
    }
}

/// File-name-safe rendering of an id.
pub(crate) fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| if matches!(c, '/' | '\\' | '\0') { '_' } else { c })
        .collect()
}

fn url_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub(crate) fn dataset_file(dir: &Path, channel: &str, group: &str) -> PathBuf {
    dir.join(format!("{}-{}.csv", safe_name(channel), safe_name(group)))
}

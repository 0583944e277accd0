use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PlanError;
use crate::bnd::{list_channels, parse_bnd_value, BndModel};
use crate::token::normalize;

/// One requested (channel, metric group) measurement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetricRequest {
    pub channel: String,
    pub group: String,
}

impl MetricRequest {
    pub fn new(channel: &str, group: &str) -> Self {
        Self {
            channel: channel.to_string(),
            group: normalize(group),
        }
    }
}

/// An architecture to deploy plus the metrics to measure on it.
///
/// Wire form: `{"model": <BND-JSON>, "metrics": [{"channel": .., "group": ..}]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub model: BndModel,
    pub metric_requests: Vec<MetricRequest>,
}

impl Request {
    /// Checks that every metric names an existing channel and that
    /// (channel, group) pairs are unique.
    pub fn new(model: BndModel, metric_requests: Vec<MetricRequest>) -> Result<Self, PlanError> {
        let channels: HashSet<String> = list_channels(&model).into_iter().collect();
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(metric_requests.len());
        for m in metric_requests {
            let m = MetricRequest::new(&m.channel, &m.group);
            if m.group.is_empty() {
                return Err(PlanError::InvalidRequest(format!(
                    "empty metric group for channel `{}`",
                    m.channel
                )));
            }
            if !channels.contains(&m.channel) {
                return Err(PlanError::UnknownChannel(m.channel));
            }
            if !seen.insert(m.clone()) {
                return Err(PlanError::InvalidRequest(format!(
                    "duplicate metric request ({}, {})",
                    m.channel, m.group
                )));
            }
            normalized.push(m);
        }
        Ok(Self {
            model,
            metric_requests: normalized,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, PlanError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| PlanError::Model(crate::bnd::BndError::Syntax(e.to_string())))?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self, PlanError> {
        let obj = value
            .as_object()
            .ok_or_else(|| PlanError::InvalidRequest("request must be a JSON object".into()))?;
        let model = parse_bnd_value(
            obj.get("model")
                .ok_or_else(|| PlanError::InvalidRequest("missing field `model`".into()))?,
        )?;
        let metrics: Vec<MetricRequest> = match obj.get("metrics") {
            None | Some(Value::Null) => Vec::new(),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| PlanError::InvalidRequest(format!("invalid `metrics`: {e}")))?,
        };
        Self::new(model, metrics)
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::json!({
            "model": self.model.to_json_value(),
            "metrics": self.metric_requests,
        })
    }
}

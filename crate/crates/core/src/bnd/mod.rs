//! Blockchain network design (BND) models.
//!
//! A BND model is a directed property graph with six vertex kinds and five
//! edge kinds spanning the organisational, physical and logical structure of
//! a network. Models are processed channel by channel: each channel yields a
//! [`ChannelFragment`] and from it a [`ChannelRequirements`] used for action
//! matching.

mod fragment;
mod model;
mod validate;

pub use fragment::{
    derive_channel_requirements, extract_channel_fragment, list_channels, ChannelFragment,
    ChannelRequirements,
};
pub use model::{
    parse_bnd, parse_bnd_value, serialize_bnd, BndModel, Edge, EdgeKind, PropertyBag,
    PropertyValue, Structure, Vertex, VertexKind,
};
pub use validate::{
    validate_structure, validate_structure_with, Finding, Severity, ValidationConfig,
    VerificationReport, Verdict, NODE_TYPES,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BndError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("edge `{edge}` references missing vertex `{vertex}`")]
    DanglingEdge { edge: String, vertex: String },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("`{entity}` lacks required property `{property}`")]
    MissingProperty { entity: String, property: String },
}

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::BndError;

/// A single property value. BND properties are strings, integers or booleans.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl PropertyValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropertyValue::Str(s) => Some(s),
            _ => None,
        }
    }

    fn from_json(value: &Value) -> Option<Self> {
        match value {
            Value::String(s) => Some(PropertyValue::Str(s.clone())),
            Value::Bool(b) => Some(PropertyValue::Bool(*b)),
            Value::Number(n) => n.as_i64().map(PropertyValue::Int),
            _ => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Bool(b) => write!(f, "{b}"),
            PropertyValue::Int(i) => write!(f, "{i}"),
            PropertyValue::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Str(s.to_string())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::Str(s)
    }
}

impl From<i64> for PropertyValue {
    fn from(i: i64) -> Self {
        PropertyValue::Int(i)
    }
}

impl From<bool> for PropertyValue {
    fn from(b: bool) -> Self {
        PropertyValue::Bool(b)
    }
}

/// Named properties of a vertex or edge. Keys are unique and non-empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyBag(BTreeMap<String, PropertyValue>);

impl PropertyBag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a property. Empty names are rejected.
    pub fn insert(
        &mut self,
        name: impl Into<String>,
        value: impl Into<PropertyValue>,
    ) -> Result<(), BndError> {
        let name = name.into();
        if name.is_empty() {
            return Err(BndError::Schema("property names must be non-empty".into()));
        }
        self.0.insert(name, value.into());
        Ok(())
    }

    /// Builder-style insert for literals known to be valid.
    pub fn with(mut self, name: &str, value: impl Into<PropertyValue>) -> Self {
        assert!(!name.is_empty(), "property names must be non-empty");
        self.0.insert(name.to_string(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&PropertyValue> {
        self.0.get(name)
    }

    /// String value of a property; integers and booleans are rendered.
    pub fn text(&self, name: &str) -> Option<String> {
        self.0.get(name).map(|v| v.to_string())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PropertyValue)> {
        self.0.iter()
    }
}

macro_rules! kind_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl FromStr for $name {
            type Err = BndError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    other => Err(BndError::Schema(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

kind_enum!(
    /// Vertex types of the BND meta-model.
    VertexKind {
        Participant,
        Process,
        BNode,
        Channel,
        ComputeNode,
        Network,
    }
);

kind_enum!(
    /// Edge types of the BND meta-model.
    EdgeKind {
        ParticipateInProcess,
        ControlBNode,
        InChannel,
        DeployOnNode,
        InNetwork,
    }
);

impl EdgeKind {
    /// The (from, to) vertex kinds an edge of this kind must connect.
    pub fn endpoints(self) -> (VertexKind, VertexKind) {
        use VertexKind::*;
        match self {
            EdgeKind::ParticipateInProcess => (Participant, Process),
            EdgeKind::ControlBNode => (Participant, BNode),
            EdgeKind::InChannel => (BNode, Channel),
            EdgeKind::DeployOnNode => (BNode, ComputeNode),
            EdgeKind::InNetwork => (ComputeNode, Network),
        }
    }

    pub fn structure(self) -> Structure {
        match self {
            EdgeKind::ParticipateInProcess => Structure::Organisational,
            EdgeKind::InNetwork => Structure::Physical,
            EdgeKind::InChannel | EdgeKind::ControlBNode | EdgeKind::DeployOnNode => {
                Structure::Logical
            }
        }
    }
}

impl VertexKind {
    pub fn structure(self) -> Structure {
        match self {
            VertexKind::Participant | VertexKind::Process => Structure::Organisational,
            VertexKind::ComputeNode | VertexKind::Network => Structure::Physical,
            VertexKind::BNode | VertexKind::Channel => Structure::Logical,
        }
    }
}

/// The three architectural views a BND model describes at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Organisational,
    Physical,
    Logical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub kind: VertexKind,
    #[serde(default)]
    pub props: PropertyBag,
}

impl Vertex {
    pub fn new(id: impl Into<String>, kind: VertexKind) -> Self {
        Self {
            id: id.into(),
            kind,
            props: PropertyBag::new(),
        }
    }

    pub fn with_prop(mut self, name: &str, value: impl Into<PropertyValue>) -> Self {
        self.props = self.props.with(name, value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub kind: EdgeKind,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub props: PropertyBag,
}

impl Edge {
    pub fn new(
        id: impl Into<String>,
        kind: EdgeKind,
        from: impl Into<String>,
        to: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            from: from.into(),
            to: to.into(),
            props: PropertyBag::new(),
        }
    }

    pub fn with_prop(mut self, name: &str, value: impl Into<PropertyValue>) -> Self {
        self.props = self.props.with(name, value);
        self
    }
}

/// A blockchain network architecture as a directed property graph.
///
/// Construction guarantees unique vertex ids, unique edge ids and that every
/// edge endpoint names an existing vertex. Kind-level rules (edge endpoint
/// kinds, one channel per node, required properties) are checked by
/// [`validate_structure`](super::validate_structure) instead, so that such
/// models can still be loaded and reported on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BndModel {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl BndModel {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self, BndError> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if v.id.is_empty() {
                return Err(BndError::Schema("vertex id must be non-empty".into()));
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(BndError::Schema(format!("duplicate vertex id `{}`", v.id)));
            }
        }
        let mut edge_ids = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.id.is_empty() {
                return Err(BndError::Schema("edge id must be non-empty".into()));
            }
            if !edge_ids.insert(e.id.as_str()) {
                return Err(BndError::Schema(format!("duplicate edge id `{}`", e.id)));
            }
            for end in [&e.from, &e.to] {
                if !index.contains_key(end) {
                    return Err(BndError::DanglingEdge {
                        edge: e.id.clone(),
                        vertex: end.clone(),
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            edges,
            index,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.index.get(id).map(|&i| &self.vertices[i])
    }

    pub fn vertices_of(&self, kind: VertexKind) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(move |v| v.kind == kind)
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn outgoing<'a>(&'a self, id: &'a str, kind: EdgeKind) -> impl Iterator<Item = &'a Edge> {
        self.edges
            .iter()
            .filter(move |e| e.kind == kind && e.from == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str, kind: EdgeKind) -> impl Iterator<Item = &'a Edge> {
        self.edges.iter().filter(move |e| e.kind == kind && e.to == id)
    }

    pub fn into_parts(self) -> (Vec<Vertex>, Vec<Edge>) {
        (self.vertices, self.edges)
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::json!({
            "vertices": self.vertices,
            "edges": self.edges,
        })
    }
}

/// Parses a BND-JSON document.
pub fn parse_bnd(document: &str) -> Result<BndModel, BndError> {
    let value: Value =
        serde_json::from_str(document).map_err(|e| BndError::Syntax(e.to_string()))?;
    parse_bnd_value(&value)
}

/// Builds a model from an already-parsed JSON value.
pub fn parse_bnd_value(value: &Value) -> Result<BndModel, BndError> {
    let root = value
        .as_object()
        .ok_or_else(|| BndError::Schema("document must be a JSON object".into()))?;
    let vertices = array_field(root, "vertices", "document")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_vertex(v, i))
        .collect::<Result<Vec<_>, _>>()?;
    let edges = array_field(root, "edges", "document")?
        .iter()
        .enumerate()
        .map(|(i, e)| parse_edge(e, i))
        .collect::<Result<Vec<_>, _>>()?;
    BndModel::new(vertices, edges)
}

/// Serializes a model to BND-JSON. Vertex and edge order is preserved.
pub fn serialize_bnd(model: &BndModel) -> String {
    serde_json::to_string_pretty(&model.to_json_value()).expect("BND model always serializes")
}

fn array_field<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    ctx: &str,
) -> Result<&'a Vec<Value>, BndError> {
    match obj.get(key) {
        Some(Value::Array(items)) => Ok(items),
        Some(_) => Err(BndError::Schema(format!("{ctx}: `{key}` must be an array"))),
        None => Err(BndError::Schema(format!("{ctx}: missing field `{key}`"))),
    }
}

fn string_field(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<String, BndError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(BndError::Schema(format!("{ctx}: `{key}` must be a string"))),
        None => Err(BndError::Schema(format!("{ctx}: missing field `{key}`"))),
    }
}

fn parse_props(obj: &Map<String, Value>, ctx: &str) -> Result<PropertyBag, BndError> {
    let mut bag = PropertyBag::new();
    match obj.get("props") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (name, raw) in map {
                let value = PropertyValue::from_json(raw).ok_or_else(|| {
                    BndError::Schema(format!(
                        "{ctx}: property `{name}` must be a string, integer or boolean"
                    ))
                })?;
                bag.insert(name.clone(), value)
                    .map_err(|_| BndError::Schema(format!("{ctx}: empty property name")))?;
            }
        }
        Some(_) => return Err(BndError::Schema(format!("{ctx}: `props` must be an object"))),
    }
    Ok(bag)
}

fn parse_vertex(value: &Value, pos: usize) -> Result<Vertex, BndError> {
    let ctx = format!("vertices[{pos}]");
    let obj = value
        .as_object()
        .ok_or_else(|| BndError::Schema(format!("{ctx}: must be an object")))?;
    Ok(Vertex {
        id: string_field(obj, "id", &ctx)?,
        kind: string_field(obj, "kind", &ctx)?
            .parse()
            .map_err(|e: BndError| BndError::Schema(format!("{ctx}: {e}")))?,
        props: parse_props(obj, &ctx)?,
    })
}

fn parse_edge(value: &Value, pos: usize) -> Result<Edge, BndError> {
    let ctx = format!("edges[{pos}]");
    let obj = value
        .as_object()
        .ok_or_else(|| BndError::Schema(format!("{ctx}: must be an object")))?;
    Ok(Edge {
        id: string_field(obj, "id", &ctx)?,
        kind: string_field(obj, "kind", &ctx)?
            .parse()
            .map_err(|e: BndError| BndError::Schema(format!("{ctx}: {e}")))?,
        from: string_field(obj, "from", &ctx)?,
        to: string_field(obj, "to", &ctx)?,
        props: parse_props(obj, &ctx)?,
    })
}

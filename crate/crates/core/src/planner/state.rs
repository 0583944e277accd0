use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Progress of one tuple entry: failed (-1), pending (0) or done (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Failed,
    Pending,
    Done,
}

impl Status {
    pub fn as_i8(self) -> i8 {
        match self {
            Status::Failed => -1,
            Status::Pending => 0,
            Status::Done => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Status::Failed),
            0 => Some(Status::Pending),
            1 => Some(Status::Done),
            _ => None,
        }
    }
}

impl Serialize for Status {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Status {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Status::from_i8(v).ok_or_else(|| serde::de::Error::custom(format!("invalid status {v}")))
    }
}

/// The `(v, d, e, req[n+m])` progress tuple of a request.
///
/// `v`, `d` and `e` track verification, deployment and evaluation overall;
/// `req` holds one entry per deployment component followed by one per
/// evaluation component.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StateDoc", into = "StateDoc")]
pub struct RequestState {
    pub v: Status,
    pub d: Status,
    pub e: Status,
    req: Vec<Status>,
    n: usize,
}

impl RequestState {
    /// The all-pending tuple for `n` deployment and `m` evaluation components.
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            v: Status::Pending,
            d: Status::Pending,
            e: Status::Pending,
            req: vec![Status::Pending; n + m],
            n,
        }
    }

    pub fn deployments(&self) -> &[Status] {
        &self.req[..self.n]
    }

    pub fn evaluations(&self) -> &[Status] {
        &self.req[self.n..]
    }

    pub fn components(&self) -> &[Status] {
        &self.req
    }

    pub fn component(&self, index: usize) -> Status {
        self.req[index]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.req.len() - self.n
    }

    /// Sets one component entry and promotes `d`/`e` when their block is complete.
    pub fn set_component(&mut self, index: usize, status: Status) {
        self.req[index] = status;
        self.refresh_aggregates();
    }

    /// Promotes `d` (`e`) to done once every deployment (evaluation) entry is
    /// done. Vacuously true for empty blocks.
    pub fn refresh_aggregates(&mut self) {
        if self.deployments().iter().all(|s| *s == Status::Done) {
            self.d = Status::Done;
        }
        if self.evaluations().iter().all(|s| *s == Status::Done) {
            self.e = Status::Done;
        }
    }

    /// All `3 + n + m` entries in order.
    pub fn tuple(&self) -> Vec<i8> {
        [self.v, self.d, self.e]
            .iter()
            .chain(self.req.iter())
            .map(|s| s.as_i8())
            .collect()
    }

    pub fn is_goal(&self) -> bool {
        self.v == Status::Done
            && self.d == Status::Done
            && self.e == Status::Done
            && self.req.iter().all(|s| *s == Status::Done)
    }

    pub fn has_failure(&self) -> bool {
        [self.v, self.d, self.e]
            .iter()
            .chain(self.req.iter())
            .any(|s| *s == Status::Failed)
    }
}

impl fmt::Display for RequestState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tuple().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    tuple: Vec<i8>,
    deployments: usize,
}

impl From<RequestState> for StateDoc {
    fn from(s: RequestState) -> Self {
        StateDoc {
            tuple: s.tuple(),
            deployments: s.n,
        }
    }
}

impl TryFrom<StateDoc> for RequestState {
    type Error = String;

    fn try_from(doc: StateDoc) -> Result<Self, Self::Error> {
        if doc.tuple.len() < 3 + doc.deployments {
            return Err("state tuple shorter than 3 + deployments".into());
        }
        let status = |v: i8| Status::from_i8(v).ok_or_else(|| format!("invalid status {v}"));
        Ok(RequestState {
            v: status(doc.tuple[0])?,
            d: status(doc.tuple[1])?,
            e: status(doc.tuple[2])?,
            req: doc.tuple[3..].iter().map(|v| status(*v)).collect::<Result<_, _>>()?,
            n: doc.deployments,
        })
    }
}

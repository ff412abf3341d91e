//! Identifiers shared by every layer of the simulator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Index of a satellite in constellation order (shell, plane, slot).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SatId(pub usize);

/// Index of a ground station in the station set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub usize);

/// Index of a task; tasks are numbered in (arrival, source) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

/// A vertex of the space-ground network.
///
/// The derived ordering puts every satellite before every ground station,
/// which is the id order used for lexicographic tie-breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Sat(SatId),
    Ground(StationId),
}

impl Node {
    pub fn sat(i: usize) -> Self {
        Node::Sat(SatId(i))
    }

    pub fn ground(i: usize) -> Self {
        Node::Ground(StationId(i))
    }

    pub fn as_sat(self) -> Option<SatId> {
        match self {
            Node::Sat(s) => Some(s),
            Node::Ground(_) => None,
        }
    }

    pub fn as_ground(self) -> Option<StationId> {
        match self {
            Node::Ground(g) => Some(g),
            Node::Sat(_) => None,
        }
    }

    pub fn is_ground(self) -> bool {
        matches!(self, Node::Ground(_))
    }
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat{}", self.0)
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gs{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.0)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Sat(s) => s.fmt(f),
            Node::Ground(g) => g.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid node id `{0}` (expected satN or gsN)")]
pub struct ParseNodeError(String);

impl FromStr for Node {
    type Err = ParseNodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseNodeError(s.to_string());
        if let Some(rest) = s.strip_prefix("sat") {
            rest.parse().map(Node::sat).map_err(|_| err())
        } else if let Some(rest) = s.strip_prefix("gs") {
            rest.parse().map(Node::ground).map_err(|_| err())
        } else {
            Err(err())
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

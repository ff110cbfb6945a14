//! Planetary gear-train topology: nodes, gear sets, device placement and
//! rigid connections.
//!
//! A gear train with `n` planetary sets has `3n` nodes, indexed so that set
//! `k` (1-based) owns nodes `3(k-1)` (sun), `3(k-1)+1` (carrier) and
//! `3(k-1)+2` (ring). Node names follow the `PGk.{sun|carrier|ring}`
//! convention everywhere files or reports mention them.

use crate::rational::{frac_int, frac_str, parse_frac, Frac};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Index of a gear-train node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(pub usize);

/// The three members of a planetary set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Sun,
    Carrier,
    Ring,
}

impl Node {
    pub fn new(pg: usize, role: NodeRole) -> Self {
        let offset = match role {
            NodeRole::Sun => 0,
            NodeRole::Carrier => 1,
            NodeRole::Ring => 2,
        };
        Node(3 * pg + offset)
    }

    /// Zero-based planetary set this node belongs to.
    pub fn pg(&self) -> usize {
        self.0 / 3
    }

    pub fn role(&self) -> NodeRole {
        match self.0 % 3 {
            0 => NodeRole::Sun,
            1 => NodeRole::Carrier,
            _ => NodeRole::Ring,
        }
    }

    pub fn parse(s: &str) -> Result<Self, TopologyError> {
        let err = || TopologyError::BadNodeName(s.to_string());
        let rest = s.trim().strip_prefix("PG").ok_or_else(err)?;
        let (num, role) = rest.split_once('.').ok_or_else(err)?;
        let pg: usize = num.parse().map_err(|_| err())?;
        if pg == 0 {
            return Err(err());
        }
        let role = match role.trim().to_ascii_lowercase().as_str() {
            "sun" => NodeRole::Sun,
            "carrier" => NodeRole::Carrier,
            "ring" => NodeRole::Ring,
            _ => return Err(err()),
        };
        Ok(Node::new(pg - 1, role))
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role() {
            NodeRole::Sun => "sun",
            NodeRole::Carrier => "carrier",
            NodeRole::Ring => "ring",
        };
        write!(f, "PG{}.{}", self.pg() + 1, role)
    }
}

/// A rigid joint: either two nodes spinning together or a node held still.
///
/// Both permanent connections and clutch locations use this type; a clutch
/// is just a connection that may be disengaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Connection {
    /// Two distinct nodes locked to a common speed (kept ordered).
    Pair(Node, Node),
    /// Node braked to the case.
    Ground(Node),
}

impl Connection {
    pub fn pair(a: Node, b: Node) -> Self {
        assert_ne!(a, b, "a node cannot connect to itself");
        if a < b {
            Connection::Pair(a, b)
        } else {
            Connection::Pair(b, a)
        }
    }

    pub fn ground(n: Node) -> Self {
        Connection::Ground(n)
    }

    pub fn parse(s: &str) -> Result<Self, TopologyError> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| TopologyError::BadConnection(s.to_string()))?;
        let a = Node::parse(a)?;
        if b.trim().eq_ignore_ascii_case("ground") {
            Ok(Connection::Ground(a))
        } else {
            let b = Node::parse(b)?;
            if a == b {
                return Err(TopologyError::BadConnection(s.to_string()));
            }
            Ok(Connection::pair(a, b))
        }
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connection::Pair(a, b) => write!(f, "{a}-{b}"),
            Connection::Ground(n) => write!(f, "{n}-ground"),
        }
    }
}

impl Serialize for Connection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Connection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Connection::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One planetary set: tooth counts (or any ratio basis) for sun and ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgSet {
    pub index: usize,
    pub sun_teeth: Frac,
    pub ring_teeth: Frac,
}

impl PgSet {
    pub fn new(index: usize, sun_teeth: Frac, ring_teeth: Frac) -> Result<Self, TopologyError> {
        if sun_teeth <= frac_int(0) || ring_teeth <= sun_teeth {
            return Err(TopologyError::BadToothRatio {
                pg: index + 1,
                sun: frac_str(&sun_teeth),
                ring: frac_str(&ring_teeth),
            });
        }
        Ok(Self {
            index,
            sun_teeth,
            ring_teeth,
        })
    }

    pub fn sun(&self) -> Node {
        Node::new(self.index, NodeRole::Sun)
    }

    pub fn carrier(&self) -> Node {
        Node::new(self.index, NodeRole::Carrier)
    }

    pub fn ring(&self) -> Node {
        Node::new(self.index, NodeRole::Ring)
    }
}

/// Ordered planetary sets making up the transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GearTrain {
    pub pgs: Vec<PgSet>,
}

impl GearTrain {
    /// Train with every set at the given ring/sun ratio.
    pub fn uniform(n_pg: usize, ring_over_sun: Frac) -> Result<Self, TopologyError> {
        let pgs = (0..n_pg)
            .map(|k| PgSet::new(k, frac_int(1), ring_over_sun.clone()))
            .collect::<Result<_, _>>()?;
        Ok(Self { pgs })
    }

    pub fn n_pg(&self) -> usize {
        self.pgs.len()
    }

    pub fn n_nodes(&self) -> usize {
        3 * self.pgs.len()
    }
}

/// Where the engine, the two motor/generators and the output shaft attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub engine: Node,
    pub mg1: Node,
    pub mg2: Node,
    pub output: Node,
}

impl Placement {
    /// Device nodes in the canonical row order: output, engine, MG1, MG2.
    pub fn device_nodes(&self) -> [Node; 4] {
        [self.output, self.engine, self.mg1, self.mg2]
    }
}

/// A configuration: gear train, device placement and permanent connections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub train: GearTrain,
    pub placement: Placement,
    pub permanent: Vec<Connection>,
}

impl Configuration {
    /// Structural checks shared by every consumer. Trains with at least four
    /// nodes must place the four devices on distinct nodes; smaller trains
    /// (a single planetary set has only three nodes) may stack devices.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let n = self.train.n_nodes();
        let devices = self.placement.device_nodes();
        for node in devices {
            if node.0 >= n {
                return Err(TopologyError::NodeOutOfRange { node: node.0, n });
            }
        }
        if n >= 4 {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if devices[i] == devices[j] {
                        return Err(TopologyError::SharedDeviceNode(devices[i]));
                    }
                }
            }
        }
        for conn in &self.permanent {
            self.validate_connection(conn)?;
            if let Connection::Ground(node) = conn {
                if *node == self.placement.output {
                    return Err(TopologyError::OutputGrounded);
                }
            }
        }
        Ok(())
    }

    pub fn validate_connection(&self, conn: &Connection) -> Result<(), TopologyError> {
        let n = self.train.n_nodes();
        let nodes: &[Node] = match conn {
            Connection::Pair(a, b) => &[*a, *b][..],
            Connection::Ground(a) => &[*a][..],
        };
        for node in nodes {
            if node.0 >= n {
                return Err(TopologyError::NodeOutOfRange { node: node.0, n });
            }
        }
        Ok(())
    }

    /// Permanent connections plus an engaged clutch set, for reduction.
    pub fn with_engaged(&self, engaged: &[Connection]) -> Vec<Connection> {
        let mut all = self.permanent.clone();
        all.extend_from_slice(engaged);
        all.sort();
        all.dedup();
        all
    }
}

/// Rotational inertias: per-device, per-node parasitic, and the vehicle
/// mass reflected to the output node. Exact rationals so reductions stay
/// bit-reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inertias {
    pub engine: Frac,
    pub mg1: Frac,
    pub mg2: Frac,
    pub vehicle_at_output: Frac,
    pub node: Vec<Frac>,
}

impl Inertias {
    pub fn new(
        engine: Frac,
        mg1: Frac,
        mg2: Frac,
        vehicle_at_output: Frac,
        node_parasitic: Frac,
        n_nodes: usize,
    ) -> Self {
        Self {
            engine,
            mg1,
            mg2,
            vehicle_at_output,
            node: vec![node_parasitic; n_nodes],
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<(), TopologyError> {
        let zero = frac_int(0);
        for (name, v) in [
            ("engine", &self.engine),
            ("MG1", &self.mg1),
            ("MG2", &self.mg2),
            ("vehicle", &self.vehicle_at_output),
        ] {
            if *v <= zero {
                return Err(TopologyError::InertiaNotPositive(name));
            }
        }
        if self.node.len() != n_nodes {
            return Err(TopologyError::InertiaCount {
                got: self.node.len(),
                want: n_nodes,
            });
        }
        if self.node.iter().any(|v| *v < zero) {
            return Err(TopologyError::InertiaNotPositive("node parasitic"));
        }
        Ok(())
    }
}

/// Structural validation failures, each naming the violated rule.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("node name `{0}` is not of the form PGk.{{sun|carrier|ring}}")]
    BadNodeName(String),
    #[error("connection `{0}` is not `node-node` or `node-ground`")]
    BadConnection(String),
    #[error("PG{pg} ring/sun ratio must exceed 1 (sun={sun}, ring={ring})")]
    BadToothRatio {
        pg: usize,
        sun: String,
        ring: String,
    },
    #[error("node index {node} out of range for a {n}-node train")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("devices must sit on distinct nodes; {0} is shared")]
    SharedDeviceNode(Node),
    #[error("the output node must not be grounded")]
    OutputGrounded,
    #[error("{0} inertia must be positive")]
    InertiaNotPositive(&'static str),
    #[error("expected {want} per-node inertias, got {got}")]
    InertiaCount { got: usize, want: usize },
}

/// Parses a rational field from text config, mapping errors to topology
/// diagnostics.
pub fn parse_ratio(s: &str) -> Result<Frac, TopologyError> {
    parse_frac(s).map_err(TopologyError::BadNodeName)
}

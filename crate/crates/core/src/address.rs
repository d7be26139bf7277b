use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Node id reserved on the wire for group broadcasts.
pub const BROADCAST_NODE: u8 = 0xFF;

/// A node's network-wide identity: an 8-bit group id and an 8-bit node id
/// within that group.
///
/// Ordering is lexicographic on `(group_id, node_id)`, which is also the
/// tie-break order used by elections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeAddress {
    pub group_id: u8,
    pub node_id: u8,
}

/// Total number of distinct addresses (256 groups of 256 nodes).
pub const ADDRESS_SPACE: u32 = 1 << 16;

impl NodeAddress {
    pub const fn new(group_id: u8, node_id: u8) -> Self {
        NodeAddress { group_id, node_id }
    }

    /// Canonical 2-octet encoding: group then node.
    pub const fn to_bytes(self) -> [u8; 2] {
        [self.group_id, self.node_id]
    }

    pub const fn same_group(self, other: NodeAddress) -> bool {
        self.group_id == other.group_id
    }

    pub const fn is_broadcast(self) -> bool {
        self.node_id == BROADCAST_NODE
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group_id, self.node_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid node address {0:?}: expected <group>:<node> with both in 0..=255")]
pub struct ParseAddressError(pub String);

impl FromStr for NodeAddress {
    type Err = ParseAddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAddressError(s.to_string());
        let (g, n) = s.trim().split_once(':').ok_or_else(err)?;
        Ok(NodeAddress {
            group_id: g.trim().parse().map_err(|_| err())?,
            node_id: n.trim().parse().map_err(|_| err())?,
        })
    }
}

impl TryFrom<String> for NodeAddress {
    type Error = ParseAddressError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<NodeAddress> for String {
    fn from(a: NodeAddress) -> String {
        a.to_string()
    }
}

//! Symmetric key management.
//!
//! Every node is deployed with the same master key `K`. At setup a node
//! derives, for itself and its group neighbors:
//!
//! * its node-based key `NB = F(self ∥ head ∥ K)`, used for traffic it sends
//!   to its group head,
//! * a pairwise key `PW = F(min ∥ max ∥ K)` per neighbor,
//! * its broadcast key `BC = F(self ∥ K)`, and the broadcast keys of its
//!   neighbors so their broadcasts can be read,
//!
//! and then forgets `K`. Each derivation input starts with a one-octet tag
//! (see [`Derivation`]) so that distinct formulas never share an input.
//!
//! Per session the group head derives `K1 = F(group ∥ base station ∥ seed)`
//! from a seed handed to it by the base station and sends it only to members
//! it trusts ([`rekey_group`]). A member that misses a re-key cannot read the
//! head's broadcasts for that session.

mod prf;
mod ring;

pub use prf::{HmacSha256Prf, Prf, SymmetricKey, KEY_LEN};
pub use ring::{
    derive_keyring, derive_keyring_with, derive_session_key, derive_session_key_with, rekey_group, Derivation, KeyRing,
    RekeyPlan,
};

use crate::address::NodeAddress;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeyError {
    #[error("key must be {KEY_LEN} octets, got {0}")]
    BadKeyLength(usize),
    #[error("invalid hex key: {0}")]
    BadHex(String),
    #[error("neighbor {neighbor} is outside group {group}")]
    ForeignNeighbor { neighbor: NodeAddress, group: u8 },
    #[error("a node is not its own neighbor ({0})")]
    SelfNeighbor(NodeAddress),
    #[error("node id 255 is the reserved broadcast id ({0})")]
    ReservedAddress(NodeAddress),
    #[error("{0} is not a known head candidate for this ring")]
    UnknownHead(NodeAddress),
    #[error("re-key threshold {0} outside [0, 1)")]
    BadThreshold(f64),
}

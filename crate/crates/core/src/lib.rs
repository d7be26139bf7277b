//! Security framework for clustered wireless sensor networks.
//!
//! * [`trust`]: neighbor monitoring, weighted trust levels, group head election.
//! * [`keys`]: master-key based derivation of node, pairwise, broadcast and
//!   session keys.
//! * [`linksec`]: the adaptive authenticated link-layer packet codec.
//! * [`isa`]: the security agent that picks a protection level per packet.
//! * [`sim`]: a deterministic TDM simulator comparing fixed and adaptive
//!   security energy use.

pub mod address;
pub mod cli;
pub mod isa;
pub mod keys;
pub mod linksec;
pub mod sim;
pub mod trust;

pub use address::NodeAddress;

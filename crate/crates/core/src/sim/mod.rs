//! Deterministic TDM simulator of grouped sensor nodes.
//!
//! Each frame has `slots_per_frame` slots. Member `n` of a group transmits in
//! slot `n`: first the packets it relays, then one packet of its own sensed
//! data. Own data goes to the next live member (pairwise key), which forwards
//! it to the head (node-based key) in its own slot; a member with no other
//! member to relay through sends straight to the head. The last slot belongs
//! to the head: election tallies, session re-keying, a beacon under the
//! session key, sealing the head's own reading, and the aggregated uplink to
//! the base station. A head alone in its group sends nothing.
//!
//! Everyone in a group listens to every transmission and keeps a trust
//! table from what it overhears. Session boundaries fall every
//! `session_length` frames; with `rotate_heads` the head calls an election
//! there, collects votes during the next frame and re-keys under whichever
//! node won.
//!
//! Energy: the sender pays `tx_per_octet` per wire octet plus one cipher
//! pass, every live listener pays `rx_per_octet` per wire octet, and a
//! decoder pays one cipher pass per counter candidate it tries. A cipher
//! pass costs `rc5_per_block_per_round` per RC5 round per block call (or
//! `xor_per_octet` at level 0) plus `mac_fixed` when a MAC is present.
//!
//! Config files are TOML; see [`SimConfig`] for the keys.

mod compare;
mod config;
mod energy;
mod engine;
mod report;

pub use compare::{compare_fixed_vs_adaptive, SavingsReport, SAVINGS_CSV_HEADER};
pub use config::{AdversaryBehavior, AdversarySpec, EnergyModel, SimConfig, CONFIG_KEYS};
pub use energy::{Battery, Charge, EnergyLedger};
pub use engine::{run, BASE_STATION};
pub use report::{ElectionRecord, NodeReport, RekeyRecord, SimReport, ENERGY_CSV_HEADER};

use crate::isa::IsaError;
use crate::keys::KeyError;
use crate::trust::TrustError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid override: {0}")]
    Override(String),
    #[error(transparent)]
    Isa(#[from] IsaError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Trust(#[from] TrustError),
}

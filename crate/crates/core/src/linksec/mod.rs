//! The adaptive secure link layer.
//!
//! A packet is a 5-octet header (see [`PacketHeader`]), the ciphertext, and a
//! 32-bit MAC when the header's auth bit is set. Four encryption levels are
//! selectable per packet: a PRF keystream XOR, or RC5 with 4, 8 or 12 rounds
//! in one-pass authenticated-encryption (OCB) mode. Each direction keeps a
//! 32-bit counter that serves as the nonce; only its low octet travels, and
//! the receiver rebuilds the rest (see [`decode_with_key`]).

mod codec;
mod counter;
mod level;
pub mod ocb;
mod packet;
pub mod rc5;

pub use codec::{
    cipher_work, decode, decode_requiring, decode_with_key, encode, encode_with_key, nonce_block, open, receiving_key,
    seal, sending_key, CipherWork, Decoded, KeyRole, LinkAddress, Sealed,
};
pub use counter::{CounterState, CounterTable};
pub use level::{Encryption, SecurityLevel};
pub use packet::{
    wire_len, PacketHeader, SecurePacket, ADDRESSING_OVERHEAD, HEADER_LEN, MAC_LEN, MAX_PAYLOAD,
    TINYSEC_ADDRESSING_OVERHEAD,
};
pub use rc5::{rc5_block, Direction, Rc5};

/// Default number of extra 256-step counter candidates a receiver tries.
pub const DEFAULT_LOSS_THRESHOLD: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("RC5 rounds must be one of 4, 8, 12 (got {0})")]
    BadRounds(u8),
    #[error("RC5 key of {0} octets is too long")]
    BadCipherKey(usize),
    #[error("payload of {0} octets exceeds the 29-octet maximum")]
    PayloadTooLarge(usize),
    #[error("malformed packet: {0}")]
    Format(String),
    #[error("MAC verification failed after {attempts} counter candidates")]
    Authentication { attempts: u32 },
    #[error("stale counter {counter}: replayed or duplicate packet")]
    Replay { counter: u32, attempts: u32 },
    #[error("no key for node {0} in this ring")]
    UnknownDestination(u8),
    #[error("packet for node {dest} is not addressed to this node")]
    NotAddressed { dest: u8 },
    #[error("packet for group {got}, this node is in group {expected}")]
    WrongGroup { expected: u8, got: u8 },
    #[error("32-bit counter exhausted")]
    CounterExhausted,
    #[error("packet at {got} is below the required {floor}")]
    Downgrade { got: SecurityLevel, floor: SecurityLevel },
}

impl LinkError {
    /// Counter candidates tried before the rejection (each costs one open).
    pub fn attempts(&self) -> u32 {
        match self {
            LinkError::Authentication { attempts } | LinkError::Replay { attempts, .. } => *attempts,
            _ => 0,
        }
    }
}

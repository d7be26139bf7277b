use std::fmt;

use super::{LinkError, SecurityLevel};

/// Header octets on the wire.
pub const HEADER_LEN: usize = 5;
/// Truncated MAC length.
pub const MAC_LEN: usize = 4;
/// Largest payload (TinySec parity). Length codes 30 and 31 are invalid.
pub const MAX_PAYLOAD: usize = 29;
/// Group, destination and source octets.
pub const ADDRESSING_OVERHEAD: usize = 3;
/// Two-octet source plus two-octet destination in TinySec.
pub const TINYSEC_ADDRESSING_OVERHEAD: usize = 4;

/// The 5-octet link header:
///
/// ```text
/// octet 0  group
/// octet 1  destination node id (0xFF = group broadcast)
/// octet 2  source node id
/// octet 3  length(5) ∥ encryption(2) ∥ auth(1), most significant first
/// octet 4  low 8 bits of the sender's 32-bit counter
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketHeader {
    pub group: u8,
    pub dest: u8,
    pub src: u8,
    pub length: u8,
    pub level: SecurityLevel,
    pub counter_lsb: u8,
}

impl PacketHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        [
            self.group,
            self.dest,
            self.src,
            (self.length << 3) | self.level.bits(),
            self.counter_lsb,
        ]
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, LinkError> {
        if bytes.len() < HEADER_LEN {
            return Err(LinkError::Format(format!(
                "{} octets is shorter than the {HEADER_LEN}-octet header",
                bytes.len()
            )));
        }
        let length = bytes[3] >> 3;
        if usize::from(length) > MAX_PAYLOAD {
            return Err(LinkError::Format(format!("reserved length code {length}")));
        }
        Ok(PacketHeader {
            group: bytes[0],
            dest: bytes[1],
            src: bytes[2],
            length,
            level: SecurityLevel::from_bits(bytes[3] & 0b111),
            counter_lsb: bytes[4],
        })
    }

    /// Total wire size implied by this header.
    pub fn wire_len(&self) -> usize {
        wire_len(usize::from(self.length), self.level.auth)
    }
}

/// `5 + length + 4·auth`.
pub const fn wire_len(payload_len: usize, auth: bool) -> usize {
    HEADER_LEN + payload_len + if auth { MAC_LEN } else { 0 }
}

/// A parsed wire image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecurePacket {
    pub header: PacketHeader,
    pub ciphertext: Vec<u8>,
    pub mac: Option<[u8; MAC_LEN]>,
}

impl SecurePacket {
    /// Splits a wire image into header, ciphertext and MAC, checking the
    /// length field against the actual size. No keys are needed.
    pub fn parse(wire: &[u8]) -> Result<Self, LinkError> {
        let header = PacketHeader::parse(wire)?;
        if wire.len() != header.wire_len() {
            return Err(LinkError::Format(format!(
                "wire is {} octets, header implies {}",
                wire.len(),
                header.wire_len()
            )));
        }
        let body_end = HEADER_LEN + usize::from(header.length);
        let ciphertext = wire[HEADER_LEN..body_end].to_vec();
        let mac = header
            .level
            .auth
            .then(|| wire[body_end..].try_into().expect("length checked"));
        Ok(SecurePacket {
            header,
            ciphertext,
            mac,
        })
    }

    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.wire_len());
        out.extend_from_slice(&self.header.to_bytes());
        out.extend_from_slice(&self.ciphertext);
        if let Some(mac) = &self.mac {
            out.extend_from_slice(mac);
        }
        out
    }
}

impl fmt::Display for SecurePacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.header;
        writeln!(f, "group={}", h.group)?;
        writeln!(f, "dest={}", h.dest)?;
        writeln!(f, "src={}", h.src)?;
        writeln!(f, "length={}", h.length)?;
        writeln!(f, "encryption={}", h.level.encryption.code())?;
        writeln!(f, "auth={}", u8::from(h.level.auth))?;
        writeln!(f, "counter_lsb={}", h.counter_lsb)?;
        writeln!(f, "ciphertext={}", hex::encode(&self.ciphertext))?;
        match &self.mac {
            Some(m) => write!(f, "mac={}", hex::encode(m)),
            None => write!(f, "mac=none"),
        }
    }
}

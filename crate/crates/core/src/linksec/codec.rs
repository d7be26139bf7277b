use subtle::ConstantTimeEq;

use super::ocb;
use super::packet::{PacketHeader, SecurePacket, HEADER_LEN, MAC_LEN, MAX_PAYLOAD};
use super::rc5::Rc5;
use super::{CounterState, Encryption, LinkError, SecurityLevel};
use crate::address::{NodeAddress, BROADCAST_NODE};
use crate::keys::{HmacSha256Prf, KeyRing, Prf, SymmetricKey};

const XOR_STREAM_TAG: u8 = 0x05;
const XOR_MAC_TAG: u8 = 0x06;

/// The per-packet nonce block: group, source, destination, a zero octet,
/// then the full 32-bit counter big-endian. Carrying the addresses keeps
/// the two directions of a pairwise key from sharing nonces.
pub fn nonce_block(group: u8, src: u8, dest: u8, counter: u32) -> [u8; 8] {
    let c = counter.to_be_bytes();
    [group, src, dest, 0, c[0], c[1], c[2], c[3]]
}

/// Ciphertext and optional truncated MAC produced by [`seal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sealed {
    pub ciphertext: Vec<u8>,
    pub mac: Option<[u8; MAC_LEN]>,
}

fn xor_keystream(key: &SymmetricKey, nonce: &[u8; 8], len: usize) -> Vec<u8> {
    let mut input = [0u8; 10];
    input[0] = XOR_STREAM_TAG;
    input[1..9].copy_from_slice(nonce);
    let mut stream = Vec::with_capacity(len + 10);
    let mut block = 0u8;
    while stream.len() < len {
        input[9] = block;
        stream.extend_from_slice(HmacSha256Prf.eval(key, &input).as_bytes());
        block += 1;
    }
    stream.truncate(len);
    stream
}

fn xor_mac(key: &SymmetricKey, nonce: &[u8; 8], aad: &[u8], ciphertext: &[u8]) -> [u8; MAC_LEN] {
    let mut msg = Vec::with_capacity(1 + 8 + aad.len() + ciphertext.len());
    msg.push(XOR_MAC_TAG);
    msg.extend_from_slice(nonce);
    msg.extend_from_slice(aad);
    msg.extend_from_slice(ciphertext);
    let out = HmacSha256Prf.eval(key, &msg);
    out.as_bytes()[..MAC_LEN].try_into().expect("10 >= 4")
}

fn truncate_tag(tag: [u8; 8]) -> [u8; MAC_LEN] {
    tag[..MAC_LEN].try_into().expect("8 >= 4")
}

/// Encrypts (and, when `header.level.auth`, authenticates) one payload.
///
/// `header` supplies the level, the addresses for the nonce and the five
/// octets bound as associated data; its `length` and `counter_lsb` must
/// already describe this payload and `counter`.
pub fn seal(key: &SymmetricKey, counter: u32, header: &PacketHeader, plaintext: &[u8]) -> Result<Sealed, LinkError> {
    if plaintext.len() > MAX_PAYLOAD {
        return Err(LinkError::PayloadTooLarge(plaintext.len()));
    }
    let nonce = nonce_block(header.group, header.src, header.dest, counter);
    let aad = header.to_bytes();
    let level = header.level;
    let (ciphertext, mac) = match level.encryption.rounds() {
        None => {
            let ct: Vec<u8> = plaintext
                .iter()
                .zip(xor_keystream(key, &nonce, plaintext.len()))
                .map(|(p, k)| p ^ k)
                .collect();
            let mac = level.auth.then(|| xor_mac(key, &nonce, &aad, &ct));
            (ct, mac)
        }
        Some(rounds) => {
            let cipher = Rc5::new(key.as_bytes(), rounds)?;
            let (ct, tag) = ocb::seal(&cipher, nonce, &aad, plaintext);
            (ct, level.auth.then(|| truncate_tag(tag)))
        }
    };
    Ok(Sealed { ciphertext, mac })
}

/// Inverse of [`seal`]. With a MAC present it must verify, otherwise
/// `Authentication` is returned.
pub fn open(
    key: &SymmetricKey,
    counter: u32,
    header: &PacketHeader,
    ciphertext: &[u8],
    mac: Option<&[u8; MAC_LEN]>,
) -> Result<Vec<u8>, LinkError> {
    let nonce = nonce_block(header.group, header.src, header.dest, counter);
    let aad = header.to_bytes();
    let (plain, expected) = match header.level.encryption.rounds() {
        None => {
            let plain = ciphertext
                .iter()
                .zip(xor_keystream(key, &nonce, ciphertext.len()))
                .map(|(c, k)| c ^ k)
                .collect();
            let expected = mac.map(|_| xor_mac(key, &nonce, &aad, ciphertext));
            (plain, expected)
        }
        Some(rounds) => {
            let cipher = Rc5::new(key.as_bytes(), rounds)?;
            let (plain, tag) = ocb::unseal(&cipher, nonce, &aad, ciphertext);
            (plain, mac.map(|_| truncate_tag(tag)))
        }
    };
    match (mac, expected) {
        (Some(got), Some(want)) if !bool::from(got.ct_eq(&want)) => Err(LinkError::Authentication { attempts: 1 }),
        _ => Ok(plain),
    }
}

/// Block-cipher and PRF work for one seal or one open, used for energy
/// accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CipherWork {
    /// RC5 block invocations multiplied by the round count.
    pub rc5_block_rounds: u64,
    /// Octets XORed with the PRF keystream.
    pub xor_octets: u64,
    /// Whether a MAC is computed.
    pub mac: bool,
}

pub fn cipher_work(level: SecurityLevel, payload_len: usize) -> CipherWork {
    match level.encryption.rounds() {
        None => CipherWork {
            rc5_block_rounds: 0,
            xor_octets: payload_len as u64,
            mac: level.auth,
        },
        Some(r) => CipherWork {
            rc5_block_rounds: u64::from(r) * ocb::block_calls(payload_len, HEADER_LEN, level.auth),
            xor_octets: 0,
            mac: level.auth,
        },
    }
}

/// Addressing for [`encode_with_key`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkAddress {
    pub group: u8,
    pub src: u8,
    pub dest: u8,
}

/// Seals `payload` under `key` with the next counter value and lays out the
/// wire image. Returns the wire bytes and the counter value just used.
pub fn encode_with_key(
    key: &SymmetricKey,
    addr: LinkAddress,
    level: SecurityLevel,
    counter: CounterState,
    payload: &[u8],
) -> Result<(Vec<u8>, CounterState), LinkError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(LinkError::PayloadTooLarge(payload.len()));
    }
    let next = counter.next()?;
    let header = PacketHeader {
        group: addr.group,
        dest: addr.dest,
        src: addr.src,
        length: payload.len() as u8,
        level,
        counter_lsb: next.value() as u8,
    };
    let sealed = seal(key, next.value(), &header, payload)?;
    let packet = SecurePacket {
        header,
        ciphertext: sealed.ciphertext,
        mac: sealed.mac,
    };
    Ok((packet.to_wire(), next))
}

/// A successfully decoded packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub header: PacketHeader,
    pub payload: Vec<u8>,
    /// Reconstructed full counter; the receiver's new state.
    pub counter: CounterState,
    /// Candidate counters tried (each one a full open).
    pub attempts: u32,
}

/// Receives one wire image under `key`.
///
/// The receiver expects `last + 1`. It splices the transmitted low octet onto
/// the expected counter's high 24 bits (moving up one wrap if that lands
/// below the expectation) and checks the MAC. On failure it assumes a burst
/// of lost packets and retries one wrap (256) further, never looking more
/// than `loss_threshold * 256` counter values past the expectation. If
/// nothing verifies and the counter one wrap back does, the packet is an
/// old one and is rejected as a replay.
///
/// Without a MAC only monotonicity is enforced: the counter is taken as the
/// first candidate, and a low octet equal to the last accepted one is
/// treated as a duplicate.
pub fn decode_with_key(
    wire: &[u8],
    key: &SymmetricKey,
    last: CounterState,
    loss_threshold: u32,
) -> Result<Decoded, LinkError> {
    decode_requiring(wire, key, last, loss_threshold, SecurityLevel::MIN)
}

/// [`decode_with_key`] that first rejects any packet whose header claims
/// less protection than `floor`. The level bits travel in clear, so without
/// a floor an attacker can relabel an authenticated packet as an
/// unauthenticated one of the same size.
pub fn decode_requiring(
    wire: &[u8],
    key: &SymmetricKey,
    last: CounterState,
    loss_threshold: u32,
    floor: SecurityLevel,
) -> Result<Decoded, LinkError> {
    let packet = SecurePacket::parse(wire)?;
    let header = packet.header;
    if !header.level.meets(floor) {
        return Err(LinkError::Downgrade {
            got: header.level,
            floor,
        });
    }
    let last = u64::from(last.value());
    let expected = last + 1;
    let mut first = (expected & !0xFF) | u64::from(header.counter_lsb);
    if first < expected {
        first += 256;
    }

    let accept = |counter: u64, payload: Vec<u8>, attempts: u32| Decoded {
        header,
        payload,
        counter: CounterState::new(counter as u32),
        attempts,
    };

    let Some(mac) = packet.mac.as_ref() else {
        if first - last >= 256 {
            return Err(LinkError::Replay {
                counter: (first - 256) as u32,
                attempts: 0,
            });
        }
        if first > u64::from(u32::MAX) {
            return Err(LinkError::CounterExhausted);
        }
        let payload = open(key, first as u32, &header, &packet.ciphertext, None)?;
        return Ok(accept(first, payload, 1));
    };

    let mut attempts = 0u32;
    for step in 0..=u64::from(loss_threshold) {
        let candidate = first + 256 * step;
        if candidate > u64::from(u32::MAX) || candidate - expected > 256 * u64::from(loss_threshold) {
            break;
        }
        attempts += 1;
        if let Ok(payload) = open(key, candidate as u32, &header, &packet.ciphertext, Some(mac)) {
            return Ok(accept(candidate, payload, attempts));
        }
    }

    if first > 256 {
        let stale = first - 256;
        attempts += 1;
        if open(key, stale as u32, &header, &packet.ciphertext, Some(mac)).is_ok() {
            return Err(LinkError::Replay {
                counter: stale as u32,
                attempts,
            });
        }
    }
    Err(LinkError::Authentication { attempts })
}

/// Which of a ring's keys protects a packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyRole {
    NodeBased,
    Pairwise,
    Broadcast,
    Session,
}

/// Key a sender uses for `dest`:
///
/// * group broadcast (`dest == 0xFF`) from the head holding a session key:
///   the session key;
/// * any other group broadcast: the sender's broadcast key;
/// * a member's packet to its head: the member's node-based key;
/// * any other unicast: the pairwise key with `dest`.
pub fn sending_key(ring: &KeyRing, dest: u8) -> Result<(KeyRole, SymmetricKey), LinkError> {
    if dest == BROADCAST_NODE {
        return Ok(match ring.session {
            Some(k) if ring.is_head() => (KeyRole::Session, k),
            _ => (KeyRole::Broadcast, ring.broadcast),
        });
    }
    if dest == ring.owner.node_id {
        return Err(LinkError::UnknownDestination(dest));
    }
    if !ring.is_head() && dest == ring.group_head.node_id {
        return Ok((KeyRole::NodeBased, ring.node_based));
    }
    let peer = NodeAddress::new(ring.owner.group_id, dest);
    ring.pairwise
        .get(&peer)
        .map(|k| (KeyRole::Pairwise, *k))
        .ok_or(LinkError::UnknownDestination(dest))
}

/// Key a receiver uses for a packet with this header; mirrors [`sending_key`].
pub fn receiving_key(ring: &KeyRing, header: &PacketHeader) -> Result<(KeyRole, SymmetricKey), LinkError> {
    let me = ring.owner;
    if header.group != me.group_id {
        return Err(LinkError::WrongGroup {
            expected: me.group_id,
            got: header.group,
        });
    }
    if header.src == me.node_id || (header.dest != me.node_id && header.dest != BROADCAST_NODE) {
        return Err(LinkError::NotAddressed { dest: header.dest });
    }
    let src = NodeAddress::new(me.group_id, header.src);
    let missing = || LinkError::UnknownDestination(header.src);
    if header.dest == BROADCAST_NODE {
        if src == ring.group_head {
            if let Some(k) = ring.session {
                return Ok((KeyRole::Session, k));
            }
        }
        return ring
            .neighbor_broadcast
            .get(&src)
            .map(|k| (KeyRole::Broadcast, *k))
            .ok_or_else(missing);
    }
    if ring.is_head() {
        if let Some(k) = ring.member_node_based.get(&src) {
            return Ok((KeyRole::NodeBased, *k));
        }
    }
    ring.pairwise
        .get(&src)
        .map(|k| (KeyRole::Pairwise, *k))
        .ok_or_else(missing)
}

/// Encodes a packet from the ring's owner to node `dest` of its group,
/// choosing the key with [`sending_key`].
pub fn encode(
    ring: &KeyRing,
    dest: u8,
    level: SecurityLevel,
    counter: CounterState,
    payload: &[u8],
) -> Result<(Vec<u8>, CounterState), LinkError> {
    let (_, key) = sending_key(ring, dest)?;
    let addr = LinkAddress {
        group: ring.owner.group_id,
        src: ring.owner.node_id,
        dest,
    };
    encode_with_key(&key, addr, level, counter, payload)
}

/// Decodes a packet addressed to the ring's owner (or broadcast to its
/// group). `expected` is the last counter accepted from the packet's
/// source for this destination; packets below `floor` are rejected.
pub fn decode(
    wire: &[u8],
    ring: &KeyRing,
    expected: CounterState,
    loss_threshold: u32,
    floor: SecurityLevel,
) -> Result<Decoded, LinkError> {
    let header = PacketHeader::parse(wire)?;
    let (_, key) = receiving_key(ring, &header)?;
    decode_requiring(wire, &key, expected, loss_threshold, floor)
}

impl Encryption {
    /// Helper for tests and tools: the level with this encryption and a MAC.
    pub const fn with_auth(self) -> SecurityLevel {
        SecurityLevel::new(self, true)
    }
}

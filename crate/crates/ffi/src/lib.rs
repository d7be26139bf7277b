//! C ABI over `wsnsec`: key rings, the secure link codec and the trust level.
//!
//! Every function returns a [`WsnStatus`]; outputs go through pointer
//! arguments. Key rings are opaque and must be released with
//! [`wsn_keyring_free`]. The header is `include/wsnsec.h`.

use std::collections::BTreeSet;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wsnsec::keys::{self, KeyError, KeyRing, SymmetricKey};
use wsnsec::linksec::{self, CounterState, Encryption, LinkError, SecurePacket, SecurityLevel};
use wsnsec::trust::{self, NeighborRecord, TrustWeights};
use wsnsec::NodeAddress;

/// Octets in every key.
pub const WSN_KEY_LEN: usize = 10;
/// Largest payload a packet carries.
pub const WSN_MAX_PAYLOAD: usize = 29;
/// Largest wire image: header, full payload and MAC.
pub const WSN_MAX_WIRE_LEN: usize = 38;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BadKey = 3,
    BufferTooSmall = 4,
    Format = 5,
    Authentication = 6,
    Replay = 7,
    UnknownDestination = 8,
    NotAddressed = 9,
    WrongGroup = 10,
    CounterExhausted = 11,
    PayloadTooLarge = 12,
    Downgrade = 13,
    Panic = 99,
}

/// Opaque key ring of one node.
pub struct WsnKeyRing {
    inner: KeyRing,
}

/// Header fields of a wire image, readable without keys.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct WsnPacketInfo {
    pub group: u8,
    pub dest: u8,
    pub src: u8,
    pub length: u8,
    /// 0 = XOR keystream, 1..3 = RC5 with 4, 8, 12 rounds.
    pub encryption: u8,
    pub auth: bool,
    pub counter_lsb: u8,
    pub wire_len: usize,
}

/// Counters and samples one node keeps about a neighbor.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct WsnNeighborRecord {
    pub ae_t1: f64,
    pub ae_t2: f64,
    pub pss_t1: f64,
    pub pss_t2: f64,
    pub crf: u64,
    pub craf: u64,
    pub rc: f64,
    pub npc: u64,
    pub drf: u64,
    pub draf: u64,
    pub pd: u64,
    pub npt: u64,
    pub npr: u64,
}

impl From<&WsnNeighborRecord> for NeighborRecord {
    fn from(r: &WsnNeighborRecord) -> Self {
        NeighborRecord {
            ae_t1: r.ae_t1,
            ae_t2: r.ae_t2,
            pss_t1: r.pss_t1,
            pss_t2: r.pss_t2,
            crf: r.crf,
            craf: r.craf,
            rc: r.rc,
            npc: r.npc,
            drf: r.drf,
            draf: r.draf,
            pd: r.pd,
            npt: r.npt,
            npr: r.npr,
        }
    }
}

fn link_status(e: &LinkError) -> WsnStatus {
    match e {
        LinkError::BadRounds(_) | LinkError::BadCipherKey(_) => WsnStatus::InvalidArgument,
        LinkError::PayloadTooLarge(_) => WsnStatus::PayloadTooLarge,
        LinkError::Format(_) => WsnStatus::Format,
        LinkError::Authentication { .. } => WsnStatus::Authentication,
        LinkError::Replay { .. } => WsnStatus::Replay,
        LinkError::UnknownDestination(_) => WsnStatus::UnknownDestination,
        LinkError::NotAddressed { .. } => WsnStatus::NotAddressed,
        LinkError::WrongGroup { .. } => WsnStatus::WrongGroup,
        LinkError::CounterExhausted => WsnStatus::CounterExhausted,
        LinkError::Downgrade { .. } => WsnStatus::Downgrade,
    }
}

fn key_status(e: &KeyError) -> WsnStatus {
    match e {
        KeyError::BadKeyLength(_) | KeyError::BadHex(_) => WsnStatus::BadKey,
        _ => WsnStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> WsnStatus) -> WsnStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(WsnStatus::Panic)
}

unsafe fn key_arg(p: *const u8) -> Option<SymmetricKey> {
    if p.is_null() {
        return None;
    }
    let bytes: [u8; WSN_KEY_LEN] = slice::from_raw_parts(p, WSN_KEY_LEN).try_into().ok()?;
    Some(SymmetricKey::from_bytes(bytes))
}

unsafe fn bytes_arg<'a>(p: *const u8, len: usize) -> Option<&'a [u8]> {
    match (p.is_null(), len) {
        (_, 0) => Some(&[]),
        (true, _) => None,
        (false, n) => Some(slice::from_raw_parts(p, n)),
    }
}

/// Derives the key ring of node `group:node` whose head is `group:head`.
/// `neighbors` lists the node ids of the other group members.
///
/// # Safety
/// `master` points to 10 readable octets, `neighbors` to `neighbor_count`
/// octets (or is null when the count is 0), `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wsn_keyring_derive(
    master: *const u8,
    group: u8,
    node: u8,
    head: u8,
    neighbors: *const u8,
    neighbor_count: usize,
    out: *mut *mut WsnKeyRing,
) -> WsnStatus {
    guard(|| {
        if out.is_null() {
            return WsnStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let (Some(master), Some(ids)) = (key_arg(master), bytes_arg(neighbors, neighbor_count)) else {
            return WsnStatus::NullPointer;
        };
        let set: BTreeSet<NodeAddress> = ids.iter().map(|n| NodeAddress::new(group, *n)).collect();
        match keys::derive_keyring(
            &master,
            NodeAddress::new(group, node),
            NodeAddress::new(group, head),
            &set,
        ) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(WsnKeyRing { inner }));
                WsnStatus::Ok
            }
            Err(e) => key_status(&e),
        }
    })
}

/// Releases a ring from [`wsn_keyring_derive`]. Null is ignored.
///
/// # Safety
/// `ring` is null or a pointer not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wsn_keyring_free(ring: *mut WsnKeyRing) {
    if !ring.is_null() {
        drop(Box::from_raw(ring));
    }
}

/// Switches the ring to a new group head.
///
/// # Safety
/// `ring` is a live ring.
#[no_mangle]
pub unsafe extern "C" fn wsn_keyring_set_head(ring: *mut WsnKeyRing, head: u8) -> WsnStatus {
    guard(|| {
        let Some(r) = ring.as_mut() else {
            return WsnStatus::NullPointer;
        };
        let head = NodeAddress::new(r.inner.owner.group_id, head);
        match r.inner.set_group_head(head) {
            Ok(()) => WsnStatus::Ok,
            Err(e) => key_status(&e),
        }
    })
}

/// Installs the group session key derived from `seed` for the base station
/// at `bs_group:bs_node`.
///
/// # Safety
/// `ring` is a live ring, `seed` points to 10 readable octets.
#[no_mangle]
pub unsafe extern "C" fn wsn_keyring_set_session(
    ring: *mut WsnKeyRing,
    seed: *const u8,
    bs_group: u8,
    bs_node: u8,
) -> WsnStatus {
    guard(|| {
        let (Some(r), Some(seed)) = (ring.as_mut(), key_arg(seed)) else {
            return WsnStatus::NullPointer;
        };
        let group = r.inner.owner.group_id;
        r.inner.session = Some(keys::derive_session_key(
            &seed,
            group,
            NodeAddress::new(bs_group, bs_node),
        ));
        WsnStatus::Ok
    })
}

/// Copies the node-based key the ring currently uses towards its head.
///
/// # Safety
/// `ring` is a live ring, `out` has room for 10 octets.
#[no_mangle]
pub unsafe extern "C" fn wsn_keyring_node_based_key(ring: *const WsnKeyRing, out: *mut u8) -> WsnStatus {
    guard(|| {
        let Some(r) = ring.as_ref() else {
            return WsnStatus::NullPointer;
        };
        if out.is_null() {
            return WsnStatus::NullPointer;
        }
        ptr::copy_nonoverlapping(r.inner.node_based.as_bytes().as_ptr(), out, WSN_KEY_LEN);
        WsnStatus::Ok
    })
}

/// Encodes `payload` from the ring's owner to node `dest` (255 broadcasts
/// to the group). `*counter` is the last counter used towards `dest` and is
/// advanced on success.
///
/// # Safety
/// `ring` is a live ring; `counter`, `out_len` are writable; `payload` has
/// `payload_len` readable octets; `out` has `out_cap` writable octets.
#[no_mangle]
pub unsafe extern "C" fn wsn_packet_encode(
    ring: *const WsnKeyRing,
    dest: u8,
    encryption: u8,
    auth: bool,
    counter: *mut u32,
    payload: *const u8,
    payload_len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> WsnStatus {
    guard(|| {
        let (Some(r), Some(payload)) = (ring.as_ref(), bytes_arg(payload, payload_len)) else {
            return WsnStatus::NullPointer;
        };
        if counter.is_null() || out.is_null() || out_len.is_null() {
            return WsnStatus::NullPointer;
        }
        let Ok(enc) = Encryption::from_code(encryption) else {
            return WsnStatus::InvalidArgument;
        };
        let level = SecurityLevel::new(enc, auth);
        match linksec::encode(&r.inner, dest, level, CounterState::new(*counter), payload) {
            Ok((wire, next)) => {
                *out_len = wire.len();
                if wire.len() > out_cap {
                    return WsnStatus::BufferTooSmall;
                }
                ptr::copy_nonoverlapping(wire.as_ptr(), out, wire.len());
                *counter = next.value();
                WsnStatus::Ok
            }
            Err(e) => link_status(&e),
        }
    })
}

/// Decodes a wire image addressed to the ring's owner. Packets with weaker
/// encryption than `min_encryption`, or without a MAC when `require_auth`
/// is set, are rejected. `*counter` is the last counter accepted from the
/// packet's source and is replaced by the reconstructed one on success. `*attempts`, when not null, receives the
/// number of counter candidates tried, also on failure.
///
/// # Safety
/// `ring` is a live ring; `wire` has `wire_len` readable octets; `counter`
/// and `payload_len` are writable; `payload` has `payload_cap` writable
/// octets; `attempts` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn wsn_packet_decode(
    ring: *const WsnKeyRing,
    wire: *const u8,
    wire_len: usize,
    loss_threshold: u32,
    min_encryption: u8,
    require_auth: bool,
    counter: *mut u32,
    payload: *mut u8,
    payload_cap: usize,
    payload_len: *mut usize,
    attempts: *mut u32,
) -> WsnStatus {
    guard(|| {
        let (Some(r), Some(wire)) = (ring.as_ref(), bytes_arg(wire, wire_len)) else {
            return WsnStatus::NullPointer;
        };
        if counter.is_null() || payload_len.is_null() || (payload.is_null() && payload_cap > 0) {
            return WsnStatus::NullPointer;
        }
        let Ok(enc) = Encryption::from_code(min_encryption) else {
            return WsnStatus::InvalidArgument;
        };
        let floor = SecurityLevel::new(enc, require_auth);
        let result = linksec::decode(wire, &r.inner, CounterState::new(*counter), loss_threshold, floor);
        let tried = match &result {
            Ok(d) => d.attempts,
            Err(e) => e.attempts(),
        };
        if let Some(a) = attempts.as_mut() {
            *a = tried;
        }
        match result {
            Ok(d) => {
                *payload_len = d.payload.len();
                if d.payload.len() > payload_cap {
                    return WsnStatus::BufferTooSmall;
                }
                if !d.payload.is_empty() {
                    ptr::copy_nonoverlapping(d.payload.as_ptr(), payload, d.payload.len());
                }
                *counter = d.counter.value();
                WsnStatus::Ok
            }
            Err(e) => link_status(&e),
        }
    })
}

/// Reads the header of a wire image and checks its length.
///
/// # Safety
/// `wire` has `wire_len` readable octets, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wsn_packet_dissect(wire: *const u8, wire_len: usize, out: *mut WsnPacketInfo) -> WsnStatus {
    guard(|| {
        let (Some(wire), Some(out)) = (bytes_arg(wire, wire_len), out.as_mut()) else {
            return WsnStatus::NullPointer;
        };
        match SecurePacket::parse(wire) {
            Ok(p) => {
                let h = p.header;
                *out = WsnPacketInfo {
                    group: h.group,
                    dest: h.dest,
                    src: h.src,
                    length: h.length,
                    encryption: h.level.encryption.code(),
                    auth: h.level.auth,
                    counter_lsb: h.counter_lsb,
                    wire_len: h.wire_len(),
                };
                WsnStatus::Ok
            }
            Err(e) => link_status(&e),
        }
    })
}

/// Trust level of a neighbor. `weights` points to six coefficients, or is
/// null for the defaults (1/7 each).
///
/// # Safety
/// `record` is readable, `weights` is null or has 6 readable doubles,
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wsn_compute_trust(
    record: *const WsnNeighborRecord,
    weights: *const f64,
    out: *mut f64,
) -> WsnStatus {
    guard(|| {
        let (Some(record), Some(out)) = (record.as_ref(), out.as_mut()) else {
            return WsnStatus::NullPointer;
        };
        let weights = if weights.is_null() {
            TrustWeights::default()
        } else {
            let w: [f64; 6] = slice::from_raw_parts(weights, 6).try_into().expect("six weights");
            match TrustWeights::new(w) {
                Ok(w) => w,
                Err(_) => return WsnStatus::InvalidArgument,
            }
        };
        let record = NeighborRecord::from(record);
        if record.validate().is_err() {
            return WsnStatus::InvalidArgument;
        }
        *out = trust::compute_trust(&record, &weights);
        WsnStatus::Ok
    })
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn wsn_status_message(status: WsnStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        WsnStatus::Ok => b"ok\0",
        WsnStatus::NullPointer => b"null pointer argument\0",
        WsnStatus::InvalidArgument => b"invalid argument\0",
        WsnStatus::BadKey => b"bad key\0",
        WsnStatus::BufferTooSmall => b"output buffer too small\0",
        WsnStatus::Format => b"malformed packet\0",
        WsnStatus::Authentication => b"MAC verification failed\0",
        WsnStatus::Replay => b"replayed or stale packet\0",
        WsnStatus::UnknownDestination => b"no key for that node\0",
        WsnStatus::NotAddressed => b"packet not addressed to this node\0",
        WsnStatus::WrongGroup => b"packet for another group\0",
        WsnStatus::CounterExhausted => b"counter exhausted\0",
        WsnStatus::PayloadTooLarge => b"payload too large\0",
        WsnStatus::Downgrade => b"packet below the required security level\0",
        WsnStatus::Panic => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn wsn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

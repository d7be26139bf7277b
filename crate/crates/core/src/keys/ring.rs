use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{HmacSha256Prf, KeyError, Prf, SymmetricKey};
use crate::address::{NodeAddress, BROADCAST_NODE};

/// Domain-separation tag prefixed to every derivation input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Derivation {
    NodeBased = 0x01,
    Pairwise = 0x02,
    Broadcast = 0x03,
    Session = 0x04,
}

impl Derivation {
    /// `NB`: tag ∥ node ∥ head.
    pub fn node_based_input(node: NodeAddress, head: NodeAddress) -> [u8; 5] {
        let [ng, nn] = node.to_bytes();
        let [hg, hn] = head.to_bytes();
        [Derivation::NodeBased as u8, ng, nn, hg, hn]
    }

    /// `PW`: tag ∥ min(a, b) ∥ max(a, b).
    pub fn pairwise_input(a: NodeAddress, b: NodeAddress) -> [u8; 5] {
        let [lg, ln] = a.min(b).to_bytes();
        let [hg, hn] = a.max(b).to_bytes();
        [Derivation::Pairwise as u8, lg, ln, hg, hn]
    }

    /// `BC`: tag ∥ node.
    pub fn broadcast_input(node: NodeAddress) -> [u8; 3] {
        let [g, n] = node.to_bytes();
        [Derivation::Broadcast as u8, g, n]
    }

    /// `K1`: tag ∥ group id ∥ base station.
    pub fn session_input(group_id: u8, base_station: NodeAddress) -> [u8; 4] {
        let [bg, bn] = base_station.to_bytes();
        [Derivation::Session as u8, group_id, bg, bn]
    }
}

/// All keys one node holds after setup.
///
/// Since the node-based key depends on the group head and the master key is
/// gone after setup, the ring carries the node-based keys for every head it
/// may later serve under (`node_based_by_head`), and, for the case where the
/// owner itself becomes head, the keys its members will use towards it
/// (`member_node_based`). [`KeyRing::set_group_head`] switches between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRing {
    pub owner: NodeAddress,
    pub group_head: NodeAddress,
    /// `NB` of the owner under the current head.
    pub node_based: SymmetricKey,
    pub node_based_by_head: BTreeMap<NodeAddress, SymmetricKey>,
    pub member_node_based: BTreeMap<NodeAddress, SymmetricKey>,
    pub pairwise: BTreeMap<NodeAddress, SymmetricKey>,
    /// `BC` of the owner.
    pub broadcast: SymmetricKey,
    pub neighbor_broadcast: BTreeMap<NodeAddress, SymmetricKey>,
    /// Only set during deployment; every ring handed out has `None` here.
    #[serde(default, skip_serializing)]
    pub master: Option<SymmetricKey>,
    #[serde(default)]
    pub session: Option<SymmetricKey>,
}

impl KeyRing {
    pub fn is_head(&self) -> bool {
        self.owner == self.group_head
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeAddress> + '_ {
        self.pairwise.keys().copied()
    }

    /// Re-selects the node-based key after a head change.
    pub fn set_group_head(&mut self, head: NodeAddress) -> Result<(), KeyError> {
        let nb = self
            .node_based_by_head
            .get(&head)
            .copied()
            .ok_or(KeyError::UnknownHead(head))?;
        self.group_head = head;
        self.node_based = nb;
        Ok(())
    }

    /// Every key in the ring, in a fixed order.
    pub fn all_keys(&self) -> Vec<SymmetricKey> {
        let mut keys = vec![self.node_based, self.broadcast];
        keys.extend(self.node_based_by_head.values());
        keys.extend(self.member_node_based.values());
        keys.extend(self.pairwise.values());
        keys.extend(self.neighbor_broadcast.values());
        keys.extend(self.session);
        keys
    }
}

fn check_addresses(
    node: NodeAddress,
    group_head: NodeAddress,
    neighbors: &BTreeSet<NodeAddress>,
) -> Result<(), KeyError> {
    for a in std::iter::once(&node)
        .chain(std::iter::once(&group_head))
        .chain(neighbors)
    {
        if a.node_id == BROADCAST_NODE {
            return Err(KeyError::ReservedAddress(*a));
        }
        if !a.same_group(node) {
            return Err(KeyError::ForeignNeighbor {
                neighbor: *a,
                group: node.group_id,
            });
        }
    }
    if neighbors.contains(&node) {
        return Err(KeyError::SelfNeighbor(node));
    }
    Ok(())
}

/// [`derive_keyring_with`] using HMAC-SHA256.
pub fn derive_keyring(
    master: &SymmetricKey,
    node: NodeAddress,
    group_head: NodeAddress,
    neighbors: &BTreeSet<NodeAddress>,
) -> Result<KeyRing, KeyError> {
    derive_keyring_with(&HmacSha256Prf, master, node, group_head, neighbors)
}

/// Derives a node's full key ring from the master key. The master key is not
/// kept in the returned ring.
pub fn derive_keyring_with<P: Prf + ?Sized>(
    prf: &P,
    master: &SymmetricKey,
    node: NodeAddress,
    group_head: NodeAddress,
    neighbors: &BTreeSet<NodeAddress>,
) -> Result<KeyRing, KeyError> {
    check_addresses(node, group_head, neighbors)?;

    let heads: BTreeSet<NodeAddress> = neighbors.iter().copied().chain([node, group_head]).collect();
    let node_based_by_head = heads
        .iter()
        .map(|h| (*h, prf.eval(master, &Derivation::node_based_input(node, *h))))
        .collect::<BTreeMap<_, _>>();
    let member_node_based = neighbors
        .iter()
        .map(|m| (*m, prf.eval(master, &Derivation::node_based_input(*m, node))))
        .collect();
    let pairwise = neighbors
        .iter()
        .map(|j| (*j, prf.eval(master, &Derivation::pairwise_input(node, *j))))
        .collect();
    let neighbor_broadcast = neighbors
        .iter()
        .map(|j| (*j, prf.eval(master, &Derivation::broadcast_input(*j))))
        .collect();

    Ok(KeyRing {
        owner: node,
        group_head,
        node_based: node_based_by_head[&group_head],
        node_based_by_head,
        member_node_based,
        pairwise,
        broadcast: prf.eval(master, &Derivation::broadcast_input(node)),
        neighbor_broadcast,
        master: None,
        session: None,
    })
}

pub fn derive_session_key(seed: &SymmetricKey, group_id: u8, base_station: NodeAddress) -> SymmetricKey {
    derive_session_key_with(&HmacSha256Prf, seed, group_id, base_station)
}

/// `K1` for one group and session, from the seed the base station gave the head.
pub fn derive_session_key_with<P: Prf + ?Sized>(
    prf: &P,
    seed: &SymmetricKey,
    group_id: u8,
    base_station: NodeAddress,
) -> SymmetricKey {
    prf.eval(seed, &Derivation::session_input(group_id, base_station))
}

/// Who gets the new session key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RekeyPlan {
    /// Members trusted at or above the threshold; each receives `K1` under
    /// its pairwise key with the head.
    pub recipients: BTreeSet<NodeAddress>,
    /// Members below the threshold. They keep the stale session key.
    pub excluded: BTreeSet<NodeAddress>,
}

/// Installs `k1` in the head's ring and selects the members that receive it.
///
/// Members without a pairwise key in the head's ring cannot be reached and
/// are excluded regardless of trust.
pub fn rekey_group(
    head_ring: &mut KeyRing,
    member_trust: &BTreeMap<NodeAddress, f64>,
    threshold: f64,
    k1: SymmetricKey,
) -> Result<RekeyPlan, KeyError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(KeyError::BadThreshold(threshold));
    }
    let mut plan = RekeyPlan::default();
    for (member, trust) in member_trust {
        if *member == head_ring.owner {
            continue;
        }
        if *trust >= threshold && head_ring.pairwise.contains_key(member) {
            plan.recipients.insert(*member);
        } else {
            plan.excluded.insert(*member);
        }
    }
    head_ring.session = Some(k1);
    Ok(plan)
}

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::energy::{Battery, Charge};
use super::report::{ElectionRecord, NodeReport, RekeyRecord, SimReport};
use super::{AdversaryBehavior, AdversarySpec, SimConfig, SimError};
use crate::address::{NodeAddress, BROADCAST_NODE};
use crate::isa::{Layer, Metric, PacketClass, SecurityAgent};
use crate::keys::{derive_keyring, derive_session_key, rekey_group, HmacSha256Prf, KeyRing, Prf, SymmetricKey};
use crate::linksec::{decode, encode, CounterTable, Decoded, LinkError, PacketHeader, SecurityLevel, MAX_PAYLOAD};
use crate::trust::{cast_vote, compute_trust, tally_votes, NeighborRecord, ObservationEvent, TrustError, TrustTable};

/// Address the base station uses when deriving session keys. Node id 255 is
/// never a sensor, so this cannot collide with one.
pub const BASE_STATION: NodeAddress = NodeAddress::new(0xFF, 0xFF);

/// Share of the group's median energy under which a head hands over.
const HANDOVER_FRACTION: f64 = 0.2;
const SIGNAL_JITTER: f64 = 0.02;

/// Runs one simulation.
pub fn run(config: &SimConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    let mut engine = Engine::new(config)?;
    for frame in 0..config.sim_length {
        engine.frame(frame)?;
    }
    Ok(engine.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// Own sensed data sent to a relay, which owes a forward.
    Relayed,
    /// Own sensed data sent straight to the head.
    Direct,
    Forward,
    Vote,
    KeyMaterial,
    Broadcast,
}

struct Node {
    addr: NodeAddress,
    battery: Battery,
    ring: KeyRing,
    table: TrustTable,
    agent: SecurityAgent,
    counters: CounterTable,
    /// Packets this node received as relay and still has to forward; `None`
    /// where the packet never arrived intact.
    pending_forwards: Vec<Option<Vec<u8>>>,
    adversary: Option<AdversarySpec>,
    overheard: Option<Vec<u8>>,
}

impl Node {
    fn active(&self, frame: u64) -> Option<AdversaryBehavior> {
        self.adversary.filter(|a| frame >= a.start_frame).map(|a| a.behavior)
    }
}

struct Election {
    called_at: u64,
    voters: BTreeSet<u8>,
    ballots: Vec<(NodeAddress, NodeAddress)>,
}

struct Group {
    id: u8,
    first: usize,
    size: usize,
    head: u8,
    vice: Option<u8>,
    session: Option<u32>,
    election: Option<Election>,
    aggregate: Vec<u8>,
    /// Mean received signal strength, indexed `[observer][sender]`.
    signal: Vec<Vec<f64>>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    groups: Vec<Group>,
    base_station_secret: SymmetricKey,
    clock: u64,
    slot_users: BTreeMap<(u8, u32), NodeAddress>,
    report: SimReport,
}

fn random_key(rng: &mut ChaCha8Rng) -> SymmetricKey {
    let mut b = [0u8; 10];
    rng.fill(&mut b[..]);
    SymmetricKey::from_bytes(b)
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let master = random_key(&mut rng);
        let base_station_secret = random_key(&mut rng);

        let mut nodes = Vec::with_capacity(cfg.node_count as usize);
        let mut groups = Vec::new();
        for (g, size) in cfg.group_sizes().into_iter().enumerate() {
            let g = g as u8;
            let members: BTreeSet<NodeAddress> = (0..size).map(|n| NodeAddress::new(g, n as u8)).collect();
            let head = NodeAddress::new(g, 0);
            let first = nodes.len();
            for &addr in &members {
                let mut neighbors = members.clone();
                neighbors.remove(&addr);
                let ring = derive_keyring(&master, addr, head, &neighbors)?;
                nodes.push(Node {
                    addr,
                    battery: Battery::new(cfg.energy_model.initial_energy),
                    ring,
                    table: TrustTable::new(addr, cfg.trust_weights),
                    agent: SecurityAgent::new(cfg.scenario.clone())?,
                    counters: CounterTable::default(),
                    pending_forwards: Vec::new(),
                    adversary: cfg.adversaries.iter().rev().find(|a| a.node == addr).copied(),
                    overheard: None,
                });
            }
            let size = size as usize;
            let signal = (0..size)
                .map(|_| (0..size).map(|_| rng.random_range(0.5..1.0)).collect())
                .collect();
            groups.push(Group {
                id: g,
                first,
                size,
                head: 0,
                vice: None,
                session: None,
                election: None,
                aggregate: Vec::new(),
                signal,
            });
        }
        let report = SimReport::empty(cfg.sim_length);
        Ok(Engine {
            cfg,
            rng,
            nodes,
            groups,
            base_station_secret,
            clock: 0,
            slot_users: BTreeMap::new(),
            report,
        })
    }

    fn idx(&self, g: u8, n: u8) -> usize {
        self.groups[g as usize].first + n as usize
    }

    fn alive(&self, i: usize) -> bool {
        self.nodes[i].battery.alive()
    }

    fn members(&self, g: u8) -> std::ops::Range<usize> {
        let grp = &self.groups[g as usize];
        grp.first..grp.first + grp.size
    }

    fn frame(&mut self, frame: u64) -> Result<(), SimError> {
        self.slot_users.clear();
        let control_slot = self.cfg.slots_per_frame - 1;
        for slot in 0..self.cfg.slots_per_frame {
            for g in 0..self.groups.len() as u8 {
                if slot == control_slot {
                    self.head_turn(frame, slot, g)?;
                } else if (slot as usize) < self.groups[g as usize].size && slot as u8 != self.groups[g as usize].head {
                    self.member_turn(frame, slot, g, slot as u8);
                }
            }
        }
        Ok(())
    }

    fn level_for(&self, i: usize, class: PacketClass) -> SecurityLevel {
        if self.cfg.adaptive {
            self.nodes[i].agent.decide(class)
        } else {
            self.cfg.scenario.fixed_level
        }
    }

    /// Weakest level a receiver accepts: anything a sender may pick.
    fn receive_floor(&self) -> SecurityLevel {
        if self.cfg.adaptive {
            self.cfg.scenario.min_level
        } else {
            self.cfg.scenario.fixed_level
        }
    }

    /// Feeds the node's agent its current energy and neighbor trust.
    fn refresh_agent(&mut self, i: usize) {
        if !self.cfg.adaptive {
            return;
        }
        let node = &mut self.nodes[i];
        node.agent
            .report(Layer::Physical, Metric::Energy(node.battery.remaining()));
        let trust: Vec<(NodeAddress, f64)> = node
            .table
            .neighbors()
            .filter_map(|n| node.table.effective_trust(n).map(|t| (n, t)))
            .collect();
        for (n, t) in trust {
            node.agent.report(Layer::Network, Metric::Trust(n, t));
        }
    }

    fn note_slot(&mut self, frame: u64, g: u8, slot: u32, who: NodeAddress) {
        let _ = frame;
        match self.slot_users.insert((g, slot), who) {
            Some(prev) if prev != who => self.report.tdm_conflicts += 1,
            _ => {}
        }
    }

    fn note_observation(&mut self, r: Result<(), TrustError>) {
        match r {
            Ok(()) => {}
            Err(TrustError::SuspiciousEnergy { .. }) => self.report.suspicious_samples += 1,
            Err(_) => self.report.observation_errors += 1,
        }
    }

    /// Seals and puts a packet on the air: debits the sender, charges every
    /// listening group member for reception and lets them record what they
    /// saw. Returns the wire image.
    #[allow(clippy::too_many_arguments)]
    fn send(
        &mut self,
        frame: u64,
        slot: u32,
        i: usize,
        dest: u8,
        class: PacketClass,
        payload: &[u8],
        kind: Kind,
    ) -> Option<Vec<u8>> {
        if !self.alive(i) {
            return None;
        }
        let level = self.level_for(i, class);
        let model = self.cfg.energy_model;
        let node = &mut self.nodes[i];
        let src = node.addr;
        let last = node.counters.get(src.node_id, dest);
        let (wire, next) = match encode(&node.ring, dest, level, last, payload) {
            Ok(x) => x,
            Err(_) => {
                self.report.send_failures += 1;
                return None;
            }
        };
        node.counters.set(src.node_id, dest, next);
        node.battery.debit(Charge::Tx, model.tx_cost(wire.len()));
        node.battery
            .debit(Charge::Crypto, model.cipher_cost(level, payload.len()));
        self.report.packets_sent += 1;
        *self.report.level_usage.entry(level).or_default() += 1;
        self.note_slot(frame, src.group_id, slot, src);
        self.on_air(i, &wire);
        self.observe(frame, i, dest, kind);
        Some(wire)
    }

    /// Reception energy for every listener, and the overheard buffer for
    /// replay attackers.
    fn on_air(&mut self, i: usize, wire: &[u8]) {
        let cost = self.cfg.energy_model.rx_cost(wire.len());
        let sender = self.nodes[i].addr;
        for j in self.members(sender.group_id) {
            if j == i || !self.alive(j) {
                continue;
            }
            let node = &mut self.nodes[j];
            node.battery.debit(Charge::Rx, cost);
            if matches!(
                node.adversary.map(|a| a.behavior),
                Some(AdversaryBehavior::ReplayAttacker)
            ) {
                let h = PacketHeader::parse(wire).expect("own encoding");
                if h.dest != node.addr.node_id {
                    node.overheard = Some(wire.to_vec());
                }
            }
        }
    }

    fn observe(&mut self, frame: u64, i: usize, dest: u8, kind: Kind) {
        self.clock += 1;
        let at = self.clock;
        let sender = self.nodes[i].addr;
        let g = sender.group_id;
        let advertised = match self.nodes[i].active(frame) {
            Some(AdversaryBehavior::Captured) => self.cfg.energy_model.initial_energy + at as f64,
            _ => self.nodes[i].battery.remaining(),
        };
        let dest_idx = (dest != BROADCAST_NODE).then(|| self.idx(g, dest));
        let dest_alive = dest_idx.is_some_and(|d| self.alive(d));
        let first = self.groups[g as usize].first;
        for j in self.members(g) {
            if !self.alive(j) {
                continue;
            }
            let mut results = Vec::with_capacity(6);
            if j != i {
                let base = self.groups[g as usize].signal[j - first][i - first];
                let pss = (base + self.rng.random_range(-SIGNAL_JITTER..SIGNAL_JITTER)).clamp(f64::MIN_POSITIVE, 1.0);
                let table = &mut self.nodes[j].table;
                results.push(table.record_event(sender, ObservationEvent::PacketTransmitted));
                results.push(table.record_event(sender, ObservationEvent::EnergySample { at, joules: advertised }));
                results.push(table.record_event(sender, ObservationEvent::SignalSample { at, value: pss }));
                if kind == Kind::Forward {
                    results.push(table.record_event(sender, ObservationEvent::DataForwarded));
                }
            }
            // The sender knows where its packet went as well as any listener.
            if let Some(d) = dest_idx.filter(|d| dest_alive && *d != j) {
                let daddr = self.nodes[d].addr;
                let table = &mut self.nodes[j].table;
                results.push(table.record_event(daddr, ObservationEvent::PacketReceived));
                if kind == Kind::Relayed {
                    results.push(table.record_event(daddr, ObservationEvent::DataReceivedForForward));
                }
            }
            for r in results {
                self.note_observation(r);
            }
        }
    }

    /// Decodes at node `j`, charging one cipher pass per counter candidate.
    fn receive(&mut self, j: usize, wire: &[u8]) -> Result<Decoded, LinkError> {
        let header = PacketHeader::parse(wire)?;
        let model = self.cfg.energy_model;
        let loss_threshold = self.cfg.loss_threshold;
        let floor = self.receive_floor();
        let node = &mut self.nodes[j];
        let last = node.counters.get(header.src, header.dest);
        let result = decode(wire, &node.ring, last, loss_threshold, floor);
        let attempts = match &result {
            Ok(d) => d.attempts,
            Err(e) => e.attempts(),
        };
        let per_pass = model.cipher_cost(header.level, usize::from(header.length));
        node.battery.debit(Charge::Crypto, f64::from(attempts) * per_pass);
        match &result {
            Ok(d) => {
                node.counters.set(header.src, header.dest, d.counter);
                self.report.packets_accepted += 1;
            }
            Err(LinkError::Replay { .. }) => self.report.replays_rejected += 1,
            Err(LinkError::Authentication { .. }) => self.report.auth_failures += 1,
            Err(_) => self.report.other_rejections += 1,
        }
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn unicast(
        &mut self,
        frame: u64,
        slot: u32,
        i: usize,
        dest: u8,
        class: PacketClass,
        payload: &[u8],
        kind: Kind,
    ) -> Option<Decoded> {
        let wire = self.send(frame, slot, i, dest, class, payload, kind)?;
        let j = self.idx(self.nodes[i].addr.group_id, dest);
        if !self.alive(j) {
            return None;
        }
        if self.cfg.loss_rate > 0.0 && self.rng.random_bool(self.cfg.loss_rate) {
            self.report.packets_lost += 1;
            return None;
        }
        self.receive(j, &wire).ok()
    }

    /// Sends to the whole group; returns the node ids that decoded it.
    fn group_broadcast(&mut self, frame: u64, slot: u32, i: usize, class: PacketClass, payload: &[u8]) -> BTreeSet<u8> {
        let mut ok = BTreeSet::new();
        let Some(wire) = self.send(frame, slot, i, BROADCAST_NODE, class, payload, Kind::Broadcast) else {
            return ok;
        };
        let g = self.nodes[i].addr.group_id;
        let session = self.groups[g as usize].session.unwrap_or(0);
        for j in self.members(g) {
            if j == i || !self.alive(j) {
                continue;
            }
            if self.receive(j, &wire).is_ok() {
                let addr = self.nodes[j].addr;
                ok.insert(addr.node_id);
                *self
                    .report
                    .broadcast_decodes
                    .entry(addr)
                    .or_default()
                    .entry(session)
                    .or_default() += 1;
            }
        }
        ok
    }

    /// Next live non-head member after `n`, cyclically.
    fn relay_for(&self, g: u8, n: u8) -> Option<u8> {
        let grp = &self.groups[g as usize];
        let size = grp.size as u8;
        (1..size)
            .map(|k| ((u16::from(n) + u16::from(k)) % u16::from(size)) as u8)
            .find(|&m| m != grp.head && self.alive(self.idx(g, m)))
    }

    fn member_turn(&mut self, frame: u64, slot: u32, g: u8, n: u8) {
        let i = self.idx(g, n);
        if !self.alive(i) {
            return;
        }
        self.refresh_agent(i);
        let head = self.groups[g as usize].head;
        let behavior = self.nodes[i].active(frame);

        for pending in std::mem::take(&mut self.nodes[i].pending_forwards) {
            let dropped = match behavior {
                Some(AdversaryBehavior::DropFraction(p)) => self.rng.random_bool(p),
                _ => false,
            };
            match pending {
                Some(payload) if !dropped => {
                    if let Some(d) =
                        self.unicast(frame, slot, i, head, PacketClass::SensedData, &payload, Kind::Forward)
                    {
                        self.groups[g as usize].aggregate.extend_from_slice(&d.payload);
                    }
                }
                _ => self.record_drop(i),
            }
        }

        let mut data = vec![0u8; self.cfg.payload_len];
        self.rng.fill(&mut data[..]);
        match self.relay_for(g, n) {
            Some(r) if r != head => {
                let got = self.unicast(frame, slot, i, r, PacketClass::SensedData, &data, Kind::Relayed);
                let ri = self.idx(g, r);
                if self.alive(ri) {
                    self.nodes[ri].pending_forwards.push(got.map(|d| d.payload));
                }
            }
            _ => {
                if let Some(d) = self.unicast(frame, slot, i, head, PacketClass::SensedData, &data, Kind::Direct) {
                    self.groups[g as usize].aggregate.extend_from_slice(&d.payload);
                }
            }
        }

        let votes = self.groups[g as usize]
            .election
            .as_ref()
            .is_some_and(|e| e.called_at < frame && e.voters.contains(&n));
        if votes {
            let group_set: BTreeSet<NodeAddress> = self.members(g).map(|j| self.nodes[j].addr).collect();
            let voter = self.nodes[i].addr;
            if let Some(choice) = cast_vote(voter, &group_set, &self.nodes[i].table) {
                let ballot = choice.to_bytes();
                if let Some(d) = self.unicast(frame, slot, i, head, PacketClass::RoutingControl, &ballot, Kind::Vote) {
                    if let [cg, cn] = d.payload[..] {
                        if let Some(e) = self.groups[g as usize].election.as_mut() {
                            e.ballots.push((voter, NodeAddress::new(cg, cn)));
                        }
                    }
                }
            }
        }

        if behavior == Some(AdversaryBehavior::ReplayAttacker) {
            if let Some(wire) = self.nodes[i].overheard.take() {
                self.replay(frame, slot, i, &wire);
            }
        }
    }

    fn record_drop(&mut self, i: usize) {
        self.report.forwards_dropped += 1;
        let relay = self.nodes[i].addr;
        for j in self.members(relay.group_id) {
            if j == i || !self.alive(j) {
                continue;
            }
            let r = self.nodes[j].table.record_event(relay, ObservationEvent::PacketDropped);
            self.note_observation(r);
        }
    }

    /// Re-sends a captured wire image verbatim. Its addressees try to decode
    /// it; nothing is learned about the attacker from it.
    fn replay(&mut self, frame: u64, slot: u32, i: usize, wire: &[u8]) {
        let model = self.cfg.energy_model;
        let attacker = self.nodes[i].addr;
        self.nodes[i].battery.debit(Charge::Tx, model.tx_cost(wire.len()));
        self.note_slot(frame, attacker.group_id, slot, attacker);
        self.on_air(i, wire);
        self.report.replays_injected += 1;
        let h = PacketHeader::parse(wire).expect("captured from the air");
        let targets: Vec<usize> = self
            .members(attacker.group_id)
            .filter(|&j| {
                let n = self.nodes[j].addr.node_id;
                j != i && n != h.src && (h.dest == BROADCAST_NODE || h.dest == n) && self.alive(j)
            })
            .collect();
        for j in targets {
            if self.receive(j, wire).is_ok() {
                self.report.replays_accepted += 1;
            }
        }
    }

    fn head_turn(&mut self, frame: u64, slot: u32, g: u8) -> Result<(), SimError> {
        let mut rekey = frame == 0;
        let head_idx = self.idx(g, self.groups[g as usize].head);
        if !self.alive(head_idx) {
            if !self.fail_over(frame, g)? {
                return Ok(());
            }
            rekey = true;
        }
        let h = self.idx(g, self.groups[g as usize].head);
        self.refresh_agent(h);

        let due = self.groups[g as usize]
            .election
            .as_ref()
            .is_some_and(|e| e.called_at < frame);
        if due {
            self.tally(frame, g)?;
            rekey = true;
        } else if frame > 0 && frame.is_multiple_of(self.cfg.session_length) {
            if self.cfg.rotate_heads && self.groups[g as usize].size > 1 {
                self.call_election(frame, slot, g);
            } else {
                rekey = true;
            }
        }
        if !rekey && self.groups[g as usize].election.is_none() && self.head_exhausted(g) {
            self.call_election(frame, slot, g);
        }

        let h = self.idx(g, self.groups[g as usize].head);
        if rekey {
            self.rekey(frame, slot, g)?;
        }
        if self.cfg.beacon && self.groups[g as usize].size > 1 {
            let stamp = (frame as u32).to_be_bytes();
            self.group_broadcast(frame, slot, h, PacketClass::Control, &stamp);
        }
        if self.alive(h) {
            // The head's own reading is sealed into the aggregate; no radio.
            let mut own = vec![0u8; self.cfg.payload_len];
            self.rng.fill(&mut own[..]);
            let level = self.level_for(h, PacketClass::SensedData);
            let cost = self.cfg.energy_model.cipher_cost(level, own.len());
            self.nodes[h].battery.debit(Charge::Crypto, cost);
            self.groups[g as usize].aggregate.extend_from_slice(&own);
        }
        let mut agg = std::mem::take(&mut self.groups[g as usize].aggregate);
        if self.cfg.uplink && self.groups[g as usize].size > 1 {
            agg.truncate(MAX_PAYLOAD);
            if !agg.is_empty() && self.alive(h) {
                let level = self.level_for(h, PacketClass::SensedData);
                let model = self.cfg.energy_model;
                let wire_len = crate::linksec::wire_len(agg.len(), level.auth);
                let b = &mut self.nodes[h].battery;
                b.debit(Charge::Tx, model.tx_cost(wire_len));
                b.debit(Charge::Crypto, model.cipher_cost(level, agg.len()));
                *self.report.level_usage.entry(level).or_default() += 1;
                self.report.uplinks += 1;
            }
        }
        Ok(())
    }

    fn head_exhausted(&self, g: u8) -> bool {
        let mut energies: Vec<f64> = self
            .members(g)
            .filter(|&j| self.alive(j))
            .map(|j| self.nodes[j].battery.remaining())
            .collect();
        if energies.len() < 2 {
            return false;
        }
        energies.sort_by(f64::total_cmp);
        let mid = energies.len() / 2;
        let median = if energies.len().is_multiple_of(2) {
            (energies[mid - 1] + energies[mid]) / 2.0
        } else {
            energies[mid]
        };
        let h = self.idx(g, self.groups[g as usize].head);
        self.nodes[h].battery.remaining() < HANDOVER_FRACTION * median
    }

    fn call_election(&mut self, frame: u64, slot: u32, g: u8) {
        let h = self.idx(g, self.groups[g as usize].head);
        let stamp = (frame as u32).to_be_bytes();
        let voters = self.group_broadcast(frame, slot, h, PacketClass::RoutingControl, &stamp);
        self.groups[g as usize].election = Some(Election {
            called_at: frame,
            voters,
            ballots: Vec::new(),
        });
    }

    fn tally(&mut self, frame: u64, g: u8) -> Result<(), SimError> {
        let election = self.groups[g as usize].election.take().expect("due election");
        let head = self.groups[g as usize].head;
        let h = self.idx(g, head);
        let group_set: BTreeSet<NodeAddress> = self.members(g).map(|j| self.nodes[j].addr).collect();
        let mut ballots = election.ballots;
        if let Some(own) = cast_vote(self.nodes[h].addr, &group_set, &self.nodes[h].table) {
            ballots.push((self.nodes[h].addr, own));
        }
        let outcome = tally_votes(ballots, self.nodes[h].addr);
        self.report.elections.push(ElectionRecord {
            frame,
            group: g,
            previous: self.nodes[h].addr,
            head: outcome.head,
            vice: outcome.vice,
            ballots: outcome.ballots.len() as u32,
        });
        self.groups[g as usize].vice = outcome.vice.map(|v| v.node_id);
        self.install_head(g, outcome.head.node_id)
    }

    /// The head is dead: the vice takes over, or the lowest live member.
    fn fail_over(&mut self, frame: u64, g: u8) -> Result<bool, SimError> {
        let grp = &self.groups[g as usize];
        let old = NodeAddress::new(g, grp.head);
        let vice = grp.vice.filter(|v| self.alive(self.idx(g, *v)));
        let next = vice.or_else(|| {
            self.members(g)
                .find(|&j| self.alive(j))
                .map(|j| self.nodes[j].addr.node_id)
        });
        let Some(next) = next else {
            return Ok(false);
        };
        self.report.elections.push(ElectionRecord {
            frame,
            group: g,
            previous: old,
            head: NodeAddress::new(g, next),
            vice: None,
            ballots: 0,
        });
        self.groups[g as usize].vice = None;
        self.groups[g as usize].election = None;
        self.install_head(g, next)?;
        Ok(true)
    }

    fn install_head(&mut self, g: u8, head: u8) -> Result<(), SimError> {
        let addr = NodeAddress::new(g, head);
        self.groups[g as usize].head = head;
        for j in self.members(g) {
            self.nodes[j].ring.set_group_head(addr)?;
        }
        let h = self.idx(g, head);
        self.nodes[h].pending_forwards.clear();
        Ok(())
    }

    /// New session: the head gets a fresh seed from the base station, derives
    /// `K1` and sends it to every member it trusts enough.
    fn rekey(&mut self, frame: u64, slot: u32, g: u8) -> Result<(), SimError> {
        let session = self.groups[g as usize].session.map_or(0, |s| s + 1);
        let mut seed_input = vec![0x10, g];
        seed_input.extend_from_slice(&session.to_be_bytes());
        let seed = HmacSha256Prf.eval(&self.base_station_secret, &seed_input);
        let k1 = derive_session_key(&seed, g, BASE_STATION);

        let h = self.idx(g, self.groups[g as usize].head);
        let neutral = compute_trust(&NeighborRecord::default(), &self.cfg.trust_weights);
        let trust: BTreeMap<NodeAddress, f64> = self
            .members(g)
            .filter(|&j| j != h && self.alive(j))
            .map(|j| {
                let a = self.nodes[j].addr;
                (a, self.nodes[h].table.effective_trust(a).unwrap_or(neutral))
            })
            .collect();
        let plan = rekey_group(&mut self.nodes[h].ring, &trust, self.cfg.rekey_threshold, k1)?;
        self.groups[g as usize].session = Some(session);

        let mut delivered = Vec::new();
        for r in &plan.recipients {
            if let Some(d) = self.unicast(
                frame,
                slot,
                h,
                r.node_id,
                PacketClass::KeyMaterial,
                k1.as_bytes(),
                Kind::KeyMaterial,
            ) {
                let j = self.idx(g, r.node_id);
                self.nodes[j].ring.session = Some(SymmetricKey::from_slice(&d.payload)?);
                delivered.push(*r);
            }
        }
        if plan.recipients.is_empty() && !trust.is_empty() {
            self.report.warnings.push(format!(
                "frame {frame}: group {g} session {session} has no trusted recipients"
            ));
        }
        self.report.rekeys.push(RekeyRecord {
            frame,
            group: g,
            session,
            head: self.nodes[h].addr,
            recipients: plan.recipients.into_iter().collect(),
            excluded: plan.excluded.into_iter().collect(),
            delivered,
        });
        Ok(())
    }

    fn finish(mut self) -> SimReport {
        let heads: BTreeSet<NodeAddress> = self.groups.iter().map(|g| NodeAddress::new(g.id, g.head)).collect();
        self.report.nodes = self
            .nodes
            .iter()
            .map(|n| NodeReport {
                address: n.addr,
                ledger: n.battery.ledger(),
                remaining: n.battery.remaining(),
                alive: n.battery.alive(),
                head: heads.contains(&n.addr),
            })
            .collect();
        self.report.trust = self.nodes.into_iter().map(|n| (n.addr, n.table)).collect();
        self.report
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::energy::EnergyLedger;
use crate::address::NodeAddress;
use crate::linksec::SecurityLevel;
use crate::trust::TrustTable;

/// Column header of the per-node energy CSV.
pub const ENERGY_CSV_HEADER: &str = "node,tx_J,rx_J,crypto_J,total_J";

#[derive(Clone, Debug, PartialEq)]
pub struct NodeReport {
    pub address: NodeAddress,
    pub ledger: EnergyLedger,
    pub remaining: f64,
    pub alive: bool,
    /// Group head when the run ended.
    pub head: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectionRecord {
    /// Frame in which the new head took over.
    pub frame: u64,
    pub group: u8,
    pub previous: NodeAddress,
    pub head: NodeAddress,
    pub vice: Option<NodeAddress>,
    /// Ballots counted; 0 for a failover after the head died.
    pub ballots: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RekeyRecord {
    pub frame: u64,
    pub group: u8,
    pub session: u32,
    pub head: NodeAddress,
    pub recipients: Vec<NodeAddress>,
    pub excluded: Vec<NodeAddress>,
    /// Recipients whose key-material packet actually decoded.
    pub delivered: Vec<NodeAddress>,
}

/// Outcome of one run.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub frames: u64,
    /// Every node, in address order.
    pub nodes: Vec<NodeReport>,
    pub elections: Vec<ElectionRecord>,
    pub rekeys: Vec<RekeyRecord>,
    /// Group broadcasts each node decoded, per session number of its group.
    pub broadcast_decodes: BTreeMap<NodeAddress, BTreeMap<u32, u64>>,
    pub packets_sent: u64,
    pub packets_accepted: u64,
    pub packets_lost: u64,
    pub auth_failures: u64,
    pub other_rejections: u64,
    pub send_failures: u64,
    pub forwards_dropped: u64,
    pub uplinks: u64,
    pub replays_injected: u64,
    pub replays_accepted: u64,
    /// Decodes rejected as stale, replays or otherwise.
    pub replays_rejected: u64,
    /// Energy samples that claimed an increase (neighbor flagged).
    pub suspicious_samples: u64,
    pub observation_errors: u64,
    /// Slot shared by two different transmitters of one group.
    pub tdm_conflicts: u64,
    /// Packets sent per security level (uplinks included).
    pub level_usage: BTreeMap<SecurityLevel, u64>,
    pub trust: BTreeMap<NodeAddress, TrustTable>,
    pub warnings: Vec<String>,
}

impl SimReport {
    pub(crate) fn empty(frames: u64) -> Self {
        SimReport {
            frames,
            nodes: Vec::new(),
            elections: Vec::new(),
            rekeys: Vec::new(),
            broadcast_decodes: BTreeMap::new(),
            packets_sent: 0,
            packets_accepted: 0,
            packets_lost: 0,
            auth_failures: 0,
            other_rejections: 0,
            send_failures: 0,
            forwards_dropped: 0,
            uplinks: 0,
            replays_injected: 0,
            replays_accepted: 0,
            replays_rejected: 0,
            suspicious_samples: 0,
            observation_errors: 0,
            tdm_conflicts: 0,
            level_usage: BTreeMap::new(),
            trust: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn node(&self, a: NodeAddress) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.address == a)
    }

    pub fn totals(&self) -> EnergyLedger {
        self.nodes.iter().fold(EnergyLedger::default(), |acc, n| EnergyLedger {
            tx: acc.tx + n.ledger.tx,
            rx: acc.rx + n.ledger.rx,
            crypto: acc.crypto + n.ledger.crypto,
        })
    }

    pub fn total_energy(&self) -> f64 {
        self.totals().total()
    }

    /// Group broadcasts `node` decoded in sessions `from_session` onwards.
    pub fn broadcasts_decoded_since(&self, node: NodeAddress, from_session: u32) -> u64 {
        self.broadcast_decodes
            .get(&node)
            .map_or(0, |m| m.range(from_session..).map(|(_, c)| c).sum())
    }

    /// Per-node energy CSV (joules with nine decimals).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ENERGY_CSV_HEADER);
        out.push('\n');
        for n in &self.nodes {
            let l = n.ledger;
            writeln!(
                out,
                "{},{:.9},{:.9},{:.9},{:.9}",
                n.address,
                l.tx,
                l.rx,
                l.crypto,
                l.total()
            )
            .expect("string write");
        }
        out
    }

    /// One-line plain-text summary.
    pub fn summary(&self) -> String {
        let t = self.totals();
        format!(
            "frames={} nodes={} total_J={:.9} tx_J={:.9} rx_J={:.9} crypto_J={:.9} packets={} elections={} rekeys={} replays_accepted={} tdm_conflicts={}",
            self.frames,
            self.nodes.len(),
            t.total(),
            t.tx,
            t.rx,
            t.crypto,
            self.packets_sent,
            self.elections.len(),
            self.rekeys.len(),
            self.replays_accepted,
            self.tdm_conflicts,
        )
    }
}

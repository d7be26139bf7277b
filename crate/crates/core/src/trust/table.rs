use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{compute_trust, NeighborRecord, NodeAddress, ObservationEvent, TrustError, TrustWeights};

/// Column order of the trust CSV export.
pub const TRUST_CSV_COLUMNS: [&str; 17] = [
    "observer",
    "neighbor",
    "ae_t1",
    "ae_t2",
    "pss_t1",
    "pss_t2",
    "crf",
    "craf",
    "rc",
    "npc",
    "drf",
    "draf",
    "pd",
    "npt",
    "npr",
    "suspicious",
    "trust",
];

/// A single observer's parameter table over its neighbors, with trust values
/// kept in step with the records.
#[derive(Clone, Debug)]
pub struct TrustTable {
    observer: NodeAddress,
    weights: TrustWeights,
    rows: BTreeMap<NodeAddress, NeighborRecord>,
    trust: BTreeMap<NodeAddress, f64>,
    suspicious: BTreeSet<NodeAddress>,
    last_energy_at: BTreeMap<NodeAddress, u64>,
    last_signal_at: BTreeMap<NodeAddress, u64>,
}

impl TrustTable {
    pub fn new(observer: NodeAddress, weights: TrustWeights) -> Self {
        TrustTable {
            observer,
            weights,
            rows: BTreeMap::new(),
            trust: BTreeMap::new(),
            suspicious: BTreeSet::new(),
            last_energy_at: BTreeMap::new(),
            last_signal_at: BTreeMap::new(),
        }
    }

    pub fn observer(&self) -> NodeAddress {
        self.observer
    }

    pub fn weights(&self) -> &TrustWeights {
        &self.weights
    }

    pub fn record(&self, neighbor: NodeAddress) -> Option<&NeighborRecord> {
        self.rows.get(&neighbor)
    }

    pub fn rows(&self) -> impl Iterator<Item = (NodeAddress, &NeighborRecord)> {
        self.rows.iter().map(|(a, r)| (*a, r))
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeAddress> + '_ {
        self.rows.keys().copied()
    }

    /// Trust computed from the record, ignoring the suspicious flag.
    pub fn trust(&self, neighbor: NodeAddress) -> Option<f64> {
        self.trust.get(&neighbor).copied()
    }

    /// Trust used for elections and re-keying: zero for a suspicious neighbor.
    pub fn effective_trust(&self, neighbor: NodeAddress) -> Option<f64> {
        let t = self.trust(neighbor)?;
        Some(if self.suspicious.contains(&neighbor) { 0.0 } else { t })
    }

    pub fn is_suspicious(&self, neighbor: NodeAddress) -> bool {
        self.suspicious.contains(&neighbor)
    }

    /// Lowest effective trust across all neighbors, if any are known.
    pub fn min_effective_trust(&self) -> Option<f64> {
        self.rows
            .keys()
            .filter_map(|n| self.effective_trust(*n))
            .reduce(f64::min)
    }

    /// Installs a full record for `neighbor`, replacing any existing row.
    pub fn insert_record(&mut self, neighbor: NodeAddress, record: NeighborRecord) -> Result<(), TrustError> {
        if neighbor == self.observer {
            return Err(TrustError::SelfObservation(neighbor));
        }
        record.validate()?;
        self.rows.insert(neighbor, record);
        self.refresh(neighbor);
        Ok(())
    }

    pub fn mark_suspicious(&mut self, neighbor: NodeAddress) {
        self.rows.entry(neighbor).or_default();
        self.suspicious.insert(neighbor);
        self.refresh(neighbor);
    }

    /// Feeds one observation into the neighbor's row, creating a zeroed row
    /// on first sight, and recomputes that neighbor's trust.
    ///
    /// An energy sample higher than the last one is not stored: the neighbor
    /// is flagged suspicious and [`TrustError::SuspiciousEnergy`] is returned.
    pub fn record_event(&mut self, neighbor: NodeAddress, event: ObservationEvent) -> Result<(), TrustError> {
        if neighbor == self.observer {
            return Err(TrustError::SelfObservation(neighbor));
        }
        let row = self.rows.entry(neighbor).or_default();
        let result = match event {
            ObservationEvent::EnergySample { at, joules } => {
                if !joules.is_finite() || joules < 0.0 {
                    Err(TrustError::InconsistentEvent(format!("energy sample {joules} J")))
                } else if self.last_energy_at.get(&neighbor).is_some_and(|t| at <= *t) {
                    Err(TrustError::StaleSample { neighbor, at })
                } else if row.has_energy_sample() && joules > row.ae_t2 {
                    self.suspicious.insert(neighbor);
                    Err(TrustError::SuspiciousEnergy {
                        neighbor,
                        previous: row.ae_t2,
                        claimed: joules,
                    })
                } else {
                    row.push_energy(joules);
                    self.last_energy_at.insert(neighbor, at);
                    Ok(())
                }
            }
            ObservationEvent::SignalSample { at, value } => {
                if !(value > 0.0 && value <= 1.0) {
                    Err(TrustError::SignalOutOfRange(value))
                } else if self.last_signal_at.get(&neighbor).is_some_and(|t| at <= *t) {
                    Err(TrustError::StaleSample { neighbor, at })
                } else {
                    row.push_signal(value);
                    self.last_signal_at.insert(neighbor, at);
                    Ok(())
                }
            }
            counter => row.apply_counter(counter),
        };
        self.refresh(neighbor);
        result
    }

    fn refresh(&mut self, neighbor: NodeAddress) {
        if let Some(row) = self.rows.get(&neighbor) {
            self.trust.insert(neighbor, compute_trust(row, &self.weights));
        }
    }

    pub fn csv_rows(&self) -> Vec<TrustCsvRow> {
        self.rows
            .iter()
            .map(|(n, r)| TrustCsvRow::new(self.observer, *n, r, self.is_suspicious(*n), self.trust[n]))
            .collect()
    }

    /// Writes the table as CSV with the header from [`TRUST_CSV_COLUMNS`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrustError> {
        write_trust_csv(out, self.csv_rows())
    }
}

/// Serializes rows (possibly from several tables) with one shared header.
pub fn write_trust_csv<W: Write>(out: W, rows: impl IntoIterator<Item = TrustCsvRow>) -> Result<(), TrustError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| TrustError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| TrustError::Csv(e.to_string()))
}

/// One CSV row: observer, neighbor, every record field, suspicious flag and
/// trust. `suspicious` and `trust` may be absent on input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustCsvRow {
    pub observer: NodeAddress,
    pub neighbor: NodeAddress,
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
    #[serde(default)]
    pub suspicious: bool,
    #[serde(default)]
    pub trust: Option<f64>,
}

impl TrustCsvRow {
    fn new(observer: NodeAddress, neighbor: NodeAddress, r: &NeighborRecord, suspicious: bool, trust: f64) -> Self {
        TrustCsvRow {
            observer,
            neighbor,
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
            suspicious,
            trust: Some(trust),
        }
    }

    pub fn record(&self) -> NeighborRecord {
        NeighborRecord {
            ae_t1: self.ae_t1,
            ae_t2: self.ae_t2,
            pss_t1: self.pss_t1,
            pss_t2: self.pss_t2,
            crf: self.crf,
            craf: self.craf,
            rc: self.rc,
            npc: self.npc,
            drf: self.drf,
            draf: self.draf,
            pd: self.pd,
            npt: self.npt,
            npr: self.npr,
        }
    }

    /// Reads observation rows; trailing `suspicious`/`trust` columns are optional.
    pub fn read_all<R: Read>(input: R) -> Result<Vec<TrustCsvRow>, TrustError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        rdr.deserialize()
            .map(|r| r.map_err(|e: csv::Error| TrustError::Csv(e.to_string())))
            .collect()
    }
}

/// Groups CSV rows into one table per observer.
pub fn tables_from_rows(
    rows: &[TrustCsvRow],
    weights: TrustWeights,
) -> Result<BTreeMap<NodeAddress, TrustTable>, TrustError> {
    let mut tables: BTreeMap<NodeAddress, TrustTable> = BTreeMap::new();
    for row in rows {
        let table = tables
            .entry(row.observer)
            .or_insert_with(|| TrustTable::new(row.observer, weights));
        table.insert_record(row.neighbor, row.record())?;
        if row.suspicious {
            table.mark_suspicious(row.neighbor);
        }
    }
    Ok(tables)
}

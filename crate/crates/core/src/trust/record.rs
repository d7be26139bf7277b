use serde::{Deserialize, Serialize};

use super::TrustError;

/// One observer's view of one neighbor: the raw counters and the two most
/// recent energy and signal-strength samples.
///
/// A zeroed sample pair means "no sample yet"; the first sample fills both
/// slots so the two-point ratios start at zero drain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborRecord {
    /// Available energy (J) at the earlier sample time.
    pub ae_t1: f64,
    /// Available energy (J) at the later sample time.
    pub ae_t2: f64,
    /// Packet signal strength, normalized to (0, 1], earlier sample.
    pub pss_t1: f64,
    /// Packet signal strength, later sample.
    pub pss_t2: f64,
    /// Control packets received for forwarding.
    pub crf: u64,
    /// Control packets actually forwarded.
    pub craf: u64,
    /// Routing cost. Kept for completeness; it does not enter the trust sum.
    pub rc: f64,
    /// Packet collisions.
    pub npc: u64,
    /// Data packets received for forwarding.
    pub drf: u64,
    /// Data packets actually forwarded.
    pub draf: u64,
    /// Packets dropped.
    pub pd: u64,
    /// Packets transmitted.
    pub npt: u64,
    /// Packets received.
    pub npr: u64,
}

/// Something an observer saw a neighbor do (or report) while listening.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservationEvent {
    ControlReceivedForForward,
    ControlForwarded,
    DataReceivedForForward,
    DataForwarded,
    PacketDropped,
    PacketTransmitted,
    PacketReceived,
    Collision,
    /// Advertised available energy at time `at`.
    EnergySample {
        at: u64,
        joules: f64,
    },
    /// Received signal strength at time `at`, normalized to (0, 1].
    SignalSample {
        at: u64,
        value: f64,
    },
}

impl NeighborRecord {
    /// Checks the structural invariants between counters and samples.
    pub fn validate(&self) -> Result<(), TrustError> {
        let fail = |what: &str| Err(TrustError::InvalidRecord(what.to_string()));
        if self.craf > self.crf {
            return fail("CRAF exceeds CRF");
        }
        if self.draf > self.drf {
            return fail("DRAF exceeds DRF");
        }
        if self.pd > self.npr {
            return fail("PD exceeds NPR");
        }
        if self.npc > self.npt {
            return fail("NPC exceeds NPT");
        }
        if !(self.ae_t1.is_finite() && self.ae_t2.is_finite()) || self.ae_t2 < 0.0 {
            return fail("energy samples must be finite and non-negative");
        }
        if self.ae_t1 < self.ae_t2 {
            return fail("energy increased between samples");
        }
        for pss in [self.pss_t1, self.pss_t2] {
            if !pss.is_finite() || !(0.0..=1.0).contains(&pss) {
                return fail("signal strength outside [0, 1]");
            }
        }
        Ok(())
    }

    pub(crate) fn has_energy_sample(&self) -> bool {
        self.ae_t1 != 0.0 || self.ae_t2 != 0.0
    }

    pub(crate) fn has_signal_sample(&self) -> bool {
        self.pss_t1 != 0.0 || self.pss_t2 != 0.0
    }

    /// Applies a counter event. Sample events are handled by the table,
    /// which owns the suspicious-energy bookkeeping.
    pub(crate) fn apply_counter(&mut self, event: ObservationEvent) -> Result<(), TrustError> {
        use ObservationEvent::*;
        let violates = |msg: &str| Err(TrustError::InconsistentEvent(msg.to_string()));
        match event {
            ControlReceivedForForward => self.crf += 1,
            ControlForwarded => {
                if self.craf >= self.crf {
                    return violates("control forward without matching receipt");
                }
                self.craf += 1;
            }
            DataReceivedForForward => self.drf += 1,
            DataForwarded => {
                if self.draf >= self.drf {
                    return violates("data forward without matching receipt");
                }
                self.draf += 1;
            }
            PacketDropped => {
                if self.pd >= self.npr {
                    return violates("drop without matching reception");
                }
                self.pd += 1;
            }
            PacketTransmitted => self.npt += 1,
            PacketReceived => self.npr += 1,
            Collision => {
                if self.npc >= self.npt {
                    return violates("collision without matching transmission");
                }
                self.npc += 1;
            }
            EnergySample { .. } | SignalSample { .. } => unreachable!("samples go through TrustTable"),
        }
        Ok(())
    }

    pub(crate) fn push_energy(&mut self, joules: f64) {
        if self.has_energy_sample() {
            self.ae_t1 = self.ae_t2;
        } else {
            self.ae_t1 = joules;
        }
        self.ae_t2 = joules;
    }

    pub(crate) fn push_signal(&mut self, value: f64) {
        if self.has_signal_sample() {
            self.pss_t1 = self.pss_t2;
        } else {
            self.pss_t1 = value;
        }
        self.pss_t2 = value;
    }
}

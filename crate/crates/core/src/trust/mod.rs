//! Neighbor monitoring, weighted trust levels and trust-based group head
//! election.
//!
//! Every node keeps a [`TrustTable`] of the neighbors it overhears. The
//! trust level of a neighbor is a weighted sum of six ratios derived from
//! the counters in its [`NeighborRecord`]:
//!
//! | term | ratio |
//! |------|-------|
//! | A1 | `(AE_t1 - AE_t2) / AE_t1` |
//! | A2 | `(PSS_t1 - PSS_t2) / PSS_t1` |
//! | A3 | `CRAF / CRF` |
//! | A4 | `DRAF / DRF` |
//! | A5 | `1 - NPC / NPT` |
//! | A6 | `1 - PD / NPR` |
//!
//! A ratio whose denominator is zero takes the neutral value 1: a neighbor
//! that was never asked to forward has not misbehaved.

mod election;
mod record;
mod table;

pub use crate::address::NodeAddress;
pub use election::{cast_vote, run_election, tally_votes, ElectionOutcome};
pub use record::{NeighborRecord, ObservationEvent};
pub use table::{tables_from_rows, write_trust_csv, TrustCsvRow, TrustTable, TRUST_CSV_COLUMNS};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrustError {
    #[error("invalid trust weights: {0}")]
    InvalidWeights(String),
    #[error("invalid neighbor record: {0}")]
    InvalidRecord(String),
    #[error("event would break record invariants: {0}")]
    InconsistentEvent(String),
    #[error("neighbor {neighbor} advertised rising energy ({previous} J -> {claimed} J); flagged suspicious")]
    SuspiciousEnergy {
        neighbor: NodeAddress,
        previous: f64,
        claimed: f64,
    },
    #[error("sample for {neighbor} at t={at} is not newer than the last sample")]
    StaleSample { neighbor: NodeAddress, at: u64 },
    #[error("signal sample {0} outside (0, 1]")]
    SignalOutOfRange(f64),
    #[error("a node does not observe itself ({0})")]
    SelfObservation(NodeAddress),
    #[error("election over an empty group")]
    EmptyGroup,
    #[error("current head {0} is not a member of the group")]
    HeadNotInGroup(NodeAddress),
    #[error("trust csv: {0}")]
    Csv(String),
}

/// Coefficients `w1..w6` of the trust sum. Their total stays below 1 so the
/// trust level stays below 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct TrustWeights([f64; 6]);

impl TrustWeights {
    pub fn new(weights: [f64; 6]) -> Result<Self, TrustError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TrustError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum >= 1.0 {
            return Err(TrustError::InvalidWeights(format!(
                "weights sum to {sum}, must be below 1"
            )));
        }
        Ok(TrustWeights(weights))
    }

    pub fn zero() -> Self {
        TrustWeights([0.0; 6])
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.0
    }
}

impl Default for TrustWeights {
    fn default() -> Self {
        TrustWeights([1.0 / 7.0; 6])
    }
}

impl TryFrom<[f64; 6]> for TrustWeights {
    type Error = TrustError;

    fn try_from(value: [f64; 6]) -> Result<Self, Self::Error> {
        TrustWeights::new(value)
    }
}

impl From<TrustWeights> for [f64; 6] {
    fn from(w: TrustWeights) -> Self {
        w.0
    }
}

fn ratio_or_neutral(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// The six ratio terms `A1..A6` for a record.
///
/// A1 and A2 are clamped into `[0, 1]`: signal strength can rise between
/// samples, and a negative term would push the trust level below zero.
pub fn trust_terms(record: &NeighborRecord) -> [f64; 6] {
    let a1 = ratio_or_neutral(record.ae_t1 - record.ae_t2, record.ae_t1).clamp(0.0, 1.0);
    let a2 = ratio_or_neutral(record.pss_t1 - record.pss_t2, record.pss_t1).clamp(0.0, 1.0);
    let a3 = ratio_or_neutral(record.craf as f64, record.crf as f64);
    let a4 = ratio_or_neutral(record.draf as f64, record.drf as f64);
    let a5 = if record.npt == 0 {
        1.0
    } else {
        1.0 - record.npc as f64 / record.npt as f64
    };
    let a6 = if record.npr == 0 {
        1.0
    } else {
        1.0 - record.pd as f64 / record.npr as f64
    };
    [a1, a2, a3, a4, a5, a6]
}

/// Trust level of a neighbor: `w1*A1 + ... + w6*A6`, in `[0, 1)` for any
/// record satisfying [`NeighborRecord::validate`].
pub fn compute_trust(record: &NeighborRecord, weights: &TrustWeights) -> f64 {
    trust_terms(record)
        .iter()
        .zip(weights.0.iter())
        .map(|(a, w)| a * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect() -> NeighborRecord {
        NeighborRecord {
            ae_t1: 100.0,
            ae_t2: 100.0,
            pss_t1: 1.0,
            pss_t2: 1.0,
            crf: 10,
            craf: 10,
            drf: 10,
            draf: 10,
            npc: 0,
            npt: 10,
            pd: 0,
            npr: 10,
            rc: 0.0,
        }
    }

    #[test]
    fn perfect_record_with_default_weights() {
        let t = compute_trust(&perfect(), &TrustWeights::default());
        assert_eq!(trust_terms(&perfect()), [0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!((t - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(format!("{t:.4}"), "0.5714");
    }

    #[test]
    fn total_dropper_keeps_only_energy_signal_and_collision_terms() {
        let r = NeighborRecord {
            ae_t1: 50.0,
            ae_t2: 40.0,
            pss_t1: 0.8,
            pss_t2: 0.6,
            crf: 4,
            craf: 0,
            drf: 4,
            draf: 0,
            npc: 1,
            npt: 4,
            pd: 6,
            npr: 6,
            rc: 0.0,
        };
        let w = TrustWeights::new([0.1, 0.2, 0.05, 0.15, 0.3, 0.1]).unwrap();
        let [a1, a2, a3, a4, a5, a6] = trust_terms(&r);
        assert_eq!((a3, a4, a6), (0.0, 0.0, 0.0));
        let expect = 0.1 * a1 + 0.2 * a2 + 0.3 * a5;
        assert!((compute_trust(&r, &w) - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_give_zero() {
        assert_eq!(compute_trust(&perfect(), &TrustWeights::zero()), 0.0);
    }

    #[test]
    fn empty_record_is_neutral() {
        assert_eq!(trust_terms(&NeighborRecord::default()), [1.0; 6]);
        let t = compute_trust(&NeighborRecord::default(), &TrustWeights::default());
        assert!((t - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rc_does_not_enter_the_sum() {
        let mut r = perfect();
        let w = TrustWeights::default();
        let before = compute_trust(&r, &w);
        r.rc = 1234.5;
        assert_eq!(compute_trust(&r, &w), before);
    }

    #[test]
    fn weights_must_sum_below_one() {
        assert!(TrustWeights::new([0.2; 6]).is_err());
        assert!(TrustWeights::new([-0.1, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(TrustWeights::new([0.16; 6]).is_ok());
    }
}

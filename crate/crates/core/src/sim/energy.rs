use serde::Serialize;

use super::EnergyModel;
use crate::linksec::{cipher_work, CipherWork, SecurityLevel};

/// Joules one node has spent, by category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub tx: f64,
    pub rx: f64,
    pub crypto: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.tx + self.rx + self.crypto
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Charge {
    Tx,
    Rx,
    Crypto,
}

/// A node's battery and ledger. Debits stop at zero: the last debit is cut
/// to what remains and the node is dead from then on.
#[derive(Clone, Debug)]
pub struct Battery {
    remaining: f64,
    ledger: EnergyLedger,
}

impl Battery {
    pub fn new(initial: f64) -> Self {
        Battery {
            remaining: initial,
            ledger: EnergyLedger::default(),
        }
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    pub fn alive(&self) -> bool {
        self.remaining > 0.0
    }

    pub fn ledger(&self) -> EnergyLedger {
        self.ledger
    }

    /// Debits up to `joules`; returns what was actually taken.
    pub fn debit(&mut self, what: Charge, joules: f64) -> f64 {
        let taken = joules.min(self.remaining).max(0.0);
        self.remaining -= taken;
        match what {
            Charge::Tx => self.ledger.tx += taken,
            Charge::Rx => self.ledger.rx += taken,
            Charge::Crypto => self.ledger.crypto += taken,
        }
        taken
    }
}

impl EnergyModel {
    pub fn tx_cost(&self, wire_len: usize) -> f64 {
        self.tx_per_octet * wire_len as f64
    }

    pub fn rx_cost(&self, wire_len: usize) -> f64 {
        self.rx_per_octet * wire_len as f64
    }

    /// Cost of one seal or one open of `payload_len` octets at `level`.
    pub fn cipher_cost(&self, level: SecurityLevel, payload_len: usize) -> f64 {
        let CipherWork {
            rc5_block_rounds,
            xor_octets,
            mac,
        } = cipher_work(level, payload_len);
        rc5_block_rounds as f64 * self.rc5_per_block_per_round
            + xor_octets as f64 * self.xor_per_octet
            + if mac { self.mac_fixed } else { 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linksec::Encryption;

    #[test]
    fn battery_stops_at_zero() {
        let mut b = Battery::new(1.0);
        assert_eq!(b.debit(Charge::Tx, 0.75), 0.75);
        assert_eq!(b.debit(Charge::Crypto, 0.5), 0.25);
        assert!(!b.alive());
        assert_eq!(b.debit(Charge::Rx, 1.0), 0.0);
        assert_eq!(b.ledger().total(), 1.0);
    }

    #[test]
    fn rc5_cost_scales_with_rounds() {
        let m = EnergyModel {
            mac_fixed: 0.0,
            ..EnergyModel::default()
        };
        let l1 = m.cipher_cost(SecurityLevel::new(Encryption::Rc5R4, false), 16);
        let l3 = m.cipher_cost(SecurityLevel::new(Encryption::Rc5R12, false), 16);
        assert!((l3 - 3.0 * l1).abs() < 1e-15);
        // nonce block, L, two message blocks: 4 block calls
        assert!((l1 - 4.0 * 4.0 * m.rc5_per_block_per_round).abs() < 1e-15);
    }
}

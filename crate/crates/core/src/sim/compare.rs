use std::fmt::Write as _;

use super::{run, SimConfig, SimError, SimReport};
use crate::isa::Scenario;

pub const SAVINGS_CSV_HEADER: &str = "node,fixed_J,adaptive_J,saving_J";

/// The same seed run with the agent off and on.
#[derive(Clone, Debug)]
pub struct SavingsReport {
    pub scenario: Scenario,
    pub fixed: SimReport,
    pub adaptive: SimReport,
}

impl SavingsReport {
    pub fn fixed_total(&self) -> f64 {
        self.fixed.total_energy()
    }

    pub fn adaptive_total(&self) -> f64 {
        self.adaptive.total_energy()
    }

    /// Saved energy as a percentage of the fixed arm's; 0 when the fixed arm
    /// spent nothing.
    pub fn saving_percent(&self) -> f64 {
        let fixed = self.fixed_total();
        if fixed == 0.0 {
            0.0
        } else {
            100.0 * (fixed - self.adaptive_total()) / fixed
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SAVINGS_CSV_HEADER);
        out.push('\n');
        for (f, a) in self.fixed.nodes.iter().zip(&self.adaptive.nodes) {
            let (ft, at) = (f.ledger.total(), a.ledger.total());
            writeln!(out, "{},{:.9},{:.9},{:.9}", f.address, ft, at, ft - at).expect("string write");
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "scenario={} fixed_J={:.9} adaptive_J={:.9} saving_pct={:.4}",
            self.scenario,
            self.fixed_total(),
            self.adaptive_total(),
            self.saving_percent()
        )
    }
}

/// Runs `config` with the agent switched off (every packet at the
/// scenario's fixed level) and on, in parallel.
pub fn compare_fixed_vs_adaptive(config: &SimConfig) -> Result<SavingsReport, SimError> {
    config.validate()?;
    let fixed_cfg = SimConfig {
        adaptive: false,
        ..config.clone()
    };
    let adaptive_cfg = SimConfig {
        adaptive: true,
        ..config.clone()
    };
    let (fixed, adaptive) = std::thread::scope(|s| {
        let f = s.spawn(|| run(&fixed_cfg));
        let a = run(&adaptive_cfg);
        (f.join().expect("fixed arm panicked"), a)
    });
    Ok(SavingsReport {
        scenario: config.scenario.name.clone(),
        fixed: fixed?,
        adaptive: adaptive?,
    })
}

//! The security agent: picks a [`SecurityLevel`] per packet from what the
//! protocol layers report about energy, memory and neighbor trust.
//!
//! Decision ladder, applied in order:
//!
//! 1. key material always goes out at level 3 with a MAC;
//! 2. start from the scenario base level (or a reported recommendation);
//! 3. if any neighbor's trust is under the alarm threshold, step encryption up
//!    one level and force the MAC;
//! 4. otherwise, if remaining energy is under the floor, step encryption down
//!    one level, or drop the MAC if encryption is already at the minimum and
//!    the minimum level allows it;
//! 5. routing control always carries a MAC;
//! 6. raise to `min_level` where below it: encryption no weaker, MAC if
//!    `min_level` has one.
//!
//! Metric registry for [`SecurityAgent::report_named`]:
//!
//! | name                    | value                       |
//! |-------------------------|-----------------------------|
//! | `energy`                | remaining joules            |
//! | `memory`                | free octets                 |
//! | `collision-rate`        | fraction in `[0, 1]`        |
//! | `trust`                 | `group:node=value`          |
//! | `policy-recommendation` | security level, e.g. `L2+auth` |

mod policy;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use policy::{Scenario, ScenarioPolicy};

use crate::address::NodeAddress;
use crate::linksec::SecurityLevel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IsaError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("bad value {value:?} for metric {metric}")]
    BadValue { metric: &'static str, value: String },
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("no built-in policy for scenario {0:?}")]
    UnknownScenario(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketClass {
    RoutingControl,
    SensedData,
    Control,
    KeyMaterial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Physical,
    Link,
    Network,
    Application,
}

impl FromStr for Layer {
    type Err = IsaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "physical" => Ok(Layer::Physical),
            "link" => Ok(Layer::Link),
            "network" => Ok(Layer::Network),
            "application" => Ok(Layer::Application),
            _ => Err(IsaError::UnknownLayer(s.to_string())),
        }
    }
}

/// One cross-layer report.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Energy(f64),
    Memory(u64),
    CollisionRate(f64),
    Trust(NodeAddress, f64),
    PolicyRecommendation(SecurityLevel),
}

impl Metric {
    pub const NAMES: [&'static str; 5] = ["energy", "memory", "collision-rate", "trust", "policy-recommendation"];

    /// Parses a registry name and its textual value.
    pub fn parse(name: &str, value: &str) -> Result<Metric, IsaError> {
        fn bad(metric: &'static str, value: &str) -> IsaError {
            IsaError::BadValue {
                metric,
                value: value.to_string(),
            }
        }
        let v = value.trim();
        match name {
            "energy" => v
                .parse::<f64>()
                .ok()
                .filter(|e| *e >= 0.0)
                .map(Metric::Energy)
                .ok_or_else(|| bad("energy", v)),
            "memory" => v.parse().map(Metric::Memory).map_err(|_| bad("memory", v)),
            "collision-rate" => v
                .parse::<f64>()
                .ok()
                .filter(|r| (0.0..=1.0).contains(r))
                .map(Metric::CollisionRate)
                .ok_or_else(|| bad("collision-rate", v)),
            "trust" => {
                let (a, t) = v.split_once('=').ok_or_else(|| bad("trust", v))?;
                let a = a.trim().parse().map_err(|_| bad("trust", v))?;
                let t = t
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|t| (0.0..1.0).contains(t))
                    .ok_or_else(|| bad("trust", v))?;
                Ok(Metric::Trust(a, t))
            }
            "policy-recommendation" => v
                .parse()
                .map(Metric::PolicyRecommendation)
                .map_err(|_| bad("policy-recommendation", v)),
            _ => Err(IsaError::UnknownMetric(name.to_string())),
        }
    }
}

/// Everything [`decide`] looks at.
///
/// Quantities that were never reported are unbounded (`f64::INFINITY`
/// energy, `u64::MAX` memory) so they never trigger a step.
#[derive(Clone, Debug, PartialEq)]
pub struct PerceptSnapshot {
    pub available_memory: u64,
    pub available_energy: f64,
    pub neighbor_trust: BTreeMap<NodeAddress, f64>,
    pub scenario_policy: ScenarioPolicy,
    pub packet_class: PacketClass,
}

/// The decision ladder. Pure: equal snapshots give equal levels.
pub fn decide(p: &PerceptSnapshot) -> SecurityLevel {
    if p.packet_class == PacketClass::KeyMaterial {
        return SecurityLevel::MAX;
    }
    let policy = &p.scenario_policy;
    let mut level = policy.base_level;
    let min_trust = p.neighbor_trust.values().copied().fold(f64::INFINITY, f64::min);

    if min_trust < policy.trust_alarm {
        level.encryption = level.encryption.stronger();
        level.auth = true;
    } else if p.available_energy < policy.energy_floor {
        if level.encryption > policy.min_level.encryption {
            level.encryption = level.encryption.weaker();
        } else if !policy.min_level.auth {
            level.auth = false;
        }
    }
    if p.packet_class == PacketClass::RoutingControl {
        level.auth = true;
    }
    level.raised_to(policy.min_level)
}

/// Per-node agent: keeps the latest value of every reported metric.
#[derive(Clone, Debug)]
pub struct SecurityAgent {
    policy: ScenarioPolicy,
    energy: Option<f64>,
    memory: Option<u64>,
    collision_rate: Option<f64>,
    trust: BTreeMap<NodeAddress, f64>,
    recommendation: Option<SecurityLevel>,
}

impl SecurityAgent {
    pub fn new(policy: ScenarioPolicy) -> Result<Self, IsaError> {
        policy.validate()?;
        Ok(SecurityAgent {
            policy,
            energy: None,
            memory: None,
            collision_rate: None,
            trust: BTreeMap::new(),
            recommendation: None,
        })
    }

    pub fn policy(&self) -> &ScenarioPolicy {
        &self.policy
    }

    /// Records a metric. The layer is informational; a metric means the same
    /// thing whichever layer reports it.
    pub fn report(&mut self, _layer: Layer, metric: Metric) {
        match metric {
            Metric::Energy(e) => self.energy = Some(e),
            Metric::Memory(m) => self.memory = Some(m),
            Metric::CollisionRate(r) => self.collision_rate = Some(r),
            Metric::Trust(n, t) => {
                self.trust.insert(n, t);
            }
            Metric::PolicyRecommendation(l) => self.recommendation = Some(l),
        }
    }

    pub fn report_named(&mut self, layer: Layer, name: &str, value: &str) -> Result<(), IsaError> {
        self.report(layer, Metric::parse(name, value)?);
        Ok(())
    }

    pub fn collision_rate(&self) -> Option<f64> {
        self.collision_rate
    }

    /// Current snapshot. A policy recommendation replaces the base level,
    /// clamped to the policy's range.
    pub fn snapshot(&self, class: PacketClass) -> PerceptSnapshot {
        let mut policy = self.policy.clone();
        if let Some(r) = self.recommendation {
            policy.base_level = r.raised_to(policy.min_level);
        }
        PerceptSnapshot {
            available_memory: self.memory.unwrap_or(u64::MAX),
            available_energy: self.energy.unwrap_or(f64::INFINITY),
            neighbor_trust: self.trust.clone(),
            scenario_policy: policy,
            packet_class: class,
        }
    }

    pub fn decide(&self, class: PacketClass) -> SecurityLevel {
        decide(&self.snapshot(class))
    }
}

impl fmt::Display for PacketClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PacketClass::RoutingControl => "routing-control",
            PacketClass::SensedData => "sensed-data",
            PacketClass::Control => "control",
            PacketClass::KeyMaterial => "key-material",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linksec::Encryption;

    fn lvl(e: Encryption, auth: bool) -> SecurityLevel {
        SecurityLevel::new(e, auth)
    }

    fn n(i: u8) -> NodeAddress {
        NodeAddress::new(0, i)
    }

    #[test]
    fn military_is_constant() {
        let mut a = SecurityAgent::new(ScenarioPolicy::military()).unwrap();
        assert_eq!(a.decide(PacketClass::SensedData), SecurityLevel::MAX);
        a.report(Layer::Physical, Metric::Energy(0.0));
        assert_eq!(a.decide(PacketClass::SensedData), SecurityLevel::MAX);
        a.report(Layer::Network, Metric::Trust(n(1), 0.0));
        for c in [
            PacketClass::RoutingControl,
            PacketClass::Control,
            PacketClass::SensedData,
        ] {
            assert_eq!(a.decide(c), SecurityLevel::MAX);
        }
    }

    #[test]
    fn agriculture_healthy_is_xor_with_mac() {
        let mut a = SecurityAgent::new(ScenarioPolicy::agriculture(1000.0)).unwrap();
        a.report(Layer::Physical, Metric::Energy(900.0));
        a.report(Layer::Network, Metric::Trust(n(1), 0.57));
        assert_eq!(a.decide(PacketClass::SensedData), lvl(Encryption::Xor, true));
    }

    #[test]
    fn habitat_low_trust_escalates() {
        let mut policy = ScenarioPolicy::habitat(1000.0);
        policy.base_level = lvl(Encryption::Rc5R4, false);
        policy.min_level = lvl(Encryption::Rc5R4, false);
        let mut a = SecurityAgent::new(policy).unwrap();
        a.report(Layer::Network, Metric::Trust(n(3), 0.1));
        assert_eq!(a.decide(PacketClass::SensedData).encryption, Encryption::Rc5R8);
    }

    #[test]
    fn low_energy_deescalates() {
        let mut policy = ScenarioPolicy::habitat(50.0);
        assert_eq!(policy.energy_floor, 10.0);
        let mut a = SecurityAgent::new(policy.clone()).unwrap();
        a.report(Layer::Physical, Metric::Energy(5.0));
        assert_eq!(a.decide(PacketClass::SensedData), lvl(Encryption::Rc5R4, true));

        policy.base_level = policy.min_level;
        let mut a = SecurityAgent::new(policy).unwrap();
        a.report(Layer::Physical, Metric::Energy(5.0));
        assert_eq!(a.decide(PacketClass::SensedData), lvl(Encryption::Rc5R4, true));

        let mut a = SecurityAgent::new(ScenarioPolicy::agriculture(1000.0)).unwrap();
        a.report(Layer::Physical, Metric::Energy(5.0));
        assert_eq!(a.decide(PacketClass::SensedData), lvl(Encryption::Xor, false));
        assert_eq!(a.decide(PacketClass::RoutingControl), lvl(Encryption::Xor, true));
    }

    #[test]
    fn no_reports_gives_base() {
        let a = SecurityAgent::new(ScenarioPolicy::habitat(1000.0)).unwrap();
        assert_eq!(a.decide(PacketClass::SensedData), a.policy().base_level);
        assert_eq!(a.decide(PacketClass::KeyMaterial), SecurityLevel::MAX);
    }

    #[test]
    fn recommendation_is_clamped() {
        let mut a = SecurityAgent::new(ScenarioPolicy::habitat(1000.0)).unwrap();
        a.report_named(Layer::Application, "policy-recommendation", "L0")
            .unwrap();
        assert_eq!(a.decide(PacketClass::SensedData), lvl(Encryption::Rc5R4, true));
        a.report_named(Layer::Application, "policy-recommendation", "L3+auth")
            .unwrap();
        assert_eq!(a.decide(PacketClass::SensedData), SecurityLevel::MAX);
    }

    #[test]
    fn registry() {
        let mut a = SecurityAgent::new(ScenarioPolicy::habitat(1000.0)).unwrap();
        assert_eq!(
            a.report_named(Layer::Link, "battery", "1"),
            Err(IsaError::UnknownMetric("battery".into()))
        );
        assert!(a.report_named(Layer::Link, "energy", "-1").is_err());
        a.report_named(Layer::Link, "trust", "0:4=0.05").unwrap();
        a.report_named(Layer::Link, "memory", "2048").unwrap();
        a.report_named(Layer::Physical, "collision-rate", "0.1").unwrap();
        assert_eq!(a.decide(PacketClass::SensedData), SecurityLevel::MAX);
        assert_eq!(a.snapshot(PacketClass::Control).available_memory, 2048);
    }

    #[test]
    fn policy_validation_and_names() {
        let mut p = ScenarioPolicy::agriculture(1.0);
        p.min_level = SecurityLevel::MAX;
        assert!(SecurityAgent::new(p).is_err());
        for s in Scenario::BUILTIN {
            assert_eq!(s.short_name().parse::<Scenario>().unwrap(), s);
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        }
    }
}

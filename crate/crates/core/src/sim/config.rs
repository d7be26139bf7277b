use serde::{Deserialize, Serialize};

use super::SimError;
use crate::address::{NodeAddress, BROADCAST_NODE};
use crate::isa::{Scenario, ScenarioPolicy};
use crate::linksec::MAX_PAYLOAD;
use crate::trust::TrustWeights;

/// Joule costs of radio and cipher work.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub tx_per_octet: f64,
    pub rx_per_octet: f64,
    pub rc5_per_block_per_round: f64,
    pub xor_per_octet: f64,
    pub mac_fixed: f64,
    pub initial_energy: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tx_per_octet: 0.0006,
            rx_per_octet: 0.0003,
            rc5_per_block_per_round: 0.000002,
            xor_per_octet: 0.0000001,
            mac_fixed: 0.00001,
            initial_energy: 1000.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let costs = [
            ("tx_per_octet", self.tx_per_octet),
            ("rx_per_octet", self.rx_per_octet),
            ("rc5_per_block_per_round", self.rc5_per_block_per_round),
            ("xor_per_octet", self.xor_per_octet),
            ("mac_fixed", self.mac_fixed),
            ("initial_energy", self.initial_energy),
        ];
        for (name, v) in costs {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!("energy_model.{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryBehavior {
    /// Drops each packet it should forward with this probability.
    DropFraction(f64),
    /// Re-sends the last packet it overheard, in its own slot.
    ReplayAttacker,
    /// Advertises ever-increasing remaining energy.
    Captured,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub node: NodeAddress,
    pub behavior: AdversaryBehavior,
    #[serde(default)]
    pub start_frame: u64,
}

/// Everything a run depends on. Two runs with equal configs produce equal
/// reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub node_count: u32,
    pub group_count: u32,
    /// TDM slots per frame; member `n` of a group owns slot `n`, the last
    /// slot belongs to the group head's control traffic.
    pub slots_per_frame: u32,
    /// Frames per key session.
    pub session_length: u64,
    /// Frames to simulate.
    pub sim_length: u64,
    pub scenario: ScenarioPolicy,
    /// Security agent on (adaptive arm) or off (every packet at
    /// `scenario.fixed_level`).
    pub adaptive: bool,
    pub adversaries: Vec<AdversarySpec>,
    pub energy_model: EnergyModel,
    pub trust_weights: TrustWeights,
    pub rekey_threshold: f64,
    pub loss_threshold: u32,
    /// Probability that a unicast is lost before its addressee.
    pub loss_rate: f64,
    /// Octets of sensed data per node per frame.
    pub payload_len: usize,
    /// Hold an election at every session boundary, not only when the head
    /// runs low on energy.
    pub rotate_heads: bool,
    /// Head sends a session-key broadcast beacon every frame.
    pub beacon: bool,
    /// Head sends the aggregated data to the base station every frame.
    pub uplink: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        let energy_model = EnergyModel::default();
        SimConfig {
            seed: 1,
            node_count: 20,
            group_count: 2,
            slots_per_frame: 16,
            session_length: 50,
            sim_length: 500,
            scenario: ScenarioPolicy::habitat(energy_model.initial_energy),
            adaptive: true,
            adversaries: Vec::new(),
            energy_model,
            trust_weights: TrustWeights::default(),
            rekey_threshold: 0.4,
            loss_threshold: crate::linksec::DEFAULT_LOSS_THRESHOLD,
            loss_rate: 0.0,
            payload_len: 10,
            rotate_heads: true,
            beacon: true,
            uplink: true,
        }
    }
}

/// Keys accepted in a config file or as `--set` overrides.
pub const CONFIG_KEYS: [&str; 18] = [
    "seed",
    "node_count",
    "group_count",
    "slots_per_frame",
    "session_length",
    "sim_length",
    "scenario",
    "adaptive",
    "adversaries",
    "energy_model",
    "trust_weights",
    "rekey_threshold",
    "loss_threshold",
    "loss_rate",
    "payload_len",
    "rotate_heads",
    "beacon",
    "uplink",
];

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioSpec {
    Named(Scenario),
    Policy(ScenarioPolicy),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    node_count: Option<u32>,
    group_count: Option<u32>,
    slots_per_frame: Option<u32>,
    session_length: Option<u64>,
    sim_length: Option<u64>,
    scenario: Option<ScenarioSpec>,
    adaptive: Option<bool>,
    #[serde(default)]
    adversaries: Vec<AdversarySpec>,
    energy_model: Option<EnergyModel>,
    trust_weights: Option<TrustWeights>,
    rekey_threshold: Option<f64>,
    loss_threshold: Option<u32>,
    loss_rate: Option<f64>,
    payload_len: Option<usize>,
    rotate_heads: Option<bool>,
    beacon: Option<bool>,
    uplink: Option<bool>,
}

impl SimConfig {
    /// Parses a TOML config. Missing keys take their defaults; a scenario
    /// given by name gets the built-in policy for it.
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// As [`SimConfig::from_toml`], after applying `key=value` overrides.
    /// Keys are top-level names or `table.field` for `energy_model` and
    /// `scenario`; values are TOML (bare words are taken as strings).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, SimError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let file: ConfigFile = table
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        let d = SimConfig::default();
        let energy_model = file.energy_model.unwrap_or(d.energy_model);
        let scenario = match file.scenario {
            None => ScenarioPolicy::habitat(energy_model.initial_energy),
            Some(ScenarioSpec::Named(s)) => ScenarioPolicy::builtin(&s, energy_model.initial_energy)?,
            Some(ScenarioSpec::Policy(p)) => p,
        };
        let cfg = SimConfig {
            seed: file.seed.unwrap_or(d.seed),
            node_count: file.node_count.unwrap_or(d.node_count),
            group_count: file.group_count.unwrap_or(d.group_count),
            slots_per_frame: file.slots_per_frame.unwrap_or(d.slots_per_frame),
            session_length: file.session_length.unwrap_or(d.session_length),
            sim_length: file.sim_length.unwrap_or(d.sim_length),
            scenario,
            adaptive: file.adaptive.unwrap_or(d.adaptive),
            adversaries: file.adversaries,
            energy_model,
            trust_weights: file.trust_weights.unwrap_or(d.trust_weights),
            rekey_threshold: file.rekey_threshold.unwrap_or(d.rekey_threshold),
            loss_threshold: file.loss_threshold.unwrap_or(d.loss_threshold),
            loss_rate: file.loss_rate.unwrap_or(d.loss_rate),
            payload_len: file.payload_len.unwrap_or(d.payload_len),
            rotate_heads: file.rotate_heads.unwrap_or(d.rotate_heads),
            beacon: file.beacon.unwrap_or(d.beacon),
            uplink: file.uplink.unwrap_or(d.uplink),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sizes of the groups: contiguous, as even as possible, larger first.
    pub fn group_sizes(&self) -> Vec<u32> {
        let g = self.group_count.max(1);
        (0..g)
            .map(|i| self.node_count / g + u32::from(i < self.node_count % g))
            .collect()
    }

    /// Address of every node, group by group.
    pub fn addresses(&self) -> Vec<NodeAddress> {
        self.group_sizes()
            .iter()
            .enumerate()
            .flat_map(|(g, n)| (0..*n).map(move |i| NodeAddress::new(g as u8, i as u8)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: String| Err(SimError::Config(m));
        if self.node_count == 0 || self.node_count > 65536 {
            return fail(format!("node_count {} outside 1..=65536", self.node_count));
        }
        if self.group_count == 0 || self.group_count > 256 || self.group_count > self.node_count {
            return fail(format!(
                "group_count {} must be in 1..=min(256, node_count)",
                self.group_count
            ));
        }
        let largest = self.group_sizes()[0];
        if largest > u32::from(BROADCAST_NODE) {
            return fail(format!(
                "groups of {largest} nodes; at most 255 fit since node id 255 is the broadcast id"
            ));
        }
        if self.slots_per_frame < largest + 1 {
            return fail(format!(
                "slots_per_frame {} too small for {largest} members plus the head control slot",
                self.slots_per_frame
            ));
        }
        if self.session_length == 0 {
            return fail("session_length must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.rekey_threshold) {
            return fail(format!("rekey_threshold {} outside [0, 1)", self.rekey_threshold));
        }
        if !(0.0..=1.0).contains(&self.loss_rate) {
            return fail(format!("loss_rate {} outside [0, 1]", self.loss_rate));
        }
        if self.payload_len > MAX_PAYLOAD {
            return fail(format!("payload_len {} exceeds {MAX_PAYLOAD}", self.payload_len));
        }
        self.energy_model.validate()?;
        self.scenario.validate()?;
        let addrs = self.addresses();
        for a in &self.adversaries {
            if addrs.binary_search(&a.node).is_err() {
                return fail(format!("adversary {} is not a node of this network", a.node));
            }
            if let AdversaryBehavior::DropFraction(p) = a.behavior {
                if !(0.0..=1.0).contains(&p) {
                    return fail(format!("drop fraction {p} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<(), SimError> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| SimError::Override(format!("{ov:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut path = key.split('.');
    let top = path.next().unwrap_or_default();
    if !CONFIG_KEYS.contains(&top) {
        return Err(SimError::Override(format!("unknown config key {key:?}")));
    }
    match (top, path.next(), path.next()) {
        (_, None, _) => {
            table.insert(top.to_string(), value);
        }
        ("energy_model" | "scenario", Some(field), None) => {
            let entry = table
                .entry(top.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(field.to_string(), value);
                }
                _ => {
                    return Err(SimError::Override(format!(
                        "{key:?}: {top} is not a table in this config"
                    )))
                }
            }
        }
        _ => return Err(SimError::Override(format!("unknown config key {key:?}"))),
    }
    Ok(())
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IsaError;
use crate::linksec::{Encryption, SecurityLevel};

/// Application scenario a policy was built for.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    MilitarySurveillance,
    HabitatMonitoring,
    AgriculturalFarming,
    Custom(String),
}

impl Scenario {
    pub const BUILTIN: [Scenario; 3] = [
        Scenario::MilitarySurveillance,
        Scenario::HabitatMonitoring,
        Scenario::AgriculturalFarming,
    ];

    /// Short name used on the command line.
    pub fn short_name(&self) -> &str {
        match self {
            Scenario::MilitarySurveillance => "military",
            Scenario::HabitatMonitoring => "habitat",
            Scenario::AgriculturalFarming => "agriculture",
            Scenario::Custom(s) => s,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::MilitarySurveillance => "military-surveillance",
            Scenario::HabitatMonitoring => "habitat-monitoring",
            Scenario::AgriculturalFarming => "agricultural-farming",
            Scenario::Custom(s) => s,
        })
    }
}

impl FromStr for Scenario {
    type Err = IsaError;

    /// Accepts the long or short built-in names; anything else non-empty is
    /// a custom scenario.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "" => return Err(IsaError::InvalidPolicy("empty scenario name".into())),
            "military" | "military-surveillance" => Scenario::MilitarySurveillance,
            "habitat" | "habitat-monitoring" => Scenario::HabitatMonitoring,
            "agriculture" | "agricultural-farming" => Scenario::AgriculturalFarming,
            other => Scenario::Custom(other.to_string()),
        })
    }
}

impl TryFrom<String> for Scenario {
    type Error = IsaError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> String {
        s.to_string()
    }
}

fn max_level() -> SecurityLevel {
    SecurityLevel::MAX
}

/// Security requirements of one deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPolicy {
    pub name: Scenario,
    /// Level used when nothing calls for a change.
    pub base_level: SecurityLevel,
    /// The agent never goes below this.
    pub min_level: SecurityLevel,
    /// Remaining energy (J) under which the agent steps down.
    pub energy_floor: f64,
    /// Lowest tolerated neighbor trust before the agent steps up.
    pub trust_alarm: f64,
    /// Level every packet uses when the agent is switched off. A fixed
    /// deployment has to carry its most demanding packet class (key
    /// material), so this defaults to the strongest level.
    #[serde(default = "max_level")]
    pub fixed_level: SecurityLevel,
}

impl ScenarioPolicy {
    pub fn military() -> Self {
        ScenarioPolicy {
            name: Scenario::MilitarySurveillance,
            base_level: SecurityLevel::MAX,
            min_level: SecurityLevel::MAX,
            energy_floor: 0.0,
            trust_alarm: 0.3,
            fixed_level: SecurityLevel::MAX,
        }
    }

    pub fn habitat(initial_energy: f64) -> Self {
        ScenarioPolicy {
            name: Scenario::HabitatMonitoring,
            base_level: SecurityLevel::new(Encryption::Rc5R8, true),
            min_level: SecurityLevel::new(Encryption::Rc5R4, true),
            energy_floor: 0.2 * initial_energy,
            trust_alarm: 0.3,
            fixed_level: SecurityLevel::MAX,
        }
    }

    pub fn agriculture(initial_energy: f64) -> Self {
        ScenarioPolicy {
            name: Scenario::AgriculturalFarming,
            base_level: SecurityLevel::new(Encryption::Xor, true),
            min_level: SecurityLevel::new(Encryption::Xor, false),
            energy_floor: 0.1 * initial_energy,
            trust_alarm: 0.2,
            fixed_level: SecurityLevel::MAX,
        }
    }

    /// Default policy for a built-in scenario; energy floors scale with the
    /// node's initial energy.
    pub fn builtin(scenario: &Scenario, initial_energy: f64) -> Result<Self, IsaError> {
        match scenario {
            Scenario::MilitarySurveillance => Ok(Self::military()),
            Scenario::HabitatMonitoring => Ok(Self::habitat(initial_energy)),
            Scenario::AgriculturalFarming => Ok(Self::agriculture(initial_energy)),
            Scenario::Custom(name) => Err(IsaError::UnknownScenario(name.clone())),
        }
    }

    pub fn validate(&self) -> Result<(), IsaError> {
        if !self.base_level.meets(self.min_level) {
            return Err(IsaError::InvalidPolicy(format!(
                "min_level {} above base_level {}",
                self.min_level, self.base_level
            )));
        }
        if !(self.energy_floor >= 0.0 && self.energy_floor.is_finite()) {
            return Err(IsaError::InvalidPolicy(format!("energy_floor {}", self.energy_floor)));
        }
        if !(0.0..=1.0).contains(&self.trust_alarm) {
            return Err(IsaError::InvalidPolicy(format!("trust_alarm {}", self.trust_alarm)));
        }
        Ok(())
    }
}

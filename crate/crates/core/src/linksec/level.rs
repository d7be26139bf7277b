use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LinkError;

/// Encryption levels, carried in 2 bits of the packed header octet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Encryption {
    /// PRF keystream XOR.
    Xor = 0,
    /// RC5, 80-bit key, 4 rounds.
    Rc5R4 = 1,
    /// RC5, 80-bit key, 8 rounds.
    Rc5R8 = 2,
    /// RC5, 80-bit key, 12 rounds.
    Rc5R12 = 3,
}

impl Encryption {
    pub const ALL: [Encryption; 4] = [Self::Xor, Self::Rc5R4, Self::Rc5R8, Self::Rc5R12];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, LinkError> {
        Self::ALL
            .get(usize::from(code))
            .copied()
            .ok_or(LinkError::Format(format!("encryption code {code}")))
    }

    /// RC5 round count, `None` for the XOR level.
    pub fn rounds(self) -> Option<u8> {
        match self {
            Encryption::Xor => None,
            Encryption::Rc5R4 => Some(4),
            Encryption::Rc5R8 => Some(8),
            Encryption::Rc5R12 => Some(12),
        }
    }

    pub fn stronger(self) -> Self {
        Self::ALL[usize::from(self.code() + 1).min(3)]
    }

    pub fn weaker(self) -> Self {
        Self::ALL[usize::from(self.code().saturating_sub(1))]
    }
}

/// Encryption level plus whether a MAC is carried.
///
/// Levels are ordered by encryption first, then authentication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SecurityLevel {
    pub encryption: Encryption,
    pub auth: bool,
}

impl SecurityLevel {
    pub const fn new(encryption: Encryption, auth: bool) -> Self {
        SecurityLevel { encryption, auth }
    }

    pub const MAX: SecurityLevel = SecurityLevel::new(Encryption::Rc5R12, true);
    pub const MIN: SecurityLevel = SecurityLevel::new(Encryption::Xor, false);

    /// At least `floor` in both components: encryption no weaker, and a MAC
    /// whenever `floor` has one.
    pub fn meets(self, floor: SecurityLevel) -> bool {
        self.encryption >= floor.encryption && (self.auth || !floor.auth)
    }

    /// The weakest level meeting both `self` and `floor`.
    pub fn raised_to(self, floor: SecurityLevel) -> SecurityLevel {
        SecurityLevel::new(self.encryption.max(floor.encryption), self.auth || floor.auth)
    }

    /// Every level × auth combination.
    pub fn all() -> impl Iterator<Item = SecurityLevel> {
        Encryption::ALL
            .into_iter()
            .flat_map(|e| [false, true].map(move |a| SecurityLevel::new(e, a)))
    }

    /// Three-bit field of the packed header octet: `enc(2) ∥ auth(1)`.
    pub fn bits(self) -> u8 {
        (self.encryption.code() << 1) | u8::from(self.auth)
    }

    pub fn from_bits(bits: u8) -> Self {
        let encryption = Encryption::ALL[usize::from((bits >> 1) & 0b11)];
        SecurityLevel::new(encryption, bits & 1 == 1)
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.encryption.code())?;
        if self.auth {
            write!(f, "+auth")?;
        }
        Ok(())
    }
}

impl FromStr for SecurityLevel {
    type Err = LinkError;

    /// Accepts `L0`..`L3`, optionally suffixed with `+auth`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (lvl, auth) = match s.strip_suffix("+auth") {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let code = lvl
            .strip_prefix('L')
            .or_else(|| lvl.strip_prefix('l'))
            .and_then(|d| d.parse::<u8>().ok())
            .ok_or_else(|| LinkError::Format(format!("security level {s:?}")))?;
        Ok(SecurityLevel::new(Encryption::from_code(code)?, auth))
    }
}

impl TryFrom<String> for SecurityLevel {
    type Error = LinkError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SecurityLevel> for String {
    fn from(l: SecurityLevel) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_match_the_two_bit_table() {
        let codes: Vec<u8> = Encryption::ALL.iter().map(|e| e.code()).collect();
        assert_eq!(codes, [0b00, 0b01, 0b10, 0b11]);
        assert_eq!(Encryption::Rc5R4.rounds(), Some(4));
        assert_eq!(Encryption::Rc5R12.rounds(), Some(12));
        assert_eq!(Encryption::Xor.rounds(), None);
    }

    #[test]
    fn bits_round_trip_and_parse() {
        for l in SecurityLevel::all() {
            assert_eq!(SecurityLevel::from_bits(l.bits()), l);
            assert_eq!(l.to_string().parse::<SecurityLevel>().unwrap(), l);
        }
        assert_eq!(SecurityLevel::all().count(), 8);
        assert!("L4".parse::<SecurityLevel>().is_err());
    }

    #[test]
    fn ordering() {
        let l0a = SecurityLevel::new(Encryption::Xor, true);
        let l1 = SecurityLevel::new(Encryption::Rc5R4, false);
        assert!(l0a < l1);
        assert!(l1 < SecurityLevel::MAX);
    }
}

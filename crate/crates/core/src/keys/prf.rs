use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;

use super::KeyError;

/// Key length in octets (80 bits).
pub const KEY_LEN: usize = 10;

/// An 80-bit symmetric key. Equality runs in constant time.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SymmetricKey([u8; KEY_LEN]);

impl SymmetricKey {
    pub const fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        SymmetricKey(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, KeyError> {
        let arr: [u8; KEY_LEN] = bytes.try_into().map_err(|_| KeyError::BadKeyLength(bytes.len()))?;
        Ok(SymmetricKey(arr))
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        let bytes = hex::decode(s.trim()).map_err(|e| KeyError::BadHex(e.to_string()))?;
        Self::from_slice(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl PartialEq for SymmetricKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.ct_eq(&other.0).into()
    }
}

impl Eq for SymmetricKey {}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Only a short fingerprint; full keys stay out of logs.
        write!(f, "SymmetricKey({:02x}{:02x}..)", self.0[0], self.0[1])
    }
}

impl TryFrom<String> for SymmetricKey {
    type Error = KeyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SymmetricKey::from_hex(&value)
    }
}

impl From<SymmetricKey> for String {
    fn from(k: SymmetricKey) -> String {
        k.to_hex()
    }
}

/// Keyed pseudorandom function producing 80-bit outputs.
pub trait Prf {
    fn eval(&self, key: &SymmetricKey, message: &[u8]) -> SymmetricKey;
}

/// HMAC-SHA256 truncated to the first 10 octets.
#[derive(Clone, Copy, Debug, Default)]
pub struct HmacSha256Prf;

impl HmacSha256Prf {
    /// Full 32-octet HMAC-SHA256 output.
    pub fn digest(key: &SymmetricKey, message: &[u8]) -> [u8; 32] {
        let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key.as_bytes()).expect("HMAC accepts any key length");
        mac.update(message);
        mac.finalize().into_bytes().into()
    }
}

impl Prf for HmacSha256Prf {
    fn eval(&self, key: &SymmetricKey, message: &[u8]) -> SymmetricKey {
        let d = Self::digest(key, message);
        let mut out = [0u8; KEY_LEN];
        out.copy_from_slice(&d[..KEY_LEN]);
        SymmetricKey(out)
    }
}

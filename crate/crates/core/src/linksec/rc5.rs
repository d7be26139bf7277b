//! RC5 with 32-bit words (64-bit blocks).

use super::LinkError;

const P32: u32 = 0xB7E1_5163;
const Q32: u32 = 0x9E37_79B9;

/// Round counts used by the link layer's encryption levels.
pub const SUPPORTED_ROUNDS: [u8; 3] = [4, 8, 12];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Encrypt,
    Decrypt,
}

/// An expanded RC5-32/r/b key.
#[derive(Clone)]
pub struct Rc5 {
    s: Vec<u32>,
    rounds: u8,
}

impl Rc5 {
    /// Expands `key` (0..=255 octets) for `rounds` rounds (1..=255).
    pub fn new(key: &[u8], rounds: u8) -> Result<Self, LinkError> {
        if key.len() > 255 {
            return Err(LinkError::BadCipherKey(key.len()));
        }
        if rounds == 0 {
            return Err(LinkError::BadRounds(rounds));
        }
        let c = key.len().div_ceil(4).max(1);
        let mut l = vec![0u32; c];
        for (i, b) in key.iter().enumerate().rev() {
            l[i / 4] = (l[i / 4] << 8).wrapping_add(u32::from(*b));
        }

        let t = 2 * (usize::from(rounds) + 1);
        let mut s = Vec::with_capacity(t);
        s.push(P32);
        for i in 1..t {
            s.push(s[i - 1].wrapping_add(Q32));
        }

        let (mut a, mut b, mut i, mut j) = (0u32, 0u32, 0usize, 0usize);
        for _ in 0..3 * t.max(c) {
            s[i] = s[i].wrapping_add(a).wrapping_add(b).rotate_left(3);
            a = s[i];
            l[j] = l[j].wrapping_add(a).wrapping_add(b).rotate_left(a.wrapping_add(b));
            b = l[j];
            i = (i + 1) % t;
            j = (j + 1) % c;
        }
        Ok(Rc5 { s, rounds })
    }

    pub fn rounds(&self) -> u8 {
        self.rounds
    }

    pub fn encrypt_block(&self, block: [u8; 8]) -> [u8; 8] {
        let (mut a, mut b) = split(block);
        a = a.wrapping_add(self.s[0]);
        b = b.wrapping_add(self.s[1]);
        for r in 1..=usize::from(self.rounds) {
            a = (a ^ b).rotate_left(b).wrapping_add(self.s[2 * r]);
            b = (b ^ a).rotate_left(a).wrapping_add(self.s[2 * r + 1]);
        }
        join(a, b)
    }

    pub fn decrypt_block(&self, block: [u8; 8]) -> [u8; 8] {
        let (mut a, mut b) = split(block);
        for r in (1..=usize::from(self.rounds)).rev() {
            b = b.wrapping_sub(self.s[2 * r + 1]).rotate_right(a) ^ a;
            a = a.wrapping_sub(self.s[2 * r]).rotate_right(b) ^ b;
        }
        b = b.wrapping_sub(self.s[1]);
        a = a.wrapping_sub(self.s[0]);
        join(a, b)
    }
}

fn split(block: [u8; 8]) -> (u32, u32) {
    (
        u32::from_le_bytes([block[0], block[1], block[2], block[3]]),
        u32::from_le_bytes([block[4], block[5], block[6], block[7]]),
    )
}

fn join(a: u32, b: u32) -> [u8; 8] {
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(&a.to_le_bytes());
    out[4..].copy_from_slice(&b.to_le_bytes());
    out
}

/// One RC5-32/r/80 block operation with `rounds` restricted to 4, 8 or 12.
pub fn rc5_block(
    key: &crate::keys::SymmetricKey,
    rounds: u8,
    block: [u8; 8],
    direction: Direction,
) -> Result<[u8; 8], LinkError> {
    if !SUPPORTED_ROUNDS.contains(&rounds) {
        return Err(LinkError::BadRounds(rounds));
    }
    let cipher = Rc5::new(key.as_bytes(), rounds)?;
    Ok(match direction {
        Direction::Encrypt => cipher.encrypt_block(block),
        Direction::Decrypt => cipher.decrypt_block(block),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h8(s: &str) -> [u8; 8] {
        hex::decode(s).unwrap().try_into().unwrap()
    }

    #[test]
    fn published_rc5_32_12_16_vectors() {
        let cases = [
            (
                "00000000000000000000000000000000",
                "0000000000000000",
                "21a5dbee154b8f6d",
            ),
            (
                "915f4619be41b2516355a50110a9ce91",
                "21a5dbee154b8f6d",
                "f7c013ac5b2b8952",
            ),
            (
                "783348e75aeb0f2fd7b169bb8dc16787",
                "f7c013ac5b2b8952",
                "2f42b3b70369fc92",
            ),
        ];
        for (key, pt, ct) in cases {
            let c = Rc5::new(&hex::decode(key).unwrap(), 12).unwrap();
            assert_eq!(c.encrypt_block(h8(pt)), h8(ct));
            assert_eq!(c.decrypt_block(h8(ct)), h8(pt));
        }
    }

    #[test]
    fn rejects_unsupported_rounds() {
        let k = crate::keys::SymmetricKey::from_bytes([7; 10]);
        assert_eq!(
            rc5_block(&k, 5, [0; 8], Direction::Encrypt),
            Err(LinkError::BadRounds(5))
        );
        assert_eq!(
            rc5_block(&k, 16, [0; 8], Direction::Encrypt),
            Err(LinkError::BadRounds(16))
        );
    }

    #[test]
    fn round_count_changes_output() {
        let k = crate::keys::SymmetricKey::from_bytes([7; 10]);
        let c4 = rc5_block(&k, 4, [1; 8], Direction::Encrypt).unwrap();
        let c8 = rc5_block(&k, 8, [1; 8], Direction::Encrypt).unwrap();
        assert_ne!(c4, c8);
    }
}

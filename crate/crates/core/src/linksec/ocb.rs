//! One-pass authenticated encryption (OCB) over a 64-bit block cipher,
//! with associated data folded into the tag through PMAC.
//!
//! Offsets live in GF(2^64) modulo x^64 + x^4 + x^3 + x + 1; blocks are
//! read as big-endian integers for that arithmetic.

use super::rc5::Rc5;

const REDUCTION: u64 = 0x1B;

fn double(x: u64) -> u64 {
    (x << 1) ^ if x >> 63 == 1 { REDUCTION } else { 0 }
}

fn halve(x: u64) -> u64 {
    if x & 1 == 1 {
        (x >> 1) ^ (1 << 63) ^ (REDUCTION >> 1)
    } else {
        x >> 1
    }
}

fn to_u64(b: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..b.len()].copy_from_slice(b);
    u64::from_be_bytes(buf)
}

struct Offsets {
    l: u64,
    l_inv: u64,
    powers: [u64; 64],
}

impl Offsets {
    fn new(cipher: &Rc5) -> Self {
        let l = to_u64(&cipher.encrypt_block([0; 8]));
        let mut powers = [l; 64];
        for i in 1..powers.len() {
            powers[i] = double(powers[i - 1]);
        }
        Offsets {
            l,
            l_inv: halve(l),
            powers,
        }
    }

    /// `L · x^ntz(i)`.
    fn for_index(&self, i: usize) -> u64 {
        self.powers[i.trailing_zeros() as usize]
    }
}

fn enc(cipher: &Rc5, x: u64) -> u64 {
    u64::from_be_bytes(cipher.encrypt_block(x.to_be_bytes()))
}

fn dec(cipher: &Rc5, x: u64) -> u64 {
    u64::from_be_bytes(cipher.decrypt_block(x.to_be_bytes()))
}

fn pmac(cipher: &Rc5, offsets: &Offsets, header: &[u8]) -> u64 {
    let mut blocks: Vec<&[u8]> = header.chunks(8).collect();
    if blocks.is_empty() {
        blocks.push(&[]);
    }
    let m = blocks.len();
    let (mut delta, mut sigma) = (0u64, 0u64);
    for (i, blk) in blocks[..m - 1].iter().enumerate() {
        delta ^= offsets.for_index(i + 1);
        sigma ^= enc(cipher, to_u64(blk) ^ delta);
    }
    let last = blocks[m - 1];
    if last.len() == 8 {
        enc(cipher, sigma ^ to_u64(last) ^ offsets.l_inv)
    } else {
        let mut padded = [0u8; 8];
        padded[..last.len()].copy_from_slice(last);
        padded[last.len()] = 0x80;
        enc(cipher, sigma ^ u64::from_be_bytes(padded))
    }
}

/// Shared body of encryption and decryption. Returns the output and the
/// full 64-bit tag (before truncation).
fn process(cipher: &Rc5, nonce: [u8; 8], header: &[u8], input: &[u8], decrypt: bool) -> (Vec<u8>, [u8; 8]) {
    let offsets = Offsets::new(cipher);
    let r = enc(cipher, u64::from_be_bytes(nonce) ^ offsets.l);

    let mut blocks: Vec<&[u8]> = input.chunks(8).collect();
    if blocks.is_empty() {
        blocks.push(&[]);
    }
    let m = blocks.len();

    let mut out = Vec::with_capacity(input.len());
    let mut z = offsets.l ^ r;
    let mut checksum = 0u64;
    for (idx, blk) in blocks[..m - 1].iter().enumerate() {
        let i = idx + 1;
        if i > 1 {
            z ^= offsets.for_index(i);
        }
        let x = to_u64(blk);
        let (plain, y) = if decrypt {
            let p = dec(cipher, x ^ z) ^ z;
            (p, p)
        } else {
            (x, enc(cipher, x ^ z) ^ z)
        };
        checksum ^= plain;
        out.extend_from_slice(&y.to_be_bytes());
    }
    if m > 1 {
        z ^= offsets.for_index(m);
    }

    let last = blocks[m - 1];
    let bit_len = 8 * last.len() as u64;
    let pad = enc(cipher, bit_len ^ offsets.l_inv ^ z).to_be_bytes();
    let mut final_plain = pad;
    for (k, b) in last.iter().enumerate() {
        let o = b ^ pad[k];
        out.push(o);
        final_plain[k] = if decrypt { o } else { *b };
    }
    checksum ^= u64::from_be_bytes(final_plain);

    let tag = enc(cipher, checksum ^ z) ^ pmac(cipher, &offsets, header);
    (out, tag.to_be_bytes())
}

/// Encrypts `plaintext` and authenticates it together with `header`.
pub fn seal(cipher: &Rc5, nonce: [u8; 8], header: &[u8], plaintext: &[u8]) -> (Vec<u8>, [u8; 8]) {
    process(cipher, nonce, header, plaintext, false)
}

/// Decrypts `ciphertext`, returning the plaintext and the tag it should
/// carry. The caller compares (a truncation of) the tag.
pub fn unseal(cipher: &Rc5, nonce: [u8; 8], header: &[u8], ciphertext: &[u8]) -> (Vec<u8>, [u8; 8]) {
    process(cipher, nonce, header, ciphertext, true)
}

/// Number of block-cipher invocations for one seal/unseal of `len` octets
/// with a header of `header_len` octets (when a tag is computed).
pub fn block_calls(len: usize, header_len: usize, with_tag: bool) -> u64 {
    let m = len.div_ceil(8).max(1) as u64;
    // L and R, then one per message block.
    let base = 2 + m;
    if with_tag {
        base + 1 + header_len.div_ceil(8).max(1) as u64
    } else {
        base
    }
}

//! AES-128 key expansion into 11 round keys.

use crate::error::{Error, Result};
use crate::gf256::{gf_pow, GfByte};
use crate::sbox::Table;

pub const ROUNDS: usize = 10;
pub const KEY_LEN: usize = 16;

/// Row 0 is the cipher key; rows 1..=10 are the expanded round keys.
///
/// Bytes within a row are in column-major state order: bytes 0..4 are state
/// column 0 top to bottom, and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySchedule {
    rounds: [[u8; 16]; ROUNDS + 1],
}

impl KeySchedule {
    pub fn new(key: &[u8], sbox: &Table) -> Result<Self> {
        gen_keys(key, sbox)
    }

    #[inline]
    pub fn round_key(&self, round: usize) -> &[u8; 16] {
        &self.rounds[round]
    }

    pub fn rounds(&self) -> &[[u8; 16]; ROUNDS + 1] {
        &self.rounds
    }
}

/// `x^(r-1)` for r = 1..=10.
pub fn round_constants() -> [u8; ROUNDS] {
    let mut rcon = [0u8; ROUNDS];
    for (r, c) in rcon.iter_mut().enumerate() {
        *c = gf_pow(GfByte(0x02), r as u32)
            .expect("base is nonzero")
            .value();
    }
    rcon
}

pub fn gen_keys(key: &[u8], sbox: &Table) -> Result<KeySchedule> {
    if key.len() != KEY_LEN {
        return Err(Error::KeyLength(key.len()));
    }
    let rcon = round_constants();
    let mut rounds = [[0u8; 16]; ROUNDS + 1];
    rounds[0].copy_from_slice(key);
    for r in 1..=ROUNDS {
        let prev = rounds[r - 1];
        // Last column rotated up by one, substituted, then rcon into the top byte.
        let mut temp = [prev[13], prev[14], prev[15], prev[12]];
        for b in temp.iter_mut() {
            *b = sbox[*b as usize];
        }
        temp[0] ^= rcon[r - 1];

        let next = &mut rounds[r];
        for i in 0..4 {
            next[i] = prev[i] ^ temp[i];
        }
        for i in 4..16 {
            next[i] = prev[i] ^ next[i - 4];
        }
    }
    Ok(KeySchedule { rounds })
}

//! S-box generation from field inversion and a GF(2) affine map.
//!
//! Forward: `s(v) = A * bits(v^-1) + b` with `A = circ(1,1,1,1,1,0,0,0)`,
//! `b = 0x63`. Inverse: `s^-1(v) = (A' * bits(v) + b')^-1` with
//! `A' = circ(0,1,0,1,0,0,1,0)`, `b' = 0x05`. Both tables are computed; neither
//! is stored as a literal.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gf256::{
    bits_of_byte, byte_of_bits, gf2_affine, inv_mod, BitMatrix8, GfByte, AES_POLY,
};

const FORWARD_ROW: [u8; 8] = [1, 1, 1, 1, 1, 0, 0, 0];
const FORWARD_CONST: u8 = 0x63;
const INVERSE_ROW: [u8; 8] = [0, 1, 0, 1, 0, 0, 1, 0];
const INVERSE_CONST: u8 = 0x05;

pub type Table = [u8; 256];

/// Forward S-box.
pub fn gen_sbox() -> Table {
    gen_sbox_with_poly(AES_POLY)
}

pub(crate) fn gen_sbox_with_poly(poly: u16) -> Table {
    let a = BitMatrix8::circulant(FORWARD_ROW);
    let b = bits_of_byte(GfByte(FORWARD_CONST));
    let mut table = [0u8; 256];
    for (v, out) in table.iter_mut().enumerate() {
        let w = inv_mod(v as u8, poly);
        *out = byte_of_bits(gf2_affine(&a, bits_of_byte(GfByte(w)), b)).0;
    }
    table
}

/// Inverse S-box, built independently of [`gen_sbox`].
pub fn gen_sbox_inv() -> Table {
    gen_sbox_inv_with_poly(AES_POLY)
}

pub(crate) fn gen_sbox_inv_with_poly(poly: u16) -> Table {
    let a = BitMatrix8::circulant(INVERSE_ROW);
    let b = bits_of_byte(GfByte(INVERSE_CONST));
    let mut affine = [0u8; 256];
    for (v, out) in affine.iter_mut().enumerate() {
        *out = byte_of_bits(gf2_affine(&a, bits_of_byte(GfByte(v as u8)), b)).0;
    }
    // The one input whose affine image is zero has no field inverse; it maps to 0.
    let zero_slot = affine.iter().position(|&z| z == 0);
    let mut table = [0u8; 256];
    for (v, out) in table.iter_mut().enumerate() {
        *out = if Some(v) == zero_slot {
            0
        } else {
            inv_mod(affine[v], poly)
        };
    }
    table
}

/// Forward and inverse S-boxes, cross-checked at construction.
#[derive(Clone, PartialEq, Eq)]
pub struct SBoxPair {
    pub forward: Table,
    pub inverse: Table,
}

impl SBoxPair {
    pub fn build() -> Result<Self> {
        SBoxPair::from_tables(gen_sbox(), gen_sbox_inv())
    }

    /// Fails unless `inverse[forward[i]] == i` for every `i`.
    pub fn from_tables(forward: Table, inverse: Table) -> Result<Self> {
        for i in 0..=255u8 {
            if inverse[forward[i as usize] as usize] != i {
                return Err(Error::SBoxCrossCheck { index: i });
            }
        }
        Ok(SBoxPair { forward, inverse })
    }

    /// Process-wide tables, generated on first use.
    pub fn global() -> &'static SBoxPair {
        static PAIR: OnceLock<SBoxPair> = OnceLock::new();
        PAIR.get_or_init(|| {
            SBoxPair::build().expect("S-box generation is deterministic and self-consistent")
        })
    }
}

impl std::fmt::Debug for SBoxPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SBoxPair")
            .field("forward[0..4]", &&self.forward[..4])
            .field("inverse[0..4]", &&self.inverse[..4])
            .finish()
    }
}

/// Render a 256-entry table as 16 rows of 16 lowercase hex bytes.
pub fn hex_grid(table: &Table) -> String {
    let mut out = String::with_capacity(16 * 48);
    for row in table.chunks(16) {
        let line: Vec<String> = row.iter().map(|b| format!("{b:02x}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf256::gf_inv;
    use crate::kat::FIPS197_SBOX;

    /// Brute-force inverse plus the rotate-and-XOR form of the affine map.
    fn oracle_sbox(v: u8) -> u8 {
        let mul = |mut a: u8, mut b: u8| {
            let mut r = 0u8;
            while b != 0 {
                if b & 1 != 0 {
                    r ^= a;
                }
                let hi = a & 0x80;
                a <<= 1;
                if hi != 0 {
                    a ^= 0x1B;
                }
                b >>= 1;
            }
            r
        };
        let inv = if v == 0 {
            0
        } else {
            (1..=255u8).find(|&b| mul(v, b) == 1).unwrap()
        };
        inv ^ inv.rotate_left(1) ^ inv.rotate_left(2) ^ inv.rotate_left(3) ^ inv.rotate_left(4) ^ 0x63
    }

    #[test]
    fn forward_examples() {
        let s = gen_sbox();
        assert_eq!(s[0x00], 0x63);
        assert_eq!(s[0x01], 0x7C);
        assert_eq!(s[0x53], 0xED);
        assert_eq!(oracle_sbox(0x01), 0x7C);
        assert_eq!(oracle_sbox(0x53), 0xED);
    }

    #[test]
    fn forward_matches_reference_and_oracle() {
        let s = gen_sbox();
        assert_eq!(s, FIPS197_SBOX);
        for v in 0..=255u8 {
            assert_eq!(s[v as usize], oracle_sbox(v));
        }
    }

    #[test]
    fn inverse_examples() {
        let si = gen_sbox_inv();
        assert_eq!(si[0x63], 0x00);
        assert_eq!(si[0x7C], 0x01);
        let s = gen_sbox();
        for i in 0..256 {
            assert_eq!(si[s[i] as usize] as usize, i);
        }
    }

    #[test]
    fn zero_slot_is_input_0x63() {
        // Only input 0x63 maps to zero before inversion.
        let a = BitMatrix8::circulant(INVERSE_ROW);
        let b = bits_of_byte(GfByte(INVERSE_CONST));
        let zeros: Vec<usize> = (0..=255u8)
            .filter(|&v| byte_of_bits(gf2_affine(&a, bits_of_byte(GfByte(v)), b)).0 == 0)
            .map(|v| v as usize)
            .collect();
        assert_eq!(zeros, vec![99]);
        // Pinning the slot is redundant with the gf_inv(0) = 0 convention.
        let plain: Vec<u8> = (0..=255u8)
            .map(|v| gf_inv(byte_of_bits(gf2_affine(&a, bits_of_byte(GfByte(v)), b))).0)
            .collect();
        assert_eq!(plain.as_slice(), gen_sbox_inv().as_slice());
    }

    #[test]
    fn permutation_properties() {
        let pair = SBoxPair::build().unwrap();
        let mut seen_f = [false; 256];
        let mut seen_i = [false; 256];
        for i in 0..256 {
            seen_f[pair.forward[i] as usize] = true;
            seen_i[pair.inverse[i] as usize] = true;
            assert_ne!(pair.forward[i] as usize, i);
            assert_ne!(pair.forward[i] as usize, i ^ 0xFF);
        }
        assert!(seen_f.iter().all(|&s| s));
        assert!(seen_i.iter().all(|&s| s));
        assert_eq!(pair.forward[0x00], 0x63);
        assert_eq!(pair.inverse[pair.forward[0xAB] as usize], 0xAB);
    }

    #[test]
    fn cross_check_rejects_mismatch() {
        let mut inv = gen_sbox_inv();
        inv.swap(0, 1);
        assert!(matches!(
            SBoxPair::from_tables(gen_sbox(), inv),
            Err(Error::SBoxCrossCheck { .. })
        ));
    }

    #[test]
    fn wrong_polynomial_breaks_table() {
        assert_ne!(gen_sbox_with_poly(0x11D), FIPS197_SBOX);
    }

    #[test]
    fn grid_layout() {
        let grid = hex_grid(&gen_sbox());
        assert_eq!(grid.lines().count(), 16);
        assert!(grid.starts_with("63 7c 77 7b f2"));
    }
}

//! Embedded known-answer suite, run before any benchmark and by `gaes selftest`.
//!
//! The S-box check runs first: a broken field layer shows up there before it
//! can produce confusing cipher mismatches further down.

use crate::aes_cbc::{
    decrypt_batch, decrypt_block_scalar, encrypt_batch, encrypt_block_scalar, pad_zero, IvSet, MixMatrices,
};
use crate::gf256::{gf_add, gf_matmul, gf_mul, gf_inv, GfByte, GfMatrix, AES_POLY};
use crate::key_schedule::{gen_keys, round_constants};
use crate::kat::*;
use crate::sbox::{gen_sbox_inv_with_poly, gen_sbox_with_poly, SBoxPair};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, outcome: Result<(), String>) -> Self {
        match outcome {
            Ok(()) => Check {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed {
            write!(f, "PASS  {}", self.name)
        } else {
            write!(f, "FAIL  {}: {}", self.name, self.detail)
        }
    }
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

pub fn run() -> Vec<Check> {
    run_with_poly(AES_POLY)
}

/// The table checks regenerate the S-boxes under `poly`; everything else uses
/// the real field. Only tests pass anything but [`AES_POLY`].
pub(crate) fn run_with_poly(poly: u16) -> Vec<Check> {
    let forward = gen_sbox_with_poly(poly);
    let inverse = gen_sbox_inv_with_poly(poly);
    vec![
        Check::new("sbox-matches-fips197", check_sbox(&forward)),
        Check::new(
            "sbox-inverse-permutation",
            SBoxPair::from_tables(forward, inverse).map(|_| ()).map_err(|e| e.to_string()),
        ),
        Check::new("gf-worked-examples", check_gf_examples()),
        Check::new("gf-inverse-exhaustive", check_gf_inverse()),
        Check::new("mix-matrices-inverse", check_mix()),
        Check::new("round-constants", check_rcon()),
        Check::new("key-expansion-fips197", check_key_expansion()),
        Check::new("block-fips197-c1", check_block()),
        Check::new("cbc-sp800-38a-encrypt", check_cbc_encrypt()),
        Check::new("cbc-sp800-38a-decrypt", check_cbc_decrypt()),
    ]
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub(crate) fn check_sbox(table: &[u8; 256]) -> Result<(), String> {
    match (0..256).find(|&i| table[i] != FIPS197_SBOX[i]) {
        None => Ok(()),
        Some(i) => Err(format!(
            "entry {i:#04x} is {:#04x}, reference {:#04x}",
            table[i], FIPS197_SBOX[i]
        )),
    }
}

fn check_gf_examples() -> Result<(), String> {
    expect_eq("1 + 3", gf_add(GfByte(1), GfByte(3)), GfByte(2))?;
    expect_eq("x^7 * x^5", gf_mul(GfByte(0x80), GfByte(0x20)), GfByte(0xAB))
}

fn check_gf_inverse() -> Result<(), String> {
    match (1..=255u8).find(|&a| gf_mul(GfByte(a), gf_inv(GfByte(a))) != GfByte::ONE) {
        None => Ok(()),
        Some(a) => Err(format!("{a:#04x} * inv({a:#04x}) != 1")),
    }
}

fn check_mix() -> Result<(), String> {
    let mix = MixMatrices::global();
    let product = gf_matmul(&mix.forward, &mix.inverse).map_err(|e| e.to_string())?;
    expect_eq("forward * inverse", product, GfMatrix::identity(4))
}

fn check_rcon() -> Result<(), String> {
    expect_eq(
        "rcon",
        round_constants(),
        [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36],
    )
}

fn check_key_expansion() -> Result<(), String> {
    let ks = gen_keys(&FIPS197_A1_KEY, &SBoxPair::global().forward).map_err(|e| e.to_string())?;
    expect_eq("round key 1", *ks.round_key(1), FIPS197_A1_ROUND1)?;
    expect_eq("round key 10", *ks.round_key(10), FIPS197_A1_ROUND10)
}

fn check_block() -> Result<(), String> {
    let pair = SBoxPair::global();
    let ks = gen_keys(&FIPS197_C1_KEY, &pair.forward).map_err(|e| e.to_string())?;
    let ct = encrypt_block_scalar(&ks, pair, &FIPS197_C1_PLAINTEXT).map_err(|e| e.to_string())?;
    expect_eq("scalar encrypt", ct, FIPS197_C1_CIPHERTEXT)?;
    let pt = decrypt_block_scalar(&ks, pair, &ct).map_err(|e| e.to_string())?;
    expect_eq("scalar decrypt", pt, FIPS197_C1_PLAINTEXT)?;
    let batch = pad_zero(&[FIPS197_C1_PLAINTEXT]).map_err(|e| e.to_string())?;
    let ct = encrypt_batch(&FIPS197_C1_KEY, &IvSet::Shared([0; 16]), &batch).map_err(|e| e.to_string())?;
    expect_eq("batch encrypt", ct.as_slice(), &FIPS197_C1_CIPHERTEXT[..])
}

fn check_cbc_encrypt() -> Result<(), String> {
    let batch = pad_zero(&[SP800_38A_CBC_PLAINTEXT]).map_err(|e| e.to_string())?;
    let ct = encrypt_batch(&SP800_38A_CBC_KEY, &IvSet::Shared(SP800_38A_CBC_IV), &batch)
        .map_err(|e| e.to_string())?;
    expect_eq("ciphertext", ct.as_slice(), &SP800_38A_CBC_CIPHERTEXT[..])
}

fn check_cbc_decrypt() -> Result<(), String> {
    let pt = decrypt_batch(
        &SP800_38A_CBC_KEY,
        &IvSet::Shared(SP800_38A_CBC_IV),
        &SP800_38A_CBC_CIPHERTEXT,
        SP800_38A_CBC_CIPHERTEXT.len(),
    )
    .map_err(|e| e.to_string())?;
    expect_eq("plaintext", pt.as_slice(), &SP800_38A_CBC_PLAINTEXT[..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let checks = run();
        assert!(checks.len() >= 6);
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(all_passed(&checks));
    }

    #[test]
    fn sabotaged_polynomial_fails_sbox_first() {
        // x^8 + x^4 + x^3 + x^2 + 1, the Reed-Solomon polynomial.
        let checks = run_with_poly(0x11D);
        let first_fail = checks.iter().find(|c| !c.passed).expect("something must fail");
        assert_eq!(first_fail.name, "sbox-matches-fips197");
        assert!(!all_passed(&checks));
    }

    #[test]
    fn names_are_unique() {
        let checks = run();
        let mut names: Vec<_> = checks.iter().map(|c| c.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), checks.len());
    }
}

//! Arithmetic in GF(2^8) under the AES reduction polynomial.
//!
//! A byte is read as a polynomial over GF(2): bit `i` is the coefficient of
//! `x^i`. Addition is XOR. Multiplication is a carry-less shift-and-XOR with
//! the reduction folded into every step, so the product never leaves 8 bits.
//!
//! The module also carries the small amount of GF(2) bit-vector algebra the
//! S-box affine transform needs ([`BitVec8`], [`BitMatrix8`]) and dense
//! matrices over the field ([`GfMatrix`]) for MixColumns.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// x^8 + x^4 + x^3 + x + 1. The only modulus this crate knows about.
pub const AES_POLY: u16 = 0x11B;

/// The AES reduction polynomial as a value. There is exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionPolynomial(());

impl ReductionPolynomial {
    pub const AES: ReductionPolynomial = ReductionPolynomial(());

    pub const fn bits(self) -> u16 {
        AES_POLY
    }
}

/// One element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct GfByte(pub u8);

impl GfByte {
    pub const ZERO: GfByte = GfByte(0);
    pub const ONE: GfByte = GfByte(1);

    pub const fn value(self) -> u8 {
        self.0
    }

    pub fn pow(self, e: u32) -> Result<GfByte> {
        gf_pow(self, e)
    }

    pub fn inv(self) -> GfByte {
        gf_inv(self)
    }
}

impl fmt::Debug for GfByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GfByte({:#04x})", self.0)
    }
}

impl fmt::Display for GfByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}", self.0)
    }
}

impl From<u8> for GfByte {
    fn from(v: u8) -> Self {
        GfByte(v)
    }
}

impl From<GfByte> for u8 {
    fn from(v: GfByte) -> Self {
        v.0
    }
}

impl Add for GfByte {
    type Output = GfByte;
    fn add(self, rhs: GfByte) -> GfByte {
        gf_add(self, rhs)
    }
}

impl AddAssign for GfByte {
    fn add_assign(&mut self, rhs: GfByte) {
        *self = gf_add(*self, rhs);
    }
}

impl Mul for GfByte {
    type Output = GfByte;
    fn mul(self, rhs: GfByte) -> GfByte {
        gf_mul(self, rhs)
    }
}

impl MulAssign for GfByte {
    fn mul_assign(&mut self, rhs: GfByte) {
        *self = gf_mul(*self, rhs);
    }
}

#[inline]
pub fn gf_add(a: GfByte, b: GfByte) -> GfByte {
    GfByte(a.0 ^ b.0)
}

#[inline]
pub fn gf_mul(a: GfByte, b: GfByte) -> GfByte {
    GfByte(mul_mod(a.0, b.0, AES_POLY))
}

/// Shift-and-XOR multiply with interleaved reduction by `poly`.
///
/// Only [`gf_mul`] calls this with anything but tests; the modulus parameter
/// exists so the self-test can demonstrate that a wrong polynomial is caught.
pub(crate) const fn mul_mod(a: u8, b: u8, poly: u16) -> u8 {
    let reduce = (poly & 0xFF) as u8;
    let mut a = a;
    let mut b = b;
    let mut acc = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80;
        a <<= 1;
        if carry != 0 {
            a ^= reduce;
        }
        b >>= 1;
    }
    acc
}

/// `a^e` by square-and-multiply. `0^0` is rejected.
pub fn gf_pow(a: GfByte, e: u32) -> Result<GfByte> {
    if a.0 == 0 && e == 0 {
        return Err(Error::ZeroToZeroPower);
    }
    Ok(pow_unchecked(a.0, e, AES_POLY).into())
}

pub(crate) const fn pow_unchecked(a: u8, e: u32, poly: u16) -> u8 {
    let mut base = a;
    let mut e = e;
    let mut acc = 1u8;
    while e != 0 {
        if e & 1 != 0 {
            acc = mul_mod(acc, base, poly);
        }
        base = mul_mod(base, base, poly);
        e >>= 1;
    }
    acc
}

/// Multiplicative inverse, with `gf_inv(0) = 0`.
///
/// The multiplicative group has order 255, so `a^254 = a^-1` for nonzero `a`;
/// for zero the same power is zero, which is the convention the S-box needs.
pub fn gf_inv(a: GfByte) -> GfByte {
    GfByte(inv_mod(a.0, AES_POLY))
}

pub(crate) const fn inv_mod(a: u8, poly: u16) -> u8 {
    pow_unchecked(a, 254, poly)
}

/// Full 256x256 multiplication table, generated from [`gf_mul`].
pub struct ProductTable {
    rows: Box<[[u8; 256]; 256]>,
}

impl ProductTable {
    fn generate() -> Self {
        let mut rows = Box::new([[0u8; 256]; 256]);
        for (a, row) in rows.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = gf_mul(GfByte(a as u8), GfByte(b as u8)).0;
            }
        }
        ProductTable { rows }
    }

    /// The shared, lazily built table.
    pub fn global() -> &'static ProductTable {
        static TABLE: OnceLock<ProductTable> = OnceLock::new();
        TABLE.get_or_init(ProductTable::generate)
    }

    /// All products `a * x` for `x` in 0..=255.
    #[inline]
    pub fn row(&self, a: u8) -> &[u8; 256] {
        &self.rows[a as usize]
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.rows[a as usize][b as usize]
    }
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    data: Vec<GfByte>,
}

impl GfMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<GfByte>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::MatrixShape {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(GfMatrix { rows, cols, data })
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        GfMatrix::new(rows, cols, bytes.iter().copied().map(GfByte).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        GfMatrix {
            rows,
            cols,
            data: vec![GfByte::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = GfMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, GfByte::ONE);
        }
        m
    }

    /// Square circulant matrix: row 0 is `first_row`, row `r` is row 0
    /// cyclically shifted right by `r`.
    pub fn circulant(first_row: &[u8]) -> Self {
        let n = first_row.len();
        let mut m = GfMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, GfByte(first_row[(c + n - r) % n]));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[GfByte] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> GfByte {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: GfByte) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[GfByte] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, rhs: &GfMatrix) -> Result<GfMatrix> {
        gf_matmul(self, rhs)
    }
}

impl fmt::Debug for GfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GfMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  {}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

pub fn gf_matmul(a: &GfMatrix, b: &GfMatrix) -> Result<GfMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut out = GfMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if aik == GfByte::ZERO {
                continue;
            }
            for j in 0..b.cols {
                let cur = out.get(i, j);
                out.set(i, j, cur + aik * b.get(k, j));
            }
        }
    }
    Ok(out)
}

/// Eight bits, MSB first: index 0 is the coefficient of x^7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitVec8(pub [bool; 8]);

impl BitVec8 {
    pub fn from_bits(bits: [u8; 8]) -> Self {
        BitVec8(bits.map(|b| b != 0))
    }
}

pub fn bits_of_byte(a: GfByte) -> BitVec8 {
    let mut bits = [false; 8];
    for (i, bit) in bits.iter_mut().enumerate() {
        *bit = (a.0 >> (7 - i)) & 1 == 1;
    }
    BitVec8(bits)
}

pub fn byte_of_bits(v: BitVec8) -> GfByte {
    GfByte(v.0.iter().fold(0u8, |acc, &bit| (acc << 1) | bit as u8))
}

/// 8x8 matrix over GF(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitMatrix8(pub [[bool; 8]; 8]);

impl BitMatrix8 {
    pub fn identity() -> Self {
        let mut m = [[false; 8]; 8];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = true;
        }
        BitMatrix8(m)
    }

    /// Row `r` is `first_row` cyclically shifted right by `r`.
    pub fn circulant(first_row: [u8; 8]) -> Self {
        let mut m = [[false; 8]; 8];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = first_row[(c + 8 - r) % 8] != 0;
            }
        }
        BitMatrix8(m)
    }
}

/// `z = A*y + b` over GF(2).
pub fn gf2_affine(a: &BitMatrix8, y: BitVec8, b: BitVec8) -> BitVec8 {
    let mut z = [false; 8];
    for (i, zi) in z.iter_mut().enumerate() {
        let dot = a.0[i]
            .iter()
            .zip(y.0.iter())
            .fold(false, |acc, (&aij, &yj)| acc ^ (aij & yj));
        *zi = dot ^ b.0[i];
    }
    BitVec8(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Schoolbook carry-less product into 16 bits, then long division.
    fn oracle_mul(a: u8, b: u8) -> u8 {
        let mut wide = 0u16;
        for i in 0..8 {
            if (b >> i) & 1 == 1 {
                wide ^= (a as u16) << i;
            }
        }
        for deg in (8..16).rev() {
            if (wide >> deg) & 1 == 1 {
                wide ^= AES_POLY << (deg - 8);
            }
        }
        wide as u8
    }

    fn oracle_inv(a: u8) -> u8 {
        (1..=255u8).find(|&b| oracle_mul(a, b) == 1).unwrap()
    }

    fn g(v: u8) -> GfByte {
        GfByte(v)
    }

    #[test]
    fn add_examples() {
        assert_eq!(gf_add(g(0x01), g(0x03)), g(0x02));
        for a in 0..=255u8 {
            assert_eq!(gf_add(g(a), g(0)), g(a));
            assert_eq!(gf_add(g(a), g(a)), g(0));
        }
    }

    #[test]
    fn mul_examples() {
        // x^7 * x^5 = x^12 -> x^7 + x^5 + x^3 + x + 1
        assert_eq!(gf_mul(g(0x80), g(0x20)), g(0b1010_1011));
        assert_eq!(oracle_mul(0x53, 0xCA), 0x01);
        assert_eq!(gf_mul(g(0x53), g(0xCA)), g(0x01));
        for a in 0..=255u8 {
            assert_eq!(gf_mul(g(a), g(1)), g(a));
        }
    }

    #[test]
    fn mul_matches_oracle_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(gf_mul(g(a), g(b)).0, oracle_mul(a, b), "{a:#x} * {b:#x}");
            }
        }
    }

    #[test]
    fn pow_examples() {
        assert_eq!(gf_pow(g(2), 0).unwrap(), g(1));
        let fold = |e: u32| (0..e).fold(1u8, |acc, _| oracle_mul(acc, 2));
        assert_eq!(fold(8), 0x1B);
        assert_eq!(fold(9), 0x36);
        assert_eq!(gf_pow(g(2), 8).unwrap(), g(0x1B));
        assert_eq!(gf_pow(g(2), 9).unwrap(), g(0x36));
        let seq: Vec<u8> = (0..10).map(|e| gf_pow(g(2), e).unwrap().0).collect();
        assert_eq!(seq, [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]);
        assert_eq!(gf_pow(g(0), 0), Err(Error::ZeroToZeroPower));
        assert_eq!(gf_pow(g(0), 5).unwrap(), g(0));
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        for a in [0x00u8, 0x01, 0x02, 0x03, 0x53, 0xFF] {
            let mut acc = 1u8;
            for e in 0..600u32 {
                if !(a == 0 && e == 0) {
                    assert_eq!(gf_pow(g(a), e).unwrap().0, acc, "{a:#x}^{e}");
                }
                acc = oracle_mul(acc, a);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(gf_inv(g(0x01)), g(0x01));
        assert_eq!(gf_inv(g(0x00)), g(0x00));
        assert_eq!(oracle_inv(0x53), 0xCA);
        assert_eq!(gf_inv(g(0x53)), g(0xCA));
    }

    #[test]
    fn inverse_exhaustive() {
        for a in 1..=255u8 {
            assert_eq!(gf_mul(g(a), gf_inv(g(a))), GfByte::ONE);
            assert_eq!(gf_inv(g(a)).0, oracle_inv(a));
        }
    }

    #[test]
    fn commutativity_table() {
        for a in 0..=255u8 {
            for b in a..=255u8 {
                assert_eq!(gf_mul(g(a), g(b)), gf_mul(g(b), g(a)));
            }
        }
    }

    #[test]
    fn product_table_agrees_with_ground_truth() {
        let t = ProductTable::global();
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(t.mul(a, b), gf_mul(g(a), g(b)).0);
            }
        }
    }

    #[test]
    fn reduction_polynomial_is_fixed() {
        assert_eq!(ReductionPolynomial::AES.bits(), 0x11B);
    }

    proptest! {
        #[test]
        fn distributive(a: u8, b: u8, c: u8) {
            prop_assert_eq!(g(a) * (g(b) + g(c)), g(a) * g(b) + g(a) * g(c));
        }

        #[test]
        fn associative(a: u8, b: u8, c: u8) {
            prop_assert_eq!((g(a) * g(b)) * g(c), g(a) * (g(b) * g(c)));
            prop_assert_eq!((g(a) + g(b)) + g(c), g(a) + (g(b) + g(c)));
        }

        #[test]
        fn matmul_matches_naive(
            (rows, inner, cols, a, b) in (1usize..6, 1usize..6, 1usize..6).prop_flat_map(|(r, k, c)| {
                (Just(r), Just(k), Just(c),
                 proptest::collection::vec(any::<u8>(), r * k),
                 proptest::collection::vec(any::<u8>(), k * c))
            })
        ) {
            let ma = GfMatrix::from_bytes(rows, inner, &a).unwrap();
            let mb = GfMatrix::from_bytes(inner, cols, &b).unwrap();
            let prod = gf_matmul(&ma, &mb).unwrap();
            for i in 0..rows {
                for j in 0..cols {
                    let mut acc = 0u8;
                    for k in 0..inner {
                        acc ^= oracle_mul(a[i * inner + k], b[k * cols + j]);
                    }
                    prop_assert_eq!(prod.get(i, j).0, acc);
                }
            }
        }
    }

    #[test]
    fn matmul_identity_and_scalar() {
        let b = GfMatrix::from_bytes(4, 3, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]).unwrap();
        assert_eq!(gf_matmul(&GfMatrix::identity(4), &b).unwrap(), b);
        let one = gf_matmul(
            &GfMatrix::from_bytes(1, 1, &[0x57]).unwrap(),
            &GfMatrix::from_bytes(1, 1, &[0x83]).unwrap(),
        )
        .unwrap();
        assert_eq!(one.get(0, 0), gf_mul(g(0x57), g(0x83)));
        assert_eq!(one.get(0, 0), g(0xC1));
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = GfMatrix::zeros(2, 3);
        let b = GfMatrix::zeros(2, 3);
        assert!(matches!(gf_matmul(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(GfMatrix::from_bytes(2, 2, &[1, 2, 3]).is_err());
    }

    #[test]
    fn mix_circulants_are_mutual_inverses() {
        // Evaluate each entry independently with the oracle multiply.
        let fwd = [2u8, 3, 1, 1];
        let inv = [14u8, 11, 13, 9];
        let circ = |row: &[u8; 4], r: usize, c: usize| row[(c + 4 - r) % 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0u8;
                for k in 0..4 {
                    acc ^= oracle_mul(circ(&fwd, i, k), circ(&inv, k, j));
                }
                assert_eq!(acc, (i == j) as u8);
            }
        }
        let p = gf_matmul(&GfMatrix::circulant(&fwd), &GfMatrix::circulant(&inv)).unwrap();
        assert_eq!(p, GfMatrix::identity(4));
    }

    #[test]
    fn circulant_orientation() {
        let m = GfMatrix::circulant(&[2, 3, 1, 1]);
        assert_eq!(
            m.data().iter().map(|v| v.0).collect::<Vec<_>>(),
            [2, 3, 1, 1, 1, 2, 3, 1, 1, 1, 2, 3, 3, 1, 1, 2]
        );
        let b = BitMatrix8::circulant([1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(b.0[1], [false, true, true, true, true, true, false, false]);
        assert_eq!(b.0[7], [true, true, true, true, false, false, false, true]);
    }

    #[test]
    fn bit_conversions() {
        assert_eq!(bits_of_byte(g(0x80)), BitVec8::from_bits([1, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(bits_of_byte(g(0x63)), BitVec8::from_bits([0, 1, 1, 0, 0, 0, 1, 1]));
        for a in 0..=255u8 {
            assert_eq!(byte_of_bits(bits_of_byte(g(a))), g(a));
        }
    }

    #[test]
    fn affine_examples() {
        let y = bits_of_byte(g(0xA7));
        assert_eq!(gf2_affine(&BitMatrix8::identity(), y, BitVec8::default()), y);
        let b = bits_of_byte(g(0x63));
        let a = BitMatrix8::circulant([1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(gf2_affine(&a, bits_of_byte(g(0)), b), b);
        assert_eq!(gf2_affine(&BitMatrix8::circulant([1, 0, 1, 1, 0, 0, 1, 0]), BitVec8::default(), b), b);
    }
}

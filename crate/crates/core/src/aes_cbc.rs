//! AES-128-CBC over batches of messages.
//!
//! A batch is an `N x M` byte grid, one zero-padded message per row. The
//! cipher walks the grid one 16-byte block column at a time; the current
//! block of every message lives in a [`StateSlab`] (`N x 16`) and each round
//! step is applied to the whole slab at once. After a block is finished the
//! slab holds that block's ciphertext for every row, which is exactly the
//! CBC chaining value for the next block column.
//!
//! A state row stores the AES state column-major: byte `4c + r` is cell
//! `(r, c)`.
//!
//! The scalar functions ([`encrypt_block_scalar`] and friends) are a textbook
//! per-block implementation with a 4x4 state and ground-truth field
//! multiplication. They share nothing with the slab path except the key
//! schedule and S-box tables, and serve as both reference and baseline.
//!
//! CBC provides no integrity: decrypting with the wrong key yields garbage
//! without error. A shared IV across messages lets identical plaintext
//! prefixes produce identical ciphertext prefixes; prefer per-message IVs.

use std::ops::Range;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gf256::{gf_mul, GfByte, GfMatrix, ProductTable};
use crate::key_schedule::{gen_keys, KeySchedule, ROUNDS};
use crate::sbox::{SBoxPair, Table};

pub const BLOCK_LEN: usize = 16;

/// Rows pushed through all rounds together; keeps the slab cache resident.
const TILE_ROWS: usize = 256;

/// `out[i] = in[SHIFT_ROWS[i]]`.
pub const SHIFT_ROWS: [usize; 16] = [0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11];
/// `out[i] = in[INV_SHIFT_ROWS[i]]`.
pub const INV_SHIFT_ROWS: [usize; 16] = [0, 13, 10, 7, 4, 1, 14, 11, 8, 5, 2, 15, 12, 9, 6, 3];

/// Zero-padded messages sharing one padded width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageBatch {
    n_messages: usize,
    padded_len: usize,
    data: Vec<u8>,
    original_lens: Vec<usize>,
}

impl MessageBatch {
    /// Wraps an already padded grid, checking every batch invariant.
    pub fn from_padded(data: Vec<u8>, padded_len: usize, original_lens: Vec<usize>) -> Result<Self> {
        let n = original_lens.len();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        if padded_len == 0 || !padded_len.is_multiple_of(BLOCK_LEN) {
            return Err(Error::MalformedBatch(format!(
                "padded length {padded_len} is not a positive multiple of 16"
            )));
        }
        if data.len() != n * padded_len {
            return Err(Error::MalformedBatch(format!(
                "grid has {} bytes, expected {n} x {padded_len}",
                data.len()
            )));
        }
        for (i, (&len, row)) in original_lens.iter().zip(data.chunks(padded_len)).enumerate() {
            if len > padded_len {
                return Err(Error::MalformedBatch(format!(
                    "message {i} length {len} exceeds padded length {padded_len}"
                )));
            }
            if row[len..].iter().any(|&b| b != 0) {
                return Err(Error::MalformedBatch(format!("message {i} has nonzero padding")));
            }
        }
        Ok(MessageBatch {
            n_messages: n,
            padded_len,
            data,
            original_lens,
        })
    }

    pub fn n_messages(&self) -> usize {
        self.n_messages
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn original_lens(&self) -> &[usize] {
        &self.original_lens
    }

    /// Padded row `i`.
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.padded_len..(i + 1) * self.padded_len]
    }

    /// Row `i` truncated to its original length.
    pub fn message(&self, i: usize) -> &[u8] {
        &self.row(i)[..self.original_lens[i]]
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }
}

/// Zero-pads every message to `16 * ceil(max_len / 16)`.
pub fn pad_zero<T: AsRef<[u8]>>(messages: &[T]) -> Result<MessageBatch> {
    if messages.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(index) = messages.iter().position(|m| m.as_ref().is_empty()) {
        return Err(Error::EmptyMessage { index });
    }
    let max_len = messages.iter().map(|m| m.as_ref().len()).max().unwrap_or(0);
    let padded_len = max_len.div_ceil(BLOCK_LEN) * BLOCK_LEN;
    let mut data = vec![0u8; messages.len() * padded_len];
    let mut lens = Vec::with_capacity(messages.len());
    for (row, m) in data.chunks_mut(padded_len).zip(messages) {
        let m = m.as_ref();
        row[..m.len()].copy_from_slice(m);
        lens.push(m.len());
    }
    Ok(MessageBatch {
        n_messages: messages.len(),
        padded_len,
        data,
        original_lens: lens,
    })
}

/// One IV broadcast to every message, or one IV per message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IvSet {
    Shared([u8; 16]),
    PerMessage(Vec<[u8; 16]>),
}

impl IvSet {
    #[inline]
    pub fn row(&self, i: usize) -> &[u8; 16] {
        match self {
            IvSet::Shared(iv) => iv,
            IvSet::PerMessage(ivs) => &ivs[i],
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, IvSet::Shared(_))
    }

    /// Materialize `n` rows.
    pub fn expand(&self, n: usize) -> Vec<[u8; 16]> {
        (0..n).map(|i| *self.row(i)).collect()
    }

    /// Rows `range` of this set, keeping shared sets shared.
    pub fn slice(&self, range: Range<usize>) -> IvSet {
        match self {
            IvSet::Shared(iv) => IvSet::Shared(*iv),
            IvSet::PerMessage(ivs) => IvSet::PerMessage(ivs[range].to_vec()),
        }
    }

    pub fn check(&self, n_messages: usize) -> Result<()> {
        match self {
            IvSet::Shared(_) => Ok(()),
            IvSet::PerMessage(ivs) if ivs.len() == n_messages => Ok(()),
            IvSet::PerMessage(ivs) => Err(Error::IvCountMismatch {
                expected: n_messages,
                got: ivs.len(),
            }),
        }
    }
}

/// The current 16-byte state of every message in a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSlab {
    data: Vec<u8>,
}

impl StateSlab {
    pub fn zeros(rows: usize) -> Self {
        StateSlab {
            data: vec![0u8; rows * BLOCK_LEN],
        }
    }

    pub fn from_bytes(data: Vec<u8>) -> Result<Self> {
        if !data.len().is_multiple_of(BLOCK_LEN) {
            return Err(Error::BlockLength(data.len() % BLOCK_LEN));
        }
        Ok(StateSlab { data })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / BLOCK_LEN
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * BLOCK_LEN..(i + 1) * BLOCK_LEN]
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    fn resize(&mut self, rows: usize) {
        self.data.resize(rows * BLOCK_LEN, 0);
    }

    #[inline]
    fn rows_mut(&mut self) -> impl Iterator<Item = &mut [u8; 16]> {
        self.data
            .chunks_exact_mut(BLOCK_LEN)
            .map(|c| <&mut [u8; 16]>::try_from(c).expect("exact chunk"))
    }
}

/// The forward and inverse MixColumns matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixMatrices {
    pub forward: GfMatrix,
    pub inverse: GfMatrix,
}

impl MixMatrices {
    pub fn aes() -> Self {
        MixMatrices {
            forward: GfMatrix::circulant(&[0x02, 0x03, 0x01, 0x01]),
            inverse: GfMatrix::circulant(&[0x0e, 0x0b, 0x0d, 0x09]),
        }
    }

    pub fn global() -> &'static MixMatrices {
        static MIX: OnceLock<MixMatrices> = OnceLock::new();
        MIX.get_or_init(MixMatrices::aes)
    }
}

/// A 4x4 field matrix resolved to product-table rows, for slab-wide use.
#[derive(Clone, Copy)]
pub struct MixKernel {
    rows: [[&'static [u8; 256]; 4]; 4],
}

impl MixKernel {
    pub fn new(m: &GfMatrix) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::DimensionMismatch {
                left_rows: m.rows(),
                left_cols: m.cols(),
                right_rows: 4,
                right_cols: 1,
            });
        }
        let table = ProductTable::global();
        let mut rows = [[table.row(0); 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = table.row(m.get(i, j).value());
            }
        }
        Ok(MixKernel { rows })
    }

    #[inline]
    fn apply(&self, state: &mut [u8; 16]) {
        let k = &self.rows;
        for col in state.chunks_exact_mut(4) {
            let (a0, a1, a2, a3) = (col[0] as usize, col[1] as usize, col[2] as usize, col[3] as usize);
            let mut out = [0u8; 4];
            for (i, o) in out.iter_mut().enumerate() {
                *o = k[i][0][a0] ^ k[i][1][a1] ^ k[i][2][a2] ^ k[i][3][a3];
            }
            col.copy_from_slice(&out);
        }
    }
}

pub fn sub_bytes(slab: &mut StateSlab, table: &Table) {
    for b in slab.data.iter_mut() {
        *b = table[*b as usize];
    }
}

#[inline]
fn permute(state: &mut [u8; 16], src: &[usize; 16]) {
    let old = *state;
    for (dst, &s) in state.iter_mut().zip(src) {
        *dst = old[s];
    }
}

pub fn shift_rows(slab: &mut StateSlab) {
    for row in slab.rows_mut() {
        permute(row, &SHIFT_ROWS);
    }
}

pub fn inv_shift_rows(slab: &mut StateSlab) {
    for row in slab.rows_mut() {
        permute(row, &INV_SHIFT_ROWS);
    }
}

/// Replace each 4-byte column group of every row by `m * column`.
///
/// Panics if `m` is not 4x4.
pub fn mix_columns(slab: &mut StateSlab, m: &GfMatrix) {
    let kernel = MixKernel::new(m).expect("mix matrix must be 4x4");
    mix_columns_with(slab, &kernel);
}

pub fn mix_columns_with(slab: &mut StateSlab, kernel: &MixKernel) {
    for row in slab.rows_mut() {
        kernel.apply(row);
    }
}

pub fn add_round_key(slab: &mut StateSlab, round_key: &[u8; 16]) {
    for row in slab.rows_mut() {
        for (b, k) in row.iter_mut().zip(round_key) {
            *b ^= k;
        }
    }
}

/// SubBytes, ShiftRows, optional MixColumns and AddRoundKey in one pass over the slab.
fn forward_round(slab: &mut StateSlab, sbox: &Table, mix: Option<&MixKernel>, round_key: &[u8; 16]) {
    for row in slab.rows_mut() {
        let old = *row;
        for (dst, &s) in row.iter_mut().zip(&SHIFT_ROWS) {
            *dst = sbox[old[s] as usize];
        }
        if let Some(kernel) = mix {
            kernel.apply(row);
        }
        for (b, k) in row.iter_mut().zip(round_key) {
            *b ^= k;
        }
    }
}

/// AddRoundKey, optional inverse MixColumns, InvShiftRows and InvSubBytes in one pass.
fn inverse_round(slab: &mut StateSlab, inv_sbox: &Table, mix: Option<&MixKernel>, round_key: &[u8; 16]) {
    for row in slab.rows_mut() {
        for (b, k) in row.iter_mut().zip(round_key) {
            *b ^= k;
        }
        if let Some(kernel) = mix {
            kernel.apply(row);
        }
        let old = *row;
        for (dst, &s) in row.iter_mut().zip(&INV_SHIFT_ROWS) {
            *dst = inv_sbox[old[s] as usize];
        }
    }
}

/// AES-128-CBC bound to one key.
pub struct Aes128Cbc {
    schedule: KeySchedule,
    sboxes: &'static SBoxPair,
    forward_mix: MixKernel,
    inverse_mix: MixKernel,
}

impl Aes128Cbc {
    pub fn new(key: &[u8]) -> Result<Self> {
        let sboxes = SBoxPair::global();
        let mix = MixMatrices::global();
        Ok(Aes128Cbc {
            schedule: gen_keys(key, &sboxes.forward)?,
            sboxes,
            forward_mix: MixKernel::new(&mix.forward)?,
            inverse_mix: MixKernel::new(&mix.inverse)?,
        })
    }

    pub fn schedule(&self) -> &KeySchedule {
        &self.schedule
    }

    pub fn sboxes(&self) -> &'static SBoxPair {
        self.sboxes
    }

    pub fn encrypt_batch(&self, ivs: &IvSet, batch: &MessageBatch) -> Result<Vec<u8>> {
        ivs.check(batch.n_messages())?;
        let mut out = vec![0u8; batch.data().len()];
        self.encrypt_rows(ivs, 0, batch.data(), &mut out, batch.padded_len());
        Ok(out)
    }

    /// Decrypts an `N x padded_len` ciphertext grid back to the padded plaintext grid.
    pub fn decrypt_batch(&self, ivs: &IvSet, ct: &[u8], padded_len: usize) -> Result<Vec<u8>> {
        let n = check_grid(ct, padded_len)?;
        ivs.check(n)?;
        let mut out = vec![0u8; ct.len()];
        self.decrypt_rows(ivs, 0, ct, &mut out, padded_len);
        Ok(out)
    }

    /// Encrypts whole rows. `first_row` indexes into `ivs`.
    pub(crate) fn encrypt_rows(&self, ivs: &IvSet, first_row: usize, pt: &[u8], out: &mut [u8], m: usize) {
        let n = pt.len() / m;
        let blocks = m / BLOCK_LEN;
        let ks = &self.schedule;
        let mut slab = StateSlab::zeros(TILE_ROWS.min(n));
        let mut tile_start = 0;
        while tile_start < n {
            let rows = TILE_ROWS.min(n - tile_start);
            slab.resize(rows);
            for (i, row) in slab.rows_mut().enumerate() {
                *row = *ivs.row(first_row + tile_start + i);
            }
            for b in 0..blocks {
                // Chain (previous ciphertext or IV) + plaintext + round key 0.
                let col = b * BLOCK_LEN;
                for (i, row) in slab.rows_mut().enumerate() {
                    let p = &pt[(tile_start + i) * m + col..][..BLOCK_LEN];
                    for j in 0..BLOCK_LEN {
                        row[j] ^= p[j] ^ ks.round_key(0)[j];
                    }
                }
                for r in 1..=ROUNDS {
                    let mix = (r < ROUNDS).then_some(&self.forward_mix);
                    forward_round(&mut slab, &self.sboxes.forward, mix, ks.round_key(r));
                }
                for (i, row) in slab.rows_mut().enumerate() {
                    out[(tile_start + i) * m + col..][..BLOCK_LEN].copy_from_slice(row);
                }
            }
            tile_start += rows;
        }
    }

    pub(crate) fn decrypt_rows(&self, ivs: &IvSet, first_row: usize, ct: &[u8], out: &mut [u8], m: usize) {
        let n = ct.len() / m;
        let blocks = m / BLOCK_LEN;
        let ks = &self.schedule;
        let mut slab = StateSlab::zeros(TILE_ROWS.min(n));
        let mut tile_start = 0;
        while tile_start < n {
            let rows = TILE_ROWS.min(n - tile_start);
            slab.resize(rows);
            for b in 0..blocks {
                let col = b * BLOCK_LEN;
                for (i, row) in slab.rows_mut().enumerate() {
                    row.copy_from_slice(&ct[(tile_start + i) * m + col..][..BLOCK_LEN]);
                }
                for r in (1..=ROUNDS).rev() {
                    let mix = (r < ROUNDS).then_some(&self.inverse_mix);
                    inverse_round(&mut slab, &self.sboxes.inverse, mix, ks.round_key(r));
                }
                add_round_key(&mut slab, ks.round_key(0));
                for (i, row) in slab.rows_mut().enumerate() {
                    let msg = tile_start + i;
                    let chain: &[u8] = if b == 0 {
                        ivs.row(first_row + msg)
                    } else {
                        &ct[msg * m + col - BLOCK_LEN..][..BLOCK_LEN]
                    };
                    let dst = &mut out[msg * m + col..][..BLOCK_LEN];
                    for j in 0..BLOCK_LEN {
                        dst[j] = row[j] ^ chain[j];
                    }
                }
            }
            tile_start += rows;
        }
    }
}

/// Number of rows in an `N x padded_len` grid.
pub(crate) fn check_grid(ct: &[u8], padded_len: usize) -> Result<usize> {
    if padded_len == 0 || !padded_len.is_multiple_of(BLOCK_LEN) || ct.is_empty() || !ct.len().is_multiple_of(padded_len) {
        return Err(Error::CiphertextLength(ct.len()));
    }
    Ok(ct.len() / padded_len)
}

pub fn encrypt_batch(key: &[u8], ivs: &IvSet, batch: &MessageBatch) -> Result<Vec<u8>> {
    Aes128Cbc::new(key)?.encrypt_batch(ivs, batch)
}

pub fn decrypt_batch(key: &[u8], ivs: &IvSet, ct: &[u8], padded_len: usize) -> Result<Vec<u8>> {
    Aes128Cbc::new(key)?.decrypt_batch(ivs, ct, padded_len)
}

type State = [[GfByte; 4]; 4];

fn load_state(block: &[u8]) -> State {
    let mut s = [[GfByte::ZERO; 4]; 4];
    for c in 0..4 {
        for r in 0..4 {
            s[r][c] = GfByte(block[4 * c + r]);
        }
    }
    s
}

fn store_state(s: &State) -> [u8; 16] {
    let mut out = [0u8; 16];
    for c in 0..4 {
        for r in 0..4 {
            out[4 * c + r] = s[r][c].value();
        }
    }
    out
}

fn scalar_add_round_key(s: &mut State, key: &[u8; 16]) {
    for c in 0..4 {
        for r in 0..4 {
            s[r][c] += GfByte(key[4 * c + r]);
        }
    }
}

fn scalar_sub_bytes(s: &mut State, table: &Table) {
    for cell in s.iter_mut().flatten() {
        *cell = GfByte(table[cell.value() as usize]);
    }
}

/// Row `r` rotated left by `r` (or right, for the inverse).
fn scalar_shift_rows(s: &mut State, inverse: bool) {
    for (r, row) in s.iter_mut().enumerate() {
        if inverse {
            row.rotate_right(r);
        } else {
            row.rotate_left(r);
        }
    }
}

fn scalar_mix_columns(s: &mut State, m: &GfMatrix) {
    for c in 0..4 {
        let col = [s[0][c], s[1][c], s[2][c], s[3][c]];
        for (r, row) in s.iter_mut().enumerate() {
            row[c] = (0..4).fold(GfByte::ZERO, |acc, k| acc + gf_mul(m.get(r, k), col[k]));
        }
    }
}

fn block_array(block: &[u8]) -> Result<&[u8; 16]> {
    block.try_into().map_err(|_| Error::BlockLength(block.len()))
}

/// One AES-128 block, computed per byte with ground-truth field arithmetic.
pub fn encrypt_block_scalar(ks: &KeySchedule, sboxes: &SBoxPair, block: &[u8]) -> Result<[u8; 16]> {
    let block = block_array(block)?;
    let mix = &MixMatrices::global().forward;
    let mut s = load_state(block);
    scalar_add_round_key(&mut s, ks.round_key(0));
    for r in 1..=ROUNDS {
        scalar_sub_bytes(&mut s, &sboxes.forward);
        scalar_shift_rows(&mut s, false);
        if r < ROUNDS {
            scalar_mix_columns(&mut s, mix);
        }
        scalar_add_round_key(&mut s, ks.round_key(r));
    }
    Ok(store_state(&s))
}

pub fn decrypt_block_scalar(ks: &KeySchedule, sboxes: &SBoxPair, block: &[u8]) -> Result<[u8; 16]> {
    let block = block_array(block)?;
    let mix = &MixMatrices::global().inverse;
    let mut s = load_state(block);
    for r in (1..=ROUNDS).rev() {
        scalar_add_round_key(&mut s, ks.round_key(r));
        if r < ROUNDS {
            scalar_mix_columns(&mut s, mix);
        }
        scalar_shift_rows(&mut s, true);
        scalar_sub_bytes(&mut s, &sboxes.inverse);
    }
    scalar_add_round_key(&mut s, ks.round_key(0));
    Ok(store_state(&s))
}

/// CBC over one padded message, block by block.
pub fn encrypt_cbc_scalar(ks: &KeySchedule, sboxes: &SBoxPair, iv: &[u8; 16], padded: &[u8]) -> Result<Vec<u8>> {
    if !padded.len().is_multiple_of(BLOCK_LEN) {
        return Err(Error::BlockLength(padded.len()));
    }
    let mut out = Vec::with_capacity(padded.len());
    let mut chain = *iv;
    for block in padded.chunks_exact(BLOCK_LEN) {
        let mut x = [0u8; 16];
        for j in 0..BLOCK_LEN {
            x[j] = block[j] ^ chain[j];
        }
        chain = encrypt_block_scalar(ks, sboxes, &x)?;
        out.extend_from_slice(&chain);
    }
    Ok(out)
}

pub fn decrypt_cbc_scalar(ks: &KeySchedule, sboxes: &SBoxPair, iv: &[u8; 16], ct: &[u8]) -> Result<Vec<u8>> {
    if !ct.len().is_multiple_of(BLOCK_LEN) {
        return Err(Error::BlockLength(ct.len()));
    }
    let mut out = Vec::with_capacity(ct.len());
    let mut chain = *iv;
    for block in ct.chunks_exact(BLOCK_LEN) {
        let x = decrypt_block_scalar(ks, sboxes, block)?;
        out.extend(x.iter().zip(chain.iter()).map(|(a, b)| a ^ b));
        chain.copy_from_slice(block);
    }
    Ok(out)
}

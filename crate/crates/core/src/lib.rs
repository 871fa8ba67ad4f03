//! AES-128-CBC built from GF(2^8) arithmetic, vectorized over batches of
//! short messages.
//!
//! The S-boxes are generated from field inversion and an affine map, the key
//! schedule from field powers, and MixColumns is a 4x4 matrix product over the
//! field. Encryption runs over an `N x M` grid of zero-padded messages, one
//! 16-byte block column at a time for all messages together, and can be split
//! across threads by message.
//!
//! Not hardened against side channels: table lookups are data dependent.

pub mod aes_cbc;
pub mod bench;
pub mod cli;
pub mod container;
pub mod error;
pub mod gf256;
pub mod kat;
pub mod key_schedule;
pub mod parallel;
pub mod sbox;
pub mod selftest;

pub use aes_cbc::{decrypt_batch, encrypt_batch, pad_zero, Aes128Cbc, IvSet, MessageBatch};
pub use container::{CipherContainer, ContainerError};
pub use error::{Error, Result};
pub use gf256::GfByte;
pub use key_schedule::KeySchedule;
pub use parallel::{decrypt_batch_parallel, encrypt_batch_parallel};
pub use sbox::SBoxPair;

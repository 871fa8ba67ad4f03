//! The `GAES` ciphertext container.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "GAES"
//! 4       1         version (0x01)
//! 5       1         mode (0x01 = CBC)
//! 6       1         iv mode (0x00 shared, 0x01 per message)
//! 7       1         reserved (0x00)
//! 8       4         message count N, big-endian
//! 12      4         padded length M, big-endian
//! 16      16 | 16N  IV block
//! ..      4N        original lengths, big-endian
//! ..      N*M       ciphertext, row-major
//! ```
//!
//! Padding is always zero-fill; the lengths table is what makes it reversible.

use thiserror::Error;

use crate::aes_cbc::{IvSet, BLOCK_LEN};

pub const MAGIC: [u8; 4] = *b"GAES";
pub const VERSION: u8 = 0x01;
pub const MODE_CBC: u8 = 0x01;
pub const IV_SHARED: u8 = 0x00;
pub const IV_PER_MESSAGE: u8 = 0x01;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainerError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unsupported mode {0:#04x}")]
    UnsupportedMode(u8),
    #[error("unknown IV mode {0:#04x}")]
    BadIvMode(u8),
    #[error("reserved byte is {0:#04x}, expected 0x00")]
    BadReserved(u8),
    #[error("truncated container: need {needed} bytes, have {got}")]
    Truncated { needed: u64, got: u64 },
    #[error("container size {got} does not match expected {expected}")]
    SizeMismatch { expected: u64, got: u64 },
    #[error("padded length {0} is not a multiple of 16")]
    BadPaddedLen(u64),
    #[error("message {index} length {len} exceeds padded length {padded_len}")]
    LengthExceedsPadded { index: usize, len: u64, padded_len: u64 },
    #[error("{got} IVs for {expected} messages")]
    IvCount { expected: usize, got: usize },
    #[error("payload has {got} bytes, expected {expected}")]
    PayloadSize { expected: u64, got: u64 },
    #[error("field does not fit in 32 bits: {0}")]
    TooLarge(u64),
}

type Result<T> = std::result::Result<T, ContainerError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherContainer {
    ivs: IvSet,
    padded_len: usize,
    lengths: Vec<usize>,
    payload: Vec<u8>,
}

/// Exact container size for the given shape.
pub fn expected_size(n: u64, padded_len: u64, per_message_iv: bool) -> u64 {
    let iv_block = if per_message_iv { 16 * n } else { 16 };
    HEADER_LEN as u64 + iv_block + 4 * n + n * padded_len
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| ContainerError::TooLarge(v as u64))
}

impl CipherContainer {
    pub fn new(ivs: IvSet, padded_len: usize, lengths: Vec<usize>, payload: Vec<u8>) -> Result<Self> {
        let n = lengths.len();
        to_u32(n)?;
        to_u32(padded_len)?;
        if !padded_len.is_multiple_of(BLOCK_LEN) {
            return Err(ContainerError::BadPaddedLen(padded_len as u64));
        }
        if let IvSet::PerMessage(v) = &ivs {
            if v.len() != n {
                return Err(ContainerError::IvCount { expected: n, got: v.len() });
            }
        }
        for (index, &len) in lengths.iter().enumerate() {
            if len > padded_len {
                return Err(ContainerError::LengthExceedsPadded {
                    index,
                    len: len as u64,
                    padded_len: padded_len as u64,
                });
            }
        }
        let expected = n as u64 * padded_len as u64;
        if payload.len() as u64 != expected {
            return Err(ContainerError::PayloadSize {
                expected,
                got: payload.len() as u64,
            });
        }
        Ok(CipherContainer {
            ivs,
            padded_len,
            lengths,
            payload,
        })
    }

    pub fn ivs(&self) -> &IvSet {
        &self.ivs
    }

    pub fn n_messages(&self) -> usize {
        self.lengths.len()
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn encoded_len(&self) -> u64 {
        expected_size(self.n_messages() as u64, self.padded_len as u64, !self.ivs.is_shared())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len() as usize);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(MODE_CBC);
        out.push(if self.ivs.is_shared() { IV_SHARED } else { IV_PER_MESSAGE });
        out.push(0x00);
        // Both fit: checked in `new`.
        out.extend_from_slice(&(self.n_messages() as u32).to_be_bytes());
        out.extend_from_slice(&(self.padded_len as u32).to_be_bytes());
        match &self.ivs {
            IvSet::Shared(iv) => out.extend_from_slice(iv),
            IvSet::PerMessage(ivs) => ivs.iter().for_each(|iv| out.extend_from_slice(iv)),
        }
        for &len in &self.lengths {
            out.extend_from_slice(&(len as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let got = bytes.len() as u64;
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(ContainerError::Truncated {
                needed: HEADER_LEN as u64,
                got,
            });
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::UnsupportedVersion(bytes[4]));
        }
        if bytes[5] != MODE_CBC {
            return Err(ContainerError::UnsupportedMode(bytes[5]));
        }
        let per_message = match bytes[6] {
            IV_SHARED => false,
            IV_PER_MESSAGE => true,
            other => return Err(ContainerError::BadIvMode(other)),
        };
        if bytes[7] != 0 {
            return Err(ContainerError::BadReserved(bytes[7]));
        }
        let be32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let n = be32(8) as u64;
        let padded_len = be32(12) as u64;
        if !padded_len.is_multiple_of(BLOCK_LEN as u64) {
            return Err(ContainerError::BadPaddedLen(padded_len));
        }
        let expected = expected_size(n, padded_len, per_message);
        if got < expected {
            return Err(ContainerError::Truncated { needed: expected, got });
        }
        if got > expected {
            return Err(ContainerError::SizeMismatch { expected, got });
        }

        let n = n as usize;
        let mut at = HEADER_LEN;
        let take16 = |at: &mut usize| {
            let iv: [u8; 16] = bytes[*at..*at + 16].try_into().expect("16 bytes");
            *at += 16;
            iv
        };
        let ivs = if per_message {
            IvSet::PerMessage((0..n).map(|_| take16(&mut at)).collect())
        } else {
            IvSet::Shared(take16(&mut at))
        };
        let mut lengths = Vec::with_capacity(n);
        for _ in 0..n {
            lengths.push(be32(at) as usize);
            at += 4;
        }
        CipherContainer::new(ivs, padded_len as usize, lengths, bytes[at..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(per_message: bool) -> CipherContainer {
        let ivs = if per_message {
            IvSet::PerMessage(vec![[0xA1; 16], [0xB2; 16]])
        } else {
            IvSet::Shared([0x11; 16])
        };
        CipherContainer::new(ivs, 16, vec![5, 16], (0..32).collect()).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = sample(false).to_bytes();
        assert_eq!(&bytes[..16], b"GAES\x01\x01\x00\x00\x00\x00\x00\x02\x00\x00\x00\x10");
        assert_eq!(&bytes[16..32], &[0x11; 16]);
        assert_eq!(&bytes[32..40], &[0, 0, 0, 5, 0, 0, 0, 16]);
        assert_eq!(bytes.len() as u64, expected_size(2, 16, false));
        assert_eq!(bytes.len(), 16 + 16 + 8 + 32);

        let bytes = sample(true).to_bytes();
        assert_eq!(bytes[6], IV_PER_MESSAGE);
        assert_eq!(bytes.len(), 16 + 32 + 8 + 32);
    }

    #[test]
    fn rejects_corruption() {
        let good = sample(false).to_bytes();
        let mut b = good.clone();
        b[0] = b'X';
        assert_eq!(CipherContainer::from_bytes(&b), Err(ContainerError::BadMagic));
        assert_eq!(ContainerError::BadMagic.to_string(), "bad magic");
        let mut b = good.clone();
        b[4] = 2;
        assert_eq!(CipherContainer::from_bytes(&b), Err(ContainerError::UnsupportedVersion(2)));
        let mut b = good.clone();
        b[5] = 2;
        assert_eq!(CipherContainer::from_bytes(&b), Err(ContainerError::UnsupportedMode(2)));
        let mut b = good.clone();
        b[6] = 7;
        assert_eq!(CipherContainer::from_bytes(&b), Err(ContainerError::BadIvMode(7)));
        assert!(matches!(
            CipherContainer::from_bytes(&good[..good.len() - 1]),
            Err(ContainerError::Truncated { .. })
        ));
        assert!(matches!(CipherContainer::from_bytes(&good[..10]), Err(ContainerError::Truncated { .. })));
        let mut b = good.clone();
        b.push(0);
        assert!(matches!(CipherContainer::from_bytes(&b), Err(ContainerError::SizeMismatch { .. })));
        let mut b = good.clone();
        b[35] = 17; // first length
        assert!(matches!(
            CipherContainer::from_bytes(&b),
            Err(ContainerError::LengthExceedsPadded { index: 0, .. })
        ));
        let mut b = good;
        b[15] = 0x11;
        assert!(matches!(CipherContainer::from_bytes(&b), Err(ContainerError::BadPaddedLen(0x11))));
    }

    #[test]
    fn constructor_checks() {
        assert!(CipherContainer::new(IvSet::Shared([0; 16]), 15, vec![1], vec![0; 15]).is_err());
        assert!(CipherContainer::new(IvSet::PerMessage(vec![]), 16, vec![1], vec![0; 16]).is_err());
        assert!(CipherContainer::new(IvSet::Shared([0; 16]), 16, vec![1], vec![0; 17]).is_err());
    }

    fn arb_container() -> impl Strategy<Value = CipherContainer> {
        (1usize..12, 1usize..5, any::<bool>()).prop_flat_map(|(n, blocks, per)| {
            let m = blocks * 16;
            (
                proptest::collection::vec(0..=m, n),
                proptest::collection::vec(any::<u8>(), n * m),
                proptest::collection::vec(any::<[u8; 16]>(), if per { n } else { 1 }),
            )
                .prop_map(move |(lengths, payload, ivs)| {
                    let ivs = if per { IvSet::PerMessage(ivs) } else { IvSet::Shared(ivs[0]) };
                    CipherContainer::new(ivs, m, lengths, payload).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn write_read_identity(c in arb_container()) {
            let bytes = c.to_bytes();
            prop_assert_eq!(bytes.len() as u64, c.encoded_len());
            prop_assert_eq!(CipherContainer::from_bytes(&bytes).unwrap(), c);
        }
    }
}

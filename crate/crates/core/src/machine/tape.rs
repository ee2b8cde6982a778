//! `.z1p` punched-tape images: the magic `Z1P1` then one byte per row.

use thiserror::Error;

use super::Instruction;

pub const MAGIC: &[u8; 4] = b"Z1P1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TapeError {
    #[error("missing Z1P1 header")]
    BadMagic,
    #[error("illegal instruction byte {byte:#010b} at tape position {position}")]
    Illegal { byte: u8, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tape {
    rows: Vec<u8>,
}

impl Tape {
    pub fn new(rows: Vec<u8>) -> Self {
        Tape { rows }
    }

    pub fn from_instructions(prog: &[Instruction]) -> Self {
        Tape { rows: prog.iter().map(|i| i.encode()).collect() }
    }

    pub fn rows(&self) -> &[u8] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_z1p(bytes: &[u8]) -> Result<Self, TapeError> {
        match bytes.strip_prefix(MAGIC) {
            Some(rows) => Ok(Tape { rows: rows.to_vec() }),
            None => Err(TapeError::BadMagic),
        }
    }

    pub fn to_z1p(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&self.rows);
        out
    }

    pub fn decode_all(&self) -> Result<Vec<Instruction>, TapeError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(position, &byte)| Instruction::decode(byte).ok_or(TapeError::Illegal { byte, position }))
            .collect()
    }
}

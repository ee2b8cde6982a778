//! Mechanical word memory: three 8-bit banks, each 8 layers of 8 words.
//!
//! Bank 10a holds the sign and exponent of a word, banks 10b and 10c the high
//! and low bytes of the fraction. Reading is destructive: the sensing step
//! leaves the cell cleared and the restore step puts the pins back.

use std::fmt::Write as _;

use thiserror::Error;

use crate::numerics::Word24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("address {addr} outside memory of {capacity} words")]
    AddressRange { addr: u8, capacity: usize },
    #[error("memory file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    /// The 1938 machine.
    Original = 16,
    /// The Berlin reconstruction.
    Reconstruction = 64,
}

impl Capacity {
    pub fn words(self) -> usize {
        self as usize
    }

    pub fn from_words(n: usize) -> Option<Self> {
        match n {
            16 => Some(Capacity::Original),
            64 => Some(Capacity::Reconstruction),
            _ => None,
        }
    }
}

/// Points inside a read cycle at which the read hook is called.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadStep {
    /// Pins pushed through and sensed; the cell is cleared.
    Sensed,
    /// Pins moved back; the cell holds its word again.
    Restored,
}

const EXP_BANK: usize = 0;
const HI_BANK: usize = 1;
const LO_BANK: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryUnit {
    /// `banks[bank][layer][word]`
    banks: [[[u8; 8]; 8]; 3],
    capacity: Capacity,
}

/// High three address bits pick the layer, low three the word.
pub fn decode_address(addr: u8, capacity: Capacity) -> Result<(usize, usize), MemoryError> {
    if addr as usize >= capacity.words() {
        return Err(MemoryError::AddressRange {
            addr,
            capacity: capacity.words(),
        });
    }
    Ok(((addr >> 3) as usize & 7, addr as usize & 7))
}

impl MemoryUnit {
    pub fn new(capacity: Capacity) -> Self {
        MemoryUnit {
            banks: [[[0; 8]; 8]; 3],
            capacity,
        }
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    pub fn read(&mut self, addr: u8) -> Result<Word24, MemoryError> {
        self.read_observed(addr, |_, _| {})
    }

    /// Reads `addr`, calling `hook` with a view of the memory after the
    /// sensing step and after the restore step.
    pub fn read_observed(
        &mut self,
        addr: u8,
        mut hook: impl FnMut(ReadStep, &MemoryUnit),
    ) -> Result<Word24, MemoryError> {
        let (layer, word) = decode_address(addr, self.capacity)?;
        let mut sensed = [0u8; 3];
        for (bank, byte) in sensed.iter_mut().enumerate() {
            *byte = std::mem::take(&mut self.banks[bank][layer][word]);
        }
        hook(ReadStep::Sensed, self);
        for (bank, byte) in sensed.iter().enumerate() {
            self.banks[bank][layer][word] = *byte;
        }
        hook(ReadStep::Restored, self);
        Ok(assemble(sensed))
    }

    pub fn write(&mut self, addr: u8, w: Word24) -> Result<(), MemoryError> {
        let (layer, word) = decode_address(addr, self.capacity)?;
        let bytes = split(w);
        for (bank, byte) in bytes.iter().enumerate() {
            self.banks[bank][layer][word] = *byte;
        }
        Ok(())
    }

    /// Non-destructive view of a cell for dumps and snapshots.
    pub fn peek(&self, addr: u8) -> Result<Word24, MemoryError> {
        let (layer, word) = decode_address(addr, self.capacity)?;
        Ok(assemble([
            self.banks[EXP_BANK][layer][word],
            self.banks[HI_BANK][layer][word],
            self.banks[LO_BANK][layer][word],
        ]))
    }

    /// Raw byte of one bank cell.
    pub fn bank_byte(&self, bank: usize, layer: usize, word: usize) -> u8 {
        self.banks[bank][layer][word]
    }

    /// One line per word: `aa: s eeeeeee ffffffffffffffff`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for addr in 0..self.capacity.words() as u8 {
            let _ = writeln!(s, "{addr:02}: {}", self.peek(addr).expect("in range"));
        }
        s
    }

    /// Loads a dump. Lines may be omitted; blank lines and `#` comments are
    /// skipped.
    pub fn load_dump(&mut self, text: &str) -> Result<(), MemoryError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| MemoryError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (addr, rest) = line.split_once(':').ok_or_else(|| err("missing ':'"))?;
            let addr: u8 = addr.trim().parse().map_err(|_| err("bad address"))?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0].len() != 1 || fields[1].len() != 7 || fields[2].len() != 16 {
                return Err(err("expected `s eeeeeee ffffffffffffffff`"));
            }
            let bin = |f: &str| u32::from_str_radix(f, 2).map_err(|_| err("non-binary digit"));
            let bits = (bin(fields[0])? << 23) | (bin(fields[1])? << 16) | bin(fields[2])?;
            self.write(addr, Word24::from_bits(bits)).map_err(|e| err(&e.to_string()))?;
        }
        Ok(())
    }
}

fn split(w: Word24) -> [u8; 3] {
    let bits = w.to_bits();
    [(bits >> 16) as u8, (bits >> 8) as u8, bits as u8]
}

fn assemble(b: [u8; 3]) -> Word24 {
    Word24::from_bits(((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_examples() {
        let c = Capacity::Reconstruction;
        assert_eq!(decode_address(0, c).unwrap(), (0, 0));
        assert_eq!(decode_address(63, c).unwrap(), (7, 7));
        assert_eq!(decode_address(9, c).unwrap(), (1, 1));
        assert!(decode_address(64, c).is_err());
        assert!(decode_address(16, Capacity::Original).is_err());
    }

    #[test]
    fn decode_is_bijective() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..64 {
            assert!(seen.insert(decode_address(a, Capacity::Reconstruction).unwrap()));
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn fresh_cell_reads_all_zero_word() {
        let mut m = MemoryUnit::new(Capacity::Reconstruction);
        assert_eq!(m.read(17).unwrap(), Word24::from_bits(0));
    }

    #[test]
    fn overwrite_and_independence() {
        let mut m = MemoryUnit::new(Capacity::Reconstruction);
        let w1 = Word24::pack(false, 3, 1).unwrap();
        let w2 = Word24::pack(true, -7, 0xabcd).unwrap();
        m.write(5, w1).unwrap();
        m.write(5, w2).unwrap();
        assert_eq!(m.read(5).unwrap(), w2);
        assert_eq!(m.read(5).unwrap(), w2);
        assert_eq!(m.read(6).unwrap(), Word24::from_bits(0));
    }

    #[test]
    fn sixteen_word_mode_rejects_high_addresses() {
        let mut m = MemoryUnit::new(Capacity::Original);
        assert_eq!(
            m.write(16, Word24::default()),
            Err(MemoryError::AddressRange { addr: 16, capacity: 16 })
        );
        assert!(m.read(15).is_ok());
    }

    #[test]
    fn bank_split() {
        let mut m = MemoryUnit::new(Capacity::Reconstruction);
        let w = Word24::pack(true, -1, 0x1234).unwrap();
        m.write(9, w).unwrap();
        assert_eq!(m.bank_byte(EXP_BANK, 1, 1), 0x80 | 0x7f);
        assert_eq!(m.bank_byte(HI_BANK, 1, 1), 0x12);
        assert_eq!(m.bank_byte(LO_BANK, 1, 1), 0x34);
    }

    #[test]
    fn destructive_read_is_restored() {
        let mut m = MemoryUnit::new(Capacity::Reconstruction);
        let w = Word24::pack(false, 2, 0xffff).unwrap();
        m.write(42, w).unwrap();
        let mut steps = Vec::new();
        let got = m
            .read_observed(42, |step, mem| steps.push((step, mem.peek(42).unwrap())))
            .unwrap();
        assert_eq!(got, w);
        assert_eq!(steps, vec![(ReadStep::Sensed, Word24::from_bits(0)), (ReadStep::Restored, w)]);
    }

    #[test]
    fn dump_round_trip() {
        let mut m = MemoryUnit::new(Capacity::Original);
        m.write(3, Word24::pack(true, -64, 0x8001).unwrap()).unwrap();
        let text = m.dump();
        assert!(text.contains("03: 1 1000000 1000000000000001"));
        let mut n = MemoryUnit::new(Capacity::Original);
        n.load_dump(&text).unwrap();
        assert_eq!(m, n);
        assert!(n.load_dump("2: 1 10 11").is_err());
    }

    proptest! {
        #[test]
        fn store_load_identity(addr in 0u8..64, bits in 0u32..(1 << 24)) {
            let mut m = MemoryUnit::new(Capacity::Reconstruction);
            let w = Word24::from_bits(bits);
            m.write(addr, w).unwrap();
            prop_assert_eq!(m.read(addr).unwrap(), w);
        }
    }
}

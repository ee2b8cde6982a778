//! Z1 number formats.
//!
//! Memory holds [`Word24`]: a sign bit, a 7-bit two's-complement exponent and
//! the 16 fraction bits of a normalized mantissa whose leading 1 is never
//! stored. Inside the processor the mantissa lives in a [`ProcMantissa`], a
//! 23-bit two's-complement register covering binary positions +2 down to -20.
//!
//! There is no zero: every bit pattern denotes a nonzero number.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub const EXP_MIN: i32 = -64;
pub const EXP_MAX: i32 = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("exponent {0} outside the 7-bit range -64..=63")]
    ExponentRange(i32),
    #[error("zero mantissa has no normalized representation")]
    ZeroUnsupported,
}

/// A 24-bit memory word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Word24 {
    sign: bool,
    exponent: i8,
    fraction: u16,
}

impl Word24 {
    pub fn pack(sign: bool, exponent: i32, fraction: u16) -> Result<Self, NumericsError> {
        if !(EXP_MIN..=EXP_MAX).contains(&exponent) {
            return Err(NumericsError::ExponentRange(exponent));
        }
        Ok(Word24 {
            sign,
            exponent: exponent as i8,
            fraction,
        })
    }

    pub fn unpack(self) -> (bool, i32, u16) {
        (self.sign, self.exponent as i32, self.fraction)
    }

    pub fn sign(self) -> bool {
        self.sign
    }

    pub fn exponent(self) -> i32 {
        self.exponent as i32
    }

    pub fn fraction(self) -> u16 {
        self.fraction
    }

    /// Raw layout: bit 23 sign, bits 22..16 exponent, bits 15..0 fraction.
    pub fn to_bits(self) -> u32 {
        ((self.sign as u32) << 23) | (((self.exponent as u8 as u32) & 0x7f) << 16) | self.fraction as u32
    }

    pub fn from_bits(bits: u32) -> Self {
        let raw_exp = ((bits >> 16) & 0x7f) as i32;
        let exponent = if raw_exp >= 64 { raw_exp - 128 } else { raw_exp };
        Word24 {
            sign: bits & (1 << 23) != 0,
            exponent: exponent as i8,
            fraction: (bits & 0xffff) as u16,
        }
    }

    /// Exact value `(-1)^sign * (2^16 + fraction) / 2^16 * 2^exponent`.
    pub fn value(self) -> ExactValue {
        let mant = BigRational::new(BigInt::from(0x1_0000u32 + self.fraction as u32), BigInt::from(0x1_0000u32));
        let v = mant * pow2(self.exponent as i32);
        ExactValue(if self.sign { -v } else { v })
    }
}

impl fmt::Display for Word24 {
    /// Binary groups: `sign exponent fraction`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:07b} {:016b}",
            self.sign as u8,
            self.exponent as u8 & 0x7f,
            self.fraction
        )
    }
}

pub fn value_of(w: Word24) -> ExactValue {
    w.value()
}

fn pow2(e: i32) -> BigRational {
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(num_traits::pow(two, e as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(two, (-e) as usize))
    }
}

/// An exact rational number, used as the reference valuation for oracles.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactValue(pub BigRational);

impl ExactValue {
    pub fn from_integer(n: i64) -> Self {
        ExactValue(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        ExactValue(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn pow2(e: i32) -> Self {
        ExactValue(pow2(e))
    }

    pub fn abs(&self) -> Self {
        ExactValue(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Processor mantissa register, positions +2..=-20.
///
/// Stored as the 23-bit two's-complement pattern in the low bits of a `u32`;
/// bit index `i` holds binary position `i - 20`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ProcMantissa(u32);

impl ProcMantissa {
    pub const WIDTH: u32 = 23;
    pub const TOP: i32 = 2;
    pub const BOTTOM: i32 = -20;
    pub const MASK: u32 = (1 << Self::WIDTH) - 1;
    /// Raw pattern of 1.0.
    pub const ONE: u32 = 1 << 20;

    pub const ZERO: ProcMantissa = ProcMantissa(0);

    pub fn from_raw(raw: u32) -> Self {
        ProcMantissa(raw & Self::MASK)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    /// Signed value in units of 2^-20.
    pub fn scaled(self) -> i32 {
        ((self.0 << 9) as i32) >> 9
    }

    pub fn from_scaled(v: i32) -> Self {
        ProcMantissa::from_raw(v as u32)
    }

    /// Materializes the hidden 1: `1.fraction` with the fraction at -1..=-16.
    pub fn from_fraction(fraction: u16) -> Self {
        ProcMantissa(Self::ONE | ((fraction as u32) << 4))
    }

    /// Fraction bits -1..=-16, dropping the hidden bit and everything below -16.
    pub fn fraction(self) -> u16 {
        ((self.0 >> 4) & 0xffff) as u16
    }

    pub fn bit(self, pos: i32) -> bool {
        debug_assert!((Self::BOTTOM..=Self::TOP).contains(&pos));
        (self.0 >> (pos - Self::BOTTOM)) & 1 == 1
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.bit(Self::TOP)
    }

    pub fn is_normalized(self) -> bool {
        self.bit(0) && !self.bit(1) && !self.bit(2)
    }

    /// Arithmetic right shift; bits below -20 are dropped.
    pub fn shr(self, n: u32) -> Self {
        ProcMantissa::from_scaled(self.scaled() >> n)
    }

    /// Left shift within the register; the flag reports bits lost past +2.
    pub fn shl(self, n: u32) -> (Self, bool) {
        let wide = (self.scaled() as i64) << n;
        let out = ProcMantissa::from_scaled(wide as i32);
        (out, out.scaled() as i64 != wide)
    }

    pub fn exact(self) -> ExactValue {
        ExactValue(BigRational::new(BigInt::from(self.scaled()), BigInt::from(1u32 << 20)))
    }
}

impl fmt::Display for ProcMantissa {
    /// `ss.ffff...` with the two guard positions, the units bit, and twenty
    /// fraction positions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{:023b}", self.0);
        write!(f, "{}.{}", &s[..3], &s[3..])
    }
}

/// Shifts `m` until bit 0 is the leading one, adjusting `e` by the shift count.
pub fn normalize(m: ProcMantissa, e: i32) -> Result<(ProcMantissa, i32), NumericsError> {
    if m.is_zero() {
        return Err(NumericsError::ZeroUnsupported);
    }
    let (mut m, mut e) = (m, e);
    while m.bit(1) || m.bit(2) {
        m = m.shr(1);
        e += 1;
    }
    while !m.bit(0) {
        m = m.shl(1).0;
        e -= 1;
    }
    Ok((m, e))
}

//! The one-cycle adder with anticipated carries, shared by the exponent and
//! mantissa units, plus the fixed output transforms of the mantissa ALU.

use thiserror::Error;

use crate::numerics::ProcMantissa;

pub const EXPONENT_WIDTH: u32 = 7;
pub const MANTISSA_WIDTH: u32 = ProcMantissa::WIDTH;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AluError {
    #[error("operand widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("left shift pushed bits past position +2")]
    ShiftOverflow,
}

/// A fixed-width bit vector; bit `i` is the `i`-th lowest position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVector {
    width: u32,
    bits: u64,
}

impl BitVector {
    pub fn new(width: u32, bits: u64) -> Self {
        assert!((1..=64).contains(&width), "width {width} out of range");
        BitVector { width, bits: bits & mask(width) }
    }

    pub fn zero(width: u32) -> Self {
        BitVector::new(width, 0)
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn bit(self, i: u32) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// Two's-complement reading of the pattern.
    pub fn signed(self) -> i64 {
        let shift = 64 - self.width;
        ((self.bits << shift) as i64) >> shift
    }
}

impl std::fmt::Display for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:0w$b}", self.bits, w = self.width as usize)
    }
}

fn mask(width: u32) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderTrace {
    pub xor_bits: BitVector,
    pub and_bits: BitVector,
    /// `carry_bits` bit i is the carry arriving at position i.
    pub carry_bits: BitVector,
    pub sum: BitVector,
    pub carry_out: bool,
}

/// Adds two vectors the way the Z1 does: XOR and AND first, then every
/// AND-generated carry rides left along the run of XOR ones above it, then a
/// final XOR.
///
/// `carry_in` enters at position 0 like an extra generated carry.
pub fn add_anticipating(a: BitVector, b: BitVector, carry_in: bool) -> Result<AdderTrace, AluError> {
    if a.width != b.width {
        return Err(AluError::WidthMismatch(a.width, b.width));
    }
    let w = a.width;
    let xor = a.bits ^ b.bits;
    let and = a.bits & b.bits;

    // Carries land one position above each generator and keep travelling
    // while the partial sum there is 1. Position `w` is the carry out.
    let mut carries: u128 = 0;
    let launch = |from: u32, carries: &mut u128| {
        let mut k = from;
        loop {
            *carries |= 1u128 << k;
            if k >= w || (xor >> k) & 1 == 0 {
                break;
            }
            k += 1;
        }
    };
    if carry_in {
        launch(0, &mut carries);
    }
    for j in 0..w {
        if (and >> j) & 1 == 1 {
            launch(j + 1, &mut carries);
        }
    }
    let carry_bits = (carries as u64) & mask(w);
    let carry_out = (carries >> w) & 1 == 1;
    Ok(AdderTrace {
        xor_bits: BitVector::new(w, xor),
        and_bits: BitVector::new(w, and),
        carry_bits: BitVector::new(w, carry_bits),
        sum: BitVector::new(w, xor ^ carry_bits),
        carry_out,
    })
}

/// 7-bit two's-complement exponent addition; the flag reports a true sum
/// outside -64..=63.
pub fn add_exponent(a: i32, b: i32) -> (i32, bool) {
    add_exponent_with_carry(a, b, false)
}

pub(crate) fn add_exponent_with_carry(a: i32, b: i32, carry_in: bool) -> (i32, bool) {
    let av = BitVector::new(EXPONENT_WIDTH, a as u64);
    let bv = BitVector::new(EXPONENT_WIDTH, b as u64);
    let t = add_anticipating(av, bv, carry_in).expect("same width");
    let wrapped = t.sum.signed() as i32;
    let sa = av.signed();
    let sb = bv.signed();
    let true_sum = sa + sb + carry_in as i64;
    (wrapped, true_sum != wrapped as i64)
}

/// Mantissa ALU: returns the 23-bit sum of two register patterns.
pub(crate) fn add_mantissa(a: ProcMantissa, b: ProcMantissa, carry_in: bool) -> ProcMantissa {
    let t = add_anticipating(
        BitVector::new(MANTISSA_WIDTH, a.raw() as u64),
        BitVector::new(MANTISSA_WIDTH, b.raw() as u64),
        carry_in,
    )
    .expect("same width");
    ProcMantissa::from_raw(t.sum.bits() as u32)
}

/// The transforms wired behind the mantissa ALU output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Identity,
    Negate,
    Half,
    Quarter,
    Double,
    Octuple,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::Identity => "",
            Route::Negate => "-",
            Route::Half => "1/2 ",
            Route::Quarter => "1/4 ",
            Route::Double => "2",
            Route::Octuple => "8",
        }
    }
}

pub fn route_output(e: ProcMantissa, selector: Route) -> Result<ProcMantissa, AluError> {
    let (out, overflow) = route_output_flagged(e, selector);
    if overflow {
        Err(AluError::ShiftOverflow)
    } else {
        Ok(out)
    }
}

/// Like [`route_output`] but always yields the truncated register contents.
pub fn route_output_flagged(e: ProcMantissa, selector: Route) -> (ProcMantissa, bool) {
    match selector {
        Route::Identity => (e, false),
        Route::Negate => (ProcMantissa::from_scaled(e.scaled().wrapping_neg()), e.raw() == 1 << 22),
        Route::Half => (e.shr(1), false),
        Route::Quarter => (e.shr(2), false),
        Route::Double => e.shl(1),
        Route::Octuple => e.shl(3),
    }
}

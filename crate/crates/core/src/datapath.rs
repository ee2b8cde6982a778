//! Processor register file and the routing fabric feeding the two ALUs.
//!
//! F = (Af, Bf) and G = (Ag, Bg) are the programmer's registers. Aa/Ab and
//! Ba/Bb are the ALU inputs, Ae/Be the ALU outputs. Routing is OR-wired: a
//! zero bit is "no push", so several drivers on one line simply combine.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::alu::{route_output_flagged, Route};
use crate::numerics::{ProcMantissa, Word24};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatapathError {
    #[error("more than 17 serial accesses to Bf in one instruction")]
    SerialOverrun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpReg {
    Af,
    Ag,
    Aa,
    Ab,
    Ae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MantReg {
    Bf,
    Bg,
    Ba,
    Bb,
    Be,
}

/// Constants wired into the exponent multiplexers. `+1` is available to both
/// inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpConst {
    One,
    Three,
    Thirteen,
}

impl ExpConst {
    pub fn value(self) -> i32 {
        match self {
            ExpConst::One => 1,
            ExpConst::Three => 3,
            ExpConst::Thirteen => 13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Aa,
    Ab,
    Ba,
    Bb,
}

impl Target {
    pub fn is_exponent(self) -> bool {
        matches!(self, Target::Aa | Target::Ab)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Exp(ExpReg),
    Const(ExpConst),
    Mant(MantReg),
    /// Be with its integer positions +2..=-2 erased.
    BePrime,
    /// Input panel column Za0..=Za3, entered with its low bit at position -13.
    Digit(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RouteAction {
    pub target: Target,
    pub source: Source,
    pub transform: Route,
}

impl RouteAction {
    pub const fn new(target: Target, source: Source, transform: Route) -> Self {
        RouteAction { target, source, transform }
    }
}

impl fmt::Display for RouteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            Source::Exp(r) => format!("{r:?}"),
            Source::Mant(r) => format!("{r:?}"),
            Source::Const(c) => format!("{}", c.value()),
            Source::BePrime => "Be'".to_string(),
            Source::Digit(i) => format!("Za{i}"),
        };
        write!(f, "{:?}<-{}{}", self.target, self.transform.label(), src)
    }
}

/// Bit index of position -13, where panel digits enter Ba.
const DIGIT_SHIFT: u32 = 7;
/// Positions 0..=-16 of a mantissa register.
const SERIAL_MASK: u32 = 0x1_ffff;
const SERIAL_SHIFT: u32 = 4;
pub const SERIAL_LIMIT: u8 = 17;

/// Exponent registers carry the integer the adder chain would hold with
/// unlimited width; [`wrap7`] gives what the 7-bit hardware actually shows.
/// The two differ only after an exponent overflow.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessorState {
    pub af: i32,
    pub ag: i32,
    pub aa: i32,
    pub ab: i32,
    pub ae: i32,
    pub bf: ProcMantissa,
    pub bg: ProcMantissa,
    pub ba: ProcMantissa,
    pub bb: ProcMantissa,
    pub be: ProcMantissa,
    pub s0: bool,
    pub s1: bool,
    pub s3: bool,
    /// Bit presented at the output of the Bf shift register.
    pub mm: bool,
    pub sign_f: bool,
    pub sign_g: bool,
    pub sign_result: bool,
    pub phase: u8,
    pub op: u8,
    pub f_loaded: bool,
    pub g_loaded: bool,
    /// Carry into each ALU, raised when a negated operand is routed in.
    pub exp_carry: bool,
    pub mant_carry: bool,
    pub serial_accesses: u8,
    /// Input panel columns, index i = Za_i.
    pub za: [u8; 4],
    /// Decimal exponent lever; counts toward zero as it is consumed.
    pub lever: i32,
    /// Output panel: digits d3..d0 in display order and the exponent arrow.
    pub display: [u8; 4],
    pub display_len: u8,
    pub arrow: i32,
}

impl ProcessorState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load discipline: the first operand goes to G, the next to F; a third
    /// load before an operation overwrites F.
    pub fn load_operand(&mut self, w: Word24) {
        let (sign, exp, frac) = w.unpack();
        let m = ProcMantissa::from_fraction(frac);
        if !self.g_loaded {
            self.ag = exp;
            self.bg = m;
            self.sign_g = sign;
            self.g_loaded = true;
        } else {
            self.af = exp;
            self.bf = m;
            self.sign_f = sign;
            self.f_loaded = true;
        }
    }

    /// Deposits an operation result in F; G becomes free for the next load.
    pub fn set_result(&mut self, exponent: i32, mantissa: ProcMantissa, sign: bool) {
        self.af = exponent;
        self.bf = mantissa;
        self.sign_f = sign;
        self.f_loaded = true;
        self.g_loaded = false;
    }

    /// F repacked to a memory word; the hidden bit and positions below -16
    /// are dropped.
    pub fn f_word(&self) -> Word24 {
        let bits = ((self.sign_f as u32) << 23) | (((self.af as u32) & 0x7f) << 16) | self.bf.fraction() as u32;
        Word24::from_bits(bits)
    }

    pub fn g_word(&self) -> Word24 {
        let bits = ((self.sign_g as u32) << 23) | (((self.ag as u32) & 0x7f) << 16) | self.bg.fraction() as u32;
        Word24::from_bits(bits)
    }

    fn exp_reg(&self, r: ExpReg) -> i32 {
        match r {
            ExpReg::Af => self.af,
            ExpReg::Ag => self.ag,
            ExpReg::Aa => self.aa,
            ExpReg::Ab => self.ab,
            ExpReg::Ae => self.ae,
        }
    }

    fn mant_reg(&self, r: MantReg) -> ProcMantissa {
        match r {
            MantReg::Bf => self.bf,
            MantReg::Bg => self.bg,
            MantReg::Ba => self.ba,
            MantReg::Bb => self.bb,
            MantReg::Be => self.be,
        }
    }

    /// Bit presented at the low end of the Bf shift register (position -16).
    pub fn serial_peek(&self) -> bool {
        self.bf.bit(-16)
    }

    /// Shifts Bf right by one, returning the bit that leaves at -16.
    pub fn serial_read_low(&mut self) -> Result<bool, DatapathError> {
        self.count_serial()?;
        let window = (self.bf.raw() >> SERIAL_SHIFT) & SERIAL_MASK;
        let out = window & 1 == 1;
        self.bf = ProcMantissa::from_raw((window >> 1) << SERIAL_SHIFT);
        self.mm = self.serial_peek();
        Ok(out)
    }

    /// Shifts Bf left by one, setting the new bit at -16.
    pub fn serial_write(&mut self, bit: bool) -> Result<(), DatapathError> {
        self.count_serial()?;
        let window = (self.bf.raw() >> SERIAL_SHIFT) & SERIAL_MASK;
        let window = ((window << 1) | bit as u32) & SERIAL_MASK;
        self.bf = ProcMantissa::from_raw(window << SERIAL_SHIFT);
        Ok(())
    }

    fn count_serial(&mut self) -> Result<(), DatapathError> {
        if self.serial_accesses >= SERIAL_LIMIT {
            return Err(DatapathError::SerialOverrun);
        }
        self.serial_accesses += 1;
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "        +2 0 -1 ....................... -20");
        for (name, e, m) in [
            ("F", self.af, self.bf),
            ("G", self.ag, self.bg),
            ("a", self.aa, self.ba),
            ("b", self.ab, self.bb),
            ("e", self.ae, self.be),
        ] {
            let _ = writeln!(s, "A{name:<2} {:07b} ({:+})", e as u8 & 0x7f, wrap7(e));
            let _ = writeln!(s, "B{name:<2} {m}");
        }
        let _ = writeln!(
            s,
            "S0={} S1={} S3={} mm={} Ph={} Op={:03b} signF={} signG={}",
            self.s0 as u8, self.s1 as u8, self.s3 as u8, self.mm as u8, self.phase, self.op, self.sign_f as u8, self.sign_g as u8
        );
        s
    }
}

/// Applies one engagement's routing. Every source is read from `state` as it
/// was before any action; drivers of the same input OR together.
pub fn apply_route(state: &ProcessorState, actions: &[RouteAction]) -> ProcessorState {
    let mut next = state.clone();
    let mut exp_driven = [false; 2];
    let mut mant_driven = [false; 2];
    for act in actions {
        if act.target.is_exponent() {
            let raw = match act.source {
                Source::Exp(r) => state.exp_reg(r),
                Source::Const(c) => c.value(),
                _ => panic!("mantissa source routed to exponent input: {act}"),
            };
            let raw = match act.transform {
                Route::Identity => raw,
                Route::Negate => {
                    next.exp_carry = true;
                    !raw
                }
                other => panic!("exponent path has no {other:?} transform"),
            };
            let (slot, idx) = match act.target {
                Target::Aa => (&mut next.aa, 0),
                _ => (&mut next.ab, 1),
            };
            let prior = if exp_driven[idx] { *slot } else { 0 };
            *slot = prior | raw;
            exp_driven[idx] = true;
        } else {
            let m = match act.source {
                Source::Mant(r) => state.mant_reg(r),
                Source::BePrime => ProcMantissa::from_raw(state.be.raw() & ((1 << 18) - 1)),
                Source::Digit(i) => ProcMantissa::from_raw((state.za[i as usize] as u32 & 0xf) << DIGIT_SHIFT),
                _ => panic!("exponent source routed to mantissa input: {act}"),
            };
            let m = match act.transform {
                Route::Negate => {
                    next.mant_carry = true;
                    ProcMantissa::from_raw(!m.raw())
                }
                other => route_output_flagged(m, other).0,
            };
            let (slot, idx) = match act.target {
                Target::Ba => (&mut next.ba, 0),
                _ => (&mut next.bb, 1),
            };
            let prior = if mant_driven[idx] { slot.raw() } else { 0 };
            *slot = ProcMantissa::from_raw(prior | m.raw());
            mant_driven[idx] = true;
        }
    }
    next
}

/// The 7-bit register view of an exponent value.
pub fn wrap7(raw: i32) -> i32 {
    let v = raw & 0x7f;
    if v >= 64 {
        v - 128
    } else {
        v
    }
}

//! The criterion-plate sequencer and the five microprograms.
//!
//! Every microprogram is data: a list of [`Criterion`] rows, each matching a
//! ten-bit pattern (Op2..Op0, S0, S1, Ph4..Ph0) plus runtime guards, and
//! carrying routing actions and control effects. [`Sequencer`] fires at most
//! one row per side (and mantissa slot) per cycle.

mod exec;
mod table;

pub use exec::{CycleRecord, Execution, Sequencer, ARROW_LIMIT, TENTH};
pub use table::{microprogram_table, MicroprogramTable, SoundnessReport, TableError};

use std::fmt;

use thiserror::Error;

use crate::datapath::{wrap7, DatapathError, ProcessorState, RouteAction};
use crate::numerics::{ProcMantissa, Word24, EXP_MAX, EXP_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Read,
    Disp,
}

impl Opcode {
    pub const ALL: [Opcode; 6] = [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div, Opcode::Read, Opcode::Disp];

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(bits: u8) -> Option<Opcode> {
        Opcode::ALL.get(bits as usize).copied()
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::Div => "DIV",
            Opcode::Read => "READ",
            Opcode::Disp => "DISP",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Exponent,
    Mantissa,
}

/// What happens when a zero mantissa reaches a normalization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroPolicy {
    #[default]
    Strict,
    /// Let the unnormalizable value through and flag it.
    Permissive,
}

/// Runtime conditions a criterion may test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    AeNeg,
    AeZero,
    AeEq(i32),
    AeGt(i32),
    /// Bit of Be at the given binary position.
    BeBit(i32),
    /// Carry bit u+2: Be is negative.
    BeNeg,
    /// Bit leaving the Bf shift register.
    Mm,
    LeverPos,
    LeverNeg,
}

impl Atom {
    pub fn reads_exponent(self) -> bool {
        matches!(self, Atom::AeNeg | Atom::AeZero | Atom::AeEq(_) | Atom::AeGt(_))
    }

    pub fn eval(self, st: &ProcessorState) -> bool {
        let ae = wrap7(st.ae);
        match self {
            Atom::AeNeg => ae < 0,
            Atom::AeZero => ae == 0,
            Atom::AeEq(k) => ae == k,
            Atom::AeGt(k) => ae > k,
            Atom::BeBit(p) => st.be.bit(p),
            Atom::BeNeg => st.be.is_negative(),
            Atom::Mm => st.serial_peek(),
            Atom::LeverPos => st.lever > 0,
            Atom::LeverNeg => st.lever < 0,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::AeNeg => write!(f, "Ae<0"),
            Atom::AeZero => write!(f, "Ae=0"),
            Atom::AeEq(k) => write!(f, "Ae={k}"),
            Atom::AeGt(k) => write!(f, "Ae>{k}"),
            Atom::BeBit(p) => write!(f, "Be{p:+}"),
            Atom::BeNeg => write!(f, "u+2"),
            Atom::Mm => write!(f, "mm"),
            Atom::LeverPos => write!(f, "lever>0"),
            Atom::LeverNeg => write!(f, "lever<0"),
        }
    }
}

/// One literal of a guard conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit {
    pub atom: Atom,
    pub value: bool,
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Route(RouteAction),
    Advance,
    Finish,
    SetS1(bool),
    SetS3,
    /// Stops with ZeroUnsupported (or flags it) when Be is zero.
    ZeroCheck,
    SerialShiftRight,
    /// Shifts NOT(u+2) into Bf as the next quotient bit.
    SerialWriteQuotient,
    /// Copies Be bits +1..=-2 to the next display column.
    ExtractDigit,
    /// Runs a full multiplication of (Ae, Be) by one tenth.
    MulTenth,
    Lever(i8),
    Arrow(i8),
    ResetArrow,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Route(r) => write!(f, "{r}"),
            Action::Advance => write!(f, "Ph+1"),
            Action::Finish => write!(f, "Finish"),
            Action::SetS1(v) => write!(f, "S1:={}", *v as u8),
            Action::SetS3 => write!(f, "S3:=1"),
            Action::ZeroCheck => write!(f, "ZeroCheck"),
            Action::SerialShiftRight => write!(f, "Bf>>"),
            Action::SerialWriteQuotient => write!(f, "Bf<<q"),
            Action::ExtractDigit => write!(f, "Digit"),
            Action::MulTenth => write!(f, "x1/10"),
            Action::Lever(d) => write!(f, "lever{d:+}"),
            Action::Arrow(d) => write!(f, "arrow{d:+}"),
            Action::ResetArrow => write!(f, "arrow:=1"),
        }
    }
}

/// One table row. A paper row that branches on a guard appears once per
/// branch, all sharing its number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub id: u8,
    pub side: Side,
    /// Mantissa rows in slot 1 fire alongside slot 0 in the same cycle.
    pub slot: u8,
    pub op_mask: u8,
    pub op_value: u8,
    pub s0: Option<bool>,
    pub s1: Option<bool>,
    pub phases: (u8, u8),
    pub guard: Vec<Lit>,
    pub actions: Vec<Action>,
    /// Takes no machine cycle (pure phase advance).
    pub passthrough: bool,
    /// Which cells were reconstructed rather than read off the original table.
    pub note: &'static str,
}

impl Criterion {
    pub fn matches(&self, op: u8, s0: bool, s1: bool, phase: u8) -> bool {
        op & self.op_mask == self.op_value
            && self.s0.is_none_or(|v| v == s0)
            && self.s1.is_none_or(|v| v == s1)
            && (self.phases.0..=self.phases.1).contains(&phase)
    }

    pub fn guard_holds(&self, st: &ProcessorState) -> bool {
        self.guard.iter().all(|l| l.atom.eval(st) == l.value)
    }

    pub fn has_route(&self) -> bool {
        self.actions.iter().any(|a| matches!(a, Action::Route(_)))
    }

    pub fn pattern(&self) -> String {
        let mut s = String::new();
        for bit in (0..3).rev() {
            s.push(if self.op_mask >> bit & 1 == 0 {
                'x'
            } else if self.op_value >> bit & 1 == 1 {
                '1'
            } else {
                '0'
            });
        }
        s.push(' ');
        for v in [self.s0, self.s1] {
            s.push(match v {
                None => 'x',
                Some(true) => '1',
                Some(false) => '0',
            });
        }
        s.push(' ');
        if self.phases.0 == self.phases.1 {
            s.push_str(&format!("{:05b}", self.phases.0));
        } else {
            s.push_str(&format!("{}..{}", self.phases.0, self.phases.1));
        }
        s
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match (self.side, self.slot) {
            (Side::Exponent, _) => "E ".to_string(),
            (Side::Mantissa, 0) => "M ".to_string(),
            (Side::Mantissa, n) => format!("M{n}"),
        };
        let guard = if self.guard.is_empty() {
            "-".to_string()
        } else {
            self.guard.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("&")
        };
        let acts = self.actions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{:>3}\t{side}\t{}\t{guard}\t{acts}", self.id, self.pattern())?;
        if self.passthrough {
            write!(f, " (no cycle)")?;
        }
        if !self.note.is_empty() {
            write!(f, "\t; {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MicrocodeError {
    #[error("zero mantissa cannot be normalized")]
    ZeroUnsupported,
    #[error("exponent overflow (true value {0})")]
    ExponentOverflow(i32),
    #[error("no criterion matches {op} phase {phase}")]
    Stall { op: Opcode, phase: u8 },
    #[error("criteria {ids:?} all match {op} phase {phase} on one side")]
    Ambiguous { op: Opcode, phase: u8, ids: Vec<u8> },
    #[error(transparent)]
    Datapath(#[from] DatapathError),
    #[error("panel digit {0} out of range 0..=9")]
    DigitRange(u8),
    #[error("exponent lever {0} out of range")]
    LeverRange(i32),
    #[error("decimal exponent {0} beyond the display arrow")]
    ArrowRange(i32),
    #[error("{0} did not finish within the cycle limit")]
    Runaway(Opcode),
}

/// Decimal panel input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PanelInput {
    /// Za3..Za0, most significant first.
    pub digits: [u8; 4],
    pub lever: i32,
    pub negative: bool,
}

pub const LEVER_LIMIT: i32 = 8;

/// Decimal panel output: `0.d3d2d1d0 × 10^arrow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisplayOutput {
    pub digits: [u8; 4],
    pub arrow: i32,
    pub negative: bool,
}

impl fmt::Display for DisplayOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.digits;
        write!(f, "{a} {b} {c} {d} ×10^{} {}", self.arrow, if self.negative { '-' } else { '+' })
    }
}

/// Result of running one arithmetic or input microprogram on fresh operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithResult {
    pub word: Word24,
    pub exponent: i32,
    pub mantissa: ProcMantissa,
    pub cycles: u64,
    pub zero_flagged: bool,
    pub records: Vec<CycleRecord>,
}

/// Result sign. For add/sub, S0 says the magnitudes were added; otherwise
/// the larger operand (after the complement record S3) decides.
pub fn sign_unit(op: Opcode, sign_f: bool, sign_g: bool, s1: bool, s3: bool) -> bool {
    match op {
        Opcode::Add | Opcode::Sub => {
            let g = sign_g ^ (op == Opcode::Sub);
            if sign_f == g || s1 ^ s3 {
                sign_f
            } else {
                g
            }
        }
        _ => sign_f ^ sign_g,
    }
}

/// S0 as set by the sign unit before an add/sub: 1 when the magnitudes add.
pub fn sign_unit_s0(op: Opcode, sign_f: bool, sign_g: bool) -> bool {
    sign_f == (sign_g ^ (op == Opcode::Sub))
}

fn operands(f: Word24, g: Word24) -> ProcessorState {
    let mut st = ProcessorState::new();
    st.load_operand(g);
    st.load_operand(f);
    st
}

fn finish_word(exec: Execution, sign: bool) -> Result<ArithResult, MicrocodeError> {
    let e = exec.state.ae;
    if !(EXP_MIN..=EXP_MAX).contains(&e) {
        return Err(MicrocodeError::ExponentOverflow(e));
    }
    let word = Word24::pack(sign, e, exec.state.be.fraction()).expect("exponent checked");
    Ok(ArithResult {
        word,
        exponent: e,
        mantissa: exec.state.be,
        cycles: exec.cycles,
        zero_flagged: exec.zero_flagged,
        records: exec.records,
    })
}

/// F + G or F - G.
pub fn run_add_sub(f: Word24, g: Word24, op: Opcode, zero: ZeroPolicy) -> Result<ArithResult, MicrocodeError> {
    assert!(matches!(op, Opcode::Add | Opcode::Sub));
    let mut st = operands(f, g);
    let exec = Sequencer::new(zero).execute(op, &mut st)?;
    let sign = exec.state.sign_result;
    finish_word(exec, sign)
}

pub fn run_mul(f: Word24, g: Word24, zero: ZeroPolicy) -> Result<ArithResult, MicrocodeError> {
    let mut st = operands(f, g);
    let exec = Sequencer::new(zero).execute(Opcode::Mul, &mut st)?;
    let sign = exec.state.sign_result;
    finish_word(exec, sign)
}

/// F / G.
pub fn run_div(f: Word24, g: Word24, zero: ZeroPolicy) -> Result<ArithResult, MicrocodeError> {
    let mut st = operands(f, g);
    let exec = Sequencer::new(zero).execute(Opcode::Div, &mut st)?;
    let sign = exec.state.sign_result;
    finish_word(exec, sign)
}

pub fn run_dec2bin(panel: PanelInput, zero: ZeroPolicy) -> Result<ArithResult, MicrocodeError> {
    let mut st = ProcessorState::new();
    set_panel(&mut st, panel)?;
    let exec = Sequencer::new(zero).execute(Opcode::Read, &mut st)?;
    finish_word(exec, panel.negative)
}

/// Validates the panel and copies it into the processor's input columns.
pub fn set_panel(st: &mut ProcessorState, panel: PanelInput) -> Result<(), MicrocodeError> {
    if let Some(&d) = panel.digits.iter().find(|&&d| d > 9) {
        return Err(MicrocodeError::DigitRange(d));
    }
    if panel.lever.abs() > LEVER_LIMIT {
        return Err(MicrocodeError::LeverRange(panel.lever));
    }
    for (i, d) in panel.digits.iter().rev().enumerate() {
        st.za[i] = *d;
    }
    st.lever = panel.lever;
    st.sign_result = panel.negative;
    Ok(())
}

pub fn run_bin2dec(f: Word24, zero: ZeroPolicy) -> Result<DisplayOutput, MicrocodeError> {
    let mut st = ProcessorState::new();
    st.load_operand(Word24::from_bits(0));
    st.load_operand(f);
    let exec = Sequencer::new(zero).execute(Opcode::Disp, &mut st)?;
    Ok(DisplayOutput { digits: exec.state.display, arrow: exec.state.arrow, negative: f.sign() })
}

use super::{microprogram_table, sign_unit, sign_unit_s0, Action, Criterion, MicrocodeError, MicroprogramTable, Opcode, Side, ZeroPolicy};
use crate::alu::{add_exponent_with_carry, add_mantissa};
use crate::datapath::{apply_route, wrap7, ProcessorState, RouteAction};
use crate::numerics::ProcMantissa;

/// One tenth as a multiplier: 1.6 x 2^-4 with the last fraction bits rounded
/// up so that truncating products never fall below the true quotient.
pub const TENTH: (i32, u16) = (-4, 0x999c);

const CYCLE_LIMIT: u64 = 4096;
pub const ARROW_LIMIT: i32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    pub op: Opcode,
    pub phase: u8,
    pub exp_id: Option<u8>,
    /// Mantissa rows, slot 0 then slot 1.
    pub mant_ids: Vec<u8>,
    pub ae: i32,
    pub be: ProcMantissa,
    /// Part of a multiplication run on behalf of a conversion.
    pub nested: bool,
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub state: ProcessorState,
    pub cycles: u64,
    pub zero_flagged: bool,
    pub records: Vec<CycleRecord>,
}

/// Steps a microprogram one machine cycle at a time.
#[derive(Debug, Clone, Copy)]
pub struct Sequencer<'t> {
    table: &'t MicroprogramTable,
    pub zero: ZeroPolicy,
    pub arrow_limit: i32,
}

impl Sequencer<'static> {
    pub fn new(zero: ZeroPolicy) -> Self {
        Sequencer { table: microprogram_table(), zero, arrow_limit: ARROW_LIMIT }
    }
}

impl<'t> Sequencer<'t> {
    pub fn with_table(table: &'t MicroprogramTable, zero: ZeroPolicy) -> Self {
        Sequencer { table, zero, arrow_limit: ARROW_LIMIT }
    }

    /// Runs `op` to completion on `st`. On return `st` holds the final
    /// register contents, with the result in Ae/Be and `sign_result`.
    pub fn execute(&self, op: Opcode, st: &mut ProcessorState) -> Result<Execution, MicrocodeError> {
        begin(op, st);
        let mut cycles = 0u64;
        let mut records = Vec::new();
        let mut zero_flagged = false;
        loop {
            if cycles >= CYCLE_LIMIT {
                return Err(MicrocodeError::Runaway(op));
            }
            let pre = st.clone();
            let rows = self.table.select(op, &pre).map_err(|ids| MicrocodeError::Ambiguous { op, phase: pre.phase, ids })?;
            if rows.is_empty() {
                return Err(MicrocodeError::Stall { op, phase: pre.phase });
            }
            if rows.iter().flat_map(|c| &c.guard).any(|l| l.atom.reads_exponent()) && wrap7(pre.ae) != pre.ae {
                return Err(MicrocodeError::ExponentOverflow(pre.ae));
            }
            let mut record = CycleRecord {
                op,
                phase: pre.phase,
                exp_id: rows.iter().find(|c| c.side == Side::Exponent).map(|c| c.id),
                mant_ids: rows.iter().filter(|c| c.side == Side::Mantissa).map(|c| c.id).collect(),
                ae: 0,
                be: ProcMantissa::ZERO,
                nested: false,
                counted: rows.iter().any(|c| !c.passthrough),
            };

            let zero_check = rows.iter().any(|c| c.actions.contains(&Action::ZeroCheck));
            if zero_check && pre.be.is_zero() {
                match self.zero {
                    ZeroPolicy::Strict => return Err(MicrocodeError::ZeroUnsupported),
                    ZeroPolicy::Permissive => {
                        zero_flagged = true;
                        cycles += 1;
                        record.ae = st.ae;
                        record.be = st.be;
                        record.counted = true;
                        records.push(record);
                        break;
                    }
                }
            }

            let mut next = self.route(&rows, &pre);
            let mut nested = Vec::new();
            let finished = self.effects(&rows, &pre, &mut next, &mut cycles, &mut nested)?;
            if record.counted {
                cycles += 1;
            }
            record.ae = next.ae;
            record.be = next.be;
            *st = next;
            records.push(record);
            records.extend(nested);
            if finished {
                break;
            }
        }
        if !(crate::numerics::EXP_MIN..=crate::numerics::EXP_MAX).contains(&st.ae) {
            return Err(MicrocodeError::ExponentOverflow(st.ae));
        }
        st.sign_result = match op {
            Opcode::Read => st.sign_result,
            Opcode::Disp => st.sign_f,
            _ => sign_unit(op, st.sign_f, st.sign_g, st.s1, st.s3),
        };
        Ok(Execution { state: st.clone(), cycles, zero_flagged, records })
    }

    fn route(&self, rows: &[&Criterion], pre: &ProcessorState) -> ProcessorState {
        let routes: Vec<RouteAction> = rows
            .iter()
            .flat_map(|c| &c.actions)
            .filter_map(|a| match a {
                Action::Route(r) => Some(*r),
                _ => None,
            })
            .collect();
        let mut next = apply_route(pre, &routes);
        if rows.iter().any(|c| c.side == Side::Exponent && c.has_route()) {
            let sum = next.aa + next.ab + next.exp_carry as i32;
            let (wrapped, _) = add_exponent_with_carry(next.aa, next.ab, next.exp_carry);
            debug_assert_eq!(wrapped, wrap7(sum));
            next.ae = sum;
        }
        if rows.iter().any(|c| c.side == Side::Mantissa && c.has_route()) {
            next.be = add_mantissa(next.ba, next.bb, next.mant_carry);
        }
        next.aa = 0;
        next.ab = 0;
        next.ba = ProcMantissa::ZERO;
        next.bb = ProcMantissa::ZERO;
        next.exp_carry = false;
        next.mant_carry = false;
        next
    }

    /// Applies control effects; returns whether the instruction finished.
    fn effects(
        &self,
        rows: &[&Criterion],
        pre: &ProcessorState,
        next: &mut ProcessorState,
        cycles: &mut u64,
        nested: &mut Vec<CycleRecord>,
    ) -> Result<bool, MicrocodeError> {
        let mut advance = false;
        let mut finish = false;
        for act in rows.iter().flat_map(|c| &c.actions) {
            match *act {
                Action::Route(_) | Action::ZeroCheck => {}
                Action::Advance => advance = true,
                Action::Finish => finish = true,
                Action::SetS1(v) => next.s1 = v,
                Action::SetS3 => next.s3 = true,
                Action::SerialShiftRight => {
                    next.serial_read_low()?;
                }
                Action::SerialWriteQuotient => next.serial_write(!pre.be.is_negative())?,
                Action::ExtractDigit => {
                    let d = ((pre.be.raw() >> 18) & 0xf) as u8;
                    if d > 9 {
                        return Err(MicrocodeError::DigitRange(d));
                    }
                    let i = next.display_len as usize;
                    next.display[i.min(3)] = d;
                    next.display_len += 1;
                }
                Action::MulTenth => {
                    let mut scratch = ProcessorState::new();
                    scratch.af = TENTH.0;
                    scratch.bf = ProcMantissa::from_fraction(TENTH.1);
                    scratch.ag = next.ae;
                    scratch.bg = next.be;
                    let exec = self.execute(Opcode::Mul, &mut scratch)?;
                    next.ae = exec.state.ae;
                    next.be = exec.state.be;
                    *cycles += exec.cycles;
                    nested.extend(exec.records.into_iter().map(|mut r| {
                        r.nested = true;
                        r
                    }));
                }
                Action::Lever(d) => next.lever += d as i32,
                Action::Arrow(d) => {
                    next.arrow += d as i32;
                    if next.arrow.abs() > self.arrow_limit {
                        return Err(MicrocodeError::ArrowRange(next.arrow));
                    }
                }
                Action::ResetArrow => {
                    next.arrow = 1;
                    next.display = [0; 4];
                    next.display_len = 0;
                }
            }
        }
        if advance {
            next.phase += 1;
        }
        Ok(finish)
    }
}

fn begin(op: Opcode, st: &mut ProcessorState) {
    st.op = op.bits();
    st.phase = 0;
    st.aa = 0;
    st.ab = 0;
    st.ae = 0;
    st.ba = ProcMantissa::ZERO;
    st.bb = ProcMantissa::ZERO;
    st.be = ProcMantissa::ZERO;
    st.exp_carry = false;
    st.mant_carry = false;
    st.s1 = false;
    st.s3 = false;
    st.serial_accesses = 0;
    st.s0 = match op {
        Opcode::Add | Opcode::Sub => sign_unit_s0(op, st.sign_f, st.sign_g),
        _ => false,
    };
    st.mm = st.serial_peek();
}

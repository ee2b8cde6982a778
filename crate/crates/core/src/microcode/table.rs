use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use thiserror::Error;

use super::{Action, Atom, Criterion, Lit, Opcode, Side};
use crate::alu::Route;
use crate::datapath::{ExpConst, ExpReg, MantReg, ProcessorState, RouteAction, Source, Target};
use crate::numerics::ProcMantissa;

const AF: Source = Source::Exp(ExpReg::Af);
const AG: Source = Source::Exp(ExpReg::Ag);
const AE: Source = Source::Exp(ExpReg::Ae);
const BF: Source = Source::Mant(MantReg::Bf);
const BG: Source = Source::Mant(MantReg::Bg);
const BE: Source = Source::Mant(MantReg::Be);
const ONE: Source = Source::Const(ExpConst::One);
const THREE: Source = Source::Const(ExpConst::Three);
const THIRTEEN: Source = Source::Const(ExpConst::Thirteen);

const ID: Route = Route::Identity;
const NEG: Route = Route::Negate;
const HALF: Route = Route::Half;
const QUARTER: Route = Route::Quarter;
const DOUBLE: Route = Route::Double;
const EIGHT: Route = Route::Octuple;

fn aa(t: Route, s: Source) -> Action {
    Action::Route(RouteAction::new(Target::Aa, s, t))
}
fn ab(t: Route, s: Source) -> Action {
    Action::Route(RouteAction::new(Target::Ab, s, t))
}
fn ba(t: Route, s: Source) -> Action {
    Action::Route(RouteAction::new(Target::Ba, s, t))
}
fn bb(t: Route, s: Source) -> Action {
    Action::Route(RouteAction::new(Target::Bb, s, t))
}

fn is(atom: Atom) -> Lit {
    Lit { atom, value: true }
}
fn not(atom: Atom) -> Lit {
    Lit { atom, value: false }
}

const ADD_SUB: (u8, u8) = (0b110, 0b000);
const MUL: (u8, u8) = (0b111, 0b010);
const DIV: (u8, u8) = (0b111, 0b011);
const READ: (u8, u8) = (0b111, 0b100);
const DISP: (u8, u8) = (0b111, 0b101);

struct Row(Criterion);

fn row(id: u8, side: Side, op: (u8, u8), ph: u8) -> Row {
    Row(Criterion {
        id,
        side,
        slot: 0,
        op_mask: op.0,
        op_value: op.1,
        s0: None,
        s1: None,
        phases: (ph, ph),
        guard: Vec::new(),
        actions: Vec::new(),
        passthrough: false,
        note: "",
    })
}

fn e(id: u8, op: (u8, u8), ph: u8) -> Row {
    row(id, Side::Exponent, op, ph)
}
fn m(id: u8, op: (u8, u8), ph: u8) -> Row {
    row(id, Side::Mantissa, op, ph)
}

impl Row {
    fn to_ph(mut self, hi: u8) -> Self {
        self.0.phases.1 = hi;
        self
    }
    fn s0(mut self, v: bool) -> Self {
        self.0.s0 = Some(v);
        self
    }
    fn s1(mut self, v: bool) -> Self {
        self.0.s1 = Some(v);
        self
    }
    fn slot(mut self, n: u8) -> Self {
        self.0.slot = n;
        self
    }
    fn when(mut self, lits: &[Lit]) -> Self {
        self.0.guard = lits.to_vec();
        self
    }
    fn pass(mut self) -> Self {
        self.0.passthrough = true;
        self
    }
    fn note(mut self, n: &'static str) -> Self {
        self.0.note = n;
        self
    }
    fn does(mut self, acts: &[Action]) -> Criterion {
        self.0.actions = acts.to_vec();
        self.0
    }
}

use Action::{Advance, ExtractDigit, Finish, MulTenth, SerialShiftRight, SerialWriteQuotient, SetS1, SetS3, ZeroCheck};
use Atom::{AeEq, AeGt, AeNeg, AeZero, BeBit, BeNeg, LeverNeg, LeverPos, Mm};

fn add_sub_rows() -> Vec<Criterion> {
    let x = ADD_SUB;
    vec![
        e(1, x, 0).does(&[aa(ID, AF), ab(NEG, AG), Advance]),
        e(2, x, 1).when(&[not(AeNeg)]).does(&[SetS1(true), Advance]),
        e(2, x, 1).when(&[is(AeNeg)]).does(&[SetS1(false), Advance]),
        e(3, x, 2).s1(false).does(&[ab(NEG, AE), Advance]),
        m(3, x, 2).s1(false).does(&[bb(ID, BF)]),
        e(4, x, 2).s1(true).does(&[ab(ID, AE), Advance]),
        m(4, x, 2).s1(true).does(&[bb(ID, BG)]),
        e(5, x, 3)
            .when(&[is(AeZero)])
            .pass()
            .note("no cycle spent once aligned")
            .does(&[Advance]),
        m(5, x, 3).when(&[is(AeZero)]).pass().does(&[]),
        e(5, x, 3).when(&[not(AeZero)]).does(&[aa(ID, AE), ab(NEG, ONE)]),
        m(5, x, 3).when(&[not(AeZero)]).does(&[ba(HALF, BE)]),
        m(6, x, 4).s0(false).does(&[ba(NEG, BE)]),
        m(7, x, 4).s0(true).does(&[ba(ID, BE)]),
        e(8, x, 4).s1(true).does(&[aa(ID, AF), Advance]),
        m(8, x, 4).s1(true).slot(1).does(&[bb(ID, BF)]),
        e(9, x, 4).s1(false).does(&[ab(ID, AG), Advance]),
        m(9, x, 4).s1(false).slot(1).does(&[bb(ID, BG)]),
        e(10, x, 5)
            .s0(true)
            .when(&[is(BeBit(1))])
            .note("guard read as bit +1")
            .does(&[aa(ID, AE), ab(ID, ONE), Finish]),
        e(10, x, 5).s0(true).when(&[not(BeBit(1))]).does(&[Finish]),
        m(10, x, 5).s0(true).when(&[is(BeBit(1))]).does(&[ba(HALF, BE)]),
        m(10, x, 5).s0(true).when(&[not(BeBit(1))]).does(&[ba(ID, BE)]),
        e(11, x, 5)
            .s0(false)
            .when(&[is(BeNeg)])
            .note("sign tested on u+2")
            .does(&[SetS3, Advance]),
        e(11, x, 5).s0(false).when(&[not(BeNeg)]).does(&[Advance]),
        m(11, x, 5).s0(false).when(&[is(BeNeg)]).does(&[ba(NEG, BE)]),
        m(11, x, 5).s0(false).when(&[not(BeNeg)]).does(&[ba(ID, BE)]),
        e(12, x, 6).s0(false).when(&[not(BeBit(0))]).does(&[aa(ID, AE), ab(NEG, ONE)]),
        e(12, x, 6).s0(false).when(&[is(BeBit(0))]).does(&[Finish]),
        m(12, x, 6).s0(false).when(&[not(BeBit(0))]).does(&[ZeroCheck, ba(DOUBLE, BE)]),
        m(12, x, 6).s0(false).when(&[is(BeBit(0))]).does(&[ba(ID, BE)]),
    ]
}

fn mul_rows() -> Vec<Criterion> {
    let x = MUL;
    vec![
        e(21, x, 0).does(&[aa(ID, AF), ab(ID, AG), Advance]),
        e(24, x, 1).to_ph(17).does(&[Advance]),
        m(24, x, 1).to_ph(17).when(&[not(Mm)]).does(&[ba(HALF, BE), SerialShiftRight]),
        m(24, x, 1).to_ph(17).when(&[is(Mm)]).does(&[ba(HALF, BE), bb(ID, BG), SerialShiftRight]),
        e(26, x, 18).when(&[is(BeBit(1))]).does(&[aa(ID, AE), ab(ID, ONE), Advance]),
        e(26, x, 18).when(&[not(BeBit(1))]).does(&[Advance]),
        m(26, x, 18).when(&[is(BeBit(1))]).does(&[ba(HALF, BE)]),
        m(26, x, 18).when(&[not(BeBit(1))]).does(&[ba(ID, BE)]),
        e(27, x, 19).does(&[Finish]),
        m(27, x, 19).does(&[ZeroCheck, ba(ID, BE)]),
    ]
}

fn div_rows() -> Vec<Criterion> {
    let x = DIV;
    vec![
        e(40, x, 0).does(&[aa(ID, AF), ab(NEG, AG), Advance]),
        m(40, x, 0).does(&[bb(ID, BF)]),
        m(41, x, 1).does(&[ba(ID, BE), bb(NEG, BG)]),
        m(42, x, 2)
            .to_ph(18)
            .when(&[not(BeNeg)])
            .note("runs through phase 18 so the 17th quotient bit is stored")
            .does(&[SerialWriteQuotient, ba(DOUBLE, BE), bb(NEG, BG)]),
        m(42, x, 2).to_ph(18).when(&[is(BeNeg)]).does(&[SerialWriteQuotient, ba(DOUBLE, BE), bb(ID, BG)]),
        e(43, x, 1).to_ph(18).does(&[Advance]),
        e(44, x, 19).does(&[Advance]),
        m(44, x, 19).does(&[bb(ID, BF)]),
        e(45, x, 20).when(&[not(BeBit(0))]).does(&[aa(ID, AE), ab(NEG, ONE), Finish]),
        e(45, x, 20).when(&[is(BeBit(0))]).does(&[Finish]),
        m(45, x, 20).when(&[not(BeBit(0))]).does(&[ZeroCheck, ba(DOUBLE, BE)]),
        m(45, x, 20).when(&[is(BeBit(0))]).does(&[ba(ID, BE)]),
    ]
}

fn read_rows() -> Vec<Criterion> {
    let x = READ;
    let digit = |id: u8, ph: u8, col: u8| m(id, x, ph).does(&[ba(ID, Source::Digit(col)), bb(ID, BE), Advance]);
    let times_ten = |id: u8, ph: u8| m(id, x, ph).does(&[ba(DOUBLE, BE), bb(EIGHT, BE), Advance]);
    vec![
        m(50, x, 0).does(&[Advance]),
        digit(51, 1, 3),
        times_ten(52, 2),
        digit(53, 3, 2),
        times_ten(54, 4),
        digit(55, 5, 1),
        times_ten(56, 6),
        digit(57, 7, 0),
        e(57, x, 7).does(&[ab(ID, THIRTEEN)]),
        e(58, x, 8).when(&[not(BeBit(0))]).does(&[aa(ID, AE), ab(NEG, ONE)]),
        e(58, x, 8).when(&[is(BeBit(0))]).does(&[Advance]),
        m(58, x, 8).when(&[not(BeBit(0))]).does(&[ZeroCheck, ba(DOUBLE, BE)]),
        m(58, x, 8).when(&[is(BeBit(0))]).does(&[ba(ID, BE)]),
        e(59, x, 9)
            .when(&[is(LeverPos), is(BeBit(1))])
            .note("lever steps and renormalization reconstructed")
            .does(&[aa(ID, AE), ab(ID, ONE)]),
        e(59, x, 9)
            .when(&[is(LeverPos), not(BeBit(1))])
            .does(&[aa(ID, AE), ab(ID, THREE), Action::Lever(-1)]),
        e(59, x, 9)
            .when(&[is(LeverNeg)])
            .note("negative lever divides by ten through a multiplication")
            .does(&[MulTenth, Action::Lever(1)]),
        e(59, x, 9).when(&[not(LeverPos), not(LeverNeg)]).does(&[Advance]),
        m(59, x, 9).when(&[is(LeverPos), is(BeBit(1))]).does(&[ba(HALF, BE)]),
        m(59, x, 9).when(&[is(LeverPos), not(BeBit(1))]).does(&[ba(ID, BE), bb(QUARTER, BE)]),
        m(59, x, 9).when(&[is(LeverNeg)]).does(&[]),
        m(59, x, 9).when(&[not(LeverPos), not(LeverNeg)]).does(&[ba(ID, BE)]),
        e(60, x, 10).when(&[is(BeBit(1))]).does(&[aa(ID, AE), ab(ID, ONE), Finish]),
        e(60, x, 10).when(&[not(BeBit(1))]).does(&[Finish]),
        m(60, x, 10).when(&[is(BeBit(1))]).does(&[ba(HALF, BE)]),
        m(60, x, 10).when(&[not(BeBit(1))]).does(&[ba(ID, BE)]),
    ]
}

fn disp_rows() -> Vec<Criterion> {
    let x = DISP;
    let extract = |id: u8, ph: u8| {
        m(id, x, ph).does(&[ExtractDigit, ba(DOUBLE, Source::BePrime), bb(EIGHT, Source::BePrime), Advance])
    };
    let scale = [MulTenth, Action::Arrow(1)];
    vec![
        e(70, x, 0).does(&[aa(ID, AF), Action::ResetArrow, Advance]),
        m(70, x, 0).does(&[bb(ID, BF)]),
        e(71, x, 1)
            .when(&[is(AeGt(3))])
            .note("scaling constant reconstructed: one tenth")
            .does(&scale),
        e(71, x, 1).when(&[is(AeEq(3)), is(BeBit(-1))]).does(&scale),
        e(71, x, 1).when(&[is(AeEq(3)), not(BeBit(-1)), is(BeBit(-2))]).does(&scale),
        e(71, x, 1).when(&[not(AeGt(3)), not(AeEq(3))]).does(&[Advance]),
        e(71, x, 1).when(&[is(AeEq(3)), not(BeBit(-1)), not(BeBit(-2))]).does(&[Advance]),
        m(71, x, 1).does(&[ba(ID, BE)]),
        e(72, x, 2).does(&[Advance]),
        m(72, x, 2).does(&[ZeroCheck, ba(QUARTER, BE)]),
        e(73, x, 3).when(&[is(BeBit(-1))]).does(&[aa(ID, AE), ab(ID, ONE)]),
        e(73, x, 3)
            .when(&[not(BeBit(-1)), is(AeNeg)])
            .does(&[aa(ID, AE), ab(ID, THREE), Action::Arrow(-1)]),
        e(73, x, 3).when(&[not(BeBit(-1)), not(AeNeg)]).does(&[Advance]),
        m(73, x, 3).when(&[is(BeBit(-1))]).does(&[ba(HALF, BE)]),
        m(73, x, 3).when(&[not(BeBit(-1)), is(AeNeg)]).does(&[ba(ID, BE), bb(QUARTER, BE)]),
        m(73, x, 3).when(&[not(BeBit(-1)), not(AeNeg)]).does(&[ba(ID, BE)]),
        e(74, x, 4).when(&[is(AeZero)]).does(&[Advance]),
        e(74, x, 4).when(&[not(AeZero)]).does(&[aa(ID, AE), ab(NEG, ONE)]),
        m(74, x, 4).when(&[is(AeZero)]).does(&[ba(ID, BE)]),
        m(74, x, 4).when(&[not(AeZero)]).does(&[ba(DOUBLE, BE)]),
        extract(75, 5),
        extract(76, 6),
        extract(77, 7),
        e(78, x, 8).does(&[Finish]),
        m(78, x, 8).does(&[ExtractDigit]),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("criteria {ids:?} overlap on {side:?} slot {slot} at pattern {pattern:010b}")]
    Overlap { pattern: u16, side: Side, slot: u8, ids: Vec<u8> },
    #[error("no criterion covers {side:?} slot {slot} at pattern {pattern:010b}")]
    Gap { pattern: u16, side: Side, slot: u8 },
    #[error("criterion {0} has a phase beyond 31")]
    PhaseWidth(u8),
}

/// Outcome of the exhaustive table check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    /// Ten-bit patterns with at least one active side.
    pub active_patterns: usize,
    /// (pattern, guard environment) pairs checked.
    pub states_checked: usize,
}

#[derive(Debug, Clone)]
pub struct MicroprogramTable {
    criteria: Vec<Criterion>,
    /// Candidate rows per [opcode][phase].
    index: Vec<Vec<Vec<usize>>>,
}

pub fn microprogram_table() -> &'static MicroprogramTable {
    static TABLE: OnceLock<MicroprogramTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let t = MicroprogramTable::new(
            [add_sub_rows(), mul_rows(), div_rows(), read_rows(), disp_rows()].concat(),
        );
        t.check().expect("microprogram table is sound");
        t
    })
}

impl MicroprogramTable {
    pub fn new(criteria: Vec<Criterion>) -> Self {
        let mut index = vec![vec![Vec::new(); 32]; 8];
        for (i, c) in criteria.iter().enumerate() {
            for (op, per_op) in index.iter_mut().enumerate() {
                if op as u8 & c.op_mask != c.op_value {
                    continue;
                }
                for ph in c.phases.0..=c.phases.1.min(31) {
                    per_op[ph as usize].push(i);
                }
            }
        }
        MicroprogramTable { criteria, index }
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn candidates(&self, op: Opcode, phase: u8) -> impl Iterator<Item = &Criterion> {
        let idx = self.index[op.bits() as usize].get(phase as usize).map(|v| v.as_slice()).unwrap_or(&[]);
        idx.iter().map(|&i| &self.criteria[i])
    }

    /// Criterion numbers used by an operation.
    pub fn ids(&self, op: Opcode) -> BTreeSet<u8> {
        self.criteria
            .iter()
            .filter(|c| op.bits() & c.op_mask == c.op_value)
            .map(|c| c.id)
            .collect()
    }

    /// The matching row per (side, slot) in `st`, with overlap detection.
    pub fn select<'a>(&'a self, op: Opcode, st: &ProcessorState) -> Result<Vec<&'a Criterion>, Vec<u8>> {
        let mut hits: BTreeMap<(Side, u8), Vec<&Criterion>> = BTreeMap::new();
        for c in self.candidates(op, st.phase) {
            if c.matches(op.bits(), st.s0, st.s1, st.phase) && c.guard_holds(st) {
                hits.entry((c.side, c.slot)).or_default().push(c);
            }
        }
        let mut out = Vec::new();
        for v in hits.into_values() {
            if v.len() > 1 {
                return Err(v.iter().map(|c| c.id).collect());
            }
            out.push(v[0]);
        }
        Ok(out)
    }

    /// Enumerates all 1024 control patterns against every guard environment
    /// the table can distinguish. Each (side, slot) that has any row for a
    /// pattern must have exactly one row whose guard holds.
    pub fn check(&self) -> Result<SoundnessReport, TableError> {
        if let Some(c) = self.criteria.iter().find(|c| c.phases.1 > 31) {
            return Err(TableError::PhaseWidth(c.id));
        }
        let envs = self.guard_environments();
        let mut report = SoundnessReport { active_patterns: 0, states_checked: 0 };
        for pattern in 0u16..1024 {
            let op = (pattern >> 7) as u8;
            let s0 = pattern >> 6 & 1 == 1;
            let s1 = pattern >> 5 & 1 == 1;
            let ph = (pattern & 0x1f) as u8;
            let cands: Vec<&Criterion> = self.criteria.iter().filter(|c| c.matches(op, s0, s1, ph)).collect();
            if cands.is_empty() {
                continue;
            }
            report.active_patterns += 1;
            let keys: BTreeSet<(Side, u8)> = cands.iter().map(|c| (c.side, c.slot)).collect();
            for env in &envs {
                report.states_checked += 1;
                for &(side, slot) in &keys {
                    let hits: Vec<u8> = cands
                        .iter()
                        .filter(|c| c.side == side && c.slot == slot && c.guard_holds(env))
                        .map(|c| c.id)
                        .collect();
                    match hits.len() {
                        1 => {}
                        0 => return Err(TableError::Gap { pattern, side, slot }),
                        _ => return Err(TableError::Overlap { pattern, side, slot, ids: hits }),
                    }
                }
            }
        }
        Ok(report)
    }

    /// One state per distinguishable combination of guard inputs.
    fn guard_environments(&self) -> Vec<ProcessorState> {
        let mut ae_vals: BTreeSet<i32> = [-64, -1, 0, 1, 63].into_iter().collect();
        let mut positions: BTreeSet<i32> = BTreeSet::new();
        for c in &self.criteria {
            for l in &c.guard {
                match l.atom {
                    Atom::AeEq(k) | Atom::AeGt(k) => {
                        ae_vals.extend([k - 1, k, k + 1]);
                    }
                    Atom::BeBit(p) => {
                        positions.insert(p);
                    }
                    Atom::BeNeg => {
                        positions.insert(ProcMantissa::TOP);
                    }
                    _ => {}
                }
            }
        }
        let positions: Vec<i32> = positions.into_iter().collect();
        let mut envs = Vec::new();
        for &ae in &ae_vals {
            for combo in 0u32..1 << positions.len() {
                let raw = positions
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| combo >> i & 1 == 1)
                    .fold(0u32, |acc, (_, p)| acc | 1 << (p - ProcMantissa::BOTTOM));
                for mm in [false, true] {
                    for lever in [-1, 0, 1] {
                        let mut st = ProcessorState::new();
                        st.ae = ae;
                        st.be = ProcMantissa::from_raw(raw);
                        st.bf = ProcMantissa::from_raw((mm as u32) << 4);
                        st.lever = lever;
                        envs.push(st);
                    }
                }
            }
        }
        envs
    }

    /// Plain-text listing, one criterion per line.
    pub fn listing(&self) -> String {
        let mut s = String::from("id\tside\top s0s1 ph\tguard\tactions\n");
        for c in &self.criteria {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }
}

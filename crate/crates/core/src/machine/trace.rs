//! Trace lines. Fields are tab-separated.
//!
//! Instruction mode: `pos  mnemonic  cycles  total  F  G  events`.
//! Cycle mode: `cycle  pos  mnemonic  ph  exp_id  mant_id  Ae  Be`, where a
//! multiplication run on behalf of a conversion shows as `DISP/MUL`.

use std::fmt::Write as _;

use crate::datapath::wrap7;
use crate::microcode::CycleRecord;
use crate::numerics::Word24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    #[default]
    Off,
    Instr,
    Cycle,
}

pub(crate) fn instr_line(
    pos: usize,
    mnemonic: &str,
    cycles: u64,
    total: u64,
    f: Option<Word24>,
    g: Option<Word24>,
    events: &[String],
) -> String {
    let reg = |w: Option<Word24>| w.map_or("-".to_string(), |w| w.to_string());
    let mut s = format!("{pos}\t{mnemonic}\t{cycles}\t{total}\tF={}\tG={}", reg(f), reg(g));
    let _ = write!(s, "\t{}", if events.is_empty() { "-".to_string() } else { events.join(" ") });
    s
}

pub(crate) fn cycle_line(cycle: u64, pos: usize, mnemonic: &str, r: &CycleRecord) -> String {
    let ids = |v: &[u8]| {
        if v.is_empty() {
            "-".to_string()
        } else {
            v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        }
    };
    let name = if r.nested { format!("{mnemonic}/MUL") } else { mnemonic.to_string() };
    format!(
        "{cycle}\t{pos}\t{name}\t{}\t{}\t{}\t{}\t{}",
        r.phase,
        r.exp_id.map_or("-".to_string(), |i| i.to_string()),
        ids(&r.mant_ids),
        wrap7(r.ae),
        r.be
    )
}

/// Cycle-mode line for LOAD/STORE, which bypass the sequencer.
pub(crate) fn transfer_line(cycle: u64, pos: usize, mnemonic: &str) -> String {
    format!("{cycle}\t{pos}\t{mnemonic}\t0\t-\t-\t-\t-")
}

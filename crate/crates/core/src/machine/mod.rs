//! Tape reader, decoder, memory interface and operating modes.

mod io;
mod tape;
mod trace;

pub use io::{parse_panel_line, CollectingOutput, InputProvider, OutputSink, ScriptedInput};
pub use tape::{Tape, TapeError, MAGIC};
pub use trace::TraceLevel;

use std::fmt;

use thiserror::Error;

use crate::datapath::ProcessorState;
use crate::memory::{Capacity, MemoryError, MemoryUnit};
use crate::microcode::{set_panel, MicrocodeError, Opcode, Sequencer, ZeroPolicy};
pub use crate::microcode::{sign_unit, DisplayOutput, PanelInput};
use crate::numerics::{ProcMantissa, Word24};

/// Tape row encoding: `11aaaaaa` LOAD, `10aaaaaa` STORE, `01000ooo` operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Load(u8),
    Store(u8),
    Op(Opcode),
}

impl Instruction {
    pub fn decode(byte: u8) -> Option<Instruction> {
        match byte >> 6 {
            0b11 => Some(Instruction::Load(byte & 0x3f)),
            0b10 => Some(Instruction::Store(byte & 0x3f)),
            0b01 if byte & 0b0011_1000 == 0 => Opcode::from_bits(byte & 0b111).map(Instruction::Op),
            _ => None,
        }
    }

    pub fn encode(self) -> u8 {
        match self {
            Instruction::Load(a) => 0b1100_0000 | (a & 0x3f),
            Instruction::Store(a) => 0b1000_0000 | (a & 0x3f),
            Instruction::Op(op) => 0b0100_0000 | op.bits(),
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Instruction::Load(_) => "LOAD",
            Instruction::Store(_) => "STORE",
            Instruction::Op(op) => op.mnemonic(),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Load(a) | Instruction::Store(a) => write!(f, "{} {a}", self.mnemonic()),
            Instruction::Op(op) => write!(f, "{op}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    /// Memory detached: loads deliver the all-zero word, stores vanish.
    CpuOnly,
    /// Processor detached: LOAD/STORE move words through the interface
    /// buffer, everything else does nothing.
    MemoryOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineConfig {
    pub capacity: Capacity,
    pub mode: Mode,
    pub zero: ZeroPolicy,
    pub trace: TraceLevel,
    pub arrow_limit: i32,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            capacity: Capacity::Reconstruction,
            mode: Mode::Full,
            zero: ZeroPolicy::Strict,
            trace: TraceLevel::Off,
            arrow_limit: crate::microcode::ARROW_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("illegal instruction byte {0:#010b}")]
    Illegal(u8),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Microcode(#[from] MicrocodeError),
    #[error("{0} needs an operand that was never loaded")]
    OperandNotLoaded(&'static str),
    #[error("READ found no operator input")]
    NoInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tape position {position}, cycle {cycles}: {fault}")]
pub struct MachineError {
    pub position: usize,
    pub cycles: u64,
    pub fault: Fault,
}

#[derive(Debug, Clone)]
pub struct Machine {
    pub processor: ProcessorState,
    pub memory: MemoryUnit,
    tape: Tape,
    position: usize,
    cycles: u64,
    config: MachineConfig,
    interface: Word24,
    trace: Vec<String>,
    zero_flags: usize,
}

impl Machine {
    pub fn new(tape: Tape, config: MachineConfig) -> Self {
        Machine {
            processor: ProcessorState::new(),
            memory: MemoryUnit::new(config.capacity),
            tape,
            position: 0,
            cycles: 0,
            config,
            interface: Word24::from_bits(0),
            trace: Vec::new(),
            zero_flags: 0,
        }
    }

    /// Replaces memory; its capacity overrides the configured one.
    pub fn with_memory(mut self, memory: MemoryUnit) -> Self {
        self.config.capacity = memory.capacity();
        self.memory = memory;
        self
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_done(&self) -> bool {
        self.position >= self.tape.len()
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    /// Results that came out of a zero mantissa under the permissive policy.
    pub fn zero_flags(&self) -> usize {
        self.zero_flags
    }

    /// Word in the interface buffer (memory-only mode).
    pub fn interface(&self) -> Word24 {
        self.interface
    }

    pub fn run(&mut self, input: &mut dyn InputProvider, output: &mut dyn OutputSink) -> Result<(), MachineError> {
        while !self.is_done() {
            self.step(input, output)?;
        }
        Ok(())
    }

    /// Executes the instruction under the tape reader.
    pub fn step(
        &mut self,
        input: &mut dyn InputProvider,
        output: &mut dyn OutputSink,
    ) -> Result<Instruction, MachineError> {
        let pos = self.position;
        let byte = self.tape.rows()[pos];
        let start = self.cycles;
        let fail = |m: &Machine, fault: Fault| MachineError { position: pos, cycles: m.cycles, fault };
        let instr = Instruction::decode(byte).ok_or_else(|| fail(self, Fault::Illegal(byte)))?;
        let mut events = Vec::new();
        let mut cycle_lines = Vec::new();
        match self.exec(pos, instr, input, output, &mut events, &mut cycle_lines) {
            Ok(()) => {}
            Err(fault) => return Err(fail(self, fault)),
        }
        match self.config.trace {
            TraceLevel::Off => {}
            TraceLevel::Cycle => self.trace.extend(cycle_lines),
            TraceLevel::Instr => {
                let p = &self.processor;
                let line = trace::instr_line(
                    pos,
                    instr.mnemonic(),
                    self.cycles - start,
                    self.cycles,
                    p.f_loaded.then(|| p.f_word()),
                    p.g_loaded.then(|| p.g_word()),
                    &events,
                );
                self.trace.push(line);
            }
        }
        self.position += 1;
        Ok(instr)
    }

    fn exec(
        &mut self,
        pos: usize,
        instr: Instruction,
        input: &mut dyn InputProvider,
        output: &mut dyn OutputSink,
        events: &mut Vec<String>,
        lines: &mut Vec<String>,
    ) -> Result<(), Fault> {
        let name = instr.mnemonic();
        match instr {
            Instruction::Load(addr) | Instruction::Store(addr) => {
                let is_load = matches!(instr, Instruction::Load(_));
                crate::memory::decode_address(addr, self.config.capacity)?;
                match (self.config.mode, is_load) {
                    (Mode::Full, true) => {
                        let w = self.memory.read(addr)?;
                        self.processor.load_operand(w);
                    }
                    (Mode::Full, false) => {
                        let w = self.current_word().ok_or(Fault::OperandNotLoaded("STORE"))?;
                        self.memory.write(addr, w)?;
                        events.push(format!("mem[{addr}]={w}"));
                    }
                    (Mode::CpuOnly, true) => self.processor.load_operand(Word24::from_bits(0)),
                    (Mode::CpuOnly, false) => {
                        self.current_word().ok_or(Fault::OperandNotLoaded("STORE"))?;
                        events.push("discarded".to_string());
                    }
                    (Mode::MemoryOnly, true) => self.interface = self.memory.read(addr)?,
                    (Mode::MemoryOnly, false) => {
                        self.memory.write(addr, self.interface)?;
                        events.push(format!("mem[{addr}]={}", self.interface));
                    }
                }
                self.cycles += 1;
                lines.push(trace::transfer_line(self.cycles, pos, name));
            }
            Instruction::Op(_) if self.config.mode == Mode::MemoryOnly => {}
            Instruction::Op(op) => {
                let mut seq = Sequencer::new(self.config.zero);
                seq.arrow_limit = self.config.arrow_limit;
                let mut st = self.processor.clone();
                match op {
                    Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Div => {
                        if !(st.f_loaded && st.g_loaded) {
                            return Err(Fault::OperandNotLoaded(op.mnemonic()));
                        }
                    }
                    Opcode::Read => {
                        let panel = input.read_panel().ok_or(Fault::NoInput)?;
                        set_panel(&mut st, panel)?;
                        events.push(format!("read {}", panel_text(&panel)));
                    }
                    Opcode::Disp => {
                        if !st.f_loaded {
                            if !st.g_loaded {
                                return Err(Fault::OperandNotLoaded("DISP"));
                            }
                            st.af = st.ag;
                            st.bf = st.bg;
                            st.sign_f = st.sign_g;
                        }
                    }
                }
                let exec = seq.execute(op, &mut st)?;
                let mut c = self.cycles;
                for r in &exec.records {
                    if r.counted {
                        c += 1;
                    }
                    lines.push(trace::cycle_line(c, pos, name, r));
                }
                self.cycles += exec.cycles;
                if exec.zero_flagged {
                    self.zero_flags += 1;
                    events.push("zero".to_string());
                }
                let (e, m, sign) = (st.ae, st.be, st.sign_result);
                match op {
                    Opcode::Disp => {
                        let shown = DisplayOutput { digits: st.display, arrow: st.arrow, negative: st.sign_f };
                        events.push(format!("disp {shown}"));
                        output.display(shown);
                    }
                    Opcode::Read => {
                        self.processor.za = st.za;
                        self.processor.lever = 0;
                        self.deposit(e, m, sign);
                    }
                    _ => {
                        let keep = self.processor.clone();
                        self.processor = st;
                        self.processor.za = keep.za;
                        self.processor.set_result(e, m, sign);
                    }
                }
                self.settle();
            }
        }
        Ok(())
    }

    /// F if it holds a number, otherwise G.
    fn current_word(&self) -> Option<Word24> {
        let p = &self.processor;
        if p.f_loaded {
            Some(p.f_word())
        } else if p.g_loaded {
            Some(p.g_word())
        } else {
            None
        }
    }

    /// A converted input follows the load discipline.
    fn deposit(&mut self, e: i32, m: ProcMantissa, sign: bool) {
        let p = &mut self.processor;
        if !p.g_loaded {
            p.ag = e;
            p.bg = m;
            p.sign_g = sign;
            p.g_loaded = true;
        } else {
            p.af = e;
            p.bf = m;
            p.sign_f = sign;
            p.f_loaded = true;
        }
    }

    /// Clears the ALU registers and control bits between instructions.
    fn settle(&mut self) {
        let p = &mut self.processor;
        p.ae = 0;
        p.be = ProcMantissa::ZERO;
        p.aa = 0;
        p.ab = 0;
        p.ba = ProcMantissa::ZERO;
        p.bb = ProcMantissa::ZERO;
        p.phase = 0;
        p.s0 = false;
        p.s1 = false;
        p.s3 = false;
        p.serial_accesses = 0;
    }
}

fn panel_text(p: &PanelInput) -> String {
    let [a, b, c, d] = p.digits;
    format!("{a}{b}{c}{d}e{}{}", p.lever, if p.negative { '-' } else { '+' })
}

/// Assembled tape plus memory image and scripted input, run to completion.
pub fn run(
    tape: Tape,
    memory: MemoryUnit,
    config: MachineConfig,
    input: &mut dyn InputProvider,
) -> Result<(Machine, Vec<DisplayOutput>), MachineError> {
    let mut m = Machine::new(tape, config).with_memory(memory);
    let mut out = CollectingOutput::default();
    m.run(input, &mut out)?;
    Ok((m, out.shown))
}

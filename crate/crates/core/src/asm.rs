//! Tape language: one instruction per line, `;` starts a comment.
//!
//! ```text
//! LOAD 1   ; first operand
//! LOAD 2
//! ADD
//! DISP
//! ```

use thiserror::Error;

use crate::machine::{Instruction, Tape};
use crate::microcode::Opcode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("line {line}: unknown mnemonic `{word}`")]
    UnknownMnemonic { line: usize, word: String },
    #[error("line {line}: {mnemonic} needs an address")]
    MissingOperand { line: usize, mnemonic: &'static str },
    #[error("line {line}: {mnemonic} takes no operand")]
    UnexpectedOperand { line: usize, mnemonic: &'static str },
    #[error("line {line}: address `{text}` outside 0..=63")]
    OperandRange { line: usize, text: String },
    #[error("line {line}: trailing text `{text}`")]
    Trailing { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal instruction byte {byte:#010b} at tape offset {offset}")]
pub struct DisasmError {
    pub offset: usize,
    pub byte: u8,
}

pub fn parse_line(text: &str, line: usize) -> Result<Option<Instruction>, AsmError> {
    let code = text.split(';').next().unwrap_or("");
    let mut words = code.split_whitespace();
    let Some(head) = words.next() else {
        return Ok(None);
    };
    let operand = words.next();
    if let Some(extra) = words.next() {
        return Err(AsmError::Trailing { line, text: extra.to_string() });
    }
    let upper = head.to_ascii_uppercase();
    let op = match upper.as_str() {
        "LOAD" | "STORE" => {
            let mnemonic = if upper == "LOAD" { "LOAD" } else { "STORE" };
            let text = operand.ok_or(AsmError::MissingOperand { line, mnemonic })?;
            let addr = text
                .parse::<u8>()
                .ok()
                .filter(|a| *a < 64)
                .ok_or_else(|| AsmError::OperandRange { line, text: text.to_string() })?;
            return Ok(Some(if mnemonic == "LOAD" { Instruction::Load(addr) } else { Instruction::Store(addr) }));
        }
        "ADD" => Opcode::Add,
        "SUB" => Opcode::Sub,
        "MUL" => Opcode::Mul,
        "DIV" => Opcode::Div,
        "READ" => Opcode::Read,
        "DISP" => Opcode::Disp,
        _ => return Err(AsmError::UnknownMnemonic { line, word: head.to_string() }),
    };
    if operand.is_some() {
        return Err(AsmError::UnexpectedOperand { line, mnemonic: op.mnemonic() });
    }
    Ok(Some(Instruction::Op(op)))
}

pub fn assemble(src: &str) -> Result<Tape, AsmError> {
    let mut prog = Vec::new();
    for (i, text) in src.lines().enumerate() {
        if let Some(instr) = parse_line(text, i + 1)? {
            prog.push(instr);
        }
    }
    Ok(Tape::from_instructions(&prog))
}

/// Canonical source: uppercase, one instruction per line.
pub fn disassemble(tape: &Tape) -> Result<String, DisasmError> {
    let mut out = String::new();
    for (offset, &byte) in tape.rows().iter().enumerate() {
        let instr = Instruction::decode(byte).ok_or(DisasmError { offset, byte })?;
        out.push_str(&instr.to_string());
        out.push('\n');
    }
    Ok(out)
}

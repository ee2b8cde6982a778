//! Emulator for Zuse's Z1: a mechanical binary floating-point machine with a
//! microcoded sequencer, 24-bit words and a punched-tape program.

pub mod alu;
pub mod asm;
pub mod datapath;
pub mod machine;
pub mod mechlogic;
pub mod memory;
pub mod microcode;
pub mod numerics;

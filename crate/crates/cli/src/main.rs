use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use z1_core::asm::{assemble, disassemble};
use z1_core::machine::{
    parse_panel_line, InputProvider, Machine, MachineConfig, Mode, OutputSink, ScriptedInput, Tape, TraceLevel,
};
use z1_core::memory::{Capacity, MemoryUnit};
use z1_core::microcode::{microprogram_table, DisplayOutput, PanelInput, ZeroPolicy};

#[derive(Parser)]
#[command(name = "z1", version, about = "Assemble, inspect and run Z1 punched tapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a .z1s source into a .z1p tape
    Asm {
        source: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the canonical source of a .z1p tape
    Disasm {
        tape: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a tape
    Run(RunArgs),
    /// Print the criterion table, one row per line
    DumpMicrocode,
    /// Print a memory image in canonical form
    DumpMem {
        #[command(flatten)]
        mem: MemArgs,
    },
}

#[derive(Args)]
struct MemArgs {
    #[arg(long, default_value_t = 64, value_parser = parse_words)]
    mem_words: usize,
    /// Memory image to start from
    #[arg(long)]
    load_mem: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    tape: PathBuf,
    #[command(flatten)]
    mem: MemArgs,
    /// Detach memory: loads deliver the zero word, stores are dropped
    #[arg(long, conflicts_with = "memory_only")]
    cpu_only: bool,
    /// Detach the processor: only LOAD/STORE act
    #[arg(long)]
    memory_only: bool,
    #[arg(long, conflicts_with = "permissive_zero")]
    strict_zero: bool,
    /// Let zero mantissas through and flag them in the trace
    #[arg(long)]
    permissive_zero: bool,
    #[arg(long, value_enum, default_value_t = TraceArg::Off)]
    trace: TraceArg,
    /// Write the final memory image here (`-` for stdout)
    #[arg(long)]
    dump_mem: Option<PathBuf>,
    /// READ input lines `digits=DDDD exp=E sign=+|-`; prompts on stdin otherwise
    #[arg(long)]
    input_script: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceArg {
    Instr,
    Cycle,
    Off,
}

fn parse_words(s: &str) -> Result<usize, String> {
    match s {
        "16" => Ok(16),
        "64" => Ok(64),
        _ => Err("memory size must be 16 or 64".into()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        _ => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn load_tape(path: &Path) -> Result<Tape> {
    Tape::from_z1p(&read(path)?).with_context(|| format!("{} is not a tape", path.display()))
}

fn memory(args: &MemArgs) -> Result<MemoryUnit> {
    let cap = Capacity::from_words(args.mem_words).expect("validated by parser");
    let mut mem = MemoryUnit::new(cap);
    if let Some(p) = &args.load_mem {
        let text = String::from_utf8(read(p)?).context("memory image is not text")?;
        mem.load_dump(&text).with_context(|| format!("loading {}", p.display()))?;
    }
    Ok(mem)
}

struct Prompt;

impl InputProvider for Prompt {
    fn read_panel(&mut self) -> Option<PanelInput> {
        let stdin = io::stdin();
        loop {
            eprint!("READ digits=DDDD exp=E sign=+|- > ");
            let _ = io::stderr().flush();
            let mut line = String::new();
            if stdin.lock().read_line(&mut line).ok()? == 0 {
                return None;
            }
            match parse_panel_line(line.trim()) {
                Ok(p) => return Some(p),
                Err(e) => eprintln!("{e}"),
            }
        }
    }
}

struct Stdout;

impl OutputSink for Stdout {
    fn display(&mut self, out: DisplayOutput) {
        println!("{out}");
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let tape = load_tape(&args.tape)?;
    let mode = match (args.cpu_only, args.memory_only) {
        (true, _) => Mode::CpuOnly,
        (_, true) => Mode::MemoryOnly,
        _ => Mode::Full,
    };
    let config = MachineConfig {
        mode,
        zero: if args.permissive_zero { ZeroPolicy::Permissive } else { ZeroPolicy::Strict },
        trace: match args.trace {
            TraceArg::Instr => TraceLevel::Instr,
            TraceArg::Cycle => TraceLevel::Cycle,
            TraceArg::Off => TraceLevel::Off,
        },
        ..Default::default()
    };
    let mut machine = Machine::new(tape, config).with_memory(memory(&args.mem)?);
    let mut scripted;
    let mut prompt = Prompt;
    let input: &mut dyn InputProvider = match &args.input_script {
        Some(p) => {
            let text = String::from_utf8(read(p)?).context("input script is not text")?;
            scripted = ScriptedInput::parse(&text).map_err(anyhow::Error::msg).with_context(|| p.display().to_string())?;
            &mut scripted
        }
        None => &mut prompt,
    };
    let result = machine.run(input, &mut Stdout);
    for line in machine.trace() {
        eprintln!("{line}");
    }
    result?;
    eprintln!("{} cycles", machine.cycles());
    if let Some(p) = &args.dump_mem {
        write_out(Some(p), machine.memory.dump().as_bytes())?;
    }
    Ok(())
}

fn main_inner() -> Result<()> {
    match Cli::parse().command {
        Command::Asm { source, output } => {
            let text = String::from_utf8(read(&source)?).context("source is not text")?;
            let tape = assemble(&text).with_context(|| source.display().to_string())?;
            let out = output.unwrap_or_else(|| source.with_extension("z1p"));
            write_out(Some(&out), &tape.to_z1p())
        }
        Command::Disasm { tape, output } => {
            let src = disassemble(&load_tape(&tape)?)?;
            write_out(output.as_deref(), src.as_bytes())
        }
        Command::Run(args) => cmd_run(&args),
        Command::DumpMicrocode => write_out(None, microprogram_table().listing().as_bytes()),
        Command::DumpMem { mem } => write_out(None, memory(&mem)?.dump().as_bytes()),
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}


use std::fmt;

use thiserror::Error;

use crate::memsys::Width;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MemError {
    #[error("misaligned {width} access at {addr:#010x}")]
    Misaligned { addr: u32, width: Width },
    #[error("access at {addr:#010x} is outside mapped memory")]
    OutOfRange { addr: u32 },
    #[error("console at {addr:#010x} only accepts byte writes")]
    Console { addr: u32 },
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image of {words} words does not fit in {capacity} words")]
    TooLarge { words: usize, capacity: usize },
    #[error("image origin {0:#010x} is not word aligned")]
    MisalignedOrigin(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("raw image length {0} is not a multiple of 4")]
    RawLength(usize),
    #[error("memory size {0} must be a power of two of at least 4 bytes")]
    BadSize(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a simulator stopped on an instruction without committing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    IllegalInstruction { word: u32 },
    /// The fetch address is outside instruction memory.
    Fetch,
    /// A taken control transfer to an address that is not word aligned.
    MisalignedTarget { target: u32 },
    Memory(MemError),
}

/// A simulation fault at a given instruction. Both simulators must report
/// identical faults for the same program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub struct Fault {
    pub pc: u32,
    pub kind: FaultKind,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FaultKind::IllegalInstruction { word } => {
                write!(f, "illegal instruction {word:#010x} at pc {:#010x}", self.pc)
            }
            FaultKind::Fetch => write!(f, "instruction fetch outside memory at pc {:#010x}", self.pc),
            FaultKind::MisalignedTarget { target } => {
                write!(f, "misaligned jump target {target:#010x} at pc {:#010x}", self.pc)
            }
            FaultKind::Memory(e) => write!(f, "{e} at pc {:#010x}", self.pc),
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// ECALL or EBREAK committed.
    Halted,
    Fault(Fault),
    /// Step or cycle budget exhausted before the program halted.
    BudgetExhausted,
}

impl Exit {
    pub fn is_halted(&self) -> bool {
        matches!(self, Exit::Halted)
    }
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exit::Halted => f.write_str("halted"),
            Exit::Fault(fault) => write!(f, "fault: {fault}"),
            Exit::BudgetExhausted => f.write_str("budget exhausted"),
        }
    }
}

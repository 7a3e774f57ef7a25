//! Instruction encoding and a minimal label-resolving assembler.
//!
//! Enough to hand-write the bundled microbenchmarks and test fixtures; not a
//! general-purpose assembler.

use std::collections::HashMap;

use thiserror::Error;

use crate::isa::{DecodedInstr, Format, Kind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmError {
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("offset {offset} to `{label}` out of range for {kind}")]
    OutOfRange { kind: Kind, label: String, offset: i64 },
}

/// Encodes one instruction from its fields. `imm` is interpreted per format;
/// shift-immediates take the shift amount.
pub fn encode(kind: Kind, rd: u8, rs1: u8, rs2: u8, imm: i32) -> u32 {
    use Kind::*;
    let (rd, rs1, rs2) = (rd as u32 & 31, rs1 as u32 & 31, rs2 as u32 & 31);
    let imm = imm as u32;
    let (opcode, f3, f7): (u32, u32, u32) = match kind {
        Lui => (0x37, 0, 0),
        Auipc => (0x17, 0, 0),
        Jal => (0x6f, 0, 0),
        Jalr => (0x67, 0, 0),
        Beq => (0x63, 0, 0),
        Bne => (0x63, 1, 0),
        Blt => (0x63, 4, 0),
        Bge => (0x63, 5, 0),
        Bltu => (0x63, 6, 0),
        Bgeu => (0x63, 7, 0),
        Lb => (0x03, 0, 0),
        Lh => (0x03, 1, 0),
        Lw => (0x03, 2, 0),
        Lbu => (0x03, 4, 0),
        Lhu => (0x03, 5, 0),
        Sb => (0x23, 0, 0),
        Sh => (0x23, 1, 0),
        Sw => (0x23, 2, 0),
        Addi => (0x13, 0, 0),
        Slti => (0x13, 2, 0),
        Sltiu => (0x13, 3, 0),
        Xori => (0x13, 4, 0),
        Ori => (0x13, 6, 0),
        Andi => (0x13, 7, 0),
        Slli => (0x13, 1, 0x00),
        Srli => (0x13, 5, 0x00),
        Srai => (0x13, 5, 0x20),
        Add => (0x33, 0, 0x00),
        Sub => (0x33, 0, 0x20),
        Sll => (0x33, 1, 0x00),
        Slt => (0x33, 2, 0x00),
        Sltu => (0x33, 3, 0x00),
        Xor => (0x33, 4, 0x00),
        Srl => (0x33, 5, 0x00),
        Sra => (0x33, 5, 0x20),
        Or => (0x33, 6, 0x00),
        And => (0x33, 7, 0x00),
        Fence => (0x0f, 0, 0),
        Ecall => return 0x0000_0073,
        Ebreak => return 0x0010_0073,
        Illegal => return 0xffff_ffff,
    };
    if matches!(kind, Slli | Srli | Srai) {
        return (f7 << 25) | ((imm & 31) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opcode;
    }
    match kind.format() {
        Format::R => (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opcode,
        Format::I => ((imm & 0xfff) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opcode,
        Format::S => {
            (((imm >> 5) & 0x7f) << 25)
                | (rs2 << 20)
                | (rs1 << 15)
                | (f3 << 12)
                | ((imm & 0x1f) << 7)
                | opcode
        }
        Format::B => {
            (((imm >> 12) & 1) << 31)
                | (((imm >> 5) & 0x3f) << 25)
                | (rs2 << 20)
                | (rs1 << 15)
                | (f3 << 12)
                | (((imm >> 1) & 0xf) << 8)
                | (((imm >> 11) & 1) << 7)
                | opcode
        }
        Format::U => (imm & 0xffff_f000) | (rd << 7) | opcode,
        Format::J => {
            (((imm >> 20) & 1) << 31)
                | (((imm >> 1) & 0x3ff) << 21)
                | (((imm >> 11) & 1) << 20)
                | (((imm >> 12) & 0xff) << 12)
                | (rd << 7)
                | opcode
        }
    }
}

/// Re-encodes a decoded instruction.
pub fn reencode(d: &DecodedInstr) -> u32 {
    encode(d.kind, d.rd, d.rs1, d.rs2, d.imm as i32)
}

enum Item {
    Word(u32),
    Branch { kind: Kind, rs1: u8, rs2: u8, label: String },
    Jal { rd: u8, label: String },
    LoadAddr { rd: u8, label: String },
}

/// Two-pass assembler over a flat instruction stream starting at `origin`.
pub struct Asm {
    origin: u32,
    items: Vec<Item>,
    labels: HashMap<String, u32>,
    duplicate: Option<String>,
}

macro_rules! rtype {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Self {
            self.word(encode(Kind::$kind, rd, rs1, rs2, 0))
        })*
    };
}

macro_rules! itype {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(&mut self, rd: u8, rs1: u8, imm: i32) -> &mut Self {
            self.word(encode(Kind::$kind, rd, rs1, 0, imm))
        })*
    };
}

macro_rules! load {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(&mut self, rd: u8, offset: i32, base: u8) -> &mut Self {
            self.word(encode(Kind::$kind, rd, base, 0, offset))
        })*
    };
}

macro_rules! store {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(&mut self, src: u8, offset: i32, base: u8) -> &mut Self {
            self.word(encode(Kind::$kind, 0, base, src, offset))
        })*
    };
}

macro_rules! branch {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(&mut self, rs1: u8, rs2: u8, label: &str) -> &mut Self {
            self.items.push(Item::Branch { kind: Kind::$kind, rs1, rs2, label: label.into() });
            self
        })*
    };
}

impl Asm {
    pub fn new(origin: u32) -> Self {
        Asm { origin, items: Vec::new(), labels: HashMap::new(), duplicate: None }
    }

    /// Address of the next emitted word.
    pub fn here(&self) -> u32 {
        self.origin + 4 * self.words_so_far()
    }

    fn words_so_far(&self) -> u32 {
        self.items
            .iter()
            .map(|i| if matches!(i, Item::LoadAddr { .. }) { 2 } else { 1 })
            .sum()
    }

    pub fn label(&mut self, name: &str) -> &mut Self {
        let at = self.here();
        if self.labels.insert(name.to_string(), at).is_some() && self.duplicate.is_none() {
            self.duplicate = Some(name.to_string());
        }
        self
    }

    pub fn word(&mut self, w: u32) -> &mut Self {
        self.items.push(Item::Word(w));
        self
    }

    /// Pads with NOPs up to `addr`.
    pub fn align_to(&mut self, addr: u32) -> &mut Self {
        while self.here() < addr {
            self.nop();
        }
        self
    }

    rtype! {
        add => Add, sub => Sub, sll => Sll, slt => Slt, sltu => Sltu,
        xor => Xor, srl => Srl, sra => Sra, or => Or, and => And,
    }

    itype! {
        addi => Addi, slti => Slti, sltiu => Sltiu, xori => Xori, ori => Ori, andi => Andi,
        slli => Slli, srli => Srli, srai => Srai, jalr => Jalr,
    }

    load! { lb => Lb, lh => Lh, lw => Lw, lbu => Lbu, lhu => Lhu }

    store! { sb => Sb, sh => Sh, sw => Sw }

    branch! { beq => Beq, bne => Bne, blt => Blt, bge => Bge, bltu => Bltu, bgeu => Bgeu }

    pub fn lui(&mut self, rd: u8, imm20: u32) -> &mut Self {
        self.word(encode(Kind::Lui, rd, 0, 0, (imm20 << 12) as i32))
    }

    pub fn auipc(&mut self, rd: u8, imm20: u32) -> &mut Self {
        self.word(encode(Kind::Auipc, rd, 0, 0, (imm20 << 12) as i32))
    }

    pub fn jal(&mut self, rd: u8, label: &str) -> &mut Self {
        self.items.push(Item::Jal { rd, label: label.into() });
        self
    }

    pub fn j(&mut self, label: &str) -> &mut Self {
        self.jal(0, label)
    }

    pub fn call(&mut self, label: &str) -> &mut Self {
        self.jal(1, label)
    }

    pub fn ret(&mut self) -> &mut Self {
        self.jalr(0, 1, 0)
    }

    pub fn nop(&mut self) -> &mut Self {
        self.word(crate::isa::NOP)
    }

    pub fn mv(&mut self, rd: u8, rs: u8) -> &mut Self {
        self.addi(rd, rs, 0)
    }

    pub fn ecall(&mut self) -> &mut Self {
        self.word(encode(Kind::Ecall, 0, 0, 0, 0))
    }

    pub fn ebreak(&mut self) -> &mut Self {
        self.word(0x0010_0073)
    }

    pub fn fence(&mut self) -> &mut Self {
        self.word(encode(Kind::Fence, 0, 0, 0, 0x0ff))
    }

    /// Loads a 32-bit constant in one or two instructions.
    pub fn li(&mut self, rd: u8, value: u32) -> &mut Self {
        let v = value as i32;
        if (-2048..2048).contains(&v) {
            return self.addi(rd, 0, v);
        }
        let lo = ((value & 0xfff) as i32) << 20 >> 20;
        let hi = value.wrapping_sub(lo as u32) >> 12;
        self.lui(rd, hi);
        if lo != 0 {
            self.addi(rd, rd, lo);
        }
        self
    }

    /// Loads the absolute address of a label (always two instructions).
    pub fn la(&mut self, rd: u8, label: &str) -> &mut Self {
        self.items.push(Item::LoadAddr { rd, label: label.into() });
        self
    }

    pub fn finish(&self) -> Result<Vec<u32>, AsmError> {
        if let Some(name) = &self.duplicate {
            return Err(AsmError::DuplicateLabel(name.clone()));
        }
        let mut out = Vec::with_capacity(self.items.len());
        let lookup = |label: &String| {
            self.labels.get(label).copied().ok_or_else(|| AsmError::UndefinedLabel(label.clone()))
        };
        for item in &self.items {
            let pc = self.origin + 4 * out.len() as u32;
            match item {
                Item::Word(w) => out.push(*w),
                Item::Branch { kind, rs1, rs2, label } => {
                    let offset = lookup(label)? as i64 - pc as i64;
                    if !(-4096..4096).contains(&offset) {
                        return Err(AsmError::OutOfRange { kind: *kind, label: label.clone(), offset });
                    }
                    out.push(encode(*kind, 0, *rs1, *rs2, offset as i32));
                }
                Item::Jal { rd, label } => {
                    let offset = lookup(label)? as i64 - pc as i64;
                    if !(-(1 << 20)..(1 << 20)).contains(&offset) {
                        return Err(AsmError::OutOfRange { kind: Kind::Jal, label: label.clone(), offset });
                    }
                    out.push(encode(Kind::Jal, *rd, 0, 0, offset as i32));
                }
                Item::LoadAddr { rd, label } => {
                    let addr = lookup(label)?;
                    let lo = ((addr & 0xfff) as i32) << 20 >> 20;
                    let hi = addr.wrapping_sub(lo as u32);
                    out.push(encode(Kind::Lui, *rd, 0, 0, hi as i32));
                    out.push(encode(Kind::Addi, *rd, *rd, 0, lo));
                }
            }
        }
        Ok(out)
    }
}

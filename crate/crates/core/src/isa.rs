//! RV32I instruction decoding.
//!
//! [`decode`] is the full decoder used by both simulators. [`decode_if`] is the
//! reduced fetch-stage decoder that only recovers what the early load-use
//! detector needs. The two are written independently and are property-tested
//! against each other.

use std::fmt;

/// Every RV32I base operation plus FENCE/ECALL/EBREAK, and a marker for
/// encodings outside that set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Fence,
    Ecall,
    Ebreak,
    Illegal,
}

impl Kind {
    pub const ALL: [Kind; 41] = [
        Kind::Lui,
        Kind::Auipc,
        Kind::Jal,
        Kind::Jalr,
        Kind::Beq,
        Kind::Bne,
        Kind::Blt,
        Kind::Bge,
        Kind::Bltu,
        Kind::Bgeu,
        Kind::Lb,
        Kind::Lh,
        Kind::Lw,
        Kind::Lbu,
        Kind::Lhu,
        Kind::Sb,
        Kind::Sh,
        Kind::Sw,
        Kind::Addi,
        Kind::Slti,
        Kind::Sltiu,
        Kind::Xori,
        Kind::Ori,
        Kind::Andi,
        Kind::Slli,
        Kind::Srli,
        Kind::Srai,
        Kind::Add,
        Kind::Sub,
        Kind::Sll,
        Kind::Slt,
        Kind::Sltu,
        Kind::Xor,
        Kind::Srl,
        Kind::Sra,
        Kind::Or,
        Kind::And,
        Kind::Fence,
        Kind::Ecall,
        Kind::Ebreak,
        Kind::Illegal,
    ];

    pub fn format(self) -> Format {
        use Kind::*;
        match self {
            Lui | Auipc => Format::U,
            Jal => Format::J,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => Format::B,
            Sb | Sh | Sw => Format::S,
            Add | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And => Format::R,
            Jalr | Lb | Lh | Lw | Lbu | Lhu | Addi | Slti | Sltiu | Xori | Ori | Andi | Slli
            | Srli | Srai | Fence | Ecall | Ebreak | Illegal => Format::I,
        }
    }

    pub fn attrs(self) -> Attrs {
        use Kind::*;
        let format = self.format();
        let is_load = matches!(self, Lb | Lh | Lw | Lbu | Lhu);
        let is_store = matches!(self, Sb | Sh | Sw);
        let is_cond_branch = format == Format::B;
        let is_jump = matches!(self, Jal | Jalr);
        let special = matches!(self, Fence | Ecall | Ebreak | Illegal);
        Attrs {
            reads_rs1: !special && !matches!(format, Format::U | Format::J),
            reads_rs2: matches!(format, Format::R | Format::S | Format::B),
            writes_rd: !special && matches!(format, Format::R | Format::I | Format::U | Format::J),
            is_load,
            is_store,
            is_cond_branch,
            is_jump,
        }
    }

    /// ECALL and EBREAK stop both simulators.
    pub fn is_halt(self) -> bool {
        matches!(self, Kind::Ecall | Kind::Ebreak)
    }

    pub fn is_control(self) -> bool {
        let a = self.attrs();
        a.is_cond_branch || a.is_jump
    }

    pub fn mnemonic(self) -> &'static str {
        use Kind::*;
        match self {
            Lui => "lui",
            Auipc => "auipc",
            Jal => "jal",
            Jalr => "jalr",
            Beq => "beq",
            Bne => "bne",
            Blt => "blt",
            Bge => "bge",
            Bltu => "bltu",
            Bgeu => "bgeu",
            Lb => "lb",
            Lh => "lh",
            Lw => "lw",
            Lbu => "lbu",
            Lhu => "lhu",
            Sb => "sb",
            Sh => "sh",
            Sw => "sw",
            Addi => "addi",
            Slti => "slti",
            Sltiu => "sltiu",
            Xori => "xori",
            Ori => "ori",
            Andi => "andi",
            Slli => "slli",
            Srli => "srli",
            Srai => "srai",
            Add => "add",
            Sub => "sub",
            Sll => "sll",
            Slt => "slt",
            Sltu => "sltu",
            Xor => "xor",
            Srl => "srl",
            Sra => "sra",
            Or => "or",
            And => "and",
            Fence => "fence",
            Ecall => "ecall",
            Ebreak => "ebreak",
            Illegal => "illegal",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Kind> {
        Kind::ALL.iter().copied().find(|k| k.mnemonic() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    R,
    I,
    S,
    B,
    U,
    J,
}

/// Control attributes derived from the instruction kind alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Attrs {
    pub reads_rs1: bool,
    pub reads_rs2: bool,
    pub writes_rd: bool,
    pub is_load: bool,
    pub is_store: bool,
    pub is_cond_branch: bool,
    pub is_jump: bool,
}

/// A decoded instruction. Register fields the format does not use are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedInstr {
    pub kind: Kind,
    pub format: Format,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    /// Sign-extended immediate. Shift-immediates hold only the shift amount.
    pub imm: u32,
    pub raw: u32,
    pub attrs: Attrs,
}

pub const NOP: u32 = 0x0000_0013;

impl DecodedInstr {
    fn new(kind: Kind, raw: u32, rd: u32, rs1: u32, rs2: u32, imm: u32) -> Self {
        DecodedInstr {
            kind,
            format: kind.format(),
            rd: rd as u8,
            rs1: rs1 as u8,
            rs2: rs2 as u8,
            imm,
            raw,
            attrs: kind.attrs(),
        }
    }

    fn illegal(raw: u32) -> Self {
        Self::new(Kind::Illegal, raw, 0, 0, 0, 0)
    }

    /// Destination register if the instruction actually writes one (never x0).
    pub fn dest(&self) -> Option<u8> {
        (self.attrs.writes_rd && self.rd != 0).then_some(self.rd)
    }
}

impl fmt::Display for DecodedInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let imm = self.imm as i32;
        match self.format {
            _ if matches!(self.kind, Kind::Ecall | Kind::Ebreak | Kind::Fence) => {
                write!(f, "{}", self.kind)
            }
            _ if self.kind == Kind::Illegal => write!(f, "illegal {:#010x}", self.raw),
            Format::R => write!(f, "{} x{}, x{}, x{}", self.kind, self.rd, self.rs1, self.rs2),
            Format::I if self.attrs.is_load || self.kind == Kind::Jalr => {
                write!(f, "{} x{}, {}(x{})", self.kind, self.rd, imm, self.rs1)
            }
            Format::I => write!(f, "{} x{}, x{}, {}", self.kind, self.rd, self.rs1, imm),
            Format::S => write!(f, "{} x{}, {}(x{})", self.kind, self.rs2, imm, self.rs1),
            Format::B => write!(f, "{} x{}, x{}, {}", self.kind, self.rs1, self.rs2, imm),
            Format::U => write!(f, "{} x{}, {:#x}", self.kind, self.rd, self.imm >> 12),
            Format::J => write!(f, "{} x{}, {}", self.kind, self.rd, imm),
        }
    }
}

const OP_LUI: u32 = 0b011_0111;
const OP_AUIPC: u32 = 0b001_0111;
const OP_JAL: u32 = 0b110_1111;
const OP_JALR: u32 = 0b110_0111;
const OP_BRANCH: u32 = 0b110_0011;
const OP_LOAD: u32 = 0b000_0011;
const OP_STORE: u32 = 0b010_0011;
const OP_IMM: u32 = 0b001_0011;
const OP_REG: u32 = 0b011_0011;
const OP_FENCE: u32 = 0b000_1111;
const OP_SYSTEM: u32 = 0b111_0011;

fn imm_i(w: u32) -> u32 {
    ((w as i32) >> 20) as u32
}

fn imm_s(w: u32) -> u32 {
    ((((w as i32) >> 25) << 5) as u32) | ((w >> 7) & 0x1f)
}

fn imm_b(w: u32) -> u32 {
    ((((w as i32) >> 31) << 12) as u32)
        | (((w >> 7) & 1) << 11)
        | (((w >> 25) & 0x3f) << 5)
        | (((w >> 8) & 0xf) << 1)
}

fn imm_u(w: u32) -> u32 {
    w & 0xffff_f000
}

fn imm_j(w: u32) -> u32 {
    ((((w as i32) >> 31) << 20) as u32)
        | (w & 0x000f_f000)
        | (((w >> 20) & 1) << 11)
        | (((w >> 21) & 0x3ff) << 1)
}

/// Decodes one instruction word. Total: unrecognized encodings come back as
/// [`Kind::Illegal`] with every register field zero.
pub fn decode(w: u32) -> DecodedInstr {
    use Kind::*;
    let opcode = w & 0x7f;
    let rd = (w >> 7) & 0x1f;
    let funct3 = (w >> 12) & 0x7;
    let rs1 = (w >> 15) & 0x1f;
    let rs2 = (w >> 20) & 0x1f;
    let funct7 = w >> 25;

    let kind = match opcode {
        OP_LUI => Lui,
        OP_AUIPC => Auipc,
        OP_JAL => Jal,
        OP_JALR if funct3 == 0 => Jalr,
        OP_BRANCH => match funct3 {
            0 => Beq,
            1 => Bne,
            4 => Blt,
            5 => Bge,
            6 => Bltu,
            7 => Bgeu,
            _ => Illegal,
        },
        OP_LOAD => match funct3 {
            0 => Lb,
            1 => Lh,
            2 => Lw,
            4 => Lbu,
            5 => Lhu,
            _ => Illegal,
        },
        OP_STORE => match funct3 {
            0 => Sb,
            1 => Sh,
            2 => Sw,
            _ => Illegal,
        },
        OP_IMM => match (funct3, funct7) {
            (0, _) => Addi,
            (2, _) => Slti,
            (3, _) => Sltiu,
            (4, _) => Xori,
            (6, _) => Ori,
            (7, _) => Andi,
            (1, 0x00) => Slli,
            (5, 0x00) => Srli,
            (5, 0x20) => Srai,
            _ => Illegal,
        },
        OP_REG => match (funct7, funct3) {
            (0x00, 0) => Add,
            (0x20, 0) => Sub,
            (0x00, 1) => Sll,
            (0x00, 2) => Slt,
            (0x00, 3) => Sltu,
            (0x00, 4) => Xor,
            (0x00, 5) => Srl,
            (0x20, 5) => Sra,
            (0x00, 6) => Or,
            (0x00, 7) => And,
            _ => Illegal,
        },
        OP_FENCE if funct3 == 0 => Fence,
        OP_SYSTEM => match w {
            0x0000_0073 => Ecall,
            0x0010_0073 => Ebreak,
            _ => Illegal,
        },
        _ => Illegal,
    };

    match kind.format() {
        _ if kind == Illegal => DecodedInstr::illegal(w),
        _ if matches!(kind, Ecall | Ebreak) => DecodedInstr::new(kind, w, 0, 0, 0, 0),
        _ if kind == Fence => DecodedInstr::new(kind, w, 0, 0, 0, imm_i(w)),
        _ if matches!(kind, Slli | Srli | Srai) => DecodedInstr::new(kind, w, rd, rs1, 0, rs2),
        Format::R => DecodedInstr::new(kind, w, rd, rs1, rs2, 0),
        Format::I => DecodedInstr::new(kind, w, rd, rs1, 0, imm_i(w)),
        Format::S => DecodedInstr::new(kind, w, 0, rs1, rs2, imm_s(w)),
        Format::B => DecodedInstr::new(kind, w, 0, rs1, rs2, imm_b(w)),
        Format::U => DecodedInstr::new(kind, w, rd, 0, 0, imm_u(w)),
        Format::J => DecodedInstr::new(kind, w, rd, 0, 0, imm_j(w)),
    }
}

/// The fields recovered by the fetch-stage partial decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IfDecode {
    pub rs1: u8,
    pub rs2: u8,
    pub rd: u8,
    pub writes_rd: bool,
    pub is_load: bool,
    pub is_store: bool,
}

impl IfDecode {
    /// Whether `reg` is read as a source operand. Always false for x0.
    pub fn reads(&self, reg: u8) -> bool {
        // Unused source fields are zeroed, so a nonzero match implies a real read.
        reg != 0 && (self.rs1 == reg || self.rs2 == reg)
    }
}

/// Fetch-stage partial decode: register indices plus the register-file and
/// data-memory write enables.
pub fn decode_if(w: u32) -> IfDecode {
    let opcode = w & 0x7f;
    let f3 = (w >> 12) & 7;
    let f7 = w >> 25;
    let rd = ((w >> 7) & 0x1f) as u8;
    let rs1 = ((w >> 15) & 0x1f) as u8;
    let rs2 = ((w >> 20) & 0x1f) as u8;

    // (uses rs1, uses rs2, writes rd, load, store), or None when illegal.
    let class = match opcode {
        OP_LUI | OP_AUIPC | OP_JAL => Some((false, false, true, false, false)),
        OP_JALR => (f3 == 0).then_some((true, false, true, false, false)),
        OP_BRANCH => (f3 != 2 && f3 != 3).then_some((true, true, false, false, false)),
        OP_LOAD => (f3 != 3 && f3 < 6).then_some((true, false, true, true, false)),
        OP_STORE => (f3 < 3).then_some((true, true, false, false, true)),
        OP_IMM => {
            let ok = match f3 {
                1 => f7 == 0,
                5 => f7 & !0x20 == 0,
                _ => true,
            };
            ok.then_some((true, false, true, false, false))
        }
        OP_REG => {
            let ok = f7 == 0 || (f7 == 0x20 && (f3 == 0 || f3 == 5));
            ok.then_some((true, true, true, false, false))
        }
        _ => None,
    };
    match class {
        Some((u1, u2, wr, ld, st)) => IfDecode {
            rs1: if u1 { rs1 } else { 0 },
            rs2: if u2 { rs2 } else { 0 },
            rd: if wr { rd } else { 0 },
            writes_rd: wr,
            is_load: ld,
            is_store: st,
        },
        // FENCE, SYSTEM and illegal encodings touch no registers.
        None => IfDecode::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_nop() {
        let d = decode(0x0000_0013);
        assert_eq!(d.kind, Kind::Addi);
        assert_eq!((d.rd, d.rs1, d.imm), (0, 0, 0));
        assert_eq!(d.format, Format::I);
        assert_eq!(d.dest(), None);
    }

    #[test]
    fn beq_example() {
        let d = decode(0x00B5_0463);
        assert_eq!(d.kind, Kind::Beq);
        assert_eq!((d.rs1, d.rs2, d.imm as i32), (10, 11, 8));
        assert_eq!(d.rd, 0);
    }

    #[test]
    fn all_ones_is_illegal() {
        let d = decode(0xFFFF_FFFF);
        assert_eq!(d.kind, Kind::Illegal);
        assert_eq!(d.attrs, Attrs::default());
    }

    #[test]
    fn csr_and_m_extension_are_illegal() {
        // csrrw x1, mstatus, x2
        assert_eq!(decode(0x3001_10f3).kind, Kind::Illegal);
        // mul x1, x2, x3
        assert_eq!(decode(0x0231_00b3).kind, Kind::Illegal);
        // fence.i
        assert_eq!(decode(0x0000_100f).kind, Kind::Illegal);
    }

    #[test]
    fn system_halts() {
        assert_eq!(decode(0x0000_0073).kind, Kind::Ecall);
        assert_eq!(decode(0x0010_0073).kind, Kind::Ebreak);
        assert!(Kind::Ecall.is_halt());
    }

    #[test]
    fn load_attr_is_exactly_the_five_loads() {
        for k in Kind::ALL {
            let expected = matches!(k, Kind::Lb | Kind::Lbu | Kind::Lh | Kind::Lhu | Kind::Lw);
            assert_eq!(k.attrs().is_load, expected, "{k}");
        }
    }

    #[test]
    fn decode_if_examples() {
        assert_eq!(
            decode_if(0x13),
            IfDecode {
                rs1: 0,
                rs2: 0,
                writes_rd: true,
                rd: 0,
                is_load: false,
                is_store: false
            }
        );
        // lw x5, 12(x7)
        let lw = 0x00c3_a283;
        assert_eq!(decode(lw).kind, Kind::Lw);
        assert!(decode_if(lw).is_load);
    }

    fn agree(w: u32) {
        let full = decode(w);
        let part = decode_if(w);
        assert_eq!(part.rs1, full.rs1, "rs1 {w:#010x}");
        assert_eq!(part.rs2, full.rs2, "rs2 {w:#010x}");
        assert_eq!(part.rd, full.rd, "rd {w:#010x}");
        assert_eq!(part.writes_rd, full.attrs.writes_rd, "writes_rd {w:#010x}");
        assert_eq!(part.is_load, full.attrs.is_load, "is_load {w:#010x}");
        assert_eq!(part.is_store, full.attrs.is_store, "is_store {w:#010x}");
    }

    #[test]
    fn decode_if_agrees_on_every_opcode_funct_combination() {
        // Sweep opcode x funct3 x funct7 with fixed register fields.
        for opcode in 0..128u32 {
            for f3 in 0..8u32 {
                for f7 in 0..128u32 {
                    agree((f7 << 25) | (7 << 20) | (9 << 15) | (f3 << 12) | (5 << 7) | opcode);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20_000))]

        #[test]
        fn decode_if_agrees_with_decode(w in any::<u32>()) {
            agree(w);
        }

        #[test]
        fn branch_and_jump_immediates_are_even(w in any::<u32>()) {
            let d = decode(w);
            match d.format {
                Format::B => {
                    prop_assert_eq!(d.imm & 1, 0);
                    let v = d.imm as i32;
                    prop_assert!((-4096..4096).contains(&v));
                }
                Format::J => {
                    prop_assert_eq!(d.imm & 1, 0);
                    let v = d.imm as i32;
                    prop_assert!((-(1 << 20)..(1 << 20)).contains(&v));
                }
                _ => {}
            }
        }

        #[test]
        fn decode_is_deterministic(w in any::<u32>()) {
            prop_assert_eq!(decode(w), decode(w));
        }
    }
}

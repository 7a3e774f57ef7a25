//! Combinational datapath units, each in two equivalent forms.
//!
//! The "mux" forms select a result by case analysis on a binary operation
//! code. The "one-hot" forms compute every candidate up front, gate each one
//! to zero unless its select bit is set, and merge all gated candidates with
//! exclusive OR. With exactly one select bit set the merge yields the single
//! live candidate, so both forms compute the same function.

use crate::isa::{DecodedInstr, Kind};

/// Which implementation of a datapath unit to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Impl {
    #[default]
    Mux,
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum AluOp {
    Add = 0,
    Sub = 1,
    Sll = 2,
    Slt = 3,
    Sltu = 4,
    Xor = 5,
    Srl = 6,
    Sra = 7,
    Or = 8,
    And = 9,
}

impl AluOp {
    pub const ALL: [AluOp; 10] = [
        AluOp::Add,
        AluOp::Sub,
        AluOp::Sll,
        AluOp::Slt,
        AluOp::Sltu,
        AluOp::Xor,
        AluOp::Srl,
        AluOp::Sra,
        AluOp::Or,
        AluOp::And,
    ];

    /// 4-bit binary operation code.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<AluOp> {
        AluOp::ALL.get(code as usize).copied()
    }

    pub fn one_hot(self) -> AluOneHot {
        AluOneHot(1 << self.code())
    }

    /// ALU operation for register-register and register-immediate arithmetic.
    pub fn for_kind(kind: Kind) -> Option<AluOp> {
        use Kind::*;
        Some(match kind {
            Add | Addi => AluOp::Add,
            Sub => AluOp::Sub,
            Sll | Slli => AluOp::Sll,
            Slt | Slti => AluOp::Slt,
            Sltu | Sltiu => AluOp::Sltu,
            Xor | Xori => AluOp::Xor,
            Srl | Srli => AluOp::Srl,
            Sra | Srai => AluOp::Sra,
            Or | Ori => AluOp::Or,
            And | Andi => AluOp::And,
            _ => return None,
        })
    }
}

/// 10-bit one-hot ALU select vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AluOneHot(u16);

impl AluOneHot {
    /// Accepts only vectors with exactly one of the ten low bits set.
    pub fn new(bits: u16) -> Option<Self> {
        (bits.count_ones() == 1 && bits < (1 << 10)).then_some(AluOneHot(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn to_op(self) -> AluOp {
        AluOp::from_code(self.0.trailing_zeros() as u8).expect("one-hot invariant")
    }
}

pub fn alu_mux(a: u32, b: u32, op: AluOp) -> u32 {
    let shamt = b & 31;
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Sll => a << shamt,
        AluOp::Slt => ((a as i32) < (b as i32)) as u32,
        AluOp::Sltu => (a < b) as u32,
        AluOp::Xor => a ^ b,
        AluOp::Srl => a >> shamt,
        AluOp::Sra => ((a as i32) >> shamt) as u32,
        AluOp::Or => a | b,
        AluOp::And => a & b,
    }
}

#[inline]
fn gate(sel: u16, bit: u32, value: u32) -> u32 {
    value & 0u32.wrapping_sub(((sel >> bit) & 1) as u32)
}

pub fn alu_onehot(a: u32, b: u32, sel: AluOneHot) -> u32 {
    let s = sel.0;
    debug_assert_eq!(s.count_ones(), 1, "ALU select must be one-hot");
    let shamt = b & 31;
    gate(s, 0, a.wrapping_add(b))
        ^ gate(s, 1, a.wrapping_sub(b))
        ^ gate(s, 2, a << shamt)
        ^ gate(s, 3, ((a as i32) < (b as i32)) as u32)
        ^ gate(s, 4, (a < b) as u32)
        ^ gate(s, 5, a ^ b)
        ^ gate(s, 6, a >> shamt)
        ^ gate(s, 7, ((a as i32) >> shamt) as u32)
        ^ gate(s, 8, a | b)
        ^ gate(s, 9, a & b)
}

pub fn alu(imp: Impl, a: u32, b: u32, op: AluOp) -> u32 {
    match imp {
        Impl::Mux => alu_mux(a, b, op),
        Impl::OneHot => alu_onehot(a, b, op.one_hot()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadOp {
    Lb,
    Lbu,
    Lh,
    Lhu,
    Lw,
}

impl LoadOp {
    pub fn for_kind(kind: Kind) -> Option<LoadOp> {
        Some(match kind {
            Kind::Lb => LoadOp::Lb,
            Kind::Lbu => LoadOp::Lbu,
            Kind::Lh => LoadOp::Lh,
            Kind::Lhu => LoadOp::Lhu,
            Kind::Lw => LoadOp::Lw,
            _ => return None,
        })
    }
}

/// A load operation together with the low two bits of its address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoadExtendSelect {
    op: LoadOp,
    offset: u8,
}

impl LoadExtendSelect {
    /// `None` for offsets the access width does not allow.
    pub fn new(op: LoadOp, offset: u8) -> Option<Self> {
        let legal = match op {
            LoadOp::Lb | LoadOp::Lbu => offset < 4,
            LoadOp::Lh | LoadOp::Lhu => offset == 0 || offset == 2,
            LoadOp::Lw => offset == 0,
        };
        legal.then_some(LoadExtendSelect { op, offset })
    }

    pub fn op(self) -> LoadOp {
        self.op
    }

    pub fn offset(self) -> u8 {
        self.offset
    }

    /// Every legal selector: 4 + 4 + 2 + 2 + 1.
    pub fn all() -> Vec<LoadExtendSelect> {
        let mut v = Vec::with_capacity(13);
        for op in [LoadOp::Lb, LoadOp::Lbu, LoadOp::Lh, LoadOp::Lhu, LoadOp::Lw] {
            for off in 0..4 {
                if let Some(s) = LoadExtendSelect::new(op, off) {
                    v.push(s);
                }
            }
        }
        v
    }

    /// Bit layout: LB@0..3 = 0..3, LBU@0..3 = 4..7, LH@0,2 = 8,9,
    /// LHU@0,2 = 10,11, LW = 12.
    pub fn one_hot(self) -> ExtendOneHot {
        let bit = match self.op {
            LoadOp::Lb => self.offset,
            LoadOp::Lbu => 4 + self.offset,
            LoadOp::Lh => 8 + self.offset / 2,
            LoadOp::Lhu => 10 + self.offset / 2,
            LoadOp::Lw => 12,
        };
        ExtendOneHot(1 << bit)
    }
}

/// 13-bit one-hot align/extend select vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtendOneHot(u16);

impl ExtendOneHot {
    pub fn new(bits: u16) -> Option<Self> {
        (bits.count_ones() == 1 && bits < (1 << 13)).then_some(ExtendOneHot(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

pub fn load_extend_mux(word: u32, sel: LoadExtendSelect) -> u32 {
    let aligned = word >> (sel.offset as u32 * 8);
    match sel.op {
        LoadOp::Lb => aligned as u8 as i8 as i32 as u32,
        LoadOp::Lbu => aligned & 0xff,
        LoadOp::Lh => aligned as u16 as i16 as i32 as u32,
        LoadOp::Lhu => aligned & 0xffff,
        LoadOp::Lw => aligned,
    }
}

pub fn load_extend_onehot(word: u32, sel: ExtendOneHot) -> u32 {
    let s = sel.0;
    debug_assert_eq!(s.count_ones(), 1, "extend select must be one-hot");
    let sb = |k: u32| (((word << (24 - 8 * k)) as i32) >> 24) as u32;
    let ub = |k: u32| (word >> (8 * k)) & 0xff;
    gate(s, 0, sb(0))
        ^ gate(s, 1, sb(1))
        ^ gate(s, 2, sb(2))
        ^ gate(s, 3, sb(3))
        ^ gate(s, 4, ub(0))
        ^ gate(s, 5, ub(1))
        ^ gate(s, 6, ub(2))
        ^ gate(s, 7, ub(3))
        ^ gate(s, 8, (((word << 16) as i32) >> 16) as u32)
        ^ gate(s, 9, ((word as i32) >> 16) as u32)
        ^ gate(s, 10, word & 0xffff)
        ^ gate(s, 11, word >> 16)
        ^ gate(s, 12, word)
}

pub fn load_extend(imp: Impl, word: u32, sel: LoadExtendSelect) -> u32 {
    match imp {
        Impl::Mux => load_extend_mux(word, sel),
        Impl::OneHot => load_extend_onehot(word, sel.one_hot()),
    }
}

/// Resolved control transfer: whether it is taken and the address of the
/// next instruction (the fall-through address when not taken).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchOutcome {
    pub taken: bool,
    pub target: u32,
}

/// Resolves a conditional branch, JAL or JALR.
pub fn resolve_branch(instr: &DecodedInstr, rs1_val: u32, rs2_val: u32, pc: u32) -> BranchOutcome {
    let (a, b) = (rs1_val, rs2_val);
    let taken = match instr.kind {
        Kind::Beq => a == b,
        Kind::Bne => a != b,
        Kind::Blt => (a as i32) < (b as i32),
        Kind::Bge => (a as i32) >= (b as i32),
        Kind::Bltu => a < b,
        Kind::Bgeu => a >= b,
        Kind::Jal | Kind::Jalr => true,
        k => panic!("resolve_branch on non-control instruction {k}"),
    };
    let target = match instr.kind {
        _ if !taken => pc.wrapping_add(4),
        Kind::Jalr => a.wrapping_add(instr.imm) & !1,
        _ => pc.wrapping_add(instr.imm),
    };
    BranchOutcome { taken, target }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::encode;
    use crate::isa::decode;
    use proptest::prelude::*;

    #[test]
    fn alu_examples() {
        assert_eq!(alu_mux(5, 7, AluOp::Add), 12);
        assert_eq!(alu_mux(0xFFFF_FFFF, 1, AluOp::Slt), 1);
        assert_eq!(alu_mux(0xFFFF_FFFF, 1, AluOp::Sltu), 0);
        assert_eq!(alu_mux(0x8000_0000, 4, AluOp::Sra), 0xF800_0000);
        assert_eq!(alu_onehot(5, 7, AluOp::Add.one_hot()), 12);
        assert_eq!(alu_onehot(0xdead_beef, 0, AluOp::And.one_hot()), 0);
    }

    #[test]
    fn one_hot_select_is_a_bijection() {
        for op in AluOp::ALL {
            let sel = op.one_hot();
            assert_eq!(sel.bits().count_ones(), 1);
            assert_eq!(sel.to_op(), op);
            assert_eq!(AluOp::from_code(op.code()), Some(op));
        }
        assert_eq!(AluOp::from_code(10), None);
        assert!(AluOneHot::new(0).is_none());
        assert!(AluOneHot::new(0b11).is_none());
        assert!(AluOneHot::new(1 << 10).is_none());
        let bits: Vec<u16> = LoadExtendSelect::all().iter().map(|s| s.one_hot().bits()).collect();
        assert_eq!(bits.len(), 13);
        assert_eq!(bits.iter().fold(0, |acc, b| acc | b), (1 << 13) - 1);
    }

    #[test]
    fn load_extend_examples() {
        let w = 0x80FF_EE11;
        let sel = |op, off| LoadExtendSelect::new(op, off).unwrap();
        assert_eq!(load_extend_mux(w, sel(LoadOp::Lb, 3)), 0xFFFF_FF80);
        assert_eq!(load_extend_mux(w, sel(LoadOp::Lhu, 2)), 0x0000_80FF);
        assert_eq!(load_extend_mux(w, sel(LoadOp::Lw, 0)), 0x80FF_EE11);
        assert_eq!(load_extend_onehot(0, sel(LoadOp::Lb, 0).one_hot()), 0);
        assert_eq!(load_extend_onehot(w, sel(LoadOp::Lbu, 3).one_hot()), 0x0000_0080);
        assert_eq!(load_extend_onehot(w, sel(LoadOp::Lh, 0).one_hot()), 0xFFFF_EE11);
    }

    #[test]
    fn illegal_offsets_rejected() {
        assert!(LoadExtendSelect::new(LoadOp::Lh, 1).is_none());
        assert!(LoadExtendSelect::new(LoadOp::Lhu, 3).is_none());
        assert!(LoadExtendSelect::new(LoadOp::Lw, 2).is_none());
        assert!(LoadExtendSelect::new(LoadOp::Lb, 4).is_none());
    }

    #[test]
    fn branch_examples() {
        let beq = decode(encode(Kind::Beq, 0, 1, 2, 0x2c));
        let r = resolve_branch(&beq, 9, 9, 0x104);
        assert_eq!(r, BranchOutcome { taken: true, target: 0x130 });
        let r = resolve_branch(&beq, 9, 8, 0x104);
        assert_eq!(r, BranchOutcome { taken: false, target: 0x108 });

        let bltu = decode(encode(Kind::Bltu, 0, 1, 2, 16));
        assert!(resolve_branch(&bltu, 1, 0xFFFF_FFFF, 0).taken);
        let blt = decode(encode(Kind::Blt, 0, 1, 2, 16));
        assert!(!resolve_branch(&blt, 1, 0xFFFF_FFFF, 0).taken);

        let jalr = decode(encode(Kind::Jalr, 1, 5, 0, 0));
        assert_eq!(resolve_branch(&jalr, 0x1001, 0, 0x40).target, 0x1000);
        let jal = decode(encode(Kind::Jal, 1, 0, 0, -8));
        assert_eq!(resolve_branch(&jal, 0, 0, 0x40).target, 0x38);
    }

    proptest! {
        #[test]
        fn xor_merge_equals_single_gated_candidate(a in any::<u32>(), b in any::<u32>(), code in 0u8..10) {
            let op = AluOp::from_code(code).unwrap();
            prop_assert_eq!(alu_onehot(a, b, op.one_hot()), alu_mux(a, b, op));
        }

        #[test]
        fn extend_forms_agree(word in any::<u32>(), idx in 0usize..13) {
            let sel = LoadExtendSelect::all()[idx];
            prop_assert_eq!(load_extend_onehot(word, sel.one_hot()), load_extend_mux(word, sel));
        }
    }
}

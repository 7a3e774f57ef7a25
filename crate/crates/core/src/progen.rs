//! Seeded generator of random RV32I programs that always terminate.
//!
//! Programs are trees of straight-line instructions, forward skips, counted
//! loops and calls, flattened by the assembler:
//!
//! * memory accesses use a reserved base register and aligned offsets inside
//!   data memory;
//! * the only backward branches close loops whose counters live in reserved
//!   registers nothing else writes, and skips never jump into a loop body;
//! * calls go to leaf functions placed after the final ECALL that return
//!   through an untouched `ra`.
//!
//! So every program halts after a bounded number of steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asm::Asm;
use crate::isa::Kind;
use crate::memsys::MemImage;

const BASE: u8 = 31;
const COUNTERS: [u8; 2] = [30, 29];
/// Data region the base register points at.
const DATA_BASE: u32 = 0x200;
const DATA_SPAN: u32 = 0x600;

/// Minimum data memory the generated programs assume.
pub const DMEM_BYTES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Nodes in the top-level block.
    pub length: usize,
    pub max_loop_iters: u32,
    pub max_depth: usize,
    pub functions: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { length: 40, max_loop_iters: 4, max_depth: 2, functions: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub seed: u64,
    pub imem: MemImage,
    pub dmem: MemImage,
}

enum Node {
    Instr(u32),
    /// Load immediately followed by a reader of its destination.
    LoadUse(u32, u32),
    Skip { kind: Kind, rs1: u8, rs2: u8, over: Vec<Node> },
    Jump { over: Vec<Node> },
    Loop { counter: u8, iters: u32, body: Vec<Node> },
    Call(usize),
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    labels: usize,
}

const R_KINDS: [Kind; 10] =
    [Kind::Add, Kind::Sub, Kind::Sll, Kind::Slt, Kind::Sltu, Kind::Xor, Kind::Srl, Kind::Sra, Kind::Or, Kind::And];
const I_KINDS: [Kind; 9] =
    [Kind::Addi, Kind::Slti, Kind::Sltiu, Kind::Xori, Kind::Ori, Kind::Andi, Kind::Slli, Kind::Srli, Kind::Srai];
const LOADS: [Kind; 5] = [Kind::Lb, Kind::Lh, Kind::Lw, Kind::Lbu, Kind::Lhu];
const STORES: [Kind; 3] = [Kind::Sb, Kind::Sh, Kind::Sw];
const BRANCHES: [Kind; 6] = [Kind::Beq, Kind::Bne, Kind::Blt, Kind::Bge, Kind::Bltu, Kind::Bgeu];

fn width(kind: Kind) -> u32 {
    match kind {
        Kind::Lb | Kind::Lbu | Kind::Sb => 1,
        Kind::Lh | Kind::Lhu | Kind::Sh => 2,
        _ => 4,
    }
}

impl Gen {
    /// Any register the generated code may overwrite, x0 included.
    fn dest(&mut self) -> u8 {
        if self.rng.gen_ratio(1, 16) {
            0
        } else {
            self.rng.gen_range(2..29)
        }
    }

    /// Any source register; reading the reserved ones is harmless.
    fn src(&mut self) -> u8 {
        // Bias towards a small set so dependencies are frequent.
        if self.rng.gen_bool(0.6) {
            self.rng.gen_range(2..8)
        } else {
            self.rng.gen_range(0..32)
        }
    }

    fn imm12(&mut self) -> i32 {
        if self.rng.gen_bool(0.5) {
            self.rng.gen_range(-16..16)
        } else {
            self.rng.gen_range(-2048..2048)
        }
    }

    fn offset(&mut self, kind: Kind) -> i32 {
        let w = width(kind);
        (self.rng.gen_range(0..DATA_SPAN / w) * w) as i32
    }

    fn alu(&mut self) -> u32 {
        use crate::asm::encode;
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let k = R_KINDS[self.rng.gen_range(0..R_KINDS.len())];
                encode(k, self.dest(), self.src(), self.src(), 0)
            }
            4..=7 => {
                let k = I_KINDS[self.rng.gen_range(0..I_KINDS.len())];
                let imm = if matches!(k, Kind::Slli | Kind::Srli | Kind::Srai) {
                    self.rng.gen_range(0..32)
                } else {
                    self.imm12()
                };
                encode(k, self.dest(), self.src(), 0, imm)
            }
            8 => encode(Kind::Lui, self.dest(), 0, 0, (self.rng.gen::<u32>() & 0xffff_f000) as i32),
            _ => encode(Kind::Auipc, self.dest(), 0, 0, (self.rng.gen::<u32>() & 0x000f_f000) as i32),
        }
    }

    fn load(&mut self) -> u32 {
        let k = LOADS[self.rng.gen_range(0..LOADS.len())];
        let off = self.offset(k);
        crate::asm::encode(k, self.dest(), BASE, 0, off)
    }

    fn store(&mut self) -> u32 {
        let k = STORES[self.rng.gen_range(0..STORES.len())];
        let off = self.offset(k);
        crate::asm::encode(k, 0, BASE, self.src(), off)
    }

    fn straight(&mut self) -> Node {
        match self.rng.gen_range(0..10) {
            0..=4 => Node::Instr(self.alu()),
            5 | 6 => Node::Instr(self.load()),
            7 => Node::Instr(self.store()),
            8 => {
                let ld = self.load();
                let rd = ((ld >> 7) & 31) as u8;
                let use_rs2 = self.rng.gen_bool(0.5);
                let other = self.src();
                let (a, b) = if use_rs2 { (other, rd) } else { (rd, other) };
                let user = if self.rng.gen_bool(0.3) {
                    let k = STORES[self.rng.gen_range(0..STORES.len())];
                    let off = self.offset(k);
                    crate::asm::encode(k, 0, BASE, rd, off)
                } else {
                    let k = R_KINDS[self.rng.gen_range(0..R_KINDS.len())];
                    crate::asm::encode(k, self.dest(), a, b, 0)
                };
                Node::LoadUse(ld, user)
            }
            _ => Node::Instr(crate::isa::NOP),
        }
    }

    fn block(&mut self, len: usize, depth: usize, in_function: bool) -> Vec<Node> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let roll = self.rng.gen_range(0..100);
            let node = if roll < 10 {
                let n = self.rng.gen_range(1..5);
                let k = BRANCHES[self.rng.gen_range(0..BRANCHES.len())];
                let (rs1, rs2) = (self.src(), self.src());
                Node::Skip { kind: k, rs1, rs2, over: self.block(n, depth, in_function) }
            } else if roll < 13 {
                let n = self.rng.gen_range(1..4);
                Node::Jump { over: self.block(n, depth, in_function) }
            } else if roll < 20 && depth < self.cfg.max_depth && !in_function {
                let iters = self.rng.gen_range(1..=self.cfg.max_loop_iters);
                let n = self.rng.gen_range(2..8);
                Node::Loop { counter: COUNTERS[depth], iters, body: self.block(n, depth + 1, false) }
            } else if roll < 25 && !in_function && self.cfg.functions > 0 {
                Node::Call(self.rng.gen_range(0..self.cfg.functions))
            } else {
                self.straight()
            };
            out.push(node);
        }
        out
    }

    fn label(&mut self) -> String {
        self.labels += 1;
        format!("L{}", self.labels)
    }

    fn emit(&mut self, a: &mut Asm, nodes: &[Node]) {
        for n in nodes {
            match n {
                Node::Instr(w) => {
                    a.word(*w);
                }
                Node::LoadUse(l, u) => {
                    a.word(*l).word(*u);
                }
                Node::Skip { kind, rs1, rs2, over } => {
                    let l = self.label();
                    match kind {
                        Kind::Beq => a.beq(*rs1, *rs2, &l),
                        Kind::Bne => a.bne(*rs1, *rs2, &l),
                        Kind::Blt => a.blt(*rs1, *rs2, &l),
                        Kind::Bge => a.bge(*rs1, *rs2, &l),
                        Kind::Bltu => a.bltu(*rs1, *rs2, &l),
                        _ => a.bgeu(*rs1, *rs2, &l),
                    };
                    self.emit(a, over);
                    a.label(&l);
                }
                Node::Jump { over } => {
                    let l = self.label();
                    a.j(&l);
                    self.emit(a, over);
                    a.label(&l);
                }
                Node::Loop { counter, iters, body } => {
                    let l = self.label();
                    a.addi(*counter, 0, *iters as i32).label(&l);
                    self.emit(a, body);
                    a.addi(*counter, *counter, -1).bne(*counter, 0, &l);
                }
                Node::Call(f) => {
                    a.call(&format!("F{f}"));
                }
            }
        }
    }
}

/// Generates the program for `seed`.
pub fn generate(seed: u64, cfg: &GenConfig) -> Program {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), cfg: *cfg, labels: 0 };
    let main = g.block(cfg.length, 0, false);
    let funcs: Vec<Vec<Node>> = (0..cfg.functions)
        .map(|_| {
            let n = g.rng.gen_range(1..6);
            g.block(n, 0, true)
        })
        .collect();

    let mut a = Asm::new(0);
    a.addi(BASE, 0, DATA_BASE as i32);
    g.emit(&mut a, &main);
    a.ecall();
    for (i, body) in funcs.iter().enumerate() {
        a.label(&format!("F{i}"));
        g.emit(&mut a, body);
        a.ret();
    }
    let imem = MemImage::new(0, a.finish().expect("generated program assembles"));
    let dmem_words = (DATA_BASE + DATA_SPAN) as usize / 4;
    let dmem = MemImage::new(0, (0..dmem_words).map(|_| g.rng.gen()).collect());
    Program { seed, imem, dmem }
}

//! Instruction-at-a-time reference model.
//!
//! Executes one instruction per [`step`] and emits a [`CommitRecord`] holding
//! the pc, the instruction word and the full register file after write-back.
//! The pipeline model is checked against this log record by record.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::{Exit, Fault, FaultKind};
use crate::isa::{decode, Kind};
use crate::memsys::{MemSystem, Width};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchState {
    pub pc: u32,
    pub regs: [u32; 32],
}

impl ArchState {
    pub fn new(pc: u32) -> Self {
        ArchState { pc, regs: [0; 32] }
    }

    fn write(&mut self, rd: u8, value: u32) {
        if rd != 0 {
            self.regs[rd as usize] = value;
        }
    }
}

impl Default for ArchState {
    fn default() -> Self {
        ArchState::new(0)
    }
}

/// One committed instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub pc: u32,
    pub raw: u32,
    pub regs_after: [u32; 32],
}

impl fmt::Display for CommitRecord {
    /// `pc raw x0 .. x31`, all as 8 lowercase hex digits, single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x} {:08x}", self.pc, self.raw)?;
        for r in &self.regs_after {
            write!(f, " {r:08x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("commit log line {line}: {msg}")]
pub struct LogParseError {
    pub line: usize,
    pub msg: String,
}

impl FromStr for CommitRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split(' ').collect();
        if fields.len() != 34 {
            return Err(format!("expected 34 fields, found {}", fields.len()));
        }
        let mut vals = [0u32; 34];
        for (v, f) in vals.iter_mut().zip(&fields) {
            if f.len() != 8 {
                return Err(format!("field `{f}` is not 8 hex digits"));
            }
            *v = u32::from_str_radix(f, 16).map_err(|e| format!("field `{f}`: {e}"))?;
        }
        let mut regs_after = [0u32; 32];
        regs_after.copy_from_slice(&vals[2..]);
        Ok(CommitRecord { pc: vals[0], raw: vals[1], regs_after })
    }
}

/// Renders a commit log, one record per line with a trailing newline.
pub fn format_log(log: &[CommitRecord]) -> String {
    let mut s = String::with_capacity(log.len() * 300);
    for r in log {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_log(text: &str) -> Result<Vec<CommitRecord>, LogParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| l.parse().map_err(|msg| LogParseError { line: i + 1, msg }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub record: CommitRecord,
    pub halted: bool,
}

fn mem_fault(pc: u32) -> impl Fn(crate::error::MemError) -> Fault {
    move |e| Fault { pc, kind: FaultKind::Memory(e) }
}

/// Executes one instruction. On a fault the state is left unchanged.
pub fn step(state: &mut ArchState, mem: &mut MemSystem) -> Result<Step, Fault> {
    let pc = state.pc;
    let raw = mem.read_instr(pc).map_err(|_| Fault { pc, kind: FaultKind::Fetch })?;
    let d = decode(raw);
    let rs1 = state.regs[d.rs1 as usize];
    let rs2 = state.regs[d.rs2 as usize];
    let imm = d.imm;
    let mut next_pc = pc.wrapping_add(4);
    let mut halted = false;

    let jump = |target: u32| -> Result<u32, Fault> {
        if !target.is_multiple_of(4) {
            Err(Fault { pc, kind: FaultKind::MisalignedTarget { target } })
        } else {
            Ok(target)
        }
    };

    use Kind::*;
    match d.kind {
        Lui => state.write(d.rd, imm),
        Auipc => state.write(d.rd, pc.wrapping_add(imm)),
        Jal => {
            next_pc = jump(pc.wrapping_add(imm))?;
            state.write(d.rd, pc.wrapping_add(4));
        }
        Jalr => {
            next_pc = jump(rs1.wrapping_add(imm) & !1)?;
            state.write(d.rd, pc.wrapping_add(4));
        }
        Beq | Bne | Blt | Bge | Bltu | Bgeu => {
            let taken = match d.kind {
                Beq => rs1 == rs2,
                Bne => rs1 != rs2,
                Blt => (rs1 as i32) < (rs2 as i32),
                Bge => (rs1 as i32) >= (rs2 as i32),
                Bltu => rs1 < rs2,
                _ => rs1 >= rs2,
            };
            if taken {
                next_pc = jump(pc.wrapping_add(imm))?;
            }
        }
        Lb | Lh | Lw | Lbu | Lhu => {
            let addr = rs1.wrapping_add(imm);
            let width = match d.kind {
                Lb | Lbu => Width::Byte,
                Lh | Lhu => Width::Half,
                _ => Width::Word,
            };
            let v = mem.read_data(addr, width).map_err(mem_fault(pc))?;
            let v = match d.kind {
                Lb => v as i8 as i32 as u32,
                Lh => v as i16 as i32 as u32,
                _ => v,
            };
            state.write(d.rd, v);
        }
        Sb | Sh | Sw => {
            let addr = rs1.wrapping_add(imm);
            let width = match d.kind {
                Sb => Width::Byte,
                Sh => Width::Half,
                _ => Width::Word,
            };
            mem.write_data(addr, width, rs2).map_err(mem_fault(pc))?;
        }
        Addi => state.write(d.rd, rs1.wrapping_add(imm)),
        Slti => state.write(d.rd, ((rs1 as i32) < (imm as i32)) as u32),
        Sltiu => state.write(d.rd, (rs1 < imm) as u32),
        Xori => state.write(d.rd, rs1 ^ imm),
        Ori => state.write(d.rd, rs1 | imm),
        Andi => state.write(d.rd, rs1 & imm),
        Slli => state.write(d.rd, rs1 << (imm & 31)),
        Srli => state.write(d.rd, rs1 >> (imm & 31)),
        Srai => state.write(d.rd, ((rs1 as i32) >> (imm & 31)) as u32),
        Add => state.write(d.rd, rs1.wrapping_add(rs2)),
        Sub => state.write(d.rd, rs1.wrapping_sub(rs2)),
        Sll => state.write(d.rd, rs1 << (rs2 & 31)),
        Slt => state.write(d.rd, ((rs1 as i32) < (rs2 as i32)) as u32),
        Sltu => state.write(d.rd, (rs1 < rs2) as u32),
        Xor => state.write(d.rd, rs1 ^ rs2),
        Srl => state.write(d.rd, rs1 >> (rs2 & 31)),
        Sra => state.write(d.rd, ((rs1 as i32) >> (rs2 & 31)) as u32),
        Or => state.write(d.rd, rs1 | rs2),
        And => state.write(d.rd, rs1 & rs2),
        Fence => {}
        Ecall | Ebreak => halted = true,
        Illegal => return Err(Fault { pc, kind: FaultKind::IllegalInstruction { word: raw } }),
    }

    if !halted {
        state.pc = next_pc;
    }
    Ok(Step { record: CommitRecord { pc, raw, regs_after: state.regs }, halted })
}

/// Result of [`run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncRun {
    pub log: Vec<CommitRecord>,
    /// Committed instructions, including the halting ECALL/EBREAK.
    pub retired: u64,
    pub exit: Exit,
}

/// Steps until halt, fault, or `max_steps` instructions.
pub fn run(state: &mut ArchState, mem: &mut MemSystem, max_steps: u64) -> FuncRun {
    assert!(max_steps > 0, "max_steps must be positive");
    let mut log = Vec::new();
    let mut exit = Exit::BudgetExhausted;
    for _ in 0..max_steps {
        match step(state, mem) {
            Ok(s) => {
                log.push(s.record);
                if s.halted {
                    exit = Exit::Halted;
                    break;
                }
            }
            Err(f) => {
                exit = Exit::Fault(f);
                break;
            }
        }
    }
    FuncRun { retired: log.len() as u64, log, exit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::Asm;
    use crate::memsys::{MemImage, Target};

    fn machine(words: Vec<u32>, origin: u32) -> (ArchState, MemSystem) {
        let mut mem = MemSystem::default();
        mem.load_image(&MemImage::new(origin, words), Target::Imem).unwrap();
        (ArchState::new(origin), mem)
    }

    #[test]
    fn addi_example() {
        let mut a = Asm::new(0x100);
        a.addi(5, 0, 7);
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0x100);
        let s = step(&mut st, &mut mem).unwrap();
        assert_eq!(s.record.regs_after[5], 7);
        assert_eq!(st.pc, 0x104);
        assert!(!s.halted);
    }

    #[test]
    fn taken_beq_goes_to_0x130() {
        let mut a = Asm::new(0x104);
        a.beq(3, 4, "t").align_to(0x130).label("t");
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0x104);
        st.regs[3] = 9;
        st.regs[4] = 9;
        step(&mut st, &mut mem).unwrap();
        assert_eq!(st.pc, 0x130);
    }

    #[test]
    fn sra_sign_fills() {
        let mut a = Asm::new(0);
        a.li(1, 0x8000_0000).addi(2, 0, 4).sra(3, 1, 2).srai(4, 1, 4);
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        for _ in 0..4 {
            step(&mut st, &mut mem).unwrap();
        }
        assert_eq!(st.regs[3], 0xF800_0000);
        assert_eq!(st.regs[4], 0xF800_0000);
    }

    #[test]
    fn immediate_ecall() {
        let mut a = Asm::new(0);
        a.ecall();
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 10);
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.exit, Exit::Halted);
        assert_eq!(r.retired, 1);
    }

    #[test]
    fn straight_line_ten_records() {
        let mut a = Asm::new(0);
        for i in 1..10 {
            a.addi(i, i - 1, 1);
        }
        a.ecall();
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 100);
        let pcs: Vec<u32> = r.log.iter().map(|c| c.pc).collect();
        assert_eq!(pcs, (0..10).map(|i| 4 * i).collect::<Vec<_>>());
        assert_eq!(pcs.last(), Some(&0x24));
        assert_eq!(r.log[8].regs_after[9], 9);
    }

    #[test]
    fn writes_to_x0_discarded() {
        let mut a = Asm::new(0);
        a.addi(0, 0, 5).lui(0, 0x12345).jal(0, "n").label("n").ecall();
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 10);
        assert!(r.log.iter().all(|c| c.regs_after[0] == 0));
    }

    #[test]
    fn store_load_round_trip_and_signs() {
        let mut a = Asm::new(0);
        a.li(1, 0x80FF_EE11)
            .sw(1, 0x40, 0)
            .lw(2, 0x40, 0)
            .lb(3, 0x43, 0)
            .lhu(4, 0x42, 0)
            .lh(5, 0x40, 0)
            .lbu(6, 0x43, 0)
            .ecall();
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 100);
        assert_eq!(r.exit, Exit::Halted);
        assert_eq!(st.regs[2], 0x80FF_EE11);
        assert_eq!(st.regs[3], 0xFFFF_FF80);
        assert_eq!(st.regs[4], 0x0000_80FF);
        assert_eq!(st.regs[5], 0xFFFF_EE11);
        assert_eq!(st.regs[6], 0x80);
    }

    #[test]
    fn misaligned_load_faults_without_commit() {
        let mut a = Asm::new(0);
        a.addi(1, 0, 1).lw(2, 0, 1).ecall();
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 10);
        assert_eq!(r.log.len(), 1);
        assert!(matches!(r.exit, Exit::Fault(Fault { pc: 4, kind: FaultKind::Memory(_) })));
        assert_eq!(st.pc, 4);
    }

    #[test]
    fn fetch_outside_imem_faults() {
        let mut a = Asm::new(0);
        a.li(1, 0x10_0000).jalr(0, 1, 0);
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 10);
        assert_eq!(r.exit, Exit::Fault(Fault { pc: 0x10_0000, kind: FaultKind::Fetch }));
    }

    #[test]
    fn misaligned_jump_target_faults() {
        let mut a = Asm::new(0);
        a.addi(1, 0, 0x22).jalr(5, 1, 0);
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 10);
        assert_eq!(
            r.exit,
            Exit::Fault(Fault { pc: 4, kind: FaultKind::MisalignedTarget { target: 0x22 } })
        );
        assert_eq!(st.regs[5], 0, "faulting jump must not link");
    }

    #[test]
    fn illegal_faults() {
        let (mut st, mut mem) = machine(vec![0xffff_ffff], 0);
        let r = run(&mut st, &mut mem, 10);
        assert_eq!(
            r.exit,
            Exit::Fault(Fault { pc: 0, kind: FaultKind::IllegalInstruction { word: 0xffff_ffff } })
        );
    }

    #[test]
    fn budget() {
        let mut a = Asm::new(0);
        a.label("l").j("l");
        let (mut st, mut mem) = machine(a.finish().unwrap(), 0);
        let r = run(&mut st, &mut mem, 5);
        assert_eq!(r.exit, Exit::BudgetExhausted);
        assert_eq!(r.log.len(), 5);
    }

    #[test]
    fn log_text_round_trips() {
        let mut regs = [0u32; 32];
        regs[1] = 0xdead_beef;
        regs[31] = 7;
        let rec = CommitRecord { pc: 0x100, raw: 0x13, regs_after: regs };
        let line = rec.to_string();
        assert!(line.starts_with("00000100 00000013 00000000 deadbeef 00000000"));
        assert!(line.ends_with(" 00000007"));
        assert_eq!(line.split(' ').count(), 34);
        let parsed = parse_log(&format_log(&[rec.clone(), rec.clone()])).unwrap();
        assert_eq!(parsed, vec![rec.clone(), rec]);
        assert!(parse_log("0000 0000\n").is_err());
    }
}

//! Cycle-accurate five-stage pipeline (If, Id, Ex, Ma, Wb).
//!
//! Each [`Pipeline::step_cycle`] evaluates the stages back to front against
//! the latch contents from the start of the cycle, then installs the new
//! latches. Wb writes the register file before Id reads it. Ex receives
//! operands over two bypass paths (from Ma and from Wb). A control transfer
//! whose predicted next pc was wrong is detected in Ex, latched into ExMa, and
//! flushes If, Id and Ex on the following cycle while it sits in Ma. A load
//! in Ex whose result is needed by the instruction in Id holds If and Id for
//! one cycle and sends a bubble into Ex.
//!
//! ECALL, EBREAK and faulting instructions stop fetch once they reach Ex
//! unflushed; the run ends when they reach Wb.

use std::fmt;

use crate::datapath::{alu, load_extend, resolve_branch, AluOp, Impl, LoadExtendSelect, LoadOp};
use crate::error::{Exit, Fault, FaultKind};
use crate::funcsim::CommitRecord;
use crate::isa::{decode, decode_if, DecodedInstr, Format, IfDecode, Kind, NOP};
use crate::memsys::{MemSystem, Width};
use crate::predictor::{Prediction, Predictor, PredictorMode, Resolution};

/// Where the load-use hazard is detected. Both give identical timing; the
/// fetch-stage variant computes the flag a cycle early from a partial decode
/// of the fetched word and carries it down the pipe with the load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LoadUseDetect {
    #[default]
    Decode,
    Fetch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PipelineConfig {
    pub predictor: PredictorMode,
    pub alu: Impl,
    pub extend: Impl,
    pub load_use: LoadUseDetect,
}

/// Deliberate defects for testing the lockstep checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injection {
    NoMaForwarding,
    NoWbForwarding,
}

/// One inter-stage latch. Fields not produced yet by the stages the slot has
/// passed through hold their reset values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latch {
    pub valid: bool,
    pub pc: u32,
    pub raw: u32,
    pub instr: DecodedInstr,
    pub pred: Prediction,
    pub fetch_cycle: u64,
    pub fault: Option<FaultKind>,
    pub rs1_val: u32,
    pub rs2_val: u32,
    /// Fetch-stage hazard flag: the next instruction reads this load's rd.
    pub load_use_next: bool,
    /// ALU result, link address or effective address; final value in MaWb.
    pub result: u32,
    pub actual_next: u32,
    pub taken: bool,
    pub mispredicted: bool,
}

impl Latch {
    fn bubble() -> Self {
        Latch {
            valid: false,
            pc: 0,
            raw: NOP,
            instr: decode(NOP),
            pred: Prediction {
                taken: false,
                target: 4,
                valid: false,
                pht_index: 0,
                branch_hit: false,
                history: 0,
            },
            fetch_cycle: 0,
            fault: None,
            rs1_val: 0,
            rs2_val: 0,
            load_use_next: false,
            result: 0,
            actual_next: 0,
            taken: false,
            mispredicted: false,
        }
    }

    fn occupant(&self) -> Option<u32> {
        self.valid.then_some(self.pc)
    }

    /// Destination register and value this slot can forward.
    fn bypass(&self) -> Option<(u8, u32)> {
        if !self.valid || self.fault.is_some() {
            return None;
        }
        self.instr.dest().map(|rd| (rd, self.result))
    }

    fn stops_fetch(&self) -> bool {
        self.fault.is_some() || self.instr.kind.is_halt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub cycles: u64,
    /// Committed instructions, including the halting ECALL/EBREAK.
    pub retired: u64,
    pub pred_hits: u64,
    pub pred_misses: u64,
    pub load_use_stalls: u64,
    pub flushes: u64,
    pub halted_at_cycle: Option<u64>,
}

impl RunStats {
    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.retired as f64 / self.cycles as f64
        }
    }

    /// `None` when no control transfer retired.
    pub fn hit_rate(&self) -> Option<f64> {
        let n = self.pred_hits + self.pred_misses;
        (n > 0).then(|| self.pred_hits as f64 / n as f64)
    }

    /// Cycles predicted by the pipeline's penalty model.
    pub fn accounted_cycles(&self) -> u64 {
        self.retired + 4 + 3 * self.flushes + self.load_use_stalls
    }
}

/// Architectural side effects, for checking that bubbles do nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Activity {
    pub regfile_writes: u64,
    pub mem_writes: u64,
    pub predictor_updates: u64,
}

/// A control transfer resolved in Ma, with what the front end predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchRecord {
    pub pc: u32,
    pub raw: u32,
    pub taken: bool,
    pub next_pc: u32,
    pub predicted_taken: bool,
    pub predicted_next: u32,
    pub prediction_valid: bool,
    pub pht_index: u16,
    pub fetch_cycle: u64,
    pub resolve_cycle: u64,
}

/// Stage occupancy and control signals of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleEvent {
    pub cycle: u64,
    /// pc held by If, Id, Ex, Ma, Wb in that order; `None` for a bubble.
    pub stages: [Option<u32>; 5],
    pub bmis: bool,
    pub stall: bool,
    pub btkn: bool,
    pub pred_valid: bool,
}

impl fmt::Display for CycleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle={}", self.cycle)?;
        for (name, s) in ["if", "id", "ex", "ma", "wb"].iter().zip(&self.stages) {
            match s {
                Some(pc) => write!(f, " {name}={pc:08x}")?,
                None => write!(f, " {name}=--------")?,
            }
        }
        write!(
            f,
            " bmis={} stall={} btkn={} pv={}",
            self.bmis as u8, self.stall as u8, self.btkn as u8, self.pred_valid as u8
        )
    }
}

/// Fetch-pc selection in priority order: the corrected pc on a misprediction,
/// the held pc on a stall, the predicted target, then the sequential pc.
pub fn next_pc(pc_true: u32, hold: u32, btb_target: u32, pc_plus_4: u32, w_bmis: bool, w_stall: bool, w_btkn: bool) -> u32 {
    if w_bmis {
        pc_true
    } else if w_stall {
        hold
    } else if w_btkn {
        btb_target
    } else {
        pc_plus_4
    }
}

/// True when `producer` is a load whose destination `consumer` reads.
pub fn detect_load_use(consumer: &IfDecode, producer: &DecodedInstr) -> bool {
    producer.attrs.is_load && producer.rd != 0 && consumer.reads(producer.rd)
}

/// Resolves the two Ex operands. The Ma-stage producer beats the Wb-stage
/// producer, which beats the register-file value read in Id.
pub fn forward_operands(
    rs: (u8, u8),
    regfile: (u32, u32),
    ma: Option<(u8, u32)>,
    wb: Option<(u8, u32)>,
) -> (u32, u32) {
    let pick = |r: u8, rf: u32| -> u32 {
        if r == 0 {
            return rf;
        }
        match (ma, wb) {
            (Some((rd, v)), _) if rd == r => v,
            (_, Some((rd, v))) if rd == r => v,
            _ => rf,
        }
    };
    (pick(rs.0, regfile.0), pick(rs.1, regfile.1))
}

fn width_of(kind: Kind) -> Width {
    match kind {
        Kind::Lb | Kind::Lbu | Kind::Sb => Width::Byte,
        Kind::Lh | Kind::Lhu | Kind::Sh => Width::Half,
        _ => Width::Word,
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeRun {
    pub log: Vec<CommitRecord>,
    pub stats: RunStats,
    pub exit: Exit,
    pub branches: Vec<BranchRecord>,
    pub activity: Activity,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    mem: MemSystem,
    regs: [u32; 32],
    r_pc: u32,
    ifid: Latch,
    idex: Latch,
    exma: Latch,
    mawb: Latch,
    predictor: Predictor,
    cycle: u64,
    draining: bool,
    stats: RunStats,
    activity: Activity,
    log: Vec<CommitRecord>,
    branches: Vec<BranchRecord>,
    exit: Option<Exit>,
    injection: Option<Injection>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, mem: MemSystem, entry_pc: u32) -> Self {
        Pipeline {
            cfg,
            mem,
            regs: [0; 32],
            r_pc: entry_pc,
            ifid: Latch::bubble(),
            idex: Latch::bubble(),
            exma: Latch::bubble(),
            mawb: Latch::bubble(),
            predictor: Predictor::new(cfg.predictor),
            cycle: 0,
            draining: false,
            stats: RunStats::default(),
            activity: Activity::default(),
            log: Vec::new(),
            branches: Vec::new(),
            exit: None,
            injection: None,
        }
    }

    pub fn inject(&mut self, defect: Injection) {
        self.injection = Some(defect);
    }

    pub fn config(&self) -> PipelineConfig {
        self.cfg
    }

    pub fn mem(&self) -> &MemSystem {
        &self.mem
    }

    pub fn mem_mut(&mut self) -> &mut MemSystem {
        &mut self.mem
    }

    pub fn regs(&self) -> &[u32; 32] {
        &self.regs
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn activity(&self) -> &Activity {
        &self.activity
    }

    pub fn log(&self) -> &[CommitRecord] {
        &self.log
    }

    pub fn branches(&self) -> &[BranchRecord] {
        &self.branches
    }

    pub fn exit(&self) -> Option<Exit> {
        self.exit
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn r_pc(&self) -> u32 {
        self.r_pc
    }

    /// Latches in pipe order: IfId, IdEx, ExMa, MaWb.
    pub fn latches(&self) -> [&Latch; 4] {
        [&self.ifid, &self.idex, &self.exma, &self.mawb]
    }

    fn finish(&mut self, exit: Exit) {
        self.exit = Some(exit);
        self.stats.cycles = self.cycle;
        if exit.is_halted() {
            self.stats.halted_at_cycle = Some(self.cycle);
        }
    }

    /// Advances every stage by one cycle.
    ///
    /// # Panics
    /// If the run has already ended.
    pub fn step_cycle(&mut self) -> CycleEvent {
        assert!(self.exit.is_none(), "step_cycle after the run ended");
        self.cycle += 1;
        let t = self.cycle;
        let (ifid, idex, exma, mawb) = (self.ifid, self.idex, self.exma, self.mawb);
        let mut event = CycleEvent {
            cycle: t,
            stages: [None, ifid.occupant(), idex.occupant(), exma.occupant(), mawb.occupant()],
            bmis: false,
            stall: false,
            btkn: false,
            pred_valid: false,
        };

        // Wb
        if mawb.valid {
            if let Some(kind) = mawb.fault {
                self.finish(Exit::Fault(Fault { pc: mawb.pc, kind }));
                return event;
            }
            if let Some(rd) = mawb.instr.dest() {
                self.regs[rd as usize] = mawb.result;
                self.activity.regfile_writes += 1;
            }
            self.log.push(CommitRecord { pc: mawb.pc, raw: mawb.raw, regs_after: self.regs });
            self.stats.retired += 1;
            if mawb.instr.kind.is_halt() {
                self.finish(Exit::Halted);
                return event;
            }
        }

        // Ma
        let mut new_mawb = Latch::bubble();
        let mut bmis = false;
        let mut pc_true = 0;
        let mut resolution = None;
        if exma.valid {
            new_mawb = exma;
            if exma.fault.is_none() {
                self.memory_stage(&mut new_mawb);
                if exma.instr.kind.is_control() {
                    let hit = exma.pred.target == exma.actual_next;
                    if hit {
                        self.stats.pred_hits += 1;
                    } else {
                        self.stats.pred_misses += 1;
                    }
                    self.branches.push(BranchRecord {
                        pc: exma.pc,
                        raw: exma.raw,
                        taken: exma.taken,
                        next_pc: exma.actual_next,
                        predicted_taken: exma.pred.taken,
                        predicted_next: exma.pred.target,
                        prediction_valid: exma.pred.valid,
                        pht_index: exma.pred.pht_index,
                        fetch_cycle: exma.fetch_cycle,
                        resolve_cycle: t,
                    });
                    resolution = Some(Resolution {
                        pc: exma.pc,
                        is_cond_branch: exma.instr.attrs.is_cond_branch,
                        is_direct_jump: exma.instr.kind == Kind::Jal,
                        taken: exma.taken,
                        target: exma.actual_next,
                        pht_index: exma.pred.pht_index,
                        history: exma.pred.history,
                        mispredicted: exma.mispredicted,
                    });
                }
                if exma.mispredicted {
                    bmis = true;
                    pc_true = exma.actual_next;
                    self.stats.flushes += 1;
                }
            }
            if new_mawb.fault.is_some() {
                self.draining = true;
            }
        }

        // Ex
        let mut new_exma = Latch::bubble();
        if idex.valid && !bmis {
            new_exma = self.execute_stage(idex, exma, mawb);
            if new_exma.stops_fetch() {
                self.draining = true;
            }
        }

        // Id
        let stall = !bmis
            && idex.valid
            && ifid.valid
            && match self.cfg.load_use {
                LoadUseDetect::Decode => detect_load_use(&decode_if(ifid.raw), &idex.instr),
                LoadUseDetect::Fetch => idex.load_use_next,
            };
        event.stall = stall;
        event.bmis = bmis;
        if stall {
            self.stats.load_use_stalls += 1;
        }
        let mut new_idex = Latch::bubble();
        if ifid.valid && !bmis && !stall && !self.draining {
            new_idex = self.decode_stage(ifid);
        }

        // If
        let mut new_ifid = Latch::bubble();
        if stall {
            new_ifid = ifid;
        }
        if !self.draining {
            let pc = self.r_pc;
            let pred = self.predictor.predict(pc);
            if self.cfg.predictor == PredictorMode::Pipelined {
                self.predictor.prestage(pc);
            }
            let btkn = pred.valid && pred.taken;
            event.btkn = btkn;
            event.pred_valid = pred.valid;
            event.stages[0] = Some(pc);
            self.r_pc = next_pc(pc_true, pc, pred.target, pc.wrapping_add(4), bmis, stall, btkn);
            if !bmis && !stall {
                new_ifid = self.fetch(pc, pred, t);
                if pred.valid && pred.branch_hit {
                    self.predictor.speculate_history(pred.taken);
                }
                if new_idex.valid && self.cfg.load_use == LoadUseDetect::Fetch {
                    new_idex.load_use_next = detect_load_use(&decode_if(new_ifid.raw), &new_idex.instr);
                }
            }
        }

        if let Some(r) = resolution {
            if self.cfg.predictor != PredictorMode::None {
                self.activity.predictor_updates += 1;
            }
            self.predictor.update(&r);
        }

        self.ifid = new_ifid;
        self.idex = new_idex;
        self.exma = new_exma;
        self.mawb = new_mawb;
        event
    }

    fn fetch(&self, pc: u32, pred: Prediction, t: u64) -> Latch {
        let mut l = Latch::bubble();
        l.valid = true;
        l.pc = pc;
        l.pred = pred;
        l.fetch_cycle = t;
        match self.mem.read_instr(pc) {
            Ok(raw) => l.raw = raw,
            Err(_) => {
                // A marker that faults only if it reaches Wb.
                l.raw = 0;
                l.fault = Some(FaultKind::Fetch);
            }
        }
        l
    }

    fn decode_stage(&self, ifid: Latch) -> Latch {
        let mut l = ifid;
        l.instr = decode(ifid.raw);
        if ifid.fault.is_none() && l.instr.kind == Kind::Illegal {
            l.fault = Some(FaultKind::IllegalInstruction { word: ifid.raw });
        }
        l.rs1_val = self.regs[l.instr.rs1 as usize];
        l.rs2_val = self.regs[l.instr.rs2 as usize];
        l
    }

    fn execute_stage(&self, idex: Latch, exma: Latch, mawb: Latch) -> Latch {
        let mut l = idex;
        l.actual_next = idex.pc.wrapping_add(4);
        if idex.stops_fetch() {
            return l;
        }
        let ma = if self.injection == Some(Injection::NoMaForwarding) { None } else { exma.bypass() };
        let wb = if self.injection == Some(Injection::NoWbForwarding) { None } else { mawb.bypass() };
        let d = idex.instr;
        let (a, b) = forward_operands((d.rs1, d.rs2), (idex.rs1_val, idex.rs2_val), ma, wb);
        l.rs1_val = a;
        l.rs2_val = b;
        let pc = idex.pc;
        l.result = match d.kind {
            Kind::Lui => d.imm,
            Kind::Auipc => pc.wrapping_add(d.imm),
            Kind::Fence => 0,
            k if k.is_control() => {
                let out = resolve_branch(&d, a, b, pc);
                if out.taken && !out.target.is_multiple_of(4) {
                    l.fault = Some(FaultKind::MisalignedTarget { target: out.target });
                    return l;
                }
                l.taken = out.taken;
                l.actual_next = out.target;
                pc.wrapping_add(4)
            }
            _ if d.attrs.is_load || d.attrs.is_store => alu(self.cfg.alu, a, d.imm, AluOp::Add),
            k => {
                let op = AluOp::for_kind(k).expect("arithmetic kind has an ALU op");
                let rhs = if d.format == Format::R { b } else { d.imm };
                alu(self.cfg.alu, a, rhs, op)
            }
        };
        l.mispredicted = l.pred.target != l.actual_next;
        l
    }

    fn memory_stage(&mut self, l: &mut Latch) {
        let d = l.instr;
        let addr = l.result;
        let width = width_of(d.kind);
        if d.attrs.is_load {
            match self.mem.read_data_word(addr, width) {
                Ok(word) => {
                    let op = LoadOp::for_kind(d.kind).expect("load kind");
                    let sel = LoadExtendSelect::new(op, (addr & 3) as u8).expect("aligned access");
                    l.result = load_extend(self.cfg.extend, word, sel);
                }
                Err(e) => l.fault = Some(FaultKind::Memory(e)),
            }
        } else if d.attrs.is_store {
            match self.mem.write_data(addr, width, l.rs2_val) {
                Ok(()) => self.activity.mem_writes += 1,
                Err(e) => l.fault = Some(FaultKind::Memory(e)),
            }
        }
    }

    /// Steps until the program halts or faults, or `max_cycles` have elapsed.
    /// With `trace`, every cycle's event is passed to it.
    pub fn run_to_halt(&mut self, max_cycles: u64, mut trace: Option<&mut dyn FnMut(&CycleEvent)>) -> Exit {
        assert!(max_cycles > 0, "max_cycles must be positive");
        while self.exit.is_none() {
            if self.cycle >= max_cycles {
                self.finish(Exit::BudgetExhausted);
                break;
            }
            let ev = self.step_cycle();
            if let Some(f) = trace.as_mut() {
                f(&ev);
            }
        }
        self.exit.expect("run ended")
    }

    /// Consumes the machine after a run.
    pub fn into_run(self) -> (PipeRun, MemSystem) {
        let run = PipeRun {
            log: self.log,
            stats: self.stats,
            exit: self.exit.unwrap_or(Exit::BudgetExhausted),
            branches: self.branches,
            activity: self.activity,
        };
        (run, self.mem)
    }
}

/// Runs `mem`'s program from `entry_pc` to completion.
pub fn simulate(cfg: PipelineConfig, mem: MemSystem, entry_pc: u32, max_cycles: u64) -> (PipeRun, MemSystem) {
    let mut p = Pipeline::new(cfg, mem, entry_pc);
    p.run_to_halt(max_cycles, None);
    p.into_run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::Asm;
    use crate::funcsim::{self, ArchState};
    use crate::memsys::{MemImage, Target};

    fn mem_with(words: Vec<u32>) -> MemSystem {
        let mut m = MemSystem::new(4096, 4096).unwrap();
        m.load_image(&MemImage::new(0, words), Target::Imem).unwrap();
        m
    }

    fn run(cfg: PipelineConfig, words: Vec<u32>) -> PipeRun {
        simulate(cfg, mem_with(words), 0, 100_000).0
    }

    fn none() -> PipelineConfig {
        PipelineConfig { predictor: PredictorMode::None, ..Default::default() }
    }

    fn check_lockstep(cfg: PipelineConfig, words: impl AsRef<[u32]>) -> PipeRun {
        let words = words.as_ref();
        let r = run(cfg, words.to_vec());
        let mut m = mem_with(words.to_vec());
        let f = funcsim::run(&mut ArchState::new(0), &mut m, 100_000);
        assert_eq!(r.log, f.log);
        assert_eq!(r.exit, f.exit);
        r
    }

    #[test]
    fn next_pc_priority() {
        assert_eq!(next_pc(1, 2, 3, 4, true, true, true), 1);
        assert_eq!(next_pc(1, 2, 3, 4, false, false, false), 4);
        assert_eq!(next_pc(1, 2, 3, 4, false, true, true), 2);
        assert_eq!(next_pc(1, 2, 3, 4, false, false, true), 3);
    }

    #[test]
    fn load_use_detection() {
        let lw = decode(crate::asm::encode(Kind::Lw, 5, 1, 0, 0));
        let lw0 = decode(crate::asm::encode(Kind::Lw, 0, 1, 0, 0));
        let add_dep = decode_if(crate::asm::encode(Kind::Add, 6, 5, 1, 0));
        let add_free = decode_if(crate::asm::encode(Kind::Add, 6, 1, 2, 0));
        let add_x0 = decode_if(crate::asm::encode(Kind::Add, 6, 0, 0, 0));
        assert!(detect_load_use(&add_dep, &lw));
        assert!(!detect_load_use(&add_x0, &lw0));
        assert!(!detect_load_use(&add_free, &lw));
        let store_data = decode_if(crate::asm::encode(Kind::Sw, 0, 2, 5, 0));
        assert!(detect_load_use(&store_data, &lw));
    }

    #[test]
    fn forwarding_priority() {
        assert_eq!(forward_operands((5, 6), (1, 2), Some((5, 10)), Some((5, 20))), (10, 2));
        assert_eq!(forward_operands((5, 6), (1, 2), Some((7, 10)), Some((6, 20))), (1, 20));
        assert_eq!(forward_operands((5, 6), (1, 2), None, None), (1, 2));
        assert_eq!(forward_operands((0, 0), (0, 0), Some((0, 9)), None), (0, 0));
    }

    #[test]
    fn straight_line_takes_n_plus_4() {
        for n in 1..20 {
            let mut a = Asm::new(0);
            for i in 0..n - 1 {
                a.addi(1 + (i % 30) as u8, 0, i);
            }
            a.ecall();
            let r = check_lockstep(none(), a.finish().unwrap());
            assert_eq!(r.stats.retired, n as u64);
            assert_eq!(r.stats.cycles, n as u64 + 4);
            assert_eq!(r.stats.halted_at_cycle, Some(n as u64 + 4));
        }
    }

    #[test]
    fn distance_one_and_two_forwarding() {
        let words = Asm::new(0)
            .addi(5, 0, 7)
            .sub(6, 0, 5) // x5 over the Ma path
            .addi(7, 0, 1)
            .add(8, 5, 6) // x6 over the Wb path, x5 from the register file
            .ecall()
            .finish()
            .unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.log.last().unwrap().regs_after[8], 0);
        assert_eq!(r.log[1].regs_after[6], (-7i32) as u32);
    }

    #[test]
    fn removing_forwarding_breaks_lockstep() {
        let words = Asm::new(0).addi(5, 0, 7).addi(6, 5, 1).ecall().finish().unwrap();
        let mut p = Pipeline::new(none(), mem_with(words), 0);
        p.inject(Injection::NoMaForwarding);
        p.run_to_halt(100, None);
        assert_eq!(p.log()[1].regs_after[6], 1);
    }

    #[test]
    fn load_use_costs_one_cycle() {
        let words = Asm::new(0).lw(5, 0, 0).add(6, 5, 5).ecall().finish().unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.stats.load_use_stalls, 1);
        assert_eq!(r.stats.cycles, 3 + 4 + 1);
        let words = Asm::new(0).lw(5, 0, 0).nop().add(6, 5, 5).ecall().finish().unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.stats.load_use_stalls, 0);
        assert_eq!(r.stats.cycles, 4 + 4);
    }

    #[test]
    fn load_to_x0_never_stalls() {
        let words = Asm::new(0).lw(0, 0, 0).add(6, 0, 0).ecall().finish().unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.stats.load_use_stalls, 0);
    }

    #[test]
    fn mispredict_costs_three_cycles() {
        // Taken branch, never seen before: predicted fall-through.
        let words = Asm::new(0)
            .beq(0, 0, "t")
            .addi(1, 0, 1)
            .addi(2, 0, 2)
            .addi(3, 0, 3)
            .label("t")
            .ecall()
            .finish()
            .unwrap();
        let r = check_lockstep(PipelineConfig::default(), words);
        assert_eq!(r.stats.retired, 2);
        assert_eq!(r.stats.flushes, 1);
        assert_eq!(r.stats.pred_misses, 1);
        assert_eq!(r.stats.cycles, 2 + 4 + 3);
    }

    #[test]
    fn wrong_path_stall_is_not_counted() {
        // The wrong path after the branch holds a load-use pair.
        let words = Asm::new(0)
            .addi(1, 0, 1)
            .bne(1, 0, "t")
            .lw(5, 0, 0)
            .add(6, 5, 5)
            .nop()
            .label("t")
            .ecall()
            .finish()
            .unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.stats.load_use_stalls, 0);
        assert_eq!(r.stats.cycles, r.stats.accounted_cycles());
    }

    #[test]
    fn faults_match_reference() {
        let cases: Vec<Vec<u32>> = vec![
            Asm::new(0).addi(1, 0, 3).lw(2, 0, 1).ecall().finish().unwrap(),
            Asm::new(0).addi(1, 0, 2).jalr(0, 1, 0).ecall().finish().unwrap(),
            vec![0x13, 0xffff_ffff, 0x73],
            Asm::new(0).lui(1, 0x10).jalr(0, 1, 0).finish().unwrap(),
            Asm::new(0).addi(1, 0, 1).sw(1, 0x7fc, 0).lw(2, 0x7fc, 0).ebreak().finish().unwrap(),
        ];
        for words in cases {
            check_lockstep(PipelineConfig::default(), &words);
        }
    }

    #[test]
    fn halt_in_wrong_path_is_flushed() {
        let words = Asm::new(0)
            .addi(1, 0, 1)
            .bne(1, 0, "t")
            .ecall()
            .word(0xffff_ffff)
            .label("t")
            .addi(2, 0, 5)
            .ecall()
            .finish()
            .unwrap();
        let r = check_lockstep(none(), words);
        assert_eq!(r.exit, Exit::Halted);
        assert_eq!(r.stats.cycles, r.stats.accounted_cycles());
    }

    #[test]
    fn budget_exhaustion_is_distinct() {
        let words = Asm::new(0).label("l").j("l").finish().unwrap();
        let mut p = Pipeline::new(PipelineConfig::default(), mem_with(words), 0);
        assert_eq!(p.run_to_halt(50, None), Exit::BudgetExhausted);
        assert_eq!(p.stats().cycles, 50);
    }

    #[test]
    fn trace_line_format() {
        let ev = CycleEvent {
            cycle: 3,
            stages: [Some(0x8), Some(0x4), None, None, None],
            bmis: false,
            stall: true,
            btkn: false,
            pred_valid: true,
        };
        assert_eq!(
            ev.to_string(),
            "cycle=3 if=00000008 id=00000004 ex=-------- ma=-------- wb=-------- bmis=0 stall=1 btkn=0 pv=1"
        );
    }

    #[test]
    fn loop_trains_predictor() {
        let words = Asm::new(0)
            .addi(1, 0, 50)
            .label("l")
            .addi(1, 1, -1)
            .bne(1, 0, "l")
            .ecall()
            .finish()
            .unwrap();
        let base = check_lockstep(none(), &words);
        for mode in [PredictorMode::Single, PredictorMode::Pipelined] {
            for load_use in [LoadUseDetect::Decode, LoadUseDetect::Fetch] {
                let cfg = PipelineConfig { predictor: mode, load_use, ..Default::default() };
                let r = check_lockstep(cfg, &words);
                assert!(r.stats.cycles < base.stats.cycles, "{mode:?}");
                assert_eq!(r.stats.cycles, r.stats.accounted_cycles());
                assert_eq!(r.stats.pred_misses, r.stats.flushes);
            }
        }
    }
}

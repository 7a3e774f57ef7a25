//! Configuration presets, lockstep checking against the reference model,
//! benchmark runs and report rendering.

pub mod config;
pub mod corpus;
pub mod report;

use std::fmt;

use rayon::prelude::*;

use crate::error::{Exit, ImageError};
use crate::funcsim::{self, ArchState, CommitRecord};
use crate::memsys::{MemImage, MemSystem};
use crate::pipeline::{Activity, BranchRecord, CycleEvent, Pipeline, RunStats};

pub use config::{ConfigError, SimConfig, PROCESSOR_PRESETS, PRESETS};
pub use corpus::Benchmark;
pub use report::{emit_report, ReportEntry, ReportFormat};

/// Programs start at address 0.
pub const ENTRY_PC: u32 = 0;

pub fn load_memory(cfg: &SimConfig, imem: &MemImage, dmem: &MemImage) -> Result<MemSystem, ImageError> {
    MemSystem::with_images(cfg.imem_bytes, cfg.dmem_bytes, imem, dmem)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub stats: RunStats,
    pub exit: Exit,
    pub log: Vec<CommitRecord>,
    pub branches: Vec<BranchRecord>,
    pub activity: Activity,
    pub console: Vec<u8>,
    /// Filled only when the config enables tracing.
    pub trace: Vec<CycleEvent>,
    pub memory: MemSystem,
}

impl RunOutcome {
    pub fn entry(&self, config: &str, benchmark: &str) -> ReportEntry {
        ReportEntry::new(config, benchmark, &self.stats)
    }
}

/// Runs the pipeline on the images until it halts, faults or runs out of cycles.
pub fn run_benchmark(cfg: &SimConfig, imem: &MemImage, dmem: &MemImage) -> Result<RunOutcome, ImageError> {
    run_with_echo(cfg, imem, dmem, false)
}

/// [`run_benchmark`] with console output optionally echoed to stdout.
pub fn run_with_echo(
    cfg: &SimConfig,
    imem: &MemImage,
    dmem: &MemImage,
    echo: bool,
) -> Result<RunOutcome, ImageError> {
    let mut mem = load_memory(cfg, imem, dmem)?;
    mem.set_echo(echo);
    let mut p = Pipeline::new(cfg.pipeline(), mem, ENTRY_PC);
    let mut trace = Vec::new();
    if cfg.trace {
        p.run_to_halt(cfg.max_cycles, Some(&mut |e: &CycleEvent| trace.push(*e)));
    } else {
        p.run_to_halt(cfg.max_cycles, None);
    }
    let (run, memory) = p.into_run();
    Ok(RunOutcome {
        stats: run.stats,
        exit: run.exit,
        log: run.log,
        branches: run.branches,
        activity: run.activity,
        console: memory.console().to_vec(),
        trace,
        memory,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    Pc { expected: u32, actual: u32 },
    Instruction { expected: u32, actual: u32 },
    Register { reg: u8, expected: u32, actual: u32 },
    /// One log ended early.
    Missing { reference_len: usize, pipeline_len: usize },
    Exit { expected: Exit, actual: Exit },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// Record index; the log length for an exit mismatch.
    pub index: usize,
    pub pc: u32,
    pub mismatch: Mismatch,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {} (pc {:#010x}): ", self.index, self.pc)?;
        match &self.mismatch {
            Mismatch::Pc { expected, actual } => write!(f, "pc {actual:#010x}, expected {expected:#010x}"),
            Mismatch::Instruction { expected, actual } => {
                write!(f, "instruction {actual:#010x}, expected {expected:#010x}")
            }
            Mismatch::Register { reg, expected, actual } => {
                write!(f, "x{reg} = {actual:#010x}, expected {expected:#010x}")
            }
            Mismatch::Missing { reference_len, pipeline_len } => {
                write!(f, "log lengths differ: reference {reference_len}, pipeline {pipeline_len}")
            }
            Mismatch::Exit { expected, actual } => write!(f, "exit `{actual}`, expected `{expected}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LockstepResult {
    pub records: usize,
    pub divergence: Option<Divergence>,
    pub stats: RunStats,
    pub exit: Exit,
}

impl LockstepResult {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// First point where two commit logs (and then the exits) disagree.
pub fn compare_logs(
    reference: &[CommitRecord],
    reference_exit: Exit,
    pipeline: &[CommitRecord],
    pipeline_exit: Exit,
) -> Option<Divergence> {
    for (i, (r, p)) in reference.iter().zip(pipeline).enumerate() {
        let mismatch = if r.pc != p.pc {
            Some(Mismatch::Pc { expected: r.pc, actual: p.pc })
        } else if r.raw != p.raw {
            Some(Mismatch::Instruction { expected: r.raw, actual: p.raw })
        } else {
            (0..32).find(|&k| r.regs_after[k] != p.regs_after[k]).map(|k| Mismatch::Register {
                reg: k as u8,
                expected: r.regs_after[k],
                actual: p.regs_after[k],
            })
        };
        if let Some(mismatch) = mismatch {
            return Some(Divergence { index: i, pc: r.pc, mismatch });
        }
    }
    if reference.len() != pipeline.len() {
        let n = reference.len().min(pipeline.len());
        let pc = reference.get(n).or(pipeline.get(n)).map_or(0, |r| r.pc);
        return Some(Divergence {
            index: n,
            pc,
            mismatch: Mismatch::Missing { reference_len: reference.len(), pipeline_len: pipeline.len() },
        });
    }
    (reference_exit != pipeline_exit).then(|| Divergence {
        index: reference.len(),
        pc: reference.last().map_or(ENTRY_PC, |r| r.pc),
        mismatch: Mismatch::Exit { expected: reference_exit, actual: pipeline_exit },
    })
}

/// Runs the reference model and the pipeline on the same images and
/// compares their commit logs record by record.
pub fn lockstep(cfg: &SimConfig, imem: &MemImage, dmem: &MemImage) -> Result<LockstepResult, ImageError> {
    lockstep_with(cfg, imem, dmem, |_| {})
}

/// [`lockstep`] with a hook to adjust the pipeline before it runs, such as
/// injecting a defect.
pub fn lockstep_with(
    cfg: &SimConfig,
    imem: &MemImage,
    dmem: &MemImage,
    prepare: impl FnOnce(&mut Pipeline),
) -> Result<LockstepResult, ImageError> {
    let mut ref_mem = load_memory(cfg, imem, dmem)?;
    let pipe_mem = ref_mem.clone();
    let mut p = Pipeline::new(cfg.pipeline(), pipe_mem, ENTRY_PC);
    prepare(&mut p);
    let (reference, pipe_exit) = rayon::join(
        || funcsim::run(&mut ArchState::new(ENTRY_PC), &mut ref_mem, cfg.max_cycles),
        || p.run_to_halt(cfg.max_cycles, None),
    );
    let divergence = compare_logs(&reference.log, reference.exit, p.log(), pipe_exit);
    Ok(LockstepResult { records: reference.log.len(), divergence, stats: *p.stats(), exit: pipe_exit })
}

/// One cell of a benchmark by configuration matrix.
#[derive(Debug, Clone)]
pub struct MatrixCell {
    pub config: String,
    pub benchmark: &'static str,
    pub lockstep: LockstepResult,
}

impl MatrixCell {
    pub fn entry(&self) -> ReportEntry {
        ReportEntry::new(&self.config, self.benchmark, &self.lockstep.stats)
    }

    /// Lockstep passed and the program halted.
    pub fn ok(&self) -> bool {
        self.lockstep.passed() && self.lockstep.exit.is_halted()
    }
}

/// Lockstep-runs every benchmark under every configuration in parallel.
/// Cells come back in configuration-major order.
pub fn run_matrix(configs: &[SimConfig], benchmarks: &[Benchmark]) -> Result<Vec<MatrixCell>, ImageError> {
    let cells: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..benchmarks.len()).map(move |b| (c, b))).collect();
    cells
        .into_par_iter()
        .map(|(c, b)| {
            let cfg = &configs[c];
            let bench = &benchmarks[b];
            Ok(MatrixCell {
                config: cfg.label(),
                benchmark: bench.name,
                lockstep: lockstep(cfg, &bench.imem, &bench.dmem)?,
            })
        })
        .collect()
}

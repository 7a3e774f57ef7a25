//! Cycle-accurate model of a five-stage RV32I soft processor with a gshare
//! branch predictor, checked against an instruction-level reference model.

pub mod asm;
pub mod datapath;
pub mod error;
pub mod funcsim;
pub mod harness;
pub mod isa;
pub mod memsys;
pub mod pipeline;
pub mod predictor;
pub mod progen;

pub use datapath::Impl;
pub use error::{Exit, Fault, FaultKind, ImageError, MemError};
pub use funcsim::{ArchState, CommitRecord};
pub use isa::{decode, decode_if, DecodedInstr, Kind};
pub use memsys::{MemImage, MemSystem, Width};
pub use pipeline::{Pipeline, PipelineConfig, RunStats};
pub use predictor::{Predictor, PredictorMode};
pub use harness::{SimConfig, lockstep, run_benchmark};

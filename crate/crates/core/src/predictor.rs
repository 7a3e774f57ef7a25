//! gshare direction predictor with a direct-mapped branch target buffer.
//!
//! Three modes:
//!
//! * [`PredictorMode::None`]: always predicts fall-through and learns nothing.
//! * [`PredictorMode::Single`]: BTB read, PHT index formation and the taken
//!   decision all happen in the fetch cycle, keyed by the fetch pc.
//! * [`PredictorMode::Pipelined`]: the BTB read and the pc half of the PHT
//!   index are registered one cycle ahead ([`Predictor::prestage`]) using the
//!   previous fetch pc. A prediction at `pc` is only usable when the staged pc
//!   is `pc - 4`; otherwise it is marked invalid and fetch falls through.
//!   Because the BTB is read with the previous pc, entries are written under
//!   `branch_pc - 4`.
//!
//! PHT index is the low 13 bits of `(pc >> 2) ^ bhr`. BTB index is
//! `(pc >> 2) % 512` with the remaining pc bits as tag. Conditional branch
//! entries consult the PHT counter; JAL entries are taken whenever they hit.

pub const PHT_BITS: u32 = 13;
pub const PHT_ENTRIES: usize = 1 << PHT_BITS;
pub const BTB_ENTRIES: usize = 512;
const PHT_MASK: u32 = (PHT_ENTRIES - 1) as u32;
const BTB_INDEX_BITS: u32 = 9;

/// Reset value of every PHT counter: weakly not-taken.
pub const COUNTER_INIT: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PredictorMode {
    None,
    #[default]
    Single,
    Pipelined,
}

impl PredictorMode {
    pub fn name(self) -> &'static str {
        match self {
            PredictorMode::None => "none",
            PredictorMode::Single => "single",
            PredictorMode::Pipelined => "pipelined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BtbEntry {
    pub valid: bool,
    pub tag: u32,
    pub target: u32,
    /// Conditional branch (consults the PHT) rather than JAL.
    pub is_branch: bool,
}

fn btb_index(key: u32) -> usize {
    ((key >> 2) as usize) % BTB_ENTRIES
}

fn btb_tag(key: u32) -> u32 {
    key >> (2 + BTB_INDEX_BITS)
}

fn pht_index(key: u32, bhr: u16) -> u16 {
    (((key >> 2) ^ bhr as u32) & PHT_MASK) as u16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub taken: bool,
    /// Predicted next fetch address (`pc + 4` unless taken).
    pub target: u32,
    /// False in pipelined mode when the staged pc is not `pc - 4`.
    pub valid: bool,
    pub pht_index: u16,
    /// The BTB hit on a conditional-branch entry; such fetches shift the BHR.
    pub branch_hit: bool,
    /// BHR before this fetch's speculative update, for recovery.
    pub history: u16,
}

/// Outcome of a resolved control transfer, fed back to the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub pc: u32,
    pub is_cond_branch: bool,
    /// JAL: enters the BTB. JALR is neither.
    pub is_direct_jump: bool,
    pub taken: bool,
    pub target: u32,
    pub pht_index: u16,
    pub history: u16,
    pub mispredicted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Staged {
    pc: u32,
    btb: BtbEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predictor {
    mode: PredictorMode,
    bhr: u16,
    pht: Vec<u8>,
    btb: Vec<BtbEntry>,
    staged: Option<Staged>,
}

impl Predictor {
    pub fn new(mode: PredictorMode) -> Self {
        Predictor {
            mode,
            bhr: 0,
            pht: vec![COUNTER_INIT; PHT_ENTRIES],
            btb: vec![BtbEntry::default(); BTB_ENTRIES],
            staged: None,
        }
    }

    pub fn mode(&self) -> PredictorMode {
        self.mode
    }

    pub fn bhr(&self) -> u16 {
        self.bhr
    }

    pub fn counter(&self, index: u16) -> u8 {
        self.pht[index as usize]
    }

    pub fn counters(&self) -> &[u8] {
        &self.pht
    }

    pub fn btb_entry(&self, index: usize) -> BtbEntry {
        self.btb[index]
    }

    /// BTB slot and tag that `key_pc` maps to.
    pub fn btb_slot(key_pc: u32) -> (usize, u32) {
        (btb_index(key_pc), btb_tag(key_pc))
    }

    /// Entry for `key_pc` if present with a matching tag.
    pub fn btb_lookup(&self, key_pc: u32) -> Option<BtbEntry> {
        let e = self.btb[btb_index(key_pc)];
        (e.valid && e.tag == btb_tag(key_pc)).then_some(e)
    }

    /// Staged pc for the next cycle's pipelined prediction.
    pub fn staged_pc(&self) -> Option<u32> {
        self.staged.map(|s| s.pc)
    }

    fn decide(&self, pc: u32, key: u32, entry: BtbEntry, valid: bool) -> Prediction {
        let idx = pht_index(key, self.bhr);
        let hit = valid && entry.valid && entry.tag == btb_tag(key);
        let taken = hit && (!entry.is_branch || self.pht[idx as usize] >= 2);
        Prediction {
            taken,
            target: if taken { entry.target } else { pc.wrapping_add(4) },
            valid,
            pht_index: idx,
            branch_hit: hit && entry.is_branch,
            history: self.bhr,
        }
    }

    /// Single-cycle prediction keyed by the fetch pc.
    pub fn predict_single(&self, pc: u32) -> Prediction {
        self.decide(pc, pc, self.btb[btb_index(pc)], true)
    }

    /// Registers the BTB read and the pc used for PHT indexing. Called once
    /// per cycle with that cycle's fetch pc; consumed on the next cycle.
    pub fn prestage(&mut self, pc: u32) {
        self.staged = Some(Staged { pc, btb: self.btb[btb_index(pc)] });
    }

    /// Prediction from the previous cycle's staging.
    pub fn predict_pipelined(&self, pc: u32) -> Prediction {
        let key = pc.wrapping_sub(4);
        match self.staged {
            Some(s) if s.pc == key => self.decide(pc, key, s.btb, true),
            // Carry the index a valid prediction would have used so the
            // branch still trains its own counter.
            _ => self.decide(pc, key, BtbEntry::default(), false),
        }
    }

    /// Prediction for the fetch at `pc` under the configured mode.
    pub fn predict(&self, pc: u32) -> Prediction {
        match self.mode {
            PredictorMode::None => Prediction {
                taken: false,
                target: pc.wrapping_add(4),
                valid: true,
                pht_index: 0,
                branch_hit: false,
                history: self.bhr,
            },
            PredictorMode::Single => self.predict_single(pc),
            PredictorMode::Pipelined => self.predict_pipelined(pc),
        }
    }

    /// Shifts a predicted direction into the history register.
    pub fn speculate_history(&mut self, taken: bool) {
        self.bhr = (((self.bhr as u32) << 1 | taken as u32) & PHT_MASK) as u16;
    }

    /// Trains the tables with a resolved control transfer and, on a
    /// misprediction, rewrites the history with the correct outcome.
    pub fn update(&mut self, r: &Resolution) {
        if self.mode == PredictorMode::None {
            return;
        }
        debug_assert!((r.pht_index as usize) < PHT_ENTRIES);
        if r.is_cond_branch {
            let c = &mut self.pht[r.pht_index as usize];
            *c = if r.taken { (*c + 1).min(3) } else { c.saturating_sub(1) };
        }
        if r.taken && (r.is_cond_branch || r.is_direct_jump) {
            let key = match self.mode {
                PredictorMode::Pipelined => r.pc.wrapping_sub(4),
                _ => r.pc,
            };
            self.btb[btb_index(key)] = BtbEntry {
                valid: true,
                tag: btb_tag(key),
                target: r.target,
                is_branch: r.is_cond_branch,
            };
        }
        if r.mispredicted {
            self.bhr = r.history;
            if r.is_cond_branch {
                self.speculate_history(r.taken);
            }
        }
    }
}

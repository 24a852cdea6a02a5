//! Delayed-CSIT interference-channel protocols.
//!
//! Every scheme runs one trial as an isolated state machine driven by a
//! single seed: Phase 1 retransmits bits until the gain configuration of
//! their final slot sorts them into a queue, later phases deliver random
//! combinations of the queued bits, and the receivers decode with full
//! channel knowledge. Receivers reconstruct queue contents from the gains
//! they observe; the simulator hands them the same bookkeeping through the
//! Phase-1 log instead of replaying it.

mod asymmetric;
mod baseline;
mod general;
mod halt;
mod joint;
mod phase1;
mod rate_code;
mod symmetric;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{Trap, ViewId};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::multicast::GENERATION_UNKNOWNS;
use crate::regions::RatePair;

pub use asymmetric::{run_asymmetric, run_asymmetric_mirrored, run_asymmetric_with, AsymmetricPlan};
pub use baseline::{baseline_duration, run_baseline_no_csit, run_multicast};
pub use general::{run_general, run_general_with, GeneralPlan, DEFAULT_DELTA};
pub use halt::{binomial_above, binomial_below, halt_bounds, halt_bounds_with, HaltBounds};
pub use phase1::{
    phase1_step, phase1_transition, run_phase1, Phase1Log, QueueMove, QueueSet, SlotRecord,
};
pub use rate_code::{erasure_decode, erasure_send, ErasureStream};
pub use symmetric::{decode_symmetric, run_symmetric, run_symmetric_with, SymmetricPlan};

/// Named transmission schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SymmetricV2,
    AsymmetricV2,
    GeneralP,
    BaselineNoCsit,
    Multicast,
}

impl Scheme {
    /// All schemes.
    pub const ALL: [Scheme; 5] = [
        Scheme::SymmetricV2,
        Scheme::AsymmetricV2,
        Scheme::GeneralP,
        Scheme::BaselineNoCsit,
        Scheme::Multicast,
    ];

    /// CLI name.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SymmetricV2 => "symmetric-v2",
            Scheme::AsymmetricV2 => "asymmetric-v2",
            Scheme::GeneralP => "general-p",
            Scheme::BaselineNoCsit => "baseline-no-csit",
            Scheme::Multicast => "multicast",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Halting error events and the statistics they were judged on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorLedger {
    /// An initial queue was not empty at the end of Phase 1 (or Phase 2).
    pub type_i: bool,
    /// A queue outgrew its padded size.
    pub type_ii: bool,
    /// A receiver knew too few bits of an interfering queue.
    pub type_iii: bool,
    /// Too few cross-delivered bits for the asymmetric scheme.
    pub type_iv: bool,
    /// Padded sizes `n_{i,j}`.
    pub thresholds: [[usize; 2]; 2],
    /// Queue sizes `N_{i,j}` at the end of Phase 1.
    pub counts: [[usize; 2]; 2],
    /// Bits of `Q_{i,j}` known at the other receiver, padding included.
    pub known: [[usize; 2]; 2],
    /// Minimum known count required for each queue.
    pub known_min: [[f64; 2]; 2],
}

impl ErrorLedger {
    /// True when any error event fired.
    #[must_use]
    pub fn halted(&self) -> bool {
        self.type_i || self.type_ii || self.type_iii || self.type_iv
    }
}

/// Decoding step that ran out of equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Phase-2 multicast of the combined blocks.
    Multicast,
    /// Recovering the other transmitter's queued bits.
    Interference,
    /// Recovering own bits from own combinations.
    Own,
    /// A point-to-point erasure stream.
    Erasure,
    /// A joint system mixing several streams.
    Joint,
}

/// How a trial ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    /// An error event halted the trial before decoding.
    Halted,
    DecodeFailure {
        stage: Stage,
        receivers: Vec<u8>,
        deficit: Vec<usize>,
    },
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub scheme: Scheme,
    /// Message lengths per transmitter.
    pub m: [usize; 2],
    pub p: f64,
    pub view: ViewId,
    pub seed: u64,
    /// Channel uses of all phases.
    pub total_uses: usize,
    pub phase_lengths: Vec<usize>,
    /// Whether each receiver recovered its message bit-exactly.
    pub decoded: [bool; 2],
    /// `m_i / total_uses`, set only when both receivers decoded.
    pub rate: Option<RatePair>,
    pub ledger: ErrorLedger,
    pub outcome: Outcome,
}

impl TrialReport {
    /// True for a complete, bit-exact delivery.
    #[must_use]
    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Success
    }

    /// The same trial with the two transmitter-receiver pairs relabelled.
    #[must_use]
    pub fn mirrored(mut self) -> Self {
        self.m.swap(0, 1);
        self.decoded.swap(0, 1);
        self.rate = self.rate.map(|r| r.swapped());
        for k in [&mut self.ledger.thresholds, &mut self.ledger.counts, &mut self.ledger.known] {
            k.swap(0, 1);
        }
        self.ledger.known_min.swap(0, 1);
        if let Outcome::DecodeFailure { receivers, .. } = &mut self.outcome {
            for r in receivers.iter_mut() {
                *r = 3 - *r;
            }
        }
        self
    }
}

/// Knobs shared by the queue-based schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// View enforced on the transmitters' delayed feed.
    pub view: ViewId,
    pub trap: Trap,
    /// Target unknowns per decoding generation.
    pub generation_unknowns: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            view: ViewId::V2,
            trap: Trap::Armed,
            generation_unknowns: GENERATION_UNKNOWNS,
        }
    }
}

/// Independent random sub-streams of one trial.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Message = 1,
    Channel = 2,
    Coding = 3,
    Multicast = 4,
    Erasure = 5,
}

pub(crate) fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// `m^{2/3}`, the slack unit of every threshold.
#[must_use]
pub fn slack(m: usize) -> f64 {
    (m as f64).cbrt().powi(2)
}

pub(crate) fn ceil(x: f64) -> usize {
    x.ceil().max(0.0) as usize
}

/// Sizes of `parts` consecutive pieces of `total` proportional to `weights`.
///
/// Uses cumulative rounding so the pieces always sum to `total`.
pub(crate) fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        let mut out = vec![0; weights.len()];
        if let Some(first) = out.first_mut() {
            *first = total;
        }
        return out;
    }
    let mut acc = 0u128;
    let mut prev = 0usize;
    weights
        .iter()
        .map(|&w| {
            acc += w as u128;
            let cut = (total as u128 * acc / sum as u128) as usize;
            let piece = cut - prev;
            prev = cut;
            piece
        })
        .collect()
}

/// Keeps the columns listed in `cols` of `a`, in that order.
pub(crate) fn select_columns(a: &BitMatrix, cols: &[usize]) -> BitMatrix {
    let t = a.transpose();
    let mut picked = BitMatrix::zeros(0, a.rows());
    for &c in cols {
        picked.push_row(&t.row_vector(c));
    }
    picked.transpose()
}

/// Appends `rhs` as a final column.
pub(crate) fn augment(a: &BitMatrix, rhs: &BitVector) -> BitMatrix {
    let mut out = BitMatrix::zeros(0, a.cols() + 1);
    for r in 0..a.rows() {
        let mut row = a.row_vector(r);
        row.push(rhs.bit(r));
        out.push_row(&row);
    }
    out
}

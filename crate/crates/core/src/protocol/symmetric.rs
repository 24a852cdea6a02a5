//! Symmetric corner at `p = 1/2`: Phase 1, padding, random combining, multicast, decode.
//!
//! The combining matrices are block diagonal. Phase 1 is cut into equal time
//! segments and a queued bit belongs to the segment of its final slot; each
//! segment gets its own share of the padded queue sizes and of the combined
//! rows. Interference seen in a slot only comes from bits whose final slot it
//! is, so every decoding step stays inside one segment.

use rand::Rng;

use super::phase1::{run_phase1, Phase1Log, QueueSet};
use super::{
    apportion, ceil, select_columns, slack, stream, ErrorLedger, Outcome, RunOptions, Scheme, Stage, Stream,
    TrialReport,
};
use crate::channel::{sample_states, ChannelModel, CsitView, DelayedFeed};
use crate::error::{Error, Result};
use crate::gf2::{random_matrix_with, solve_augmented, BitMatrix, BitVector};
use crate::multicast::{split_even, MulticastSession};
use crate::regions::RatePair;

/// Phase lengths and queue sizes of the symmetric scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricPlan {
    pub m: usize,
    pub delta: f64,
    /// Phase-1 length `⌈4m/3 + m^{2/3}⌉`.
    pub phase1: usize,
    /// Padded size of each queue, `⌈m/3 + 2m^{2/3}⌉`.
    pub padded: usize,
    /// Rows of each combining matrix, `⌈m/3 + 4m^{2/3}⌉`.
    pub rows: usize,
    /// Multicast length for two blocks of `rows` bits.
    pub phase2: usize,
}

impl SymmetricPlan {
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        let mf = m as f64;
        let s = slack(m);
        let rows = ceil(mf / 3.0 + 4.0 * s);
        Ok(Self {
            m,
            delta,
            phase1: ceil(4.0 * mf / 3.0 + s),
            padded: ceil(mf / 3.0 + 2.0 * s),
            rows,
            phase2: crate::multicast::multicast_duration(rows, rows, 0.5, delta)?,
        })
    }

    #[must_use]
    pub fn total(&self) -> usize {
        self.phase1 + self.phase2
    }

    /// Symmetric rate delivered by a successful trial.
    #[must_use]
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.total() as f64
    }
}

/// Block-diagonal structure shared by transmitters and receivers.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    /// Segment of every Phase-1 slot.
    pub slot_gen: Vec<u32>,
    /// Padded size of queue `j` inside each segment.
    pub quota: [Vec<usize>; 2],
    /// Combined rows produced by each segment.
    pub rows: Vec<usize>,
}

impl Layout {
    pub fn new(phase1: usize, padded: [usize; 2], rows: usize, target: usize) -> Self {
        let gens = rows.div_ceil(target.max(1)).clamp(1, phase1.max(1));
        let ranges = split_even(phase1, gens);
        let weights: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
        let mut slot_gen = vec![0u32; phase1];
        for (g, r) in ranges.iter().enumerate() {
            for t in r.clone() {
                slot_gen[t] = g as u32;
            }
        }
        Self {
            slot_gen,
            quota: [apportion(padded[0], &weights), apportion(padded[1], &weights)],
            rows: apportion(rows, &weights),
        }
    }

    pub fn gens(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self, g: usize) -> usize {
        self.quota[0][g] + self.quota[1][g]
    }
}

/// One transmitter's queued bits per segment and its combining matrices.
#[derive(Debug, Clone)]
pub(crate) struct TxCode {
    /// Message indices of queue `j` in segment `g`: `bits[j][g]`.
    pub bits: [Vec<Vec<usize>>; 2],
    /// `[C_1 | C_2]` restricted to segment `g`.
    pub mats: Vec<BitMatrix>,
}

impl TxCode {
    /// Sorts the queued bits by segment; the flag is set when a segment outgrows its quota.
    pub fn build<R: Rng + ?Sized>(queues: &QueueSet, layout: &Layout, rng: &mut R) -> Result<(Self, bool)> {
        let mats = (0..layout.gens())
            .map(|g| random_matrix_with(layout.rows[g], layout.cols(g), 0.5, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut bits: [Vec<Vec<usize>>; 2] = [vec![Vec::new(); layout.gens()], vec![Vec::new(); layout.gens()]];
        for (j, q) in [queues.q1(), queues.q2()].into_iter().enumerate() {
            for &b in q {
                let t = queues.final_slot(b).expect("queued bits were sent");
                bits[j][layout.slot_gen[t] as usize].push(b);
            }
        }
        let overflow = (0..2).any(|j| (0..layout.gens()).any(|g| bits[j][g].len() > layout.quota[j][g]));
        Ok((Self { bits, mats }, overflow))
    }

    /// Padded column vector of segment `g`: queue 1 bits, zeros, queue 2 bits, zeros.
    pub fn column_values(&self, layout: &Layout, g: usize, value: impl Fn(usize) -> bool) -> BitVector {
        let mut x = BitVector::zeros(layout.cols(g));
        for (k, &b) in self.bits[0][g].iter().enumerate() {
            x.set(k, value(b));
        }
        for (k, &b) in self.bits[1][g].iter().enumerate() {
            x.set(layout.quota[0][g] + k, value(b));
        }
        x
    }

    /// Column of bit number `k` of queue `j` in segment `g`.
    pub fn column(layout: &Layout, g: usize, j: usize, k: usize) -> usize {
        if j == 0 {
            k
        } else {
            layout.quota[0][g] + k
        }
    }

    /// `Q̃ = C_1 Q_1 ⊕ C_2 Q_2`, segments concatenated.
    pub fn combine(&self, layout: &Layout, msg: &BitVector) -> Result<BitVector> {
        let mut out = BitVector::zeros(0);
        for g in 0..layout.gens() {
            let x = self.column_values(layout, g, |b| msg.bit(b));
            out.append(&self.mats[g].mul_vec(&x)?);
        }
        Ok(out)
    }
}

/// Offsets of each segment inside a combined block.
pub(crate) fn row_offsets(layout: &Layout) -> Vec<usize> {
    let mut acc = 0;
    layout
        .rows
        .iter()
        .map(|&r| {
            let o = acc;
            acc += r;
            o
        })
        .collect()
}

/// Solves `A x = rhs` over the columns `unknown`, with the remaining columns fixed to `known`.
pub(crate) fn solve_partial(
    a: &BitMatrix,
    rhs: &BitVector,
    known: &BitVector,
    unknown: &[usize],
) -> std::result::Result<BitVector, usize> {
    let mut r = a.mul_vec(known).expect("dimensions agree");
    r.xor_assign(rhs);
    if unknown.is_empty() {
        return Ok(BitVector::zeros(0));
    }
    let sub = select_columns(a, unknown);
    let aug = super::augment(&sub, &r);
    match solve_augmented(aug, unknown.len()) {
        Ok(x) => Ok(x),
        Err(Error::NoUniqueSolution { rank, cols }) => Err(cols - rank),
        Err(e) => panic!("consistent system reported {e}"),
    }
}

/// True when receiver `rx` heard the bit sent by the other transmitter at `t` without interference.
pub(crate) fn clean_at(log: &Phase1Log, rx: u8, t: usize) -> bool {
    !log.slots[t].reaches(rx, rx)
}

/// Decodes receiver `rx`'s message after Phase 2.
///
/// `own` and `other` are the combined blocks of the two transmitters as
/// recovered by the multicast. Returns the failing stage and rank deficit.
pub(crate) fn decode_at(
    rx: u8,
    log: &Phase1Log,
    layout: &Layout,
    codes: &[TxCode; 2],
    own: &BitVector,
    other: &BitVector,
) -> std::result::Result<BitVector, (Stage, usize)> {
    let i = usize::from(rx - 1);
    let o = 1 - i;
    let offsets = row_offsets(layout);
    let y = &log.y[i];
    let other_queues = &log.queues[o];
    let mut other_val: Vec<Option<bool>> = vec![None; other_queues.message_len()];

    // Interfering bits: clean overheard bits are known, the rest come from Q̃_ī.
    let mut deficit = 0;
    for g in 0..layout.gens() {
        let code = &codes[o];
        let mut known = BitVector::zeros(layout.cols(g));
        let mut unknown = Vec::new();
        for j in 0..2 {
            for (k, &b) in code.bits[j][g].iter().enumerate() {
                let t = other_queues.final_slot(b).expect("sent");
                let c = TxCode::column(layout, g, j, k);
                if clean_at(log, rx, t) {
                    known.set(c, y[t]);
                    other_val[b] = Some(y[t]);
                } else {
                    unknown.push((c, b));
                }
            }
        }
        let cols: Vec<usize> = unknown.iter().map(|&(c, _)| c).collect();
        let rhs = other.slice(offsets[g]..offsets[g] + layout.rows[g]);
        match solve_partial(&code.mats[g], &rhs, &known, &cols) {
            Ok(x) => {
                for (k, &(_, b)) in unknown.iter().enumerate() {
                    other_val[b] = Some(x.bit(k));
                }
            }
            Err(d) => deficit += d,
        }
    }
    if deficit > 0 {
        return Err((Stage::Interference, deficit));
    }

    // Cancel interference and read own bits whose direct link was on.
    let own_queues = &log.queues[i];
    let mut own_val: Vec<Option<bool>> = vec![None; own_queues.message_len()];
    let tx = rx;
    let ox = 3 - rx;
    for &b in own_queues.q1().iter().chain(own_queues.delivered()) {
        let t = own_queues.final_slot(b).expect("sent");
        let slot = &log.slots[t];
        let mut v = y[t];
        if slot.reaches(ox, tx) {
            let ib = slot.sent[o].expect("active");
            v ^= other_val[ib].expect("interfering bits are queued at the other side");
        }
        own_val[b] = Some(v);
    }

    // Own Q_2 bits from Q̃_i with Q_1 substituted.
    for g in 0..layout.gens() {
        let code = &codes[i];
        let mut known = BitVector::zeros(layout.cols(g));
        for (k, &b) in code.bits[0][g].iter().enumerate() {
            known.set(TxCode::column(layout, g, 0, k), own_val[b].expect("read above"));
        }
        let cols: Vec<usize> = (0..code.bits[1][g].len())
            .map(|k| TxCode::column(layout, g, 1, k))
            .collect();
        let rhs = own.slice(offsets[g]..offsets[g] + layout.rows[g]);
        match solve_partial(&code.mats[g], &rhs, &known, &cols) {
            Ok(x) => {
                for (k, &b) in code.bits[1][g].iter().enumerate() {
                    own_val[b] = Some(x.bit(k));
                }
            }
            Err(d) => deficit += d,
        }
    }
    if deficit > 0 {
        return Err((Stage::Own, deficit));
    }
    Ok(own_val.into_iter().map(|v| v.unwrap_or(false)).collect())
}

/// Decodes receiver `rx` of a finished symmetric trial; see [`run_symmetric`].
pub fn decode_symmetric(
    rx: u8,
    log: &Phase1Log,
    own: &BitVector,
    other: &BitVector,
    plan: &SymmetricPlan,
    seed: u64,
    opts: &RunOptions,
) -> Result<BitVector> {
    let layout = Layout::new(plan.phase1, [plan.padded; 2], plan.rows, opts.generation_unknowns);
    let mut coding = stream(seed, Stream::Coding);
    let (c1, _) = TxCode::build(&log.queues[0], &layout, &mut coding)?;
    let (c2, _) = TxCode::build(&log.queues[1], &layout, &mut coding)?;
    decode_at(rx, log, &layout, &[c1, c2], own, other).map_err(|(_, d)| Error::DecodeFailure {
        receivers: vec![rx],
        deficit: vec![d],
    })
}

/// Records queue sizes, the known bits of each queue at the other receiver and the type I to III checks.
///
/// A queue needs at least `known_fraction * n - s` bits known at the other receiver.
pub(crate) fn fill_ledger(ledger: &mut ErrorLedger, log: &Phase1Log, padded: [usize; 2], known_fraction: f64, s: f64) {
    for i in 0..2 {
        let q = &log.queues[i];
        let other_rx = (2 - i) as u8;
        for (j, bits) in [q.q1(), q.q2()].into_iter().enumerate() {
            let real_known = bits
                .iter()
                .filter(|&&b| clean_at(log, other_rx, q.final_slot(b).expect("sent")))
                .count();
            ledger.counts[i][j] = bits.len();
            ledger.thresholds[i][j] = padded[j];
            ledger.known[i][j] = padded[j].saturating_sub(bits.len()) + real_known;
            ledger.known_min[i][j] = known_fraction * padded[j] as f64 - s;
            if bits.len() > padded[j] {
                ledger.type_ii = true;
            }
            if (ledger.known[i][j] as f64) < ledger.known_min[i][j] {
                ledger.type_iii = true;
            }
        }
        if !q.initial().is_empty() {
            ledger.type_i = true;
        }
    }
}

/// One trial of the symmetric scheme under the default options.
pub fn run_symmetric(m: usize, p: f64, delta: f64, seed: u64) -> Result<TrialReport> {
    run_symmetric_with(m, p, delta, seed, &RunOptions::default())
}

/// One trial of the symmetric scheme.
pub fn run_symmetric_with(m: usize, p: f64, delta: f64, seed: u64, opts: &RunOptions) -> Result<TrialReport> {
    if p != 0.5 {
        return Err(Error::InvalidParameter(format!(
            "the symmetric scheme is defined for p = 0.5 (got {p}); use the general-p scheme"
        )));
    }
    let plan = SymmetricPlan::new(m, delta)?;
    let model = ChannelModel::new(p)?;
    let mut msg_rng = stream(seed, Stream::Message);
    let messages = [
        BitVector::random(m, 0.5, &mut msg_rng)?,
        BitVector::random(m, 0.5, &mut msg_rng)?,
    ];
    let mut chan = stream(seed, Stream::Channel);
    let mut feed = DelayedFeed::new(CsitView::preset(opts.view), opts.trap);
    let log = run_phase1(
        [(0..m).collect(), (0..m).collect()],
        [&messages[0], &messages[1]],
        plan.phase1,
        &model,
        &mut feed,
        &mut chan,
    )?;

    let mut report = TrialReport {
        scheme: Scheme::SymmetricV2,
        m: [m, m],
        p,
        view: opts.view,
        seed,
        total_uses: plan.total(),
        phase_lengths: vec![plan.phase1, plan.phase2],
        decoded: [false, false],
        rate: None,
        ledger: ErrorLedger::default(),
        outcome: Outcome::Halted,
    };
    fill_ledger(&mut report.ledger, &log, [plan.padded; 2], 0.5, slack(m));

    let layout = Layout::new(plan.phase1, [plan.padded; 2], plan.rows, opts.generation_unknowns);
    let mut coding = stream(seed, Stream::Coding);
    let (c1, over1) = TxCode::build(&log.queues[0], &layout, &mut coding)?;
    let (c2, over2) = TxCode::build(&log.queues[1], &layout, &mut coding)?;
    report.ledger.type_ii |= over1 || over2;
    if report.ledger.halted() {
        return Ok(report);
    }
    let combined = [c1.combine(&layout, &messages[0])?, c2.combine(&layout, &messages[1])?];

    let session = MulticastSession::with_generation_size(plan.rows, plan.rows, &model, delta, opts.generation_unknowns)?;
    let states = sample_states(&model, session.duration, &mut chan);
    let mut mc = stream(seed, Stream::Multicast);
    let out = match session.run_over(&combined[0], &combined[1], &states, &mut mc) {
        Ok(out) => out,
        Err(Error::DecodeFailure { receivers, deficit }) => {
            report.outcome = Outcome::DecodeFailure {
                stage: Stage::Multicast,
                receivers,
                deficit,
            };
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    let codes = [c1, c2];
    let views = [(&out.at_rx1.0, &out.at_rx1.1), (&out.at_rx2.1, &out.at_rx2.0)];
    let mut failed = Vec::new();
    for rx in [1u8, 2] {
        let (own, other) = views[usize::from(rx - 1)];
        match decode_at(rx, &log, &layout, &codes, own, other) {
            Ok(bits) => report.decoded[usize::from(rx - 1)] = bits == messages[usize::from(rx - 1)],
            Err((stage, d)) => failed.push((rx, stage, d)),
        }
    }
    report.outcome = if let Some(&(_, stage, _)) = failed.first() {
        Outcome::DecodeFailure {
            stage,
            receivers: failed.iter().map(|f| f.0).collect(),
            deficit: failed.iter().map(|f| f.2).collect(),
        }
    } else if report.decoded == [true, true] {
        report.rate = Some(RatePair::new(plan.rate(), plan.rate()));
        Outcome::Success
    } else {
        Outcome::DecodeFailure {
            stage: Stage::Joint,
            receivers: (1..=2).filter(|&r| !report.decoded[usize::from(r - 1)]).collect(),
            deficit: vec![0],
        }
    };
    Ok(report)
}

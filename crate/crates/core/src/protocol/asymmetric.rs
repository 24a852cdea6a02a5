//! Asymmetric corner at `p = 1/2`: transmitter 1 sends `3m/4` bits, transmitter 2 sends `m`.
//!
//! Phase 1 sorts `3m/4` bits of each transmitter. In Phase 2 transmitter 1
//! sends random combinations of `C11 Q11` while transmitter 2 pushes its
//! remaining bits and queues those heard only at receiver 1. In Phase 3 each
//! transmitter superposes a long stream over its first queue and a short one
//! over its second.
//!
//! All three phases are cut into the same number of segments and every
//! matrix is block diagonal over them, so a receiver decodes one
//! segment at a time with a joint system over the message bits involved.

use std::collections::VecDeque;
use std::ops::Range;

use super::joint::{by_segment, slot_segments, JointSystem};
use super::phase1::{run_phase1, Phase1Log};
use super::symmetric::fill_ledger;
use super::{apportion, ceil, slack, stream, ErrorLedger, Outcome, RunOptions, Scheme, Stage, Stream, TrialReport};
use crate::channel::{sample_state, transmit, ChannelModel, ChannelState, CsitView, DelayedFeed, Link};
use crate::error::{Error, Result};
use crate::gf2::{random_matrix_with, BitMatrix, BitVector};
use crate::regions::RatePair;

/// Sizes of the asymmetric scheme for a larger message of `m` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsymmetricPlan {
    /// Bits of transmitter 2.
    pub m: usize,
    /// Bits of transmitter 1, `⌊3m/4⌋`.
    pub m1: usize,
    /// `⌈m + m^{2/3}⌉`.
    pub phase1: usize,
    /// Padded size of each Phase-1 queue, `⌈m/4 + 2m^{2/3}⌉`.
    pub padded: usize,
    /// Padded size of transmitter 2's second queue after Phase 2, `⌈m/3 + 3m^{2/3}⌉`.
    pub padded22: usize,
    /// Rows of the Phase-2 matrix over `Q11`, `⌈m/12 + 2m^{2/3}⌉`.
    pub rows11: usize,
    /// Rows of the Phase-3 matrix over `Q11`, `⌈m/6 + 2m^{2/3}⌉`.
    pub rows12: usize,
    /// Rows of the Phase-3 matrix over `Q21`, `⌈m/8 + 2m^{2/3}⌉`.
    pub rows21: usize,
    /// `⌈m/3 + 9m^{2/3}⌉`.
    pub phase2: usize,
}

/// Per-segment sizes.
#[derive(Debug, Clone)]
pub(crate) struct Segments {
    pub seg1: Vec<u32>,
    pub ranges1: Vec<Range<usize>>,
    /// Phase-2 slots of each segment, interleaved so transmitter 2's early activity spreads evenly.
    pub slots2: Vec<Vec<usize>>,
    /// Quotas of `Q11`, `Q12`, `Q21`, Phase-1 `Q22` and Phase-2 `Q22`.
    pub quota: [Vec<usize>; 5],
    pub rows11: Vec<usize>,
    pub rows12: Vec<usize>,
    pub rows21: Vec<usize>,
    pub len3: Vec<usize>,
}

impl Segments {
    pub fn gens(&self) -> usize {
        self.ranges1.len()
    }

    pub fn quota22(&self, g: usize) -> usize {
        self.quota[3][g] + self.quota[4][g]
    }
}

impl AsymmetricPlan {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!("m = {m} leaves transmitter 1 without bits")));
        }
        let mf = m as f64;
        let s = slack(m);
        Ok(Self {
            m,
            m1: 3 * m / 4,
            phase1: ceil(mf + s),
            padded: ceil(mf / 4.0 + 2.0 * s),
            padded22: ceil(mf / 3.0 + 3.0 * s),
            rows11: ceil(mf / 12.0 + 2.0 * s),
            rows12: ceil(mf / 6.0 + 2.0 * s),
            rows21: ceil(mf / 8.0 + 2.0 * s),
            phase2: ceil(mf / 3.0 + 9.0 * s),
        })
    }

    /// Number of segments for about `target` unknowns per receiver system.
    #[must_use]
    pub fn generations(&self, target: usize) -> usize {
        (3 * self.m).div_ceil(target.max(1).saturating_mul(2)).clamp(1, self.phase1.min(self.phase2).max(1))
    }

    pub(crate) fn segments(&self, target: usize) -> Segments {
        let gens = self.generations(target);
        let (seg1, ranges1) = slot_segments(self.phase1, gens);
        let slots2 = (0..gens).map(|g| (g..self.phase2).step_by(gens).collect()).collect();
        let w: Vec<usize> = ranges1.iter().map(|r| r.len()).collect();
        let quota = [
            apportion(self.padded, &w),
            apportion(self.padded, &w),
            apportion(self.padded, &w),
            apportion(self.padded, &w),
            apportion(self.padded22 - self.padded, &w),
        ];
        let rows11 = apportion(self.rows11, &w);
        let rows12 = apportion(self.rows12, &w);
        let rows21 = apportion(self.rows21, &w);
        let len3 = (0..gens)
            .map(|g| {
                (4 * rows12[g])
                    .max(2 * quota[1][g])
                    .max(4 * rows21[g])
                    .max(2 * (quota[3][g] + quota[4][g]))
            })
            .collect();
        Segments { seg1, ranges1, slots2, quota, rows11, rows12, rows21, len3 }
    }

    /// Lengths of the three phases with `target` unknowns per segment.
    #[must_use]
    pub fn lengths(&self, target: usize) -> [usize; 3] {
        let len3 = self.segments(target).len3.iter().sum();
        [self.phase1, self.phase2, len3]
    }

    /// Rates of a successful trial.
    #[must_use]
    pub fn rates(&self, target: usize) -> RatePair {
        let total: usize = self.lengths(target).iter().sum();
        RatePair::new(self.m1 as f64 / total as f64, self.m as f64 / total as f64)
    }
}

/// Bits of `Q_{i,1}` whose final slot also carried a bit headed for `Q_{ī,1}`.
fn cross_q1_count(log: &Phase1Log, i: usize) -> usize {
    let (tx, other) = ((i + 1) as u8, (2 - i) as u8);
    log.queues[i]
        .q1()
        .iter()
        .filter(|&&b| {
            let t = log.queues[i].final_slot(b).expect("queued bits were sent");
            let s = &log.slots[t];
            s.active(other) && s.state.g(other, other) && s.state.g(other, tx)
        })
        .count()
}

/// `coeffs` row by row: a random `min(len, rows)`-row prefix times `c`, zero afterwards.
fn stream_coeffs(len: usize, c: &BitMatrix, slots: usize, rng: &mut impl rand::Rng) -> Result<BitMatrix> {
    let r = random_matrix_with(slots.min(len), c.rows(), 0.5, rng)?;
    r.mul(c)
}

fn values(bits: &[usize], width: usize, msg: &BitVector) -> BitVector {
    let mut v = BitVector::zeros(width);
    for (k, &b) in bits.iter().enumerate() {
        v.set(k, msg.bit(b));
    }
    v
}

fn symbol(coeffs: &BitMatrix, k: usize, v: &BitVector) -> BitVector {
    if k < coeffs.rows() {
        coeffs.row_vector(k)
    } else {
        BitVector::zeros(v.len())
    }
}

/// One Phase-2 or Phase-3 slot as the receivers see it.
struct CodedSlot {
    state: ChannelState,
    /// Transmitter 2's raw bit in Phase 2.
    raw2: Option<usize>,
    y: [bool; 2],
}

/// One trial of the asymmetric scheme under the default options.
pub fn run_asymmetric(m: usize, p: f64, seed: u64) -> Result<TrialReport> {
    run_asymmetric_with(m, p, seed, &RunOptions::default())
}

/// The mirrored corner: the roles of the two pairs are exchanged.
pub fn run_asymmetric_mirrored(m: usize, p: f64, seed: u64) -> Result<TrialReport> {
    Ok(run_asymmetric(m, p, seed)?.mirrored())
}

/// One trial of the asymmetric scheme.
pub fn run_asymmetric_with(m: usize, p: f64, seed: u64, opts: &RunOptions) -> Result<TrialReport> {
    if p != 0.5 {
        return Err(Error::InvalidParameter(format!(
            "the asymmetric scheme is defined for p = 0.5 (got {p})"
        )));
    }
    let plan = AsymmetricPlan::new(m)?;
    let seg = plan.segments(opts.generation_unknowns);
    let gens = seg.gens();
    let m1 = plan.m1;
    let s = slack(m);
    let model = ChannelModel::new(p)?;
    let mut msg_rng = stream(seed, Stream::Message);
    let x1 = BitVector::random(m1, 0.5, &mut msg_rng)?;
    let x2 = BitVector::random(m, 0.5, &mut msg_rng)?;
    let mut chan = stream(seed, Stream::Channel);
    let mut feed = DelayedFeed::new(CsitView::preset(opts.view), opts.trap);
    let log = run_phase1([(0..m1).collect(), (0..m1).collect()], [&x1, &x2], plan.phase1, &model, &mut feed, &mut chan)?;

    let lengths = plan.lengths(opts.generation_unknowns);
    let mut report = TrialReport {
        scheme: Scheme::AsymmetricV2,
        m: [m1, m],
        p,
        view: opts.view,
        seed,
        total_uses: lengths.iter().sum(),
        phase_lengths: lengths.to_vec(),
        decoded: [false, false],
        rate: None,
        ledger: ErrorLedger::default(),
        outcome: Outcome::Halted,
    };
    fill_ledger(&mut report.ledger, &log, [plan.padded; 2], 0.5, s);
    for i in 0..2 {
        let min = 0.25 * plan.padded as f64 - s;
        if (cross_q1_count(&log, i) as f64) < min {
            report.ledger.type_iv = true;
        }
    }

    let seg1 = &seg.seg1;
    let seg_of = |tx: usize| {
        let q = &log.queues[tx];
        move |b: usize| seg1[q.final_slot(b).expect("sent")] as usize
    };
    let q11 = by_segment(log.queues[0].q1(), gens, seg_of(0));
    let q12 = by_segment(log.queues[0].q2(), gens, seg_of(0));
    let d1 = by_segment(log.queues[0].delivered(), gens, seg_of(0));
    let q21 = by_segment(log.queues[1].q1(), gens, seg_of(1));
    let mut q22 = by_segment(log.queues[1].q2(), gens, seg_of(1));
    let d2a = by_segment(log.queues[1].delivered(), gens, seg_of(1));
    for g in 0..gens {
        let over = q11[g].len() > seg.quota[0][g]
            || q12[g].len() > seg.quota[1][g]
            || q21[g].len() > seg.quota[2][g]
            || q22[g].len() > seg.quota[3][g];
        report.ledger.type_ii |= over;
    }
    if report.ledger.halted() {
        return Ok(report);
    }

    let mut coding = stream(seed, Stream::Coding);
    let mut mats = |rows: &[usize], cols: &dyn Fn(usize) -> usize| -> Result<Vec<BitMatrix>> {
        (0..gens).map(|g| random_matrix_with(rows[g], cols(g), 0.5, &mut coding)).collect()
    };
    let c11 = mats(&seg.rows11, &|g| seg.quota[0][g])?;
    let c12 = mats(&seg.rows12, &|g| seg.quota[0][g])?;
    let c13 = mats(&seg.quota[1], &|g| seg.quota[1][g])?;
    let c21 = mats(&seg.rows21, &|g| seg.quota[2][g])?;
    let sq22: Vec<usize> = (0..gens).map(|g| seg.quota22(g)).collect();
    let c22 = mats(&sq22, &|g| sq22[g])?;

    // Phase 2.
    let mut coder = stream(seed, Stream::Erasure);
    let coef2 = (0..gens)
        .map(|g| stream_coeffs(seg.slots2[g].len(), &c11[g], seg.slots2[g].len(), &mut coder))
        .collect::<Result<Vec<_>>>()?;
    let v11: Vec<BitVector> = (0..gens).map(|g| values(&q11[g], seg.quota[0][g], &x1)).collect();
    let mut pending: VecDeque<usize> = (m1..m).collect();
    let mut q22b = vec![Vec::new(); gens];
    let mut d2b = vec![Vec::new(); gens];
    let mut phase2 = Vec::with_capacity(plan.phase2);
    for t in 0..plan.phase2 {
        let (g, k) = (t % gens, t / gens);
        let s1 = coef2[g].row_vector(k).dot(&v11[g]);
        let raw2 = pending.front().copied();
        let state = sample_state(&model, &mut chan);
        let (y1, y2) = transmit(&state, s1, raw2.is_some_and(|b| x2.bit(b)));
        feed.push(state);
        if let Some(b) = raw2 {
            let instant = plan.phase1 + t + 1;
            let g_own = feed.observe(2, Link::new(2, 2), instant)?;
            let g_cross = feed.observe(2, Link::new(2, 1), instant)?;
            match (g_own, g_cross) {
                (true, _) => d2b[g].push(b),
                (false, true) => q22b[g].push(b),
                (false, false) => {}
            }
            if g_own || g_cross {
                pending.pop_front();
            }
        }
        phase2.push(CodedSlot { state, raw2, y: [y1, y2] });
    }
    report.ledger.type_i |= !pending.is_empty();
    let n22: usize = q22.iter().map(Vec::len).sum::<usize>() + q22b.iter().map(Vec::len).sum::<usize>();
    report.ledger.counts[1][1] = n22;
    report.ledger.thresholds[1][1] = plan.padded22;
    report.ledger.type_ii |= n22 > plan.padded22 || (0..gens).any(|g| q22b[g].len() > seg.quota[4][g]);
    if report.ledger.halted() {
        return Ok(report);
    }
    for g in 0..gens {
        let extra = std::mem::take(&mut q22b[g]);
        q22[g].extend(extra);
    }

    // Phase 3, decoded segment by segment as it is sent.
    let id2 = |b: usize| m1 + b;
    let mut deficit = [0usize; 2];
    let mut wrong = [false; 2];
    for g in 0..gens {
        let len = seg.len3[g];
        let a11 = stream_coeffs(len, &c12[g], 4 * seg.rows12[g], &mut coder)?;
        let a12 = stream_coeffs(len, &c13[g], 2 * seg.quota[1][g], &mut coder)?;
        let b21 = stream_coeffs(len, &c21[g], 4 * seg.rows21[g], &mut coder)?;
        let b22 = stream_coeffs(len, &c22[g], 2 * sq22[g], &mut coder)?;
        let v12 = values(&q12[g], seg.quota[1][g], &x1);
        let v21 = values(&q21[g], seg.quota[2][g], &x2);
        let v22 = values(&q22[g], sq22[g], &x2);
        let mut phase3 = Vec::with_capacity(len);
        let mut rows = Vec::with_capacity(len);
        for k in 0..len {
            let c = [
                symbol(&a11, k, &v11[g]),
                symbol(&a12, k, &v12),
                symbol(&b21, k, &v21),
                symbol(&b22, k, &v22),
            ];
            let s1 = c[0].dot(&v11[g]) ^ c[1].dot(&v12);
            let s2 = c[2].dot(&v21) ^ c[3].dot(&v22);
            let state = sample_state(&model, &mut chan);
            let (y1, y2) = transmit(&state, s1, s2);
            phase3.push(CodedSlot { state, raw2: None, y: [y1, y2] });
            rows.push(c);
        }

        let ids = |v: &[usize]| v.iter().map(|&b| id2(b)).collect::<Vec<_>>();
        let (t21, t22, t2a, t2b) = (ids(&q21[g]), ids(&q22[g]), ids(&d2a[g]), ids(&d2b[g]));
        for rx in [1u8, 2] {
            let j = usize::from(rx - 1);
            // Block indices of Q11, Q12, Q21, Q22.
            let (mut sys, blk) = if rx == 1 {
                let sys = JointSystem::new(&[&t21, &t22, &t2b], &[&q11[g], &q12[g], &d1[g]]);
                (sys, [3, 4, 0, 1])
            } else {
                let sys = JointSystem::new(&[&q11[g], &q12[g]], &[&t21, &t22, &t2a, &t2b]);
                (sys, [0, 1, 2, 3])
            };
            for t in seg.ranges1[g].clone() {
                let slot = &log.slots[t];
                let mut row = sys.row();
                let mut any = false;
                for tx in [1u8, 2] {
                    if slot.reaches(tx, rx) {
                        let b = slot.sent[usize::from(tx - 1)].expect("active");
                        sys.add_bit(&mut row, if tx == 1 { b } else { id2(b) });
                        any = true;
                    }
                }
                if any {
                    sys.push(row, log.y[j][t]);
                }
            }
            for (k, &t) in seg.slots2[g].iter().enumerate() {
                let slot = &phase2[t];
                let mut row = sys.row();
                let tx1 = slot.state.g(1, rx);
                if tx1 {
                    sys.add_block(&mut row, blk[0], &coef2[g].row_vector(k));
                }
                let tx2 = slot.raw2.filter(|_| slot.state.g(2, rx));
                if let Some(b) = tx2 {
                    sys.add_bit(&mut row, id2(b));
                }
                if tx1 || tx2.is_some() {
                    sys.push(row, slot.y[j]);
                }
            }
            for (slot, c) in phase3.iter().zip(&rows) {
                let (h1, h2) = (slot.state.g(1, rx), slot.state.g(2, rx));
                if !(h1 || h2) {
                    continue;
                }
                let mut row = sys.row();
                if h1 {
                    sys.add_block(&mut row, blk[0], &c[0]);
                    sys.add_block(&mut row, blk[1], &c[1]);
                }
                if h2 {
                    sys.add_block(&mut row, blk[2], &c[2]);
                    sys.add_block(&mut row, blk[3], &c[3]);
                }
                sys.push(row, slot.y[j]);
            }
            match sys.solve() {
                Ok(bits) => {
                    let ok = bits.iter().all(|&(id, v)| if rx == 1 { x1.bit(id) == v } else { x2.bit(id - m1) == v });
                    wrong[j] |= !ok;
                }
                Err(d) => deficit[j] += d,
            }
        }
    }

    report.decoded = [deficit[0] == 0 && !wrong[0], deficit[1] == 0 && !wrong[1]];
    report.outcome = if report.decoded == [true, true] {
        report.rate = Some(plan.rates(opts.generation_unknowns));
        Outcome::Success
    } else {
        let receivers: Vec<u8> = (1..=2).filter(|&r| !report.decoded[usize::from(r - 1)]).collect();
        Outcome::DecodeFailure {
            stage: Stage::Joint,
            deficit: receivers.iter().map(|&r| deficit[usize::from(r - 1)]).collect(),
            receivers,
        }
    };
    Ok(report)
}

//! Symmetric scheme for any `p`.
//!
//! Phase 1 is the queue state machine stretched to `m/(1−q²)` slots. When
//! `p ≠ 1/2` the two queues no longer have equal expected sizes, so instead
//! of fixed-size combining matrices and a multicast, Phase 2 lets each
//! transmitter send fresh random combinations of all its queued bits. A
//! receiver decodes jointly over both phases, which absorbs the surplus-queue
//! pairings and the point-to-point stream for the rest of the second queue.
//! At `p = 1/2` the symmetric scheme runs unchanged.

use super::joint::{by_segment, slot_segments, JointSystem};
use super::phase1::run_phase1;
use super::symmetric::{fill_ledger, run_symmetric_with};
use super::{apportion, ceil, slack, stream, ErrorLedger, Outcome, RunOptions, Scheme, Stage, Stream, TrialReport};
use crate::channel::{check_probability, sample_state, transmit, ChannelModel, ChannelState, CsitView, DelayedFeed};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::regions::RatePair;

/// Rate back-off of the multicast when `p = 1/2` hands over to the symmetric scheme.
pub const DEFAULT_DELTA: f64 = 0.02;

/// Phase lengths and queue sizes for general `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralPlan {
    pub m: usize,
    pub p: f64,
    /// `⌈m/(1−q²) + m^{2/3}⌉`.
    pub phase1: usize,
    /// Padded sizes `⌈mp/(1+q) + 2m^{2/3}⌉` and `⌈mq/(1+q) + 2m^{2/3}⌉`.
    pub padded: [usize; 2],
    /// `⌈max{(m/(1+q) + 2m^{2/3})/(1−q²), (mq/(1+q) + 2m^{2/3})/p}⌉`.
    pub phase2: usize,
}

impl GeneralPlan {
    pub fn new(m: usize, p: f64) -> Result<Self> {
        check_probability(p)?;
        if m == 0 || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!("need m > 0 and 0 < p < 1 (got m = {m}, p = {p})")));
        }
        let (mf, q, s) = (m as f64, 1.0 - p, slack(m));
        let both = 1.0 - q * q;
        Ok(Self {
            m,
            p,
            phase1: ceil(mf / both + s),
            padded: [ceil(mf * p / (1.0 + q) + 2.0 * s), ceil(mf * q / (1.0 + q) + 2.0 * s)],
            phase2: ceil(((mf / (1.0 + q) + 2.0 * s) / both).max((mf * q / (1.0 + q) + 2.0 * s) / p)),
        })
    }

    #[must_use]
    pub fn total(&self) -> usize {
        self.phase1 + self.phase2
    }

    /// Symmetric rate of a successful trial.
    #[must_use]
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.total() as f64
    }

    /// Segments for about `target` unknowns per receiver system.
    #[must_use]
    pub fn generations(&self, target: usize) -> usize {
        let q = 1.0 - self.p;
        let cols = self.m as f64 * (1.0 + 1.0 / (1.0 + q));
        ceil(cols / target.max(1) as f64).clamp(1, self.phase1.min(self.phase2).max(1))
    }
}

/// One trial for general `p` under the default options.
pub fn run_general(m: usize, p: f64, seed: u64) -> Result<TrialReport> {
    run_general_with(m, p, seed, &RunOptions::default())
}

/// One trial for general `p`.
pub fn run_general_with(m: usize, p: f64, seed: u64, opts: &RunOptions) -> Result<TrialReport> {
    if p == 0.5 {
        let mut r = run_symmetric_with(m, p, DEFAULT_DELTA, seed, opts)?;
        r.scheme = Scheme::GeneralP;
        return Ok(r);
    }
    let plan = GeneralPlan::new(m, p)?;
    let gens = plan.generations(opts.generation_unknowns);
    let s = slack(m);
    let q = 1.0 - p;
    let model = ChannelModel::new(p)?;
    let mut msg_rng = stream(seed, Stream::Message);
    let x = [BitVector::random(m, 0.5, &mut msg_rng)?, BitVector::random(m, 0.5, &mut msg_rng)?];
    let mut chan = stream(seed, Stream::Channel);
    let mut feed = DelayedFeed::new(CsitView::preset(opts.view), opts.trap);
    let log = run_phase1([(0..m).collect(), (0..m).collect()], [&x[0], &x[1]], plan.phase1, &model, &mut feed, &mut chan)?;

    let mut report = TrialReport {
        scheme: Scheme::GeneralP,
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
    fill_ledger(&mut report.ledger, &log, plan.padded, q, s);

    let (seg1, ranges1) = slot_segments(plan.phase1, gens);
    let w: Vec<usize> = ranges1.iter().map(|r| r.len()).collect();
    let quota = [apportion(plan.padded[0], &w), apportion(plan.padded[1], &w)];
    // Bit ids: transmitter 1's bits are 0..m, transmitter 2's are m..2m.
    let mut blocks: [[Vec<Vec<usize>>; 3]; 2] = Default::default();
    for (i, qs) in log.queues.iter().enumerate() {
        let seg_of = |b: usize| seg1[qs.final_slot(b).expect("sent")] as usize;
        for (j, bits) in [qs.q1(), qs.q2(), qs.delivered()].into_iter().enumerate() {
            let ids: Vec<usize> = bits.iter().map(|&b| b + i * m).collect();
            blocks[i][j] = by_segment(&ids, gens, |id| seg_of(id - i * m));
            if j < 2 {
                report.ledger.type_ii |= (0..gens).any(|g| blocks[i][j][g].len() > quota[j][g]);
            }
        }
    }
    if report.ledger.halted() {
        return Ok(report);
    }

    // Phase 2: slot t serves segment t mod G.
    let mut coder = stream(seed, Stream::Erasure);
    let value = |id: usize| x[id / m].bit(id % m);
    let mut phase2: Vec<(ChannelState, [[BitVector; 2]; 2], [bool; 2])> = Vec::with_capacity(plan.phase2);
    for t in 0..plan.phase2 {
        let g = t % gens;
        let mut coeffs: [[BitVector; 2]; 2] = Default::default();
        let mut sent = [false; 2];
        for i in 0..2 {
            for j in 0..2 {
                let c = BitVector::random(quota[j][g], 0.5, &mut coder)?;
                for (k, &id) in blocks[i][j][g].iter().enumerate() {
                    sent[i] ^= c.bit(k) && value(id);
                }
                coeffs[i][j] = c;
            }
        }
        let state = sample_state(&model, &mut chan);
        let (y1, y2) = transmit(&state, sent[0], sent[1]);
        phase2.push((state, coeffs, [y1, y2]));
    }

    let mut deficit = [0usize; 2];
    let mut wrong = [false; 2];
    for g in 0..gens {
        for rx in [1u8, 2] {
            let (own, other) = (usize::from(rx - 1), usize::from(2 - rx));
            let b = |i: usize, j: usize| blocks[i][j][g].as_slice();
            let mut sys = JointSystem::new(&[b(other, 0), b(other, 1)], &[b(own, 0), b(own, 1), b(own, 2)]);
            // Block index of queue j of transmitter i.
            let blk = |i: usize, j: usize| if i == own { 2 + j } else { j };
            for t in ranges1[g].clone() {
                let slot = &log.slots[t];
                let mut row = sys.row();
                let mut any = false;
                for i in 0..2 {
                    if slot.reaches((i + 1) as u8, rx) {
                        sys.add_bit(&mut row, slot.sent[i].expect("active") + i * m);
                        any = true;
                    }
                }
                if any {
                    sys.push(row, log.y[own][t]);
                }
            }
            for (state, coeffs, y) in phase2.iter().skip(g).step_by(gens) {
                let hear: Vec<usize> = (0..2).filter(|&i| state.g((i + 1) as u8, rx)).collect();
                if hear.is_empty() {
                    continue;
                }
                let mut row = sys.row();
                for &i in &hear {
                    sys.add_block(&mut row, blk(i, 0), &coeffs[i][0]);
                    sys.add_block(&mut row, blk(i, 1), &coeffs[i][1]);
                }
                sys.push(row, y[own]);
            }
            match sys.solve() {
                Ok(bits) => wrong[own] |= bits.iter().any(|&(id, v)| value(id) != v),
                Err(d) => deficit[own] += d,
            }
        }
    }

    report.decoded = [deficit[0] == 0 && !wrong[0], deficit[1] == 0 && !wrong[1]];
    report.outcome = if report.decoded == [true, true] {
        report.rate = Some(RatePair::new(plan.rate(), plan.rate()));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::symmetric_corner;

    #[test]
    fn target_values() {
        let t = |p| symmetric_corner(p).unwrap();
        assert!((t(0.5) - 0.45).abs() < 1e-12);
        assert!((t(0.7) - 1.3 * 0.91 / 2.3).abs() < 1e-12);
        assert!((t(0.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn half_matches_symmetric_time() {
        // 4m/3 + 8m/9 = 20m/9 without slack.
        let plan = GeneralPlan::new(27_000, 0.5).unwrap();
        assert_eq!(plan.phase1, 36_900);
        assert_eq!(plan.padded, [10_800, 10_800]);
        assert_eq!(plan.phase2, 26_400);
    }

    #[test]
    fn plan_rate_tracks_target() {
        for p in [0.3, 0.7, 0.9] {
            let plan = GeneralPlan::new(10_000_000, p).unwrap();
            assert!((plan.rate() - symmetric_corner(p).unwrap()).abs() < 0.01, "p = {p}");
        }
    }

    #[test]
    fn small_trials_decode() {
        for (p, seed) in [(0.7, 1), (0.3, 2), (0.8, 3)] {
            let r = run_general(6_000, p, seed).unwrap();
            assert!(r.succeeded(), "p = {p}: {:?} {:?}", r.outcome, r.ledger);
            assert_eq!(r.scheme, Scheme::GeneralP);
        }
    }

    #[test]
    fn half_delegates() {
        let r = run_general(2_000, 0.5, 4).unwrap();
        let s = crate::protocol::run_symmetric(2_000, 0.5, DEFAULT_DELTA, 4).unwrap();
        assert_eq!(r.total_uses, s.total_uses);
        assert_eq!(r.outcome, s.outcome);
        assert_eq!(r.scheme, Scheme::GeneralP);
    }

    #[test]
    fn rejects_edges() {
        assert!(run_general(1_000, 0.0, 1).is_err());
        assert!(run_general(1_000, 1.0, 1).is_err());
    }
}

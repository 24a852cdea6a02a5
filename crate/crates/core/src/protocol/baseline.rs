//! Reference schemes without feedback: random linear coding to both receivers.

use super::{stream, ErrorLedger, Outcome, Scheme, Stage, Stream, TrialReport};
use crate::channel::{check_probability, sample_states, ChannelModel, ViewId};
use crate::error::{Error, Result};
use crate::gf2::{solve_trailing, BitMatrix, BitVector};
use crate::multicast::{transmit_joint, JointCode, MulticastSession, GENERATION_UNKNOWNS};
use crate::regions::RatePair;

/// Slots for `(m1, m2)` at `δ` inside the no-feedback region.
///
/// `⌈max{m1/(p−δ), m2/(p−δ), (m1+m2)/(1−q²−δ)}⌉`: each receiver decodes a
/// two-user multiple-access channel.
pub fn baseline_duration(m1: usize, m2: usize, p: f64, delta: f64) -> Result<usize> {
    check_probability(p)?;
    let q = 1.0 - p;
    let sum = 1.0 - q * q;
    if !(delta > 0.0 && delta < p.min(sum)) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, {})", p.min(sum))));
    }
    let t = (m1.max(m2) as f64 / (p - delta)).max((m1 + m2) as f64 / (sum - delta));
    Ok(t.ceil() as usize)
}

fn report(scheme: Scheme, m: [usize; 2], p: f64, seed: u64, total: usize) -> TrialReport {
    TrialReport {
        scheme,
        m,
        p,
        view: ViewId::V0,
        seed,
        total_uses: total,
        phase_lengths: vec![total],
        decoded: [false, false],
        rate: None,
        ledger: ErrorLedger::default(),
        outcome: Outcome::Halted,
    }
}

fn finish(r: &mut TrialReport, deficit: [usize; 2], stage: Stage) {
    r.outcome = if r.decoded == [true, true] {
        let t = r.total_uses as f64;
        r.rate = Some(RatePair::new(r.m[0] as f64 / t, r.m[1] as f64 / t));
        Outcome::Success
    } else {
        let receivers: Vec<u8> = (1..=2).filter(|&k| !r.decoded[usize::from(k - 1)]).collect();
        Outcome::DecodeFailure {
            stage,
            deficit: receivers.iter().map(|&k| deficit[usize::from(k - 1)]).collect(),
            receivers,
        }
    };
}

/// `[A_1 | A_2 | y]` reordered to `[A_2 | A_1 | y]`.
fn swap_blocks(sys: &BitMatrix, a: usize) -> BitMatrix {
    let vars = sys.cols() - 1;
    let mut out = BitMatrix::zeros(0, sys.cols());
    for r in 0..sys.rows() {
        let row = sys.row_vector(r);
        let mut v = row.slice(a..vars);
        v.append(&row.slice(0..a));
        v.push(row.bit(vars));
        out.push_row(&v);
    }
    out
}

/// Both transmitters send random combinations without any channel feedback;
/// each receiver decodes its own message, treating the other as interference
/// it may or may not resolve.
pub fn run_baseline_no_csit(m1: usize, m2: usize, p: f64, delta: f64, seed: u64) -> Result<TrialReport> {
    if m1 + m2 == 0 {
        return Err(Error::InvalidParameter("both messages are empty".into()));
    }
    let total = baseline_duration(m1, m2, p, delta)?;
    let model = ChannelModel::new(p)?;
    let mut msg_rng = stream(seed, Stream::Message);
    let x = [BitVector::random(m1, 0.5, &mut msg_rng)?, BitVector::random(m2, 0.5, &mut msg_rng)?];
    let states = sample_states(&model, total, &mut stream(seed, Stream::Channel));
    let code = JointCode::with_target(m1, m2, GENERATION_UNKNOWNS);
    let rx = transmit_joint(&code, [&x[0], &x[1]], &states, &mut stream(seed, Stream::Coding))?;

    let mut r = report(Scheme::BaselineNoCsit, [m1, m2], p, seed, total);
    let mut deficit = [0usize; 2];
    let mut got = [BitVector::zeros(0), BitVector::zeros(0)];
    for g in 0..code.generations() {
        let (a, b) = (code.range(g, 1).len(), code.range(g, 2).len());
        let sys = rx[0].system(g);
        for (k, solved) in [
            solve_trailing(swap_blocks(sys, a), b, a),
            solve_trailing(rx[1].system(g).clone(), a, b),
        ]
        .into_iter()
        .enumerate()
        {
            match solved {
                Ok(v) => got[k].append(&v),
                Err(Error::NoUniqueSolution { rank, cols }) => deficit[k] += cols - rank,
                Err(e) => return Err(e),
            }
        }
    }
    r.decoded = [deficit[0] == 0 && got[0] == x[0], deficit[1] == 0 && got[1] == x[1]];
    finish(&mut r, deficit, Stage::Joint);
    Ok(r)
}

/// Two-multicast of both messages as a scheme of its own: each receiver
/// decodes both messages, and the report tracks the intended one.
pub fn run_multicast(m1: usize, m2: usize, p: f64, delta: f64, seed: u64) -> Result<TrialReport> {
    if m1 + m2 == 0 {
        return Err(Error::InvalidParameter("both messages are empty".into()));
    }
    let model = ChannelModel::new(p)?;
    let session = MulticastSession::new(m1, m2, &model, delta)?;
    let mut msg_rng = stream(seed, Stream::Message);
    let x = [BitVector::random(m1, 0.5, &mut msg_rng)?, BitVector::random(m2, 0.5, &mut msg_rng)?];
    let states = sample_states(&model, session.duration, &mut stream(seed, Stream::Channel));
    let mut r = report(Scheme::Multicast, [m1, m2], p, seed, session.duration);
    match session.run_over(&x[0], &x[1], &states, &mut stream(seed, Stream::Multicast)) {
        Ok(out) => {
            r.decoded = [out.at_rx1.0 == x[0], out.at_rx2.1 == x[1]];
            finish(&mut r, [0, 0], Stage::Multicast);
        }
        Err(Error::DecodeFailure { receivers, deficit }) => {
            r.outcome = Outcome::DecodeFailure { stage: Stage::Multicast, receivers, deficit };
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_follows_mac_constraints() {
        // Sum constraint binds at p = 1/2: 2000 / 0.73.
        assert_eq!(baseline_duration(1000, 1000, 0.5, 0.02).unwrap(), 2740);
        // Single user: m1 / (p − δ).
        assert_eq!(baseline_duration(1000, 0, 0.5, 0.02).unwrap(), 2084);
        assert!(baseline_duration(10, 10, 0.5, 0.6).is_err());
    }

    #[test]
    fn symmetric_baseline_decodes() {
        let r = run_baseline_no_csit(4000, 4000, 0.5, 0.02, 3).unwrap();
        assert!(r.succeeded(), "{:?}", r.outcome);
        let rate = r.rate.unwrap();
        assert!((rate.r1 - 0.365).abs() < 0.002);
    }

    #[test]
    fn single_user_reaches_p() {
        let r = run_baseline_no_csit(3000, 0, 0.5, 0.02, 4).unwrap();
        assert!(r.succeeded(), "{:?}", r.outcome);
        assert!((r.rate.unwrap().r1 - 0.48).abs() < 0.002);
    }

    #[test]
    fn multicast_report() {
        let r = run_multicast(2000, 1000, 0.5, 0.05, 5).unwrap();
        assert!(r.succeeded());
        assert_eq!(r.scheme, Scheme::Multicast);
        assert_eq!(r.total_uses, 4286);
        assert!(run_multicast(0, 0, 0.5, 0.05, 5).is_err());
    }
}

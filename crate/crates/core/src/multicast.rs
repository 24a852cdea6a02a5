//! Two-multicast: both transmitters deliver their blocks to both receivers.
//!
//! Each transmitter sends a fresh random GF(2) combination of its own block
//! every slot. Coefficients come from randomness shared with the receivers,
//! so receiver `j` learns the equation `(g1j·c1, g2j·c2)·(q1; q2) = y_j`
//! whenever one of its incoming links is live.
//!
//! Blocks are cut into generations: slot `t` carries combinations of
//! generation `t mod G` only, and each receiver solves one system per
//! generation. Generations hold about [`GENERATION_UNKNOWNS`] joint unknowns,
//! which keeps elimination cost linear in the block size while the rate
//! back-off still leaves every generation a comfortable surplus of equations.

use std::ops::Range;

use rand::Rng;

use crate::channel::{check_probability, sample_states, transmit, ChannelModel, ChannelState};
use crate::error::{Error, Result};
use crate::gf2::{solve_augmented, BitMatrix, BitVector};

/// Target number of joint unknowns per generation.
pub const GENERATION_UNKNOWNS: usize = 5000;

/// Channel uses needed to multicast `m1 + m2` bits at sum rate `1 − q² − δ`.
pub fn multicast_duration(m1: usize, m2: usize, p: f64, delta: f64) -> Result<usize> {
    check_probability(p)?;
    let q = 1.0 - p;
    let sum_rate = 1.0 - q * q;
    if !(delta > 0.0 && delta < sum_rate) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, {sum_rate})"
        )));
    }
    Ok(((m1 + m2) as f64 / (sum_rate - delta)).ceil() as usize)
}

/// Splits `0..len` into `parts` contiguous ranges whose sizes differ by at most one.
#[must_use]
pub fn split_even(len: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    (0..parts)
        .map(|k| len * k / parts..len * (k + 1) / parts)
        .collect()
}

/// Generation layout shared by both transmitters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCode {
    m: [usize; 2],
    ranges: Vec<[Range<usize>; 2]>,
}

impl JointCode {
    /// Layout with exactly `generations` generations.
    #[must_use]
    pub fn new(m1: usize, m2: usize, generations: usize) -> Self {
        let g = generations.max(1);
        let r1 = split_even(m1, g);
        let r2 = split_even(m2, g);
        Self {
            m: [m1, m2],
            ranges: r1.into_iter().zip(r2).map(|(a, b)| [a, b]).collect(),
        }
    }

    /// Layout with about `target` joint unknowns per generation.
    #[must_use]
    pub fn with_target(m1: usize, m2: usize, target: usize) -> Self {
        Self::new(m1, m2, (m1 + m2).div_ceil(target.max(1)))
    }

    /// Number of generations.
    #[must_use]
    pub fn generations(&self) -> usize {
        self.ranges.len()
    }

    /// Generation served at slot `t` (0-based).
    #[must_use]
    pub fn generation_of_slot(&self, t: usize) -> usize {
        t % self.ranges.len()
    }

    /// Block positions of transmitter `tx` (1 or 2) in generation `g`.
    #[must_use]
    pub fn range(&self, g: usize, tx: u8) -> Range<usize> {
        self.ranges[g][usize::from(tx - 1)].clone()
    }

    /// Joint unknowns of generation `g`.
    #[must_use]
    pub fn unknowns(&self, g: usize) -> usize {
        self.ranges[g][0].len() + self.ranges[g][1].len()
    }
}

/// Equations gathered by one receiver, one augmented system per generation.
#[derive(Debug, Clone)]
pub struct ReceiverSystems {
    systems: Vec<BitMatrix>,
}

impl ReceiverSystems {
    /// Total number of equations absorbed.
    #[must_use]
    pub fn equations(&self) -> usize {
        self.systems.iter().map(BitMatrix::rows).sum()
    }

    /// Augmented system `[A | y]` of generation `g`.
    #[must_use]
    pub fn system(&self, g: usize) -> &BitMatrix {
        &self.systems[g]
    }
}

/// Runs the joint code over `states`, returning what each receiver collected.
///
/// The coefficient rows are drawn every slot from `coeff_rng`, whether or not
/// the links carrying them are live.
pub fn transmit_joint<R: Rng + ?Sized>(
    code: &JointCode,
    blocks: [&BitVector; 2],
    states: &[ChannelState],
    coeff_rng: &mut R,
) -> Result<[ReceiverSystems; 2]> {
    for (k, b) in blocks.iter().enumerate() {
        if b.len() != code.m[k] {
            return Err(Error::InvalidParameter(format!(
                "block {} has {} bits, layout expects {}",
                k + 1,
                b.len(),
                code.m[k]
            )));
        }
    }
    let gens = code.generations();
    let pieces: Vec<[BitVector; 2]> = (0..gens)
        .map(|g| [blocks[0].slice(code.range(g, 1)), blocks[1].slice(code.range(g, 2))])
        .collect();
    let mut rx: [Vec<BitMatrix>; 2] = std::array::from_fn(|_| {
        (0..gens)
            .map(|g| BitMatrix::zeros(0, code.unknowns(g) + 1))
            .collect()
    });
    for (t, state) in states.iter().enumerate() {
        let g = code.generation_of_slot(t);
        let [p1, p2] = &pieces[g];
        let c1 = BitVector::random(p1.len(), 0.5, coeff_rng)?;
        let c2 = BitVector::random(p2.len(), 0.5, coeff_rng)?;
        let (y1, y2) = transmit(state, c1.dot(p1), c2.dot(p2));
        for (j, y) in [(1u8, y1), (2u8, y2)] {
            let (h1, h2) = (state.g(1, j), state.g(2, j));
            if !(h1 || h2) {
                continue;
            }
            let mut row = if h1 { c1.clone() } else { BitVector::zeros(c1.len()) };
            row.append(&if h2 { c2.clone() } else { BitVector::zeros(c2.len()) });
            row.push(y);
            rx[usize::from(j - 1)][g].push_row(&row);
        }
    }
    let [a, b] = rx;
    Ok([ReceiverSystems { systems: a }, ReceiverSystems { systems: b }])
}

/// Rank shortfall of one receiver, or its decoded blocks.
pub fn decode_joint(code: &JointCode, systems: &ReceiverSystems) -> std::result::Result<[BitVector; 2], usize> {
    let mut out = [BitVector::zeros(0), BitVector::zeros(0)];
    let mut deficit = 0;
    for g in 0..code.generations() {
        let vars = code.unknowns(g);
        match solve_augmented(systems.systems[g].clone(), vars) {
            Ok(x) => {
                let a = code.range(g, 1).len();
                out[0].append(&x.slice(0..a));
                out[1].append(&x.slice(a..vars));
            }
            Err(Error::NoUniqueSolution { rank, cols }) => deficit += cols - rank,
            Err(e) => panic!("noiseless system became {e}"),
        }
    }
    if deficit > 0 {
        Err(deficit)
    } else {
        Ok(out)
    }
}

/// Blocks recovered by both receivers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulticastOutcome {
    pub at_rx1: (BitVector, BitVector),
    pub at_rx2: (BitVector, BitVector),
    /// Channel uses spent.
    pub duration: usize,
    /// Equations absorbed by each receiver.
    pub equations: [usize; 2],
}

/// Parameters of one multicast exchange.
#[derive(Debug, Clone)]
pub struct MulticastSession {
    pub m1: usize,
    pub m2: usize,
    pub delta: f64,
    pub duration: usize,
    code: JointCode,
}

impl MulticastSession {
    /// Session sized for `model` with back-off `delta`.
    pub fn new(m1: usize, m2: usize, model: &ChannelModel, delta: f64) -> Result<Self> {
        Self::with_generation_size(m1, m2, model, delta, GENERATION_UNKNOWNS)
    }

    /// Session with about `unknowns` joint unknowns per generation.
    pub fn with_generation_size(
        m1: usize,
        m2: usize,
        model: &ChannelModel,
        delta: f64,
        unknowns: usize,
    ) -> Result<Self> {
        Ok(Self {
            m1,
            m2,
            delta,
            duration: multicast_duration(m1, m2, model.p(), delta)?,
            code: JointCode::with_target(m1, m2, unknowns),
        })
    }

    /// Generation layout.
    #[must_use]
    pub fn code(&self) -> &JointCode {
        &self.code
    }

    /// Sends `q1`, `q2` over `states` (at least `duration` of them are used).
    pub fn run_over<R: Rng + ?Sized>(
        &self,
        q1: &BitVector,
        q2: &BitVector,
        states: &[ChannelState],
        coeff_rng: &mut R,
    ) -> Result<MulticastOutcome> {
        let used = &states[..self.duration.min(states.len())];
        let systems = transmit_joint(&self.code, [q1, q2], used, coeff_rng)?;
        let decoded = [decode_joint(&self.code, &systems[0]), decode_joint(&self.code, &systems[1])];
        let equations = [systems[0].equations(), systems[1].equations()];
        match decoded {
            [Ok([a1, b1]), Ok([a2, b2])] => {
                assert!(a1 == a2 && b1 == b2, "receivers decoded different blocks");
                Ok(MulticastOutcome {
                    at_rx1: (a1, b1),
                    at_rx2: (a2, b2),
                    duration: used.len(),
                    equations,
                })
            }
            [r1, r2] => {
                let mut receivers = Vec::new();
                let mut deficit = Vec::new();
                for (j, r) in [(1u8, r1), (2u8, r2)] {
                    if let Err(d) = r {
                        receivers.push(j);
                        deficit.push(d);
                    }
                }
                Err(Error::DecodeFailure { receivers, deficit })
            }
        }
    }
}

/// Multicasts `q1` and `q2` over a fresh channel realization drawn from `rng`.
pub fn multicast_run<R: Rng + ?Sized>(
    q1: &BitVector,
    q2: &BitVector,
    model: &ChannelModel,
    delta: f64,
    rng: &mut R,
) -> Result<MulticastOutcome> {
    if q1.len() + q2.len() == 0 {
        return Err(Error::InvalidParameter("both blocks are empty".into()));
    }
    let session = MulticastSession::new(q1.len(), q2.len(), model, delta)?;
    let states = sample_states(model, session.duration, rng);
    session.run_over(q1, q2, &states, rng)
}

//! Channel gains, the channel law, transmitter views and the delayed feed.
//!
//! Gain `G_ij` connects transmitter `i` to receiver `j`. Each receiver sees the
//! XOR of the transmitted bits arriving over live links. Receivers know every
//! gain instantly; transmitters learn a view-dependent subset of links one
//! slot late through a [`DelayedFeed`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// One of the four links, named by (transmitter, receiver).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    G11,
    G12,
    G21,
    G22,
}

impl Link {
    /// All links in index order.
    pub const ALL: [Link; 4] = [Link::G11, Link::G12, Link::G21, Link::G22];

    /// Link from transmitter `from` to receiver `to` (both 1 or 2).
    ///
    /// # Panics
    ///
    /// Panics if either index is not 1 or 2.
    #[must_use]
    pub fn new(from: u8, to: u8) -> Link {
        match (from, to) {
            (1, 1) => Link::G11,
            (1, 2) => Link::G12,
            (2, 1) => Link::G21,
            (2, 2) => Link::G22,
            _ => panic!("link ({from},{to}) does not exist"),
        }
    }

    /// Transmitting end.
    #[must_use]
    pub fn from(self) -> u8 {
        match self {
            Link::G11 | Link::G12 => 1,
            Link::G21 | Link::G22 => 2,
        }
    }

    /// Receiving end.
    #[must_use]
    pub fn to(self) -> u8 {
        match self {
            Link::G11 | Link::G21 => 1,
            Link::G12 | Link::G22 => 2,
        }
    }

    /// The link with both ends relabelled, `(k,l) -> (3-k, 3-l)`.
    #[must_use]
    pub fn mirrored(self) -> Link {
        Link::new(3 - self.from(), 3 - self.to())
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Gains of the four links at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChannelState {
    pub g11: bool,
    pub g12: bool,
    pub g21: bool,
    pub g22: bool,
}

impl ChannelState {
    /// Gain of `link`.
    #[must_use]
    pub fn gain(&self, link: Link) -> bool {
        match link {
            Link::G11 => self.g11,
            Link::G12 => self.g12,
            Link::G21 => self.g21,
            Link::G22 => self.g22,
        }
    }

    /// Gain from transmitter `from` to receiver `to`.
    #[must_use]
    pub fn g(&self, from: u8, to: u8) -> bool {
        self.gain(Link::new(from, to))
    }

    /// State from a 4-bit code, bit `k` holding link `Link::ALL[k]`.
    #[must_use]
    pub fn from_code(code: u8) -> Self {
        Self {
            g11: code & 1 != 0,
            g12: code & 2 != 0,
            g21: code & 4 != 0,
            g22: code & 8 != 0,
        }
    }

    /// Inverse of [`ChannelState::from_code`].
    #[must_use]
    pub fn code(&self) -> u8 {
        u8::from(self.g11) | u8::from(self.g12) << 1 | u8::from(self.g21) << 2 | u8::from(self.g22) << 3
    }
}

/// How the four gains of one instant are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Four independent draws.
    Independent,
    /// Two draws; each transmitter's outgoing links share one value.
    OutgoingCorrelated,
}

/// Homogeneous Bernoulli fading with parameter `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    p: f64,
    mode: CorrelationMode,
}

impl ChannelModel {
    /// Independent gains, each 1 with probability `p`.
    pub fn new(p: f64) -> Result<Self> {
        Self::with_mode(p, CorrelationMode::Independent)
    }

    /// Gains with the given correlation structure.
    pub fn with_mode(p: f64, mode: CorrelationMode) -> Result<Self> {
        check_probability(p)?;
        Ok(Self { p, mode })
    }

    /// Probability that a gain equals 1.
    #[must_use]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Erasure probability `1 - p`.
    #[must_use]
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Correlation structure.
    #[must_use]
    pub fn mode(&self) -> CorrelationMode {
        self.mode
    }
}

/// Rejects probabilities outside `[0, 1]`.
pub fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Draws the gains of one instant.
pub fn sample_state<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> ChannelState {
    match model.mode {
        CorrelationMode::Independent => ChannelState {
            g11: rng.gen_bool(model.p),
            g12: rng.gen_bool(model.p),
            g21: rng.gen_bool(model.p),
            g22: rng.gen_bool(model.p),
        },
        CorrelationMode::OutgoingCorrelated => {
            let a = rng.gen_bool(model.p);
            let b = rng.gen_bool(model.p);
            ChannelState {
                g11: a,
                g12: a,
                g21: b,
                g22: b,
            }
        }
    }
}

/// Draws `n` consecutive instants.
pub fn sample_states<R: Rng + ?Sized>(model: &ChannelModel, n: usize, rng: &mut R) -> Vec<ChannelState> {
    (0..n).map(|_| sample_state(model, rng)).collect()
}

/// Applies the channel law: `y1 = g11·x1 ⊕ g21·x2`, `y2 = g12·x1 ⊕ g22·x2`.
#[must_use]
pub fn transmit(state: &ChannelState, x1: bool, x2: bool) -> (bool, bool) {
    (
        (state.g11 & x1) ^ (state.g21 & x2),
        (state.g12 & x1) ^ (state.g22 & x2),
    )
}

/// The nine view presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewId {
    V0,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
}

impl ViewId {
    /// All presets in order.
    pub const ALL: [ViewId; 9] = [
        ViewId::V0,
        ViewId::V1,
        ViewId::V2,
        ViewId::V3,
        ViewId::V4,
        ViewId::V5,
        ViewId::V6,
        ViewId::V7,
        ViewId::V8,
    ];
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", *self as u8)
    }
}

impl FromStr for ViewId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['V', 'v']).trim_start_matches('.');
        match t.parse::<usize>() {
            Ok(k) if k < 9 => Ok(ViewId::ALL[k]),
            _ => Err(Error::Config(format!("unknown view '{s}' (expected V0..V8)"))),
        }
    }
}

/// Links whose gains each transmitter learns with unit delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsitView {
    id: ViewId,
    tx1: [bool; 4],
    tx2: [bool; 4],
}

impl CsitView {
    /// The preset `id`. Transmitter 2's set mirrors transmitter 1's.
    #[must_use]
    pub fn preset(id: ViewId) -> Self {
        // Links for Tx1 written as (from, to) with i = 1, ī = 2.
        let tx1_links: &[(u8, u8)] = match id {
            ViewId::V0 => &[],
            ViewId::V1 => &[(1, 1)],
            ViewId::V2 => &[(1, 1), (1, 2)],
            ViewId::V3 => &[(1, 1), (2, 2)],
            ViewId::V4 => &[(1, 1), (2, 1)],
            ViewId::V5 => &[(1, 1), (1, 2), (2, 2)],
            ViewId::V6 => &[(1, 1), (1, 2), (2, 1)],
            ViewId::V7 => &[(1, 1), (2, 1), (2, 2)],
            ViewId::V8 => &[(1, 1), (1, 2), (2, 1), (2, 2)],
        };
        let mut tx1 = [false; 4];
        let mut tx2 = [false; 4];
        for &(k, l) in tx1_links {
            let link = Link::new(k, l);
            tx1[link.index()] = true;
            tx2[link.mirrored().index()] = true;
        }
        Self { id, tx1, tx2 }
    }

    /// Preset label.
    #[must_use]
    pub fn id(&self) -> ViewId {
        self.id
    }

    /// True when transmitter `tx` learns `link`.
    #[must_use]
    pub fn grants(&self, tx: u8, link: Link) -> bool {
        match tx {
            1 => self.tx1[link.index()],
            2 => self.tx2[link.index()],
            _ => false,
        }
    }

    /// Links known to transmitter `tx`, in index order.
    #[must_use]
    pub fn links(&self, tx: u8) -> Vec<Link> {
        Link::ALL.into_iter().filter(|&l| self.grants(tx, l)).collect()
    }

    /// Checks `(k,l) ∈ S_Tx1 ⇔ (k̄,l̄) ∈ S_Tx2`.
    #[must_use]
    pub fn is_symmetric(&self) -> bool {
        Link::ALL
            .into_iter()
            .all(|l| self.grants(1, l) == self.grants(2, l.mirrored()))
    }
}

/// Whether view violations are reported or ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Trap {
    /// Reads outside the view fail with an access violation.
    #[default]
    Armed,
    /// Reads are not checked against the view.
    Disarmed,
}

/// Per-link gain history behind a unit delay.
///
/// Instants are numbered from 1. After `push` has recorded instants `1..=k`
/// the feed sits at horizon `t = k + 1`, and transmitters may read instants
/// `1..=t-1` of the links their view grants.
#[derive(Debug, Clone)]
pub struct DelayedFeed {
    view: CsitView,
    trap: Trap,
    history: Vec<ChannelState>,
}

/// Gains of one link over a range of instants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkHistory {
    pub link: Link,
    pub gains: Vec<bool>,
}

impl DelayedFeed {
    /// Empty feed at horizon 1.
    #[must_use]
    pub fn new(view: CsitView, trap: Trap) -> Self {
        Self {
            view,
            trap,
            history: Vec::new(),
        }
    }

    /// The view enforced by this feed.
    #[must_use]
    pub fn view(&self) -> &CsitView {
        &self.view
    }

    /// Records the next instant.
    pub fn push(&mut self, state: ChannelState) {
        self.history.push(state);
    }

    /// Current time `t`; instants before it are observable.
    #[must_use]
    pub fn horizon(&self) -> usize {
        self.history.len() + 1
    }

    fn check(&self, tx: u8, link: Link) -> Result<()> {
        if self.trap == Trap::Armed && !self.view.grants(tx, link) {
            return Err(Error::AccessViolation {
                tx,
                from: link.from(),
                to: link.to(),
                view: self.view.id.to_string(),
            });
        }
        Ok(())
    }

    /// Gain of `link` at `instant`, as seen by transmitter `tx`.
    pub fn observe(&self, tx: u8, link: Link, instant: usize) -> Result<bool> {
        self.check(tx, link)?;
        if instant == 0 || instant >= self.horizon() {
            return Err(Error::NotYetObserved {
                t: self.horizon(),
                instant,
            });
        }
        Ok(self.history[instant - 1].gain(link))
    }

    /// Histories of every link in the view of `tx` for instants `1..t-1`.
    pub fn tx_observation(&self, tx: u8, t: usize) -> Result<Vec<LinkHistory>> {
        if t == 0 || t > self.horizon() {
            return Err(Error::NotYetObserved {
                t: self.horizon(),
                instant: t.saturating_sub(1),
            });
        }
        Ok(self
            .view
            .links(tx)
            .into_iter()
            .map(|link| LinkHistory {
                link,
                gains: self.history[..t - 1].iter().map(|s| s.gain(link)).collect(),
            })
            .collect())
    }

    /// History of a single link for instants `1..t-1`, checked against the view.
    pub fn link_history(&self, tx: u8, link: Link, t: usize) -> Result<Vec<bool>> {
        self.check(tx, link)?;
        if t == 0 || t > self.horizon() {
            return Err(Error::NotYetObserved {
                t: self.horizon(),
                instant: t.saturating_sub(1),
            });
        }
        Ok(self.history[..t - 1].iter().map(|s| s.gain(link)).collect())
    }
}

/// Histories granted to `tx` under `view` for instants `1..t-1` of `feed`.
///
/// The view passed here takes precedence over the feed's own view.
pub fn tx_observation(feed: &DelayedFeed, view: &CsitView, tx: u8, t: usize) -> Result<Vec<LinkHistory>> {
    let scoped = DelayedFeed {
        view: view.clone(),
        trap: Trap::Armed,
        history: feed.history.clone(),
    };
    scoped.tx_observation(tx, t)
}

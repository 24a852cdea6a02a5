//! Phase 1: send the head of the initial queue, sort it by the gains it saw.

use std::collections::VecDeque;

use rand::Rng;

use crate::channel::{sample_state, transmit, ChannelModel, ChannelState, DelayedFeed, Link};
use crate::error::{Error, Result};
use crate::gf2::BitVector;

/// Where the bit sent in a slot goes once its gains are learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueMove {
    /// Own and cross gains both 1.
    ToQ1,
    /// Own gain 0, cross gain 1.
    ToQ2,
    /// Own gain 1, cross gain 0.
    Delivered,
    /// Both gains 0: send again.
    Stay,
}

impl QueueMove {
    /// Queue move for `(g_ii, g_iī)`.
    #[must_use]
    pub fn from_gains(g_own: bool, g_cross: bool) -> Self {
        match (g_own, g_cross) {
            (true, true) => QueueMove::ToQ1,
            (false, true) => QueueMove::ToQ2,
            (true, false) => QueueMove::Delivered,
            (false, false) => QueueMove::Stay,
        }
    }
}

/// Queues of one transmitter. Bits are message indices, kept in arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueSet {
    pub owner: u8,
    init: VecDeque<usize>,
    q1: Vec<usize>,
    q2: Vec<usize>,
    delivered: Vec<usize>,
    final_slot: Vec<Option<usize>>,
    total: usize,
}

impl QueueSet {
    /// All of `bits` waiting in the initial queue; `m` is the message length.
    #[must_use]
    pub fn new(owner: u8, bits: impl IntoIterator<Item = usize>, m: usize) -> Self {
        let init: VecDeque<usize> = bits.into_iter().collect();
        Self {
            owner,
            total: init.len(),
            init,
            q1: Vec::new(),
            q2: Vec::new(),
            delivered: Vec::new(),
            final_slot: vec![None; m],
        }
    }

    #[must_use]
    pub fn initial(&self) -> &VecDeque<usize> {
        &self.init
    }

    #[must_use]
    pub fn q1(&self) -> &[usize] {
        &self.q1
    }

    #[must_use]
    pub fn q2(&self) -> &[usize] {
        &self.q2
    }

    #[must_use]
    pub fn delivered(&self) -> &[usize] {
        &self.delivered
    }

    /// Slot of the most recent transmission of `bit`.
    #[must_use]
    pub fn final_slot(&self, bit: usize) -> Option<usize> {
        self.final_slot[bit]
    }

    /// Length of the owner's message.
    #[must_use]
    pub fn message_len(&self) -> usize {
        self.final_slot.len()
    }

    /// Bits ever placed in this queue set.
    #[must_use]
    pub fn total(&self) -> usize {
        self.total
    }

    /// `|Q_F| + |Q_1| + |Q_2| + |Q_init| == total`.
    #[must_use]
    pub fn conserved(&self) -> bool {
        self.init.len() + self.q1.len() + self.q2.len() + self.delivered.len() == self.total
    }
}

/// Bit to send at slot `t` of a Phase 1 lasting `len` slots, or `None` when silent.
pub fn phase1_step(queues: &QueueSet, t: usize, len: usize) -> Result<Option<usize>> {
    if t >= len {
        return Err(Error::InvalidParameter(format!(
            "slot {t} is past the end of Phase 1 ({len} slots)"
        )));
    }
    Ok(queues.init.front().copied())
}

/// Moves `bit`, sent at slot `t`, according to its own and cross gains.
///
/// # Panics
///
/// Panics if `bit` is not at the head of the initial queue.
pub fn phase1_transition(queues: &mut QueueSet, bit: usize, t: usize, g_own: bool, g_cross: bool) -> QueueMove {
    assert_eq!(queues.init.front(), Some(&bit), "only the head bit is in flight");
    queues.final_slot[bit] = Some(t);
    let mv = QueueMove::from_gains(g_own, g_cross);
    let target = match mv {
        QueueMove::ToQ1 => &mut queues.q1,
        QueueMove::ToQ2 => &mut queues.q2,
        QueueMove::Delivered => &mut queues.delivered,
        QueueMove::Stay => return mv,
    };
    target.push(bit);
    queues.init.pop_front();
    mv
}

/// Gains and transmitted bit indices of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub state: ChannelState,
    pub sent: [Option<usize>; 2],
}

impl SlotRecord {
    /// Whether transmitter `tx` sent a bit in this slot.
    #[must_use]
    pub fn active(&self, tx: u8) -> bool {
        self.sent[usize::from(tx - 1)].is_some()
    }

    /// True when `tx`'s signal reached receiver `rx`.
    #[must_use]
    pub fn reaches(&self, tx: u8, rx: u8) -> bool {
        self.active(tx) && self.state.g(tx, rx)
    }
}

/// Everything Phase 1 leaves behind.
#[derive(Debug, Clone)]
pub struct Phase1Log {
    pub slots: Vec<SlotRecord>,
    /// Channel outputs at receiver 1 and receiver 2.
    pub y: [Vec<bool>; 2],
    pub queues: [QueueSet; 2],
}

/// Runs Phase 1 for `len` slots.
///
/// `bits[i]` lists the message indices of transmitter `i+1` that start in its
/// initial queue. Transitions read gains through `feed`, so a view that lacks
/// an outgoing link ends the run with an access violation.
pub fn run_phase1<R: Rng + ?Sized>(
    bits: [Vec<usize>; 2],
    messages: [&BitVector; 2],
    len: usize,
    model: &ChannelModel,
    feed: &mut DelayedFeed,
    rng: &mut R,
) -> Result<Phase1Log> {
    let [b1, b2] = bits;
    let mut queues = [
        QueueSet::new(1, b1, messages[0].len()),
        QueueSet::new(2, b2, messages[1].len()),
    ];
    let mut slots = Vec::with_capacity(len);
    let mut y = [Vec::with_capacity(len), Vec::with_capacity(len)];
    for t in 0..len {
        let sent = [phase1_step(&queues[0], t, len)?, phase1_step(&queues[1], t, len)?];
        let x = |k: usize| sent[k].is_some_and(|b| messages[k].bit(b));
        let state = sample_state(model, rng);
        let (y1, y2) = transmit(&state, x(0), x(1));
        y[0].push(y1);
        y[1].push(y2);
        feed.push(state);
        for (k, tx) in [(0usize, 1u8), (1, 2)] {
            if let Some(bit) = sent[k] {
                let g_own = feed.observe(tx, Link::new(tx, tx), t + 1)?;
                let g_cross = feed.observe(tx, Link::new(tx, 3 - tx), t + 1)?;
                phase1_transition(&mut queues[k], bit, t, g_own, g_cross);
            }
            debug_assert!(queues[k].conserved());
        }
        slots.push(SlotRecord { state, sent });
    }
    Ok(Phase1Log { slots, y, queues })
}

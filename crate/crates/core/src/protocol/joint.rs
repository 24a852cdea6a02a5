//! Joint per-generation systems over message bits.
//!
//! A receiver writes every observation it has of one generation as a linear
//! equation in the message bits of both transmitters. Columns of the other
//! transmitter come first, its own bits last; own bits are decoded when the
//! system pins all of them, whatever happens to the interfering ones.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::Error;
use crate::gf2::{solve_trailing, BitMatrix, BitVector};
use crate::multicast::split_even;

/// Segment index of every slot when `len` slots are cut into `gens` even pieces.
pub(crate) fn slot_segments(len: usize, gens: usize) -> (Vec<u32>, Vec<Range<usize>>) {
    let ranges = split_even(len, gens);
    let mut seg = vec![0u32; len];
    for (g, r) in ranges.iter().enumerate() {
        for t in r.clone() {
            seg[t] = g as u32;
        }
    }
    (seg, ranges)
}

/// Splits `bits` by the segment of their final slot.
pub(crate) fn by_segment(bits: &[usize], gens: usize, segment: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); gens];
    for &b in bits {
        out[segment(b)].push(b);
    }
    out
}

/// Equations of one receiver about one generation.
#[derive(Debug, Clone)]
pub(crate) struct JointSystem {
    col: HashMap<usize, usize>,
    block_start: Vec<usize>,
    block_len: Vec<usize>,
    leading: usize,
    targets: Vec<usize>,
    aug: BitMatrix,
}

impl JointSystem {
    /// Blocks are ordered lists of bit ids; `nuisance` blocks take the first columns.
    pub fn new(nuisance: &[&[usize]], targets: &[&[usize]]) -> Self {
        let mut col = HashMap::new();
        let mut block_start = Vec::new();
        let mut block_len = Vec::new();
        let mut next = 0;
        for block in nuisance.iter().chain(targets) {
            block_start.push(next);
            block_len.push(block.len());
            for &id in *block {
                let prev = col.insert(id, next);
                debug_assert!(prev.is_none(), "bit {id} in two blocks");
                next += 1;
            }
        }
        let leading = nuisance.iter().map(|b| b.len()).sum();
        Self {
            col,
            block_start,
            block_len,
            leading,
            targets: targets.iter().flat_map(|b| b.iter().copied()).collect(),
            aug: BitMatrix::zeros(0, next + 1),
        }
    }

    /// Empty equation.
    pub fn row(&self) -> BitVector {
        BitVector::zeros(self.aug.cols())
    }

    /// Adds the bit `id` to `row`.
    ///
    /// # Panics
    ///
    /// Panics if `id` belongs to no block.
    pub fn add_bit(&self, row: &mut BitVector, id: usize) {
        let c = *self.col.get(&id).unwrap_or_else(|| panic!("bit {id} outside the generation"));
        row.set(c, !row.bit(c));
    }

    /// Adds `coeffs . block`; coefficients past the block length are dropped.
    pub fn add_block(&self, row: &mut BitVector, block: usize, coeffs: &BitVector) {
        let len = self.block_len[block];
        if coeffs.len() > len {
            row.xor_at(self.block_start[block], &coeffs.slice(0..len));
        } else {
            row.xor_at(self.block_start[block], coeffs);
        }
    }

    /// Appends `row = rhs`.
    pub fn push(&mut self, mut row: BitVector, rhs: bool) {
        let last = row.len() - 1;
        row.set(last, rhs);
        self.aug.push_row(&row);
    }

    /// Values of the target bits, or the rank deficit on them.
    pub fn solve(self) -> std::result::Result<Vec<(usize, bool)>, usize> {
        let trailing = self.targets.len();
        match solve_trailing(self.aug, self.leading, trailing) {
            Ok(x) => Ok(self.targets.iter().enumerate().map(|(k, &id)| (id, x.bit(k))).collect()),
            Err(Error::NoUniqueSolution { rank, cols }) => Err(cols - rank),
            Err(e) => panic!("observations of a real transmission are consistent: {e}"),
        }
    }
}

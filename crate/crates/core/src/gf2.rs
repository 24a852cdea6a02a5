//! Linear algebra over the two-element field on bit-packed storage.
//!
//! Vectors and matrices pack 64 bits per `u64` word and matrices keep their
//! rows contiguous. Elimination and multiplication use the method of four
//! Russians: pivots are gathered sixteen columns at a time and every other
//! row is updated with one pass combining two eight-bit table lookups.
//!
//! # Pivoting
//!
//! Pivots are taken in column order; within a column the lowest-indexed
//! eligible row wins. Rank and unique solutions do not depend on this choice,
//! but fixtures that inspect reduced forms stay stable.

use std::fmt;
use std::ops::BitXor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;
const CHUNK: usize = 8;
/// Columns gathered per elimination sweep, served by two 8-bit tables.
const SWEEP: usize = 2 * CHUNK;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
fn bit_of(words: &[u64], i: usize) -> bool {
    (words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

#[inline]
fn parity_and(a: &[u64], b: &[u64]) -> bool {
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc ^= x & y;
    }
    acc.count_ones() & 1 == 1
}

fn check_density(density: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!(
            "density {density} outside [0, 1]"
        )));
    }
    Ok(())
}

fn fill_random<R: Rng + ?Sized>(words: &mut [u64], bits: usize, density: f64, rng: &mut R) {
    if density == 0.5 {
        for w in words.iter_mut() {
            *w = rng.next_u64();
        }
    } else {
        words.iter_mut().for_each(|w| *w = 0);
        for i in 0..bits {
            if rng.gen_bool(density) {
                words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
    }
    if let Some(last) = words.last_mut() {
        *last &= tail_mask(bits);
    }
}

/// In-place transpose of a 64×64 bit block, bit `j` of word `i` to bit `i` of word `j`.
fn transpose64(a: &mut [u64; WORD_BITS]) {
    let mut j = 32;
    let mut m: u64 = 0x0000_0000_FFFF_FFFF;
    while j != 0 {
        let mut k = 0;
        while k < WORD_BITS {
            let t = ((a[k] >> j) ^ a[k + j]) & m;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        m ^= m << j;
    }
}

/// A fixed-length sequence of bits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector of `len` bits.
    #[must_use]
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from booleans, index 0 first.
    #[must_use]
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Wraps packed words; bits beyond `len` are cleared.
    ///
    /// # Panics
    ///
    /// Panics if `words` is too short for `len` bits.
    #[must_use]
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        let n = words_for(len);
        assert!(words.len() >= n, "{} words cannot hold {len} bits", words.len());
        words.truncate(n);
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    /// Independent bits, each 1 with probability `density`.
    pub fn random<R: Rng + ?Sized>(len: usize, density: f64, rng: &mut R) -> Result<Self> {
        check_density(density)?;
        let mut v = Self::zeros(len);
        fill_random(&mut v.words, len, density, rng);
        Ok(v)
    }

    /// Number of bits.
    #[must_use]
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the vector holds no bits.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i`, or `None` when `i` is past the end.
    #[must_use]
    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| bit_of(&self.words, i))
    }

    /// Bit `i`.
    ///
    /// # Panics
    ///
    /// Panics if `i >= len`.
    #[must_use]
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        bit_of(&self.words, i)
    }

    /// Sets bit `i`.
    ///
    /// # Panics
    ///
    /// Panics if `i >= len`.
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Appends one bit.
    pub fn push(&mut self, value: bool) {
        if self.len % WORD_BITS == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Appends all bits of `other`.
    pub fn append(&mut self, other: &BitVector) {
        let shift = self.len % WORD_BITS;
        if shift == 0 {
            self.words.extend_from_slice(&other.words);
        } else {
            for &w in &other.words {
                *self.words.last_mut().expect("partial word exists") |= w << shift;
                self.words.push(w >> (WORD_BITS - shift));
            }
        }
        self.len += other.len;
        self.words.truncate(words_for(self.len));
    }

    /// XORs `src` into bits `offset..offset + src.len()`.
    ///
    /// # Panics
    ///
    /// Panics if the target range runs past the end.
    pub fn xor_at(&mut self, offset: usize, src: &BitVector) {
        assert!(offset + src.len <= self.len, "xor_at {offset}+{} past {}", src.len, self.len);
        let first = offset / WORD_BITS;
        let shift = offset % WORD_BITS;
        for (k, &w) in src.words.iter().enumerate() {
            self.words[first + k] ^= w << shift;
            if shift != 0 {
                if let Some(next) = self.words.get_mut(first + k + 1) {
                    *next ^= w >> (WORD_BITS - shift);
                }
            }
        }
    }

    /// Copy of bits `range.start..range.end`.
    ///
    /// # Panics
    ///
    /// Panics if the range runs past the end.
    #[must_use]
    pub fn slice(&self, range: std::ops::Range<usize>) -> BitVector {
        assert!(range.start <= range.end && range.end <= self.len, "slice {range:?} of {} bits", self.len);
        let len = range.end - range.start;
        let first = range.start / WORD_BITS;
        let shift = range.start % WORD_BITS;
        let n = words_for(len);
        let words = (0..n)
            .map(|k| {
                let lo = self.words.get(first + k).copied().unwrap_or(0) >> shift;
                let hi = if shift == 0 {
                    0
                } else {
                    self.words.get(first + k + 1).copied().unwrap_or(0) << (WORD_BITS - shift)
                };
                lo | hi
            })
            .collect();
        BitVector::from_words(len, words)
    }

    /// Packed storage, 64 bits per word, low bit first.
    #[must_use]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// In-place XOR with a vector of equal length.
    ///
    /// # Panics
    ///
    /// Panics on length mismatch.
    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        xor_into(&mut self.words, &other.words);
    }

    /// Inner product over GF(2).
    ///
    /// # Panics
    ///
    /// Panics on length mismatch.
    #[must_use]
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        parity_and(&self.words, &other.words)
    }

    /// Number of set bits.
    #[must_use]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when every bit is zero.
    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Bits in index order.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| bit_of(&self.words, i))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[")?;
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, "]")
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut v = BitVector::zeros(0);
        for b in iter {
            v.push(b);
        }
        v
    }
}

impl BitXor for &BitVector {
    type Output = BitVector;

    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

/// A dense binary matrix with packed, row-major storage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// All-zero `rows × cols` matrix.
    #[must_use]
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    /// The `n × n` identity.
    #[must_use]
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix whose entry `(r, c)` is `f(r, c)`.
    #[must_use]
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Stacks vectors of length `cols` as rows.
    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} bits, expected {cols}",
                    r.len()
                )));
            }
            m.row_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Row count.
    #[must_use]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    #[must_use]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(r, c)`.
    ///
    /// # Panics
    ///
    /// Panics if the index is out of range.
    #[must_use]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        bit_of(self.row(r), c)
    }

    /// Sets entry `(r, c)`.
    ///
    /// # Panics
    ///
    /// Panics if the index is out of range.
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let mask = 1u64 << (c % WORD_BITS);
        let w = &mut self.row_mut(r)[c / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of row `r`.
    #[must_use]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// Mutable packed words of row `r`. Bits past `cols` must stay zero.
    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// Copy of row `r` as a vector.
    #[must_use]
    pub fn row_vector(&self, r: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row(r).to_vec())
    }

    /// Appends a row.
    ///
    /// # Panics
    ///
    /// Panics if the row length differs from `cols`.
    pub fn push_row(&mut self, row: &BitVector) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend_from_slice(row.words());
        self.rows += 1;
    }

    /// Swaps two rows.
    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let s = self.stride;
        let (head, tail) = self.data.split_at_mut(hi * s);
        head[lo * s..(lo + 1) * s].swap_with_slice(&mut tail[..s]);
    }

    /// XORs row `src` into row `dst`.
    pub fn add_row(&mut self, dst: usize, src: usize) {
        if dst == src {
            self.row_mut(dst).iter_mut().for_each(|w| *w = 0);
            return;
        }
        let s = self.stride;
        if dst < src {
            let (head, tail) = self.data.split_at_mut(src * s);
            xor_into(&mut head[dst * s..(dst + 1) * s], &tail[..s]);
        } else {
            let (head, tail) = self.data.split_at_mut(dst * s);
            xor_into(&mut tail[..s], &head[src * s..(src + 1) * s]);
        }
    }

    /// Matrix–vector product `A·x`.
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        if x.len() != self.cols {
            return Err(Error::InvalidParameter(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if parity_and(self.row(r), x.words()) {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidParameter(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let s = other.stride;
        if s == 0 {
            return Ok(out);
        }
        let mut table = vec![0u64; (1 << CHUNK) * s];
        for k0 in (0..self.cols).step_by(CHUNK) {
            let k = CHUNK.min(self.cols - k0);
            for idx in 1usize..(1 << k) {
                let low = idx.trailing_zeros() as usize;
                let prev = idx & (idx - 1);
                let (done, rest) = table.split_at_mut(idx * s);
                let entry = &mut rest[..s];
                entry.copy_from_slice(&done[prev * s..(prev + 1) * s]);
                xor_into(entry, other.row(k0 + low));
            }
            let word = k0 / WORD_BITS;
            let shift = k0 % WORD_BITS;
            let mask = (1u64 << k) - 1;
            for r in 0..self.rows {
                let idx = ((self.row(r)[word] >> shift) & mask) as usize;
                if idx != 0 {
                    xor_into(out.row_mut(r), &table[idx * s..(idx + 1) * s]);
                }
            }
        }
        Ok(out)
    }

    /// The transpose.
    #[must_use]
    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        let mut block = [0u64; WORD_BITS];
        for rb in 0..words_for(self.rows) {
            for cb in 0..self.stride {
                for (k, slot) in block.iter_mut().enumerate() {
                    let r = rb * WORD_BITS + k;
                    *slot = if r < self.rows { self.data[r * self.stride + cb] } else { 0 };
                }
                transpose64(&mut block);
                for (k, &w) in block.iter().enumerate() {
                    let c = cb * WORD_BITS + k;
                    if c < self.cols {
                        t.data[c * t.stride + rb] = w;
                    }
                }
            }
        }
        t
    }

    /// GF(2) rank.
    #[must_use]
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate(self.cols, false).len()
    }

    /// Row reduction restricted to pivots in columns `< pivot_limit`.
    ///
    /// With `full` set the result is in reduced row echelon form: pivot rows
    /// occupy the top, in column order, and each pivot column is zero outside
    /// its pivot row. Without it only rows below each pivot are cleared.
    /// Returns the pivot columns.
    pub fn eliminate(&mut self, pivot_limit: usize, full: bool) -> Vec<usize> {
        let limit = pivot_limit.min(self.cols);
        let s = self.stride;
        let mut pivots = Vec::new();
        let mut table: Vec<u64> = Vec::new();
        let mut r = 0;
        let mut c = 0;
        while c < limit && r < self.rows {
            let end = (c + SWEEP).min(limit);
            let mut chunk: Vec<usize> = Vec::with_capacity(SWEEP);
            for col in c..end {
                let k = chunk.len();
                let found = (r + k..self.rows).find(|&i| {
                    let row = self.row(i);
                    let mut bit = bit_of(row, col);
                    for (j, &pc) in chunk.iter().enumerate() {
                        if bit_of(row, pc) {
                            bit ^= bit_of(self.row(r + j), col);
                        }
                    }
                    bit
                });
                let Some(i) = found else { continue };
                self.swap_rows(i, r + k);
                for (j, &pc) in chunk.iter().enumerate() {
                    if bit_of(self.row(r + k), pc) {
                        self.add_row(r + k, r + j);
                    }
                }
                for j in 0..k {
                    if bit_of(self.row(r + j), col) {
                        self.add_row(r + j, r + k);
                    }
                }
                chunk.push(col);
            }
            let k = chunk.len();
            if k > 0 {
                let w0 = c / WORD_BITS;
                let tw = s - w0;
                // Pivot rows are reduced against each other, so any row's
                // correction is the XOR of one entry from each table.
                let groups: Vec<&[usize]> = chunk.chunks(CHUNK).collect();
                table.clear();
                table.resize(groups.len() * (1 << CHUNK) * tw, 0);
                for (gi, group) in groups.iter().enumerate() {
                    let base = gi * (1 << CHUNK) * tw;
                    let first = r + gi * CHUNK;
                    for idx in 1usize..(1 << group.len()) {
                        let low = idx.trailing_zeros() as usize;
                        let prev = idx & (idx - 1);
                        let (done, rest) = table.split_at_mut(base + idx * tw);
                        let entry = &mut rest[..tw];
                        entry.copy_from_slice(&done[base + prev * tw..base + (prev + 1) * tw]);
                        xor_into(entry, &self.row(first + low)[w0..]);
                    }
                }
                let start = if full { 0 } else { r + k };
                for i in start..self.rows {
                    if i >= r && i < r + k {
                        continue;
                    }
                    let row = &mut self.data[i * s..(i + 1) * s];
                    let mut idx = [0usize; 2];
                    for (gi, group) in groups.iter().enumerate() {
                        for (j, &pc) in group.iter().enumerate() {
                            idx[gi] |= usize::from(bit_of(row, pc)) << j;
                        }
                    }
                    let entry = |gi: usize| {
                        let at = (gi << CHUNK | idx[gi]) * tw;
                        &table[at..at + tw]
                    };
                    match (idx[0] != 0, idx[1] != 0) {
                        (true, true) => {
                            for ((d, x), y) in row[w0..].iter_mut().zip(entry(0)).zip(entry(1)) {
                                *d ^= x ^ y;
                            }
                        }
                        (true, false) => xor_into(&mut row[w0..], entry(0)),
                        (false, true) => xor_into(&mut row[w0..], entry(1)),
                        (false, false) => {}
                    }
                }
                pivots.extend_from_slice(&chunk);
                r += k;
            }
            c = end;
        }
        pivots
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(32) {
            for c in 0..self.cols.min(96) {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Random matrix whose entries are independently 1 with probability `density`.
///
/// The same seed always yields the same matrix.
pub fn random_matrix(rows: usize, cols: usize, density: f64, seed: u64) -> Result<BitMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_matrix_with(rows, cols, density, &mut rng)
}

/// As [`random_matrix`], drawing from a caller-supplied generator.
pub fn random_matrix_with<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    density: f64,
    rng: &mut R,
) -> Result<BitMatrix> {
    check_density(density)?;
    let mut m = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        fill_random(m.row_mut(r), cols, density, rng);
    }
    Ok(m)
}

/// GF(2) rank of `m`.
#[must_use]
pub fn rank(m: &BitMatrix) -> usize {
    m.rank()
}

/// Solves `A·x = b` when `A` has full column rank.
pub fn solve(a: &BitMatrix, b: &BitVector) -> Result<BitVector> {
    if a.rows() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "{} equations but right-hand side has {} bits",
            a.rows(),
            b.len()
        )));
    }
    let mut aug = BitMatrix::zeros(a.rows(), a.cols() + 1);
    for r in 0..a.rows() {
        aug.row_mut(r)[..a.stride].copy_from_slice(a.row(r));
        if b.bit(r) {
            aug.set(r, a.cols(), true);
        }
    }
    solve_augmented(aug, a.cols())
}

/// Solves a system stored as `[A | b]`, where `A` spans the first `vars`
/// columns and `b` is column `vars`.
pub fn solve_augmented(mut aug: BitMatrix, vars: usize) -> Result<BitVector> {
    if aug.cols() != vars + 1 {
        return Err(Error::InvalidParameter(format!(
            "augmented matrix has {} columns, expected {}",
            aug.cols(),
            vars + 1
        )));
    }
    let pivots = aug.eliminate(vars, false);
    if pivots.len() < vars {
        return Err(Error::NoUniqueSolution {
            rank: pivots.len(),
            cols: vars,
        });
    }
    if (vars..aug.rows()).any(|r| aug.get(r, vars)) {
        return Err(Error::Inconsistent);
    }
    // Full rank: row r is zero left of column r, so substitute upwards.
    let mut x = BitVector::zeros(vars);
    for r in (0..vars).rev() {
        let v = aug.get(r, vars) ^ parity_and(aug.row(r), &x.words);
        x.set(r, v);
    }
    Ok(x)
}

/// Solves for the last `trailing` variables of `[A | b]` whose first
/// `leading` columns are nuisance variables.
///
/// The trailing variables are determined exactly when eliminating the
/// nuisance columns first leaves a full-rank system on the rest. Returns
/// [`Error::NoUniqueSolution`] with the trailing rank otherwise.
pub fn solve_trailing(mut aug: BitMatrix, leading: usize, trailing: usize) -> Result<BitVector> {
    let vars = leading + trailing;
    if aug.cols() != vars + 1 {
        return Err(Error::InvalidParameter(format!(
            "augmented matrix has {} columns, expected {}",
            aug.cols(),
            vars + 1
        )));
    }
    let pivots = aug.eliminate(vars, false);
    let lead = pivots.iter().filter(|&&c| c < leading).count();
    let rank = pivots.len() - lead;
    if rank < trailing {
        return Err(Error::NoUniqueSolution { rank, cols: trailing });
    }
    if (pivots.len()..aug.rows()).any(|r| aug.get(r, vars)) {
        return Err(Error::Inconsistent);
    }
    // Rows from `lead` on are zero in the nuisance columns.
    let mut x = BitVector::zeros(vars);
    for j in (0..trailing).rev() {
        let r = lead + j;
        let v = aug.get(r, vars) ^ parity_and(aug.row(r), &x.words);
        x.set(leading + j, v);
    }
    Ok(x.slice(leading..vars))
}

/// Row-at-a-time solver that keeps an echelon basis of the rows seen so far.
///
/// Each stored row has its pivot as lowest set bit, so absorbing a row costs
/// one pass over its set bits and extraction is a single back substitution.
#[derive(Clone, Debug)]
pub struct IncrementalSolver {
    cols: usize,
    stride: usize,
    basis: Vec<u64>,
    pivot_row: Vec<Option<usize>>,
    rank: usize,
    conflicts: usize,
}

impl IncrementalSolver {
    /// Empty solver over `cols` unknowns.
    #[must_use]
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            stride: words_for(cols + 1),
            basis: Vec::new(),
            pivot_row: vec![None; cols],
            rank: 0,
            conflicts: 0,
        }
    }

    /// Number of unknowns.
    #[must_use]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Rank accumulated so far.
    #[must_use]
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dependent rows whose right-hand side contradicted the basis.
    #[must_use]
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    /// True once the rank equals the number of unknowns.
    #[must_use]
    pub fn is_complete(&self) -> bool {
        self.rank == self.cols
    }

    /// Adds the equation `row · x = rhs` and returns the rank afterwards.
    pub fn absorb(&mut self, row: &BitVector, rhs: bool) -> Result<usize> {
        if row.len() != self.cols {
            return Err(Error::InvalidParameter(format!(
                "row of length {} for {} unknowns",
                row.len(),
                self.cols
            )));
        }
        let mut buf = vec![0u64; self.stride];
        buf[..row.words().len()].copy_from_slice(row.words());
        if rhs {
            buf[self.cols / WORD_BITS] |= 1 << (self.cols % WORD_BITS);
        }
        let mut col = 0;
        while let Some(c) = next_set(&buf, col, self.cols) {
            match self.pivot_row[c] {
                Some(b) => {
                    let s = self.stride;
                    xor_into(&mut buf, &self.basis[b * s..(b + 1) * s]);
                    col = c + 1;
                }
                None => {
                    self.pivot_row[c] = Some(self.rank);
                    self.basis.extend_from_slice(&buf);
                    self.rank += 1;
                    return Ok(self.rank);
                }
            }
        }
        if bit_of(&buf, self.cols) {
            self.conflicts += 1;
        }
        Ok(self.rank)
    }

    /// The unique solution, once the rank is full.
    pub fn extract(&self) -> Result<BitVector> {
        if !self.is_complete() {
            return Err(Error::NotReady {
                rank: self.rank,
                cols: self.cols,
            });
        }
        let mut x = BitVector::zeros(self.cols);
        let s = self.stride;
        let xw = words_for(self.cols);
        for c in (0..self.cols).rev() {
            let b = self.pivot_row[c].expect("complete basis has every pivot");
            let row = &self.basis[b * s..(b + 1) * s];
            let mut v = bit_of(row, self.cols);
            v ^= parity_and(&row[..xw], x.words());
            if v {
                x.set(c, true);
            }
        }
        Ok(x)
    }
}

/// Lowest set bit at index `>= from` and `< limit`.
fn next_set(words: &[u64], from: usize, limit: usize) -> Option<usize> {
    if from >= limit {
        return None;
    }
    let mut wi = from / WORD_BITS;
    let mut w = words[wi] & (u64::MAX << (from % WORD_BITS));
    loop {
        if w != 0 {
            let i = wi * WORD_BITS + w.trailing_zeros() as usize;
            return (i < limit).then_some(i);
        }
        wi += 1;
        if wi * WORD_BITS >= limit {
            return None;
        }
        w = words[wi];
    }
}

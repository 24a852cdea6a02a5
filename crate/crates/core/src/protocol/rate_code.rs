//! Point-to-point erasure code: one fresh random combination per slot.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{solve_augmented, BitMatrix, BitVector};

/// Coefficient rows and coded symbols of one block, slot by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasureStream {
    pub coeffs: Vec<BitVector>,
    pub symbols: Vec<bool>,
}

impl ErasureStream {
    /// Slots needed for a block of `len` bits at code rate `rate` plus `slack` extra slots.
    pub fn slots_for(len: usize, rate: f64, slack: f64) -> Result<usize> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter(format!("code rate {rate} outside (0, 1]")));
        }
        Ok((len as f64 / rate + slack.max(0.0)).ceil() as usize)
    }

    /// Number of slots.
    #[must_use]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Encodes `block` into `slots` random combinations.
pub fn erasure_send<R: Rng + ?Sized>(block: &BitVector, slots: usize, rng: &mut R) -> Result<ErasureStream> {
    let mut coeffs = Vec::with_capacity(slots);
    let mut symbols = Vec::with_capacity(slots);
    for _ in 0..slots {
        let c = BitVector::random(block.len(), 0.5, rng)?;
        symbols.push(c.dot(block));
        coeffs.push(c);
    }
    Ok(ErasureStream { coeffs, symbols })
}

/// Recovers a `len`-bit block from `(slot, symbol)` pairs of the clean slots.
pub fn erasure_decode(
    coeffs: &[BitVector],
    observed: impl IntoIterator<Item = (usize, bool)>,
    len: usize,
) -> Result<BitVector> {
    let mut aug = BitMatrix::zeros(0, len + 1);
    for (t, y) in observed {
        let mut row = coeffs
            .get(t)
            .ok_or_else(|| Error::InvalidParameter(format!("slot {t} outside the stream")))?
            .clone();
        row.push(y);
        aug.push_row(&row);
    }
    solve_augmented(aug, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slots_for_rate() {
        assert_eq!(ErasureStream::slots_for(100, 0.25, 10.0).unwrap(), 410);
        assert_eq!(ErasureStream::slots_for(100, 1.0, 0.0).unwrap(), 100);
        assert!(ErasureStream::slots_for(100, 0.0, 0.0).is_err());
        assert!(ErasureStream::slots_for(100, 1.5, 0.0).is_err());
    }

    #[test]
    fn full_rate_with_slack_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let block = BitVector::random(200, 0.5, &mut rng).unwrap();
        let s = erasure_send(&block, 230, &mut rng).unwrap();
        let got = erasure_decode(&s.coeffs, s.symbols.iter().copied().enumerate(), 200).unwrap();
        assert_eq!(got, block);
    }

    #[test]
    fn quarter_clean_slots_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = BitVector::random(300, 0.5, &mut rng).unwrap();
        let slots = ErasureStream::slots_for(300, 0.25, 4.0 * 60.0).unwrap();
        let s = erasure_send(&block, slots, &mut rng).unwrap();
        let clean: Vec<(usize, bool)> = (0..slots)
            .filter(|_| rng.gen_bool(0.25))
            .map(|t| (t, s.symbols[t]))
            .collect();
        assert_eq!(erasure_decode(&s.coeffs, clean, 300).unwrap(), block);
    }

    #[test]
    fn too_few_slots_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let block = BitVector::random(50, 0.5, &mut rng).unwrap();
        let s = erasure_send(&block, 40, &mut rng).unwrap();
        assert!(matches!(
            erasure_decode(&s.coeffs, s.symbols.iter().copied().enumerate(), 50),
            Err(Error::NoUniqueSolution { .. })
        ));
    }
}

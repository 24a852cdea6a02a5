//! Analytic halt probabilities of the symmetric scheme.
//!
//! Type I is computed exactly: a transmitter empties its initial queue when
//! at least `m` of the Phase-1 slots have a gain configuration other than
//! `(0, 0)`. Types II and III get union bounds from binomial tails, so the
//! total halt probability is bracketed by `[type I, sum of all three]`.

use statrs::function::gamma::ln_gamma;

use super::symmetric::{Layout, SymmetricPlan};
use super::slack;
use crate::error::Result;

/// `ln P(X = k)` for `X ~ Bin(n, p)`.
fn ln_pmf(n: usize, p: f64, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * p.ln() + (nf - kf) * (1.0 - p).ln()
}

fn ln_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// `P(X < k)` for `X ~ Bin(n, p)`, accurate far into the tail.
#[must_use]
pub fn binomial_below(n: usize, p: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    let hi = (k.ceil() as usize).min(n + 1);
    ln_sum((0..hi).map(|j| ln_pmf(n, p, j))).exp().min(1.0)
}

/// `P(X > k)` for `X ~ Bin(n, p)`.
#[must_use]
pub fn binomial_above(n: usize, p: f64, k: f64) -> f64 {
    if k < 0.0 {
        return 1.0;
    }
    let lo = k.floor() as usize + 1;
    if lo > n {
        return 0.0;
    }
    ln_sum((lo..=n).map(|j| ln_pmf(n, p, j))).exp().min(1.0)
}

/// Halt probabilities of one symmetric trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaltBounds {
    pub m: usize,
    /// Exact probability that some initial queue is left non-empty.
    pub type_i: f64,
    /// Union bound on a segment queue outgrowing its quota.
    pub type_ii: f64,
    /// Union bound on too few known bits, including the overflow case.
    pub type_iii: f64,
}

impl HaltBounds {
    /// Type I alone is a lower bound on halting.
    #[must_use]
    pub fn lower(&self) -> f64 {
        self.type_i
    }

    #[must_use]
    pub fn upper(&self) -> f64 {
        (self.type_i + self.type_ii + self.type_iii).min(1.0)
    }
}

/// Bounds for the symmetric scheme with `target` unknowns per segment.
pub fn halt_bounds_with(m: usize, target: usize) -> Result<HaltBounds> {
    let plan = SymmetricPlan::new(m, 0.02)?;
    let layout = Layout::new(plan.phase1, [plan.padded; 2], plan.rows, target);
    let s = slack(m);
    let one = binomial_below(plan.phase1, 0.75, m as f64);
    let type_i = 1.0 - (1.0 - one) * (1.0 - one);
    // Bits of a given case in a segment are at most the slots of that case.
    let mut start = 0;
    let mut type_ii = 0.0;
    for g in 0..layout.gens() {
        let len = layout.slot_gen[start..].iter().take_while(|&&x| x as usize == g).count();
        start += len;
        for j in 0..2 {
            type_ii += 2.0 * binomial_above(len, 0.25, layout.quota[j][g] as f64);
        }
    }
    // Padding plus real bits known with probability at least 1/2 dominate Bin(n, 1/2).
    let n = plan.padded;
    let type_iii = 4.0 * binomial_below(n, 0.5, n as f64 / 2.0 - s) + type_ii;
    Ok(HaltBounds { m, type_i, type_ii: type_ii.min(1.0), type_iii: type_iii.min(1.0) })
}

/// Bounds for the symmetric scheme under the default segment size.
pub fn halt_bounds(m: usize) -> Result<HaltBounds> {
    halt_bounds_with(m, crate::multicast::GENERATION_UNKNOWNS)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain summation with exact binomial coefficients, for small n.
    fn naive_below(n: usize, p: f64, k: usize) -> f64 {
        let mut c = 1.0f64;
        let mut sum = 0.0;
        for j in 0..k {
            sum += c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        sum
    }

    #[test]
    fn tails_match_direct_sums() {
        for (n, p, k) in [(20, 0.5, 7), (60, 0.25, 10), (100, 0.75, 70)] {
            let got = binomial_below(n, p, k as f64);
            assert!((got - naive_below(n, p, k)).abs() < 1e-12, "{n} {p} {k}");
            let above = binomial_above(n, p, (k - 1) as f64);
            assert!((got + above - 1.0).abs() < 1e-12);
        }
        assert_eq!(binomial_below(10, 0.5, 0.0), 0.0);
        assert_eq!(binomial_above(10, 0.5, 10.0), 0.0);
    }

    #[test]
    fn bounds_shrink_with_m() {
        let b: Vec<HaltBounds> = [1_000, 10_000, 100_000].iter().map(|&m| halt_bounds(m).unwrap()).collect();
        for w in b.windows(2) {
            assert!(w[1].upper() < w[0].lower(), "{:?}", w);
        }
        assert!(b[0].lower() > 0.0);
    }
}

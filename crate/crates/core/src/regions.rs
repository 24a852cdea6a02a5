//! Closed-form rate regions, membership and corner points.
//!
//! Regions are kept as lists of half-spaces `a1·R1 + a2·R2 ≤ c` with
//! nonnegative coefficients; vertices are derived on demand.

use std::fmt;

use crate::channel::{check_probability, ViewId};
use crate::error::Result;

/// Default additive tolerance for membership against Monte Carlo estimates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A pair of rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    #[must_use]
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    /// The pair with users relabelled.
    #[must_use]
    pub fn swapped(self) -> Self {
        Self::new(self.r2, self.r1)
    }

    /// `r1 + r2`.
    #[must_use]
    pub fn sum(self) -> f64 {
        self.r1 + self.r2
    }
}

impl fmt::Display for RatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.r1, self.r2)
    }
}

/// One constraint `a1·R1 + a2·R2 ≤ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

impl HalfSpace {
    #[must_use]
    pub fn new(a1: f64, a2: f64, c: f64) -> Self {
        Self { a1, a2, c }
    }

    /// Left-hand side at `pt`.
    #[must_use]
    pub fn lhs(&self, pt: RatePair) -> f64 {
        self.a1 * pt.r1 + self.a2 * pt.r2
    }
}

/// Downward-closed polygon in the nonnegative quadrant.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    pub halfspaces: Vec<HalfSpace>,
    pub label: String,
}

impl RateRegion {
    /// True iff every constraint and both axes hold within `tol`.
    #[must_use]
    pub fn contains(&self, pt: RatePair, tol: f64) -> bool {
        contains(self, pt, tol)
    }

    /// Vertices sorted by `r1`.
    #[must_use]
    pub fn corners(&self) -> Vec<RatePair> {
        corner_points(self)
    }

    /// Number of constraints, axes included, met with equality at `pt`.
    #[must_use]
    pub fn active_constraints(&self, pt: RatePair, tol: f64) -> usize {
        let axes = usize::from(pt.r1.abs() <= tol) + usize::from(pt.r2.abs() <= tol);
        axes + self
            .halfspaces
            .iter()
            .filter(|h| (h.lhs(pt) - h.c).abs() <= tol)
            .count()
    }

    /// Largest `r` with `(r, r)` inside the region.
    #[must_use]
    pub fn max_symmetric_rate(&self) -> f64 {
        self.halfspaces
            .iter()
            .filter(|h| h.a1 + h.a2 > 0.0)
            .map(|h| h.c / (h.a1 + h.a2))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Region of a view: either a known capacity region or a pair of bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewRegion {
    Known(RateRegion),
    /// Capacity unknown; the achievable inner and converse outer bounds.
    Open { inner: RateRegion, outer: RateRegion },
}

/// `{R_i ≤ p, R1 + R2 ≤ 1 − q²}`.
pub fn region_no_csit(p: f64) -> Result<RateRegion> {
    check_probability(p)?;
    let q = 1.0 - p;
    Ok(RateRegion {
        halfspaces: vec![
            HalfSpace::new(1.0, 0.0, p),
            HalfSpace::new(0.0, 1.0, p),
            HalfSpace::new(1.0, 1.0, 1.0 - q * q),
        ],
        label: "no-csit".into(),
    })
}

/// `{R_i ≤ p, R_i + (1+q)·R_ī ≤ p(1+q)²}`.
pub fn region_global_delayed(p: f64) -> Result<RateRegion> {
    check_probability(p)?;
    let q = 1.0 - p;
    let c = p * (1.0 + q) * (1.0 + q);
    Ok(RateRegion {
        halfspaces: vec![
            HalfSpace::new(1.0, 0.0, p),
            HalfSpace::new(0.0, 1.0, p),
            HalfSpace::new(1.0, 1.0 + q, c),
            HalfSpace::new(1.0 + q, 1.0, c),
        ],
        label: "global-delayed".into(),
    })
}

/// Region attached to a view preset.
pub fn region_for_view(view: ViewId, p: f64) -> Result<ViewRegion> {
    Ok(match view {
        ViewId::V0 | ViewId::V1 | ViewId::V3 | ViewId::V4 => ViewRegion::Known(labelled(region_no_csit(p)?, view)),
        ViewId::V2 | ViewId::V5 | ViewId::V6 | ViewId::V8 => {
            ViewRegion::Known(labelled(region_global_delayed(p)?, view))
        }
        ViewId::V7 => ViewRegion::Open {
            inner: labelled(region_no_csit(p)?, view),
            outer: labelled(region_global_delayed(p)?, view),
        },
    })
}

fn labelled(mut region: RateRegion, view: ViewId) -> RateRegion {
    let kind = match view {
        ViewId::V7 => "open",
        _ => "capacity",
    };
    region.label = format!("{view}:{}:{kind}", region.label);
    region
}

/// True iff every half-space holds within `tol` and both rates are ≥ −tol.
#[must_use]
pub fn contains(region: &RateRegion, pt: RatePair, tol: f64) -> bool {
    pt.r1 >= -tol && pt.r2 >= -tol && region.halfspaces.iter().all(|h| h.lhs(pt) <= h.c + tol)
}

/// Vertices of the polygon in the nonnegative quadrant, sorted by `r1` then `r2`.
#[must_use]
pub fn corner_points(region: &RateRegion) -> Vec<RatePair> {
    const EPS: f64 = 1e-12;
    let mut lines = region.halfspaces.clone();
    lines.push(HalfSpace::new(-1.0, 0.0, 0.0));
    lines.push(HalfSpace::new(0.0, -1.0, 0.0));
    let inside = |pt: RatePair| pt.r1 >= -EPS && pt.r2 >= -EPS && region.halfspaces.iter().all(|h| h.lhs(pt) <= h.c + EPS);

    let mut out: Vec<RatePair> = Vec::new();
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            let det = a.a1 * b.a2 - a.a2 * b.a1;
            if det.abs() < EPS {
                continue;
            }
            let r1 = (a.c * b.a2 - a.a2 * b.c) / det;
            let r2 = (a.a1 * b.c - a.c * b.a1) / det;
            let pt = RatePair::new(r1.max(0.0), r2.max(0.0));
            if inside(pt) && !out.iter().any(|o| (o.r1 - pt.r1).abs() < 1e-10 && (o.r2 - pt.r2).abs() < 1e-10) {
                out.push(pt);
            }
        }
    }
    out.sort_by(|x, y| x.r1.total_cmp(&y.r1).then(x.r2.total_cmp(&y.r2)));
    out
}

/// `(min{p, p·q·(1+q)}, p)`: the corner where the second user runs at full rate.
pub fn asymmetric_corner(p: f64) -> Result<RatePair> {
    check_probability(p)?;
    let q = 1.0 - p;
    Ok(RatePair::new(p.min(p * q * (1.0 + q)), p))
}

/// Symmetric rate `min{p, β(1−q²)/(1+β)}` with `β = 2 − p`.
pub fn symmetric_corner(p: f64) -> Result<f64> {
    check_probability(p)?;
    let q = 1.0 - p;
    let beta = 2.0 - p;
    Ok(p.min(beta * (1.0 - q * q) / (1.0 + beta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn has(corners: &[RatePair], r1: f64, r2: f64) -> bool {
        corners.iter().any(|c| close(c.r1, r1) && close(c.r2, r2))
    }

    #[test]
    fn no_csit_at_half() {
        let r = region_no_csit(0.5).unwrap();
        assert_eq!(r.halfspaces[0], HalfSpace::new(1.0, 0.0, 0.5));
        assert!(close(r.halfspaces[2].c, 0.75));
        let c = r.corners();
        assert!(has(&c, 0.25, 0.5));
        assert!(has(&c, 0.5, 0.25));
        assert!(!r.contains(RatePair::new(0.45, 0.45), DEFAULT_TOL));
    }

    #[test]
    fn degenerate_p() {
        let zero = region_no_csit(0.0).unwrap();
        assert_eq!(zero.corners(), vec![RatePair::new(0.0, 0.0)]);
        let g0 = region_global_delayed(0.0).unwrap();
        assert_eq!(g0.corners(), vec![RatePair::new(0.0, 0.0)]);
        let one = region_no_csit(1.0).unwrap();
        let g1 = region_global_delayed(1.0).unwrap();
        assert_eq!(one.corners(), g1.corners());
        assert!(has(&one.corners(), 0.0, 1.0));
        assert!(has(&one.corners(), 1.0, 0.0));
        assert!(region_no_csit(1.5).is_err());
    }

    #[test]
    fn global_delayed_at_half() {
        let r = region_global_delayed(0.5).unwrap();
        let h = r.halfspaces[2];
        assert_eq!((h.a1, h.a2, h.c), (1.0, 1.5, 1.125));
        assert!(close(0.375 + 1.5 * 0.5, 1.125));
        let c = r.corners();
        assert!(has(&c, 0.375, 0.5));
        assert!(has(&c, 0.45, 0.45));
        assert!(has(&c, 0.5, 0.375));
        assert!(r.contains(RatePair::new(0.45, 0.45), 1e-12));
        assert!(!r.contains(RatePair::new(0.451, 0.45), 1e-12));
        assert!(close(r.max_symmetric_rate(), 0.45));
    }

    #[test]
    fn corners_are_sorted_and_tight() {
        for k in 0..=20 {
            let p = f64::from(k) * 0.05;
            for r in [region_no_csit(p).unwrap(), region_global_delayed(p).unwrap()] {
                let c = r.corners();
                assert!(c.windows(2).all(|w| w[0].r1 <= w[1].r1));
                for pt in c {
                    assert!(r.contains(pt, 1e-12));
                    assert!(r.active_constraints(pt, 1e-12) >= 2, "{pt} p={p}");
                }
            }
        }
    }

    #[test]
    fn no_csit_nested_in_global() {
        for k in 0..=20 {
            let p = f64::from(k) * 0.05;
            let outer = region_global_delayed(p).unwrap();
            for c in region_no_csit(p).unwrap().corners() {
                assert!(outer.contains(c, 1e-12), "p={p} {c}");
            }
        }
    }

    #[test]
    fn asymmetric_corner_values() {
        assert_eq!(asymmetric_corner(0.5).unwrap(), RatePair::new(0.375, 0.5));
        assert_eq!(asymmetric_corner(1.0).unwrap(), RatePair::new(0.0, 1.0));
        let low = asymmetric_corner(0.25).unwrap();
        assert!(close(0.25 * 0.75 * 1.75, 0.328_125));
        assert_eq!(low, RatePair::new(0.25, 0.25));
        // Cap releases where q(1+q) = 1, i.e. q = (√5 − 1)/2.
        let q_star = (5f64.sqrt() - 1.0) / 2.0;
        let p_star = 1.0 - q_star;
        for dp in [-1e-3, 1e-3] {
            let pt = asymmetric_corner(p_star + dp).unwrap();
            assert_eq!(pt.r1 < pt.r2, dp > 0.0);
        }
    }

    #[test]
    fn asymmetric_corner_is_a_vertex() {
        for k in 1..20 {
            let p = f64::from(k) * 0.05;
            let pt = asymmetric_corner(p).unwrap();
            assert!(has(&region_global_delayed(p).unwrap().corners(), pt.r1, pt.r2), "p={p}");
        }
    }

    #[test]
    fn symmetric_corner_matches_region() {
        assert!(close(symmetric_corner(0.5).unwrap(), 0.45));
        for k in 0..=20 {
            let p = f64::from(k) * 0.05;
            let r = region_global_delayed(p).unwrap();
            assert!((symmetric_corner(p).unwrap() - r.max_symmetric_rate()).abs() < 1e-12);
        }
    }

    #[test]
    fn views_map_to_regions() {
        for v in [ViewId::V0, ViewId::V1, ViewId::V3, ViewId::V4] {
            let ViewRegion::Known(r) = region_for_view(v, 0.5).unwrap() else { panic!() };
            assert_eq!(r.halfspaces, region_no_csit(0.5).unwrap().halfspaces);
        }
        for v in [ViewId::V2, ViewId::V5, ViewId::V6, ViewId::V8] {
            let ViewRegion::Known(r) = region_for_view(v, 0.5).unwrap() else { panic!() };
            assert_eq!(r.halfspaces, region_global_delayed(0.5).unwrap().halfspaces);
        }
        let ViewRegion::Open { inner, outer } = region_for_view(ViewId::V7, 0.5).unwrap() else {
            panic!()
        };
        assert!(inner.label.ends_with("open") && outer.label.ends_with("open"));
    }
}

//! Property tests over random inputs.

use erasure_ic::gf2::{rank, solve, BitMatrix, BitVector, IncrementalSolver};
use erasure_ic::protocol::{phase1_step, phase1_transition, QueueMove, QueueSet};
use erasure_ic::regions::{asymmetric_corner, region_global_delayed, region_no_csit, symmetric_corner, RatePair};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = BitMatrix> {
    prop::collection::vec(any::<bool>(), rows * cols).prop_map(move |b| BitMatrix::from_fn(rows, cols, |r, c| b[r * cols + c]))
}

fn vector(len: usize) -> impl Strategy<Value = BitVector> {
    prop::collection::vec(any::<bool>(), len).prop_map(|b| BitVector::from_bools(&b))
}

fn system() -> impl Strategy<Value = (BitMatrix, BitVector, BitVector)> {
    (1usize..90, 1usize..90).prop_flat_map(|(r, c)| (matrix(r, c), vector(c), vector(c)))
}

proptest! {
    #[test]
    fn products_are_linear((a, x, y) in system()) {
        let mut sum = x.clone();
        sum.xor_assign(&y);
        let mut expect = a.mul_vec(&x).unwrap();
        expect.xor_assign(&a.mul_vec(&y).unwrap());
        prop_assert_eq!(a.mul_vec(&sum).unwrap(), expect);
    }

    #[test]
    fn rank_is_transpose_invariant((a, _, _) in system()) {
        let r = rank(&a);
        prop_assert!(r <= a.rows().min(a.cols()));
        prop_assert_eq!(r, rank(&a.transpose()));
    }

    #[test]
    fn full_rank_systems_round_trip((a, x, _) in system()) {
        let b = a.mul_vec(&x).unwrap();
        match solve(&a, &b) {
            Ok(got) => {
                prop_assert_eq!(rank(&a), a.cols());
                prop_assert_eq!(got, x);
            }
            Err(_) => prop_assert!(rank(&a) < a.cols()),
        }
    }

    #[test]
    fn incremental_rank_matches_batch((a, x, _) in system()) {
        let b = a.mul_vec(&x).unwrap();
        let mut inc = IncrementalSolver::new(a.cols());
        for r in 0..a.rows() {
            inc.absorb(&a.row_vector(r), b.bit(r)).unwrap();
        }
        prop_assert_eq!(inc.rank(), rank(&a));
        prop_assert_eq!(inc.conflicts(), 0);
        if inc.is_complete() {
            prop_assert_eq!(inc.extract().unwrap(), x);
        }
    }

    #[test]
    fn no_feedback_region_sits_inside_delayed_region(p in 0.0f64..=1.0) {
        let inner = region_no_csit(p).unwrap();
        let outer = region_global_delayed(p).unwrap();
        for c in inner.corners() {
            prop_assert!(outer.contains(c, 1e-9), "{c} at p = {p}");
        }
        for c in outer.corners() {
            prop_assert!(outer.contains(c, 1e-9));
            prop_assert!(outer.contains(c.swapped(), 1e-9));
            prop_assert!(outer.active_constraints(c, 1e-9) >= 2);
        }
    }

    #[test]
    fn corner_points_lie_on_the_boundary(p in 0.01f64..=1.0) {
        let outer = region_global_delayed(p).unwrap();
        let r = symmetric_corner(p).unwrap();
        prop_assert!((outer.max_symmetric_rate() - r).abs() < 1e-12);
        prop_assert!(!outer.contains(RatePair::new(r + 1e-6, r + 1e-6), 1e-9));
        let a = asymmetric_corner(p).unwrap();
        prop_assert!(outer.contains(a, 1e-9));
        prop_assert!(outer.active_constraints(a, 1e-9) >= 2);
    }

    #[test]
    fn queues_conserve_bits(m in 1usize..60, gains in prop::collection::vec((any::<bool>(), any::<bool>()), 0..200)) {
        let len = gains.len();
        let mut q = QueueSet::new(1, 0..m, m);
        let mut moved = [0usize; 3];
        for (t, &(own, cross)) in gains.iter().enumerate() {
            let Some(bit) = phase1_step(&q, t, len).unwrap() else { break };
            let mv = phase1_transition(&mut q, bit, t, own, cross);
            prop_assert_eq!(mv, QueueMove::from_gains(own, cross));
            match mv {
                QueueMove::ToQ1 => moved[0] += 1,
                QueueMove::ToQ2 => moved[1] += 1,
                QueueMove::Delivered => moved[2] += 1,
                QueueMove::Stay => {}
            }
            prop_assert!(q.conserved());
        }
        prop_assert_eq!(q.initial().len() + q.q1().len() + q.q2().len() + q.delivered().len(), m);
        prop_assert_eq!([q.q1().len(), q.q2().len(), q.delivered().len()], moved);
    }
}

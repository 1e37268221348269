//! Property tests for the structural invariants: tree addressing, path
//! splits, step positivity and injectivity of the log-field map.

use proptest::prelude::*;
use treegibbs_core::recursion::{hinge_log_map, step};
use treegibbs_core::tree::{split_assign, successors, SplitClass, VertexAddress};
use treegibbs_core::{ActivityVector, Builtin, ConstraintGraph, PathCode, TreeShape};

fn builtin_strategy() -> impl Strategy<Value = Builtin> {
    prop_oneof![
        Just(Builtin::Wrench),
        Just(Builtin::Wand),
        Just(Builtin::Hinge),
        Just(Builtin::Pipe),
    ]
}

proptest! {
    /// |V_n| equals the root plus the closed-form layer sizes, and the
    /// successor lists enumerate each layer exactly once.
    #[test]
    fn vertex_count_matches_enumeration(k in 1usize..=3, n in 0usize..=4) {
        let shape = TreeShape::new(k, n).unwrap();
        let mut layer = vec![VertexAddress::root()];
        let mut total = 1usize;
        for m in 1..=n {
            let mut next = Vec::new();
            for x in &layer {
                next.extend(successors(&shape, x));
            }
            prop_assert_eq!(next.len(), shape.layer_size(m).unwrap());
            total += next.len();
            layer = next;
        }
        prop_assert_eq!(total, shape.vertex_count().unwrap());
    }

    /// Off-path vertices split into exactly the two sides, every vertex on
    /// the path prefix is OnPath, and moving t across a vertex's branch
    /// flips it from T2 to T1 at most once (monotone in t).
    #[test]
    fn split_partition_and_monotonicity(num in 0u32..=4096, v in 1usize..22) {
        let shape = TreeShape::new(2, 4).unwrap();
        let t = f64::from(num) / 4096.0; // dyadic, so digit extraction is exact
        let path = PathCode::new(t).unwrap();
        let addr = shape.address(v % shape.vertex_count().unwrap()).unwrap();
        let class = split_assign(&shape, &path, &addr);
        if class == SplitClass::OnPath {
            let digits = path.digits(2, addr.generation());
            prop_assert_eq!(&digits[..], addr.digits());
        }
        // sweep t upward on a dyadic grid; T2 may flip to T1 exactly once
        let mut flips = 0usize;
        let mut prev: Option<SplitClass> = None;
        for i in 0..=64u32 {
            let ti = f64::from(i) / 64.0;
            let c = split_assign(&shape, &PathCode::new(ti).unwrap(), &addr);
            if let (Some(p), c2) = (prev, c) {
                if p != c2 {
                    flips += 1;
                    // the only allowed transitions pass through or end at T1
                    prop_assert!(p == SplitClass::T2 || c2 == SplitClass::T1);
                }
            }
            prev = Some(c);
        }
        prop_assert!(flips <= 2, "vertex flipped sides {flips} times");
    }

    /// Distinct dyadic parameters whose digit streams differ give distinct
    /// path prefixes at that depth.
    #[test]
    fn path_digit_injectivity(a in 0u32..=1024, b in 0u32..=1024) {
        let (ta, tb) = (f64::from(a) / 1024.0, f64::from(b) / 1024.0);
        let da = PathCode::new(ta).unwrap().digits(2, 12);
        let db = PathCode::new(tb).unwrap().digits(2, 12);
        if ta != tb {
            prop_assert_ne!(da, db, "t={} and t={} share all 12 digits", ta, tb);
        } else {
            prop_assert_eq!(da, db);
        }
    }

    /// The step stays strictly positive and finite for positive children.
    #[test]
    fn step_positive_for_positive_children(
        which in builtin_strategy(),
        lam in 0.05f64..50.0,
        z in prop::collection::vec(0.01f64..100.0, 4),
    ) {
        let g = ConstraintGraph::builtin(which);
        let act = ActivityVector::canonical(lam).unwrap();
        let c1 = [z[0], z[1]];
        let c2 = [z[2], z[3]];
        let out = step(&g, &act, &[&c1, &c2]).unwrap();
        prop_assert!(out.iter().all(|&x| x > 0.0 && x.is_finite()), "{out:?}");
    }

    /// The log-field map is injective: separated inputs stay separated.
    #[test]
    fn log_map_injective_on_probes(
        h1 in -10.0f64..10.0, h2 in -10.0f64..10.0,
        l1 in -10.0f64..10.0, l2 in -10.0f64..10.0,
    ) {
        let h = [h1, h2];
        let l = [l1, l2];
        let sep = (h1 - l1).abs().max((h2 - l2).abs());
        prop_assume!(sep > 1e-9);
        let fh = hinge_log_map(h);
        let fl = hinge_log_map(l);
        let out = (fh[0] - fl[0]).abs().max((fh[1] - fl[1]).abs());
        prop_assert!(out > 0.0, "F({h:?}) == F({l:?}) with separation {sep}");
    }
}

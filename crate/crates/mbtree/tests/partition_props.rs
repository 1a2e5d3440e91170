use mbtree::partition::{d_p, partitions_bounded, partitions_of, Part, Partition};
use proptest::prelude::*;

fn partition() -> impl Strategy<Value = Partition> {
    (prop::collection::vec(1u64..6, 0..5), 0usize..3).prop_map(|(fin, inf)| {
        let mut parts: Vec<Part> = fin.into_iter().map(Part::Fin).collect();
        parts.extend(std::iter::repeat_n(Part::Inf, inf));
        Partition::from_unsorted(parts)
    })
}

proptest! {
    #[test]
    fn d_p_is_an_ultrametric(a in partition(), b in partition(), c in partition()) {
        prop_assert_eq!(d_p(&a, &a), 0.0);
        prop_assert_eq!(d_p(&a, &b), d_p(&b, &a));
        prop_assert!(d_p(&a, &c) <= d_p(&a, &b).max(d_p(&b, &c)));
        if a != b {
            prop_assert!(d_p(&a, &b) > 0.0);
        }
    }

    #[test]
    fn truncation_is_monotone(a in partition(), b in partition(), k in 0u64..8, extra in 0u64..4) {
        let k2 = k + extra;
        if a.truncate(k2) == b.truncate(k2) {
            prop_assert_eq!(a.truncate(k), b.truncate(k));
        }
    }

    #[test]
    fn iota_normalizes_in_order(parts in prop::collection::vec(1u64..50, 1..8)) {
        let lam = Partition::from_finite(parts);
        let m = lam.iota().unwrap();
        prop_assert!((m.sum() - 1.0).abs() < 1e-12);
        prop_assert!(m.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn text_round_trip(a in partition()) {
        let back: Partition = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn partition_counts() {
    let p: Vec<usize> = (0..=15).map(|n| partitions_of(n).len()).collect();
    assert_eq!(p, [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176]);
    for lam in partitions_of(9) {
        assert_eq!(lam.norm(), Some(9));
    }
    // binary splits of 7: (6,1), (5,2), (4,3)
    assert_eq!(partitions_bounded(7, 6, 2).iter().filter(|l| l.len() == 2).count(), 3);
}

#[test]
fn bad_partitions_are_rejected() {
    assert!(Partition::new(vec![Part::Fin(1), Part::Fin(2)]).is_err());
    assert!(Partition::new(vec![Part::Fin(0)]).is_err());
    assert!("3,x".parse::<Partition>().is_err());
    assert!("0".parse::<Partition>().is_err());
}

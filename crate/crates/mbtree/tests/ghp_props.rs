use mbtree::analysis::replica_rng;
use mbtree::ghp::{
    concatenate_spaces, d_ghp_exact, d_ghp_extended, d_ghp_upper, ghp_lower_bound, random_space, PointedMetricSpace,
};
use mbtree::mb_engine::Measure;
use mbtree::Tree;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn space() -> impl Strategy<Value = PointedMetricSpace> {
    (1usize..=4, any::<u64>()).prop_map(|(m, seed)| random_space(m, &mut replica_rng(seed, 0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_is_a_pseudometric(x in space(), y in space(), z in space()) {
        let (xy, yx) = (d_ghp_exact(&x, &y).unwrap(), d_ghp_exact(&y, &x).unwrap());
        prop_assert!((xy - yx).abs() <= TOL);
        prop_assert!(d_ghp_exact(&x, &x).unwrap() <= TOL);
        let (xz, yz) = (d_ghp_exact(&x, &z).unwrap(), d_ghp_exact(&y, &z).unwrap());
        prop_assert!(xz <= xy + yz + TOL);
    }

    #[test]
    fn bounds_bracket_the_exact_value(x in space(), y in space()) {
        let d = d_ghp_exact(&x, &y).unwrap();
        let iv = d_ghp_upper(&x, &y);
        prop_assert!(iv.lower - TOL <= d && d <= iv.upper + TOL, "{:?} vs {}", iv, d);
        prop_assert!(ghp_lower_bound(&x, &y) <= d + TOL);
        prop_assert!(0.5 * (x.height() - y.height()).abs() <= d + TOL);
        prop_assert!((x.total_mass() - y.total_mass()).abs() <= d + TOL);
    }

    #[test]
    fn rescaling_bounds(x in space(), y in space(), a in 0.1f64..2.0, b in 0.1f64..2.0, c in 0.1f64..2.0, e in 0.1f64..2.0) {
        let same = d_ghp_exact(&x.rescale(a, b), &x.rescale(c, e)).unwrap();
        prop_assert!(same <= ((a - c).abs() * x.height()).max((b - e).abs() * x.total_mass()) + TOL);
        let both = d_ghp_exact(&x.rescale(a, b), &y.rescale(a, b)).unwrap();
        prop_assert!(both <= a.max(b) * d_ghp_exact(&x, &y).unwrap() + TOL);
    }

    #[test]
    fn concatenation_is_subadditive(x1 in space(), x2 in space(), y1 in space(), y2 in space()) {
        let (sx, sy) = (concatenate_spaces(&[x1.clone(), x2.clone()]), concatenate_spaces(&[y1.clone(), y2.clone()]));
        prop_assume!(sx.len() * sy.len() <= mbtree::ghp::EXACT_CAP);
        let lhs = d_ghp_exact(&sx, &sy).unwrap();
        let rhs = d_ghp_exact(&x1, &y1).unwrap() + d_ghp_exact(&x2, &y2).unwrap();
        prop_assert!(lhs <= rhs + TOL, "{} > {}", lhs, rhs);
    }

    #[test]
    fn extended_distance_forgets_the_far_part(x in space(), y in space(), r in 0.0f64..4.0) {
        let top = x.height().max(y.height()) + 1.0;
        let full = d_ghp_extended(&x, &y, top).value;
        let cut = d_ghp_extended(&x.truncate(r), &y.truncate(r), top).value;
        prop_assert!((full - cut).abs() <= (-r).exp() + TOL);
        prop_assert!((0.0..=1.0 + TOL).contains(&full));
    }
}

#[test]
fn trees_as_spaces() {
    let path = Tree::from_code("((()))").unwrap();
    let cherry = Tree::from_code("(()())").unwrap();
    let x = PointedMetricSpace::from_tree(&path, 1.0, 1.0, Measure::Vertices);
    let y = PointedMetricSpace::from_tree(&cherry, 1.0, 1.0, Measure::Vertices);
    assert_eq!(x.height(), 2.0);
    assert_eq!(y.height(), 1.0);
    assert_eq!(x.total_mass(), 3.0);
    // heights differ by 1 so the distance is at least ½; folding the path onto the cherry achieves it
    assert!((d_ghp_exact(&x, &y).unwrap() - 0.5).abs() < 1e-12);
    let leaves = PointedMetricSpace::from_tree(&cherry, 1.0, 0.5, Measure::Leaves);
    assert_eq!(leaves.total_mass(), 1.0);
    assert_eq!(d_ghp_exact(&y, &y.rescale(1.0, 1.0)).unwrap(), 0.0);
}

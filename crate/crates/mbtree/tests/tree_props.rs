use mbtree::partition::Partition;
use mbtree::tree::{d_loc, Tree};
use proptest::prelude::*;

/// Random recursive shapes: node `i` hangs below a node chosen among `0..i`.
fn tree() -> impl Strategy<Value = Tree> {
    prop::collection::vec(any::<u32>(), 0..25).prop_map(|picks| {
        let mut parents = vec![None];
        for (i, p) in picks.into_iter().enumerate() {
            parents.push(Some(p as usize % (i + 1)));
        }
        Tree::from_parents(&parents).unwrap()
    })
}

/// The same shape with node ids permuted.
fn relabel(t: &Tree, seed: u64) -> Tree {
    let n = t.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut s = seed | 1;
    for i in (1..n).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        perm.swap(i, (s % (i as u64 + 1)) as usize);
    }
    let mut parents = vec![None; n];
    for u in 0..n {
        parents[perm[u]] = t.parent(u).map(|p| perm[p]);
    }
    Tree::from_parents(&parents).unwrap()
}

proptest! {
    #[test]
    fn canonical_code_ignores_labels(t in tree(), seed in any::<u64>()) {
        let s = relabel(&t, seed);
        prop_assert_eq!(t.canonical_code(), s.canonical_code());
        prop_assert_eq!(d_loc(&t, &s), 0.0);
    }

    #[test]
    fn text_formats_round_trip(t in tree()) {
        let code = t.canonical_code().to_string();
        prop_assert_eq!(Tree::from_code(&code).unwrap().canonical_code().to_string(), code);
        prop_assert_eq!(Tree::from_parent_text(&t.to_parent_text()).unwrap(), t.clone());
        prop_assert_eq!(Tree::from_record(&t.to_record()).unwrap(), t);
    }

    #[test]
    fn d_loc_is_an_ultrametric(a in tree(), b in tree(), c in tree()) {
        prop_assert_eq!(d_loc(&a, &b), d_loc(&b, &a));
        prop_assert!(d_loc(&a, &c) <= d_loc(&a, &b).max(d_loc(&b, &c)));
    }

    #[test]
    fn balls_nest(t in tree(), r in 0usize..6, big in 0usize..6) {
        prop_assert_eq!(t.ball(big).ball(r), t.ball(r.min(big)));
        prop_assert!(t.ball(r).height() <= r);
    }

    /// `t|_0` never shows the root degree while `λ∧0` does, so the bound
    /// `d_P ≤ d_loc` needs equal root degrees; `d_P ≤ e·d_loc` always holds.
    #[test]
    fn first_split_is_lipschitz(a in tree(), b in tree()) {
        let dp = mbtree::partition::d_p(&a.first_split_vertices(), &b.first_split_vertices());
        let dl = d_loc(&a, &b);
        if a.children(a.root()).len() == b.children(b.root()).len() {
            prop_assert!(dp <= dl + 1e-15);
        }
        prop_assert!(dp <= std::f64::consts::E * dl + 1e-15);
    }

    #[test]
    fn concatenation_splits_into_its_parts(parts in prop::collection::vec(tree(), 0..5)) {
        let t = Tree::concatenate(&parts);
        prop_assert_eq!(t.len(), 1 + parts.iter().map(Tree::len).sum::<usize>());
        let sizes = Partition::from_finite(parts.iter().map(|s| s.len() as u64).collect());
        prop_assert_eq!(t.first_split_vertices(), sizes);
        for (&c, s) in t.children(t.root()).iter().zip(&parts) {
            // children keep the order of the parts
            prop_assert_eq!(t.subtree(c).unwrap(), s.clone());
        }
    }

    #[test]
    fn graft_adds_sizes(t in tree(), s in tree(), at in any::<u32>()) {
        let u = at as usize % t.len();
        let g = t.graft(u, &s).unwrap();
        prop_assert_eq!(g.len(), t.len() + s.len() - 1);
    }
}

#[test]
fn root_degree_breaks_the_plain_bound() {
    let (a, b) = (Tree::star(2), Tree::star(3));
    assert_eq!(d_loc(&a, &b), (-1.0f64).exp());
    assert_eq!(mbtree::partition::d_p(&a.first_split_vertices(), &b.first_split_vertices()), 1.0);
}

#[test]
fn invalid_inputs() {
    assert!(Tree::from_parents(&[]).is_err());
    assert!(Tree::from_parents(&[None, None]).is_err());
    assert!(Tree::from_parents(&[Some(1), Some(0)]).is_err());
    assert!(Tree::from_code("(()").is_err());
    assert!(Tree::from_parent_text("-,7").is_err());
    assert!(Tree::single().subtree(3).is_err());
}

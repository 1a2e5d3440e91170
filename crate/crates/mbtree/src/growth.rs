//! Models realized by their own dynamics: uniform labelled trees, cut-trees,
//! the α-γ and `k`-ary growth algorithms, and Kesten's tree.
//!
//! Labelled trees are plain [`Tree`]s whose node ids are the labels.

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use rand::{Rng, RngCore};

use crate::dist::OffspringLaw;
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::mb_engine::{Builder, InfiniteTreeBall, Measure, Residual, VolumeCurve};
use crate::split_laws::Params;
use crate::tree::{NodeId, Tree};

fn tree_rooted_at(n: usize, edges: &[(usize, usize)], root: usize) -> Tree {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                stack.push(v);
            }
        }
    }
    Tree::from_parents_unchecked(parent, root)
}

/// Uniform labelled tree on `n` vertices (Prüfer decoding), rooted at a
/// uniform vertex.
pub fn sample_cayley(n: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    if n == 0 {
        return Err(Error::UnsupportedSize("cayley tree needs n >= 1".into()));
    }
    let root = rng.random_range(0..n);
    if n <= 2 {
        let edges: Vec<(usize, usize)> = if n == 2 { vec![(0, 1)] } else { Vec::new() };
        return Ok(tree_rooted_at(n, &edges, root));
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    Ok(tree_rooted_at(n, &prufer_decode(n, &code), root))
}

/// Edges of the labelled tree with the given Prüfer code.
pub fn prufer_decode(n: usize, code: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &c in code {
        degree[c] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in code {
        let Reverse(leaf) = leaves.pop().expect("a leaf remains");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.push(Reverse(c));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a, b));
    edges
}

/// Uniform recursive tree: vertex `i` attaches to a uniform earlier vertex.
pub fn sample_recursive_tree(n: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    if n == 0 {
        return Err(Error::UnsupportedSize("recursive tree needs n >= 1".into()));
    }
    let mut parent = vec![None];
    for i in 1..n {
        parent.push(Some(rng.random_range(0..i)));
    }
    Ok(Tree::from_parents_unchecked(parent, 0))
}

/// Cut-tree: remove a uniform edge, recurse on both components and join
/// the two results under a new root.
pub fn cut_tree(t: &Tree, rng: &mut dyn RngCore) -> Tree {
    let n = t.len();
    let mut comp = vec![0usize; n];
    let mut next_id = 1;
    // each component lists its top vertex first
    let mut b = Builder::default();
    let root = b.root();
    let mut stack = vec![(t.bfs_order(), root)];
    let mut sub = Vec::new();
    let mut queue = Vec::new();
    while let Some((verts, out)) = stack.pop() {
        if verts.len() == 1 {
            continue;
        }
        let cid = comp[verts[0]];
        let v = verts[rng.random_range(1..verts.len())];
        sub.clear();
        queue.clear();
        queue.push(v);
        comp[v] = next_id;
        while let Some(u) = queue.pop() {
            sub.push(u);
            for &c in t.children(u) {
                if comp[c] == cid {
                    comp[c] = next_id;
                    queue.push(c);
                }
            }
        }
        next_id += 1;
        let rest: Vec<usize> = verts.into_iter().filter(|&u| comp[u] == cid).collect();
        let mut lower = std::mem::take(&mut sub);
        // keep v at the front as the top of its component
        let pos = lower.iter().position(|&u| u == v).expect("v in its component");
        lower.swap(0, pos);
        let left = b.child(out);
        let right = b.child(out);
        stack.push((rest, left));
        stack.push((lower, right));
    }
    b.finish()
}

/// Cut-tree by the reverse process: edges in a uniform order are added back
/// with a union-find, each merge creating the parent of two components.
pub fn cut_tree_union_find(t: &Tree, rng: &mut dyn RngCore) -> Tree {
    let n = t.len();
    if n == 1 {
        return Tree::single();
    }
    let mut edges: Vec<NodeId> = (0..n).filter(|&v| t.parent(v).is_some()).collect();
    for i in (1..edges.len()).rev() {
        let j = rng.random_range(0..=i);
        edges.swap(i, j);
    }
    let mut uf: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for &v in edges.iter().rev() {
        let p = t.parent(v).expect("non-root");
        let (a, c) = (find(&mut uf, v), find(&mut uf, p));
        let new = parent.len();
        parent.push(None);
        parent[node_of[a]] = Some(new);
        parent[node_of[c]] = Some(new);
        uf[a] = c;
        node_of[c] = new;
    }
    let root = parent.len() - 1;
    Tree::from_parents_unchecked(parent, root)
}

/// The α-γ growth algorithm: `n` leaves, starting from the cherry `T_2`.
/// Edges weigh `1-α` into a leaf and `γ` otherwise, the planted edge above
/// the root included; a vertex with `c` children weighs `(c-1)α - γ`.
pub fn grow_alpha_gamma(alpha: f64, gamma: f64, n: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    if !(0.0 <= gamma && gamma <= alpha && alpha <= 1.0) {
        return Err(Error::Domain(format!("need 0 <= gamma <= alpha <= 1, got alpha={alpha}, gamma={gamma}")));
    }
    if n == 0 {
        return Err(Error::UnsupportedSize("alpha-gamma tree needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(Tree::single());
    }
    let cap = 2 * n;
    let mut parent: Vec<Option<usize>> = vec![None, Some(0), Some(0)];
    let mut kids: Vec<u32> = vec![2, 0, 0];
    let mut root = 0;
    let mut w = vec![0.0; 2 * cap];
    let mut fen = Fenwick::new(2 * cap);
    let set = |fen: &mut Fenwick, w: &mut Vec<f64>, slot: usize, value: f64| {
        fen.add(slot, value - w[slot]);
        w[slot] = value;
    };
    // slot 2v: edge above v; slot 2v+1: vertex v
    set(&mut fen, &mut w, 0, gamma);
    set(&mut fen, &mut w, 1, alpha - gamma);
    set(&mut fen, &mut w, 2, 1.0 - alpha);
    set(&mut fen, &mut w, 4, 1.0 - alpha);
    for _ in 2..n {
        let slot = loop {
            let s = fen.find(rng.random::<f64>() * fen.total());
            if w[s] > 0.0 {
                break s;
            }
        };
        let v = slot / 2;
        let leaf = parent.len();
        if slot % 2 == 0 {
            let mid = leaf + 1;
            parent.push(Some(mid));
            parent.push(parent[v]);
            kids.extend([0, 2]);
            parent[v] = Some(mid);
            if v == root {
                root = mid;
            }
            set(&mut fen, &mut w, 2 * mid, gamma);
            set(&mut fen, &mut w, 2 * mid + 1, alpha - gamma);
        } else {
            parent.push(Some(v));
            kids.push(0);
            kids[v] += 1;
            let value = (kids[v] as f64 - 1.0) * alpha - gamma;
            set(&mut fen, &mut w, 2 * v + 1, value);
        }
        set(&mut fen, &mut w, 2 * leaf, 1.0 - alpha);
    }
    Ok(Tree::from_parents_unchecked(parent, root))
}

/// `k`-ary growing tree with `n` internal vertices: a uniform edge of the
/// planted tree receives a new vertex carrying `k-1` new leaves.
pub fn grow_kary(k: usize, n: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    if k < 2 {
        return Err(Error::Domain(format!("k-ary growth needs k >= 2, got {k}")));
    }
    let mut parent: Vec<Option<usize>> = vec![None];
    parent.reserve(k * n);
    let mut root = 0;
    for _ in 0..n {
        // the edge above v, planted edge for the root
        let v = rng.random_range(0..parent.len());
        let mid = parent.len();
        parent.push(parent[v]);
        parent[v] = Some(mid);
        if v == root {
            root = mid;
        }
        for _ in 1..k {
            parent.push(Some(mid));
        }
    }
    Ok(Tree::from_parents_unchecked(parent, root))
}

/// Kesten's tree to depth `R`: the spine vertex at each level has `X` extra
/// children, `X + 1 ~ ξ̂`, each starting an independent GW tree.
pub fn kesten_ball(xi: &OffspringLaw, r: usize, rng: &mut dyn RngCore) -> Result<InfiniteTreeBall> {
    let hat = xi.size_biased()?;
    let mut b = Builder::default();
    let mut spine = b.root();
    let mut backbone = vec![true];
    let mut level: Vec<NodeId> = Vec::new();
    for _ in 0..r {
        let mut next = Vec::new();
        for &u in &level {
            for _ in 0..xi.sample(rng) {
                next.push(b.child(u));
                backbone.push(false);
            }
        }
        for _ in 1..hat.sample(rng) {
            next.push(b.child(spine));
            backbone.push(false);
        }
        spine = b.child(spine);
        backbone.push(true);
        level = next;
    }
    let n = b.parent.len();
    let mut has_child = vec![false; n];
    for p in b.parent.iter().flatten() {
        has_child[*p] = true;
    }
    let mut is_leaf: Vec<bool> = (0..n).map(|u| !has_child[u]).collect();
    let mut frontier = vec![false; n];
    let mut residual = vec![None; n];
    is_leaf[spine] = false;
    frontier[spine] = true;
    residual[spine] = Some(Residual::Backbone);
    for &u in &level {
        residual[u] = Some(Residual::Free);
        is_leaf[u] = xi.sample(rng) == 0;
        frontier[u] = !is_leaf[u];
    }
    Ok(InfiniteTreeBall { tree: b.finish(), radius: r, backbone, frontier, residual, is_leaf })
}

/// Vertex volume curve of Kesten's tree from generation sizes alone:
/// `Y_{d+1} = ξ_1 + … + ξ_{Y_d} + X_d`, `V(R) = Σ_{d≤R} (1 + Y_d)`.
pub fn kesten_volume(xi: &OffspringLaw, hat: &OffspringLaw, r_max: usize, rng: &mut dyn RngCore) -> Result<VolumeCurve> {
    let mut levels = Vec::with_capacity(r_max + 1);
    levels.push(1u64);
    let mut y = 0u64;
    for _ in 0..r_max {
        let born = xi.sample_sum(y, rng)?;
        y = born.saturating_add(hat.sample(rng) - 1);
        levels.push(y.saturating_add(1));
    }
    Ok(VolumeCurve::from_level_counts(Measure::Vertices, &levels))
}

/// Growth model names accepted by [`grow_by_name`].
pub const GROWTH_NAMES: &[&str] =
    &["cayley", "recursive", "cayley-cut", "recursive-cut", "alpha-gamma", "ford", "remy", "marchal", "kary"];

fn param(params: &Params, key: &str) -> Result<f64> {
    let v = params.get(key).ok_or_else(|| Error::Parse(format!("missing parameter {key}")))?;
    v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("parameter {key}={v:?}: {e}")))
}

/// Runs a growth model by name. `n` counts vertices for labelled trees and
/// cut-trees' leaves, leaves for α-γ, internal vertices for `k`-ary trees.
pub fn grow_by_name(name: &str, params: &Params, n: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    match name {
        "cayley" => sample_cayley(n, rng),
        "recursive" => sample_recursive_tree(n, rng),
        "cayley-cut" => Ok(cut_tree(&sample_cayley(n, rng)?, rng)),
        "recursive-cut" => Ok(cut_tree(&sample_recursive_tree(n, rng)?, rng)),
        "alpha-gamma" => grow_alpha_gamma(param(params, "alpha")?, param(params, "gamma")?, n, rng),
        "ford" => {
            let a = param(params, "alpha")?;
            grow_alpha_gamma(a, a, n, rng)
        }
        "remy" => grow_alpha_gamma(0.5, 0.5, n, rng),
        "marchal" => {
            let beta = param(params, "beta")?;
            if !(beta > 1.0 && beta <= 2.0) {
                return Err(Error::Domain(format!("marchal needs beta in (1,2], got {beta}")));
            }
            grow_alpha_gamma(1.0 / beta, 1.0 - 1.0 / beta, n, rng)
        }
        "kary" => {
            let k = params.get("k").map_or(Ok(2.0), |_| param(params, "k"))?;
            if k.fract() != 0.0 || k < 2.0 {
                return Err(Error::Domain(format!("k must be an integer >= 2, got {k}")));
            }
            grow_kary(k as usize, n, rng)
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::split_laws::{AlphaGammaLaw, KaryLaw, SplitLaw};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn edge_set(t: &Tree) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> =
            (0..t.len()).filter_map(|v| t.parent(v).map(|p| (v.min(p), v.max(p)))).collect();
        e.sort_unstable();
        e
    }

    #[test]
    fn prufer_roundtrip_count() {
        // all 4^2 codes give distinct trees
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..4 {
            for b in 0..4 {
                let mut e = prufer_decode(4, &[a, b]);
                for x in &mut e {
                    *x = (x.0.min(x.1), x.0.max(x.1));
                }
                e.sort_unstable();
                seen.insert(e);
            }
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn cayley_uniform_small() {
        let mut g = rng(1);
        assert_eq!(sample_cayley(1, &mut g).unwrap().len(), 1);
        let draws = 100_000;
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(edge_set(&sample_cayley(3, &mut g).unwrap())).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for c in counts.values() {
            assert!((*c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn recursive_uniform_small() {
        let mut g = rng(2);
        let draws = 60_000;
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(edge_set(&sample_recursive_tree(4, &mut g).unwrap())).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn cut_tree_shapes() {
        let mut g = rng(3);
        assert_eq!(cut_tree(&Tree::single(), &mut g).len(), 1);
        assert!(cut_tree(&Tree::branch(1), &mut g).isomorphic(&Tree::cherry()));
        let c = cut_tree(&Tree::branch(2), &mut g);
        assert_eq!(c.n_leaves(), 3);
        assert_eq!(c.first_split_leaves(), Partition::from_finite(vec![2, 1]));
        for _ in 0..200 {
            let t = sample_cayley(30, &mut g).unwrap();
            let c = cut_tree(&t, &mut g);
            assert_eq!(c.n_leaves(), 30);
            assert!((0..c.len()).all(|u| matches!(c.children(u).len(), 0 | 2)));
        }
    }

    #[test]
    fn cut_tree_agrees_with_union_find() {
        let mut g = rng(4);
        let t = Tree::from_parents(&[None, Some(0), Some(1), Some(1), Some(0), Some(4)]).unwrap();
        let draws = 60_000;
        let mut a: BTreeMap<String, f64> = BTreeMap::new();
        let mut b: BTreeMap<String, f64> = BTreeMap::new();
        for _ in 0..draws {
            *a.entry(cut_tree(&t, &mut g).canonical_code().to_string()).or_default() += 1.0 / draws as f64;
            *b.entry(cut_tree_union_find(&t, &mut g).canonical_code().to_string()).or_default() +=
                1.0 / draws as f64;
        }
        let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).cloned().collect();
        let tv: f64 =
            keys.iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.015, "{tv}");
    }

    #[test]
    fn alpha_gamma_small_cases() {
        let mut g = rng(5);
        assert!(grow_alpha_gamma(0.5, 0.5, 2, &mut g).unwrap().isomorphic(&Tree::cherry()));
        let comb = grow_alpha_gamma(1.0, 1.0, 6, &mut g).unwrap();
        assert_eq!(comb.height(), 5);
        assert_eq!(comb.n_leaves(), 6);
        for _ in 0..500 {
            let t = grow_alpha_gamma(0.7, 0.4, 50, &mut g).unwrap();
            assert_eq!(t.n_leaves(), 50);
        }
        assert!(grow_alpha_gamma(0.3, 0.5, 4, &mut g).is_err());
    }

    #[test]
    fn remy_four_leaves() {
        let mut g = rng(6);
        let draws = 60_000;
        let mut balanced = 0;
        for _ in 0..draws {
            let t = grow_alpha_gamma(0.5, 0.5, 4, &mut g).unwrap();
            if t.first_split_leaves() == Partition::from_finite(vec![2, 2]) {
                balanced += 1;
            }
        }
        // 3 of the 15 labelled binary trees with 4 leaves are balanced
        assert!((balanced as f64 / draws as f64 - 0.2).abs() < 0.01);
    }

    #[test]
    fn kary_counts() {
        let mut g = rng(7);
        assert_eq!(grow_kary(3, 0, &mut g).unwrap().len(), 1);
        assert!(grow_kary(3, 1, &mut g).unwrap().isomorphic(&Tree::star(3)));
        for k in 2..5 {
            let t = grow_kary(k, 40, &mut g).unwrap();
            assert_eq!(t.len(), k * 40 + 1);
            assert_eq!(t.n_leaves(), (k - 1) * 40 + 1);
        }
    }

    fn split_chi_square(law: &dyn SplitLaw, n: u64, trees: impl Iterator<Item = Partition>) -> f64 {
        let mut counts: BTreeMap<Partition, f64> = BTreeMap::new();
        let mut total = 0.0;
        for lam in trees {
            *counts.entry(lam).or_default() += 1.0;
            total += 1.0;
        }
        let mut stat = 0.0;
        let mut cells = 0;
        for (lam, p) in law.row(n).unwrap() {
            if p > 0.0 {
                let e = p * total;
                stat += (counts.get(&lam).unwrap_or(&0.0) - e).powi(2) / e;
                cells += 1;
            }
        }
        crate::special::chi_square_sf(stat, cells - 1)
    }

    #[test]
    fn grown_first_splits_follow_split_laws() {
        let mut g = rng(8);
        let ag = AlphaGammaLaw::new(0.7, 0.4).unwrap();
        let trees: Vec<Partition> =
            (0..30_000).map(|_| grow_alpha_gamma(0.7, 0.4, 6, &mut g).unwrap().first_split_leaves()).collect();
        assert!(split_chi_square(&ag, 6, trees.into_iter()) > 1e-3);
        let kl = KaryLaw::new(3).unwrap();
        let trees: Vec<Partition> = (0..30_000)
            .map(|_| {
                let t = grow_kary(3, 5, &mut g).unwrap();
                let sizes = t.children(t.root()).iter().map(|&c| {
                    let s = t.subtree(c).unwrap();
                    (s.len() as u64 - 1) / 3
                });
                Partition::from_finite(sizes.collect())
            })
            .collect();
        assert!(split_chi_square(&kl, 5, trees.into_iter()) > 1e-3);
    }

    #[test]
    fn kesten_ball_root_degree() {
        let xi = OffspringLaw::poisson(1.0).unwrap();
        let mut g = rng(9);
        assert_eq!(kesten_ball(&xi, 0, &mut g).unwrap().tree.len(), 1);
        let draws = 40_000;
        let one = (0..draws).filter(|_| kesten_ball(&xi, 1, &mut g).unwrap().tree.children(0).len() == 1).count();
        let p = (-1.0f64).exp();
        assert!((one as f64 / draws as f64 - p).abs() < 4.0 * (p * (1.0 - p) / draws as f64).sqrt());
    }

    #[test]
    fn kesten_volume_mean() {
        let xi = OffspringLaw::poisson(1.0).unwrap();
        let hat = xi.size_biased().unwrap();
        let mut g = rng(10);
        let reps = 20_000;
        let r = 10;
        let mut sum = vec![0.0; r + 1];
        for _ in 0..reps {
            let v = kesten_volume(&xi, &hat, r, &mut g).unwrap();
            for (s, x) in sum.iter_mut().zip(&v.values) {
                *s += *x as f64 / reps as f64;
            }
        }
        for (rr, s) in sum.iter().enumerate() {
            let want = (rr + 1) as f64 + (rr * (rr + 1)) as f64 / 2.0;
            assert!((s - want).abs() < 0.03 * want + 0.05, "R={rr}: {s} vs {want}");
        }
    }
}

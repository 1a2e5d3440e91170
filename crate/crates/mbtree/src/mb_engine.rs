//! Samplers for finite Markov branching trees `MB_n`, their depth-truncated
//! balls, and balls of the infinite tree built from `(q, q_∞)`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dist::OffspringLaw;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::split_laws::{Graft, Semantics, SplitLaw};
use crate::tree::{NodeId, Tree};

/// Node cap for the backbone of the infinite tree.
pub const BACKBONE_CAP: usize = 10_000_000;
/// Longest run of unary splits tolerated in leaf semantics.
pub const UNARY_RUN_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Vertices,
    Leaves,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Vertices => "vertices",
            Measure::Leaves => "leaves",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Measure> {
        match s {
            "vertices" | "vertex" => Ok(Measure::Vertices),
            "leaves" | "leaf" => Ok(Measure::Leaves),
            other => Err(Error::Parse(format!("unknown measure {other:?}"))),
        }
    }
}

/// What hangs below a node that was not expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residual {
    /// A finite MB tree of this size in the law's semantics.
    Sized(u64),
    /// An unconditioned GW tree.
    Free,
    /// The infinite backbone continues.
    Backbone,
}

/// The radius-`R` ball of an infinite Markov branching tree.
#[derive(Clone, Debug)]
pub struct InfiniteTreeBall {
    pub tree: Tree,
    pub radius: usize,
    pub backbone: Vec<bool>,
    /// Depth `R` and a non-empty subtree cut away.
    pub frontier: Vec<bool>,
    /// Set on every node at depth `R`.
    pub residual: Vec<Option<Residual>>,
    /// Leaf status in the untruncated tree.
    pub is_leaf: Vec<bool>,
}

impl InfiniteTreeBall {
    pub fn depths(&self) -> Vec<usize> {
        self.tree.depths()
    }

    pub fn n_vertices(&self) -> usize {
        self.tree.len()
    }

    /// Leaves of the full tree lying in the ball.
    pub fn n_leaves(&self) -> usize {
        self.is_leaf.iter().filter(|&&l| l).count()
    }

    /// Exact size of the full tree below each frontier node, where known.
    pub fn frontier_sizes(&self) -> Vec<(NodeId, Residual)> {
        (0..self.tree.len())
            .filter(|&u| self.frontier[u])
            .filter_map(|u| self.residual[u].map(|r| (u, r)))
            .collect()
    }

    pub fn backbone_len(&self) -> usize {
        self.backbone.iter().filter(|&&b| b).count()
    }

    /// The ball of a smaller radius, with the same bookkeeping.
    pub fn restrict(&self, r: usize) -> InfiniteTreeBall {
        if r >= self.radius {
            return self.clone();
        }
        let depth = self.tree.depths();
        let mut map = vec![usize::MAX; self.tree.len()];
        let mut b = Builder::default();
        let mut backbone = Vec::new();
        let mut frontier = Vec::new();
        let mut residual = Vec::new();
        let mut is_leaf = Vec::new();
        for u in self.tree.bfs_order() {
            if depth[u] > r {
                continue;
            }
            map[u] = match self.tree.parent(u) {
                None => b.root(),
                Some(p) => b.child(map[p]),
            };
            backbone.push(self.backbone[u]);
            let cut = depth[u] == r && !self.is_leaf[u];
            frontier.push(cut);
            residual.push(if depth[u] == r { self.residual_at(u) } else { None });
            is_leaf.push(self.is_leaf[u]);
        }
        InfiniteTreeBall { tree: b.finish(), radius: r, backbone, frontier, residual, is_leaf }
    }

    fn residual_at(&self, u: NodeId) -> Option<Residual> {
        if self.backbone[u] {
            Some(Residual::Backbone)
        } else {
            self.residual[u]
        }
    }
}

/// Arena used while sampling; nodes are created parent first.
#[derive(Default)]
pub(crate) struct Builder {
    pub(crate) parent: Vec<Option<NodeId>>,
    pub(crate) depth: Vec<usize>,
}

impl Builder {
    pub(crate) fn root(&mut self) -> NodeId {
        self.parent.push(None);
        self.depth.push(0);
        self.parent.len() - 1
    }

    pub(crate) fn child(&mut self, p: NodeId) -> NodeId {
        self.parent.push(Some(p));
        self.depth.push(self.depth[p] + 1);
        self.parent.len() - 1
    }

    pub(crate) fn finish(self) -> Tree {
        Tree::from_parents_unchecked(self.parent, 0)
    }
}

#[derive(Clone, Copy)]
struct Task {
    node: NodeId,
    what: Residual,
    unary_run: u64,
}

/// Children of a node of the given size, as residuals.
fn split_children(law: &dyn SplitLaw, size: u64, rng: &mut dyn RngCore) -> Result<Vec<u64>> {
    let lambda = law.sample_split(size, rng)?;
    let mut parts = lambda.finite_parts();
    if let Semantics::InternalVertices { arity } = law.semantics() {
        if size > 0 {
            parts.resize(arity, 0);
        }
    }
    Ok(parts)
}

fn is_leaf_size(sem: Semantics, size: u64) -> Option<bool> {
    match sem {
        Semantics::Vertices => Some(size == 1),
        Semantics::InternalVertices { .. } => Some(size == 0),
        Semantics::Leaves => None,
    }
}

/// Expand every task down to depth `limit`; nodes at depth `limit` keep
/// their residual. Returns the residual of each node at depth `limit`.
fn expand(
    b: &mut Builder,
    law: Option<&dyn SplitLaw>,
    free: Option<&OffspringLaw>,
    mut stack: Vec<Task>,
    limit: usize,
    rng: &mut dyn RngCore,
    cut: &mut Vec<(NodeId, Residual)>,
) -> Result<()> {
    while let Some(task) = stack.pop() {
        if b.depth[task.node] >= limit {
            cut.push((task.node, task.what));
            continue;
        }
        match task.what {
            Residual::Sized(size) => {
                let law = law.ok_or_else(|| Error::Domain("sized graft without a split law".into()))?;
                let sem = law.semantics();
                if is_leaf_size(sem, size) == Some(true) {
                    continue;
                }
                let parts = split_children(law, size, rng)?;
                let unary = sem == Semantics::Leaves && parts.len() == 1;
                let run = if unary { task.unary_run + 1 } else { 0 };
                if run > UNARY_RUN_CAP {
                    return Err(Error::Capacity(format!(
                        "{}: more than {UNARY_RUN_CAP} consecutive unary splits at size {size}",
                        law.name()
                    )));
                }
                for s in parts {
                    let c = b.child(task.node);
                    stack.push(Task { node: c, what: Residual::Sized(s), unary_run: run });
                }
            }
            Residual::Free => {
                let xi = free.ok_or_else(|| Error::Domain("free graft without an offspring law".into()))?;
                let k = xi.sample(rng);
                for _ in 0..k {
                    let c = b.child(task.node);
                    stack.push(Task { node: c, what: Residual::Free, unary_run: 0 });
                }
            }
            Residual::Backbone => unreachable!("backbone nodes are expanded separately"),
        }
    }
    Ok(())
}

fn check_semantics(law: &dyn SplitLaw, want: &[Semantics]) -> Result<()> {
    let sem = law.semantics();
    let ok = want.iter().any(|w| {
        matches!((w, sem), (Semantics::InternalVertices { .. }, Semantics::InternalVertices { .. })) || *w == sem
    });
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{} has {} semantics", law.name(), sem.tag())))
    }
}

fn sample_truncated(law: &dyn SplitLaw, n: u64, limit: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    law.check_size(n)?;
    let mut b = Builder::default();
    let root = b.root();
    let mut cut = Vec::new();
    let task = Task { node: root, what: Residual::Sized(n), unary_run: 0 };
    expand(&mut b, Some(law), None, vec![task], limit, rng, &mut cut)?;
    Ok(b.finish())
}

/// `MB^q_n`: `n` vertices.
pub fn sample_mb_vertices(law: &dyn SplitLaw, n: u64, rng: &mut dyn RngCore) -> Result<Tree> {
    check_semantics(law, &[Semantics::Vertices])?;
    sample_truncated(law, n, usize::MAX, rng)
}

/// `MB^{L,q}_n`: `n` leaves. A split equal to `(n)` is a unary step, so
/// the geometric branch of parameter `1 - q_n(n)` arises on its own.
pub fn sample_mb_leaves(law: &dyn SplitLaw, n: u64, rng: &mut dyn RngCore) -> Result<Tree> {
    check_semantics(law, &[Semantics::Leaves])?;
    check_unary(law, n)?;
    sample_truncated(law, n, usize::MAX, rng)
}

fn check_unary(law: &dyn SplitLaw, n: u64) -> Result<()> {
    if law.pmf(n, &Partition::from_finite(vec![n]))? >= 1.0 {
        return Err(Error::Domain(format!("{}: q_{n}(({n})) = 1, the tree never branches", law.name())));
    }
    Ok(())
}

/// `k`-ary tree with `n` internal vertices.
pub fn sample_mb_internal(law: &dyn SplitLaw, n: u64, rng: &mut dyn RngCore) -> Result<Tree> {
    check_semantics(law, &[Semantics::InternalVertices { arity: 0 }])?;
    sample_truncated(law, n, usize::MAX, rng)
}

/// Dispatches on the law's semantics.
pub fn sample_mb(law: &dyn SplitLaw, n: u64, rng: &mut dyn RngCore) -> Result<Tree> {
    match law.semantics() {
        Semantics::Vertices => sample_mb_vertices(law, n, rng),
        Semantics::Leaves => sample_mb_leaves(law, n, rng),
        Semantics::InternalVertices { .. } => sample_mb_internal(law, n, rng),
    }
}

/// `T_n|_R`, expanding splits only down to depth `R`.
pub fn sample_mb_ball(law: &dyn SplitLaw, n: u64, r: usize, rng: &mut dyn RngCore) -> Result<Tree> {
    if law.semantics() == Semantics::Leaves {
        check_unary(law, n)?;
    }
    sample_truncated(law, n, r, rng)
}

/// Decide whether a node cut at the frontier is a leaf of the full tree by
/// drawing its first generation only.
fn resolve_leaf(
    law: &dyn SplitLaw,
    what: Residual,
    rng: &mut dyn RngCore,
) -> Result<bool> {
    Ok(match what {
        Residual::Backbone => false,
        Residual::Sized(size) => match is_leaf_size(law.semantics(), size) {
            Some(l) => l,
            None => law.sample_split(size, rng)?.is_empty(),
        },
        Residual::Free => {
            let xi = law.free_offspring().ok_or_else(|| Error::Domain("free graft without offspring law".into()))?;
            xi.sample(rng) == 0
        }
    })
}

pub(crate) fn finish_ball(
    law: &dyn SplitLaw,
    b: Builder,
    backbone: Vec<bool>,
    cut: Vec<(NodeId, Residual)>,
    radius: usize,
    rng: &mut dyn RngCore,
) -> Result<InfiniteTreeBall> {
    let n = b.parent.len();
    let mut has_child = vec![false; n];
    for p in b.parent.iter().flatten() {
        has_child[*p] = true;
    }
    let mut residual = vec![None; n];
    let mut is_leaf: Vec<bool> = (0..n).map(|u| !has_child[u]).collect();
    let mut frontier = vec![false; n];
    let mut cut = cut;
    cut.sort_unstable_by_key(|c| c.0);
    for (u, what) in cut {
        residual[u] = Some(what);
        is_leaf[u] = resolve_leaf(law, what, rng)?;
        frontier[u] = !is_leaf[u];
    }
    Ok(InfiniteTreeBall { tree: b.finish(), radius, backbone, frontier, residual, is_leaf })
}

/// `MB^{q,q_∞}_∞|_R`: the backbone is a GW tree with offspring `m_∞(Λ)`;
/// finite blocks carry independent truncated `MB_λ` trees.
pub fn sample_infinite_ball(law: &dyn SplitLaw, r: usize, rng: &mut dyn RngCore) -> Result<InfiniteTreeBall> {
    let mut b = Builder::default();
    let root = b.root();
    let mut backbone = vec![true];
    let mut spine = vec![root];
    let mut grafts: Vec<Task> = Vec::new();
    let mut cut = Vec::new();
    let mut count = 1usize;
    while let Some(u) = spine.pop() {
        if b.depth[u] >= r {
            cut.push((u, Residual::Backbone));
            continue;
        }
        let split = law.sample_q_inf(rng)?;
        for _ in 0..split.m_inf {
            let c = b.child(u);
            backbone.push(true);
            spine.push(c);
            count += 1;
            if count > BACKBONE_CAP {
                return Err(Error::Capacity(format!("backbone exceeds {BACKBONE_CAP} nodes")));
            }
        }
        for g in split.grafts {
            let c = b.child(u);
            backbone.push(false);
            let what = match g {
                Graft::Sized(s) => Residual::Sized(s),
                Graft::Free => Residual::Free,
            };
            grafts.push(Task { node: c, what, unary_run: 0 });
        }
    }
    expand(&mut b, Some(law), law.free_offspring(), grafts, r, rng, &mut cut)?;
    backbone.resize(b.parent.len(), false);
    finish_ball(law, b, backbone, cut, r, rng)
}

/// `V(R) = μ(T|_R)` for `R = 0..=r_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeCurve {
    pub measure: Measure,
    /// `values[R]`.
    pub values: Vec<u64>,
}

impl VolumeCurve {
    pub fn r_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn radii(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.r_max()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Cumulative counts from per-depth counts.
    pub fn from_level_counts(measure: Measure, levels: &[u64]) -> VolumeCurve {
        let mut acc = 0u64;
        let values = levels
            .iter()
            .map(|&x| {
                acc = acc.saturating_add(x);
                acc
            })
            .collect();
        VolumeCurve { measure, values }
    }
}

pub fn volume_curve(ball: &InfiniteTreeBall, measure: Measure, r_max: usize) -> Result<VolumeCurve> {
    if r_max > ball.radius {
        return Err(Error::Domain(format!("ball radius {} is below requested {r_max}", ball.radius)));
    }
    let depths = ball.tree.depths();
    let mut levels = vec![0u64; r_max + 1];
    for (u, &d) in depths.iter().enumerate() {
        if d <= r_max && (measure == Measure::Vertices || ball.is_leaf[u]) {
            levels[d] += 1;
        }
    }
    Ok(VolumeCurve::from_level_counts(measure, &levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split_laws::{AlphaGammaLaw, BinaryLaw, BinaryModel, GwLaw, KaryLaw};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn poisson_law() -> GwLaw {
        GwLaw::vertices(OffspringLaw::poisson(1.0).unwrap(), 0).unwrap()
    }

    #[test]
    fn small_vertex_trees() {
        let law = poisson_law();
        let mut g = rng(1);
        assert_eq!(sample_mb_vertices(&law, 1, &mut g).unwrap().len(), 1);
        assert!(sample_mb_vertices(&law, 2, &mut g).unwrap().isomorphic(&Tree::branch(1)));
        let mut cherries = 0;
        let draws = 30_000;
        for _ in 0..draws {
            let t = sample_mb_vertices(&law, 3, &mut g).unwrap();
            assert_eq!(t.len(), 3);
            if t.isomorphic(&Tree::cherry()) {
                cherries += 1;
            }
        }
        let f = cherries as f64 / draws as f64;
        let se = (1.0 / 3.0 * 2.0 / 3.0 / draws as f64).sqrt();
        assert!((f - 1.0 / 3.0).abs() < 4.0 * se, "{f}");
    }

    #[test]
    fn exact_sizes() {
        let mut g = rng(2);
        let law = poisson_law();
        for _ in 0..2000 {
            assert_eq!(sample_mb_vertices(&law, 40, &mut g).unwrap().len(), 40);
        }
        let leaf_law = AlphaGammaLaw::new(0.6, 0.3).unwrap();
        for _ in 0..2000 {
            assert_eq!(sample_mb_leaves(&leaf_law, 30, &mut g).unwrap().n_leaves(), 30);
        }
        let k = KaryLaw::new(3).unwrap();
        for _ in 0..500 {
            let t = sample_mb_internal(&k, 20, &mut g).unwrap();
            assert_eq!(t.len(), 3 * 20 + 1);
            assert_eq!(t.n_leaves(), 2 * 20 + 1);
        }
        assert!(sample_mb_vertices(&leaf_law, 3, &mut g).is_err());
    }

    #[test]
    fn unary_branch_is_geometric() {
        // ξ(1) = 1/2 gives q_1((1)) = 1/2
        let xi = OffspringLaw::from_pmf("lazy", vec![0.25, 0.5, 0.25]).unwrap();
        let law = GwLaw::leaves(xi, 20).unwrap();
        let mut g = rng(3);
        let draws = 40_000;
        let mut hist = [0usize; 4];
        for _ in 0..draws {
            let t = sample_mb_leaves(&law, 1, &mut g).unwrap();
            assert_eq!(t.n_leaves(), 1);
            hist[t.height().min(3)] += 1;
        }
        for (k, &c) in hist.iter().take(3).enumerate() {
            let p = 0.5f64.powi(k as i32 + 1);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((c as f64 / draws as f64 - p).abs() < 4.0 * se, "k={k}");
        }
        let comb = BinaryLaw::new(BinaryModel::Ford { alpha: 1.0 }).unwrap();
        assert!(sample_mb_leaves(&comb, 5, &mut g).unwrap().isomorphic(&comb_tree(5)));
    }

    fn comb_tree(n: usize) -> Tree {
        let mut t = Tree::single();
        for _ in 1..n {
            t = Tree::concatenate(&[t, Tree::single()]);
        }
        t
    }

    #[test]
    fn truncated_matches_full_then_ball() {
        let law = poisson_law();
        let (n, r, draws) = (8, 2, 20_000);
        let mut g = rng(4);
        let mut a: BTreeMap<String, f64> = BTreeMap::new();
        let mut bb: BTreeMap<String, f64> = BTreeMap::new();
        for _ in 0..draws {
            let full = sample_mb_vertices(&law, n, &mut g).unwrap().ball(r);
            *a.entry(full.canonical_code().to_string()).or_default() += 1.0 / draws as f64;
            let t = sample_mb_ball(&law, n, r, &mut g).unwrap();
            *bb.entry(t.canonical_code().to_string()).or_default() += 1.0 / draws as f64;
        }
        let keys: std::collections::BTreeSet<_> = a.keys().chain(bb.keys()).collect();
        let tv: f64 = keys
            .into_iter()
            .map(|k| (a.get(k).unwrap_or(&0.0) - bb.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.03, "{tv}");
    }

    #[test]
    fn infinite_ball_basics() {
        let law = poisson_law();
        let mut g = rng(5);
        let b0 = sample_infinite_ball(&law, 0, &mut g).unwrap();
        assert_eq!(b0.tree.len(), 1);
        assert!(b0.backbone[0] && b0.frontier[0]);
        for _ in 0..200 {
            let b = sample_infinite_ball(&law, 6, &mut g).unwrap();
            assert_eq!(b.backbone_len(), 7);
            let depths = b.depths();
            for u in 0..b.tree.len() {
                if b.frontier[u] {
                    assert_eq!(depths[u], 6);
                    assert!(b.tree.children(u).is_empty());
                }
                if b.backbone[u] {
                    if let Some(p) = b.tree.parent(u) {
                        assert!(b.backbone[p]);
                    }
                }
            }
            let v = volume_curve(&b, Measure::Vertices, 6).unwrap();
            assert!(v.is_monotone());
            assert_eq!(v.values[0], 1);
            assert_eq!(v.values[6] as usize, b.tree.len());
            let l = volume_curve(&b, Measure::Leaves, 6).unwrap();
            assert_eq!(l.values[0], 0);
            let r3 = b.restrict(3);
            assert_eq!(r3.backbone_len(), 4);
            assert_eq!(volume_curve(&r3, Measure::Leaves, 3).unwrap().values, l.values[..4].to_vec());
        }
    }

    #[test]
    fn comb_volume() {
        let law = BinaryLaw::new(BinaryModel::Ford { alpha: 1.0 }).unwrap();
        let mut g = rng(6);
        let b = sample_infinite_ball(&law, 10, &mut g).unwrap();
        let v = volume_curve(&b, Measure::Vertices, 10).unwrap();
        for r in 0..=10 {
            assert_eq!(v.values[r], 2 * r as u64 + 1);
        }
        let l = volume_curve(&b, Measure::Leaves, 10).unwrap();
        assert_eq!(l.values[10], 10);
    }

    #[test]
    fn two_spines_for_complete_binary_limit() {
        let law = BinaryLaw::new(BinaryModel::BetaSplitting { beta: 0.0 }).unwrap();
        let mut g = rng(7);
        let b = sample_infinite_ball(&law, 4, &mut g).unwrap();
        assert_eq!(b.tree.len(), 31);
        assert_eq!(b.backbone_len(), 31);
    }

    #[test]
    fn kesten_root_degree() {
        let law = poisson_law();
        let mut g = rng(8);
        let draws = 40_000;
        let mut one = 0;
        for _ in 0..draws {
            let b = sample_infinite_ball(&law, 1, &mut g).unwrap();
            if b.tree.children(0).len() == 1 {
                one += 1;
            }
        }
        let p = (-1.0f64).exp();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((one as f64 / draws as f64 - p).abs() < 4.0 * se);
    }
}

//! Pointed weighted finite metric spaces and Gromov-Hausdorff-Prokhorov
//! distances.
//!
//! For a fixed correspondence `C` the best coupling only depends on the
//! largest mass `F` a sub-coupling supported on `C` can carry (a max-flow
//! value): with total coupled mass `m`, the discrepancy is
//! `μ_X(X) + μ_Y(Y) - 2m` and the escaping mass is `m - min(m, F)`.

use std::collections::VecDeque;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::mb_engine::Measure;
use crate::tree::Tree;

/// Largest `|X|·|Y|` handled by [`d_ghp_exact`].
pub const EXACT_CAP: usize = 30;
const METRIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PointedMetricSpace {
    n: usize,
    dist: Vec<f64>,
    root: usize,
    mass: Vec<f64>,
}

impl PointedMetricSpace {
    /// Validates the metric axioms up to `1e-12`.
    pub fn new(dist: Vec<Vec<f64>>, root: usize, mass: Vec<f64>) -> Result<PointedMetricSpace> {
        let n = dist.len();
        if n == 0 || root >= n || mass.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::Domain("distance matrix, root and masses do not match".into()));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Domain("masses must be finite and non-negative".into()));
        }
        for i in 0..n {
            if dist[i][i].abs() > METRIC_TOL {
                return Err(Error::Domain(format!("d({i},{i}) = {}", dist[i][i])));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !(d.is_finite() && d >= 0.0) || (d - dist[j][i]).abs() > METRIC_TOL {
                    return Err(Error::Domain(format!("d({i},{j}) is not symmetric and non-negative")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::Domain(format!("distinct points {i},{j} at distance 0")));
                }
                for k in 0..n {
                    if d > dist[i][k] + dist[k][j] + METRIC_TOL {
                        return Err(Error::Domain(format!("triangle inequality fails at ({i},{k},{j})")));
                    }
                }
            }
        }
        Ok(PointedMetricSpace { n, dist: dist.concat(), root, mass })
    }

    fn from_parts(n: usize, dist: Vec<f64>, root: usize, mass: Vec<f64>) -> PointedMetricSpace {
        PointedMetricSpace { n, dist, root, mass }
    }

    /// One point carrying mass `m`.
    pub fn point(m: f64) -> PointedMetricSpace {
        PointedMetricSpace::from_parts(1, vec![0.0], 0, vec![m])
    }

    /// Vertices of `t` with edges of length `a` and mass `b` on every vertex
    /// or on every leaf.
    pub fn from_tree(t: &Tree, a: f64, b: f64, measure: Measure) -> PointedMetricSpace {
        let n = t.len();
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = t.parent(v) {
                adj[v].push(p);
                adj[p].push(v);
            }
        }
        let mut dist = vec![0.0; n * n];
        let mut hop = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            hop.iter_mut().for_each(|h| *h = usize::MAX);
            hop[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if hop[v] == usize::MAX {
                        hop[v] = hop[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for v in 0..n {
                dist[s * n + v] = a * hop[v] as f64;
            }
        }
        let mass = (0..n)
            .map(|u| match measure {
                Measure::Vertices => b,
                Measure::Leaves if t.is_leaf(u) => b,
                Measure::Leaves => 0.0,
            })
            .collect();
        PointedMetricSpace::from_parts(n, dist, t.root(), mass)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `|x| = d(ρ, x)`.
    pub fn norm(&self, x: usize) -> f64 {
        self.d(self.root, x)
    }

    /// `|X|`, the largest distance to the root.
    pub fn height(&self) -> f64 {
        (0..self.n).map(|x| self.norm(x)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// `(aX, bμ)`.
    pub fn rescale(&self, a: f64, b: f64) -> PointedMetricSpace {
        PointedMetricSpace::from_parts(
            self.n,
            self.dist.iter().map(|d| a * d).collect(),
            self.root,
            self.mass.iter().map(|m| b * m).collect(),
        )
    }

    /// `X|_r`: points with `|x| ≤ r` and the restricted mass.
    pub fn truncate(&self, r: f64) -> PointedMetricSpace {
        let keep: Vec<usize> = (0..self.n).filter(|&x| self.norm(x) <= r).collect();
        self.subspace(&keep)
    }

    fn subspace(&self, keep: &[usize]) -> PointedMetricSpace {
        let m = keep.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in keep {
            for &j in keep {
                dist.push(self.d(i, j));
            }
        }
        let root = keep.iter().position(|&x| x == self.root).expect("root kept");
        PointedMetricSpace::from_parts(m, dist, root, keep.iter().map(|&x| self.mass[x]).collect())
    }
}

/// `⟨X_1, …, X_k⟩`: the spaces glued at their roots.
pub fn concatenate_spaces(parts: &[PointedMetricSpace]) -> PointedMetricSpace {
    if parts.is_empty() {
        return PointedMetricSpace::point(0.0);
    }
    // new index of each point; roots share index 0
    let mut owner = vec![(0usize, 0usize)];
    let mut root_mass = 0.0;
    for (i, x) in parts.iter().enumerate() {
        root_mass += x.mass[x.root];
        for p in (0..x.n).filter(|&p| p != x.root) {
            owner.push((i, p));
        }
    }
    let n = owner.len();
    let mut dist = vec![0.0; n * n];
    for a in 1..n {
        let (i, p) = owner[a];
        let x = &parts[i];
        dist[a] = x.norm(p);
        dist[a * n] = x.norm(p);
        for b in 1..n {
            let (j, q) = owner[b];
            dist[a * n + b] = if i == j { x.d(p, q) } else { x.norm(p) + parts[j].norm(q) };
        }
    }
    let mut mass = vec![root_mass];
    mass.extend(owner[1..].iter().map(|&(i, p)| parts[i].mass[p]));
    PointedMetricSpace::from_parts(n, dist, 0, mass)
}

/// `dis C`; `C` must contain the root pair and cover both spaces.
pub fn distortion(c: &[(usize, usize)], x: &PointedMetricSpace, y: &PointedMetricSpace) -> Result<f64> {
    check_correspondence(c, x, y)?;
    Ok(distortion_unchecked(c, x, y))
}

fn distortion_unchecked(c: &[(usize, usize)], x: &PointedMetricSpace, y: &PointedMetricSpace) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &(a, b)) in c.iter().enumerate() {
        for &(a2, b2) in &c[i + 1..] {
            worst = worst.max((x.d(a, a2) - y.d(b, b2)).abs());
        }
    }
    worst
}

fn check_correspondence(c: &[(usize, usize)], x: &PointedMetricSpace, y: &PointedMetricSpace) -> Result<()> {
    if !c.contains(&(x.root, y.root)) {
        return Err(Error::Domain("correspondence misses the root pair".into()));
    }
    let mut cx = vec![false; x.n];
    let mut cy = vec![false; y.n];
    for &(a, b) in c {
        if a >= x.n || b >= y.n {
            return Err(Error::InvalidNode(a.max(b)));
        }
        cx[a] = true;
        cy[b] = true;
    }
    if cx.contains(&false) || cy.contains(&false) {
        return Err(Error::Domain("correspondence does not cover both spaces".into()));
    }
    Ok(())
}

/// `D(π; μ_X, μ_Y)`, with `π` an `|X| × |Y|` matrix.
pub fn discrepancy(pi: &[Vec<f64>], mu_x: &[f64], mu_y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, m) in mu_x.iter().enumerate() {
        total += (m - pi.get(i).map_or(0.0, |row| row.iter().sum::<f64>())).abs();
    }
    for (j, m) in mu_y.iter().enumerate() {
        total += (m - pi.iter().map(|row| row.get(j).copied().unwrap_or(0.0)).sum::<f64>()).abs();
    }
    total
}

/// `π(C^c)`.
pub fn escaping_mass(pi: &[Vec<f64>], c: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for (i, row) in pi.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if !c.contains(&(i, j)) {
                total += p;
            }
        }
    }
    total
}

/// Max flow from `μ_X` to `μ_Y` along the pairs of `C` (Edmonds-Karp).
fn max_flow(c: &[(usize, usize)], mx: &[f64], my: &[f64]) -> f64 {
    let (nx, ny) = (mx.len(), my.len());
    let n = nx + ny + 2;
    let (s, t) = (n - 2, n - 1);
    let mut cap = vec![0.0; n * n];
    for (i, &m) in mx.iter().enumerate() {
        cap[s * n + i] = m;
    }
    for (j, &m) in my.iter().enumerate() {
        cap[(nx + j) * n + t] = m;
    }
    for &(a, b) in c {
        cap[a * n + nx + b] = f64::INFINITY;
    }
    let mut flow = 0.0;
    let mut prev = vec![usize::MAX; n];
    loop {
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u * n + v] > 1e-15 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v] * n + v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u * n + v] -= push;
            cap[v * n + u] += push;
            v = u;
        }
        flow += push;
    }
}

/// `min_π D(π) ∨ π(C^c)` given the flow value `F` of `C`.
fn inner_from_flow(f: f64, mx: f64, my: f64) -> f64 {
    let s = mx + my;
    let top = mx.min(my);
    let f = f.min(top);
    let m = ((s + f) / 3.0).clamp(f, top);
    (s - 2.0 * m).max(m - f).max(0.0)
}

/// Inner value for a fixed correspondence.
pub fn coupling_value(c: &[(usize, usize)], x: &PointedMetricSpace, y: &PointedMetricSpace) -> f64 {
    inner_from_flow(max_flow(c, &x.mass, &y.mass), x.total_mass(), y.total_mass())
}

/// `(½||X| - |Y||) ∨ |μ_X(X) - μ_Y(Y)|`.
pub fn ghp_lower_bound(x: &PointedMetricSpace, y: &PointedMetricSpace) -> f64 {
    (0.5 * (x.height() - y.height()).abs()).max((x.total_mass() - y.total_mass()).abs())
}

/// Exact `d_GHP` for `|X|·|Y| ≤ 30`: scan distortion thresholds and, at each,
/// the maximal correspondences (maximal cliques of the compatibility graph
/// on pairs) that cover both spaces.
pub fn d_ghp_exact(x: &PointedMetricSpace, y: &PointedMetricSpace) -> Result<f64> {
    if x.n * y.n > EXACT_CAP {
        return Err(Error::Capacity(format!(
            "exact GHP needs |X||Y| <= {EXACT_CAP}, got {}; use d_ghp_upper",
            x.n * y.n
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..x.n).flat_map(|a| (0..y.n).map(move |b| (a, b))).collect();
    let gap = |p: (usize, usize), q: (usize, usize)| 0.5 * (x.d(p.0, q.0) - y.d(p.1, q.1)).abs();
    let mut thresholds: Vec<f64> = Vec::new();
    for (i, &p) in pairs.iter().enumerate() {
        for &q in &pairs[i..] {
            thresholds.push(gap(p, q));
        }
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let root_pair = (x.root, y.root);
    let mut best = f64::INFINITY;
    for &t in &thresholds {
        if t >= best {
            break;
        }
        let nodes: Vec<(usize, usize)> =
            pairs.iter().copied().filter(|&p| p != root_pair && gap(p, root_pair) <= t).collect();
        let k = nodes.len();
        let mut adj = vec![0u32; k];
        for i in 0..k {
            for j in 0..k {
                if i != j && gap(nodes[i], nodes[j]) <= t {
                    adj[i] |= 1 << j;
                }
            }
        }
        let mut cliques = Vec::new();
        let all = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        bron_kerbosch(0, all, 0, &adj, &mut cliques);
        for clique in cliques {
            let mut c = vec![root_pair];
            c.extend((0..k).filter(|&i| clique & (1 << i) != 0).map(|i| nodes[i]));
            if check_correspondence(&c, x, y).is_err() {
                continue;
            }
            best = best.min(t.max(coupling_value(&c, x, y)));
        }
    }
    Ok(best)
}

fn bron_kerbosch(r: u32, mut p: u32, mut x: u32, adj: &[u32], out: &mut Vec<u32>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    let pivot = (p | x).trailing_zeros() as usize;
    let mut cand = p & !adj[pivot];
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        let bit = 1u32 << v;
        bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, out);
        p &= !bit;
        x |= bit;
        cand &= !bit;
    }
}

/// A certified bracket around `d_GHP`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhpInterval {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

/// Exact below the size cap; otherwise the better of the product
/// correspondence and a height-ordered quantile correspondence.
pub fn d_ghp_upper(x: &PointedMetricSpace, y: &PointedMetricSpace) -> GhpInterval {
    let lower = ghp_lower_bound(x, y);
    if x.n * y.n <= EXACT_CAP {
        let d = d_ghp_exact(x, y).expect("within cap");
        return GhpInterval { lower: d, upper: d, exact: true };
    }
    let mass_gap = (x.total_mass() - y.total_mass()).abs();
    let product = (0.5 * x.diameter().max(y.diameter())).max(mass_gap);
    let c = quantile_correspondence(x, y);
    let level = (0.5 * distortion_unchecked(&c, x, y)).max(mass_gap);
    let upper = product.min(level).max(lower);
    GhpInterval { lower, upper, exact: upper <= lower }
}

/// Points sorted by height on both sides, paired where their cumulative
/// mass (or rank, for massless points) intervals overlap. The pairs carry a
/// coupling of mass `min(μ_X(X), μ_Y(Y))`.
fn quantile_correspondence(x: &PointedMetricSpace, y: &PointedMetricSpace) -> Vec<(usize, usize)> {
    let order = |s: &PointedMetricSpace| {
        let mut o: Vec<usize> = (0..s.n).collect();
        o.sort_by(|&a, &b| s.norm(a).total_cmp(&s.norm(b)).then(a.cmp(&b)));
        o
    };
    let intervals = |s: &PointedMetricSpace, o: &[usize]| -> Vec<(f64, f64)> {
        let total = s.total_mass();
        let n = o.len() as f64;
        let mut acc = 0.0;
        o.iter()
            .enumerate()
            .map(|(i, &p)| {
                if total > 0.0 && s.mass[p] > 0.0 {
                    let lo = acc;
                    acc += s.mass[p] / total;
                    (lo, acc)
                } else {
                    let at = if total > 0.0 { acc } else { i as f64 / n };
                    (at, at)
                }
            })
            .collect()
    };
    let (ox, oy) = (order(x), order(y));
    let (ix, iy) = (intervals(x, &ox), intervals(y, &oy));
    let mut c = vec![(x.root, y.root)];
    let (mut i, mut j) = (0, 0);
    while i < ox.len() && j < oy.len() {
        c.push((ox[i], oy[j]));
        let (ex, ey) = (ix[i].1, iy[j].1);
        let tie = (ex - ey).abs() <= 1e-12;
        if i + 1 == ox.len() {
            j += 1;
        } else if j + 1 == oy.len() {
            i += 1;
        } else if tie {
            i += 1;
            j += 1;
        } else if ex < ey {
            i += 1;
        } else {
            j += 1;
        }
    }
    c.sort_unstable();
    c.dedup();
    c
}

/// `D_GHP(X, Y) = ∫₀^∞ e^{-r} [1 ∧ d_GHP(X|_r, Y|_r)] dr`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedGhp {
    pub value: f64,
    /// Mass of the integral left out past `r_max`.
    pub tail_bound: f64,
    /// Every truncated distance was computed exactly.
    pub exact: bool,
}

/// The truncations only change at point heights, so the integrand is a
/// step function and the integral is summed piece by piece up to `r_max`.
pub fn d_ghp_extended(x: &PointedMetricSpace, y: &PointedMetricSpace, r_max: f64) -> ExtendedGhp {
    let mut cuts: Vec<f64> = (0..x.n).map(|p| x.norm(p)).chain((0..y.n).map(|q| y.norm(q))).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.retain(|&c| c < r_max);
    let mut value = 0.0;
    let mut exact = true;
    let top = x.height().max(y.height());
    for (i, &lo) in cuts.iter().enumerate() {
        let hi = cuts.get(i + 1).copied().unwrap_or(if top < r_max { f64::INFINITY } else { r_max });
        let g = d_ghp_upper(&x.truncate(lo), &y.truncate(lo));
        exact &= g.exact;
        value += ((-lo).exp() - (-hi).exp()) * g.upper.min(1.0);
    }
    let tail_bound = if top < r_max { 0.0 } else { (-r_max).exp() };
    ExtendedGhp { value, tail_bound, exact }
}

/// Random space on `m` points: shortest paths of random edge lengths,
/// masses uniform on `[0, 1)`, root at `0`.
pub fn random_space(m: usize, rng: &mut dyn RngCore) -> PointedMetricSpace {
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let w = 0.25 + 2.0 * rng.random::<f64>();
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mass = (0..m).map(|_| rng.random::<f64>()).collect();
    PointedMetricSpace::new(d, 0, mass).expect("shortest paths form a metric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point(d: f64, root_mass: f64, other: f64) -> PointedMetricSpace {
        PointedMetricSpace::new(vec![vec![0.0, d], vec![d, 0.0]], 0, vec![root_mass, other]).unwrap()
    }

    /// Brute force over every correspondence and a grid of couplings.
    fn brute_force(x: &PointedMetricSpace, y: &PointedMetricSpace) -> f64 {
        let pairs: Vec<(usize, usize)> = (0..x.n).flat_map(|a| (0..y.n).map(move |b| (a, b))).collect();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << pairs.len()) {
            let c: Vec<(usize, usize)> =
                (0..pairs.len()).filter(|&i| mask & (1 << i) != 0).map(|i| pairs[i]).collect();
            if check_correspondence(&c, x, y).is_err() {
                continue;
            }
            let dis = distortion_unchecked(&c, x, y);
            // every coupling: LP vertex enumeration is overkill; scan a fine grid of m
            let f = max_flow(&c, &x.mass, &y.mass);
            let (mx, my) = (x.total_mass(), y.total_mass());
            let mut inner = f64::INFINITY;
            let steps = 20_000;
            for s in 0..=steps {
                let m = mx.min(my) * s as f64 / steps as f64;
                inner = inner.min((mx + my - 2.0 * m).max(m - m.min(f)));
            }
            best = best.min((0.5 * dis).max(inner));
        }
        best
    }

    #[test]
    fn examples() {
        let p = PointedMetricSpace::point(0.7);
        assert!(d_ghp_exact(&p, &p).unwrap() < 1e-15);
        assert!((d_ghp_exact(&PointedMetricSpace::point(0.3), &p).unwrap() - 0.4).abs() < 1e-12);
        let a = two_point(1.0, 0.0, 1.0);
        let b = two_point(2.0, 0.0, 1.0);
        assert!((d_ghp_exact(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        let c = PointedMetricSpace::from_tree(&Tree::cherry(), 1.5, 1.0, Measure::Vertices);
        assert_eq!(c.len(), 3);
        assert_eq!(c.d(1, 2), 3.0);
        assert_eq!(PointedMetricSpace::from_tree(&Tree::cherry(), 1.0, 0.0, Measure::Vertices).total_mass(), 0.0);
    }

    #[test]
    fn distortion_and_discrepancy() {
        let a = two_point(1.0, 0.0, 1.0);
        let b = two_point(3.0, 0.0, 1.0);
        assert_eq!(distortion(&[(0, 0), (1, 1)], &a, &b).unwrap(), 2.0);
        assert_eq!(distortion(&[(0, 0), (1, 1)], &a, &a).unwrap(), 0.0);
        assert!(distortion(&[(0, 0)], &a, &b).is_err());
        let full = [(0, 0), (0, 1), (1, 0), (1, 1)];
        assert!(distortion(&full, &a, &b).unwrap() <= 2.0 * a.height().max(b.height()));
        let zero = vec![vec![0.0; 2]; 2];
        assert_eq!(discrepancy(&zero, a.mass(), b.mass()), 2.0);
        let exact = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(discrepancy(&exact, a.mass(), b.mass()), 0.0);
        assert_eq!(escaping_mass(&exact, &[(0, 0)]), 1.0);
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut g = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let (m1, m2) = (g.random_range(1..=3), g.random_range(1..=3));
            let x = random_space(m1, &mut g);
            let y = random_space(m2, &mut g);
            let e = d_ghp_exact(&x, &y).unwrap();
            let b = brute_force(&x, &y);
            assert!((e - b).abs() < 1e-4, "{e} vs {b}");
            assert!(e + 1e-12 >= ghp_lower_bound(&x, &y));
        }
    }

    #[test]
    fn upper_bound_dominates_and_lower_bound_holds() {
        let mut g = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let x = random_space(6, &mut g);
            let y = random_space(7, &mut g);
            let u = d_ghp_upper(&x, &y);
            assert!(!u.exact || u.upper == u.lower);
            assert!(u.upper >= u.lower);
        }
        let t = PointedMetricSpace::from_tree(&Tree::branch(8), 1.0, 1.0, Measure::Vertices);
        let same = d_ghp_upper(&t, &t);
        assert_eq!(same.upper, 0.0);
    }

    #[test]
    fn concatenation_and_truncation() {
        let a = two_point(1.0, 0.2, 1.0);
        assert_eq!(concatenate_spaces(std::slice::from_ref(&a)), a);
        let b = two_point(2.5, 0.1, 0.5);
        let c = concatenate_spaces(&[a.clone(), b.clone()]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.height(), 2.5);
        assert!((c.d(1, 2) - 3.5).abs() < 1e-15);
        assert!((c.total_mass() - 1.8).abs() < 1e-15);
        assert_eq!(c.truncate(1.0).len(), 2);
        assert_eq!(a.rescale(1.0, 1.0), a);
    }

    #[test]
    fn extended_distance() {
        let p = PointedMetricSpace::point(0.5);
        let q = PointedMetricSpace::point(0.8);
        let e = d_ghp_extended(&p, &q, 5.0);
        assert!((e.value - 0.3).abs() < 1e-12);
        assert!(e.exact);
        assert_eq!(d_ghp_extended(&p, &p, 5.0).value, 0.0);
        let mut g = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let x = random_space(3, &mut g);
            let y = random_space(4, &mut g);
            let full = d_ghp_extended(&x, &y, f64::INFINITY).value;
            for r in [0.3, 0.8, 1.5] {
                let cut = d_ghp_extended(&x.truncate(r), &y.truncate(r), f64::INFINITY).value;
                assert!((full - cut).abs() <= (-r).exp() + 1e-12);
            }
        }
    }
}

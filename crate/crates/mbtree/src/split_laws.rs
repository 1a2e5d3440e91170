//! First-split laws `q_n`, their local limits `q_∞`, and exact samplers.
//!
//! `pmf(n, λ)` is indexed by the size `n` of the tree in the law's own
//! semantics: `λ ∈ P_{n-1}` for vertex counts, `λ ∈ P_n` for leaf counts and
//! a `k`-tuple summing to `n - 1` for internal-vertex counts (zero slots are
//! implicit in the [`Partition`]).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore};

use crate::dist::{
    borel_pmf, borel_sample, convolve, dirichlet_sample, gw_size_pmf, multinomial_sample,
    size_pmf_by_recursion, BetaGeometric, LawKind, NegDirichletMultinomial, OffspringLaw,
    SizeKind, SizePmfTable,
};
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::partition::{partitions_bounded, partitions_of, Partition};
use crate::special::{ln_binom, ln_factorial, ln_gamma, LN_TABLE_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    Vertices,
    Leaves,
    /// `k`-ary trees sized by internal vertices; leaves are the size-0 slots.
    InternalVertices { arity: usize },
}

impl Semantics {
    pub fn tag(&self) -> &'static str {
        match self {
            Semantics::Vertices => "vertices",
            Semantics::Leaves => "leaves",
            Semantics::InternalVertices { .. } => "internal-vertices",
        }
    }

    pub fn min_size(&self) -> u64 {
        match self {
            Semantics::InternalVertices { .. } => 0,
            _ => 1,
        }
    }

    /// Total size of the root's subtrees for a tree of size `n`.
    pub fn children_total(&self, n: u64) -> u64 {
        match self {
            Semantics::Leaves => n,
            _ => n.saturating_sub(1),
        }
    }
}

/// A finite block of an infinite split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Graft {
    /// An independent `MB_n` tree of the given size.
    Sized(u64),
    /// An unconditioned Galton-Watson tree with the law's offspring law.
    Free,
}

/// A draw from `q_∞`: `m_inf` infinite blocks plus finite grafts.
#[derive(Clone, Debug, PartialEq)]
pub struct InfiniteSplit {
    pub m_inf: usize,
    pub grafts: Vec<Graft>,
}

/// Self-similarity index and tail index of the spine-graft sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub gamma: f64,
    pub immigration_exponent: f64,
}

pub trait SplitLaw: Send + Sync {
    fn name(&self) -> String;
    fn semantics(&self) -> Semantics;
    /// Largest size the pmf and sampler support.
    fn max_size(&self) -> u64;
    /// `q_n(λ)`; zero outside the support.
    fn pmf(&self, n: u64, lambda: &Partition) -> Result<f64>;
    fn sample_split(&self, n: u64, rng: &mut dyn RngCore) -> Result<Partition>;

    /// Every partition the law may charge at size `n`.
    fn support(&self, n: u64) -> Result<Vec<Partition>> {
        self.check_size(n)?;
        let sem = self.semantics();
        if n == sem.min_size() && sem != Semantics::Leaves {
            return Ok(vec![Partition::empty()]);
        }
        Ok(match sem {
            Semantics::Vertices => partitions_of(n - 1),
            Semantics::Leaves => {
                let mut v = partitions_of(n);
                if n == 1 {
                    v.push(Partition::empty());
                }
                v
            }
            Semantics::InternalVertices { arity } => partitions_bounded(n - 1, n - 1, arity),
        })
    }

    /// `(λ, q_n(λ))` over the support.
    fn row(&self, n: u64) -> Result<Vec<(Partition, f64)>> {
        self.support(n)?
            .into_iter()
            .map(|l| {
                let p = self.pmf(n, &l)?;
                Ok((l, p))
            })
            .collect()
    }

    /// `q_∞` evaluated at `(∞,…,∞, λ)` with `m_inf` infinite parts.
    fn q_inf(&self, m_inf: usize, finite: &Partition) -> Result<f64>;

    /// `q_*(λ) = q_∞(∞, λ)`.
    fn qstar(&self, finite: &Partition) -> Result<f64> {
        self.q_inf(1, finite)
    }

    fn sample_q_inf(&self, rng: &mut dyn RngCore) -> Result<InfiniteSplit>;

    /// Offspring law used to expand [`Graft::Free`] blocks.
    fn free_offspring(&self) -> Option<&OffspringLaw> {
        None
    }

    fn scaling(&self) -> Option<Scaling> {
        None
    }

    fn check_size(&self, n: u64) -> Result<()> {
        let lo = self.semantics().min_size();
        if n < lo || n > self.max_size() {
            return Err(Error::UnsupportedSize(format!(
                "{}: size {n} outside [{lo}, {}]",
                self.name(),
                self.max_size()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for dyn SplitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SplitLaw({})", self.name())
    }
}

/// `Σ_λ q_n(λ)`.
pub fn normalization(law: &dyn SplitLaw, n: u64) -> Result<f64> {
    Ok(law.row(n)?.iter().map(|(_, p)| p).sum())
}

pub fn sample_split(law: &dyn SplitLaw, n: u64, rng: &mut dyn RngCore) -> Result<Partition> {
    law.sample_split(n, rng)
}

fn ln_mult_fact(parts: &[u64]) -> f64 {
    let mut sorted = parts.to_vec();
    sorted.sort_unstable();
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&x| x == sorted[i]).count();
        total += ln_factorial(j as u64);
        i += j;
    }
    total
}

fn finite_of(lambda: &Partition) -> Option<Vec<u64>> {
    lambda.is_finite().then(|| lambda.finite_parts())
}

fn unif(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}

// ---------------------------------------------------------------------------
// Galton-Watson

#[derive(Clone, Copy, Debug, PartialEq)]
enum Analytic {
    Poisson,
    Geometric,
}

/// First splits of a critical GW tree conditioned on its vertex or leaf count.
pub struct GwLaw {
    xi: OffspringLaw,
    leaves: bool,
    n_max: u64,
    analytic: Option<Analytic>,
    sizes: Option<SizePmfTable>,
    conv: Vec<OnceLock<Vec<f64>>>,
}

/// Sizes served in closed form when the offspring sums are classical laws.
const ANALYTIC_MAX: u64 = 1 << 50;

impl GwLaw {
    /// Vertex-count law. Poisson(1) and geometric(1/2) need no table and
    /// ignore `n_max`.
    pub fn vertices(xi: OffspringLaw, n_max: u64) -> Result<GwLaw> {
        GwLaw::build(xi, false, n_max)
    }

    /// Leaf-count law, built from the leaf size table.
    pub fn leaves(xi: OffspringLaw, n_max: u64) -> Result<GwLaw> {
        GwLaw::build(xi, true, n_max)
    }

    fn build(xi: OffspringLaw, leaves: bool, n_max: u64) -> Result<GwLaw> {
        if !xi.is_critical() {
            return Err(Error::Domain(format!("{} is not critical", xi.name())));
        }
        if leaves && xi.pmf(1) >= 1.0 {
            return Err(Error::Domain("ξ(1) = 1 gives no finite leaf count".into()));
        }
        let analytic = match xi.kind() {
            _ if leaves => None,
            LawKind::Poisson(m) if m == 1.0 => Some(Analytic::Poisson),
            LawKind::Geometric(p) if p == 0.5 => Some(Analytic::Geometric),
            _ => None,
        };
        let (sizes, n_max) = match analytic {
            Some(_) => (None, ANALYTIC_MAX),
            None if leaves => (Some(size_pmf_by_recursion(&xi, n_max, SizeKind::Leaves)?), n_max),
            None => (Some(gw_size_pmf(&xi, n_max)?), n_max),
        };
        let slots = if analytic.is_some() { 0 } else { n_max as usize + 2 };
        Ok(GwLaw { xi, leaves, n_max, analytic, sizes, conv: (0..slots).map(|_| OnceLock::new()).collect() })
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.xi
    }

    /// `P(#T = n)` or `P(#_L T = n)`.
    pub fn size_pmf(&self, n: u64) -> f64 {
        self.conv(1, n)
    }

    /// `P(#T₁ + … + #T_r = x)` for i.i.d. GW trees.
    pub fn conv(&self, r: u64, x: u64) -> f64 {
        if r == 0 {
            return if x == 0 { 1.0 } else { 0.0 };
        }
        if x < r {
            return 0.0;
        }
        match self.analytic {
            // Otter-Dwass: (r/x) P(ξ₁+…+ξ_x = x - r)
            Some(kind) => {
                let (xf, j) = (x as f64, x - r);
                let ln_walk = match kind {
                    Analytic::Poisson => -xf + j as f64 * xf.ln() - ln_factorial(j),
                    Analytic::Geometric => {
                        ln_binom(x + j - 1, j) - (x + j) as f64 * std::f64::consts::LN_2
                    }
                };
                ((r as f64).ln() - xf.ln() + ln_walk).exp()
            }
            None => {
                if x > self.n_max {
                    return 0.0;
                }
                self.conv_table(r as usize)[x as usize]
            }
        }
    }

    fn conv_table(&self, r: usize) -> &[f64] {
        let len = self.n_max as usize + 1;
        let base = self.conv[1].get_or_init(|| self.sizes.as_ref().expect("table law").probs().to_vec());
        if r == 1 {
            return base;
        }
        if let Some(done) = self.conv[r].get() {
            return done;
        }
        let mut start = (2..r).rev().find(|&i| self.conv[i].get().is_some()).unwrap_or(1);
        while start < r {
            let prev = if start == 1 { base } else { self.conv[start].get().expect("filled") };
            let _ = self.conv[start + 1].set(convolve(prev, base, len));
            start += 1;
        }
        self.conv[r].get().expect("filled")
    }

    fn check_finite_sizes(&self, parts: &[u64]) -> Result<()> {
        match parts.iter().find(|&&x| x > self.n_max) {
            Some(x) => Err(Error::UnsupportedSize(format!("{}: part {x} beyond table", self.name()))),
            None => Ok(()),
        }
    }

    /// Sizes of `r` i.i.d. trees conditioned on their sum being `x`.
    fn sample_forest(&self, mut r: u64, mut x: u64, rng: &mut dyn RngCore) -> Vec<u64> {
        let mut out = Vec::with_capacity(r as usize);
        while r > 1 {
            let denom = self.conv(r, x);
            let u = unif(rng) * denom;
            let mut acc = 0.0;
            let mut pick = 0;
            for s in 1..=x - (r - 1) {
                let w = self.size_pmf(s) * self.conv(r - 1, x - s);
                if w > 0.0 {
                    pick = s;
                }
                acc += w;
                if u < acc {
                    break;
                }
            }
            out.push(pick);
            x -= pick;
            r -= 1;
        }
        out.push(x);
        out
    }
}

impl SplitLaw for GwLaw {
    fn name(&self) -> String {
        let sem = if self.leaves { "gw-leaves" } else { "gw" };
        format!("{sem}[{}]", self.xi.name())
    }

    fn semantics(&self) -> Semantics {
        if self.leaves {
            Semantics::Leaves
        } else {
            Semantics::Vertices
        }
    }

    fn max_size(&self) -> u64 {
        self.n_max
    }

    /// Sizes the tree cannot take leave `q_n` undefined.
    fn check_size(&self, n: u64) -> Result<()> {
        let lo = self.semantics().min_size();
        if n < lo || n > self.n_max {
            return Err(Error::UnsupportedSize(format!("{}: size {n} outside [{lo}, {}]", self.name(), self.n_max)));
        }
        if self.size_pmf(n) == 0.0 {
            return Err(Error::UnsupportedSize(format!("{}: a tree of size {n} has probability 0", self.name())));
        }
        Ok(())
    }

    /// `p! ξ(p) / ∏ m_j(λ)! · ∏ P(#T = λ_i) / P(#T = n)`.
    fn pmf(&self, n: u64, lambda: &Partition) -> Result<f64> {
        self.check_size(n)?;
        let Some(parts) = finite_of(lambda) else { return Ok(0.0) };
        let m = self.semantics().children_total(n);
        let p = parts.len() as u64;
        if p > 0 && parts.iter().sum::<u64>() != m {
            return Ok(0.0);
        }
        if p == 0 {
            let base = if self.leaves { n == 1 } else { m == 0 };
            let z = self.size_pmf(n);
            return Ok(if base && z > 0.0 { self.xi.pmf(0) / z } else { 0.0 });
        }
        let mut ln = ln_factorial(p) + self.xi.pmf(p).ln() - ln_mult_fact(&parts) - self.size_pmf(n).ln();
        for &x in &parts {
            ln += self.size_pmf(x).ln();
        }
        Ok(if ln.is_nan() { 0.0 } else { ln.exp() })
    }

    fn sample_split(&self, n: u64, rng: &mut dyn RngCore) -> Result<Partition> {
        self.check_size(n)?;
        let m = self.semantics().children_total(n);
        let total = self.size_pmf(n);
        if total <= 0.0 {
            return Err(Error::UnsupportedSize(format!("{}: size {n} has probability 0", self.name())));
        }
        let u = unif(rng) * total;
        let base = if self.leaves { n == 1 } else { m == 0 };
        let mut acc = if base { self.xi.pmf(0) } else { 0.0 };
        if u < acc {
            return Ok(Partition::empty());
        }
        let mut chosen = 0;
        for p in 1..=m {
            let w = self.xi.pmf(p) * self.conv(p, m);
            if w > 0.0 {
                chosen = p;
            }
            acc += w;
            if u < acc {
                break;
            }
        }
        if chosen == 0 {
            return Ok(Partition::empty());
        }
        Ok(Partition::from_finite(self.sample_forest(chosen, m, rng)))
    }

    /// `ξ̂(p) (p-1)! / ∏ m_j(λ)! · ∏ P(#T = λ_i)`, `p = 1 + p(λ)`.
    fn q_inf(&self, m_inf: usize, finite: &Partition) -> Result<f64> {
        let parts = finite.finite_parts();
        if m_inf != 1 {
            return Ok(0.0);
        }
        self.check_finite_sizes(&parts)?;
        let p = parts.len() as u64 + 1;
        let mut ln = (p as f64 * self.xi.pmf(p)).ln() + ln_factorial(p - 1) - ln_mult_fact(&parts);
        for &x in &parts {
            ln += self.size_pmf(x).ln();
        }
        Ok(if ln.is_nan() { 0.0 } else { ln.exp() })
    }

    /// `X + 1 ~ ξ̂`: one spine child and `X` unconditioned trees.
    fn sample_q_inf(&self, rng: &mut dyn RngCore) -> Result<InfiniteSplit> {
        let hat = self.xi.size_biased()?;
        let p = hat.sample(rng).max(1);
        Ok(InfiniteSplit { m_inf: 1, grafts: vec![Graft::Free; p as usize - 1] })
    }

    fn free_offspring(&self) -> Option<&OffspringLaw> {
        Some(&self.xi)
    }

    fn scaling(&self) -> Option<Scaling> {
        match self.xi.kind() {
            LawKind::Stable(beta) if beta < 2.0 => {
                Some(Scaling { gamma: 1.0 - 1.0 / beta, immigration_exponent: 1.0 / beta })
            }
            _ if self.xi.variance().is_finite() => Some(Scaling { gamma: 0.5, immigration_exponent: 0.5 }),
            _ => None,
        }
    }
}

/// `q_{n-1}(λ)` for a GW tree with `n` vertices.
pub fn gw_split_pmf(xi: &OffspringLaw, n: u64, lambda: &Partition) -> Result<f64> {
    GwLaw::vertices(xi.clone(), n.max(1))?.pmf(n, lambda)
}

/// Kesten's limit `q_∞(∞, λ)`.
pub fn kesten_qstar_pmf(xi: &OffspringLaw, lambda: &Partition) -> Result<f64> {
    let top = lambda.finite_parts().first().copied().unwrap_or(1);
    GwLaw::vertices(xi.clone(), top.max(1))?.qstar(lambda)
}

// ---------------------------------------------------------------------------
// Binary leaf laws

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinaryModel {
    CayleyCut,
    RecursiveCut,
    Ford { alpha: f64 },
    BetaSplitting { beta: f64 },
}

/// Leaf-count laws supported on `(n-k, k)`, `1 ≤ k ≤ n/2`.
#[derive(Clone, Debug)]
pub struct BinaryLaw {
    model: BinaryModel,
    spine_graft: Option<BetaGeometric>,
    /// `ln Γ(i + s)` for the model's shift `s`, filled on first use.
    shifted: OnceLock<Vec<f64>>,
}

const BINARY_MAX: u64 = 1 << 50;

impl BinaryLaw {
    pub fn new(model: BinaryModel) -> Result<BinaryLaw> {
        let spine_graft = match model {
            BinaryModel::Ford { alpha } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Domain(format!("ford alpha must be in [0,1], got {alpha}")));
                }
                (alpha > 0.0).then(|| BetaGeometric::new(alpha)).transpose()?
            }
            BinaryModel::BetaSplitting { beta } => {
                if !(beta > -2.0 && beta.is_finite()) {
                    return Err(Error::Domain(format!("beta must exceed -2, got {beta}")));
                }
                (beta < -1.0).then(|| BetaGeometric::new(-1.0 - beta)).transpose()?
            }
            _ => None,
        };
        Ok(BinaryLaw { model, spine_graft, shifted: OnceLock::new() })
    }

    pub fn cayley_cut() -> BinaryLaw {
        BinaryLaw { model: BinaryModel::CayleyCut, spine_graft: None, shifted: OnceLock::new() }
    }

    pub fn recursive_cut() -> BinaryLaw {
        BinaryLaw { model: BinaryModel::RecursiveCut, spine_graft: None, shifted: OnceLock::new() }
    }

    pub fn model(&self) -> BinaryModel {
        self.model
    }

    fn shift(&self) -> f64 {
        match self.model {
            BinaryModel::Ford { alpha } => -alpha,
            BinaryModel::BetaSplitting { beta } => 1.0 + beta,
            _ => 0.0,
        }
    }

    /// `ln Γ(i + s)`.
    fn lg(&self, i: u64) -> f64 {
        let s = self.shift();
        if (i as usize) < LN_TABLE_LEN {
            self.shifted.get_or_init(|| (0..LN_TABLE_LEN).map(|j| ln_gamma(j as f64 + s)).collect())[i as usize]
        } else {
            ln_gamma(i as f64 + s)
        }
    }

    fn ln_beta_weight(beta: f64, n: u64, k: u64) -> f64 {
        ln_gamma((n - k) as f64 + 1.0 + beta) - ln_factorial(n - k) + ln_gamma(k as f64 + 1.0 + beta)
            - ln_factorial(k)
    }

    fn ln_beta_weight_cached(&self, n: u64, k: u64) -> f64 {
        self.lg(n - k) - ln_factorial(n - k) + self.lg(k) - ln_factorial(k)
    }

    fn ln_norm_beta(&self, n: u64) -> f64 {
        let terms: Vec<f64> = (1..n).map(|k| self.ln_beta_weight_cached(n, k)).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    /// `ln Z_n = ln Σ_{k=1}^{n-1} Γ(n-k+1+β)/(n-k)! · Γ(k+1+β)/k!`.
    pub fn ln_beta_norm(beta: f64, n: u64) -> f64 {
        let terms: Vec<f64> = (1..n).map(|k| BinaryLaw::ln_beta_weight(beta, n, k)).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    /// `q_n(n-k, k)` given `ln Z_n` for β-splitting (ignored otherwise).
    fn prob_with(&self, n: u64, k: u64, ln_z: f64) -> f64 {
        if n < 2 || k == 0 || 2 * k > n {
            return 0.0;
        }
        let (nf, kf) = (n as f64, k as f64);
        match self.model {
            BinaryModel::CayleyCut => {
                let j = n - k;
                let ln = (j as f64 - 1.0) * (j as f64).ln() - ln_factorial(j) + (kf - 1.0) * kf.ln()
                    - ln_factorial(k)
                    + ln_factorial(n - 2)
                    - (nf - 3.0) * nf.ln();
                if 2 * k == n {
                    0.5 * ln.exp()
                } else {
                    ln.exp()
                }
            }
            BinaryModel::RecursiveCut => {
                if 2 * k == n {
                    4.0 / ((nf - 1.0) * (nf + 2.0))
                } else {
                    let j = nf - kf;
                    nf / (nf - 1.0) * (1.0 / (kf * (kf + 1.0)) + 1.0 / (j * (j + 1.0)))
                }
            }
            BinaryModel::Ford { alpha } => {
                if alpha == 1.0 {
                    return if k == 1 { 1.0 } else { 0.0 };
                }
                let sym = if 2 * k == n { 1.0 } else { 2.0 };
                let ln = ln_binom(n, k) + self.lg(n - k) + self.lg(k) - self.lg(1) - self.lg(n);
                let bracket = alpha / 2.0 + (1.0 - 2.0 * alpha) * (nf - kf) * kf / (nf * (nf - 1.0));
                sym * ln.exp() * bracket
            }
            BinaryModel::BetaSplitting { .. } => {
                let sym = if 2 * k == n { 1.0 } else { 2.0 };
                sym * (self.ln_beta_weight_cached(n, k) - ln_z).exp()
            }
        }
    }

    fn ln_norm(&self, n: u64) -> f64 {
        match self.model {
            BinaryModel::BetaSplitting { .. } if n >= 2 => self.ln_norm_beta(n),
            _ => 0.0,
        }
    }

    /// `q_n(n-k, k)`.
    pub fn prob(&self, n: u64, k: u64) -> f64 {
        self.prob_with(n, k, self.ln_norm(n))
    }

    /// `q_n(n-k, k)` for `k = 1..=n/2`, index `k-1`.
    pub fn binary_row(&self, n: u64) -> Vec<f64> {
        let ln_z = self.ln_norm(n);
        (1..=n / 2).map(|k| self.prob_with(n, k, ln_z)).collect()
    }

    /// `q_∞(∞, k)`; `None` when the limit is the complete binary tree.
    pub fn qstar_k(&self, k: u64) -> Option<f64> {
        if k == 0 {
            return Some(0.0);
        }
        match self.model {
            BinaryModel::CayleyCut => Some(borel_pmf(k)),
            BinaryModel::RecursiveCut => Some(1.0 / (k as f64 * (k as f64 + 1.0))),
            _ => self.spine_graft.as_ref().map(|bg| bg.pmf(k - 1)),
        }
    }
}

impl SplitLaw for BinaryLaw {
    fn name(&self) -> String {
        match self.model {
            BinaryModel::CayleyCut => "cayley-cut".into(),
            BinaryModel::RecursiveCut => "recursive-cut".into(),
            BinaryModel::Ford { alpha } => format!("ford[alpha={alpha}]"),
            BinaryModel::BetaSplitting { beta } => format!("beta-splitting[beta={beta}]"),
        }
    }

    fn semantics(&self) -> Semantics {
        Semantics::Leaves
    }

    fn max_size(&self) -> u64 {
        BINARY_MAX
    }

    fn pmf(&self, n: u64, lambda: &Partition) -> Result<f64> {
        self.check_size(n)?;
        let Some(parts) = finite_of(lambda) else { return Ok(0.0) };
        match parts.as_slice() {
            [] => Ok(if n == 1 { 1.0 } else { 0.0 }),
            [a, b] if a + b == n => Ok(self.prob(n, *b)),
            _ => Ok(0.0),
        }
    }

    fn support(&self, n: u64) -> Result<Vec<Partition>> {
        self.check_size(n)?;
        if n == 1 {
            return Ok(vec![Partition::empty()]);
        }
        Ok((1..=n / 2).map(|k| Partition::from_finite(vec![n - k, k])).collect())
    }

    fn row(&self, n: u64) -> Result<Vec<(Partition, f64)>> {
        if n == 1 {
            return Ok(vec![(Partition::empty(), 1.0)]);
        }
        let probs = self.binary_row(n);
        Ok(self.support(n)?.into_iter().zip(probs).collect())
    }

    fn sample_split(&self, n: u64, rng: &mut dyn RngCore) -> Result<Partition> {
        self.check_size(n)?;
        if n == 1 {
            return Ok(Partition::empty());
        }
        let ln_z = self.ln_norm(n);
        let u = unif(rng);
        let mut acc = 0.0;
        let mut pick = 1;
        for k in 1..=n / 2 {
            let p = self.prob_with(n, k, ln_z);
            if p > 0.0 {
                pick = k;
            }
            acc += p;
            if u < acc {
                break;
            }
        }
        Ok(Partition::from_finite(vec![n - pick, pick]))
    }

    fn q_inf(&self, m_inf: usize, finite: &Partition) -> Result<f64> {
        let parts = finite.finite_parts();
        let complete = self.qstar_k(1).is_none();
        Ok(match (m_inf, parts.as_slice()) {
            (2, []) => f64::from(u8::from(complete)),
            (1, [k]) => self.qstar_k(*k).unwrap_or(0.0),
            _ => 0.0,
        })
    }

    fn sample_q_inf(&self, rng: &mut dyn RngCore) -> Result<InfiniteSplit> {
        let k = match self.model {
            BinaryModel::CayleyCut => borel_sample(rng),
            BinaryModel::RecursiveCut => {
                // ⌊1/U⌋ has mass 1/(k(k+1))
                let u = 1.0 - unif(rng);
                let x = u.recip().floor();
                if x >= BINARY_MAX as f64 {
                    BINARY_MAX
                } else {
                    x as u64
                }
            }
            _ => match &self.spine_graft {
                Some(bg) => bg.sample(rng) + 1,
                None => return Ok(InfiniteSplit { m_inf: 2, grafts: Vec::new() }),
            },
        };
        Ok(InfiniteSplit { m_inf: 1, grafts: vec![Graft::Sized(k)] })
    }

    fn scaling(&self) -> Option<Scaling> {
        let g = match self.model {
            BinaryModel::CayleyCut => 0.5,
            BinaryModel::RecursiveCut => return None,
            BinaryModel::Ford { alpha } if alpha > 0.0 => alpha,
            BinaryModel::BetaSplitting { beta } if beta < -1.0 => -1.0 - beta,
            _ => return None,
        };
        Some(Scaling { gamma: g, immigration_exponent: g })
    }
}

pub fn cayley_cut_split_pmf(n: u64, k: u64) -> f64 {
    BinaryLaw::cayley_cut().prob(n, k)
}

pub fn recursive_cut_split_pmf(n: u64, k: u64) -> f64 {
    BinaryLaw::recursive_cut().prob(n, k)
}

pub fn ford_split_pmf(alpha: f64, n: u64, k: u64) -> Result<f64> {
    Ok(BinaryLaw::new(BinaryModel::Ford { alpha })?.prob(n, k))
}

pub fn beta_splitting_pmf(beta: f64, n: u64, k: u64) -> Result<f64> {
    Ok(BinaryLaw::new(BinaryModel::BetaSplitting { beta })?.prob(n, k))
}

/// `(-1-β) Γ(k+1+β) / (Γ(2+β) k!)` for `β ∈ (-2, -1)`.
pub fn beta_splitting_qstar(beta: f64, k: u64) -> Result<f64> {
    if !(beta > -2.0 && beta < -1.0) {
        return Err(Error::Domain(format!("beta-splitting has a single spine only for beta in (-2,-1), got {beta}")));
    }
    Ok(BinaryLaw::new(BinaryModel::BetaSplitting { beta })?.qstar_k(k).unwrap_or(0.0))
}

// ---------------------------------------------------------------------------
// α-γ

/// Leaf-count first splits of the α-γ growth model, `0 < γ ≤ α ≤ 1`.
#[derive(Clone, Debug)]
pub struct AlphaGammaLaw {
    alpha: f64,
    gamma: f64,
    x_law: BetaGeometric,
    y_law: BetaGeometric,
}

const AG_MAX: u64 = 1 << 32;

impl AlphaGammaLaw {
    pub fn new(alpha: f64, gamma: f64) -> Result<AlphaGammaLaw> {
        if !(gamma > 0.0 && gamma <= alpha && alpha <= 1.0) {
            return Err(Error::Domain(format!("need 0 < gamma <= alpha <= 1, got alpha={alpha}, gamma={gamma}")));
        }
        Ok(AlphaGammaLaw {
            alpha,
            gamma,
            x_law: BetaGeometric::new((gamma / alpha).min(1.0))?,
            y_law: BetaGeometric::new(alpha)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn ford(&self) -> bool {
        (self.alpha - self.gamma).abs() <= 1e-14 * self.alpha
    }

    fn prob(&self, n: u64, parts: &[u64]) -> f64 {
        if n == 1 {
            return if parts.is_empty() { 1.0 } else { 0.0 };
        }
        let p = parts.len();
        if p < 2 {
            return 0.0;
        }
        let (a, g, nf) = (self.alpha, self.gamma, n as f64);
        // Γ(p-1-γ/α)/Γ(1-γ/α), with Γ(0)/Γ(0) = 1 when γ = α
        let ln_ratio = if self.ford() {
            if p != 2 {
                return 0.0;
            }
            0.0
        } else {
            let t = g / a;
            ln_gamma(p as f64 - 1.0 - t) - ln_gamma(1.0 - t)
        };
        let big = parts.iter().filter(|&&x| x >= 2).count();
        let mut ln = -ln_mult_fact(parts) + ln_factorial(n) - ln_gamma(nf - a) + (p as f64 - 2.0) * a.ln() + ln_ratio;
        for &x in parts.iter().filter(|&&x| x >= 2) {
            ln += ln_gamma(x as f64 - a) - ln_factorial(x);
        }
        let sq: f64 = parts.iter().map(|&x| (x * x) as f64).sum();
        let bracket = g + (1.0 - a - g) * (nf * nf - sq) / (nf * (nf - 1.0));
        // Γ(1-α) appears once up front and once per block of size ≥ 2
        let weight = match big {
            // λ = 1^n: the bracket is exactly 1-α and (1-α)Γ(1-α) = Γ(2-α)
            0 => (ln + ln_gamma(2.0 - a)).exp(),
            1 => (ln).exp() * bracket,
            _ if a == 1.0 => 0.0,
            _ => (ln - (big as f64 - 1.0) * ln_gamma(1.0 - a)).exp() * bracket,
        };
        weight.max(0.0)
    }

    /// `q_∞(∞, λ) = P(X = p-1) · p!/∏ m_j(λ)! · ∏ P(Y = λ_i - 1)`.
    fn qstar_parts(&self, parts: &[u64]) -> f64 {
        let p = parts.len() as u64;
        if p == 0 {
            return 0.0;
        }
        let mut ln = self.x_law.pmf(p - 1).ln() + ln_factorial(p) - ln_mult_fact(parts);
        for &x in parts {
            ln += self.y_law.pmf(x - 1).ln();
        }
        if ln.is_nan() {
            0.0
        } else {
            ln.exp()
        }
    }
}

impl SplitLaw for AlphaGammaLaw {
    fn name(&self) -> String {
        format!("alpha-gamma[alpha={},gamma={}]", self.alpha, self.gamma)
    }

    fn semantics(&self) -> Semantics {
        Semantics::Leaves
    }

    fn max_size(&self) -> u64 {
        AG_MAX
    }

    fn pmf(&self, n: u64, lambda: &Partition) -> Result<f64> {
        self.check_size(n)?;
        let Some(parts) = finite_of(lambda) else { return Ok(0.0) };
        if n > 1 && parts.iter().sum::<u64>() != n {
            return Ok(0.0);
        }
        Ok(self.prob(n, &parts))
    }

    /// Root-block dynamics of the growth algorithm from `T_2`.
    fn sample_split(&self, n: u64, rng: &mut dyn RngCore) -> Result<Partition> {
        self.check_size(n)?;
        if n == 1 {
            return Ok(Partition::empty());
        }
        let (a, g) = (self.alpha, self.gamma);
        let mut blocks: Vec<u64> = vec![1, 1];
        let mut fen = Fenwick::new(n as usize);
        fen.add(0, 1.0 - a);
        fen.add(1, 1.0 - a);
        for _ in 2..n {
            let p = blocks.len() as f64;
            let join = fen.total().max(0.0);
            let fresh = ((p - 1.0) * a - g).max(0.0);
            let u = unif(rng) * (join + fresh + g);
            if u < join {
                let i = fen.find(u);
                blocks[i] += 1;
                fen.add(i, 1.0);
            } else if u < join + fresh {
                fen.add(blocks.len(), 1.0 - a);
                blocks.push(1);
            } else {
                let old: u64 = blocks.iter().sum();
                blocks.clear();
                blocks.extend([old, 1]);
                fen.clear();
                fen.add(0, old as f64 - a);
                fen.add(1, 1.0 - a);
            }
        }
        Ok(Partition::from_finite(blocks))
    }

    fn q_inf(&self, m_inf: usize, finite: &Partition) -> Result<f64> {
        if m_inf != 1 {
            return Ok(0.0);
        }
        Ok(self.qstar_parts(&finite.finite_parts()))
    }

    fn sample_q_inf(&self, rng: &mut dyn RngCore) -> Result<InfiniteSplit> {
        let p = self.x_law.sample(rng) + 1;
        let grafts = (0..p).map(|_| Graft::Sized(self.y_law.sample(rng) + 1)).collect();
        Ok(InfiniteSplit { m_inf: 1, grafts })
    }

    fn scaling(&self) -> Option<Scaling> {
        (self.alpha < 1.0).then_some(Scaling { gamma: self.gamma, immigration_exponent: self.gamma })
    }
}

pub fn alpha_gamma_split_pmf(alpha: f64, gamma: f64, n: u64, lambda: &Partition) -> Result<f64> {
    AlphaGammaLaw::new(alpha, gamma)?.pmf(n, lambda)
}

pub fn alpha_gamma_qstar_pmf(alpha: f64, gamma: f64, lambda: &Partition) -> Result<f64> {
    AlphaGammaLaw::new(alpha, gamma)?.qstar(lambda)
}

// ---------------------------------------------------------------------------
// k-ary growing trees

/// Internal-vertex first splits of `k`-ary growing trees.
#[derive(Clone, Debug)]
pub struct KaryLaw {
    k: usize,
    ndm: NegDirichletMultinomial,
}

const KARY_MAX: u64 = 1 << 50;

impl KaryLaw {
    pub fn new(k: usize) -> Result<KaryLaw> {
        Ok(KaryLaw { k, ndm: NegDirichletMultinomial::new(k)? })
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    fn padded(&self, parts: &[u64], len: usize) -> Option<Vec<u64>> {
        if parts.len() > len {
            return None;
        }
        let mut v = parts.to_vec();
        v.resize(len, 0);
        Some(v)
    }

    /// `q°_N(λ)` for a `k`-tuple with sum `N`:
    /// `(k-1)!/∏_{j≥0} m_j! · (1/k) Γ(1/k)(N+1)!/Γ(N+1+1/k)
    ///  · ∏ Γ(λ_i+1/k)/(Γ(1/k) λ_i!) · Σ_i 1/(N+1-λ_i)`.
    fn prob_tuple(&self, tuple: &[u64]) -> f64 {
        let a = 1.0 / self.k as f64;
        let big_n: u64 = tuple.iter().sum();
        let mut ln = ln_factorial(self.k as u64 - 1) - ln_mult_fact(tuple) - (self.k as f64).ln() + ln_gamma(a)
            + ln_factorial(big_n + 1)
            - ln_gamma(big_n as f64 + 1.0 + a);
        for &x in tuple {
            ln += ln_gamma(x as f64 + a) - ln_gamma(a) - ln_factorial(x);
        }
        let s: f64 = tuple.iter().map(|&x| 1.0 / (big_n + 1 - x) as f64).sum();
        ln.exp() * s
    }
}

impl SplitLaw for KaryLaw {
    fn name(&self) -> String {
        format!("kary[k={}]", self.k)
    }

    fn semantics(&self) -> Semantics {
        Semantics::InternalVertices { arity: self.k }
    }

    fn max_size(&self) -> u64 {
        KARY_MAX
    }

    fn pmf(&self, n: u64, lambda: &Partition) -> Result<f64> {
        self.check_size(n)?;
        let Some(parts) = finite_of(lambda) else { return Ok(0.0) };
        if n == 0 {
            return Ok(if parts.is_empty() { 1.0 } else { 0.0 });
        }
        if parts.iter().sum::<u64>() != n - 1 {
            return Ok(0.0);
        }
        Ok(self.padded(&parts, self.k).map_or(0.0, |t| self.prob_tuple(&t)))
    }

    /// The last insertion on the planted edge happens at a time with an
    /// explicit law; after it the slots follow a Pólya urn, i.e. a
    /// Dirichlet-multinomial increment.
    fn sample_split(&self, n: u64, rng: &mut dyn RngCore) -> Result<Partition> {
        self.check_size(n)?;
        if n <= 1 {
            return Ok(Partition::empty());
        }
        let a = 1.0 / self.k as f64;
        let nf = n as f64;
        // P(no planted-edge insertion in steps m..n-1) = Γ(n)Γ(m+a)/(Γ(m)Γ(n+a))
        let g = |m: u64| {
            let m = m as f64;
            (ln_gamma(nf) + ln_gamma(m + a) - ln_gamma(m) - ln_gamma(nf + a)).exp()
        };
        let u = unif(rng);
        let (mut lo, mut hi) = (0u64, n - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if g(mid + 1) >= u {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let j = lo;
        let mut params = vec![a; self.k];
        params[0] += j as f64;
        let w = dirichlet_sample(&params, rng);
        let mut counts = multinomial_sample(n - 1 - j, &w, rng);
        counts[0] += j;
        Ok(Partition::from_finite(counts))
    }

    /// `q°_∞(∞, λ) = (k-1)!/∏_{j≥0} m_j! · P(X = λ)` with `X` negative
    /// Dirichlet multinomial.
    fn q_inf(&self, m_inf: usize, finite: &Partition) -> Result<f64> {
        if m_inf != 1 {
            return Ok(0.0);
        }
        let Some(t) = self.padded(&finite.finite_parts(), self.k - 1) else { return Ok(0.0) };
        let sym = (ln_factorial(self.k as u64 - 1) - ln_mult_fact(&t)).exp();
        Ok(sym * self.ndm.pmf(&t)?)
    }

    fn sample_q_inf(&self, rng: &mut dyn RngCore) -> Result<InfiniteSplit> {
        let counts = self.ndm.sample(rng);
        Ok(InfiniteSplit { m_inf: 1, grafts: counts.into_iter().map(Graft::Sized).collect() })
    }

    fn scaling(&self) -> Option<Scaling> {
        let g = 1.0 / self.k as f64;
        Some(Scaling { gamma: g, immigration_exponent: g })
    }
}

pub fn kary_split_pmf(k: usize, n: u64, lambda: &Partition) -> Result<f64> {
    if lambda.len() > k {
        return Err(Error::Domain(format!("{}-ary split has at most {k} non-zero slots, got {lambda}", k)));
    }
    KaryLaw::new(k)?.pmf(n, lambda)
}

pub fn kary_qstar(k: usize, lambda: &Partition) -> Result<f64> {
    if lambda.len() > k.saturating_sub(1) {
        return Err(Error::Domain(format!("{}-ary limit split has {} finite slots, got {lambda}", k, k.saturating_sub(1))));
    }
    KaryLaw::new(k)?.qstar(lambda)
}

// ---------------------------------------------------------------------------
// Registry

/// Model parameters as `key=value` strings.
pub type Params = BTreeMap<String, String>;

fn param_f64(params: &Params, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("parameter {key}={v:?}: {e}"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing parameter {key}"))),
    }
}

fn param_u64(params: &Params, key: &str, default: u64) -> Result<u64> {
    match params.get(key) {
        Some(v) => v.trim().parse::<u64>().map_err(|e| Error::Parse(format!("parameter {key}={v:?}: {e}"))),
        None => Ok(default),
    }
}

/// Split-law model names accepted by [`law_by_name`].
pub const MODEL_NAMES: &[&str] = &[
    "gw-poisson",
    "gw-geometric",
    "gw-binary",
    "gw-stable",
    "kesten-poisson",
    "kesten-geometric",
    "kesten-binary",
    "kesten-stable",
    "cayley-cut",
    "recursive-cut",
    "alpha-gamma",
    "remy",
    "marchal",
    "ford",
    "beta-splitting",
    "kary",
];

/// Builds a law from a model name and its parameters.
///
/// GW models take `leaves=1` for leaf counts and `n_max` for table-backed
/// offspring laws; `gw-stable` takes `beta`.
pub fn law_by_name(name: &str, params: &Params) -> Result<Arc<dyn SplitLaw>> {
    let gw = |xi: OffspringLaw| -> Result<Arc<dyn SplitLaw>> {
        let leaves = param_u64(params, "leaves", 0)? != 0;
        let n_max = param_u64(params, "n_max", if leaves { 400 } else { 2000 })?;
        Ok(Arc::new(if leaves { GwLaw::leaves(xi, n_max)? } else { GwLaw::vertices(xi, n_max)? }))
    };
    match name {
        "gw-poisson" | "kesten-poisson" => gw(OffspringLaw::poisson(1.0)?),
        "gw-geometric" | "kesten-geometric" => gw(OffspringLaw::geometric(0.5)?),
        "gw-binary" | "kesten-binary" => gw(OffspringLaw::binary()),
        "gw-stable" | "kesten-stable" => gw(OffspringLaw::stable(param_f64(params, "beta", Some(1.5))?)?),
        "cayley-cut" => Ok(Arc::new(BinaryLaw::cayley_cut())),
        "recursive-cut" => Ok(Arc::new(BinaryLaw::recursive_cut())),
        "ford" => Ok(Arc::new(BinaryLaw::new(BinaryModel::Ford { alpha: param_f64(params, "alpha", None)? })?)),
        "beta-splitting" => {
            Ok(Arc::new(BinaryLaw::new(BinaryModel::BetaSplitting { beta: param_f64(params, "beta", None)? })?))
        }
        "alpha-gamma" => Ok(Arc::new(AlphaGammaLaw::new(
            param_f64(params, "alpha", None)?,
            param_f64(params, "gamma", None)?,
        )?)),
        "remy" => Ok(Arc::new(AlphaGammaLaw::new(0.5, 0.5)?)),
        "marchal" => {
            let beta = param_f64(params, "beta", None)?;
            if !(beta > 1.0 && beta <= 2.0) {
                return Err(Error::Domain(format!("marchal needs beta in (1,2], got {beta}")));
            }
            Ok(Arc::new(AlphaGammaLaw::new(1.0 / beta, 1.0 - 1.0 / beta)?))
        }
        "kary" => {
            let k = param_u64(params, "k", 2)?;
            Ok(Arc::new(KaryLaw::new(k as usize)?))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

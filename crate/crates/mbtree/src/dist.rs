//! Offspring laws, beta-geometric and Borel laws, negative Dirichlet
//! multinomial, and Galton-Watson size tables.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_gamma};

/// Most tail draws [`OffspringLaw::sample_sum`] makes one by one.
pub const SUM_TAIL_CAP: u64 = 50_000_000;

/// Cap on the dense table of heavy-tailed laws.
pub const HEAVY_TABLE_CAP: usize = 1 << 16;

const LIGHT_TAIL_CUTOFF: f64 = 1e-32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LawKind {
    Poisson(f64),
    /// `ξ(k) = p (1-p)^k`.
    Geometric(f64),
    /// Generating function `s + (1-s)^β / β`.
    Stable(f64),
    Custom,
}

/// A law on ℤ₊ stored as a dense table plus a certified tail.
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    name: String,
    kind: LawKind,
    biased: bool,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    /// `sfx[k] = Σ_{j≥k} ξ(j)`, certified tail included.
    sfx: Vec<f64>,
    tail_mass: f64,
    tail_exponent: Option<f64>,
    tail_const: Option<f64>,
    mean: f64,
    variance: f64,
}

impl OffspringLaw {
    fn build(
        name: String,
        kind: LawKind,
        biased: bool,
        pmf: Vec<f64>,
        tail_mass: f64,
        tail: Option<(f64, f64)>,
        mean: f64,
        variance: f64,
    ) -> OffspringLaw {
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        let mut sfx = vec![tail_mass; pmf.len() + 1];
        for k in (0..pmf.len()).rev() {
            sfx[k] = sfx[k + 1] + pmf[k];
        }
        OffspringLaw {
            name,
            kind,
            biased,
            pmf,
            cdf,
            sfx,
            tail_mass,
            tail_exponent: tail.map(|t| t.0),
            tail_const: tail.map(|t| t.1),
            mean,
            variance,
        }
    }

    pub fn poisson(mean: f64) -> Result<OffspringLaw> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::Domain(format!("poisson mean must be positive, got {mean}")));
        }
        let mut pmf = Vec::new();
        let mut k = 0u64;
        loop {
            let p = (-mean + k as f64 * mean.ln() - ln_factorial(k)).exp();
            if (k as f64) > mean + 1.0 && p < LIGHT_TAIL_CUTOFF {
                break;
            }
            pmf.push(p);
            k += 1;
        }
        let kk = pmf.len() as f64;
        let next = (-mean + kk * mean.ln() - ln_factorial(k)).exp();
        let tail = next / (1.0 - mean / (kk + 1.0));
        Ok(OffspringLaw::build(
            format!("poisson({mean})"),
            LawKind::Poisson(mean),
            false,
            pmf,
            tail,
            None,
            mean,
            mean,
        ))
    }

    /// `ξ(k) = p (1-p)^k`; critical for `p = 1/2`.
    pub fn geometric(p: f64) -> Result<OffspringLaw> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("geometric parameter must be in (0,1], got {p}")));
        }
        let q = 1.0 - p;
        let mut pmf = vec![p];
        while q > 0.0 && q.powi(pmf.len() as i32) >= LIGHT_TAIL_CUTOFF {
            pmf.push(p * q.powi(pmf.len() as i32));
        }
        let tail = q.powi(pmf.len() as i32);
        Ok(OffspringLaw::build(
            format!("geometric({p})"),
            LawKind::Geometric(p),
            false,
            pmf,
            tail,
            None,
            q / p,
            q / (p * p),
        ))
    }

    /// `ξ(0) = ξ(2) = 1/2`.
    pub fn binary() -> OffspringLaw {
        OffspringLaw::from_pmf("binary", vec![0.5, 0.0, 0.5]).expect("valid pmf")
    }

    /// Offspring law with generating function `s + β^{-1}(1-s)^β`, `β ∈ (1,2]`.
    pub fn stable(beta: f64) -> Result<OffspringLaw> {
        if !(beta > 1.0 && beta <= 2.0) {
            return Err(Error::Domain(format!("stable index must be in (1,2], got {beta}")));
        }
        if beta == 2.0 {
            let mut law = OffspringLaw::from_pmf("stable(2)", vec![0.5, 0.0, 0.5])?;
            law.kind = LawKind::Stable(2.0);
            return Ok(law);
        }
        let cap = HEAVY_TABLE_CAP;
        let mut pmf = vec![0.0; cap];
        pmf[0] = 1.0 / beta;
        let mut b = beta; // binom(β, 1)
        for (k, slot) in pmf.iter_mut().enumerate().skip(2) {
            b *= (beta - k as f64 + 1.0) / k as f64;
            *slot = b.abs() / beta;
        }
        let tail = binom_real(beta - 1.0, cap as u64 - 1).abs() / beta;
        let c = (beta - 1.0) / ln_gamma(2.0 - beta).exp();
        Ok(OffspringLaw::build(
            format!("stable({beta})"),
            LawKind::Stable(beta),
            false,
            pmf,
            tail,
            Some((beta, c)),
            1.0,
            f64::INFINITY,
        ))
    }

    /// A finitely supported law given by its probabilities.
    pub fn from_pmf(name: &str, pmf: Vec<f64>) -> Result<OffspringLaw> {
        if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("pmf entries must be finite and non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("pmf sums to {total}, not 1")));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        Ok(OffspringLaw::build(
            name.to_string(),
            LawKind::Custom,
            false,
            pmf,
            0.0,
            None,
            mean,
            second - mean * mean,
        ))
    }

    /// `ξ̂(k) = k ξ(k)`; only defined for critical laws.
    pub fn size_biased(&self) -> Result<OffspringLaw> {
        if !self.is_critical() {
            return Err(Error::Domain(format!(
                "size biasing needs mean 1, {} has mean {}",
                self.name, self.mean
            )));
        }
        if self.biased {
            return Err(Error::Domain("law is already size biased".into()));
        }
        let pmf: Vec<f64> = self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).collect();
        let kk = pmf.len() as u64;
        let tail = match self.kind {
            LawKind::Poisson(m) => {
                let prev = self.pmf[kk as usize - 1];
                m * (prev + self.tail_mass)
            }
            LawKind::Geometric(p) => (1.0 - p).powi(kk as i32) * (kk as f64 + (1.0 - p) / p),
            LawKind::Stable(beta) if beta < 2.0 => binom_real(beta - 2.0, kk - 2).abs(),
            _ => 0.0,
        };
        let tail_info = match (self.tail_exponent, self.tail_const) {
            (Some(a), Some(c)) => Some((a - 1.0, c)),
            _ => None,
        };
        Ok(OffspringLaw::build(
            format!("size_biased({})", self.name),
            self.kind,
            true,
            pmf,
            tail,
            tail_info,
            self.variance + 1.0,
            f64::NAN,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.pmf.get(k as usize).copied().unwrap_or_else(|| self.tail_pmf(k))
    }

    fn tail_pmf(&self, k: u64) -> f64 {
        match (self.kind, self.biased) {
            (LawKind::Stable(beta), biased) if beta < 2.0 => {
                let base = stable_pmf_far(beta, k);
                if biased {
                    k as f64 * base
                } else {
                    base
                }
            }
            (LawKind::Poisson(m), biased) => {
                let base = (-m + k as f64 * m.ln() - ln_factorial(k)).exp();
                if biased {
                    k as f64 * base
                } else {
                    base
                }
            }
            (LawKind::Geometric(p), biased) => {
                let base = p * (1.0 - p).powf(k as f64);
                if biased {
                    k as f64 * base
                } else {
                    base
                }
            }
            _ => 0.0,
        }
    }

    /// Stored probabilities `ξ(0..len)`.
    pub fn table(&self) -> &[f64] {
        &self.pmf
    }

    /// Certified mass beyond the stored table.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `α` such that `ξ(n) ~ c n^{-1-α}`, when the law has a power tail.
    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }

    pub fn tail_constant(&self) -> Option<f64> {
        self.tail_const
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn is_critical(&self) -> bool {
        (self.mean - 1.0).abs() <= 1e-9
    }

    /// Table mass plus certified tail.
    pub fn total_mass(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0) + self.tail_mass
    }

    /// Inverse-cdf on the table, discretized Pareto continuation past it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random::<f64>() * self.total_mass();
        self.invert(u, rng)
    }

    /// A draw conditioned on being at least `k_min` (`k_min` inside the table).
    pub fn sample_at_least<R: Rng + ?Sized>(&self, k_min: u64, rng: &mut R) -> u64 {
        let k = (k_min as usize).min(self.pmf.len());
        let lo = if k == 0 { 0.0 } else { self.cdf[k - 1] };
        let u = lo + rng.random::<f64>() * self.sfx[k];
        self.invert(u, rng).max(k_min)
    }

    /// Sum of `count` independent draws.
    ///
    /// Poisson and geometric sums are drawn in closed form. Otherwise the
    /// values below a cutoff are counted by a multinomial over the table and
    /// the rare values above it are drawn one by one.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> Result<u64> {
        use rand_distr::{Binomial, Distribution, Gamma, Poisson};
        if count == 0 {
            return Ok(0);
        }
        match (self.kind, self.biased) {
            (LawKind::Poisson(m), false) => {
                let x: f64 = Poisson::new(m * count as f64).map_err(|e| Error::Numeric(e.to_string()))?.sample(rng);
                return Ok(x as u64);
            }
            (LawKind::Geometric(p), false) if p < 1.0 => {
                // negative binomial as a gamma mixture of Poissons
                let g: f64 = Gamma::new(count as f64, (1.0 - p) / p)
                    .map_err(|e| Error::Numeric(e.to_string()))?
                    .sample(rng);
                if g <= 0.0 {
                    return Ok(0);
                }
                let x: f64 = Poisson::new(g).map_err(|e| Error::Numeric(e.to_string()))?.sample(rng);
                return Ok(x as u64);
            }
            _ => {}
        }
        if count <= 64 {
            return Ok((0..count).map(|_| self.sample(rng)).sum());
        }
        let cutoff = ((count as f64).powf(0.4) as usize).max(16).min(self.pmf.len());
        let mut left = count;
        let mut total: u64 = 0;
        for k in 0..cutoff {
            if left == 0 {
                break;
            }
            let p = (self.pmf[k] / self.sfx[k]).clamp(0.0, 1.0);
            let c = Binomial::new(left, p).map_err(|e| Error::Numeric(e.to_string()))?.sample(rng);
            total = total.saturating_add(c.saturating_mul(k as u64));
            left -= c;
        }
        if left > SUM_TAIL_CAP {
            return Err(Error::Capacity(format!(
                "{}: {left} draws beyond the table cutoff {cutoff}",
                self.name
            )));
        }
        for _ in 0..left {
            total = total.saturating_add(self.sample_at_least(cutoff as u64, rng));
        }
        Ok(total)
    }

    fn invert<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> u64 {
        let last = *self.cdf.last().expect("non-empty table");
        if u < last {
            return self.cdf.partition_point(|&c| c <= u) as u64;
        }
        let kk = self.pmf.len() as f64;
        match self.tail_exponent {
            Some(a) if a > 0.0 => {
                let v: f64 = 1.0 - rng.random::<f64>();
                let x = kk * v.powf(-1.0 / a);
                if x >= (1u64 << 62) as f64 {
                    1u64 << 62
                } else {
                    x.floor() as u64
                }
            }
            _ => {
                // light tail: the unrepresented mass is below 1e-30
                let mut k = self.pmf.len() as u64;
                while rng.random::<f64>() < 0.5 {
                    k += 1;
                }
                k
            }
        }
    }
}

/// `binom(x, k)` for real `x` by the product recursion.
pub fn binom_real(x: f64, k: u64) -> f64 {
    let mut b = 1.0;
    for j in 1..=k {
        b *= (x - j as f64 + 1.0) / j as f64;
    }
    b
}

/// Stable offspring probability far in the tail, via log-gamma:
/// `|binom(β,k)|/β = Γ(k-β) / (β |Γ(-β)| k!)`.
fn stable_pmf_far(beta: f64, k: u64) -> f64 {
    let ln_abs_gamma_neg_beta = ln_gamma(2.0 - beta) - (beta * (beta - 1.0)).ln();
    (ln_gamma(k as f64 - beta) - ln_abs_gamma_neg_beta - ln_factorial(k)).exp() / beta
}

/// Beta-geometric law with parameters `(θ, 1-θ)`.
#[derive(Clone, Debug)]
pub struct BetaGeometric {
    theta: f64,
    mixing: Option<Beta<f64>>,
}

impl BetaGeometric {
    pub fn new(theta: f64) -> Result<BetaGeometric> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Domain(format!(
                "beta-geometric parameter must be in (0,1], got {theta}"
            )));
        }
        let mixing = if theta < 1.0 {
            Some(Beta::new(1.0 - theta, theta).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(BetaGeometric { theta, mixing })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `θ Γ(n+1-θ) / (Γ(1-θ) (n+1)!)`.
    pub fn pmf(&self, n: u64) -> f64 {
        if self.theta == 1.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let t = self.theta;
        (t.ln() + ln_gamma(n as f64 + 1.0 - t) - ln_gamma(1.0 - t) - ln_factorial(n + 1)).exp()
    }

    /// `P(X ≥ n) = Γ(n+1-θ) / (Γ(1-θ) n!)`.
    pub fn tail(&self, n: u64) -> f64 {
        if self.theta == 1.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let t = self.theta;
        (ln_gamma(n as f64 + 1.0 - t) - ln_gamma(1.0 - t) - ln_factorial(n)).exp()
    }

    /// Geometric count with a Beta(1-θ, θ) success probability.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let Some(mixing) = &self.mixing else { return 0 };
        let pi: f64 = mixing.sample(rng);
        geometric_failures(1.0 - pi, rng)
    }
}

pub fn beta_geometric_pmf(theta: f64, n: u64) -> Result<f64> {
    Ok(BetaGeometric::new(theta)?.pmf(n))
}

/// `k^{k-1} e^{-k} / k!`.
pub fn borel_pmf(k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ((k as f64 - 1.0) * (k as f64).ln() - k as f64 - ln_factorial(k)).exp()
}

/// Envelope constant for [`borel_sample`]; the ratio peaks at `k = 1`.
pub(crate) const BOREL_ENVELOPE: f64 = 1.26;

/// Proposal mass of `⌊V^{-2}⌋` for uniform `V`.
pub(crate) fn borel_proposal_pmf(k: u64) -> f64 {
    let k = k as f64;
    k.powf(-0.5) - (k + 1.0).powf(-0.5)
}

/// Borel(1) by rejection from `⌊V^{-2}⌋`, whose tail has the same order.
pub fn borel_sample<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    loop {
        let v: f64 = 1.0 - rng.random::<f64>();
        let x = (v * v).recip().floor();
        let k = if x >= 1e18 { 1_000_000_000_000_000_000 } else { x as u64 };
        let accept = borel_pmf(k) / (BOREL_ENVELOPE * borel_proposal_pmf(k));
        if rng.random::<f64>() < accept {
            return k;
        }
    }
}

/// Negative Dirichlet multinomial with parameters `(1; 1/k, …, 1/k)` on
/// `(k-1)`-vectors.
#[derive(Clone, Debug)]
pub struct NegDirichletMultinomial {
    k: usize,
    total: BetaGeometric,
}

impl NegDirichletMultinomial {
    pub fn new(k: usize) -> Result<NegDirichletMultinomial> {
        if k < 2 {
            return Err(Error::Domain(format!("arity must be at least 2, got {k}")));
        }
        Ok(NegDirichletMultinomial { k, total: BetaGeometric::new(1.0 / k as f64)? })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(1/k) (1/(1+N)) ∏ Γ(n_i + 1/k) / (Γ(1/k) n_i!)`.
    pub fn pmf(&self, counts: &[u64]) -> Result<f64> {
        if counts.len() != self.k - 1 {
            return Err(Error::Domain(format!(
                "expected {} counts, got {}",
                self.k - 1,
                counts.len()
            )));
        }
        let a = 1.0 / self.k as f64;
        let n: u64 = counts.iter().sum();
        let mut ln = a.ln() - ((1 + n) as f64).ln();
        for &c in counts {
            ln += ln_gamma(c as f64 + a) - ln_gamma(a) - ln_factorial(c);
        }
        Ok(ln.exp())
    }

    /// `‖X‖` is beta-geometric(1/k); given it, a Dirichlet-multinomial split.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let n = self.total.sample(rng);
        let w = dirichlet_sample(&vec![1.0 / self.k as f64; self.k - 1], rng);
        multinomial_sample(n, &w, rng)
    }
}

pub fn neg_dirichlet_multinomial_pmf(k: usize, counts: &[u64]) -> Result<f64> {
    NegDirichletMultinomial::new(k)?.pmf(counts)
}

pub fn dirichlet_sample<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = params
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            return g.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn multinomial_sample<R: Rng + ?Sized>(n: u64, weights: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; weights.len()];
    let mut left = n;
    let mut mass: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == weights.len() {
            out[i] = left;
            break;
        }
        let p = if mass > 0.0 { (w / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out[i] = x;
        left -= x;
        mass -= w;
    }
    out
}

/// Failures before the first success with success probability `p`.
pub fn geometric_sample<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    geometric_failures(p, rng)
}

fn geometric_failures<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    if p <= 0.0 {
        return 1u64 << 62;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let x = u.ln() / (-p).ln_1p();
    if x >= (1u64 << 62) as f64 {
        1u64 << 62
    } else {
        x.floor() as u64
    }
}

/// Index drawn proportionally to non-negative `weights`.
pub fn categorical_sample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeKind {
    Vertices,
    Leaves,
}

/// `P(#T = n)` (or `P(#_L T = n)`) for `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct SizePmfTable {
    pub kind: SizeKind,
    probs: Vec<f64>,
    /// Upper bound on the absolute error of every entry.
    pub error: f64,
}

impl SizePmfTable {
    pub fn get(&self, n: u64) -> f64 {
        self.probs.get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> u64 {
        self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,pmf\n");
        for (n, p) in self.probs.iter().enumerate().skip(1) {
            s.push_str(&format!("{n},{p:e}\n"));
        }
        s
    }
}

const PRUNE: f64 = 1e-40;

/// `P(#T = n)` for `n ≤ n_max` as first-passage probabilities of the
/// Łukasiewicz walk, which is Otter-Dwass' `(1/n) P(S_n = -1)`.
pub fn gw_size_pmf(xi: &OffspringLaw, n_max: u64) -> Result<SizePmfTable> {
    if !xi.is_critical() {
        return Err(Error::Domain(format!("{} is not critical", xi.name())));
    }
    if n_max > 1 << 22 {
        return Err(Error::Numeric(format!(
            "n_max = {n_max} exceeds the size-table limit 2^22"
        )));
    }
    let n_max = n_max as usize;
    let table = xi.table();
    let support_cap = table.len();
    let mut error = 0.0;
    if n_max > support_cap {
        // offspring counts past the table are dropped for the whole run
        error += n_max as f64 * xi.tail_mass();
    }
    let mut probs = vec![0.0; n_max + 1];
    // alive[h]: probability the walk has height h after t steps without dying
    let mut alive = vec![0.0, 1.0];
    let mut next: Vec<f64> = Vec::new();
    for t in 0..n_max {
        probs[t + 1] = alive.get(1).copied().unwrap_or(0.0) * table[0];
        if t + 1 == n_max {
            break;
        }
        // heights above this bound cannot die by step n_max
        let h_cap = n_max - (t + 1);
        next.clear();
        next.resize(alive.len().saturating_add(support_cap).min(h_cap + 1).max(2), 0.0);
        for (h, &a) in alive.iter().enumerate().skip(1) {
            if a == 0.0 {
                continue;
            }
            let max_y = (h_cap + 1).saturating_sub(h).min(support_cap - 1);
            let start = usize::from(h == 1);
            for (y, &p) in table.iter().enumerate().take(max_y + 1).skip(start) {
                next[h + y - 1] += a * p;
            }
        }
        while next.len() > 2 && *next.last().unwrap() < PRUNE {
            error += next.pop().unwrap();
        }
        std::mem::swap(&mut alive, &mut next);
    }
    if error > 1e-12 {
        return Err(Error::Numeric(format!(
            "size table truncation error {error:e} exceeds 1e-12"
        )));
    }
    Ok(SizePmfTable { kind: SizeKind::Vertices, probs, error })
}

/// Size tables from the first-split recursion
/// `P(#T = n) = Σ_p ξ(p) P(#T₁+…+#T_p = n-1)` (vertices) or its leaf
/// analogue. Cubic cost; used for leaf counts and as an oracle.
pub fn size_pmf_by_recursion(xi: &OffspringLaw, n_max: u64, kind: SizeKind) -> Result<SizePmfTable> {
    if !xi.is_critical() {
        return Err(Error::Domain(format!("{} is not critical", xi.name())));
    }
    let n_max = n_max as usize;
    let mut p = vec![0.0; n_max + 1];
    // conv[q][m] = P(sum of q sizes = m), q ≥ 1
    let mut conv: Vec<Vec<f64>> = vec![vec![0.0; n_max + 1]; n_max + 2];
    let xi1 = xi.pmf(1);
    for n in 1..=n_max {
        match kind {
            SizeKind::Vertices => {
                let m = n - 1;
                let mut acc = if m == 0 { xi.pmf(0) } else { 0.0 };
                for q in 2..=m {
                    conv[q][m] = (1..=m + 1 - q).map(|s| p[s] * conv[q - 1][m - s]).sum();
                    acc += xi.pmf(q as u64) * conv[q][m];
                }
                // the q = 1 term involves P(#T = n-1), already known
                if m >= 1 {
                    acc += xi1 * p[m];
                }
                p[n] = acc;
            }
            SizeKind::Leaves => {
                let mut acc = if n == 1 { xi.pmf(0) } else { 0.0 };
                for q in 2..=n {
                    conv[q][n] = (1..=n + 1 - q).map(|s| p[s] * conv[q - 1][n - s]).sum();
                    acc += xi.pmf(q as u64) * conv[q][n];
                }
                p[n] = acc / (1.0 - xi1);
            }
        }
        conv[1][n] = p[n];
    }
    Ok(SizePmfTable { kind, probs: p, error: 0.0 })
}

/// Law of `Y₁+…+Y_n` on `0..=m_max` for i.i.d. `Y ~ ξ`.
pub fn offspring_sum_pmf(xi: &OffspringLaw, n: usize, m_max: usize) -> Vec<f64> {
    let table = xi.table();
    let mut cur = vec![0.0; m_max + 1];
    cur[0] = 1.0;
    for _ in 0..n {
        let mut nxt = vec![0.0; m_max + 1];
        for (x, &a) in cur.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (y, &p) in table.iter().enumerate().take(m_max + 1 - x) {
                nxt[x + y] += a * p;
            }
        }
        cur = nxt;
    }
    cur
}

/// `a * b` truncated to `len` entries.
pub fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

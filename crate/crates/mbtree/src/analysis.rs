//! Seeded statistical harness: replica generation, empirical ball laws,
//! `q_n → q_*` tables, volume-growth exponents and the Otter-Dwass check.
//!
//! Replica `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so results do not depend on the worker count.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{convolve, offspring_sum_pmf, size_pmf_by_recursion, OffspringLaw, SizeKind};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::split_laws::{Semantics, SplitLaw};
use crate::tree::Tree;

pub use crate::mb_engine::{Measure, VolumeCurve};

/// Resamples used for bootstrap standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// The generator of replica `i`.
pub fn replica_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Runs `f` on replicas `0..n` in parallel; the output is in replica order.
pub fn replicate<T, F>(seed: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut dyn RngCore, usize) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

/// Empirical law of `T|_R` keyed by canonical code.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BallLawHistogram {
    pub radius: usize,
    pub total: u64,
    pub counts: BTreeMap<String, u64>,
}

impl BallLawHistogram {
    pub fn new(radius: usize) -> BallLawHistogram {
        BallLawHistogram { radius, total: 0, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, t: &Tree) {
        *self.counts.entry(t.ball(self.radius).canonical_code().to_string()).or_default() += 1;
        self.total += 1;
    }

    pub fn frequency(&self, code: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(code).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// `N` seeded draws of `sampler`, each cut to radius `R`.
pub fn empirical_ball_law<F>(sampler: F, r: usize, n: usize, seed: u64) -> Result<BallLawHistogram>
where
    F: Fn(&mut dyn RngCore) -> Result<Tree> + Sync,
{
    let codes = replicate(seed, n, |rng, _| Ok(sampler(rng)?.ball(r).canonical_code().to_string()))?;
    let mut h = BallLawHistogram::new(r);
    for c in codes {
        *h.counts.entry(c).or_default() += 1;
        h.total += 1;
    }
    Ok(h)
}

/// `½ Σ |p - q|` between two empirical laws.
pub fn tv_distance(a: &BallLawHistogram, b: &BallLawHistogram) -> f64 {
    let mut keys: Vec<&String> = a.counts.keys().chain(b.counts.keys()).collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys.into_iter().map(|k| (a.frequency(k) - b.frequency(k)).abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QnRow {
    pub n: u64,
    pub lambda: String,
    pub qn: f64,
    pub qstar: f64,
    pub abs_diff: f64,
}

/// The size-`n` partition `(children - ‖λ‖, λ)`, or `None` when it is not
/// a valid split.
pub fn one_spine_split(law: &dyn SplitLaw, n: u64, lambda: &Partition) -> Option<Partition> {
    let parts = lambda.finite_parts();
    let norm: u64 = parts.iter().sum();
    let total = law.semantics().children_total(n);
    let big = total.checked_sub(norm)?;
    if big < parts.first().copied().unwrap_or(0) {
        return None;
    }
    if let Semantics::InternalVertices { arity } = law.semantics() {
        if parts.len() + 1 > arity {
            return None;
        }
    }
    let mut v = vec![big];
    v.extend(parts);
    Some(Partition::from_finite(v))
}

/// `q_n(n - ‖λ‖, λ)` against `q_*(λ)` along `n_grid`.
pub fn qn_convergence_table(law: &dyn SplitLaw, lambdas: &[Partition], n_grid: &[u64]) -> Result<Vec<QnRow>> {
    let mut rows = Vec::new();
    for lambda in lambdas {
        let qstar = law.qstar(lambda)?;
        for &n in n_grid {
            let full = one_spine_split(law, n, lambda)
                .ok_or_else(|| Error::Domain(format!("({lambda}) does not fit a split of size {n}")))?;
            let qn = law.pmf(n, &full)?;
            rows.push(QnRow { n, lambda: lambda.to_string(), qn, qstar, abs_diff: (qn - qstar).abs() });
        }
    }
    Ok(rows)
}

/// Whether `|q_n - q_*|` strictly decreases along the grid for every `λ`.
pub fn qn_monotone(rows: &[QnRow]) -> bool {
    rows.windows(2).filter(|w| w[0].lambda == w[1].lambda).all(|w| w[1].abs_diff < w[0].abs_diff)
}

/// Mean and bootstrap standard error.
pub fn bootstrap_mean(values: &[f64], seed: u64) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    (mean, std_dev(&means))
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub stderr: f64,
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// How replicas are pooled at each radius before taking logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSummary {
    Mean,
    /// For offspring laws whose size-biased version has infinite mean,
    /// where `E V(R)` is infinite.
    Median,
}

fn summary_at(curves: &[&VolumeCurve], r: usize, how: CurveSummary, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(curves.iter().map(|c| c.values[r] as f64 - c.values[0] as f64));
    match how {
        CurveSummary::Mean => buf.iter().sum::<f64>() / buf.len() as f64,
        CurveSummary::Median => {
            let n = buf.len();
            let (below, &mut hi, _) = buf.select_nth_unstable_by(n / 2, f64::total_cmp);
            if n % 2 == 1 {
                hi
            } else {
                0.5 * (below.iter().copied().fold(f64::NEG_INFINITY, f64::max) + hi)
            }
        }
    }
}

fn curve_slope(curves: &[&VolumeCurve], lo: usize, hi: usize, how: CurveSummary) -> f64 {
    let mut buf = Vec::with_capacity(curves.len());
    let points: Vec<(f64, f64)> = (lo..=hi).map(|r| (r as f64, summary_at(curves, r, how, &mut buf))).collect();
    log_log_slope(&points)
}

/// Slope of `log(mean V(R) - mean V(0))` against `log R` over the window,
/// with a bootstrap standard error over the curves.
pub fn growth_exponent(curves: &[VolumeCurve], window: (usize, usize), seed: u64) -> Result<GrowthFit> {
    growth_exponent_by(curves, window, seed, CurveSummary::Mean)
}

/// [`growth_exponent`] with a choice of pooling.
pub fn growth_exponent_by(
    curves: &[VolumeCurve],
    window: (usize, usize),
    seed: u64,
    how: CurveSummary,
) -> Result<GrowthFit> {
    let (lo, hi) = window;
    if curves.len() < 30 {
        return Err(Error::Domain(format!("growth exponent needs at least 30 curves, got {}", curves.len())));
    }
    if lo == 0 || lo >= hi || curves.iter().any(|c| c.r_max() < hi) {
        return Err(Error::Domain(format!("window [{lo}, {hi}] is not inside the sampled radii")));
    }
    let all: Vec<&VolumeCurve> = curves.iter().collect();
    let slope = curve_slope(&all, lo, hi, how);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = curves.len();
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let pick: Vec<&VolumeCurve> = (0..n).map(|_| &curves[rng.random_range(0..n)]).collect();
            curve_slope(&pick, lo, hi, how)
        })
        .collect();
    Ok(GrowthFit { slope, stderr: std_dev(&boot) })
}

/// Largest gap between `P(#T₁+…+#T_k = n)`, from convolving the size table
/// built by the first-generation recursion, and `(k/n) P(S_n = n - k)`.
pub fn otter_dwass_check(xi: &OffspringLaw, k_max: usize, n_max: usize) -> Result<f64> {
    let sizes = size_pmf_by_recursion(xi, n_max as u64, SizeKind::Vertices)?;
    let base = sizes.probs().to_vec();
    let mut conv = base.clone();
    let mut worst: f64 = 0.0;
    let walks: Vec<Vec<f64>> = (0..=n_max).map(|n| offspring_sum_pmf(xi, n, n_max)).collect();
    for k in 1..=k_max {
        if k > 1 {
            conv = convolve(&conv, &base, n_max + 1);
        }
        for n in k..=n_max {
            let od = k as f64 / n as f64 * walks[n][n - k];
            worst = worst.max((conv[n] - od).abs());
        }
    }
    Ok(worst)
}

/// First line of every CSV report.
pub fn csv_banner(model: &str, params: &str, seed: u64) -> String {
    format!("# mbtree {} model={model} params={params} seed={seed}", env!("CARGO_PKG_VERSION"))
}

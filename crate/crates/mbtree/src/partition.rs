//! Integer partitions with possibly infinite parts, truncation and `d_P`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A part: a positive integer or the infinite marker, ordered above all integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Fin(u64),
    Inf,
}

impl Part {
    /// `part ∧ k`.
    pub fn min_with(self, k: u64) -> u64 {
        match self {
            Part::Fin(x) => x.min(k),
            Part::Inf => k,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::Fin(x) => write!(f, "{x}"),
            Part::Inf => f.write_str("inf"),
        }
    }
}

/// Non-increasing list of positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<Part>,
}

impl Partition {
    pub fn empty() -> Partition {
        Partition { parts: Vec::new() }
    }

    /// Validating constructor: parts must be non-increasing and non-zero.
    pub fn new(parts: Vec<Part>) -> Result<Partition> {
        if parts.contains(&Part::Fin(0)) {
            return Err(Error::Domain("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain("partition parts must be non-increasing".into()));
        }
        Ok(Partition { parts })
    }

    /// Sorts the parts; zero entries are dropped.
    pub fn from_unsorted(mut parts: Vec<Part>) -> Partition {
        parts.retain(|p| *p != Part::Fin(0));
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts }
    }

    /// Sorts the sizes; zero entries are dropped.
    pub fn from_finite(sizes: Vec<u64>) -> Partition {
        Partition::from_unsorted(sizes.into_iter().map(Part::Fin).collect())
    }

    /// `(∞, …, ∞, λ)` with `m_inf` infinite parts.
    pub fn with_inf(m_inf: usize, finite: &Partition) -> Partition {
        let mut parts = vec![Part::Inf; m_inf];
        parts.extend(finite.parts.iter().filter(|p| **p != Part::Inf));
        Partition { parts }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// `p(λ)`, the number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        !self.parts.contains(&Part::Inf)
    }

    /// `‖λ‖`, `None` when a part is infinite.
    pub fn norm(&self) -> Option<u64> {
        self.parts.iter().try_fold(0u64, |acc, p| match p {
            Part::Fin(x) => Some(acc + x),
            Part::Inf => None,
        })
    }

    /// Finite parts in non-increasing order.
    pub fn finite_parts(&self) -> Vec<u64> {
        self.parts
            .iter()
            .filter_map(|p| match p {
                Part::Fin(x) => Some(*x),
                Part::Inf => None,
            })
            .collect()
    }

    /// The finite parts as a partition.
    pub fn finite_part(&self) -> Partition {
        Partition::from_finite(self.finite_parts())
    }

    /// `m_k(λ)`.
    pub fn multiplicity(&self, k: Part) -> usize {
        self.parts.iter().filter(|p| **p == k).count()
    }

    /// `Σ_j ln m_j(λ)!` over distinct part values, infinite ones included.
    pub fn ln_multiplicity_factorial(&self) -> f64 {
        let mut total = 0.0;
        let mut i = 0;
        while i < self.parts.len() {
            let mut j = i;
            while j < self.parts.len() && self.parts[j] == self.parts[i] {
                j += 1;
            }
            total += crate::special::ln_factorial((j - i) as u64);
            i = j;
        }
        total
    }

    /// `λ∧K`: length preserved, zeros kept.
    pub fn truncate(&self, k: u64) -> Vec<u64> {
        self.parts.iter().map(|p| p.min_with(k)).collect()
    }

    /// `ι(λ)` for a finite, non-empty partition.
    pub fn iota(&self) -> Result<MassSeq> {
        let n = self
            .norm()
            .ok_or_else(|| Error::Domain("iota of an infinite partition".into()))?;
        if n == 0 {
            return Err(Error::Domain("iota of the empty partition".into()));
        }
        Ok(MassSeq { values: self.finite_parts().iter().map(|&x| x as f64 / n as f64).collect() })
    }
}

/// `exp(-inf{K ≥ 0 : λ∧K ≠ μ∧K})`; one exactly when the lengths differ.
pub fn d_p(lambda: &Partition, mu: &Partition) -> f64 {
    if lambda.len() != mu.len() {
        return 1.0;
    }
    let first = lambda
        .parts
        .iter()
        .zip(&mu.parts)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| match a.min(b) {
            Part::Fin(x) => x + 1,
            Part::Inf => unreachable!("two distinct parts cannot both be infinite"),
        })
        .min();
    match first {
        None => 0.0,
        Some(k) => (-(k as f64)).exp(),
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(Part::to_string).collect();
        f.write_str(&s.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Comma separated parts with an `inf` token; `""` and `-` are the empty partition.
    fn from_str(s: &str) -> Result<Partition> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        if s.is_empty() || s == "-" {
            return Ok(Partition::empty());
        }
        let parts = s
            .split(',')
            .map(|tok| match tok.trim() {
                "inf" | "INF" | "∞" => Ok(Part::Inf),
                tok => match tok.parse::<u64>() {
                    Ok(0) => Err(Error::Parse("zero part".into())),
                    Ok(x) => Ok(Part::Fin(x)),
                    Err(e) => Err(Error::Parse(format!("bad part {tok:?}: {e}"))),
                },
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition::from_unsorted(parts))
    }
}

/// Non-increasing summable mass sequence, trailing zeros implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct MassSeq {
    values: Vec<f64>,
}

impl MassSeq {
    pub fn new(mut values: Vec<f64>) -> Result<MassSeq> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("masses must be finite and non-negative".into()));
        }
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(MassSeq { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `i`, zero past the stored prefix.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// All partitions of `n` in reverse lexicographic order.
pub fn partitions_of(n: u64) -> Vec<Partition> {
    partitions_bounded(n, n, usize::MAX)
}

/// Partitions of `n` with parts at most `max_part` and at most `max_len` parts.
pub fn partitions_bounded(n: u64, max_part: u64, max_len: usize) -> Vec<Partition> {
    fn rec(n: u64, max_part: u64, max_len: usize, cur: &mut Vec<u64>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition::from_finite(cur.clone()));
            return;
        }
        if max_len == 0 {
            return;
        }
        for x in (1..=max_part.min(n)).rev() {
            cur.push(x);
            rec(n - x, x, max_len - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_part, max_len, &mut Vec::new(), &mut out);
    out
}

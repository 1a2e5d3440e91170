//! Log-gamma helpers and the pole conventions used by the split laws.

use std::sync::OnceLock;

use statrs::function::{factorial, gamma};

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Sizes below this read `ln n!` from a table.
pub const LN_TABLE_LEN: usize = 1 << 16;

pub fn ln_factorial(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    if (n as usize) < LN_TABLE_LEN {
        TABLE.get_or_init(|| (0..LN_TABLE_LEN as u64).map(factorial::ln_factorial).collect())[n as usize]
    } else {
        factorial::ln_factorial(n)
    }
}

/// `ln binom(n, k)` for integers.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Chi-square upper tail probability.
pub fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(stat)
}

/// Γ has a pole at every non-positive integer.
pub fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

//! Quick built-in checks. Smaller than the acceptance suite; same oracles.

use std::collections::BTreeMap;

use clap::ValueEnum;
use mbtree::analysis::{otter_dwass_check, replicate};
use mbtree::dist::OffspringLaw;
use mbtree::ghp::{d_ghp_exact, d_ghp_upper, ghp_lower_bound, random_space};
use mbtree::growth::{grow_alpha_gamma, grow_kary};
use mbtree::special::{chi_square_sf, ln_factorial};
use mbtree::split_laws::{law_by_name, normalization, AlphaGammaLaw, GwLaw, KaryLaw, Params, SplitLaw, MODEL_NAMES};
use mbtree::{Error, Partition};
use rand::RngCore;
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Pmf,
    Ghp,
    Growth,
    All,
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.to_string(), pass, detail }
}

fn default_params(name: &str) -> Params {
    let kv: &[(&str, &str)] = match name {
        "gw-stable" | "kesten-stable" | "marchal" => &[("beta", "1.5")],
        "alpha-gamma" => &[("alpha", "0.7"), ("gamma", "0.4")],
        "ford" => &[("alpha", "0.5")],
        "beta-splitting" => &[("beta", "-1.5")],
        "kary" => &[("k", "3")],
        _ => &[],
    };
    kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn pmf_checks(out: &mut Vec<Check>) {
    // Poisson(1) GW total progeny against the closed Borel law
    let mut worst: f64 = 0.0;
    match OffspringLaw::poisson(1.0).and_then(|xi| GwLaw::vertices(xi, 30)) {
        Ok(gw) => {
            for k in 1..=30u64 {
                let kf = k as f64;
                let closed = ((kf - 1.0) * kf.ln() - kf - ln_factorial(k)).exp();
                worst = worst.max((gw.size_pmf(k) - closed).abs() / closed);
            }
        }
        Err(_) => worst = f64::INFINITY,
    }
    out.push(check("poisson(1) sizes are borel, k<=30", worst <= 1e-10, format!("max rel err {worst:.1e}")));

    for (name, xi) in [("poisson", OffspringLaw::poisson(1.0)), ("geometric", OffspringLaw::geometric(0.5))] {
        let dev = xi.and_then(|xi| otter_dwass_check(&xi, 4, 60));
        let (pass, detail) = match dev {
            Ok(d) => (d <= 1e-9, format!("max dev {d:.1e}")),
            Err(e) => (false, e.to_string()),
        };
        out.push(check(&format!("otter-dwass {name}"), pass, detail));
    }

    let (mut worst, mut rows, mut skipped) = (0.0f64, 0, 0);
    let mut failure = None;
    for name in MODEL_NAMES {
        let law = match law_by_name(name, &default_params(name)) {
            Ok(l) => l,
            Err(e) => {
                failure = Some(format!("{name}: {e}"));
                continue;
            }
        };
        for n in 1..=12 {
            match normalization(law.as_ref(), n) {
                Ok(s) => {
                    worst = worst.max((s - 1.0).abs());
                    rows += 1;
                }
                Err(Error::UnsupportedSize(_)) => skipped += 1,
                Err(e) => failure = Some(format!("{name} n={n}: {e}")),
            }
        }
    }
    out.push(check(
        "rows sum to 1, every model, n<=12",
        failure.is_none() && worst <= 1e-9,
        failure.unwrap_or(format!("{rows} rows, max |sum-1| {worst:.1e}, {skipped} sizes of probability 0")),
    ));

    let p = |v: &[u64]| Partition::from_finite(v.to_vec());
    let mut b = Params::new();
    b.insert("beta".into(), "-1".into());
    let pass = law_by_name("beta-splitting", &b)
        .and_then(|law| Ok((law.pmf(4, &p(&[3, 1]))?, law.pmf(4, &p(&[2, 2]))?)))
        .map(|(a, c)| ((a - 8.0 / 11.0).abs() < 1e-12 && (c - 3.0 / 11.0).abs() < 1e-12, format!("q_4(3,1)={a:.6} q_4(2,2)={c:.6}")));
    let (pass, detail) = pass.unwrap_or_else(|e| (false, e.to_string()));
    out.push(check("beta-splitting(-1) n=4 is 8/11, 3/11", pass, detail));
}

fn chi_square_p(law: &dyn SplitLaw, n: u64, observed: Vec<Partition>) -> f64 {
    let total = observed.len() as f64;
    let mut counts: BTreeMap<Partition, f64> = BTreeMap::new();
    for lam in observed {
        *counts.entry(lam).or_default() += 1.0;
    }
    let (mut stat, mut cells) = (0.0, 0usize);
    for (lam, p) in law.row(n).unwrap_or_default() {
        if p > 0.0 {
            let e = p * total;
            stat += (counts.remove(&lam).unwrap_or(0.0) - e).powi(2) / e;
            cells += 1;
        }
    }
    if !counts.is_empty() || cells < 2 {
        return 0.0;
    }
    chi_square_sf(stat, cells - 1)
}

fn growth_checks(seed: u64, out: &mut Vec<Check>) {
    let draws = 20_000;
    let ag = AlphaGammaLaw::new(0.7, 0.4).expect("valid parameters");
    let p = match replicate(seed, draws, |rng, _| Ok(grow_alpha_gamma(0.7, 0.4, 6, rng)?.first_split_leaves())) {
        Ok(s) => chi_square_p(&ag, 6, s),
        Err(_) => 0.0,
    };
    out.push(check("alpha-gamma(0.7,0.4) growth vs split law n=6", p > 1e-3, format!("chi-square p {p:.3}, {draws} trees")));

    let kl = KaryLaw::new(3).expect("valid arity");
    let splits = replicate(seed ^ 0x77, draws, |rng, _| {
        let t = grow_kary(3, 5, rng)?;
        let mut sizes = Vec::new();
        for &c in t.children(t.root()) {
            sizes.push((t.subtree(c)?.len() as u64 - 1) / 3);
        }
        Ok(Partition::from_finite(sizes))
    });
    let p = splits.map(|s| chi_square_p(&kl, 5, s)).unwrap_or(0.0);
    out.push(check("3-ary growth vs split law n=5", p > 1e-3, format!("chi-square p {p:.3}, {draws} trees")));
}

fn ghp_checks(rng: &mut dyn RngCore, out: &mut Vec<Check>) {
    let corpus: Vec<_> = (0..40).map(|i| random_space(1 + i % 4, rng)).collect();
    let m = corpus.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            d[i][j] = d_ghp_exact(&corpus[i], &corpus[j]).unwrap_or(f64::NAN);
        }
    }
    let (mut sym, mut tri, mut bounds): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            sym = sym.max((d[i][j] - d[j][i]).abs());
            let iv = d_ghp_upper(&corpus[i], &corpus[j]);
            bounds = bounds
                .max(d[i][j] - iv.upper)
                .max(iv.lower - d[i][j])
                .max(ghp_lower_bound(&corpus[i], &corpus[j]) - d[i][j]);
            for k in 0..m {
                tri = tri.max(d[i][k] - d[i][j] - d[j][k]);
            }
        }
    }
    let finite = d.iter().flatten().all(|x| x.is_finite());
    out.push(check("ghp symmetry", finite && sym <= 1e-12, format!("max |d(x,y)-d(y,x)| {sym:.1e}, {m} spaces")));
    out.push(check("ghp triangle inequality", finite && tri <= 1e-12, format!("max excess {tri:.1e}")));
    out.push(check("ghp lower <= exact <= upper", finite && bounds <= 1e-12, format!("max violation {bounds:.1e}")));
}

/// Prints the table and returns whether every check passed.
pub fn run(suite: Suite, seed: u64, rng: &mut dyn RngCore, json_out: bool) -> bool {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Pmf | Suite::All) {
        pmf_checks(&mut checks);
    }
    if matches!(suite, Suite::Growth | Suite::All) {
        growth_checks(seed, &mut checks);
    }
    if matches!(suite, Suite::Ghp | Suite::All) {
        ghp_checks(rng, &mut checks);
    }
    let ok = checks.iter().all(|c| c.pass);
    if json_out {
        let rows: Vec<_> =
            checks.iter().map(|c| json!({"check": c.name, "pass": c.pass, "detail": c.detail})).collect();
        println!("{}", json!({"seed": seed, "suite": format!("{suite:?}").to_lowercase(), "checks": rows, "pass": ok}));
    } else {
        println!("# mbtree {} validate suite={suite:?} seed={seed}", env!("CARGO_PKG_VERSION"));
        for c in &checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        println!("{}/{} passed", checks.iter().filter(|c| c.pass).count(), checks.len());
    }
    ok
}

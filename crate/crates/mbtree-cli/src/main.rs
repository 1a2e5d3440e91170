//! `mbtree`: samplers, split-law tables, local-limit and volume-growth
//! harnesses, GHP distances and self-checks from the command line.

mod config;
mod validate;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbtree::analysis::{
    bootstrap_mean, csv_banner, empirical_ball_law, growth_exponent_by, qn_convergence_table, qn_monotone, replica_rng,
    replicate, tv_distance, CurveSummary,
};
use mbtree::ghp::{d_ghp_extended, d_ghp_upper, PointedMetricSpace, EXACT_CAP};
use mbtree::growth::{grow_by_name, kesten_volume, GROWTH_NAMES};
use mbtree::mb_engine::{sample_infinite_ball, sample_mb, sample_mb_ball, volume_curve, Measure, VolumeCurve};
use mbtree::split_laws::{law_by_name, Params, Semantics, SplitLaw, MODEL_NAMES};
use mbtree::{Error, Partition, Result, Tree};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "mbtree", version, about = "Markov branching trees: sampling, split laws, local limits, GHP")]
struct Cli {
    /// Seed for every random draw; replica i uses stream i of this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for trees and reports.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: available parallelism). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// key=value file supplying defaults for seed, format, workers, model and model parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// Model name (`mbtree models` lists them).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    k: Option<u64>,
    /// Condition Galton-Watson laws on their leaf count.
    #[arg(long)]
    leaves: bool,
    /// Size-table length for Galton-Watson laws without closed forms.
    #[arg(long)]
    n_max: Option<u64>,
    /// Extra model parameter, repeatable.
    #[arg(short = 'p', long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw Markov branching trees, or balls of them.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        /// Size in the law's own units (vertices, leaves or internal vertices).
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Keep only the ball of this radius (sampled without building the rest).
        #[arg(long)]
        radius: Option<usize>,
        /// Sample the ball of the local limit instead of a size-n tree.
        #[arg(long, requires = "radius")]
        infinite: bool,
    },
    /// Run a growth algorithm.
    Grow {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// First-split law q_n as CSV.
    Pmf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: u64,
    },
    /// q_n(n-|λ|, λ) against q_*(λ), optionally with ball-law TV distances.
    ConvergeLocal {
        #[command(flatten)]
        model: ModelArgs,
        /// Target partitions, e.g. `--lambda 1 --lambda 1,1`.
        #[arg(long = "lambda", default_values_t = vec!["1".to_string()])]
        lambdas: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![100u64, 1000, 10_000])]
        grid: Vec<u64>,
        /// Also compare empirical ball laws of this radius along the grid.
        #[arg(long)]
        ball: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
    },
    /// Volume curves of the local limit and their growth exponent.
    Volume {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        rmax: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = Measure::Vertices)]
        measure: Measure,
        /// Pool replicas by mean (default) or median before the log-log fit.
        #[arg(long, value_enum, default_value_t = Summary::Mean)]
        summary: Summary,
        /// Fit window `lo,hi` (default: rmax/10 to rmax).
        #[arg(long)]
        window: Option<String>,
        /// Print every replica's curve instead of the pooled one.
        #[arg(long)]
        per_replica: bool,
    },
    /// GHP distance between two trees seen as pointed measured metric spaces.
    Ghp {
        /// First tree, as a parenthesis code or a parent list.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Edge length.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Mass of each counted point.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = Measure::Vertices)]
        measure: Measure,
        /// Upper limit for the extended distance (default: larger height).
        #[arg(long)]
        rmax: Option<f64>,
    },
    /// List split-law and growth model names.
    Models,
    /// Built-in checks with a PASS/FAIL table.
    Validate {
        #[arg(long, value_enum, default_value_t = validate::Suite::All)]
        suite: validate::Suite,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Summary {
    Mean,
    Median,
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Settings after merging flags over the config file.
struct Run {
    seed: u64,
    format: Format,
    config: BTreeMap<String, String>,
}

impl Run {
    fn model(&self, args: &ModelArgs) -> Result<(String, Params)> {
        let name = args
            .model
            .clone()
            .or_else(|| self.config.get("model").cloned())
            .ok_or_else(|| Error::Parse("--model is required".into()))?;
        let mut params: Params = self
            .config
            .iter()
            .filter(|(k, _)| !config::GLOBAL_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        };
        set("alpha", args.alpha.map(|x| x.to_string()));
        set("gamma", args.gamma.map(|x| x.to_string()));
        set("beta", args.beta.map(|x| x.to_string()));
        set("k", args.k.map(|x| x.to_string()));
        set("n_max", args.n_max.map(|x| x.to_string()));
        if args.leaves {
            params.insert("leaves".into(), "1".into());
        }
        for (k, v) in &args.params {
            params.insert(k.clone(), v.clone());
        }
        Ok((name, params))
    }

    fn banner(&self, command: &str, model: &str, params: &Params) -> String {
        csv_banner(model, &params_text(params), self.seed).replacen("# mbtree", &format!("# mbtree {command}"), 1)
    }

    fn banner_json(&self, command: &str, model: &str, params: &Params) -> Value {
        json!({
            "tool": "mbtree",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "model": model,
            "params": params,
            "seed": self.seed,
        })
    }
}

fn params_text(params: &Params) -> String {
    if params.is_empty() {
        return "-".into();
    }
    params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn tree_json(t: &Tree) -> Value {
    json!({
        "vertices": t.len(),
        "leaves": t.n_leaves(),
        "height": t.height(),
        "code": t.canonical_code().to_string(),
        "parents": t.to_record().parents,
    })
}

fn print_trees(run: &Run, command: &str, model: &str, params: &Params, trees: &[Tree]) {
    match run.format {
        Format::Text => {
            println!("{}", run.banner(command, model, params));
            for t in trees {
                println!("{}", t.to_parent_text());
            }
        }
        Format::Json => {
            let doc = json!({
                "run": run.banner_json(command, model, params),
                "trees": trees.iter().map(tree_json).collect::<Vec<_>>(),
            });
            println!("{doc}");
        }
    }
}

fn size_name(law: &dyn SplitLaw) -> &'static str {
    match law.semantics() {
        Semantics::Vertices => "vertices",
        Semantics::Leaves => "leaves",
        Semantics::InternalVertices { .. } => "internal vertices",
    }
}

fn cmd_sample(run: &Run, args: &ModelArgs, n: Option<u64>, reps: usize, radius: Option<usize>, infinite: bool) -> Result<()> {
    let (name, params) = run.model(args)?;
    let law = law_by_name(&name, &params)?;
    let trees = if infinite {
        let r = radius.expect("clap enforces --radius with --infinite");
        replicate(run.seed, reps, |rng, _| Ok(sample_infinite_ball(law.as_ref(), r, rng)?.tree))?
    } else {
        let n = n.ok_or_else(|| Error::Parse(format!("--n is required ({} of {name})", size_name(law.as_ref()))))?;
        replicate(run.seed, reps, |rng, _| match radius {
            Some(r) => sample_mb_ball(law.as_ref(), n, r, rng),
            None => sample_mb(law.as_ref(), n, rng),
        })?
    };
    print_trees(run, "sample", &name, &params, &trees);
    Ok(())
}

fn cmd_grow(run: &Run, args: &ModelArgs, n: usize, reps: usize) -> Result<()> {
    let (name, params) = run.model(args)?;
    if !GROWTH_NAMES.contains(&name.as_str()) {
        return Err(Error::UnknownModel(format!("{name} (growth models: {})", GROWTH_NAMES.join(", "))));
    }
    let trees = replicate(run.seed, reps, |rng, _| grow_by_name(&name, &params, n, rng))?;
    print_trees(run, "grow", &name, &params, &trees);
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

fn cmd_pmf(run: &Run, args: &ModelArgs, n: u64) -> Result<()> {
    let (name, params) = run.model(args)?;
    let law = law_by_name(&name, &params)?;
    let rows = law.row(n)?;
    let mut out = String::new();
    match run.format {
        Format::Text => {
            writeln!(out, "{}", run.banner("pmf", &name, &params)).unwrap();
            writeln!(out, "n,lambda,q_n").unwrap();
            for (lam, p) in &rows {
                writeln!(out, "{n},{},{p:?}", csv_field(&lam.to_string())).unwrap();
            }
        }
        Format::Json => {
            let rows: Vec<Value> = rows.iter().map(|(l, p)| json!({"lambda": l.to_string(), "q_n": p})).collect();
            writeln!(out, "{}", json!({"run": run.banner_json("pmf", &name, &params), "n": n, "rows": rows})).unwrap();
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_converge(run: &Run, args: &ModelArgs, lambdas: &[String], grid: &[u64], ball: Option<usize>, reps: usize) -> Result<()> {
    let (name, params) = run.model(args)?;
    let law = law_by_name(&name, &params)?;
    let lambdas: Vec<Partition> = lambdas.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let rows = qn_convergence_table(law.as_ref(), &lambdas, grid)?;
    let monotone = qn_monotone(&rows);
    let tv_rows: Vec<(u64, f64)> = match ball {
        None => Vec::new(),
        Some(r) => {
            let limit = empirical_ball_law(|rng| Ok(sample_infinite_ball(law.as_ref(), r, rng)?.tree), r, reps, run.seed)?;
            grid.iter()
                .enumerate()
                .map(|(i, &n)| {
                    let seed = run.seed.wrapping_add(1 + i as u64);
                    let h = empirical_ball_law(|rng| sample_mb_ball(law.as_ref(), n, r, rng), r, reps, seed)?;
                    Ok((n, tv_distance(&h, &limit)))
                })
                .collect::<Result<_>>()?
        }
    };
    match run.format {
        Format::Text => {
            println!("{}", run.banner("converge-local", &name, &params));
            println!("n,lambda,q_n,q_star,abs_diff");
            for r in &rows {
                println!("{},{},{:?},{:?},{:?}", r.n, csv_field(&r.lambda), r.qn, r.qstar, r.abs_diff);
            }
            println!("# monotone={monotone}");
            if let Some(r) = ball {
                println!("n,radius,reps,tv");
                for (n, tv) in &tv_rows {
                    println!("{n},{r},{reps},{tv:?}");
                }
            }
        }
        Format::Json => {
            let doc = json!({
                "run": run.banner_json("converge-local", &name, &params),
                "rows": rows,
                "monotone": monotone,
                "ball_tv": tv_rows.iter().map(|(n, tv)| json!({"n": n, "tv": tv})).collect::<Vec<_>>(),
            });
            println!("{doc}");
        }
    }
    Ok(())
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("window must be lo,hi, got {s:?}"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn volume_curves(law: &dyn SplitLaw, rmax: usize, reps: usize, measure: Measure, seed: u64) -> Result<Vec<VolumeCurve>> {
    // Galton-Watson vertex volumes only need generation sizes
    if let (Some(xi), Semantics::Vertices, Measure::Vertices) = (law.free_offspring(), law.semantics(), measure) {
        let hat = xi.size_biased()?;
        return replicate(seed, reps, |rng, _| kesten_volume(xi, &hat, rmax, rng));
    }
    replicate(seed, reps, |rng, _| {
        let ball = sample_infinite_ball(law, rmax, rng)?;
        volume_curve(&ball, measure, rmax)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_volume(
    run: &Run,
    args: &ModelArgs,
    rmax: usize,
    reps: usize,
    measure: Measure,
    summary: Summary,
    window: Option<&str>,
    per_replica: bool,
) -> Result<()> {
    let (name, params) = run.model(args)?;
    let law = law_by_name(&name, &params)?;
    let curves = volume_curves(law.as_ref(), rmax, reps, measure, run.seed)?;
    let window = match window {
        Some(w) => parse_window(w)?,
        None => ((rmax / 10).max(1), rmax),
    };
    let how = match summary {
        Summary::Mean => CurveSummary::Mean,
        Summary::Median => CurveSummary::Median,
    };
    let fit = if curves.len() >= 30 { Some(growth_exponent_by(&curves, window, run.seed, how)?) } else { None };
    let pooled: Vec<(f64, f64, f64)> = (0..=rmax)
        .map(|r| {
            let v: Vec<f64> = curves.iter().map(|c| c.values[r] as f64).collect();
            let (m, se) = if v.len() > 1 { bootstrap_mean(&v, run.seed) } else { (v[0], 0.0) };
            let mut s = v.clone();
            s.sort_unstable_by(f64::total_cmp);
            (m, se, s[s.len() / 2])
        })
        .collect();
    match run.format {
        Format::Text => {
            println!("{}", run.banner("volume", &name, &params));
            if per_replica {
                println!("rep,r,volume");
                for (i, c) in curves.iter().enumerate() {
                    for (r, v) in c.values.iter().enumerate() {
                        println!("{i},{r},{v}");
                    }
                }
            } else {
                println!("r,mean,se,median");
                for (r, (m, se, med)) in pooled.iter().enumerate() {
                    println!("{r},{m:?},{se:?},{med:?}");
                }
            }
            match fit {
                Some(f) => println!(
                    "# measure={measure} summary={summary:?} window={},{} slope={:?} stderr={:?}",
                    window.0, window.1, f.slope, f.stderr
                ),
                None => println!("# fewer than 30 replicas: no growth exponent"),
            }
        }
        Format::Json => {
            let doc = json!({
                "run": run.banner_json("volume", &name, &params),
                "measure": measure,
                "radius": pooled.iter().enumerate().map(|(r, (m, se, med))| json!({"r": r, "mean": m, "se": se, "median": med})).collect::<Vec<_>>(),
                "fit": fit.map(|f| json!({"window": [window.0, window.1], "summary": format!("{summary:?}").to_lowercase(), "slope": f.slope, "stderr": f.stderr})),
            });
            println!("{doc}");
        }
    }
    Ok(())
}

fn parse_tree(s: &str) -> Result<Tree> {
    let s = s.trim();
    if s.starts_with('(') {
        Tree::from_code(s)
    } else {
        Tree::from_parent_text(s)
    }
}

fn cmd_ghp(run: &Run, x: &str, y: &str, a: f64, b: f64, measure: Measure, rmax: Option<f64>) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("need a > 0 and b >= 0, got a={a}, b={b}")));
    }
    let sx = PointedMetricSpace::from_tree(&parse_tree(x)?, a, b, measure);
    let sy = PointedMetricSpace::from_tree(&parse_tree(y)?, a, b, measure);
    let interval = d_ghp_upper(&sx, &sy);
    let exact = if interval.exact { Some(interval.upper) } else { None };
    let rmax = rmax.unwrap_or_else(|| sx.height().max(sy.height()));
    let ext = d_ghp_extended(&sx, &sy, rmax);
    match run.format {
        Format::Text => {
            println!("# mbtree {} ghp a={a} b={b} measure={measure}", env!("CARGO_PKG_VERSION"));
            println!("lower={:?}", interval.lower);
            println!("upper={:?}", interval.upper);
            match exact {
                Some(d) => println!("exact={d:?}"),
                None => println!("exact=unavailable (|X||Y| > {EXACT_CAP})"),
            }
            println!("extended={:?} tail_bound={:?} extended_exact={}", ext.value, ext.tail_bound, ext.exact);
        }
        Format::Json => {
            let doc = json!({
                "run": {"tool": "mbtree", "version": env!("CARGO_PKG_VERSION"), "command": "ghp", "a": a, "b": b, "measure": measure},
                "lower": interval.lower,
                "upper": interval.upper,
                "exact": exact,
                "extended": {"value": ext.value, "tail_bound": ext.tail_bound, "exact": ext.exact, "r_max": rmax},
            });
            println!("{doc}");
        }
    }
    Ok(())
}

fn error_record(e: &Error) -> Value {
    json!({"error": {"kind": e.kind(), "code": e.exit_code(), "message": e.to_string()}})
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_record(e));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Error::Parse(e.render().to_string().trim().to_string())),
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(path) => config::read(path)?,
        None => BTreeMap::new(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.get("seed").map_or(Ok(1), |s| s.parse().map_err(|_| Error::Parse(format!("config seed {s:?}"))))?,
    };
    let format = match cli.format {
        Some(f) => f,
        None => match cfg.get("format").map(String::as_str) {
            None | Some("text") => Format::Text,
            Some("json") => Format::Json,
            Some(other) => return Err(Error::Parse(format!("config format {other:?}"))),
        },
    };
    let workers = match cli.workers {
        Some(w) => Some(w),
        None => cfg.get("workers").map(|s| s.parse().map_err(|_| Error::Parse(format!("config workers {s:?}")))).transpose()?,
    };
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Domain("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    }
    let run = Run { seed, format, config: cfg };
    match &cli.command {
        Command::Sample { model, n, reps, radius, infinite } => cmd_sample(&run, model, *n, *reps, *radius, *infinite)?,
        Command::Grow { model, n, reps } => cmd_grow(&run, model, *n, *reps)?,
        Command::Pmf { model, n } => cmd_pmf(&run, model, *n)?,
        Command::ConvergeLocal { model, lambdas, grid, ball, reps } => {
            cmd_converge(&run, model, lambdas, grid, *ball, *reps)?
        }
        Command::Volume { model, rmax, reps, measure, summary, window, per_replica } => {
            cmd_volume(&run, model, *rmax, *reps, *measure, *summary, window.as_deref(), *per_replica)?
        }
        Command::Ghp { x, y, a, b, measure, rmax } => cmd_ghp(&run, x, y, *a, *b, *measure, *rmax)?,
        Command::Models => match run.format {
            Format::Text => {
                println!("split laws: {}", MODEL_NAMES.join(" "));
                println!("growth: {}", GROWTH_NAMES.join(" "));
            }
            Format::Json => println!("{}", json!({"split_laws": MODEL_NAMES, "growth": GROWTH_NAMES})),
        },
        Command::Validate { suite } => {
            let mut rng = replica_rng(run.seed, 0);
            let ok = validate::run(*suite, run.seed, &mut rng, run.format == Format::Json);
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kakeya_core::cantor::Selector;
use kakeya_core::config_prob::oracle_check;
use kakeya_core::percolation::{lyons_bounds_opt, PercTree};
use kakeya_core::poss::PossContext;
use kakeya_core::scalar::{parse_rational, rational_string};
use kakeya_core::sticky::{tau_of, KeyedField};
use kakeya_core::tree::pow_u64;
use kakeya_core::union::{union_volume, VolumeOptions};
use kakeya_core::{BigRational, Vertex};
use kakeya_harness::config::{sample_seed, tags};
use kakeya_harness::points::far_point_in_tube;
use kakeya_harness::record::Check;
use kakeya_harness::{
    audit, bounds, counting, moments, simulate, verify, CurveChoice, ExperimentConfig, HarnessError, RunResult, Timing,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

type CliResult<T> = std::result::Result<T, Box<dyn Error>>;

/// Experiments on sticky random Kakeya sets in the M-adic model.
#[derive(Parser)]
#[command(name = "kakeya", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON experiment config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Adic base of the Cantor construction.
    #[arg(long = "M", global = true)]
    m: Option<u32>,
    /// Depth, for commands that work at a single depth or to pin a sweep.
    #[arg(long = "N", global = true)]
    n: Option<u32>,
    /// Depth sweep as `LO..HI` (inclusive).
    #[arg(long = "N-range", global = true)]
    n_range: Option<String>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// `affine`, `moment`, or a JSON file with a `coefficients` table.
    #[arg(long, global = true)]
    curve: Option<String>,
    /// `middle`, `endpoints`, or a JSON selector file.
    #[arg(long, global = true)]
    selector: Option<String>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Cross-sections per unit length in volume integrals.
    #[arg(long, global = true)]
    quadrature: Option<u32>,
    /// Points drawn in pointwise experiments.
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long = "max-leaves", global = true)]
    max_leaves: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Cantor intervals and the direction set.
    Cantor {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump `(t, τ(t), σ(t))` for one keyed field.
    Slopes {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-slab union volumes of one realization, as CSV.
    Volume {
        #[arg(long, value_enum, default_value = "near")]
        range: Range,
        #[arg(long = "samples-per-slab", default_value_t = 4)]
        samples_per_slab: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Survival probability, resistance and bounds for one tree.
    Percolate(TreeArgs),
    /// Resistances of one tree.
    Resist(TreeArgs),
    /// Check closed-form conditional probabilities against enumeration.
    ProbOracle {
        /// `exhaustive` or `random:K`.
        #[arg(long, default_value = "exhaustive")]
        tuples: String,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(3..=4))]
        arity: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Near/far volumes and the ratio over a depth sweep.
    Simulate,
    /// First and second moments of slab intersection sums.
    SlabMoments,
    /// Lower quartile of near volumes.
    LowerBound,
    /// Far volumes against the survival and resistance integrals.
    UpperBound,
    /// Growth of the minimal resistance with depth.
    ResistanceGrowth,
    /// Exact Poss audit: witnesses, stickiness and the dual computation.
    PossAudit,
    /// Independence audit of the ray edges under random fields.
    IidAudit,
    /// Counting diagnostics for the near-intersection sets.
    Counting,
    /// Run the fast invariant suite, or one section of it.
    Verify {
        /// One of tree, cantor, sticky, tube, percolation, config, replay.
        section: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Range {
    Near,
    Far,
}

#[derive(Args)]
struct TreeArgs {
    /// `full-binary`, `full:B:H`, or `from-poss`.
    #[arg(long, default_value = "full-binary")]
    tree: String,
    /// Height of the full binary tree.
    #[arg(long, default_value_t = 2)]
    height: u32,
    /// Point `x,y,...` for `from-poss`; drawn inside a random tube otherwise.
    #[arg(long)]
    point: Option<String>,
    #[arg(long = "mc-samples", default_value_t = 100_000)]
    mc_samples: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut cfg = build_config(g)?;
    let out_dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from(cfg.out_dir.as_deref().unwrap_or("out")));
    let single = match cli.command {
        Command::ProbOracle { .. } => Some(g.n.unwrap_or(2)),
        Command::Cantor { .. } | Command::Slopes { .. } | Command::Volume { .. } => Some(g.n.unwrap_or(4)),
        Command::Percolate(_) | Command::Resist(_) => Some(g.n.unwrap_or(4)),
        _ => None,
    };
    let n1 = single.unwrap_or(cfg.n_max);
    if single.is_some() {
        cfg.n_min = n1;
        cfg.n_max = n1;
    }
    cfg.validate()?;
    match &cli.command {
        Command::Cantor { out } => cantor(&cfg, n1, out.as_deref()),
        Command::Slopes { out } => slopes(&cfg, n1, out.as_deref()),
        Command::Volume { range, samples_per_slab, out } => volume(&cfg, n1, *range, *samples_per_slab, out.as_deref()),
        Command::Percolate(args) => percolate(&cfg, n1, args, true),
        Command::Resist(args) => percolate(&cfg, n1, args, false),
        Command::ProbOracle { tuples, arity, out } => prob_oracle(&cfg, n1, tuples, *arity, out.as_deref()),
        Command::Simulate => experiment("simulate", &cfg, &out_dir, simulate::simulate),
        Command::SlabMoments => experiment("slab_moments", &cfg, &out_dir, moments::slab_moments),
        Command::LowerBound => experiment("lower_bound", &cfg, &out_dir, bounds::lower_bound_experiment),
        Command::UpperBound => experiment("upper_bound", &cfg, &out_dir, bounds::upper_bound_experiment),
        Command::ResistanceGrowth => experiment("resistance_growth", &cfg, &out_dir, bounds::resistance_growth),
        Command::PossAudit => experiment("poss_audit", &cfg, &out_dir, bounds::poss_audit),
        Command::IidAudit => experiment("iid_audit", &cfg, &out_dir, audit::percolation_iid_audit),
        Command::Counting => experiment("counting", &cfg, &out_dir, counting::counting_diagnostics),
        Command::Verify { section } => {
            let checks = match section {
                Some(s) => verify::run(s).ok_or_else(|| format!("unknown section {s:?}; try {:?}", verify::SECTIONS))?,
                None => verify::run_all(),
            };
            Ok(report(&checks))
        }
    }
}

fn build_config(g: &Global) -> CliResult<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(m) = g.m {
        cfg.m = m;
    }
    if let Some(r) = &g.n_range {
        let (lo, hi) = r.split_once("..").ok_or("--N-range expects LO..HI")?;
        cfg.n_min = lo.trim().parse()?;
        cfg.n_max = hi.trim().trim_start_matches('=').parse()?;
    }
    if let Some(n) = g.n {
        cfg.n_min = n;
        cfg.n_max = n;
    }
    if let Some(c) = &g.curve {
        cfg.curve = match c.as_str() {
            "affine" => CurveChoice::Affine,
            "moment" => CurveChoice::Moment,
            path => {
                let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                let coefficients: Vec<Vec<String>> = serde_json::from_value(v["coefficients"].clone())?;
                if g.d.is_none() {
                    cfg.d = coefficients.len();
                }
                CurveChoice::Custom { coefficients }
            }
        };
    }
    if let Some(d) = g.d {
        cfg.d = d;
    }
    if let Some(s) = &g.selector {
        cfg.selector = match s.as_str() {
            "middle" | "endpoints" => Selector::Endpoints,
            path => Selector::from_json(&fs::read_to_string(path)?)?,
        };
    }
    if let Some(s) = g.samples {
        cfg.samples = s;
    }
    if let Some(q) = g.quadrature {
        cfg.quadrature = q;
    }
    if let Some(p) = g.points {
        cfg.points = p;
    }
    if let Some(l) = g.max_leaves {
        cfg.max_leaves = l;
    }
    if let Some(o) = &g.out_dir {
        cfg.out_dir = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => stdout(&format!("{text}\n"))?,
    }
    Ok(())
}

/// Writes to stdout, treating a closed pipe as success.
fn stdout(text: &str) -> CliResult<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn report(checks: &[Check]) -> bool {
    for c in checks {
        eprintln!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn experiment<T: Serialize, S: Serialize>(
    name: &str,
    cfg: &ExperimentConfig,
    dir: &Path,
    f: impl FnOnce(&ExperimentConfig) -> kakeya_harness::Result<RunResult<T, S>>,
) -> CliResult<bool> {
    let start = Instant::now();
    let result = f(cfg)?;
    result.write(dir, name)?;
    Timing::new(name, cfg, start.elapsed()).write(dir, name)?;
    stdout(&result.summary_csv()?)?;
    eprintln!("wrote {}/{name}.json and {name}.csv (config {})", dir.display(), &result.config_hash[..12]);
    Ok(report(&result.checks))
}

fn cantor(cfg: &ExperimentConfig, n: u32, out: Option<&Path>) -> CliResult<bool> {
    let dirs = cfg.directions(n)?;
    let mut levels = Vec::new();
    for k in 1..=n {
        let level: Vec<_> = dirs
            .spec
            .build_level(k)?
            .iter()
            .map(|iv| {
                json!({
                    "binary": iv.binary.index,
                    "digits": iv.vertex.digits(),
                    "left": rational_string(&iv.left()),
                    "right": rational_string(&iv.right()),
                })
            })
            .collect();
        levels.push(level);
    }
    let doc = json!({
        "M": cfg.m,
        "N": n,
        "selector": cfg.selector,
        "curve": dirs.curve.name,
        "levels": levels,
        "directions": dirs.listing(),
        "c_lower": dirs.c_lower,
        "c_upper": dirs.c_upper,
    });
    emit(&serde_json::to_string_pretty(&doc)?, out)?;
    Ok(true)
}

fn slopes(cfg: &ExperimentConfig, n: u32, out: Option<&Path>) -> CliResult<bool> {
    let (dirs, params) = cfg.model(n)?;
    let field = KeyedField::new(cfg.seed, params.base());
    let rows: Vec<_> = (0..params.leaves())
        .map(|i| {
            let t = Vertex::from_index(params.base(), n, i);
            let tau = tau_of(&field, &t);
            let dir = &dirs.points[tau.index as usize];
            json!({
                "t": t.digits(),
                "tau": tau.digits(),
                "sigma": dir.slope.iter().map(rational_string).collect::<Vec<_>>(),
                "sigma_f64": dir.slope_f64,
            })
        })
        .collect();
    let doc = json!({ "seed": cfg.seed, "M": cfg.m, "N": n, "d": cfg.d, "slopes": rows });
    emit(&serde_json::to_string_pretty(&doc)?, out)?;
    Ok(true)
}

fn volume(cfg: &ExperimentConfig, n: u32, range: Range, samples_per_slab: usize, out: Option<&Path>) -> CliResult<bool> {
    let (dirs, params) = cfg.model(n)?;
    let real = kakeya_harness::model::Realization::keyed(&dirs, &params, cfg.seed);
    let a = match range {
        Range::Near => 0.0,
        Range::Far => params.c0 as f64,
    };
    let slab = 1.0 / cfg.quadrature as f64;
    let opts = VolumeOptions {
        samples_per_slab,
        mc_points: cfg.mc_points,
        seed: sample_seed(cfg.seed, tags::VOLUME_MC, n, 0),
    };
    let est = union_volume(&real.family(), a, a + 1.0, slab, opts);
    let mut text = String::from("slab,x0,x1,volume\n");
    for (k, v) in est.per_slab.iter().enumerate() {
        let x0 = a + k as f64 * slab;
        text.push_str(&format!("{k},{x0},{},{v}\n", x0 + slab));
    }
    text.push_str(&format!("total,{a},{},{}\n", a + 1.0, est.volume));
    emit(text.trim_end(), out)?;
    eprintln!("total volume {} ± {}", est.volume, est.half_width);
    Ok(true)
}

fn parse_point(s: &str) -> CliResult<Vec<BigRational>> {
    s.split(',')
        .map(|c| parse_rational(c).ok_or_else(|| format!("bad coordinate {c:?}").into()))
        .collect()
}

fn build_tree(cfg: &ExperimentConfig, n: u32, args: &TreeArgs) -> CliResult<(PercTree, serde_json::Value)> {
    if args.tree == "full-binary" {
        return Ok((PercTree::full(2, args.height), json!({ "kind": "full", "base": 2, "height": args.height })));
    }
    if let Some(rest) = args.tree.strip_prefix("full:") {
        let (b, h) = rest.split_once(':').ok_or("expected full:B:H")?;
        let (b, h): (u32, u32) = (b.parse()?, h.parse()?);
        return Ok((PercTree::full(b, h), json!({ "kind": "full", "base": b, "height": h })));
    }
    if args.tree != "from-poss" {
        return Err(format!("unknown tree {:?}", args.tree).into());
    }
    let (dirs, params) = cfg.model(n)?;
    let p = match &args.point {
        Some(s) => parse_point(s)?,
        None => far_point_in_tube(&mut ChaCha8Rng::seed_from_u64(cfg.seed), &params, &dirs),
    };
    if p.len() != cfg.d + 1 {
        return Err(format!("point has {} coordinates, expected {}", p.len(), cfg.d + 1).into());
    }
    let poss = PossContext::<BigRational>::new(&params, &dirs).poss_affine(&p)?;
    let leaves = poss.leaves();
    let info = json!({
        "kind": "poss",
        "point": p.iter().map(rational_string).collect::<Vec<_>>(),
        "poss": leaves.iter().map(|v| v.digits()).collect::<Vec<_>>(),
    });
    if leaves.is_empty() {
        return Err(HarnessError::Invariant("Poss(x) is empty; the tree has no leaves".into()).into());
    }
    Ok((PercTree::from_leaves(params.base(), &leaves)?, info))
}

fn opt_string(r: &Option<BigRational>) -> String {
    r.as_ref().map(rational_string).unwrap_or_else(|| "inf".into())
}

fn cell(r: &Option<BigRational>) -> String {
    r.as_ref().map(rational_string).unwrap_or_default()
}

fn percolate(cfg: &ExperimentConfig, n: u32, args: &TreeArgs, survival: bool) -> CliResult<bool> {
    let (tree, info) = build_tree(cfg, n, args)?;
    let r: Option<BigRational> = tree.resistance()?;
    let shorted: Option<BigRational> = tree.shorted_resistance()?;
    let mut doc = json!({
        "tree": info,
        "nodes": tree.num_nodes(),
        "height": tree.height(),
        "level_counts": tree.level_counts(),
        "resistance": opt_string(&r),
        "shorted_resistance": opt_string(&shorted),
    });
    let mut ok = true;
    if survival {
        let exact: BigRational = tree.survival_exact();
        let exact_f64: f64 = tree.survival_exact();
        let mc = tree.survival_mc(cfg.seed, args.mc_samples);
        let (lo, hi) = lyons_bounds_opt(&r);
        ok = lo <= exact && exact <= hi;
        doc["survival"] = json!(rational_string(&exact));
        doc["survival_f64"] = json!(exact_f64);
        doc["monte_carlo"] = json!(mc);
        doc["lyons_lower"] = json!(rational_string(&lo));
        doc["lyons_upper"] = json!(rational_string(&hi));
    }
    emit(&serde_json::to_string_pretty(&doc)?, None)?;
    Ok(ok)
}

fn prob_oracle(cfg: &ExperimentConfig, n: u32, tuples: &str, arity: u8, out: Option<&Path>) -> CliResult<bool> {
    let base = cfg.m.checked_pow(cfg.d as u32).ok_or("M^d overflows")?;
    let count = pow_u64(base as u64, n);
    let k = arity as usize;
    let field = KeyedField::new(cfg.seed, base);
    let leaf = |i: u64| Vertex::from_index(base, n, i);
    let mut list: Vec<Vec<u64>> = Vec::new();
    if tuples == "exhaustive" {
        let total = (0..k as u64).map(|j| count.saturating_sub(j)).product::<u64>();
        if total > 10_000_000 {
            return Err(HarnessError::Resource(format!("{total} tuples; use --tuples random:K")).into());
        }
        let mut t = vec![0u64; k];
        loop {
            if (0..k).all(|i| !t[i + 1..].contains(&t[i])) {
                list.push(t.clone());
            }
            let mut j = k;
            while j > 0 {
                j -= 1;
                t[j] += 1;
                if t[j] < count {
                    break;
                }
                t[j] = 0;
            }
            if t.iter().all(|&x| x == 0) {
                break;
            }
        }
    } else if let Some(kk) = tuples.strip_prefix("random:") {
        if count < k as u64 {
            return Err("not enough leaves for distinct tuples".into());
        }
        let kk: usize = kk.parse()?;
        for i in 0..kk as u64 {
            let mut t = Vec::with_capacity(k);
            let mut s = sample_seed(cfg.seed, tags::AUDIT, n, i);
            while t.len() < k {
                s = kakeya_core::sticky::splitmix64(s);
                let x = s % count;
                if !t.contains(&x) {
                    t.push(x);
                }
            }
            list.push(t);
        }
    } else {
        return Err(format!("unknown --tuples {tuples:?}").into());
    }
    let digits = |v: &Vertex| v.digits().iter().map(|d| d.to_string()).collect::<String>();
    let mut text = String::from("leaves,slopes,case,exponent,closed_form,edge_formula,enumerated,agrees\n");
    let mut mismatches = 0usize;
    for t in &list {
        let leaves: Vec<Vertex> = t.iter().map(|&i| leaf(i)).collect();
        let slopes: Vec<Vertex> = leaves.iter().map(|l| tau_of(&field, l)).collect();
        let rep = oracle_check(&leaves, &slopes)?;
        if !rep.agrees() {
            mismatches += 1;
        }
        let join = |vs: &[Vertex]| vs.iter().map(digits).collect::<Vec<_>>().join(" ");
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            join(&leaves),
            join(&slopes),
            rep.class.case.name(),
            rep.class.exponent,
            cell(&rep.closed_form),
            cell(&rep.edge_formula),
            cell(&rep.enumerated),
            rep.agrees()
        ));
    }
    emit(text.trim_end(), out)?;
    eprintln!("{} tuples, {mismatches} mismatches", list.len());
    Ok(mismatches == 0)
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use gicreg::config::Config;
use gicreg::export::{
    format_g12, frequency_response_csv, frontier_csv, parse_frontier_csv, provenance_json, to_json_string,
};
use gicreg::optimizer::{
    grid_search, polish, random_refine_search, Axis, GridSpec, SearchBudget, SearchOptions, OPEN_STEP, UNIT_STEP,
};
use gicreg::oracle::{Term, ToeplitzOracle};
use gicreg::schemes::ModeWeighting;
use gicreg::spectra::make_arma;
use gicreg::{ChannelParams, Error, SchemeId};

#[derive(Parser, Debug)]
#[command(name = "gicreg", version, about = "Achievable rate regions of the two-user Gaussian interference channel")]
struct Cli {
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true, env = "GICREG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the Pareto frontier of a scheme's region.
    Region(RegionArgs),
    /// Check whether one frontier's region contains another's.
    Compare(CompareArgs),
    /// Largest R1 on a frontier subject to R2 >= r2-min.
    Corner(CornerArgs),
    /// Finite-blocklength mutual information against its spectral limit.
    Oracle(OracleArgs),
    /// Modulus of a filter's frequency response as CSV.
    FreqResponse(FreqArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ChannelArgs {
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    a12: Option<f64>,
    #[arg(long)]
    a21: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SearchKind {
    Grid,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Derivation,
    AsPrinted,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    scheme: Option<String>,
    /// Grid step for parameters in [0, 1].
    #[arg(long)]
    step: Option<f64>,
    /// Grid step for filter coefficients in (-1, 1).
    #[arg(long)]
    open_step: Option<f64>,
    /// Cosine-series length per slot (theorem2 only).
    #[arg(long)]
    cos_order: Option<usize>,
    /// Pin a parameter, e.g. `kappa1=0.2605`. A bare prefix such as `rho`
    /// pins every parameter starting with it.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    fix: Vec<String>,
    /// Override one axis, e.g. `alpha=0:1:0.05`.
    #[arg(long = "axis", value_name = "NAME=SPEC")]
    axis: Vec<String>,
    #[arg(long, value_enum)]
    search: Option<SearchKind>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    rule_points: Option<usize>,
    /// Re-evaluate the frontier with this many rule points.
    #[arg(long)]
    polish_points: Option<usize>,
    #[arg(long, value_enum, default_value = "derivation")]
    weighting: WeightingArg,
    /// Replace the frontier by its upper concave hull (time sharing).
    #[arg(long)]
    hull: bool,
    /// Frontier CSV path; provenance and manifest go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    other: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
}

#[derive(Args, Debug)]
struct CornerArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    r2_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TermArg {
    Cond,
    Interference,
    Direct,
    All,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ar1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ma1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ar2: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ma2: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    term: TermArg,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [128usize, 512, 2048])]
    n_list: Vec<usize>,
    /// Also write the reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FreqArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ar: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ma: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    #[arg(long, default_value_t = gicreg::export::FREQ_RESPONSE_POINTS)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(
                Error::InvalidChannel(_)
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::DimensionMismatch(_)
                | Error::GridTooLarge(..)
                | Error::UnstableFilter,
            ) => 2,
            _ => 1,
        };
        Failure { code, err }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, err: anyhow!(msg.into()) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match &cli.cmd {
        Command::Region(a) => cmd_region(a, &cli),
        Command::Compare(a) => cmd_compare(a),
        Command::Corner(a) => cmd_corner(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::FreqResponse(a) => cmd_freq_response(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn channel_from(args: &ChannelArgs, cfg: &Config) -> Result<ChannelParams, Failure> {
    let get = |flag: Option<f64>, key: &str| -> Result<f64, Failure> {
        match flag {
            Some(v) => Ok(v),
            None => cfg.get_f64(key)?.ok_or_else(|| usage(format!("missing --{key}"))),
        }
    };
    Ok(ChannelParams::new(get(args.p1, "p1")?, get(args.p2, "p2")?, get(args.a12, "a12")?, get(args.a21, "a21")?)?)
}

fn parse_assignment(s: &str) -> Result<(&str, &str), Failure> {
    s.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| usage(format!("expected NAME=VALUE, got '{s}'")))
}

/// Parameters matched by `name`: itself if it exists, otherwise every
/// parameter it prefixes.
fn matching_params(grid: &GridSpec, name: &str) -> Result<Vec<String>, Failure> {
    if grid.names().iter().any(|n| n == name) {
        return Ok(vec![name.to_string()]);
    }
    let hits: Vec<String> = grid.names().iter().filter(|n| n.starts_with(name)).cloned().collect();
    if hits.is_empty() {
        return Err(usage(format!(
            "scheme {} has no parameter matching '{name}' (parameters: {})",
            grid.scheme(),
            grid.names().join(", ")
        )));
    }
    Ok(hits)
}

fn is_hk(s: SchemeId) -> bool {
    matches!(s, SchemeId::HkSc | SchemeId::HkSim | SchemeId::HkCorollary)
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    channel: Value,
    scheme: String,
    search: Value,
    seed: Option<u64>,
    tool_version: &'static str,
    wall_clock_seconds: f64,
    evaluations: u64,
    skipped: u64,
    points: usize,
    outputs: Vec<Value>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "frontier".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes all files or none.
fn write_all(files: &[(PathBuf, Vec<u8>)]) -> anyhow::Result<()> {
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in files {
        if let Err(e) = fs::write(path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(path);
            return Err(anyhow!(e).context(format!("writing {}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

fn cmd_region(a: &RegionArgs, cli: &Cli) -> Result<u8, Failure> {
    let started = Instant::now();
    let cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let ch = channel_from(&a.channel, &cfg)?;
    let scheme: SchemeId =
        a.scheme.as_deref().or(cfg.get("scheme")).ok_or_else(|| usage("missing --scheme"))?.parse()?;
    let step = a.step.or(cfg.get_f64("step")?).unwrap_or(UNIT_STEP);
    let open_step = a.open_step.or(cfg.get_f64("open_step")?).unwrap_or(OPEN_STEP);
    let cos_order = match a.cos_order {
        Some(m) => m,
        None => cfg.get_u64("cos_order")?.unwrap_or(1) as usize,
    };
    if !(step > 0.0 && open_step > 0.0) {
        return Err(usage("grid steps must be positive"));
    }
    let mut grid = GridSpec::with_step(scheme, cos_order, step, open_step);
    for (name, axis) in cfg.grid_axes()? {
        grid.set(&name, axis)?;
    }
    for s in &a.axis {
        let (name, spec) = parse_assignment(s)?;
        grid.set(name, spec.parse::<Axis>()?)?;
    }
    for s in &a.fix {
        let (name, v) = parse_assignment(s)?;
        let v: f64 = v.parse().map_err(|_| usage(format!("--fix {name}: not a number: '{v}'")))?;
        for n in matching_params(&grid, name)? {
            grid.fix(&n, v)?;
        }
    }

    let rule_points = match a.rule_points {
        Some(n) => n,
        None => cfg.get_u64("rule_points")?.unwrap_or(4096) as usize,
    };
    let weighting = match a.weighting {
        WeightingArg::Derivation => ModeWeighting::Derivation,
        WeightingArg::AsPrinted => ModeWeighting::AsPrinted,
    };
    let opts = SearchOptions { rule_points, weighting, ..SearchOptions::default() };
    let kind = match (a.search, cfg.get("search")) {
        (Some(k), _) => k,
        (None, Some("grid")) => SearchKind::Grid,
        (None, Some("random")) => SearchKind::Random,
        (None, Some(other)) => return Err(usage(format!("unknown search '{other}'"))),
        (None, None) if is_hk(scheme) => SearchKind::Random,
        (None, None) => SearchKind::Grid,
    };

    let (result, search, seed) = match kind {
        SearchKind::Grid => {
            let r = grid_search(&ch, &grid, &opts)?;
            let axes: serde_json::Map<String, Value> =
                grid.describe().into_iter().map(|(n, s)| (n, Value::from(s))).collect();
            (
                r,
                json!({ "kind": "grid", "axes": axes, "size": grid.size().to_string(), "rule_points": rule_points }),
                None,
            )
        }
        SearchKind::Random => {
            let budget = SearchBudget::new(
                a.budget.or(cfg.get_u64("budget")?).unwrap_or(200_000),
                a.seed.or(cfg.get_u64("seed")?).unwrap_or(0),
                a.rounds.or(cfg.get_u64("rounds")?.map(|r| r as u32)).unwrap_or(4),
            )?;
            let r = random_refine_search(&ch, &grid, &budget, None, &opts)?;
            let axes: serde_json::Map<String, Value> =
                grid.describe().into_iter().map(|(n, s)| (n, Value::from(s))).collect();
            (
                r,
                json!({ "kind": "random", "axes": axes, "budget": budget, "rule_points": rule_points }),
                Some(budget.seed),
            )
        }
    };
    let mut frontier = result.frontier;
    if let Some(n) = a.polish_points {
        frontier = polish(&ch, &frontier, n, weighting)?;
    }
    if a.hull {
        frontier = frontier.convex_hull()?;
    }
    if frontier.is_empty() {
        return Err(Error::Empty("frontier (every parameter point was skipped)").into());
    }

    let csv = frontier_csv(&frontier).into_bytes();
    let prov = to_json_string(&provenance_json(&frontier)).into_bytes();
    let prov_path = sibling(&a.out, ".provenance.json");
    let manifest_path = sibling(&a.out, ".manifest.json");
    let outputs = vec![
        json!({ "path": a.out.display().to_string(), "sha256": sha256_hex(&csv) }),
        json!({ "path": prov_path.display().to_string(), "sha256": sha256_hex(&prov) }),
    ];
    let manifest = RunManifest {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        channel: json!({ "p1": ch.p1, "p2": ch.p2, "a12": ch.a12, "a21": ch.a21 }),
        scheme: scheme.as_str().to_string(),
        search: json!({
            "method": search,
            "weighting": format!("{weighting:?}").to_lowercase(),
            "polish_points": a.polish_points,
            "hull": a.hull,
            "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
        }),
        seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        evaluations: result.evaluations,
        skipped: result.skipped,
        points: frontier.len(),
        outputs,
    };
    let manifest = to_json_string(&manifest).into_bytes();
    write_all(&[(a.out.clone(), csv), (prov_path, prov), (manifest_path, manifest)])?;
    eprintln!(
        "{}: {} frontier points from {} evaluations ({} skipped) in {:.1}s",
        scheme,
        frontier.len(),
        result.evaluations,
        result.skipped,
        started.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn read_frontier(path: &Path) -> Result<gicreg::Frontier, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure { code: 2, err: e })?;
    parse_frontier_csv(&text).map_err(|e| Failure { code: 2, err: anyhow!(e).context(path.display().to_string()) })
}

fn cmd_compare(a: &CompareArgs) -> Result<u8, Failure> {
    if !(a.slack >= 0.0) {
        return Err(usage("--slack must be non-negative"));
    }
    let base = read_frontier(&a.base)?;
    let other = read_frontier(&a.other)?;
    let dominates = other.dominates(&base, a.slack);
    let (worst, excess) = other.max_violation(&base).expect("non-empty frontier");
    println!("dominates: {}", if dominates { "yes" } else { "no" });
    println!("max_violation: {}", format_g12(excess));
    println!("at: {},{}", format_g12(worst.r1), format_g12(worst.r2));
    Ok(if dominates { 0 } else { 1 })
}

fn cmd_corner(a: &CornerArgs) -> Result<u8, Failure> {
    if !a.r2_min.is_finite() {
        return Err(usage("--r2-min must be finite"));
    }
    let f = read_frontier(&a.input)?;
    println!("{}", format_g12(f.corner_query(a.r2_min)));
    Ok(0)
}

fn cmd_oracle(a: &OracleArgs) -> Result<u8, Failure> {
    let ch = channel_from(&a.channel, &Config::default())?;
    let s1 = make_arma(&a.ar1, &a.ma1, ch.p1)?;
    let s2 = make_arma(&a.ar2, &a.ma2, ch.p2)?;
    let oracle = ToeplitzOracle::new(&ch, s1, s2)?;
    let terms: Vec<Term> = match a.term {
        TermArg::Cond => vec![Term::Cond],
        TermArg::Interference => vec![Term::Interference],
        TermArg::Direct => vec![Term::Direct],
        TermArg::All => Term::ALL.to_vec(),
    };
    let mut all_ok = true;
    let mut reports = Vec::new();
    println!("term,n,finite_rate,limit_rate,abs_error");
    for t in terms {
        let rep = oracle.convergence_report(t, &a.n_list)?;
        for r in &rep.reports {
            println!(
                "{},{},{},{},{}",
                t.as_str(),
                r.n,
                format_g12(r.finite_rate),
                format_g12(r.limit_rate),
                format_g12(r.abs_error)
            );
        }
        if !rep.converged {
            eprintln!("warning: {} term error grows with n", t.as_str());
            all_ok = false;
        }
        reports.push(rep);
    }
    if let Some(p) = &a.json {
        fs::write(p, to_json_string(&reports)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_freq_response(a: &FreqArgs) -> Result<u8, Failure> {
    if a.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let spec = make_arma(&a.ar, &a.ma, a.power)?;
    let text = frequency_response_csv(&spec, a.points);
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

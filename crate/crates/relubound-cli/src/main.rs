//! Command-line driver for the `relubound` library: output-bound
//! computation, robustness verification, radius certification, exact ranges,
//! and side-by-side method comparison on networks stored as JSON.
//!
//! Exit codes follow the verdict: 0 Robust (or plain success for
//! non-verdict commands), 1 NotRobust, 2 Unknown, 3 usage error, 4 bad
//! input file or configuration, 5 internal numeric failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use relubound::interval::ibp;
use relubound::model::{load_network, load_property, Network, PerturbationSet};
use relubound::oracle::{exact_range, ExactRange, OracleError};
use relubound::verifier::{
    bound_root, certify_epsilon, verify, BoundMethod, SplitStrategy, Status, VerifierConfig,
    VerifierError,
};
use relubound::crown::AlphaPolicy;

const EXIT_ROBUST: u8 = 0;
const EXIT_NOT_ROBUST: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

/// Probabilistic output bounds and robustness verification for ReLU networks.
#[derive(Parser)]
#[command(name = "relubound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute output bounds over the perturbation region with one method.
    Bounds(BoundsArgs),
    /// Run every method on one instance and tabulate the bounds.
    Compare(CompareArgs),
    /// Verify that the output stays positive over the perturbation region.
    Verify(VerifyArgs),
    /// Largest perturbation radius around the property center that verifies.
    Certify(CertifyArgs),
    /// Exact output range by activation-pattern enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Model JSON file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Property JSON file (`x0`, `epsilon`, optional per-coordinate `clip`).
    #[arg(long, value_name = "FILE")]
    property: PathBuf,
    /// Write the JSON report to this path.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Include wall-clock timings in reports. Off by default so that records
    /// produced with identical seeds and configurations are byte-identical.
    #[arg(long)]
    timing: bool,
    /// Worker threads for batch bounding (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct SampleArgs {
    /// Accepted samples per domain (default 10000, or 350000 under
    /// --full-scale).
    #[arg(long)]
    n: Option<usize>,
    /// Use the sample budget of the full-scale experiments (n = 350000).
    #[arg(long)]
    full_scale: bool,
    /// Per-neuron, per-side escape probability (default 0.005/m over the m
    /// hidden neurons).
    #[arg(long)]
    p: Option<f64>,
    /// Tail-size exponent: floor(n^xi) samples feed each tail fit.
    #[arg(long, default_value_t = 0.85)]
    xi: f64,
    /// RNG seed; identical seeds reproduce identical reports.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SampleArgs {
    fn resolved_n(&self) -> usize {
        self.n.unwrap_or(if self.full_scale { 350_000 } else { 10_000 })
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Subdomains bounded per branch-and-bound round.
    #[arg(long, default_value_t = 8)]
    batch: usize,
    /// Domains deeper than this are abandoned (verdict degrades to unknown).
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
    /// How undecided domains are subdivided.
    #[arg(long, value_enum, default_value_t = SplitArg::Auto)]
    split: SplitArg,
    /// Slope of the unstable-ReLU lower relaxation.
    #[arg(long, value_enum, default_value_t = AlphaArg::Zero)]
    alpha_policy: AlphaArg,
    /// Halve the per-domain sample count with depth.
    #[arg(long)]
    decay: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sample: SampleArgs,
    /// Bounding method.
    #[arg(long, value_enum, default_value_t = BoundsMethodArg::Sampled)]
    method: BoundsMethodArg,
    /// Slope of the unstable-ReLU lower relaxation.
    #[arg(long, value_enum, default_value_t = AlphaArg::Zero)]
    alpha_policy: AlphaArg,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sample: SampleArgs,
    /// Include the exact-oracle row (needs few enough unstable neurons).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
    with_oracle: bool,
    /// Refuse the oracle above this many unstable neurons.
    #[arg(long, default_value_t = 20)]
    max_unstable: usize,
    /// Slope of the unstable-ReLU lower relaxation.
    #[arg(long, value_enum, default_value_t = AlphaArg::Zero)]
    alpha_policy: AlphaArg,
    /// Also write the table as CSV to this path.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Bounding pipeline backing the verdict.
    #[arg(long, value_enum, default_value_t = VerifyMethodArg::Sampled)]
    method: VerifyMethodArg,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Bounding pipeline backing the verdicts.
    #[arg(long, value_enum, default_value_t = VerifyMethodArg::Sampled)]
    method: VerifyMethodArg,
    /// Largest radius to consider (default: the property's epsilon).
    #[arg(long)]
    eps_hi: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Refuse enumeration above this many unstable neurons.
    #[arg(long, default_value_t = 20)]
    max_unstable: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundsMethodArg {
    /// Interval propagation only.
    Ibp,
    /// Backward linear relaxation over interval rectangles.
    Crown,
    /// Sampled reachable sets with tail corrections, intersected with the
    /// deterministic bounds.
    Sampled,
}

impl BoundsMethodArg {
    fn name(self) -> &'static str {
        match self {
            BoundsMethodArg::Ibp => "ibp",
            BoundsMethodArg::Crown => "crown",
            BoundsMethodArg::Sampled => "sampled",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyMethodArg {
    Sampled,
    Crown,
}

impl VerifyMethodArg {
    fn to_method(self) -> BoundMethod {
        match self {
            VerifyMethodArg::Sampled => BoundMethod::Sampled,
            VerifyMethodArg::Crown => BoundMethod::Crown,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VerifyMethodArg::Sampled => "sampled",
            VerifyMethodArg::Crown => "crown",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Input,
    Relu,
    Auto,
}

impl SplitArg {
    fn to_strategy(self) -> SplitStrategy {
        match self {
            SplitArg::Input => SplitStrategy::Input,
            SplitArg::Relu => SplitStrategy::Relu,
            SplitArg::Auto => SplitStrategy::Auto,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphaArg {
    Zero,
    Adaptive,
}

impl AlphaArg {
    fn to_policy(self) -> AlphaPolicy {
        match self {
            AlphaArg::Zero => AlphaPolicy::Zero,
            AlphaArg::Adaptive => AlphaPolicy::Adaptive,
        }
    }

    fn name(self) -> &'static str {
        match self {
            AlphaArg::Zero => "zero",
            AlphaArg::Adaptive => "adaptive",
        }
    }
}

/// A `(code, message)` pair headed for stderr and the process exit status.
type Failure = (u8, String);

fn input_failure(msg: impl ToString) -> Failure {
    (EXIT_INPUT, msg.to_string())
}

fn verifier_failure(err: VerifierError) -> Failure {
    let code = match &err {
        VerifierError::Model(_) | VerifierError::BadConfig { .. } => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    };
    (code, err.to_string())
}

fn oracle_failure(err: OracleError) -> Failure {
    let code = match &err {
        OracleError::TooManyUnstable { .. } | OracleError::Model(_) => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    };
    (code, err.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

/// Echo of the effective configuration, embedded in every JSON report.
#[derive(Serialize)]
struct ConfigEcho {
    model: String,
    property: String,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_unstable: Option<usize>,
    workers: usize,
}

impl ConfigEcho {
    fn new(common: &CommonArgs, method: &str) -> ConfigEcho {
        ConfigEcho {
            model: common.model.display().to_string(),
            property: common.property.display().to_string(),
            method: method.to_string(),
            n: None,
            p: None,
            xi: None,
            seed: None,
            alpha_policy: None,
            split: None,
            batch: None,
            max_depth: None,
            timeout_s: None,
            eps_hi: None,
            max_unstable: None,
            workers: common.workers,
        }
    }

    fn with_samples(mut self, sample: &SampleArgs) -> ConfigEcho {
        self.n = Some(sample.resolved_n());
        self.p = sample.p;
        self.xi = Some(sample.xi);
        self.seed = Some(sample.seed);
        self
    }

    fn with_search(mut self, search: &SearchArgs) -> ConfigEcho {
        self.split = Some(format!("{:?}", search.split.to_strategy()).to_lowercase());
        self.batch = Some(search.batch);
        self.max_depth = Some(search.max_depth);
        self.timeout_s = Some(search.timeout);
        self
    }
}

#[derive(Serialize, Clone, Copy)]
struct Bounds {
    lower: f64,
    upper: f64,
}

#[derive(Serialize, Clone, Copy)]
struct Timing {
    load_ms: f64,
    compute_ms: f64,
    total_ms: f64,
}

#[derive(Serialize)]
struct RunReport {
    method: String,
    bounds: Bounds,
    confidence: f64,
    /// Interval spanned by the sampled outputs themselves (sampled method
    /// only); always inside the true output range.
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled_output: Option<Bounds>,
    config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

#[derive(Serialize)]
struct CompareRow {
    method: String,
    bounds: Bounds,
    width: f64,
    /// Backward-relaxation width divided by this method's width; above 1
    /// means tighter than the deterministic relaxation.
    tightness_vs_crown: f64,
    confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    millis: Option<f64>,
}

#[derive(Serialize)]
struct CompareReport {
    rows: Vec<CompareRow>,
    config: ConfigEcho,
}

#[derive(Serialize)]
struct VerifyReport {
    status: Status,
    confidence: f64,
    counterexample: Option<Vec<f64>>,
    stats: relubound::verifier::VerifyStats,
    config: ConfigEcho,
}

#[derive(Serialize)]
struct CertifyReport {
    certified_epsilon: f64,
    eps_hi: f64,
    /// Network output at the property center (must be positive to certify
    /// any radius at all).
    center_value: f64,
    config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

#[derive(Serialize)]
struct OracleReport {
    method: String,
    bounds: Bounds,
    confidence: f64,
    argmin: Vec<f64>,
    argmax: Vec<f64>,
    feasible_patterns: usize,
    explored_patterns: usize,
    lp_calls: usize,
    config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

fn init_workers(workers: usize) -> Result<(), Failure> {
    if workers == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| (EXIT_INTERNAL, format!("failed to build worker pool: {e}")))
}

fn load_instance(common: &CommonArgs) -> Result<(Network, PerturbationSet), Failure> {
    let net = load_network(&common.model).map_err(input_failure)?;
    let region = load_property(&common.property).map_err(input_failure)?;
    if region.dim() != net.input_dim() {
        return Err(input_failure(format!(
            "property has {} coordinates but the model expects {}",
            region.dim(),
            net.input_dim()
        )));
    }
    Ok((net, region))
}

fn write_json(path: &PathBuf, report: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| (EXIT_INTERNAL, format!("report serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| input_failure(format!("cannot write {}: {e}", path.display())))
}

fn timing(load: Duration, compute: Duration, enabled: bool) -> Option<Timing> {
    enabled.then(|| Timing {
        load_ms: load.as_secs_f64() * 1e3,
        compute_ms: compute.as_secs_f64() * 1e3,
        total_ms: (load + compute).as_secs_f64() * 1e3,
    })
}

/// Sampling-pipeline configuration shared by `bounds`, `verify`, `certify`.
fn verifier_config(sample: &SampleArgs, method: BoundMethod, alpha: AlphaArg) -> VerifierConfig {
    VerifierConfig {
        n: sample.resolved_n(),
        p: sample.p,
        xi: sample.xi,
        seed: sample.seed,
        method,
        alpha_policy: alpha.to_policy(),
        ..VerifierConfig::default()
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<u8, Failure> {
    init_workers(args.common.workers)?;
    let load_start = Instant::now();
    let (net, region) = load_instance(&args.common)?;
    let load = load_start.elapsed();

    let compute_start = Instant::now();
    let (bounds, confidence, sampled_output) = match args.method {
        BoundsMethodArg::Ibp => {
            let out = ibp(&net, &region).output().clone();
            (Bounds { lower: out.lo[0], upper: out.hi[0] }, 1.0, None)
        }
        BoundsMethodArg::Crown => {
            let cfg = verifier_config(&args.sample, BoundMethod::Crown, args.alpha_policy);
            let root = bound_root(&net, &region, &cfg).map_err(verifier_failure)?;
            (Bounds { lower: root.f_lower, upper: root.f_upper }, 1.0, None)
        }
        BoundsMethodArg::Sampled => {
            let cfg = verifier_config(&args.sample, BoundMethod::Sampled, args.alpha_policy);
            let root = bound_root(&net, &region, &cfg).map_err(verifier_failure)?;
            (
                Bounds { lower: root.f_lower, upper: root.f_upper },
                root.confidence,
                root.sampled_output.map(|(lo, hi)| Bounds { lower: lo, upper: hi }),
            )
        }
    };
    let compute = compute_start.elapsed();

    let mut config = ConfigEcho::new(&args.common, args.method.name());
    if args.method != BoundsMethodArg::Ibp {
        config.alpha_policy = Some(args.alpha_policy.name().to_string());
    }
    if args.method == BoundsMethodArg::Sampled {
        config = config.with_samples(&args.sample);
    }
    let report = RunReport {
        method: args.method.name().to_string(),
        bounds,
        confidence,
        sampled_output,
        config,
        timing: timing(load, compute, args.common.timing),
    };

    println!("method      {}", report.method);
    println!("bounds      [{:.6}, {:.6}]", bounds.lower, bounds.upper);
    println!("confidence  {:.6}", confidence);
    if let Some(s) = sampled_output {
        println!("sampled     [{:.6}, {:.6}]", s.lower, s.upper);
    }
    if let Some(t) = report.timing {
        println!("time        {:.1} ms", t.total_ms);
    }
    if let Some(path) = &args.common.json {
        write_json(path, &report)?;
    }
    Ok(EXIT_ROBUST)
}

fn cmd_compare(args: CompareArgs) -> Result<u8, Failure> {
    init_workers(args.common.workers)?;
    let (net, region) = load_instance(&args.common)?;

    let mut rows: Vec<CompareRow> = Vec::with_capacity(4);
    let mut push = |method: &str, lower: f64, upper: f64, confidence: f64, ms: f64| {
        rows.push(CompareRow {
            method: method.to_string(),
            bounds: Bounds { lower, upper },
            width: upper - lower,
            tightness_vs_crown: f64::NAN, // filled in once the crown row exists
            confidence,
            millis: args.common.timing.then_some(ms),
        });
    };

    if args.with_oracle {
        let start = Instant::now();
        let exact =
            exact_range(&net, &region, args.max_unstable).map_err(oracle_failure)?;
        push("oracle", exact.lo, exact.hi, 1.0, start.elapsed().as_secs_f64() * 1e3);
    }
    {
        let start = Instant::now();
        let out = ibp(&net, &region).output().clone();
        push("ibp", out.lo[0], out.hi[0], 1.0, start.elapsed().as_secs_f64() * 1e3);
    }
    let crown_cfg = verifier_config(&args.sample, BoundMethod::Crown, args.alpha_policy);
    {
        let start = Instant::now();
        let root = bound_root(&net, &region, &crown_cfg).map_err(verifier_failure)?;
        push("crown", root.f_lower, root.f_upper, 1.0, start.elapsed().as_secs_f64() * 1e3);
    }
    {
        let cfg = verifier_config(&args.sample, BoundMethod::Sampled, args.alpha_policy);
        let start = Instant::now();
        let root = bound_root(&net, &region, &cfg).map_err(verifier_failure)?;
        push(
            "sampled",
            root.f_lower,
            root.f_upper,
            root.confidence,
            start.elapsed().as_secs_f64() * 1e3,
        );
    }

    let crown_width = rows
        .iter()
        .find(|r| r.method == "crown")
        .map(|r| r.width)
        .expect("crown row always present");
    for row in &mut rows {
        // Equal widths (including two zero widths on point regions) are a
        // ratio of exactly 1.
        row.tightness_vs_crown = if (crown_width - row.width).abs() <= 1e-12 {
            1.0
        } else if row.width == 0.0 {
            f64::INFINITY
        } else {
            crown_width / row.width
        };
    }

    let config =
        ConfigEcho::new(&args.common, "compare").with_samples(&args.sample);
    let report = CompareReport { rows, config };

    println!(
        "{:<8} {:>14} {:>14} {:>12} {:>9} {:>11}",
        "method", "lower", "upper", "width", "vs-crown", "confidence"
    );
    for row in &report.rows {
        println!(
            "{:<8} {:>14.6} {:>14.6} {:>12.6} {:>9.3} {:>11.6}",
            row.method, row.bounds.lower, row.bounds.upper, row.width, row.tightness_vs_crown,
            row.confidence
        );
    }

    if let Some(path) = &args.common.json {
        write_json(path, &report)?;
    }
    if let Some(path) = &args.csv {
        let mut csv = String::from("method,lower,upper,width,tightness_vs_crown,confidence\n");
        for row in &report.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                row.method,
                row.bounds.lower,
                row.bounds.upper,
                row.width,
                row.tightness_vs_crown,
                row.confidence
            );
        }
        std::fs::write(path, csv)
            .map_err(|e| input_failure(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(EXIT_ROBUST)
}

fn full_verifier_config(
    sample: &SampleArgs,
    search: &SearchArgs,
    method: VerifyMethodArg,
) -> Result<VerifierConfig, Failure> {
    if !(search.timeout.is_finite() && search.timeout > 0.0) {
        return Err(input_failure(format!(
            "timeout must be positive, got {}",
            search.timeout
        )));
    }
    Ok(VerifierConfig {
        n: sample.resolved_n(),
        p: sample.p,
        xi: sample.xi,
        seed: sample.seed,
        batch: search.batch,
        timeout: Duration::from_secs_f64(search.timeout),
        max_depth: search.max_depth,
        split: search.split.to_strategy(),
        method: method.to_method(),
        alpha_policy: search.alpha_policy.to_policy(),
        decay: search.decay,
        ..VerifierConfig::default()
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, Failure> {
    init_workers(args.common.workers)?;
    let (net, region) = load_instance(&args.common)?;
    let cfg = full_verifier_config(&args.sample, &args.search, args.method)?;

    let verdict = verify(&net, &region, &cfg).map_err(verifier_failure)?;
    let mut stats = verdict.stats.clone();
    if !args.common.timing {
        stats.wall_time_ms = 0.0;
    }
    let config = ConfigEcho::new(&args.common, args.method.name())
        .with_samples(&args.sample)
        .with_search(&args.search);
    let report = VerifyReport {
        status: verdict.status,
        confidence: verdict.confidence,
        counterexample: verdict.counterexample.clone(),
        stats,
        config,
    };

    let status_word = match verdict.status {
        Status::Robust => "robust",
        Status::NotRobust => "not_robust",
        Status::Unknown => "unknown",
    };
    println!("status       {status_word}");
    println!("confidence   {:.6}", verdict.confidence);
    println!(
        "domains      {} explored, {} rounds, {} pruned, {} abandoned",
        verdict.stats.domains_explored,
        verdict.stats.resample_rounds,
        verdict.stats.pruned + verdict.stats.infeasible_pruned,
        verdict.stats.abandoned
    );
    if verdict.stats.final_lower.is_finite() {
        println!("final lower  {:.6}", verdict.stats.final_lower);
    }
    if let Some(cex) = &verdict.counterexample {
        let coords: Vec<String> = cex.iter().map(|v| format!("{v:.6}")).collect();
        println!("witness      [{}]", coords.join(", "));
    }
    if args.common.timing {
        println!("time         {:.1} ms", verdict.stats.wall_time_ms);
    }
    if let Some(path) = &args.common.json {
        write_json(path, &report)?;
    }
    Ok(match verdict.status {
        Status::Robust => EXIT_ROBUST,
        Status::NotRobust => EXIT_NOT_ROBUST,
        Status::Unknown => EXIT_UNKNOWN,
    })
}

fn cmd_certify(args: CertifyArgs) -> Result<u8, Failure> {
    init_workers(args.common.workers)?;
    let load_start = Instant::now();
    let (net, region) = load_instance(&args.common)?;
    let load = load_start.elapsed();
    let cfg = full_verifier_config(&args.sample, &args.search, args.method)?;
    let eps_hi = args.eps_hi.unwrap_or(region.epsilon);
    if !(eps_hi > 0.0 && eps_hi.is_finite()) {
        return Err(input_failure(format!(
            "eps-hi must be positive and finite, got {eps_hi}"
        )));
    }

    let center_value = net.forward(&region.x0).map_err(input_failure)?;
    let compute_start = Instant::now();
    let certified = match certify_epsilon(&net, &region.x0, &cfg, eps_hi) {
        Ok(eps) => eps,
        Err(VerifierError::PropertyFailsAtCenter { value }) => {
            eprintln!("property fails at the center point (output {value:.6}); nothing to certify");
            return Ok(EXIT_NOT_ROBUST);
        }
        Err(e) => return Err(verifier_failure(e)),
    };
    let compute = compute_start.elapsed();

    let mut config = ConfigEcho::new(&args.common, args.method.name())
        .with_samples(&args.sample)
        .with_search(&args.search);
    config.eps_hi = Some(eps_hi);
    let report = CertifyReport {
        certified_epsilon: certified,
        eps_hi,
        center_value,
        config,
        timing: timing(load, compute, args.common.timing),
    };

    println!("certified ε  {certified:.6}");
    println!("search cap   {eps_hi:.6}");
    println!("center value {center_value:.6}");
    if let Some(t) = report.timing {
        println!("time         {:.1} ms", t.total_ms);
    }
    if let Some(path) = &args.common.json {
        write_json(path, &report)?;
    }
    Ok(EXIT_ROBUST)
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, Failure> {
    let load_start = Instant::now();
    let (net, region) = load_instance(&args.common)?;
    let load = load_start.elapsed();

    let compute_start = Instant::now();
    let exact: ExactRange =
        exact_range(&net, &region, args.max_unstable).map_err(oracle_failure)?;
    let compute = compute_start.elapsed();

    let mut config = ConfigEcho::new(&args.common, "oracle");
    config.max_unstable = Some(args.max_unstable);
    let report = OracleReport {
        method: "oracle".to_string(),
        bounds: Bounds { lower: exact.lo, upper: exact.hi },
        confidence: 1.0,
        argmin: exact.argmin.clone(),
        argmax: exact.argmax.clone(),
        feasible_patterns: exact.feasible_patterns,
        explored_patterns: exact.explored_patterns,
        lp_calls: exact.lp_calls,
        config,
        timing: timing(load, compute, args.common.timing),
    };

    println!("range       [{:.6}, {:.6}]", exact.lo, exact.hi);
    let fmt = |x: &[f64]| {
        let coords: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
        format!("[{}]", coords.join(", "))
    };
    println!("argmin      {}", fmt(&exact.argmin));
    println!("argmax      {}", fmt(&exact.argmax));
    println!(
        "patterns    {} feasible of {} explored, {} LP calls",
        exact.feasible_patterns, exact.explored_patterns, exact.lp_calls
    );
    if let Some(t) = report.timing {
        println!("time        {:.1} ms", t.total_ms);
    }
    if let Some(path) = &args.common.json {
        write_json(path, &report)?;
    }
    Ok(EXIT_ROBUST)
}

//! rieszlab: file-based experiments with lattice Riesz-transform kernels.
//!
//! Every command validates its configuration, echoes it into the header of
//! each output file, and writes deterministic CSV (tables, plots) or JSON
//! (reports). Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use riesz_lattice::kernels::{build_table, j_l1_norm, Combination, Family, KernelSpec};
use riesz_lattice::lattice::LatticeFunction;
use riesz_lattice::mc::u_monte_carlo;
use riesz_lattice::multiplier::{multiplier_eval, sup_norm};
use riesz_lattice::norms::{
    burkholder_constant, choi_bounds, evaluate_ratio, lp_lower_bound_with_table,
};
use riesz_lattice::theta::{
    q_function, theta_series_fourier, theta_series_gaussian, Parity, SeriesTolerance, TimeParam,
    TorusCoordinate,
};
use riesz_lattice::ufunc::{
    load_u_cache, save_u_cache, u_value, u_value_direct, UCacheKey, DEFAULT_U_EPS,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const CACHE_ENV: &str = "RIESZLAB_CACHE_DIR";

#[derive(Parser)]
#[command(name = "rieszlab", version, about = "lattice Riesz-transform toolbox")]
struct Cli {
    /// Worker threads for internal parallelism (default: hardware concurrency)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for generated files
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    ClassicalDiscrete,
    Probabilistic,
    CorrectorJ,
    ContinuousCz,
    BaDiscrete,
    BaProbabilistic,
    BaCorrector,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::ClassicalDiscrete => Family::ClassicalDiscrete,
            FamilyArg::Probabilistic => Family::Probabilistic,
            FamilyArg::CorrectorJ => Family::CorrectorJ,
            FamilyArg::ContinuousCz => Family::ContinuousCZ,
            FamilyArg::BaDiscrete => Family::BaDiscrete,
            FamilyArg::BaProbabilistic => Family::BaProbabilistic,
            FamilyArg::BaCorrector => Family::BaCorrector,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CombinationArg {
    Single,
    Twice,
    DiagDiff,
}

impl From<CombinationArg> for Combination {
    fn from(c: CombinationArg) -> Combination {
        match c {
            CombinationArg::Single => Combination::Single,
            CombinationArg::Twice => Combination::Twice,
            CombinationArg::DiagDiff => Combination::DiagDiff,
        }
    }
}

/// Kernel selection shared by table/multiplier/norm commands.
#[derive(Args, Serialize, Clone)]
struct SpecArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Lattice dimension
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value_t = CombinationArg::Single)]
    combination: CombinationArg,
    /// Truncation radius of the kernel table
    #[arg(long, default_value_t = 40)]
    radius: i64,
    /// Quadrature tolerance for U evaluations
    #[arg(long, default_value_t = DEFAULT_U_EPS)]
    eps: f64,
}

impl SpecArgs {
    fn spec(&self) -> Result<KernelSpec, CmdError> {
        KernelSpec::new(
            self.family.into(),
            self.d,
            self.j,
            self.k,
            self.combination.into(),
        )
        .map_err(|e| CmdError::Config(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a kernel on the ball |m| <= R (CSV + summary JSON)
    KernelTable(SpecArgs),
    /// Evaluate U(m) by the reference quadrature
    U(UArgs),
    /// Evaluate U(m) by the direct (d+1)-dimensional integral
    UDirect(UArgs),
    /// Tabulate q_0(t), q_1(t) (CSV)
    Qplot(QplotArgs),
    /// Evaluate the truncated Fourier multiplier on a grid and refine its sup
    Multiplier(MultiplierArgs),
    /// Lower-bound the l^p -> l^p norm by ascent (JSON report + witness CSV)
    Norm(NormArgs),
    /// Monte-Carlo estimate of U(m) with quadrature comparison
    Mc(McArgs),
    /// Partial l^1 norm of the corrector kernel with tail bound
    #[command(name = "j-l1")]
    JL1(JL1Args),
    /// Quick internal consistency checks
    Selftest,
}

#[derive(Args, Serialize)]
struct UArgs {
    /// Lattice point, comma-separated (for example 1,0)
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    m: Vec<i64>,
    #[arg(long, default_value_t = DEFAULT_U_EPS)]
    eps: f64,
}

#[derive(Args, Serialize)]
struct QplotArgs {
    #[arg(long, default_value_t = 0.125)]
    tmin: f64,
    #[arg(long, default_value_t = 0.5)]
    tmax: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Args, Serialize)]
struct MultiplierArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    /// Golden-section refinement rounds around the grid argmax
    #[arg(long, default_value_t = 2)]
    refine: usize,
    /// Skip writing the full grid CSV (sup-norm JSON only)
    #[arg(long, default_value_t = false)]
    no_grid: bool,
}

#[derive(Args, Serialize)]
struct NormArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Half-width of the search box
    #[arg(long = "box", default_value_t = 24)]
    box_half: i64,
    #[arg(long, default_value_t = 60)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct McArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    m: Vec<i64>,
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_U_EPS)]
    eps: f64,
}

#[derive(Args, Serialize)]
struct JL1Args {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 40)]
    radius: i64,
    #[arg(long, default_value_t = DEFAULT_U_EPS)]
    eps: f64,
}

enum CmdError {
    Config(String),
    Numerical(String),
}

impl From<riesz_lattice::Error> for CmdError {
    fn from(e: riesz_lattice::Error) -> Self {
        CmdError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Numerical(format!("io: {e}"))
    }
}

fn config_header<C: Serialize>(command: &str, config: &C) -> String {
    let cfg = serde_json::to_string(config).expect("serializable config");
    format!("# rieszlab {command}\n# config {cfg}\n")
}

fn write_file(out: &PathBuf, name: &str, contents: &str) -> Result<PathBuf, CmdError> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(contents.as_bytes())?;
    Ok(path)
}

fn cache_file() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join("u_cache.txt"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(path) = cache_file() {
        if path.exists() {
            let _ = load_u_cache(&path);
        }
    }
    let result = run(&cli);
    if result.is_ok() {
        if let Some(path) = cache_file() {
            if let Some(dir) = path.parent() {
                let _ = fs::create_dir_all(dir);
            }
            let _ = save_u_cache(&path);
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    match &cli.command {
        Command::KernelTable(args) => cmd_kernel_table(&cli.out, args),
        Command::U(args) => cmd_u(&cli.out, args, false),
        Command::UDirect(args) => cmd_u(&cli.out, args, true),
        Command::Qplot(args) => cmd_qplot(&cli.out, args),
        Command::Multiplier(args) => cmd_multiplier(&cli.out, args),
        Command::Norm(args) => cmd_norm(&cli.out, args),
        Command::Mc(args) => cmd_mc(&cli.out, args),
        Command::JL1(args) => cmd_j_l1(&cli.out, args),
        Command::Selftest => cmd_selftest(),
    }
}

#[derive(Serialize)]
struct TableSummary<'a> {
    config: &'a SpecArgs,
    entries: usize,
    nonzero: usize,
    min_re: f64,
    max_re: f64,
    max_abs: f64,
    even_symmetry_residual: f64,
    tail_bound: f64,
    csv: String,
}

fn cmd_kernel_table(out: &PathBuf, args: &SpecArgs) -> Result<(), CmdError> {
    let spec = args.spec()?;
    if args.radius < 1 {
        return Err(CmdError::Config("radius must be >= 1".into()));
    }
    let table = build_table(spec, args.radius, args.eps)?;
    let entries = table.entries();
    let mut csv = config_header("kernel-table", args);
    {
        let mut buf: Vec<u8> = Vec::new();
        table.to_csv(&mut buf)?;
        csv.push_str(std::str::from_utf8(&buf).expect("ascii csv"));
    }
    let csv_path = write_file(out, "kernel_table.csv", &csv)?;

    let mut min_re = f64::INFINITY;
    let mut max_re = f64::NEG_INFINITY;
    let mut max_abs = 0.0f64;
    let mut residual = 0.0f64;
    let mut nonzero = 0usize;
    for (m, v) in &entries {
        min_re = min_re.min(v.re);
        max_re = max_re.max(v.re);
        max_abs = max_abs.max(v.norm());
        if v.norm() > 0.0 {
            nonzero += 1;
        }
        let neg: Vec<i64> = m.iter().map(|&c| -c).collect();
        residual = residual.max((v - table.get(&neg)).norm());
    }
    let summary = TableSummary {
        config: args,
        entries: entries.len(),
        nonzero,
        min_re,
        max_re,
        max_abs,
        even_symmetry_residual: residual,
        tail_bound: table.tail_bound,
        csv: csv_path.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("serializable") + "\n";
    write_file(out, "kernel_table_summary.json", &json)?;
    println!("{json}");
    if residual > 1e-12 {
        return Err(CmdError::Numerical(format!(
            "even-symmetry residual {residual:e} exceeds 1e-12"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct UReport<'a> {
    config: &'a UArgs,
    method: &'static str,
    d: usize,
    r2: i64,
    even_coordinates: usize,
    u: f64,
}

fn cmd_u(out: &PathBuf, args: &UArgs, direct: bool) -> Result<(), CmdError> {
    let d = args.m.len();
    if d < 2 {
        return Err(CmdError::Config("m must have dimension >= 2".into()));
    }
    let key = UCacheKey::from_point(&args.m).map_err(|e| CmdError::Config(e.to_string()))?;
    let (method, u) = if direct {
        ("direct", u_value_direct(&args.m, args.eps)?)
    } else {
        ("quadrature", u_value(key, d, args.eps)?)
    };
    let report = UReport {
        config: args,
        method,
        d,
        r2: key.r2,
        even_coordinates: key.e,
        u,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    let name = if direct { "u_direct.json" } else { "u.json" };
    write_file(out, name, &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_qplot(out: &PathBuf, args: &QplotArgs) -> Result<(), CmdError> {
    if !(args.tmin > 0.0) || !(args.tmax > args.tmin) || args.points < 2 {
        return Err(CmdError::Config(
            "require 0 < tmin < tmax and points >= 2".into(),
        ));
    }
    let tol = SeriesTolerance::default();
    let mut csv = config_header("qplot", args);
    csv.push_str("t,q0,q1\n");
    for i in 0..args.points {
        let t = args.tmin + (args.tmax - args.tmin) * i as f64 / (args.points - 1) as f64;
        let tp = TimeParam::new(t)?;
        let q0: f64 = q_function(Parity::Even, tp, &tol)?;
        let q1: f64 = q_function(Parity::Odd, tp, &tol)?;
        writeln!(csv, "{t:.17e},{q0:.17e},{q1:.17e}").expect("string write");
    }
    write_file(out, "qplot.csv", &csv)?;
    println!("wrote qplot.csv ({} points)", args.points);
    Ok(())
}

#[derive(Serialize)]
struct MultiplierReport<'a> {
    config: &'a MultiplierArgs,
    sup: riesz_lattice::multiplier::SupNorm,
    tail_bound: f64,
}

fn cmd_multiplier(out: &PathBuf, args: &MultiplierArgs) -> Result<(), CmdError> {
    let spec = args.spec.spec()?;
    if args.resolution < 8 {
        return Err(CmdError::Config("resolution must be >= 8".into()));
    }
    let table = build_table(spec, args.spec.radius, args.spec.eps)?;
    let grid = multiplier_eval(&table, args.resolution)?;
    if !args.no_grid {
        let mut csv = config_header("multiplier", args);
        let mut buf: Vec<u8> = Vec::new();
        grid.to_csv(&mut buf)?;
        csv.push_str(std::str::from_utf8(&buf).expect("ascii csv"));
        write_file(out, "multiplier.csv", &csv)?;
    }
    let sup = sup_norm(&grid, &table, args.refine);
    let report = MultiplierReport {
        config: args,
        sup,
        tail_bound: table.tail_bound,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_file(out, "multiplier_sup.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct NormReport<'a> {
    config: &'a NormArgs,
    estimate: riesz_lattice::norms::NormEstimate,
    burkholder: f64,
    choi_lo: f64,
    choi_hi: f64,
    witness_csv: String,
    witness_ratio: f64,
}

fn cmd_norm(out: &PathBuf, args: &NormArgs) -> Result<(), CmdError> {
    let spec = args.spec.spec()?;
    if !(args.p > 1.0) || !args.p.is_finite() {
        return Err(CmdError::Config("p must lie in (1, inf)".into()));
    }
    if args.box_half < 1 || args.iters < 1 {
        return Err(CmdError::Config("box and iters must be >= 1".into()));
    }
    let table = build_table(spec, args.spec.radius, args.spec.eps)?;
    let (estimate, witness) =
        lp_lower_bound_with_table(&table, args.p, args.box_half, args.iters, args.seed)?;
    let witness_ratio = evaluate_ratio(&table, &witness, args.p)?;
    let mut wcsv = config_header("norm witness", args);
    {
        let mut buf: Vec<u8> = Vec::new();
        witness.to_csv(&mut buf)?;
        wcsv.push_str(std::str::from_utf8(&buf).expect("ascii csv"));
    }
    let wpath = write_file(out, "norm_witness.csv", &wcsv)?;
    let (choi_lo, choi_hi) = choi_bounds(args.p).map_err(|e| CmdError::Config(e.to_string()))?;
    let report = NormReport {
        config: args,
        estimate,
        burkholder: burkholder_constant(args.p).map_err(|e| CmdError::Config(e.to_string()))?,
        choi_lo,
        choi_hi,
        witness_csv: wpath.display().to_string(),
        witness_ratio,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_file(out, "norm.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct McCombinedReport<'a> {
    config: &'a McArgs,
    mc: riesz_lattice::mc::MCReport,
    quadrature: f64,
    difference: f64,
    three_sigma: f64,
    agrees_at_three_sigma: bool,
}

fn cmd_mc(out: &PathBuf, args: &McArgs) -> Result<(), CmdError> {
    if args.m.len() < 2 {
        return Err(CmdError::Config("m must have dimension >= 2".into()));
    }
    if args.n < 1000 {
        return Err(CmdError::Config("n must be >= 1000".into()));
    }
    let key = UCacheKey::from_point(&args.m).map_err(|e| CmdError::Config(e.to_string()))?;
    let mc = u_monte_carlo(&args.m, args.n, args.seed)?;
    let quadrature = u_value(key, args.m.len(), args.eps)?;
    let difference = mc.mean - quadrature;
    let three_sigma = 3.0 * mc.stderr;
    let report = McCombinedReport {
        config: args,
        agrees_at_three_sigma: difference.abs() <= three_sigma,
        mc,
        quadrature,
        difference,
        three_sigma,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_file(out, "mc.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct JL1Report<'a> {
    config: &'a JL1Args,
    partial: f64,
    tail_bound: f64,
}

fn cmd_j_l1(out: &PathBuf, args: &JL1Args) -> Result<(), CmdError> {
    if args.d < 2 {
        return Err(CmdError::Config("d must be >= 2".into()));
    }
    let (partial, tail_bound) = j_l1_norm(args.j, args.k, args.d, args.radius, args.eps)?;
    let report = JL1Report {
        config: args,
        partial,
        tail_bound,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_file(out, "j_l1.json", &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_selftest() -> Result<(), CmdError> {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("ok   {name} ({detail})");
        } else {
            println!("FAIL {name} ({detail})");
            failures += 1;
        }
    };

    let tol = SeriesTolerance::default();
    let x = TorusCoordinate::new(0.3f64);
    let t = TimeParam::new(0.1592)?;
    let a: f64 = theta_series_fourier(x, t, &tol)?;
    let b: f64 = theta_series_gaussian(x, t, &tol)?;
    check(
        "theta dual representation",
        (a - b).abs() < 1e-10,
        format!("|diff| = {:.3e}", (a - b).abs()),
    );

    let key = UCacheKey::from_point(&[1, 0]).expect("nonzero");
    let uq = u_value(key, 2, DEFAULT_U_EPS)?;
    let ud = u_value_direct(&[1, 0], DEFAULT_U_EPS)?;
    check(
        "U quadrature vs direct",
        (uq - ud).abs() < 1e-5,
        format!("{uq:.8} vs {ud:.8}"),
    );

    let mc = u_monte_carlo(&[1, 0], 50_000, 12345)?;
    check(
        "U quadrature vs Monte Carlo",
        (mc.mean - uq).abs() <= 4.0 * mc.stderr,
        format!("{:.5} vs {uq:.5}, stderr {:.1e}", mc.mean, mc.stderr),
    );

    let spec = KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 2, Combination::Single)
        .map_err(|e| CmdError::Numerical(e.to_string()))?;
    let mut table = build_table(spec, 1, DEFAULT_U_EPS)?;
    table.set_value(&[0, 0], Complex64::new(1.0, 0.0));
    let (est, _) = lp_lower_bound_with_table(&table, 2.0, 4, 20, 7)?;
    check(
        "delta kernel norm estimate",
        (est.value - 1.0).abs() < 1e-9,
        format!("estimate {:.12}", est.value),
    );

    let f = LatticeFunction::delta(vec![2, 2]).map_err(|e| CmdError::Numerical(e.to_string()))?;
    check(
        "delta l^p norms",
        (f.lp_norm(2.0).map_err(|e| CmdError::Numerical(e.to_string()))? - 1.0).abs() < 1e-15,
        "l^2 of delta".into(),
    );

    if failures > 0 {
        Err(CmdError::Numerical(format!("{failures} selftest failure(s)")))
    } else {
        println!("selftest passed");
        Ok(())
    }
}

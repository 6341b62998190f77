//! `eigenbound`: bound tables, curve checks, balancing and discrete spectra.

mod checks;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eigenbound::balance::{self, BalanceOptions, MeasureSpec};
use eigenbound::bounds;
use eigenbound::curve::{builtin, CurveAtlas};
use eigenbound::io::CurveFile;
use eigenbound::quad::QuadratureGrid;
use eigenbound::spectral::{self, VerifyOptions};
use serde_json::{json, Value};

const SCHEMA: u32 = 1;
const THREADS_VAR: &str = "EIGENBOUND_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "eigenbound",
    version,
    about = "First-eigenvalue bounds from holomorphic curves"
)]
struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the genus bound against the Yang-Yau baseline.
    Bounds(BoundsArgs),
    /// Check the integral identities and balancing on one curve.
    VerifyCurve(VerifyArgs),
    /// Balance the center of mass of a curve.
    Balance(BalanceArgs),
    /// Discrete first eigenvalue times area.
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Limit of bound/g along the degree schedule.
    Asymptotic(AsymptoticArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CurveSource {
    /// Curve description file (JSON).
    #[arg(long, conflicts_with = "builtin")]
    curve: Option<PathBuf>,
    /// Name of a built-in test curve.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Gauss-Legendre nodes in the radial direction.
    #[arg(long, default_value_t = eigenbound::quad::DEFAULT_RADIAL_ORDER)]
    radial_order: usize,
    /// Trapezoid nodes in the angular direction.
    #[arg(long, default_value_t = eigenbound::quad::DEFAULT_ANGULAR_ORDER)]
    angular_order: usize,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, default_value_t = 3)]
    g_min: usize,
    #[arg(long, default_value_t = 100)]
    g_max: usize,
    /// Largest projective dimension scanned; defaults to a genus-dependent cap.
    #[arg(long)]
    n_max: Option<usize>,
    /// Degrees scanned above the Brill-Noether minimum.
    #[arg(long, default_value_t = bounds::DEFAULT_D_SPAN)]
    d_span: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    source: CurveSource,
    #[command(flatten)]
    grid: GridArgs,
    /// Weight used for the balancing check.
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = balance::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct BalanceArgs {
    #[command(flatten)]
    source: CurveSource,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = balance::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = balance::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Subcommand, Debug)]
enum SpectralCommand {
    /// Unit icosphere at a subdivision level.
    Sphere {
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
    /// Flat torus R²/(Z b1 + Z b2).
    Torus {
        /// Lattice basis as `x1,y1,x2,y2`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0, 0.5, 0.75f64.sqrt()])]
        basis: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Induced metric of a curve against the bound.
    Curve {
        #[command(flatten)]
        source: CurveSource,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
}

#[derive(Args, Debug)]
struct AsymptoticArgs {
    /// Genera at which to tabulate bound/g along the schedule.
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<usize>,
}

/// Non-success outcomes with their exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<eigenbound::Error> for Failure {
    fn from(e: eigenbound::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

macro_rules! lib_err {
    ($e:expr) => {
        $e.map_err(|e| Failure::from(eigenbound::Error::from(e)))
    };
}

struct Output {
    text: String,
    passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli.command)).and_then(|out| {
        emit(cli.output.as_ref(), &out.text)?;
        Ok(out.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: &Command) -> Result<Output, Failure> {
    match command {
        Command::Bounds(args) => run_bounds(args),
        Command::VerifyCurve(args) => run_verify(args),
        Command::Balance(args) => run_balance(args),
        Command::Spectral(cmd) => run_spectral(cmd),
        Command::Asymptotic(args) => run_asymptotic(args),
    }
}

fn load_curve(source: &CurveSource) -> Result<CurveAtlas, Failure> {
    match (&source.curve, &source.builtin) {
        (Some(path), None) => {
            if !path.exists() {
                return Err(Failure::Usage(format!("curve file {} does not exist", path.display())));
            }
            let file = lib_err!(CurveFile::load(path))?;
            lib_err!(file.to_atlas())
        }
        (None, Some(name)) => builtin::by_name(name).ok_or_else(|| {
            Failure::Usage(format!(
                "unknown built-in curve {name:?}; known: {}",
                builtin::NAMES.join(", ")
            ))
        }),
        _ => Err(Failure::Usage("exactly one of --curve or --builtin is required".into())),
    }
}

fn make_grid(args: &GridArgs) -> Result<QuadratureGrid, Failure> {
    QuadratureGrid::new(args.radial_order, args.angular_order).map_err(|e| Failure::Usage(format!("quad: {e}")))
}

fn positive_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("tolerance must be positive, got {tol}")))
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn run_bounds(args: &BoundsArgs) -> Result<Output, Failure> {
    if args.g_min > args.g_max {
        return Err(Failure::Usage(format!(
            "--g-min {} exceeds --g-max {}",
            args.g_min, args.g_max
        )));
    }
    let rows = (args.g_min..=args.g_max)
        .map(|g| {
            let n_max = args.n_max.unwrap_or_else(|| bounds::default_n_max(g));
            lib_err!(bounds::lambda1_bound(g, n_max, args.d_span))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let text = match args.format {
        Format::Csv => {
            let mut s = format!("# eigenbound bounds schema {SCHEMA}\n");
            s.push_str(
                "g,n_star,d_star,a_star,bound,bound_over_pi,yang_yau,yang_yau_over_pi,ratio_to_g,improves,symbolic\n",
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.15e},{:.15e},{:.12},{:.15e},{:.12},{:.15e},{},{}",
                    r.g,
                    r.n_star,
                    r.d_star,
                    r.a_star,
                    r.value,
                    r.value_over_pi(),
                    r.baseline_yy,
                    r.baseline_yy / std::f64::consts::PI,
                    r.value / r.g as f64,
                    r.improves_yang_yau(),
                    r.symbolic.as_deref().unwrap_or("")
                );
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "bounds",
            "rows": rows.iter().map(|r| json!({
                "g": r.g,
                "n_star": r.n_star,
                "d_star": r.d_star,
                "a_star": r.a_star,
                "bound": r.value,
                "bound_over_pi": r.value_over_pi(),
                "yang_yau": r.baseline_yy,
                "yang_yau_over_pi": r.baseline_yy / std::f64::consts::PI,
                "ratio_to_g": r.value / r.g as f64,
                "improves": r.improves_yang_yau(),
                "symbolic": r.symbolic,
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Output::ok(text))
}

fn run_verify(args: &VerifyArgs) -> Result<Output, Failure> {
    positive_tol(args.tol)?;
    let atlas = load_curve(&args.source)?;
    let grid = make_grid(&args.grid)?;
    let results = checks::run_all(&atlas, &grid, args.a, args.tol)?;
    let passed = results.iter().all(|c| c.passed);
    let text = match args.format {
        Format::Csv => {
            let mut s = format!("# eigenbound verify-curve schema {SCHEMA}\n");
            s.push_str("status,check,measured,expected,error,tol\n");
            for c in &results {
                let _ = writeln!(
                    s,
                    "{},{},{:.15e},{:.15e},{:.3e},{:.1e}",
                    c.status(),
                    c.name,
                    c.measured,
                    c.expected,
                    c.error,
                    c.tol
                );
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "verify-curve",
            "curve": atlas.name,
            "n": atlas.n(),
            "degree": atlas.degree(),
            "branching": atlas.total_branching(),
            "passed": passed,
            "checks": results.iter().map(|c| json!({
                "name": c.name,
                "status": c.status(),
                "measured": c.measured,
                "expected": c.expected,
                "error": c.error,
                "tol": c.tol,
            })).collect::<Vec<_>>(),
        })),
    };
    for c in results.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAIL {}: measured {:.12e}, expected {:.12e} (error {:.3e}, tol {:.1e})",
            c.name, c.measured, c.expected, c.error, c.tol
        );
    }
    Ok(Output { text, passed })
}

fn run_balance(args: &BalanceArgs) -> Result<Output, Failure> {
    positive_tol(args.tol)?;
    let atlas = load_curve(&args.source)?;
    let opts = BalanceOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        grid: make_grid(&args.grid)?,
    };
    let res = lib_err!(balance::balance_with(&atlas, &MeasureSpec::induced(), args.a, &opts))?;
    let m = res.p.matrix();
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    let text = to_json(&json!({
        "schema": SCHEMA,
        "command": "balance",
        "curve": atlas.name,
        "a": args.a,
        "tol": args.tol,
        "converged": res.converged,
        "residual": res.residual,
        "iterations": res.iterations,
        "eigenvalues": res.p.eigenvalues(),
        "p": rows,
    }));
    if !res.converged {
        eprintln!(
            "FAIL balance: residual {:.3e}, expected < {:.1e}",
            res.residual, args.tol
        );
    }
    Ok(Output {
        text,
        passed: res.converged,
    })
}

fn run_spectral(cmd: &SpectralCommand) -> Result<Output, Failure> {
    match cmd {
        SpectralCommand::Sphere { level } => {
            if *level > spectral::MAX_ICOSPHERE_LEVEL {
                return Err(Failure::Usage(format!(
                    "--level must be at most {}",
                    spectral::MAX_ICOSPHERE_LEVEL
                )));
            }
            let mesh = lib_err!(spectral::build_icosphere(*level))?;
            let report = lib_err!(spectral::lambda1_area(&mesh))?;
            let reference = 8.0 * std::f64::consts::PI;
            Ok(Output::ok(to_json(&json!({
                "schema": SCHEMA,
                "command": "spectral sphere",
                "level": level,
                "reference": reference,
                "rel_err": (report.product - reference).abs() / reference,
                "spectrum": report,
            }))))
        }
        SpectralCommand::Torus { basis, grid } => {
            if basis.len() != 4 {
                return Err(Failure::Usage(format!("--basis needs 4 numbers, got {}", basis.len())));
            }
            let b1 = [basis[0], basis[1]];
            let b2 = [basis[2], basis[3]];
            if *grid < spectral::MIN_TORUS_GRID {
                return Err(Failure::Usage(format!(
                    "--grid must be at least {}",
                    spectral::MIN_TORUS_GRID
                )));
            }
            let mesh = lib_err!(spectral::build_flat_torus(b1, b2, *grid))?;
            let report = lib_err!(spectral::lambda1_area(&mesh))?;
            let area = (b1[0] * b2[1] - b1[1] * b2[0]).abs();
            let reference = spectral::flat_torus_lambda1(b1, b2) * area;
            Ok(Output::ok(to_json(&json!({
                "schema": SCHEMA,
                "command": "spectral torus",
                "basis": basis,
                "grid": grid,
                "reference": reference,
                "rel_err": (report.product - reference).abs() / reference,
                "spectrum": report,
            }))))
        }
        SpectralCommand::Curve { source, a, level } => {
            let atlas = load_curve(source)?;
            let report = lib_err!(spectral::verify_bound_on_curve_with(
                &atlas,
                *a,
                *level,
                &VerifyOptions::default()
            ))?;
            if !report.holds {
                eprintln!(
                    "FAIL bound: lambda1*area {:.12e} exceeds {:.12e} * (1 + {})",
                    report.spectrum.product, report.bound_at_a, report.margin
                );
            }
            let passed = report.holds;
            Ok(Output {
                text: to_json(&json!({
                    "schema": SCHEMA,
                    "command": "spectral curve",
                    "report": report,
                })),
                passed,
            })
        }
    }
}

fn run_asymptotic(args: &AsymptoticArgs) -> Result<Output, Failure> {
    let min = bounds::minimize_asymptotic_g();
    let pi = std::f64::consts::PI;
    let schedule = lib_err!(bounds::asymptotic_convergence_table(&args.schedule))?;
    Ok(Output::ok(to_json(&json!({
        "schema": SCHEMA,
        "command": "asymptotic",
        "a_min": min.a_min,
        "a_numeric": min.a_numeric,
        "limit": min.value,
        "limit_over_pi": min.value / pi,
        "g_at_zero_over_pi": bounds::asymptotic_g(0.0) / pi,
        "schedule": schedule.iter().map(|r| json!({
            "g": r.g,
            "n": r.n,
            "d": r.d,
            "bound": r.bound,
            "ratio_over_pi": r.ratio / pi,
        })).collect::<Vec<_>>(),
    }))))
}

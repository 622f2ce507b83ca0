//! `kk`: tables and verification reports for weighted Bergman kernels.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr.
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numerical error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kepler_core::hankel::{general_moment_family, HankelSpectrum};
use kepler_core::kernels::{
    exa_closed, kernel_alpha_weight_closed, kernel_ball_closed, kernel_series, kernel_tyz_closed,
    tyz_fit_b1, tyz_residual_with, KernelSpec, TyzMode,
};
use kepler_core::measures::{Backend, MomentSequence, Parity, PhiProfile, RadialMeasureFamily};
use kepler_core::mittag_leffler::b1_closed;
use kepler_core::report::{Cell, Check, Report};
use kepler_core::verify::{self, Suite, VerifyConfig};
use kepler_core::Error;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

#[derive(Parser, Debug)]
#[command(
    name = "kk",
    version,
    about = "Weighted Bergman kernels on the Kepler manifold and the minimal ball"
)]
struct Cli {
    /// Seed for every stochastic check.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for independent grid points.
    #[arg(long, global = true, env = "KK_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moment table q_k, ln q_k, optionally against quadrature.
    Moments(MomentsArgs),
    /// Kernel values from the series and, optionally, the closed form.
    Kernel(KernelArgs),
    /// Large-parameter expansion residuals and the fitted first correction.
    Tyz(TyzArgs),
    /// Schatten-class verdicts for the Hankel operator.
    Schatten(SchattenArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyKind {
    BergmanBeta,
    PowerExp,
    PhiRadial,
    Tabulated,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PhiKind {
    Jacobi,
    Exponential,
    StretchedExp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ParityArg {
    All,
    Even,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::BergmanBeta)]
    family: FamilyKind,
    /// Complex dimension of the cone.
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Radial profile for phi-radial.
    #[arg(long, value_enum, default_value_t = PhiKind::Jacobi)]
    phi: PhiKind,
    /// Moments for tabulated, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Vec<f64>,
    /// Which moments the tabulated values are.
    #[arg(long, value_enum, default_value_t = ParityArg::All)]
    parity: ParityArg,
    /// Support radius for tabulated.
    #[arg(long, default_value_t = f64::INFINITY)]
    support: f64,
}

impl FamilyArgs {
    fn phi(&self) -> PhiProfile {
        match self.phi {
            PhiKind::Jacobi => PhiProfile::Jacobi { m: self.m },
            PhiKind::Exponential => PhiProfile::Exponential { c: self.c },
            PhiKind::StretchedExp => PhiProfile::StretchedExp {
                s: self.s,
                m: self.m,
            },
        }
    }

    fn build(&self) -> Result<RadialMeasureFamily, Error> {
        match self.family {
            FamilyKind::BergmanBeta => RadialMeasureFamily::bergman_beta(self.n, self.s),
            FamilyKind::PowerExp => RadialMeasureFamily::power_exp(self.c, self.m, self.n, self.s),
            FamilyKind::PhiRadial => RadialMeasureFamily::phi_radial(self.n, self.phi()),
            FamilyKind::Tabulated => {
                let parity = match self.parity {
                    ParityArg::All => Parity::All,
                    ParityArg::Even => Parity::EvenOnly,
                };
                RadialMeasureFamily::tabulated(self.support, self.values.clone(), parity)
            }
        }
    }

    fn params(&self, map: &mut Map<String, Value>) {
        let family = self
            .family
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default();
        map.insert("family".into(), json!(family));
        map.insert("n".into(), json!(self.n));
        match self.family {
            FamilyKind::BergmanBeta => {
                map.insert("s".into(), json!(self.s));
            }
            FamilyKind::PowerExp => {
                map.insert("c".into(), json!(self.c));
                map.insert("m".into(), json!(self.m));
                map.insert("s".into(), json!(self.s));
            }
            FamilyKind::PhiRadial => {
                let phi = self
                    .phi
                    .to_possible_value()
                    .map(|v| v.get_name().to_string())
                    .unwrap_or_default();
                map.insert("phi".into(), json!(phi));
                map.insert("profile".into(), self.phi().describe());
            }
            FamilyKind::Tabulated => {
                map.insert("values".into(), json!(self.values));
            }
        }
    }

    /// Closed form of the kernel for this family, when one exists.
    fn closed(&self, t: Complex64) -> Option<Result<Complex64, Error>> {
        let n = self.n;
        match (self.family, self.phi) {
            (FamilyKind::BergmanBeta, _) => Some(kernel_ball_closed(n, self.s, t)),
            (FamilyKind::PowerExp, _) => Some(kernel_tyz_closed(n, self.m, self.c, self.s, t)),
            (FamilyKind::PhiRadial, PhiKind::Jacobi) => Some(exa_closed(n, self.m, t)),
            (FamilyKind::PhiRadial, PhiKind::Exponential) => {
                Some(kernel_alpha_weight_closed(n, 1.0, self.c, t))
            }
            (FamilyKind::PhiRadial, PhiKind::StretchedExp) => {
                Some(kernel_alpha_weight_closed(n, self.m, self.s, t))
            }
            (FamilyKind::Tabulated, _) => None,
        }
    }
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 10)]
    kmax: usize,
    /// Add the quadrature oracle column and check it to 1e-9.
    #[arg(long)]
    check_quadrature: bool,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Evaluation points, comma separated; complex values as a+bi.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_negative_numbers = true)]
    t: Vec<Complex64>,
    /// Number of equally spaced real points on (0, tmax].
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    tmax: f64,
    /// Evaluate the closed form and report the relative error.
    #[arg(long)]
    compare_closed: bool,
    /// Relative error accepted by --compare-closed.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Series,
}

#[derive(Args, Debug)]
struct TyzArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// |z|.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [625.0, 1250.0, 2500.0, 5000.0, 10000.0])]
    s_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct SchattenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Weight exponent m of the Hankel symbol.
    #[arg(long = "hankel-m", default_value_t = 1)]
    hankel_m: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Truncation L.
    #[arg(long = "L", default_value_t = 1_000_000)]
    l_max: u64,
    /// Use the model moments q_2k = a (k+1)^r (1 + b/(k+1)) instead of --family.
    #[arg(long, num_args = 3, value_names = ["A", "B", "R"], allow_negative_numbers = true)]
    model: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = Suite::NAMES)]
    suite: String,
    /// Monte Carlo samples per geometry check.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Truncation L for the Schatten scans.
    #[arg(long = "schatten-L", default_value_t = 1_000_000)]
    schatten_l: u64,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim().replace(' ', "");
    if let Ok(x) = s.parse::<f64>() {
        return Ok(Complex64::new(x, 0.0));
    }
    let body = s
        .strip_suffix('i')
        .ok_or_else(|| format!("cannot parse '{s}' as a number"))?;
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re
        .parse()
        .map_err(|_| format!("cannot parse '{s}' as a complex number"))?;
    let im: f64 = im
        .parse()
        .map_err(|_| format!("cannot parse '{s}' as a complex number"))?;
    Ok(Complex64::new(re, im))
}

enum Failure {
    Usage(String),
    Numerical(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::LengthMismatch(..) | Error::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numerical(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<Report, Failure>;

fn base_params(cli: &Cli) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("seed".into(), json!(cli.seed));
    m
}

fn cmd_moments(cli: &Cli, a: &MomentsArgs) -> Outcome {
    let mut params = base_params(cli);
    a.family.params(&mut params);
    params.insert("kmax".into(), json!(a.kmax));
    params.insert("check_quadrature".into(), json!(a.check_quadrature));
    let family = a.family.build()?;
    let seq = match family {
        RadialMeasureFamily::Tabulated { .. } => {
            MomentSequence::with_backend(family, Backend::Exact)
        }
        f => MomentSequence::new(f),
    };
    let oracle_tol = a.check_quadrature.then_some(1e-12);
    let rows = seq.table(a.kmax, oracle_tol)?;
    let mut cols = vec!["k", "q_k", "log_q_k"];
    if a.check_quadrature {
        cols.extend(["quadrature_q_k", "rel_diff"]);
    }
    let mut report = Report::new("moments", params, &cols);
    let opt = |x: Option<f64>| Cell::Float(x.unwrap_or(f64::NAN));
    let mut worst: f64 = 0.0;
    for r in &rows {
        let mut row = vec![Cell::from(r.k), opt(r.q_k), Cell::Float(r.log_q_k)];
        if a.check_quadrature {
            row.extend([opt(r.quadrature_q_k), opt(r.rel_diff)]);
            worst = worst.max(r.rel_diff.unwrap_or(f64::INFINITY));
        }
        report.push_row(row);
    }
    if a.check_quadrature {
        report.push_check(Check::at_most(
            "moments",
            "exact_vs_quadrature",
            worst,
            1e-9,
        ));
    }
    Ok(report)
}

fn cmd_kernel(cli: &Cli, a: &KernelArgs, pool: &rayon::ThreadPool) -> Outcome {
    let mut params = base_params(cli);
    a.family.params(&mut params);
    let mut points = a.t.clone();
    if let Some(k) = a.points {
        if k == 0 {
            return Err(Failure::Usage("--points must be positive".into()));
        }
        points.extend((1..=k).map(|i| Complex64::new(a.tmax * i as f64 / k as f64, 0.0)));
    }
    if points.is_empty() {
        return Err(Failure::Usage("give --t or --points".into()));
    }
    if a.compare_closed && a.family.closed(Complex64::new(0.0, 0.0)).is_none() {
        return Err(Failure::Usage(
            "the tabulated family has no closed form".into(),
        ));
    }
    params.insert(
        "t".into(),
        json!(points.iter().map(|t| vec![t.re, t.im]).collect::<Vec<_>>()),
    );
    params.insert("compare_closed".into(), json!(a.compare_closed));
    let spec = KernelSpec::with_dimension(a.family.n, MomentSequence::new(a.family.build()?))?;

    let results: Vec<Result<(Complex64, Option<Complex64>), Error>> = pool.install(|| {
        points
            .par_iter()
            .map(|&t| {
                let series = kernel_series(&spec, t, 1e-16)?;
                let closed = if a.compare_closed {
                    a.family.closed(t).transpose()?
                } else {
                    None
                };
                Ok((series, closed))
            })
            .collect()
    });

    let mut cols = vec!["t_re", "t_im", "series_re", "series_im"];
    if a.compare_closed {
        cols.extend(["closed_re", "closed_im", "rel_err"]);
    }
    let mut report = Report::new("kernel", params, &cols);
    let mut worst: f64 = 0.0;
    for (t, res) in points.iter().zip(results) {
        let (series, closed) = res?;
        let mut row: Vec<Cell> = vec![t.re.into(), t.im.into(), series.re.into(), series.im.into()];
        if let Some(c) = closed {
            let err = if c == series {
                0.0
            } else {
                (c - series).norm() / c.norm()
            };
            worst = worst.max(err);
            row.extend([c.re.into(), c.im.into(), err.into()]);
        }
        report.push_row(row);
    }
    if a.compare_closed {
        report.push_check(Check::at_most("kernel", "closed_vs_series", worst, a.tol));
    }
    Ok(report)
}

fn cmd_tyz(cli: &Cli, a: &TyzArgs, pool: &rayon::ThreadPool) -> Outcome {
    let mut params = base_params(cli);
    params.insert("n".into(), json!(a.n));
    params.insert("m".into(), json!(a.m));
    params.insert("c".into(), json!(a.c));
    params.insert("r".into(), json!(a.r));
    params.insert("s_grid".into(), json!(a.s_grid));
    let mode = match a.mode {
        ModeArg::Auto => TyzMode::Auto,
        ModeArg::Series => TyzMode::Series,
    };
    params.insert(
        "mode".into(),
        json!(if mode == TyzMode::Auto {
            "auto"
        } else {
            "series"
        }),
    );
    let rows: Vec<_> = pool.install(|| {
        a.s_grid
            .par_iter()
            .map(|&s| tyz_residual_with(mode, a.n, a.m, a.c, s, a.r))
            .collect()
    });

    let partial_names: Vec<String> = (0..a.n).map(|k| format!("partial_{k}")).collect();
    let mut cols = vec!["s", "lhs", "leading"];
    cols.extend(partial_names.iter().map(String::as_str));
    cols.extend(["residual", "branch"]);
    let mut report = Report::new("tyz", params, &cols);
    for row in rows {
        let row = row?;
        let mut cells: Vec<Cell> = vec![row.s.into(), row.lhs.into(), row.leading.into()];
        cells.extend(row.partial_sums.iter().map(|&v| Cell::from(v)));
        cells.push(row.residual.into());
        cells.push(format!("{:?}", row.branch).to_lowercase().into());
        report.push_row(cells);
    }
    if a.s_grid.len() >= 2 {
        let fit = tyz_fit_b1(a.n, a.m, a.c, a.r, &a.s_grid)?;
        let want = b1_closed(a.n, a.m);
        let pass = (fit.estimate - want).abs() <= 0.01 * want.abs().max(1.0);
        report.push_check(Check::new(
            "tyz",
            "fitted_b1",
            fit.estimate,
            want,
            0.01,
            pass,
            format!("extrapolation spread {:.3e}", fit.error_estimate),
        ));
    }
    Ok(report)
}

fn cmd_schatten(cli: &Cli, a: &SchattenArgs) -> Outcome {
    let mut params = base_params(cli);
    let n = a.family.n;
    let family = match &a.model {
        Some(v) => {
            params.insert("model".into(), json!({"a": v[0], "b": v[1], "r": v[2]}));
            params.insert("n".into(), json!(n));
            let len = (2 * a.l_max + a.hankel_m as u64 + 2) as usize;
            general_moment_family(v[0], v[1], v[2], len)?
        }
        None => {
            a.family.params(&mut params);
            a.family.build()?
        }
    };
    params.insert("hankel_m".into(), json!(a.hankel_m));
    params.insert("p".into(), json!(a.p));
    params.insert("L".into(), json!(a.l_max));
    let spectrum = HankelSpectrum::new(n, a.hankel_m, MomentSequence::new(family))?;
    let rows = spectrum.cutoff_scan(&a.p, a.l_max)?;
    let mut report = Report::new(
        "schatten",
        params,
        &[
            "p",
            "L",
            "S_L",
            "growth_ratio",
            "term_exponent",
            "tail_estimate",
            "increment_L/100",
            "increment_L/10",
            "increment_L",
            "verdict",
        ],
    );
    for r in rows {
        let [i0, i1, i2] = r.doubling_increments;
        report.push_row(vec![
            r.p.into(),
            r.l_max.into(),
            r.partial_sum.into(),
            r.growth_ratio.into(),
            r.term_exponent.into(),
            r.tail_estimate.into(),
            i0.into(),
            i1.into(),
            i2.into(),
            r.verdict.letter().into(),
        ]);
    }
    Ok(report)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, pool: &rayon::ThreadPool) -> Outcome {
    let suite: Suite = a.suite.parse()?;
    if a.samples < 10_000 {
        return Err(Failure::Usage("--samples must be at least 10000".into()));
    }
    let mut params = base_params(cli);
    params.insert("suite".into(), json!(suite.name()));
    params.insert("samples".into(), json!(a.samples));
    params.insert("schatten_L".into(), json!(a.schatten_l));
    let cfg = VerifyConfig {
        seed: cli.seed,
        samples: a.samples,
        schatten_l: a.schatten_l,
    };
    let tasks = verify::tasks(suite, &cfg);
    let results: Vec<Vec<Check>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let start = Instant::now();
                let checks = task.run();
                eprintln!(
                    "[{}] {} ({:.2} s)",
                    task.suite,
                    task.label,
                    start.elapsed().as_secs_f64()
                );
                checks
            })
            .collect()
    });
    let mut report = Report::new("verify", params, &["suite", "check", "pass"]);
    for check in results.into_iter().flatten() {
        report.push_row(vec![
            check.suite.clone().into(),
            check.name.clone().into(),
            (if check.pass { "pass" } else { "FAIL" }).into(),
        ]);
        report.push_check(check);
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    eprintln!("{} checks, {} failed", report.checks.len(), failed);
    Ok(report)
}

fn write_report(cli: &Cli, report: &Report) -> io::Result<()> {
    let sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match cli.format {
        Format::Csv => report.write_csv(&mut w)?,
        Format::Json => report.write_json(&mut w)?,
    }
    w.flush()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Moments(a) => cmd_moments(&cli, a),
        Command::Kernel(a) => cmd_kernel(&cli, a, &pool),
        Command::Tyz(a) => cmd_tyz(&cli, a, &pool),
        Command::Schatten(a) => cmd_schatten(&cli, a),
        Command::Verify(a) => cmd_verify(&cli, a, &pool),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical error: {e}");
            return ExitCode::from(3);
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = write_report(&cli, &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(3);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

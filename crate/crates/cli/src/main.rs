//! `klab`: command-line front end for the Kloosterman laboratory.
//!
//! Exit codes: 0 success, 1 a verification reported `pass = false`,
//! 2 usage or input error, 3 numerical or resource failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use klab::arith::SpfTable;
use klab::bounds::{
    cor2_rhs, dyadic_rhs, kuznetsov_classic_rhs, thm1_rhs, thm2_rhs, weil_partial_rhs,
    BoundReport, BoundTerm, DyadicVariant, ThetaParam, Thm2Variant,
};
use klab::harness::{
    calibrate_sharp_smooth, config_digest, dyadic_checkpoints, log_checkpoints,
    sharp_vs_smooth_check, sweep_partial_sums, verify_oracle_equivalence,
    verify_transform_lemma, verify_twist_robustness, verify_weil, ExperimentConfig, Report,
};
use klab::kloosterman::{kloosterman_fast, kloosterman_naive, weil_majorant, KloostermanQuery};
use klab::sums::{
    dyadic_twisted_sum, partial_sum_series, polynomial_sum, smooth_twisted_sum,
    twisted_partial_sum, CutoffMode, TwistQuery,
};
use klab::transforms::{
    default_window, main_term_integral, make_bump, transform_sweep_csv, TestFunction,
    TransformKind, DEFAULT_RAMP_ORDER,
};
use klab::{fmt_float, Error};

/// Environment variable capping the factor sieve (number of entries).
const SPF_LIMIT_VAR: &str = "KLAB_SPF_LIMIT";
const DEFAULT_SPF_LIMIT: u64 = 50_000_000;

#[derive(Parser, Debug, Serialize)]
#[command(name = "klab", version, about = "Twisted sums of Kloosterman sums", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads; never changes the numeric output.
    #[arg(long, global = true, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// A single Kloosterman sum S(m, n; c).
    Kloos(KloosArgs),
    /// Twisted partial sums over c ≡ 0 (mod s).
    Sum(SumArgs),
    /// Sum over c of the quadratic-polynomial exponential sums.
    Poly(PolyArgs),
    /// Bessel transforms of the smoothed test function.
    Transform(TransformArgs),
    /// Right-hand side of a bound.
    Bounds(BoundsArgs),
    /// Run a verification suite and emit its report.
    Verify(VerifyArgs),
    /// Partial sums next to the classical, main and Weil bounds.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct KloosArgs {
    #[arg(long)]
    m: i64,
    #[arg(long)]
    n: i64,
    #[arg(long)]
    c: u64,
    /// Evaluate with the brute-force definition instead of the fast path.
    #[arg(long)]
    naive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Mode {
    Sharp,
    Dyadic,
    Smooth,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct SumArgs {
    #[arg(long)]
    m: i64,
    #[arg(long)]
    n: i64,
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long = "C")]
    c: f64,
    #[arg(long, value_enum, default_value_t = Mode::Sharp)]
    mode: Mode,
    /// Smoothing window for `--mode smooth` (default s^{2/3} C^{2/3}).
    #[arg(long = "T")]
    t: Option<f64>,
    /// `dyadic`, `log`, or a comma-separated list of cutoffs.
    #[arg(long)]
    checkpoints: Option<String>,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct PolyArgs {
    #[arg(long)]
    m: i64,
    #[arg(long)]
    l: i64,
    #[arg(long)]
    n: i64,
    #[arg(long = "C")]
    c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum What {
    Ftilde,
    Fhat,
    FhatExceptional,
    Main,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct TransformArgs {
    #[arg(long, value_enum)]
    what: What,
    /// Comma-separated evaluation points (`t`, or `u` for the exceptional transform).
    #[arg(long, default_value = "0")]
    t: String,
    #[arg(long, default_value_t = 1)]
    mn: u64,
    #[arg(long = "C", default_value_t = 100.0)]
    c: f64,
    #[arg(long = "T")]
    t_window: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_RAMP_ORDER)]
    ramp_order: u32,
    /// Lower limit for `--what main`.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Upper limit for `--what main` (`inf` allowed).
    #[arg(long, default_value_t = f64::INFINITY)]
    b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Theorem {
    Thm1,
    Cor2,
    Thm2,
    Thm2Ctheta,
    Dyadic,
    DyadicAlphaLt1,
    Classic,
    Weil,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    #[arg(long, default_value_t = 1)]
    m: i64,
    #[arg(long, default_value_t = 1)]
    n: i64,
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long = "C")]
    c: f64,
    #[arg(long, default_value_t = ThetaParam::KIM_SARNAK)]
    theta: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Suite {
    Oracle,
    Weil,
    Growth,
    Twist,
    Transforms,
    SharpSmooth,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 3000)]
    c_max: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// `|m|, |n| <= range` for the Weil suite.
    #[arg(long, default_value_t = 5)]
    range: i64,
    #[arg(long, default_value_t = 1)]
    m: i64,
    #[arg(long, default_value_t = 1)]
    n: i64,
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Final cutoff (growth, twist, sharp-smooth suites).
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long, default_value_t = 1e4)]
    calibration_max: f64,
    #[arg(long, default_value_t = ThetaParam::KIM_SARNAK)]
    theta: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Experiment configuration (JSON) for the growth and transforms suites.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    m: i64,
    #[arg(long, default_value_t = 1)]
    n: i64,
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long = "C-max")]
    c_max: f64,
    /// `dyadic`, `log`, or a comma-separated list of cutoffs.
    #[arg(long, default_value = "dyadic")]
    checkpoints: String,
    #[arg(long, default_value_t = ThetaParam::KIM_SARNAK)]
    theta: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidWindow(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::ModulusOutOfRange { .. }
            | Error::NotInvertible { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Main output plus whether a verification passed.
struct Output {
    text: String,
    pass: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, pass: true }
    }

    fn report(r: &Report) -> Result<Self, Failure> {
        Ok(Self {
            text: r.to_json()?,
            pass: r.pass,
        })
    }
}

fn spf_table(limit: u64) -> Result<SpfTable, Failure> {
    let cap = match std::env::var(SPF_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("{SPF_LIMIT_VAR} must be an unsigned integer, got {v:?}")))?,
        Err(_) => DEFAULT_SPF_LIMIT,
    };
    Ok(SpfTable::build_with_cap(limit.max(2), cap)?)
}

fn parse_list(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|p| {
            let p = p.trim();
            if p == "inf" {
                return Ok(f64::INFINITY);
            }
            p.parse::<f64>().map_err(|_| usage(format!("not a number: {p:?}")))
        })
        .collect()
}

fn checkpoint_schedule(spec: &str, c_max: f64) -> Result<Vec<f64>, Failure> {
    match spec {
        "dyadic" => {
            let mut cps = dyadic_checkpoints(c_max);
            if cps.last() != Some(&c_max) {
                cps.push(c_max);
            }
            Ok(cps)
        }
        "log" => Ok(log_checkpoints(1.0, c_max, 20)),
        list => parse_list(list),
    }
}

fn require_cutoff(c: f64) -> Result<(), Failure> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(usage(format!("--C must be a finite number >= 1, got {c}")));
    }
    Ok(())
}

fn csv_row(cells: &[f64]) -> String {
    cells.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(",") + "\n"
}

fn run_kloos(a: &KloosArgs, format: Format) -> Result<Output, Failure> {
    let q = KloostermanQuery::new(a.m, a.n, a.c)?;
    let value = if a.naive {
        kloosterman_naive(q).re
    } else {
        kloosterman_fast(q, &spf_table(a.c)?)?
    };
    let majorant = weil_majorant(q);
    Ok(Output::ok(match format {
        Format::Json => {
            serde_json::to_string(&serde_json::json!({
                "m": a.m, "n": a.n, "c": a.c, "value": value, "weil_majorant": majorant
            }))? + "\n"
        }
        Format::Csv => format!(
            "m,n,c,value,weil_majorant\n{},{},{},{},{}\n",
            a.m,
            a.n,
            a.c,
            fmt_float(value),
            fmt_float(majorant)
        ),
    }))
}

fn run_sum(a: &SumArgs, workers: usize, format: Format) -> Result<Output, Failure> {
    require_cutoff(a.c)?;
    let mode = match a.mode {
        Mode::Sharp => CutoffMode::SharpUpto,
        Mode::Dyadic => CutoffMode::Dyadic,
        Mode::Smooth => CutoffMode::Smooth,
    };
    let q = TwistQuery::new(a.m, a.n, a.s, a.alpha, a.c, mode)?;
    if let Some(spec) = &a.checkpoints {
        if mode != CutoffMode::SharpUpto {
            return Err(usage("--checkpoints requires --mode sharp"));
        }
        let cps = checkpoint_schedule(spec, a.c)?;
        let top = cps.last().copied().unwrap_or(1.0);
        let series = partial_sum_series(&q, &cps, &spf_table(top.floor() as u64)?, workers)?;
        return Ok(Output::ok(match format {
            Format::Csv => series.to_csv(),
            Format::Json => serde_json::to_string_pretty(&series)? + "\n",
        }));
    }
    let value = match mode {
        CutoffMode::SharpUpto => twisted_partial_sum(&q, &spf_table(a.c as u64)?, workers)?,
        CutoffMode::Dyadic => dyadic_twisted_sum(&q, &spf_table((2.0 * a.c).ceil() as u64)?, workers)?,
        CutoffMode::Smooth => {
            let t = a.t.unwrap_or_else(|| default_window(a.s, a.c));
            let bump = make_bump(q.mn(), a.c, t, DEFAULT_RAMP_ORDER)?;
            smooth_twisted_sum(&q, &bump, &spf_table((2.0 * (a.c + t)).ceil() as u64)?, workers)?
        }
    };
    Ok(Output::ok(match format {
        Format::Csv => format!("C,re_sum,im_sum,abs_sum\n{}", csv_row(&[a.c, value.re, value.im, value.norm()])),
        Format::Json => serde_json::to_string(&serde_json::json!({"C": a.c, "sum": value}))? + "\n",
    }))
}

fn run_poly(a: &PolyArgs, workers: usize) -> Result<Output, Failure> {
    let table = spf_table(a.c.max(2.0) as u64)?;
    let v = polynomial_sum(a.m, a.l, a.n, a.c, &table, workers)?;
    Ok(Output::ok(format!(
        "C,re_sum,im_sum,abs_sum\n{}",
        csv_row(&[a.c, v.re, v.im, v.norm()])
    )))
}

fn run_transform(a: &TransformArgs, workers: usize) -> Result<Output, Failure> {
    let points = parse_list(&a.t)?;
    if a.what == What::Main {
        let mut out = String::from("u,re,im,abs,est_error\n");
        for u in points {
            let r = main_term_integral(u, a.alpha, a.a, a.b)?;
            out.push_str(&csv_row(&[u, r.value.re, r.value.im, r.value.norm(), r.est_abs_error]));
        }
        return Ok(Output::ok(out));
    }
    let t_window = a.t_window.unwrap_or_else(|| default_window(1, a.c));
    let bump = make_bump(a.mn, a.c, t_window, a.ramp_order)?;
    let tf = TestFunction::new(bump, a.alpha);
    let kind = match a.what {
        What::Ftilde => TransformKind::FTilde,
        What::Fhat => TransformKind::FHat,
        _ => TransformKind::FHatExceptional,
    };
    Ok(Output::ok(transform_sweep_csv(kind, &tf, &points, workers)?))
}

fn run_bounds(a: &BoundsArgs) -> Result<Output, Failure> {
    let theta = ThetaParam::new(a.theta)?;
    let simple = |total: f64, label: &str| BoundReport {
        total,
        epsilon: a.eps,
        k: a.k,
        terms: vec![BoundTerm {
            label: label.to_string(),
            value: total / a.k,
        }],
    };
    let report = match a.theorem {
        Theorem::Classic => {
            require_cutoff(a.c)?;
            simple(kuznetsov_classic_rhs(a.c, a.k), "C^(1/6) log(2C)^(1/3)")
        }
        Theorem::Weil => {
            require_cutoff(a.c)?;
            if a.s == 0 {
                return Err(usage("--s must be positive"));
            }
            simple(weil_partial_rhs(a.s, a.c, a.eps, a.k), "s^(-1+eps) C^(1/2+eps)")
        }
        other => {
            require_cutoff(a.c)?;
            let q = TwistQuery::new(a.m, a.n, a.s, a.alpha, a.c, CutoffMode::SharpUpto)?;
            match other {
                Theorem::Thm1 => thm1_rhs(&q, theta, a.eps, a.k),
                Theorem::Cor2 => cor2_rhs(&q, theta, a.eps, a.k),
                Theorem::Thm2 => thm2_rhs(&q, theta, a.eps, a.k, Thm2Variant::MainTerm)?,
                Theorem::Thm2Ctheta => thm2_rhs(&q, theta, a.eps, a.k, Thm2Variant::CTheta)?,
                Theorem::Dyadic => dyadic_rhs(&q, theta, a.eps, a.k, DyadicVariant::General)?,
                _ => dyadic_rhs(&q, theta, a.eps, a.k, DyadicVariant::AlphaLt1)?,
            }
        }
    };
    Ok(Output::ok(serde_json::to_string_pretty(&report)? + "\n"))
}

fn load_config(path: &Option<PathBuf>) -> Result<Option<ExperimentConfig>, Failure> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Ok(Some(cfg))
        }
    }
}

fn run_verify(a: &VerifyArgs, workers: usize, seed: u64) -> Result<Output, Failure> {
    let theta = ThetaParam::new(a.theta)?;
    let report = match a.suite {
        Suite::Oracle => {
            verify_oracle_equivalence(a.c_max, a.trials, seed, &spf_table(a.c_max)?, workers)?
        }
        Suite::Weil => verify_weil(
            a.c_max,
            (-a.range, a.range),
            (-a.range, a.range),
            &spf_table(a.c_max)?,
            workers,
        )?,
        Suite::Growth => {
            let mut cfg = load_config(&a.config)?.unwrap_or_else(|| {
                let c = a.c.unwrap_or(1e6);
                ExperimentConfig {
                    experiment: "growth".into(),
                    m: a.m,
                    n: a.n,
                    s: a.s,
                    alpha: a.alpha,
                    checkpoints: log_checkpoints(1.0, c, 20),
                    fit_window: (1e3_f64.min(c / 10.0), c),
                    calibration_max: a.calibration_max,
                    theta: a.theta,
                    epsilon: a.eps,
                    seed,
                    ..Default::default()
                }
            });
            cfg.workers = workers;
            let top = cfg.checkpoints.last().copied().unwrap_or(2.0);
            sweep_partial_sums(&cfg, &spf_table(top as u64)?)?.1
        }
        Suite::Twist => {
            let c = a.c.unwrap_or(1e5);
            require_cutoff(c)?;
            verify_twist_robustness(
                &[(1, 1), (2, 3), (5, 5)],
                &[0.0, 0.3, -0.3, 0.7, -0.7, 1.0, -1.0, 2.0, -2.0],
                &[1, 2, 3],
                a.calibration_max,
                c,
                theta,
                a.eps,
                &spf_table(c as u64)?,
                workers,
            )?
        }
        Suite::Transforms => {
            let mut cfg = load_config(&a.config)?.unwrap_or_else(|| ExperimentConfig {
                experiment: "transforms".into(),
                x_grid: vec![0.1, 1.0, 10.0],
                alpha_grid: vec![0.0, 0.5, 2.0],
                t_grid: (0..=10).map(|i| 2.0 * i as f64).collect(),
                u_grid: vec![0.0, 0.05, 0.109375, 0.2],
                window_grid: vec![0.1],
                epsilon: a.eps,
                seed,
                ..Default::default()
            });
            cfg.workers = workers;
            verify_transform_lemma(&cfg)?
        }
        Suite::SharpSmooth => {
            let c = a.c.unwrap_or(1000.0);
            require_cutoff(c)?;
            let table = spf_table((2.0 * c + 2.0 * default_window(a.s, c)).ceil() as u64 + 2)?;
            let cal = calibrate_sharp_smooth(a.m, a.n, a.s, a.alpha, &[c / 8.0, c / 4.0, c / 2.0], &table, workers)?;
            let q = TwistQuery::new(a.m, a.n, a.s, a.alpha, c, CutoffMode::Smooth)?;
            let bump = make_bump(q.mn(), c, default_window(a.s, c), DEFAULT_RAMP_ORDER)?;
            sharp_vs_smooth_check(&q, &bump, cal, &table, workers)?
        }
    };
    Output::report(&report)
}

fn run_sweep(a: &SweepArgs, workers: usize, seed: u64) -> Result<Output, Failure> {
    require_cutoff(a.c_max)?;
    let cps = checkpoint_schedule(&a.checkpoints, a.c_max)?;
    let cfg = ExperimentConfig {
        experiment: "sweep".into(),
        m: a.m,
        n: a.n,
        s: a.s,
        alpha: a.alpha,
        fit_window: (1e3_f64.min(a.c_max / 10.0), a.c_max),
        checkpoints: cps,
        theta: a.theta,
        epsilon: a.eps,
        k: a.k,
        seed,
        workers,
        ..Default::default()
    };
    let top = cfg.checkpoints.last().copied().unwrap_or(2.0);
    let (csv, report) = sweep_partial_sums(&cfg, &spf_table(top as u64)?)?;
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_json()?)?;
    }
    Ok(Output { text: csv, pass: report.pass })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    if cli.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let w = cli.workers;
    match &cli.command {
        Command::Kloos(a) => run_kloos(a, cli.format.unwrap_or(Format::Csv)),
        Command::Sum(a) => run_sum(a, w, cli.format.unwrap_or(Format::Csv)),
        Command::Poly(a) => run_poly(a, w),
        Command::Transform(a) => run_transform(a, w),
        Command::Bounds(a) => run_bounds(a),
        Command::Verify(a) => run_verify(a, w, cli.seed),
        Command::Sweep(a) => run_sweep(a, w, cli.seed),
    }
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match config_digest(&cli) {
        Ok(d) => eprintln!("config_digest {d}"),
        Err(e) => eprintln!("config_digest unavailable: {e}"),
    }
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out.text) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

//! Command-line front end. Every subcommand writes a CSV table with a header
//! row to `--out` or stdout. Exit codes: 0 on success, 1 when an asserted
//! invariant fails or output cannot be written, 2 on bad arguments or
//! configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::asymptotics::voronovskaya_trace;
use crate::basis::GridSpec;
use crate::bounds::{run_bound_sweep, BoundId, BoundOptions, BoundSweep};
use crate::error::Error;
use crate::function::{builtin_corpus, FunctionHandle};
use crate::iterates::{contraction_factor, first_contraction_violation, limit_trajectory, DEFAULT_M_MAX};
use crate::moduli::DEFAULT_GRID;
use crate::operators::{
    akr_first_moment, akr_nodes, akr_second_moment, apply_akr, apply_bernstein, apply_king, apply_tau,
    check_nj, d_n_profile, TauSpec,
};

pub const GRID_ENV: &str = "AKR_DEFAULT_GRID";

const VORONOVSKAYA_REL: f64 = 0.02;
const VORONOVSKAYA_ABS: f64 = 0.005;
const MOMENT_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "akr", version, about = "Bernstein-type operators fixing e_0 and e_j")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Node vector t_{n,k}: columns k,t
    Nodes(Params),
    /// Operator values side by side: columns x,f,akr,bernstein,king,tau
    Eval(Params),
    /// First and second moments with their bounds
    Moments(Params),
    /// Bound sweep: columns bound_id,f_id,n,j,max_lhs,min_margin,witness_x,holds
    Bounds(Params),
    /// Distance of the iterates to their limit: columns f_id,n,j,m,sup_distance
    Iterates(Params),
    /// Scaled errors against the Voronovskaya limit
    Voronovskaya(Params),
    /// The profiles d_5 and d_10 on uniform(500): columns x,d_5,d_10
    Figure1(Params),
}

#[derive(Args, Debug, Default)]
struct Params {
    /// Function: a corpus id or `poly:c0,c1,...` (repeatable)
    #[arg(long = "f")]
    functions: Vec<String>,
    /// Degree(s), comma separated
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Parameter(s) j, comma separated
    #[arg(long, value_delimiter = ',')]
    j: Vec<usize>,
    /// Evaluation point(s), comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Number of iterates
    #[arg(long)]
    m: Option<usize>,
    /// Size of the uniform grid (points minus one)
    #[arg(long)]
    grid: Option<usize>,
    /// Fixed modulus step for the Shisha-Mond estimate
    #[arg(long)]
    delta: Option<f64>,
    /// Bound ids, comma separated
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<String>,
    /// JSON experiment description; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

/// Declarative description of a run, read from JSON. Every field is optional
/// and flags given on the command line replace the corresponding field.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functions: Option<Vec<String>>,
    pub n_list: Option<Vec<usize>>,
    pub j_list: Option<Vec<usize>>,
    pub x: Option<Vec<f64>>,
    pub m: Option<usize>,
    pub grid: Option<usize>,
    pub bounds: Option<Vec<String>>,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn overlay(mut self, p: Params) -> Self {
        fn set<T>(slot: &mut Option<Vec<T>>, v: Vec<T>) {
            if !v.is_empty() {
                *slot = Some(v);
            }
        }
        set(&mut self.functions, p.functions);
        set(&mut self.n_list, p.n);
        set(&mut self.j_list, p.j);
        set(&mut self.x, p.x);
        set(&mut self.bounds, p.bounds);
        self.m = p.m.or(self.m);
        self.grid = p.grid.or(self.grid);
        self.delta = p.delta.or(self.delta);
        self.out = p.out.or(self.out);
        self.threads = p.threads.or(self.threads);
        self
    }
}

enum Failure {
    Usage(String),
    Assertion(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Assertion(_) | Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Assertion(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_)
            | Error::Config(_)
            | Error::MissingDerivative { .. }
            | Error::DerivativeMismatch { .. } => Failure::Usage(e.to_string()),
            Error::BracketExhausted { .. } | Error::EmptySweep(_) | Error::Io(_) => {
                Failure::Runtime(e.to_string())
            }
        }
    }
}

/// A finished table plus an optional assertion failure to report after it
/// has been written.
struct Output {
    csv: String,
    failure: Option<String>,
}

impl Output {
    fn ok(csv: String) -> Self {
        Self { csv, failure: None }
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

type Job = fn(&ExperimentConfig) -> Result<Output, Failure>;

fn execute(command: Command) -> Result<(), Failure> {
    let (params, job): (Params, Job) = match command {
        Command::Nodes(p) => (p, cmd_nodes),
        Command::Eval(p) => (p, cmd_eval),
        Command::Moments(p) => (p, cmd_moments),
        Command::Bounds(p) => (p, cmd_bounds),
        Command::Iterates(p) => (p, cmd_iterates),
        Command::Voronovskaya(p) => (p, cmd_voronovskaya),
        Command::Figure1(p) => (p, cmd_figure1),
    };
    let base = match &params.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.overlay(params);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let output = pool.install(|| job(&cfg))?;

    match &cfg.out {
        Some(path) => std::fs::write(path, &output.csv)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", output.csv),
    }
    match output.failure {
        Some(msg) => Err(Failure::Assertion(msg)),
        None => Ok(()),
    }
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros dropped.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..15).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{v:.*}", (14 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn table(header: &str) -> String {
    format!("{header}\n")
}

fn row(out: &mut String, fields: &[String]) {
    let _ = writeln!(out, "{}", fields.join(","));
}

fn single(list: &Option<Vec<usize>>, name: &str) -> Result<usize, Failure> {
    match list.as_deref() {
        Some([v]) => Ok(*v),
        Some(_) => Err(Failure::Usage(format!("--{name} takes a single value here"))),
        None => Err(Failure::Usage(format!("missing --{name}"))),
    }
}

fn functions(cfg: &ExperimentConfig, default: impl FnOnce() -> Vec<FunctionHandle>) -> Result<Vec<FunctionHandle>, Failure> {
    match &cfg.functions {
        Some(ids) => ids
            .iter()
            .map(|s| FunctionHandle::from_spec(s).map_err(Failure::from))
            .collect(),
        None => Ok(default()),
    }
}

fn one_function(cfg: &ExperimentConfig) -> Result<FunctionHandle, Failure> {
    let mut fs = functions(cfg, Vec::new)?;
    match fs.len() {
        1 => Ok(fs.remove(0)),
        0 => Err(Failure::Usage("missing --f".into())),
        _ => Err(Failure::Usage("--f takes a single function here".into())),
    }
}

fn grid(cfg: &ExperimentConfig, fallback: usize) -> Result<GridSpec, Failure> {
    let size = match cfg.grid {
        Some(g) => g,
        None => match std::env::var(GRID_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{GRID_ENV} must be a positive integer (got {v:?})")))?,
            Err(_) => fallback,
        },
    };
    if size < 10 {
        return Err(Failure::Usage(format!("grid size must be at least 10 (got {size})")));
    }
    Ok(GridSpec::uniform(size)?)
}

fn points(cfg: &ExperimentConfig, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, Failure> {
    let mut xs = cfg.x.clone().unwrap_or_else(default);
    if let Some(bad) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Failure::Usage(format!("x must lie in [0, 1] (got {bad})")));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(xs)
}

fn tenths() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn check_pairs(n_list: &[usize], j_list: &[usize]) -> Result<(), Failure> {
    for &j in j_list {
        for &n in n_list {
            check_nj(n, j)?;
        }
    }
    Ok(())
}

fn cmd_nodes(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let n = single(&cfg.n_list, "n")?;
    let j = single(&cfg.j_list, "j")?;
    let nodes = akr_nodes(n, j)?;
    let mut csv = table("k,t");
    for (k, &t) in nodes.nodes().iter().enumerate() {
        row(&mut csv, &[k.to_string(), fmt_g(t)]);
    }
    Ok(Output::ok(csv))
}

fn cmd_eval(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let f = one_function(cfg)?;
    let n = single(&cfg.n_list, "n")?;
    let j = single(&cfg.j_list, "j")?;
    let xs = points(cfg, tenths)?;
    let akr = apply_akr(&f, n, j)?;
    let classical = apply_bernstein(&f, n)?;
    let tau = TauSpec::power(j)?;
    let mut csv = table("x,f,akr,bernstein,king,tau");
    for x in xs {
        row(
            &mut csv,
            &[
                fmt_g(x),
                fmt_g(f.eval(x)),
                fmt_g(akr.eval(x)?),
                fmt_g(classical.eval(x)?),
                fmt_g(apply_king(&f, n, x)?),
                fmt_g(apply_tau(&f, &tau, n, x)?),
            ],
        );
    }
    Ok(Output::ok(csv))
}

fn cmd_moments(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let n = single(&cfg.n_list, "n")?;
    let j = single(&cfg.j_list, "j")?;
    check_nj(n, j)?;
    let xs = points(cfg, tenths)?;
    let (nf, jf) = (n as f64, j as f64);
    let mut csv = table("x,first_moment,second_moment,first_moment_bound,second_moment_bound,holds");
    let mut failed = Vec::new();
    for x in xs {
        let m1 = akr_first_moment(n, j, x)?;
        let m2 = akr_second_moment(n, j, x)?;
        let mut b1 = (jf - 1.0) / nf;
        if j == 2 {
            b1 = b1.min(d_n_profile(n, x)? / (nf - 1.0));
        }
        let b2 = x * (1.0 - x) / nf + 2.0 * x * (jf - 1.0) / nf;
        let holds = m1 <= MOMENT_TOL && m1.abs() <= b1 + MOMENT_TOL && m2 >= -MOMENT_TOL && m2 <= b2 + MOMENT_TOL;
        if !holds {
            failed.push(fmt_g(x));
        }
        row(&mut csv, &[fmt_g(x), fmt_g(m1), fmt_g(m2), fmt_g(b1), fmt_g(b2), holds.to_string()]);
    }
    let failure = (!failed.is_empty()).then(|| format!("moment bounds fail at x = {}", failed.join(", ")));
    Ok(Output { csv, failure })
}

fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let bounds = match &cfg.bounds {
        Some(ids) => ids
            .iter()
            .map(|s| s.parse::<BoundId>().map_err(Failure::from))
            .collect::<Result<Vec<_>, _>>()?,
        None => BoundId::ALL.to_vec(),
    };
    let j_list = cfg.j_list.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    if let Some(n_list) = &cfg.n_list {
        check_pairs(n_list, &j_list)?;
    }
    let sweep = BoundSweep {
        bounds,
        functions: functions(cfg, builtin_corpus)?,
        n_list: cfg.n_list.clone(),
        j_list,
        grid: grid(cfg, DEFAULT_GRID)?,
        options: BoundOptions { delta: cfg.delta },
    };
    let reports = run_bound_sweep(&sweep)?;
    let mut csv = table("bound_id,f_id,n,j,max_lhs,min_margin,witness_x,holds");
    let mut failed = Vec::new();
    for r in &reports {
        if !r.holds && !r.informational && !r.vacuous {
            failed.push(format!("{} f={} n={} j={}", r.bound_id, r.f_id, r.n, r.j));
        }
        row(
            &mut csv,
            &[
                r.bound_id.to_string(),
                r.f_id.clone(),
                r.n.to_string(),
                r.j.to_string(),
                fmt_g(r.max_lhs),
                fmt_g(r.min_margin),
                fmt_g(r.witness_x),
                r.holds.to_string(),
            ],
        );
    }
    let failure = (!failed.is_empty()).then(|| format!("bounds violated: {}", failed.join("; ")));
    Ok(Output { csv, failure })
}

fn cmd_iterates(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let fs = functions(cfg, Vec::new)?;
    if fs.is_empty() {
        return Err(Failure::Usage("missing --f".into()));
    }
    let n_list = cfg.n_list.clone().ok_or_else(|| Failure::Usage("missing --n".into()))?;
    let j_list = cfg.j_list.clone().ok_or_else(|| Failure::Usage("missing --j".into()))?;
    check_pairs(&n_list, &j_list)?;
    let m = cfg.m.unwrap_or(DEFAULT_M_MAX);
    let mut csv = table("f_id,n,j,m,sup_distance");
    let mut failed = Vec::new();
    for f in &fs {
        for &n in &n_list {
            for &j in &j_list {
                let steps = limit_trajectory(f, n, j, m)?;
                let distances: Vec<f64> = steps.iter().map(|s| s.sup_distance).collect();
                let scale = magnitude(f);
                if let Some((at, ratio)) = first_contraction_violation(&distances, contraction_factor(n), scale) {
                    failed.push(format!("f={} n={n} j={j} m={at} ratio {}", f.id(), fmt_g(ratio)));
                }
                for s in steps {
                    row(
                        &mut csv,
                        &[f.id().to_string(), n.to_string(), j.to_string(), s.m.to_string(), fmt_g(s.sup_distance)],
                    );
                }
            }
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("contraction violated: {}", failed.join("; ")));
    Ok(Output { csv, failure })
}

fn magnitude(f: &FunctionHandle) -> f64 {
    let grid = GridSpec::uniform(500).expect("valid grid");
    f.sample(grid.points()).iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn cmd_voronovskaya(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let fs = functions(cfg, || builtin_corpus().into_iter().filter(|f| f.has_d2()).collect())?;
    let j_list = cfg.j_list.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let n_list = cfg.n_list.clone().unwrap_or_else(|| (8..=12).map(|p| 1 << p).collect());
    let xs = points(cfg, || vec![0.1, 0.3, 0.5, 0.7, 0.9])?;
    check_pairs(&n_list, &j_list)?;
    let mut csv = table("f_id,j,x,n,scaled_error,target,extrapolated");
    let mut failed = Vec::new();
    for f in &fs {
        for &j in &j_list {
            for &x in &xs {
                let t = voronovskaya_trace(f, j, x, &n_list)?;
                if !t.within(VORONOVSKAYA_REL, VORONOVSKAYA_ABS) {
                    failed.push(format!("f={} j={j} x={}", f.id(), fmt_g(x)));
                }
                for (&n, &s) in t.n_list.iter().zip(&t.scaled_errors) {
                    row(
                        &mut csv,
                        &[
                            t.f_id.clone(),
                            j.to_string(),
                            fmt_g(x),
                            n.to_string(),
                            fmt_g(s),
                            fmt_g(t.target),
                            fmt_g(t.extrapolated),
                        ],
                    );
                }
            }
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("limit not matched: {}", failed.join("; ")));
    Ok(Output { csv, failure })
}

fn cmd_figure1(_cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let grid = GridSpec::uniform(500)?;
    let mut csv = table("x,d_5,d_10");
    for &x in grid.points() {
        row(&mut csv, &[fmt_g(x), fmt_g(d_n_profile(5, x)?), fmt_g(d_n_profile(10, x)?)]);
    }
    Ok(Output::ok(csv))
}

//! Direct estimates for `B_{n,0,j}`: right-hand-side evaluators and a
//! harness that checks each one against the actual approximation error.
//!
//! Left- and right-hand sides are computed on the same grid. A bound holds
//! on a grid when `min_x (RHS(x) - LHS(x)) >= -1e-9`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::{eval_points, GridSpec};
use crate::error::{precondition, Error, Result};
use crate::function::FunctionHandle;
use crate::moduli::{omega1_values, omega2_values, omega_inf_combined};
use crate::operators::{akr_nodes, check_nj};

/// Margin below which a bound is reported as failing.
pub const MARGIN_TOL: f64 = -1e-9;

/// Largest `n` in the default sweeps (scope minima plus powers of two up to this).
pub const DEFAULT_N_MAX: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundId {
    ShishaMondJ2,
    Finta2014,
    AldazRender2018,
    Prop21,
    Prop22A,
    Prop22B,
    Prop23,
}

impl BoundId {
    pub const ALL: [BoundId; 7] = [
        BoundId::ShishaMondJ2,
        BoundId::Finta2014,
        BoundId::AldazRender2018,
        BoundId::Prop21,
        BoundId::Prop22A,
        BoundId::Prop22B,
        BoundId::Prop23,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::ShishaMondJ2 => "SHISHA_MOND_J2",
            BoundId::Finta2014 => "FINTA_2014",
            BoundId::AldazRender2018 => "ALDAZ_RENDER_2018",
            BoundId::Prop21 => "PROP_2_1",
            BoundId::Prop22A => "PROP_2_2_A",
            BoundId::Prop22B => "PROP_2_2_B",
            BoundId::Prop23 => "PROP_2_3",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            BoundId::ShishaMondJ2 | BoundId::Prop22A => Mode::Pointwise,
            _ => Mode::Uniform,
        }
    }

    /// Whether a failure of this bound counts as a failure of a sweep.
    pub fn is_asserted(self) -> bool {
        self != BoundId::AldazRender2018
    }

    /// Checks `(n, j)` against the range the estimate is stated for.
    pub fn check_scope(self, n: usize, j: usize) -> Result<()> {
        let fail = |clause: &str| {
            precondition(format!(
                "{} is stated for {clause} (got n = {n}, j = {j})",
                self.as_str()
            ))
        };
        match self {
            BoundId::ShishaMondJ2 if j != 2 || n < 2 => fail("j = 2, n >= 2"),
            BoundId::Finta2014 if j < 2 || n < j => fail("n >= j >= 2"),
            BoundId::AldazRender2018 if j < 1 || n < j => fail("n >= j >= 1"),
            BoundId::Prop21 | BoundId::Prop23 if j < 1 || n < j => fail("n >= j >= 1"),
            BoundId::Prop22A if j != 2 || n < 5 => fail("j = 2, n >= 5"),
            BoundId::Prop22B if j < 1 || n < j || n < 4 => fail("n >= 4, 1 <= j <= n"),
            _ => Ok(()),
        }
    }

    /// Smallest `n` inside the stated scope, or `None` when `j` itself is out of scope.
    pub fn min_n(self, j: usize) -> Option<usize> {
        match self {
            BoundId::ShishaMondJ2 => (j == 2).then_some(2),
            BoundId::Finta2014 => (j >= 2).then_some(j),
            BoundId::AldazRender2018 | BoundId::Prop21 | BoundId::Prop23 => (j >= 1).then_some(j),
            BoundId::Prop22A => (j == 2).then_some(5),
            BoundId::Prop22B => (j >= 1).then_some(j.max(4)),
        }
    }

    /// Smallest in-scope `n` plus the powers of two up to [`DEFAULT_N_MAX`]. For
    /// `FINTA_2014` the first power of two where the estimate is non-vacuous
    /// is appended.
    pub fn default_n_list(self, j: usize) -> Vec<usize> {
        let Some(min) = self.min_n(j) else {
            return Vec::new();
        };
        let mut list = vec![min];
        let mut p = 1;
        while p <= DEFAULT_N_MAX {
            if p > min {
                list.push(p);
            }
            p *= 2;
        }
        if self == BoundId::Finta2014 {
            let mut n = DEFAULT_N_MAX * 2;
            while finta_2014_argument(n, j) > 1.0 {
                n *= 2;
            }
            list.push(n);
        }
        list
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown bound id `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Pointwise,
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub f_id: String,
    pub n: usize,
    pub j: usize,
    pub mode: Mode,
    pub max_lhs: f64,
    /// `min_x (RHS(x) - LHS(x))` over the grid.
    pub min_margin: f64,
    pub witness_x: f64,
    pub holds: bool,
    /// Reported for information only; never counted as a failure.
    pub informational: bool,
    /// The modulus argument had to be clamped to 1, so the estimate says
    /// nothing beyond the trivial bound.
    pub vacuous: bool,
}

/// `(4306 + 837 sqrt 6) / 5832`, Sikkema's constant.
pub fn sikkema_constant() -> f64 {
    (4306.0 + 837.0 * 6f64.sqrt()) / 5832.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct LhsError {
    pub sup: f64,
    /// `|f(x) - B_{n,0,j}(f; x)|` for every grid point.
    pub pointwise: Vec<f64>,
}

pub fn lhs_error(f: &FunctionHandle, n: usize, j: usize, grid: &GridSpec) -> Result<LhsError> {
    let nodes = akr_nodes(n, j)?;
    let coeffs = f.sample(nodes.nodes());
    let xs = grid.points();
    let pointwise: Vec<f64> = eval_points(&coeffs, xs)
        .into_iter()
        .zip(xs)
        .map(|(b, &x)| (f.eval(x) - b).abs())
        .collect();
    let sup = pointwise.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(LhsError { sup, pointwise })
}

/// Grid values of `f` with the moduli the estimates need.
struct Sampled<'a> {
    xs: &'a [f64],
    values: Vec<f64>,
    /// The spacing when the grid is uniform.
    step: Option<f64>,
}

impl<'a> Sampled<'a> {
    fn new(f: &FunctionHandle, grid: &'a GridSpec) -> Self {
        let xs = grid.points();
        let s = xs[1] - xs[0];
        let uniform = xs.windows(2).all(|w| ((w[1] - w[0]) - s).abs() <= 1e-12);
        Self {
            xs,
            values: f.sample(xs),
            step: uniform.then_some(s),
        }
    }

    // A grid scan only sees steps that are multiples of the spacing, which
    // truncates delta. On uniform grids the modulus is interpolated linearly
    // between the neighbouring multiples; this is exact for linear f.
    fn interpolated(&self, delta: f64, scan: impl Fn(f64) -> f64) -> f64 {
        let Some(s) = self.step else {
            return scan(delta);
        };
        let k = (delta / s + 1e-9).floor();
        let frac = (delta / s - k).max(0.0);
        let lo = scan(k * s);
        if frac <= 1e-9 {
            return lo;
        }
        lo + frac * (scan((k + 1.0) * s) - lo)
    }

    /// `omega1(f; delta)`, with `omega1(f; 0) = 0`.
    fn w1(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        self.interpolated(delta, |d| omega1_values(self.xs, &self.values, d).value)
    }

    /// `omega2(f; delta)`. Steps beyond 1/2 are never admissible, so larger
    /// arguments give the same value as 1/2.
    fn w2(&self, delta: f64) -> f64 {
        self.interpolated(delta.min(0.5), |d| {
            omega2_values(self.xs, &self.values, d.min(0.5)).value
        })
    }
}

/// The balancing step `sqrt(2x(1-x)(1-(1-x)^{n-1})/(n-1))`.
pub fn shisha_mond_balancing_delta(n: usize, x: f64) -> f64 {
    let n1 = (n - 1) as f64;
    (2.0 * x * (1.0 - x) * (1.0 - (1.0 - x).powi(n as i32 - 1)) / n1)
        .max(0.0)
        .sqrt()
}

fn shisha_mond_formula(w1: f64, n: usize, x: f64, delta: f64) -> f64 {
    let root = shisha_mond_balancing_delta(n, x);
    if root == 0.0 {
        w1
    } else {
        w1 * (1.0 + root / delta)
    }
}

/// `omega1(f, delta)(1 + sqrt(2x(1-x)(1-(1-x)^{n-1})/(n-1)) / delta)`, with
/// `delta` defaulting to the balancing choice (which makes the bracket 2).
pub fn rhs_shisha_mond_j2(
    f: &FunctionHandle,
    n: usize,
    x: f64,
    delta: Option<f64>,
    grid: &GridSpec,
) -> Result<f64> {
    BoundId::ShishaMondJ2.check_scope(n, 2)?;
    crate::basis::check_unit(x)?;
    let delta = resolve_delta(delta, n, x)?;
    let s = Sampled::new(f, grid);
    Ok(shisha_mond_formula(s.w1(delta), n, x, delta))
}

fn resolve_delta(delta: Option<f64>, n: usize, x: f64) -> Result<f64> {
    match delta {
        Some(d) if d > 0.0 => Ok(d),
        Some(d) => precondition(format!("delta must be positive (got {d})")),
        None => Ok(shisha_mond_balancing_delta(n, x)),
    }
}

/// Unclamped modulus argument `(2j(3+4j)/sqrt n)^{1/(2j)}`.
pub fn finta_2014_argument(n: usize, j: usize) -> f64 {
    let j = j as f64;
    (2.0 * j * (3.0 + 4.0 * j) / (n as f64).sqrt()).powf(1.0 / (2.0 * j))
}

/// `2 omega1(f; (2j(3+4j)/sqrt n)^{1/(2j)})`, argument clamped to 1.
pub fn rhs_finta_2014(f: &FunctionHandle, n: usize, j: usize, grid: &GridSpec) -> Result<f64> {
    BoundId::Finta2014.check_scope(n, j)?;
    Ok(2.0 * Sampled::new(f, grid).w1(finta_2014_argument(n, j).min(1.0)))
}

/// `(c_S + 1) omega1(f, n^{-1/2})`.
pub fn rhs_aldaz_render_2018(f: &FunctionHandle, n: usize, grid: &GridSpec) -> Result<f64> {
    if n < 1 {
        return precondition("require n >= 1");
    }
    Ok((sikkema_constant() + 1.0) * Sampled::new(f, grid).w1(1.0 / (n as f64).sqrt()))
}

/// `omega2(f; 1/sqrt n) + omega1(f; (j-1)/n)`.
pub fn rhs_prop_2_1(f: &FunctionHandle, n: usize, j: usize, grid: &GridSpec) -> Result<f64> {
    BoundId::Prop21.check_scope(n, j)?;
    let s = Sampled::new(f, grid);
    Ok(prop_2_1_formula(&s, n, j))
}

fn prop_2_1_formula(s: &Sampled, n: usize, j: usize) -> f64 {
    let nf = n as f64;
    s.w2(1.0 / nf.sqrt()) + s.w1((j - 1) as f64 / nf)
}

/// `d_n(x)/sqrt(n-1) omega1(f; 1/sqrt(n-1)) + (1 + x d_n(x)) omega2(f; 1/sqrt(n-1))`.
pub fn rhs_prop_2_2a(f: &FunctionHandle, n: usize, x: f64, grid: &GridSpec) -> Result<f64> {
    BoundId::Prop22A.check_scope(n, 2)?;
    crate::basis::check_unit(x)?;
    let s = Sampled::new(f, grid);
    let h = 1.0 / ((n - 1) as f64).sqrt();
    Ok(prop_2_2a_formula(n, x, s.w1(h), s.w2(h)))
}

fn prop_2_2a_formula(n: usize, x: f64, w1: f64, w2: f64) -> f64 {
    let u = 1.0 - x;
    let d = u * (1.0 - u.powi(n as i32 - 1));
    d / ((n - 1) as f64).sqrt() * w1 + (1.0 + x * d) * w2
}

/// `(j-1)/sqrt n omega1(f; 1/sqrt n) + (1/8 + j) omega2(f; 1/sqrt n)`.
pub fn rhs_prop_2_2b(f: &FunctionHandle, n: usize, j: usize, grid: &GridSpec) -> Result<f64> {
    BoundId::Prop22B.check_scope(n, j)?;
    let s = Sampled::new(f, grid);
    Ok(prop_2_2b_formula(&s, n, j))
}

fn prop_2_2b_formula(s: &Sampled, n: usize, j: usize) -> f64 {
    let h = 1.0 / (n as f64).sqrt();
    (j - 1) as f64 * h * s.w1(h) + (0.125 + j as f64) * s.w2(h)
}

/// `inf_a [omega2(f - a e_j; 1/sqrt n) + omega1(f - a e_j; (j-1)/n)]`.
pub fn rhs_prop_2_3(f: &FunctionHandle, n: usize, j: usize, grid: &GridSpec) -> Result<f64> {
    BoundId::Prop23.check_scope(n, j)?;
    let nf = n as f64;
    let delta2 = (1.0 / nf.sqrt()).min(0.5);
    Ok(omega_inf_combined(f, j, delta2, (j - 1) as f64 / nf, grid)?.value)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundOptions {
    /// Fixed step for the Shisha-Mond estimate instead of the balancing choice.
    pub delta: Option<f64>,
}

pub fn verify_bound(
    bound_id: BoundId,
    f: &FunctionHandle,
    n: usize,
    j: usize,
    grid: &GridSpec,
) -> Result<BoundReport> {
    verify_bound_with(bound_id, f, n, j, grid, BoundOptions::default())
}

pub fn verify_bound_with(
    bound_id: BoundId,
    f: &FunctionHandle,
    n: usize,
    j: usize,
    grid: &GridSpec,
    options: BoundOptions,
) -> Result<BoundReport> {
    bound_id.check_scope(n, j)?;
    let lhs = lhs_error(f, n, j, grid)?;
    verify_against(bound_id, f, n, j, grid, &lhs, options)
}

fn verify_against(
    bound_id: BoundId,
    f: &FunctionHandle,
    n: usize,
    j: usize,
    grid: &GridSpec,
    lhs: &LhsError,
    options: BoundOptions,
) -> Result<BoundReport> {
    bound_id.check_scope(n, j)?;
    let s = Sampled::new(f, grid);
    let xs = grid.points();
    let nf = n as f64;
    let mut vacuous = false;

    let rhs: Vec<f64> = match bound_id {
        BoundId::ShishaMondJ2 => {
            if let Some(d) = options.delta {
                if d.is_nan() || d <= 0.0 {
                    return precondition(format!("delta must be positive (got {d})"));
                }
            }
            xs.iter()
                .map(|&x| {
                    let delta = options.delta.unwrap_or_else(|| shisha_mond_balancing_delta(n, x));
                    shisha_mond_formula(s.w1(delta), n, x, delta)
                })
                .collect()
        }
        BoundId::Prop22A => {
            let h = 1.0 / (nf - 1.0).sqrt();
            let (w1, w2) = (s.w1(h), s.w2(h));
            xs.iter().map(|&x| prop_2_2a_formula(n, x, w1, w2)).collect()
        }
        uniform => {
            let value = match uniform {
                BoundId::Finta2014 => {
                    let arg = finta_2014_argument(n, j);
                    vacuous = arg > 1.0;
                    2.0 * s.w1(arg.min(1.0))
                }
                BoundId::AldazRender2018 => (sikkema_constant() + 1.0) * s.w1(1.0 / nf.sqrt()),
                BoundId::Prop21 => prop_2_1_formula(&s, n, j),
                BoundId::Prop22B => prop_2_2b_formula(&s, n, j),
                BoundId::Prop23 => rhs_prop_2_3(f, n, j, grid)?,
                BoundId::ShishaMondJ2 | BoundId::Prop22A => unreachable!(),
            };
            vec![value; xs.len()]
        }
    };

    let (mut min_margin, mut witness_x) = (f64::INFINITY, 0.0);
    for ((&r, &l), &x) in rhs.iter().zip(&lhs.pointwise).zip(xs) {
        if r - l < min_margin {
            min_margin = r - l;
            witness_x = x;
        }
    }
    let informational = !bound_id.is_asserted();
    Ok(BoundReport {
        bound_id,
        f_id: f.id().to_string(),
        n,
        j,
        mode: bound_id.mode(),
        max_lhs: lhs.sup,
        min_margin,
        witness_x,
        holds: informational || min_margin >= MARGIN_TOL,
        informational,
        vacuous,
    })
}

/// A sweep over bounds x functions x `j` x `n`.
#[derive(Clone, Debug)]
pub struct BoundSweep {
    pub bounds: Vec<BoundId>,
    pub functions: Vec<FunctionHandle>,
    /// `None` selects [`BoundId::default_n_list`] for each bound.
    pub n_list: Option<Vec<usize>>,
    pub j_list: Vec<usize>,
    pub grid: GridSpec,
    pub options: BoundOptions,
}

/// Runs every in-scope cell of the sweep in parallel. Cells outside a
/// bound's stated scope are skipped. Reports come back sorted by
/// (bound, function position, j, n).
pub fn run_bound_sweep(sweep: &BoundSweep) -> Result<Vec<BoundReport>> {
    for &j in &sweep.j_list {
        if let Some(list) = &sweep.n_list {
            for &n in list {
                check_nj(n, j)?;
            }
        }
    }
    let mut cells: Vec<(usize, usize, usize, Vec<BoundId>)> = Vec::new();
    for fi in 0..sweep.functions.len() {
        for &j in &sweep.j_list {
            let mut by_n: std::collections::BTreeMap<usize, Vec<BoundId>> = Default::default();
            for &b in &sweep.bounds {
                let ns = match &sweep.n_list {
                    Some(list) => list.clone(),
                    None => b.default_n_list(j),
                };
                for n in ns {
                    if b.check_scope(n, j).is_ok() {
                        by_n.entry(n).or_default().push(b);
                    }
                }
            }
            cells.extend(by_n.into_iter().map(|(n, bs)| (fi, j, n, bs)));
        }
    }

    let mut reports = cells
        .par_iter()
        .map(|(fi, j, n, bs)| {
            let f = &sweep.functions[*fi];
            let lhs = lhs_error(f, *n, *j, &sweep.grid)?;
            bs.iter()
                .map(|&b| {
                    verify_against(b, f, *n, *j, &sweep.grid, &lhs, sweep.options)
                        .map(|r| (*fi, r))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    reports.sort_by_key(|(fi, r)| (r.bound_id, *fi, r.j, r.n));
    Ok(reports.into_iter().map(|(_, r)| r).collect())
}

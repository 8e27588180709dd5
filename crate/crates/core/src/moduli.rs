//! Grid brute-force moduli of smoothness.
//!
//! Every modulus is a supremum over a finite set of admissible arguments
//! drawn from a [`GridSpec`], so the reported value is a lower bound of the
//! true modulus that converges as the grid is refined. The default grid is
//! `uniform(2000)`.
//!
//! - `omega1`: `sup |f(y) - f(x)|` over grid pairs with `0 < y - x <= delta`.
//! - `omega2`: `sup |f(x+h) - 2f(x) + f(x-h)|` over symmetric grid triples
//!   with `0 < h <= delta` (all three points in `[0, 1]`).
//! - `omega_phi_1`: first-order Ditzian-Totik modulus with step `h phi(x) / 2`,
//!   `phi(x) = sqrt(x(1-x))`, for `x` on the grid and `h` on `delta * grid`.
//! - `omega_j_star` / `omega_inf_combined`: infima over `a` of moduli of
//!   `f - a e_j`, located by golden-section search (the objectives are convex
//!   in `a`).

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::basis::GridSpec;
use crate::error::{precondition, Error, Result};
use crate::function::FunctionHandle;

pub const DEFAULT_GRID: usize = 2000;

// Slack when comparing grid distances against delta.
const DIST_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub x: f64,
    pub h: f64,
    /// Minimizing multiple of `e_j`, for the infimum-type moduli.
    pub a: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusResult {
    pub value: f64,
    /// `h = 0` means no admissible argument exists on the grid (value 0).
    pub witness: Witness,
}

impl ModulusResult {
    fn empty() -> Self {
        Self {
            value: 0.0,
            witness: Witness { x: 0.0, h: 0.0, a: None },
        }
    }
}

#[inline]
fn within(dist: f64, delta: f64) -> bool {
    dist <= delta + DIST_SLACK * delta.max(1.0)
}

/// `omega1` of sampled values `values[i] = g(xs[i])`.
pub fn omega1_values(xs: &[f64], values: &[f64], delta: f64) -> ModulusResult {
    debug_assert_eq!(xs.len(), values.len());
    let mut best = ModulusResult::empty();
    // monotone deques over the window [lo, k]: indices with decreasing
    // (resp. increasing) values
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut lo = 0;
    for k in 0..xs.len() {
        while !within(xs[k] - xs[lo], delta) {
            lo += 1;
        }
        while maxq.front().is_some_and(|&i| i < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < lo) {
            minq.pop_front();
        }
        if let Some(&i) = maxq.front() {
            let d = values[i] - values[k];
            if d > best.value {
                best = pair(xs, i, k, d);
            }
        }
        if let Some(&i) = minq.front() {
            let d = values[k] - values[i];
            if d > best.value {
                best = pair(xs, i, k, d);
            }
        }
        while maxq.back().is_some_and(|&i| values[i] <= values[k]) {
            maxq.pop_back();
        }
        maxq.push_back(k);
        while minq.back().is_some_and(|&i| values[i] >= values[k]) {
            minq.pop_back();
        }
        minq.push_back(k);
    }
    best
}

fn pair(xs: &[f64], i: usize, k: usize, value: f64) -> ModulusResult {
    ModulusResult {
        value,
        witness: Witness {
            x: xs[i],
            h: xs[k] - xs[i],
            a: None,
        },
    }
}

/// `omega2` of sampled values over symmetric triples `x_i - h, x_i, x_i + h`.
pub fn omega2_values(xs: &[f64], values: &[f64], delta: f64) -> ModulusResult {
    debug_assert_eq!(xs.len(), values.len());
    let m = xs.len();
    let mut best = ModulusResult::empty();
    for i in 1..m.saturating_sub(1) {
        let reach = i.min(m - 1 - i);
        for d in 1..=reach {
            let h = xs[i + d] - xs[i];
            if !within(h, delta) {
                break;
            }
            let h_left = xs[i] - xs[i - d];
            if (h - h_left).abs() > DIST_SLACK {
                continue;
            }
            let v = (values[i + d] - 2.0 * values[i] + values[i - d]).abs();
            if v > best.value {
                best = ModulusResult {
                    value: v,
                    witness: Witness { x: xs[i], h, a: None },
                };
            }
        }
    }
    best
}

pub fn omega1(f: &FunctionHandle, delta: f64, grid: &GridSpec) -> Result<ModulusResult> {
    if delta.is_nan() || delta <= 0.0 {
        return precondition(format!("omega1 requires delta > 0 (got {delta})"));
    }
    let xs = grid.points();
    Ok(omega1_values(xs, &f.sample(xs), delta))
}

pub fn omega2(f: &FunctionHandle, delta: f64, grid: &GridSpec) -> Result<ModulusResult> {
    check_omega2_delta(delta)?;
    let xs = grid.points();
    Ok(omega2_values(xs, &f.sample(xs), delta))
}

fn check_omega2_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.5 {
        Ok(())
    } else {
        precondition(format!("omega2 requires 0 < delta <= 1/2 (got {delta})"))
    }
}

/// First-order Ditzian-Totik modulus.
pub fn omega_phi_1(f: &FunctionHandle, delta: f64, grid: &GridSpec) -> Result<ModulusResult> {
    if delta.is_nan() || delta <= 0.0 {
        return precondition(format!("omega_phi_1 requires delta > 0 (got {delta})"));
    }
    let xs = grid.points();
    let hs: Vec<f64> = xs.iter().filter(|&&t| t > 0.0).map(|&t| delta * t).collect();
    let best = xs
        .par_iter()
        .map(|&x| {
            let half_phi = 0.5 * (x * (1.0 - x)).sqrt();
            let mut best = ModulusResult::empty();
            for &h in &hs {
                let s = half_phi * h;
                if x - s < 0.0 || x + s > 1.0 {
                    break;
                }
                let v = (f.eval(x + s) - f.eval(x - s)).abs();
                if v > best.value {
                    best = ModulusResult {
                        value: v,
                        witness: Witness { x, h, a: None },
                    };
                }
            }
            best
        })
        .reduce(ModulusResult::empty, max_modulus);
    Ok(best)
}

// Order-independent maximum: ties broken by the smaller (x, h).
fn max_modulus(a: ModulusResult, b: ModulusResult) -> ModulusResult {
    let key = |r: &ModulusResult| (r.value, -r.witness.x, -r.witness.h);
    if key(&b).partial_cmp(&key(&a)) == Some(std::cmp::Ordering::Greater) {
        b
    } else {
        a
    }
}

/// `inf_a omega1(f - a e_j; delta)`.
pub fn omega_j_star(
    f: &FunctionHandle,
    j: usize,
    delta: f64,
    grid: &GridSpec,
) -> Result<ModulusResult> {
    if j < 1 {
        return precondition("omega_j_star requires j >= 1");
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return precondition(format!("omega_j_star requires 0 < delta <= 1 (got {delta})"));
    }
    let xs = grid.points();
    let fv = f.sample(xs);
    let ev: Vec<f64> = xs.iter().map(|&x| x.powi(j as i32)).collect();
    minimize_over_multiple(&fv, &ev, |g| omega1_values(xs, g, delta))
}

/// `inf_a [omega2(f - a e_j; delta2) + omega1(f - a e_j; delta1)]`.
///
/// `delta1 = 0` is allowed and contributes nothing.
pub fn omega_inf_combined(
    f: &FunctionHandle,
    j: usize,
    delta2: f64,
    delta1: f64,
    grid: &GridSpec,
) -> Result<ModulusResult> {
    if j < 1 {
        return precondition("omega_inf_combined requires j >= 1");
    }
    check_omega2_delta(delta2)?;
    if !(0.0..=1.0).contains(&delta1) {
        return precondition(format!("omega_inf_combined requires 0 <= delta1 <= 1 (got {delta1})"));
    }
    let xs = grid.points();
    let fv = f.sample(xs);
    let ev: Vec<f64> = xs.iter().map(|&x| x.powi(j as i32)).collect();
    minimize_over_multiple(&fv, &ev, |g| {
        let w2 = omega2_values(xs, g, delta2);
        let w1 = if delta1 > 0.0 {
            omega1_values(xs, g, delta1).value
        } else {
            0.0
        };
        ModulusResult {
            value: w2.value + w1,
            witness: w2.witness,
        }
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const A_TOL: f64 = 1e-8;
// The bracket grows by this factor each time the minimizer lands on its edge.
const BRACKET_GROWTH: f64 = 4.0;
const MAX_BRACKET_EXPANSIONS: usize = 8;

/// Golden-section search for `inf_a objective(fv - a ev)`, starting from
/// `[-B, B]` with `B = 1 + 10 max|f|` and widening the bracket while the
/// minimizer sits on its edge. Returns the best evaluated point.
fn minimize_over_multiple(
    fv: &[f64],
    ev: &[f64],
    objective: impl Fn(&[f64]) -> ModulusResult,
) -> Result<ModulusResult> {
    let mut buf = vec![0.0; fv.len()];
    let mut eval = |a: f64| {
        for ((b, &f), &e) in buf.iter_mut().zip(fv).zip(ev) {
            *b = f - a * e;
        }
        let mut r = objective(&buf);
        r.witness.a = Some(a);
        r
    };

    let at_zero = eval(0.0);
    if at_zero.value == 0.0 {
        return Ok(at_zero);
    }
    let mut bound = 1.0 + 10.0 * fv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut best = at_zero;
    for _ in 0..=MAX_BRACKET_EXPANSIONS {
        best = golden_section(&mut eval, -bound, bound, best);
        let a = best.witness.a.unwrap_or(0.0);
        if bound - a.abs() > 1e-6 * bound {
            return Ok(best);
        }
        bound *= BRACKET_GROWTH;
    }
    Err(Error::BracketExhausted {
        lo: -bound / BRACKET_GROWTH,
        hi: bound / BRACKET_GROWTH,
        last: best.witness.a.unwrap_or(0.0),
    })
}

fn golden_section(
    eval: &mut impl FnMut(f64) -> ModulusResult,
    mut lo: f64,
    mut hi: f64,
    mut best: ModulusResult,
) -> ModulusResult {
    let mut probe = |a: f64, best: &mut ModulusResult| {
        let r = eval(a);
        if r.value < best.value {
            *best = r;
        }
        r.value
    };
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let mut fc = probe(c, &mut best);
    let mut fd = probe(d, &mut best);
    while hi - lo > A_TOL {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = probe(c, &mut best);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = probe(d, &mut best);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Smoothness;

    fn grid() -> GridSpec {
        GridSpec::uniform(1000).unwrap()
    }

    fn constant(c: f64) -> FunctionHandle {
        FunctionHandle::builder("c", Smoothness::Analytic, move |_| c).build().unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn omega1_examples() {
        let g = grid();
        let e1 = FunctionHandle::monomial(1);
        assert!(close(omega1(&e1, 0.1, &g).unwrap().value, 0.1, 1e-12));
        assert_eq!(omega1(&constant(3.0), 0.3, &g).unwrap().value, 0.0);
        let abs = FunctionHandle::from_spec("abs_half").unwrap();
        let r = omega1(&abs, 0.2, &g).unwrap();
        assert!(close(r.value, 0.2, 1e-12));
        assert!(r.witness.h > 0.0 && r.witness.h <= 0.2 + 1e-12);
        assert!(omega1(&e1, 0.0, &g).is_err());
    }

    #[test]
    fn omega1_matches_pairwise_scan() {
        let f = FunctionHandle::from_spec("runge").unwrap();
        let g = GridSpec::uniform(200).unwrap();
        let xs = g.points();
        let v = f.sample(xs);
        for delta in [0.003, 0.05, 0.17, 1.0] {
            let mut brute: f64 = 0.0;
            for i in 0..xs.len() {
                for k in i + 1..xs.len() {
                    if xs[k] - xs[i] <= delta + 1e-12 {
                        brute = brute.max((v[k] - v[i]).abs());
                    }
                }
            }
            assert_eq!(omega1_values(xs, &v, delta).value, brute);
        }
    }

    #[test]
    fn omega1_below_grid_spacing_is_zero() {
        let g = GridSpec::uniform(10).unwrap();
        let r = omega1(&FunctionHandle::monomial(1), 0.05, &g).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.witness.h, 0.0);
    }

    #[test]
    fn omega2_examples() {
        let g = grid();
        assert!(omega2(&FunctionHandle::monomial(1), 0.3, &g).unwrap().value < 1e-15);
        assert!(close(omega2(&FunctionHandle::monomial(2), 0.1, &g).unwrap().value, 0.02, 1e-12));
        let abs = FunctionHandle::from_spec("abs_half").unwrap();
        let r = omega2(&abs, 0.1, &g).unwrap();
        assert!(close(r.value, 0.2, 1e-12));
        assert!(close(r.witness.x, 0.5, 1e-12));
        assert!(omega2(&abs, 0.6, &g).is_err());
        assert!(omega2(&abs, 0.0, &g).is_err());
    }

    #[test]
    fn omega2_on_non_uniform_grid_uses_symmetric_triples_only() {
        let g = GridSpec::new(vec![0.0, 0.1, 0.5, 0.9, 1.0]).unwrap();
        let r = omega2(&FunctionHandle::monomial(2), 0.5, &g).unwrap();
        // triples (0.1, 0.5, 0.9) and (0, 0.5, 1)
        assert!(close(r.value, 0.5, 1e-12));
    }

    #[test]
    fn omega_phi_examples() {
        let g = grid();
        assert_eq!(omega_phi_1(&constant(2.0), 0.3, &g).unwrap().value, 0.0);
        for delta in [0.1, 0.5, 1.0] {
            let r = omega_phi_1(&FunctionHandle::monomial(1), delta, &g).unwrap();
            assert!(close(r.value, delta / 2.0, 1e-12), "{delta}: {}", r.value);
            assert!(close(r.witness.x, 0.5, 1e-12));
        }
    }

    #[test]
    fn omega_phi_e2_matches_dense_scan() {
        let e2 = FunctionHandle::monomial(2);
        let r = omega_phi_1(&e2, 0.2, &GridSpec::uniform(2000).unwrap()).unwrap();
        // (x+s)^2 - (x-s)^2 = 4xs = 2 x h phi(x); sup at h = delta over a fine x scan
        let mut oracle: f64 = 0.0;
        for i in 0..=200_000 {
            let x = i as f64 / 200_000.0;
            let s = 0.5 * 0.2 * (x * (1.0 - x)).sqrt();
            if x - s >= 0.0 && x + s <= 1.0 {
                oracle = oracle.max(4.0 * x * s);
            }
        }
        assert!(close(r.value, oracle, 1e-6), "{} vs {oracle}", r.value);
    }

    #[test]
    fn j_star_examples() {
        let g = grid();
        for j in 1..4 {
            let f = FunctionHandle::polynomial("5ej", &{
                let mut c = vec![0.0; j + 1];
                c[j] = 5.0;
                c
            })
            .unwrap();
            let r = omega_j_star(&f, j, 0.1, &g).unwrap();
            assert!(r.value < 1e-7, "{j}: {}", r.value);
            assert!(close(r.witness.a.unwrap(), 5.0, 1e-6));
        }
        let r = omega_j_star(&FunctionHandle::monomial(0), 2, 0.1, &g).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.witness.a, Some(0.0));
    }

    #[test]
    fn j_star_exp_matches_dense_scan() {
        let g = grid();
        let f = FunctionHandle::from_spec("exp").unwrap();
        let xs = g.points();
        let fv = f.sample(xs);
        let r = omega_j_star(&f, 2, 0.1, &g).unwrap();
        let w1 = omega1(&f, 0.1, &g).unwrap().value;
        assert!(r.value < w1);
        let mut oracle = f64::INFINITY;
        for i in -10_000..=10_000 {
            let a = i as f64 * 1e-3;
            let gv: Vec<f64> = xs.iter().zip(&fv).map(|(x, v)| v - a * x * x).collect();
            oracle = oracle.min(omega1_values(xs, &gv, 0.1).value);
        }
        assert!(r.value <= oracle + 1e-9);
        assert!(oracle - r.value < 1e-3 * 0.2);
    }

    #[test]
    fn combined_examples() {
        let g = grid();
        let f = FunctionHandle::from_spec("poly:3,0,2").unwrap();
        assert!(omega_inf_combined(&f, 2, 0.1, 0.05, &g).unwrap().value < 1e-7);

        let e1 = FunctionHandle::monomial(1);
        let r = omega_inf_combined(&e1, 2, 0.1, 0.1, &g).unwrap();
        assert!(r.value <= 0.1 + 1e-12);

        let exp = FunctionHandle::from_spec("exp").unwrap();
        let r = omega_inf_combined(&exp, 2, 0.125, 1.0 / 64.0, &g).unwrap();
        let xs = g.points();
        let fv = exp.sample(xs);
        let objective = |a: f64| {
            let gv: Vec<f64> = xs.iter().zip(&fv).map(|(x, v)| v - a * x * x).collect();
            omega2_values(xs, &gv, 0.125).value + omega1_values(xs, &gv, 1.0 / 64.0).value
        };
        // coarse scan, then a fine scan around the coarse minimizer
        let (mut a0, mut oracle) = (0.0, f64::INFINITY);
        for i in -3000..=3000 {
            let a = i as f64 * 1e-3;
            let v = objective(a);
            if v < oracle {
                (a0, oracle) = (a, v);
            }
        }
        for i in -2000..=2000 {
            oracle = oracle.min(objective(a0 + i as f64 * 1e-6));
        }
        assert!(r.value <= oracle + 1e-9);
        assert!(oracle - r.value < 1e-6, "{} vs {oracle}", r.value);
    }
}

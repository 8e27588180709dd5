//! Iterates `B_{n,0,j}^m` and their convergence to
//! `f(0) + (f(1) - f(0)) e_j`.
//!
//! `B_{n,0,j} f` only depends on the node values `f(t_{n,k})`, so the
//! iteration runs on Bernstein coefficient vectors: if `v` holds the
//! coefficients of `B^m f`, those of `B^{m+1} f` are `M v` with
//! `M[i][k] = p_{n,k}(t_{n,i})`.

use rayon::prelude::*;

use crate::basis::{basis_row, BernsteinForm, GridSpec};
use crate::error::{precondition, Result};
use crate::function::FunctionHandle;
use crate::operators::{akr_nodes, AkrNodes};

/// Grid size for the sup norms reported here.
pub const NORM_GRID: usize = 500;

/// Default iteration cap for trajectories.
pub const DEFAULT_M_MAX: usize = 500;

/// Trajectories stop once successive sup distances change by less than this.
pub const EARLY_STOP: f64 = 1e-13;

/// `1 - 2^{1-n}`, the Lipschitz constant of `B_{n,0,j}` on functions with
/// fixed endpoint values.
pub fn contraction_factor(n: usize) -> f64 {
    1.0 - 0.5f64.powi(n as i32 - 1)
}

/// Row-stochastic `(n+1) x (n+1)` matrix `M[i][k] = p_{n,k}(t_{n,i}^j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationMatrix {
    nodes: AkrNodes,
    entries: Vec<f64>,
}

impl IterationMatrix {
    pub fn n(&self) -> usize {
        self.nodes.n()
    }

    pub fn j(&self) -> usize {
        self.nodes.j()
    }

    pub fn nodes(&self) -> &AkrNodes {
        &self.nodes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n() + 1;
        &self.entries[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.row(i)[k]
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let w = self.n() + 1;
        assert_eq!(v.len(), w, "vector length must be n + 1");
        self.entries
            .chunks_exact(w)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_iteration_matrix(n: usize, j: usize) -> Result<IterationMatrix> {
    let nodes = akr_nodes(n, j)?;
    let entries = nodes
        .nodes()
        .par_iter()
        .flat_map_iter(|&t| basis_row(n, t))
        .collect();
    Ok(IterationMatrix { nodes, entries })
}

/// Bernstein form of `B^m f`, `m >= 1`.
pub fn iterate_akr(f: &FunctionHandle, n: usize, j: usize, m: usize) -> Result<BernsteinForm> {
    if m < 1 {
        return precondition("iterate count m must be at least 1");
    }
    let matrix = build_iteration_matrix(n, j)?;
    let mut v = f.sample(matrix.nodes().nodes());
    for _ in 1..m {
        v = matrix.apply(&v);
    }
    BernsteinForm::new(v)
}

/// `x -> f(0) + (f(1) - f(0)) x^j`.
pub fn iterate_limit(f: &FunctionHandle, j: usize) -> Result<FunctionHandle> {
    if j < 1 {
        return precondition("require j >= 1");
    }
    let (a, b) = (f.eval(0.0), f.eval(1.0));
    let mut coeffs = vec![0.0; j + 1];
    coeffs[0] = a;
    coeffs[j] += b - a;
    FunctionHandle::polynomial(format!("lim_{}_{}", f.id(), j), &coeffs)
}

/// Sup norm of a degree-`n` Bernstein form over `uniform(NORM_GRID)`.
struct SupNorm {
    rows: Vec<Vec<f64>>,
}

impl SupNorm {
    fn new(n: usize) -> Self {
        let grid = GridSpec::uniform(NORM_GRID).expect("positive grid size");
        Self {
            rows: grid.points().iter().map(|&x| basis_row(n, x)).collect(),
        }
    }

    fn of(&self, coeffs: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(p, c)| p * c).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.of(&diff)
    }
}

/// `r_m = ||B^m f - B^m g||_inf` for `m = 1..=m_max`, over `uniform(500)`.
/// Requires `f` and `g` to share their endpoint values.
pub fn contraction_report(
    f: &FunctionHandle,
    g: &FunctionHandle,
    n: usize,
    j: usize,
    m_max: usize,
) -> Result<Vec<f64>> {
    for x in [0.0, 1.0] {
        if (f.eval(x) - g.eval(x)).abs() > 1e-12 {
            return precondition(format!(
                "`{}` and `{}` differ at x = {x}; both must lie in the same class \
                 X_(alpha,beta) = {{h : h(0) = alpha, h(1) = beta}}",
                f.id(),
                g.id()
            ));
        }
    }
    let matrix = build_iteration_matrix(n, j)?;
    let norm = SupNorm::new(n);
    let mut v = f.sample(matrix.nodes().nodes());
    let mut w = g.sample(matrix.nodes().nodes());
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        if m > 1 {
            v = matrix.apply(&v);
            w = matrix.apply(&w);
        }
        out.push(norm.distance(&v, &w));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateStep {
    pub m: usize,
    /// `||B^m f - lim||_inf` over `uniform(500)`.
    pub sup_distance: f64,
}

/// Distances from `B^m f` to the limit for `m = 1, 2, ...`, stopping at
/// `m_max` or once the distance changes by less than [`EARLY_STOP`].
pub fn limit_trajectory(
    f: &FunctionHandle,
    n: usize,
    j: usize,
    m_max: usize,
) -> Result<Vec<IterateStep>> {
    if m_max < 1 {
        return precondition("iterate count m must be at least 1");
    }
    let matrix = build_iteration_matrix(n, j)?;
    let limit = iterate_limit(f, j)?;
    // the limit is a fixed point, so its coefficients are its node values
    let target = limit.sample(matrix.nodes().nodes());
    let norm = SupNorm::new(n);
    let mut v = f.sample(matrix.nodes().nodes());
    let mut steps: Vec<IterateStep> = Vec::new();
    for m in 1..=m_max {
        if m > 1 {
            v = matrix.apply(&v);
        }
        let d = norm.distance(&v, &target);
        let stop = steps
            .last()
            .is_some_and(|prev| (prev.sup_distance - d).abs() < EARLY_STOP);
        steps.push(IterateStep { m, sup_distance: d });
        if stop {
            break;
        }
    }
    Ok(steps)
}

/// First index `m` (1-based) with `r_{m+1} > (factor + 1e-9) r_m + 1e-13 scale`,
/// together with the ratio `r_{m+1} / r_m`. `scale` is the magnitude of the
/// iterated values (e.g. `max |f|`); the absolute term absorbs the rounding
/// in distances that are differences of such values.
pub fn first_contraction_violation(distances: &[f64], factor: f64, scale: f64) -> Option<(usize, f64)> {
    let floor = 1e-13 * scale;
    distances.windows(2).enumerate().find_map(|(i, w)| {
        (w[1] > (factor + 1e-9) * w[0] + floor).then_some((i + 1, w[1] / w[0]))
    })
}

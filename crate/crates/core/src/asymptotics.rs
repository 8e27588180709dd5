//! Voronovskaya-type behaviour of `B_{n,0,j}`: the limit of
//! `n (B_{n,0,j} f - f)(x)` and the Taylor residual controlled by the
//! Ditzian-Totik modulus of `f''`.

use rayon::prelude::*;

use crate::basis::{basis_row, check_unit, de_casteljau, GridSpec};
use crate::error::{precondition, Error, Result};
use crate::function::FunctionHandle;
use crate::moduli::omega_phi_1;
use crate::operators::{akr_nodes, check_nj};

/// `x(1-x)/2 f''(x) - (j-1)(1-x)/2 f'(x)` for `x` in `(0, 1)`.
pub fn voronovskaya_target(f: &FunctionHandle, j: usize, x: f64) -> Result<f64> {
    if j < 1 {
        return precondition("require j >= 1");
    }
    if !(x > 0.0 && x < 1.0) {
        return precondition(format!("the limit is stated for x in (0, 1) (got {x})"));
    }
    let (d1, d2) = (f.d1(x)?, f.d2(x)?);
    Ok(0.5 * x * (1.0 - x) * d2 - 0.5 * (j - 1) as f64 * (1.0 - x) * d1)
}

/// `n (B_{n,0,j}(f; x) - f(x))`, evaluated on the coefficients
/// `f(t_{n,k}) - f(x)` to avoid cancellation.
pub fn scaled_error(f: &FunctionHandle, n: usize, j: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    let nodes = akr_nodes(n, j)?;
    let fx = f.eval(x);
    let shifted: Vec<f64> = nodes.nodes().iter().map(|&t| f.eval(t) - fx).collect();
    Ok(n as f64 * de_casteljau(&shifted, x))
}

/// Two-point extrapolation under the model `s(n) = a + b/n`.
pub fn richardson(n1: usize, s1: f64, n2: usize, s2: f64) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    (n2 * s2 - n1 * s1) / (n2 - n1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoronovskayaTrace {
    pub f_id: String,
    pub j: usize,
    pub x: f64,
    pub n_list: Vec<usize>,
    pub scaled_errors: Vec<f64>,
    /// [`richardson`] on the last two entries; `2 s(2n) - s(n)` for a doubling list.
    pub extrapolated: f64,
    pub target: f64,
}

impl VoronovskayaTrace {
    /// `|extrapolated - target| <= max(rel |target|, abs)`.
    pub fn within(&self, rel: f64, abs: f64) -> bool {
        (self.extrapolated - self.target).abs() <= (rel * self.target.abs()).max(abs)
    }
}

pub fn voronovskaya_trace(
    f: &FunctionHandle,
    j: usize,
    x: f64,
    n_list: &[usize],
) -> Result<VoronovskayaTrace> {
    let target = voronovskaya_target(f, j, x)?;
    if n_list.len() < 2 {
        return precondition("extrapolation needs at least two values of n");
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return precondition("n_list must be strictly increasing");
    }
    for &n in n_list {
        check_nj(n, j)?;
    }
    let scaled_errors = n_list
        .par_iter()
        .map(|&n| scaled_error(f, n, j, x))
        .collect::<Result<Vec<_>>>()?;
    let k = n_list.len();
    let extrapolated = richardson(n_list[k - 2], scaled_errors[k - 2], n_list[k - 1], scaled_errors[k - 1]);
    Ok(VoronovskayaTrace {
        f_id: f.id().to_string(),
        j,
        x,
        n_list: n_list.to_vec(),
        scaled_errors,
        extrapolated,
        target,
    })
}

/// `|n(B f - f)(x) + f'(x) n B(x e_0 - e_1; x) - f''(x)/2 n B((e_1 - x e_0)^2; x)|`.
///
/// Summed node by node as `n sum_k R(t_k) p_{n,k}(x)`, with `R` the
/// second-order Taylor remainder of `f` at `x`.
pub fn pre_voronovskaya_residual(f: &FunctionHandle, n: usize, j: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    let nodes = akr_nodes(n, j)?;
    let (fx, d1, d2) = (f.eval(x), f.d1(x)?, f.d2(x)?);
    let row = basis_row(n, x);
    let sum: f64 = nodes
        .nodes()
        .iter()
        .zip(&row)
        .map(|(&t, &p)| {
            let u = t - x;
            (f.eval(t) - fx - d1 * u - 0.5 * d2 * u * u) * p
        })
        .sum();
    Ok((n as f64 * sum).abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FintaEstimate {
    /// Max of `residual / omega_phi_1(f''; 1/sqrt n)` over all cells kept.
    pub value: f64,
    /// The same maximum restricted to each `n`, in `n_list` order.
    pub per_n: Vec<(usize, f64)>,
    pub cells: usize,
    pub skipped: usize,
}

/// Empirical lower bound on the constant `C` in
/// `residual <= C omega_phi_1(f''; 1/sqrt n)`. Cells where the modulus is
/// below `1e-12` are skipped.
pub fn estimate_finta_constant(
    f_set: &[FunctionHandle],
    j: usize,
    n_list: &[usize],
    x_grid: &[f64],
    modulus_grid: &GridSpec,
) -> Result<FintaEstimate> {
    for f in f_set {
        if !f.has_d2() {
            return Err(Error::MissingDerivative {
                id: f.id().to_string(),
                which: "second",
            });
        }
    }
    for &n in n_list {
        check_nj(n, j)?;
    }
    let mut per_n = Vec::with_capacity(n_list.len());
    let (mut cells, mut skipped, mut value) = (0, 0, f64::NEG_INFINITY);
    for &n in n_list {
        let mut best_n = f64::NEG_INFINITY;
        for f in f_set {
            let modulus = omega_phi_1(&f.second_derivative()?, 1.0 / (n as f64).sqrt(), modulus_grid)?.value;
            if modulus < 1e-12 {
                skipped += x_grid.len();
                continue;
            }
            let ratios = x_grid
                .par_iter()
                .map(|&x| Ok(pre_voronovskaya_residual(f, n, j, x)? / modulus))
                .collect::<Result<Vec<f64>>>()?;
            cells += ratios.len();
            best_n = ratios.into_iter().fold(best_n, f64::max);
        }
        if best_n.is_finite() {
            per_n.push((n, best_n));
            value = value.max(best_n);
        }
    }
    if cells == 0 {
        return Err(Error::EmptySweep(
            "every cell had a vanishing modulus of f''".to_string(),
        ));
    }
    Ok(FintaEstimate {
        value,
        per_n,
        cells,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(id: &str) -> FunctionHandle {
        FunctionHandle::from_spec(id).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn target_examples() {
        for x in [0.1, 0.5, 0.77] {
            assert!(close(voronovskaya_target(&f("e2"), 2, x).unwrap(), 0.0, 1e-15));
            assert!(close(voronovskaya_target(&f("e1"), 2, x).unwrap(), -(1.0 - x) / 2.0, 1e-15));
            let exp = f("exp");
            assert!(close(
                voronovskaya_target(&exp, 1, x).unwrap(),
                x * (1.0 - x) * x.exp() / 2.0,
                1e-15
            ));
        }
        assert!(matches!(
            voronovskaya_target(&f("abs_half"), 2, 0.3),
            Err(Error::MissingDerivative { .. })
        ));
        assert!(voronovskaya_target(&f("e2"), 2, 0.0).is_err());
    }

    #[test]
    fn trace_examples() {
        let doubling: Vec<usize> = (8..=12).map(|p| 1 << p).collect();
        let t = voronovskaya_trace(&f("e2"), 2, 0.4, &doubling).unwrap();
        assert!(t.scaled_errors.iter().all(|s| s.abs() < 1e-8));
        assert!(t.extrapolated.abs() < 1e-8);

        let t = voronovskaya_trace(&f("e1"), 2, 0.5, &doubling).unwrap();
        assert!(t.within(0.02, 0.0), "{t:?}");

        let t = voronovskaya_trace(&f("exp"), 3, 0.3, &doubling).unwrap();
        assert!(t.within(0.02, 0.0), "{t:?}");

        assert!(voronovskaya_trace(&f("exp"), 3, 0.3, &[64, 32]).is_err());
        assert!(voronovskaya_trace(&f("exp"), 3, 0.3, &[2, 4]).is_err());
    }

    #[test]
    fn richardson_doubling_form() {
        assert_eq!(richardson(100, 3.0, 200, 5.0), 2.0 * 5.0 - 3.0);
    }

    #[test]
    fn residual_vanishes_for_quadratics() {
        let q = FunctionHandle::polynomial("q", &[0.3, -1.2, 2.5]).unwrap();
        let a = FunctionHandle::polynomial("a", &[-2.0, 4.0]).unwrap();
        for j in 1..=3 {
            for n in [j, 7, 100] {
                for x in [0.0, 0.2, 0.5, 0.9, 1.0] {
                    assert!(pre_voronovskaya_residual(&q, n, j, x).unwrap() <= 1e-9 * n as f64);
                    assert!(pre_voronovskaya_residual(&a, n, j, x).unwrap() <= 1e-9 * n as f64);
                }
            }
        }
    }

    #[test]
    fn residual_for_exp_is_controlled() {
        let exp = f("exp");
        let r = pre_voronovskaya_residual(&exp, 256, 2, 0.5).unwrap();
        let w = omega_phi_1(&exp.second_derivative().unwrap(), 1.0 / 16.0, &GridSpec::uniform(500).unwrap())
            .unwrap()
            .value;
        assert!(r > 0.0 && w > 0.0);
        assert!(r / w < 10.0, "{}", r / w);
    }

    #[test]
    fn finta_estimate_for_quadratics_is_empty() {
        let q = FunctionHandle::polynomial("q", &[1.0, 2.0, 3.0]).unwrap();
        let r = estimate_finta_constant(&[q], 2, &[16, 32], &[0.25, 0.5], &GridSpec::uniform(200).unwrap());
        assert!(matches!(r, Err(Error::EmptySweep(_))));
    }
}

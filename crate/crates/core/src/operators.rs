//! The operator `B_{n,0,j}` and its relatives: classical Bernstein, King's
//! operator and the tau-modified Bernstein operator.

use std::fmt;
use std::sync::Arc;

use crate::basis::{basis_row, check_unit, de_casteljau, BernsteinForm};
use crate::error::{precondition, Result};
use crate::function::{FunctionHandle, RealFn, Smoothness};

/// Sampling nodes `t_{n,k}^j`, `k = 0..n`.
///
/// `t_{n,k}^j` is the `j`-th root of `k(k-1)...(k-j+1) / (n(n-1)...(n-j+1))`.
/// Nodes with `k < j` are exactly 0, the last node is exactly 1, and for
/// `j = 1` the nodes are exactly `k/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AkrNodes {
    n: usize,
    j: usize,
    nodes: Vec<f64>,
}

impl AkrNodes {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

pub(crate) fn check_nj(n: usize, j: usize) -> Result<()> {
    if j < 1 {
        return precondition(format!("require j >= 1 (got j = {j})"));
    }
    if n < j {
        return precondition(format!("require n >= j (got n = {n}, j = {j})"));
    }
    Ok(())
}

pub fn akr_nodes(n: usize, j: usize) -> Result<AkrNodes> {
    check_nj(n, j)?;
    let nodes = (0..=n)
        .map(|k| {
            if k < j {
                0.0
            } else if k == n {
                1.0
            } else if j == 1 {
                k as f64 / n as f64
            } else {
                // log((k-i)/(n-i)) = log1p(-(n-k)/(n-i))
                let gap = (n - k) as f64;
                let log_sum: f64 = (0..j).map(|i| (-gap / (n - i) as f64).ln_1p()).sum();
                (log_sum / j as f64).exp()
            }
        })
        .collect();
    Ok(AkrNodes { n, j, nodes })
}

/// `B_{n,0,j} f = sum_k f(t_{n,k}^j) p_{n,k}`.
pub fn apply_akr(f: &FunctionHandle, n: usize, j: usize) -> Result<BernsteinForm> {
    let nodes = akr_nodes(n, j)?;
    BernsteinForm::new(f.sample(&nodes.nodes))
}

/// Classical Bernstein operator; identical to `apply_akr(f, n, 1)`.
pub fn apply_bernstein(f: &FunctionHandle, n: usize) -> Result<BernsteinForm> {
    if n < 1 {
        return precondition("require n >= 1");
    }
    apply_akr(f, n, 1)
}

/// King's substitution `r_n`, chosen so that `(B_n e_2)(r_n(x)) = x^2`.
pub fn king_rn(n: usize, x: f64) -> Result<f64> {
    if n < 1 {
        return precondition("require n >= 1");
    }
    check_unit(x)?;
    if n == 1 {
        return Ok(x * x);
    }
    // (-1 + sqrt(1 + 4n(n-1)x^2)) / (2(n-1)), rationalised to avoid cancellation
    let nf = n as f64;
    let root = (1.0 + 4.0 * nf * (nf - 1.0) * x * x).sqrt();
    Ok((2.0 * nf * x * x / (1.0 + root)).clamp(0.0, 1.0))
}

/// King's operator `(B_n f)(r_n(x))`. Not a polynomial operator, so only
/// pointwise values are exposed.
pub fn apply_king(f: &FunctionHandle, n: usize, x: f64) -> Result<f64> {
    let r = king_rn(n, x)?;
    apply_bernstein(f, n)?.eval(r)
}

/// A strictly increasing bijection of `[0, 1]` together with its inverse.
#[derive(Clone)]
pub struct TauSpec {
    tau: RealFn,
    tau_inverse: RealFn,
}

impl fmt::Debug for TauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TauSpec")
    }
}

impl TauSpec {
    /// Checks `tau(0) = 0`, `tau(1) = 1`, strict monotonicity on `i/100` and
    /// `tau_inverse(tau(x)) = x` to `1e-8` there.
    pub fn new(
        tau: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tau_inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            tau: Arc::new(tau),
            tau_inverse: Arc::new(tau_inverse),
        };
        if (spec.tau(0.0)).abs() > 1e-12 || (spec.tau(1.0) - 1.0).abs() > 1e-12 {
            return precondition("tau must satisfy tau(0) = 0 and tau(1) = 1");
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let t = spec.tau(x);
            if t <= prev {
                return precondition(format!("tau is not strictly increasing near x = {x}"));
            }
            prev = t;
            if (spec.tau_inverse(t) - x).abs() > 1e-8 {
                return precondition(format!("tau_inverse(tau(x)) != x at x = {x}"));
            }
        }
        Ok(spec)
    }

    /// `tau(x) = x^j` with inverse `x^{1/j}`.
    pub fn power(j: usize) -> Result<Self> {
        if j < 1 {
            return precondition("require j >= 1");
        }
        let p = j as i32;
        let inv = 1.0 / j as f64;
        Self::new(move |x: f64| x.powi(p), move |x: f64| x.powf(inv))
    }

    pub fn tau(&self, x: f64) -> f64 {
        (self.tau)(x)
    }

    pub fn tau_inverse(&self, x: f64) -> f64 {
        (self.tau_inverse)(x)
    }

    /// `tau` as a function handle (no derivatives).
    pub fn as_function(&self) -> FunctionHandle {
        let tau = self.tau.clone();
        FunctionHandle::builder("tau", Smoothness::C0, move |x| tau(x))
            .build()
            .expect("no derivatives to validate")
    }
}

/// `B_n^tau(f; x) = (B_n (f o tau^{-1}))(tau(x))`.
pub fn apply_tau(f: &FunctionHandle, tau: &TauSpec, n: usize, x: f64) -> Result<f64> {
    if n < 1 {
        return precondition("require n >= 1");
    }
    check_unit(x)?;
    let coeffs: Vec<f64> = (0..=n)
        .map(|k| f.eval(tau.tau_inverse(k as f64 / n as f64)))
        .collect();
    let t = tau.tau(x).clamp(0.0, 1.0);
    Ok(de_casteljau(&coeffs, t))
}

/// First and second central moments `B((e_1 - x)^r; x)`, `r = 1, 2`,
/// from precomputed nodes.
pub fn akr_moments(nodes: &AkrNodes, x: f64) -> Result<(f64, f64)> {
    check_unit(x)?;
    let row = basis_row(nodes.n, x);
    Ok(moments_from_row(&nodes.nodes, &row, x))
}

pub(crate) fn moments_from_row(nodes: &[f64], row: &[f64], x: f64) -> (f64, f64) {
    nodes
        .iter()
        .zip(row)
        .fold((0.0, 0.0), |(m1, m2), (&t, &p)| {
            let d = t - x;
            (m1 + d * p, m2 + d * d * p)
        })
}

/// `B_{n,0,j}(e_1; x) - x`, which lies in `[-(j-1)/n, 0]`.
pub fn akr_first_moment(n: usize, j: usize, x: f64) -> Result<f64> {
    Ok(akr_moments(&akr_nodes(n, j)?, x)?.0)
}

/// `B_{n,0,j}((e_1 - x)^2; x)`.
pub fn akr_second_moment(n: usize, j: usize, x: f64) -> Result<f64> {
    Ok(akr_moments(&akr_nodes(n, j)?, x)?.1)
}

/// `d_n(x) = (1-x)(1 - (1-x)^{n-1})`.
pub fn d_n_profile(n: usize, x: f64) -> Result<f64> {
    if n < 2 {
        return precondition(format!("d_n requires n >= 2 (got {n})"));
    }
    check_unit(x)?;
    let u = 1.0 - x;
    Ok(u * (1.0 - u.powi(n as i32 - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn nodes_small_cases() {
        assert_eq!(akr_nodes(2, 2).unwrap().nodes(), &[0.0, 0.0, 1.0]);
        assert_eq!(
            akr_nodes(5, 1).unwrap().nodes(),
            &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        );
        let t = akr_nodes(3, 2).unwrap();
        assert_eq!(t.nodes()[..2], [0.0, 0.0]);
        assert!(close(t.nodes()[2], 1.0 / 3f64.sqrt(), 1e-15));
        assert_eq!(t.nodes()[3], 1.0);
    }

    #[test]
    fn node_vector_for_n_equal_j_plus_one() {
        // (0, ..., 0, n^{-1/j}, 1)
        for j in 1..8 {
            let n = j + 1;
            let t = akr_nodes(n, j).unwrap();
            assert!(t.nodes()[..j].iter().all(|&v| v == 0.0));
            assert!(close(t.nodes()[j], (n as f64).powf(-1.0 / j as f64), 1e-15));
            assert_eq!(t.nodes()[n], 1.0);
        }
    }

    #[test]
    fn degenerate_n_equal_j_coefficient_pattern() {
        let f = FunctionHandle::from_spec("exp").unwrap();
        for j in 1..6 {
            let b = apply_akr(&f, j, j).unwrap();
            let c = b.coeffs();
            assert!(c[..j].iter().all(|&v| v == 1.0));
            assert_eq!(c[j], std::f64::consts::E);
        }
    }

    #[test]
    fn node_range_errors() {
        assert!(akr_nodes(3, 5).is_err());
        assert!(akr_nodes(3, 0).is_err());
    }

    #[test]
    fn akr_examples() {
        let e0 = FunctionHandle::monomial(0);
        let b = apply_akr(&e0, 9, 3).unwrap();
        assert!(b.coeffs().iter().all(|&c| c == 1.0));

        let e2 = FunctionHandle::monomial(2);
        let b = apply_akr(&e2, 6, 2).unwrap();
        for x in [0.25, 0.5, 0.9] {
            assert!(close(b.eval(x).unwrap(), x * x, 1e-12));
        }

        let e1 = FunctionHandle::monomial(1);
        let b = apply_akr(&e1, 5, 1).unwrap();
        for x in [0.1, 0.45, 0.8] {
            assert!(close(b.eval(x).unwrap(), x, 1e-15));
        }
    }

    #[test]
    fn bernstein_equals_akr_with_j_one() {
        let f = FunctionHandle::from_spec("runge").unwrap();
        assert_eq!(apply_bernstein(&f, 13).unwrap(), apply_akr(&f, 13, 1).unwrap());
    }

    #[test]
    fn bernstein_second_moment_identity() {
        let e2 = FunctionHandle::monomial(2);
        let b = apply_bernstein(&e2, 10).unwrap();
        let e1 = FunctionHandle::monomial(1);
        assert!(close(apply_bernstein(&e1, 10).unwrap().eval(0.3).unwrap(), 0.3, 1e-15));
        for x in [0.0, 0.2, 0.5, 0.71, 1.0] {
            assert!(close(b.eval(x).unwrap(), x * x + x * (1.0 - x) / 10.0, 1e-15));
        }
    }

    #[test]
    fn king_examples() {
        assert_eq!(king_rn(1, 0.5).unwrap(), 0.25);
        assert_eq!(king_rn(2, 1.0).unwrap(), 1.0);
        assert_eq!(king_rn(5, 0.0).unwrap(), 0.0);
        for n in 1..30 {
            assert_eq!(king_rn(n, 1.0).unwrap(), 1.0);
        }

        let e0 = FunctionHandle::monomial(0);
        assert!(close(apply_king(&e0, 7, 0.4).unwrap(), 1.0, 1e-15));
        let e2 = FunctionHandle::monomial(2);
        assert!(close(apply_king(&e2, 4, 0.6).unwrap(), 0.36, 1e-12));
        let e1 = FunctionHandle::monomial(1);
        let expected = (-1.0 + 7f64.sqrt()) / 4.0;
        assert!(close(apply_king(&e1, 3, 0.5).unwrap(), expected, 1e-15));
        assert!(close(expected, 0.411438, 1e-6));
    }

    #[test]
    fn king_reproduces_e2() {
        let e2 = FunctionHandle::monomial(2);
        for n in 1..=50 {
            for i in 0..=40 {
                let x = i as f64 / 40.0;
                assert!(close(apply_king(&e2, n, x).unwrap(), x * x, 1e-10));
            }
        }
    }

    #[test]
    fn tau_examples() {
        let tau = TauSpec::power(2).unwrap();
        let e0 = FunctionHandle::monomial(0);
        assert!(close(apply_tau(&e0, &tau, 5, 0.3).unwrap(), 1.0, 1e-15));

        let e2 = FunctionHandle::monomial(2);
        assert!(close(apply_tau(&e2, &tau, 4, 0.7).unwrap(), 0.49, 1e-12));

        // B_4(sqrt; 1/4) by the five-term sum
        let e1 = FunctionHandle::monomial(1);
        let y: f64 = 0.25;
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        let oracle: f64 = (0..=4)
            .map(|k| binom[k] * y.powi(k as i32) * (1.0 - y).powi(4 - k as i32) * (k as f64 / 4.0).sqrt())
            .sum();
        assert!(close(apply_tau(&e1, &tau, 4, 0.5).unwrap(), oracle, 1e-14));
    }

    #[test]
    fn tau_reproduces_tau() {
        let tau = TauSpec::new(|x: f64| (x.exp() - 1.0) / (1f64.exp() - 1.0), |y: f64| {
            (1.0 + y * (1f64.exp() - 1.0)).ln()
        })
        .unwrap();
        let as_f = tau.as_function();
        for n in [1, 3, 10, 40] {
            for x in [0.0, 0.2, 0.5, 0.93, 1.0] {
                assert!(close(apply_tau(&as_f, &tau, n, x).unwrap(), tau.tau(x), 1e-10));
            }
        }
    }

    #[test]
    fn tau_validation() {
        assert!(TauSpec::new(|x| 1.0 - x, |x| 1.0 - x).is_err());
        assert!(TauSpec::new(|x| x, |x: f64| x * x).is_err());
        assert!(TauSpec::new(|x: f64| 0.5 * x, |x| 2.0 * x).is_err());
    }

    #[test]
    fn moment_examples() {
        assert!(close(akr_first_moment(10, 1, 0.5).unwrap(), 0.0, 1e-15));
        for x in [0.1, 0.3, 0.6, 0.95] {
            let m1 = akr_first_moment(6, 2, x).unwrap();
            assert!(m1 <= 0.0);
            assert!(m1.abs() <= (1.0 - x) * (1.0 - (1.0 - x).powi(5)) / 5.0 + 1e-15);
            let m2 = akr_second_moment(10, 1, x).unwrap();
            assert!(close(m2, x * (1.0 - x) / 10.0, 1e-15));
        }
        assert_eq!(akr_second_moment(6, 2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn d_n_examples() {
        assert_eq!(d_n_profile(5, 0.0).unwrap(), 0.0);
        assert_eq!(d_n_profile(5, 1.0).unwrap(), 0.0);
        let x = 1.0 - 5f64.powf(-0.25);
        assert!(close(d_n_profile(5, x).unwrap(), 0.53499, 1e-5));
        assert!(d_n_profile(1, 0.5).is_err());
    }
}

//! Bernstein basis evaluation, polynomials in Bernstein form and sample grids.

use crate::error::{precondition, Result};

/// Natural logarithm of the binomial coefficient `C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `p_{n,k}(x) = C(n,k) x^k (1-x)^{n-k}`.
///
/// Evaluated in log space, so that `n` in the tens of thousands neither
/// overflows the binomial nor underflows the powers prematurely. The
/// endpoints are short-circuited to the exact values 0 and 1.
pub fn bernstein_basis(n: usize, k: usize, x: f64) -> Result<f64> {
    if k > n {
        return precondition(format!("basis index k = {k} exceeds degree n = {n}"));
    }
    check_unit(x)?;
    Ok(basis_unchecked(n, k, x))
}

pub(crate) fn basis_unchecked(n: usize, k: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let log = ln_binomial(n, k) + k as f64 * x.ln() + (n - k) as f64 * (-x).ln_1p();
    log.exp()
}

/// All basis values `p_{n,0}(x), ..., p_{n,n}(x)`.
pub fn basis_row(n: usize, x: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    if x == 0.0 {
        row[0] = 1.0;
        return row;
    }
    if x == 1.0 {
        row[n] = 1.0;
        return row;
    }
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let ln_fact_n = libm::lgamma(n as f64 + 1.0);
    for (k, p) in row.iter_mut().enumerate() {
        let ln_c = if k == 0 || k == n {
            0.0
        } else {
            ln_fact_n - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
        };
        *p = (ln_c + k as f64 * ln_x + (n - k) as f64 * ln_1mx).exp();
    }
    row
}

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        precondition(format!("x = {x} lies outside [0, 1]"))
    }
}

/// A polynomial `sum_k coeffs[k] p_{n,k}(x)` of degree `n = coeffs.len() - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinForm {
    coeffs: Vec<f64>,
}

impl BernsteinForm {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return precondition("a Bernstein form needs at least one coefficient");
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// De Casteljau evaluation. Every step is a convex combination.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(de_casteljau(&self.coeffs, x))
    }

    /// Direct summation against the log-space basis.
    pub fn eval_sum(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(direct_sum(&self.coeffs, x))
    }

    /// Evaluation at many points, choosing the cheaper stable route for large degree.
    pub fn eval_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().try_for_each(|&x| check_unit(x))?;
        Ok(eval_points(&self.coeffs, xs))
    }
}

/// Free-function form of [`BernsteinForm::eval`].
pub fn eval_bernstein_form(b: &BernsteinForm, x: f64) -> Result<f64> {
    b.eval(x)
}

// Above this degree the O(n^2) recurrence is replaced by O(n) summation.
const DE_CASTELJAU_MAX_DEGREE: usize = 512;

pub(crate) fn eval_points(coeffs: &[f64], xs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    if n <= DE_CASTELJAU_MAX_DEGREE {
        let mut scratch = vec![0.0; coeffs.len()];
        xs.iter()
            .map(|&x| de_casteljau_with(coeffs, x, &mut scratch))
            .collect()
    } else {
        xs.iter().map(|&x| direct_sum(coeffs, x)).collect()
    }
}

pub(crate) fn de_casteljau(coeffs: &[f64], x: f64) -> f64 {
    let mut scratch = vec![0.0; coeffs.len()];
    de_casteljau_with(coeffs, x, &mut scratch)
}

fn de_casteljau_with(coeffs: &[f64], x: f64, scratch: &mut [f64]) -> f64 {
    let n = coeffs.len() - 1;
    if x == 0.0 {
        return coeffs[0];
    }
    if x == 1.0 {
        return coeffs[n];
    }
    scratch.copy_from_slice(coeffs);
    let y = 1.0 - x;
    for level in (1..=n).rev() {
        for i in 0..level {
            scratch[i] = y * scratch[i] + x * scratch[i + 1];
        }
    }
    scratch[0]
}

pub(crate) fn direct_sum(coeffs: &[f64], x: f64) -> f64 {
    let n = coeffs.len() - 1;
    basis_row(n, x)
        .iter()
        .zip(coeffs)
        .map(|(p, c)| p * c)
        .sum()
}

/// Strictly increasing sample points covering `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    points: Vec<f64>,
}

impl GridSpec {
    /// `{ i/m : i = 0..m }`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return precondition("a uniform grid needs m >= 1 intervals");
        }
        let points = (0..=m).map(|i| i as f64 / m as f64).collect();
        Ok(Self { points })
    }

    pub fn new(points: Vec<f64>) -> Result<Self> {
        match (points.first(), points.last()) {
            (Some(&first), Some(&last)) if first == 0.0 && last == 1.0 => {}
            _ => return precondition("grid must start at 0 and end at 1"),
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return precondition("grid points must be strictly increasing");
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Interior points, i.e. every point except 0 and 1.
    pub fn interior(&self) -> &[f64] {
        &self.points[1..self.points.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_small_values() {
        assert!((bernstein_basis(2, 1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(bernstein_basis(10, 0, 0.0).unwrap(), 1.0);
        assert_eq!(bernstein_basis(10, 10, 1.0).unwrap(), 1.0);
        assert_eq!(bernstein_basis(10, 3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn basis_rejects_bad_arguments() {
        assert!(bernstein_basis(3, 4, 0.5).is_err());
        assert!(bernstein_basis(3, 1, -0.1).is_err());
        assert!(bernstein_basis(3, 1, 1.5).is_err());
        assert!(bernstein_basis(3, 1, f64::NAN).is_err());
    }

    #[test]
    fn large_degree_does_not_overflow() {
        let n = 10_000;
        let total: f64 = basis_row(n, 0.3).iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
        let p = bernstein_basis(n, 3000, 0.3).unwrap();
        assert!(p.is_finite() && p > 0.0);
    }

    #[test]
    fn row_matches_single_evaluations() {
        let row = basis_row(37, 0.61);
        for (k, p) in row.iter().enumerate() {
            let q = bernstein_basis(37, k, 0.61).unwrap();
            assert!((p - q).abs() <= 1e-15 * q.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn form_endpoints_and_unity() {
        let b = BernsteinForm::new(vec![3.0, -1.0, 7.0, 2.5]).unwrap();
        assert_eq!(b.eval(0.0).unwrap(), 3.0);
        assert_eq!(b.eval(1.0).unwrap(), 2.5);
        let ones = BernsteinForm::new(vec![1.0; 41]).unwrap();
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((ones.eval(x).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_coefficients_reproduce_x() {
        let n = 17;
        let b = BernsteinForm::new((0..=n).map(|k| k as f64 / n as f64).collect()).unwrap();
        for x in [0.0, 0.2, 0.37, 0.9, 1.0] {
            assert!((b.eval(x).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_form_rejected() {
        assert!(BernsteinForm::new(vec![]).is_err());
    }

    #[test]
    fn grid_validation() {
        let g = GridSpec::uniform(4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.interior(), &[0.25, 0.5, 0.75]);
        assert!(GridSpec::uniform(0).is_err());
        assert!(GridSpec::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(GridSpec::new(vec![0.1, 1.0]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.3, 1.0]).is_ok());
    }
}

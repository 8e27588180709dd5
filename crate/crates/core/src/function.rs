//! Real functions on `[0, 1]` with optional exact derivatives, and the
//! built-in test corpus.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{precondition, Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Smoothness {
    C0,
    C1,
    C2,
    Analytic,
}

impl Smoothness {
    /// At least twice continuously differentiable.
    pub fn is_c2(self) -> bool {
        matches!(self, Smoothness::C2 | Smoothness::Analytic)
    }
}

/// An immutable, cheaply clonable function on `[0, 1]`.
#[derive(Clone)]
pub struct FunctionHandle {
    id: String,
    eval: RealFn,
    d1: Option<RealFn>,
    d2: Option<RealFn>,
    smoothness: Smoothness,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("id", &self.id)
            .field("d1", &self.d1.is_some())
            .field("d2", &self.d2.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

pub struct FunctionBuilder {
    id: String,
    eval: RealFn,
    d1: Option<RealFn>,
    d2: Option<RealFn>,
    smoothness: Smoothness,
}

impl FunctionBuilder {
    pub fn d1(mut self, d1: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn d2(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Validates the supplied derivatives against centered differences at
    /// the interior points `i/100`, step `1e-5`, relative tolerance `1e-6`.
    /// The second derivative is checked against differences of the first.
    pub fn build(self) -> Result<FunctionHandle> {
        if self.d2.is_some() && self.d1.is_none() {
            return precondition(format!(
                "function `{}`: a second derivative requires a first derivative",
                self.id
            ));
        }
        const H: f64 = 1e-5;
        const TOL: f64 = 1e-6;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            if let Some(d1) = &self.d1 {
                let estimate = ((self.eval)(x + H) - (self.eval)(x - H)) / (2.0 * H);
                check_derivative(&self.id, "first", x, d1(x), estimate, TOL)?;
                if let Some(d2) = &self.d2 {
                    let estimate = (d1(x + H) - d1(x - H)) / (2.0 * H);
                    check_derivative(&self.id, "second", x, d2(x), estimate, TOL)?;
                }
            }
        }
        Ok(FunctionHandle {
            id: self.id,
            eval: self.eval,
            d1: self.d1,
            d2: self.d2,
            smoothness: self.smoothness,
        })
    }
}

fn check_derivative(
    id: &str,
    which: &'static str,
    x: f64,
    supplied: f64,
    estimate: f64,
    tol: f64,
) -> Result<()> {
    if (supplied - estimate).abs() <= tol * supplied.abs().max(1.0) {
        Ok(())
    } else {
        Err(Error::DerivativeMismatch {
            id: id.to_string(),
            which,
            x,
            supplied,
            estimate,
        })
    }
}

impl FunctionHandle {
    pub fn builder(
        id: impl Into<String>,
        smoothness: Smoothness,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> FunctionBuilder {
        FunctionBuilder {
            id: id.into(),
            eval: Arc::new(eval),
            d1: None,
            d2: None,
            smoothness,
        }
    }

    /// `sum_i coeffs[i] x^i` with exact derivatives.
    pub fn polynomial(id: impl Into<String>, coeffs: &[f64]) -> Result<Self> {
        let c: Arc<[f64]> = coeffs.into();
        let d: Arc<[f64]> = derivative_coeffs(&c).into();
        let dd: Arc<[f64]> = derivative_coeffs(&d).into();
        Self::builder(id, Smoothness::Analytic, move |x| horner(&c, x))
            .d1(move |x| horner(&d, x))
            .d2(move |x| horner(&dd, x))
            .build()
    }

    /// The monomial `e_j(x) = x^j`.
    pub fn monomial(j: usize) -> Self {
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        Self::polynomial(format!("e{j}"), &coeffs).expect("monomial derivatives are exact")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn has_d1(&self) -> bool {
        self.d1.is_some()
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn d1(&self, x: f64) -> Result<f64> {
        self.d1.as_ref().map(|d| d(x)).ok_or_else(|| Error::MissingDerivative {
            id: self.id.clone(),
            which: "first",
        })
    }

    pub fn d2(&self, x: f64) -> Result<f64> {
        self.d2.as_ref().map(|d| d(x)).ok_or_else(|| Error::MissingDerivative {
            id: self.id.clone(),
            which: "second",
        })
    }

    /// `f''` as a function in its own right (no derivatives attached).
    pub fn second_derivative(&self) -> Result<FunctionHandle> {
        let d2 = self.d2.clone().ok_or_else(|| Error::MissingDerivative {
            id: self.id.clone(),
            which: "second",
        })?;
        Ok(FunctionHandle {
            id: format!("{}''", self.id),
            eval: d2,
            d1: None,
            d2: None,
            smoothness: Smoothness::C0,
        })
    }

    /// Values at every point of `xs`.
    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Resolves a corpus id, or a polynomial written as `poly:c0,c1,...`
    /// (monomial coefficients in increasing degree).
    pub fn from_spec(spec: &str) -> Result<FunctionHandle> {
        if let Some(list) = spec.strip_prefix("poly:") {
            let coeffs = list
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("bad polynomial `{spec}`: {e}")))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("bad polynomial `{spec}`")));
            }
            return FunctionHandle::polynomial(spec, &coeffs);
        }
        builtin_corpus()
            .into_iter()
            .find(|f| f.id == spec)
            .ok_or_else(|| Error::Config(format!("unknown function id `{spec}`")))
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Ids of the built-in corpus, in corpus order.
pub const CORPUS_IDS: [&str; 11] = [
    "e0", "e1", "e2", "e3", "e4", "exp", "sin_pi", "runge", "abs_half", "x32", "hat",
];

/// The fixed test corpus: monomials `e0..e4`, `exp`, `sin(pi x)`, a Runge-type
/// bump, `|x - 1/2|`, `x^{3/2}` and a piecewise-linear hat on `[1/4, 3/4]`.
pub fn builtin_corpus() -> Vec<FunctionHandle> {
    let mut corpus: Vec<FunctionHandle> = (0..=4).map(FunctionHandle::monomial).collect();

    let build = |b: FunctionBuilder| b.build().expect("corpus derivatives are exact");

    corpus.push(build(
        FunctionHandle::builder("exp", Smoothness::Analytic, f64::exp)
            .d1(f64::exp)
            .d2(f64::exp),
    ));
    corpus.push(build(
        FunctionHandle::builder("sin_pi", Smoothness::Analytic, |x| (PI * x).sin())
            .d1(|x| PI * (PI * x).cos())
            .d2(|x| -PI * PI * (PI * x).sin()),
    ));
    corpus.push(build(
        FunctionHandle::builder("runge", Smoothness::Analytic, |x| {
            let u = x - 0.5;
            1.0 / (1.0 + 25.0 * u * u)
        })
        .d1(|x| {
            let u = x - 0.5;
            let q = 1.0 + 25.0 * u * u;
            -50.0 * u / (q * q)
        })
        .d2(|x| {
            let u = x - 0.5;
            let q = 1.0 + 25.0 * u * u;
            (3750.0 * u * u - 50.0) / (q * q * q)
        }),
    ));
    corpus.push(build(FunctionHandle::builder(
        "abs_half",
        Smoothness::C0,
        |x| (x - 0.5).abs(),
    )));
    corpus.push(build(
        FunctionHandle::builder("x32", Smoothness::C1, |x: f64| x * x.sqrt()).d1(|x| 1.5 * x.sqrt()),
    ));
    corpus.push(build(FunctionHandle::builder("hat", Smoothness::C0, |x| {
        (1.0 - 4.0 * (x - 0.5).abs()).max(0.0)
    })));
    corpus
}

//! Test functions `T -> R^n` used for integration, pullbacks and the
//! Monge-Kantorovich dual problems.

use crate::error::{Error, Result};
use crate::measure::LOC_EPS;

/// A vector-valued function on `[0,1]` with declared sup-norm and Lipschitz
/// budgets. Budgets are upper bounds; they are never tightened silently.
pub trait TestFunction {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> Result<Vec<f64>>;
    fn sup_budget(&self) -> f64;
    fn lip_budget(&self) -> f64;

    /// Samples the function on `support`, carrying the budgets along.
    fn sample(&self, support: &[f64]) -> Result<GridFunction> {
        let values = support
            .iter()
            .map(|&t| self.value(t))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::with_budgets(
            support.to_vec(),
            values,
            self.sup_budget(),
            self.lip_budget(),
        )
    }
}

/// Wraps a closure as a [`TestFunction`].
pub struct FnFunction<F> {
    dim: usize,
    f: F,
    sup: f64,
    lip: f64,
}

impl<F: Fn(f64) -> Vec<f64>> FnFunction<F> {
    pub fn new(dim: usize, sup: f64, lip: f64, f: F) -> Self {
        Self { dim, f, sup, lip }
    }
}

impl<F: Fn(f64) -> Vec<f64>> TestFunction for FnFunction<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: f64) -> Result<Vec<f64>> {
        if !(-LOC_EPS..=1.0 + LOC_EPS).contains(&t) {
            return Err(Error::OutsideDomain(t));
        }
        let v = (self.f)(t);
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v)
    }

    fn sup_budget(&self) -> f64 {
        self.sup
    }

    fn lip_budget(&self) -> f64 {
        self.lip
    }
}

/// A test function sampled on a finite ordered support.
///
/// Between support points the function is evaluated by linear
/// interpolation, which keeps both the sup bound and the Lipschitz bound of
/// the samples. Outside `[first, last]` it is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    support: Vec<f64>,
    values: Vec<Vec<f64>>,
    sup: f64,
    lip: f64,
}

impl GridFunction {
    /// Budgets are set to the measured constants.
    pub fn new(support: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let mut g = Self::with_budgets(support, values, f64::INFINITY, f64::INFINITY)?;
        g.sup = g.measured_sup();
        g.lip = g.measured_lip();
        Ok(g)
    }

    pub fn with_budgets(
        support: Vec<f64>,
        values: Vec<Vec<f64>>,
        sup: f64,
        lip: f64,
    ) -> Result<Self> {
        if support.is_empty() || support.len() != values.len() {
            return Err(Error::InvalidMeasure(format!(
                "grid function needs matching non-empty support/values ({} vs {})",
                support.len(),
                values.len()
            )));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure(
                "grid support must be strictly increasing".into(),
            ));
        }
        let dim = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            support,
            values,
            sup,
            lip,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn measured_sup(&self) -> f64 {
        self.values.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// Largest slope between neighbouring samples; on a line this bounds every
    /// pairwise slope by the triangle inequality.
    pub fn measured_lip(&self) -> f64 {
        self.support
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| dist(&v[1], &v[0]) / (t[1] - t[0]))
            .fold(0.0, f64::max)
    }

    /// Declared budgets hold up to `1e-12`.
    pub fn budgets_hold(&self) -> bool {
        self.measured_sup() <= self.sup + 1e-12 && self.measured_lip() <= self.lip + 1e-12
    }
}

impl TestFunction for GridFunction {
    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn value(&self, t: f64) -> Result<Vec<f64>> {
        let first = self.support[0];
        let last = *self.support.last().expect("non-empty");
        if t < first - LOC_EPS || t > last + LOC_EPS {
            return Err(Error::OutsideDomain(t));
        }
        let k = self.support.partition_point(|&s| s < t);
        if k < self.support.len() && (self.support[k] - t).abs() <= LOC_EPS {
            return Ok(self.values[k].clone());
        }
        if k > 0 && (t - self.support[k - 1]).abs() <= LOC_EPS {
            return Ok(self.values[k - 1].clone());
        }
        let (t0, t1) = (self.support[k - 1], self.support[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| a + w * (b - a))
            .collect())
    }

    fn sup_budget(&self) -> f64 {
        self.sup
    }

    fn lip_budget(&self) -> f64 {
        self.lip
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

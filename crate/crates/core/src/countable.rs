//! Countable operator families and their finite truncations.
//!
//! A family is only ever used through [`truncate`]: pick the smallest `M`
//! whose bound tail `Σ_{i>M} b_i` is below the requested `ε`, then work with
//! the first `M` terms. For every measure `mu`,
//! `‖H(mu) − H_M(mu)‖ ≤ tail(M) ‖mu‖` in variation.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, LinearOperator};
use crate::markov::{MarkovOperator, Term};
use crate::measure::LipMap;

pub trait CountableFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// Term `i >= 1`.
    fn term(&self, i: usize) -> Term;
    /// `b_i >= ‖R_i‖`.
    fn bound(&self, i: usize) -> f64;
    /// `Σ_{i>m} b_i`.
    fn tail(&self, m: usize) -> f64;
    /// `sup_i r_i`.
    fn lipschitz_bound(&self) -> f64;
    /// `(Id − Σ_i R_i)^{-1}` over the whole family, when known in closed form.
    fn reference_resolvent(&self) -> Option<LinearOperator> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Truncation {
    pub operator: MarkovOperator,
    pub terms: usize,
    pub tail: f64,
}

/// Hard stop for families whose tail decays too slowly.
const MAX_TERMS: usize = 100_000;

pub fn truncate(family: &dyn CountableFamily, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0) {
        return Err(Error::Scenario(format!(
            "truncation needs eps > 0, got {eps}"
        )));
    }
    let mut m = 1;
    while family.tail(m) >= eps {
        m += 1;
        if m > MAX_TERMS {
            return Err(Error::Refused(format!(
                "family {} needs more than {MAX_TERMS} terms for eps = {eps:e}",
                family.name()
            )));
        }
    }
    let terms = (1..=m).map(|i| family.term(i)).collect();
    Ok(Truncation {
        operator: MarkovOperator::new(terms)?,
        terms: m,
        tail: family.tail(m),
    })
}

/// `R_i = −P^i / i!` with constant maps `ω_i ≡ 1/i`; `Id − Σ R_i = exp(P)`.
pub struct ExpSeries {
    p: LinearOperator,
    p_norm: f64,
}

impl ExpSeries {
    pub fn new(p: LinearOperator) -> Self {
        let p_norm = p.operator_norm();
        Self { p, p_norm }
    }

    pub fn generator(&self) -> &LinearOperator {
        &self.p
    }

    /// The point `t_i` where the `i`-th map is constant.
    pub fn point(i: usize) -> f64 {
        1.0 / i as f64
    }
}

impl CountableFamily for ExpSeries {
    fn name(&self) -> &'static str {
        "exp_series"
    }

    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn term(&self, i: usize) -> Term {
        assert!(i >= 1);
        let mut power = self.p.clone();
        let mut fact = 1.0;
        for k in 2..=i {
            power = power.matmul(&self.p);
            fact *= k as f64;
        }
        Term::new(
            LipMap::constant(Self::point(i)).expect("1/i in [0,1]"),
            power.scaled(-1.0 / fact),
        )
    }

    fn bound(&self, i: usize) -> f64 {
        (1..=i).fold(1.0, |acc, k| acc * self.p_norm / k as f64)
    }

    fn tail(&self, m: usize) -> f64 {
        // Summing the remaining terms directly avoids the cancellation in
        // exp(‖P‖) − partial sum.
        let mut term = self.bound(m);
        let mut sum = 0.0;
        for k in (m + 1)..(m + 1000) {
            term *= self.p_norm / k as f64;
            sum += term;
            if term <= sum * 1e-18 || term == 0.0 {
                break;
            }
        }
        sum
    }

    fn lipschitz_bound(&self) -> f64 {
        0.0
    }

    fn reference_resolvent(&self) -> Option<LinearOperator> {
        Some(matrix_exp(&self.p.scaled(-1.0)))
    }
}

/// `R_i = q^i S` with maps `ω_i(t) = t/3 + (2/3)(1 − 2^{1−i})`.
pub struct Geometric {
    ratio: f64,
    seed: LinearOperator,
    seed_norm: f64,
}

impl Geometric {
    pub fn new(ratio: f64, seed: LinearOperator) -> Result<Self> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::Scenario(format!(
                "geometric ratio must lie in [0,1), got {ratio}"
            )));
        }
        let seed_norm = seed.operator_norm();
        Ok(Self {
            ratio,
            seed,
            seed_norm,
        })
    }

    pub fn map(i: usize) -> LipMap {
        let shift = (2.0 / 3.0) * (1.0 - 0.5f64.powi(i as i32 - 1));
        LipMap::new(1.0 / 3.0, shift).expect("shift in [0, 2/3)")
    }
}

impl CountableFamily for Geometric {
    fn name(&self) -> &'static str {
        "geometric"
    }

    fn dim(&self) -> usize {
        self.seed.dim()
    }

    fn term(&self, i: usize) -> Term {
        Term::new(Self::map(i), self.seed.scaled(self.ratio.powi(i as i32)))
    }

    fn bound(&self, i: usize) -> f64 {
        self.seed_norm * self.ratio.powi(i as i32)
    }

    fn tail(&self, m: usize) -> f64 {
        self.seed_norm * self.ratio.powi(m as i32 + 1) / (1.0 - self.ratio)
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0 / 3.0
    }
}

type FamilyBuilder = fn(&Value) -> Result<Box<dyn CountableFamily>>;

/// Named family presets, selected from scenario files.
pub struct FamilyRegistry {
    builders: BTreeMap<&'static str, FamilyBuilder>,
}

#[derive(Deserialize)]
struct ExpParams {
    #[serde(rename = "P")]
    p: LinearOperator,
}

#[derive(Deserialize)]
struct GeometricParams {
    ratio: f64,
    seed: LinearOperator,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("exp_series", |v| {
            let p: ExpParams = serde_json::from_value(v.clone())?;
            Ok(Box::new(ExpSeries::new(p.p)))
        });
        r.register("geometric", |v| {
            let p: GeometricParams = serde_json::from_value(v.clone())?;
            Ok(Box::new(Geometric::new(p.ratio, p.seed)?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, builder: FamilyBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<Box<dyn CountableFamily>> {
        let builder = self.builders.get(name).ok_or_else(|| {
            Error::Scenario(format!(
                "unknown family preset {name:?} (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        builder(params)
    }
}

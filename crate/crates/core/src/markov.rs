//! Markov-type operators `H(mu) = Σ R_i ∘ ω_i(mu)` and their variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::linalg::LinearOperator;
use crate::measure::{LipMap, VectorMeasure};

/// Which fixed-point problem the operator is set up for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Plain `H`.
    H,
    /// `H` restricted to measures of prescribed total mass `v`; needs `Σ R_i = Id`.
    H1,
    /// `H(mu) + mu0`.
    H2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub map: LipMap,
    #[serde(rename = "R")]
    pub op: LinearOperator,
}

impl Term {
    pub fn new(map: LipMap, op: LinearOperator) -> Self {
        Self { map, op }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovOperator {
    terms: Vec<Term>,
    model: Model,
    offset: Option<VectorMeasure>,
    target: Option<Vec<f64>>,
}

/// `e = Σ‖R_i‖`, `c = Σ‖R_i‖ r_i`, `d = Σ‖R_i‖ (1 + r_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionBounds {
    /// Variation-norm factor.
    pub e: f64,
    /// Factor in the modified MK metric (zero-mass differences).
    pub c: f64,
    /// Factor in the MK metric.
    pub d: f64,
}

impl ContractionBounds {
    pub fn mass_preserving_applicable(&self) -> bool {
        self.c < 1.0
    }

    pub fn mk_applicable(&self) -> bool {
        self.d < 1.0
    }

    pub fn variation_applicable(&self) -> bool {
        self.e < 1.0
    }
}

impl MarkovOperator {
    /// Plain model `H`.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Scenario("operator needs at least one term".into()))?;
        let n = first.op.dim();
        if let Some(bad) = terms.iter().find(|t| t.op.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.op.dim(),
            });
        }
        Ok(Self {
            terms,
            model: Model::H,
            offset: None,
            target: None,
        })
    }

    /// `H2(mu) = H(mu) + mu0`.
    pub fn with_offset(mut self, mu0: VectorMeasure) -> Result<Self> {
        self.check_dim(mu0.dim())?;
        self.model = Model::H2;
        self.offset = Some(mu0);
        self.target = None;
        Ok(self)
    }

    /// `H1` on measures with `mu(T) = v`.
    pub fn with_target(mut self, v: Vec<f64>) -> Result<Self> {
        self.check_dim(v.len())?;
        self.model = Model::H1;
        self.target = Some(v);
        self.offset = None;
        Ok(self)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.terms[0].op.dim()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn terms_mut(&mut self) -> &mut [Term] {
        &mut self.terms
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn offset(&self) -> Option<&VectorMeasure> {
        self.offset.as_ref()
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    /// `R = Σ R_i`
    pub fn operator_sum(&self) -> LinearOperator {
        self.terms
            .iter()
            .fold(LinearOperator::zeros(self.dim()), |acc, t| acc.add(&t.op))
    }

    /// Max entry deviation of `Σ R_i` from the identity.
    pub fn identity_defect(&self) -> f64 {
        self.operator_sum()
            .max_abs_diff(&LinearOperator::identity(self.dim()))
    }

    /// The linear part `H(mu)`, whatever the model. Terms are reduced in index order.
    pub fn transfer(&self, mu: &VectorMeasure) -> Result<VectorMeasure> {
        self.check_dim(mu.dim())?;
        let mut acc = VectorMeasure::zero_with_resolution(mu.dim(), mu.resolution());
        for term in &self.terms {
            let image = mu.pushforward(&term.map).apply_operator(&term.op)?;
            acc = acc.add(&image)?;
        }
        Ok(acc)
    }

    /// `H(mu)`, plus `mu0` for the `H2` model.
    pub fn apply(&self, mu: &VectorMeasure) -> Result<VectorMeasure> {
        let h = self.transfer(mu)?;
        match (&self.model, &self.offset) {
            (Model::H2, Some(mu0)) => h.add(mu0),
            _ => Ok(h),
        }
    }

    /// `g = Σ R_i^T ∘ f ∘ ω_i`.
    pub fn pullback<'a>(&'a self, f: &'a dyn TestFunction) -> Result<Pullback<'a>> {
        self.check_dim(f.dim())?;
        Ok(Pullback { op: self, f })
    }

    pub fn bounds(&self) -> ContractionBounds {
        let mut b = ContractionBounds {
            e: 0.0,
            c: 0.0,
            d: 0.0,
        };
        for t in &self.terms {
            let norm = t.op.operator_norm();
            let r = t.map.factor();
            b.e += norm;
            b.c += norm * r;
            b.d += norm * (1.0 + r);
        }
        b
    }
}

/// The function-side adjoint of a [`MarkovOperator`].
pub struct Pullback<'a> {
    op: &'a MarkovOperator,
    f: &'a dyn TestFunction,
}

impl TestFunction for Pullback<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn value(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        for term in self.op.terms() {
            let ft = self.f.value(term.map.apply(t))?;
            term.op.transpose().apply_add(&ft, &mut out);
        }
        Ok(out)
    }

    fn sup_budget(&self) -> f64 {
        self.op.bounds().e * self.f.sup_budget()
    }

    fn lip_budget(&self) -> f64 {
        self.op.bounds().c * self.f.lip_budget()
    }
}

/// `|∫ f dH(mu) − ∫ g dmu|` with `g` the pullback of `f`; the offset of an
/// `H2` operator is ignored.
pub fn change_of_variable_check(
    op: &MarkovOperator,
    f: &dyn TestFunction,
    mu: &VectorMeasure,
) -> Result<f64> {
    let lhs = op.transfer(mu)?.integrate(f)?;
    let g = op.pullback(f)?;
    let rhs = mu.integrate(&g)?;
    Ok((lhs - rhs).abs())
}

//! Fixed points of `H1` and `H2`.
//!
//! Both iterative solvers run an a-priori number of steps derived from the
//! contraction factor and the first step length, instead of stopping on
//! successive differences: in the `H1` case the iterates converge only in the
//! modified MK metric and their variation distance need not shrink at all.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{invert, LinearOperator};
use crate::markov::{MarkovOperator, Model, Term};
use crate::measure::{Atom, LipMap, Point, PruneReport, VectorMeasure, DEFAULT_RESOLUTION};
use crate::mk::mk_star_upper;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    /// Starting measure; `mu0` for `H2`, `delta_0 v` for `H1` when absent.
    pub seed: Option<VectorMeasure>,
    /// Run exactly this many steps, even when the contraction test fails.
    pub forced_iterations: Option<usize>,
    /// Atoms lighter than this fraction of the current variation are dropped.
    pub prune_rel_eps: f64,
    pub atom_budget: usize,
    /// Master resolution of the density grid (and of atom coalescing).
    pub resolution: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: None,
            forced_iterations: None,
            prune_rel_eps: 1e-14,
            atom_budget: 100_000,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Variation,
    Mk,
    MkStar,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub variation_distance_to_prev: f64,
    pub atom_count: usize,
    pub pruning_budget: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub measure: VectorMeasure,
    pub iterations: usize,
    pub contraction: f64,
    /// `‖H2(mu*) − mu*‖` in variation, or an MK* upper bound of `H(mu*) − mu*` for `H1`.
    pub residual: f64,
    pub prune: PruneReport,
    pub metric: Metric,
    /// Guaranteed distance to the exact fixed point in `metric`, pruning included.
    pub error_bound: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn write_trace_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.trace {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn steps_for(tol: f64, factor: f64, first_step: f64) -> usize {
    if first_step <= 0.0 || factor <= 0.0 {
        return 1;
    }
    let k = ((tol * (1.0 - factor) / first_step).ln() / factor.ln()).ceil();
    if k.is_finite() && k > 1.0 {
        k as usize
    } else {
        1
    }
}

fn working_seed(seed: &VectorMeasure, resolution: usize) -> VectorMeasure {
    let target = lcm(seed.resolution(), resolution);
    seed.refined(target)
}

fn lcm(a: usize, b: usize) -> usize {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn prune_step(mu: &VectorMeasure, opts: &SolveOptions) -> (VectorMeasure, PruneReport) {
    let eps = opts.prune_rel_eps * mu.total_variation();
    mu.prune(eps, opts.atom_budget)
}

/// Fixed point of `H2(mu) = H(mu) + mu0` in the variation norm, factor `e`.
pub fn solve_h2(op: &MarkovOperator, opts: &SolveOptions) -> Result<SolveReport> {
    let mu0 = match (op.model(), op.offset()) {
        (Model::H2, Some(m)) => m,
        _ => {
            return Err(Error::Scenario(
                "solve_h2 needs an H2 operator with mu0".into(),
            ))
        }
    };
    if !(opts.tol > 0.0) {
        return Err(Error::Scenario(format!(
            "tolerance must be > 0, got {}",
            opts.tol
        )));
    }
    let e = op.bounds().e;
    if e >= 1.0 && opts.forced_iterations.is_none() {
        return Err(Error::Refused(format!(
            "variational contraction factor e = Σ‖R_i‖ = {e} is not < 1"
        )));
    }
    let seed = working_seed(opts.seed.as_ref().unwrap_or(mu0), opts.resolution);
    let first = op.apply(&seed)?;
    let first_step = first.sub(&seed)?.total_variation();
    let steps = opts
        .forced_iterations
        .unwrap_or_else(|| steps_for(opts.tol, e, first_step));

    let mut prune = PruneReport::default();
    let mut trace = Vec::with_capacity(steps);
    let mut current = seed;
    let mut next = first;
    for k in 1..=steps {
        if k > 1 {
            next = op.apply(&current)?;
        }
        let (pruned, rep) = prune_step(&next, opts);
        prune.accumulate(&rep);
        trace.push(TraceRow {
            iteration: k,
            variation_distance_to_prev: pruned.sub(&current)?.total_variation(),
            atom_count: pruned.atoms().len(),
            pruning_budget: prune.variation_bound(),
        });
        current = pruned;
    }
    let residual = op.apply(&current)?.sub(&current)?.total_variation();
    let error_bound = if e < 1.0 {
        e.powi(steps as i32) * first_step / (1.0 - e) + prune.variation_bound()
    } else {
        f64::INFINITY
    };
    Ok(SolveReport {
        measure: current,
        iterations: steps,
        contraction: e,
        residual,
        prune,
        metric: Metric::Variation,
        error_bound,
        trace,
    })
}

/// Fixed point of `H` on measures with `mu(T) = v`, contracting with factor
/// `c` in the modified MK metric. Needs `Σ R_i = Id`.
pub fn solve_h1(op: &MarkovOperator, opts: &SolveOptions) -> Result<SolveReport> {
    let v = match (op.model(), op.target()) {
        (Model::H1, Some(v)) => v.to_vec(),
        _ => {
            return Err(Error::Scenario(
                "solve_h1 needs an H1 operator with a target mass".into(),
            ))
        }
    };
    if !(opts.tol > 0.0) {
        return Err(Error::Scenario(format!(
            "tolerance must be > 0, got {}",
            opts.tol
        )));
    }
    let defect = op.identity_defect();
    if defect > 1e-12 {
        return Err(Error::Refused(format!(
            "Σ R_i differs from the identity by {defect:e}"
        )));
    }
    let c = op.bounds().c;
    if c >= 1.0 && opts.forced_iterations.is_none() {
        return Err(Error::Refused(format!(
            "MK* contraction factor c = Σ‖R_i‖ r_i = {c} is not < 1"
        )));
    }
    let seed = match &opts.seed {
        Some(s) => s.clone(),
        None => VectorMeasure::dirac(0.0, v.clone())?,
    };
    let mass = seed.total_mass();
    let scale = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
    if mass
        .iter()
        .zip(&v)
        .any(|(a, b)| (a - b).abs() > 1e-12 * scale)
    {
        return Err(Error::Scenario(format!(
            "seed mass {mass:?} differs from the target {v:?}"
        )));
    }
    let seed = working_seed(&seed, opts.resolution);
    let first = op.apply(&seed)?;
    let first_step = mk_star_upper(&first.sub(&seed)?);
    let steps = opts
        .forced_iterations
        .unwrap_or_else(|| steps_for(opts.tol, c, first_step));

    let mut prune = PruneReport::default();
    let mut trace = Vec::with_capacity(steps);
    let mut current = seed;
    let mut next = first;
    for k in 1..=steps {
        if k > 1 {
            next = op.apply(&current)?;
        }
        let (pruned, rep) = prune_step(&next, opts);
        prune.accumulate(&rep);
        trace.push(TraceRow {
            iteration: k,
            variation_distance_to_prev: pruned.sub(&current)?.total_variation(),
            atom_count: pruned.atoms().len(),
            pruning_budget: prune.mk_bound(),
        });
        current = pruned;
    }
    let residual = mk_star_upper(&op.apply(&current)?.sub(&current)?);
    let error_bound = if c < 1.0 {
        c.powi(steps as i32) * first_step / (1.0 - c) + prune.mk_bound()
    } else {
        f64::INFINITY
    };
    Ok(SolveReport {
        measure: current,
        iterations: steps,
        contraction: c,
        residual,
        prune,
        metric: Metric::MkStar,
        error_bound,
        trace,
    })
}

/// All maps constant: `ω_i ≡ t_i`.
#[derive(Debug, Clone)]
pub struct ConstantSystem {
    points: Vec<Point>,
    ops: Vec<LinearOperator>,
    mu0: VectorMeasure,
}

#[derive(Debug, Clone)]
pub struct ConstantSolution {
    pub measure: VectorMeasure,
    /// `mu*(T) = (Id − R)^{-1} mu0(T)`.
    pub total_mass: Vec<f64>,
    pub resolvent: LinearOperator,
    pub e: f64,
    pub warnings: Vec<String>,
}

impl ConstantSystem {
    pub fn new(points: Vec<Point>, ops: Vec<LinearOperator>, mu0: VectorMeasure) -> Result<Self> {
        if points.is_empty() || points.len() != ops.len() {
            return Err(Error::Scenario(format!(
                "constant system needs one operator per point ({} points, {} operators)",
                points.len(),
                ops.len()
            )));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i]
                .iter()
                .any(|b| a.distance(*b) <= crate::measure::LOC_EPS)
            {
                return Err(Error::Scenario(format!("duplicate point {}", a.get())));
            }
        }
        if let Some(bad) = ops.iter().find(|r| r.dim() != mu0.dim()) {
            return Err(Error::DimensionMismatch {
                expected: mu0.dim(),
                got: bad.dim(),
            });
        }
        Ok(Self { points, ops, mu0 })
    }

    /// Extracts the system from an `H2` operator whose maps are all constant.
    pub fn from_operator(op: &MarkovOperator) -> Result<Self> {
        let mu0 = op
            .offset()
            .ok_or_else(|| Error::Scenario("constant system needs mu0".into()))?;
        let mut points = Vec::new();
        for t in op.terms() {
            if !t.map.is_constant() {
                return Err(Error::Scenario("all maps must be constant".into()));
            }
            points.push(Point::new(t.map.intercept())?);
        }
        let ops = op.terms().iter().map(|t| t.op.clone()).collect();
        Self::new(points, ops, mu0.clone())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn mu0(&self) -> &VectorMeasure {
        &self.mu0
    }

    pub fn operator_sum(&self) -> LinearOperator {
        self.ops
            .iter()
            .fold(LinearOperator::zeros(self.mu0.dim()), |acc, r| acc.add(r))
    }

    /// The `H2` operator of this system.
    pub fn operator(&self) -> Result<MarkovOperator> {
        let terms = self
            .points
            .iter()
            .zip(&self.ops)
            .map(|(p, r)| Ok(Term::new(LipMap::constant(p.get())?, r.clone())))
            .collect::<Result<Vec<_>>>()?;
        MarkovOperator::new(terms)?.with_offset(self.mu0.clone())
    }

    /// `mu0 + Σ δ_{t_i} R_i (resolvent · mu0(T))` for a caller-supplied
    /// resolvent standing in for `(Id − R)^{-1}`.
    pub fn fixed_point_with_resolvent(&self, resolvent: &LinearOperator) -> Result<VectorMeasure> {
        let total = resolvent.apply(&self.mu0.total_mass());
        let atoms = self
            .points
            .iter()
            .zip(&self.ops)
            .map(|(p, r)| Atom {
                at: p.get(),
                value: r.apply(&total),
            })
            .collect();
        let dim = self.mu0.dim();
        let extra = VectorMeasure::from_parts(dim, atoms, 1, vec![0.0; dim])?;
        self.mu0.add(&extra)
    }
}

/// Closed-form fixed point of a constant-map system. Only needs `Id − R`
/// invertible; `e >= 1` produces a warning, not an error.
pub fn solve_constant(sys: &ConstantSystem) -> Result<ConstantSolution> {
    let n = sys.mu0.dim();
    let resolvent = invert(&LinearOperator::identity(n).sub(&sys.operator_sum()))?;
    let measure = sys.fixed_point_with_resolvent(&resolvent)?;
    let total_mass = resolvent.apply(&sys.mu0.total_mass());
    let e: f64 = sys.ops.iter().map(LinearOperator::operator_norm).sum();
    let mut warnings = Vec::new();
    if e >= 1.0 {
        warnings.push(format!(
            "e = Σ‖R_i‖ = {e} >= 1: fixed point exists but the iteration need not converge"
        ));
    }
    Ok(ConstantSolution {
        measure,
        total_mass,
        resolvent,
        e,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::BorelSet;

    fn offset_cantor_h2(n: usize) -> MarkovOperator {
        let [w1, w2] = LipMap::cantor();
        let p1 = LinearOperator::from_rows(vec![vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap();
        let p2 = LinearOperator::from_rows(vec![vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
        let lam = VectorMeasure::uniform(&[1.0, 0.0], n).unwrap();
        let d0 = VectorMeasure::dirac(0.0, vec![0.0, 1.0]).unwrap();
        let mu0 = VectorMeasure::linear_combine(0.25, &lam, 0.25, &d0).unwrap();
        MarkovOperator::new(vec![
            Term::new(w1, p1.scaled(0.1)),
            Term::new(w2, p2.scaled(0.1)),
        ])
        .unwrap()
        .with_offset(mu0)
        .unwrap()
    }

    #[test]
    fn offset_cantor_totals_and_atoms() {
        let op = offset_cantor_h2(243);
        let mut opts = SolveOptions::with_tol(1e-9);
        opts.resolution = 243;
        let rep = solve_h2(&op, &opts).unwrap();
        let whole = rep.measure.eval(&BorelSet::whole());
        assert!((whole[0] - 5.0 / 16.0).abs() < 1e-8, "{whole:?}");
        assert!((whole[1] - 3.0 / 8.0).abs() < 1e-8);
        let at0 = rep.measure.eval(&BorelSet::point(0.0));
        assert!(at0[0].abs() < 1e-12 && (at0[1] - 5.0 / 18.0).abs() < 1e-8);
        let at23 = rep.measure.eval(&BorelSet::point(2.0 / 3.0));
        assert!((at23[1] + 1.0 / 36.0).abs() < 1e-8);
        assert!(rep.residual <= 10.0 * 1e-9);
        assert!(rep.error_bound <= 1e-9 + rep.prune.variation_bound() + 1e-15);
        assert!(rep.prune.variation_bound() < 1e-9);
    }

    #[test]
    fn zero_offset_gives_zero() {
        let op = offset_cantor_h2(27);
        let zero = MarkovOperator::new(op.terms().to_vec())
            .unwrap()
            .with_offset(VectorMeasure::zero(2))
            .unwrap();
        let rep = solve_h2(&zero, &SolveOptions::default()).unwrap();
        assert_eq!(rep.measure.total_variation(), 0.0);
    }

    #[test]
    fn refuses_non_contracting() {
        let op = MarkovOperator::new(vec![Term::new(
            LipMap::identity(),
            LinearOperator::identity(1),
        )])
        .unwrap()
        .with_offset(VectorMeasure::dirac(0.5, vec![1.0]).unwrap())
        .unwrap();
        assert!(matches!(
            solve_h2(&op, &SolveOptions::default()),
            Err(Error::Refused(_))
        ));
        let forced = SolveOptions {
            forced_iterations: Some(3),
            ..SolveOptions::default()
        };
        let rep = solve_h2(&op, &forced).unwrap();
        assert_eq!(rep.iterations, 3);
        assert!(rep.error_bound.is_infinite());
    }

    #[test]
    fn h1_single_constant_map() {
        let op = MarkovOperator::new(vec![Term::new(
            LipMap::constant(0.7).unwrap(),
            LinearOperator::identity(2),
        )])
        .unwrap()
        .with_target(vec![1.5, -2.0])
        .unwrap();
        let rep = solve_h1(&op, &SolveOptions::default()).unwrap();
        assert_eq!(rep.measure.atoms().len(), 1);
        assert_eq!(rep.measure.atoms()[0].at, 0.7);
        assert_eq!(rep.measure.atoms()[0].value, vec![1.5, -2.0]);
        assert_eq!(rep.contraction, 0.0);
    }

    #[test]
    fn h1_rejects_non_identity_sum() {
        let [w1, w2] = LipMap::cantor();
        let op = MarkovOperator::new(vec![
            Term::new(w1, LinearOperator::scalar(1, 0.5)),
            Term::new(w2, LinearOperator::scalar(1, 0.6)),
        ])
        .unwrap()
        .with_target(vec![1.0])
        .unwrap();
        assert!(matches!(
            solve_h1(&op, &SolveOptions::default()),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn constant_system_identity() {
        let r1 = LinearOperator::from_rows(vec![vec![0.125, 0.125], vec![-0.0625, 0.125]]).unwrap();
        let r2 = LinearOperator::from_rows(vec![vec![0.125, -0.125], vec![0.0625, 0.125]]).unwrap();
        let mu0 = VectorMeasure::uniform(&[1.0, 0.0], 27)
            .unwrap()
            .add(&VectorMeasure::dirac(0.0, vec![0.0, 1.0]).unwrap())
            .unwrap();
        let sys = ConstantSystem::new(
            vec![Point::new(0.0).unwrap(), Point::new(1.0).unwrap()],
            vec![r1, r2],
            mu0,
        )
        .unwrap();
        let sol = solve_constant(&sys).unwrap();
        assert!(sol.warnings.is_empty());
        assert!((sol.e - 0.375).abs() < 1e-15);
        let op = sys.operator().unwrap();
        let resid = op.apply(&sol.measure).unwrap().sub(&sol.measure).unwrap();
        assert!(resid.total_variation() < 1e-12);
        let total = sol.measure.total_mass();
        assert!(total
            .iter()
            .zip(&sol.total_mass)
            .all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((total[0] - 4.0 / 3.0).abs() < 1e-14 && (total[1] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_system_errors() {
        let mu0 = VectorMeasure::dirac(0.5, vec![1.0]).unwrap();
        let p = Point::new(0.2).unwrap();
        assert!(ConstantSystem::new(
            vec![p, p],
            vec![LinearOperator::identity(1); 2],
            mu0.clone()
        )
        .is_err());
        let sys =
            ConstantSystem::new(vec![p], vec![LinearOperator::identity(1)], mu0.clone()).unwrap();
        assert!(matches!(solve_constant(&sys), Err(Error::Singular { .. })));
        // e >= 1 but Id − R invertible: warn only
        let sys = ConstantSystem::new(vec![p], vec![LinearOperator::scalar(1, 3.0)], mu0).unwrap();
        let sol = solve_constant(&sys).unwrap();
        assert_eq!(sol.warnings.len(), 1);
        assert!((sol.total_mass[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_count_formula() {
        assert_eq!(steps_for(1e-8, 0.5, 1.0), 28);
        assert_eq!(steps_for(1e-8, 0.0, 1.0), 1);
        assert_eq!(steps_for(1e-8, 0.5, 0.0), 1);
    }
}

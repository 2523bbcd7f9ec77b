//! Declarative scenario files: build an operator, solve, probe the result
//! and compare against expected values.
//!
//! ```json
//! {"spec": 1, "scenarios": [{
//!   "name": "demo", "kind": "h2",
//!   "operator": {"terms": [{"map": {"a": "1/3", "b": 0}, "R": [["1/10"]]}],
//!                "mu0": {"n": 1, "atoms": [{"t": 0, "v": [1]}]}},
//!   "probes": ["[0,1]"],
//!   "expected": [{"probe": "[0,1]", "value": ["10/9"], "tol": 1e-8}]
//! }]}
//! ```
//!
//! Numbers may be written as JSON numbers or as strings such as `"5/16"`.
//! Each `kind` is handled by a [`ScenarioRunner`] looked up by name in a
//! [`ScenarioRegistry`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::borel::{parse_number, BorelSet};
use crate::countable::{truncate, FamilyRegistry};
use crate::error::{Error, Result};
use crate::l2::{run_l2_kernels, Kernel};
use crate::linalg::LinearOperator;
use crate::markov::{MarkovOperator, Term};
use crate::measure::{Atom, LipMap, VectorMeasure, DEFAULT_RESOLUTION};
use crate::mk::{bl_oracle, mk_norm, mk_star_norm, Mode, ZERO_MASS_TOL};
use crate::solver::{
    solve_constant, solve_h1, solve_h2, ConstantSystem, SolveOptions, SolveReport,
};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    pub fn value(&self) -> Result<f64> {
        match self {
            Number::Float(v) => Ok(*v),
            Number::Text(s) => {
                parse_number(s).map_err(|_| Error::Scenario(format!("bad number {s:?}")))
            }
        }
    }

    /// The number as written in the scenario.
    pub fn exact(&self) -> String {
        match self {
            Number::Float(v) => v.to_string(),
            Number::Text(s) => s.clone(),
        }
    }
}

fn values(v: &[Number]) -> Result<Vec<f64>> {
    v.iter().map(Number::value).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub spec: u32,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.spec != SPEC_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported scenario spec version {} (expected {SPEC_VERSION})",
                file.spec
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for sc in &file.scenarios {
            if !seen.insert(sc.name.as_str()) {
                return Err(Error::Scenario(format!(
                    "duplicate scenario name {:?}",
                    sc.name
                )));
            }
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub kernels: Vec<KernelSpec>,
    /// Offset for `countable`, input for `norms`.
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub probes: Vec<String>,
    #[serde(default)]
    pub expected: Vec<Expected>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub tol: Option<f64>,
    #[serde(rename = "N")]
    pub resolution: Option<usize>,
    #[serde(rename = "Q")]
    pub nodes: Option<usize>,
    pub iterations: Option<usize>,
    pub seed: Option<MeasureSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub n: usize,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    /// Lebesgue measure times this vector.
    #[serde(default)]
    pub uniform: Option<Vec<Number>>,
    #[serde(rename = "N", default)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub t: Number,
    pub v: Vec<Number>,
}

impl MeasureSpec {
    pub fn build(&self, default_resolution: usize) -> Result<VectorMeasure> {
        let n = self.n;
        let resolution = self.resolution.unwrap_or(default_resolution);
        let base = match &self.uniform {
            Some(v) => {
                let v = values(v)?;
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                VectorMeasure::uniform(&v, resolution)?
            }
            None => VectorMeasure::zero(n),
        };
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom {
                    at: a.t.value()?,
                    value: values(&a.v)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        base.add(&VectorMeasure::from_parts(n, atoms, 1, vec![0.0; n])?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub mu0: Option<MeasureSpec>,
    #[serde(default)]
    pub v: Option<Vec<Number>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub map: MapSpec,
    #[serde(rename = "R")]
    pub r: Vec<Vec<Number>>,
    /// Multiplies `R`.
    #[serde(default)]
    pub scale: Option<Number>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub a: Number,
    pub b: Number,
}

pub fn matrix(rows: &[Vec<Number>]) -> Result<LinearOperator> {
    let rows = rows.iter().map(|r| values(r)).collect::<Result<Vec<_>>>()?;
    LinearOperator::from_rows(rows)
}

impl OperatorSpec {
    pub fn terms(&self) -> Result<Vec<Term>> {
        self.terms
            .iter()
            .map(|t| {
                let map = LipMap::new(t.map.a.value()?, t.map.b.value()?)?;
                let mut op = matrix(&t.r)?;
                if let Some(s) = &t.scale {
                    op = op.scaled(s.value()?);
                }
                Ok(Term::new(map, op))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
    pub eps: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub expr: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Vector(Vec<Number>),
    Scalar(Number),
}

impl ValueSpec {
    fn numbers(&self) -> Vec<Number> {
        match self {
            ValueSpec::Vector(v) => v.clone(),
            ValueSpec::Scalar(x) => vec![x.clone()],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default)]
    pub probe: Option<String>,
    #[serde(default)]
    pub quantity: Option<String>,
    pub value: ValueSpec,
    pub tol: f64,
}

/// What a runner hands back before probing and checking.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub measure: Option<VectorMeasure>,
    pub solve: Option<SolveReport>,
    pub quantities: BTreeMap<String, Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn quantity(&mut self, name: &str, v: impl Into<Vec<f64>>) {
        self.quantities.insert(name.to_string(), v.into());
    }
}

pub struct Context {
    /// Replaces every solver and check tolerance when set.
    pub tol_override: Option<f64>,
    pub families: FamilyRegistry,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            tol_override: None,
            families: FamilyRegistry::builtin(),
        }
    }
}

impl Context {
    fn tol(&self, spec: Option<f64>, default: f64) -> f64 {
        self.tol_override.or(spec).unwrap_or(default)
    }
}

pub trait ScenarioRunner: Send + Sync {
    fn kind(&self) -> &'static str;
    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome>;
}

fn need<'a, T>(field: &'a Option<T>, name: &str, sc: &Scenario) -> Result<&'a T> {
    field.as_ref().ok_or_else(|| {
        Error::Scenario(format!(
            "scenario {:?} of kind {} needs {name}",
            sc.name, sc.kind
        ))
    })
}

fn solve_options(sc: &Scenario, ctx: &Context, default_tol: f64) -> Result<SolveOptions> {
    let resolution = sc.solve.resolution.unwrap_or(DEFAULT_RESOLUTION);
    Ok(SolveOptions {
        tol: ctx.tol(sc.solve.tol, default_tol),
        seed: sc
            .solve
            .seed
            .as_ref()
            .map(|s| s.build(resolution))
            .transpose()?,
        forced_iterations: sc.solve.iterations,
        resolution,
        ..SolveOptions::default()
    })
}

fn record_bounds(out: &mut Outcome, op: &MarkovOperator) {
    let b = op.bounds();
    out.quantity("e", [b.e]);
    out.quantity("c", [b.c]);
    out.quantity("d", [b.d]);
}

fn record_solve(out: &mut Outcome, rep: SolveReport) {
    out.quantity("residual", [rep.residual]);
    out.quantity("error_bound", [rep.error_bound]);
    out.quantity("total_mass", rep.measure.total_mass());
    out.measure = Some(rep.measure.clone());
    out.solve = Some(rep);
}

struct H2Runner;

impl ScenarioRunner for H2Runner {
    fn kind(&self) -> &'static str {
        "h2"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let spec = need(&sc.operator, "operator", sc)?;
        let opts = solve_options(sc, ctx, 1e-8)?;
        let mu0 = need(&spec.mu0, "operator.mu0", sc)?.build(opts.resolution)?;
        let op = MarkovOperator::new(spec.terms()?)?.with_offset(mu0)?;
        let mut out = Outcome::default();
        record_bounds(&mut out, &op);
        record_solve(&mut out, solve_h2(&op, &opts)?);
        Ok(out)
    }
}

struct H1Runner;

impl ScenarioRunner for H1Runner {
    fn kind(&self) -> &'static str {
        "h1"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let spec = need(&sc.operator, "operator", sc)?;
        let v = values(need(&spec.v, "operator.v", sc)?)?;
        let op = MarkovOperator::new(spec.terms()?)?.with_target(v)?;
        let opts = solve_options(sc, ctx, 1e-8)?;
        let mut out = Outcome::default();
        record_bounds(&mut out, &op);
        out.warnings
            .push("H1 accuracy is guaranteed in the modified MK metric only".into());
        record_solve(&mut out, solve_h1(&op, &opts)?);
        Ok(out)
    }
}

/// Closed form, cross-checked against iteration when `e < 1`.
struct ConstantRunner;

impl ScenarioRunner for ConstantRunner {
    fn kind(&self) -> &'static str {
        "constant"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let spec = need(&sc.operator, "operator", sc)?;
        let opts = solve_options(sc, ctx, 1e-8)?;
        let mu0 = need(&spec.mu0, "operator.mu0", sc)?.build(opts.resolution)?;
        let op = MarkovOperator::new(spec.terms()?)?.with_offset(mu0)?;
        constant_outcome(sc, &op, &opts)
    }
}

fn constant_outcome(sc: &Scenario, op: &MarkovOperator, opts: &SolveOptions) -> Result<Outcome> {
    let sys = ConstantSystem::from_operator(op)?;
    let sol = solve_constant(&sys)?;
    let mut out = Outcome::default();
    record_bounds(&mut out, op);
    out.quantity("total_mass", sol.total_mass.clone());
    out.quantity("resolvent", sol.resolvent.rows().concat());
    let residual = op.apply(&sol.measure)?.sub(&sol.measure)?.total_variation();
    out.quantity("residual", [residual]);
    out.warnings.extend(sol.warnings);
    if sol.e < 1.0 {
        let iter = solve_h2(op, opts)?;
        let mut gap = 0.0f64;
        for p in &sc.probes {
            let set: BorelSet = p.parse()?;
            let (a, b) = (sol.measure.eval(&set), iter.measure.eval(&set));
            gap = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(gap, f64::max);
        }
        out.quantity("iteration_gap", [gap]);
        out.solve = Some(iter);
    } else {
        out.warnings
            .push("iteration cross-check skipped: e >= 1".into());
    }
    out.measure = Some(sol.measure);
    Ok(out)
}

/// Truncated countable family with offset `measure`.
struct CountableRunner;

impl ScenarioRunner for CountableRunner {
    fn kind(&self) -> &'static str {
        "countable"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let fam_spec = need(&sc.family, "family", sc)?;
        let family = ctx.families.build(&fam_spec.name, &fam_spec.params)?;
        let opts = solve_options(sc, ctx, 1e-8)?;
        let trunc = truncate(family.as_ref(), fam_spec.eps)?;
        let mu0 = need(&sc.measure, "measure", sc)?.build(opts.resolution)?;
        let op = trunc.operator.clone().with_offset(mu0)?;
        let constant = op.terms().iter().all(|t| t.map.is_constant());
        let mut out = if constant {
            constant_outcome(sc, &op, &opts)?
        } else {
            let mut out = Outcome::default();
            record_bounds(&mut out, &op);
            record_solve(&mut out, solve_h2(&op, &opts)?);
            out
        };
        out.quantity("terms", [trunc.terms as f64]);
        out.quantity("tail", [trunc.tail]);
        if let (true, Some(reference)) = (constant, family.reference_resolvent()) {
            let sys = ConstantSystem::from_operator(&op)?;
            let resolvent = solve_constant(&sys)?.resolvent;
            out.quantity(
                "resolvent_error",
                [resolvent.sub(&reference).operator_norm()],
            );
        }
        Ok(out)
    }
}

struct L2Runner;

impl ScenarioRunner for L2Runner {
    fn kind(&self) -> &'static str {
        "l2_kernel"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let kernels: Vec<Kernel> = sc
            .kernels
            .iter()
            .map(|k| k.expr.parse())
            .collect::<Result<_>>()?;
        let kernels: [Kernel; 2] = kernels.try_into().map_err(|k: Vec<Kernel>| {
            Error::Scenario(format!(
                "l2_kernel needs exactly 2 kernels, got {}",
                k.len()
            ))
        })?;
        let q = sc.solve.nodes.unwrap_or(64);
        let n = sc.solve.resolution.unwrap_or(243);
        let r = run_l2_kernels(&kernels, q, n, ctx.tol(sc.solve.tol, 1e-6))?;
        let mut out = Outcome::default();
        out.quantity("alpha", [r.alpha]);
        out.quantity("beta", [r.beta]);
        out.quantity("mu0_variation", [r.mu0_variation]);
        out.quantity("mu0_variation_discrete", [r.mu0_variation_discrete]);
        out.quantity("kernel_norms", r.kernel_norms.clone());
        out.quantity("kernel_sups", r.kernel_sups.clone());
        out.quantity("nodes", r.nodes.clone());
        out.quantity("phi", r.phi.clone());
        record_solve(&mut out, r.solve);
        Ok(out)
    }
}

struct NormsRunner;

impl ScenarioRunner for NormsRunner {
    fn kind(&self) -> &'static str {
        "norms"
    }

    fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Outcome> {
        let resolution = sc.solve.resolution.unwrap_or(1);
        let mu = need(&sc.measure, "measure", sc)?.build(resolution)?;
        let tol = ctx.tol(sc.solve.tol, 1e-3);
        let mut out = norms_outcome(&mu, tol)?;
        out.measure = Some(mu);
        Ok(out)
    }
}

pub fn norms_outcome(mu: &VectorMeasure, tol: f64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mk = mk_norm(mu, tol)?;
    out.quantity("mk", [mk.value]);
    out.quantity("mk_upper", [mk.upper]);
    if !mk.converged {
        out.warnings.push(format!(
            "MK duality gap {} exceeds tol",
            mk.upper - mk.value
        ));
    }
    out.quantity("variation", [mu.total_variation()]);
    let zero_mass = crate::function::norm(&mu.total_mass()) <= ZERO_MASS_TOL;
    if zero_mass {
        out.quantity("mk_star", [mk_star_norm(mu)?]);
    }
    match bl_oracle(mu, Mode::Bl, 0.005) {
        Ok(v) => {
            out.quantity("mk_oracle", [v]);
            if zero_mass {
                out.quantity("mk_star_oracle", [bl_oracle(mu, Mode::L, 0.005)?]);
            }
        }
        Err(Error::TooLarge(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Runners keyed by scenario kind.
pub struct ScenarioRegistry {
    runners: BTreeMap<&'static str, Box<dyn ScenarioRunner>>,
}

impl ScenarioRegistry {
    pub fn empty() -> Self {
        Self {
            runners: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(H1Runner));
        r.register(Box::new(H2Runner));
        r.register(Box::new(ConstantRunner));
        r.register(Box::new(CountableRunner));
        r.register(Box::new(L2Runner));
        r.register(Box::new(NormsRunner));
        r
    }

    pub fn register(&mut self, runner: Box<dyn ScenarioRunner>) {
        self.runners.insert(runner.kind(), runner);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.runners.keys().copied()
    }

    pub fn get(&self, kind: &str) -> Result<&dyn ScenarioRunner> {
        self.runners.get(kind).map(|r| r.as_ref()).ok_or_else(|| {
            Error::Scenario(format!(
                "unknown scenario kind {kind:?} (known: {})",
                self.kinds().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    /// Runs one scenario and evaluates its probes and expectations.
    pub fn run(&self, sc: &Scenario, ctx: &Context) -> Result<Report> {
        let runner = self.get(&sc.kind)?;
        let probes = sc
            .probes
            .iter()
            .map(|p| p.parse::<BorelSet>())
            .collect::<Result<Vec<_>>>()?;
        for e in &sc.expected {
            if e.probe.is_some() == e.quantity.is_some() {
                return Err(Error::Scenario(format!(
                    "scenario {:?}: each expectation needs exactly one of probe or quantity",
                    sc.name
                )));
            }
            if !(e.tol > 0.0) {
                return Err(Error::Scenario(format!(
                    "scenario {:?}: tolerance must be > 0",
                    sc.name
                )));
            }
        }
        let out = runner.run(sc, ctx)?;
        let probe_rows: Vec<ProbeRow> = sc
            .probes
            .iter()
            .zip(&probes)
            .map(|(text, set)| ProbeRow {
                set: text.clone(),
                value: out
                    .measure
                    .as_ref()
                    .map(|m| m.eval(set))
                    .unwrap_or_default(),
            })
            .collect();
        let mut checks = Vec::new();
        for e in &sc.expected {
            let numbers = e.value.numbers();
            let expected = values(&numbers)?;
            let (target, computed) = match (&e.probe, &e.quantity) {
                (Some(p), _) => {
                    let set: BorelSet = p.parse()?;
                    let m = out.measure.as_ref().ok_or_else(|| {
                        Error::Scenario(format!(
                            "scenario {:?} produces no measure to probe",
                            sc.name
                        ))
                    })?;
                    (format!("probe {p}"), m.eval(&set))
                }
                (_, Some(q)) => (
                    format!("quantity {q}"),
                    out.quantities.get(q).cloned().ok_or_else(|| {
                        Error::Scenario(format!("scenario {:?} has no quantity {q:?}", sc.name))
                    })?,
                ),
                _ => unreachable!(),
            };
            let tol = ctx.tol_override.unwrap_or(e.tol);
            let error = if computed.len() == expected.len() {
                computed
                    .iter()
                    .zip(&expected)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            checks.push(Check {
                target,
                expected,
                expected_exact: numbers.iter().map(Number::exact).collect(),
                computed,
                error: if error.is_finite() { Some(error) } else { None },
                tol,
                pass: error <= tol,
            });
        }
        let passed = checks.iter().all(|c| c.pass);
        Ok(Report {
            name: sc.name.clone(),
            kind: sc.kind.clone(),
            solve: out.solve,
            probes: probe_rows,
            quantities: out.quantities.clone(),
            checks,
            warnings: out.warnings.clone(),
            passed,
            measure: out.measure,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub set: String,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub target: String,
    pub expected: Vec<f64>,
    pub expected_exact: Vec<String>,
    pub computed: Vec<f64>,
    /// Largest coordinate difference; absent on a dimension mismatch.
    pub error: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub kind: String,
    pub solve: Option<SolveReport>,
    pub probes: Vec<ProbeRow>,
    pub quantities: BTreeMap<String, Vec<f64>>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub passed: bool,
    #[serde(skip)]
    pub measure: Option<VectorMeasure>,
}

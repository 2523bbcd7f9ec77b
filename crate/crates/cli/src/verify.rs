use fractal_measure::l2::PrimitiveMeasure;
use fractal_measure::linalg::{operator_norm, LinearOperator};
use fractal_measure::mk::variation_by_refinement;
use fractal_measure::scenario::{Context, Number, Report, ScenarioFile};

use crate::{exit_code_for, run_batch, EXIT_GOLDEN, EXIT_PARSE};

pub const REFERENCE_SCENARIOS: &str = include_str!("../scenarios/reference.json");

struct Claim {
    name: String,
    expected: String,
    computed: String,
    delta: f64,
    tol: f64,
}

impl Claim {
    fn pass(&self) -> bool {
        self.delta <= self.tol
    }
}

fn scalar_claim(name: &str, expected: &str, exact: f64, computed: f64, tol: f64) -> Claim {
    Claim {
        name: name.to_string(),
        expected: expected.to_string(),
        computed: format!("{computed:.12}"),
        delta: (computed - exact).abs(),
        tol,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

fn matrix(rows: &[[f64; 2]; 2]) -> LinearOperator {
    LinearOperator::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("square")
}

fn norm_claims(tol: Option<f64>) -> Vec<Claim> {
    let root2 = 1.0 + 2f64.sqrt();
    let tol = tol.unwrap_or(1e-10);
    let cases = [
        ("norm P1", "1+√2", root2, [[1.0, 0.0], [2.0, 1.0]]),
        ("norm P2", "1+√2", root2, [[1.0, 0.0], [2.0, -1.0]]),
        (
            "norm R1",
            "3/16",
            3.0 / 16.0,
            [[0.125, 0.125], [-0.0625, 0.125]],
        ),
        (
            "norm R2",
            "3/16",
            3.0 / 16.0,
            [[0.125, -0.125], [0.0625, 0.125]],
        ),
    ];
    cases
        .iter()
        .map(|(name, text, exact, m)| {
            scalar_claim(name, text, *exact, operator_norm(&matrix(m)), tol)
        })
        .collect()
}

fn primitive_claim(tol: Option<f64>) -> Claim {
    let m = PrimitiveMeasure;
    let v = variation_by_refinement(m.refinement_embedding(10), 10);
    scalar_claim(
        "primitive variation depth 10",
        "2/3",
        2.0 / 3.0,
        v,
        tol.unwrap_or(1e-2),
    )
}

fn phi_claim(report: &Report, tol: Option<f64>) -> Option<Claim> {
    let nodes = report.quantities.get("nodes")?;
    let phi = report.quantities.get("phi")?;
    let err = nodes
        .iter()
        .zip(phi)
        .map(|(&x, &p)| (p - 24.0 / 3329.0 * (76.0 * x + 5.0 * x * x)).abs())
        .fold(0.0, f64::max);
    Some(Claim {
        name: format!("{}/phi max node error", report.name),
        expected: "(24/3329)(76x+5x²)".to_string(),
        computed: format!("max err {err:.3e}"),
        delta: err,
        tol: tol.unwrap_or(1e-4),
    })
}

/// Runs the bundled scenarios plus direct claims and prints one table row per claim.
pub fn verify(filter: Option<&str>, tol: Option<f64>, perturb: Option<f64>) -> u8 {
    let mut file = ScenarioFile::parse(REFERENCE_SCENARIOS).expect("bundled scenarios parse");
    if let Some(p) = perturb {
        let sc = file
            .scenarios
            .iter_mut()
            .find(|s| s.name == "offset_cantor")
            .expect("bundled offset_cantor");
        let entry = &mut sc.operator.as_mut().expect("h2 operator").terms[0].r[0][0];
        *entry = Number::Float(entry.value().expect("bundled number") + p);
    }
    let keep = |name: &str| filter.is_none_or(|f| name.contains(f));
    file.scenarios.retain(|sc| {
        keep(&sc.name)
            || sc.expected.iter().any(|e| {
                let target = e
                    .probe
                    .as_deref()
                    .or(e.quantity.as_deref())
                    .unwrap_or_default();
                keep(&format!("{}/{target}", sc.name))
            })
            || (sc.kind == "l2_kernel" && keep(&format!("{}/phi max node error", sc.name)))
    });

    let ctx = Context {
        tol_override: tol,
        ..Context::default()
    };
    let mut claims = Vec::new();
    let mut code = 0u8;
    claims.extend(norm_claims(tol));
    claims.push(primitive_claim(tol));
    for (sc, (result, _)) in file.scenarios.iter().zip(run_batch(&file.scenarios, &ctx)) {
        match result {
            Ok(report) => {
                for c in &report.checks {
                    let target = c
                        .target
                        .split_once(' ')
                        .map_or(c.target.as_str(), |(_, t)| t);
                    claims.push(Claim {
                        name: format!("{}/{target}", report.name),
                        expected: c.expected_exact.join(", "),
                        computed: fmt_vec(&c.computed),
                        delta: c.error.unwrap_or(f64::INFINITY),
                        tol: c.tol,
                    });
                }
                if sc.kind == "l2_kernel" {
                    claims.extend(phi_claim(&report, tol));
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", sc.name);
                code = code.max(exit_code_for(&e));
            }
        }
    }
    claims.retain(|c| keep(&c.name));
    if claims.is_empty() && code == 0 {
        eprintln!("error: no claim matches the filter");
        return EXIT_PARSE;
    }

    let width = claims
        .iter()
        .map(|c| c.name.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    println!(
        "{:<width$}  {:<28}  {:<36}  {:>10}  verdict",
        "claim", "expected", "computed", "|Δ|"
    );
    let mut failures = 0;
    for c in &claims {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        if !c.pass() {
            failures += 1;
        }
        println!(
            "{:<width$}  {:<28}  {:<36}  {:>10.3e}  {verdict}",
            c.name, c.expected, c.computed, c.delta
        );
    }
    println!("{} claims, {failures} failed", claims.len());
    if code != 0 {
        code
    } else if failures > 0 {
        EXIT_GOLDEN
    } else {
        0
    }
}

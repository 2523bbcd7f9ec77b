//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on failure.

use std::process::ExitCode;
use std::time::Instant;

use fractal_measure::borel::{BorelSet, Interval};
use fractal_measure::countable::{truncate, CountableFamily, ExpSeries, Geometric};
use fractal_measure::function::FnFunction;
use fractal_measure::l2::{run_l2_example, PrimitiveMeasure};
use fractal_measure::linalg::{invert, matrix_exp, operator_norm, LinearOperator};
use fractal_measure::markov::{change_of_variable_check, MarkovOperator, Term};
use fractal_measure::measure::{Atom, LipMap, VectorMeasure};
use fractal_measure::mk::{bl_oracle, mk_norm, mk_star_norm, variation_by_refinement, Mode};
use fractal_measure::solver::{solve_constant, solve_h1, solve_h2, ConstantSystem, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn m2(rows: [[f64; 2]; 2]) -> LinearOperator {
    LinearOperator::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> LinearOperator {
    LinearOperator::from_rows((0..n).map(|_| random_vec(r, n)).collect()).unwrap()
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Atoms at distinct random points; with `zero_mass` the last atom balances the rest.
fn random_atomic(r: &mut ChaCha8Rng, n: usize, atoms: usize, zero_mass: bool) -> VectorMeasure {
    let mut ts: Vec<f64> = Vec::new();
    while ts.len() < atoms {
        let t: f64 = if r.gen_bool(0.2) {
            [0.0, 1.0][r.gen_range(0..2)]
        } else {
            r.gen()
        };
        if ts.iter().all(|s| (s - t).abs() > 1e-6) {
            ts.push(t);
        }
    }
    let mut list: Vec<Atom> = ts
        .iter()
        .map(|&t| Atom {
            at: t,
            value: random_vec(r, n),
        })
        .collect();
    if zero_mass && atoms >= 2 {
        let mut sum = vec![0.0; n];
        for a in &list[..atoms - 1] {
            for (s, v) in sum.iter_mut().zip(&a.value) {
                *s += v;
            }
        }
        list[atoms - 1].value = sum.iter().map(|s| -s).collect();
    }
    VectorMeasure::from_parts(n, list, 1, vec![0.0; n]).unwrap()
}

fn offset_cantor_terms() -> Vec<Term> {
    let [w1, w2] = LipMap::cantor();
    vec![
        Term::new(w1, m2([[1.0, 0.0], [2.0, 1.0]]).scaled(0.1)),
        Term::new(w2, m2([[1.0, 0.0], [2.0, -1.0]]).scaled(0.1)),
    ]
}

fn offset_cantor_mu0(resolution: usize) -> VectorMeasure {
    VectorMeasure::uniform(&[0.25, 0.0], resolution)
        .unwrap()
        .add(&VectorMeasure::dirac(0.0, vec![0.0, 0.25]).unwrap())
        .unwrap()
}

fn criterion_1() -> Outcome {
    let root2 = 1.0 + 2f64.sqrt();
    let cases = [
        (m2([[1.0, 0.0], [2.0, 1.0]]), root2),
        (m2([[1.0, 0.0], [2.0, -1.0]]), root2),
        (m2([[0.125, 0.125], [-0.0625, 0.125]]), 3.0 / 16.0),
        (m2([[0.125, -0.125], [0.0625, 0.125]]), 3.0 / 16.0),
    ];
    let err = cases
        .iter()
        .map(|(m, want)| (operator_norm(m) - want).abs())
        .fold(0.0, f64::max);
    check(err <= 1e-10, format!("max error {err:.1e}"))
}

fn criterion_2() -> Outcome {
    let op = MarkovOperator::new(offset_cantor_terms())
        .unwrap()
        .with_offset(offset_cantor_mu0(2187))
        .unwrap();
    let mut opts = SolveOptions::with_tol(1e-8);
    opts.resolution = 2187;
    let rep = solve_h2(&op, &opts).map_err(|e| e.to_string())?;
    let mu = &rep.measure;
    let probes: [(BorelSet, [f64; 2]); 5] = [
        (BorelSet::whole(), [5.0 / 16.0, 3.0 / 8.0]),
        (BorelSet::point(0.0), [0.0, 5.0 / 18.0]),
        (BorelSet::point(2.0 / 3.0), [0.0, -1.0 / 36.0]),
        (BorelSet::point(1.0), [0.0, 0.0]),
        (BorelSet::point(1.0 / 3.0), [0.0, 0.0]),
    ];
    let err = probes
        .iter()
        .map(|(b, want)| max_diff(&mu.eval(b), want))
        .fold(0.0, f64::max);
    check(
        err <= 1e-6,
        format!("max probe error {err:.1e} after {} steps", rep.iterations),
    )
}

fn criterion_3() -> Outcome {
    let [c0, c1] = [
        LipMap::constant(0.0).unwrap(),
        LipMap::constant(1.0).unwrap(),
    ];
    let mu0 = VectorMeasure::uniform(&[1.0, 0.0], 2187)
        .unwrap()
        .add(&VectorMeasure::dirac(0.0, vec![0.0, 1.0]).unwrap())
        .unwrap();
    let op = MarkovOperator::new(vec![
        Term::new(c0, m2([[0.125, 0.125], [-0.0625, 0.125]])),
        Term::new(c1, m2([[0.125, -0.125], [0.0625, 0.125]])),
    ])
    .unwrap()
    .with_offset(mu0)
    .unwrap();
    let exact = solve_constant(&ConstantSystem::from_operator(&op).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .measure;
    let mut opts = SolveOptions::with_tol(1e-9);
    opts.resolution = 2187;
    let iter = solve_h2(&op, &opts).map_err(|e| e.to_string())?.measure;

    let mut r = rng(3);
    let (mut closed_err, mut iter_err) = (0.0f64, 0.0f64);
    for case in 0..4 {
        for _ in 0..20 {
            let (mut a, mut b): (f64, f64) = (r.gen_range(0.01..0.99), r.gen_range(0.01..0.99));
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let (set, want) = match case {
                0 => (
                    BorelSet::new(
                        vec![Interval::closed(0.0, a), Interval::closed(b, 1.0)],
                        vec![],
                    )
                    .unwrap(),
                    [a + 1.0 - b + 1.0 / 3.0, 4.0 / 3.0],
                ),
                1 => (
                    BorelSet::interval(Interval::closed(0.0, a)),
                    [a + 1.0 / 3.0, 13.0 / 12.0],
                ),
                2 => (
                    BorelSet::interval(Interval::closed(a, 1.0)),
                    [1.0 - a, 0.25],
                ),
                _ => (BorelSet::interval(Interval::closed(a, b)), [b - a, 0.0]),
            };
            closed_err = closed_err.max(max_diff(&exact.eval(&set), &want));
            iter_err = iter_err.max(max_diff(&exact.eval(&set), &iter.eval(&set)));
        }
    }
    check(
        closed_err <= 1e-12 && iter_err <= 1e-6,
        format!("closed-form error {closed_err:.1e}, iteration gap {iter_err:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let r = run_l2_example(64, 243, 1e-6).map_err(|e| e.to_string())?;
    let da = (r.alpha - 319.0 / 6658.0).abs();
    let db = (r.beta - 120.0 / 3329.0).abs();
    let dphi = r
        .nodes
        .iter()
        .zip(&r.phi)
        .map(|(&x, &p)| (p - 24.0 / 3329.0 * (76.0 * x + 5.0 * x * x)).abs())
        .fold(0.0, f64::max);
    let dm = (r.mu0_variation - 1.0 / 3.0).abs();
    check(
        da <= 1e-5 && db <= 1e-5 && dphi <= 1e-4 && dm <= 1e-10,
        format!("|Δα| {da:.1e}, |Δβ| {db:.1e}, φ node error {dphi:.1e}, |Δ‖μ⁰‖| {dm:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let m = PrimitiveMeasure;
    let values: Vec<f64> = (0..=10)
        .map(|d| variation_by_refinement(m.refinement_embedding(d), d))
        .collect();
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    let last = values[10];
    check(
        monotone && (2.0 / 3.0 - 1e-2..=2.0 / 3.0).contains(&last),
        format!("depth 10 value {last:.8}, monotone {monotone}"),
    )
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let (mut worst_res, mut worst_resid, mut worst_tail) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let raw = random_matrix(&mut r, 3);
        let p = raw.scaled(r.gen_range(0.1..2.0) / operator_norm(&raw));
        let family = ExpSeries::new(p.clone());
        let trunc = truncate(&family, 1e-13).map_err(|e| e.to_string())?;
        worst_tail = worst_tail.max(trunc.tail);
        let id = LinearOperator::identity(3);
        let resolvent =
            invert(&id.sub(&trunc.operator.operator_sum())).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(operator_norm(&matrix_exp(&p.scaled(-1.0)).sub(&resolvent)));

        let mu0 = VectorMeasure::uniform(&random_vec(&mut r, 3), 27)
            .unwrap()
            .add(&VectorMeasure::dirac(r.gen(), random_vec(&mut r, 3)).unwrap())
            .unwrap();
        let op = trunc
            .operator
            .clone()
            .with_offset(mu0)
            .map_err(|e| e.to_string())?;
        let sol = solve_constant(&ConstantSystem::from_operator(&op).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let resid = op
            .apply(&sol.measure)
            .unwrap()
            .sub(&sol.measure)
            .unwrap()
            .total_variation();
        worst_resid = worst_resid.max(resid);
    }
    check(
        worst_res <= 1e-8 && worst_tail < 1e-12 && worst_resid <= 1e-9,
        format!(
            "resolvent error {worst_res:.1e}, tail {worst_tail:.1e}, residual {worst_resid:.1e}"
        ),
    )
}

/// Depth-`k` triadic interval `j`, closed at 1.
fn triadic(k: u32, j: usize) -> BorelSet {
    let n = 3usize.pow(k);
    let (lo, hi) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
    if j + 1 == n {
        BorelSet::interval(Interval::closed(lo, hi))
    } else {
        BorelSet::interval(Interval::half_open(lo, hi))
    }
}

/// Invariance recursion read off the ternary digits of `j`.
fn cantor_mass(alpha: f64, k: u32, mut j: usize) -> f64 {
    let mut mass = 1.0;
    for _ in 0..k {
        mass *= match j % 3 {
            0 => alpha,
            2 => 1.0 - alpha,
            _ => 0.0,
        };
        j /= 3;
    }
    mass
}

fn h1_solve(diag: [f64; 2], n: usize) -> Result<VectorMeasure, String> {
    let [w1, w2] = LipMap::cantor();
    let op = MarkovOperator::new(vec![
        Term::new(w1, LinearOperator::scalar(n, diag[0])),
        Term::new(w2, LinearOperator::scalar(n, diag[1])),
    ])
    .and_then(|op| op.with_target(vec![1.0; n]))
    .map_err(|e| e.to_string())?;
    let mut opts = SolveOptions::with_tol(1e-8);
    opts.resolution = 2187;
    Ok(solve_h1(&op, &opts).map_err(|e| e.to_string())?.measure)
}

fn criterion_7() -> Outcome {
    let mut mass_err = 0.0f64;
    for alpha in [1.0 / 3.0, 0.7] {
        let mu = h1_solve([alpha, 1.0 - alpha], 1)?;
        for k in 1..=3 {
            for j in 0..3usize.pow(k) {
                let got = mu.eval(&triadic(k, j))[0];
                mass_err = mass_err.max((got - cantor_mass(alpha, k, j)).abs());
            }
        }
    }
    let mu = h1_solve([1.0 / 3.0, 2.0 / 3.0], 2)?;
    let component_gap = (0..27)
        .map(|j| {
            let v = mu.eval(&triadic(3, j));
            (v[0] - v[1]).abs()
        })
        .fold(0.0, f64::max);
    check(
        mass_err <= 1e-6 && component_gap <= 1e-8,
        format!("triadic mass error {mass_err:.1e}, component gap {component_gap:.1e}"),
    )
}

fn random_map(r: &mut ChaCha8Rng) -> LipMap {
    if r.gen_bool(0.2) {
        return LipMap::constant(r.gen()).unwrap();
    }
    let slope: f64 = r.gen_range(-1.0..1.0);
    let room = 1.0 - slope.abs();
    let lo = r.gen_range(0.0..=room);
    LipMap::new(slope, if slope >= 0.0 { lo } else { lo - slope }).unwrap()
}

fn random_operator(r: &mut ChaCha8Rng, n: usize) -> MarkovOperator {
    let terms = (0..r.gen_range(1..=3))
        .map(|_| Term::new(random_map(r), random_matrix(r, n)))
        .collect();
    MarkovOperator::new(terms).unwrap()
}

fn criterion_8() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.gen_range(1..=3);
        let atoms = r.gen_range(1..=6);
        let mu = random_atomic(&mut r, n, atoms, false);
        let op = random_operator(&mut r, n);
        let freq: Vec<(f64, f64)> = (0..n).map(|_| (r.gen_range(0.5..4.0), r.gen())).collect();
        let f = FnFunction::new(n, 1.0, 4.0, move |t| {
            freq.iter().map(|(a, b)| (a * t + b).sin()).collect()
        });
        worst = worst.max(change_of_variable_check(&op, &f, &mu).map_err(|e| e.to_string())?);
    }
    check(worst <= 1e-12, format!("max discrepancy {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let tol = 1e-3;
    let slack = 3.0 * tol;
    let mut r = rng(9);
    let mut violations = 0;
    let mut zero_mass_cases = 0;
    for i in 0..500 {
        let n = r.gen_range(1..=3);
        let atoms = r.gen_range(1..=5);
        let zero = i % 2 == 0 && atoms >= 2;
        let mu = random_atomic(&mut r, n, atoms, zero);
        let var = mu.total_variation();
        let mk = mk_norm(&mu, tol).map_err(|e| e.to_string())?.value;
        if mk > var + slack {
            violations += 1;
        }
        if zero {
            zero_mass_cases += 1;
            let star = mk_star_norm(&mu).map_err(|e| e.to_string())?;
            if mk > star + slack || star > var.min(2.0 * mk) + slack {
                violations += 1;
            }
        }
    }
    check(
        violations == 0,
        format!("{violations} violations over 500 measures ({zero_mass_cases} with zero mass)"),
    )
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let (mut worst_mk, mut worst_star) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = r.gen_range(1..=2);
        let atoms = r.gen_range(1..=3);
        let mu = random_atomic(&mut r, n, atoms, false);
        let mk = mk_norm(&mu, 1e-4).map_err(|e| e.to_string())?.value;
        let oracle = bl_oracle(&mu, Mode::Bl, 0.005).map_err(|e| e.to_string())?;
        worst_mk = worst_mk.max((mk - oracle).abs());

        let nu = {
            let k = r.gen_range(2..=3);
            random_atomic(&mut r, n, k, true)
        };
        let star = mk_star_norm(&nu).map_err(|e| e.to_string())?;
        let oracle = bl_oracle(&nu, Mode::L, 0.005).map_err(|e| e.to_string())?;
        worst_star = worst_star.max((star - oracle).abs());
    }
    let dirac = VectorMeasure::dirac(0.0, vec![1.0])
        .unwrap()
        .sub(&VectorMeasure::dirac(1.0, vec![1.0]).unwrap())
        .unwrap();
    let d_mk = (mk_norm(&dirac, 1e-4).map_err(|e| e.to_string())?.value - 2.0 / 3.0).abs();
    let d_star = (mk_star_norm(&dirac).map_err(|e| e.to_string())? - 1.0).abs();
    check(
        worst_mk <= 1e-2 && worst_star <= 1e-2 && d_mk <= 1e-2 && d_star <= 1e-2,
        format!(
            "MK vs oracle {worst_mk:.1e}, MK* vs oracle {worst_star:.1e}, δ₀−δ₁ errors {d_mk:.1e} / {d_star:.1e}"
        ),
    )
}

fn criterion_11() -> Outcome {
    let tol = 1e-3;
    let op = MarkovOperator::new(offset_cantor_terms())
        .unwrap()
        .with_offset(offset_cantor_mu0(1))
        .unwrap();
    let b = op.bounds();
    let d = 4.0 / 3.0 * (1.0 + 2f64.sqrt()) / 5.0;
    if (b.d - d).abs() > 1e-12 {
        return Err(format!("bound d = {} differs from {d}", b.d));
    }
    let mut r = rng(11);
    let (mut mk_violations, mut var_violations) = (0, 0);
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let mu = {
            let k = r.gen_range(1..=4);
            random_atomic(&mut r, 2, k, false)
        };
        let nu = {
            let k = r.gen_range(1..=4);
            random_atomic(&mut r, 2, k, false)
        };
        let (hmu, hnu) = (op.apply(&mu).unwrap(), op.apply(&nu).unwrap());
        let lhs = mk_norm(&hmu.sub(&hnu).unwrap(), tol)
            .map_err(|e| e.to_string())?
            .value;
        let rhs = mk_norm(&mu.sub(&nu).unwrap(), tol)
            .map_err(|e| e.to_string())?
            .value;
        if lhs > d * rhs + 5.0 * tol {
            mk_violations += 1;
        }
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
        if op.transfer(&mu).unwrap().total_variation() > b.e * mu.total_variation() {
            var_violations += 1;
        }
    }
    check(
        mk_violations == 0 && var_violations == 0,
        format!(
            "{mk_violations} MK and {var_violations} variation violations, worst MK ratio {worst_ratio:.3} vs d = {d:.4}"
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut r = rng(12);
    let seed = random_matrix(&mut r, 2);
    let family = Geometric::new(0.6, seed).map_err(|e| e.to_string())?;
    let partial =
        |m: usize| MarkovOperator::new((1..=m).map(|i| family.term(i)).collect()).unwrap();
    let mut violations = 0;
    for _ in 0..100 {
        let m = r.gen_range(1..=12);
        let m2 = m + r.gen_range(1..=20);
        let mu = {
            let k = r.gen_range(1..=5);
            random_atomic(&mut r, 2, k, false)
        }
        .add(&VectorMeasure::uniform(&random_vec(&mut r, 2), 9).unwrap())
        .unwrap();
        let diff = partial(m2)
            .apply(&mu)
            .unwrap()
            .sub(&partial(m).apply(&mu).unwrap())
            .unwrap()
            .total_variation();
        if diff > family.tail(m) * mu.total_variation() {
            violations += 1;
        }
    }
    check(
        violations == 0,
        format!("{violations} violations over 100 measures"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("operator norms", criterion_1),
        ("offset Cantor fixed point", criterion_2),
        ("constant-map closed form", criterion_3),
        ("L2 example", criterion_4),
        ("primitive-measure variation", criterion_5),
        ("exponential series resolvent", criterion_6),
        ("classical Hutchinson measures", criterion_7),
        ("change of variable", criterion_8),
        ("norm inequalities", criterion_9),
        ("MK oracle equivalence", criterion_10),
        ("contraction bounds", criterion_11),
        ("truncation guarantee", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

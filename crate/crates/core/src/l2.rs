//! Measures with values in `L²(λ)` on `[0,1]`, reduced to `ℝ^Q` by
//! Gauss–Legendre quadrature.
//!
//! A function `f` is stored as the coordinates `√w_q f(x_q)`, so the
//! Euclidean norm of the coordinates is the quadrature `L²` norm of `f` and
//! a kernel operator becomes the symmetric-weighted matrix
//! `√w_p F(x_p, x_q) √w_q`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::borel::BorelSet;
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::markov::{MarkovOperator, Term};
use crate::measure::{LipMap, VectorMeasure};
use crate::quadrature::Quadrature;
use crate::solver::{solve_h2, SolveOptions, SolveReport};

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    X,
    Y,
    Num(f64),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::X => x,
            Expr::Y => y,
            Expr::Num(v) => *v,
            Expr::Neg(e) => -e.eval(x, y),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
        }
    }
}

/// Recursive descent over `x`, `y`, numbers, `+ - * / ^` and parentheses;
/// `^` binds tightest and associates to the right.
struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Expression(format!("{what} at offset {} in {:?}", self.pos, self.src))
    }

    /// Skips whitespace and returns the next character.
    fn peek(&mut self) -> Option<char> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        trimmed.chars().next()
    }

    fn bump(&mut self) {
        self.pos += self.src[self.pos..]
            .chars()
            .next()
            .map_or(0, char::len_utf8);
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.bump();
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('x') => {
                self.bump();
                Ok(Expr::X)
            }
            Some('y') => {
                self.bump();
                Ok(Expr::Y)
            }
            Some('(') => {
                self.bump();
                let e = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.bump();
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let rest = &self.src[self.pos..];
                let mut len = rest
                    .find(|c: char| !(c.is_ascii_digit() || c == '.'))
                    .unwrap_or(rest.len());
                // Exponent part, as in 1e-3.
                if rest[len..].starts_with(['e', 'E']) {
                    let tail = &rest[len + 1..];
                    let sign = usize::from(tail.starts_with(['+', '-']));
                    let digits = tail[sign..]
                        .find(|c: char| !c.is_ascii_digit())
                        .unwrap_or(tail.len() - sign);
                    if digits > 0 {
                        len += 1 + sign + digits;
                    }
                }
                let v: f64 = rest[..len].parse().map_err(|_| self.err("bad number"))?;
                self.pos += len;
                Ok(Expr::Num(v))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end")),
        }
    }
}

/// A kernel `F(x, y)` on `[0,1]²` given as an arithmetic expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    source: String,
    expr: Expr,
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let expr = p.sum()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(Self {
            source: s.to_string(),
            expr,
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.expr.eval(x, y)
    }

    /// `max |F|` over a 257 × 257 grid of `[0,1]²`.
    pub fn sampled_sup(&self) -> f64 {
        let m = 256;
        let mut sup = 0.0f64;
        for i in 0..=m {
            for j in 0..=m {
                sup = sup.max(self.eval(i as f64 / m as f64, j as f64 / m as f64).abs());
            }
        }
        sup
    }
}

/// Nyström matrix `√w_p F(x_p, x_q) √w_q`.
pub fn discretize_kernel(kernel: &Kernel, quad: &Quadrature) -> Result<LinearOperator> {
    let sw: Vec<f64> = quad.weights.iter().map(|w| w.sqrt()).collect();
    let op = LinearOperator::from_fn(quad.len(), |p, q| {
        sw[p] * kernel.eval(quad.nodes[p], quad.nodes[q]) * sw[q]
    });
    if op.rows().iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Expression(format!(
            "kernel {kernel} is not finite on the quadrature grid"
        )));
    }
    Ok(op)
}

/// Coordinates of a function sampled at the nodes.
pub fn embed(quad: &Quadrature, f: impl Fn(f64) -> f64) -> Vec<f64> {
    quad.nodes
        .iter()
        .zip(&quad.weights)
        .map(|(&x, &w)| w.sqrt() * f(x))
        .collect()
}

/// Nodal values of the function with the given coordinates.
pub fn unembed(quad: &Quadrature, coords: &[f64]) -> Vec<f64> {
    coords
        .iter()
        .zip(&quad.weights)
        .map(|(c, w)| c / w.sqrt())
        .collect()
}

/// The measure `m(B) = h_B` with `h_B(t) = λ(B ∩ [0,t])`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PrimitiveMeasure;

impl PrimitiveMeasure {
    /// Quadrature representation at density resolution `n`: cell `j`
    /// carries `√w_q λ(cell_j ∩ [0, x_q])` in coordinate `q`.
    pub fn discretize(&self, quad: &Quadrature, n: usize) -> Result<VectorMeasure> {
        let q = quad.len();
        let mut cells = vec![0.0; n * q];
        for j in 0..n {
            let (lo, hi) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
            for (k, (&x, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
                cells[j * q + k] = w.sqrt() * (hi.min(x) - lo).max(0.0);
            }
        }
        VectorMeasure::from_parts(q, vec![], n, cells)
    }

    /// `‖m‖ = ∫₀¹ ‖1_{[t,1]}‖ dt = ∫₀¹ √(1−t) dt`, evaluated with
    /// `u = √(1−t)` so the integrand `2u²` is integrated exactly.
    pub fn variation(&self) -> f64 {
        Quadrature::gauss_legendre(2).integrate(0.0, 1.0, |u| 2.0 * u * u)
    }

    /// Coordinates of `m(B)` in an orthonormal basis of the continuous
    /// piecewise-linear functions on the uniform grid with `2^depth` cells.
    /// Exact (an isometry into `L²`) whenever the endpoints of `B` lie on
    /// that grid, because `h_B` is then piecewise linear on it.
    pub fn refinement_embedding(&self, depth: u32) -> impl Fn(&BorelSet) -> Vec<f64> {
        let cells = 1usize << depth;
        let h = 1.0 / cells as f64;
        // Cholesky factor of the tridiagonal P1 mass matrix.
        let mut diag = vec![0.0; cells + 1];
        let mut sub = vec![0.0; cells];
        for k in 0..=cells {
            let d = if k == 0 || k == cells {
                h / 3.0
            } else {
                2.0 * h / 3.0
            };
            let prev = if k > 0 { sub[k - 1] * sub[k - 1] } else { 0.0 };
            diag[k] = (d - prev).sqrt();
            if k < cells {
                sub[k] = (h / 6.0) / diag[k];
            }
        }
        move |b: &BorelSet| {
            let values: Vec<f64> = (0..=cells).map(|k| b.overlap(0.0, k as f64 * h)).collect();
            // Lᵀ c
            (0..=cells)
                .map(|k| {
                    diag[k] * values[k]
                        + if k < cells {
                            sub[k] * values[k + 1]
                        } else {
                            0.0
                        }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Result {
    pub nodes: Vec<f64>,
    /// Representative of `μ*([0,1])` at the nodes.
    pub phi: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `‖μ⁰‖` of the continuous measure.
    pub mu0_variation: f64,
    /// `‖μ⁰‖` of its quadrature representation.
    pub mu0_variation_discrete: f64,
    pub kernel_norms: Vec<f64>,
    pub kernel_sups: Vec<f64>,
    #[serde(skip)]
    pub solve: SolveReport,
}

/// Solves `μ = R_1 ω_1(μ) + R_2 ω_2(μ) + ½ m` with the Cantor maps and
/// kernel operators `R_i`, at `q` nodes and density resolution `n`.
pub fn run_l2_kernels(kernels: &[Kernel; 2], q: usize, n: usize, tol: f64) -> Result<L2Result> {
    if q < 16 || n < 27 {
        return Err(Error::Scenario(format!(
            "L² runs need Q >= 16 and N >= 27, got Q = {q}, N = {n}"
        )));
    }
    let quad = Quadrature::gauss_legendre(q);
    let ops = kernels
        .iter()
        .map(|k| discretize_kernel(k, &quad))
        .collect::<Result<Vec<_>>>()?;
    let mu0 = PrimitiveMeasure.discretize(&quad, n)?.scaled(0.5);
    let [w1, w2] = LipMap::cantor();
    let op = MarkovOperator::new(vec![
        Term::new(w1, ops[0].clone()),
        Term::new(w2, ops[1].clone()),
    ])?
    .with_offset(mu0.clone())?;
    let opts = SolveOptions {
        resolution: n,
        ..SolveOptions::with_tol(tol)
    };
    let solve = solve_h2(&op, &opts)?;
    let phi = unembed(&quad, &solve.measure.total_mass());
    let moment = |p: i32| {
        0.25 * quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .zip(&phi)
            .map(|((x, w), f)| w * x.powi(p) * f)
            .sum::<f64>()
    };
    Ok(L2Result {
        nodes: quad.nodes.clone(),
        alpha: moment(1),
        beta: moment(2),
        phi,
        mu0_variation: 0.5 * PrimitiveMeasure.variation(),
        mu0_variation_discrete: mu0.total_variation(),
        kernel_norms: ops.iter().map(LinearOperator::operator_norm).collect(),
        kernel_sups: kernels.iter().map(Kernel::sampled_sup).collect(),
        solve,
    })
}

/// Kernels whose invariance equation for `B = [0,1]` is
/// `φ(x) = x/2 + ¼(x ∫ yφ + x² ∫ y²φ)`.
pub fn example_kernels() -> [Kernel; 2] {
    [
        "x*y/4".parse().expect("valid kernel"),
        "x^2*y^2/4".parse().expect("valid kernel"),
    ]
}

pub fn run_l2_example(q: usize, n: usize, tol: f64) -> Result<L2Result> {
    run_l2_kernels(&example_kernels(), q, n, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::Interval;

    #[test]
    fn parse_and_eval() {
        let k: Kernel = "x^2*y^2/4".parse().unwrap();
        assert_eq!(k.eval(0.5, 2.0), 0.25);
        let k: Kernel = "-(x - 2*y) + 1.5e1 / 3 ^ 2 ^ 0".parse().unwrap();
        assert_eq!(k.eval(1.0, 1.0), 1.0 + 5.0);
        assert_eq!("2 ^ -1".parse::<Kernel>().unwrap().eval(0.0, 0.0), 0.5);
        for bad in ["", "x +", "(x", "x y", "z", "1..2"] {
            assert!(bad.parse::<Kernel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn rank_one_norm() {
        let quad = Quadrature::gauss_legendre(64);
        let half: Kernel = "x*y/2".parse().unwrap();
        let r = discretize_kernel(&half, &quad).unwrap();
        assert!((r.operator_norm() - 1.0 / 6.0).abs() < 1e-12);
        let zero: Kernel = "0".parse().unwrap();
        assert_eq!(discretize_kernel(&zero, &quad).unwrap().norm_one(), 0.0);
        for k in example_kernels() {
            let r = discretize_kernel(&k, &quad).unwrap();
            assert!(r.operator_norm() <= k.sampled_sup() + 1e-10);
        }
    }

    #[test]
    fn embedding_is_isometric() {
        let quad = Quadrature::gauss_legendre(16);
        let f = embed(&quad, |x| 1.0 + x * x);
        // ∫(1 + x²)² = 1 + 2/3 + 1/5
        let sq: f64 = f.iter().map(|c| c * c).sum();
        assert!((sq - (1.0 + 2.0 / 3.0 + 0.2)).abs() < 1e-14);
        let back = unembed(&quad, &f);
        assert!((back[3] - (1.0 + quad.nodes[3].powi(2))).abs() < 1e-14);
    }

    #[test]
    fn primitive_values() {
        let quad = Quadrature::gauss_legendre(16);
        let m = PrimitiveMeasure.discretize(&quad, 27).unwrap();
        let whole = m.eval(&BorelSet::whole());
        let expected = embed(&quad, |x| x);
        assert!(whole
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(m.eval(&BorelSet::empty()).iter().all(|&v| v == 0.0));
        assert!((PrimitiveMeasure.variation() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_embedding_matches_closed_form() {
        let embed = PrimitiveMeasure.refinement_embedding(4);
        for (a, b) in [(0.0, 0.0625), (0.25, 0.5), (0.0, 1.0), (0.9375, 1.0)] {
            let v = embed(&BorelSet::interval(Interval::half_open(a, b)));
            let h = b - a;
            let exact = h * h * h / 3.0 + h * h * (1.0 - a - h);
            let got: f64 = v.iter().map(|c| c * c).sum();
            assert!((got - exact).abs() < 1e-15, "{a} {b}: {got} vs {exact}");
        }
    }
}

#[cfg(test)]
mod example {
    use super::*;

    #[test]
    fn golden_moments() {
        let r = run_l2_example(64, 243, 1e-6).unwrap();
        let exact = |x: f64| 24.0 / 3329.0 * (76.0 * x + 5.0 * x * x);
        let err = r
            .nodes
            .iter()
            .zip(&r.phi)
            .map(|(x, p)| (p - exact(*x)).abs())
            .fold(0.0, f64::max);
        assert!((r.alpha - 319.0 / 6658.0).abs() < 1e-5, "{}", r.alpha);
        assert!((r.beta - 120.0 / 3329.0).abs() < 1e-5, "{}", r.beta);
        assert!(err < 1e-4, "{err}");
        assert!((r.mu0_variation - 1.0 / 3.0).abs() < 1e-10);
    }
}

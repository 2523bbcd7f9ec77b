//! Monge–Kantorovich norms of vector measures on `[0,1]`.
//!
//! `‖μ‖_MK = sup |∫f dμ|` over `f` with `‖f‖_∞ + ‖f‖_L ≤ 1`, and the modified
//! norm `‖μ‖*_MK` over `‖f‖_L ≤ 1`, the latter only for `μ(T) = 0`.
//!
//! On an interval the modified norm has a closed form: integrating by parts,
//! `∫f dμ = −∫ f'(t) · μ([0,t]) dt`, so `‖μ‖*_MK = ∫₀¹ ‖μ([0,t])‖ dt`.
//! The bounded-Lipschitz norm has none; it is computed as a finite convex
//! program on the support of `μ`, with Lipschitz constraints between
//! neighbouring support points only (they imply all the others on a line).

use serde::Serialize;

use crate::borel::{BorelSet, Interval};
use crate::error::{Error, Result};
use crate::function::{dist, dot, norm};
use crate::measure::VectorMeasure;
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MkValue {
    /// Value of a feasible test function, hence a lower bound.
    pub value: f64,
    /// Dual certificate: the norm is at most this.
    pub upper: f64,
    /// `upper − value ≤ tol`.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `‖f‖_∞ + ‖f‖_L ≤ 1`.
    Bl,
    /// `‖f‖_L ≤ 1`, `f` pinned to 0 at the leftmost support point.
    L,
}

/// Support points of `μ` with their masses.
struct Chain {
    n: usize,
    t: Vec<f64>,
    m: Vec<f64>,
}

impl Chain {
    fn new(mu: &VectorMeasure) -> Self {
        let n = mu.dim();
        let mut t = Vec::new();
        let mut m = Vec::new();
        for (at, v) in mu.support() {
            if v.iter().any(|&x| x != 0.0) {
                t.push(at);
                m.extend(v);
            }
        }
        Self { n, t, m }
    }

    fn len(&self) -> usize {
        self.t.len()
    }

    fn mass(&self, j: usize) -> &[f64] {
        &self.m[j * self.n..(j + 1) * self.n]
    }

    fn gap(&self, e: usize) -> f64 {
        self.t[e + 1] - self.t[e]
    }
}

fn project_ball(v: &mut [f64], radius: f64) {
    let r = norm(v);
    if r > radius {
        let k = if r > 0.0 { radius / r } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= k);
    }
}

const INNER_CAP: usize = 20_000;
const CHECK_EVERY: usize = 25;

/// Primal-dual state of one split, reused as a warm start for the next.
struct Split {
    f: Vec<f64>,
    y: Vec<f64>,
}

struct SplitResult {
    lower: f64,
    /// `(A, B)` of a dual bound `V(s') ≤ s'A + (1−s')B`, valid for every split.
    line: Option<(f64, f64)>,
}

/// `max Σ⟨f_j, m_j⟩` subject to `‖f_j‖ ≤ s`, `‖f_{j+1} − f_j‖ ≤ (1−s)Δ_j`,
/// by diagonally preconditioned Chambolle–Pock iterations. Stops once the
/// dual bound `s Σ‖m − Dᵀy‖ + (1−s) Σ Δ‖y‖` is within `gap_tol` of the best
/// feasible value.
fn solve_split(chain: &Chain, s: f64, gap_tol: f64, state: &mut Split) -> SplitResult {
    let (k, n) = (chain.len(), chain.n);
    let ell = 1.0 - s;
    if s <= 0.0 {
        return SplitResult {
            lower: 0.0,
            line: None,
        };
    }
    if ell <= 0.0 || k == 1 {
        // Only constant test functions remain (or there are no edges).
        let total = if k == 1 {
            chain.mass(0).to_vec()
        } else {
            let mut acc = vec![0.0; n];
            for j in 0..k {
                acc.iter_mut().zip(chain.mass(j)).for_each(|(a, b)| *a += b);
            }
            acc
        };
        return SplitResult {
            lower: s * norm(&total),
            line: (k == 1).then(|| (norm(&total), 0.0)),
        };
    }
    let edges = k - 1;
    let radius: Vec<f64> = (0..edges).map(|e| ell * chain.gap(e)).collect();
    let tau: Vec<f64> = (0..k)
        .map(|j| if j == 0 || j == k - 1 { 1.0 } else { 0.5 })
        .collect();
    let sigma = 0.5;

    let f = &mut state.f;
    let y = &mut state.y;
    for j in 0..k {
        project_ball(&mut f[j * n..(j + 1) * n], s);
    }
    let mut f_bar = f.clone();
    let mut dty = vec![0.0; k * n];
    let mut best_lower = 0.0f64;
    let mut best_line = (f64::INFINITY, f64::INFINITY);
    let at = |line: (f64, f64)| s * line.0 + ell * line.1;
    let mut z = vec![0.0; n];
    // The last dual iterate can oscillate on degenerate splits; the running
    // average converges regardless.
    let mut y_avg = vec![0.0; y.len()];
    let mut dty_avg = vec![0.0; k * n];
    for it in 1..=INNER_CAP {
        for e in 0..edges {
            for c in 0..n {
                z[c] = y[e * n + c] + sigma * (f_bar[(e + 1) * n + c] - f_bar[e * n + c]);
            }
            let mut p: Vec<f64> = z.iter().map(|x| x / sigma).collect();
            project_ball(&mut p, radius[e]);
            for c in 0..n {
                y[e * n + c] = z[c] - sigma * p[c];
            }
        }
        transpose_diff(y, k, n, &mut dty);
        let w = 1.0 / it as f64;
        y_avg
            .iter_mut()
            .zip(y.iter())
            .for_each(|(a, b)| *a += w * (b - *a));
        for j in 0..k {
            let mj = chain.mass(j);
            let row = j * n..(j + 1) * n;
            let old: Vec<f64> = f[row.clone()].to_vec();
            for c in 0..n {
                f[j * n + c] += tau[j] * (mj[c] - dty[j * n + c]);
            }
            project_ball(&mut f[row.clone()], s);
            for c in 0..n {
                f_bar[j * n + c] = 2.0 * f[j * n + c] - old[c];
            }
        }
        if it % CHECK_EVERY == 0 || it == INNER_CAP {
            best_lower = best_lower.max(feasible_value(chain, f, s, &radius));
            transpose_diff(&y_avg, k, n, &mut dty_avg);
            for line in [
                dual_line(chain, y, &dty),
                dual_line(chain, &y_avg, &dty_avg),
            ] {
                if at(line) < at(best_line) {
                    best_line = line;
                }
            }
            if at(best_line) - best_lower <= gap_tol {
                break;
            }
        }
    }
    SplitResult {
        lower: best_lower,
        line: Some(best_line),
    }
}

/// `(Dᵀy)_j = y_{j−1} − y_j`.
fn transpose_diff(y: &[f64], k: usize, n: usize, out: &mut [f64]) {
    for j in 0..k {
        for c in 0..n {
            let mut v = 0.0;
            if j > 0 {
                v += y[(j - 1) * n + c];
            }
            if j + 1 < k {
                v -= y[j * n + c];
            }
            out[j * n + c] = v;
        }
    }
}

/// Objective of `f` after scaling it into the edge constraints.
fn feasible_value(chain: &Chain, f: &[f64], s: f64, radius: &[f64]) -> f64 {
    let n = chain.n;
    let mut scale = 1.0f64;
    for j in 0..chain.len() {
        let r = norm(&f[j * n..(j + 1) * n]);
        if r > s {
            scale = scale.min(s / r);
        }
    }
    for (e, &rad) in radius.iter().enumerate() {
        let d = dist(&f[(e + 1) * n..(e + 2) * n], &f[e * n..(e + 1) * n]);
        if d > rad {
            scale = scale.min(rad / d);
        }
    }
    let value: f64 = (0..chain.len())
        .map(|j| dot(&f[j * n..(j + 1) * n], chain.mass(j)))
        .sum();
    // Slightly under-scale so rounding cannot leave the feasible set.
    (scale * (1.0 - 4.0 * f64::EPSILON) * value).max(0.0)
}

/// `(Σ‖m_j − (Dᵀy)_j‖, Σ Δ_e ‖y_e‖)`.
fn dual_line(chain: &Chain, y: &[f64], dty: &[f64]) -> (f64, f64) {
    let n = chain.n;
    let mut a = 0.0;
    let mut b = 0.0;
    for j in 0..chain.len() {
        let r: f64 = chain
            .mass(j)
            .iter()
            .zip(&dty[j * n..(j + 1) * n])
            .map(|(m, d)| (m - d) * (m - d))
            .sum::<f64>()
            .sqrt();
        a += r;
    }
    for e in 0..chain.len() - 1 {
        b += chain.gap(e) * norm(&y[e * n..(e + 1) * n]);
    }
    (a, b)
}

/// `max_{s ∈ [0,1]} min_i (s A_i + (1−s) B_i)`; the optimum sits at an end
/// point or where two lines cross.
fn envelope_max(lines: &[(f64, f64)]) -> f64 {
    if lines.is_empty() {
        return f64::INFINITY;
    }
    let lowest = |s: f64| {
        lines
            .iter()
            .map(|(a, b)| s * a + (1.0 - s) * b)
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = lowest(0.0).max(lowest(1.0));
    for (i, p) in lines.iter().enumerate() {
        for q in &lines[i + 1..] {
            // s(A_p − B_p) + B_p = s(A_q − B_q) + B_q
            let den = (p.0 - p.1) - (q.0 - q.1);
            if den != 0.0 {
                let s = (q.1 - p.1) / den;
                if (0.0..=1.0).contains(&s) {
                    best = best.max(lowest(s));
                }
            }
        }
    }
    best
}

const SPLIT_GRID: usize = 32;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bounded-Lipschitz MK norm. The optimal value is concave in the budget
/// split `s = ‖f‖_∞`, which is searched on a 33-point grid and then by golden
/// section around the best grid point.
pub fn mk_norm(mu: &VectorMeasure, tol: f64) -> Result<MkValue> {
    if !(tol > 0.0) {
        return Err(Error::Scenario(format!("tolerance must be > 0, got {tol}")));
    }
    let chain = Chain::new(mu);
    if chain.len() == 0 {
        return Ok(MkValue {
            value: 0.0,
            upper: 0.0,
            converged: true,
        });
    }
    let gap_tol = tol / 10.0;
    let size = chain.len() * chain.n;
    let mut state = Split {
        f: vec![0.0; size],
        y: vec![0.0; size.saturating_sub(chain.n)],
    };
    let mut lines = Vec::new();
    let mut eval = |s: f64, state: &mut Split| {
        let r = solve_split(&chain, s, gap_tol, state);
        lines.extend(r.line);
        r.lower
    };

    let grid: Vec<f64> = (0..=SPLIT_GRID)
        .map(|i| eval(i as f64 / SPLIT_GRID as f64, &mut state))
        .collect();
    // Ties go to the smaller split.
    let best = (0..grid.len()).fold(0, |b, i| if grid[i] > grid[b] { i } else { b });
    let mut value = grid[best];
    let h = 1.0 / SPLIT_GRID as f64;
    let (mut a, mut b) = (
        (best as f64 - 1.0).max(0.0) * h,
        (best as f64 + 1.0).min(SPLIT_GRID as f64) * h,
    );
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut v1 = eval(x1, &mut state);
    let mut v2 = eval(x2, &mut state);
    while b - a > 1e-6 {
        if v1 >= v2 {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - INV_PHI * (b - a);
            v1 = eval(x1, &mut state);
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + INV_PHI * (b - a);
            v2 = eval(x2, &mut state);
        }
        value = value.max(v1).max(v2);
    }
    // The feasible value can never exceed the certificate; clamp rounding.
    let upper = envelope_max(&lines).max(value);
    Ok(MkValue {
        value,
        upper,
        converged: upper - value <= tol,
    })
}

/// Mass threshold for membership in the zero-mass subspace.
pub const ZERO_MASS_TOL: f64 = 1e-10;

/// Modified MK norm, `∫₀¹ ‖μ([0,t])‖ dt`, exact up to rounding.
pub fn mk_star_norm(mu: &VectorMeasure) -> Result<f64> {
    let mass = norm(&mu.total_mass());
    if mass > ZERO_MASS_TOL {
        return Err(Error::NonzeroMass(mass));
    }
    Ok(cumulative_integral(mu, segment_exact))
}

/// Trapezoid bound on `∫₀¹ ‖μ([0,t])‖ dt`; an upper bound because the
/// integrand is convex on each segment. Exact for atomic measures. No mass
/// precondition.
pub fn mk_star_upper(mu: &VectorMeasure) -> f64 {
    cumulative_integral(mu, |a, b, h| 0.5 * h * (norm(a) + norm(&add(a, b, h))))
}

fn add(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + h * y).collect()
}

/// Walks `[0,1]` through atom locations and cell boundaries; on each
/// segment `μ([0, t_0 + u]) = A + u B` and `seg(A, B, h)` integrates its norm.
fn cumulative_integral(mu: &VectorMeasure, seg: impl Fn(&[f64], &[f64], f64) -> f64) -> f64 {
    let n = mu.dim();
    let cells = mu.resolution();
    let width = 1.0 / cells as f64;
    let mut cum = vec![0.0; n];
    let mut total = 0.0;
    let mut atoms = mu.atoms().iter().peekable();
    for j in 0..cells {
        let lo = j as f64 * width;
        let hi = if j + 1 == cells {
            1.0
        } else {
            (j + 1) as f64 * width
        };
        let slope: Vec<f64> = mu.cell(j).iter().map(|c| c / width).collect();
        let mut at = lo;
        loop {
            let next = match atoms.peek() {
                Some(a) if a.at < hi || j + 1 == cells => Some(a.at.clamp(at, hi)),
                _ => None,
            };
            let stop = next.unwrap_or(hi);
            let h = stop - at;
            if h > 0.0 {
                total += seg(&cum, &slope, h);
                cum.iter_mut().zip(&slope).for_each(|(c, s)| *c += h * s);
            }
            at = stop;
            match next {
                Some(_) => {
                    let a = atoms.next().expect("peeked");
                    cum.iter_mut().zip(&a.value).for_each(|(c, v)| *c += v);
                }
                None => break,
            }
        }
    }
    total
}

/// `∫₀ʰ ‖A + uB‖ du` in closed form.
fn segment_exact(a: &[f64], b: &[f64], h: f64) -> f64 {
    let bb = dot(b, b);
    if bb == 0.0 {
        return h * norm(a);
    }
    let ab = dot(a, b);
    let u0 = -ab / bb;
    // Outside the segment the integrand is smooth and Gauss–Legendre is
    // accurate to rounding; the antiderivative would cancel badly there.
    if u0 < -h || u0 > 2.0 * h {
        let gl = smooth_rule();
        return gl.integrate(0.0, h, |u| norm(&add(a, b, u)));
    }
    let perp: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + u0 * y).collect();
    let d = dot(&perp, &perp);
    let sa = bb.sqrt();
    let g = |u: f64| {
        if d > 0.0 {
            0.5 * u * (bb * u * u + d).sqrt() + d / (2.0 * sa) * (u * sa / d.sqrt()).asinh()
        } else {
            0.5 * sa * u * u.abs()
        }
    };
    g(h - u0) - g(-u0)
}

fn smooth_rule() -> &'static Quadrature {
    static RULE: std::sync::OnceLock<Quadrature> = std::sync::OnceLock::new();
    RULE.get_or_init(|| Quadrature::gauss_legendre(24))
}

/// Brute-force reference value of `‖μ‖_MK` (mode `Bl`) or `‖μ‖*_MK`
/// (mode `L`) by grid search over test-function values on the support.
///
/// Values live on a coarse grid (1-D, or polar for `n = 2`), are optimised
/// by dynamic programming along the support, then refined on successively
/// finer local grids down to `grid_step`. Every candidate is feasible, so
/// the result is a lower bound that tightens as `grid_step` shrinks.
pub fn bl_oracle(mu: &VectorMeasure, mode: Mode, grid_step: f64) -> Result<f64> {
    let chain = Chain::new(mu);
    if chain.len() > 4 || chain.n > 2 {
        return Err(Error::TooLarge(format!(
            "oracle handles at most 4 support points in dimension <= 2, got {} in dimension {}",
            chain.len(),
            chain.n
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Scenario(format!(
            "grid step must be > 0, got {grid_step}"
        )));
    }
    if chain.len() == 0 {
        return Ok(0.0);
    }
    match mode {
        Mode::L => Ok(oracle_split(&chain, None, grid_step).0),
        Mode::Bl => {
            let coarse: Vec<(f64, Vec<Vec<f64>>)> = (0..=20)
                .map(|i| oracle_split(&chain, Some(i as f64 / 20.0), grid_step))
                .collect();
            let best =
                (0..coarse.len()).fold(0, |b, i| if coarse[i].0 > coarse[b].0 { i } else { b });
            let mut value = coarse[best].0;
            let centre = best as f64 / 20.0;
            for k in -10..=10 {
                let s = centre + k as f64 * 0.005;
                if !(0.0..=1.0).contains(&s) || k == 0 {
                    continue;
                }
                let (v, _) = refine(&chain, Some(s), &coarse[best].1, 0.05, grid_step);
                value = value.max(v);
            }
            Ok(value)
        }
    }
}

/// Coarse search followed by local refinement at one split. `s = None` is
/// the gauged Lipschitz mode.
fn oracle_split(chain: &Chain, s: Option<f64>, grid_step: f64) -> (f64, Vec<Vec<f64>>) {
    let coarse = grid_step.max(0.05);
    let cands: Vec<Vec<Vec<f64>>> = (0..chain.len())
        .map(|j| {
            let radius = match s {
                Some(s) => s,
                None => chain.t[j] - chain.t[0],
            };
            if s.is_none() && j == 0 {
                vec![vec![0.0; chain.n]]
            } else {
                global_grid(chain.n, radius, coarse)
            }
        })
        .collect();
    let (v, f) = chain_dp(chain, s, &cands);
    if coarse <= grid_step {
        return (v, f);
    }
    let (v2, f2) = refine(chain, s, &f, coarse, grid_step);
    if v2 >= v {
        (v2, f2)
    } else {
        (v, f)
    }
}

/// Repeated local grids of half-width `2h` around the incumbent, shrinking
/// `h` by 4 each round until it reaches `grid_step`.
fn refine(
    chain: &Chain,
    s: Option<f64>,
    start: &[Vec<f64>],
    mut h: f64,
    grid_step: f64,
) -> (f64, Vec<Vec<f64>>) {
    let mut best = start.to_vec();
    let mut value = f64::NEG_INFINITY;
    loop {
        h = (h / 4.0).max(grid_step);
        let cands: Vec<Vec<Vec<f64>>> = (0..chain.len())
            .map(|j| {
                if s.is_none() && j == 0 {
                    return vec![vec![0.0; chain.n]];
                }
                let radius = s.unwrap_or(chain.t[j] - chain.t[0]);
                let mut pts = local_grid(&best[j], 8, h);
                pts.retain(|p| norm(p) <= radius + 1e-12);
                pts.push(best[j].clone());
                pts
            })
            .collect();
        let (v, f) = chain_dp(chain, s, &cands);
        if v >= value {
            value = v;
            best = f;
        }
        if h <= grid_step {
            return (value, best);
        }
    }
}

fn global_grid(n: usize, radius: f64, h: f64) -> Vec<Vec<f64>> {
    let steps = (radius / h).floor() as i64;
    if n == 1 {
        let mut pts: Vec<Vec<f64>> = (-steps..=steps).map(|k| vec![k as f64 * h]).collect();
        pts.push(vec![radius]);
        pts.push(vec![-radius]);
        return pts;
    }
    let mut pts = vec![vec![0.0, 0.0]];
    let mut rings: Vec<f64> = (1..=steps).map(|k| k as f64 * h).collect();
    if radius > 0.0 {
        rings.push(radius);
    }
    for r in rings {
        let count = ((2.0 * std::f64::consts::PI * r / h).ceil() as usize).max(4);
        for i in 0..count {
            let th = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            pts.push(vec![r * th.cos(), r * th.sin()]);
        }
    }
    pts
}

/// Cartesian grid of `(2w+1)^n` points with spacing `h` centred on `c`.
fn local_grid(c: &[f64], w: i64, h: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![c.to_vec()];
    for axis in 0..c.len() {
        let mut next = Vec::with_capacity(pts.len() * (2 * w as usize + 1));
        for p in &pts {
            for k in -w..=w {
                let mut q = p.clone();
                q[axis] += k as f64 * h;
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Maximises `Σ⟨f_j, m_j⟩` with `f_j` drawn from `cands[j]` and adjacent
/// Lipschitz constraints, by dynamic programming along the chain.
fn chain_dp(chain: &Chain, s: Option<f64>, cands: &[Vec<Vec<f64>>]) -> (f64, Vec<Vec<f64>>) {
    let lip = s.map_or(1.0, |s| 1.0 - s);
    let k = chain.len();
    let mut score: Vec<f64> = cands[0].iter().map(|p| dot(p, chain.mass(0))).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(k);
    for j in 1..k {
        let bound = lip * chain.gap(j - 1) + 1e-12;
        let mut next = Vec::with_capacity(cands[j].len());
        let mut from = Vec::with_capacity(cands[j].len());
        for q in &cands[j] {
            let mut best = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            for (i, p) in cands[j - 1].iter().enumerate() {
                if score[i] > best && dist(p, q) <= bound {
                    best = score[i];
                    arg = i;
                }
            }
            next.push(best + dot(q, chain.mass(j)));
            from.push(arg);
        }
        score = next;
        back.push(from);
    }
    let mut arg = (0..score.len()).fold(0, |b, i| if score[i] > score[b] { i } else { b });
    let value = score[arg];
    let mut f = vec![Vec::new(); k];
    for j in (0..k).rev() {
        f[j] = cands[j][arg].clone();
        if j > 0 {
            arg = back[j - 1][arg];
        }
    }
    (value, f)
}

/// `Σ ‖μ(I_k)‖` over the dyadic partition of depth `depth`; intervals are
/// half-open except the last, which is closed.
pub fn variation_by_refinement(measure_fn: impl Fn(&BorelSet) -> Vec<f64>, depth: u32) -> f64 {
    let cells = 1u64 << depth;
    let w = 1.0 / cells as f64;
    (0..cells)
        .map(|k| {
            let lo = k as f64 * w;
            let iv = if k + 1 == cells {
                Interval::closed(lo, 1.0)
            } else {
                Interval::half_open(lo, (k + 1) as f64 * w)
            };
            norm(&measure_fn(&BorelSet::interval(iv)))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(n: usize, list: &[(f64, &[f64])]) -> VectorMeasure {
        list.iter().fold(VectorMeasure::zero(n), |acc, (t, v)| {
            acc.add(&VectorMeasure::dirac(*t, v.to_vec()).unwrap())
                .unwrap()
        })
    }

    #[test]
    fn dirac_difference() {
        let mu = atoms(1, &[(0.0, &[1.0]), (1.0, &[-1.0])]);
        let mk = mk_norm(&mu, 1e-6).unwrap();
        assert!(mk.converged);
        assert!(mk.upper >= 2.0 / 3.0 - 1e-12 && mk.upper - mk.value <= 1e-6);
        assert!((mk.value - 2.0 / 3.0).abs() < 1e-5, "{mk:?}");
        assert!((mk_star_norm(&mu).unwrap() - 1.0).abs() < 1e-15);
        let oracle = bl_oracle(&mu, Mode::Bl, 1.0 / 200.0).unwrap();
        assert!((oracle - 2.0 / 3.0).abs() < 1e-2, "{oracle}");
    }

    #[test]
    fn single_atom() {
        let mu = atoms(2, &[(0.3, &[3.0, -4.0])]);
        assert!((mk_norm(&mu, 1e-6).unwrap().value - 5.0).abs() < 1e-5);
        let oracle = bl_oracle(&mu, Mode::Bl, 0.01).unwrap();
        assert!((oracle - 5.0).abs() < 0.05, "{oracle}");
    }

    #[test]
    fn star_closed_forms() {
        let mu = atoms(2, &[(0.2, &[3.0, 4.0]), (0.7, &[-3.0, -4.0])]);
        assert!((mk_star_norm(&mu).unwrap() - 2.5).abs() < 1e-14);
        assert!((mk_star_upper(&mu) - 2.5).abs() < 1e-14);
        let oracle = bl_oracle(&mu, Mode::L, 0.005).unwrap();
        assert!((oracle - 2.5).abs() < 0.05, "{oracle}");
        assert!(matches!(
            mk_star_norm(&VectorMeasure::dirac(0.5, vec![1.0, 0.0]).unwrap()),
            Err(Error::NonzeroMass(_))
        ));
    }

    #[test]
    fn star_with_density() {
        // λ − δ_{1/2}: μ([0,t]) = t − [t ≥ 1/2], ∫|·| = 1/8 + 1/8 + ... = 1/4.
        let lam = VectorMeasure::uniform(&[1.0], 8).unwrap();
        let mu = lam
            .sub(&VectorMeasure::dirac(0.5, vec![1.0]).unwrap())
            .unwrap();
        assert!((mk_star_norm(&mu).unwrap() - 0.25).abs() < 1e-14);
        // λ − δ_{1/3}: crossing inside a cell.
        let mu = lam
            .sub(&VectorMeasure::dirac(1.0 / 3.0, vec![1.0]).unwrap())
            .unwrap();
        let exact = (1.0f64 / 3.0).powi(2) / 2.0 + (2.0f64 / 3.0).powi(2) / 2.0;
        assert!((mk_star_norm(&mu).unwrap() - exact).abs() < 1e-14);
        assert!(mk_star_upper(&mu) >= exact);
        // λ − 2λ|[0,½]: F(t) = −t on [0,½], t − 1 after.
        let half = VectorMeasure::from_parts(1, vec![], 2, vec![0.5, 0.0]).unwrap();
        let mu = VectorMeasure::uniform(&[1.0], 2)
            .unwrap()
            .sub(&half.scaled(2.0))
            .unwrap();
        assert!((mk_star_norm(&mu).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn segment_formula_matches_quadrature() {
        let cases: [(&[f64], &[f64], f64); 4] = [
            (&[1.0, -2.0], &[0.5, 3.0], 1.0),
            (&[-1.0], &[2.0], 1.0),
            (&[0.3, 0.4], &[-0.3, -0.4], 2.0),
            (&[1e-3, 2.0], &[1e-6, -1e-6], 0.01),
        ];
        let fine = Quadrature::gauss_legendre(60);
        for (a, b, h) in cases {
            // Split at the minimiser so the reference is smooth on each part.
            let bb = dot(b, b);
            let u0 = (-dot(a, b) / bb).clamp(0.0, h);
            let g = |u: f64| norm(&add(a, b, u));
            let reference = fine.integrate(0.0, u0, g) + fine.integrate(u0, h, g);
            assert!(
                (segment_exact(a, b, h) - reference).abs() < 1e-12,
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn refinement_of_lebesgue_and_atom() {
        let lam = VectorMeasure::uniform(&[1.0], 27).unwrap();
        let at = VectorMeasure::dirac(1.0, vec![3.0, 4.0]).unwrap();
        for depth in 0..8 {
            assert!((variation_by_refinement(|b| lam.eval(b), depth) - 1.0).abs() < 1e-12);
            assert_eq!(variation_by_refinement(|b| at.eval(b), depth), 5.0);
        }
    }

    #[test]
    fn zero_measure() {
        let z = VectorMeasure::zero(2);
        assert_eq!(mk_norm(&z, 1e-3).unwrap().value, 0.0);
        assert_eq!(mk_star_norm(&z).unwrap(), 0.0);
        assert_eq!(bl_oracle(&z, Mode::Bl, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_large() {
        let mu = atoms(
            1,
            &[
                (0.1, &[1.0]),
                (0.2, &[1.0]),
                (0.3, &[1.0]),
                (0.4, &[1.0]),
                (0.5, &[1.0]),
            ],
        );
        assert!(matches!(
            bl_oracle(&mu, Mode::Bl, 0.01),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            bl_oracle(&VectorMeasure::zero(3), Mode::Bl, 0.01),
            Err(Error::TooLarge(_))
        ));
    }
}

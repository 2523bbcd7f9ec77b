/// Gauss–Legendre rule on `[0,1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss_legendre(q: usize) -> Self {
        assert!(q >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        let qf = q as f64;
        for i in 0..q.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_q.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // x is descending in i; map [-1,1] to [0,1].
            nodes[i] = 0.5 * (1.0 - x);
            nodes[q - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[q - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b g` with the rule mapped to `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(a + h * x))
            .sum::<f64>()
            * h
    }
}

/// `(P_q(x), P_q'(x))`.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for q in [1, 2, 5, 16, 64] {
            let g = Quadrature::gauss_legendre(q);
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..(2 * q).min(40) {
                let got = g.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                assert!(
                    (got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13,
                    "q={q} deg={deg}"
                );
            }
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn odd_rule_has_midpoint() {
        let g = Quadrature::gauss_legendre(3);
        assert!((g.nodes[1] - 0.5).abs() < 1e-16);
        assert!((g.weights[1] - 4.0 / 9.0).abs() < 1e-15);
    }
}

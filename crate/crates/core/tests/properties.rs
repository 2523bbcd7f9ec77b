use fractal_measure::borel::{BorelSet, Interval};
use fractal_measure::linalg::{invert, LinearOperator};
use fractal_measure::measure::{Atom, LipMap, VectorMeasure};
use fractal_measure::mk::{mk_star_norm, mk_star_upper};
use proptest::prelude::*;

fn atoms(n: usize) -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec((0.0..=1.0f64, prop::collection::vec(-2.0..2.0f64, n)), 1..6).prop_map(
        |v| {
            v.into_iter()
                .map(|(at, value)| Atom { at, value })
                .collect()
        },
    )
}

fn measure(n: usize) -> impl Strategy<Value = VectorMeasure> {
    (atoms(n), prop::collection::vec(-1.0..1.0f64, 9 * n))
        .prop_map(move |(a, cells)| VectorMeasure::from_parts(n, a, 9, cells).unwrap())
}

fn map() -> impl Strategy<Value = LipMap> {
    (-1.0..1.0f64, 0.0..=1.0f64).prop_map(|(slope, u)| {
        let room = 1.0 - slope.abs();
        let lo = u * room;
        LipMap::new(slope, if slope >= 0.0 { lo } else { lo - slope }).unwrap()
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #[test]
    fn disjoint_sets_add(mu in measure(2), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let left = BorelSet::interval(Interval::half_open(0.0, lo));
        let mid = BorelSet::interval(Interval::half_open(lo, hi));
        let right = BorelSet::interval(Interval::closed(hi, 1.0));
        let sum: Vec<f64> = [left, mid, right]
            .iter()
            .map(|s| mu.eval(s))
            .fold(vec![0.0; 2], |acc, v| acc.iter().zip(&v).map(|(x, y)| x + y).collect());
        prop_assert!(close(&sum, &mu.total_mass(), 1e-12));
    }

    #[test]
    fn pushforward_keeps_mass_and_variation_bound(mu in measure(2), w in map()) {
        let image = mu.pushforward(&w);
        prop_assert!(close(&image.total_mass(), &mu.total_mass(), 1e-12));
        prop_assert!(image.total_variation() <= mu.total_variation() + 1e-12);
    }

    #[test]
    fn variation_is_subadditive(mu in measure(2), nu in measure(2)) {
        let s = mu.add(&nu).unwrap();
        prop_assert!(s.total_variation() <= mu.total_variation() + nu.total_variation() + 1e-12);
    }

    #[test]
    fn json_round_trip(mu in measure(3)) {
        let back = VectorMeasure::from_json(&mu.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, mu);
    }

    #[test]
    fn star_norm_below_trapezoid_bound(a in atoms(2)) {
        let mut list = a;
        let mut sum = [0.0; 2];
        for atom in &list {
            sum[0] += atom.value[0];
            sum[1] += atom.value[1];
        }
        list.push(Atom { at: 0.5, value: vec![-sum[0], -sum[1]] });
        let mu = VectorMeasure::from_parts(2, list, 1, vec![0.0; 2]).unwrap();
        let exact = mk_star_norm(&mu).unwrap();
        prop_assert!(exact <= mk_star_upper(&mu) + 1e-12);
        prop_assert!(exact <= mu.total_variation() + 1e-12);
    }

    #[test]
    fn inverse_is_two_sided(entries in prop::collection::vec(-0.3..0.3f64, 9)) {
        let a = LinearOperator::identity(3).add(&LinearOperator::from_fn(3, |i, j| entries[3 * i + j]));
        let inv = invert(&a).unwrap();
        let id = LinearOperator::identity(3);
        prop_assert!(a.matmul(&inv).max_abs_diff(&id) <= 1e-12);
        prop_assert!(inv.matmul(&a).max_abs_diff(&id) <= 1e-12);
    }

    #[test]
    fn set_display_round_trips(a in 0.0..1.0f64, b in 0.0..1.0f64, p in 0.0..=1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(!(lo < p && p < hi));
        let set = BorelSet::new(vec![Interval::open(lo, hi)], vec![p]).unwrap();
        let back: BorelSet = set.to_string().parse().unwrap();
        for t in [lo, hi, p, (lo + hi) / 2.0, 0.0, 1.0] {
            prop_assert_eq!(back.contains(t), set.contains(t));
        }
    }
}

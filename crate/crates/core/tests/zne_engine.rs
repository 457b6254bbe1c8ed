use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use zne_lab::zne::{coefficients_for, variance_of, wls_line};
use zne_lab::{extrapolate, Measurement};

/// Sorted, well-separated stretch factors starting at 1.
fn stretch_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..1.5, 0..4).prop_map(|gaps| {
        let mut f = vec![1.0];
        for g in gaps {
            let next = f.last().unwrap() + g;
            f.push(next);
        }
        f
    })
}

/// Generic linear solve of the moment system.
fn vandermonde_solve(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let a = DMatrix::from_fn(n, n, |k, i| c[i].powi(k as i32));
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

#[test]
fn quadratic_noise_is_annihilated_at_second_order() {
    let (e, a1, a2, lambda) = (0.37, -0.8, 0.45, 0.03);
    let ms: Vec<Measurement> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&c| Measurement::new(c, e + a1 * c * lambda + a2 * (c * lambda).powi(2), 0.0))
        .collect();
    let est = extrapolate(&ms).unwrap();
    assert!((est.value - e).abs() < 1e-10);
    assert_eq!(est.order, 2);
}

#[test]
fn single_point_is_unchanged() {
    let est = extrapolate(&[Measurement::new(1.0, 0.42, 0.01)]).unwrap();
    assert_eq!(est.value, 0.42);
    assert_eq!(est.variance, 0.01);
}

#[test]
fn first_order_example() {
    let est = extrapolate(&[Measurement::new(1.0, 0.9, 0.0), Measurement::new(1.5, 0.85, 0.0)]).unwrap();
    assert!((est.value - 1.0).abs() < 1e-12);
    assert_eq!(est.variance, 0.0);
}

#[test]
fn line_fit_recovers_exact_line() {
    let ms: Vec<Measurement> = [1.0, 1.1, 1.25, 1.5]
        .iter()
        .map(|&c| Measurement::new(c, 2.0 - 0.3 * c, 1e-4 * c))
        .collect();
    let fit = wls_line(&ms).unwrap();
    assert!((fit.intercept.value - 2.0).abs() < 1e-12);
    assert!((fit.slope + 0.3).abs() < 1e-12);
}

proptest! {
    #[test]
    fn product_formula_matches_linear_solve(c in stretch_strategy()) {
        let closed = coefficients_for(&c).unwrap().gammas;
        let solved = vandermonde_solve(&c);
        for (a, b) in closed.iter().zip(&solved) {
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{closed:?} vs {solved:?}");
        }
    }

    #[test]
    fn moment_constraints_hold(c in stretch_strategy()) {
        let g = coefficients_for(&c).unwrap().gammas;
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 1..c.len() {
            let r: f64 = g.iter().zip(&c).map(|(gi, ci)| gi * ci.powi(k as i32)).sum();
            prop_assert!(r.abs() < 1e-10, "k={k} residual {r}");
        }
    }

    #[test]
    fn extrapolation_is_affine(c in stretch_strategy(), seed in prop::collection::vec(-1.0f64..1.0, 4), s in -3.0f64..3.0, k in -3.0f64..3.0) {
        let base: Vec<Measurement> = c.iter().zip(&seed).map(|(&ci, &e)| Measurement::new(ci, e, 0.01)).collect();
        let v = extrapolate(&base).unwrap().value;
        let shifted: Vec<Measurement> = base.iter().map(|m| Measurement::new(m.c, m.estimate + s, m.variance)).collect();
        let scaled: Vec<Measurement> = base.iter().map(|m| Measurement::new(m.c, m.estimate * k, m.variance)).collect();
        let tol = 1e-9 * (1.0 + v.abs() + s.abs());
        prop_assert!((extrapolate(&shifted).unwrap().value - (v + s)).abs() < tol);
        prop_assert!((extrapolate(&scaled).unwrap().value - v * k).abs() < tol * (1.0 + k.abs()));
    }

    #[test]
    fn stored_value_and_variance_are_weighted_sums(c in stretch_strategy(), e in prop::collection::vec(-1.0f64..1.0, 4), v in prop::collection::vec(0.0f64..0.1, 4)) {
        let ms: Vec<Measurement> = c.iter().enumerate().map(|(i, &ci)| Measurement::new(ci, e[i], v[i])).collect();
        let est = extrapolate(&ms).unwrap();
        let value: f64 = est.coefficients.iter().zip(&est.inputs).map(|(g, m)| g * m.estimate).sum();
        prop_assert_eq!(est.value, value);
        let var = variance_of(&est.coefficients, &est.inputs.iter().map(|m| m.variance).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(est.variance, var);
    }
}

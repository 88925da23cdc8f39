use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cocolab::bundles::unstable_direction;
use cocolab::{
    compute_bundles, fit_power_law, growth_ratio, iterate_product, iterate_product_scaled, mobius_apply,
    schrodinger_cocycle, shear_exp, BundleOptions, Frequency, Mat2, ParameterFamily, Potential, Slope,
};

fn peaked(lambda: f64, e: f64) -> ParameterFamily {
    schrodinger_cocycle(Potential::peaked(lambda).unwrap(), 0.0, Frequency::golden_mean()).family(e)
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    let scale = 1.0f64.max(a.max_abs()).max(b.max_abs());
    [a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22]
        .iter()
        .all(|x| x.abs() <= tol * scale)
}

fn sl2() -> impl Strategy<Value = Mat2> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_filter_map("singular", |(a, b, c)| {
        if a.abs() < 0.1 {
            return None;
        }
        Some(Mat2::new(a, b, c, (1.0 + b * c) / a))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cocycle_products_compose(theta in 0.0..1.0f64, n in 0usize..40, m in 0usize..40, e in -4.0..-2.5f64) {
        let f = peaked(30.0, e);
        let w = f.frequency().clone();
        let whole = iterate_product(&f, theta, n + m);
        let split = iterate_product(&f, w.shift(theta, n as i64), m) * iterate_product(&f, theta, n);
        prop_assert!(close(&whole, &split, 1e-10));
        // det = 1 up to cancellation in a11·a22 − a12·a21.
        let s = iterate_product_scaled(&f, theta, n + m);
        let det = s.matrix.det() * (2.0 * s.log_scale).exp();
        prop_assert!((det - 1.0).abs() <= 1e-14 * (2.0 * s.log_norm()).exp().max(1.0));
    }

    #[test]
    fn mobius_action_composes(a in sl2(), b in sl2(), r in -5.0..5.0f64) {
        let lhs = mobius_apply(&(a * b), Slope::Finite(r));
        let rhs = mobius_apply(&a, mobius_apply(&b, Slope::Finite(r)));
        prop_assert!(lhs.distance(rhs) < 1e-9, "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn eigendirections_are_mobius_fixed_points(a in sl2()) {
        let tr = a.trace();
        prop_assume!(tr.abs() > 2.05 && a.a21.abs() > 1e-3);
        for s in [1.0, -1.0] {
            let lambda = 0.5 * (tr + s * (tr * tr - 4.0).sqrt());
            // (r, 1) is an eigenvector when a21·r + a22 = λ.
            let r = Slope::Finite((lambda - a.a22) / a.a21);
            prop_assert!(mobius_apply(&a, r).distance(r) < 1e-9);
        }
    }

    #[test]
    fn shear_acts_only_on_the_right(theta in 0.0..1.0f64, e in -4.0..0.0f64, s in -1.0..1.0f64) {
        let f = peaked(30.0, e);
        prop_assert!(close(&f.shifted(s).matrix(theta), &(f.matrix(theta) * shear_exp(s)), 1e-14));
        prop_assert!((f.matrix(theta).det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_norm_is_submultiplicative(theta in 0.0..1.0f64, n in 1usize..200, e in -4.0..-1.0f64) {
        let f = peaked(30.0, e);
        let w = f.frequency().clone();
        let bound: f64 = (0..n).map(|k| f.matrix(w.shift(theta, k as i64)).operator_norm().ln()).sum();
        prop_assert!(iterate_product_scaled(&f, theta, n).log_norm() <= bound + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unstable_slope_is_seed_independent(theta in 0.0..1.0f64, e in -3.5..-2.2f64) {
        let f = peaked(30.0, e);
        let opts = BundleOptions { tol: 1e-12, ..BundleOptions::default() };
        let slopes: Vec<Slope> = [Slope::Finite(0.0), Slope::Finite(1.0), Slope::Finite(-3.0), Slope::Infinity]
            .into_iter()
            .map(|seed| unstable_direction(&f, theta, 32, seed, &opts).unwrap().slope)
            .collect();
        for s in &slopes[1..] {
            prop_assert!(s.distance(slopes[0]) < 1e-10, "{s:?} vs {:?}", slopes[0]);
        }
    }

    #[test]
    fn bundles_are_invariant(e in -3.5..-2.1f64) {
        let b = compute_bundles(&peaked(30.0, e), 256, &BundleOptions::default()).unwrap();
        let (ru, rs) = b.invariance_residual().unwrap();
        prop_assert!(ru < 1e-8 && rs < 1e-8, "{ru} {rs}");
        prop_assert!(b.r_u().iter().zip(b.r_s()).all(|(u, s)| u > s));
    }

    #[test]
    fn growth_ratios_telescope(theta in 0.0..1.0f64, i in -20i64..0, j in 0i64..20, k in 20i64..40) {
        let b = compute_bundles(&peaked(30.0, -2.1), 256, &BundleOptions::default()).unwrap();
        let ev = b.evaluator();
        let whole = growth_ratio(&ev, theta, i, k).unwrap();
        let parts = growth_ratio(&ev, theta, i, j).unwrap() * growth_ratio(&ev, theta, j, k).unwrap();
        prop_assert!((whole / parts - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_power_laws_are_recovered(alpha in 0.2..2.0f64, c in 0.1..10.0f64) {
        let xs: Vec<f64> = (0..12).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(alpha)).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((fit.exponent - alpha).abs() < 1e-6);
        prop_assert!((fit.prefactor / c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noisy_power_laws_are_recovered(alpha in 0.2..2.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let xs: Vec<f64> = (0..20).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(alpha) * (1.0 + noise.sample(&mut rng))).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((fit.exponent - alpha).abs() < 1e-2, "{} vs {alpha}", fit.exponent);
    }
}

#[test]
fn distance_minimum_shrinks_toward_the_edge() {
    let opts = BundleOptions::default();
    for family in [
        |e: f64| schrodinger_cocycle(Potential::zero(), 0.0, Frequency::golden_mean()).family(e),
        |e: f64| peaked(30.0, e),
    ] {
        let mins: Vec<f64> = [-2.6, -2.3, -2.1, -2.02]
            .iter()
            .map(|&e| {
                let b = compute_bundles(&family(e), 512, &opts).unwrap();
                b.d().into_iter().fold(f64::INFINITY, f64::min)
            })
            .collect();
        assert!(mins.windows(2).all(|w| w[1] < w[0]), "{mins:?}");
    }
}

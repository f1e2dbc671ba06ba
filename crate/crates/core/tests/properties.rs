use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chgeo::algebra::{ad, ad_transpose, inertia_apply, inertia_invert, inner_product, metric_norm_sq};
use chgeo::diagnostics::apriori_check;
use chgeo::dynamics::{mean_momentum_scale, rhs_direct, rhs_geodesic};
use chgeo::random::{random_element, random_field, scale_of};
use chgeo::{AlgebraElement, MetricParams, ModelParams, MultiplierSymbol, PeriodicGrid, SpectralField};

fn grid(n_half: usize) -> Arc<PeriodicGrid> {
    PeriodicGrid::new(2 * n_half).unwrap()
}

fn element(g: &Arc<PeriodicGrid>, seed: u64) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_element(g, &mut rng, g.dealias_cutoff())
}

fn field(g: &Arc<PeriodicGrid>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(g, &mut rng, g.dealias_cutoff())
}

fn sup(x: &AlgebraElement) -> f64 {
    x.sup_samples()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_is_positive_even_and_monotone(s in 0.0f64..4.0, k in 0i64..500) {
        let a = MultiplierSymbol::new(s);
        prop_assert!(a.value(k) >= 1.0);
        prop_assert_eq!(a.value(k), a.value(-k));
        prop_assert!(a.value(k + 1) >= a.value(k));
    }

    #[test]
    fn symbol_powers_compose(s in -3.0f64..3.0, t in -3.0f64..3.0, k in -200i64..200) {
        let lhs = MultiplierSymbol::new(s).value(k) * MultiplierSymbol::new(t).value(k);
        let rhs = MultiplierSymbol::new(s + t).value(k);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(lhs));
    }

    #[test]
    fn transform_round_trip(n_half in 4usize..64, seed in any::<u64>()) {
        let g = grid(n_half);
        let f = field(&g, seed);
        let back = SpectralField::from_samples(&g, f.samples().to_vec()).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn coefficients_of_real_fields_are_hermitian(n_half in 4usize..64, seed in any::<u64>()) {
        let g = grid(n_half);
        let f = field(&g, seed);
        for k in 1..g.dealias_cutoff() {
            let d: Complex64 = f.coeff(k) - f.coeff(-k).conj();
            prop_assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn dealiased_product_is_commutative(n_half in 4usize..64, a in any::<u64>(), b in any::<u64>()) {
        let g = grid(n_half);
        let (f, h) = (field(&g, a), field(&g, b));
        let fh = f.dealiased_product(&h).unwrap();
        let hf = h.dealiased_product(&f).unwrap();
        prop_assert!(fh.sub(&hf).max_abs_sample() < 1e-13);
    }

    #[test]
    fn metric_is_symmetric_positive_and_bounded(seed in any::<u64>(), kappa in 0.1f64..5.0, s in 1.0f64..3.0) {
        let g = grid(32);
        let p = MetricParams::new(kappa, s).unwrap();
        let (x, y) = (element(&g, seed), element(&g, seed ^ 1));
        let xy = inner_product(&x, &y, &p);
        let yx = inner_product(&y, &x, &p);
        let (nx, ny) = (metric_norm_sq(&x, &p), metric_norm_sq(&y, &p));
        prop_assert!(nx > 0.0 && ny > 0.0);
        prop_assert!((xy - yx).abs() <= 1e-13 * (1.0 + (nx * ny).sqrt()));
        prop_assert!(xy.abs() <= (nx * ny).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn inertia_round_trip(seed in any::<u64>(), kappa in 0.1f64..5.0, s in 1.0f64..3.0) {
        let g = grid(32);
        let p = MetricParams::new(kappa, s).unwrap();
        let x = element(&g, seed);
        let back = inertia_invert(&inertia_apply(&x, &p), &p).unwrap();
        let err = back.u.sub(&x.u).max_abs_sample()
            .max(back.rho.sub(&x.rho).max_abs_sample())
            .max((back.alpha - x.alpha).abs());
        prop_assert!(err <= 1e-10 * scale_of(&[&x]));
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>()) {
        let g = grid(32);
        let (x, y) = (element(&g, seed), element(&g, seed ^ 2));
        let xy = ad(&x, &y).unwrap();
        let yx = ad(&y, &x).unwrap();
        prop_assert!(xy.lin_comb(1.0, &yx, 1.0).sup_samples() <= 1e-12 * (1.0 + sup(&xy)));
    }

    #[test]
    fn ad_transpose_is_the_metric_adjoint(seed in any::<u64>(), kappa in 0.1f64..5.0, s in 1.0f64..3.0) {
        let g = grid(32);
        let p = MetricParams::new(kappa, s).unwrap();
        let (x, y, z) = (element(&g, seed), element(&g, seed ^ 3), element(&g, seed ^ 4));
        let lhs = inner_product(&ad(&x, &y).unwrap(), &z, &p);
        let rhs = inner_product(&y, &ad_transpose(&x, &z, &p).unwrap(), &p);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn apriori_inequality_holds(seed in any::<u64>(), kappa in 0.1f64..5.0, s in 1.0f64..3.0) {
        let g = grid(32);
        let p = MetricParams::new(kappa, s).unwrap();
        let chk = apriori_check(&element(&g, seed), &p);
        prop_assert!(chk.holds, "{chk:?}");
    }

    #[test]
    fn right_hand_sides_agree(seed in any::<u64>(), kappa in 0.0f64..3.0, s in 1.0f64..3.0) {
        let g = grid(32);
        let x = element(&g, seed);
        let p = ModelParams::new(2.0, kappa, x.alpha, s).unwrap();
        let direct = rhs_direct(&x, &p).unwrap();
        let geodesic = rhs_geodesic(&x, &p).unwrap();
        // A^{-s} undoes momentum terms of size ~ |k|^{2s}; roundoff is relative to those
        let diff = direct.lin_comb(1.0, &geodesic, -1.0).sup_samples();
        prop_assert!(diff <= 1e-12 * mean_momentum_scale(&x, &p));
    }

    #[test]
    fn geodesic_form_rejects_other_a(seed in any::<u64>(), a in 0.5f64..1.9) {
        let g = grid(16);
        let x = element(&g, seed);
        let p = ModelParams::new(a, 1.0, x.alpha, 2.0).unwrap();
        prop_assert!(rhs_geodesic(&x, &p).is_err());
        prop_assert!(rhs_direct(&x, &p).is_ok());
    }
}

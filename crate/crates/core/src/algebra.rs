//! The Lie algebra of the semidirect product `Diff(S) (x) C^inf(S) x R`
//! equipped with the right-invariant inner product whose Euler-Arnold
//! equation is the `a = 2` member of the system.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{PeriodicGrid, SpectralField};

/// An algebra element `U = (u, rho, alpha)`.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub u: SpectralField,
    pub rho: SpectralField,
    pub alpha: f64,
}

/// A momentum-side triple `(f, g, h)`, the image of the inertia operator.
#[derive(Debug, Clone)]
pub struct DualElement {
    pub f: SpectralField,
    pub g: SpectralField,
    pub h: f64,
}

/// Parameters of the metric: coupling `kappa >= 0` and inertia order `s >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub kappa: f64,
    pub s: f64,
}

impl MetricParams {
    pub fn new(kappa: f64, s: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be >= 0 (got {kappa})")));
        }
        if !(s >= 1.0 && s.is_finite()) {
            return Err(Error::Config(format!("s must satisfy s >= 1 (got {s})")));
        }
        Ok(Self { kappa, s })
    }

    fn require_invertible(&self) -> Result<()> {
        if self.kappa > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateMetric)
        }
    }
}

impl AlgebraElement {
    pub fn new(u: SpectralField, rho: SpectralField, alpha: f64) -> Result<Self> {
        u.same_grid(&rho)?;
        let el = Self { u, rho, alpha };
        if !el.is_finite() {
            return Err(Error::NonFinite("algebra element"));
        }
        Ok(el)
    }

    pub fn zero(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            u: SpectralField::zeros(grid),
            rho: SpectralField::zeros(grid),
            alpha: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.u.is_finite() && self.rho.is_finite()
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &AlgebraElement, b: f64) -> AlgebraElement {
        AlgebraElement {
            u: self.u.lin_comb(a, &other.u, b),
            rho: self.rho.lin_comb(a, &other.rho, b),
            alpha: a * self.alpha + b * other.alpha,
        }
    }

    pub fn scale(&self, a: f64) -> AlgebraElement {
        AlgebraElement {
            u: self.u.scale(a),
            rho: self.rho.scale(a),
            alpha: a * self.alpha,
        }
    }

    /// Max-norm over all components, used for relative tolerances.
    pub fn sup_samples(&self) -> f64 {
        self.u
            .max_abs_sample()
            .max(self.rho.max_abs_sample())
            .max(self.alpha.abs())
    }
}

/// `<U1, U2> = int u1 A u2 + kappa int rho1 rho2 - 1/2 int (alpha2 u1 + alpha1 u2) + 1/2 alpha1 alpha2`.
pub fn inner_product(x: &AlgebraElement, y: &AlgebraElement, p: &MetricParams) -> f64 {
    let uau = x.u.apply_power(p.s).l2_inner(&y.u);
    let rr = x.rho.l2_inner(&y.rho);
    let mean_x = x.u.coeffs()[0].re;
    let mean_y = y.u.coeffs()[0].re;
    uau + p.kappa * rr - 0.5 * (y.alpha * mean_x + x.alpha * mean_y) + 0.5 * x.alpha * y.alpha
}

/// `||U||_A^2 = int u A u + kappa int rho^2 - alpha int u + alpha^2 / 2`.
pub fn metric_norm_sq(x: &AlgebraElement, p: &MetricParams) -> f64 {
    x.u.sobolev_norm_sq(p.s) + p.kappa * x.rho.sobolev_norm_sq(0.0) - x.alpha * x.u.coeffs()[0].re
        + 0.5 * x.alpha * x.alpha
}

/// The inertia operator `(Au - alpha/2, kappa rho, (alpha - int u)/2)`.
pub fn inertia_apply(x: &AlgebraElement, p: &MetricParams) -> DualElement {
    DualElement {
        f: x.u.apply_power(p.s).add_constant(-0.5 * x.alpha),
        g: x.rho.scale(p.kappa),
        h: 0.5 * (x.alpha - x.u.circle_integral()),
    }
}

/// Inverse of [`inertia_apply`]:
/// `u = A^{-1} f + (2h + int f)`, `rho = g / kappa`, `alpha = 4h + 2 int f`.
pub fn inertia_invert(d: &DualElement, p: &MetricParams) -> Result<AlgebraElement> {
    p.require_invertible()?;
    let mean_f = d.f.circle_integral();
    Ok(AlgebraElement {
        u: d.f.apply_power(-p.s).add_constant(2.0 * d.h + mean_f),
        rho: d.g.scale(1.0 / p.kappa),
        alpha: 4.0 * d.h + 2.0 * mean_f,
    })
}

/// Pairs an algebra element with a dual element: `int u f + int rho g + alpha h`.
pub fn pairing(x: &AlgebraElement, d: &DualElement) -> f64 {
    x.u.l2_inner(&d.f) + x.rho.l2_inner(&d.g) + x.alpha * d.h
}

/// `ad_{U1} U2 = (u1_x u2 - u1 u2_x, rho1_x u2 - rho2_x u1, 0)`.
pub fn ad(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    x.u.same_grid(&y.u)?;
    let u1x = x.u.derivative();
    let u2x = y.u.derivative();
    let r1x = x.rho.derivative();
    let r2x = y.rho.derivative();
    let u = u1x
        .dealiased_product_unchecked(&y.u)
        .sub(&x.u.dealiased_product_unchecked(&u2x));
    let rho = r1x
        .dealiased_product_unchecked(&y.u)
        .sub(&r2x.dealiased_product_unchecked(&x.u));
    Ok(AlgebraElement { u, rho, alpha: 0.0 })
}

/// The momentum `(f, g, 0)` representing `U2 -> <ad_{U1} U2, U3>`:
/// `f = u1_x A u3 + (u1 A u3)_x + kappa rho1_x rho3 - alpha3 u1_x`,
/// `g = kappa (u1 rho3)_x`.
pub fn ad_dual(x: &AlgebraElement, z: &AlgebraElement, p: &MetricParams) -> Result<DualElement> {
    x.u.same_grid(&z.u)?;
    let u1x = x.u.derivative();
    let au3 = z.u.apply_power(p.s);
    let f = u1x
        .dealiased_product_unchecked(&au3)
        .add(&x.u.dealiased_product_unchecked(&au3).derivative())
        .add(&x.rho.derivative().dealiased_product_unchecked(&z.rho).scale(p.kappa))
        .add(&u1x.scale(-z.alpha));
    let g = x.u.dealiased_product_unchecked(&z.rho).derivative().scale(p.kappa);
    Ok(DualElement { f, g, h: 0.0 })
}

/// Metric adjoint of `ad_{U1}` applied to `U3`, obtained by inverting the
/// inertia operator on [`ad_dual`].
pub fn ad_transpose(x: &AlgebraElement, z: &AlgebraElement, p: &MetricParams) -> Result<AlgebraElement> {
    p.require_invertible()?;
    inertia_invert(&ad_dual(x, z, p)?, p)
}

/// `B(U1, U2) = (ad^T_{U1} U2 + ad^T_{U2} U1) / 2`.
pub fn bilinear_b(x: &AlgebraElement, y: &AlgebraElement, p: &MetricParams) -> Result<AlgebraElement> {
    let a = ad_transpose(x, y, p)?;
    let b = ad_transpose(y, x, p)?;
    Ok(a.lin_comb(0.5, &b, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_element, scale_of};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Arc<PeriodicGrid> {
        PeriodicGrid::new(64).unwrap()
    }

    fn params(kappa: f64, s: f64) -> MetricParams {
        MetricParams::new(kappa, s).unwrap()
    }

    fn sup_diff(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
        a.lin_comb(1.0, b, -1.0).sup_samples()
    }

    fn konst(g: &Arc<PeriodicGrid>, u: f64, rho: f64, alpha: f64) -> AlgebraElement {
        AlgebraElement::new(SpectralField::constant(g, u), SpectralField::constant(g, rho), alpha)
            .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(MetricParams::new(-1.0, 2.0).is_err());
        assert!(MetricParams::new(1.0, 0.5).is_err());
        assert!(MetricParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn inner_product_special_values() {
        let g = grid();
        let p = params(1.0, 1.5);
        for alpha in [-3.0, 0.5, 2.0] {
            let x = konst(&g, 0.0, 0.0, alpha);
            assert!((inner_product(&x, &x, &p) - alpha * alpha / 2.0).abs() < 1e-14);
            let y = konst(&g, alpha / 2.0, 0.0, alpha);
            assert!((metric_norm_sq(&y, &p) - alpha * alpha / 4.0).abs() < 1e-13);
            assert!((inner_product(&y, &y, &p) - alpha * alpha / 4.0).abs() < 1e-13);
        }
        assert_eq!(metric_norm_sq(&AlgebraElement::zero(&g), &p), 0.0);
    }

    #[test]
    fn inner_product_symmetry_and_pairing() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for &(kappa, s) in &[(0.0, 1.0), (1.0, 1.5), (4.0, 2.0)] {
            let p = params(kappa, s);
            for _ in 0..20 {
                let x = random_element(&g, &mut rng, 10);
                let y = random_element(&g, &mut rng, 10);
                let xy = inner_product(&x, &y, &p);
                let yx = inner_product(&y, &x, &p);
                let scale = 1.0 + xy.abs();
                assert!((xy - yx).abs() <= 1e-13 * scale);
                let via_dual = pairing(&x, &inertia_apply(&y, &p));
                assert!((xy - via_dual).abs() <= 1e-11 * scale);
            }
        }
    }

    #[test]
    fn inertia_apply_values() {
        let g = grid();
        let p = params(2.0, 1.7);
        let z = inertia_apply(&AlgebraElement::zero(&g), &p);
        assert_eq!(z.f.max_abs_sample(), 0.0);
        assert_eq!(z.g.max_abs_sample(), 0.0);
        assert_eq!(z.h, 0.0);

        let d = inertia_apply(&konst(&g, 1.0, 0.0, 2.0), &p);
        assert!(d.f.max_abs_sample() < 1e-14);
        assert!(d.g.max_abs_sample() < 1e-14);
        assert!((d.h - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inertia_invert_round_trips() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(0.7, 2.0);
        let z = inertia_invert(
            &DualElement {
                f: SpectralField::zeros(&g),
                g: SpectralField::zeros(&g),
                h: 0.0,
            },
            &p,
        )
        .unwrap();
        assert_eq!(z.sup_samples(), 0.0);
        for _ in 0..20 {
            let x = random_element(&g, &mut rng, 12);
            let back = inertia_invert(&inertia_apply(&x, &p), &p).unwrap();
            assert!(sup_diff(&back, &x) <= 1e-10 * scale_of(&[&x]));

            let d = DualElement {
                f: x.u.clone(),
                g: x.rho.clone(),
                h: x.alpha,
            };
            let fwd = inertia_apply(&inertia_invert(&d, &p).unwrap(), &p);
            assert!(fwd.f.sub(&d.f).max_abs_sample() <= 1e-10 * scale_of(&[&x]));
            assert!(fwd.g.sub(&d.g).max_abs_sample() <= 1e-10 * scale_of(&[&x]));
            assert!((fwd.h - d.h).abs() <= 1e-10 * scale_of(&[&x]));
        }
    }

    #[test]
    fn inertia_invert_zero_mean_closed_form() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = params(3.0, 1.5);
        let x = random_element(&g, &mut rng, 8);
        let d = DualElement {
            f: x.u.clone(),
            g: x.rho.clone(),
            h: 0.0,
        };
        let r = inertia_invert(&d, &p).unwrap();
        let mean = x.u.circle_integral();
        assert!((r.alpha - 2.0 * mean).abs() < 1e-14);
        let want_u = x.u.apply_power(-1.5).add_constant(mean);
        assert!(r.u.sub(&want_u).max_abs_sample() < 1e-14);
        assert!(r.rho.sub(&x.rho.scale(1.0 / 3.0)).max_abs_sample() < 1e-14);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let g = grid();
        let p = params(0.0, 1.0);
        let x = konst(&g, 1.0, 1.0, 1.0);
        assert!(matches!(
            inertia_invert(&inertia_apply(&x, &p), &p),
            Err(Error::DegenerateMetric)
        ));
        assert!(matches!(ad_transpose(&x, &x, &p), Err(Error::DegenerateMetric)));
        assert!(matches!(bilinear_b(&x, &x, &p), Err(Error::DegenerateMetric)));
    }

    #[test]
    fn ad_special_values() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_element(&g, &mut rng, 10);
        let d = ad(&x, &x).unwrap();
        assert!(d.sup_samples() < 1e-12 * scale_of(&[&x]));

        let c1 = konst(&g, 1.5, 0.0, 0.0);
        let c2 = konst(&g, -0.7, 0.0, 0.0);
        assert!(ad(&c1, &c2).unwrap().sup_samples() < 1e-15);

        let cu = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| (2.0 * PI * x).cos()),
            SpectralField::zeros(&g),
            0.0,
        )
        .unwrap();
        let su = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| (2.0 * PI * x).sin()),
            SpectralField::zeros(&g),
            0.0,
        )
        .unwrap();
        let r = ad(&cu, &su).unwrap();
        for v in r.u.samples() {
            assert!((v + 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity_on_random_triples() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for &kappa in &[0.5, 1.0, 4.0] {
            for &s in &[1.0, 1.5, 2.0] {
                let p = params(kappa, s);
                for _ in 0..5 {
                    let x = random_element(&g, &mut rng, 10);
                    let y = random_element(&g, &mut rng, 10);
                    let z = random_element(&g, &mut rng, 10);
                    let lhs = inner_product(&ad(&x, &y).unwrap(), &z, &p);
                    let rhs = inner_product(&y, &ad_transpose(&x, &z, &p).unwrap(), &p);
                    let scale = 1.0 + lhs.abs().max(rhs.abs());
                    assert!((lhs - rhs).abs() <= 1e-9 * scale, "{lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn ad_transpose_diagonal_matches_closed_form() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = params(1.3, 1.5);
        let x = random_element(&g, &mut rng, 10);
        let got = ad_transpose(&x, &x, &p).unwrap();
        let ux = x.u.derivative();
        let au = x.u.apply_power(p.s);
        let inner = ux
            .dealiased_product(&au)
            .unwrap()
            .add(&x.u.dealiased_product(&au).unwrap().derivative())
            .sub(&ux.scale(x.alpha))
            .add(&x.rho.dealiased_product(&x.rho.derivative()).unwrap().scale(p.kappa));
        let want = AlgebraElement {
            u: inner.apply_power(-p.s),
            rho: x.u.dealiased_product(&x.rho).unwrap().derivative(),
            alpha: 0.0,
        };
        assert!(sup_diff(&got, &want) <= 1e-10 * scale_of(&[&x, &want]));
    }

    #[test]
    fn ad_transpose_vanishes_on_zero_arguments() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let p = params(1.0, 2.0);
        let x = random_element(&g, &mut rng, 10);
        let zero = AlgebraElement::zero(&g);
        assert!(ad_transpose(&zero, &x, &p).unwrap().sup_samples() < 1e-14);
        assert!(ad_transpose(&x, &zero, &p).unwrap().sup_samples() < 1e-14);
    }

    #[test]
    fn bilinear_b_properties() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = params(2.0, 1.5);
        let x = random_element(&g, &mut rng, 10);
        let y = random_element(&g, &mut rng, 10);
        let bxx = bilinear_b(&x, &x, &p).unwrap();
        let tx = ad_transpose(&x, &x, &p).unwrap();
        let sc = scale_of(&[&bxx]);
        assert!(sup_diff(&bxx, &tx) <= 1e-12 * sc);
        let lam = -2.5;
        let blam = bilinear_b(&x.scale(lam), &x.scale(lam), &p).unwrap();
        assert!(sup_diff(&blam, &bxx.scale(lam * lam)) <= 1e-10 * scale_of(&[&blam]));
        let bxy = bilinear_b(&x, &y, &p).unwrap();
        let byx = bilinear_b(&y, &x, &p).unwrap();
        assert!(sup_diff(&bxy, &byx) <= 1e-12 * scale_of(&[&bxy]));
    }

    #[test]
    fn antisymmetry_of_the_derivative_pairing() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for &s in &[1.0, 1.5, 2.0] {
            let x = random_element(&g, &mut rng, 10);
            let z = random_element(&g, &mut rng, 10);
            let lhs = x.u.derivative().l2_inner(&z.u.apply_power(s));
            let rhs = -x.u.apply_power(s).l2_inner(&z.u.derivative());
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}

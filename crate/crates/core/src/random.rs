//! Seeded generators of smooth band-limited fields and algebra elements.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::spectral::{PeriodicGrid, SpectralField};

/// Random real field with modes `|k| <= kmax` and amplitudes decaying like `e^{-0.3|k|}`.
pub fn random_field<R: Rng>(grid: &Arc<PeriodicGrid>, rng: &mut R, kmax: i64) -> SpectralField {
    let n = grid.n();
    let kmax = kmax.min(grid.dealias_cutoff());
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    coeffs[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
    for k in 1..=kmax {
        let amp = (-0.3 * k as f64).exp();
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        coeffs[grid.index_of(k).unwrap()] = c;
        coeffs[grid.index_of(-k).unwrap()] = c.conj();
    }
    SpectralField::from_coeffs(grid, coeffs).expect("symmetric coefficients")
}

pub fn random_element<R: Rng>(grid: &Arc<PeriodicGrid>, rng: &mut R, kmax: i64) -> AlgebraElement {
    let u = random_field(grid, rng, kmax);
    let rho = random_field(grid, rng, kmax);
    let alpha = rng.gen_range(-5.0..5.0);
    AlgebraElement { u, rho, alpha }
}

/// `1 + max` of the sample sup-norms of the given elements.
pub fn scale_of(elements: &[&AlgebraElement]) -> f64 {
    1.0 + elements.iter().map(|e| e.sup_samples()).fold(0.0, f64::max)
}

//! Fourier machinery on the unit-length circle `R/Z`.
//!
//! Fields are trigonometric polynomials in the basis `e^{2 pi i k x}`. A
//! [`SpectralField`] carries both its physical samples on the uniform grid
//! `x_j = j/n` and its normalised coefficients
//! `c_k = (1/n) sum_j f_j e^{-2 pi i k j / n}` for `k = -n/2 .. n/2-1`, so the
//! derivative symbol is `2 pi i k` and the inertia symbol `(1 + 4 pi^2 k^2)^s`
//! makes `A = (1 - D^2)^s` hold exactly.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default number of grid points.
pub const DEFAULT_N: usize = 256;

/// Oversampling factor used for sup-norm and minimum estimates.
pub const OVERSAMPLE: usize = 4;

/// Relative bound on the imaginary part tolerated when returning to physical space.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Uniform grid on the unit circle together with its transform plans.
pub struct PeriodicGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    inverse_fine: Arc<dyn Fft<f64>>,
    log_base: Vec<f64>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

impl PeriodicGrid {
    /// Builds a grid with `n` points. `n` must be even and at least 8.
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size n must be even and >= 8 (got {n})"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let inverse_fine = planner.plan_fft_inverse(OVERSAMPLE * n);
        let log_base = (0..n)
            .map(|i| {
                let k = wavenumber(i, n) as f64;
                (4.0 * PI * PI * k * k).ln_1p()
            })
            .collect();
        Ok(Arc::new(Self {
            n,
            forward,
            inverse,
            inverse_fine,
            log_base,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 / self.n as f64).collect()
    }

    /// Signed wavenumber stored at array index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.n)
    }

    /// Array index of wavenumber `k`, if it is representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    /// Largest wavenumber retained by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Forward transform: samples to normalised coefficients.
    pub fn to_spectral(&self, samples: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(samples.len())?;
        Ok(self.forward_unchecked(samples))
    }

    /// Inverse transform. Fails if the coefficients are not conjugate symmetric
    /// to within a relative imaginary residue of `1e-10`.
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        let scale: f64 = coeffs.iter().map(|c| c.norm()).sum();
        let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if residue > IMAG_RESIDUE_TOL * scale {
            return Err(Error::ImaginaryResidue {
                residue: residue / scale.max(f64::MIN_POSITIVE),
            });
        }
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    fn forward_unchecked(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= inv_n);
        buf
    }

    fn inverse_unchecked(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }
}

fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// A Fourier multiplier given by its symbol on each wavenumber.
pub trait FourierMultiplier {
    fn symbol(&self, k: i64) -> Complex64;
}

/// The Bessel-potential symbol `(1 + 4 pi^2 k^2)^s`.
///
/// `s` is the power of `A = (1 - D^2)`; `s = -t` gives `A^{-t}` and `s/2`
/// gives `Lambda^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSymbol {
    pub s: f64,
}

impl MultiplierSymbol {
    pub fn new(s: f64) -> Self {
        Self { s }
    }

    pub fn value(&self, k: i64) -> f64 {
        let kk = k as f64;
        (self.s * (4.0 * PI * PI * kk * kk).ln_1p()).exp()
    }
}

impl FourierMultiplier for MultiplierSymbol {
    fn symbol(&self, k: i64) -> Complex64 {
        Complex64::new(self.value(k), 0.0)
    }
}

/// A real periodic function held as samples and Fourier coefficients.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<PeriodicGrid>,
    samples: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("n", &self.grid.n)
            .field("samples", &self.samples)
            .finish()
    }
}

impl SpectralField {
    pub fn from_samples(grid: &Arc<PeriodicGrid>, samples: Vec<f64>) -> Result<Self> {
        let coeffs = grid.to_spectral(&samples)?;
        Ok(Self {
            grid: Arc::clone(grid),
            samples,
            coeffs,
        })
    }

    /// Builds a field from coefficients in transform order (index `i` holds
    /// wavenumber [`PeriodicGrid::wavenumber`]`(i)`).
    pub fn from_coeffs(grid: &Arc<PeriodicGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        let samples = grid.to_physical(&coeffs)?;
        Ok(Self {
            grid: Arc::clone(grid),
            samples,
            coeffs,
        })
    }

    /// Coefficients produced by a real multiplier or truncation are symmetric
    /// by construction; skip the residue check.
    fn from_coeffs_trusted(grid: &Arc<PeriodicGrid>, coeffs: Vec<Complex64>) -> Self {
        let samples = grid.inverse_unchecked(&coeffs);
        Self {
            grid: Arc::clone(grid),
            samples,
            coeffs,
        }
    }

    pub fn from_fn(grid: &Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.points().into_iter().map(f).collect();
        let coeffs = grid.forward_unchecked(&samples);
        Self {
            grid: Arc::clone(grid),
            samples,
            coeffs,
        }
    }

    pub fn constant(grid: &Arc<PeriodicGrid>, value: f64) -> Self {
        let n = grid.n;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[0] = Complex64::new(value, 0.0);
        Self {
            grid: Arc::clone(grid),
            samples: vec![value; n],
            coeffs,
        }
    }

    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavenumber `k`, zero when `k` is not representable.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
            && self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn same_grid(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.n == other.grid.n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.n,
                right: other.grid.n,
            })
        }
    }

    /// Applies an arbitrary multiplier. The result is checked for a real inverse.
    pub fn apply_multiplier(&self, m: &dyn FourierMultiplier) -> Result<SpectralField> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * m.symbol(self.grid.wavenumber(i)))
            .collect();
        SpectralField::from_coeffs(&self.grid, coeffs)
    }

    /// Spectral derivative `d/dx`. The Nyquist mode is dropped.
    pub fn derivative(&self) -> SpectralField {
        let n = self.grid.n;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let k = self.grid.wavenumber(i) as f64;
                    c * Complex64::new(0.0, 2.0 * PI * k)
                }
            })
            .collect();
        SpectralField::from_coeffs_trusted(&self.grid, coeffs)
    }

    /// `(1 - D^2)^s` applied spectrally; negative `s` inverts.
    pub fn apply_power(&self, s: f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.grid.log_base)
            .map(|(c, lb)| c * (s * lb).exp())
            .collect();
        SpectralField::from_coeffs_trusted(&self.grid, coeffs)
    }

    /// `sum_k (1 + 4 pi^2 k^2)^s |c_k|^2`, i.e. `int f A^s f dx`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.grid.log_base)
            .map(|(c, lb)| (s * lb).exp() * c.norm_sqr())
            .sum()
    }

    /// Integral over the unit circle: the mean mode, equal to the sample mean.
    pub fn circle_integral(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `int f g dx` by Parseval.
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Pointwise product followed by two-thirds truncation.
    pub fn dealiased_product(&self, other: &SpectralField) -> Result<SpectralField> {
        self.same_grid(other)?;
        Ok(self.dealiased_product_unchecked(other))
    }

    pub(crate) fn dealiased_product_unchecked(&self, other: &SpectralField) -> SpectralField {
        let prod: Vec<f64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .collect();
        let coeffs = self.grid.forward_unchecked(&prod);
        SpectralField::from_coeffs_trusted(&self.grid, coeffs).truncated(self.grid.dealias_cutoff())
    }

    /// Zeroes every mode with `|k| > kmax`.
    pub fn truncated(&self, kmax: i64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if self.grid.wavenumber(i).abs() > kmax {
                    Complex64::new(0.0, 0.0)
                } else {
                    c
                }
            })
            .collect();
        SpectralField::from_coeffs_trusted(&self.grid, coeffs)
    }

    /// Evaluates the trigonometric interpolant at arbitrary points (wrapped mod 1).
    pub fn interpolate(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&x| self.evaluate(x)).collect()
    }

    /// Direct summation of the real Fourier series at one point.
    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.grid.n;
        let half = n / 2;
        let x = x.rem_euclid(1.0);
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0].re;
        for k in 1..half {
            phase *= step;
            // re-anchor the recurrence to keep the phase on the unit circle
            if k % 32 == 0 {
                phase = Complex64::from_polar(1.0, 2.0 * PI * x * k as f64);
            }
            let c = self.coeffs[k];
            acc += 2.0 * (c.re * phase.re - c.im * phase.im);
        }
        let nyq = self.coeffs[half];
        acc + nyq.re * (PI * n as f64 * x).cos()
    }

    /// Values on the `OVERSAMPLE * n` zero-padded grid.
    pub fn oversampled(&self) -> Vec<f64> {
        let n = self.grid.n;
        let fine = OVERSAMPLE * n;
        let half = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); fine];
        buf[..half].copy_from_slice(&self.coeffs[..half]);
        for i in half + 1..n {
            buf[fine - n + i] = self.coeffs[i];
        }
        let nyq = self.coeffs[half] * 0.5;
        buf[half] = nyq;
        buf[fine - half] = nyq;
        self.grid.inverse_fine.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Approximate sup norm: max absolute value on the oversampled grid.
    pub fn sup_norm(&self) -> f64 {
        self.oversampled().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum over the oversampled grid.
    pub fn oversampled_min(&self) -> f64 {
        self.oversampled().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_sample(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fraction of `sum |c_k|^2` carried by modes with `|k| > kmin`.
    pub fn band_energy_fraction(&self, kmin: i64) -> f64 {
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.wavenumber(i).abs() > kmin {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    /// `a * self + b * other`, computed on samples and coefficients alike.
    pub fn lin_comb(&self, a: f64, other: &SpectralField, b: f64) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            samples: self.samples.iter().map(|x| a * x).collect(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Adds a constant, touching only the mean mode.
    pub fn add_constant(&self, c: f64) -> SpectralField {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|x| *x += c);
        out.coeffs[0] += c;
        out
    }
}

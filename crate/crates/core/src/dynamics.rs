//! Right-hand sides of the evolution.
//!
//! The momentum form evolves `m = A u` through
//! `m_t = alpha u_x - a u_x m - u m_x - kappa rho rho_x`,
//! `rho_t = -u rho_x - (a - 1) u_x rho`, with `alpha` constant. For `a = 2` the
//! same vector field is `-B(U, U)` on the Lie algebra. Lagrangian markers follow
//! `phi_t = u o phi`.

use std::sync::Arc;

use log::warn;

use crate::algebra::{ad_transpose, AlgebraElement, MetricParams};
use crate::error::{Error, Result};
use crate::spectral::{PeriodicGrid, SpectralField};

/// Parameters of the model family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
}

impl ModelParams {
    pub fn new(a: f64, kappa: f64, alpha: f64, s: f64) -> Result<Self> {
        if !a.is_finite() || !alpha.is_finite() {
            return Err(Error::Config("a and alpha must be finite".into()));
        }
        MetricParams::new(kappa, s)?;
        if a == 1.0 {
            warn!("a = 1 lies outside the model family; rho reduces to pure transport");
        }
        Ok(Self { a, kappa, alpha, s })
    }

    pub fn metric(&self) -> MetricParams {
        MetricParams {
            kappa: self.kappa,
            s: self.s,
        }
    }
}

/// Lagrangian markers `phi(xi) = xi + d(xi)` seeded on the grid points.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub labels: Vec<f64>,
    pub displacement: SpectralField,
}

impl FlowMap {
    pub fn identity(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            labels: grid.points(),
            displacement: SpectralField::zeros(grid),
        }
    }

    /// Current marker positions `xi_j + d(xi_j)` (not wrapped).
    pub fn positions(&self) -> Vec<f64> {
        self.labels
            .iter()
            .zip(self.displacement.samples())
            .map(|(xi, d)| xi + d)
            .collect()
    }

    /// `phi_x = 1 + d_xi`, computed spectrally.
    pub fn jacobian(&self) -> SpectralField {
        self.displacement.derivative().add_constant(1.0)
    }

    /// Minimum of `phi_x` on the oversampled grid.
    pub fn min_jacobian(&self) -> f64 {
        self.jacobian().oversampled_min()
    }

    pub fn is_diffeomorphism(&self) -> bool {
        self.min_jacobian() > 0.0
    }
}

/// Fields, time and optional flow map.
#[derive(Debug, Clone)]
pub struct State {
    pub fields: AlgebraElement,
    pub t: f64,
    pub flow: Option<FlowMap>,
}

impl State {
    pub fn new(fields: AlgebraElement, with_flow: bool) -> Self {
        let flow = with_flow.then(|| FlowMap::identity(fields.grid()));
        Self {
            fields,
            t: 0.0,
            flow,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.fields.is_finite()
            && self.flow.as_ref().map_or(true, |f| f.displacement.is_finite())
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone)]
pub struct StateDerivative {
    pub fields: AlgebraElement,
    pub flow: Option<SpectralField>,
}

fn require_finite(x: &AlgebraElement) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("right-hand side input"))
    }
}

/// Size of the terms whose cancellation makes `int u_t = 0` when `a = 2`;
/// roundoff in the mean of the velocity derivative is relative to this.
pub fn mean_momentum_scale(x: &AlgebraElement, p: &ModelParams) -> f64 {
    let ux = x.u.derivative().max_abs_sample();
    let m = x.u.apply_power(p.s).max_abs_sample();
    let rho = x.rho.max_abs_sample() * x.rho.derivative().max_abs_sample();
    1.0 + ux * (m + x.alpha.abs()) + p.kappa * rho
}

/// Momentum-form right-hand side for any `a`.
pub fn rhs_direct(x: &AlgebraElement, p: &ModelParams) -> Result<AlgebraElement> {
    require_finite(x)?;
    let u = &x.u;
    let rho = &x.rho;
    let m = u.apply_power(p.s);
    let ux = u.derivative();
    let mx = m.derivative();
    let rhox = rho.derivative();

    let m_dot = ux
        .scale(x.alpha)
        .sub(&ux.dealiased_product_unchecked(&m).scale(p.a))
        .sub(&u.dealiased_product_unchecked(&mx))
        .sub(&rho.dealiased_product_unchecked(&rhox).scale(p.kappa));
    let rho_dot = u
        .dealiased_product_unchecked(&rhox)
        .scale(-1.0)
        .sub(&ux.dealiased_product_unchecked(rho).scale(p.a - 1.0));
    Ok(AlgebraElement {
        u: m_dot.apply_power(-p.s),
        rho: rho_dot,
        alpha: 0.0,
    })
}

/// Geodesic-form right-hand side `-B(U, U)`, valid for `a = 2`.
///
/// With `kappa > 0` the metric adjoint is inverted through the inertia
/// operator; with `kappa = 0` the closed form
/// `-(A^{-1}[u_x A u + (u A u)_x - alpha u_x], (u rho)_x, 0)` is used.
pub fn rhs_geodesic(x: &AlgebraElement, p: &ModelParams) -> Result<AlgebraElement> {
    if p.a != 2.0 {
        return Err(Error::Precondition(format!(
            "the geodesic form requires a = 2 (got {})",
            p.a
        )));
    }
    require_finite(x)?;
    let metric = p.metric();
    if metric.kappa > 0.0 {
        return Ok(ad_transpose(x, x, &metric)?.scale(-1.0));
    }
    let ux = x.u.derivative();
    let au = x.u.apply_power(p.s);
    let inner = ux
        .dealiased_product_unchecked(&au)
        .add(&x.u.dealiased_product_unchecked(&au).derivative())
        .sub(&ux.scale(x.alpha));
    Ok(AlgebraElement {
        u: inner.apply_power(-p.s).scale(-1.0),
        rho: x.u.dealiased_product_unchecked(&x.rho).derivative().scale(-1.0),
        alpha: 0.0,
    })
}

/// `d_t d(xi_j) = u(xi_j + d(xi_j))`.
pub fn rhs_flowmap(flow: &FlowMap, u: &SpectralField) -> Result<SpectralField> {
    let vals = u.interpolate(&flow.positions());
    SpectralField::from_samples(flow.displacement.grid(), vals)
}

/// Stacks the field and flow-map right-hand sides.
pub fn coupled_rhs(st: &State, p: &ModelParams) -> Result<StateDerivative> {
    let fields = rhs_direct(&st.fields, p)?;
    let flow = match &st.flow {
        Some(f) => Some(rhs_flowmap(f, &st.fields.u)?),
        None => None,
    };
    Ok(StateDerivative { fields, flow })
}

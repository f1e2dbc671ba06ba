//! Fixed-step classical Runge-Kutta advancement with blow-up detection.

use serde::{Deserialize, Serialize};

use crate::dynamics::{coupled_rhs, ModelParams, State, StateDerivative};
use crate::error::{Error, Result};

/// Quantities that can be advanced by an explicit Runge-Kutta scheme.
pub trait Evolve: Sized {
    type Tangent;

    /// `self + h * d`.
    fn displaced(&self, h: f64, d: &Self::Tangent) -> Self;

    /// `k1 + 2 k2 + 2 k3 + k4`.
    fn rk4_increment(k: [&Self::Tangent; 4]) -> Self::Tangent;

    /// Fix-up applied to the result of a full step of size `dt` from `start`.
    fn finish_step(self, _start: &Self, _dt: f64) -> Self {
        self
    }
}

impl Evolve for f64 {
    type Tangent = f64;

    fn displaced(&self, h: f64, d: &f64) -> f64 {
        self + h * d
    }

    fn rk4_increment(k: [&f64; 4]) -> f64 {
        k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]
    }
}

impl Evolve for Vec<f64> {
    type Tangent = Vec<f64>;

    fn displaced(&self, h: f64, d: &Vec<f64>) -> Vec<f64> {
        self.iter().zip(d).map(|(y, v)| y + h * v).collect()
    }

    fn rk4_increment(k: [&Vec<f64>; 4]) -> Vec<f64> {
        (0..k[0].len())
            .map(|i| k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])
            .collect()
    }
}

impl Evolve for State {
    type Tangent = StateDerivative;

    fn displaced(&self, h: f64, d: &StateDerivative) -> State {
        let flow = match (&self.flow, &d.flow) {
            (Some(f), Some(v)) => {
                let mut f = f.clone();
                f.displacement = f.displacement.lin_comb(1.0, v, h);
                Some(f)
            }
            (f, _) => f.clone(),
        };
        let mut fields = self.fields.lin_comb(1.0, &d.fields, h);
        // alpha is a constant of motion; never let arithmetic touch it
        fields.alpha = self.fields.alpha;
        State {
            fields,
            t: self.t + h,
            flow,
        }
    }

    fn rk4_increment(k: [&StateDerivative; 4]) -> StateDerivative {
        let fields = k[0]
            .fields
            .lin_comb(1.0, &k[1].fields, 2.0)
            .lin_comb(1.0, &k[2].fields, 2.0)
            .lin_comb(1.0, &k[3].fields, 1.0);
        let flow = match (&k[0].flow, &k[1].flow, &k[2].flow, &k[3].flow) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(
                a.lin_comb(1.0, b, 2.0)
                    .lin_comb(1.0, c, 2.0)
                    .lin_comb(1.0, d, 1.0),
            ),
            _ => None,
        };
        StateDerivative { fields, flow }
    }

    fn finish_step(mut self, start: &State, dt: f64) -> State {
        self.t = start.t + dt;
        self
    }
}

/// One classical four-stage Runge-Kutta step.
pub fn rk4_step<S, F>(mut rhs: F, y: &S, dt: f64) -> Result<S>
where
    S: Evolve,
    F: FnMut(&S) -> Result<S::Tangent>,
{
    let k1 = rhs(y)?;
    let k2 = rhs(&y.displaced(0.5 * dt, &k1))?;
    let k3 = rhs(&y.displaced(0.5 * dt, &k2))?;
    let k4 = rhs(&y.displaced(dt, &k3))?;
    let incr = S::rk4_increment([&k1, &k2, &k3, &k4]);
    Ok(y.displaced(dt / 6.0, &incr).finish_step(y, dt))
}

/// Step size, horizon and diagnostic cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            sample_every: 10,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "t_end must be finite and >= dt (got t_end = {}, dt = {})",
                self.t_end, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Halting thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupThresholds {
    /// Halt once `min u_x < -slope_limit`.
    pub slope_limit: f64,
    /// Halt once the energy fraction in the outer third of the retained band exceeds this.
    pub tail_fraction_limit: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            slope_limit: 30.0,
            tail_fraction_limit: 0.1,
        }
    }
}

impl BlowupThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_limit > 0.0) {
            return Err(Error::Config("slope_limit must be > 0".into()));
        }
        if !(self.tail_fraction_limit > 0.0 && self.tail_fraction_limit < 1.0) {
            return Err(Error::Config("tail_fraction_limit must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    NonFinite,
    Slope,
    SpectralTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed { t: f64 },
    Blowup { reason: BlowupReason, t: f64 },
}

impl Termination {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Termination::Blowup { .. })
    }

    pub fn time(&self) -> f64 {
        match *self {
            Termination::Completed { t } | Termination::Blowup { t, .. } => t,
        }
    }
}

/// Quantities inspected by [`detect_blowup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupStatus {
    pub triggered: Option<BlowupReason>,
    pub min_ux: f64,
    pub tail_fraction: f64,
}

/// Lower wavenumber bound of the tail band: the outer third of the modes kept
/// by the two-thirds rule.
pub fn tail_band_start(n: usize) -> i64 {
    2 * (n / 3) as i64 / 3
}

/// Energy fraction of the state in the tail band, the larger of `u` and `rho`.
pub fn tail_fraction(st: &State) -> f64 {
    let kmin = tail_band_start(st.fields.u.n());
    st.fields
        .u
        .band_energy_fraction(kmin)
        .max(st.fields.rho.band_energy_fraction(kmin))
}

pub fn detect_blowup(st: &State, th: &BlowupThresholds) -> BlowupStatus {
    if !st.is_finite() {
        return BlowupStatus {
            triggered: Some(BlowupReason::NonFinite),
            min_ux: f64::NAN,
            tail_fraction: f64::NAN,
        };
    }
    let min_ux = st.fields.u.derivative().oversampled_min();
    let tail = tail_fraction(st);
    let triggered = if min_ux < -th.slope_limit {
        Some(BlowupReason::Slope)
    } else if tail > th.tail_fraction_limit {
        Some(BlowupReason::SpectralTail)
    } else {
        None
    };
    BlowupStatus {
        triggered,
        min_ux,
        tail_fraction: tail,
    }
}

/// Sampled run output. Every stored state is finite.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrates until `t_end` or until a blow-up criterion fires.
///
/// Blow-up is recorded in [`Trajectory::termination`]; the state that tripped
/// a slope or tail criterion is kept as the final sample, a non-finite state is not.
pub fn advance(
    st0: &State,
    p: &ModelParams,
    cfg: &StepperConfig,
    th: &BlowupThresholds,
) -> Result<Trajectory> {
    cfg.validate()?;
    th.validate()?;
    if !st0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let total = cfg.steps();
    let mut traj = Trajectory {
        dt: cfg.dt,
        steps: vec![0],
        times: vec![st0.t],
        states: vec![st0.clone()],
        termination: Termination::Completed { t: st0.t },
    };
    let mut state = st0.clone();
    for step in 1..=total {
        let t_new = st0.t + step as f64 * cfg.dt;
        let next = match rk4_step(|s: &State| coupled_rhs(s, p), &state, cfg.dt) {
            Ok(mut s) => {
                s.t = t_new;
                s
            }
            Err(Error::NonFinite(_)) => {
                traj.termination = Termination::Blowup {
                    reason: BlowupReason::NonFinite,
                    t: t_new,
                };
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        let status = detect_blowup(&next, th);
        match status.triggered {
            Some(BlowupReason::NonFinite) => {
                traj.termination = Termination::Blowup {
                    reason: BlowupReason::NonFinite,
                    t: t_new,
                };
                return Ok(traj);
            }
            Some(reason) => {
                traj.steps.push(step);
                traj.times.push(t_new);
                traj.states.push(next);
                traj.termination = Termination::Blowup { reason, t: t_new };
                return Ok(traj);
            }
            None => {}
        }
        if step % cfg.sample_every == 0 || step == total {
            traj.steps.push(step);
            traj.times.push(t_new);
            traj.states.push(next.clone());
        }
        state = next;
    }
    traj.termination = Termination::Completed { t: state.t };
    Ok(traj)
}

/// Result of a temporal convergence probe.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Errors of each non-reference step size against the finest one.
    pub errors: Vec<f64>,
    /// Pairwise order estimates between consecutive step sizes.
    pub orders: Vec<f64>,
    /// Estimate from the two finest non-reference step sizes.
    pub order: f64,
}

/// Richardson-style order estimate. `solve(dt)` returns the solution vector at
/// a fixed horizon; the finest `dt` serves as reference.
pub fn order_probe<F>(dt_list: &[f64], mut solve: F) -> Result<OrderEstimate>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if dt_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "order probe needs at least 3 step sizes (got {})",
            dt_list.len()
        )));
    }
    let mut dts = dt_list.to_vec();
    dts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if dts.windows(2).any(|w| !(w[0] > w[1])) || dts.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Precondition("step sizes must be positive and distinct".into()));
    }
    let solutions = dts.iter().map(|&dt| solve(dt)).collect::<Result<Vec<_>>>()?;
    let reference = solutions.last().unwrap();
    let errors: Vec<f64> = solutions[..solutions.len() - 1]
        .iter()
        .map(|sol| {
            sol.iter()
                .zip(reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    if errors.windows(2).any(|w| !(w[1] < w[0])) || errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Inconclusive(format!(
            "errors are not monotonically decreasing: {errors:?}"
        )));
    }
    let orders: Vec<f64> = errors
        .windows(2)
        .zip(dts.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let order = *orders.last().unwrap();
    Ok(OrderEstimate {
        errors,
        orders,
        order,
    })
}

/// Order probe for a model run: compares `u` and `rho` samples at `t_end`.
pub fn order_probe_model(st0: &State, p: &ModelParams, t_end: f64, dt_list: &[f64]) -> Result<OrderEstimate> {
    order_probe(dt_list, |dt| {
        let n = (t_end / dt).round() as usize;
        let mut s = st0.clone();
        for _ in 0..n {
            s = rk4_step(|x: &State| coupled_rhs(x, p), &s, dt)?;
        }
        let mut out = s.fields.u.samples().to_vec();
        out.extend_from_slice(s.fields.rho.samples());
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use crate::spectral::{PeriodicGrid, SpectralField};
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_only_advances_time() {
        let g = PeriodicGrid::new(16).unwrap();
        let p = ModelParams::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let mut x = AlgebraElement::zero(&g);
        x.alpha = 0.5;
        let st = State::new(x, true);
        let next = rk4_step(|s: &State| coupled_rhs(s, &p), &st, 0.01).unwrap();
        assert_eq!(next.t, 0.01);
        // alpha u_x with u = 0 vanishes, so nothing moves
        assert_eq!(next.fields.u.max_abs_sample(), 0.0);
        assert_eq!(next.fields.rho.max_abs_sample(), 0.0);
        assert_eq!(next.fields.alpha, 0.5);
    }

    #[test]
    fn scalar_exponential_step() {
        let lambda = -1.3;
        for dt in [0.1, 0.05, 0.025] {
            let y = rk4_step(|y: &f64| Ok(lambda * y), &1.0, dt).unwrap();
            let err = (y - (lambda * dt).exp()).abs();
            // local error of RK4 is (lambda dt)^5 / 120 to leading order
            let lead = (lambda * dt as f64).abs().powi(5) / 120.0;
            assert!(err < 1.1 * lead && err > 0.9 * lead, "dt={dt} err={err} lead={lead}");
        }
    }

    #[test]
    fn alpha_is_bit_exact_across_steps() {
        let g = PeriodicGrid::new(32).unwrap();
        let p = ModelParams::new(3.0, 1.0, 0.123456789, 1.5).unwrap();
        let x = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 0.3 * (2.0 * PI * x).cos()),
            SpectralField::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * PI * x).sin()),
            p.alpha,
        )
        .unwrap();
        let mut st = State::new(x, false);
        for _ in 0..5 {
            st = rk4_step(|s: &State| coupled_rhs(s, &p), &st, 1e-2).unwrap();
            assert_eq!(st.fields.alpha.to_bits(), p.alpha.to_bits());
        }
    }

    #[test]
    fn stepper_validation() {
        let bad = StepperConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = StepperConfig {
            dt: 0.1,
            t_end: 0.05,
            sample_every: 1,
        };
        assert!(bad.validate().is_err());
        assert!(StepperConfig::default().validate().is_ok());
    }

    #[test]
    fn single_step_run() {
        let g = PeriodicGrid::new(16).unwrap();
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let st = State::new(AlgebraElement::zero(&g), false);
        let cfg = StepperConfig {
            dt: 0.01,
            t_end: 0.01,
            sample_every: 10,
        };
        let traj = advance(&st, &p, &cfg, &BlowupThresholds::default()).unwrap();
        assert_eq!(traj.steps, vec![0, 1]);
        assert_eq!(traj.termination, Termination::Completed { t: 0.01 });
    }

    #[test]
    fn blowup_detection_contract() {
        let g = PeriodicGrid::new(32).unwrap();
        let th = BlowupThresholds::default();
        let mut x = AlgebraElement::zero(&g);
        x.alpha = f64::INFINITY;
        assert_eq!(
            detect_blowup(&State::new(x, false), &th).triggered,
            Some(BlowupReason::NonFinite)
        );

        let smooth = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 0.1 * (2.0 * PI * x).cos()),
            SpectralField::constant(&g, 1.0),
            0.0,
        )
        .unwrap();
        assert_eq!(detect_blowup(&State::new(smooth, false), &th).triggered, None);

        // u = A sin(2 pi x) / (2 pi) has min u_x = -A; choose A = 2 * slope_limit.
        let amp = 2.0 * th.slope_limit;
        let steep = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| amp * (2.0 * PI * x).sin() / (2.0 * PI)),
            SpectralField::zeros(&g),
            0.0,
        )
        .unwrap();
        let status = detect_blowup(&State::new(steep, false), &th);
        assert_eq!(status.triggered, Some(BlowupReason::Slope));
        assert!((status.min_ux + amp).abs() < 1e-3 * amp);

        let k = tail_band_start(32) + 1;
        let ragged = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 1e-3 * (2.0 * PI * k as f64 * x).cos()),
            SpectralField::zeros(&g),
            0.0,
        )
        .unwrap();
        assert_eq!(
            detect_blowup(&State::new(ragged, false), &th).triggered,
            Some(BlowupReason::SpectralTail)
        );
    }

    #[test]
    fn order_probe_preconditions() {
        assert!(matches!(
            order_probe(&[0.1], |_| Ok(vec![0.0])),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            order_probe(&[0.1, 0.05], |_| Ok(vec![0.0])),
            Err(Error::Precondition(_))
        ));
        // identical solutions give zero errors, which cannot be ordered
        assert!(matches!(
            order_probe(&[0.1, 0.05, 0.025], |_| Ok(vec![1.0])),
            Err(Error::Inconclusive(_))
        ));
    }

    #[test]
    fn order_probe_on_linear_problem() {
        let lambda = -2.0;
        let t_end = 1.0;
        let solve = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            let mut y = 1.0;
            for _ in 0..n {
                y = rk4_step(|y: &f64| Ok(lambda * y), &y, dt)?;
            }
            Ok(vec![y])
        };
        let est = order_probe(&[0.1, 0.05, 0.025, 0.0125], solve).unwrap();
        assert!(est.order >= 3.7 && est.order <= 4.2, "{est:?}");
        // against the exact solution the global error ratio is 2^4 as well
        let exact = (lambda * t_end).exp();
        let e1 = (solve(0.05).unwrap()[0] - exact).abs();
        let e2 = (solve(0.025).unwrap()[0] - exact).abs();
        let exact_order = (e1 / e2).log2();
        assert!(exact_order >= 3.7 && exact_order <= 4.2);
    }
}

//! Monitors evaluated along a trajectory: conservation of the metric norm and
//! of the mean velocity, the Lagrangian density invariant, positivity of
//! `rho`, the Gronwall stretch bound, the Sobolev ladder and the a-priori
//! inequality. Every monitor is a pure function of its input.

use serde::Serialize;

use crate::algebra::{metric_norm_sq, AlgebraElement, MetricParams};
use crate::dynamics::{FlowMap, ModelParams, State};
use crate::error::{Error, Result};
use crate::integrate::{tail_fraction, Trajectory};

/// Floor of the denominator in relative drifts.
pub const DRIFT_FLOOR: f64 = 1e-14;

/// Relative slack allowed in the a-priori inequality.
pub const APRIORI_SLACK: f64 = 1e-10;

/// `|N(t) - N(0)| / max(N(0), eps)` with `N = ||U||_A^2`.
pub fn metric_norm_drift(traj: &Trajectory, p: &ModelParams) -> Vec<f64> {
    let metric = p.metric();
    let n0 = metric_norm_sq(&traj.initial().fields, &metric);
    let denom = n0.abs().max(DRIFT_FLOOR);
    traj.states
        .iter()
        .map(|s| (metric_norm_sq(&s.fields, &metric) - n0).abs() / denom)
        .collect()
}

/// `|int u(t) - int u(0)|`.
pub fn mean_velocity_drift(traj: &Trajectory) -> Vec<f64> {
    let m0 = traj.initial().fields.u.circle_integral();
    traj.states
        .iter()
        .map(|s| (s.fields.u.circle_integral() - m0).abs())
        .collect()
}

fn flow_of(st: &State) -> Result<&FlowMap> {
    st.flow
        .as_ref()
        .ok_or_else(|| Error::Config("this monitor needs the flow map to be enabled".into()))
}

/// `(rho o phi) phi_x^{a-1}` at every label.
fn lagrangian_density(st: &State, a: f64) -> Result<Vec<f64>> {
    let flow = flow_of(st)?;
    let jac = flow.jacobian();
    let min_jac = jac.samples().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_jac > 0.0) {
        return Err(Error::FlowDegenerate {
            min_jacobian: min_jac,
        });
    }
    let rho = st.fields.rho.interpolate(&flow.positions());
    Ok(rho
        .iter()
        .zip(jac.samples())
        .map(|(r, j)| r * j.powf(a - 1.0))
        .collect())
}

/// `max_j |(rho o phi)(t) phi_x^{a-1}(t) - (rho o phi)(0) phi_x^{a-1}(0)|` per sample.
pub fn lagrangian_invariant(traj: &Trajectory, p: &ModelParams) -> Result<Vec<f64>> {
    let q0 = lagrangian_density(traj.initial(), p.a)?;
    traj.states
        .iter()
        .map(|s| {
            let q = lagrangian_density(s, p.a)?;
            Ok(q.iter()
                .zip(&q0)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Minimum of `rho` on the oversampled grid per sample.
pub fn rho_positivity(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .iter()
        .map(|s| s.fields.rho.oversampled_min())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StretchSample {
    pub gamma: f64,
    pub k: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `gamma(t) = max_j 1/phi_x(xi_j)` against `gamma(0) exp(K t)`, where `K` is
/// the running maximum of `||u_x||_inf` over the samples seen so far.
pub fn stretch_bound(traj: &Trajectory) -> Result<Vec<StretchSample>> {
    let t0 = traj.initial().t;
    let gamma_of = |st: &State| -> Result<f64> {
        let jac = flow_of(st)?.jacobian();
        let min_jac = jac.samples().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_jac > 0.0) {
            return Err(Error::FlowDegenerate {
                min_jacobian: min_jac,
            });
        }
        Ok(1.0 / min_jac)
    };
    let gamma0 = gamma_of(traj.initial())?;
    let mut k = 0.0_f64;
    traj.states
        .iter()
        .map(|s| {
            k = k.max(s.fields.u.derivative().sup_norm());
            let gamma = gamma_of(s)?;
            let bound = gamma0 * (k * (s.t - t0)).exp();
            Ok(StretchSample {
                gamma,
                k,
                bound,
                ratio: gamma / bound,
            })
        })
        .collect()
}

/// `||A u||_{H^k}^2 + ||rho||_{H^{k+1}}^2` with the inertia symbol family.
pub fn sobolev_ladder(x: &AlgebraElement, p: &MetricParams, k: u32) -> f64 {
    let m = x.u.apply_power(p.s);
    m.sobolev_norm_sq(k as f64) + x.rho.sobolev_norm_sq(k as f64 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `3/4 ||u||_{H^s}^2 + kappa ||rho||_{L^2}^2 <= ||U||_A^2 + alpha^2 / 2`.
pub fn apriori_check(x: &AlgebraElement, p: &MetricParams) -> AprioriCheck {
    let lhs = 0.75 * x.u.sobolev_norm_sq(p.s) + p.kappa * x.rho.sobolev_norm_sq(0.0);
    let rhs = metric_norm_sq(x, p) + 0.5 * x.alpha * x.alpha;
    let slack = rhs - lhs;
    let scale = 1.0 + lhs.abs().max(rhs.abs());
    AprioriCheck {
        lhs,
        rhs,
        slack,
        holds: slack >= -APRIORI_SLACK * scale,
    }
}

/// Tolerances applied when a monitor is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticTolerances {
    pub metric_drift: f64,
    pub mean_drift: f64,
    /// Multiplied by `1 + ||rho_0||_inf`.
    pub lagrangian: f64,
    /// Multiplicative slack on the stretch bound.
    pub stretch_slack: f64,
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self {
            metric_drift: 1e-6,
            mean_drift: 1e-8,
            lagrangian: 1e-6,
            stretch_slack: 1e-3,
        }
    }
}

/// One row of the trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub metric_norm_sq: f64,
    pub metric_drift: f64,
    pub mean_u: f64,
    pub min_rho: f64,
    pub sup_ux: f64,
    pub min_ux: f64,
    pub lagrangian_dev: Option<f64>,
    pub stretch_ratio: Option<f64>,
    pub ladder_k0: f64,
    pub ladder_k1: f64,
    pub tail_fraction: f64,
}

/// Outcome of one monitor over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    /// Whether the monitored property is claimed for this run's parameters.
    pub asserted: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub rows: Vec<DiagnosticRow>,
    pub monitors: Vec<MonitorResult>,
    pub flow_degenerate: bool,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.monitors.iter().all(|m| m.passed)
    }

    pub fn monitor(&self, name: &str) -> Option<&MonitorResult> {
        self.monitors.iter().find(|m| m.name == name)
    }

    /// Largest value of a column over all rows, ignoring absent entries.
    pub fn column_max(&self, f: impl Fn(&DiagnosticRow) -> Option<f64>) -> Option<f64> {
        self.rows.iter().filter_map(f).reduce(f64::max)
    }

    pub fn column_min(&self, f: impl Fn(&DiagnosticRow) -> Option<f64>) -> Option<f64> {
        self.rows.iter().filter_map(f).reduce(f64::min)
    }
}

/// Evaluates every monitor on a trajectory.
pub fn evaluate(traj: &Trajectory, p: &ModelParams, tol: &DiagnosticTolerances) -> DiagnosticReport {
    let metric = p.metric();
    let drift = metric_norm_drift(traj, p);
    let mean_drift = mean_velocity_drift(traj);
    let min_rho = rho_positivity(traj);
    let has_flow = traj.initial().flow.is_some();
    let mut flow_degenerate = false;
    let lagrangian = if has_flow {
        match lagrangian_invariant(traj, p) {
            Ok(v) => Some(v),
            Err(_) => {
                flow_degenerate = true;
                None
            }
        }
    } else {
        None
    };
    let stretch = if has_flow {
        match stretch_bound(traj) {
            Ok(v) => Some(v),
            Err(_) => {
                flow_degenerate = true;
                None
            }
        }
    } else {
        None
    };

    let mut apriori_worst = f64::INFINITY;
    let mut apriori_ok = true;
    let rows: Vec<DiagnosticRow> = traj
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let ux = s.fields.u.derivative();
            let fine = ux.oversampled();
            let sup_ux = fine.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let min_ux = fine.iter().cloned().fold(f64::INFINITY, f64::min);
            let chk = apriori_check(&s.fields, &metric);
            let scale = 1.0 + chk.lhs.abs().max(chk.rhs.abs());
            apriori_worst = apriori_worst.min(chk.slack / scale);
            apriori_ok &= chk.holds;
            DiagnosticRow {
                t: s.t,
                metric_norm_sq: metric_norm_sq(&s.fields, &metric),
                metric_drift: drift[i],
                mean_u: s.fields.u.circle_integral(),
                min_rho: min_rho[i],
                sup_ux,
                min_ux,
                lagrangian_dev: lagrangian.as_ref().map(|v| v[i]),
                stretch_ratio: stretch.as_ref().map(|v| v[i].ratio),
                ladder_k0: sobolev_ladder(&s.fields, &metric, 0),
                ladder_k1: sobolev_ladder(&s.fields, &metric, 1),
                tail_fraction: tail_fraction(s),
            }
        })
        .collect();

    let max_of = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let conservative = p.a == 2.0;
    let mut monitors = Vec::new();

    let d = max_of(&drift);
    monitors.push(MonitorResult {
        name: "metric_norm_drift",
        value: d,
        tolerance: tol.metric_drift,
        asserted: conservative,
        passed: !conservative || d <= tol.metric_drift,
    });
    let md = max_of(&mean_drift);
    monitors.push(MonitorResult {
        name: "mean_velocity_drift",
        value: md,
        tolerance: tol.mean_drift,
        asserted: conservative,
        passed: !conservative || md <= tol.mean_drift,
    });

    let rho0_min = min_rho[0];
    let rho_floor = min_rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive_start = rho0_min > 0.0;
    monitors.push(MonitorResult {
        name: "rho_positivity",
        value: rho_floor,
        tolerance: 0.0,
        asserted: positive_start,
        passed: !positive_start || rho_floor > 0.0,
    });

    if has_flow {
        let rho0_sup = traj.initial().fields.rho.sup_norm();
        let lag_tol = tol.lagrangian * (1.0 + rho0_sup);
        let lag = lagrangian.as_deref().map(max_of).unwrap_or(f64::NAN);
        monitors.push(MonitorResult {
            name: "lagrangian_invariant",
            value: lag,
            tolerance: lag_tol,
            asserted: true,
            passed: lag <= lag_tol,
        });
        let worst = stretch
            .as_ref()
            .map(|v| v.iter().map(|s| s.ratio).fold(0.0, f64::max))
            .unwrap_or(f64::NAN);
        monitors.push(MonitorResult {
            name: "stretch_bound",
            value: worst,
            tolerance: 1.0 + tol.stretch_slack,
            asserted: true,
            passed: worst <= 1.0 + tol.stretch_slack,
        });
    }

    monitors.push(MonitorResult {
        name: "apriori_inequality",
        value: apriori_worst,
        tolerance: -APRIORI_SLACK,
        asserted: true,
        passed: apriori_ok,
    });

    DiagnosticReport {
        rows,
        monitors,
        flow_degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{advance, BlowupThresholds, StepperConfig, Termination};
    use crate::random::random_element;
    use crate::spectral::{PeriodicGrid, SpectralField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(n).unwrap()
    }

    fn run(x: AlgebraElement, p: &ModelParams, flow: bool, t_end: f64, dt: f64) -> Trajectory {
        let cfg = StepperConfig {
            dt,
            t_end,
            sample_every: 5,
        };
        advance(&State::new(x, flow), p, &cfg, &BlowupThresholds::default()).unwrap()
    }

    #[test]
    fn zero_state_has_no_drift() {
        let g = grid(32);
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let traj = run(AlgebraElement::zero(&g), &p, true, 0.05, 1e-2);
        assert!(metric_norm_drift(&traj, &p).iter().all(|&d| d == 0.0));
        assert!(mean_velocity_drift(&traj).iter().all(|&d| d == 0.0));
        assert!(lagrangian_invariant(&traj, &p).unwrap().iter().all(|&d| d == 0.0));
        assert!(rho_positivity(&traj).iter().all(|&r| r == 0.0));
        for s in stretch_bound(&traj).unwrap() {
            assert_eq!(s.ratio, 1.0);
            assert_eq!(s.k, 0.0);
        }
    }

    #[test]
    fn constant_velocity_keeps_its_mean() {
        let g = grid(32);
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let x = AlgebraElement::new(
            SpectralField::constant(&g, 0.7),
            SpectralField::from_fn(&g, |x| 1.0 + 0.1 * (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let traj = run(x, &p, false, 0.1, 1e-2);
        assert!(mean_velocity_drift(&traj).iter().all(|&d| d <= 1e-12));
    }

    #[test]
    fn monitors_need_the_flow_map() {
        let g = grid(16);
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let traj = run(AlgebraElement::zero(&g), &p, false, 0.02, 1e-2);
        assert!(matches!(lagrangian_invariant(&traj, &p), Err(Error::Config(_))));
        assert!(matches!(stretch_bound(&traj), Err(Error::Config(_))));
    }

    #[test]
    fn initial_sample_is_exact() {
        let g = grid(64);
        let p = ModelParams::new(3.0, 1.0, 0.0, 2.0).unwrap();
        let x = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 0.5 * (2.0 * PI * x).cos()),
            SpectralField::from_fn(&g, |x| 2.0 + 0.5 * (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let traj = run(x, &p, true, 0.05, 1e-2);
        assert_eq!(lagrangian_invariant(&traj, &p).unwrap()[0], 0.0);
        assert_eq!(stretch_bound(&traj).unwrap()[0].ratio, 1.0);
        let report = evaluate(&traj, &p, &DiagnosticTolerances::default());
        assert!(report.passed(), "{:?}", report.monitors);
        // a = 3 does not claim conservation
        assert!(!report.monitor("metric_norm_drift").unwrap().asserted);
    }

    #[test]
    fn sign_changing_rho_is_reported_only() {
        let g = grid(32);
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let x = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 0.2 * (2.0 * PI * x).cos()),
            SpectralField::from_fn(&g, |x| (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let traj = run(x, &p, false, 0.05, 1e-2);
        let r = evaluate(&traj, &p, &DiagnosticTolerances::default());
        let m = r.monitor("rho_positivity").unwrap();
        assert!(!m.asserted && m.passed && m.value < 0.0);
    }

    #[test]
    fn ladder_single_mode() {
        let g = grid(32);
        let p = MetricParams::new(0.0, 1.0).unwrap();
        assert_eq!(sobolev_ladder(&AlgebraElement::zero(&g), &p, 0), 0.0);
        let x = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| (2.0 * PI * x).cos()),
            SpectralField::zeros(&g),
            0.0,
        )
        .unwrap();
        let lam = 1.0 + 4.0 * PI * PI;
        let want = lam * lam / 2.0;
        assert!((sobolev_ladder(&x, &p, 0) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn apriori_special_cases() {
        let g = grid(32);
        let p = MetricParams::new(1.0, 2.0).unwrap();
        let mut x = AlgebraElement::zero(&g);
        x.alpha = 1.7;
        let c = apriori_check(&x, &p);
        assert_eq!(c.lhs, 0.0);
        assert!((c.rhs - 1.7 * 1.7).abs() < 1e-14);
        assert!(c.holds && (c.slack - 1.7 * 1.7).abs() < 1e-14);

        let one = AlgebraElement::new(SpectralField::constant(&g, 1.0), SpectralField::zeros(&g), 0.0)
            .unwrap();
        let c = apriori_check(&one, &p);
        assert!((c.lhs - 0.75).abs() < 1e-15);
        assert!((c.rhs - 1.0).abs() < 1e-15);
        assert!((c.slack - 0.25).abs() < 1e-15);
    }

    #[test]
    fn apriori_holds_on_random_states() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for kappa in [0.0, 1.0, 5.0] {
            for _ in 0..100 {
                let s = rng.gen_range(1.0..3.0);
                let p = MetricParams::new(kappa, s).unwrap();
                let x = random_element(&g, &mut rng, 12);
                assert!(apriori_check(&x, &p).holds);
            }
        }
    }

    #[test]
    fn smooth_run_passes_all_monitors() {
        let g = grid(64);
        let p = ModelParams::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let x = AlgebraElement::new(
            SpectralField::from_fn(&g, |x| 0.5 * (2.0 * PI * x).cos()),
            SpectralField::from_fn(&g, |x| 2.0 + 0.5 * (2.0 * PI * x).sin()),
            0.0,
        )
        .unwrap();
        let traj = run(x, &p, true, 0.2, 2e-3);
        assert!(matches!(traj.termination, Termination::Completed { .. }));
        let r = evaluate(&traj, &p, &DiagnosticTolerances::default());
        assert!(r.passed(), "{:?}", r.monitors);
        assert!(!r.flow_degenerate);
        // recomputation is bit-identical
        assert_eq!(r, evaluate(&traj, &p, &DiagnosticTolerances::default()));
    }
}

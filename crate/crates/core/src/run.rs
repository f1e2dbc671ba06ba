//! Simulation driver, output files and parameter sweeps.

use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{build_initial_condition, config_from_value, SimulationConfig};
use crate::diagnostics::{evaluate, DiagnosticReport, DiagnosticRow, DiagnosticTolerances, MonitorResult};
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::integrate::{advance, BlowupReason, Termination, Trajectory};
use crate::ENGINE_VERSION;

pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "t",
    "metric_norm_sq",
    "metric_drift",
    "mean_u",
    "min_rho",
    "sup_ux",
    "min_ux",
    "lagrangian_dev",
    "stretch_ratio",
    "ladder_k0",
    "ladder_k1",
    "tail_fraction",
];

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_owned()
    } else {
        format!("{x}")
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineInfo {
    pub name: &'static str,
    pub version: &'static str,
}

/// Run-level extremes of the monitored columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMaxima {
    pub metric_drift: f64,
    pub mean_u_drift: f64,
    /// Smallest sampled `min rho`.
    pub min_rho: f64,
    pub sup_ux: f64,
    /// Most negative sampled `min u_x`.
    pub min_ux: f64,
    pub lagrangian_dev: Option<f64>,
    pub stretch_ratio: Option<f64>,
    pub ladder_k0: f64,
    pub ladder_k1: f64,
    pub tail_fraction: f64,
}

impl RunMaxima {
    pub fn from_report(report: &DiagnosticReport) -> Self {
        let rows = &report.rows;
        let max = |f: fn(&DiagnosticRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let min = |f: fn(&DiagnosticRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let mean0 = rows[0].mean_u;
        Self {
            metric_drift: max(|r| r.metric_drift),
            mean_u_drift: rows.iter().map(|r| (r.mean_u - mean0).abs()).fold(0.0, f64::max),
            min_rho: min(|r| r.min_rho),
            sup_ux: max(|r| r.sup_ux),
            min_ux: min(|r| r.min_ux),
            lagrangian_dev: report.column_max(|r| r.lagrangian_dev),
            stretch_ratio: report.column_max(|r| r.stretch_ratio),
            ladder_k0: max(|r| r.ladder_k0),
            ladder_k1: max(|r| r.ladder_k1),
            tail_fraction: max(|r| r.tail_fraction),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub engine: EngineInfo,
    pub termination: Termination,
    pub samples: usize,
    pub steps_taken: usize,
    pub maxima: RunMaxima,
    pub monitors: Vec<MonitorResult>,
    pub flow_degenerate: bool,
    pub config: SimulationConfig,
}

/// In-memory result of one simulation.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub report: DiagnosticReport,
    pub summary: RunSummary,
}

/// Integrates a configuration and evaluates every monitor; writes nothing.
pub fn simulate(cfg: &SimulationConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let p = cfg.params()?;
    let grid = cfg.grid()?;
    let x0 = build_initial_condition(&cfg.initial, &grid, p.alpha)?;
    let st0 = State::new(x0, cfg.flow_map);
    let trajectory = advance(&st0, &p, &cfg.stepper, &cfg.thresholds)?;
    let report = evaluate(&trajectory, &p, &DiagnosticTolerances::default());
    let summary = RunSummary {
        engine: EngineInfo {
            name: "chgeo",
            version: ENGINE_VERSION,
        },
        termination: trajectory.termination,
        samples: trajectory.states.len(),
        steps_taken: *trajectory.steps.last().unwrap_or(&0),
        maxima: RunMaxima::from_report(&report),
        monitors: report.monitors.clone(),
        flow_degenerate: report.flow_degenerate,
        config: cfg.clone(),
    };
    Ok(RunOutput {
        trajectory,
        report,
        summary,
    })
}

pub fn write_trajectory_csv(rows: &[DiagnosticRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", TRAJECTORY_COLUMNS.join(","))?;
    for r in rows {
        let cells = [
            cell(Some(r.t)),
            cell(Some(r.metric_norm_sq)),
            cell(Some(r.metric_drift)),
            cell(Some(r.mean_u)),
            cell(Some(r.min_rho)),
            cell(Some(r.sup_ux)),
            cell(Some(r.min_ux)),
            cell(r.lagrangian_dev),
            cell(r.stretch_ratio),
            cell(Some(r.ladder_k0)),
            cell(Some(r.ladder_k1)),
            cell(Some(r.tail_fraction)),
        ];
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_fields_csv(state: &State, s: f64, mut w: impl Write) -> Result<()> {
    let f = &state.fields;
    let m = f.u.apply_power(s);
    writeln!(w, "x,u,rho,m")?;
    let points = f.grid().points();
    for (j, x) in points.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            format_float(*x),
            format_float(f.u.samples()[j]),
            format_float(f.rho.samples()[j]),
            format_float(m.samples()[j])
        )?;
    }
    Ok(())
}

/// Writes `trajectory.csv`, requested snapshots and `summary.json` into `out`.
pub fn write_outputs(run: &RunOutput, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut w = BufWriter::new(fs::File::create(out.join("trajectory.csv"))?);
    write_trajectory_csv(&run.report.rows, &mut w)?;
    w.flush()?;

    let cfg = &run.summary.config;
    let every = cfg.output.snapshot_every;
    if every > 0 {
        for (step, st) in run.trajectory.steps.iter().zip(&run.trajectory.states) {
            if step % every == 0 {
                let mut w = BufWriter::new(fs::File::create(out.join(format!("fields_{step}.csv")))?);
                write_fields_csv(st, cfg.model.s, &mut w)?;
                w.flush()?;
            }
        }
    }

    let mut text = serde_json::to_string_pretty(&run.summary)?;
    text.push('\n');
    fs::write(out.join("summary.json"), text)?;
    Ok(())
}

/// Runs a configuration and writes its outputs.
pub fn run_simulate(cfg: &SimulationConfig, out: &Path) -> Result<RunOutput> {
    let run = simulate(cfg)?;
    write_outputs(&run, out)?;
    Ok(run)
}

/// Process exit status for a finished run: 0 completed, 2 blow-up.
pub fn exit_status(termination: &Termination) -> i32 {
    if termination.is_blowup() {
        2
    } else {
        0
    }
}

/// Parameter lists of a sweep; absent lists fall back to the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub s: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base: SimulationConfig,
    pub grid: SweepGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub s: f64,
    pub a: f64,
    pub kappa: f64,
    pub alpha: f64,
}

impl SweepPlan {
    /// Cartesian product in the fixed order s, a, kappa, alpha (alpha fastest).
    pub fn cells(&self) -> Vec<SweepCell> {
        let m = &self.base.model;
        let pick = |v: &Option<Vec<f64>>, d: f64| v.clone().unwrap_or_else(|| vec![d]);
        let (ss, aa, kk, al) = (
            pick(&self.grid.s, m.s),
            pick(&self.grid.a, m.a),
            pick(&self.grid.kappa, m.kappa),
            pick(&self.grid.alpha, m.alpha),
        );
        let mut out = Vec::new();
        for &s in &ss {
            for &a in &aa {
                for &kappa in &kk {
                    for &alpha in &al {
                        out.push(SweepCell { s, a, kappa, alpha });
                    }
                }
            }
        }
        out
    }
}

/// Parses a simulation configuration carrying an extra `sweep` object.
pub fn parse_sweep_config(text: &str) -> Result<SweepPlan> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let Value::Object(mut root) = value else {
        return Err(Error::Config("configuration must be a JSON object".into()));
    };
    let sweep = root
        .remove("sweep")
        .ok_or_else(|| Error::Config("sweep: missing parameter grid".into()))?;
    let grid: SweepGrid = serde_json::from_value(sweep).map_err(|e| Error::Config(format!("sweep: {e}")))?;
    let base = config_from_value(Value::Object(root))?;
    let plan = SweepPlan { base, grid };
    let lists = [&plan.grid.s, &plan.grid.a, &plan.grid.kappa, &plan.grid.alpha];
    if lists.iter().all(|l| l.is_none()) || plan.cells().is_empty() {
        return Err(Error::Config("sweep: parameter grid is empty".into()));
    }
    Ok(plan)
}

/// One line of `sweep.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    pub cell: usize,
    pub s: f64,
    pub a: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// `completed`, `blowup` or `error`.
    pub status: &'static str,
    pub reason: Option<BlowupReason>,
    pub t_star: Option<f64>,
    pub t_final: Option<f64>,
    pub max_metric_drift: Option<f64>,
    pub max_sup_ux: Option<f64>,
    pub error: Option<String>,
}

pub fn run_cell(base: &SimulationConfig, index: usize, c: SweepCell) -> SweepLine {
    let mut cfg = base.clone();
    cfg.model.s = c.s;
    cfg.model.a = c.a;
    cfg.model.kappa = c.kappa;
    cfg.model.alpha = c.alpha;
    let mut line = SweepLine {
        cell: index,
        s: c.s,
        a: c.a,
        kappa: c.kappa,
        alpha: c.alpha,
        status: "error",
        reason: None,
        t_star: None,
        t_final: None,
        max_metric_drift: None,
        max_sup_ux: None,
        error: None,
    };
    match simulate(&cfg) {
        Ok(run) => {
            match run.summary.termination {
                Termination::Completed { t } => {
                    line.status = "completed";
                    line.t_final = Some(t);
                }
                Termination::Blowup { reason, t } => {
                    line.status = "blowup";
                    line.reason = Some(reason);
                    line.t_star = Some(t);
                    line.t_final = Some(t);
                }
            }
            line.max_metric_drift = Some(run.summary.maxima.metric_drift);
            line.max_sup_ux = Some(run.summary.maxima.sup_ux);
        }
        Err(e) => line.error = Some(e.to_string()),
    }
    line
}

/// Runs every cell on a pool of `jobs` threads; lines come back in cell order.
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<Vec<SweepLine>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells = plan.cells();
    Ok(pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, c)| run_cell(&plan.base, i, *c))
            .collect()
    }))
}

/// Appends the lines to `out/sweep.jsonl`.
pub fn append_sweep_lines(lines: &[SweepLine], out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let file = OpenOptions::new().create(true).append(true).open(out.join("sweep.jsonl"))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{}", serde_json::to_string(line)?)?;
    }
    w.flush()?;
    Ok(())
}

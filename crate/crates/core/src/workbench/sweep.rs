use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::observables::OrientationSeries;
use crate::units::ROTATIONAL_PERIOD;

use super::config::ExperimentConfig;
use super::run::{run_point, PointOutcome};

/// One evaluated grid point. Failed points keep their coordinates and carry the error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub max_orientation: f64,
    pub t_max_tau0: f64,
    pub revival_tau0: Option<f64>,
    pub dt: f64,
    pub steps: usize,
    pub norm_drift: f64,
    /// Keyed by level key, e.g. "plus_0".
    pub populations: BTreeMap<String, f64>,
    pub phases: BTreeMap<String, f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_outcome(index: usize, coords: Vec<f64>, out: &PointOutcome) -> Self {
        Self {
            index,
            coords,
            max_orientation: out.max.0,
            t_max_tau0: out.max.1 / ROTATIONAL_PERIOD,
            revival_tau0: out.revival.map(|p| p / ROTATIONAL_PERIOD),
            dt: out.trajectory.dt,
            steps: out.trajectory.steps,
            norm_drift: out.trajectory.max_norm_drift,
            populations: out.populations.populations.iter().map(|(l, v)| (l.key(), *v)).collect(),
            phases: out.phases.phases.iter().map(|(l, v)| (l.key(), *v)).collect(),
            error: None,
        }
    }

    fn failed(index: usize, coords: Vec<f64>, err: &crate::PolaritonError) -> Self {
        Self {
            index,
            coords,
            max_orientation: f64::NAN,
            t_max_tau0: f64::NAN,
            revival_tau0: None,
            dt: f64::NAN,
            steps: 0,
            norm_drift: f64::NAN,
            populations: BTreeMap::new(),
            phases: BTreeMap::new(),
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// A one-dimensional slice of a phase map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutLine {
    /// Axis that varies.
    pub along: String,
    /// Axis held fixed, and its value.
    pub held: String,
    pub held_value: f64,
    pub rows: Vec<SweepRow>,
}

impl CutLine {
    /// Coordinate of the largest value along the cut (earliest on ties).
    pub fn argmax(&self) -> Option<(f64, f64)> {
        argmax(&self.rows)
    }
}

fn argmax(rows: &[SweepRow]) -> Option<(f64, f64)> {
    rows.iter().filter(|r| r.is_ok()).fold(None, |best: Option<(f64, f64)>, r| match best {
        Some((_, v)) if v >= r.max_orientation => best,
        _ => Some((r.coords[0], r.max_orientation)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
    /// Orientation series per row, bandwidth sweeps only.
    #[serde(skip)]
    pub series: Vec<Option<OrientationSeries>>,
    pub cuts: Vec<CutLine>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().chain(self.cuts.iter().flat_map(|c| &c.rows)).filter(|r| !r.is_ok()).count()
    }
}

/// Bandwidth, carrier override and the coordinates reported for the point.
type Point = (f64, Option<[f64; 3]>, Vec<f64>);

/// Evaluates points in parallel; output order follows the input order.
fn evaluate(
    cfg: &ExperimentConfig,
    points: &[Point],
    keep_series: bool,
) -> Result<(Vec<SweepRow>, Vec<Option<OrientationSeries>>)> {
    let model = cfg.drive_model()?;
    let results: Vec<(SweepRow, Option<OrientationSeries>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, (dw, phases, coords))| match run_point(cfg, &model, *dw, *phases) {
            Ok(out) => {
                let row = SweepRow::from_outcome(i, coords.clone(), &out);
                (row, keep_series.then_some(out.series))
            }
            Err(e) => (SweepRow::failed(i, coords.clone(), &e), None),
        })
        .collect();
    Ok(results.into_iter().unzip())
}

/// Orientation series and post-pulse maxima over the bandwidth grid (units of g).
pub fn bandwidth_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Result<SweepResult> {
    let points: Vec<_> = grid.iter().map(|&dw| (dw, None, vec![dw])).collect();
    let (rows, series) = evaluate(cfg, &points, true)?;
    Ok(SweepResult { axes: vec!["dw_over_g".into()], rows, series, cuts: Vec::new() })
}

/// Final populations and relative phases over the bandwidth grid.
pub fn population_phase_vs_bandwidth(cfg: &ExperimentConfig, grid: &[f64]) -> Result<SweepResult> {
    let points: Vec<_> = grid.iter().map(|&dw| (dw, None, vec![dw])).collect();
    let (rows, _) = evaluate(cfg, &points, false)?;
    Ok(SweepResult { axes: vec!["dw_over_g".into()], rows, series: Vec::new(), cuts: Vec::new() })
}

/// `n` equally spaced phases covering [0, 2π).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// The two cut lines at the configured bandwidth.
pub fn phase_cuts(cfg: &ExperimentConfig) -> Result<Vec<CutLine>> {
    let axes = cfg.phase_axes();
    let [hold_b, hold_a] = cfg.cut_values();
    let grid = phase_grid(cfg.sweep.cut_points);
    let dw = cfg.pulses.dw_over_g;
    let along_a: Vec<_> = grid.iter().map(|&a| (dw, Some(axes.carriers(a, hold_b)), vec![a])).collect();
    let along_b: Vec<_> = grid.iter().map(|&b| (dw, Some(axes.carriers(hold_a, b)), vec![b])).collect();
    let (rows_a, _) = evaluate(cfg, &along_a, false)?;
    let (rows_b, _) = evaluate(cfg, &along_b, false)?;
    Ok(vec![
        CutLine { along: axes.a_name.into(), held: axes.b_name.into(), held_value: hold_b, rows: rows_a },
        CutLine { along: axes.b_name.into(), held: axes.a_name.into(), held_value: hold_a, rows: rows_b },
    ])
}

/// Full map over both phase axes (row-major in a, then b) plus the cut lines.
pub fn phase_map(cfg: &ExperimentConfig, full: bool) -> Result<SweepResult> {
    let axes = cfg.phase_axes();
    let rows = if full {
        let grid = phase_grid(cfg.sweep.phase_points);
        let dw = cfg.pulses.dw_over_g;
        let points: Vec<_> = grid
            .iter()
            .flat_map(|&a| grid.iter().map(move |&b| (dw, Some(axes.carriers(a, b)), vec![a, b])))
            .collect();
        evaluate(cfg, &points, false)?.0
    } else {
        Vec::new()
    };
    Ok(SweepResult {
        axes: vec![axes.a_name.into(), axes.b_name.into()],
        rows,
        series: Vec::new(),
        cuts: phase_cuts(cfg)?,
    })
}

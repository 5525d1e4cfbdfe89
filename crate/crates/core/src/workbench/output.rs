//! File products of each command: fixed-schema CSV, JSON summaries, SVG
//! renderings and one manifest per product.
//!
//! CSV conventions: angles in radians, times in τ₀, energies in B. Failed
//! sweep points keep their row with NaN values and the error text.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{PolaritonError, Result};
use crate::observables::OrientationSeries;
use crate::rotor_cavity::DressedLabel;
use crate::units::ROTATIONAL_PERIOD;

use super::config::ExperimentConfig;
use super::manifest::{find_manifests, Product, RunManifest};
use super::plot::{heatmap, line_chart, Series};
use super::run::{design_report, run_point};
use super::sweep::{bandwidth_sweep, phase_grid, phase_map, SweepResult, SweepRow};

/// Time bins per row of the bandwidth heat map.
const HEATMAP_BINS: usize = 400;

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `design`: pulses.csv and design.json.
pub fn write_design(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let report = design_report(cfg)?;
    write_csv(
        &dir.join("pulses.csv"),
        &strings(&["transition", "peak_rabi_B", "center_tau0", "width_tau0", "carrier_B", "phase_rad"]),
        report.designed.train.records().into_iter().map(|r| {
            vec![r.transition, num(r.peak_rabi_b), num(r.center_tau0), num(r.width_tau0), num(r.carrier_b), num(r.phase_rad)]
        }),
    )?;
    write_json(&dir.join("design.json"), &report)?;
    let grids = BTreeMap::from([("dw_over_g".into(), vec![cfg.pulses.dw_over_g])]);
    let m = RunManifest::new(Product::DesignedTrain, cfg, grids, strings(&["pulses.csv", "design.json"]));
    m.write(dir)?;
    Ok(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub configuration: String,
    pub dw_over_g: f64,
    pub max_orientation: f64,
    pub t_max_tau0: f64,
    pub revival_tau0: Option<f64>,
    pub dt: f64,
    pub steps: usize,
    pub norm_drift: f64,
    pub populations: BTreeMap<String, f64>,
    pub phases: BTreeMap<String, f64>,
}

/// `propagate`: orientation, final populations and phases, amplitudes and a plot.
pub fn write_single_run(cfg: &ExperimentConfig, dir: &Path) -> Result<(RunManifest, RunSummary)> {
    fs::create_dir_all(dir)?;
    let model = cfg.drive_model()?;
    let out = run_point(cfg, &model, cfg.pulses.dw_over_g, None)?;
    out.series.write_csv(fs::File::create(dir.join("orientation.csv"))?)?;
    out.trajectory.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
    write_csv(
        &dir.join("populations.csv"),
        &strings(&["level", "population", "phase_rad"]),
        out.populations.populations.iter().map(|(l, p)| {
            let phase = if *l == DressedLabel::Ground { 0.0 } else { out.phases.phases.get(l).copied().unwrap_or(f64::NAN) };
            vec![l.key(), num(*p), num(phase)]
        }),
    )?;
    let summary = RunSummary {
        configuration: cfg.cavity.configuration.name().into(),
        dw_over_g: cfg.pulses.dw_over_g,
        max_orientation: out.max.0,
        t_max_tau0: out.max.1 / ROTATIONAL_PERIOD,
        revival_tau0: out.revival.map(|p| p / ROTATIONAL_PERIOD),
        dt: out.trajectory.dt,
        steps: out.trajectory.steps,
        norm_drift: out.trajectory.max_norm_drift,
        populations: out.populations.populations.iter().map(|(l, v)| (l.key(), *v)).collect(),
        phases: out.phases.phases.iter().map(|(l, v)| (l.key(), *v)).collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    let points = out.series.times.iter().zip(&out.series.values).map(|(t, v)| (t / ROTATIONAL_PERIOD, *v)).collect();
    fs::write(
        dir.join("orientation.svg"),
        line_chart("orientation", "t / tau0", "<cos theta>", &[Series { label: "<cos theta>".into(), points }]),
    )?;
    let grids = BTreeMap::from([("dw_over_g".into(), vec![cfg.pulses.dw_over_g])]);
    let files = ["orientation.csv", "trajectory.csv", "populations.csv", "summary.json", "orientation.svg"];
    let m = RunManifest::new(Product::SingleRun, cfg, grids, strings(&files));
    m.write(dir)?;
    Ok((m, summary))
}

fn population_columns(rows: &[SweepRow]) -> Vec<String> {
    let mut keys: Vec<DressedLabel> =
        rows.iter().flat_map(|r| r.populations.keys()).filter_map(|k| DressedLabel::parse(k)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().map(|l| l.key()).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| num(f64::NAN), num)
}

/// `sweep-bandwidth`: both bandwidth products from one set of propagations.
pub fn write_bandwidth(cfg: &ExperimentConfig, dir: &Path) -> Result<(Vec<RunManifest>, SweepResult)> {
    fs::create_dir_all(dir)?;
    let grid = cfg.bandwidth_grid();
    let res = bandwidth_sweep(cfg, &grid)?;
    let grids = BTreeMap::from([("dw_over_g".into(), grid.clone())]);

    write_csv(
        &dir.join("bandwidth_summary.csv"),
        &strings(&["dw_over_g", "max_abs_cos_theta", "t_max_tau0", "revival_tau0", "dt_internal", "steps", "norm_drift", "error"]),
        res.rows.iter().map(|r| {
            vec![
                num(r.coords[0]),
                num(r.max_orientation),
                num(r.t_max_tau0),
                opt(r.revival_tau0),
                num(r.dt),
                r.steps.to_string(),
                num(r.norm_drift),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("bandwidth_series.csv"),
        &strings(&["dw_over_g", "t_tau0", "cos_theta"]),
        res.rows.iter().zip(&res.series).flat_map(|(r, s)| {
            let dw = num(r.coords[0]);
            s.iter()
                .flat_map(|s| s.times.iter().zip(&s.values))
                .map(move |(t, v)| vec![dw.clone(), num(t / ROTATIONAL_PERIOD), num(*v)])
                .collect::<Vec<_>>()
        }),
    )?;
    fs::write(dir.join("orientation_vs_bandwidth.svg"), bandwidth_heatmap(&grid, &res.series))?;
    let max_points = res.rows.iter().map(|r| (r.coords[0], r.max_orientation)).collect();
    fs::write(
        dir.join("max_orientation_vs_bandwidth.svg"),
        line_chart("post-pulse maximum", "dw / g", "max |<cos theta>|", &[Series { label: "max".into(), points: max_points }]),
    )?;
    let m1 = RunManifest::new(
        Product::OrientationVsBandwidth,
        cfg,
        grids.clone(),
        strings(&["bandwidth_summary.csv", "bandwidth_series.csv", "orientation_vs_bandwidth.svg", "max_orientation_vs_bandwidth.svg"]),
    );
    m1.write(dir)?;

    let cols = population_columns(&res.rows);
    let mut header = vec!["dw_over_g".to_string()];
    header.extend(cols.iter().map(|k| format!("P_{k}")));
    header.extend(cols.iter().filter(|k| *k != "ground").map(|k| format!("phase_{k}")));
    header.extend(strings(&["target_total", "error"]));
    let targets: Vec<String> = cfg.cavity.configuration.target_levels().iter().map(|l| l.key()).collect();
    write_csv(
        &dir.join("populations_vs_bandwidth.csv"),
        &header,
        res.rows.iter().map(|r| {
            let mut row = vec![num(r.coords[0])];
            row.extend(cols.iter().map(|k| opt(r.populations.get(k).copied())));
            row.extend(cols.iter().filter(|k| *k != "ground").map(|k| opt(r.phases.get(k).copied())));
            let total: f64 = targets.iter().filter_map(|k| r.populations.get(k)).sum();
            row.push(num(if r.is_ok() { total } else { f64::NAN }));
            row.push(r.error.clone().unwrap_or_default());
            row
        }),
    )?;
    let pop_series: Vec<Series> = cols
        .iter()
        .map(|k| Series {
            label: k.clone(),
            points: res.rows.iter().map(|r| (r.coords[0], r.populations.get(k).copied().unwrap_or(f64::NAN))).collect(),
        })
        .collect();
    fs::write(dir.join("populations_vs_bandwidth.svg"), line_chart("final populations", "dw / g", "population", &pop_series))?;
    let m2 = RunManifest::new(
        Product::PopulationsVsBandwidth,
        cfg,
        grids,
        strings(&["populations_vs_bandwidth.csv", "populations_vs_bandwidth.svg"]),
    );
    m2.write(dir)?;
    Ok((vec![m1, m2], res))
}

/// |⟨cosθ⟩| binned onto a common time axis, one row per bandwidth.
fn bandwidth_heatmap(grid: &[f64], series: &[Option<OrientationSeries>]) -> String {
    let (t0, t1) = series.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
        (a.min(*s.times.first().unwrap_or(&a)), b.max(*s.times.last().unwrap_or(&b)))
    });
    let (t0, t1) = if t0 < t1 { (t0, t1) } else { (0.0, 1.0) };
    let width = (t1 - t0) / HEATMAP_BINS as f64;
    let values: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let mut row = vec![f64::NAN; HEATMAP_BINS];
            for (t, v) in s.iter().flat_map(|s| s.times.iter().zip(&s.values)) {
                let k = (((t - t0) / width) as usize).min(HEATMAP_BINS - 1);
                row[k] = if row[k].is_nan() { v.abs() } else { row[k].max(v.abs()) };
            }
            row
        })
        .collect();
    let xs: Vec<f64> = (0..HEATMAP_BINS).map(|k| (t0 + (k as f64 + 0.5) * width) / ROTATIONAL_PERIOD).collect();
    heatmap("|<cos theta>| versus bandwidth", "t / tau0", "dw / g", &xs, grid, &values)
}

/// `sweep-phase`: cut lines always, the full map when `full`.
pub fn write_phase_map(cfg: &ExperimentConfig, dir: &Path, full: bool) -> Result<(RunManifest, SweepResult)> {
    fs::create_dir_all(dir)?;
    let res = phase_map(cfg, full)?;
    let mut files = Vec::new();
    let mut grids = BTreeMap::from([("cut_phase".to_string(), phase_grid(cfg.sweep.cut_points))]);
    if full {
        let grid = phase_grid(cfg.sweep.phase_points);
        write_csv(
            &dir.join("phase_map.csv"),
            &[res.axes[0].clone() + "_rad", res.axes[1].clone() + "_rad", "max_abs_cos_theta".into(), "t_max_tau0".into(), "error".into()],
            res.rows.iter().map(|r| {
                vec![num(r.coords[0]), num(r.coords[1]), num(r.max_orientation), num(r.t_max_tau0), r.error.clone().unwrap_or_default()]
            }),
        )?;
        let n = grid.len();
        // Rows are a-major; the image puts a on x and b on y.
        let values: Vec<Vec<f64>> = (0..n).map(|ib| (0..n).map(|ia| res.rows[ia * n + ib].max_orientation).collect()).collect();
        fs::write(dir.join("phase_map.svg"), heatmap("maximum orientation", &res.axes[0], &res.axes[1], &grid, &grid, &values))?;
        files.extend(strings(&["phase_map.csv", "phase_map.svg"]));
        grids.insert("map_phase".into(), grid);
    }
    write_csv(
        &dir.join("phase_cuts.csv"),
        &strings(&["along", "held", "held_value_rad", "phase_rad", "max_abs_cos_theta", "t_max_tau0", "error"]),
        res.cuts.iter().flat_map(|c| {
            c.rows.iter().map(move |r| {
                vec![
                    c.along.clone(),
                    c.held.clone(),
                    num(c.held_value),
                    num(r.coords[0]),
                    num(r.max_orientation),
                    num(r.t_max_tau0),
                    r.error.clone().unwrap_or_default(),
                ]
            })
        }),
    )?;
    let cut_series: Vec<Series> = res
        .cuts
        .iter()
        .map(|c| Series {
            label: format!("along {}", c.along),
            points: c.rows.iter().map(|r| (r.coords[0], r.max_orientation)).collect(),
        })
        .collect();
    fs::write(dir.join("phase_cuts.svg"), line_chart("cut lines", "phase (rad)", "max |<cos theta>|", &cut_series))?;
    files.extend(strings(&["phase_cuts.csv", "phase_cuts.svg"]));
    let m = RunManifest::new(Product::MaxOrientationPhaseMap, cfg, grids, files);
    m.write(dir)?;
    Ok((m, res))
}

/// Regenerates a manifest's product from its stored config into `dir`.
pub fn regenerate(manifest: &RunManifest, dir: &Path) -> Result<RunManifest> {
    let cfg = &manifest.config;
    Ok(match manifest.product {
        Product::DesignedTrain => write_design(cfg, dir)?,
        Product::SingleRun => write_single_run(cfg, dir)?.0,
        Product::OrientationVsBandwidth | Product::PopulationsVsBandwidth => write_bandwidth(cfg, dir)?
            .0
            .into_iter()
            .find(|m| m.product == manifest.product)
            .expect("bandwidth products"),
        Product::MaxOrientationPhaseMap => write_phase_map(cfg, dir, manifest.grids.contains_key("map_phase"))?.0,
    })
}

/// One file compared during replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayCheck {
    pub product: Product,
    pub file: String,
    pub identical: bool,
}

/// Re-runs every manifest in `run_dir` into `scratch` and compares the outputs byte for byte.
pub fn replay(run_dir: &Path, scratch: &Path) -> Result<Vec<ReplayCheck>> {
    let manifests = find_manifests(run_dir)?;
    if manifests.is_empty() {
        return Err(PolaritonError::Config(format!("no manifests in {}", run_dir.display())));
    }
    let mut checks = Vec::new();
    for m in &manifests {
        let sub: PathBuf = scratch.join(m.product.name());
        let fresh = regenerate(m, &sub)?;
        if fresh.hash != m.hash {
            return Err(PolaritonError::Config(format!("{}: regenerated manifest differs", m.product.name())));
        }
        for f in &m.outputs {
            let identical = fs::read(run_dir.join(f))? == fs::read(sub.join(f))?;
            checks.push(ReplayCheck { product: m.product, file: f.clone(), identical });
        }
    }
    Ok(checks)
}

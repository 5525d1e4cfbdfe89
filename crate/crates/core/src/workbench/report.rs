use std::fmt::Write;
use std::path::Path;

use crate::error::Result;

use super::manifest::{find_manifests, Product, RunManifest};

fn read_rows(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

fn value(row: &csv::StringRecord, idx: Option<usize>) -> f64 {
    idx.and_then(|i| row.get(i)).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
}

/// Human-readable digest of every product in a run directory.
pub fn summarize_run(dir: &Path) -> Result<String> {
    let manifests = find_manifests(dir)?;
    let mut out = String::new();
    if manifests.is_empty() {
        let _ = writeln!(out, "no manifests in {}", dir.display());
        return Ok(out);
    }
    for m in &manifests {
        summarize_product(dir, m, &mut out)?;
    }
    Ok(out)
}

fn summarize_product(dir: &Path, m: &RunManifest, out: &mut String) -> Result<()> {
    let cfg = &m.config;
    let _ = writeln!(out, "[{}] {}", m.product.name(), m.description);
    let _ = writeln!(
        out,
        "  configuration {}, g = {} B, model {:?}, n_max {}, hash {}",
        cfg.cavity.configuration.name(),
        cfg.cavity.g_over_b,
        cfg.numerics.model,
        cfg.numerics.n_max,
        &m.hash[..16]
    );
    match m.product {
        Product::DesignedTrain => {
            let (h, rows) = read_rows(&dir.join("pulses.csv"))?;
            for r in &rows {
                let _ = writeln!(
                    out,
                    "  {:<14} peak {:.6} B  centre {:.3} tau0  carrier {:.3} B  phase {:.4} rad",
                    r.get(0).unwrap_or(""),
                    value(r, column(&h, "peak_rabi_B")),
                    value(r, column(&h, "center_tau0")),
                    value(r, column(&h, "carrier_B")),
                    value(r, column(&h, "phase_rad"))
                );
            }
        }
        Product::SingleRun => {
            let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json"))?)?;
            let _ = writeln!(
                out,
                "  max |<cos theta>| {} at {} tau0, revival {} tau0, norm drift {}",
                s["max_orientation"], s["t_max_tau0"], s["revival_tau0"], s["norm_drift"]
            );
            if let Some(p) = s["populations"].as_object() {
                for (k, v) in p {
                    let _ = writeln!(out, "  P({k}) = {:.4}", v.as_f64().unwrap_or(f64::NAN));
                }
            }
        }
        Product::OrientationVsBandwidth => {
            let (h, rows) = read_rows(&dir.join("bandwidth_summary.csv"))?;
            let (dw, mx, err) = (column(&h, "dw_over_g"), column(&h, "max_abs_cos_theta"), column(&h, "error"));
            for r in &rows {
                let e = err.and_then(|i| r.get(i)).unwrap_or("");
                let _ = writeln!(out, "  dw = {:.3} g  max {:.5}{}", value(r, dw), value(r, mx), if e.is_empty() { String::new() } else { format!("  ({e})") });
            }
        }
        Product::PopulationsVsBandwidth => {
            let (h, rows) = read_rows(&dir.join("populations_vs_bandwidth.csv"))?;
            let pops: Vec<(usize, &str)> = h.iter().enumerate().filter(|(_, n)| n.starts_with("P_")).collect();
            for r in &rows {
                let cells: Vec<String> = pops.iter().map(|(i, n)| format!("{}={:.4}", &n[2..], value(r, Some(*i)))).collect();
                let _ = writeln!(out, "  dw = {:.3} g  {}", value(r, column(&h, "dw_over_g")), cells.join(" "));
            }
        }
        Product::MaxOrientationPhaseMap => {
            let (h, rows) = read_rows(&dir.join("phase_cuts.csv"))?;
            let (ph, mx) = (column(&h, "phase_rad"), column(&h, "max_abs_cos_theta"));
            let mut along: Vec<String> = rows.iter().filter_map(|r| r.get(0).map(str::to_string)).collect();
            along.dedup();
            for a in along {
                let best = rows
                    .iter()
                    .filter(|r| r.get(0) == Some(a.as_str()))
                    .map(|r| (value(r, ph), value(r, mx)))
                    .filter(|p| p.1.is_finite())
                    .fold(None, |b: Option<(f64, f64)>, p| if b.is_some_and(|b| b.1 >= p.1) { b } else { Some(p) });
                if let Some((p, v)) = best {
                    let _ = writeln!(out, "  cut along {a}: argmax {:.4} pi, value {:.5}", p / std::f64::consts::PI, v);
                }
            }
            if dir.join("phase_map.csv").exists() {
                let (h, rows) = read_rows(&dir.join("phase_map.csv"))?;
                let mx = column(&h, "max_abs_cos_theta");
                let top = rows.iter().map(|r| value(r, mx)).filter(|v| v.is_finite()).fold(f64::NAN, f64::max);
                let _ = writeln!(out, "  full map: {} points, largest {:.5}", rows.len(), top);
            }
        }
    }
    Ok(())
}

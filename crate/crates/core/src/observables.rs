//! Orientation, dressed populations, interaction-picture phases, revival
//! period and post-pulse maxima.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};
use crate::orientation::wrap_phase;
use crate::pulse::PulseTrain;
use crate::rotor_cavity::{DressedLabel, DressedLevel, ProductBasis};
use crate::tdse::{dressed_cos_matrix, ActiveBasis, StateVector, Trajectory};
use crate::units::ROTATIONAL_PERIOD;

/// Coefficients below this magnitude have no reported phase.
pub const PHASE_FLOOR: f64 = 1e-8;
/// Post-pulse window starts this many widths after the last pulse centre.
pub const POST_PULSE_WIDTHS: f64 = 4.0;

/// cosθ ⊗ 1 as a list of upper-triangle entries for a given basis.
#[derive(Debug, Clone)]
pub struct OrientationOperator {
    entries: Vec<(usize, usize, f64)>,
    dim: usize,
}

impl OrientationOperator {
    pub fn for_basis(basis: ActiveBasis) -> Self {
        let mut entries = Vec::new();
        match basis {
            ActiveBasis::DressedFour(config) => {
                let m = dressed_cos_matrix(config);
                for (i, row) in m.iter().enumerate() {
                    for (j, v) in row.iter().enumerate().skip(i + 1) {
                        if *v != 0.0 {
                            entries.push((i, j, *v));
                        }
                    }
                }
            }
            ActiveBasis::Product { n_max } => {
                let cos = ProductBasis::new(n_max).expect("valid cutoff").cos_theta_full();
                for i in 0..cos.nrows() {
                    for j in (i + 1)..cos.ncols() {
                        if cos[(i, j)] != 0.0 {
                            entries.push((i, j, cos[(i, j)]));
                        }
                    }
                }
            }
        }
        Self { entries, dim: basis.dim() }
    }

    /// ⟨ψ|cosθ|ψ⟩ = 2 Σ_{i<j} c_ij Re(ψ_i* ψ_j), real by construction.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        debug_assert_eq!(psi.len(), self.dim);
        self.entries.iter().map(|&(i, j, v)| 2.0 * v * (psi[i].conj() * psi[j]).re).sum()
    }
}

pub fn orientation(state: &StateVector) -> f64 {
    OrientationOperator::for_basis(state.basis).expectation(&state.amplitudes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub post_pulse_start: f64,
}

impl OrientationSeries {
    pub fn from_trajectory(traj: &Trajectory, post_pulse_start: f64) -> Self {
        let op = OrientationOperator::for_basis(traj.basis);
        Self {
            times: traj.times.clone(),
            values: traj.states.iter().map(|s| op.expectation(s)).collect(),
            post_pulse_start,
        }
    }

    /// Indices of samples inside the post-pulse window.
    fn window(&self) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|t| *t < self.post_pulse_start);
        start..self.times.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Columns: t_tau0, cos_theta.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_tau0", "cos_theta"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([format!("{:.12e}", t / ROTATIONAL_PERIOD), format!("{:.15e}", v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// τ_last + 4τ.
pub fn post_pulse_start(train: &PulseTrain) -> f64 {
    train.last_center() + POST_PULSE_WIDTHS * train.max_width()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub time: f64,
    pub populations: BTreeMap<DressedLabel, f64>,
}

impl PopulationRecord {
    pub fn get(&self, label: DressedLabel) -> f64 {
        self.populations.get(&label).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.populations.values().sum()
    }
}

fn product_amplitudes(state: &StateVector, levels: &[DressedLevel]) -> Result<Vec<Complex64>> {
    let dim = levels.first().map_or(state.amplitudes.len(), |l| l.coefficients.len());
    state.to_product(dim / 3 - 1)
}

/// |⟨level|ψ⟩|² for each requested level.
pub fn dressed_populations(state: &StateVector, levels: &[DressedLevel]) -> Result<PopulationRecord> {
    let psi = product_amplitudes(state, levels)?;
    let populations = levels.iter().map(|l| (l.label, l.overlap(&psi).norm_sqr())).collect();
    Ok(PopulationRecord { time: state.time, populations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub time: f64,
    /// arg C_level − arg C_ground in [0, 2π).
    pub phases: BTreeMap<DressedLabel, f64>,
    /// Levels whose coefficient is below the phase floor.
    pub undefined: Vec<DressedLabel>,
}

/// Relative phases of C = ⟨level|ψ⟩·e^{iE t} with the ground coefficient as reference.
pub fn coefficient_phases(state: &StateVector, levels: &[DressedLevel]) -> Result<PhaseRecord> {
    let psi = product_amplitudes(state, levels)?;
    let t = state.time;
    let coeff = |l: &DressedLevel| l.overlap(&psi) * Complex64::from_polar(1.0, l.energy * t);
    let ground = levels
        .iter()
        .find(|l| l.label == DressedLabel::Ground)
        .map(coeff)
        .ok_or_else(|| PolaritonError::invalid("levels", "ground level required as phase reference"))?;
    let mut phases = BTreeMap::new();
    let mut undefined = Vec::new();
    for l in levels.iter().filter(|l| l.label != DressedLabel::Ground) {
        let c = coeff(l);
        if c.norm() < PHASE_FLOOR || ground.norm() < PHASE_FLOOR {
            undefined.push(l.label);
        } else {
            phases.insert(l.label, wrap_phase(c.arg() - ground.arg()));
        }
    }
    Ok(PhaseRecord { time: t, phases, undefined })
}

/// Vertex of the parabola through three equally spaced samples, as (offset in steps, value).
fn parabola_peak(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return (0.0, b);
    }
    let x = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (x, b - 0.25 * (a - c) * x)
}

/// Median spacing of the dominant-sign maxima that exceed 0.9 of the window's
/// largest |⟨cosθ⟩|.
///
/// The sign of the largest excursion selects which extremum recurs; taking
/// maxima of |⟨cosθ⟩| itself would also count the half-period recurrences of
/// opposite sign.
pub fn revival_period(series: &OrientationSeries) -> Result<f64> {
    let range = series.window();
    let t = &series.times[range.clone()];
    let v = &series.values[range];
    if v.len() < 3 {
        return Err(PolaritonError::InsufficientPeaks { found: 0 });
    }
    let vmax = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let sign = if vmax < 0.0 { -1.0 } else { 1.0 };
    let threshold = 0.9 * vmax.abs();
    let mut peaks = Vec::new();
    for i in 1..v.len() - 1 {
        let (a, b, c) = (sign * v[i - 1], sign * v[i], sign * v[i + 1]);
        if b >= a && b > c && b >= threshold {
            let (dx, _) = parabola_peak(a, b, c);
            let h = t[i + 1] - t[i];
            peaks.push(t[i] + dx * h);
        }
    }
    if peaks.len() < 2 {
        return Err(PolaritonError::InsufficientPeaks { found: peaks.len() });
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    Ok(if n % 2 == 1 { gaps[n / 2] } else { 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]) })
}

/// Largest |⟨cosθ⟩| in the post-pulse window and when it occurs (earliest on ties).
pub fn post_pulse_max(series: &OrientationSeries) -> Result<(f64, f64)> {
    let range = series.window();
    if range.is_empty() {
        return Err(PolaritonError::EmptyWindow);
    }
    let start = range.start;
    let mut best = start;
    for i in range.clone() {
        if series.values[i].abs() > series.values[best].abs() {
            best = i;
        }
    }
    let (value, time) = if best > start && best + 1 < range.end {
        let (a, b, c) = (series.values[best - 1].abs(), series.values[best].abs(), series.values[best + 1].abs());
        let (dx, peak) = parabola_peak(a, b, c);
        let h = series.times[best + 1] - series.times[best];
        (peak.max(b), series.times[best] + dx * h)
    } else {
        (series.values[best].abs(), series.times[best])
    };
    Ok((value, time))
}

use serde::Serialize;

use crate::error::Result;
use crate::magnus::{magnus_state_for_train, train_areas, FourStateAmplitudes};
use crate::observables::{
    coefficient_phases, dressed_populations, post_pulse_max, post_pulse_start, revival_period, OrientationSeries,
    PhaseRecord, PopulationRecord,
};
use crate::pulse::{design_train, DesignedTrain, PhaseChoice};
use crate::rotor_cavity::{find_level, DressedLabel, DressedLevel};
use crate::tdse::{propagate, DriveModel, Trajectory};
use crate::units::tau0_to_internal_time;

use super::config::ExperimentConfig;

/// Designs the train for one bandwidth; `phases` overrides the configured carriers.
pub fn design(cfg: &ExperimentConfig, dw_over_g: f64, phases: Option<[f64; 3]>) -> Result<DesignedTrain> {
    let choice = match phases.or(cfg.pulses.phases_rad) {
        Some(p) => PhaseChoice::Carrier(p),
        None => PhaseChoice::Designed,
    };
    design_train(&cfg.cavity_spec(), cfg.bandwidth(dw_over_g), &choice, cfg.delays(), cfg.pulses.delay_policy)
}

/// Design products that need no propagation.
#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub designed: DesignedTrain,
    /// Numerical areas at the carriers, train order.
    pub numeric_areas: [num_complex::Complex64; 3],
    pub magnus_state: FourStateAmplitudes,
}

pub fn design_report(cfg: &ExperimentConfig) -> Result<DesignReport> {
    let designed = design(cfg, cfg.pulses.dw_over_g, None)?;
    let numeric_areas = train_areas(&designed.train)?;
    let magnus_state = magnus_state_for_train(&designed.train)?;
    Ok(DesignReport { designed, numeric_areas, magnus_state })
}

/// Everything measured on one propagated point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub designed: DesignedTrain,
    pub trajectory: Trajectory,
    pub series: OrientationSeries,
    /// Post-pulse max |⟨cosθ⟩| and its time, internal units.
    pub max: (f64, f64),
    pub revival: Option<f64>,
    pub populations: PopulationRecord,
    pub phases: PhaseRecord,
}

/// Designs, propagates from the ground state across the window, and measures.
pub fn run_point(cfg: &ExperimentConfig, model: &DriveModel, dw_over_g: f64, phases: Option<[f64; 3]>) -> Result<PointOutcome> {
    let designed = design(cfg, dw_over_g, phases)?;
    let train = &designed.train;
    let window = match cfg.numerics.window_tau0 {
        Some([a, b]) => (tau0_to_internal_time(a), tau0_to_internal_time(b)),
        None => DriveModel::default_window(train),
    };
    let dt = cfg.numerics.dt_internal.unwrap_or_else(|| model.default_dt(train));
    let trajectory = propagate(model, train, &model.ground_state(window.0), window, dt)?;
    let series = OrientationSeries::from_trajectory(&trajectory, post_pulse_start(train));
    let max = post_pulse_max(&series)?;
    let revival = revival_period(&series).ok();
    let levels = report_levels(cfg, model)?;
    let last = trajectory.final_state();
    let populations = dressed_populations(&last, &levels)?;
    let phases = coefficient_phases(&last, &levels)?;
    Ok(PointOutcome { designed, trajectory, series, max, revival, populations, phases })
}

/// Requested population levels that the model resolves, ground first.
fn report_levels(cfg: &ExperimentConfig, model: &DriveModel) -> Result<Vec<DressedLevel>> {
    let mut labels = cfg.population_levels()?;
    if !labels.contains(&DressedLabel::Ground) {
        labels.push(DressedLabel::Ground);
    }
    labels.sort();
    Ok(labels.into_iter().filter_map(|l| find_level(model.levels(), l).cloned()).collect())
}

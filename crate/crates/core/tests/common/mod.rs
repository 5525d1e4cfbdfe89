#![allow(dead_code)]

use num_complex::Complex64;
use polariton::magnus::magnus_state_for_train;
use polariton::pulse::{design_train, DelayPolicy, Delays, PhaseChoice, PulseTrain};
use polariton::rotor_cavity::{CavityCoupling, CavitySpec, Configuration};
use polariton::tdse::{propagate_final, DriveKind, DriveModel, StateVector};

pub const G: f64 = 0.2;

pub fn cavity(config: Configuration) -> CavitySpec {
    CavitySpec::new(config, G).unwrap()
}

pub fn train(config: Configuration, dw_over_g: f64, policy: DelayPolicy) -> PulseTrain {
    let cav = cavity(config);
    design_train(&cav, dw_over_g * G, &PhaseChoice::Designed, Delays::standard(config), policy).unwrap().train
}

pub fn model(kind: DriveKind, config: Configuration, n_max: usize) -> DriveModel {
    DriveModel::new(kind, cavity(config), n_max, CavityCoupling::RotatingWave).unwrap()
}

/// Target-level coefficients with the free phases e^{-iEt} removed.
pub fn interaction_amplitudes(model: &DriveModel, state: &StateVector) -> [Complex64; 4] {
    let idx = polariton::tdse::target_indices(model);
    let levels = state.basis.dim();
    assert_eq!(levels, 4, "four-level state expected");
    std::array::from_fn(|k| state.amplitudes[idx[k]] * Complex64::from_polar(1.0, model.levels()[k].energy * state.time))
}

/// Fidelity of PerTransition propagation against the first-order Magnus state.
pub fn magnus_fidelity(config: Configuration, dw_over_g: f64) -> f64 {
    let train = train(config, dw_over_g, DelayPolicy::Separated);
    let m = model(DriveKind::PerTransition, config, 3);
    let (t0, t1) = DriveModel::default_window(&train);
    let fin = propagate_final(&m, &train, &m.ground_state(t0), (t0, t1), m.default_dt(&train)).unwrap();
    magnus_state_for_train(&train).unwrap().fidelity(&interaction_amplitudes(&m, &fin))
}

mod common;

use common::{magnus_fidelity, model, train};
use num_complex::Complex64;
use polariton::observables::{dressed_populations, orientation, OrientationOperator};
use polariton::pulse::DelayPolicy;
use polariton::rotor_cavity::{Configuration, DressedLabel};
use polariton::tdse::{
    convergence_probe, propagate, propagate_final, ActiveBasis, DriveKind, DriveModel, StateVector,
};

const CONFIGS: [Configuration; 2] = [Configuration::Fundamental, Configuration::SecondHarmonic];

#[test]
fn magnus_oracle_agrees_at_narrow_band() {
    for c in CONFIGS {
        let f = magnus_fidelity(c, 0.05);
        assert!(f >= 0.995, "{c:?}: fidelity {f}");
    }
}

#[test]
fn probe_accepts_fine_enough_step() {
    let t = train(Configuration::Fundamental, 0.1, DelayPolicy::AsGiven);
    let m = model(DriveKind::FullProduct, Configuration::Fundamental, 3);
    let span = DriveModel::default_window(&t);
    let dt = convergence_probe(&m, &t, &m.ground_state(span.0), span).unwrap();
    assert!(dt <= 0.01, "accepted dt {dt}");
}

#[test]
fn photon_cutoff_is_converged() {
    for c in CONFIGS {
        let t = train(c, 0.1, DelayPolicy::AsGiven);
        let span = DriveModel::default_window(&t);
        let last = |n_max| {
            let m = model(DriveKind::FullProduct, c, n_max);
            let fin = propagate_final(&m, &t, &m.ground_state(span.0), span, m.default_dt(&t)).unwrap();
            orientation(&fin)
        };
        let (a, b) = (last(3), last(4));
        assert!((a - b).abs() < 1e-6, "{c:?}: {a} vs {b}");
    }
}

#[test]
fn narrow_band_runs_conserve_norm() {
    for c in CONFIGS {
        for kind in [DriveKind::PerTransition, DriveKind::TotalFieldFourState, DriveKind::FullProduct] {
            let t = train(c, 0.1, DelayPolicy::AsGiven);
            let m = model(kind, c, 3);
            let span = DriveModel::default_window(&t);
            let traj = propagate(&m, &t, &m.ground_state(span.0), span, m.default_dt(&t)).unwrap();
            assert!(traj.max_norm_drift <= 1e-8, "{c:?} {kind:?}: {}", traj.max_norm_drift);
        }
    }
}

#[test]
fn orientation_is_basis_independent() {
    let amps = [0.5, 0.5, 0.5, 0.5].map(|a| Complex64::new(a, 0.0));
    let mut amps = amps.to_vec();
    amps[2] *= Complex64::from_polar(1.0, 0.7);
    for c in CONFIGS {
        let four = StateVector::new(ActiveBasis::DressedFour(c), 0.0, amps.clone()).unwrap();
        let lifted = four.to_product(3).unwrap();
        let product = OrientationOperator::for_basis(ActiveBasis::Product { n_max: 3 }).expectation(&lifted);
        assert!((orientation(&four) - product).abs() < 1e-12, "{c:?}");
    }
}

/// Target-level population differences between the full product model and
/// the summed-field four-level model, against the population that left the
/// four levels by the end of the run.
#[test]
fn four_level_model_within_leakage_bound() {
    for c in CONFIGS {
        let t = train(c, 0.1, DelayPolicy::AsGiven);
        let span = DriveModel::default_window(&t);
        let full = model(DriveKind::FullProduct, c, 3);
        let four = model(DriveKind::TotalFieldFourState, c, 3);
        let a = propagate_final(&full, &t, &full.ground_state(span.0), span, full.default_dt(&t)).unwrap();
        let b = propagate_final(&four, &t, &four.ground_state(span.0), span, four.default_dt(&t)).unwrap();
        let targets: Vec<DressedLabel> = c.target_levels().to_vec();
        let pa = dressed_populations(&a, full.levels()).unwrap();
        let pb = dressed_populations(&b, four.levels()).unwrap();
        let leaked = 1.0 - targets.iter().map(|l| pa.get(*l)).sum::<f64>();
        let diff = targets.iter().map(|l| (pa.get(*l) - pb.get(*l)).abs()).fold(0.0, f64::max);
        assert!(diff <= leaked, "{c:?}: population difference {diff:.3e} exceeds leaked population {leaked:.3e}");
    }
}

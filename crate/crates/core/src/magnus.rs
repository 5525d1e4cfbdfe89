//! First-order Magnus wavefunctions of the two excitation schemes, written in
//! terms of complex pulse areas.
//!
//! The closed forms carry complex-conjugated areas, `i θ*`. A pulse train's
//! numerical rotating-wave areas θ = ∫Ω e^{iωt} enter the interaction picture
//! as `i θ`, so [`magnus_state_for_train`] passes `θ*` to the closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PolaritonError, Result};
use crate::pulse::{numeric_complex_area, PulseTrain, TransitionLabel, ENVELOPE_CUTOFF};
use crate::rotor_cavity::{Configuration, DressedLabel};

const I: Complex64 = Complex64::new(0.0, 1.0);
const SERIES_BELOW: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourStateAmplitudes {
    pub configuration: Configuration,
    pub levels: [DressedLabel; 4],
    pub coefficients: [Complex64; 4],
}

impl FourStateAmplitudes {
    pub fn get(&self, label: DressedLabel) -> Complex64 {
        self.levels.iter().position(|l| *l == label).map_or(Complex64::default(), |i| self.coefficients[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// |⟨self|other⟩|² over the four levels.
    pub fn fidelity(&self, other: &[Complex64; 4]) -> f64 {
        self.coefficients.iter().zip(other).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
    }
}

/// sin(x)/x with its removable singularity.
fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_BELOW {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// V then two-level step; levels [|0;0⟩, |−;0⟩, |+;0⟩, |2;0⟩].
pub fn magnus_state_fundamental(theta_plus: Complex64, theta_minus: Complex64, theta_1: Complex64) -> FourStateAmplitudes {
    let theta_0 = theta_plus.norm().hypot(theta_minus.norm());
    let s0 = sinc(theta_0);
    let t1 = theta_1.norm();
    let coefficients = [
        Complex64::new(theta_0.cos(), 0.0),
        I * theta_minus.conj() * s0,
        I * theta_plus.conj() * s0 * t1.cos(),
        I * theta_plus.conj() * s0 * I * theta_1.conj() * sinc(t1),
    ];
    FourStateAmplitudes { configuration: Configuration::Fundamental, levels: Configuration::Fundamental.target_levels(), coefficients }
}

/// Two-level step then V; levels [|0;0⟩, |1;0⟩, |+;0⟩, |−;0⟩].
pub fn magnus_state_second_harmonic(theta_0: Complex64, theta_plus: Complex64, theta_minus: Complex64) -> FourStateAmplitudes {
    let t0 = theta_0.norm();
    let theta_1 = theta_plus.norm().hypot(theta_minus.norm());
    let branch = I * theta_0.conj() * sinc(t0);
    let s1 = sinc(theta_1);
    let coefficients = [
        Complex64::new(t0.cos(), 0.0),
        branch * theta_1.cos(),
        branch * I * theta_plus.conj() * s1,
        branch * I * theta_minus.conj() * s1,
    ];
    FourStateAmplitudes {
        configuration: Configuration::SecondHarmonic,
        levels: Configuration::SecondHarmonic.target_levels(),
        coefficients,
    }
}

/// Numerical areas of a train's pulses over their full support, at the carriers.
pub fn train_areas(train: &PulseTrain) -> Result<[Complex64; 3]> {
    let labels = TransitionLabel::for_configuration(train.configuration);
    let mut out = [Complex64::default(); 3];
    for (slot, label) in out.iter_mut().zip(labels) {
        let p = train
            .pulse(label)
            .ok_or_else(|| PolaritonError::invalid("train", format!("missing pulse for {label}")))?;
        let reach = ENVELOPE_CUTOFF * p.width;
        *slot = numeric_complex_area(train, label, p.carrier_frequency, p.center_time - reach, p.center_time + reach)?.area;
    }
    Ok(out)
}

/// First-order Magnus state reached by a designed train, in interaction picture.
pub fn magnus_state_for_train(train: &PulseTrain) -> Result<FourStateAmplitudes> {
    let [a, b, c] = train_areas(train)?.map(|z| z.conj());
    Ok(match train.configuration {
        Configuration::Fundamental => magnus_state_fundamental(a, b, c),
        Configuration::SecondHarmonic => magnus_state_second_harmonic(a, b, c),
    })
}

/// The full-transfer area of a two-level step.
pub const TRANSFER_AREA: f64 = PI / 2.0;

//! Internal unit system and the handful of physical conversions needed at the
//! I/O boundary.
//!
//! Everything inside the crate runs with ħ = 1, energies in units of the
//! rotational constant B and times in units of 1/B. One rotational period
//! τ₀ = π/B is therefore exactly `PI` internal time units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};

/// 2πc in rad·ps⁻¹ per cm⁻¹.
pub const WAVENUMBER_TO_RAD_PER_PS: f64 = 2.0 * PI * 29.979_245_8e-3;

/// Rotational period τ₀ in internal time units.
pub const ROTATIONAL_PERIOD: f64 = PI;

/// hc in J·cm.
const HC_J_CM: f64 = 1.986_445_857e-23;
/// One Debye in C·m.
const DEBYE_C_M: f64 = 3.335_640_952e-30;

/// Fixed convention record: ħ = 1, energy unit B, time unit 1/B.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UnitSystem;

impl UnitSystem {
    pub const HBAR: f64 = 1.0;
    pub const ENERGY_UNIT: &'static str = "B";
    pub const TIME_UNIT: &'static str = "1/B";

    pub fn rotational_period(&self) -> f64 {
        ROTATIONAL_PERIOD
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    /// Rotational constant in cm⁻¹.
    #[serde(rename = "B_cm1")]
    pub rotational_constant_b: f64,
    /// Permanent dipole moment in Debye.
    pub mu_debye: f64,
}

impl MoleculeSpec {
    pub fn new(rotational_constant_b: f64, mu_debye: f64) -> Result<Self> {
        let spec = Self { rotational_constant_b, mu_debye };
        spec.validate()?;
        Ok(spec)
    }

    /// Carbonyl sulfide, read from the bundled preset file.
    pub fn ocs() -> Self {
        Preset::ocs().molecule
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rotational_constant_b.is_finite() && self.rotational_constant_b > 0.0) {
            return Err(PolaritonError::invalid("B_cm1", "must be finite and > 0"));
        }
        if !(self.mu_debye.is_finite() && self.mu_debye > 0.0) {
            return Err(PolaritonError::invalid("mu_debye", "must be finite and > 0"));
        }
        Ok(())
    }

    /// B as an angular frequency in rad/ps.
    pub fn b_rad_per_ps(&self) -> f64 {
        wavenumber_to_angular_frequency(self.rotational_constant_b)
    }

    /// τ₀ = π/B in picoseconds.
    pub fn rotational_period_ps(&self) -> f64 {
        internal_time_to_ps(ROTATIONAL_PERIOD, self)
    }
}

pub fn wavenumber_to_angular_frequency(value_cm1: f64) -> f64 {
    value_cm1 * WAVENUMBER_TO_RAD_PER_PS
}

pub fn internal_time_to_ps(t_internal: f64, molecule: &MoleculeSpec) -> f64 {
    t_internal / molecule.b_rad_per_ps()
}

pub fn ps_to_internal_time(t_ps: f64, molecule: &MoleculeSpec) -> f64 {
    t_ps * molecule.b_rad_per_ps()
}

pub fn internal_time_to_tau0(t_internal: f64) -> f64 {
    t_internal / ROTATIONAL_PERIOD
}

pub fn tau0_to_internal_time(t_tau0: f64) -> f64 {
    t_tau0 * ROTATIONAL_PERIOD
}

/// Converts a field expressed as μE in units of B into a field strength in kV/cm.
pub fn rabi_to_field_kv_per_cm(rabi_over_b: f64, molecule: &MoleculeSpec) -> f64 {
    let b_joule = molecule.rotational_constant_b * HC_J_CM;
    let mu_cm = molecule.mu_debye * DEBYE_C_M;
    rabi_over_b * b_joule / mu_cm / 1.0e5
}

/// Machine-readable molecule/cavity preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub molecule: MoleculeSpec,
    pub g_over_b: f64,
}

const OCS_PRESET: &str = include_str!("../presets/ocs.toml");

impl Preset {
    pub fn ocs() -> Self {
        toml::from_str(OCS_PRESET).expect("bundled OCS preset is valid TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let preset: Self = toml::from_str(text).map_err(|e| PolaritonError::Config(e.to_string()))?;
        preset.molecule.validate()?;
        Ok(preset)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("preset serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_wavenumber_is_zero_frequency() {
        assert_eq!(wavenumber_to_angular_frequency(0.0), 0.0);
    }

    #[test]
    fn unit_wavenumber_matches_two_pi_c() {
        assert_relative_eq!(wavenumber_to_angular_frequency(1.0), 0.188_365_156_73, epsilon = 1e-10);
    }

    #[test]
    fn ocs_rotational_constant_and_period() {
        let w = wavenumber_to_angular_frequency(0.20286);
        assert!((w - 0.0382118).abs() < 1e-7, "{w}");
        let ocs = MoleculeSpec::ocs();
        let tau0 = ocs.rotational_period_ps();
        assert!((82.1..=82.3).contains(&tau0), "{tau0}");
        assert_eq!(internal_time_to_ps(0.0, &ocs), 0.0);
        assert_relative_eq!(internal_time_to_ps(10.0 * PI, &ocs), 10.0 * tau0, max_relative = 1e-14);
        assert!((internal_time_to_ps(10.0 * PI, &ocs) - 822.0).abs() < 1.0);
    }

    #[test]
    fn preset_round_trips_and_carries_coupling() {
        let p = Preset::ocs();
        assert_eq!(p.molecule.rotational_constant_b, 0.20286);
        assert_eq!(p.molecule.mu_debye, 0.715);
        assert_eq!(p.g_over_b, 0.2);
        assert_eq!(Preset::from_toml(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn invalid_molecules_rejected() {
        assert!(MoleculeSpec::new(0.0, 1.0).is_err());
        assert!(MoleculeSpec::new(0.2, -1.0).is_err());
        assert!(MoleculeSpec::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn field_conversion_is_linear_and_positive() {
        let ocs = MoleculeSpec::ocs();
        let one = rabi_to_field_kv_per_cm(1.0, &ocs);
        assert!(one > 0.0);
        assert_relative_eq!(rabi_to_field_kv_per_cm(0.5, &ocs), 0.5 * one);
    }

    proptest::proptest! {
        #[test]
        fn time_conversion_round_trip(t in -1.0e4f64..1.0e4, b in 0.01f64..10.0) {
            let m = MoleculeSpec::new(b, 1.0).unwrap();
            let back = ps_to_internal_time(internal_time_to_ps(t, &m), &m);
            proptest::prop_assert!((back - t).abs() <= 1e-12 * t.abs().max(1e-300));
        }
    }
}

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};
use crate::pulse::{DelayPolicy, Delays};
use crate::rotor_cavity::{CavityCoupling, CavitySpec, Configuration, DressedLabel};
use crate::tdse::{DriveKind, DriveModel};
use crate::units::MoleculeSpec;

/// Phase offset that cancels the second-stage delay in the second-harmonic phase map.
pub const DEFAULT_PHI_TAU: f64 = 0.1905 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "MoleculeSpec::ocs")]
    pub molecule: MoleculeSpec,
    pub cavity: CavitySection,
    #[serde(default)]
    pub pulses: PulseSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub configuration: Configuration,
    #[serde(rename = "g_over_B", default = "default_g")]
    pub g_over_b: f64,
    #[serde(default)]
    pub coupling: CavityCoupling,
}

fn default_g() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default = "default_dw")]
    pub dw_over_g: f64,
    /// Carrier phases in train order; designed from the optimal target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_rad: Option<[f64; 3]>,
    /// First and second stage centres; the standard delays when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_tau0: Option<[f64; 2]>,
    #[serde(default)]
    pub delay_policy: DelayPolicy,
}

fn default_dw() -> f64 {
    0.1
}

impl Default for PulseSection {
    fn default() -> Self {
        Self { dw_over_g: default_dw(), phases_rad: None, delays_tau0: None, delay_policy: DelayPolicy::AsGiven }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Fixed step; the stability bound of each run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_internal: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Absolute simulation window; the model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_tau0: Option<[f64; 2]>,
    #[serde(default)]
    pub model: DriveKind,
}

fn default_n_max() -> usize {
    crate::rotor_cavity::DEFAULT_N_MAX
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self { dt_internal: None, n_max: default_n_max(), window_tau0: None, model: DriveKind::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Bandwidth grid in units of g; 0.05, 0.10, ..., 1.00 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw_over_g: Option<Vec<f64>>,
    /// Level keys for the population sweep, e.g. "plus_1".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    #[serde(default = "default_map_points")]
    pub phase_points: usize,
    #[serde(default = "default_cut_points")]
    pub cut_points: usize,
    /// Phase held fixed in the maps (φ₋,₀ or φ₁,₀).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_phase_rad: Option<f64>,
    /// Offset added to the Δφ₁,₋ axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_tau_rad: Option<f64>,
    /// Where the two cut lines cross the other axis: [b for the cut along a, a for the cut along b].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_values_rad: Option<[f64; 2]>,
}

fn default_map_points() -> usize {
    37
}

fn default_cut_points() -> usize {
    72
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            dw_over_g: None,
            levels: None,
            phase_points: default_map_points(),
            cut_points: default_cut_points(),
            fixed_phase_rad: None,
            phi_tau_rad: None,
            cut_values_rad: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs") }
    }
}

/// Which train slots the phase-map axes move, and how they are offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseAxes {
    pub a_name: &'static str,
    pub b_name: &'static str,
    pub a_slot: usize,
    pub b_slot: usize,
    pub fixed_slot: usize,
    pub fixed_value: f64,
    /// Added to axis a before it becomes a carrier phase.
    pub a_offset: f64,
}

impl PhaseAxes {
    /// Carrier phases in train order for the map point (a, b).
    pub fn carriers(&self, a: f64, b: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        out[self.a_slot] = a + self.a_offset;
        out[self.b_slot] = b;
        out[self.fixed_slot] = self.fixed_value;
        out
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PolaritonError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Defaults for one configuration, with OCS and g = 0.2B.
    pub fn standard(configuration: Configuration) -> Self {
        Self {
            molecule: MoleculeSpec::ocs(),
            cavity: CavitySection { configuration, g_over_b: default_g(), coupling: CavityCoupling::default() },
            pulses: PulseSection::default(),
            numerics: NumericsSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.molecule.validate()?;
        CavitySpec::new(self.cavity.configuration, self.cavity.g_over_b)?;
        check_bandwidth(self.pulses.dw_over_g)?;
        if let Some(p) = self.pulses.phases_rad {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(PolaritonError::invalid("pulses.phases_rad", "must be finite"));
            }
        }
        if let Some(d) = self.pulses.delays_tau0 {
            if d.iter().any(|x| !x.is_finite()) {
                return Err(PolaritonError::invalid("pulses.delays_tau0", "must be finite"));
            }
        }
        if let Some(dt) = self.numerics.dt_internal {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(PolaritonError::invalid("numerics.dt_internal", "must be finite and > 0"));
            }
        }
        let min_n = if self.cavity.coupling == CavityCoupling::Full { 2 } else { 1 };
        if self.numerics.n_max < min_n {
            return Err(PolaritonError::invalid("numerics.n_max", format!("must be at least {min_n}")));
        }
        if let Some([a, b]) = self.numerics.window_tau0 {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(PolaritonError::invalid("numerics.window_tau0", "needs start < end"));
            }
        }
        if let Some(grid) = &self.sweep.dw_over_g {
            if grid.is_empty() {
                return Err(PolaritonError::invalid("sweep.dw_over_g", "grid is empty"));
            }
            for &x in grid {
                check_bandwidth(x)?;
                if x > 1.0 {
                    return Err(PolaritonError::invalid("sweep.dw_over_g", "grid must lie within (0, 1]"));
                }
            }
        }
        if self.sweep.phase_points < 36 {
            return Err(PolaritonError::invalid("sweep.phase_points", "grid step must not exceed π/18"));
        }
        if self.sweep.cut_points == 0 {
            return Err(PolaritonError::invalid("sweep.cut_points", "must be positive"));
        }
        self.population_levels()?;
        Ok(())
    }

    pub fn cavity_spec(&self) -> CavitySpec {
        CavitySpec { configuration: self.cavity.configuration, coupling_g: self.cavity.g_over_b }
    }

    pub fn drive_model(&self) -> Result<DriveModel> {
        DriveModel::new(self.numerics.model, self.cavity_spec(), self.numerics.n_max, self.cavity.coupling)
    }

    pub fn delays(&self) -> Delays {
        match self.pulses.delays_tau0 {
            Some([a, b]) => Delays::from_tau0(a, b),
            None => Delays::standard(self.cavity.configuration),
        }
    }

    /// Bandwidth in units of B.
    pub fn bandwidth(&self, dw_over_g: f64) -> f64 {
        dw_over_g * self.cavity.g_over_b
    }

    pub fn bandwidth_grid(&self) -> Vec<f64> {
        match &self.sweep.dw_over_g {
            Some(g) => g.clone(),
            None => (1..=20).map(|k| k as f64 * 0.05).collect(),
        }
    }

    /// Levels reported by the population sweep: the targets plus the one-photon leakage states.
    pub fn population_levels(&self) -> Result<Vec<DressedLabel>> {
        if let Some(keys) = &self.sweep.levels {
            return keys
                .iter()
                .map(|k| DressedLabel::parse(k).ok_or_else(|| PolaritonError::invalid("sweep.levels", format!("unknown level {k:?}"))))
                .collect();
        }
        let mut out = self.cavity.configuration.target_levels().to_vec();
        out.extend([DressedLabel::Plus(1), DressedLabel::Minus(1)]);
        if self.cavity.configuration == Configuration::SecondHarmonic {
            out.push(DressedLabel::Direct { j: 0, n: 1 });
        }
        out.sort();
        Ok(out)
    }

    pub fn phase_axes(&self) -> PhaseAxes {
        match self.cavity.configuration {
            Configuration::Fundamental => PhaseAxes {
                a_name: "phi_plus_0",
                b_name: "phi_two_plus",
                a_slot: 0,
                b_slot: 2,
                fixed_slot: 1,
                fixed_value: self.sweep.fixed_phase_rad.unwrap_or(PI),
                a_offset: 0.0,
            },
            Configuration::SecondHarmonic => PhaseAxes {
                a_name: "delta_phi_one_minus",
                b_name: "phi_one_plus",
                a_slot: 2,
                b_slot: 1,
                fixed_slot: 0,
                fixed_value: self.sweep.fixed_phase_rad.unwrap_or(0.0),
                a_offset: self.sweep.phi_tau_rad.unwrap_or(DEFAULT_PHI_TAU),
            },
        }
    }

    /// [b held by the cut along a, a held by the cut along b].
    pub fn cut_values(&self) -> [f64; 2] {
        self.sweep.cut_values_rad.unwrap_or(match self.cavity.configuration {
            Configuration::Fundamental => [5.0 * PI / 9.0, 5.0 * PI / 9.0],
            Configuration::SecondHarmonic => [0.55 * PI, 0.35 * PI],
        })
    }
}

fn check_bandwidth(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(PolaritonError::invalid("dw_over_g", "bandwidth must be finite and > 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[cavity]
configuration = "fundamental"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg, ExperimentConfig::standard(Configuration::Fundamental));
        assert_eq!(cfg.bandwidth_grid().len(), 20);
        assert!((cfg.bandwidth(0.1) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::standard(Configuration::SecondHarmonic);
        cfg.pulses.phases_rad = Some([0.0, 1.0, 2.0]);
        cfg.numerics.dt_internal = Some(0.003);
        cfg.sweep.dw_over_g = Some(vec![0.1, 0.5]);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            "[cavity]\nconfiguration = \"fundamental\"\ng_over_B = 0.0\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[pulses]\ndw_over_g = -1.0\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[sweep]\ndw_over_g = []\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[sweep]\ndw_over_g = [1.5]\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[sweep]\nphase_points = 12\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[sweep]\nlevels = [\"nonsense\"]\n",
            "[cavity]\nconfiguration = \"fundamental\"\n[numerics]\nwindow_tau0 = [5.0, 1.0]\n",
            "[cavity]\nconfiguration = \"third\"\n",
            "[cavity]\nconfiguration = \"fundamental\"\nextra = 1\n",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn phase_axes_place_slots() {
        let f = ExperimentConfig::standard(Configuration::Fundamental).phase_axes();
        assert_eq!(f.carriers(0.1, 0.2), [0.1, PI, 0.2]);
        let s = ExperimentConfig::standard(Configuration::SecondHarmonic).phase_axes();
        let c = s.carriers(0.1, 0.2);
        assert!((c[2] - 0.1 - DEFAULT_PHI_TAU).abs() < 1e-15);
        assert_eq!((c[0], c[1]), (0.0, 0.2));
    }

    #[test]
    fn default_population_levels_include_leakage() {
        let f = ExperimentConfig::standard(Configuration::Fundamental).population_levels().unwrap();
        assert!(f.contains(&DressedLabel::Plus(1)) && f.contains(&DressedLabel::Direct { j: 2, n: 0 }));
        let s = ExperimentConfig::standard(Configuration::SecondHarmonic).population_levels().unwrap();
        assert!(s.contains(&DressedLabel::Direct { j: 0, n: 1 }));
    }
}

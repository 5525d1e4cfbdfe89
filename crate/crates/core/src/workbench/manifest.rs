use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PolaritonError, Result};
use crate::observables::POST_PULSE_WIDTHS;
use crate::pulse::ENVELOPE_CUTOFF;
use crate::tdse::{DEFAULT_SAMPLE_SPACING, NORM_ABORT, STEP_BOUND};

use super::config::ExperimentConfig;

/// Kinds of output a run can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Product {
    DesignedTrain,
    SingleRun,
    OrientationVsBandwidth,
    PopulationsVsBandwidth,
    MaxOrientationPhaseMap,
}

impl Product {
    pub fn name(self) -> &'static str {
        match self {
            Self::DesignedTrain => "designed-train",
            Self::SingleRun => "single-run",
            Self::OrientationVsBandwidth => "orientation-vs-bandwidth",
            Self::PopulationsVsBandwidth => "populations-vs-bandwidth",
            Self::MaxOrientationPhaseMap => "max-orientation-phase-map",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::DesignedTrain => "three-pulse train with areas, carrier phases and the first-order Magnus state",
            Self::SingleRun => "orientation, populations and amplitudes of one propagated train",
            Self::OrientationVsBandwidth => "time-resolved orientation and its post-pulse maximum versus pulse bandwidth",
            Self::PopulationsVsBandwidth => "final dressed populations and relative phases versus pulse bandwidth",
            Self::MaxOrientationPhaseMap => "post-pulse maximum orientation over two carrier phases, with two cut lines",
        }
    }

    pub fn manifest_file(self) -> String {
        format!("{}.manifest.json", self.name())
    }

    pub fn all() -> [Product; 5] {
        [
            Self::DesignedTrain,
            Self::SingleRun,
            Self::OrientationVsBandwidth,
            Self::PopulationsVsBandwidth,
            Self::MaxOrientationPhaseMap,
        ]
    }
}

/// Fixed numerical conventions, recorded so a manifest is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub step_bound: f64,
    pub norm_abort: f64,
    pub sample_spacing: f64,
    pub post_pulse_widths: f64,
    pub envelope_cutoff_widths: f64,
    pub dt_rule: String,
    pub window_rule: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            step_bound: STEP_BOUND,
            norm_abort: NORM_ABORT,
            sample_spacing: DEFAULT_SAMPLE_SPACING,
            post_pulse_widths: POST_PULSE_WIDTHS,
            envelope_cutoff_widths: ENVELOPE_CUTOFF,
            dt_rule: "numerics.dt_internal if set, else step_bound / omega_max per point".into(),
            window_rule: "numerics.window_tau0 if set, else [first - 6 width, last + 6 width + 10 tau0]".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub product: Product,
    pub description: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub conventions: Conventions,
    pub grids: BTreeMap<String, Vec<f64>>,
    pub outputs: Vec<String>,
    /// SHA-256 of the canonical JSON of every other field.
    pub hash: String,
}

impl RunManifest {
    pub fn new(product: Product, config: &ExperimentConfig, grids: BTreeMap<String, Vec<f64>>, outputs: Vec<String>) -> Self {
        let mut m = Self {
            product,
            description: product.description().into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            conventions: Conventions::default(),
            grids,
            outputs,
            hash: String::new(),
        };
        m.hash = m.content_hash();
        m
    }

    pub fn content_hash(&self) -> String {
        let mut bare = self.clone();
        bare.hash.clear();
        let bytes = serde_json::to_vec(&bare).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn is_intact(&self) -> bool {
        self.content_hash() == self.hash
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(self.product.manifest_file()), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if !m.is_intact() {
            return Err(PolaritonError::Config(format!("{}: manifest hash does not match its content", path.display())));
        }
        Ok(m)
    }
}

/// Manifests found in a run directory, in product order.
pub fn find_manifests(dir: &Path) -> Result<Vec<RunManifest>> {
    let mut out = Vec::new();
    for p in Product::all() {
        let path = dir.join(p.manifest_file());
        if path.exists() {
            out.push(RunManifest::read(&path)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotor_cavity::Configuration;

    fn manifest(cfg: &ExperimentConfig) -> RunManifest {
        RunManifest::new(Product::SingleRun, cfg, BTreeMap::from([("dw_over_g".into(), vec![0.1])]), vec!["a.csv".into()])
    }

    #[test]
    fn hash_is_deterministic() {
        let cfg = ExperimentConfig::standard(Configuration::Fundamental);
        assert_eq!(manifest(&cfg).hash, manifest(&cfg).hash);
        assert_eq!(manifest(&cfg).hash.len(), 64);
    }

    #[test]
    fn changed_dt_changes_hash() {
        let a = ExperimentConfig::standard(Configuration::Fundamental);
        let mut b = a.clone();
        b.numerics.dt_internal = Some(0.001);
        assert_ne!(manifest(&a).hash, manifest(&b).hash);
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::standard(Configuration::SecondHarmonic);
        let m = manifest(&cfg);
        m.write(dir.path()).unwrap();
        assert_eq!(find_manifests(dir.path()).unwrap(), vec![m.clone()]);
        let path = dir.path().join(Product::SingleRun.manifest_file());
        let text = std::fs::read_to_string(&path).unwrap().replace("a.csv", "b.csv");
        std::fs::write(&path, text).unwrap();
        assert!(RunManifest::read(&path).is_err());
    }
}

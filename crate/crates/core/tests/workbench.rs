use std::path::{Path, PathBuf};

use polariton::rotor_cavity::{Configuration, DressedLabel};
use polariton::tdse::DriveKind;
use polariton::workbench::output::{replay, write_bandwidth, write_design, write_single_run};
use polariton::workbench::{bandwidth_sweep, population_phase_vs_bandwidth, ExperimentConfig};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Cheap four-level runs on a short grid.
fn quick(config: Configuration) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::standard(config);
    cfg.numerics.model = DriveKind::PerTransition;
    cfg.pulses.dw_over_g = 0.5;
    cfg.sweep.dw_over_g = Some(vec![0.5, 1.0]);
    cfg
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_configs_load() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn malformed_configs_rejected() {
    let base = "[cavity]\nconfiguration = \"fundamental\"\n";
    assert!(ExperimentConfig::from_toml(base).is_ok());
    assert!(ExperimentConfig::from_toml(&format!("{base}g_over_b = 0.2\n")).is_err());
    assert!(ExperimentConfig::from_toml(&format!("{base}[pulses]\ndw_over_g = -1.0\n")).is_err());
    assert!(ExperimentConfig::from_toml(&format!("{base}[sweep]\ndw_over_g = [0.5, 2.0]\n")).is_err());
    assert!(ExperimentConfig::from_toml(&format!("{base}[sweep]\nphase_points = 12\n")).is_err());
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(Configuration::SecondHarmonic);
    write_design(&cfg, dir.path()).unwrap();
    write_single_run(&cfg, dir.path()).unwrap();
    write_bandwidth(&cfg, dir.path()).unwrap();
    let checks = replay(dir.path(), &dir.path().join("again")).unwrap();
    assert!(checks.len() >= 10, "{}", checks.len());
    for c in &checks {
        assert!(c.identical, "{} {}", c.product.name(), c.file);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = quick(Configuration::Fundamental);
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| write_bandwidth(&cfg, dir.path())).unwrap();
        files(dir.path())
    };
    let serial = run(1);
    assert!(!serial.is_empty());
    assert_eq!(serial, run(3));
}

#[test]
fn broad_band_lowers_fundamental_maximum() {
    let cfg = ExperimentConfig::standard(Configuration::Fundamental);
    let res = bandwidth_sweep(&cfg, &[0.1, 0.5]).unwrap();
    assert_eq!(res.failures(), 0);
    let (narrow, broad) = (res.rows[0].max_orientation, res.rows[1].max_orientation);
    assert!(narrow >= 0.770, "{narrow}");
    assert!(broad < narrow, "{broad} vs {narrow}");
    assert_eq!(res.series.len(), 2);
}

#[test]
fn fundamental_populations_shift_with_bandwidth() {
    let cfg = ExperimentConfig::standard(Configuration::Fundamental);
    let res = population_phase_vs_bandwidth(&cfg, &[0.1, 1.0]).unwrap();
    let p = |row: usize, l: DressedLabel| res.rows[row].populations[&l.key()];
    assert!(p(0, DressedLabel::Plus(1)) + p(0, DressedLabel::Minus(1)) < 0.01);
    assert!(p(1, DressedLabel::Minus(0)) > p(0, DressedLabel::Minus(0)));
    assert!(p(1, DressedLabel::Plus(0)) < p(0, DressedLabel::Plus(0)));
    let two = DressedLabel::Direct { j: 2, n: 0 };
    assert!(p(1, two) < p(0, two));
}

#[test]
fn second_harmonic_stays_in_target_levels() {
    let cfg = ExperimentConfig::standard(Configuration::SecondHarmonic);
    let res = population_phase_vs_bandwidth(&cfg, &[1.0]).unwrap();
    let row = &res.rows[0];
    let total: f64 = Configuration::SecondHarmonic.target_levels().iter().map(|l| row.populations[&l.key()]).sum();
    assert!(total >= 0.99, "{total}");
    assert!(row.populations.contains_key("direct_0_1"));
}

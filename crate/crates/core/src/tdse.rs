//! Fixed-step RK4 propagation of the driven rotor–cavity system.
//!
//! Three drive models share one sparse representation: a static part plus
//! channels, each channel being a fixed coupling pattern scaled by a linear
//! combination of the pulses' Rabi waveforms.
//!
//! RK4 runs in the interaction picture of the static Hamiltonian, which is
//! diagonalized once per propagation. Field-free stretches are then exact and
//! the step error comes from the drive alone.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};
use crate::orientation::transition_moments;
use crate::pulse::{PulseTrain, TransitionLabel};
use crate::rotor_cavity::{
    bare_hamiltonian, dressed_levels_analytic, dressed_levels_numeric, CavityCoupling, CavitySpec, Configuration,
    DressedLabel, DressedLevel, ProductBasis,
};
use crate::units::ROTATIONAL_PERIOD;

/// Largest accepted ω_max·dt.
pub const STEP_BOUND: f64 = 0.02;
/// Norm drift at which propagation aborts.
pub const NORM_ABORT: f64 = 1e-6;
/// Default snapshot spacing in internal time units.
pub const DEFAULT_SAMPLE_SPACING: f64 = 0.05;
/// Eigenbasis coupling entries below this are dropped.
const SPARSE_CUT: f64 = 1e-14;

/// Per-pulse weights and the sparse eigenbasis couplings they multiply.
type EigenChannel = (Vec<f64>, Vec<(usize, usize, f64)>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveKind {
    /// Each pulse drives only its own transition among the four target levels.
    PerTransition,
    /// The summed field drives every listed transition among the four target levels.
    TotalFieldFourState,
    /// Bare Hamiltonian on the product basis plus `−field·cosθ ⊗ 1`.
    #[default]
    FullProduct,
}

/// Basis a state vector is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActiveBasis {
    /// The four target dressed levels in canonical order.
    DressedFour(Configuration),
    Product { n_max: usize },
}

impl ActiveBasis {
    pub fn dim(&self) -> usize {
        match *self {
            Self::DressedFour(_) => 4,
            Self::Product { n_max } => 3 * (n_max + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub basis: ActiveBasis,
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: ActiveBasis, time: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(PolaritonError::invalid("amplitudes", format!("expected {} entries", basis.dim())));
        }
        Ok(Self { basis, time, amplitudes })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Amplitudes over the product basis with cutoff `n_max`.
    pub fn to_product(&self, n_max: usize) -> Result<Vec<Complex64>> {
        match self.basis {
            ActiveBasis::Product { n_max: own } => {
                if own > n_max {
                    return Err(PolaritonError::invalid("n_max", "cannot shrink a product-basis state"));
                }
                let from = ProductBasis::new(own)?;
                let to = ProductBasis::new(n_max)?;
                let mut out = vec![Complex64::default(); to.dim()];
                for (i, j, n) in from.iter() {
                    out[to.index(j, n)] = self.amplitudes[i];
                }
                Ok(out)
            }
            ActiveBasis::DressedFour(config) => {
                let cavity = CavitySpec { configuration: config, coupling_g: 1.0 };
                let levels = dressed_levels_analytic(&cavity, n_max)?;
                let mut out = vec![Complex64::default(); 3 * (n_max + 1)];
                for (label, amp) in config.target_levels().iter().zip(&self.amplitudes) {
                    let level = levels.iter().find(|l| l.label == *label).expect("target level");
                    for (o, c) in out.iter_mut().zip(&level.coefficients) {
                        *o += amp * c;
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        Self { amplitudes: self.amplitudes.iter().map(|a| a * r).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone)]
struct Channel {
    /// Weight of each pulse's Rabi waveform in this channel's scalar.
    weights: Vec<f64>,
    /// Upper-triangle couplings (i < j); mirrored on application.
    couplings: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct DriveModel {
    pub kind: DriveKind,
    pub cavity: CavitySpec,
    pub basis: ActiveBasis,
    pub coupling: CavityCoupling,
    diag: Vec<f64>,
    static_off: Vec<(usize, usize, f64)>,
    /// Reference levels for populations and phases.
    levels: Vec<DressedLevel>,
    /// Index of each target level in the active basis (or of its dominant product component).
    target_index: [usize; 4],
    /// Eigen-decomposition of the static Hamiltonian; columns of `eigvecs` are eigenvectors.
    energies: Vec<f64>,
    eigvecs: DMatrix<f64>,
}

impl DriveModel {
    /// Four-level models ignore `n_max` and `coupling`.
    pub fn new(kind: DriveKind, cavity: CavitySpec, n_max: usize, coupling: CavityCoupling) -> Result<Self> {
        let config = cavity.configuration;
        let targets = config.target_levels();
        match kind {
            DriveKind::PerTransition | DriveKind::TotalFieldFourState => {
                let analytic = dressed_levels_analytic(&cavity, n_max.max(1))?;
                let levels: Vec<DressedLevel> =
                    targets.iter().map(|t| analytic.iter().find(|l| l.label == *t).cloned().expect("target")).collect();
                let diag: Vec<f64> = levels.iter().map(|l| l.energy).collect();
                Ok(Self {
                    kind,
                    cavity,
                    basis: ActiveBasis::DressedFour(config),
                    coupling,
                    static_off: Vec::new(),
                    levels,
                    target_index: [0, 1, 2, 3],
                    energies: diag.clone(),
                    eigvecs: DMatrix::identity(4, 4),
                    diag,
                })
            }
            DriveKind::FullProduct => {
                let basis = ProductBasis::new(n_max)?;
                let h0 = bare_hamiltonian(&cavity, &basis, coupling);
                let diag: Vec<f64> = (0..basis.dim()).map(|i| h0[(i, i)]).collect();
                let static_off = upper_entries(&h0);
                let eig = h0.clone().symmetric_eigen();
                let levels = match coupling {
                    CavityCoupling::RotatingWave => dressed_levels_analytic(&cavity, n_max)?,
                    CavityCoupling::Full => dressed_levels_numeric(&cavity, n_max.max(2), coupling)?.levels,
                };
                let target_index = targets.map(|t| {
                    let lvl = levels.iter().find(|l| l.label == t).expect("target");
                    (0..lvl.coefficients.len())
                        .max_by(|&a, &b| lvl.coefficients[a].norm().total_cmp(&lvl.coefficients[b].norm()))
                        .unwrap()
                });
                Ok(Self {
                    kind,
                    cavity,
                    basis: ActiveBasis::Product { n_max },
                    coupling,
                    diag,
                    static_off,
                    levels,
                    target_index,
                    energies: eig.eigenvalues.iter().copied().collect(),
                    eigvecs: eig.eigenvectors,
                })
            }
        }
    }

    pub fn configuration(&self) -> Configuration {
        self.cavity.configuration
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Dressed levels used for populations and phases of this model's states.
    pub fn levels(&self) -> &[DressedLevel] {
        &self.levels
    }

    /// Photon cutoff of the reference levels.
    pub fn n_max(&self) -> usize {
        self.levels[0].coefficients.len() / 3 - 1
    }

    /// Lowest dressed state at time `t`.
    pub fn ground_state(&self, t: f64) -> StateVector {
        let amplitudes = match self.basis {
            ActiveBasis::DressedFour(_) => {
                let mut v = vec![Complex64::default(); 4];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            ActiveBasis::Product { .. } => {
                let g = self.levels.iter().find(|l| l.label == DressedLabel::Ground).expect("ground level");
                let e = Complex64::from_polar(1.0, -g.energy * t);
                g.coefficients.iter().map(|c| c * e).collect()
            }
        };
        StateVector { basis: self.basis, time: t, amplitudes }
    }

    fn channels(&self, train: &PulseTrain) -> Vec<Channel> {
        let n = train.pulses.len();
        match self.kind {
            DriveKind::PerTransition => {
                let targets = self.configuration().target_levels();
                let idx = |l: DressedLabel| targets.iter().position(|t| *t == l).expect("target level");
                train
                    .pulses
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let mut weights = vec![0.0; n];
                        weights[k] = 1.0;
                        let (a, b) = (idx(p.transition.lower()), idx(p.transition.upper()));
                        Channel { weights, couplings: vec![(a.min(b), a.max(b), -1.0)] }
                    })
                    .collect()
            }
            DriveKind::TotalFieldFourState => {
                let targets = self.configuration().target_levels();
                let idx = |l: DressedLabel| targets.iter().position(|t| *t == l).expect("target level");
                let couplings = TransitionLabel::for_configuration(self.configuration())
                    .into_iter()
                    .map(|l| {
                        let (a, b) = (idx(l.lower()), idx(l.upper()));
                        (a.min(b), a.max(b), -l.moment())
                    })
                    .collect();
                vec![Channel { weights: train.pulses.iter().map(|p| 1.0 / p.moment).collect(), couplings }]
            }
            DriveKind::FullProduct => {
                let ActiveBasis::Product { n_max } = self.basis else { unreachable!() };
                let cos = ProductBasis::new(n_max).expect("validated").cos_theta_full();
                let couplings = upper_entries(&cos).into_iter().map(|(i, j, v)| (i, j, -v)).collect();
                vec![Channel { weights: train.pulses.iter().map(|p| 1.0 / p.moment).collect(), couplings }]
            }
        }
    }

    fn check_train(&self, train: &PulseTrain) -> Result<()> {
        if train.configuration != self.configuration() {
            return Err(PolaritonError::ConfigMismatch { model: self.configuration(), train: train.configuration });
        }
        Ok(())
    }

    /// Each channel's coupling pattern in the static eigenbasis, as sparse `(a, b, value)`.
    fn eigen_channels(&self, train: &PulseTrain) -> Vec<EigenChannel> {
        let dim = self.dim();
        self.channels(train)
            .into_iter()
            .map(|ch| {
                let mut c = DMatrix::zeros(dim, dim);
                for &(i, j, v) in &ch.couplings {
                    c[(i, j)] += v;
                    c[(j, i)] += v;
                }
                let m = self.eigvecs.transpose() * c * &self.eigvecs;
                let mut sparse = Vec::new();
                for a in 0..dim {
                    for b in 0..dim {
                        if m[(a, b)].abs() > SPARSE_CUT {
                            sparse.push((a, b, m[(a, b)]));
                        }
                    }
                }
                (ch.weights, sparse)
            })
            .collect()
    }

    /// Fastest Bohr frequency among drive-coupled static eigenstates plus a
    /// Gershgorin bound on the peak drive.
    pub fn omega_max(&self, train: &PulseTrain) -> f64 {
        let mut bohr = 0.0f64;
        let mut row = vec![0.0; self.dim()];
        for (weights, sparse) in self.eigen_channels(train) {
            let peak: f64 = weights.iter().zip(&train.pulses).map(|(w, p)| (w * p.peak_rabi).abs()).sum();
            for &(a, b, v) in &sparse {
                bohr = bohr.max((self.energies[a] - self.energies[b]).abs());
                row[a] += (v * peak).abs();
            }
        }
        bohr + row.into_iter().fold(0.0, f64::max)
    }

    pub fn default_dt(&self, train: &PulseTrain) -> f64 {
        STEP_BOUND / self.omega_max(train)
    }

    /// [−6τ, τ_last + 6τ + 10τ₀] around the train.
    pub fn default_window(train: &PulseTrain) -> (f64, f64) {
        let w = train.max_width();
        (train.first_center() - 6.0 * w, train.last_center() + 6.0 * w + 10.0 * ROTATIONAL_PERIOD)
    }
}

fn upper_entries(m: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if m[(i, j)] != 0.0 {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// Dense `H(t)` (unshifted) in the model's active basis.
pub fn build_hamiltonian_at(model: &DriveModel, train: &PulseTrain, t: f64) -> Result<DMatrix<f64>> {
    model.check_train(train)?;
    let dim = model.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, d) in model.diag.iter().enumerate() {
        h[(i, i)] = *d;
    }
    for &(i, j, v) in &model.static_off {
        h[(i, j)] += v;
        h[(j, i)] += v;
    }
    for ch in model.channels(train) {
        let s = scalar(&ch, train, t);
        for &(i, j, v) in &ch.couplings {
            h[(i, j)] += s * v;
            h[(j, i)] += s * v;
        }
    }
    Ok(h)
}

fn scalar(ch: &Channel, train: &PulseTrain, t: f64) -> f64 {
    ch.weights.iter().zip(&train.pulses).filter(|(w, _)| **w != 0.0).map(|(w, p)| w * p.rabi(t)).sum()
}

/// Snapshots of a propagation on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub basis: ActiveBasis,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Step actually used (the requested step shrunk to divide the span).
    pub dt: f64,
    pub steps: usize,
    /// Largest |‖ψ‖² − ‖ψ₀‖²| seen at snapshots.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> StateVector {
        StateVector { basis: self.basis, time: *self.times.last().unwrap(), amplitudes: self.states.last().unwrap().clone() }
    }

    pub fn state(&self, k: usize) -> StateVector {
        StateVector { basis: self.basis, time: self.times[k], amplitudes: self.states[k].clone() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns: t_tau0, then re_k, im_k for each basis index k.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.basis.dim();
        let mut header = vec!["t_tau0".to_string()];
        for k in 0..dim {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{:.12e}", t / ROTATIONAL_PERIOD)];
            for a in s {
                row.push(format!("{:.15e}", a.re));
                row.push(format!("{:.15e}", a.im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Workspace {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
    z: Vec<Complex64>,
    phase: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let zero = vec![Complex64::default(); dim];
        Self { k1: zero.clone(), k2: zero.clone(), k3: zero.clone(), k4: zero.clone(), tmp: zero.clone(), z: zero.clone(), phase: zero }
    }
}

/// Drive terms in the static eigenbasis, ready for stepping.
struct Compiled<'a> {
    model: &'a DriveModel,
    channels: Vec<EigenChannel>,
    train: &'a PulseTrain,
    t0: f64,
    /// e^{iE h/2}
    half_turn: Vec<Complex64>,
}

impl<'a> Compiled<'a> {
    fn new(model: &'a DriveModel, train: &'a PulseTrain, t0: f64, h: f64) -> Self {
        let half_turn = model.energies.iter().map(|e| Complex64::from_polar(1.0, e * 0.5 * h)).collect();
        Self { model, channels: model.eigen_channels(train), train, t0, half_turn }
    }

    fn to_interaction(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let u = &self.model.eigvecs;
        (0..psi.len()).map(|a| (0..psi.len()).map(|i| psi[i] * u[(i, a)]).sum()).collect()
    }

    /// ψ = U e^{−iE(t−t₀)} y
    fn to_schrodinger(&self, t: f64, y: &[Complex64]) -> Vec<Complex64> {
        let u = &self.model.eigvecs;
        let rotated: Vec<Complex64> = y
            .iter()
            .zip(&self.model.energies)
            .map(|(v, e)| v * Complex64::from_polar(1.0, -e * (t - self.t0)))
            .collect();
        (0..y.len()).map(|i| (0..y.len()).map(|a| rotated[a] * u[(i, a)]).sum()).collect()
    }

    /// out = −i P V(t) P* y with P = e^{iE(t−t₀)} given in `phase`.
    fn derivative(&self, t: f64, y: &[Complex64], phase: &[Complex64], out: &mut [Complex64], z: &mut [Complex64]) -> bool {
        out.iter_mut().for_each(|o| *o = Complex64::default());
        let mut any = false;
        for (weights, sparse) in &self.channels {
            let s: f64 =
                weights.iter().zip(&self.train.pulses).filter(|(w, _)| **w != 0.0).map(|(w, p)| w * p.rabi(t)).sum();
            if s == 0.0 {
                continue;
            }
            if !any {
                for ((zi, yi), p) in z.iter_mut().zip(y).zip(phase) {
                    *zi = yi * p.conj();
                }
                any = true;
            }
            for &(a, b, v) in sparse {
                out[a] += z[b] * (s * v);
            }
        }
        if any {
            for (o, p) in out.iter_mut().zip(phase) {
                let v = *o * p;
                *o = Complex64::new(v.im, -v.re);
            }
        }
        any
    }

    fn step(&self, t: f64, h: f64, y: &mut [Complex64], ws: &mut Workspace) {
        let Workspace { k1, k2, k3, k4, tmp, z, phase } = ws;
        for (p, e) in phase.iter_mut().zip(&self.model.energies) {
            *p = Complex64::from_polar(1.0, e * (t - self.t0));
        }
        let mut active = self.derivative(t, y, phase, k1, z);
        phase.iter_mut().zip(&self.half_turn).for_each(|(p, q)| *p *= q);
        for ((tm, yi), k) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
            *tm = yi + k * (0.5 * h);
        }
        active |= self.derivative(t + 0.5 * h, tmp, phase, k2, z);
        for ((tm, yi), k) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
            *tm = yi + k * (0.5 * h);
        }
        active |= self.derivative(t + 0.5 * h, tmp, phase, k3, z);
        phase.iter_mut().zip(&self.half_turn).for_each(|(p, q)| *p *= q);
        for ((tm, yi), k) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
            *tm = yi + k * h;
        }
        active |= self.derivative(t + h, tmp, phase, k4, z);
        if !active {
            return;
        }
        let c = h / 6.0;
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
        }
    }
}

/// Propagates with the default snapshot spacing.
pub fn propagate(
    model: &DriveModel,
    train: &PulseTrain,
    initial: &StateVector,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    let stride = ((DEFAULT_SAMPLE_SPACING / dt).round() as usize).max(1);
    propagate_sampled(model, train, initial, t_span, dt, stride)
}

/// Classical RK4 from `t_span.0` (where `initial` is given) to `t_span.1`,
/// keeping every `stride`-th step and always the last. No renormalization.
pub fn propagate_sampled(
    model: &DriveModel,
    train: &PulseTrain,
    initial: &StateVector,
    t_span: (f64, f64),
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    model.check_train(train)?;
    if initial.basis != model.basis {
        return Err(PolaritonError::invalid("initial", "state basis does not match the drive model"));
    }
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(PolaritonError::invalid("t_span", "end must exceed start"));
    }
    let bound = model.default_dt(train);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(PolaritonError::StepTooCoarse { dt, bound });
    }
    let stride = stride.max(1);
    let steps = ((t1 - t0) / dt).ceil() as usize;
    let h = (t1 - t0) / steps as f64;

    let compiled = Compiled::new(model, train, t0, h);
    let mut ws = Workspace::new(model.dim());

    let mut y = compiled.to_interaction(&initial.amplitudes);
    let norm0: f64 = y.iter().map(|c| c.norm_sqr()).sum();
    let capacity = steps / stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut max_drift = 0.0f64;
    times.push(t0);
    states.push(initial.amplitudes.clone());

    for n in 0..steps {
        let t = t0 + n as f64 * h;
        compiled.step(t, h, &mut y, &mut ws);
        let done = n + 1;
        if done % stride == 0 || done == steps {
            let tn = t0 + done as f64 * h;
            let norm: f64 = y.iter().map(|c| c.norm_sqr()).sum();
            let drift = (norm - norm0).abs();
            max_drift = max_drift.max(drift);
            if drift > NORM_ABORT || !norm.is_finite() {
                return Err(PolaritonError::NormDrift { drift, time: tn });
            }
            times.push(tn);
            states.push(compiled.to_schrodinger(tn, &y));
        }
    }
    Ok(Trajectory { basis: model.basis, times, states, dt: h, steps, max_norm_drift: max_drift })
}

/// Final state only, without storing intermediate snapshots.
pub fn propagate_final(
    model: &DriveModel,
    train: &PulseTrain,
    initial: &StateVector,
    t_span: (f64, f64),
    dt: f64,
) -> Result<StateVector> {
    let traj = propagate_sampled(model, train, initial, t_span, dt, usize::MAX)?;
    Ok(traj.final_state())
}

/// Halves dt from the stability bound until the final state moves by < 1e-8;
/// returns the coarser step of the first agreeing pair.
pub fn convergence_probe(model: &DriveModel, train: &PulseTrain, initial: &StateVector, t_span: (f64, f64)) -> Result<f64> {
    const TOL: f64 = 1e-8;
    const FLOOR: f64 = 1e-5;
    let mut dt = model.default_dt(train);
    let mut prev = propagate_final(model, train, initial, t_span, dt)?;
    loop {
        let half = dt / 2.0;
        if half < FLOOR {
            return Err(PolaritonError::ProbeGaveUp { floor: FLOOR });
        }
        let next = propagate_final(model, train, initial, t_span, half)?;
        let diff = prev.amplitudes.iter().zip(&next.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        if diff < TOL {
            return Ok(dt);
        }
        dt = half;
        prev = next;
    }
}

/// Target-level indices in the active basis (dominant component for product states).
pub fn target_indices(model: &DriveModel) -> [usize; 4] {
    model.target_index
}

/// ⟨a|cosθ|b⟩ over the four target levels.
pub fn dressed_cos_matrix(config: Configuration) -> [[f64; 4]; 4] {
    let m = transition_moments(config);
    let levels = config.target_levels();
    std::array::from_fn(|r| std::array::from_fn(|c| if r == c { 0.0 } else { m.get(levels[r], levels[c]) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{design_train, DelayPolicy, Delays, GaussianPulse, PhaseChoice};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn fund() -> CavitySpec {
        CavitySpec::new(Configuration::Fundamental, 0.2).unwrap()
    }

    fn designed(cav: &CavitySpec, dw: f64) -> PulseTrain {
        design_train(cav, dw, &PhaseChoice::Designed, Delays::standard(cav.configuration), DelayPolicy::AsGiven)
            .unwrap()
            .train
    }

    fn silent(cav: &CavitySpec) -> PulseTrain {
        let mut t = designed(cav, 0.02);
        for p in &mut t.pulses {
            p.peak_rabi = 0.0;
        }
        t
    }

    #[test]
    fn zero_field_hamiltonian_is_diagonal_energies() {
        let cav = fund();
        let model = DriveModel::new(DriveKind::PerTransition, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let h = build_hamiltonian_at(&model, &silent(&cav), 0.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let e = if r == c { [0.0, 1.8, 2.2, 6.0][r] } else { 0.0 };
                assert_abs_diff_eq!(h[(r, c)], e, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dressed_cos_elements_match_product_contraction() {
        let m = dressed_cos_matrix(Configuration::Fundamental);
        let s = 0.5f64.sqrt() / 3f64.sqrt();
        assert_abs_diff_eq!(m[2][0], s, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1][0], -s, epsilon = 1e-14);
    }

    #[test]
    fn total_field_uses_single_summed_field() {
        let cav = fund();
        let train = designed(&cav, 0.2);
        let model = DriveModel::new(DriveKind::TotalFieldFourState, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let t = 1.3;
        let h = build_hamiltonian_at(&model, &train, t).unwrap();
        let f = train.drive_field(t);
        let m = dressed_cos_matrix(Configuration::Fundamental);
        for (a, b) in [(0, 1), (0, 2), (2, 3)] {
            assert_abs_diff_eq!(h[(a, b)], -f * m[a][b], epsilon = 1e-14);
        }
        assert_eq!(h[(1, 3)], 0.0);
    }

    #[test]
    fn mismatched_configuration_rejected() {
        let model = DriveModel::new(DriveKind::FullProduct, fund(), 3, CavityCoupling::RotatingWave).unwrap();
        let sh = CavitySpec::new(Configuration::SecondHarmonic, 0.2).unwrap();
        let train = designed(&sh, 0.02);
        assert!(matches!(build_hamiltonian_at(&model, &train, 0.0), Err(PolaritonError::ConfigMismatch { .. })));
        let init = model.ground_state(0.0);
        assert!(propagate(&model, &train, &init, (0.0, 1.0), 1e-3).is_err());
    }

    #[test]
    fn hermitian_at_sampled_times() {
        for kind in [DriveKind::PerTransition, DriveKind::TotalFieldFourState, DriveKind::FullProduct] {
            for coupling in [CavityCoupling::RotatingWave, CavityCoupling::Full] {
                let model = DriveModel::new(kind, fund(), 3, coupling).unwrap();
                let train = designed(&fund(), 0.2);
                for t in [-10.0, 0.0, 3.3, 120.0] {
                    let h = build_hamiltonian_at(&model, &train, t).unwrap();
                    assert!((&h - h.transpose()).amax() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn coarse_step_rejected() {
        let model = DriveModel::new(DriveKind::FullProduct, fund(), 3, CavityCoupling::RotatingWave).unwrap();
        let train = designed(&fund(), 0.02);
        let init = model.ground_state(0.0);
        let err = propagate(&model, &train, &init, (0.0, 1.0), 0.1).unwrap_err();
        assert!(matches!(err, PolaritonError::StepTooCoarse { .. }));
    }

    #[test]
    fn zero_field_ground_is_stationary() {
        let cav = fund();
        for kind in [DriveKind::PerTransition, DriveKind::FullProduct] {
            let model = DriveModel::new(kind, cav, 3, CavityCoupling::RotatingWave).unwrap();
            let train = silent(&cav);
            let init = model.ground_state(-50.0);
            let traj = propagate(&model, &train, &init, (-50.0, 50.0), model.default_dt(&train)).unwrap();
            for s in &traj.states {
                for (a, b) in s.iter().zip(&init.amplitudes) {
                    assert!((a - b).norm() < 1e-10, "{kind:?} {}", (a - b).norm());
                }
            }
        }
    }

    #[test]
    fn two_level_pi_pulse_transfers_population() {
        let cav = fund();
        let model = DriveModel::new(DriveKind::PerTransition, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let dw = 0.01;
        // ∫Ω dt = π on (|0;0⟩, |+;0⟩).
        let pulse = GaussianPulse {
            transition: TransitionLabel::PlusGround,
            peak_rabi: PI * dw / (2.0 * PI).sqrt(),
            center_time: 0.0,
            width: 1.0 / dw,
            carrier_frequency: 2.2,
            carrier_phase: 0.0,
            moment: TransitionLabel::PlusGround.moment(),
        };
        let off = |l: TransitionLabel, w: f64| GaussianPulse { transition: l, peak_rabi: 0.0, carrier_frequency: w, moment: l.moment(), ..pulse };
        let train = PulseTrain::new(
            Configuration::Fundamental,
            vec![pulse, off(TransitionLabel::MinusGround, 1.8), off(TransitionLabel::TwoPlus, 3.8)],
        )
        .unwrap();
        let init = model.ground_state(-700.0);
        let fin = propagate_final(&model, &train, &init, (-700.0, 700.0), model.default_dt(&train)).unwrap();
        assert!(fin.amplitudes[2].norm_sqr() >= 0.9999, "{}", fin.amplitudes[2].norm_sqr());
    }

    #[test]
    fn linearity_of_propagation() {
        let cav = fund();
        let model = DriveModel::new(DriveKind::FullProduct, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let train = designed(&cav, 0.2);
        let dt = model.default_dt(&train);
        let span = (-30.0, 30.0);
        let basis_state = |k: usize| {
            let mut v = vec![Complex64::default(); 12];
            v[k] = Complex64::new(1.0, 0.0);
            StateVector::new(model.basis, span.0, v).unwrap()
        };
        let a = propagate_final(&model, &train, &basis_state(0), span, dt).unwrap();
        let b = propagate_final(&model, &train, &basis_state(5), span, dt).unwrap();
        let (ca, cb) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let mix: Vec<_> = (0..12)
            .map(|k| if k == 0 { ca } else if k == 5 { cb } else { Complex64::default() })
            .collect();
        let m = propagate_final(&model, &train, &StateVector::new(model.basis, span.0, mix).unwrap(), span, dt).unwrap();
        for k in 0..12 {
            assert!((m.amplitudes[k] - (ca * a.amplitudes[k] + cb * b.amplitudes[k])).norm() < 1e-12);
        }
    }

    #[test]
    fn convergence_probe_accepts_coarsest_for_zero_field() {
        let cav = fund();
        let model = DriveModel::new(DriveKind::PerTransition, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let train = silent(&cav);
        let init = model.ground_state(0.0);
        let dt = convergence_probe(&model, &train, &init, (0.0, 10.0)).unwrap();
        assert_eq!(dt, model.default_dt(&train));
    }

    #[test]
    fn dressed_four_state_lifts_to_product_basis() {
        let v = vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.5, 0.0),
        ];
        let s = StateVector::new(ActiveBasis::DressedFour(Configuration::Fundamental), 0.0, v).unwrap();
        let p = s.to_product(3).unwrap();
        let n: f64 = p.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-14);
        assert!(StateVector::new(ActiveBasis::Product { n_max: 3 }, 0.0, vec![Complex64::default(); 4]).is_err());
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let cav = fund();
        let model = DriveModel::new(DriveKind::PerTransition, cav, 3, CavityCoupling::RotatingWave).unwrap();
        let train = silent(&cav);
        let traj = propagate(&model, &train, &model.ground_state(0.0), (0.0, 1.0), model.default_dt(&train)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "t_tau0,re_0,im_0,re_1,im_1,re_2,im_2,re_3,im_3");
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}

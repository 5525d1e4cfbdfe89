//! Transition moments between dressed levels, the optimal four-state target
//! and an independent multi-start maximizer for the orientation functional.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};
use crate::rotor_cavity::{
    dressed_levels_analytic, find_level, operator_in_levels, CavitySpec, Configuration, DressedLabel, ProductBasis,
};

/// Relative phase of the target superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseLabel {
    /// arg C₊ − arg C₀
    PlusGround,
    /// arg C₋ − arg C₀
    MinusGround,
    /// arg C₂ − arg C₊
    TwoPlus,
    /// arg C₂ − arg C₋
    TwoMinus,
    /// arg C₁ − arg C₀
    OneGround,
    /// arg C₊ − arg C₁
    OnePlus,
    /// arg C₋ − arg C₁
    OneMinus,
}

impl PhaseLabel {
    pub fn key(self) -> &'static str {
        match self {
            Self::PlusGround => "phi_plus_0",
            Self::MinusGround => "phi_minus_0",
            Self::TwoPlus => "phi_2_plus",
            Self::TwoMinus => "phi_2_minus",
            Self::OneGround => "phi_1_0",
            Self::OnePlus => "phi_1_plus",
            Self::OneMinus => "phi_1_minus",
        }
    }

    pub fn for_configuration(config: Configuration) -> &'static [PhaseLabel] {
        match config {
            Configuration::Fundamental => &[Self::PlusGround, Self::MinusGround, Self::TwoPlus, Self::TwoMinus],
            Configuration::SecondHarmonic => &[Self::OneGround, Self::OnePlus, Self::OneMinus],
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Reduces an angle to [0, 2π).
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles, in (−π, π].
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMoment {
    pub upper: DressedLabel,
    pub lower: DressedLabel,
    /// ⟨upper|cosθ|lower⟩, dipole factored out.
    pub value: f64,
}

/// Dipole-free transition moments among four levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMomentSet {
    pub levels: [DressedLabel; 4],
    pub moments: Vec<TransitionMoment>,
}

impl TransitionMomentSet {
    pub fn get(&self, a: DressedLabel, b: DressedLabel) -> f64 {
        self.moments
            .iter()
            .find(|m| (m.upper == a && m.lower == b) || (m.upper == b && m.lower == a))
            .map_or(0.0, |m| m.value)
    }

    /// Symmetric coupling matrix in the order of `levels`.
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, c| if r == c { 0.0 } else { self.get(self.levels[r], self.levels[c]) })
    }

    /// √(ΣM²), the maximum orientation for tree-shaped coupling graphs.
    pub fn lambda(&self) -> f64 {
        self.moments.iter().map(|m| m.value * m.value).sum::<f64>().sqrt()
    }
}

fn moment_pairs(config: Configuration) -> [(DressedLabel, DressedLabel); 4] {
    use DressedLabel::*;
    match config {
        Configuration::Fundamental => [
            (Plus(0), Ground),
            (Minus(0), Ground),
            (Direct { j: 2, n: 0 }, Plus(0)),
            (Direct { j: 2, n: 0 }, Minus(0)),
        ],
        Configuration::SecondHarmonic => [
            (Direct { j: 1, n: 0 }, Ground),
            (Plus(0), Direct { j: 1, n: 0 }),
            (Minus(0), Direct { j: 1, n: 0 }),
            // ⟨+;0|cosθ|−;0⟩ vanishes; kept so both sets share a shape.
            (Plus(0), Minus(0)),
        ],
    }
}

/// Contracts the analytic dressed kets with cosθ ⊗ 1.
pub fn transition_moments(config: Configuration) -> TransitionMomentSet {
    // The dressed kets do not depend on g, only the energies do.
    let cavity = CavitySpec { configuration: config, coupling_g: 0.2 };
    let n_max = 1;
    let basis = ProductBasis::new(n_max).expect("static cutoff");
    let all = dressed_levels_analytic(&cavity, n_max).expect("static cutoff");
    let cos = basis.cos_theta_full();
    let moments = moment_pairs(config)
        .into_iter()
        .filter_map(|(u, l)| {
            let pair = [find_level(&all, u).unwrap().clone(), find_level(&all, l).unwrap().clone()];
            let value = operator_in_levels(&pair, &cos)[(0, 1)].re;
            (value.abs() > 1e-15).then_some(TransitionMoment { upper: u, lower: l, value })
        })
        .collect();
    TransitionMomentSet { levels: config.target_levels(), moments }
}

/// Optimal four-state superposition: amplitudes, relative phases and target time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub configuration: Configuration,
    pub levels: [DressedLabel; 4],
    /// Level energies in units of B (also the Bohr frequencies from the ground level).
    pub energies: [f64; 4],
    pub amplitudes: [f64; 4],
    /// Relative phases, reduced to [0, 2π).
    pub phases: BTreeMap<PhaseLabel, f64>,
    pub t_f: f64,
}

impl TargetState {
    pub fn phase(&self, label: PhaseLabel) -> f64 {
        self.phases[&label]
    }

    pub fn amplitude(&self, label: DressedLabel) -> f64 {
        self.levels.iter().position(|l| *l == label).map_or(0.0, |i| self.amplitudes[i])
    }

    /// Interaction-picture coefficients C with arg C₀ = 0.
    pub fn coefficients(&self) -> [Complex64; 4] {
        let args = match self.configuration {
            Configuration::Fundamental => {
                let p = self.phase(PhaseLabel::PlusGround);
                [0.0, self.phase(PhaseLabel::MinusGround), p, p + self.phase(PhaseLabel::TwoPlus)]
            }
            Configuration::SecondHarmonic => {
                let p = self.phase(PhaseLabel::OneGround);
                [0.0, p, p + self.phase(PhaseLabel::OnePlus), p + self.phase(PhaseLabel::OneMinus)]
            }
        };
        std::array::from_fn(|i| Complex64::from_polar(self.amplitudes[i], args[i]))
    }

    /// Builds a state from interaction-picture coefficients in the canonical level order.
    pub fn from_coefficients(cavity: &CavitySpec, coefficients: [Complex64; 4], t_f: f64) -> Self {
        let config = cavity.configuration;
        let levels = config.target_levels();
        let energies = level_energies(cavity);
        let amplitudes = coefficients.map(|c| c.norm());
        let arg = |i: usize| coefficients[i].arg();
        let mut phases = BTreeMap::new();
        let mut put = |l: PhaseLabel, v: f64| {
            phases.insert(l, wrap_phase(v));
        };
        match config {
            Configuration::Fundamental => {
                put(PhaseLabel::MinusGround, arg(1) - arg(0));
                put(PhaseLabel::PlusGround, arg(2) - arg(0));
                put(PhaseLabel::TwoPlus, arg(3) - arg(2));
                put(PhaseLabel::TwoMinus, arg(3) - arg(1));
            }
            Configuration::SecondHarmonic => {
                put(PhaseLabel::OneGround, arg(1) - arg(0));
                put(PhaseLabel::OnePlus, arg(2) - arg(1));
                put(PhaseLabel::OneMinus, arg(3) - arg(1));
            }
        }
        Self { configuration: config, levels, energies, amplitudes, phases, t_f }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

fn level_energies(cavity: &CavitySpec) -> [f64; 4] {
    let all = dressed_levels_analytic(cavity, 1).expect("static cutoff");
    cavity.configuration.target_levels().map(|l| find_level(&all, l).expect("target level exists").energy)
}

/// Lagrange-multiplier optimum with phases fixed by the k = 0 conditions at `t_f`.
///
/// The stationary amplitudes are the components of the top eigenvector of the
/// moment matrix; on the chain/star graphs here they reduce to
/// |C| ∝ (λ, |M₀ₗ|, ...) with phase choices that make every term positive.
pub fn optimal_target_state(cavity: &CavitySpec, t_f: f64) -> Result<TargetState> {
    if !(t_f.is_finite() && t_f >= 0.0) {
        return Err(PolaritonError::invalid("t_f", "must be finite and ≥ 0"));
    }
    let config = cavity.configuration;
    let levels = config.target_levels();
    let energies = level_energies(cavity);
    let mut phases = BTreeMap::new();
    let (amplitudes, list): ([f64; 4], Vec<(PhaseLabel, f64)>) = match config {
        Configuration::Fundamental => {
            let [_, wm, wp, w2] = energies;
            (
                [10f64.sqrt() / 6.0, 0.5, 0.5, 2f64.sqrt() / 3.0],
                vec![
                    (PhaseLabel::PlusGround, wp * t_f),
                    (PhaseLabel::MinusGround, PI + wm * t_f),
                    (PhaseLabel::TwoPlus, (w2 - wp) * t_f),
                    (PhaseLabel::TwoMinus, PI + (w2 - wm) * t_f),
                ],
            )
        }
        Configuration::SecondHarmonic => {
            let [_, w1, wp, wm] = energies;
            (
                [10f64.sqrt() / 6.0, 2f64.sqrt() / 2.0, 1.0 / 3.0, 1.0 / 3.0],
                vec![
                    (PhaseLabel::OneGround, w1 * t_f),
                    (PhaseLabel::OnePlus, -(w1 - wp) * t_f),
                    (PhaseLabel::OneMinus, PI - (w1 - wm) * t_f),
                ],
            )
        }
    };
    for (l, v) in list {
        phases.insert(l, wrap_phase(v));
    }
    Ok(TargetState { configuration: config, levels, energies, amplitudes, phases, t_f })
}

/// Residuals of the k = 0 phase conditions, each wrapped to (−π, π].
pub fn phase_condition_residuals(state: &TargetState) -> Vec<(PhaseLabel, f64)> {
    let t = state.t_f;
    let p = |l| state.phase(l);
    match state.configuration {
        Configuration::Fundamental => {
            let [_, wm, wp, w2] = state.energies;
            vec![
                (PhaseLabel::PlusGround, phase_distance(-wp * t + p(PhaseLabel::PlusGround), 0.0)),
                (PhaseLabel::MinusGround, phase_distance(-wm * t + p(PhaseLabel::MinusGround), PI)),
                (PhaseLabel::TwoPlus, phase_distance((wp - w2) * t + p(PhaseLabel::TwoPlus), 0.0)),
                (PhaseLabel::TwoMinus, phase_distance((wm - w2) * t + p(PhaseLabel::TwoMinus), PI)),
            ]
        }
        Configuration::SecondHarmonic => {
            let [_, w1, wp, wm] = state.energies;
            vec![
                (PhaseLabel::OneGround, phase_distance(-w1 * t + p(PhaseLabel::OneGround), 0.0)),
                (PhaseLabel::OnePlus, phase_distance((w1 - wp) * t + p(PhaseLabel::OnePlus), 0.0)),
                (PhaseLabel::OneMinus, phase_distance((w1 - wm) * t + p(PhaseLabel::OneMinus), PI)),
            ]
        }
    }
}

/// ⟨cosθ⟩ of the four-state superposition at time `t`, term by term.
pub fn orientation_of_superposition(state: &TargetState, t: f64) -> f64 {
    let m = transition_moments(state.configuration);
    let c = &state.amplitudes;
    let p = |l| state.phase(l);
    match state.configuration {
        Configuration::Fundamental => {
            use DressedLabel::*;
            let [_, wm, wp, w2] = state.energies;
            let two = Direct { j: 2, n: 0 };
            2.0 * c[0] * c[2] * (-wp * t + p(PhaseLabel::PlusGround)).cos() * m.get(Plus(0), Ground)
                + 2.0 * c[0] * c[1] * (-wm * t + p(PhaseLabel::MinusGround)).cos() * m.get(Minus(0), Ground)
                + 2.0 * c[2] * c[3] * ((wp - w2) * t + p(PhaseLabel::TwoPlus)).cos() * m.get(two, Plus(0))
                + 2.0 * c[1] * c[3] * ((wm - w2) * t + p(PhaseLabel::TwoMinus)).cos() * m.get(two, Minus(0))
        }
        Configuration::SecondHarmonic => {
            use DressedLabel::*;
            let [_, w1, wp, wm] = state.energies;
            let one = Direct { j: 1, n: 0 };
            2.0 * c[0] * c[1] * (-w1 * t + p(PhaseLabel::OneGround)).cos() * m.get(one, Ground)
                + 2.0 * c[1] * c[2] * ((w1 - wp) * t + p(PhaseLabel::OnePlus)).cos() * m.get(Plus(0), one)
                + 2.0 * c[1] * c[3] * ((w1 - wm) * t + p(PhaseLabel::OneMinus)).cos() * m.get(Minus(0), one)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Grid points per coordinate of the coarse scan that seeds some restarts.
    pub grid_points: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { restarts: 20, seed: 20_240_917, grid_points: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceOutcome {
    pub value: f64,
    /// Nonnegative amplitudes in the order of the moment set's levels.
    pub amplitudes: [f64; 4],
    /// Coefficient arguments with the first level as reference.
    pub phases: [f64; 4],
    /// Gap between the two best restarts.
    pub spread: f64,
    pub options: BruteForceOptions,
}

impl BruteForceOutcome {
    pub fn coefficients(&self) -> [Complex64; 4] {
        std::array::from_fn(|i| Complex64::from_polar(self.amplitudes[i], self.phases[i]))
    }
}

/// 3 hyperspherical angles then 3 phases.
fn unpack(x: &[f64; 6]) -> ([f64; 4], [f64; 4]) {
    let (s1, c1) = x[0].sin_cos();
    let (s2, c2) = x[1].sin_cos();
    let (s3, c3) = x[2].sin_cos();
    let amps = [c1.abs(), (s1 * c2).abs(), (s1 * s2 * c3).abs(), (s1 * s2 * s3).abs()];
    (amps, [0.0, x[3], x[4], x[5]])
}

fn functional(m: &Matrix4<f64>, x: &[f64; 6]) -> f64 {
    let (a, p) = unpack(x);
    let mut f = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if m[(i, j)] != 0.0 {
                f += 2.0 * a[i] * a[j] * m[(i, j)] * (p[j] - p[i]).cos();
            }
        }
    }
    f
}

/// Maximizes the orientation functional over normalized amplitudes and
/// relative phases (t_f absorbed) by Nelder–Mead from grid and random starts.
pub fn brute_force_max_orientation(moments: &TransitionMomentSet, options: BruteForceOptions) -> Result<BruteForceOutcome> {
    if options.restarts < 2 {
        return Err(PolaritonError::invalid("restarts", "need at least two restarts"));
    }
    let m = moments.matrix();
    let f = |x: &[f64; 6]| functional(&m, x);

    let grid_starts = coarse_grid_starts(&f, options.grid_points.max(2), options.restarts / 4);
    let mut starts = grid_starts;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    while starts.len() < options.restarts {
        let x: [f64; 6] = std::array::from_fn(|k| if k < 3 { rng.gen_range(0.0..PI) } else { rng.gen_range(0.0..TAU) });
        starts.push(x);
    }

    let mut results: Vec<(f64, [f64; 6])> = starts
        .par_iter()
        .map(|x0| {
            let x = nelder_mead_max(&f, *x0);
            (f(&x), canonical(&x))
        })
        .collect();
    results.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lexicographic(&a.1, &b.1)));
    let spread = results[0].0 - results[1].0;
    if spread > 1e-8 {
        return Err(PolaritonError::NonConvergence { spread });
    }
    let (value, best) = results[0];
    let (amplitudes, raw) = unpack(&best);
    Ok(BruteForceOutcome { value, amplitudes, phases: raw.map(wrap_phase), spread, options })
}

fn canonical(x: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|k| if k < 3 { x[k] } else { wrap_phase(x[k]) })
}

fn lexicographic(a: &[f64; 6], b: &[f64; 6]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn coarse_grid_starts(f: &impl Fn(&[f64; 6]) -> f64, per_axis: usize, keep: usize) -> Vec<[f64; 6]> {
    let total = per_axis.pow(6);
    let mut scored: Vec<(f64, [f64; 6])> = (0..total)
        .map(|mut idx| {
            let x: [f64; 6] = std::array::from_fn(|k| {
                let i = idx % per_axis;
                idx /= per_axis;
                let span = if k < 3 { PI } else { TAU };
                (i as f64 + 0.5) * span / per_axis as f64
            });
            (f(&x), x)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lexicographic(&a.1, &b.1)));
    scored.into_iter().take(keep).map(|(_, x)| x).collect()
}

fn nelder_mead_max(f: &impl Fn(&[f64; 6]) -> f64, x0: [f64; 6]) -> [f64; 6] {
    const N: usize = 6;
    let neg = |x: &[f64; N]| -f(x);
    let mut x = x0;
    // A few restarts of the simplex around the current best guard against collapse.
    for round in 0..4 {
        let step = 0.5 / (1 << round) as f64;
        let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
        simplex.push((x, neg(&x)));
        for k in 0..N {
            let mut v = x;
            v[k] += step;
            simplex.push((v, neg(&v)));
        }
        for _ in 0..20_000 {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[N].1 - simplex[0].1;
            let size = simplex.iter().skip(1).map(|(v, _)| dist(v, &simplex[0].0)).fold(0.0, f64::max);
            if spread < 1e-15 && size < 1e-10 {
                break;
            }
            let mut centroid = [0.0; N];
            for (v, _) in &simplex[..N] {
                for k in 0..N {
                    centroid[k] += v[k] / N as f64;
                }
            }
            let worst = simplex[N];
            let along = |t: f64| -> [f64; N] { std::array::from_fn(|k| centroid[k] + t * (worst.0[k] - centroid[k])) };
            let xr = along(-1.0);
            let fr = neg(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = neg(&xe);
                simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[N - 1].1 {
                simplex[N] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(-0.5);
                    (xc, neg(&xc))
                } else {
                    let xc = along(0.5);
                    (xc, neg(&xc))
                };
                if fc < worst.1.min(fr) {
                    simplex[N] = (xc, fc);
                } else {
                    let best = simplex[0].0;
                    for entry in simplex.iter_mut().skip(1) {
                        let v: [f64; N] = std::array::from_fn(|k| best[k] + 0.5 * (entry.0[k] - best[k]));
                        *entry = (v, neg(&v));
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        x = simplex[0].0;
    }
    x
}

fn dist(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

//! Three-pulse trains: required areas, carrier phases, Gaussian synthesis and
//! numerical pulse areas.
//!
//! Every pulse is described by its Rabi waveform on its own transition,
//! `Ω(t) = peak·exp(−(t−τ_c)²/2τ²)·cos(ω(t−τ_c) + φ)`. The physical field that
//! drives the dipole is recovered by dividing each waveform by the signed
//! dressed transition moment of that transition.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{PolaritonError, Result};
use crate::orientation::{optimal_target_state, transition_moments, wrap_phase, PhaseLabel, TargetState};
use crate::rotor_cavity::{dressed_levels_analytic, find_level, CavitySpec, Configuration, DressedLabel};
use crate::units::{tau0_to_internal_time, ROTATIONAL_PERIOD};

/// Envelope cutoff in widths; beyond it the Gaussian is below 1e-16.
pub const ENVELOPE_CUTOFF: f64 = 8.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionLabel {
    /// |0;0⟩ → |+;0⟩
    PlusGround,
    /// |0;0⟩ → |−;0⟩
    MinusGround,
    /// |+;0⟩ → |2;0⟩
    TwoPlus,
    /// |0;0⟩ → |1;0⟩
    OneGround,
    /// |1;0⟩ → |+;0⟩
    PlusOne,
    /// |1;0⟩ → |−;0⟩
    MinusOne,
}

impl TransitionLabel {
    /// Train order: first-stage pulses, then second-stage pulses.
    pub fn for_configuration(config: Configuration) -> [TransitionLabel; 3] {
        match config {
            Configuration::Fundamental => [Self::PlusGround, Self::MinusGround, Self::TwoPlus],
            Configuration::SecondHarmonic => [Self::OneGround, Self::PlusOne, Self::MinusOne],
        }
    }

    pub fn configuration(self) -> Configuration {
        match self {
            Self::PlusGround | Self::MinusGround | Self::TwoPlus => Configuration::Fundamental,
            Self::OneGround | Self::PlusOne | Self::MinusOne => Configuration::SecondHarmonic,
        }
    }

    pub fn lower(self) -> DressedLabel {
        match self {
            Self::PlusGround | Self::MinusGround | Self::OneGround => DressedLabel::Ground,
            Self::TwoPlus => DressedLabel::Plus(0),
            Self::PlusOne | Self::MinusOne => DressedLabel::Direct { j: 1, n: 0 },
        }
    }

    pub fn upper(self) -> DressedLabel {
        match self {
            Self::PlusGround | Self::PlusOne => DressedLabel::Plus(0),
            Self::MinusGround | Self::MinusOne => DressedLabel::Minus(0),
            Self::TwoPlus => DressedLabel::Direct { j: 2, n: 0 },
            Self::OneGround => DressedLabel::Direct { j: 1, n: 0 },
        }
    }

    /// Whether the pulse belongs to the delayed second stage.
    pub fn is_second_stage(self) -> bool {
        match self {
            Self::PlusGround | Self::MinusGround | Self::OneGround => false,
            Self::TwoPlus | Self::PlusOne | Self::MinusOne => true,
        }
    }

    /// Target relative phase that this pulse imprints.
    pub fn phase_label(self) -> PhaseLabel {
        match self {
            Self::PlusGround => PhaseLabel::PlusGround,
            Self::MinusGround => PhaseLabel::MinusGround,
            Self::TwoPlus => PhaseLabel::TwoPlus,
            Self::OneGround => PhaseLabel::OneGround,
            Self::PlusOne => PhaseLabel::OnePlus,
            Self::MinusOne => PhaseLabel::OneMinus,
        }
    }

    /// Signed dressed transition moment ⟨upper|cosθ|lower⟩.
    pub fn moment(self) -> f64 {
        transition_moments(self.configuration()).get(self.upper(), self.lower())
    }

    /// Resonant carrier E_upper − E_lower.
    pub fn carrier_frequency(self, cavity: &CavitySpec) -> f64 {
        let levels = dressed_levels_analytic(cavity, 1).expect("static cutoff");
        let e = |l| find_level(&levels, l).expect("target level").energy;
        e(self.upper()) - e(self.lower())
    }

    pub fn key(self) -> &'static str {
        match self {
            Self::PlusGround => "plus_ground",
            Self::MinusGround => "minus_ground",
            Self::TwoPlus => "two_plus",
            Self::OneGround => "one_ground",
            Self::PlusOne => "plus_one",
            Self::MinusOne => "minus_one",
        }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseAreaSet {
    pub configuration: Configuration,
    pub areas: BTreeMap<TransitionLabel, Complex64>,
}

impl PulseAreaSet {
    pub fn get(&self, label: TransitionLabel) -> Complex64 {
        self.areas.get(&label).copied().unwrap_or_default()
    }

    /// Composite area of the V-type stage (θ₀ for Fundamental, θ₁ for SecondHarmonic).
    pub fn composite(&self) -> f64 {
        let h = |a: TransitionLabel, b: TransitionLabel| self.get(a).norm().hypot(self.get(b).norm());
        match self.configuration {
            Configuration::Fundamental => h(TransitionLabel::PlusGround, TransitionLabel::MinusGround),
            Configuration::SecondHarmonic => h(TransitionLabel::PlusOne, TransitionLabel::MinusOne),
        }
    }
}

/// Area magnitudes that take |0;0⟩ to the optimal amplitudes.
pub fn required_areas(config: Configuration) -> PulseAreaSet {
    let a0 = (10f64.sqrt() / 6.0).acos();
    let list = match config {
        Configuration::Fundamental => [
            (TransitionLabel::PlusGround, (17.0f64 / 26.0).sqrt() * a0),
            (TransitionLabel::MinusGround, (9.0f64 / 26.0).sqrt() * a0),
            (TransitionLabel::TwoPlus, (3.0 / 17f64.sqrt()).acos()),
        ],
        Configuration::SecondHarmonic => {
            let v = (3.0 / 13f64.sqrt()).acos() / 2f64.sqrt();
            [(TransitionLabel::OneGround, a0), (TransitionLabel::PlusOne, v), (TransitionLabel::MinusOne, v)]
        }
    };
    PulseAreaSet { configuration: config, areas: list.into_iter().map(|(l, v)| (l, Complex64::new(v, 0.0))).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub transition: TransitionLabel,
    /// Peak Rabi coupling on the designated transition, units of B.
    pub peak_rabi: f64,
    pub center_time: f64,
    pub width: f64,
    pub carrier_frequency: f64,
    pub carrier_phase: f64,
    /// Signed transition moment used to convert the Rabi waveform to a field.
    pub moment: f64,
}

impl GaussianPulse {
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center_time) / self.width;
        (-0.5 * x * x).exp()
    }

    pub fn is_active(&self, t: f64) -> bool {
        (t - self.center_time).abs() <= ENVELOPE_CUTOFF * self.width
    }

    pub fn rabi(&self, t: f64) -> f64 {
        if self.peak_rabi == 0.0 || !self.is_active(t) {
            return 0.0;
        }
        self.peak_rabi
            * self.envelope(t)
            * (self.carrier_frequency * (t - self.center_time) + self.carrier_phase).cos()
    }

    /// Field in units where the dipole coupling is `field × cosθ`.
    pub fn field(&self, t: f64) -> f64 {
        self.rabi(t) / self.moment
    }

    /// Rotating-wave area magnitude ∫Ω/2 over the whole line.
    pub fn area_magnitude(&self) -> f64 {
        0.5 * self.peak_rabi * self.width * TAU.sqrt()
    }
}

/// Plain-text pulse record: times and widths in τ₀, energies in B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub transition: String,
    #[serde(rename = "peak_rabi_B")]
    pub peak_rabi_b: f64,
    pub center_tau0: f64,
    pub width_tau0: f64,
    #[serde(rename = "carrier_B")]
    pub carrier_b: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pub configuration: Configuration,
    pub pulses: Vec<GaussianPulse>,
}

impl PulseTrain {
    pub fn new(configuration: Configuration, pulses: Vec<GaussianPulse>) -> Result<Self> {
        if pulses.len() != 3 {
            return Err(PolaritonError::invalid("pulses", format!("expected 3 pulses, got {}", pulses.len())));
        }
        for (i, p) in pulses.iter().enumerate() {
            if p.transition.configuration() != configuration {
                return Err(PolaritonError::invalid("pulses", format!("{} is not a {configuration} transition", p.transition)));
            }
            if pulses[..i].iter().any(|q| q.transition == p.transition) {
                return Err(PolaritonError::invalid("pulses", format!("duplicate transition {}", p.transition)));
            }
            if !(p.width > 0.0 && p.carrier_frequency > 0.0 && p.peak_rabi >= 0.0) {
                return Err(PolaritonError::invalid("pulses", format!("{}: width and carrier must be > 0", p.transition)));
            }
        }
        Ok(Self { configuration, pulses })
    }

    pub fn pulse(&self, label: TransitionLabel) -> Option<&GaussianPulse> {
        self.pulses.iter().find(|p| p.transition == label)
    }

    pub fn first_center(&self) -> f64 {
        self.pulses.iter().map(|p| p.center_time).fold(f64::INFINITY, f64::min)
    }

    pub fn last_center(&self) -> f64 {
        self.pulses.iter().map(|p| p.center_time).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_width(&self) -> f64 {
        self.pulses.iter().map(|p| p.width).fold(0.0, f64::max)
    }

    /// Sum of the Rabi waveforms.
    pub fn rabi_value(&self, t: f64) -> f64 {
        field_value(self, t)
    }

    /// Physical drive Σ Ω_k/m_k.
    pub fn drive_field(&self, t: f64) -> f64 {
        self.pulses.iter().map(|p| p.field(t)).sum()
    }

    pub fn records(&self) -> Vec<PulseRecord> {
        self.pulses
            .iter()
            .map(|p| PulseRecord {
                transition: p.transition.key().to_string(),
                peak_rabi_b: p.peak_rabi,
                center_tau0: p.center_time / ROTATIONAL_PERIOD,
                width_tau0: p.width / ROTATIONAL_PERIOD,
                carrier_b: p.carrier_frequency,
                phase_rad: p.carrier_phase,
            })
            .collect()
    }
}

/// Σ peak·envelope·cos(ω(t−τ_c)+φ).
pub fn field_value(train: &PulseTrain, t: f64) -> f64 {
    train.pulses.iter().map(|p| p.rabi(t)).sum()
}

/// Centre times of the two stages, internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delays {
    pub first: f64,
    pub second: f64,
}

impl Delays {
    pub fn from_tau0(first: f64, second: f64) -> Self {
        Self { first: tau0_to_internal_time(first), second: tau0_to_internal_time(second) }
    }

    /// Fundamental: τ± = 0, τ₂,₊ = 121.053τ₀. SecondHarmonic: τ₁,₀ = 0, τ₁,± = 109.524τ₀.
    pub fn standard(config: Configuration) -> Self {
        match config {
            Configuration::Fundamental => Self::from_tau0(0.0, 121.053),
            Configuration::SecondHarmonic => Self::from_tau0(0.0, 109.524),
        }
    }

    pub fn for_label(&self, label: TransitionLabel) -> f64 {
        if label.is_second_stage() {
            self.second
        } else {
            self.first
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayPolicy {
    /// Use the delays as given.
    #[default]
    AsGiven,
    /// Push the second stage later by whole revival periods until the two
    /// stages are at least `MIN_SEPARATION` widths apart.
    Separated,
}

/// Minimum stage separation, in pulse widths, enforced by `DelayPolicy::Separated`.
pub const MIN_SEPARATION: f64 = 8.0;

impl DelayPolicy {
    pub fn apply(self, cavity: &CavitySpec, delays: Delays, width: f64) -> Delays {
        match self {
            Self::AsGiven => delays,
            Self::Separated => {
                let gap = delays.second - delays.first;
                let need = MIN_SEPARATION * width;
                if gap >= need {
                    return delays;
                }
                let period = common_period(cavity).unwrap_or(10.0 * ROTATIONAL_PERIOD);
                let extra = ((need - gap) / period).ceil() * period;
                Delays { first: delays.first, second: delays.second + extra }
            }
        }
    }
}

/// Common period of every Bohr frequency of the four-level system, when one exists.
///
/// All frequencies are integer multiples of g exactly when 2/g is an integer;
/// otherwise `None`.
pub fn common_period(cavity: &CavitySpec) -> Option<f64> {
    let k = 2.0 / cavity.coupling_g;
    ((k - k.round()).abs() < 1e-9 && k.round() >= 1.0).then(|| TAU / cavity.coupling_g)
}

/// First revival multiple at or after `t_end`; `t_end` itself when no revival exists.
pub fn canonical_target_time(cavity: &CavitySpec, t_end: f64) -> f64 {
    match common_period(cavity) {
        Some(p) => (t_end / p - 1e-12).ceil().max(0.0) * p,
        None => t_end.max(0.0),
    }
}

/// φ_c = φ_target − π/2 + ω·τ_c, reduced to [0, 2π).
pub fn carrier_phases(cavity: &CavitySpec, target: &TargetState, delays: Delays) -> BTreeMap<TransitionLabel, f64> {
    TransitionLabel::for_configuration(cavity.configuration)
        .into_iter()
        .map(|l| {
            let phi = target.phase(l.phase_label()) - FRAC_PI_2 + l.carrier_frequency(cavity) * delays.for_label(l);
            (l, wrap_phase(phi))
        })
        .collect()
}

/// Gaussian pulses with peak √(2/π)·Δω·|θ| and width 1/Δω at resonant carriers.
pub fn synthesize(
    cavity: &CavitySpec,
    areas: &PulseAreaSet,
    phases: &BTreeMap<TransitionLabel, f64>,
    dw: f64,
    delays: Delays,
) -> Result<PulseTrain> {
    if !(dw.is_finite() && dw > 0.0) {
        return Err(PolaritonError::invalid("dw", "bandwidth must be finite and > 0"));
    }
    if areas.configuration != cavity.configuration {
        return Err(PolaritonError::ConfigMismatch { model: cavity.configuration, train: areas.configuration });
    }
    let pulses = TransitionLabel::for_configuration(cavity.configuration)
        .into_iter()
        .map(|l| {
            let area = areas.get(l).norm();
            if area > PI {
                return Err(PolaritonError::invalid("areas", format!("|θ| of {l} exceeds π")));
            }
            let phase = *phases
                .get(&l)
                .ok_or_else(|| PolaritonError::invalid("phases", format!("missing carrier phase for {l}")))?;
            Ok(GaussianPulse {
                transition: l,
                peak_rabi: (2.0 / PI).sqrt() * dw * area,
                center_time: delays.for_label(l),
                width: 1.0 / dw,
                carrier_frequency: l.carrier_frequency(cavity),
                carrier_phase: phase,
                moment: l.moment(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PulseTrain::new(cavity.configuration, pulses)
}

/// How the carrier phases of a designed train are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseChoice {
    /// From the optimal target state through the carrier mapping.
    Designed,
    /// Explicit carrier phases in train order.
    Carrier([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignedTrain {
    pub train: PulseTrain,
    pub target: TargetState,
    pub areas: PulseAreaSet,
    pub delays: Delays,
}

/// Required areas, optimal target at the canonical t_f, carrier phases and synthesis.
pub fn design_train(
    cavity: &CavitySpec,
    dw: f64,
    phases: &PhaseChoice,
    delays: Delays,
    policy: DelayPolicy,
) -> Result<DesignedTrain> {
    if !(dw.is_finite() && dw > 0.0) {
        return Err(PolaritonError::invalid("dw", "bandwidth must be finite and > 0"));
    }
    let delays = policy.apply(cavity, delays, 1.0 / dw);
    let t_end = delays.first.max(delays.second) + 6.0 / dw;
    let target = optimal_target_state(cavity, canonical_target_time(cavity, t_end))?;
    let areas = required_areas(cavity.configuration);
    let carrier = match phases {
        PhaseChoice::Designed => carrier_phases(cavity, &target, delays),
        PhaseChoice::Carrier(list) => TransitionLabel::for_configuration(cavity.configuration)
            .into_iter()
            .zip(list.iter().map(|&p| wrap_phase(p)))
            .collect(),
    };
    let train = synthesize(cavity, &areas, &carrier, dw, delays)?;
    Ok(DesignedTrain { train, target, areas, delays })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaEstimate {
    /// ∫ Ω(t) e^{iωt} dt over the window.
    pub area: Complex64,
    /// Fraction of the Gaussian mass outside the window.
    pub clipped_fraction: f64,
}

impl AreaEstimate {
    pub const CLIP_WARN: f64 = 1e-6;

    pub fn clipped(&self) -> bool {
        self.clipped_fraction > Self::CLIP_WARN
    }
}

/// ∫_{t₀}^{t₁} Ω_k(t) e^{iωt} dt for the pulse on `label`, by adaptive Simpson.
///
/// Against a resonant pulse this is |θ|·e^{i(ωτ_c − φ)} plus a counter-rotating
/// part of relative size e^{−2(ω/Δω)²}.
pub fn numeric_complex_area(train: &PulseTrain, label: TransitionLabel, omega: f64, t0: f64, t1: f64) -> Result<AreaEstimate> {
    if !(t1 > t0) {
        return Err(PolaritonError::invalid("t1", "must exceed t0"));
    }
    let Some(pulse) = train.pulse(label) else {
        return Ok(AreaEstimate { area: Complex64::default(), clipped_fraction: 0.0 });
    };
    let s = std::f64::consts::SQRT_2 * pulse.width;
    let clipped_fraction = 0.5 * erfc((pulse.center_time - t0) / s) + 0.5 * erfc((t1 - pulse.center_time) / s);
    if pulse.peak_rabi == 0.0 {
        return Ok(AreaEstimate { area: Complex64::default(), clipped_fraction });
    }
    let lo = t0.max(pulse.center_time - ENVELOPE_CUTOFF * pulse.width);
    let hi = t1.min(pulse.center_time + ENVELOPE_CUTOFF * pulse.width);
    if hi <= lo {
        return Ok(AreaEstimate { area: Complex64::default(), clipped_fraction });
    }
    let f = |t: f64| Complex64::from_polar(pulse.rabi(t), omega * t);
    let fastest = omega.abs() + pulse.carrier_frequency;
    let panel = (pulse.width / 2.0).min(if fastest > 0.0 { PI / fastest } else { f64::INFINITY });
    let panels = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let tol = 1e-10 / panels as f64;
    let area = (0..panels)
        .map(|i| {
            let a = lo + i as f64 * h;
            adaptive_simpson(&f, a, a + h, tol)
        })
        .sum();
    Ok(AreaEstimate { area, clipped_fraction })
}

fn adaptive_simpson(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Residuals of the frequency-weighted area-phase relations, as the distance
/// of each left side (divided by 2gπ) to the nearest integer. Diagnostic only;
/// the relations are not used for design.
pub fn area_phase_condition_residuals(cavity: &CavitySpec, areas: &PulseAreaSet) -> [f64; 2] {
    let levels = dressed_levels_analytic(cavity, 1).expect("static cutoff");
    let e = |l| find_level(&levels, l).expect("target level").energy;
    let arg = |l| areas.get(l).arg();
    let g = cavity.coupling_g;
    let (wp, wm) = (e(DressedLabel::Plus(0)), e(DressedLabel::Minus(0)));
    let lhs = match cavity.configuration {
        Configuration::Fundamental => {
            let w2 = e(DressedLabel::Direct { j: 2, n: 0 });
            [
                -wp * arg(TransitionLabel::MinusGround) + wm * arg(TransitionLabel::PlusGround),
                -(w2 - wp) * arg(TransitionLabel::PlusGround) + wp * arg(TransitionLabel::TwoPlus),
            ]
        }
        Configuration::SecondHarmonic => {
            let w1 = e(DressedLabel::Direct { j: 1, n: 0 });
            [
                (w1 - wm) * arg(TransitionLabel::OneGround) + w1 * arg(TransitionLabel::MinusOne) - wm * FRAC_PI_2,
                (w1 - wm) * arg(TransitionLabel::PlusOne) + (wp - w1) * arg(TransitionLabel::MinusOne),
            ]
        }
    };
    lhs.map(|v| {
        let k = v / (2.0 * g * PI);
        (k - k.round()).abs()
    })
}

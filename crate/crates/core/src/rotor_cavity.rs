//! Rotor ⊗ cavity product basis, the cosθ operator, the bare rotor–cavity
//! Hamiltonian and its dressed (polariton) eigenstates.
//!
//! Kets are `|J,M=0⟩ ⊗ |n⟩` with J ∈ {0, 1, 2}. The coupling term of the bare
//! Hamiltonian is `−g₀ cosθ ⊗ (a + a†)`. With that sign the analytic doublets
//! take the form
//!
//! ```text
//! |+;n⟩ =  (|J_hi, n⟩ − |J_lo, n+1⟩)/√2     E = E_res(n) + g√(n+1)
//! |−;n⟩ = −(|J_hi, n⟩ + |J_lo, n+1⟩)/√2     E = E_res(n) − g√(n+1)
//! ```
//!
//! so that the rotor component that carries the optical transition enters the
//! `+` branch with a positive and the `−` branch with a negative amplitude.

use std::cmp::Ordering;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PolaritonError, Result};

/// Highest rotational level kept in the model.
pub const J_MAX: usize = 2;
/// Default photon-number cutoff.
pub const DEFAULT_N_MAX: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    /// ω_c = 2B, resonant with J = 0 ↔ 1.
    Fundamental,
    /// ω_c = 4B, resonant with J = 1 ↔ 2.
    SecondHarmonic,
}

impl Configuration {
    pub fn cavity_frequency(self) -> f64 {
        match self {
            Self::Fundamental => 2.0,
            Self::SecondHarmonic => 4.0,
        }
    }

    /// Lower rotational level of the cavity-resonant pair.
    pub fn resonant_lower_j(self) -> usize {
        match self {
            Self::Fundamental => 0,
            Self::SecondHarmonic => 1,
        }
    }

    /// ⟨J_lo|cosθ|J_lo+1⟩ of the cavity-resonant pair.
    pub fn resonant_dipole(self) -> f64 {
        cos_theta_element(self.resonant_lower_j(), self.resonant_lower_j() + 1)
    }

    /// The four dressed levels of the control scheme, in canonical order.
    pub fn target_levels(self) -> [DressedLabel; 4] {
        use DressedLabel::*;
        match self {
            Self::Fundamental => [Ground, Minus(0), Plus(0), Direct { j: 2, n: 0 }],
            Self::SecondHarmonic => [Ground, Direct { j: 1, n: 0 }, Plus(0), Minus(0)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fundamental => "fundamental",
            Self::SecondHarmonic => "second-harmonic",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which terms of the cavity coupling are retained in the product-basis Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityCoupling {
    /// Only the resonant Jaynes–Cummings exchange of the configuration's rotor pair.
    #[default]
    RotatingWave,
    /// Every term of `−g₀ cosθ ⊗ (a + a†)`, including counter-rotating and
    /// off-resonant rotor pairs.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub configuration: Configuration,
    /// Dressed coupling g (g₁ or g₂) in units of B; already includes the
    /// resonant dipole matrix element.
    pub coupling_g: f64,
}

impl CavitySpec {
    pub fn new(configuration: Configuration, coupling_g: f64) -> Result<Self> {
        if !(coupling_g.is_finite() && coupling_g > 0.0) {
            return Err(PolaritonError::invalid("coupling_g", "must be finite and > 0"));
        }
        Ok(Self { configuration, coupling_g })
    }

    pub fn cavity_frequency(&self) -> f64 {
        self.configuration.cavity_frequency()
    }

    /// Bare coupling g₀ recovered by dividing out the resonant dipole element.
    pub fn bare_coupling(&self) -> f64 {
        self.coupling_g / self.configuration.resonant_dipole()
    }
}

/// Flat index ↔ (J, n) bijection, J-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductBasis {
    j_max: usize,
    n_max: usize,
}

impl ProductBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(PolaritonError::invalid("n_max", "photon cutoff must be ≥ 1"));
        }
        Ok(Self { j_max: J_MAX, n_max })
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.j_max + 1) * (self.n_max + 1)
    }

    pub fn index(&self, j: usize, n: usize) -> usize {
        debug_assert!(j <= self.j_max && n <= self.n_max);
        j * (self.n_max + 1) + n
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        (index / (self.n_max + 1), index % (self.n_max + 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.dim()).map(move |i| {
            let (j, n) = self.state(i);
            (i, j, n)
        })
    }

    /// cosθ ⊗ 1_photon as a dense real matrix.
    pub fn cos_theta_full(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.j_max {
            let c = cos_theta_element(j, j + 1);
            for n in 0..=self.n_max {
                let (a, b) = (self.index(j, n), self.index(j + 1, n));
                m[(a, b)] = c;
                m[(b, a)] = c;
            }
        }
        m
    }
}

/// ⟨J₁,0|cosθ|J₂,0⟩ for M = 0.
pub fn cos_theta_element(j1: usize, j2: usize) -> f64 {
    let (lo, hi) = if j1 < j2 { (j1, j2) } else { (j2, j1) };
    if hi != lo + 1 {
        return 0.0;
    }
    let j = lo as f64;
    (j + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 3.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosThetaOperator {
    pub matrix: DMatrix<f64>,
}

impl CosThetaOperator {
    pub fn j_max(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn top_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn cos_theta_matrix(j_max: usize) -> Result<CosThetaOperator> {
    if j_max < 1 {
        return Err(PolaritonError::invalid("j_max", "must be ≥ 1"));
    }
    let matrix = DMatrix::from_fn(j_max + 1, j_max + 1, cos_theta_element);
    Ok(CosThetaOperator { matrix })
}

/// H₀ = B·J(J+1) + ω_c·n − g₀·cosθ⊗(a + a†), energies in units of B.
pub fn bare_hamiltonian(cavity: &CavitySpec, basis: &ProductBasis, coupling: CavityCoupling) -> DMatrix<f64> {
    let dim = basis.dim();
    let wc = cavity.cavity_frequency();
    let g0 = cavity.bare_coupling();
    let resonant_lo = cavity.configuration.resonant_lower_j();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, j, n) in basis.iter() {
        h[(i, i)] = (j * (j + 1)) as f64 + wc * n as f64;
    }
    for j in 0..basis.j_max() {
        let c = cos_theta_element(j, j + 1);
        for n in 0..basis.n_max() {
            let amp = -g0 * c * ((n + 1) as f64).sqrt();
            // |j, n+1⟩ ↔ |j+1, n⟩ is the resonant (photon absorbed by the rotor) exchange.
            let exchange = (basis.index(j, n + 1), basis.index(j + 1, n));
            // |j, n⟩ ↔ |j+1, n+1⟩ creates or destroys two excitations.
            let counter = (basis.index(j, n), basis.index(j + 1, n + 1));
            let keep_exchange = coupling == CavityCoupling::Full || j == resonant_lo;
            if keep_exchange {
                h[exchange] = amp;
                h[(exchange.1, exchange.0)] = amp;
            }
            if coupling == CavityCoupling::Full {
                h[counter] = amp;
                h[(counter.1, counter.0)] = amp;
            }
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DressedLabel {
    /// |0;0⟩, the vacuum rotational ground state.
    Ground,
    Plus(u32),
    Minus(u32),
    /// Uncoupled direct-product state |J⟩|n⟩.
    Direct { j: u32, n: u32 },
}

impl DressedLabel {
    /// Column-friendly identifier.
    pub fn key(&self) -> String {
        match *self {
            Self::Ground => "ground".into(),
            Self::Plus(n) => format!("plus_{n}"),
            Self::Minus(n) => format!("minus_{n}"),
            Self::Direct { j, n } => format!("direct_{j}_{n}"),
        }
    }

    pub fn parse(key: &str) -> Option<Self> {
        if key == "ground" {
            return Some(Self::Ground);
        }
        let mut parts = key.split('_');
        let kind = parts.next()?;
        let nums: Vec<u32> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        match (kind, nums.as_slice()) {
            ("plus", [n]) => Some(Self::Plus(*n)),
            ("minus", [n]) => Some(Self::Minus(*n)),
            ("direct", [j, n]) => Some(Self::Direct { j: *j, n: *n }),
            _ => None,
        }
    }

    fn sort_rank(&self) -> (u32, u32, u32) {
        match *self {
            Self::Ground => (0, 0, 0),
            Self::Minus(n) => (1, n, 0),
            Self::Plus(n) => (1, n, 1),
            Self::Direct { j, n } => (2, j, n),
        }
    }
}

impl Ord for DressedLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_rank().cmp(&other.sort_rank())
    }
}

impl PartialOrd for DressedLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DressedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Ground => write!(f, "|0;0>"),
            Self::Plus(n) => write!(f, "|+;{n}>"),
            Self::Minus(n) => write!(f, "|-;{n}>"),
            Self::Direct { j, n } => write!(f, "|{j};{n}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedLevel {
    pub label: DressedLabel,
    /// Eigenenergy in units of B.
    pub energy: f64,
    /// Amplitudes over the product basis.
    pub coefficients: Vec<Complex64>,
}

impl DressedLevel {
    /// ⟨self|ψ⟩ for a product-basis vector.
    pub fn overlap(&self, psi: &[Complex64]) -> Complex64 {
        self.coefficients.iter().zip(psi).map(|(c, p)| c.conj() * p).sum()
    }
}

pub fn find_level(levels: &[DressedLevel], label: DressedLabel) -> Option<&DressedLevel> {
    levels.iter().find(|l| l.label == label)
}

/// Closed-form Jaynes–Cummings dressed levels over the truncated basis.
///
/// The returned set is complete: besides the doublets and uncoupled
/// product states it contains the one state at the photon cutoff whose
/// doublet partner lies outside the basis, labelled as a direct state.
pub fn dressed_levels_analytic(cavity: &CavitySpec, n_max: usize) -> Result<Vec<DressedLevel>> {
    let basis = ProductBasis::new(n_max)?;
    let g = cavity.coupling_g;
    let wc = cavity.cavity_frequency();
    let lo = cavity.configuration.resonant_lower_j();
    let hi = lo + 1;
    let spectator = match cavity.configuration {
        Configuration::Fundamental => 2,
        Configuration::SecondHarmonic => 0,
    };
    let rot = |j: usize| (j * (j + 1)) as f64;
    let unit = |idx: usize| {
        let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        v[idx] = Complex64::new(1.0, 0.0);
        v
    };

    let mut levels = Vec::with_capacity(basis.dim());
    // Lower resonant level with zero photons: no partner.
    let lo_label = if lo == 0 { DressedLabel::Ground } else { DressedLabel::Direct { j: lo as u32, n: 0 } };
    levels.push(DressedLevel { label: lo_label, energy: rot(lo), coefficients: unit(basis.index(lo, 0)) });

    for n in 0..n_max {
        let e_res = rot(hi) + wc * n as f64;
        let split = g * ((n + 1) as f64).sqrt();
        let (i_hi, i_lo) = (basis.index(hi, n), basis.index(lo, n + 1));
        let mut plus = vec![Complex64::new(0.0, 0.0); basis.dim()];
        plus[i_hi] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        plus[i_lo] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        let mut minus = vec![Complex64::new(0.0, 0.0); basis.dim()];
        minus[i_hi] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        minus[i_lo] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        levels.push(DressedLevel { label: DressedLabel::Plus(n as u32), energy: e_res + split, coefficients: plus });
        levels.push(DressedLevel { label: DressedLabel::Minus(n as u32), energy: e_res - split, coefficients: minus });
    }
    // Upper resonant level at the cutoff: its partner |lo, n_max+1⟩ is truncated.
    levels.push(DressedLevel {
        label: DressedLabel::Direct { j: hi as u32, n: n_max as u32 },
        energy: rot(hi) + wc * n_max as f64,
        coefficients: unit(basis.index(hi, n_max)),
    });
    for n in 0..=n_max {
        let label = if spectator == 0 && n == 0 {
            DressedLabel::Ground
        } else {
            DressedLabel::Direct { j: spectator as u32, n: n as u32 }
        };
        levels.push(DressedLevel {
            label,
            energy: rot(spectator) + wc * n as f64,
            coefficients: unit(basis.index(spectator, n)),
        });
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.label.cmp(&b.label)));
    Ok(levels)
}

/// A numeric level whose best analytic match overlaps by less than 0.9.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMatchWarning {
    pub label: DressedLabel,
    pub overlap: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct NumericSpectrum {
    pub levels: Vec<DressedLevel>,
    pub warnings: Vec<LevelMatchWarning>,
}

impl NumericSpectrum {
    pub fn level(&self, label: DressedLabel) -> Option<&DressedLevel> {
        find_level(&self.levels, label)
    }
}

const MATCH_WARN_OVERLAP: f64 = 0.9;

/// Diagonalizes the bare Hamiltonian and labels each eigenvector by its
/// maximal-overlap analytic partner.
pub fn dressed_levels_numeric(cavity: &CavitySpec, n_max: usize, coupling: CavityCoupling) -> Result<NumericSpectrum> {
    if n_max < 2 {
        return Err(PolaritonError::invalid("n_max", "numeric dressed levels need a cutoff ≥ 2"));
    }
    let basis = ProductBasis::new(n_max)?;
    let analytic = dressed_levels_analytic(cavity, n_max)?;
    let eig = SymmetricEigen::new(bare_hamiltonian(cavity, &basis, coupling));
    let dim = basis.dim();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    // overlaps[a][k]: analytic a against the k-th numeric level in energy order.
    let overlaps: Vec<Vec<f64>> = analytic
        .iter()
        .map(|lvl| {
            order
                .iter()
                .map(|&col| {
                    let v = eig.eigenvectors.column(col);
                    let s: f64 = lvl.coefficients.iter().zip(v.iter()).map(|(c, x)| c.re * x).sum();
                    s * s
                })
                .collect()
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = (0..analytic.len()).flat_map(|a| (0..dim).map(move |k| (a, k))).collect();
    // Largest overlap first; ties resolved by numeric, then analytic, energy order.
    pairs.sort_by(|&(a1, k1), &(a2, k2)| {
        overlaps[a2][k2].total_cmp(&overlaps[a1][k1]).then(k1.cmp(&k2)).then(a1.cmp(&a2))
    });
    let mut analytic_taken = vec![false; analytic.len()];
    let mut numeric_label = vec![None; dim];
    for (a, k) in pairs {
        if analytic_taken[a] || numeric_label[k].is_some() {
            continue;
        }
        analytic_taken[a] = true;
        numeric_label[k] = Some(a);
    }

    let mut levels = Vec::with_capacity(dim);
    let mut warnings = Vec::new();
    for (k, &col) in order.iter().enumerate() {
        let a = numeric_label[k].expect("square assignment covers every level");
        let reference = &analytic[a];
        let v = eig.eigenvectors.column(col);
        let s: f64 = reference.coefficients.iter().zip(v.iter()).map(|(c, x)| c.re * x).sum();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let overlap = overlaps[a][k];
        if overlap < MATCH_WARN_OVERLAP {
            warnings.push(LevelMatchWarning { label: reference.label, overlap, energy: eig.eigenvalues[col] });
        }
        levels.push(DressedLevel {
            label: reference.label,
            energy: eig.eigenvalues[col],
            coefficients: v.iter().map(|x| Complex64::new(sign * x, 0.0)).collect(),
        });
    }
    Ok(NumericSpectrum { levels, warnings })
}

/// Matrix of a real product-basis operator between the given levels.
pub fn operator_in_levels(levels: &[DressedLevel], op: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = levels.len();
    DMatrix::from_fn(n, n, |r, c| {
        let bra = &levels[r].coefficients;
        let ket = &levels[c].coefficients;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, b) in bra.iter().enumerate() {
            if b.norm_sqr() == 0.0 {
                continue;
            }
            for (j, k) in ket.iter().enumerate() {
                let o = op[(i, j)];
                if o != 0.0 {
                    acc += b.conj() * o * k;
                }
            }
        }
        acc
    })
}

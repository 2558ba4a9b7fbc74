//! Domain types for the cyclic three-level model.
//!
//! Every rate, coupling and detuning is an angular frequency stored in units
//! of 2π × MHz, so a rate written as `2π × 0.1 MHz` is stored as `0.1`. Only
//! ratios of these quantities enter the dimensionless observables. Phases are
//! exchanged in degrees.
//!
//! States are labelled 1, 2, 3 in the physics and 0, 1, 2 in matrix indices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular frequency in units of 2π × MHz.
pub type AngularFrequency = f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Left,
    Right,
}

impl Chirality {
    pub const BOTH: [Chirality; 2] = [Chirality::Left, Chirality::Right];

    /// Sign carried by the transition dipoles, and hence by every coupling.
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Left => 1.0,
            Chirality::Right => -1.0,
        }
    }

    pub fn mirror(self) -> Chirality {
        match self {
            Chirality::Left => Chirality::Right,
            Chirality::Right => Chirality::Left,
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::Left => "left",
            Chirality::Right => "right",
        })
    }
}

impl FromStr for Chirality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l" | "left" => Ok(Chirality::Left),
            "r" | "right" => Ok(Chirality::Right),
            other => Err(Error::InvalidArgument(format!("unknown chirality '{other}'"))),
        }
    }
}

/// Wraps a phase in degrees into `[0, 360)`.
pub fn normalize_degrees(phase: f64) -> f64 {
    let p = phase.rem_euclid(360.0);
    if p >= 360.0 {
        0.0
    } else {
        p
    }
}

/// A complex Rabi coupling in polar form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub amplitude: AngularFrequency,
    #[serde(default)]
    pub phase_deg: f64,
}

impl Coupling {
    /// Builds a coupling with nonnegative amplitude and phase in `[0, 360)`.
    /// A negative amplitude is folded onto the opposite phase.
    pub fn new(amplitude: f64, phase_deg: f64) -> Self {
        if amplitude < 0.0 {
            Coupling {
                amplitude: -amplitude,
                phase_deg: normalize_degrees(phase_deg + 180.0),
            }
        } else {
            Coupling {
                amplitude,
                phase_deg: normalize_degrees(phase_deg),
            }
        }
    }

    pub fn real(amplitude: f64) -> Self {
        Coupling::new(amplitude, 0.0)
    }

    pub fn zero() -> Self {
        Coupling::new(0.0, 0.0)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Coupling::new(z.norm(), z.arg().to_degrees())
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase_deg.to_radians())
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.amplitude.is_finite() || !self.phase_deg.is_finite() {
            return Err(Error::InvalidConfig(format!("{name} must be finite")));
        }
        Ok(())
    }
}

/// Drive fields: couplings on the three transitions and the detuning of |3>.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    pub omega21: Coupling,
    pub omega31: Coupling,
    pub omega32: Coupling,
    pub delta: AngularFrequency,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig::baseline()
    }
}

impl DriveConfig {
    /// Ω31 = Ω32 = 1 and Δ = 10 with Ω21 switched off.
    pub fn baseline() -> Self {
        DriveConfig {
            omega21: Coupling::zero(),
            omega31: Coupling::real(1.0),
            omega32: Coupling::real(1.0),
            delta: 10.0,
        }
    }

    pub fn undriven(delta: f64) -> Self {
        DriveConfig {
            omega21: Coupling::zero(),
            omega31: Coupling::zero(),
            omega32: Coupling::zero(),
            delta,
        }
    }

    pub fn with_omega21(mut self, omega21: Coupling) -> Self {
        self.omega21 = omega21;
        self
    }

    pub fn with_omega21_complex(self, omega21: Complex64) -> Self {
        self.with_omega21(Coupling::from_complex(omega21))
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn omega21_c(&self) -> Complex64 {
        self.omega21.to_complex()
    }

    pub fn omega31_c(&self) -> Complex64 {
        self.omega31.to_complex()
    }

    pub fn omega32_c(&self) -> Complex64 {
        self.omega32.to_complex()
    }

    pub fn validate(&self) -> Result<()> {
        self.omega21.validate("omega21")?;
        self.omega31.validate("omega31")?;
        self.omega32.validate("omega32")?;
        if !self.delta.is_finite() {
            return Err(Error::InvalidConfig("delta must be finite".into()));
        }
        Ok(())
    }
}

/// Returns the chirality-signed couplings (Ω21, Ω31, Ω32).
pub fn signed_couplings(drives: &DriveConfig, q: Chirality) -> (Complex64, Complex64, Complex64) {
    let s = q.sign();
    (
        drives.omega21_c() * s,
        drives.omega31_c() * s,
        drives.omega32_c() * s,
    )
}

/// Population relaxation rates `Γ_{j'j}` (decay j → j') and pure dephasing
/// rates of the three coherences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoherenceConfig {
    pub gamma12: AngularFrequency,
    pub gamma13: AngularFrequency,
    pub gamma23: AngularFrequency,
    pub dephasing21: AngularFrequency,
    pub dephasing31: AngularFrequency,
    pub dephasing32: AngularFrequency,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        DecoherenceConfig::baseline()
    }
}

impl DecoherenceConfig {
    /// Every relaxation and dephasing rate set to `rate`.
    pub fn uniform(rate: f64) -> Self {
        DecoherenceConfig {
            gamma12: rate,
            gamma13: rate,
            gamma23: rate,
            dephasing21: rate,
            dephasing31: rate,
            dephasing32: rate,
        }
    }

    pub fn baseline() -> Self {
        DecoherenceConfig::uniform(0.1)
    }

    fn rates(&self) -> [(&'static str, f64); 6] {
        [
            ("gamma12", self.gamma12),
            ("gamma13", self.gamma13),
            ("gamma23", self.gamma23),
            ("dephasing21", self.dephasing21),
            ("dephasing31", self.dephasing31),
            ("dephasing32", self.dephasing32),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in self.rates() {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {rate} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }

    /// Total decay rates (γ1, γ2, γ3) of the three levels.
    pub fn total_decay(&self) -> [f64; 3] {
        [0.0, self.gamma12, self.gamma13 + self.gamma23]
    }

    /// No population relaxation at all: the steady state is not unique.
    pub fn is_degenerate(&self) -> bool {
        self.gamma12 == 0.0 && self.gamma13 == 0.0 && self.gamma23 == 0.0
    }

    pub fn min_positive_rate(&self) -> Option<f64> {
        self.rates()
            .iter()
            .map(|&(_, r)| r)
            .filter(|&r| r > 0.0)
            .min_by(f64::total_cmp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransverseRates {
    pub g21: f64,
    pub g31: f64,
    pub g32: f64,
}

impl TransverseRates {
    /// Rate for coherence `ρ_lj` with zero-based indices `l != j`.
    pub fn get(&self, l: usize, j: usize) -> f64 {
        match (l.max(j), l.min(j)) {
            (1, 0) => self.g21,
            (2, 0) => self.g31,
            (2, 1) => self.g32,
            _ => 0.0,
        }
    }
}

/// `G_lj = (γ_l + γ_j)/2 + γ^ph_lj`.
pub fn transverse_rates(dec: &DecoherenceConfig) -> Result<TransverseRates> {
    dec.validate()?;
    let [g1, g2, g3] = dec.total_decay();
    Ok(TransverseRates {
        g21: 0.5 * (g2 + g1) + dec.dephasing21,
        g31: 0.5 * (g3 + g1) + dec.dephasing31,
        g32: 0.5 * (g3 + g2) + dec.dephasing32,
    })
}

/// Diagonal field-free equilibrium populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumState {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl Default for EquilibriumState {
    fn default() -> Self {
        EquilibriumState::ground()
    }
}

impl EquilibriumState {
    pub fn ground() -> Self {
        EquilibriumState {
            p1: 1.0,
            p2: 0.0,
            p3: 0.0,
        }
    }

    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let es = EquilibriumState { p1, p2, p3 };
        es.validate()?;
        Ok(es)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p1, self.p2, self.p3];
        if ps.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig(
                "equilibrium populations must be finite and nonnegative".into(),
            ));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(
                "equilibrium populations must sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// Length of the vectorized density matrix.
pub const VEC_DIM: usize = 9;

/// Row-major position of `ρ_lj` (zero-based) in the vectorized state
/// `(ρ11, ρ12, ρ13, ρ21, ρ22, ρ23, ρ31, ρ32, ρ33)`.
#[inline]
pub const fn vec_index(l: usize, j: usize) -> usize {
    3 * l + j
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix3<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(entries: Matrix3<Complex64>) -> Self {
        DensityMatrix { entries }
    }

    /// Projector onto level `k` (zero-based).
    pub fn pure(k: usize) -> Self {
        let mut m = Matrix3::zeros();
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix { entries: m }
    }

    pub fn ground() -> Self {
        DensityMatrix::pure(0)
    }

    pub fn from_equilibrium(es: &EquilibriumState) -> Self {
        DensityMatrix {
            entries: Matrix3::from_diagonal(&nalgebra::Vector3::new(
                Complex64::new(es.p1, 0.0),
                Complex64::new(es.p2, 0.0),
                Complex64::new(es.p3, 0.0),
            )),
        }
    }

    pub fn from_vectorized(v: &SVector<Complex64, VEC_DIM>) -> Self {
        DensityMatrix {
            entries: Matrix3::from_fn(|l, j| v[vec_index(l, j)]),
        }
    }

    pub fn to_vectorized(&self) -> SVector<Complex64, VEC_DIM> {
        SVector::from_fn(|k, _| self.entries[(k / 3, k % 3)])
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.entries
    }

    /// Entry `ρ_lj` with zero-based indices.
    pub fn get(&self, l: usize, j: usize) -> Complex64 {
        self.entries[(l, j)]
    }

    /// The radiation observable ρ21.
    pub fn rho21(&self) -> Complex64 {
        self.entries[(1, 0)]
    }

    pub fn populations(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.entries[(k, k)].re)
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for l in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.entries[(l, j)] - self.entries[(j, l)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.entries - other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Checks trace, Hermiticity and positivity against the given tolerances.
    pub fn is_physical(&self, trace_tol: f64, herm_tol: f64, psd_tol: f64) -> bool {
        (self.trace() - 1.0).norm() <= trace_tol
            && self.hermiticity_error() <= herm_tol
            && self.min_eigenvalue() >= -psd_tol
    }
}

/// Bare level structure of a molecule. Only used for documentation of the
/// resolved configuration; the dynamics live in the rotating frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoleculeMetadata {
    pub name: String,
    pub nu21: AngularFrequency,
    pub nu31: AngularFrequency,
    pub nu32: AngularFrequency,
}

impl Default for MoleculeMetadata {
    fn default() -> Self {
        MoleculeMetadata::propanediol()
    }
}

impl MoleculeMetadata {
    /// 1,2-propanediol OH-stretch working states.
    pub fn propanediol() -> Self {
        MoleculeMetadata {
            name: "1,2-propanediol".into(),
            nu21: 100.9613e6,
            nu31: 100.9621e6,
            nu32: 846.8,
        }
    }

    /// `|ν31 − (ν21 + ν32)| / ν31`.
    pub fn resonance_mismatch(&self) -> f64 {
        (self.nu31 - (self.nu21 + self.nu32)).abs() / self.nu31.abs()
    }
}

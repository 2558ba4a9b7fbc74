//! Weak-drive susceptibilities and the analytic switch seed.
//!
//! Susceptibilities are reported with the dipole and vacuum-permittivity
//! prefactors divided out, so `chi1` has units of 1/angular-frequency and
//! `chi2` of 1/angular-frequency². Only level |1> and |2> equilibrium
//! populations enter, as in the standard two-term result; a population in
//! |3> is ignored.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{transverse_rates, Chirality, DecoherenceConfig, DriveConfig, EquilibriumState};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Susceptibilities {
    pub chi1: Complex64,
    pub chi2: Complex64,
}

impl Susceptibilities {
    /// Chirality-resolved values: `chi1` is the same for both enantiomers,
    /// `chi2` carries the sign of the dipole triple product.
    pub fn for_chirality(&self, q: Chirality) -> (Complex64, Complex64) {
        (self.chi1, self.chi2 * q.sign())
    }
}

/// `p1/(Δ − iG31) − p2/(Δ + iG32)`, the two-photon resonance factor.
fn two_photon_factor(dec: &DecoherenceConfig, delta: f64, es: &EquilibriumState) -> Result<Complex64> {
    let g = transverse_rates(dec)?;
    let lower = Complex64::new(delta, -g.g31);
    let upper = Complex64::new(delta, g.g32);
    let mut k = Complex64::new(0.0, 0.0);
    if es.p1 != 0.0 {
        k += es.p1 / lower;
    }
    if es.p2 != 0.0 {
        k -= es.p2 / upper;
    }
    if !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::InvalidDecoherence(
            "two-photon denominator vanishes (Δ = 0 with zero transverse rate)".into(),
        ));
    }
    Ok(k)
}

fn g21(dec: &DecoherenceConfig) -> Result<f64> {
    let g = transverse_rates(dec)?;
    if g.g21 <= 0.0 {
        return Err(Error::InvalidDecoherence(
            "transverse rate G21 must be positive".into(),
        ));
    }
    Ok(g.g21)
}

pub fn susceptibilities(
    dec: &DecoherenceConfig,
    delta: f64,
    es: &EquilibriumState,
) -> Result<Susceptibilities> {
    let g21 = g21(dec)?;
    let k = two_photon_factor(dec, delta, es)?;
    Ok(Susceptibilities {
        chi1: I * (es.p1 - es.p2) / g21,
        chi2: I / (2.0 * g21) * k,
    })
}

/// Lowest-order steady-state ρ21: a one-photon term linear in Ω21 whose sign
/// follows the chirality, and a chirality-even two-photon term in Ω31 Ω32*.
///
/// With the Hamiltonian convention of [`crate::liouvillian::build_hamiltonian`]
/// this reads `ρ21 = −s chi1 Ω21 + 2 chi2 Ω31 Ω32*`.
pub fn perturbative_coherence(
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    es: &EquilibriumState,
    q: Chirality,
) -> Result<Complex64> {
    let (odd, even) = coherence_terms(drives, dec, es)?;
    Ok(odd * q.sign() + even)
}

/// The chirality-odd (per unit sign) and chirality-even parts of
/// [`perturbative_coherence`].
pub fn coherence_terms(
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    es: &EquilibriumState,
) -> Result<(Complex64, Complex64)> {
    let chi = susceptibilities(dec, drives.delta, es)?;
    let odd = -chi.chi1 * drives.omega21_c();
    let even = 2.0 * chi.chi2 * drives.omega31_c() * drives.omega32_c().conj();
    Ok((odd, even))
}

/// `Ω21 = ± Ω31 Ω32* / (p1 − p2) · (p1/(Δ − iG31) − p2/(Δ + iG32))`.
///
/// The two branches silence opposite enantiomers at lowest order; which one
/// is which is left to the caller to decide numerically.
pub fn switch_seed(
    omega31: Complex64,
    omega32: Complex64,
    delta: f64,
    dec: &DecoherenceConfig,
    es: &EquilibriumState,
    branch: i8,
) -> Result<Complex64> {
    if branch != 1 && branch != -1 {
        return Err(Error::InvalidArgument(format!("branch must be ±1, got {branch}")));
    }
    let imbalance = es.p1 - es.p2;
    if imbalance == 0.0 {
        return Err(Error::NoSeed);
    }
    let k = two_photon_factor(dec, delta, es)?;
    Ok(f64::from(branch) * omega31 * omega32.conj() / imbalance * k)
}

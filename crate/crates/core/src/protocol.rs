//! Two-detection enantiomeric-excess estimate and its sensitivity to drive
//! errors around the switch point.
//!
//! Detection 1 uses the drive setting that silences the right-handed
//! molecules, detection 2 the same setting with the Ω21 phase advanced by
//! 180°, which silences the left-handed ones. The estimate is
//! `ε = (E1 − E2)/(E1 + E2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::steady_state;
use crate::model::{Chirality, Coupling, DecoherenceConfig, DriveConfig};
use crate::switch::{SwitchPoint, SWITCH_RESIDUAL};

/// Surviving |ρ21| below which a relative error is not defined.
pub const MIN_SURVIVING: f64 = 1e-14;
pub const DEFAULT_TARGET_ETA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mixture {
    pub n_left: f64,
    pub n_right: f64,
}

impl Mixture {
    pub fn new(n_left: f64, n_right: f64) -> Result<Self> {
        let m = Mixture { n_left, n_right };
        m.validate()?;
        Ok(m)
    }

    /// Mixture with unit total population and the given excess.
    pub fn from_excess(ee: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&ee) {
            return Err(Error::InvalidArgument(format!("excess {ee} outside [-1, 1]")));
        }
        Mixture::new(0.5 * (1.0 + ee), 0.5 * (1.0 - ee))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |n: f64| n.is_finite() && n >= 0.0;
        if !ok(self.n_left) || !ok(self.n_right) || self.n_left + self.n_right <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "mixture needs nonnegative particle numbers with a positive total, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn ee(&self) -> f64 {
        (self.n_left - self.n_right) / (self.n_left + self.n_right)
    }

    pub fn count(&self, q: Chirality) -> f64 {
        match q {
            Chirality::Left => self.n_left,
            Chirality::Right => self.n_right,
        }
    }

    pub fn swapped(&self) -> Self {
        Mixture {
            n_left: self.n_right,
            n_right: self.n_left,
        }
    }
}

/// How the fields radiated by the two enantiomers combine in a detector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// `N_L |ρ^L21| + N_R |ρ^R21|`, each species contributing its own
    /// amplitude. This is the combination under which the relative error
    /// equals `2 E_silenced / E_surviving` to first order.
    #[default]
    Amplitude,
    /// `|N_L ρ^L21 + N_R ρ^R21|`, a phase-coherent field sum.
    Coherent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionResult {
    pub e_d1: f64,
    pub e_d2: f64,
    pub ee_estimate: f64,
}

fn rho21(drives: &DriveConfig, dec: &DecoherenceConfig, q: Chirality) -> Result<num_complex::Complex64> {
    Ok(steady_state(drives, dec, q)?.rho21())
}

/// Signal radiated at ω21 by the mixture, with the per-molecule emitted
/// amplitude taken equal to the steady-state ρ21.
pub fn mixture_signal(
    mix: &Mixture,
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    summation: Summation,
) -> Result<f64> {
    mix.validate()?;
    let l = rho21(drives, dec, Chirality::Left)?;
    let r = rho21(drives, dec, Chirality::Right)?;
    Ok(match summation {
        Summation::Amplitude => mix.n_left * l.norm() + mix.n_right * r.norm(),
        Summation::Coherent => (l * mix.n_left + r * mix.n_right).norm(),
    })
}

/// Ω21 of the first detection, the one with the right-handed radiation off.
fn right_off_setting(switch: &SwitchPoint) -> Coupling {
    match switch.silenced {
        Chirality::Right => switch.omega21(),
        Chirality::Left => Coupling::new(switch.omega0, switch.phi0_deg + 180.0),
    }
}

fn estimate(e_d1: f64, e_d2: f64) -> Result<DetectionResult> {
    let total = e_d1 + e_d2;
    if total == 0.0 || !total.is_finite() {
        return Err(Error::UndefinedEstimate);
    }
    Ok(DetectionResult {
        e_d1,
        e_d2,
        ee_estimate: (e_d1 - e_d2) / total,
    })
}

/// Runs both detections at the switch point. `base` supplies Ω31, Ω32 and Δ;
/// its Ω21 is replaced.
pub fn run_two_detections(
    mix: &Mixture,
    switch: &SwitchPoint,
    base: &DriveConfig,
    dec: &DecoherenceConfig,
    summation: Summation,
) -> Result<DetectionResult> {
    if switch.residual > SWITCH_RESIDUAL {
        return Err(Error::InvalidArgument(format!(
            "switch residual {:.3e} exceeds {SWITCH_RESIDUAL:e}",
            switch.residual
        )));
    }
    run_detections_at(mix, right_off_setting(switch), base, dec, summation)
}

/// Two detections with the first at `omega21` and the second at the same
/// amplitude and the phase advanced by 180°.
pub fn run_detections_at(
    mix: &Mixture,
    omega21: Coupling,
    base: &DriveConfig,
    dec: &DecoherenceConfig,
    summation: Summation,
) -> Result<DetectionResult> {
    let first = base.with_omega21(omega21);
    let second = base.with_omega21(Coupling::new(omega21.amplitude, omega21.phase_deg + 180.0));
    let e_d1 = mixture_signal(mix, &first, dec, summation)?;
    let e_d2 = mixture_signal(mix, &second, dec, summation)?;
    estimate(e_d1, e_d2)
}

/// `η = 2 |ρ21_silenced| / |ρ21_surviving|` at `Ω0 (1 + δΩ_rel)`, `φ0 + δφ`.
pub fn relative_error(
    delta_omega_rel: f64,
    delta_phi_deg: f64,
    switch: &SwitchPoint,
    base: &DriveConfig,
    dec: &DecoherenceConfig,
) -> Result<f64> {
    let perturbed = base.with_omega21(Coupling::new(
        switch.omega0 * (1.0 + delta_omega_rel),
        switch.phi0_deg + delta_phi_deg,
    ));
    let silenced = rho21(&perturbed, dec, switch.silenced)?.norm();
    let surviving = rho21(&perturbed, dec, switch.silenced.mirror())?.norm();
    if surviving < MIN_SURVIVING {
        return Err(Error::DegeneratePerturbation { surviving });
    }
    Ok(2.0 * silenced / surviving)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationAxis {
    Amplitude,
    Phase,
}

impl DeviationAxis {
    /// Initial bracket width and the largest deviation that is searched.
    fn bracket(self) -> (f64, f64) {
        match self {
            DeviationAxis::Amplitude => (1e-5, 1.0),
            DeviationAxis::Phase => (0.01, 180.0),
        }
    }

    fn eta(
        self,
        deviation: f64,
        switch: &SwitchPoint,
        base: &DriveConfig,
        dec: &DecoherenceConfig,
    ) -> Result<f64> {
        match self {
            DeviationAxis::Amplitude => relative_error(deviation, 0.0, switch, base, dec),
            DeviationAxis::Phase => relative_error(0.0, deviation, switch, base, dec),
        }
    }
}

impl std::fmt::Display for DeviationAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeviationAxis::Amplitude => "amplitude",
            DeviationAxis::Phase => "phase",
        })
    }
}

impl std::str::FromStr for DeviationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" | "amp" => Ok(DeviationAxis::Amplitude),
            "phase" => Ok(DeviationAxis::Phase),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}

/// Smallest positive deviation along `axis` at which the relative error
/// reaches `target_eta`. Relative deviation for the amplitude axis, degrees
/// for the phase axis.
pub fn critical_deviation(
    axis: DeviationAxis,
    target_eta: f64,
    switch: &SwitchPoint,
    base: &DriveConfig,
    dec: &DecoherenceConfig,
) -> Result<f64> {
    if !(target_eta > 0.0 && target_eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target relative error must be positive, got {target_eta}"
        )));
    }
    let (mut hi, bound) = axis.bracket();
    let mut lo = 0.0;
    loop {
        if hi > bound {
            return Err(Error::NoCrossing {
                axis: axis.to_string(),
                bound,
            });
        }
        if axis.eta(hi, switch, base, dec)? >= target_eta {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if axis.eta(mid, switch, base, dec)? >= target_eta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EquilibriumState;
    use crate::switch::find_switch;

    fn baseline_switch(silenced: Chirality) -> (SwitchPoint, DriveConfig, DecoherenceConfig) {
        let base = DriveConfig::baseline();
        let dec = DecoherenceConfig::baseline();
        let p = find_switch(
            base.omega31,
            base.omega32,
            base.delta,
            &dec,
            &EquilibriumState::ground(),
            silenced,
        )
        .unwrap();
        (p, base, dec)
    }

    #[test]
    fn mixture_validation() {
        assert!(Mixture::new(0.0, 0.0).is_err());
        assert!(Mixture::new(-1.0, 2.0).is_err());
        assert_eq!(Mixture::new(3.0, 1.0).unwrap().ee(), 0.5);
        assert!((Mixture::from_excess(-0.5).unwrap().ee() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn signal_at_switch_is_surviving_species_only() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        let drives = p.drives(&base);
        let mix = Mixture::new(3.0, 5.0).unwrap();
        let left = steady_state(&drives, &dec, Chirality::Left).unwrap().rho21().norm();
        for mode in [Summation::Amplitude, Summation::Coherent] {
            let s = mixture_signal(&mix, &drives, &dec, mode).unwrap();
            assert!((s - 3.0 * left).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_left_sample_signal() {
        let drives = DriveConfig::baseline().with_omega21(Coupling::new(0.3, 77.0));
        let dec = DecoherenceConfig::baseline();
        let left = steady_state(&drives, &dec, Chirality::Left).unwrap().rho21().norm();
        let mix = Mixture::new(2.0, 0.0).unwrap();
        let s = mixture_signal(&mix, &drives, &dec, Summation::Coherent).unwrap();
        assert!((s - 2.0 * left).abs() < 1e-15);
    }

    #[test]
    fn racemic_and_pure_estimates() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        let r = run_two_detections(&Mixture::new(1.0, 1.0).unwrap(), &p, &base, &dec, Summation::Amplitude)
            .unwrap();
        assert!(r.ee_estimate.abs() < 1e-8);
        let r = run_two_detections(&Mixture::new(1.0, 0.0).unwrap(), &p, &base, &dec, Summation::Amplitude)
            .unwrap();
        assert!(r.e_d2 < 1e-9);
        assert!((r.ee_estimate - 1.0).abs() < 1e-8);
    }

    #[test]
    fn estimate_independent_of_which_switch_is_used() {
        let (pr, base, dec) = baseline_switch(Chirality::Right);
        let (pl, _, _) = baseline_switch(Chirality::Left);
        let mix = Mixture::from_excess(0.5).unwrap();
        let a = run_two_detections(&mix, &pr, &base, &dec, Summation::Amplitude).unwrap();
        let b = run_two_detections(&mix, &pl, &base, &dec, Summation::Amplitude).unwrap();
        assert!((a.ee_estimate - 0.5).abs() < 1e-8);
        assert!((b.ee_estimate - 0.5).abs() < 1e-8);
    }

    #[test]
    fn empty_signal_is_undefined() {
        assert_eq!(estimate(0.0, 0.0), Err(Error::UndefinedEstimate));
    }

    #[test]
    fn unconverged_switch_rejected() {
        let (mut p, base, dec) = baseline_switch(Chirality::Right);
        p.residual = 1e-6;
        assert!(run_two_detections(&Mixture::new(1.0, 1.0).unwrap(), &p, &base, &dec, Summation::Amplitude)
            .is_err());
    }

    #[test]
    fn relative_error_vanishes_at_switch() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        let eta = relative_error(0.0, 0.0, &p, &base, &dec).unwrap();
        assert!(eta < 1e-9, "{eta}");
    }

    #[test]
    fn amplitude_deviation_of_one_permille() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        let eta = relative_error(1e-3, 0.0, &p, &base, &dec).unwrap();
        assert!((0.005..=0.02).contains(&eta), "{eta}");
    }

    #[test]
    fn critical_deviation_bisects_to_target() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        let c = critical_deviation(DeviationAxis::Amplitude, 0.01, &p, &base, &dec).unwrap();
        let eta = relative_error(c, 0.0, &p, &base, &dec).unwrap();
        assert!((eta - 0.01).abs() < 1e-5, "{c} -> {eta}");
    }

    #[test]
    fn critical_deviation_needs_positive_target() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        assert!(matches!(
            critical_deviation(DeviationAxis::Phase, 0.0, &p, &base, &dec),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unreachable_target_reports_no_crossing() {
        let (p, base, dec) = baseline_switch(Chirality::Right);
        assert!(matches!(
            critical_deviation(DeviationAxis::Amplitude, 1e6, &p, &base, &dec),
            Err(Error::NoCrossing { .. })
        ));
    }
}

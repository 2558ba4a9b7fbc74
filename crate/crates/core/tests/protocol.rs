use chiral_switch::protocol::{relative_error, run_detections_at, Mixture, Summation};
use chiral_switch::switch::{find_switch, switch_curve, SWITCH_RESIDUAL};
use chiral_switch::{switch_seed, Chirality, Coupling, DecoherenceConfig, DriveConfig, EquilibriumState};

fn baseline_switch() -> chiral_switch::SwitchPoint {
    let d = DriveConfig::baseline();
    find_switch(
        d.omega31,
        d.omega32,
        d.delta,
        &DecoherenceConfig::baseline(),
        &EquilibriumState::ground(),
        Chirality::Right,
    )
    .unwrap()
}

/// `(ε − ε̂)/ε` from two full detections at the perturbed drive.
fn end_to_end_error(ee: f64, d_amp: f64, d_phi: f64, p: &chiral_switch::SwitchPoint) -> f64 {
    let base = DriveConfig::baseline();
    let mix = Mixture::from_excess(ee).unwrap();
    let omega = Coupling::new(p.omega0 * (1.0 + d_amp), p.phi0_deg + d_phi);
    let r = run_detections_at(&mix, omega, &base, &DecoherenceConfig::baseline(), Summation::Amplitude)
        .unwrap();
    (ee - r.ee_estimate) / ee
}

#[test]
fn relative_error_matches_end_to_end_estimate() {
    let p = baseline_switch();
    let dec = DecoherenceConfig::baseline();
    let base = DriveConfig::baseline();
    for (d_amp, d_phi) in [(1e-4, 0.0), (0.0, 6e-3), (-8e-5, 3e-3)] {
        let eta = relative_error(d_amp, d_phi, &p, &base, &dec).unwrap();
        assert!(eta < 2e-3, "{eta}");
        let errors: Vec<f64> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&ee| end_to_end_error(ee, d_amp, d_phi, &p))
            .collect();
        for e in &errors {
            assert!((e - errors[0]).abs() < 1e-10, "{errors:?}");
            assert!((e - eta).abs() < 1e-6, "eta {eta}, end to end {e}");
        }
    }
}

#[test]
fn detuning_curve_small_decoherence() {
    let dec = DecoherenceConfig::uniform(0.1);
    let es = EquilibriumState::ground();
    let one = Coupling::real(1.0);
    let curve = switch_curve(&[2.0, 10.0, 20.0], one, one, &dec, &es, Chirality::Left).unwrap();
    assert_eq!(curve.iter().map(|c| c.delta).collect::<Vec<_>>(), vec![2.0, 10.0, 20.0]);
    for c in &curve {
        let p = c.outcome.as_ref().unwrap();
        assert!(p.residual <= SWITCH_RESIDUAL);
    }
    let p = curve[2].outcome.as_ref().unwrap();
    let seed = switch_seed(one.to_complex(), one.to_complex(), 20.0, &dec, &es, 1).unwrap();
    assert!((p.omega0 / seed.norm() - 1.0).abs() < 0.05, "{} vs {}", p.omega0, seed.norm());
}

#[test]
fn switch_approaches_weak_drive_limit_at_large_detuning() {
    let es = EquilibriumState::ground();
    let one = Coupling::real(1.0);
    for rate in [0.1, 1.0] {
        let dec = DecoherenceConfig::uniform(rate);
        let deltas = [30.0, 60.0];
        let curve = switch_curve(&deltas, one, one, &dec, &es, Chirality::Right).unwrap();
        let gaps: Vec<f64> = curve
            .iter()
            .map(|c| {
                let p = c.outcome.as_ref().unwrap();
                let seed = switch_seed(one.to_complex(), one.to_complex(), c.delta, &dec, &es, 1).unwrap();
                (p.omega0 / seed.norm() - 1.0).abs()
            })
            .collect();
        assert!(gaps[1] < gaps[0] && gaps[1] < 0.05, "rate {rate}: {gaps:?}");
    }
}

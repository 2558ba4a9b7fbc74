//! Rotating-frame Hamiltonian, the 9×9 Liouvillian generator, the algebraic
//! steady-state solver and an explicit time-evolution oracle.
//!
//! The generator acts on the row-major vectorized density matrix
//! `(ρ11, ρ12, ρ13, ρ21, ρ22, ρ23, ρ31, ρ32, ρ33)` and implements
//!
//! ```text
//! dρ/dt = −i[H, ρ] + L(ρ)
//! [L(ρ)]_lj = −G_lj ρ_lj                          (l ≠ j)
//! [L(ρ)]_jj = Σ_{j'>j} Γ_{jj'} ρ_{j'j'} − γ_j ρ_jj
//! ```

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    signed_couplings, transverse_rates, vec_index, Chirality, DecoherenceConfig, DensityMatrix,
    DriveConfig, VEC_DIM,
};

pub type SuperMatrix = SMatrix<Complex64, VEC_DIM, VEC_DIM>;
pub type SuperVector = SVector<Complex64, VEC_DIM>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Condition estimates above this are treated as a non-unique steady state.
pub const MAX_CONDITION: f64 = 1e14;

/// `H = Δ|3⟩⟨3| + Σ_{l>j} sΩ_lj |l⟩⟨j| + h.c.` with ħ = 1.
pub fn build_hamiltonian(drives: &DriveConfig, q: Chirality) -> Matrix3<Complex64> {
    let (o21, o31, o32) = signed_couplings(drives, q);
    let mut h = Matrix3::zeros();
    h[(2, 2)] = Complex64::new(drives.delta, 0.0);
    for (l, j, o) in [(1, 0, o21), (2, 0, o31), (2, 1, o32)] {
        h[(l, j)] = o;
        h[(j, l)] = o.conj();
    }
    h
}

/// The superoperator `ρ ↦ −i[H, ρ] + L(ρ)` in the row-major vectorization.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    matrix: SuperMatrix,
}

impl Generator {
    pub fn matrix(&self) -> &SuperMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_vectorized(&(self.matrix * rho.to_vectorized()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        inf_norm(&self.matrix)
    }
}

fn inf_norm(m: &SuperMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm(m: &SuperMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn build_generator(
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    q: Chirality,
) -> Result<Generator> {
    drives.validate()?;
    let g = transverse_rates(dec)?;
    let h = build_hamiltonian(drives, q);
    let mut m = SuperMatrix::zeros();

    // −i(H_lm δ_jn − δ_lm H_nj) couples ρ_mn into dρ_lj/dt.
    for l in 0..3 {
        for j in 0..3 {
            let row = vec_index(l, j);
            for k in 0..3 {
                m[(row, vec_index(k, j))] -= I * h[(l, k)];
                m[(row, vec_index(l, k))] += I * h[(k, j)];
            }
        }
    }

    for l in 0..3 {
        for j in 0..3 {
            if l != j {
                m[(vec_index(l, j), vec_index(l, j))] -= g.get(l, j);
            }
        }
    }

    let (p1, p2, p3) = (vec_index(0, 0), vec_index(1, 1), vec_index(2, 2));
    let c = |x: f64| Complex64::new(x, 0.0);
    m[(p1, p2)] += c(dec.gamma12);
    m[(p1, p3)] += c(dec.gamma13);
    m[(p2, p3)] += c(dec.gamma23);
    m[(p2, p2)] -= c(dec.gamma12);
    m[(p3, p3)] -= c(dec.gamma13 + dec.gamma23);

    Ok(Generator { matrix: m })
}

/// Solves `Gρ = 0`, `tr ρ = 1` with the ρ11 row replaced by the trace row.
pub fn steady_state(
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    q: Chirality,
) -> Result<DensityMatrix> {
    let gen = build_generator(drives, dec, q)?;
    if dec.is_degenerate() {
        return Err(Error::DegenerateSteadyState {
            condition: f64::INFINITY,
            detail: format!("no population relaxation in {dec:?}"),
        });
    }
    solve_with_trace_row(&gen, || format!("{q} enantiomer, {drives:?}, {dec:?}"))
}

fn solve_with_trace_row(gen: &Generator, describe: impl Fn() -> String) -> Result<DensityMatrix> {
    let mut a = gen.matrix;
    let trace_row = vec_index(0, 0);
    for col in 0..VEC_DIM {
        a[(trace_row, col)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..3 {
        a[(trace_row, vec_index(k, k))] = Complex64::new(1.0, 0.0);
    }
    let mut b = SuperVector::zeros();
    b[trace_row] = Complex64::new(1.0, 0.0);

    let lu = a.lu();
    let inverse = lu.try_inverse().ok_or_else(|| Error::DegenerateSteadyState {
        condition: f64::INFINITY,
        detail: describe(),
    })?;
    let condition = one_norm(&a) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::DegenerateSteadyState {
            condition,
            detail: describe(),
        });
    }
    let mut x = lu.solve(&b).ok_or_else(|| Error::DegenerateSteadyState {
        condition,
        detail: describe(),
    })?;

    let tolerance = 1e-10 * gen.norm_inf();
    let residual = |x: &SuperVector| (gen.matrix * x).iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if residual(&x) > tolerance {
        // one round of iterative refinement
        let r = b - a * x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        if residual(&x) > tolerance {
            return Err(Error::DegenerateSteadyState {
                condition,
                detail: describe(),
            });
        }
    }

    let rho = DensityMatrix::from_vectorized(&x);
    let m = rho.matrix();
    Ok(DensityMatrix::from_matrix(
        (m + m.adjoint()) * Complex64::new(0.5, 0.0),
    ))
}

// Dormand–Prince 5(4) tableau. The generator is time independent, so the
// node positions are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 50_000_000;

/// Integrates `dρ/dt = Gρ` from `rho0` to `t_end` with an adaptive
/// Dormand–Prince pair (absolute and relative tolerance both `tol`).
pub fn evolve_to_steady(
    drives: &DriveConfig,
    dec: &DecoherenceConfig,
    q: Chirality,
    rho0: &DensityMatrix,
    t_end: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must be > 0")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be > 0")));
    }
    let gen = build_generator(drives, dec, q)?;
    let y = integrate_linear(&gen.matrix, rho0.to_vectorized(), t_end, tol)?;
    Ok(DensityMatrix::from_vectorized(&y))
}

fn integrate_linear(
    g: &SuperMatrix,
    mut y: SuperVector,
    t_end: f64,
    tol: f64,
) -> Result<SuperVector> {
    let norm = inf_norm(g);
    let mut h = if norm > 0.0 { (0.01 / norm).min(t_end) } else { t_end };
    let mut t = 0.0;
    let mut k: [SuperVector; 7] = [SuperVector::zeros(); 7];
    k[0] = g * y;

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(y);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for s in 1..7 {
            let mut stage = y;
            for (r, a) in A[s].iter().enumerate().take(s) {
                if *a != 0.0 {
                    stage += k[r] * Complex64::new(h * a, 0.0);
                }
            }
            k[s] = g * stage;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let mut y_new = y;
        for (r, a) in A[6].iter().enumerate() {
            y_new += k[r] * Complex64::new(h * a, 0.0);
        }
        let k7 = g * y_new;

        let mut err = 0.0f64;
        for i in 0..VEC_DIM {
            let mut e = k7[i] * E[6];
            for (r, ec) in E.iter().enumerate().take(6) {
                e += k[r][i] * *ec;
            }
            let scale = tol + tol * y[i].norm().max(y_new[i].norm());
            err = err.max((e * h).norm() / scale);
        }

        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k[0] = k7;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 4.0 * f64::EPSILON * t.max(1.0) && t < t_end {
            return Err(Error::Stiffness { t, step: h });
        }
    }
    Err(Error::Stiffness { t, step: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coupling;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hamiltonian_undriven_is_diagonal_detuning() {
        let h = build_hamiltonian(&DriveConfig::undriven(10.0), Chirality::Left);
        let expected = Matrix3::from_diagonal(&nalgebra::Vector3::new(c(0., 0.), c(0., 0.), c(10., 0.)));
        assert_eq!(h, expected);
    }

    #[test]
    fn hamiltonian_single_coupling() {
        let d = DriveConfig::undriven(0.0).with_omega21(Coupling::new(0.1, 180.0));
        let h = build_hamiltonian(&d, Chirality::Left);
        assert!((h[(1, 0)] - c(-0.1, 0.0)).norm() < 1e-15);
        assert!((h[(0, 1)] - c(-0.1, 0.0)).norm() < 1e-15);
        let off: f64 = h.iter().map(|z| z.norm()).sum::<f64>() - h[(1, 0)].norm() - h[(0, 1)].norm();
        assert!(off < 1e-15);
    }

    #[test]
    fn hamiltonian_mirror_flips_off_diagonal_only() {
        let d = DriveConfig::baseline().with_omega21(Coupling::new(0.3, 40.0));
        let hl = build_hamiltonian(&d, Chirality::Left);
        let hr = build_hamiltonian(&d, Chirality::Right);
        let mut diag = Matrix3::zeros();
        diag[(2, 2)] = c(2.0 * d.delta, 0.0);
        assert!((hr - (-hl + diag)).map(|c| c.norm()).max() < 1e-15);
        assert!((hl - hl.adjoint()).map(|c| c.norm()).max() < 1e-15);
    }

    #[test]
    fn generator_decay_from_top_level() {
        let gen = build_generator(
            &DriveConfig::undriven(10.0),
            &DecoherenceConfig::baseline(),
            Chirality::Left,
        )
        .unwrap();
        let d = gen.apply(&DensityMatrix::pure(2));
        assert!((d.get(2, 2) - c(-0.2, 0.0)).norm() < 1e-15);
        assert!((d.get(1, 1) - c(0.1, 0.0)).norm() < 1e-15);
        assert!((d.get(0, 0) - c(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn generator_is_trace_preserving() {
        let d = DriveConfig::baseline().with_omega21(Coupling::new(0.7, 123.0));
        let dec = DecoherenceConfig {
            gamma12: 0.3,
            gamma13: 1.1,
            gamma23: 0.05,
            dephasing21: 0.2,
            dephasing31: 0.0,
            dephasing32: 2.0,
        };
        for q in Chirality::BOTH {
            let m = *build_generator(&d, &dec, q).unwrap().matrix();
            let sum = m.row(0) + m.row(4) + m.row(8);
            assert!(sum.map(|c| c.norm()).max() < 1e-12);
        }
    }

    #[test]
    fn generator_without_decoherence_only_detunes_level_three() {
        let gen = build_generator(
            &DriveConfig::undriven(3.0),
            &DecoherenceConfig::uniform(0.0),
            Chirality::Right,
        )
        .unwrap();
        let m = gen.matrix();
        for r in 0..VEC_DIM {
            for col in 0..VEC_DIM {
                let expected = match (r, col) {
                    (2, 2) | (5, 5) => c(0.0, 3.0),
                    (6, 6) | (7, 7) => c(0.0, -3.0),
                    _ => c(0.0, 0.0),
                };
                assert_eq!(m[(r, col)], expected, "entry ({r}, {col})");
            }
        }
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let rho = steady_state(
            &DriveConfig::undriven(7.0),
            &DecoherenceConfig::baseline(),
            Chirality::Left,
        )
        .unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::ground()) < 1e-14);
    }

    #[test]
    fn zero_decoherence_refused() {
        let err = steady_state(
            &DriveConfig::baseline(),
            &DecoherenceConfig::uniform(0.0),
            Chirality::Left,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSteadyState { .. }));
    }

    #[test]
    fn dark_top_level_is_degenerate() {
        // |3> never decays and is not driven: two stationary states.
        let dec = DecoherenceConfig {
            gamma13: 0.0,
            gamma23: 0.0,
            ..DecoherenceConfig::baseline()
        };
        let d = DriveConfig::undriven(1.0).with_omega21(Coupling::real(0.2));
        let err = steady_state(&d, &dec, Chirality::Left).unwrap_err();
        assert!(matches!(err, Error::DegenerateSteadyState { .. }));
    }

    #[test]
    fn steady_state_is_annihilated() {
        let d = DriveConfig::baseline().with_omega21(Coupling::new(0.1, 181.0));
        let dec = DecoherenceConfig::baseline();
        for q in Chirality::BOTH {
            let gen = build_generator(&d, &dec, q).unwrap();
            let rho = steady_state(&d, &dec, q).unwrap();
            let res = (gen.matrix() * rho.to_vectorized()).map(|c| c.norm()).max();
            assert!(res <= 1e-10 * gen.norm_inf());
            assert!(rho.is_physical(1e-10, 1e-12, 1e-10));
        }
    }

    #[test]
    fn evolution_fixed_point() {
        let rho = evolve_to_steady(
            &DriveConfig::undriven(2.0),
            &DecoherenceConfig::baseline(),
            Chirality::Left,
            &DensityMatrix::ground(),
            30.0,
            1e-10,
        )
        .unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::ground()) < 1e-14);
    }

    #[test]
    fn evolution_exponential_decay() {
        for t in [1.0, 5.0, 20.0] {
            let rho = evolve_to_steady(
                &DriveConfig::undriven(0.0),
                &DecoherenceConfig::baseline(),
                Chirality::Left,
                &DensityMatrix::pure(2),
                t,
                1e-12,
            )
            .unwrap();
            let expected = (-0.2 * t).exp();
            assert!((rho.get(2, 2).re - expected).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn evolution_converges_to_algebraic_steady_state() {
        let d = DriveConfig::baseline().with_omega21(Coupling::new(0.099, 181.17));
        let dec = DecoherenceConfig::baseline();
        for q in Chirality::BOTH {
            let alg = steady_state(&d, &dec, q).unwrap();
            let dyn_ = evolve_to_steady(&d, &dec, q, &DensityMatrix::ground(), 500.0, 1e-11).unwrap();
            assert!(alg.max_abs_diff(&dyn_) < 1e-8);
        }
    }

    #[test]
    fn evolution_argument_checks() {
        let d = DriveConfig::baseline();
        let dec = DecoherenceConfig::baseline();
        let rho = DensityMatrix::ground();
        assert!(evolve_to_steady(&d, &dec, Chirality::Left, &rho, 0.0, 1e-8).is_err());
        assert!(evolve_to_steady(&d, &dec, Chirality::Left, &rho, 1.0, 0.0).is_err());
    }

    #[test]
    fn unitary_evolution_without_decoherence() {
        let d = DriveConfig::undriven(0.0).with_omega21(Coupling::real(0.5));
        let rho = evolve_to_steady(
            &d,
            &DecoherenceConfig::uniform(0.0),
            Chirality::Left,
            &DensityMatrix::ground(),
            1.0,
            1e-12,
        )
        .unwrap();
        // Rabi oscillation between |1> and |2> at coupling 0.5.
        assert!((rho.get(1, 1).re - 0.5f64.sin().powi(2)).abs() < 1e-10);
    }
}

//! Locating the enantioselective switch: the Ω21 at which the steady-state
//! ρ21 of one enantiomer vanishes while the other's stays finite.
//!
//! ρ21 depends on both Ω21 and its conjugate, so the root is found for the
//! real map `(Re Ω21, Im Ω21) → (Re ρ21, Im ρ21)` with a damped Newton
//! iteration and a central-difference Jacobian. Working in Cartesian
//! coordinates means the amplitude never has to be clamped: a step through
//! the origin simply shows up as a 180° phase jump in the polar result.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::steady_state;
use crate::model::{
    Chirality, Coupling, DecoherenceConfig, DriveConfig, EquilibriumState,
};
use crate::perturbation::switch_seed;

pub const MAX_NEWTON_ITERATIONS: usize = 100;
/// Silenced |ρ21| at which Newton stops.
pub const NEWTON_RESIDUAL: f64 = 1e-12;
/// Newton step length at which the iteration is considered stagnant-converged.
pub const NEWTON_MIN_STEP: f64 = 1e-14;
/// Largest silenced |ρ21| accepted as a switch.
pub const SWITCH_RESIDUAL: f64 = 1e-10;
/// Required ratio between the surviving and silenced |ρ21|.
pub const SELECTIVITY_RATIO: f64 = 1e4;
pub const FALLBACK_GRID: usize = 64;
const FALLBACK_CANDIDATES: usize = 8;

/// How the Newton iteration that produced a switch point was started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOrigin {
    /// Weak-drive formula with the given branch (±1).
    Analytic { branch: i8 },
    /// Previous point of a continuation curve.
    Continuation,
    /// Coarse polar grid search.
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwitchPoint {
    pub omega0: f64,
    pub phi0_deg: f64,
    pub silenced: Chirality,
    pub residual: f64,
    pub surviving_amp: f64,
    pub origin: SeedOrigin,
    pub iterations: usize,
}

impl SwitchPoint {
    pub fn omega21(&self) -> Coupling {
        Coupling::new(self.omega0, self.phi0_deg)
    }

    /// `base` with Ω21 set to the switch value.
    pub fn drives(&self, base: &DriveConfig) -> DriveConfig {
        base.with_omega21(self.omega21())
    }
}

struct Problem<'a> {
    base: DriveConfig,
    dec: &'a DecoherenceConfig,
    silenced: Chirality,
}

impl Problem<'_> {
    fn rho21(&self, omega21: Complex64, q: Chirality) -> Result<Complex64> {
        let drives = self.base.with_omega21_complex(omega21);
        Ok(steady_state(&drives, self.dec, q)?.rho21())
    }

    fn silenced(&self, omega21: Complex64) -> Result<Complex64> {
        self.rho21(omega21, self.silenced)
    }

    fn surviving(&self, omega21: Complex64) -> Result<Complex64> {
        self.rho21(omega21, self.silenced.mirror())
    }

    fn scale(&self) -> f64 {
        (self.base.omega31.amplitude * self.base.omega32.amplitude).sqrt()
    }
}

struct NewtonOutcome {
    root: Complex64,
    residual: f64,
    iterations: usize,
}

/// Damped Newton on the silenced coherence. `Err` carries the best residual.
fn newton(problem: &Problem<'_>, start: Complex64, bound: f64) -> std::result::Result<NewtonOutcome, f64> {
    let eval = |z: Complex64| problem.silenced(z).map_err(|_| f64::INFINITY);
    let mut z = start;
    let mut r = eval(z)?;
    for it in 0..MAX_NEWTON_ITERATIONS {
        if r.norm() <= NEWTON_RESIDUAL {
            return Ok(NewtonOutcome {
                root: z,
                residual: r.norm(),
                iterations: it,
            });
        }
        let h = (1e-7 * z.norm()).max(1e-7);
        let dx = (eval(z + h)? - eval(z - h)?) / (2.0 * h);
        let dy = (eval(z + Complex64::new(0.0, h))? - eval(z - Complex64::new(0.0, h))?) / (2.0 * h);
        // J = [[dx.re, dy.re], [dx.im, dy.im]]
        let det = dx.re * dy.im - dy.re * dx.im;
        if det == 0.0 || !det.is_finite() {
            return Err(r.norm());
        }
        let sx = -(dy.im * r.re - dy.re * r.im) / det;
        let sy = -(-dx.im * r.re + dx.re * r.im) / det;
        let step = Complex64::new(sx, sy);
        if step.norm() < NEWTON_MIN_STEP {
            return if r.norm() <= SWITCH_RESIDUAL {
                Ok(NewtonOutcome {
                    root: z,
                    residual: r.norm(),
                    iterations: it,
                })
            } else {
                Err(r.norm())
            };
        }

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = z + step * lambda;
            if let Ok(rt) = problem.silenced(trial) {
                if rt.norm() < r.norm() {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((zn, rn)) = accepted else {
            return if r.norm() <= SWITCH_RESIDUAL {
                Ok(NewtonOutcome {
                    root: z,
                    residual: r.norm(),
                    iterations: it,
                })
            } else {
                Err(r.norm())
            };
        };
        if zn.norm() > bound {
            return Err(rn.norm());
        }
        z = zn;
        r = rn;
    }
    if r.norm() <= NEWTON_RESIDUAL {
        Ok(NewtonOutcome {
            root: z,
            residual: r.norm(),
            iterations: MAX_NEWTON_ITERATIONS,
        })
    } else {
        Err(r.norm())
    }
}

fn accept(problem: &Problem<'_>, out: NewtonOutcome, origin: SeedOrigin) -> Result<SwitchPoint> {
    let surviving = problem.surviving(out.root)?.norm();
    if out.residual > SWITCH_RESIDUAL || surviving <= SELECTIVITY_RATIO * out.residual {
        return Err(Error::NoConvergence {
            best_residual: out.residual,
        });
    }
    let c = Coupling::from_complex(out.root);
    Ok(SwitchPoint {
        omega0: c.amplitude,
        phi0_deg: c.phase_deg,
        silenced: problem.silenced,
        residual: out.residual,
        surviving_amp: surviving,
        origin,
        iterations: out.iterations,
    })
}

/// Polar grid of starting points ranked by the selectivity |ρ_sil|/|ρ_surv|.
fn grid_candidates(problem: &Problem<'_>, scale: f64) -> Vec<Complex64> {
    let n = FALLBACK_GRID;
    let (lo, hi) = ((scale * 1e-3).ln(), (scale * 1e2).ln());
    let mut ranked: Vec<(f64, Complex64)> = Vec::with_capacity(n * n);
    for i in 0..n {
        let amp = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        for k in 0..n {
            let phase = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let z = Complex64::from_polar(amp, phase);
            let (Ok(a), Ok(b)) = (problem.silenced(z), problem.surviving(z)) else {
                continue;
            };
            let merit = a.norm() / b.norm().max(f64::MIN_POSITIVE);
            if merit.is_finite() {
                ranked.push((merit, z));
            }
        }
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked
        .into_iter()
        .take(FALLBACK_CANDIDATES)
        .map(|(_, z)| z)
        .collect()
}

fn solve(problem: &Problem<'_>, es: &EquilibriumState, guess: Option<Complex64>) -> Result<SwitchPoint> {
    let base = &problem.base;
    let (o31, o32) = (base.omega31_c(), base.omega32_c());
    if o31.norm() == 0.0 || o32.norm() == 0.0 {
        return Err(Error::NoInterferencePartner);
    }
    es.validate()?;
    // Surface degenerate decoherence before searching.
    problem.silenced(Complex64::new(0.0, 0.0))?;

    let mut best = f64::INFINITY;
    let mut seed_scale = 0.0f64;
    let bound = 1e4 * problem.scale().max(1.0);

    if let Some(z0) = guess {
        seed_scale = seed_scale.max(z0.norm());
        match newton(problem, z0, bound) {
            Ok(out) => match accept(problem, out, SeedOrigin::Continuation) {
                Ok(p) => return Ok(p),
                Err(Error::NoConvergence { best_residual }) => best = best.min(best_residual),
                Err(e) => return Err(e),
            },
            Err(r) => best = best.min(r),
        }
    }

    // Pick the analytic branch that already does better on the silenced side.
    let mut seeds = Vec::new();
    for branch in [1i8, -1] {
        match switch_seed(o31, o32, base.delta, problem.dec, es, branch) {
            Ok(z) => {
                let r = problem.silenced(z)?.norm();
                seeds.push((r, branch, z));
            }
            Err(Error::NoSeed) => {}
            Err(e) => return Err(e),
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(_, branch, z0)) = seeds.first() {
        seed_scale = seed_scale.max(z0.norm());
        match newton(problem, z0, bound) {
            Ok(out) => match accept(problem, out, SeedOrigin::Analytic { branch }) {
                Ok(p) => return Ok(p),
                Err(Error::NoConvergence { best_residual }) => best = best.min(best_residual),
                Err(e) => return Err(e),
            },
            Err(r) => best = best.min(r),
        }
    }

    let scale = seed_scale.max(problem.scale());
    for z0 in grid_candidates(problem, scale) {
        match newton(problem, z0, bound) {
            Ok(out) => match accept(problem, out, SeedOrigin::Grid) {
                Ok(p) => return Ok(p),
                Err(Error::NoConvergence { best_residual }) => best = best.min(best_residual),
                Err(e) => return Err(e),
            },
            Err(r) => best = best.min(r),
        }
    }
    Err(Error::NoConvergence { best_residual: best })
}

/// Finds (Ω0, φ0) that nulls ρ21 of the `silenced` enantiomer in the full
/// steady state.
pub fn find_switch(
    omega31: Coupling,
    omega32: Coupling,
    delta: f64,
    dec: &DecoherenceConfig,
    es: &EquilibriumState,
    silenced: Chirality,
) -> Result<SwitchPoint> {
    let base = DriveConfig {
        omega21: Coupling::zero(),
        omega31,
        omega32,
        delta,
    };
    base.validate()?;
    let problem = Problem {
        base,
        dec,
        silenced,
    };
    solve(&problem, es, None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    pub outcome: Result<SwitchPoint>,
}

/// Tracks the switch along a detuning grid, seeding each solve with the
/// previous converged point. Failed points are reported in place.
pub fn switch_curve(
    delta_grid: &[f64],
    omega31: Coupling,
    omega32: Coupling,
    dec: &DecoherenceConfig,
    es: &EquilibriumState,
    silenced: Chirality,
) -> Result<Vec<CurvePoint>> {
    if delta_grid.is_empty() {
        return Err(Error::InvalidArgument("detuning grid is empty".into()));
    }
    let mut previous: Option<Complex64> = None;
    let mut curve = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let base = DriveConfig {
            omega21: Coupling::zero(),
            omega31,
            omega32,
            delta,
        };
        let outcome = base.validate().and_then(|_| {
            let problem = Problem {
                base,
                dec,
                silenced,
            };
            solve(&problem, es, previous)
        });
        if let Ok(p) = &outcome {
            previous = Some(p.omega21().to_complex());
        }
        curve.push(CurvePoint { delta, outcome });
    }
    Ok(curve)
}

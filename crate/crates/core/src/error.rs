use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid decoherence: {0}")]
    InvalidDecoherence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate steady state (condition estimate {condition:.3e}): {detail}")]
    DegenerateSteadyState { condition: f64, detail: String },

    #[error(
        "step size underflow at t = {t:.6e} (h = {step:.3e}); the system is too stiff for the \
         explicit integrator, reduce the system rates or use the algebraic steady-state solver"
    )]
    Stiffness { t: f64, step: f64 },

    #[error("no switch seed: equilibrium populations of |1> and |2> are equal")]
    NoSeed,

    #[error("no interference partner: the two-photon path needs omega31 * omega32 != 0")]
    NoInterferencePartner,

    #[error("switch search did not converge (best silenced |rho21| = {best_residual:.3e})")]
    NoConvergence { best_residual: f64 },

    #[error("enantiomeric-excess estimate undefined: total detected signal is zero")]
    UndefinedEstimate,

    #[error("surviving enantiomer signal {surviving:.3e} too small for a relative error")]
    DegeneratePerturbation { surviving: f64 },

    #[error("relative error never reaches the target along the {axis} axis up to {bound}")]
    NoCrossing { axis: String, bound: f64 },
}

impl Error {
    /// Errors caused by the user's input rather than by a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::InvalidDecoherence(_)
        )
    }
}

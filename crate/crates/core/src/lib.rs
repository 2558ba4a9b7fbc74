//! Steady-state model of the enantiomer-selective switch in cyclic
//! three-level molecules, with the two-detection enantiomeric-excess
//! protocol and its robustness analysis.

pub mod cli;
pub mod config;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod perturbation;
pub mod protocol;
pub mod sweep;
pub mod switch;

pub use config::Config;
pub use error::{Error, Result};
pub use liouvillian::{build_generator, evolve_to_steady, steady_state};
pub use model::{
    Chirality, Coupling, DecoherenceConfig, DensityMatrix, DriveConfig, EquilibriumState,
    MoleculeMetadata,
};
pub use perturbation::{perturbative_coherence, susceptibilities, switch_seed};
pub use protocol::{
    critical_deviation, relative_error, run_two_detections, DeviationAxis, Mixture, Summation,
};
pub use switch::{find_switch, switch_curve, SwitchPoint};

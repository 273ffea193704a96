//! Second-moment dynamics of a coherently pumped opto-mechanical cavity fed by
//! a single-photon source cavity through a cascaded (unidirectional) coupling.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`model`]: parameters, complex rates, the drift matrix and normal modes.
//! * [`moments`]: the exact affine ODE for all second moments of the cavity
//!   (`a`), mechanics (`b`) and their cross-correlations with the source (`c`),
//!   together with the pre-injection steady state.
//! * [`oracle`]: a brute-force truncated Fock-space integration of the full
//!   cascaded master equation used to validate the moment solver.
//! * [`scenarios`]: named presets and the run protocol for the reference
//!   figures, plus trace analysis (peak census, spectral peaks).
//! * [`ode`]: the Dormand–Prince 5(4) integrator shared by both solvers.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod ode;
pub mod oracle;
pub mod scenarios;
pub mod sparse;

pub use error::{Error, Result};
pub use model::{DriftMatrix, NormalModes, PhysicalParams, SimParams};
pub use moments::{
    CorrelationMatrix, MomentState, NoiseVector, Observables, SourceMoments, SourceSpec,
};
pub use num_complex::Complex64;
pub use ode::{IntegrateOptions, StepMode};

//! Numerical search for mutually unbiased (MU) constellations of pure states.
//!
//! A constellation `{d-1, x_1, ..., x_k}_d` is a set of groups of unit
//! vectors in `C^d` whose scalar products have modulus `δ_{jj'}` inside a
//! group and `1/√d` across groups. Restricting to constellations that
//! contain a complete first basis, every such object can be dephased into a
//! template parameterized by `p = (d-1)(s-1)` angles. Existence is then
//! probed by driving a sum-of-squares objective to zero with
//! Levenberg-Marquardt from many random starting points.
//!
//! Module map:
//!
//! - [`states`]: complex vectors, projectors, basis completion.
//! - [`constellation`]: specs, the containment order, dephased templates.
//! - [`objective`]: residuals, analytic Jacobian, MU verification.
//! - [`optimizer`]: the Levenberg-Marquardt minimizer.
//! - [`constructions`]: known MU base sets used as ground truth.
//! - [`equivalence`]: the four symmetry transformations and dephasing.
//! - [`search`]: seeded random-restart campaigns, sweeps, lattice tallies.
//! - [`statefile`]: JSON state-set file format.

pub mod constellation;
pub mod constructions;
pub mod equivalence;
mod error;
pub mod objective;
pub mod optimizer;
pub mod search;
pub mod statefile;
pub mod states;

pub use constellation::{
    Classification, ConstellationSpec, ParameterPoint, SpecKind, StateSet,
};
pub use constructions::MuBasesSet;
pub use error::{Error, Result};
pub use objective::{FUpperBound, MuVerification, ObjectiveEval, ResidualForm, ResidualSystem};
pub use optimizer::{LmConfig, MinimizeResult, Termination};
pub use search::{CampaignConfig, CampaignReport, Histogram, LatticeTally, TrialRecord};
pub use statefile::StateSetFile;
pub use states::{CVector, Projector};

/// Largest dimension supported anywhere in the crate.
pub const MAX_DIM: usize = 16;

/// Re-exported so downstream crates agree on the complex type.
pub use nalgebra::Complex;
pub type C64 = Complex<f64>;

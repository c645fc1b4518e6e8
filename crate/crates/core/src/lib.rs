//! Verification and exploration toolkit for the speed of excited random walk.
//!
//! * [`model`]: parameters, lattice points, paths and the excited kernel.
//! * [`greens`]: simple-random-walk Green's function powers and the derived
//!   constants `E_0, E_1, a_d, ε(d)`.
//! * [`expansion`]: exact expansion coefficients by two independent routes
//!   and the truncated drift series.
//! * [`bounds`]: closed-form coefficient and derivative bounds and the
//!   per-dimension monotonicity certificate.
//! * [`montecarlo`]: drift estimators and coupled β-scans.

pub mod bounds;
pub mod expansion;
pub mod greens;
pub mod interval;
pub mod model;
pub mod montecarlo;

pub use interval::Interval;
pub use model::{LatticeVector, ModelError, ModelParams, WalkPath};

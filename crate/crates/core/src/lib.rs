//! Geodesic-guided global optimization.
//!
//! The objective `phi` is embedded in the geometry through the conformal
//! metric `exp(2 phi) delta_ij`. Geodesics of that metric are attracted to the
//! gradient and level-set directions of `phi`; following them with an
//! adaptive quadratic stepper, refining with quasi-Newton, and jumping between
//! basins gives a derivative-based global maximizer.
//!
//! * [`conformal`]: closed-form geodesic stepper and a finite-difference Christoffel oracle.
//! * [`qn`]: BFGS local maximizer.
//! * [`geo`]: one forward/backward geodesic trace with jump-direction and locality summaries.
//! * [`sgeo`]: the sequential driver with annealing, restarts and early stopping.
//! * [`benchfn`]: benchmark objectives with analytic gradients.
//! * [`harness`]: seeded experiments, baselines, CSV/JSON/trace output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchfn;
pub mod conformal;
pub mod error;
pub mod geo;
pub mod harness;
pub mod objective;
pub mod qn;
pub mod sgeo;
pub mod vector;

pub use error::{Error, Result};
pub use objective::{CallCounts, FnObjective, Objective, ObjectiveHandle};

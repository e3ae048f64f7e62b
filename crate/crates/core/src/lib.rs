//! Secure state estimation for discrete-time LTI systems whose inputs and
//! outputs are partly under adversarial control.
//!
//! The estimator follows a lazy satisfiability-modulo-theories loop: a
//! Boolean core ([`sat_core`]) proposes which channels are attacked, a
//! least-squares theory solver ([`estimator`]) checks whether that
//! hypothesis explains the observed window, and refuted hypotheses come back
//! as conflict clauses. [`strong_obs`] decides the structural condition under
//! which the estimate is exact, and [`attack_sim`] generates systems and
//! attack scenarios to exercise all of it.

pub mod error;
pub mod numerics;
pub mod lti;
pub mod strong_obs;
pub mod attack_sim;
pub mod sat_core;
pub mod estimator;

pub use error::{Error, Result};
pub use lti::{IndexSet, LtiSystem, StateSpace, Subsystem};
pub use numerics::{Matrix, TolerancePolicy, Vector};

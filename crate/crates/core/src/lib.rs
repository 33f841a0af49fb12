//! Proactive defense synthesis on probabilistic attack-graph MDPs.
//!
//! The defender places fake targets (decoys) with perceived rewards `y` and
//! raises the perceived cost `x` of selected attack actions, so that a
//! rational attacker planning in the manipulated model ends up in a decoy as
//! often as possible. Synthesis alternates a softmax policy-improvement step
//! on the defender's value with a maximum-entropy IRL projection back onto
//! the set of attacker policies that some feasible `(x, y)` can induce.
//!
//! Module map:
//!
//! * [`mdp`]: finite discounted MDPs, exact evaluation, hard and soft value
//!   iteration, induced chains, occupancy measures, reachability, KL.
//! * [`perception`]: defense strategies and the attacker's perceptual MDP.
//! * [`irl`]: the projection step (barriered MaxEnt IRL over `(x, y)`).
//! * [`synthesis`]: the outer loop, multi-start, upper bound, scenarios.
//! * [`environments`]: gridworlds, instance files, shipped analog fixtures,
//!   random generators.
//! * [`oracle`]: brute-force verifiers used by the test suite.

pub mod environments;
mod error;
pub mod fmt;
pub mod irl;
mod linalg;
pub mod mdp;
pub mod oracle;
pub mod par;
pub mod perception;
pub mod synthesis;

pub use error::{Error, Result};

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-9;

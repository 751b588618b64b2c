//! Discount-factor thresholds for gain optimality in finite MDPs.
//!
//! For a finite MDP, every β-discount-optimal deterministic policy is
//! gain-optimal once β exceeds some threshold β₋₁ < 1. This crate evaluates
//! policies exactly (gain, bias, finite-horizon and discounted scores through
//! the Cesàro limit of the induced chain), computes two certified upper
//! bounds on β₋₁, and estimates β₋₁ itself by brute force for verification.
//!
//! ```
//! use gain_threshold::{fixtures, thresholds, Settings};
//!
//! let mdp = fixtures::figure1(0.1, 0.5).unwrap();
//! let bound = thresholds::theorem1_bound(&mdp, &Settings::default()).unwrap();
//! assert!((bound.bound.value - 0.8).abs() < 1e-12);
//! ```

pub mod chain;
pub mod checks;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod generate;
pub mod io;
mod linalg;
pub mod mdp;
pub mod optimality;
pub mod thresholds;

pub use error::{Error, Result};
pub use mdp::{enumerate_policies, induce, validate, InducedChain, MdpInstance, Policy};

/// Tolerances and limits shared by the brute-force operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Relative tolerance for optimal-set membership; the absolute slack is
    /// this times `max(1, ‖reference‖∞)`.
    pub tie_tolerance: f64,
    /// Largest policy space an operation will enumerate.
    pub policy_cap: u128,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tie_tolerance: 1e-9,
            policy_cap: mdp::DEFAULT_POLICY_CAP,
        }
    }
}

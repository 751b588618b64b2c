//! Seeded random instances.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Draws happen state by state, action by action:
//! first `n_states` weights `1 − U` with `U` a standard `f64` uniform in
//! `[0, 1)` (so every weight is in `(0, 1]`), then one reward `U`. Weights
//! are normalised and mixed with the uniform row: `(1 − m) w/Σw + m/n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::MdpInstance;

pub fn generate_random_mdp(
    n_states: usize,
    n_actions: usize,
    seed: u64,
    mixing: f64,
) -> Result<MdpInstance> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::Domain(format!(
            "need at least one state and one action, got {n_states}x{n_actions}"
        )));
    }
    if !(0.0..1.0).contains(&mixing) {
        return Err(Error::Domain(format!("mixing weight {mixing} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = 1.0 / n_states as f64;
    let mut transitions = Vec::with_capacity(n_states);
    let mut rewards = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut rows = Vec::with_capacity(n_actions);
        let mut state_rewards = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            let weights: Vec<f64> = (0..n_states).map(|_| 1.0 - rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            rows.push(
                weights
                    .iter()
                    .map(|w| (1.0 - mixing) * w / total + mixing * uniform)
                    .collect(),
            );
            state_rewards.push(rng.random::<f64>());
        }
        transitions.push(rows);
        rewards.push(state_rewards);
    }
    MdpInstance::new(
        (0..n_states).map(|x| format!("s{x}")).collect(),
        vec![(0..n_actions).map(|a| format!("a{a}")).collect(); n_states],
        transitions,
        rewards,
    )
}

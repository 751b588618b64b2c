//! Finite MDP data model, deterministic policies and the policy → Markov
//! reward process reduction.
//!
//! States and actions are dense indices; labels only matter at the I/O
//! boundary. Transition rows are stored densely, which is what every
//! downstream algorithm wants.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Allowed deviation of a probability row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of deterministic policies a brute-force
/// operation will enumerate.
pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;

/// A validated finite MDP `(X, A, p, r)`.
///
/// Only mean rewards are kept: every quantity computed by this crate depends
/// on the reward distributions through their means alone.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpInstance {
    state_labels: Vec<String>,
    action_labels: Vec<Vec<String>>,
    /// `transitions[x][a][y]`
    transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[x][a]`
    rewards: Vec<Vec<f64>>,
}

impl MdpInstance {
    /// Builds and validates an instance.
    pub fn new(
        state_labels: Vec<String>,
        action_labels: Vec<Vec<String>>,
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let raw = Self {
            state_labels,
            action_labels,
            transitions,
            rewards,
        };
        validate(raw)
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_actions(&self, state: usize) -> usize {
        self.action_labels[state].len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn state_label(&self, state: usize) -> &str {
        &self.state_labels[state]
    }

    pub fn action_labels(&self, state: usize) -> &[String] {
        &self.action_labels[state]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.state_labels.iter().position(|s| s == label)
    }

    pub fn action_index(&self, state: usize, label: &str) -> Option<usize> {
        self.action_labels[state].iter().position(|a| a == label)
    }

    /// Probability vector `p(· | state, action)`.
    pub fn transition(&self, state: usize, action: usize) -> &[f64] {
        &self.transitions[state][action]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state][action]
    }

    /// Iterates over every `(state, action)` pair in index order.
    pub fn state_actions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_states()).flat_map(move |x| (0..self.n_actions(x)).map(move |a| (x, a)))
    }

    /// Span of the mean rewards over all state-action pairs.
    pub fn reward_span(&self) -> f64 {
        let (lo, hi) = self
            .state_actions()
            .map(|(x, a)| self.reward(x, a))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            });
        hi - lo
    }

    /// Number of deterministic policies, saturating at `u128::MAX`.
    pub fn policy_count(&self) -> u128 {
        self.action_labels
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// Copy of the instance whose only available action at `state` is `action`.
    pub fn restrict(&self, state: usize, action: usize) -> Result<Self> {
        if state >= self.n_states() || action >= self.n_actions(state) {
            return Err(Error::InvalidPolicy(format!(
                "no action {action} at state {state}"
            )));
        }
        let mut copy = self.clone();
        copy.action_labels[state] = vec![self.action_labels[state][action].clone()];
        copy.transitions[state] = vec![self.transitions[state][action].clone()];
        copy.rewards[state] = vec![self.rewards[state][action]];
        Ok(copy)
    }
}

/// Checks every structural invariant of an instance and hands it back.
pub fn validate(raw: MdpInstance) -> Result<MdpInstance> {
    let n = raw.state_labels.len();
    if n == 0 {
        return Err(Error::Shape("an MDP needs at least one state".into()));
    }
    check_unique(&raw.state_labels)?;
    if raw.action_labels.len() != n || raw.transitions.len() != n || raw.rewards.len() != n {
        return Err(Error::Shape(
            "per-state tables must have one entry per state".into(),
        ));
    }
    for x in 0..n {
        let actions = &raw.action_labels[x];
        let state = &raw.state_labels[x];
        if actions.is_empty() {
            return Err(Error::EmptyActionSet(state.clone()));
        }
        check_unique(actions)?;
        if raw.transitions[x].len() != actions.len() || raw.rewards[x].len() != actions.len() {
            return Err(Error::Shape(format!(
                "state `{state}` has {} actions but mismatched transition/reward tables",
                actions.len()
            )));
        }
        for (a, row) in raw.transitions[x].iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "row of state `{state}`, action `{}` has length {}, expected {n}",
                    actions[a],
                    row.len()
                )));
            }
            if let Some(&value) = row.iter().find(|p| !(**p >= 0.0)) {
                return Err(Error::NegativeProbability {
                    state: state.clone(),
                    action: actions[a].clone(),
                    value,
                });
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                return Err(Error::RowSum {
                    state: state.clone(),
                    action: actions[a].clone(),
                    sum,
                });
            }
            if !raw.rewards[x][a].is_finite() {
                return Err(Error::Shape(format!(
                    "reward of state `{state}`, action `{}` is not finite",
                    actions[a]
                )));
            }
        }
    }
    Ok(raw)
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel(label.clone()));
        }
    }
    Ok(())
}

/// A deterministic stationary policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Policy(pub Vec<usize>);

impl Policy {
    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn check(&self, mdp: &MdpInstance) -> Result<()> {
        if self.0.len() != mdp.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "policy has {} entries for {} states",
                self.0.len(),
                mdp.n_states()
            )));
        }
        for (x, &a) in self.0.iter().enumerate() {
            if a >= mdp.n_actions(x) {
                return Err(Error::InvalidPolicy(format!(
                    "action index {a} out of range at state `{}`",
                    mdp.state_label(x)
                )));
            }
        }
        Ok(())
    }
}

/// Lexicographic walk over all deterministic policies (state 0 is the most
/// significant digit).
#[derive(Debug, Clone)]
pub struct PolicyIter {
    radices: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for PolicyIter {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for x in (0..succ.len()).rev() {
            succ[x] += 1;
            if succ[x] < self.radices[x] {
                carried = false;
                break;
            }
            succ[x] = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(Policy(current))
    }
}

/// Lazily enumerates every deterministic policy, refusing policy spaces
/// larger than `cap`.
pub fn policy_iter(mdp: &MdpInstance, cap: u128) -> Result<PolicyIter> {
    let count = mdp.policy_count();
    if count > cap {
        return Err(Error::EnumerationCapExceeded { count, cap });
    }
    Ok(PolicyIter {
        radices: (0..mdp.n_states()).map(|x| mdp.n_actions(x)).collect(),
        next: Some(vec![0; mdp.n_states()]),
    })
}

/// All deterministic policies in lexicographic order.
pub fn enumerate_policies(mdp: &MdpInstance, cap: u128) -> Result<Vec<Policy>> {
    Ok(policy_iter(mdp, cap)?.collect())
}

/// The Markov reward process `(P^π, r^π)` induced by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    pub transition: DMatrix<f64>,
    pub reward: DVector<f64>,
}

impl InducedChain {
    /// Builds a chain from raw parts, checking row-stochasticity.
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || transition.ncols() != n || reward.len() != n {
            return Err(Error::Shape(format!(
                "chain needs a square transition matrix matching a reward vector, got {}x{} and {}",
                transition.nrows(),
                transition.ncols(),
                reward.len()
            )));
        }
        for (i, row) in transition.row_iter().enumerate() {
            if let Some(&value) = row.iter().find(|p| !(**p >= 0.0)) {
                return Err(Error::NegativeProbability {
                    state: i.to_string(),
                    action: "-".into(),
                    value,
                });
            }
            let sum = row.sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                return Err(Error::RowSum {
                    state: i.to_string(),
                    action: "-".into(),
                    sum,
                });
            }
        }
        Ok(Self { transition, reward })
    }

    pub fn n_states(&self) -> usize {
        self.reward.len()
    }
}

/// Reduces an MDP under a fixed policy to its Markov reward process.
pub fn induce(mdp: &MdpInstance, policy: &Policy) -> Result<InducedChain> {
    policy.check(mdp)?;
    let n = mdp.n_states();
    let transition = DMatrix::from_fn(n, n, |x, y| mdp.transition(x, policy.action(x))[y]);
    let reward = DVector::from_fn(n, |x, _| mdp.reward(x, policy.action(x)));
    Ok(InducedChain { transition, reward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, two_state_ergodic};

    fn single_loop(reward: f64) -> MdpInstance {
        MdpInstance::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![reward]],
        )
        .unwrap()
    }

    #[test]
    fn accepts_single_self_loop() {
        let m = single_loop(2.0);
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.policy_count(), 1);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["x".into()], vec!["x".into()]],
            vec![vec![vec![0.5, 0.6]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::RowSum { ref state, .. } if state == "a"), "{err}");
    }

    #[test]
    fn rejects_negative_probability() {
        let err = MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["x".into()], vec!["x".into()]],
            vec![vec![vec![-0.5, 1.5]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NegativeProbability { .. }));
    }

    #[test]
    fn rejects_empty_action_set_and_duplicates() {
        let err = MdpInstance::new(
            vec!["a".into()],
            vec![vec![]],
            vec![vec![]],
            vec![vec![]],
        )
        .unwrap_err();
        assert_eq!(err, Error::EmptyActionSet("a".into()));

        let err = MdpInstance::new(
            vec!["a".into(), "a".into()],
            vec![vec!["x".into()], vec!["x".into()]],
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("a".into()));

        let err = MdpInstance::new(
            vec!["a".into()],
            vec![vec!["x".into(), "x".into()]],
            vec![vec![vec![1.0], vec![1.0]]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("x".into()));
    }

    #[test]
    fn two_branch_fixture_has_two_policies() {
        let m = figure1(0.1, 0.5).unwrap();
        assert_eq!(m.n_states(), 3);
        let policies = enumerate_policies(&m, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(policies, vec![Policy(vec![0, 0, 0]), Policy(vec![1, 0, 0])]);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let m = MdpInstance::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec!["0".into(), "1".into()]; 3],
            vec![vec![vec![1.0, 0.0, 0.0]; 2]; 3],
            vec![vec![0.0, 1.0]; 3],
        )
        .unwrap();
        let policies = enumerate_policies(&m, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(policies.len(), 8);
        let unique: HashSet<_> = policies.iter().cloned().collect();
        assert_eq!(unique.len(), 8);
        assert!(policies.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(policies[1], Policy(vec![0, 0, 1]));
    }

    #[test]
    fn enumeration_cap_reports_size() {
        let m = two_state_ergodic();
        let err = enumerate_policies(&m, 1).unwrap_err();
        assert_eq!(err, Error::EnumerationCapExceeded { count: 2, cap: 1 });
    }

    #[test]
    fn induce_reads_off_rows() {
        let m = single_loop(3.5);
        let chain = induce(&m, &Policy(vec![0])).unwrap();
        assert_eq!(chain.transition, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(chain.reward[0], 3.5);

        let fig = figure1(0.1, 0.5).unwrap();
        let left = induce(&fig, &Policy(vec![1, 0, 0])).unwrap();
        assert_eq!(left.transition.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
        assert_eq!(left.reward[0], 1.0 + 0.5 - 0.1);

        let swap = MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["go".into()], vec!["go".into()]],
            vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            vec![vec![1.0], vec![0.0]],
        )
        .unwrap();
        let chain = induce(&swap, &Policy(vec![0, 0])).unwrap();
        assert_eq!(chain.transition, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(chain.reward.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn induce_rejects_out_of_range_action() {
        let m = single_loop(0.0);
        assert!(matches!(
            induce(&m, &Policy(vec![1])),
            Err(Error::InvalidPolicy(_))
        ));
    }

    #[test]
    fn restrict_keeps_single_action() {
        let m = two_state_ergodic();
        let r = m.restrict(0, 1).unwrap();
        assert_eq!(r.n_actions(0), 1);
        assert_eq!(r.reward(0, 0), 0.5);
        assert_eq!(r.policy_count(), 1);
    }
}

//! Optimal gain and bias, the gain-/bias-/discount-optimal policy sets and
//! the suboptimality-gap table, all by exhaustive policy enumeration, plus
//! unichain policy iteration for the optimal gain.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::chain::{is_ergodic_mdp, is_unichain_mdp};
use crate::error::{Error, Result};
use crate::eval::{discounted_value, evaluate, PolicyEvaluation};
use crate::mdp::{induce, policy_iter, InducedChain, MdpInstance, Policy};
use crate::Settings;

/// Slack allowed when checking the gain/gap inequality.
pub const GAP_SLACK_TOLERANCE: f64 = 1e-8;

/// Ties between improvement candidates within this keep the incumbent action.
pub const IMPROVEMENT_TIE: f64 = 1e-10;

/// A policy together with its induced chain and evaluation.
#[derive(Debug, Clone)]
pub struct EvaluatedPolicy {
    pub policy: Policy,
    pub chain: InducedChain,
    pub eval: PolicyEvaluation,
}

/// Evaluates every deterministic policy, in lexicographic order.
pub fn evaluate_all(mdp: &MdpInstance, cap: u128) -> Result<Vec<EvaluatedPolicy>> {
    let policies: Vec<Policy> = policy_iter(mdp, cap)?.collect();
    policies
        .into_par_iter()
        .map(|policy| {
            let chain = induce(mdp, &policy)?;
            let eval = evaluate(&chain)?;
            Ok(EvaluatedPolicy {
                policy,
                chain,
                eval,
            })
        })
        .collect()
}

/// Scale used to turn the relative tie tolerance into an absolute one.
pub fn tie_scale(reference: &DVector<f64>) -> f64 {
    reference.amax().max(1.0)
}

fn attains(value: &DVector<f64>, target: &DVector<f64>, tolerance: f64) -> bool {
    let slack = tolerance * tie_scale(target);
    value.iter().zip(target.iter()).all(|(v, t)| *v >= t - slack)
}

fn componentwise_max<'a>(vectors: impl Iterator<Item = &'a DVector<f64>>) -> Option<DVector<f64>> {
    vectors.fold(None, |acc: Option<DVector<f64>>, v| match acc {
        None => Some(v.clone()),
        Some(m) => Some(m.zip_map(v, f64::max)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityProfile {
    pub g_star: DVector<f64>,
    pub h_star: DVector<f64>,
    /// Π*₋₁, lexicographically ordered.
    pub gain_optimal: Vec<Policy>,
    /// Π*₀ ⊆ Π*₋₁.
    pub bias_optimal: Vec<Policy>,
    pub tie_tolerance: f64,
}

impl OptimalityProfile {
    pub fn is_gain_optimal(&self, policy: &Policy) -> bool {
        self.gain_optimal.binary_search(policy).is_ok()
    }

    /// Whether `gain` falls short of `g_star` at `state` by more than the
    /// tie tolerance.
    pub fn is_gain_suboptimal_at(&self, gain: &DVector<f64>, state: usize) -> bool {
        gain[state] < self.g_star[state] - self.tie_tolerance * tie_scale(&self.g_star)
    }
}

/// Builds the optimality profile from an evaluated policy table.
pub fn profile_from_table(table: &[EvaluatedPolicy], tie_tolerance: f64) -> Result<OptimalityProfile> {
    let g_star = componentwise_max(table.iter().map(|e| &e.eval.gain))
        .ok_or_else(|| Error::Domain("empty policy table".into()))?;
    let gain_optimal: Vec<&EvaluatedPolicy> = table
        .iter()
        .filter(|e| attains(&e.eval.gain, &g_star, tie_tolerance))
        .collect();
    let h_star = componentwise_max(gain_optimal.iter().map(|e| &e.eval.bias))
        .ok_or(Error::NoUniformBiasOptimal)?;
    let bias_optimal: Vec<Policy> = gain_optimal
        .iter()
        .filter(|e| attains(&e.eval.bias, &h_star, tie_tolerance))
        .map(|e| e.policy.clone())
        .collect();
    if bias_optimal.is_empty() {
        return Err(Error::NoUniformBiasOptimal);
    }
    Ok(OptimalityProfile {
        g_star,
        h_star,
        gain_optimal: gain_optimal.iter().map(|e| e.policy.clone()).collect(),
        bias_optimal,
        tie_tolerance,
    })
}

/// Optimal gain/bias and the gain- and bias-optimal sets by enumeration.
pub fn brute_force_optimal(mdp: &MdpInstance, settings: &Settings) -> Result<OptimalityProfile> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    profile_from_table(&table, settings.tie_tolerance)
}

/// Indices of the chains whose discounted value is within `tolerance`
/// (relative to `max(1, ‖V*‖∞)`) of the component-wise optimum.
pub(crate) fn discount_optimal_mask(chains: &[&InducedChain], discount: f64, tolerance: f64) -> Result<Vec<bool>> {
    let values: Vec<DVector<f64>> = chains
        .iter()
        .map(|c| discounted_value(c, discount))
        .collect::<Result<_>>()?;
    let best = componentwise_max(values.iter()).expect("at least one policy");
    Ok(values.iter().map(|v| attains(v, &best, tolerance)).collect())
}

/// Π*_β: every policy whose β-discounted value is optimal at every state,
/// up to the relative tolerance `tolerance`. Never empty.
pub fn discounted_optimal_set(
    mdp: &MdpInstance,
    discount: f64,
    tolerance: f64,
    cap: u128,
) -> Result<Vec<Policy>> {
    let policies: Vec<Policy> = policy_iter(mdp, cap)?.collect();
    let chains: Vec<InducedChain> = policies
        .iter()
        .map(|p| induce(mdp, p))
        .collect::<Result<_>>()?;
    let refs: Vec<&InducedChain> = chains.iter().collect();
    let mask = discount_optimal_mask(&refs, discount, tolerance)?;
    Ok(policies
        .into_iter()
        .zip(mask)
        .filter_map(|(p, keep)| keep.then_some(p))
        .collect())
}

/// Suboptimality gaps `Δ*(x, a) = h*(x) − [r(x, a) − g*(x) + ⟨p(x, a), h*⟩]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    /// `delta[x][a]`
    pub delta: Vec<Vec<f64>>,
}

impl GapTable {
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.delta[state][action]
    }

    /// `Δ*(x, π(x))` for every state.
    pub fn along(&self, policy: &Policy) -> DVector<f64> {
        DVector::from_iterator(
            self.delta.len(),
            policy.choices().iter().enumerate().map(|(x, &a)| self.delta[x][a]),
        )
    }

    pub fn min(&self) -> f64 {
        self.delta.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn suboptimality_gaps(mdp: &MdpInstance, profile: &OptimalityProfile) -> GapTable {
    let h = &profile.h_star;
    let delta = (0..mdp.n_states())
        .map(|x| {
            (0..mdp.n_actions(x))
                .map(|a| {
                    let next: f64 = mdp.transition(x, a).iter().zip(h.iter()).map(|(p, v)| p * v).sum();
                    h[x] - (mdp.reward(x, a) - profile.g_star[x] + next)
                })
                .collect()
        })
        .collect();
    GapTable { delta }
}

/// Slack of `g^π(x) ≤ g*(x) − Σ_y μ^π_x(y) Δ*(y, π(y))` for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSlackRow {
    pub policy: Policy,
    /// Right-hand side minus left-hand side, per state.
    pub slack: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSlackReport {
    pub ergodic: bool,
    pub rows: Vec<GapSlackRow>,
    pub min_slack: f64,
    pub max_abs_slack: f64,
}

/// Checks the gain/gap inequality for every policy and state, and equality
/// when the MDP is ergodic. Fails with the first violating witness.
pub fn verify_bellman_gap_lemma(
    mdp: &MdpInstance,
    profile: &OptimalityProfile,
    settings: &Settings,
) -> Result<GapSlackReport> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let ergodic = is_ergodic_mdp(mdp, settings.policy_cap)?.ergodic;
    gap_slack_from_table(mdp, profile, &table, ergodic)
}

pub(crate) fn gap_slack_from_table(
    mdp: &MdpInstance,
    profile: &OptimalityProfile,
    table: &[EvaluatedPolicy],
    ergodic: bool,
) -> Result<GapSlackReport> {
    let gaps = suboptimality_gaps(mdp, profile);
    let mut rows = Vec::with_capacity(table.len());
    let (mut min_slack, mut max_abs_slack) = (f64::INFINITY, 0.0f64);
    for entry in table {
        let occupation_gap = &entry.eval.limit.matrix * gaps.along(&entry.policy);
        let slack: Vec<f64> = (0..mdp.n_states())
            .map(|x| profile.g_star[x] - occupation_gap[x] - entry.eval.gain[x])
            .collect();
        for (x, &s) in slack.iter().enumerate() {
            if s < -GAP_SLACK_TOLERANCE || (ergodic && s.abs() > GAP_SLACK_TOLERANCE) {
                return Err(Error::LemmaViolation {
                    policy: entry.policy.0.clone(),
                    state: x,
                    slack: s,
                });
            }
            min_slack = min_slack.min(s);
            max_abs_slack = max_abs_slack.max(s.abs());
        }
        rows.push(GapSlackRow {
            policy: entry.policy.clone(),
            slack,
        });
    }
    Ok(GapSlackReport {
        ergodic,
        rows,
        min_slack,
        max_abs_slack,
    })
}

/// Optimal gain of a unichain MDP by average-reward policy iteration.
///
/// Improvement picks `argmax_a r(x, a) + ⟨p(x, a), h⟩`, keeping the
/// incumbent action on ties within [`IMPROVEMENT_TIE`].
pub fn optimal_gain_policy_iteration(mdp: &MdpInstance, settings: &Settings) -> Result<DVector<f64>> {
    if !is_unichain_mdp(mdp, settings.policy_cap)? {
        return Err(Error::NotUnichain);
    }
    let limit = u64::try_from(mdp.policy_count().saturating_mul(10)).unwrap_or(u64::MAX);
    let mut policy = Policy(vec![0; mdp.n_states()]);
    for _ in 0..limit {
        let eval = evaluate(&induce(mdp, &policy)?)?;
        let mut changed = false;
        for x in 0..mdp.n_states() {
            let q = |a: usize| {
                mdp.reward(x, a)
                    + mdp
                        .transition(x, a)
                        .iter()
                        .zip(eval.bias.iter())
                        .map(|(p, h)| p * h)
                        .sum::<f64>()
            };
            let incumbent = q(policy.0[x]);
            let (best_action, best) = (0..mdp.n_actions(x))
                .map(|a| (a, q(a)))
                .fold((policy.0[x], incumbent), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
            if best > incumbent + IMPROVEMENT_TIE {
                policy.0[x] = best_action;
                changed = true;
            }
        }
        if !changed {
            return Ok(eval.gain);
        }
    }
    Err(Error::IterationLimitExceeded(limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, two_state_ergodic};
    use crate::generate::generate_random_mdp;
    use approx::assert_abs_diff_eq;

    fn settings() -> Settings {
        Settings::default()
    }

    #[test]
    fn single_policy_is_optimal() {
        let m = MdpInstance::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![0.3]],
        )
        .unwrap();
        let p = brute_force_optimal(&m, &settings()).unwrap();
        assert_eq!(p.gain_optimal, vec![Policy(vec![0])]);
        assert_eq!(p.bias_optimal, vec![Policy(vec![0])]);
        assert_eq!(discounted_optimal_set(&m, 0.4, 1e-9, 10).unwrap(), vec![Policy(vec![0])]);
        assert_abs_diff_eq!(optimal_gain_policy_iteration(&m, &settings()).unwrap()[0], 0.3);
    }

    #[test]
    fn two_branch_profile() {
        let m = figure1(0.1, 0.5).unwrap();
        let p = brute_force_optimal(&m, &settings()).unwrap();
        assert_eq!(p.gain_optimal, vec![Policy(vec![0, 0, 0])]);
        assert_abs_diff_eq!(p.g_star[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g_star[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g_star[2], 0.9, epsilon = 1e-12);
        assert!(p.h_star.iter().all(|h| h.abs() < 1e-12));
        assert!(matches!(
            optimal_gain_policy_iteration(&m, &settings()),
            Err(Error::NotUnichain)
        ));
    }

    #[test]
    fn two_branch_discount_optimal_sets() {
        let m = figure1(0.1, 0.5).unwrap();
        let cap = 10;
        assert_eq!(discounted_optimal_set(&m, 0.9, 1e-9, cap).unwrap(), vec![Policy(vec![0, 0, 0])]);
        assert_eq!(discounted_optimal_set(&m, 0.5, 1e-9, cap).unwrap(), vec![Policy(vec![1, 0, 0])]);
    }

    #[test]
    fn two_state_profile_and_gaps() {
        let m = two_state_ergodic();
        let p = brute_force_optimal(&m, &settings()).unwrap();
        assert_eq!(p.gain_optimal, vec![Policy(vec![0, 0])]);
        assert_abs_diff_eq!(p.g_star[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.h_star[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.h_star[1], -0.25, epsilon = 1e-12);

        let gaps = suboptimality_gaps(&m, &p);
        assert_abs_diff_eq!(gaps.get(0, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps.get(0, 1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps.get(1, 0), 0.0, epsilon = 1e-12);

        assert_abs_diff_eq!(optimal_gain_policy_iteration(&m, &settings()).unwrap()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gap_slack_on_two_state_fixture() {
        let m = two_state_ergodic();
        let p = brute_force_optimal(&m, &settings()).unwrap();
        let report = verify_bellman_gap_lemma(&m, &p, &settings()).unwrap();
        assert!(report.ergodic);
        // π_b: g(0) = 0.25 = 0.5 − 0.5·0.5
        let row = report.rows.iter().find(|r| r.policy == Policy(vec![1, 0])).unwrap();
        assert_abs_diff_eq!(row.slack[0], 0.0, epsilon = 1e-12);
        assert!(report.max_abs_slack <= GAP_SLACK_TOLERANCE);
    }

    #[test]
    fn gap_slack_on_two_branch_is_an_inequality() {
        let m = figure1(0.1, 0.5).unwrap();
        let p = brute_force_optimal(&m, &settings()).unwrap();
        let report = verify_bellman_gap_lemma(&m, &p, &settings()).unwrap();
        assert!(!report.ergodic);
        let row = report.rows.iter().find(|r| r.policy == Policy(vec![1, 0, 0])).unwrap();
        assert_abs_diff_eq!(row.slack[0], 0.1, epsilon = 1e-12);
        // Multichain: the gap formula goes negative on the left action.
        let gaps = suboptimality_gaps(&m, &p);
        assert!(gaps.get(0, 1) < 0.0);
    }

    #[test]
    fn policy_iteration_matches_brute_force() {
        for seed in 0..20 {
            let m = generate_random_mdp(4, 3, seed, 0.05).unwrap();
            let pi = optimal_gain_policy_iteration(&m, &settings()).unwrap();
            let bf = brute_force_optimal(&m, &settings()).unwrap();
            for x in 0..4 {
                assert_abs_diff_eq!(pi[x], bf.g_star[x], epsilon = 1e-9);
            }
        }
    }
}

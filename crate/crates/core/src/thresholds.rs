//! Upper bounds on the discount threshold β₋₁ beyond which every
//! discount-optimal deterministic policy is gain-optimal, and a brute-force
//! oracle for β₋₁ itself.
//!
//! * [`theorem1_bound`]: `1 − min (g*(x) − g^π(x)) / (sp(h*) + sp(h^π))`
//!   over gain-suboptimal pairs `(x, π)`; needs every policy.
//! * [`ergodic_bound`]: `1 − Δ_g / (2 sp(r) D̄)` for ergodic MDPs, where the
//!   gain gap `Δ_g` and the worst diameter `D̄` are computed through
//!   restricted copies of the MDP ([`delta_g_algorithm1`],
//!   [`worst_diameter_algorithm2`]) in polynomial time.
//! * [`true_threshold_oracle`]: scans β toward 1 and bisects every point
//!   where a gain-suboptimal policy leaves the discount-optimal set.
//!
//! Bounds are reported clamped to `[0, 1]`: a raw bound below zero (or
//! `−∞`) says nothing more than "every β in `[0, 1)` works".

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chain::is_ergodic_mdp;
use crate::error::{Error, Result};
use crate::eval::span;
use crate::linalg::{solve, submatrix};
use crate::mdp::{InducedChain, MdpInstance, Policy};
use crate::optimality::{
    brute_force_optimal, discount_optimal_mask, evaluate_all, optimal_gain_policy_iteration,
    profile_from_table, EvaluatedPolicy, OptimalityProfile,
};
use crate::Settings;

/// Stopping rule for the value iteration of the hitting-time Bellman equation.
pub const VALUE_ITERATION_TOLERANCE: f64 = 1e-10;

/// Sweep cap of that value iteration.
pub const VALUE_ITERATION_CAP: u64 = 10_000_000;

/// Largest discount factor the oracle grid reaches: `1 − 10⁻⁹`.
pub const ORACLE_GRID_DECADES: f64 = 9.0;

/// Why a bound fell back to the trivial value 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Every policy is gain-optimal: the infimum ranges over an empty set.
    NoSuboptimalPair,
    /// Every candidate ratio is `+∞` (zero denominator), so the raw bound
    /// is `−∞` and places no constraint.
    Unconstrained,
}

/// A threshold bound as reported, together with its unclamped value.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    /// `max(raw, 0)`.
    pub value: f64,
    /// May be negative or `−∞`.
    pub raw: f64,
    pub degenerate: Option<Degeneracy>,
}

impl BoundValue {
    fn from_raw(raw: f64) -> Self {
        let degenerate = (raw == f64::NEG_INFINITY).then_some(Degeneracy::Unconstrained);
        Self {
            value: raw.max(0.0),
            raw,
            degenerate,
        }
    }

    fn empty() -> Self {
        Self {
            value: 0.0,
            raw: 0.0,
            degenerate: Some(Degeneracy::NoSuboptimalPair),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveBound {
    pub bound: BoundValue,
    /// `(state, policy)` pairs attaining the minimal ratio.
    pub witnesses: Vec<(usize, Policy)>,
    /// Gain-suboptimal pairs skipped because both bias spans vanish.
    pub zero_denominator_pairs: usize,
}

/// The exhaustive bound, from the full evaluation of every policy.
pub fn theorem1_bound(mdp: &MdpInstance, settings: &Settings) -> Result<ExhaustiveBound> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let profile = profile_from_table(&table, settings.tie_tolerance)?;
    Ok(exhaustive_bound_from_table(&table, &profile))
}

pub(crate) fn exhaustive_bound_from_table(table: &[EvaluatedPolicy], profile: &OptimalityProfile) -> ExhaustiveBound {
    let span_h_star = span(profile.h_star.as_slice());
    let mut best = f64::INFINITY;
    let mut witnesses = Vec::new();
    let mut any_pair = false;
    let mut zero_denominator_pairs = 0;
    for entry in table {
        for x in 0..profile.g_star.len() {
            if !profile.is_gain_suboptimal_at(&entry.eval.gain, x) {
                continue;
            }
            any_pair = true;
            let numerator = profile.g_star[x] - entry.eval.gain[x];
            let denominator = span_h_star + entry.eval.span_bias;
            if denominator <= 0.0 {
                zero_denominator_pairs += 1;
                continue;
            }
            let ratio = numerator / denominator;
            if ratio < best {
                best = ratio;
                witnesses.clear();
            }
            if ratio == best {
                witnesses.push((x, entry.policy.clone()));
            }
        }
    }
    let bound = if !any_pair {
        BoundValue::empty()
    } else {
        BoundValue::from_raw(1.0 - best)
    };
    ExhaustiveBound {
        bound,
        witnesses,
        zero_denominator_pairs,
    }
}

/// Gain gap `Δ_g`: the smallest per-state gain deficit of any policy, from
/// its definition.
pub fn gain_gap_bruteforce(mdp: &MdpInstance, settings: &Settings) -> Result<f64> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let profile = profile_from_table(&table, settings.tie_tolerance)?;
    gain_gap_from_table(&table, &profile)
}

pub(crate) fn gain_gap_from_table(table: &[EvaluatedPolicy], profile: &OptimalityProfile) -> Result<f64> {
    table
        .iter()
        .flat_map(|e| {
            (0..profile.g_star.len())
                .filter(|&x| profile.is_gain_suboptimal_at(&e.eval.gain, x))
                .map(move |x| profile.g_star[x] - e.eval.gain[x])
        })
        .reduce(f64::min)
        .ok_or(Error::NoSuboptimalPolicy)
}

fn require_ergodic(mdp: &MdpInstance, settings: &Settings) -> Result<()> {
    let check = is_ergodic_mdp(mdp, settings.policy_cap)?;
    match check.witness {
        None => Ok(()),
        Some((policy, _)) => Err(Error::NotErgodic { witness: policy.0 }),
    }
}

/// Optimal gain of `mdp`, by policy iteration with a brute-force fallback.
fn optimal_gain(mdp: &MdpInstance, settings: &Settings) -> Result<DVector<f64>> {
    optimal_gain_policy_iteration(mdp, settings)
        .or_else(|_| brute_force_optimal(mdp, settings).map(|p| p.g_star))
}

/// Gain gap through restricted copies: for every pair `(x, a)`, the copy of
/// the MDP whose only action at `x` is `a`; `Δ_g` is the smallest positive
/// drop of its optimal gain below the MDP's.
pub fn delta_g_algorithm1(mdp: &MdpInstance, settings: &Settings) -> Result<f64> {
    require_ergodic(mdp, settings)?;
    let g_star = optimal_gain(mdp, settings)?;
    let threshold = settings.tie_tolerance * g_star.amax().max(1.0);
    let pairs: Vec<(usize, usize)> = mdp.state_actions().collect();
    let drops: Vec<f64> = pairs
        .into_par_iter()
        .map(|(x, a)| {
            let restricted = mdp.restrict(x, a)?;
            let g = optimal_gain(&restricted, settings)?;
            // Gains are constant on ergodic instances; take the largest drop.
            Ok((&g_star - g).max())
        })
        .collect::<Result<_>>()?;
    drops
        .into_iter()
        .filter(|&d| d > threshold)
        .reduce(f64::min)
        .ok_or(Error::NoSuboptimalPolicy)
}

/// Expected hitting times `E_x[τ_target]` of a chain (zero at the target).
pub fn hitting_times(transition: &DMatrix<f64>, target: usize) -> Result<DVector<f64>> {
    let n = transition.nrows();
    let others: Vec<usize> = (0..n).filter(|&x| x != target).collect();
    let mut times = DVector::zeros(n);
    if others.is_empty() {
        return Ok(times);
    }
    let m = others.len();
    let lhs = DMatrix::identity(m, m) - submatrix(transition, &others, &others);
    let t = solve(lhs, &DVector::from_element(m, 1.0), "hitting times")?;
    if t.iter().any(|&v| v < 0.0) {
        return Err(Error::SingularSystem("negative hitting time".into()));
    }
    for (i, &x) in others.iter().enumerate() {
        times[x] = t[i];
    }
    Ok(times)
}

/// Worst diameter `D̄ = max_π max_{x ≠ y} E^π_x[τ_y]` by enumeration.
pub fn worst_diameter_bruteforce(mdp: &MdpInstance, settings: &Settings) -> Result<f64> {
    require_ergodic(mdp, settings)?;
    let table = evaluate_all(mdp, settings.policy_cap)?;
    worst_diameter_from_table(&table)
}

fn worst_diameter_from_table(table: &[EvaluatedPolicy]) -> Result<f64> {
    let per_policy: Vec<f64> = table
        .par_iter()
        .map(|e| {
            let n = e.chain.n_states();
            (0..n).try_fold(0.0f64, |acc, y| {
                let t = hitting_times(&e.chain.transition, y).map_err(|_| Error::NotErgodic {
                    witness: e.policy.0.clone(),
                })?;
                Ok(acc.max(t.max()))
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_policy.into_iter().fold(0.0, f64::max))
}

/// `max_π E^π_x[τ_target]` for every `x`: the optimal bias of the copy of
/// the MDP where `target` is absorbing with reward 0 and every other reward
/// is 1. Its optimal gain is 0, so the Bellman equation
/// `h(x) = max_a 1 + ⟨p(x, a), h⟩`, `h(target) = 0` pins down the bias.
pub fn max_hitting_times(mdp: &MdpInstance, target: usize) -> Result<DVector<f64>> {
    let n = mdp.n_states();
    let backup = |h: &DVector<f64>, x: usize, a: usize| -> f64 {
        1.0 + mdp
            .transition(x, a)
            .iter()
            .zip(h.iter())
            .map(|(p, v)| p * v)
            .sum::<f64>()
    };

    // Value iteration from 0 is monotone nondecreasing.
    let mut h = DVector::zeros(n);
    let mut sweeps = 0u64;
    loop {
        if sweeps >= VALUE_ITERATION_CAP {
            return Err(Error::IterationLimitExceeded(VALUE_ITERATION_CAP));
        }
        sweeps += 1;
        let next = DVector::from_fn(n, |x, _| {
            if x == target {
                0.0
            } else {
                (0..mdp.n_actions(x)).map(|a| backup(&h, x, a)).fold(f64::NEG_INFINITY, f64::max)
            }
        });
        let change = (&next - &h).amax();
        h = next;
        if change <= VALUE_ITERATION_TOLERANCE {
            break;
        }
    }

    // Exact fixed point: evaluate the greedy policy, improving while any
    // action strictly helps.
    let greedy = |h: &DVector<f64>, incumbent: Option<&Policy>| -> Policy {
        Policy(
            (0..n)
                .map(|x| {
                    let start = incumbent.map_or(0, |p| p.action(x));
                    (0..mdp.n_actions(x)).fold(start, |best, a| {
                        if backup(h, x, a) > backup(h, x, best) + 1e-12 * h.amax().max(1.0) {
                            a
                        } else {
                            best
                        }
                    })
                })
                .collect(),
        )
    };
    let mut policy = greedy(&h, None);
    let rounds = u64::try_from(mdp.policy_count()).unwrap_or(u64::MAX).max(1);
    for _ in 0..rounds {
        let p = DMatrix::from_fn(n, n, |x, y| mdp.transition(x, policy.action(x))[y]);
        h = hitting_times(&p, target)?;
        let improved = greedy(&h, Some(&policy));
        if improved == policy {
            return Ok(h);
        }
        policy = improved;
    }
    Err(Error::IterationLimitExceeded(rounds))
}

/// Worst diameter through the absorbing copies `M_y`, one Bellman solve per
/// target state; polynomial in the MDP size.
pub fn worst_diameter_algorithm2(mdp: &MdpInstance, settings: &Settings) -> Result<f64> {
    require_ergodic(mdp, settings)?;
    let per_target: Vec<f64> = (0..mdp.n_states())
        .into_par_iter()
        .map(|y| max_hitting_times(mdp, y).map(|h| h.max()))
        .collect::<Result<_>>()?;
    Ok(per_target.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicBound {
    pub bound: BoundValue,
    /// Absent when every policy is gain-optimal.
    pub delta_g: Option<f64>,
    pub worst_diameter: f64,
    /// Span over all state-action mean rewards.
    pub reward_span: f64,
}

/// `1 − Δ_g / (2 sp(r) D̄)`, defined for ergodic MDPs only.
pub fn ergodic_bound(mdp: &MdpInstance, settings: &Settings) -> Result<ErgodicBound> {
    require_ergodic(mdp, settings)?;
    let worst_diameter = worst_diameter_algorithm2(mdp, settings)?;
    let reward_span = mdp.reward_span();
    let delta_g = match delta_g_algorithm1(mdp, settings) {
        Ok(d) => d,
        Err(Error::NoSuboptimalPolicy) => {
            return Ok(ErgodicBound {
                bound: BoundValue::empty(),
                delta_g: None,
                worst_diameter,
                reward_span,
            })
        }
        Err(e) => return Err(e),
    };
    // Equal rewards everywhere force equal gains, so Δ_g would not exist.
    assert!(reward_span > 0.0, "positive gain gap with zero reward span");
    let raw = if worst_diameter > 0.0 {
        1.0 - delta_g / (2.0 * reward_span * worst_diameter)
    } else {
        f64::NEG_INFINITY
    };
    Ok(ErgodicBound {
        bound: BoundValue::from_raw(raw),
        delta_g: Some(delta_g),
        worst_diameter,
        reward_span,
    })
}

/// Accuracy knobs of the threshold oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            refine_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    /// Midpoint of `bracket`; 0 when no gain-suboptimal policy is ever
    /// discount-optimal.
    pub estimate: f64,
    pub bracket: (f64, f64),
    /// Largest spacing of the scan grid: a discount-optimality window
    /// narrower than this may go unseen.
    pub grid_resolution: f64,
    /// Gain-suboptimal policy whose discount-optimal region reaches furthest.
    pub witness: Option<Policy>,
}

/// Scan grid `β_i = 1 − 10^{−9 i/(N−1)}`, geometric toward 1.
pub fn oracle_grid(points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| 1.0 - 10f64.powf(-ORACLE_GRID_DECADES * i as f64 / last))
        .collect()
}

/// Brute-force estimate of β₋₁, the supremum over gain-suboptimal policies
/// of the discount factors at which they are discount-optimal.
pub fn true_threshold_oracle(
    mdp: &MdpInstance,
    settings: &Settings,
    options: OracleOptions,
) -> Result<OracleEstimate> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let profile = profile_from_table(&table, settings.tie_tolerance)?;
    oracle_from_table(&table, &profile, settings, options)
}

pub(crate) fn oracle_from_table(
    table: &[EvaluatedPolicy],
    profile: &OptimalityProfile,
    settings: &Settings,
    options: OracleOptions,
) -> Result<OracleEstimate> {
    if options.grid_points < 100 {
        return Err(Error::Domain(format!(
            "oracle needs at least 100 grid points, got {}",
            options.grid_points
        )));
    }
    if !(options.refine_tol > 0.0) {
        return Err(Error::Domain("refine tolerance must be positive".into()));
    }
    let grid = oracle_grid(options.grid_points);
    let grid_resolution = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let chains: Vec<&InducedChain> = table.iter().map(|e| &e.chain).collect();
    let suboptimal: Vec<usize> = (0..table.len())
        .filter(|&i| !profile.is_gain_optimal(&table[i].policy))
        .collect();

    let mut best: Option<(f64, f64, usize)> = None;
    if !suboptimal.is_empty() {
        let tol = settings.tie_tolerance;
        let masks: Vec<Vec<bool>> = grid
            .par_iter()
            .map(|&beta| discount_optimal_mask(&chains, beta, tol))
            .collect::<Result<_>>()?;
        let member = |policy: usize, beta: f64| -> Result<bool> {
            Ok(discount_optimal_mask(&chains, beta, tol)?[policy])
        };

        for &p in &suboptimal {
            // Scan from the top: only the last exit from Π*_β matters.
            let last_in = (0..grid.len()).rev().find(|&i| masks[i][p]);
            let Some(i) = last_in else { continue };
            let (mut lo, mut hi) = if i + 1 == grid.len() {
                (grid[i], 1.0)
            } else {
                (grid[i], grid[i + 1])
            };
            if i + 1 < grid.len() {
                while hi - lo > options.refine_tol {
                    let mid = 0.5 * (lo + hi);
                    if member(p, mid)? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            if best.map_or(true, |(_, b_hi, _)| hi > b_hi) {
                best = Some((lo, hi, p));
            }
        }
    }

    Ok(match best {
        Some((lo, hi, p)) => OracleEstimate {
            estimate: 0.5 * (lo + hi),
            bracket: (lo, hi),
            grid_resolution,
            witness: Some(table[p].policy.clone()),
        },
        None => OracleEstimate {
            estimate: 0.0,
            bracket: (0.0, 0.0),
            grid_resolution,
            witness: None,
        },
    })
}

/// Everything this crate can say about β₋₁ for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub ergodic: bool,
    pub exhaustive: ExhaustiveBound,
    /// Only for ergodic instances.
    pub ergodic_bound: Option<ErgodicBound>,
    pub oracle: Option<OracleEstimate>,
    pub profile: OptimalityProfile,
}

/// Computes both bounds and, when `oracle` is set, the brute-force
/// threshold, sharing one evaluation of every policy.
pub fn threshold_report(
    mdp: &MdpInstance,
    settings: &Settings,
    oracle: Option<OracleOptions>,
) -> Result<ThresholdReport> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let profile = profile_from_table(&table, settings.tie_tolerance)?;
    let ergodic = is_ergodic_mdp(mdp, settings.policy_cap)?.ergodic;
    let exhaustive = exhaustive_bound_from_table(&table, &profile);
    let ergodic_value = if ergodic {
        Some(ergodic_bound(mdp, settings)?)
    } else {
        None
    };
    let oracle = oracle
        .map(|options| oracle_from_table(&table, &profile, settings, options))
        .transpose()?;
    Ok(ThresholdReport {
        ergodic,
        exhaustive,
        ergodic_bound: ergodic_value,
        oracle,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, two_state_ergodic};
    use approx::assert_abs_diff_eq;

    fn s() -> Settings {
        Settings::default()
    }

    fn single(actions: &[(f64, f64)]) -> MdpInstance {
        // one state, several self-loop actions with the given rewards
        MdpInstance::new(
            vec!["s".into()],
            vec![(0..actions.len()).map(|i| format!("a{i}")).collect()],
            vec![actions.iter().map(|_| vec![1.0]).collect()],
            vec![actions.iter().map(|a| a.0).collect()],
        )
        .unwrap()
    }

    fn swap() -> MdpInstance {
        MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["go".into()], vec!["go".into()]],
            vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            vec![vec![1.0], vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn exhaustive_bound_on_two_branch_fixture() {
        let b = theorem1_bound(&figure1(0.1, 0.5).unwrap(), &s()).unwrap();
        assert_abs_diff_eq!(b.bound.value, 0.8, epsilon = 1e-12);
        assert_eq!(b.witnesses, vec![(0, Policy(vec![1, 0, 0]))]);

        let b = theorem1_bound(&figure1(0.3, 0.4).unwrap(), &s()).unwrap();
        assert_abs_diff_eq!(b.bound.value, 0.25, epsilon = 1e-12);

        let b = theorem1_bound(&figure1(0.2, 0.2).unwrap(), &s()).unwrap();
        assert_abs_diff_eq!(b.bound.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exhaustive_bound_degenerate_cases() {
        let b = theorem1_bound(&single(&[(1.0, 0.0)]), &s()).unwrap();
        assert_eq!(b.bound, BoundValue::empty());

        // Two self-loops with different rewards: both bias spans vanish.
        let b = theorem1_bound(&single(&[(1.0, 0.0), (0.0, 0.0)]), &s()).unwrap();
        assert_eq!(b.bound.value, 0.0);
        assert_eq!(b.bound.degenerate, Some(Degeneracy::Unconstrained));
        assert_eq!(b.zero_denominator_pairs, 1);
    }

    #[test]
    fn exhaustive_bound_on_two_state_fixture() {
        let b = theorem1_bound(&two_state_ergodic(), &s()).unwrap();
        assert_abs_diff_eq!(b.bound.value, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_gap_examples() {
        assert_abs_diff_eq!(gain_gap_bruteforce(&two_state_ergodic(), &s()).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(gain_gap_bruteforce(&figure1(0.1, 0.5).unwrap(), &s()).unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(
            gain_gap_bruteforce(&single(&[(1.0, 0.0), (1.0, 0.0)]), &s()),
            Err(Error::NoSuboptimalPolicy)
        );
    }

    #[test]
    fn restricted_copy_gain_gap_examples() {
        assert_abs_diff_eq!(delta_g_algorithm1(&two_state_ergodic(), &s()).unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(
            delta_g_algorithm1(&single(&[(1.0, 0.0), (1.0, 0.0)]), &s()),
            Err(Error::NoSuboptimalPolicy)
        );
        assert!(matches!(
            delta_g_algorithm1(&figure1(0.1, 0.5).unwrap(), &s()),
            Err(Error::NotErgodic { .. })
        ));
    }

    #[test]
    fn hitting_time_examples() {
        assert_abs_diff_eq!(worst_diameter_bruteforce(&swap(), &s()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(worst_diameter_algorithm2(&swap(), &s()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(worst_diameter_bruteforce(&two_state_ergodic(), &s()).unwrap(), 1.0, epsilon = 1e-12);

        let lazy = MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["stay".into()], vec!["go".into()]],
            vec![vec![vec![0.75, 0.25]], vec![vec![1.0, 0.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap();
        let t = hitting_times(&DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 1.0, 0.0]), 1).unwrap();
        assert_abs_diff_eq!(t[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(worst_diameter_bruteforce(&lazy, &s()).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn bellman_diameter_picks_slowest_escape() {
        let m = MdpInstance::new(
            vec!["a".into(), "b".into()],
            vec![vec!["fast".into(), "slow".into()], vec!["go".into()]],
            vec![
                vec![vec![0.5, 0.5], vec![0.75, 0.25]],
                vec![vec![1.0, 0.0]],
            ],
            vec![vec![0.0, 0.0], vec![0.0]],
        )
        .unwrap();
        let h = max_hitting_times(&m, 1).unwrap();
        assert_abs_diff_eq!(h[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(worst_diameter_algorithm2(&m, &s()).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn ergodic_bound_examples() {
        let b = ergodic_bound(&two_state_ergodic(), &s()).unwrap();
        assert_abs_diff_eq!(b.bound.value, 0.875, epsilon = 1e-12);
        assert_eq!(b.reward_span, 1.0);

        let b = ergodic_bound(&swap(), &s()).unwrap();
        assert_eq!(b.bound, BoundValue::empty());

        assert!(matches!(
            ergodic_bound(&figure1(0.1, 0.5).unwrap(), &s()),
            Err(Error::NotErgodic { .. })
        ));
    }

    #[test]
    fn oracle_examples() {
        let opts = OracleOptions::default();
        let o = true_threshold_oracle(&figure1(0.1, 0.5).unwrap(), &s(), opts).unwrap();
        assert!((o.estimate - 0.8).abs() <= 1e-6, "{o:?}");
        assert!(o.bracket.0 <= 0.8 + 1e-9 && 0.8 - 1e-9 <= o.bracket.1, "{o:?}");
        assert_eq!(o.witness, Some(Policy(vec![1, 0, 0])));

        let o = true_threshold_oracle(&single(&[(1.0, 0.0)]), &s(), opts).unwrap();
        assert_eq!(o.estimate, 0.0);

        let o = true_threshold_oracle(&two_state_ergodic(), &s(), opts).unwrap();
        assert_eq!(o.estimate, 0.0);
        assert_eq!(o.witness, None);

        let o = true_threshold_oracle(&figure1(0.2, 0.2).unwrap(), &s(), opts).unwrap();
        assert!(o.estimate <= 1e-6, "{o:?}");
    }

    #[test]
    fn oracle_rejects_coarse_grid() {
        let opts = OracleOptions {
            grid_points: 10,
            refine_tol: 1e-7,
        };
        assert!(matches!(
            true_threshold_oracle(&two_state_ergodic(), &s(), opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grid_is_geometric_toward_one() {
        let g = oracle_grid(100);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[99], 1.0 - 1e-9, epsilon = 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

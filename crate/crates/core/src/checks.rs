//! Self-check suite run by `gain-threshold check`: every identity and
//! inequality relating gains, biases, scores and thresholds, evaluated on
//! one instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::is_ergodic_mdp;
use crate::error::{Error, Result};
use crate::eval::{discounted_value, finite_horizon_score};
use crate::optimality::{
    discounted_optimal_set, evaluate_all, gap_slack_from_table, optimal_gain_policy_iteration,
    profile_from_table, suboptimality_gaps,
};
use crate::thresholds::{
    delta_g_algorithm1, ergodic_bound, gain_gap_from_table, oracle_from_table, exhaustive_bound_from_table,
    worst_diameter_algorithm2, worst_diameter_bruteforce, OracleOptions,
};
use crate::Settings;
use crate::mdp::MdpInstance;

pub const POISSON_TOLERANCE: f64 = 1e-9;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const FINITE_HORIZON_TOLERANCE: f64 = 1e-9;
pub const DISCOUNTED_TOLERANCE: f64 = 1e-6;
pub const ORACLE_SLACK: f64 = 1e-6;
pub const ORDERING_TOLERANCE: f64 = 1e-9;
pub const SPAN_DIAMETER_TOLERANCE: f64 = 1e-8;
pub const GAIN_GAP_AGREEMENT: f64 = 1e-9;
pub const DIAMETER_AGREEMENT: f64 = 1e-7;

pub const HORIZONS: [usize; 5] = [1, 2, 5, 10, 100];
pub const DISCOUNTS: [f64; 5] = [0.0, 0.5, 0.9, 0.99, 0.999];
pub const SOUNDNESS_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub ergodic: bool,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.outcomes.push(CheckOutcome { name, passed, detail });
    }
}

/// Runs the whole suite. Errors are reserved for inputs the suite cannot
/// evaluate at all (e.g. too many policies); failed checks are reported.
pub fn run_checks(mdp: &MdpInstance, settings: &Settings, oracle: OracleOptions) -> Result<CheckReport> {
    let table = evaluate_all(mdp, settings.policy_cap)?;
    let profile = profile_from_table(&table, settings.tie_tolerance)?;
    let ergodic = is_ergodic_mdp(mdp, settings.policy_cap)?.ergodic;
    let mut report = CheckReport {
        ergodic,
        outcomes: Vec::new(),
    };

    let worst_poisson = table.iter().map(|e| e.eval.poisson_residual).fold(0.0, f64::max);
    let worst_norm = table.iter().map(|e| e.eval.normalization_residual).fold(0.0, f64::max);
    report.push(
        "poisson_residual",
        worst_poisson <= POISSON_TOLERANCE && worst_norm <= NORMALIZATION_TOLERANCE,
        format!("max residual {worst_poisson:e}, max |P*h| {worst_norm:e}"),
    );

    let mut worst_fh = f64::NEG_INFINITY;
    let mut worst_disc = f64::NEG_INFINITY;
    for e in &table {
        let (g, sp) = (&e.eval.gain, e.eval.span_bias);
        for &t in &HORIZONS {
            let j = finite_horizon_score(&e.chain, t)?;
            for x in 0..g.len() {
                let excess = (j[x] / t as f64 - g[x]).abs() - sp / t as f64;
                worst_fh = worst_fh.max(excess);
            }
        }
        for &beta in &DISCOUNTS {
            let v = discounted_value(&e.chain, beta)?;
            for x in 0..g.len() {
                worst_disc = worst_disc.max((v[x] - g[x] / (1.0 - beta)).abs() - sp);
            }
        }
    }
    report.push(
        "finite_horizon_sandwich",
        worst_fh <= FINITE_HORIZON_TOLERANCE,
        format!("max excess over sp(h)/T: {worst_fh:e}"),
    );
    report.push(
        "discounted_sandwich",
        worst_disc <= DISCOUNTED_TOLERANCE,
        format!("max excess over sp(h): {worst_disc:e}"),
    );

    match gap_slack_from_table(mdp, &profile, &table, ergodic) {
        Ok(l) => report.push(
            "gain_deficit_within_gaps",
            true,
            format!("min slack {:e}, max |slack| {:e}", l.min_slack, l.max_abs_slack),
        ),
        Err(e) => report.push("gain_deficit_within_gaps", false, e.to_string()),
    }

    let nested = !profile.bias_optimal.is_empty()
        && profile.bias_optimal.iter().all(|p| profile.is_gain_optimal(p));
    report.push(
        "optimal_sets_nested",
        nested,
        format!(
            "{} gain-optimal, {} bias-optimal",
            profile.gain_optimal.len(),
            profile.bias_optimal.len()
        ),
    );

    let exhaustive = exhaustive_bound_from_table(&table, &profile);
    let bound = exhaustive.bound.value;
    let estimate = oracle_from_table(&table, &profile, settings, oracle)?;
    report.push(
        "oracle_below_bound",
        estimate.estimate <= bound + estimate.grid_resolution + ORACLE_SLACK,
        format!("oracle {} vs bound {bound}", estimate.estimate),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut offending = None;
    for _ in 0..SOUNDNESS_SAMPLES {
        let beta = bound + (1.0 - bound) * (1.0 - rng.random::<f64>());
        if beta >= 1.0 {
            continue;
        }
        let set = discounted_optimal_set(mdp, beta, settings.tie_tolerance, settings.policy_cap)?;
        if let Some(p) = set.iter().find(|p| !profile.is_gain_optimal(p)) {
            offending = Some((beta, p.clone()));
            break;
        }
    }
    report.push(
        "discount_optimal_above_bound",
        offending.is_none(),
        match offending {
            None => format!("{SOUNDNESS_SAMPLES} sampled discounts above {bound}"),
            Some((beta, p)) => format!("policy {:?} is discount-optimal at {beta}", p.0),
        },
    );

    if ergodic {
        ergodic_checks(mdp, settings, &table, &profile, bound, &mut report)?;
    } else {
        let refused = matches!(ergodic_bound(mdp, settings), Err(Error::NotErgodic { .. }));
        report.push(
            "non_ergodic_refused",
            refused,
            "ergodic bound must refuse non-ergodic input".into(),
        );
    }
    Ok(report)
}

fn ergodic_checks(
    mdp: &MdpInstance,
    settings: &Settings,
    table: &[crate::optimality::EvaluatedPolicy],
    profile: &crate::optimality::OptimalityProfile,
    exhaustive: f64,
    report: &mut CheckReport,
) -> Result<()> {
    let gaps = suboptimality_gaps(mdp, profile);
    let scale = profile.g_star.amax().max(1.0);
    report.push(
        "gap_nonnegative",
        gaps.min() >= -1e-9,
        format!("min gap {:e}", gaps.min()),
    );
    let mismatch = table.iter().find(|e| {
        let suboptimal = !profile.is_gain_optimal(&e.policy);
        let uses_bad_action = gaps
            .along(&e.policy)
            .iter()
            .any(|d| *d > settings.tie_tolerance * scale);
        suboptimal != uses_bad_action
    });
    report.push(
        "suboptimal_iff_bad_action",
        mismatch.is_none(),
        mismatch.map_or_else(|| "holds for every policy".into(), |e| format!("fails for {:?}", e.policy.0)),
    );

    let pi_gain = optimal_gain_policy_iteration(mdp, settings)?;
    let pi_err = (&pi_gain - &profile.g_star).amax();
    report.push(
        "policy_iteration_gain",
        pi_err <= 1e-9,
        format!("|g_PI − g*| = {pi_err:e}"),
    );

    let bound2 = ergodic_bound(mdp, settings)?;
    report.push(
        "bound_below_ergodic_bound",
        exhaustive <= bound2.bound.value + ORDERING_TOLERANCE,
        format!("{exhaustive} vs {}", bound2.bound.value),
    );

    let diameter_bf = worst_diameter_bruteforce(mdp, settings)?;
    let diameter_alg = worst_diameter_algorithm2(mdp, settings)?;
    report.push(
        "worst_diameter_agreement",
        (diameter_bf - diameter_alg).abs() <= DIAMETER_AGREEMENT,
        format!("brute force {diameter_bf}, Bellman {diameter_alg}"),
    );

    let sp_r = mdp.reward_span();
    let worst_span = table.iter().map(|e| e.eval.span_bias - sp_r * diameter_bf).fold(f64::NEG_INFINITY, f64::max);
    report.push(
        "span_diameter",
        worst_span <= SPAN_DIAMETER_TOLERANCE,
        format!("max sp(h) − sp(r)·D̄ = {worst_span:e}"),
    );

    let agreement = match (gain_gap_from_table(table, profile), delta_g_algorithm1(mdp, settings)) {
        (Ok(a), Ok(b)) => ((a - b).abs() <= GAIN_GAP_AGREEMENT, format!("definition {a}, restricted copies {b}")),
        (Err(Error::NoSuboptimalPolicy), Err(Error::NoSuboptimalPolicy)) => {
            (true, "no gain-suboptimal policy".into())
        }
        (a, b) => (false, format!("{a:?} vs {b:?}")),
    };
    report.push("gain_gap_agreement", agreement.0, agreement.1);
    Ok(())
}

//! Evaluation of a fixed policy's Markov reward process: gain, bias,
//! finite-horizon and discounted scores.

use nalgebra::{DMatrix, DVector};

use crate::chain::{cesaro_limit, CesaroLimit};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, solve};
use crate::mdp::InducedChain;

/// Gain, bias and diagnostics of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub gain: DVector<f64>,
    pub bias: DVector<f64>,
    pub span_bias: f64,
    /// `‖(I − P)h + g − r‖∞`
    pub poisson_residual: f64,
    /// `‖P* h‖∞`
    pub normalization_residual: f64,
    pub limit: CesaroLimit,
}

/// Full evaluation of a chain: one Cesàro limit, one bias solve.
pub fn evaluate(chain: &InducedChain) -> Result<PolicyEvaluation> {
    let limit = cesaro_limit(&chain.transition)?;
    let gain = &limit.matrix * &chain.reward;
    let bias = bias_from_limit(chain, &limit, &gain)?;
    let n = chain.n_states();
    let poisson = (DMatrix::identity(n, n) - &chain.transition) * &bias + &gain - &chain.reward;
    let normalization = &limit.matrix * &bias;
    Ok(PolicyEvaluation {
        span_bias: span(bias.as_slice()),
        poisson_residual: max_abs(poisson.iter().copied()),
        normalization_residual: max_abs(normalization.iter().copied()),
        gain,
        bias,
        limit,
    })
}

/// Long-run average reward `g = P* r`.
pub fn gain(chain: &InducedChain) -> Result<DVector<f64>> {
    let limit = cesaro_limit(&chain.transition)?;
    Ok(&limit.matrix * &chain.reward)
}

/// Bias `h`: the solution of `(I − P)h = r − g` normalised by `P* h = 0`.
pub fn bias(chain: &InducedChain, gain: &DVector<f64>) -> Result<DVector<f64>> {
    let limit = cesaro_limit(&chain.transition)?;
    bias_from_limit(chain, &limit, gain)
}

// (I − P + P*) is invertible; multiplying its system by P* forces P*h = 0.
fn bias_from_limit(
    chain: &InducedChain,
    limit: &CesaroLimit,
    gain: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = chain.n_states();
    let lhs = DMatrix::identity(n, n) - &chain.transition + &limit.matrix;
    let rhs = &chain.reward - gain;
    solve(lhs, &rhs, "bias (I - P + P*)")
}

/// `max(u) − min(u)`; zero for an empty slice.
pub fn span(u: &[f64]) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// `J_T = Σ_{t<T} P^t r`, by `T` matrix-vector products.
pub fn finite_horizon_score(chain: &InducedChain, horizon: usize) -> Result<DVector<f64>> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    // J_{t+1} = r + P J_t
    let mut score = chain.reward.clone();
    for _ in 1..horizon {
        score = &chain.reward + &chain.transition * &score;
    }
    Ok(score)
}

/// `V_β = (I − βP)^{-1} r` for `β ∈ [0, 1)`.
pub fn discounted_value(chain: &InducedChain, discount: f64) -> Result<DVector<f64>> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::Domain(format!(
            "discount factor {discount} is outside [0, 1)"
        )));
    }
    let n = chain.n_states();
    let lhs = DMatrix::identity(n, n) - &chain.transition * discount;
    solve(lhs, &chain.reward, "discounted value (I - βP)")
}

/// Long-run state-occupation measure of the chain started at `state`.
pub fn empirical_invariant_measure(chain: &InducedChain, state: usize) -> Result<DVector<f64>> {
    if state >= chain.n_states() {
        return Err(Error::Domain(format!("no state {state}")));
    }
    Ok(cesaro_limit(&chain.transition)?.row(state))
}

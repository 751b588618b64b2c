//! Small hand-built instances with known answers.

use crate::error::{Error, Result};
use crate::mdp::MdpInstance;

/// Three-state deterministic MDP on which the exhaustive bound is
/// tight. From `s0`, `right` goes to `s1` (reward 1) and `left` goes to `s2`
/// (reward `1 + eps_h − eps_g`); `s1` loops with reward 1 and `s2` loops with
/// reward `1 − eps_g`. The bound and the true threshold are `1 − eps_g/eps_h`
/// whenever `eps_g ≤ eps_h`.
pub fn figure1(eps_g: f64, eps_h: f64) -> Result<MdpInstance> {
    if !(eps_g > 0.0 && eps_h > 0.0) || !eps_g.is_finite() || !eps_h.is_finite() {
        return Err(Error::Domain(format!(
            "figure1 needs positive gaps, got eps_g={eps_g}, eps_h={eps_h}"
        )));
    }
    MdpInstance::new(
        vec!["s0".into(), "s1".into(), "s2".into()],
        vec![
            vec!["right".into(), "left".into()],
            vec!["stay".into()],
            vec!["stay".into()],
        ],
        vec![
            vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![vec![0.0, 1.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0]],
        ],
        vec![
            vec![1.0, 1.0 + eps_h - eps_g],
            vec![1.0],
            vec![1.0 - eps_g],
        ],
    )
}

/// Two-state ergodic MDP: from `s0`, action `a` moves to `s1` with reward 1
/// and action `b` with reward 0.5; `s1` returns to `s0` with reward 0.
///
/// Optimal gain 0.5 with bias (0.25, −0.25); the `b` policy has gain 0.25.
pub fn two_state_ergodic() -> MdpInstance {
    MdpInstance::new(
        vec!["s0".into(), "s1".into()],
        vec![vec!["a".into(), "b".into()], vec!["back".into()]],
        vec![
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0]],
        ],
        vec![vec![1.0, 0.5], vec![0.0]],
    )
    .expect("fixture is valid")
}

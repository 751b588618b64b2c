//! Structural and limiting analysis of a single Markov chain.
//!
//! The Cesàro limit `P* = lim (1/T) Σ_{t<T} P^t` is assembled from the
//! chain's recurrent classes, their stationary distributions and the
//! absorption probabilities of transient states. It is never approximated by
//! averaging powers, so periodic chains come out exact.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, solve, solve_matrix, submatrix};
use crate::mdp::{induce, policy_iter, MdpInstance, Policy};

/// Transition probabilities at or below this are treated as structural zeros.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStructure {
    /// Closed communicating classes, each sorted, ordered by smallest member.
    pub recurrent_classes: Vec<Vec<usize>>,
    pub transient_states: Vec<usize>,
    /// `absorption[(i, k)]`: probability that transient state
    /// `transient_states[i]` is eventually absorbed in class `k`.
    pub absorption: DMatrix<f64>,
}

impl ChainStructure {
    pub fn is_irreducible(&self) -> bool {
        self.recurrent_classes.len() == 1 && self.transient_states.is_empty()
    }

    pub fn is_unichain(&self) -> bool {
        self.recurrent_classes.len() == 1
    }
}

/// Recurrent classes, transient states and absorption probabilities of `p`.
pub fn chain_structure(p: &DMatrix<f64>) -> Result<ChainStructure> {
    let n = p.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > SUPPORT_THRESHOLD {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }

    let mut component = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }

    let mut recurrent_classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| p[(i, j)] <= SUPPORT_THRESHOLD || component[j] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut members: Vec<usize> = scc.iter().map(|node| node.index()).collect();
            members.sort_unstable();
            members
        })
        .collect();
    recurrent_classes.sort_unstable_by_key(|class| class[0]);

    let mut is_recurrent = vec![false; n];
    for class in &recurrent_classes {
        for &i in class {
            is_recurrent[i] = true;
        }
    }
    let transient_states: Vec<usize> = (0..n).filter(|&i| !is_recurrent[i]).collect();

    let absorption = if transient_states.is_empty() {
        DMatrix::zeros(0, recurrent_classes.len())
    } else {
        let t = transient_states.len();
        let q = submatrix(p, &transient_states, &transient_states);
        let into_class = DMatrix::from_fn(t, recurrent_classes.len(), |i, k| {
            recurrent_classes[k]
                .iter()
                .map(|&j| p[(transient_states[i], j)])
                .sum::<f64>()
        });
        let lhs = DMatrix::identity(t, t) - q;
        solve_matrix(lhs, &into_class, "absorption probabilities")?
    };

    Ok(ChainStructure {
        recurrent_classes,
        transient_states,
        absorption,
    })
}

/// Stationary distribution of `p` restricted to a closed irreducible `class`,
/// indexed like `class`.
pub fn stationary_distribution(p: &DMatrix<f64>, class: &[usize]) -> Result<DVector<f64>> {
    let m = class.len();
    if m == 0 {
        return Err(Error::SingularSystem("empty class".into()));
    }
    let block = submatrix(p, class, class);
    for (i, row) in block.row_iter().enumerate() {
        let mass = row.sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::SingularSystem(format!(
                "state {} leaks {} probability out of its class",
                class[i],
                1.0 - mass
            )));
        }
    }
    // μᵀ(I − P) = 0 with the last balance equation swapped for Σμ = 1.
    let mut lhs = (DMatrix::identity(m, m) - &block).transpose();
    lhs.row_mut(m - 1).fill(1.0);
    let mut rhs = DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let mu = solve(lhs, &rhs, "stationary distribution")?;

    let residual = max_abs((mu.transpose() * &block - mu.transpose()).iter().copied());
    if residual > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "stationary residual {residual:e} on class {class:?}"
        )));
    }
    Ok(mu)
}

/// The Cesàro limit matrix of a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroLimit {
    pub matrix: DMatrix<f64>,
    pub structure: ChainStructure,
}

impl CesaroLimit {
    /// Row `x`: the long-run state-occupation measure starting from `x`.
    pub fn row(&self, x: usize) -> DVector<f64> {
        self.matrix.row(x).transpose()
    }
}

pub fn cesaro_limit(p: &DMatrix<f64>) -> Result<CesaroLimit> {
    let n = p.nrows();
    let structure = chain_structure(p)?;
    let mut matrix = DMatrix::zeros(n, n);
    let mut class_measures = Vec::with_capacity(structure.recurrent_classes.len());
    for class in &structure.recurrent_classes {
        let mu = stationary_distribution(p, class)?;
        for &i in class {
            for (k, &j) in class.iter().enumerate() {
                matrix[(i, j)] = mu[k];
            }
        }
        class_measures.push(mu);
    }
    for (ti, &t) in structure.transient_states.iter().enumerate() {
        for (k, class) in structure.recurrent_classes.iter().enumerate() {
            let weight = structure.absorption[(ti, k)];
            for (c, &j) in class.iter().enumerate() {
                matrix[(t, j)] += weight * class_measures[k][c];
            }
        }
    }
    Ok(CesaroLimit { matrix, structure })
}

/// Outcome of the ergodicity check over all deterministic policies.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityCheck {
    pub ergodic: bool,
    /// First policy (lexicographically) whose chain is reducible.
    pub witness: Option<(Policy, ChainStructure)>,
}

/// An MDP is ergodic here when every deterministic policy induces an
/// irreducible chain. Aperiodicity is not required.
pub fn is_ergodic_mdp(mdp: &MdpInstance, cap: u128) -> Result<ErgodicityCheck> {
    let witness = first_policy_where(mdp, cap, |s| !s.is_irreducible())?;
    Ok(ErgodicityCheck {
        ergodic: witness.is_none(),
        witness,
    })
}

/// Every deterministic policy has a single recurrent class.
pub fn is_unichain_mdp(mdp: &MdpInstance, cap: u128) -> Result<bool> {
    Ok(first_policy_where(mdp, cap, |s| !s.is_unichain())?.is_none())
}

fn first_policy_where(
    mdp: &MdpInstance,
    cap: u128,
    predicate: impl Fn(&ChainStructure) -> bool + Sync,
) -> Result<Option<(Policy, ChainStructure)>> {
    let policies: Vec<Policy> = policy_iter(mdp, cap)?.collect();
    let found = policies
        .into_par_iter()
        .map(|policy| {
            let chain = induce(mdp, &policy)?;
            let structure = chain_structure(&chain.transition)?;
            Ok(predicate(&structure).then_some((policy, structure)))
        })
        .filter_map(|r: Result<_>| r.transpose())
        .find_first(|_| true);
    found.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, two_state_ergodic};
    use crate::mdp::DEFAULT_POLICY_CAP;
    use approx::assert_abs_diff_eq;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, data)
    }

    #[test]
    fn identity_has_singleton_classes() {
        let s = chain_structure(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(s.recurrent_classes, vec![vec![0], vec![1]]);
        assert!(s.transient_states.is_empty());
    }

    #[test]
    fn two_branch_left_policy_structure() {
        // s0 -> s2, s1 -> s1, s2 -> s2
        let p = m(3, &[0., 0., 1., 0., 1., 0., 0., 0., 1.]);
        let s = chain_structure(&p).unwrap();
        assert_eq!(s.recurrent_classes, vec![vec![1], vec![2]]);
        assert_eq!(s.transient_states, vec![0]);
        assert_abs_diff_eq!(s.absorption[(0, 0)], 0.0);
        assert_abs_diff_eq!(s.absorption[(0, 1)], 1.0);

        let limit = cesaro_limit(&p).unwrap();
        assert_eq!(limit.row(0).as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn leaky_state_is_transient() {
        let p = m(2, &[0.9, 0.1, 0.0, 1.0]);
        let s = chain_structure(&p).unwrap();
        assert_eq!(s.recurrent_classes, vec![vec![1]]);
        assert_eq!(s.transient_states, vec![0]);
        assert_abs_diff_eq!(s.absorption[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_examples() {
        let mu = stationary_distribution(&m(1, &[1.0]), &[0]).unwrap();
        assert_abs_diff_eq!(mu[0], 1.0);
        let mu = stationary_distribution(&m(2, &[0.5, 0.5, 0.5, 0.5]), &[0, 1]).unwrap();
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-15);
        let mu = stationary_distribution(&m(2, &[0.0, 1.0, 1.0, 0.0]), &[0, 1]).unwrap();
        assert_abs_diff_eq!(mu[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn stationary_rejects_open_class() {
        let p = m(2, &[0.9, 0.1, 0.0, 1.0]);
        assert!(matches!(
            stationary_distribution(&p, &[0]),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn periodic_cesaro_limit() {
        let limit = cesaro_limit(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        for v in limit.matrix.iter() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-15);
        }
        let limit = cesaro_limit(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(limit.matrix, DMatrix::identity(3, 3));
    }

    #[test]
    fn ergodicity_examples() {
        let one = MdpInstance::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![0.0]],
        )
        .unwrap();
        assert!(is_ergodic_mdp(&one, DEFAULT_POLICY_CAP).unwrap().ergodic);

        let fig = figure1(0.1, 0.5).unwrap();
        let check = is_ergodic_mdp(&fig, DEFAULT_POLICY_CAP).unwrap();
        assert!(!check.ergodic);
        let (policy, structure) = check.witness.unwrap();
        assert_eq!(policy, Policy(vec![0, 0, 0]));
        assert_eq!(structure.recurrent_classes, vec![vec![1], vec![2]]);
        assert!(!is_unichain_mdp(&fig, DEFAULT_POLICY_CAP).unwrap());

        assert!(is_ergodic_mdp(&two_state_ergodic(), DEFAULT_POLICY_CAP).unwrap().ergodic);
    }
}

//! Random 2×2 broadcast matrices and top-down spin propagation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CouplingAssignment, GibbsParams, RootedTree, SpinConfig, SpinValue};
use crate::scalar::Scalar;

/// Exponent clamp keeping `e^{±βJ}` finite in double precision.
pub const EXP_CLAMP: f64 = 745.0;

/// The symmetric stochastic matrix `[[p, 1−p], [1−p, p]]` of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastMatrix<S> {
    pub stay_prob: S,
}

impl<S: Scalar> BroadcastMatrix<S> {
    pub fn flip_prob(self) -> S {
        S::one() - self.stay_prob
    }

    /// The non-trivial eigenvalue `2p − 1`, which equals `tanh(βJ/2)`.
    pub fn second_eigenvalue(self) -> S {
        S::lit(2.0) * self.stay_prob - S::one()
    }

    pub fn entry(self, from: SpinValue, to: SpinValue) -> S {
        if from == to {
            self.stay_prob
        } else {
            self.flip_prob()
        }
    }
}

#[inline]
fn clamped<S: Scalar>(x: S) -> S {
    let c = S::lit(EXP_CLAMP);
    x.max(-c).min(c)
}

/// `stay_prob = e^{βj}/(1+e^{βj})`, saturating cleanly for large `|βj|`.
pub fn matrix_from_coupling<S: Scalar>(beta: S, j: S) -> BroadcastMatrix<S> {
    BroadcastMatrix {
        stay_prob: S::logistic(clamped(beta * j)),
    }
}

/// Per-vertex stay probabilities of the edge above each vertex.
pub(crate) fn stay_probs<S: Scalar>(beta: S, couplings: &CouplingAssignment<S>, stay: &mut Vec<S>) {
    stay.clear();
    stay.extend(couplings.dense().iter().map(|&j| S::logistic(clamped(beta * j))));
}

/// One i.i.d. `φ` draw per edge, in child-index order.
pub fn sample_couplings<S: Scalar, R: Rng + ?Sized>(
    tree: &RootedTree,
    params: &GibbsParams,
    rng: &mut R,
) -> CouplingAssignment<S> {
    let mut values = Vec::with_capacity(tree.vertex_count());
    values.push(S::zero());
    fill_couplings(tree.vertex_count(), params, rng, &mut values);
    CouplingAssignment::from_dense_unchecked(values)
}

/// Appends `n − 1` draws to `out` (which already holds the root slot).
pub(crate) fn fill_couplings<S: Scalar, R: Rng + ?Sized>(n: usize, params: &GibbsParams, rng: &mut R, out: &mut Vec<S>) {
    let phi = params.phi();
    for _ in 1..n {
        out.push(S::lit(phi.sample(rng)));
    }
}

/// How the root spin of a broadcast is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootSpin {
    Fixed(SpinValue),
    /// A fair coin.
    Uniform,
}

/// Runs the broadcast process over the whole tree.
///
/// One uniform is drawn per vertex in index order, the root included even when
/// its spin is fixed, so the stream consumption never depends on `root`.
pub fn broadcast_sample<S: Scalar, R: Rng + ?Sized>(
    tree: &RootedTree,
    beta: S,
    couplings: &CouplingAssignment<S>,
    root: RootSpin,
    rng: &mut R,
) -> Result<SpinConfig> {
    if !couplings.matches(tree) {
        return Err(Error::domain(format!(
            "couplings cover {} vertices, tree has {}",
            couplings.vertex_count(),
            tree.vertex_count()
        )));
    }
    let mut stay = Vec::new();
    stay_probs(beta, couplings, &mut stay);
    let mut spins = Vec::new();
    broadcast_into(tree, &stay, root, rng, &mut spins);
    Ok(SpinConfig::full(
        spins
            .into_iter()
            .map(|s| if s > 0 { SpinValue::Plus } else { SpinValue::Minus })
            .collect(),
    ))
}

/// Fills `spins` with `±1` for every vertex, given per-vertex stay probabilities.
pub(crate) fn broadcast_into<S: Scalar, R: Rng + ?Sized>(
    tree: &RootedTree,
    stay: &[S],
    root: RootSpin,
    rng: &mut R,
    spins: &mut Vec<i8>,
) {
    let n = tree.vertex_count();
    spins.clear();
    spins.resize(n, 0);
    let u0: f64 = rng.random();
    spins[0] = match root {
        RootSpin::Fixed(s) => s.sign(),
        RootSpin::Uniform => {
            if u0 < 0.5 {
                1
            } else {
                -1
            }
        }
    };
    for v in 1..n {
        let u: f64 = rng.random();
        let p = tree.parent(v).unwrap_or(0);
        let copy = u < stay[v].to_f64_lossy();
        spins[v] = if copy { spins[p] } else { -spins[p] };
    }
}

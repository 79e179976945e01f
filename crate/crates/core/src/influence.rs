//! Edge influences `Γ_e = |tanh(βJ_e/2)|` and what is built from them.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::GibbsInstance;
use crate::model::{Edge, RootedTree, Vertex};
use crate::rng;
use crate::scalar::{log_sum_exp, Scalar};

/// `Γ` and signed `Γ̂` for every edge, stored by child vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceAssignment<S> {
    gamma: Vec<S>,
    signed: Vec<S>,
}

impl<S: Scalar> InfluenceAssignment<S> {
    pub fn gamma(&self, e: Edge) -> S {
        self.gamma[e.0]
    }

    pub fn signed_gamma(&self, e: Edge) -> S {
        self.signed[e.0]
    }

    /// Dense by vertex; slot 0 is zero.
    pub fn gammas(&self) -> &[S] {
        &self.gamma
    }

    pub fn signed_gammas(&self) -> &[S] {
        &self.signed
    }

    /// `∏ Γ̂_e` over a list of edges.
    pub fn signed_product(&self, edges: &[Edge]) -> S {
        edges.iter().fold(S::one(), |acc, &e| acc * self.signed[e.0])
    }

    pub fn product(&self, edges: &[Edge]) -> S {
        edges.iter().fold(S::one(), |acc, &e| acc * self.gamma[e.0])
    }

    /// Negates every signed influence. Only useful for fault-injection tests.
    pub fn negate_signs(&mut self) {
        for g in &mut self.signed {
            *g = -*g;
        }
    }
}

/// `Γ̂_e = tanh(βJ_e/2)` and `Γ_e = |Γ̂_e|`.
pub fn influences<S: Scalar>(instance: &GibbsInstance<'_, S>) -> InfluenceAssignment<S> {
    let n = instance.tree().vertex_count();
    let half = S::lit(0.5);
    let signed: Vec<S> = (0..n)
        .map(|v| if v == 0 { S::zero() } else { (instance.beta_j(v) * half).tanh() })
        .collect();
    let gamma = signed.iter().map(|g| g.abs()).collect();
    InfluenceAssignment { gamma, signed }
}

/// `h(x) = −(1−e^{2a})e^x / ((e^{a+x}+1)(e^x+e^a))`, the derivative of the
/// per-child log-ratio term in `x`.
///
/// Evaluated as `θ(1−t²)/((1−θt)(1+θt))` with `θ = tanh(a/2)` and
/// `t = tanh(x/2)`, which needs no exponentials.
pub fn recursion_derivative<S: Scalar>(a: S, x: S) -> S {
    let half = S::lit(0.5);
    let theta = (a * half).tanh();
    let t = (x * half).tanh();
    let one = S::one();
    theta * (one - t * t) / ((one - theta * t) * (one + theta * t))
}

/// `max |h(x)|` over `grid` for `βJ = beta·j`.
pub fn gradient_sup_check<S: Scalar>(beta: S, j: S, grid: &[S]) -> S {
    let a = beta * j;
    grid.iter()
        .map(|&x| recursion_derivative(a, x).abs())
        .fold(S::zero(), S::max)
}

/// Top-down `log ∏ Γ²` from the root to every vertex; `−∞` marks an exact zero.
pub fn log_path_gamma_sq<S: Scalar>(tree: &RootedTree, infl: &InfluenceAssignment<S>) -> Vec<S> {
    let n = tree.vertex_count();
    let mut out = vec![S::zero(); n];
    for v in 1..n {
        let p = tree.parent(v).unwrap_or(0);
        let g = infl.gamma[v];
        out[v] = out[p] + S::lit(2.0) * g.ln();
    }
    out
}

/// `Σ_{v∈Λ(h)} ∏_{e∈path(r,v)} Γ_e²`.
pub fn level_gamma_sq_sum<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> S {
    let tree = instance.tree();
    let logs = log_path_gamma_sq(tree, &influences(instance));
    let level = tree.level_set(h);
    if level.is_empty() {
        return S::zero();
    }
    log_sum_exp(level.iter().map(|&v| logs[v])).exp()
}

/// `sqrt(Σ_{v∈Λ(h)} ∏_{e∈path(r,v)} Γ_e²)`, an upper bound on the leaf TV.
pub fn tv_upper_bound<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> S {
    level_gamma_sq_sum(instance, h).sqrt()
}

/// Per-vertex disagreement frequencies on `Λ(h)` under the down coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementFrequencies {
    pub leaves: Vec<Vertex>,
    pub counts: Vec<u64>,
    pub trials: usize,
}

impl DisagreementFrequencies {
    pub fn frequency(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.trials as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.leaves.len()).map(|i| self.frequency(i)).collect()
    }
}

/// Simulates the top-down maximal coupling of the laws under `σ(r) = +1` and
/// `σ(r) = −1`.
///
/// The two copies disagree at the root. A disagreement at a parent carries to a
/// child with probability `Γ` of the connecting edge, and agreement is
/// absorbing, so only the disagreement frontier is explored. Counts are summed
/// as integers and are therefore independent of the schedule.
pub fn down_coupling_simulate<S: Scalar>(
    instance: &GibbsInstance<'_, S>,
    h: usize,
    trials: usize,
    seed: u64,
) -> Result<DisagreementFrequencies> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let tree = instance.tree();
    let infl = influences(instance);
    let gamma: Vec<f64> = infl.gammas().iter().map(|g| g.to_f64_lossy()).collect();
    let leaves = tree.level_set(h).to_vec();
    let mut slot = vec![usize::MAX; tree.vertex_count()];
    for (i, &v) in leaves.iter().enumerate() {
        slot[v] = i;
    }
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; leaves.len()], Vec::new(), Vec::new()),
            |(mut counts, mut frontier, mut next), i| {
                let mut rng = rng::stream(seed, i as u64);
                disagreement_trial(tree, &gamma, h, &mut rng, &mut frontier, &mut next);
                for &v in &frontier {
                    counts[slot[v]] += 1;
                }
                (counts, frontier, next)
            },
        )
        .map(|(c, _, _)| c)
        .reduce(
            || vec![0u64; leaves.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(DisagreementFrequencies { leaves, counts, trials })
}

/// Leaves `frontier` holding the vertices of depth `h` that disagree.
fn disagreement_trial<R: Rng + ?Sized>(
    tree: &RootedTree,
    gamma: &[f64],
    h: usize,
    rng: &mut R,
    frontier: &mut Vec<Vertex>,
    next: &mut Vec<Vertex>,
) {
    frontier.clear();
    frontier.push(tree.root());
    for _ in 0..h {
        next.clear();
        for &v in frontier.iter() {
            for &c in tree.children(v) {
                if rng.random::<f64>() < gamma[c] {
                    next.push(c);
                }
            }
        }
        std::mem::swap(frontier, next);
        if frontier.is_empty() {
            break;
        }
    }
}

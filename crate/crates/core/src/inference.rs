//! Exact root marginals on trees, a brute-force Gibbs oracle, and exact and
//! Monte Carlo total variation between the leaf laws under `σ(r) = ±1`.

use rand::Rng;
use rayon::prelude::*;

use crate::broadcast::{self, RootSpin};
use crate::error::{Error, Result};
use crate::model::{CouplingAssignment, GibbsParams, LogRatio, RootedTree, SpinConfig, SpinValue, Vertex};
use crate::rng;
use crate::scalar::Scalar;
use crate::treegen::{build_tree, TreeSpec};

/// Largest tree [`brute_force_gibbs`] enumerates.
pub const MAX_BRUTE_FORCE_VERTICES: usize = 22;
/// Largest level set the exact TV routines enumerate.
pub const MAX_EXACT_LEAVES: usize = 20;

/// A tree with an inverse temperature and one coupling per edge.
#[derive(Debug, Clone)]
pub struct GibbsInstance<'t, S> {
    tree: &'t RootedTree,
    beta: S,
    couplings: CouplingAssignment<S>,
}

impl<'t, S: Scalar> GibbsInstance<'t, S> {
    pub fn new(tree: &'t RootedTree, beta: S, couplings: CouplingAssignment<S>) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {beta}")));
        }
        if !couplings.matches(tree) {
            return Err(Error::domain(format!(
                "couplings cover {} vertices, tree has {}",
                couplings.vertex_count(),
                tree.vertex_count()
            )));
        }
        Ok(Self { tree, beta, couplings })
    }

    /// Draws i.i.d. couplings from `params` and pairs them with `tree`.
    pub fn sample<R: Rng + ?Sized>(tree: &'t RootedTree, params: &GibbsParams, rng: &mut R) -> Self {
        Self {
            tree,
            beta: S::lit(params.beta()),
            couplings: broadcast::sample_couplings(tree, params, rng),
        }
    }

    pub fn tree(&self) -> &'t RootedTree {
        self.tree
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn couplings(&self) -> &CouplingAssignment<S> {
        &self.couplings
    }

    /// `βJ` on the edge above `child` (zero for the root).
    #[inline]
    pub fn beta_j(&self, child: Vertex) -> S {
        self.beta * self.couplings.dense()[child]
    }

    /// The same instance at another inverse temperature.
    pub fn with_beta(&self, beta: S) -> Result<Self> {
        Self::new(self.tree, beta, self.couplings.clone())
    }
}

/// `(μ_r(+1), μ_r(−1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorPair<S> {
    pub p_plus: S,
    pub p_minus: S,
}

impl<S: Scalar> PosteriorPair<S> {
    pub fn uniform() -> Self {
        let h = S::lit(0.5);
        Self { p_plus: h, p_minus: h }
    }

    pub fn from_log_ratio(l: LogRatio<S>) -> Self {
        Self {
            p_plus: S::logistic(l.0),
            p_minus: S::logistic(-l.0),
        }
    }

    pub fn prob(&self, s: SpinValue) -> S {
        match s {
            SpinValue::Plus => self.p_plus,
            SpinValue::Minus => self.p_minus,
        }
    }

    /// `|p₊ − p₋|`.
    pub fn bias(&self) -> S {
        (self.p_plus - self.p_minus).abs()
    }
}

/// Contribution of one child with log-ratio `x` through an edge with `βJ = a`:
/// `log((e^{a+x} + 1)/(e^x + e^a))`, with the pinned limits `±a` taken exactly.
#[inline]
pub fn child_term<S: Scalar>(a: S, x: S) -> S {
    if x == S::infinity() {
        a
    } else if x == S::neg_infinity() {
        -a
    } else {
        S::log_add_exp(a + x, S::zero()) - S::log_add_exp(x, a)
    }
}

/// `log(μ_r(+1|K,τ) / μ_r(−1|K,τ))` by the bottom-up recursion over the tree.
///
/// Pinned vertices carry `±∞`; free vertices sum their children's terms, so a
/// free leaf carries `0`.
pub fn log_ratio_root<S: Scalar>(instance: &GibbsInstance<'_, S>, boundary: &SpinConfig) -> Result<LogRatio<S>> {
    let tree = instance.tree;
    let n = tree.vertex_count();
    if boundary.vertex_count() != n {
        return Err(Error::domain(format!(
            "boundary covers {} vertices, tree has {n}",
            boundary.vertex_count()
        )));
    }
    if boundary.get(tree.root()).is_some() {
        return Err(Error::domain("boundary must not include the root"));
    }
    let pins = boundary.raw();
    let mut x = vec![S::zero(); n];
    for v in (1..n).rev() {
        let own = match pins[v] {
            Some(s) => LogRatio::<S>::pinned(s).0,
            None => x[v],
        };
        let p = tree.parent(v).unwrap_or(0);
        x[p] = x[p] + child_term(instance.beta_j(v), own);
    }
    Ok(LogRatio(x[0]))
}

/// The root posterior given `boundary`.
pub fn root_posterior<S: Scalar>(instance: &GibbsInstance<'_, S>, boundary: &SpinConfig) -> Result<PosteriorPair<S>> {
    log_ratio_root(instance, boundary).map(PosteriorPair::from_log_ratio)
}

/// Which Hamiltonian the oracle uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hamiltonian {
    /// `exp(β Σ J_uw 1{σ(u) = σ(w)})`.
    Indicator,
    /// `exp(β Σ J_uw σ(u)σ(w))`.
    Product,
}

/// The full Gibbs law on `{±1}^V`, indexed by bitmask (bit `v` set means
/// `σ(v) = +1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTable<S> {
    n: usize,
    probs: Vec<S>,
}

impl<S: Scalar> GibbsTable<S> {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn prob(&self, mask: usize) -> S {
        self.probs[mask]
    }

    pub fn config(&self, mask: usize) -> SpinConfig {
        SpinConfig::full((0..self.n).map(|v| spin_of(mask, v)).collect())
    }

    /// Single-vertex marginal.
    pub fn marginal(&self, v: Vertex) -> PosteriorPair<S> {
        let p_plus: S = self
            .probs
            .iter()
            .enumerate()
            .filter(|(m, _)| m >> v & 1 == 1)
            .map(|(_, &p)| p)
            .sum();
        let p_minus: S = self
            .probs
            .iter()
            .enumerate()
            .filter(|(m, _)| m >> v & 1 == 0)
            .map(|(_, &p)| p)
            .sum();
        PosteriorPair { p_plus, p_minus }
    }

    /// `⟨σ(v)⟩`.
    pub fn mean_spin(&self, v: Vertex) -> S {
        self.expectation(|m| sign_of::<S>(m, v))
    }

    /// `⟨σ(u)σ(v)⟩`.
    pub fn correlation(&self, u: Vertex, v: Vertex) -> S {
        self.expectation(|m| sign_of::<S>(m, u) * sign_of::<S>(m, v))
    }

    pub fn expectation(&self, f: impl Fn(usize) -> S) -> S {
        self.probs.iter().enumerate().map(|(m, &p)| if p > S::zero() { p * f(m) } else { S::zero() }).sum()
    }
}

#[inline]
fn spin_of(mask: usize, v: Vertex) -> SpinValue {
    if mask >> v & 1 == 1 {
        SpinValue::Plus
    } else {
        SpinValue::Minus
    }
}

#[inline]
fn sign_of<S: Scalar>(mask: usize, v: Vertex) -> S {
    if mask >> v & 1 == 1 {
        S::one()
    } else {
        -S::one()
    }
}

/// Exhaustive Gibbs law, optionally conditioned on `condition`, computed in
/// log-space with max subtraction.
pub fn brute_force_gibbs<S: Scalar>(
    instance: &GibbsInstance<'_, S>,
    condition: Option<&SpinConfig>,
    form: Hamiltonian,
) -> Result<GibbsTable<S>> {
    let tree = instance.tree;
    let n = tree.vertex_count();
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::Capacity {
            what: "vertex count",
            size: n,
            limit: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    if let Some(c) = condition {
        if c.vertex_count() != n {
            return Err(Error::domain("condition does not match the tree"));
        }
    }
    let (mut fixed_mask, mut fixed_vals) = (0usize, 0usize);
    if let Some(c) = condition {
        for v in c.support() {
            fixed_mask |= 1 << v;
            if c.get(v) == Some(SpinValue::Plus) {
                fixed_vals |= 1 << v;
            }
        }
    }
    let weights: Vec<S> = (1..n).map(|v| instance.beta_j(v)).collect();
    let total = 1usize << n;
    let mut logw = vec![S::neg_infinity(); total];
    for (m, lw) in logw.iter_mut().enumerate() {
        if m & fixed_mask != fixed_vals {
            continue;
        }
        let mut e = S::zero();
        for v in 1..n {
            let p = tree.parent(v).unwrap_or(0);
            let same = (m >> v & 1) == (m >> p & 1);
            e = e + match form {
                Hamiltonian::Indicator if same => weights[v - 1],
                Hamiltonian::Indicator => S::zero(),
                Hamiltonian::Product if same => weights[v - 1],
                Hamiltonian::Product => -weights[v - 1],
            };
        }
        *lw = e;
    }
    let max = logw.iter().copied().fold(S::neg_infinity(), S::max);
    let mut probs: Vec<S> = logw.iter().map(|&l| (l - max).exp()).collect();
    let z: S = probs.iter().copied().sum();
    for p in &mut probs {
        *p = *p / z;
    }
    Ok(GibbsTable { n, probs })
}

/// `tanh(βJ/2)` on the edge above each vertex.
pub(crate) fn edge_thetas<S: Scalar>(beta: S, couplings: &CouplingAssignment<S>, theta: &mut Vec<S>) {
    let half = S::lit(0.5);
    theta.clear();
    theta.extend(couplings.dense().iter().map(|&j| (beta * j * half).tanh()));
}

/// Upward pass for the likelihoods `L±(τ) = P(τ | σ(r) = ±1)` of the spins
/// `τ` that `pin` assigns to vertices of depth at most `depth_cap`.
///
/// Each vertex carries the pair `(L₊ + L₋, L₊ − L₋)`. An edge keeps the sum
/// and scales the difference by `tanh(βJ/2)`, and a parent multiplies its
/// children's pairs, so the difference is never formed by subtraction.
/// Vertices that are neither pinned nor above a pin sum out to `(2, 0)`.
/// With `rescale` set, pairs that become tiny are scaled up, which keeps the
/// ratio but loses the absolute value.
fn sum_diff_pass<S: Scalar>(
    tree: &RootedTree,
    depth_cap: usize,
    theta: &[S],
    pin: impl Fn(Vertex) -> Option<bool>,
    acc: &mut Vec<(S, S)>,
    rescale: bool,
) -> (S, S) {
    let n = tree.vertex_count();
    let two = S::lit(2.0);
    let half = S::lit(0.5);
    let tiny = S::min_positive_value().sqrt();
    let boost = S::one() / tiny;
    acc.clear();
    acc.resize(n, (two, S::zero()));
    for v in (1..n).rev() {
        if tree.depth(v) > depth_cap {
            continue;
        }
        let (sum, diff) = match pin(v) {
            Some(true) => {
                let a = half * (acc[v].0 + acc[v].1);
                (a, a)
            }
            Some(false) => {
                let b = half * (acc[v].0 - acc[v].1);
                (b, -b)
            }
            None => acc[v],
        };
        let d = theta[v] * diff;
        let p = tree.parent(v).unwrap_or(0);
        let (ps, pd) = acc[p];
        let mut next = (half * (ps * sum + pd * d), half * (ps * d + pd * sum));
        if rescale && next.0 < tiny {
            next = (next.0 * boost, next.1 * boost);
        }
        acc[p] = next;
    }
    acc[0]
}

fn check_level<'t, S: Scalar>(instance: &GibbsInstance<'t, S>, h: usize) -> Result<&'t [Vertex]> {
    let leaves = instance.tree.level_set(h);
    if leaves.len() > MAX_EXACT_LEAVES {
        return Err(Error::Capacity {
            what: "level set size",
            size: leaves.len(),
            limit: MAX_EXACT_LEAVES,
        });
    }
    Ok(leaves)
}

/// Enumerates every `τ` on `Λ(h)` and yields `(L₊ + L₋, L₊ − L₋)`.
fn for_each_leaf_config<S: Scalar>(instance: &GibbsInstance<'_, S>, leaves: &[Vertex], h: usize, mut f: impl FnMut(S, S)) {
    let tree = instance.tree;
    let mut theta = Vec::new();
    edge_thetas(instance.beta, &instance.couplings, &mut theta);
    let mut slot = vec![usize::MAX; tree.vertex_count()];
    for (i, &v) in leaves.iter().enumerate() {
        slot[v] = i;
    }
    let mut acc = Vec::new();
    for mask in 0..(1usize << leaves.len()) {
        let pin = |v: Vertex| {
            let i = slot[v];
            (i != usize::MAX).then(|| mask >> i & 1 == 1)
        };
        let (sum, diff) = sum_diff_pass(tree, h, &theta, pin, &mut acc, false);
        f(sum, diff);
    }
}

/// Exact `‖μ_h(·|σ(r)=+1) − μ_h(·|σ(r)=−1)‖_TV` by enumerating `Λ(h)`.
pub fn tv_leaf_conditional_exact<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> Result<S> {
    let leaves = check_level(instance, h)?;
    if leaves.is_empty() {
        return Ok(S::zero());
    }
    if h == 0 {
        return Ok(S::one());
    }
    let mut total = S::zero();
    for_each_leaf_config(instance, leaves, h, |_, diff| total = total + diff.abs());
    Ok(total / S::lit(2.0))
}

/// TV between the two down-up root laws, `E_τ[(μ_r(+1|τ) − μ_r(−1|τ))²]`
/// with `τ` drawn from the unconditioned leaf law.
pub fn downup_tv_exact<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> Result<S> {
    let leaves = check_level(instance, h)?;
    if leaves.is_empty() {
        return Ok(S::zero());
    }
    if h == 0 {
        return Ok(S::one());
    }
    let mut total = S::zero();
    for_each_leaf_config(instance, leaves, h, |sum, diff| {
        if sum > S::zero() {
            total = total + diff * diff / sum;
        }
    });
    Ok(total / S::lit(2.0))
}

/// The down-up root law `μ_↓↑^s(t) = Σ_τ μ_r^{Λ,τ}(t) μ_Λ^s(τ)`, exactly.
///
/// Summing over `τ` collapses the law to `μ_↓↑^s(s) = (1 + D)/2`, where `D` is
/// the down-up TV, so both laws are computed from [`downup_tv_exact`].
pub fn downup_marginal_exact<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize, s: SpinValue) -> Result<PosteriorPair<S>> {
    let d = downup_tv_exact(instance, h)?;
    let half = S::lit(0.5);
    let toward = half + half * d;
    let away = half - half * d;
    Ok(match s {
        SpinValue::Plus => PosteriorPair { p_plus: toward, p_minus: away },
        SpinValue::Minus => PosteriorPair { p_plus: away, p_minus: toward },
    })
}

/// Sample mean and standard error of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// `+∞` with fewer than two samples.
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Summarizes `values` in order, so the result depends only on the values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::INFINITY, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            f64::INFINITY
        } else {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, stderr, n }
    }
}

/// Reusable buffers for one Monte Carlo worker.
#[derive(Debug)]
pub(crate) struct Scratch<S> {
    pub(crate) stay: Vec<S>,
    pub(crate) theta: Vec<S>,
    pub(crate) spins: Vec<i8>,
    acc: Vec<(S, S)>,
    pub(crate) couplings: Vec<S>,
}

impl<S> Default for Scratch<S> {
    fn default() -> Self {
        Self {
            stay: Vec::new(),
            theta: Vec::new(),
            spins: Vec::new(),
            acc: Vec::new(),
            couplings: Vec::new(),
        }
    }
}

/// `|μ_r(+1|τ) − μ_r(−1|τ)|` for `τ = spins` restricted to depth `h`.
pub(crate) fn leaf_posterior_bias<S: Scalar>(tree: &RootedTree, h: usize, scratch: &mut Scratch<S>) -> S {
    if tree.level_set(h).is_empty() {
        return S::zero();
    }
    if h == 0 {
        return S::one();
    }
    let Scratch { theta, spins, acc, .. } = scratch;
    let spins: &[i8] = spins;
    let pin = |v: Vertex| (tree.depth(v) == h).then(|| spins[v] > 0);
    let (sum, diff) = sum_diff_pass(tree, h, theta, pin, acc, true);
    if sum > S::zero() {
        (diff / sum).abs().min(S::one())
    } else {
        S::zero()
    }
}

fn prepare<S: Scalar>(instance: &GibbsInstance<'_, S>, scratch: &mut Scratch<S>) {
    broadcast::stay_probs(instance.beta, &instance.couplings, &mut scratch.stay);
    edge_thetas(instance.beta, &instance.couplings, &mut scratch.theta);
}

/// One trial of the fixed-coupling estimator: broadcast from a uniform root and
/// return `|p₊ − p₋|` of the posterior given `Λ(h)`.
pub fn tv_trial_value<S: Scalar, R: Rng + ?Sized>(instance: &GibbsInstance<'_, S>, h: usize, rng: &mut R) -> S {
    let mut scratch = Scratch::default();
    prepare(instance, &mut scratch);
    broadcast::broadcast_into(instance.tree, &scratch.stay, RootSpin::Uniform, rng, &mut scratch.spins);
    leaf_posterior_bias(instance.tree, h, &mut scratch)
}

/// Monte Carlo estimate of the leaf TV as `E_τ |μ_r(+1|τ) − μ_r(−1|τ)|` with
/// `τ` drawn by broadcasting from a uniform root.
///
/// Trial `i` uses stream `(seed, i)`, and the reduction runs in trial order, so
/// the result does not depend on the number of worker threads.
pub fn tv_monte_carlo<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize, trials: usize, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if instance.tree.level_set(h).is_empty() {
        return Ok(McEstimate::from_values(&vec![0.0; trials]));
    }
    let mut base = Scratch::<S>::default();
    prepare(instance, &mut base);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || Scratch {
                stay: base.stay.clone(),
                theta: base.theta.clone(),
                ..Scratch::default()
            },
            |scratch, i| {
                let mut rng = rng::stream(seed, i as u64);
                broadcast::broadcast_into(instance.tree, &scratch.stay, RootSpin::Uniform, &mut rng, &mut scratch.spins);
                leaf_posterior_bias(instance.tree, h, scratch).to_f64_lossy()
            },
        )
        .collect();
    Ok(McEstimate::from_values(&values))
}

/// Result of a joint Monte Carlo run over trees, couplings and spins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTvEstimate {
    /// Statistics over the trials that produced a tree.
    pub estimate: McEstimate,
    /// Trials dropped because the tree exceeded its vertex budget.
    pub truncated: usize,
    pub trials: usize,
}

impl JointTvEstimate {
    pub fn truncation_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.truncated as f64 / self.trials as f64
        }
    }
}

/// Estimates `E‖μ_h^+ − μ_h^−‖_TV` averaged jointly over the tree (when
/// random), the couplings and one broadcast per coupling draw.
///
/// A deterministic tree is built once. Trials whose Galton-Watson tree
/// overflows its budget are counted in `truncated` and left out of the mean.
/// A trial with an empty level set contributes zero.
pub fn joint_tv_monte_carlo(spec: &TreeSpec, params: &GibbsParams, h: usize, trials: usize, seed: u64) -> Result<JointTvEstimate> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let fixed_tree = if spec.is_random() {
        None
    } else {
        Some(build_tree(spec, &mut rng::stream(seed, u64::MAX))?)
    };
    let beta = params.beta();
    let values: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map_init(Scratch::<f64>::default, |scratch, i| {
            let mut rng = rng::stream(seed, i as u64);
            let owned;
            let tree = match &fixed_tree {
                Some(t) => t,
                None => match build_tree(spec, &mut rng) {
                    Ok(t) => {
                        owned = t;
                        &owned
                    }
                    Err(Error::Overflow { .. }) => return None,
                    Err(e) => panic!("tree construction failed: {e}"),
                },
            };
            Some(joint_trial(tree, params, beta, h, &mut rng, scratch))
        })
        .collect();
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    Ok(JointTvEstimate {
        estimate: McEstimate::from_values(&kept),
        truncated: trials - kept.len(),
        trials,
    })
}

fn joint_trial<R: Rng + ?Sized>(
    tree: &RootedTree,
    params: &GibbsParams,
    beta: f64,
    h: usize,
    rng: &mut R,
    scratch: &mut Scratch<f64>,
) -> f64 {
    if tree.level_set(h).is_empty() {
        return 0.0;
    }
    let n = tree.vertex_count();
    scratch.couplings.clear();
    scratch.couplings.push(0.0);
    broadcast::fill_couplings(n, params, rng, &mut scratch.couplings);
    scratch.stay.clear();
    scratch.theta.clear();
    for &j in &scratch.couplings {
        let t = (0.5 * beta * j).tanh();
        scratch.theta.push(t);
        scratch.stay.push(0.5 + 0.5 * t);
    }
    broadcast::broadcast_into(tree, &scratch.stay, RootSpin::Uniform, rng, &mut scratch.spins);
    leaf_posterior_bias(tree, h, scratch)
}

//! Root estimators from the leaf spins, the moments of the flip-majority
//! statistic, and the resulting reconstruction lower bounds.

use rand::Rng;

use crate::distributions::{delta_ks, OffspringDistribution};
use crate::error::{Error, Result};
use crate::inference::GibbsInstance;
use crate::influence::influences;
use crate::model::{GibbsParams, SpinConfig, SpinValue, Vertex};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// `Σ τ(u)`.
    Majority,
    /// `(−1)^h Σ τ(u)`.
    ParityFlippedMajority,
    /// `Σ τ(u) ∏ sign(J_e)`.
    SignWeightedMajority,
    /// `Σ τ(u) ∏ Γ̂_e`.
    FlipMajority,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Majority,
        EstimatorKind::ParityFlippedMajority,
        EstimatorKind::SignWeightedMajority,
        EstimatorKind::FlipMajority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Majority => "majority",
            Self::ParityFlippedMajority => "parity_flipped_majority",
            Self::SignWeightedMajority => "sign_weighted_majority",
            Self::FlipMajority => "flip_majority",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.name().replace('_', "-") == s)
    }
}

/// Weight of each vertex of `Λ(h)` in the linear statistic, in level order.
pub fn leaf_weights<S: Scalar>(kind: EstimatorKind, instance: &GibbsInstance<'_, S>, h: usize) -> Vec<S> {
    let tree = instance.tree();
    let n = tree.vertex_count();
    let leaves = tree.level_set(h);
    match kind {
        EstimatorKind::Majority => vec![S::one(); leaves.len()],
        EstimatorKind::ParityFlippedMajority => {
            let w = if h.is_multiple_of(2) { S::one() } else { -S::one() };
            vec![w; leaves.len()]
        }
        EstimatorKind::SignWeightedMajority | EstimatorKind::FlipMajority => {
            let edge: Vec<S> = if kind == EstimatorKind::FlipMajority {
                influences(instance).signed_gammas().to_vec()
            } else {
                (0..n).map(|v| sign_or_zero(instance.couplings().dense()[v])).collect()
            };
            let mut acc = vec![S::one(); n];
            for v in 1..n {
                let p = tree.parent(v).unwrap_or(0);
                acc[v] = acc[p] * edge[v];
            }
            leaves.iter().map(|&v| acc[v]).collect()
        }
    }
}

fn sign_or_zero<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else if x < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

fn leaf_spins<S: Scalar>(leaves: &[Vertex], config: &SpinConfig) -> Result<Vec<S>> {
    leaves
        .iter()
        .map(|&v| {
            config
                .get(v)
                .map(SpinValue::as_scalar)
                .ok_or_else(|| Error::domain(format!("leaf configuration misses vertex {v}")))
        })
        .collect()
}

/// The value of the statistic on `leaf_config`. A tie is reported as zero.
pub fn evaluate_estimator<S: Scalar>(
    kind: EstimatorKind,
    instance: &GibbsInstance<'_, S>,
    h: usize,
    leaf_config: &SpinConfig,
) -> Result<S> {
    let leaves = instance.tree().level_set(h);
    let spins = leaf_spins::<S>(leaves, leaf_config)?;
    let w = leaf_weights(kind, instance, h);
    // summing each side separately makes symmetric ties cancel exactly
    let mut plus = S::zero();
    let mut minus = S::zero();
    for (&wi, &si) in w.iter().zip(&spins) {
        if si > S::zero() {
            plus = plus + wi;
        } else {
            minus = minus + wi;
        }
    }
    Ok(plus - minus)
}

/// How a zero statistic is turned into a spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    Plus,
    Coin,
}

/// Sign of a statistic value, resolving ties by `tie`.
pub fn decide<S: Scalar, R: Rng + ?Sized>(value: S, tie: TieRule, rng: &mut R) -> SpinValue {
    if value > S::zero() {
        SpinValue::Plus
    } else if value < S::zero() {
        SpinValue::Minus
    } else {
        match tie {
            TieRule::Plus => SpinValue::Plus,
            TieRule::Coin => {
                if rng.random::<bool>() {
                    SpinValue::Plus
                } else {
                    SpinValue::Minus
                }
            }
        }
    }
}

/// The root estimate `sgn(statistic)`.
pub fn estimate_root<S: Scalar, R: Rng + ?Sized>(
    kind: EstimatorKind,
    instance: &GibbsInstance<'_, S>,
    h: usize,
    leaf_config: &SpinConfig,
    tie: TieRule,
    rng: &mut R,
) -> Result<SpinValue> {
    evaluate_estimator(kind, instance, h, leaf_config).map(|v| decide(v, tie, rng))
}

/// `Q_v = Σ_{u∈Λ(h), u below v} ∏_{e∈path(v,u)} Γ_e²` for every vertex with
/// depth at most `h`, together with `P_v = ∏_{e∈path(r,v)} Γ_e²`.
fn subtree_sums<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> (Vec<S>, Vec<S>) {
    let tree = instance.tree();
    let n = tree.vertex_count();
    let infl = influences(instance);
    let g2: Vec<S> = infl.gammas().iter().map(|&g| g * g).collect();
    let mut p = vec![S::one(); n];
    for v in 1..n {
        p[v] = p[tree.parent(v).unwrap_or(0)] * g2[v];
    }
    let mut q = vec![S::zero(); n];
    for v in (0..n).rev() {
        let d = tree.depth(v);
        if d > h {
            continue;
        }
        if d == h {
            q[v] = S::one();
        }
        if v > 0 {
            let parent = tree.parent(v).unwrap_or(0);
            q[parent] = q[parent] + g2[v] * q[v];
        }
    }
    (p, q)
}

/// `⟨F_h⟩` under `σ(r)=+1` minus under `σ(r)=−1`, for the fixed couplings:
/// `2 Σ_{v∈Λ(h)} ∏_{e∈path(r,v)} Γ_e²`.
pub fn flip_moment_gap<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> S {
    let (_, q) = subtree_sums(instance, h);
    S::lit(2.0) * q[0]
}

/// `⟨F_h²⟩` under the unconditioned Gibbs law:
/// `Σ_{u,v∈Λ(h)} ∏_{path(u,v)} Γ² · ∏_{path(r,u∧v)} Γ²`.
///
/// Pairs are grouped by their common ancestor `z`. Pairs split across two
/// children of `z` contribute `P_z (Q_z² − Σ_c (Γ_c² Q_c)²)`, and the diagonal
/// contributes `Σ_{u∈Λ} P_u`. This is linear in the tree size.
pub fn flip_second_moment<S: Scalar>(instance: &GibbsInstance<'_, S>, h: usize) -> S {
    let tree = instance.tree();
    let (p, q) = subtree_sums(instance, h);
    let infl = influences(instance);
    let mut total = S::zero();
    for &u in tree.level_set(h) {
        total = total + p[u];
    }
    for z in 0..tree.vertex_count() {
        if tree.depth(z) >= h || q[z] == S::zero() {
            continue;
        }
        let split: S = tree
            .children(z)
            .iter()
            .map(|&c| {
                let g = infl.gammas()[c];
                let w = g * g * q[c];
                w * w
            })
            .sum();
        total = total + p[z] * (q[z] * q[z] - split);
    }
    total
}

/// Relative margin by which a degree must exceed `Δ_KS`; absorbs rounding in
/// `Δ_KS` so that a degree equal to the threshold is rejected.
pub const THRESHOLD_RTOL: f64 = 1e-12;

/// The averaged moment ratio on the Δ-ary tree and its floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBound {
    /// `(E[gap])² / (4 E[⟨F_h²⟩])`.
    pub ratio: f64,
    /// `δ/(1+δ)` with `1+δ = Δ/Δ_KS`.
    pub floor: f64,
    pub delta_ks: f64,
    pub delta: f64,
}

/// Exact `(E[gap])² / (4 E[⟨F_h²⟩])` on the complete `Δ`-ary tree of height
/// `h` with i.i.d. couplings, and the floor `δ/(1+δ)` below it.
///
/// With `ρ = Δ_KS/Δ` the ratio equals
/// `1 / ((1 − 1/Δ) Σ_{ℓ<h} ρ^ℓ + ρ^h)`: pairs meeting at depth `ℓ < h` number
/// `Δ^ℓ·Δ^{2(h−ℓ)}(1 − 1/Δ)` and each has expectation `E[Γ²]^{2h−ℓ}`.
pub fn delta_ary_ratio_bound(delta: usize, params: &GibbsParams, h: usize) -> Result<RatioBound> {
    let ks = delta_ks(params)?.delta_ks;
    let d = delta as f64;
    if !(d > ks * (1.0 + THRESHOLD_RTOL)) {
        return Err(Error::Precondition(format!(
            "degree {delta} does not exceed the threshold {ks}"
        )));
    }
    let rho = ks / d;
    let mut geometric = 0.0;
    let mut pow = 1.0;
    for _ in 0..h {
        geometric += pow;
        pow *= rho;
    }
    let ratio = 1.0 / ((1.0 - 1.0 / d) * geometric + pow);
    let excess = d / ks - 1.0;
    let floor = excess / (1.0 + excess);
    debug_assert!(ratio >= floor * (1.0 - 1e-12));
    Ok(RatioBound {
        ratio,
        floor,
        delta_ks: ks,
        delta: excess,
    })
}

/// The Galton-Watson floor `δ/(M(1+δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwBound {
    pub floor: f64,
    pub delta: f64,
    /// `E[ζ²]/d²`.
    pub m: f64,
    pub delta_ks: f64,
}

/// `δ/(M(1+δ))` where `Δ_KS(1+δ) = d` and `M = E[ζ²]/d²`.
pub fn gw_ratio_bound(zeta: &OffspringDistribution, params: &GibbsParams) -> Result<GwBound> {
    let ks = delta_ks(params)?.delta_ks;
    let d = zeta.mean();
    if !(d > ks * (1.0 + THRESHOLD_RTOL)) {
        return Err(Error::Precondition(format!(
            "mean offspring {d} does not exceed the threshold {ks}"
        )));
    }
    let second = zeta.second_moment();
    if !second.is_finite() {
        return Err(Error::Precondition("offspring second moment must be finite".into()));
    }
    let m = second / (d * d);
    let delta = d / ks - 1.0;
    Ok(GwBound {
        floor: delta / (m * (1.0 + delta)),
        delta,
        m,
        delta_ks: ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::{broadcast_sample, RootSpin};
    use crate::distributions::CouplingDistribution;
    use crate::inference::{brute_force_gibbs, Hamiltonian, McEstimate};
    use crate::model::{CouplingAssignment, RootedTree};
    use crate::rng;
    use crate::treegen::{build_tree, TreeSpec};
    use approx::assert_abs_diff_eq;

    fn delta_ary(d: usize, h: usize) -> RootedTree {
        build_tree(&TreeSpec::delta_ary(d, h).unwrap(), &mut rng::stream(0, 0)).unwrap()
    }

    fn constant<'t>(t: &'t RootedTree, beta_j: f64) -> GibbsInstance<'t, f64> {
        GibbsInstance::new(t, 1.0, CouplingAssignment::constant(t, beta_j).unwrap()).unwrap()
    }

    fn all_plus(t: &RootedTree) -> SpinConfig {
        SpinConfig::full(vec![SpinValue::Plus; t.vertex_count()])
    }

    fn rademacher(beta: f64) -> GibbsParams {
        GibbsParams::new(beta, CouplingDistribution::Rademacher).unwrap()
    }

    /// Second moment by summing every ordered pair with explicit path walks.
    fn second_moment_pairwise(inst: &GibbsInstance<'_, f64>, h: usize) -> f64 {
        let t = inst.tree();
        let infl = influences(inst);
        let leaves = t.level_set(h);
        let mut s = 0.0;
        for &u in leaves {
            for &v in leaves {
                let z = t.common_ancestor(u, v).unwrap();
                let a = infl.product(&t.path_edges(u, v).unwrap()).powi(2);
                let b = infl.product(&t.path_edges(0, z).unwrap()).powi(2);
                s += a * b;
            }
        }
        s
    }

    #[test]
    fn estimator_examples() {
        let t = delta_ary(1, 1);
        let v = evaluate_estimator(EstimatorKind::FlipMajority, &constant(&t, 3f64.ln()), 1, &all_plus(&t)).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);

        let t = delta_ary(2, 3);
        let inst = constant(&t, 0.4);
        assert_eq!(evaluate_estimator(EstimatorKind::Majority, &inst, 3, &all_plus(&t)).unwrap(), 8.0);
        assert_eq!(evaluate_estimator(EstimatorKind::ParityFlippedMajority, &inst, 3, &all_plus(&t)).unwrap(), -8.0);
        assert_eq!(evaluate_estimator(EstimatorKind::FlipMajority, &constant(&t, 0.0), 3, &all_plus(&t)).unwrap(), 0.0);
        assert!(evaluate_estimator(EstimatorKind::Majority, &inst, 3, &SpinConfig::empty(15)).is_err());
    }

    #[test]
    fn sign_weighted_uses_coupling_signs() {
        let t = delta_ary(1, 2);
        let c = CouplingAssignment::from_edge_values(vec![-1.0, 0.5]).unwrap();
        let inst = GibbsInstance::new(&t, 1.0, c).unwrap();
        assert_eq!(evaluate_estimator(EstimatorKind::SignWeightedMajority, &inst, 2, &all_plus(&t)).unwrap(), -1.0);
        let zero = GibbsInstance::new(&t, 1.0, CouplingAssignment::from_edge_values(vec![0.0, 0.5]).unwrap()).unwrap();
        assert_eq!(evaluate_estimator(EstimatorKind::SignWeightedMajority, &zero, 2, &all_plus(&t)).unwrap(), 0.0);
    }

    #[test]
    fn tie_rules() {
        let mut rng = rng::stream(0, 0);
        assert_eq!(decide(0.0, TieRule::Plus, &mut rng), SpinValue::Plus);
        assert_eq!(decide(2.0, TieRule::Coin, &mut rng), SpinValue::Plus);
        assert_eq!(decide(-1e-300, TieRule::Plus, &mut rng), SpinValue::Minus);
        let plus = (0..10_000).filter(|_| decide(0.0, TieRule::Coin, &mut rng) == SpinValue::Plus).count();
        assert!((plus as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn saturated_instance_is_always_recovered() {
        let t = delta_ary(2, 4);
        let inst = constant(&t, 50.0);
        let mut rng = rng::stream(1, 0);
        for _ in 0..10_000 {
            let s = broadcast_sample(&t, inst.beta(), inst.couplings(), RootSpin::Fixed(SpinValue::Plus), &mut rng).unwrap();
            let est = estimate_root(EstimatorKind::FlipMajority, &inst, 4, &s, TieRule::Coin, &mut rng).unwrap();
            assert_eq!(est, SpinValue::Plus);
        }
    }

    #[test]
    fn moment_examples() {
        let t = delta_ary(2, 1);
        let inst = constant(&t, 3f64.ln());
        assert_abs_diff_eq!(flip_moment_gap(&inst, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(flip_second_moment(&inst, 1), 0.625, epsilon = 1e-15);
        let hot = constant(&t, 0.0);
        assert_eq!(flip_moment_gap(&hot, 1), 0.0);
        assert_eq!(flip_second_moment(&hot, 1), 0.0);
    }

    #[test]
    fn second_moment_matches_pairwise_sum_on_random_trees() {
        let mut rng = rng::stream(2, 0);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let parents: Vec<usize> = (1..n).map(|v| rng.random_range(0..v)).collect();
            let t = RootedTree::from_parents(&parents).unwrap();
            let p = GibbsParams::new(rng.random_range(0.0..4.0), CouplingDistribution::StandardGaussian).unwrap();
            let inst: GibbsInstance<f64> = GibbsInstance::sample(&t, &p, &mut rng);
            for h in 0..=t.height() + 1 {
                let fast = flip_second_moment(&inst, h);
                let slow = second_moment_pairwise(&inst, h);
                assert_abs_diff_eq!(fast, slow, epsilon = 1e-12 * slow.max(1.0));
            }
        }
    }

    #[test]
    fn moments_match_brute_force_expectations() {
        let mut rng = rng::stream(3, 0);
        for _ in 0..20 {
            let n = rng.random_range(2..11);
            let parents: Vec<usize> = (1..n).map(|v| rng.random_range(0..v)).collect();
            let t = RootedTree::from_parents(&parents).unwrap();
            let p = GibbsParams::new(rng.random_range(0.0..3.0), CouplingDistribution::StandardGaussian).unwrap();
            let inst: GibbsInstance<f64> = GibbsInstance::sample(&t, &p, &mut rng);
            let w_f = leaf_weights(EstimatorKind::FlipMajority, &inst, t.height());
            let leaves = t.level_set(t.height()).to_vec();
            let stat = |m: usize| -> f64 {
                leaves
                    .iter()
                    .zip(&w_f)
                    .map(|(&v, &w)| w * if m >> v & 1 == 1 { 1.0 } else { -1.0 })
                    .sum()
            };
            let free = brute_force_gibbs(&inst, None, Hamiltonian::Indicator).unwrap();
            assert_abs_diff_eq!(
                free.expectation(|m| stat(m).powi(2)),
                flip_second_moment(&inst, t.height()),
                epsilon = 1e-10
            );
            let mut gap = 0.0;
            for (s, sign) in [(SpinValue::Plus, 1.0), (SpinValue::Minus, -1.0)] {
                let c = SpinConfig::from_pairs(n, [(0, s)]).unwrap();
                let cond = brute_force_gibbs(&inst, Some(&c), Hamiltonian::Indicator).unwrap();
                gap += sign * cond.expectation(stat);
            }
            assert_abs_diff_eq!(gap, flip_moment_gap(&inst, t.height()), epsilon = 1e-10);
        }
    }

    #[test]
    fn ratio_bound_examples() {
        let b = delta_ary_ratio_bound(8, &rademacher(3f64.ln()), 5).unwrap();
        assert_abs_diff_eq!(b.floor, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.delta_ks, 4.0, epsilon = 1e-12);
        assert!(b.ratio >= b.floor);
        assert!(matches!(delta_ary_ratio_bound(4, &rademacher(3f64.ln()), 3), Err(Error::Precondition(_))));
        assert!(delta_ary_ratio_bound(4, &rademacher(0.0), 3).is_err());

        // Δ_KS = 1/tanh²(β/2) for a point mass; put Δ just above it
        let beta = 2.0 * ((1.0f64 + 1e-6) / 3.0).sqrt().atanh();
        let b = delta_ary_ratio_bound(3, &GibbsParams::new(beta, CouplingDistribution::PointMass(1.0)).unwrap(), 4).unwrap();
        assert_abs_diff_eq!(b.floor, 1e-6, epsilon = 1e-9);
    }

    #[test]
    fn ratio_bound_matches_constant_coupling_instance() {
        // with a point-mass φ the per-instance moments are their own expectations
        for (delta, h, beta) in [(2, 1, 3f64.ln()), (3, 3, 1.7), (5, 2, 1.2), (8, 4, 3f64.ln())] {
            let params = GibbsParams::new(beta, CouplingDistribution::PointMass(1.0)).unwrap();
            let t = delta_ary(delta, h);
            let inst = constant(&t, beta);
            let gap = flip_moment_gap(&inst, h);
            let direct = gap * gap / (4.0 * flip_second_moment(&inst, h));
            match delta_ary_ratio_bound(delta, &params, h) {
                Ok(b) => {
                    assert_abs_diff_eq!(b.ratio, direct, epsilon = 1e-12);
                    assert!(b.ratio >= b.floor);
                }
                Err(Error::Precondition(_)) => assert!(delta as f64 * (beta / 2.0).tanh().powi(2) <= 1.0),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn gw_bound_examples() {
        let p = rademacher(3f64.ln());
        let fixed = gw_ratio_bound(&OffspringDistribution::Fixed(8), &p).unwrap();
        assert_abs_diff_eq!(fixed.m, 1.0);
        assert_abs_diff_eq!(fixed.floor, delta_ary_ratio_bound(8, &p, 3).unwrap().floor, epsilon = 1e-12);
        let pois = gw_ratio_bound(&OffspringDistribution::Poisson(8.0), &p).unwrap();
        assert_abs_diff_eq!(pois.m, 1.0 + 1.0 / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pois.floor, 1.0 / (2.0 * (1.0 + 1.0 / 8.0)), epsilon = 1e-12);
        assert!(gw_ratio_bound(&OffspringDistribution::Poisson(2.0), &p).is_err());
    }

    #[test]
    fn gap_matches_conditioned_broadcasts() {
        let t = delta_ary(2, 3);
        let p = GibbsParams::new(1.5, CouplingDistribution::StandardGaussian).unwrap();
        let inst: GibbsInstance<f64> = GibbsInstance::sample(&t, &p, &mut rng::stream(4, 0));
        let mut rng = rng::stream(4, 1);
        let n = 200_000;
        let mut diffs = Vec::with_capacity(n);
        for _ in 0..n {
            let a = broadcast_sample(&t, inst.beta(), inst.couplings(), RootSpin::Fixed(SpinValue::Plus), &mut rng).unwrap();
            let b = broadcast_sample(&t, inst.beta(), inst.couplings(), RootSpin::Fixed(SpinValue::Minus), &mut rng).unwrap();
            let fa = evaluate_estimator(EstimatorKind::FlipMajority, &inst, 3, &a).unwrap();
            let fb = evaluate_estimator(EstimatorKind::FlipMajority, &inst, 3, &b).unwrap();
            diffs.push(fa - fb);
        }
        let est = McEstimate::from_values(&diffs);
        assert!((est.mean - flip_moment_gap(&inst, 3)).abs() <= 4.0 * est.stderr);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn leaf_configs(t: &RootedTree, h: usize) -> impl Iterator<Item = SpinConfig> + '_ {
            let leaves = t.level_set(h);
            (0..(1usize << leaves.len())).map(move |m| {
                let mut c = SpinConfig::empty(t.vertex_count());
                for (i, &v) in leaves.iter().enumerate() {
                    c.set(v, if m >> i & 1 == 1 { SpinValue::Plus } else { SpinValue::Minus }).unwrap();
                }
                c
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn ferromagnet_reduces_to_majority(j in 0.01f64..5.0, arity in 1usize..3, h in 1usize..4) {
                let t = delta_ary(arity, h);
                prop_assume!(t.level_set(h).len() <= 8);
                let inst = constant(&t, j);
                let mut rng = rng::stream(0, 0);
                for c in leaf_configs(&t, h) {
                    let a = estimate_root(EstimatorKind::FlipMajority, &inst, h, &c, TieRule::Plus, &mut rng).unwrap();
                    let b = estimate_root(EstimatorKind::Majority, &inst, h, &c, TieRule::Plus, &mut rng).unwrap();
                    prop_assert_eq!(a, b);
                }
            }

            #[test]
            fn antiferromagnet_reduces_to_parity(j in 0.01f64..5.0, arity in 1usize..3, h in 1usize..4) {
                let t = delta_ary(arity, h);
                prop_assume!(t.level_set(h).len() <= 8);
                let inst = constant(&t, -j);
                let mut rng = rng::stream(0, 0);
                for c in leaf_configs(&t, h) {
                    let a = estimate_root(EstimatorKind::FlipMajority, &inst, h, &c, TieRule::Plus, &mut rng).unwrap();
                    let b = estimate_root(EstimatorKind::ParityFlippedMajority, &inst, h, &c, TieRule::Plus, &mut rng).unwrap();
                    prop_assert_eq!(a, b);
                }
            }

            #[test]
            fn ratio_exceeds_floor(delta in 2usize..40, h in 0usize..30, beta in 0.1f64..6.0) {
                if let Ok(b) = delta_ary_ratio_bound(delta, &rademacher(beta), h) {
                    prop_assert!(b.ratio >= b.floor * (1.0 - 1e-12));
                    prop_assert!(b.ratio <= 1.0 + 1e-12);
                }
            }
        }
    }
}

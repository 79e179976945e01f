//! Randomized oracle checks on small instances.
//!
//! Every check draws its instances from its own stream, so a failure names a
//! seed and an instance index that reproduce it. The oracles enumerate the
//! full Gibbs law and never reuse the message-passing code under test.

use std::fmt;
use std::io::{self, Write};

use glassy_core::distributions::{
    classic_ks_degree, delta_ks, xi_lambda4, xi_matrix, CouplingDistribution, KsSettings,
};
use glassy_core::estimators::{decide, evaluate_estimator, flip_moment_gap, flip_second_moment, leaf_weights, EstimatorKind, TieRule};
use glassy_core::inference::{brute_force_gibbs, downup_tv_exact, root_posterior, tv_leaf_conditional_exact, GibbsTable, Hamiltonian};
use glassy_core::influence::{gradient_sup_check, influences, level_gamma_sq_sum, tv_upper_bound};
use glassy_core::rng::{self, mix_seed, StreamRng};
use glassy_core::{Couplings, GibbsParams, Instance, RootedTree, SpinConfig, SpinValue, Vertex};
use nalgebra::Matrix4;
use rand::Rng;

/// A deliberate bug, used to show that the suite catches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of every signed influence before it is used.
    NegatedSignedInfluence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// The first instance that broke the tolerance.
    pub failure: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<42} instances={:<5} max_dev={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.max_deviation,
            self.tolerance
        )?;
        if let Some(why) = &self.failure {
            write!(f, "\n     {why}")?;
        }
        Ok(())
    }
}

struct Tracker {
    out: CheckOutcome,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            out: CheckOutcome {
                name,
                instances: 0,
                max_deviation: 0.0,
                tolerance,
                failure: None,
            },
        }
    }

    /// A NaN deviation counts as a failure.
    fn record(&mut self, deviation: f64, describe: impl FnOnce() -> String) {
        self.record_within(deviation, self.out.tolerance, describe);
    }

    fn record_within(&mut self, deviation: f64, tolerance: f64, describe: impl FnOnce() -> String) {
        let bad = !(deviation <= tolerance);
        if deviation.is_nan() {
            self.out.max_deviation = f64::NAN;
        } else if !self.out.max_deviation.is_nan() {
            self.out.max_deviation = self.out.max_deviation.max(deviation);
        }
        if bad && self.out.failure.is_none() {
            self.out.failure = Some(describe());
        }
    }

    fn done(mut self, instances: usize) -> CheckOutcome {
        self.out.instances = instances;
        self.out
    }
}

/// A random instance: tree, law, temperature and one coupling draw.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub seed: u64,
    pub index: usize,
    pub tree: RootedTree,
    pub parents: Vec<Vertex>,
    pub beta: f64,
    pub phi: CouplingDistribution,
    pub couplings: Couplings,
}

impl RandomInstance {
    pub fn instance(&self) -> Instance<'_> {
        Instance::new(&self.tree, self.beta, self.couplings.clone()).expect("couplings match the tree")
    }
}

impl fmt::Display for RandomInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed={} instance={} parents={:?} beta={} phi={} couplings={:?}",
            self.seed,
            self.index,
            self.parents,
            self.beta,
            self.phi,
            self.couplings.edge_values()
        )
    }
}

fn random_phi(rng: &mut StreamRng) -> CouplingDistribution {
    match rng.random_range(0..5) {
        0 => CouplingDistribution::StandardGaussian,
        1 => CouplingDistribution::Rademacher,
        2 => CouplingDistribution::PointMass(rng.random_range(-2.5..2.5)),
        3 => {
            let minus = rng.random_range(-2.5..0.0);
            let plus = rng.random_range(0.0..2.5);
            CouplingDistribution::two_point(minus, plus, rng.random_range(0.1..0.9)).expect("valid two-point law")
        }
        _ => {
            let values = vec![rng.random_range(-2.5..-0.5), 0.0, rng.random_range(0.5..2.5)];
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            CouplingDistribution::finite_table(values, w.iter().map(|x| x / total).collect()).expect("valid table")
        }
    }
}

/// Instance `index` of the stream `(seed, salt)`: a random recursive tree on
/// `2..=max_vertices` vertices, a random law and `β ∈ [0, 5]`.
pub fn random_instance(seed: u64, salt: u64, index: usize, max_vertices: usize) -> RandomInstance {
    let mut rng = rng::stream(mix_seed(seed, &[salt]), index as u64);
    let n = rng.random_range(2..=max_vertices.max(2));
    let parents: Vec<Vertex> = (1..n).map(|v| rng.random_range(0..v)).collect();
    let tree = RootedTree::from_parents(&parents).expect("parents precede children");
    let phi = random_phi(&mut rng);
    let beta = rng.random_range(0.0..5.0);
    let params = GibbsParams::new(beta, phi.clone()).expect("valid parameters");
    let couplings = glassy_core::broadcast::sample_couplings(&tree, &params, &mut rng);
    RandomInstance {
        seed,
        index,
        tree,
        parents,
        beta,
        phi,
        couplings,
    }
}

fn instance_rng(seed: u64, salt: u64, index: usize) -> StreamRng {
    rng::stream(mix_seed(seed, &[salt, 1]), index as u64)
}

fn pin(n: usize, pairs: &[(Vertex, SpinValue)]) -> SpinConfig {
    SpinConfig::from_pairs(n, pairs.iter().copied()).expect("pins inside the tree")
}

fn random_spin(rng: &mut StreamRng) -> SpinValue {
    if rng.random::<bool>() {
        SpinValue::Plus
    } else {
        SpinValue::Minus
    }
}

fn gibbs(inst: &Instance<'_>, condition: Option<&SpinConfig>) -> GibbsTable<f64> {
    brute_force_gibbs(inst, condition, Hamiltonian::Indicator).expect("small instance")
}

/// The law of the spins on `leaves` (bit `i` for `leaves[i]`).
fn pattern_law(table: &GibbsTable<f64>, leaves: &[Vertex]) -> Vec<f64> {
    let mut law = vec![0.0; 1 << leaves.len()];
    for (mask, &p) in table.probs().iter().enumerate() {
        let pattern = leaves
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &v)| acc | (mask >> v & 1) << i);
        law[pattern] += p;
    }
    law
}

/// `‖μ_Λ^+ − μ_Λ^−‖_TV` and the down-up TV, both by enumeration.
fn enumerated_tvs(inst: &Instance<'_>, leaves: &[Vertex]) -> (f64, f64) {
    let n = inst.tree().vertex_count();
    let plus = pattern_law(&gibbs(inst, Some(&pin(n, &[(0, SpinValue::Plus)]))), leaves);
    let minus = pattern_law(&gibbs(inst, Some(&pin(n, &[(0, SpinValue::Minus)]))), leaves);
    let tv = 0.5 * plus.iter().zip(&minus).map(|(a, b)| (a - b).abs()).sum::<f64>();
    // With a uniform root, μ_r(+|τ) = a/(a+b) for a = μ^+(τ), b = μ^−(τ), so
    // Σ (a − b)·a/(a+b) is the gap; subtracting Σ (a − b)/2 = 0 keeps every
    // term nonnegative.
    let du = plus
        .iter()
        .zip(&minus)
        .filter(|(a, b)| *a + *b > 0.0)
        .map(|(a, b)| (a - b).powi(2) / (2.0 * (a + b)))
        .sum();
    (tv, du)
}

fn path_signed_product(inst: &Instance<'_>, u: Vertex, w: Vertex, fault: Option<Fault>) -> f64 {
    let mut infl = influences(inst);
    if fault == Some(Fault::NegatedSignedInfluence) {
        infl.negate_signs();
    }
    infl.signed_product(&inst.tree().path_edges(u, w).expect("vertices in the tree"))
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1.0)
    }
}

/// The threshold of the ±1 law at `β = ln 3` and of point masses against the
/// classic `λ₂⁻²` of the edge matrix.
pub fn check_threshold_closed_form(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("threshold_closed_form", 1e-10);
    if count == 0 {
        return t.done(0);
    }
    let ks = delta_ks(&GibbsParams::new(3f64.ln(), CouplingDistribution::Rademacher).expect("valid"))
        .map(|r| r.delta_ks)
        .unwrap_or(f64::NAN);
    t.record_within((ks - 4.0).abs(), 1e-12, || format!("seed={seed}: rademacher at ln 3 gives {ks}"));
    for i in 0..count {
        let mut rng = instance_rng(seed, 1, i);
        let beta = rng.random_range(0.2..5.0);
        let j0 = rng.random_range(0.2..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let got = GibbsParams::new(beta, CouplingDistribution::PointMass(j0))
            .and_then(|p| delta_ks(&p))
            .map(|r| r.delta_ks)
            .unwrap_or(f64::NAN);
        // the edge matrix [[p, 1−p], [1−p, p]] has second eigenvalue 2p − 1
        let p = (beta * j0).exp() / (1.0 + (beta * j0).exp());
        let want = classic_ks_degree(2.0 * p - 1.0).unwrap_or(f64::NAN);
        t.record(relative(got, want), || format!("seed={seed} instance={i}: beta={beta} j0={j0} gives {got}, expected {want}"));
    }
    t.done(count + 1)
}

/// `E[tanh²(βJ/2)]` by a route that shares nothing with the library: exact
/// sums for atoms and composite Simpson on `[−14, 14]` for the Gaussian.
pub fn reference_gamma_sq(phi: &CouplingDistribution, beta: f64) -> f64 {
    let g2 = |j: f64| (0.5 * beta * j).tanh().powi(2);
    match phi.atoms() {
        Some(atoms) => atoms.iter().map(|&(j, p)| p * g2(j)).sum(),
        None => {
            let (lo, hi, m) = (-14.0f64, 14.0f64, 40_000usize);
            let step = (hi - lo) / m as f64;
            let f = |x: f64| g2(x) * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let inner: f64 = (1..m).map(|k| f(lo + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
            (f(lo) + f(hi) + inner) * step / 3.0
        }
    }
}

/// `λ₄(E[M⊗M]) = E[Γ²]`, and `E[Γ²]` is in the numerically computed spectrum.
pub fn check_xi_spectrum(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("xi_fourth_eigenvalue", 1e-10);
    let settings = KsSettings::default();
    let mut done = 0;
    for kind in 0..5 {
        for i in 0..count {
            let mut rng = instance_rng(seed, 2, kind * count + i);
            let phi = loop {
                let phi = random_phi(&mut rng);
                let k = match phi {
                    CouplingDistribution::StandardGaussian => 0,
                    CouplingDistribution::Rademacher => 1,
                    CouplingDistribution::PointMass(_) => 2,
                    CouplingDistribution::TwoPoint { .. } => 3,
                    CouplingDistribution::FiniteTable { .. } => 4,
                };
                if k == kind {
                    break phi;
                }
            };
            let beta = rng.random_range(0.0..5.0);
            let params = GibbsParams::new(beta, phi.clone()).expect("valid");
            let want = reference_gamma_sq(&phi, beta);
            let l4 = xi_lambda4(&params, &settings).unwrap_or(f64::NAN);
            let spectrum_gap = match xi_matrix(&params, &settings) {
                Ok(m) => {
                    let m = Matrix4::from_fn(|r, c| m[r][c]);
                    m.symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .map(|e| (e - want).abs())
                        .fold(f64::INFINITY, f64::min)
                }
                Err(_) => f64::NAN,
            };
            let dev = (l4 - want).abs().max(spectrum_gap);
            t.record(dev, || format!("seed={seed} instance={i}: phi={phi} beta={beta}: lambda4={l4}, E[gamma^2]={want}"));
            done += 1;
        }
    }
    t.done(done)
}

/// The recursion posterior at the root against the enumerated marginal.
pub fn check_posterior(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("posterior_matches_enumeration", 1e-10);
    for i in 0..count {
        let ri = random_instance(seed, 3, i, 12);
        let inst = ri.instance();
        let n = ri.tree.vertex_count();
        let mut rng = instance_rng(seed, 3, i);
        let mut pins = Vec::new();
        for v in 1..n {
            if rng.random::<bool>() {
                pins.push((v, random_spin(&mut rng)));
            }
        }
        let boundary = pin(n, &pins);
        let got = root_posterior(&inst, &boundary).map(|p| p.p_plus).unwrap_or(f64::NAN);
        let want = gibbs(&inst, Some(&boundary)).marginal(0).p_plus;
        t.record((got - want).abs(), || format!("{ri} boundary={pins:?}: recursion {got}, enumeration {want}"));
    }
    t.done(count)
}

/// The influence inequalities and the exact TV routines, on one shared set of
/// instances. Returns the checks in a fixed order.
pub fn check_inequalities(seed: u64, count: usize) -> Vec<CheckOutcome> {
    const SLACK: f64 = 1e-12;
    let mut pairwise = Tracker::new("pairwise_influence_bound", SLACK);
    let mut leaf_bound = Tracker::new("leaf_tv_influence_bound", SLACK);
    let mut downup_sqrt = Tracker::new("leaf_tv_below_sqrt_downup_tv", SLACK);
    let mut downup_bound = Tracker::new("downup_tv_influence_bound", SLACK);
    let mut exact_tv = Tracker::new("exact_tv_matches_enumeration", 1e-10);
    let mut exact_du = Tracker::new("exact_downup_matches_enumeration", 1e-10);
    for i in 0..count {
        let ri = random_instance(seed, 4, i, 12);
        let inst = ri.instance();
        let tree = &ri.tree;
        let n = tree.vertex_count();
        let mut rng = instance_rng(seed, 4, i);

        let u = rng.random_range(0..n);
        let w = (u + rng.random_range(1..n)) % n;
        let mut pins = Vec::new();
        for v in 0..n {
            if v != u && v != w && rng.random_bool(0.3) {
                pins.push((v, random_spin(&mut rng)));
            }
        }
        let at_w = |s: SpinValue| {
            let mut all = pins.clone();
            all.push((u, s));
            gibbs(&inst, Some(&pin(n, &all))).marginal(w).p_plus
        };
        let tv_w = (at_w(SpinValue::Plus) - at_w(SpinValue::Minus)).abs();
        let bound = influences(&inst).product(&tree.path_edges(u, w).expect("in tree"));
        pairwise.record(tv_w - bound, || format!("{ri} u={u} w={w} pins={pins:?}: tv {tv_w} > bound {bound}"));

        let h = rng.random_range(1..=tree.height());
        let leaves = tree.level_set(h);
        let (tv, du) = enumerated_tvs(&inst, leaves);
        let upper = tv_upper_bound(&inst, h);
        leaf_bound.record(tv - upper, || format!("{ri} h={h}: tv {tv} > bound {upper}"));
        downup_sqrt.record(tv - du.sqrt(), || format!("{ri} h={h}: tv {tv} > sqrt(downup {du})"));
        let sum = level_gamma_sq_sum(&inst, h);
        downup_bound.record(du - sum, || format!("{ri} h={h}: downup {du} > {sum}"));
        let got_tv = tv_leaf_conditional_exact(&inst, h).unwrap_or(f64::NAN);
        exact_tv.record((got_tv - tv).abs(), || format!("{ri} h={h}: exact {got_tv}, enumeration {tv}"));
        let got_du = downup_tv_exact(&inst, h).unwrap_or(f64::NAN);
        exact_du.record((got_du - du).abs(), || format!("{ri} h={h}: exact {got_du}, enumeration {du}"));
    }
    [pairwise, leaf_bound, downup_sqrt, downup_bound, exact_tv, exact_du]
        .into_iter()
        .map(|t| t.done(count))
        .collect()
}

/// `⟨σ(w)⟩` given `σ(u) = s` equals `s ∏ Γ̂` along the path, for every pair.
pub fn check_pinned_correlation(seed: u64, count: usize, fault: Option<Fault>) -> CheckOutcome {
    let mut t = Tracker::new("pinned_mean_is_signed_path_product", 1e-10);
    for i in 0..count {
        let ri = random_instance(seed, 5, i, 12);
        let inst = ri.instance();
        let n = ri.tree.vertex_count();
        for u in 0..n {
            for s in SpinValue::BOTH {
                let table = gibbs(&inst, Some(&pin(n, &[(u, s)])));
                for w in 0..n {
                    let got = table.mean_spin(w);
                    let want = s.as_scalar::<f64>() * path_signed_product(&inst, u, w, fault);
                    t.record((got - want).abs(), || format!("{ri} u={u} s={s:?} w={w}: mean {got}, product {want}"));
                }
            }
        }
    }
    t.done(count)
}

/// `⟨σ(u)σ(v)⟩ = ∏ Γ̂` along the path, for every pair.
pub fn check_pair_correlation(seed: u64, count: usize, fault: Option<Fault>) -> CheckOutcome {
    let mut t = Tracker::new("pair_correlation_is_signed_path_product", 1e-10);
    for i in 0..count {
        let ri = random_instance(seed, 6, i, 12);
        let inst = ri.instance();
        let n = ri.tree.vertex_count();
        let table = gibbs(&inst, None);
        for u in 0..n {
            for v in 0..n {
                let got = table.correlation(u, v);
                let want = path_signed_product(&inst, u, v, fault);
                t.record((got - want).abs(), || format!("{ri} u={u} v={v}: correlation {got}, product {want}"));
            }
        }
    }
    t.done(count)
}

/// The `±1`-product Hamiltonian at `β` and the indicator one at `2β` give the
/// same law.
pub fn check_hamiltonian_equivalence(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("product_form_equals_indicator_at_2beta", 1e-12);
    for i in 0..count {
        let ri = random_instance(seed, 7, i, 10);
        let inst = ri.instance();
        let doubled = inst.with_beta(2.0 * ri.beta).expect("finite beta");
        let a = brute_force_gibbs(&inst, None, Hamiltonian::Product).expect("small");
        let b = brute_force_gibbs(&doubled, None, Hamiltonian::Indicator).expect("small");
        let dev = a
            .probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        t.record(dev, || format!("{ri}: max probability gap {dev}"));
    }
    t.done(count)
}

/// The closed-form flip-majority moments against enumeration.
pub fn check_flip_moments(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("flip_majority_moments_match_enumeration", 1e-10);
    for i in 0..count {
        let ri = random_instance(seed, 8, i, 12);
        let inst = ri.instance();
        let tree = &ri.tree;
        let n = tree.vertex_count();
        let h = instance_rng(seed, 8, i).random_range(1..=tree.height());
        let w = leaf_weights(EstimatorKind::FlipMajority, &inst, h);
        let leaves = tree.level_set(h);
        let f = |mask: usize| -> f64 {
            leaves
                .iter()
                .zip(&w)
                .map(|(&v, &wi)| if mask >> v & 1 == 1 { wi } else { -wi })
                .sum()
        };
        let plus = gibbs(&inst, Some(&pin(n, &[(0, SpinValue::Plus)]))).expectation(f);
        let minus = gibbs(&inst, Some(&pin(n, &[(0, SpinValue::Minus)]))).expectation(f);
        let second = gibbs(&inst, None).expectation(|m| f(m) * f(m));
        let gap = flip_moment_gap(&inst, h);
        let got_second = flip_second_moment(&inst, h);
        let dev = (gap - (plus - minus)).abs().max((got_second - second).abs());
        t.record(dev, || format!("{ri} h={h}: gap {gap} vs {}, second {got_second} vs {second}", plus - minus));
    }
    t.done(count)
}

/// `sup_x |h(x)|` is attained at `x = 0` and equals `Γ`.
pub fn check_gradient_sup(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("recursion_derivative_sup_is_influence", 1e-12);
    let grid: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.05).collect();
    for i in 0..count {
        let mut rng = instance_rng(seed, 9, i);
        let beta: f64 = rng.random_range(0.0..5.0);
        let j: f64 = rng.random_range(-3.0..3.0);
        let gamma = (0.5 * beta * j).tanh().abs();
        let sup = gradient_sup_check(beta, j, &grid);
        let at_zero = gradient_sup_check(beta, j, &[0.0]);
        let dev = (sup - gamma).max(0.0).max((at_zero - gamma).abs());
        t.record(dev, || format!("seed={seed} instance={i}: beta={beta} j={j}: sup {sup}, at 0 {at_zero}, gamma {gamma}"));
    }
    t.done(count)
}

/// With a constant coupling the flip majority decides like majority
/// (`J > 0`) or like parity-flipped majority (`J < 0`) on every leaf pattern.
pub fn check_estimator_reductions(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("flip_majority_constant_coupling_reduction", 0.0);
    for i in 0..count {
        let ri = random_instance(seed, 10, i, 12);
        let mut rng = instance_rng(seed, 10, i);
        let j = rng.random_range(0.1..2.5) * if i % 2 == 0 { 1.0 } else { -1.0 };
        let beta = rng.random_range(0.1..5.0);
        let couplings = Couplings::constant(&ri.tree, j).expect("tree");
        let inst = Instance::new(&ri.tree, beta, couplings).expect("matching couplings");
        let n = ri.tree.vertex_count();
        let h = rng.random_range(1..=ri.tree.height());
        let leaves = ri.tree.level_set(h);
        let reference = if j > 0.0 {
            EstimatorKind::Majority
        } else {
            EstimatorKind::ParityFlippedMajority
        };
        let mut disagreements = 0usize;
        for mask in 0..(1usize << leaves.len().min(8)) {
            let config = pin(
                n,
                &leaves
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| (v, if mask >> k & 1 == 1 { SpinValue::Plus } else { SpinValue::Minus }))
                    .collect::<Vec<_>>(),
            );
            let mut coin = rng::stream(0, 0);
            let a = evaluate_estimator(EstimatorKind::FlipMajority, &inst, h, &config).map(|v| decide(v, TieRule::Plus, &mut coin));
            let b = evaluate_estimator(reference, &inst, h, &config).map(|v| decide(v, TieRule::Plus, &mut coin));
            if a.is_err() || a != b {
                disagreements += 1;
            }
        }
        t.record(disagreements as f64, || format!("{ri} j={j} beta={beta} h={h}: {disagreements} leaf patterns disagree"));
    }
    t.done(count)
}

/// Without conditioning every single-site marginal is uniform.
pub fn check_uniform_marginals(seed: u64, count: usize) -> CheckOutcome {
    let mut t = Tracker::new("unconditioned_marginals_are_uniform", 1e-12);
    for i in 0..count {
        let ri = random_instance(seed, 11, i, 12);
        let table = gibbs(&ri.instance(), None);
        let dev = (0..ri.tree.vertex_count())
            .map(|v| (table.marginal(v).p_plus - 0.5).abs())
            .fold(0.0, f64::max);
        t.record(dev, || format!("{ri}: marginal off by {dev}"));
    }
    t.done(count)
}

/// Every check with `count` random instances each. `count = 0` runs nothing.
pub fn run_all(seed: u64, count: usize, fault: Option<Fault>) -> Vec<CheckOutcome> {
    if count == 0 {
        return Vec::new();
    }
    let mut out = vec![
        check_threshold_closed_form(seed, count),
        check_xi_spectrum(seed, count.div_ceil(5)),
        check_posterior(seed, count),
    ];
    out.extend(check_inequalities(seed, count));
    out.extend([
        check_pinned_correlation(seed, count, fault),
        check_pair_correlation(seed, count, fault),
        check_hamiltonian_equivalence(seed, count),
        check_flip_moments(seed, count),
        check_gradient_sup(seed, count),
        check_estimator_reductions(seed, count),
        check_uniform_marginals(seed, count),
    ]);
    out
}

/// Prints one line per check and returns whether all passed.
pub fn report<W: Write>(outcomes: &[CheckOutcome], mut out: W) -> io::Result<bool> {
    for o in outcomes {
        writeln!(out, "{o}")?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if !outcomes.is_empty() {
        if failed == 0 {
            writeln!(out, "all {} checks passed", outcomes.len())?;
        } else {
            writeln!(out, "{failed} of {} checks failed", outcomes.len())?;
        }
    }
    Ok(failed == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let outcomes = run_all(1, 25, None);
        assert!(outcomes.len() >= 15);
        for o in &outcomes {
            assert!(o.passed(), "{o}");
        }
    }

    #[test]
    fn negated_signs_break_the_pinned_correlation_check() {
        let o = check_pinned_correlation(1, 25, Some(Fault::NegatedSignedInfluence));
        assert!(!o.passed());
        assert!(o.failure.as_ref().unwrap().contains("seed=1"));
    }

    #[test]
    fn zero_size_is_empty() {
        assert!(run_all(1, 0, None).is_empty());
        let mut buf = Vec::new();
        assert!(report(&[], &mut buf).unwrap());
        assert!(buf.is_empty());
    }

    #[test]
    fn reference_gamma_sq_matches_known_values() {
        assert!((reference_gamma_sq(&CouplingDistribution::Rademacher, 3f64.ln()) - 0.25).abs() < 1e-15);
        assert_eq!(reference_gamma_sq(&CouplingDistribution::StandardGaussian, 0.0), 0.0);
        // small β: E[tanh²(βJ/2)] ≈ β²/4
        let small = reference_gamma_sq(&CouplingDistribution::StandardGaussian, 1e-3);
        assert!((small / 2.5e-7 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn random_instances_replay() {
        let a = random_instance(4, 2, 17, 12);
        let b = random_instance(4, 2, 17, 12);
        assert_eq!(a.to_string(), b.to_string());
        assert!(a.tree.vertex_count() <= 12);
    }
}

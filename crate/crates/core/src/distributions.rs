//! Coupling and offspring distributions, and the threshold quantities derived
//! from them: `E[Γ²]`, `Δ_KS`, the `λ₄` eigenvalue of `Ξ = E[M⊗M]`, and the
//! critical inverse temperature for a given degree.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::GibbsParams;
use crate::quadrature::{GaussHermite, DEFAULT_NODES, MAX_NODES, MIN_NODES};
use crate::rng;
use crate::scalar::Scalar;

const PROB_TOL: f64 = 1e-12;

fn validate_table<T: Copy>(values: &[T], probs: &[f64]) -> Result<()> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::domain(format!(
            "table needs matching non-empty values/probabilities ({} vs {})",
            values.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::domain("probabilities must be finite and non-negative"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding can leave acc just below 1
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// The distribution `φ` of a single edge coupling `J`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingDistribution {
    /// `N(0,1)`: the Edwards-Anderson model.
    StandardGaussian,
    /// `±1` with probability one half each.
    Rademacher,
    PointMass(f64),
    /// `plus` with probability `p_plus`, otherwise `minus`.
    TwoPoint { minus: f64, plus: f64, p_plus: f64 },
    FiniteTable { values: Vec<f64>, probs: Vec<f64> },
}

impl CouplingDistribution {
    pub fn point_mass(j: f64) -> Result<Self> {
        if !j.is_finite() {
            return Err(Error::domain(format!("point mass must be finite, got {j}")));
        }
        Ok(Self::PointMass(j))
    }

    pub fn two_point(minus: f64, plus: f64, p_plus: f64) -> Result<Self> {
        if !minus.is_finite() || !plus.is_finite() {
            return Err(Error::domain("two-point values must be finite"));
        }
        validate_table(&[minus, plus], &[1.0 - p_plus, p_plus])?;
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::domain(format!("p must lie in [0,1], got {p_plus}")));
        }
        Ok(Self::TwoPoint { minus, plus, p_plus })
    }

    pub fn finite_table(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        validate_table(&values, &probs)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("table values must be finite"));
        }
        Ok(Self::FiniteTable { values, probs })
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Self::StandardGaussian)
    }

    /// The `(value, probability)` atoms of a discrete distribution.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::StandardGaussian => None,
            Self::Rademacher => Some(vec![(1.0, 0.5), (-1.0, 0.5)]),
            Self::PointMass(j) => Some(vec![(*j, 1.0)]),
            Self::TwoPoint { minus, plus, p_plus } => {
                Some(vec![(*minus, 1.0 - p_plus), (*plus, *p_plus)])
            }
            Self::FiniteTable { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
        }
    }

    /// One i.i.d. draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::StandardGaussian => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::PointMass(j) => *j,
            Self::TwoPoint { minus, plus, p_plus } => {
                if rng.random::<f64>() < *p_plus {
                    *plus
                } else {
                    *minus
                }
            }
            Self::FiniteTable { values, probs } => values[sample_index(probs, rng)],
        }
    }
}

impl fmt::Display for CouplingDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StandardGaussian => write!(f, "gaussian"),
            Self::Rademacher => write!(f, "rademacher"),
            Self::PointMass(j) => write!(f, "point:{j}"),
            Self::TwoPoint { minus, plus, p_plus } => write!(f, "two-point:{minus},{plus},{p_plus}"),
            Self::FiniteTable { values, probs } => {
                write!(f, "table:")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Draws one coupling from `phi`.
pub fn sample_coupling<R: Rng + ?Sized>(phi: &CouplingDistribution, rng: &mut R) -> f64 {
    phi.sample(rng)
}

/// The offspring distribution `ζ` of a Galton-Watson tree.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringDistribution {
    Fixed(usize),
    Poisson(f64),
    FiniteTable { values: Vec<usize>, probs: Vec<f64> },
}

impl OffspringDistribution {
    pub fn fixed(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("fixed offspring count must be positive"));
        }
        Ok(Self::Fixed(k))
    }

    pub fn poisson(d: f64) -> Result<Self> {
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::domain(format!("poisson mean must be positive, got {d}")));
        }
        Ok(Self::Poisson(d))
    }

    pub fn finite_table(values: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        validate_table(&values, &probs)?;
        let table = Self::FiniteTable { values, probs };
        if table.mean() <= 0.0 {
            return Err(Error::domain("offspring mean must be positive"));
        }
        Ok(table)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed(k) => *k as f64,
            Self::Poisson(d) => *d,
            Self::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(&v, &p)| v as f64 * p)
                .sum(),
        }
    }

    /// `E[ζ²]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Fixed(k) => (*k as f64).powi(2),
            Self::Poisson(d) => d + d * d,
            Self::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(&v, &p)| (v as f64).powi(2) * p)
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Self::Fixed(k) => *k,
            Self::Poisson(d) => {
                let poisson = Poisson::new(*d).expect("validated poisson mean");
                let k: f64 = poisson.sample(rng);
                k as usize
            }
            Self::FiniteTable { values, probs } => values[sample_index(probs, rng)],
        }
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(k) => write!(f, "fixed:{k}"),
            Self::Poisson(d) => write!(f, "poisson:{d}"),
            Self::FiniteTable { values, probs } => {
                write!(f, "table:")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Draws one offspring count from `zeta`.
pub fn sample_offspring<R: Rng + ?Sized>(zeta: &OffspringDistribution, rng: &mut R) -> usize {
    zeta.sample(rng)
}

/// The squared edge influence `Γ² = tanh²(βJ/2)` for `βJ = beta_j`.
#[inline]
pub fn gamma_sq<S: Scalar>(beta_j: S) -> S {
    let t = (beta_j / S::lit(2.0)).tanh();
    t * t
}

/// How `E[Γ²]` was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsMethod {
    /// Exact finite sum over the atoms of a discrete `φ`.
    ClosedForm,
    /// Gauss-Hermite quadrature for the Gaussian `φ`.
    Quadrature,
    /// Sample mean over i.i.d. draws.
    MonteCarlo,
}

impl KsMethod {
    /// Exact sum for discrete `φ`, quadrature for the Gaussian.
    pub fn default_for(phi: &CouplingDistribution) -> Self {
        if phi.is_discrete() {
            KsMethod::ClosedForm
        } else {
            KsMethod::Quadrature
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KsMethod::ClosedForm => "closed_form",
            KsMethod::Quadrature => "quadrature",
            KsMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsSettings {
    pub quadrature_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for KsSettings {
    fn default() -> Self {
        Self {
            quadrature_nodes: DEFAULT_NODES,
            mc_samples: 1_000_000,
            seed: 0,
        }
    }
}

/// `E[Γ²]` and the threshold `Δ_KS = 1/E[Γ²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    /// `+∞` when `E[Γ²] = 0`.
    pub delta_ks: f64,
    pub expected_gamma_sq: f64,
    pub method: KsMethod,
    /// Node count of the rule (0 unless `method` is quadrature).
    pub quadrature_nodes: usize,
    /// Quadrature: gap to the half-size rule. Monte Carlo: standard error.
    pub estimated_error: f64,
}

impl KsReport {
    fn new(expected_gamma_sq: f64, method: KsMethod, quadrature_nodes: usize, estimated_error: f64) -> Self {
        Self {
            delta_ks: delta_from_gamma_sq(expected_gamma_sq),
            expected_gamma_sq,
            method,
            quadrature_nodes,
            estimated_error,
        }
    }
}

fn delta_from_gamma_sq(g: f64) -> f64 {
    if g > 0.0 {
        1.0 / g
    } else {
        f64::INFINITY
    }
}

/// Relative change between successive doublings below which the quadrature
/// refinement stops.
pub const QUADRATURE_RTOL: f64 = 1e-13;

/// A deterministic average with the rule size that produced it and the size
/// of the last refinement step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Mean {
    value: f64,
    nodes: usize,
    change: f64,
}

/// Averages `f(J)` under `φ`, exactly for discrete kinds. For the Gaussian the
/// rule starts at `nodes` and doubles until two successive rules agree to
/// `QUADRATURE_RTOL` or the rule reaches `MAX_NODES`.
fn deterministic_mean(phi: &CouplingDistribution, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Mean> {
    match phi.atoms() {
        Some(atoms) => Ok(Mean {
            value: atoms.iter().map(|&(j, p)| p * f(j)).sum(),
            nodes: 0,
            change: 0.0,
        }),
        None => {
            if nodes < MIN_NODES {
                return Err(Error::Config(format!(
                    "quadrature needs at least {MIN_NODES} nodes, got {nodes}"
                )));
            }
            let mut coarse = GaussHermite::cached((nodes / 2).max(MIN_NODES / 2))?.gaussian_expectation(&f);
            let mut n = nodes;
            loop {
                let value = GaussHermite::cached(n)?.gaussian_expectation(&f);
                let change = (value - coarse).abs();
                if change <= QUADRATURE_RTOL * value.abs() || n >= MAX_NODES.max(nodes) {
                    return Ok(Mean { value, nodes: n, change });
                }
                coarse = value;
                n *= 2;
            }
        }
    }
}

/// Computes `E[tanh²(βJ/2)]` with the requested method.
pub fn expected_gamma_sq(params: &GibbsParams, method: KsMethod, settings: &KsSettings) -> Result<KsReport> {
    let beta = params.beta();
    if !beta.is_finite() {
        return Err(Error::domain(format!("beta must be finite, got {beta}")));
    }
    let phi = params.phi();
    let integrand = |j: f64| gamma_sq(beta * j);
    match method {
        KsMethod::ClosedForm => {
            if !phi.is_discrete() {
                return Err(Error::Config("closed form needs a discrete coupling distribution".into()));
            }
            let g = deterministic_mean(phi, 0, integrand)?;
            Ok(KsReport::new(g.value, method, 0, 0.0))
        }
        KsMethod::Quadrature => {
            if phi.is_discrete() {
                return Err(Error::Config("quadrature applies to the gaussian coupling distribution".into()));
            }
            let g = deterministic_mean(phi, settings.quadrature_nodes, integrand)?;
            Ok(KsReport::new(g.value, method, g.nodes, g.change))
        }
        KsMethod::MonteCarlo => {
            let samples = settings.mc_samples;
            if samples == 0 {
                return Err(Error::Config("monte carlo needs at least one sample".into()));
            }
            let mut rng = rng::stream(settings.seed, 0);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for k in 0..samples {
                let x = integrand(phi.sample(&mut rng));
                let d = x - mean;
                mean += d / (k + 1) as f64;
                m2 += d * (x - mean);
            }
            let stderr = if samples > 1 {
                (m2 / (samples - 1) as f64 / samples as f64).sqrt()
            } else {
                f64::INFINITY
            };
            Ok(KsReport::new(mean, method, 0, stderr))
        }
    }
}

/// `Δ_KS(β,φ)` with the default method for `φ`.
pub fn delta_ks(params: &GibbsParams) -> Result<KsReport> {
    expected_gamma_sq(params, KsMethod::default_for(params.phi()), &KsSettings::default())
}

/// The entries `(a, b, c)` of `Ξ = E[M⊗M]`: `a = E[p²]`, `b = E[p(1-p)]`,
/// `c = E[(1-p)²]` where `p = e^{βJ}/(1+e^{βJ})`.
pub fn xi_entries(params: &GibbsParams, settings: &KsSettings) -> Result<(f64, f64, f64)> {
    let beta = params.beta();
    let stay = |j: f64| f64::logistic((beta * j).clamp(-745.0, 745.0));
    let n = settings.quadrature_nodes;
    let a = deterministic_mean(params.phi(), n, |j| stay(j).powi(2))?;
    let b = deterministic_mean(params.phi(), n, |j| {
        let p = stay(j);
        p * (1.0 - p)
    })?;
    let c = deterministic_mean(params.phi(), n, |j| (1.0 - stay(j)).powi(2))?;
    Ok((a.value, b.value, c.value))
}

/// The 4×4 matrix `Ξ = E[M⊗M]` in the basis `(++, +-, -+, --)`.
pub fn xi_matrix(params: &GibbsParams, settings: &KsSettings) -> Result<[[f64; 4]; 4]> {
    let (a, b, c) = xi_entries(params, settings)?;
    Ok([[a, b, b, c], [b, a, c, b], [b, c, a, b], [c, b, b, a]])
}

/// `λ₄(Ξ) = a − 2b + c`, the eigenvalue of `Ξ` on the antisymmetric direction
/// `(1,−1)⊗(1,−1)`.
pub fn xi_lambda4(params: &GibbsParams, settings: &KsSettings) -> Result<f64> {
    if settings.quadrature_nodes < MIN_NODES && !params.phi().is_discrete() {
        return Err(Error::Config(format!(
            "quadrature needs at least {MIN_NODES} nodes, got {}",
            settings.quadrature_nodes
        )));
    }
    let (a, b, c) = xi_entries(params, settings)?;
    Ok(a - 2.0 * b + c)
}

/// The classic Kesten-Stigum degree `λ₂⁻²`; `+∞` when `λ₂ = 0`.
pub fn classic_ks_degree(transition_lambda2: f64) -> Result<f64> {
    let l = transition_lambda2.abs();
    if !(l <= 1.0) {
        return Err(Error::domain(format!("|lambda2| must be at most 1, got {transition_lambda2}")));
    }
    if l == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (l * l))
}

/// Inverse temperature at which `Δ_KS(β,φ) = degree`, by bisection on
/// `β ↦ E[Γ²](β) − 1/degree` over `bracket`.
///
/// Stops once `|Δ_KS(β) − degree| ≤ tol` at the midpoint.
pub fn critical_beta(phi: &CouplingDistribution, degree: f64, bracket: (f64, f64), tol: f64) -> Result<f64> {
    if !(degree > 1.0) {
        return Err(Error::domain(format!("degree must exceed 1, got {degree}")));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let settings = KsSettings::default();
    let method = KsMethod::default_for(phi);
    let g = |beta: f64| -> Result<f64> {
        let params = GibbsParams::new(beta, phi.clone())?;
        Ok(expected_gamma_sq(&params, method, &settings)?.expected_gamma_sq)
    };
    let target = 1.0 / degree;
    let f_lo = g(lo)? - target;
    let f_hi = g(hi)? - target;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracketing { lo, hi, f_lo, f_hi });
    }
    let increasing = f_hi > 0.0;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if (delta_from_gamma_sq(gm) - degree).abs() <= tol {
            return Ok(mid);
        }
        if (gm - target > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(beta: f64, phi: CouplingDistribution) -> GibbsParams {
        GibbsParams::new(beta, phi).unwrap()
    }

    fn settings() -> KsSettings {
        KsSettings::default()
    }

    #[test]
    fn rademacher_at_ln3_has_threshold_four() {
        let p = params(3f64.ln(), CouplingDistribution::Rademacher);
        let r = expected_gamma_sq(&p, KsMethod::ClosedForm, &settings()).unwrap();
        assert_abs_diff_eq!(r.expected_gamma_sq, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.delta_ks, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(xi_lambda4(&p, &settings()).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_temperature_gives_infinite_threshold() {
        for phi in [
            CouplingDistribution::Rademacher,
            CouplingDistribution::StandardGaussian,
            CouplingDistribution::PointMass(3.0),
        ] {
            let p = params(0.0, phi);
            let r = delta_ks(&p).unwrap();
            assert_eq!(r.expected_gamma_sq, 0.0);
            assert_eq!(r.delta_ks, f64::INFINITY);
            assert_abs_diff_eq!(xi_lambda4(&p, &settings()).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    fn simpson_gamma_sq(beta: f64) -> f64 {
        let (lo, hi, m) = (-14.0f64, 14.0f64, 400_000usize);
        let h = (hi - lo) / m as f64;
        let f = |j: f64| (0.5 * beta * j).tanh().powi(2) * (-0.5 * j * j).exp();
        let mut acc = f(lo) + f(hi);
        for k in 1..m {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
        }
        acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn quadrature_refines_for_sharp_integrands() {
        for beta in [0.3, 4.9, 12.0, 20.0] {
            let p = params(beta, CouplingDistribution::StandardGaussian);
            let q = expected_gamma_sq(&p, KsMethod::Quadrature, &settings()).unwrap();
            let want = simpson_gamma_sq(beta);
            assert!((q.expected_gamma_sq - want).abs() < 1e-12, "beta {beta}: {} vs {want}", q.expected_gamma_sq);
            // the doubling estimate is conservative: it compares against the coarser rule
            assert!(q.estimated_error >= (q.expected_gamma_sq - want).abs() || q.estimated_error < 1e-13);
            if beta <= 12.0 {
                assert!(q.estimated_error < 1e-12, "beta {beta}: {q:?}");
            }
            let l4 = xi_lambda4(&p, &settings()).unwrap();
            assert!((l4 - want).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_matches_monte_carlo_for_gaussian() {
        let p = params(1.0, CouplingDistribution::StandardGaussian);
        let q = expected_gamma_sq(&p, KsMethod::Quadrature, &settings()).unwrap();
        let mc = expected_gamma_sq(
            &p,
            KsMethod::MonteCarlo,
            &KsSettings { mc_samples: 10_000_000, seed: 11, ..settings() },
        )
        .unwrap();
        assert!((q.expected_gamma_sq - mc.expected_gamma_sq).abs() <= 4.0 * mc.estimated_error);
        assert!(q.estimated_error < 1e-12);
        assert!(q.quadrature_nodes >= 200);
    }

    #[test]
    fn gaussian_lambda4_equals_expected_gamma_sq() {
        let p = params(1.0, CouplingDistribution::StandardGaussian);
        let q = expected_gamma_sq(&p, KsMethod::Quadrature, &settings()).unwrap();
        assert_abs_diff_eq!(xi_lambda4(&p, &settings()).unwrap(), q.expected_gamma_sq, epsilon = 1e-10);
    }

    #[test]
    fn few_quadrature_nodes_is_a_config_error() {
        let p = params(1.0, CouplingDistribution::StandardGaussian);
        let s = KsSettings { quadrature_nodes: 7, ..settings() };
        assert!(matches!(expected_gamma_sq(&p, KsMethod::Quadrature, &s), Err(Error::Config(_))));
        assert!(matches!(xi_lambda4(&p, &s), Err(Error::Config(_))));
    }

    #[test]
    fn method_must_fit_the_distribution() {
        let g = params(1.0, CouplingDistribution::StandardGaussian);
        assert!(expected_gamma_sq(&g, KsMethod::ClosedForm, &settings()).is_err());
        let r = params(1.0, CouplingDistribution::Rademacher);
        assert!(expected_gamma_sq(&r, KsMethod::Quadrature, &settings()).is_err());
    }

    #[test]
    fn classic_degree() {
        assert_abs_diff_eq!(classic_ks_degree(0.5).unwrap(), 4.0);
        assert_abs_diff_eq!(classic_ks_degree(1.0).unwrap(), 1.0);
        assert_eq!(classic_ks_degree(0.0).unwrap(), f64::INFINITY);
        assert!(classic_ks_degree(1.5).is_err());
        assert!(classic_ks_degree(f64::NAN).is_err());
    }

    /// Second eigenvalue of the symmetric 2×2 matrix `[[p, 1-p], [1-p, p]]` from
    /// the trace/determinant formula.
    fn lambda2_of_deterministic_matrix(beta_j: f64) -> f64 {
        let e = beta_j.exp();
        let (d, o) = (e / (1.0 + e), 1.0 / (1.0 + e));
        let tr = 2.0 * d;
        let det = d * d - o * o;
        let disc = (tr * tr / 4.0 - det).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        // l1 or l2 equals 1 (stochastic); the other one is the second eigenvalue
        if (l1 - 1.0).abs() < (l2 - 1.0).abs() { l2 } else { l1 }
    }

    #[test]
    fn point_mass_reduces_to_classic_bound() {
        let beta = 3f64.ln();
        let l2 = lambda2_of_deterministic_matrix(beta);
        assert_abs_diff_eq!(l2, (beta / 2.0).tanh(), epsilon = 1e-14);
        let classic = classic_ks_degree(l2).unwrap();
        let ks = delta_ks(&params(beta, CouplingDistribution::PointMass(1.0))).unwrap();
        assert_abs_diff_eq!(classic, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ks.delta_ks, classic, epsilon = 1e-12);
    }

    #[test]
    fn critical_beta_inverts_the_threshold() {
        let b = critical_beta(&CouplingDistribution::Rademacher, 4.0, (0.0, 10.0), 1e-12).unwrap();
        assert_abs_diff_eq!(b, 3f64.ln(), epsilon = 1e-10);

        let b = critical_beta(&CouplingDistribution::StandardGaussian, 4.0, (0.01, 20.0), 1e-9).unwrap();
        let r = delta_ks(&params(b, CouplingDistribution::StandardGaussian)).unwrap();
        assert!((r.delta_ks - 4.0).abs() <= 1e-6);

        let b = critical_beta(&CouplingDistribution::Rademacher, 1e12, (0.0, 10.0), 1e-3).unwrap();
        assert!(b < 1e-5, "beta* = {b}");
    }

    #[test]
    fn critical_beta_rejects_bad_brackets() {
        let err = critical_beta(&CouplingDistribution::Rademacher, 4.0, (2.0, 10.0), 1e-9);
        assert!(matches!(err, Err(Error::Bracketing { .. })));
        assert!(critical_beta(&CouplingDistribution::Rademacher, 0.5, (0.0, 1.0), 1e-9).is_err());
    }

    #[test]
    fn integrand_identity_holds_pointwise() {
        let mut rng = rng::stream(5, 0);
        for _ in 0..20 {
            let x: f64 = rng.random_range(-30.0..30.0);
            let e = x.exp();
            let direct = ((1.0 - e) / (1.0 + e)).powi(2);
            assert_abs_diff_eq!(gamma_sq(x), direct, epsilon = 1e-14);
        }
        assert_eq!(gamma_sq(1e6f64), 1.0);
    }

    #[test]
    fn coupling_samplers_match_their_moments() {
        let mut rng = rng::stream(3, 1);
        assert_eq!(sample_coupling(&CouplingDistribution::PointMass(2.5), &mut rng), 2.5);

        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sample_coupling(&CouplingDistribution::Rademacher, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());

        let xs: Vec<f64> = (0..n)
            .map(|_| sample_coupling(&CouplingDistribution::StandardGaussian, &mut rng))
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.01);
    }

    #[test]
    fn offspring_samplers_match_their_moments() {
        let mut rng = rng::stream(4, 2);
        let fixed = OffspringDistribution::fixed(3).unwrap();
        assert!((0..100).all(|_| sample_offspring(&fixed, &mut rng) == 3));

        let n = 1_000_000;
        let pois = OffspringDistribution::poisson(2.0).unwrap();
        let mean = (0..n).map(|_| sample_offspring(&pois, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * 2f64.sqrt() / 1e3);

        let table = OffspringDistribution::finite_table(vec![0, 4], vec![0.5, 0.5]).unwrap();
        let fours = (0..n).filter(|_| sample_offspring(&table, &mut rng) == 4).count();
        assert!((fours as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn offspring_moments() {
        let p = OffspringDistribution::poisson(3.0).unwrap();
        assert_abs_diff_eq!(p.second_moment() / 9.0, 1.0 + 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(OffspringDistribution::Fixed(4).second_moment(), 16.0);
        assert!(OffspringDistribution::finite_table(vec![0], vec![1.0]).is_err());
        assert!(OffspringDistribution::poisson(0.0).is_err());
    }

    #[test]
    fn tables_must_be_normalised() {
        assert!(CouplingDistribution::finite_table(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(CouplingDistribution::finite_table(vec![1.0], vec![-1.0]).is_err());
        assert!(CouplingDistribution::two_point(-1.0, 1.0, 1.5).is_err());
        assert!(CouplingDistribution::finite_table(vec![1.0, 2.0], vec![0.25, 0.75]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_phi() -> impl Strategy<Value = CouplingDistribution> {
            prop_oneof![
                Just(CouplingDistribution::Rademacher),
                Just(CouplingDistribution::StandardGaussian),
                (-3.0f64..3.0).prop_map(CouplingDistribution::PointMass),
                (-3.0f64..0.0, 0.0f64..3.0, 0.0f64..1.0)
                    .prop_map(|(a, b, p)| CouplingDistribution::two_point(a, b, p).unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn lambda4_identity(beta in 0.0f64..8.0, phi in arb_phi()) {
                let p = params(beta, phi);
                let g = delta_ks(&p).unwrap().expected_gamma_sq;
                let l4 = xi_lambda4(&p, &settings()).unwrap();
                prop_assert!((g - l4).abs() <= 1e-10);
                prop_assert!((0.0..=1.0).contains(&g));
            }

            #[test]
            fn monotone_in_beta(b1 in 0.0f64..10.0, db in 0.0f64..5.0, j0 in 0.01f64..3.0) {
                for phi in [CouplingDistribution::Rademacher, CouplingDistribution::PointMass(j0)] {
                    let g1 = delta_ks(&params(b1, phi.clone())).unwrap().expected_gamma_sq;
                    let g2 = delta_ks(&params(b1 + db, phi)).unwrap().expected_gamma_sq;
                    prop_assert!(g2 >= g1);
                }
            }
        }
    }
}

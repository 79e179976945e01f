//! Gauss-Hermite quadrature for expectations over a standard Gaussian.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Fewest nodes accepted for threshold computations.
pub const MIN_NODES: usize = 8;
pub const DEFAULT_NODES: usize = 200;
/// Largest rule the adaptive refinement will build.
pub const MAX_NODES: usize = 12_800;

/// Nodes and weights of the `n`-point rule for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the rule by locating the sign changes of the orthonormal
    /// Hermite polynomial on a grid finer than the smallest root gap, then
    /// polishing each bracket with safeguarded Newton steps.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("quadrature needs at least one node".into()));
        }
        let nf = n as f64;
        let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
        // Sturm comparison: consecutive roots are at least π/√(2n+1) apart
        let step = PI / (2.0 * nf + 1.0).sqrt() / 4.0;
        let rec = Recurrence::new(n);
        let mut brackets = Vec::with_capacity(n / 2);
        let mut prev: Option<(f64, f64)> = None;
        let mut k = 0usize;
        'scan: while brackets.len() < n / 2 {
            let z: [f64; LANES] = std::array::from_fn(|l| step * (0.5 + (k + l) as f64));
            if z[0] > upper {
                break;
            }
            let p = rec.eval_lanes(z);
            for l in 0..LANES {
                let sign = p[l].value.signum();
                if let Some((lo, sign_lo)) = prev {
                    if sign != sign_lo {
                        brackets.push((lo, z[l], sign_lo));
                        if brackets.len() == n / 2 {
                            break 'scan;
                        }
                    }
                }
                prev = Some((z[l], sign));
            }
            k += LANES;
        }
        if brackets.len() != n / 2 {
            return Err(Error::Config(format!(
                "found {} of {} positive quadrature nodes",
                brackets.len(),
                n / 2
            )));
        }
        let mut positive = Vec::with_capacity(n / 2);
        for chunk in brackets.chunks(LANES) {
            positive.extend_from_slice(&polish(&rec, chunk)[..chunk.len()]);
        }
        positive.reverse();
        let mut nodes: Vec<f64> = positive.clone();
        if n % 2 == 1 {
            nodes.push(0.0);
        }
        nodes.extend(positive.iter().rev().map(|x| -x));
        let mut weights = Vec::with_capacity(n);
        for chunk in nodes.chunks(LANES) {
            weights.extend_from_slice(&weight(&rec, chunk)[..chunk.len()]);
        }
        Ok(Self { nodes, weights })
    }

    /// A shared, lazily computed rule with `n` nodes.
    pub fn cached(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::new(n)?);
        cache
            .lock()
            .expect("quadrature cache poisoned")
            .insert(n, rule.clone());
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ e^{-x²} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(J)]` for `J ~ N(0,1)`, via the substitution `J = √2·x`.
    pub fn gaussian_expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let s = std::f64::consts::SQRT_2;
        self.integrate(|x| f(s * x)) / PI.sqrt()
    }

    /// Standard-Gaussian atoms `(J, probability)` of the rule.
    pub fn gaussian_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let s = std::f64::consts::SQRT_2;
        let norm = PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (s * x, w / norm))
    }
}

const RESCALE: f64 = 1e100;

/// Points evaluated together; the recurrence is latency bound, so
/// interleaving independent points keeps the pipeline full.
const LANES: usize = 8;

/// `p_n(z)` and `p_{n−1}(z)` of the orthonormal Hermite polynomials, both
/// divided by `RESCALE^scale` to stay in range.
#[derive(Clone, Copy, Default)]
struct HermitePair {
    value: f64,
    previous: f64,
    scale: i32,
}

/// Coefficients of `p_j = z·√(2/j)·p_{j−1} − √((j−1)/j)·p_{j−2}`.
struct Recurrence(Vec<(f64, f64)>);

impl Recurrence {
    fn new(n: usize) -> Self {
        Self(
            (1..=n)
                .map(|j| {
                    let jf = j as f64;
                    ((2.0 / jf).sqrt(), ((jf - 1.0) / jf).sqrt())
                })
                .collect(),
        )
    }

    fn degree(&self) -> usize {
        self.0.len()
    }

    fn eval_lanes(&self, z: [f64; LANES]) -> [HermitePair; LANES] {
        let mut p1 = [PI.powf(-0.25); LANES];
        let mut p2 = [0.0; LANES];
        let mut scale = [0i32; LANES];
        for &(up, down) in &self.0 {
            for l in 0..LANES {
                let p3 = p2[l];
                p2[l] = p1[l];
                p1[l] = z[l] * up * p2[l] - down * p3;
                let big = p1[l].abs() > RESCALE;
                let f = if big { 1.0 / RESCALE } else { 1.0 };
                p1[l] *= f;
                p2[l] *= f;
                scale[l] += i32::from(big);
            }
        }
        std::array::from_fn(|l| HermitePair { value: p1[l], previous: p2[l], scale: scale[l] })
    }
}

/// Pads a short chunk by repeating its last entry.
fn padded<T: Copy>(chunk: &[T]) -> [T; LANES] {
    std::array::from_fn(|l| chunk[l.min(chunk.len() - 1)])
}

/// Newton on `p_n` with `p_n' = √(2n)·p_{n−1}`, one bracket per lane, falling
/// back to bisection whenever a step leaves its bracket.
fn polish(rec: &Recurrence, chunk: &[(f64, f64, f64)]) -> [f64; LANES] {
    let slope = (2.0 * rec.degree() as f64).sqrt();
    let mut br = padded(chunk);
    let tol: [f64; LANES] = std::array::from_fn(|l| 1e-9 * (br[l].1 - br[l].0));
    let mut x: [f64; LANES] = std::array::from_fn(|l| 0.5 * (br[l].0 + br[l].1));
    let mut done = [false; LANES];
    for _ in 0..200 {
        if done.iter().all(|&d| d) {
            break;
        }
        let p = rec.eval_lanes(x);
        for l in 0..LANES {
            if done[l] {
                continue;
            }
            let (lo, hi, sign_lo) = &mut br[l];
            if p[l].value == 0.0 {
                done[l] = true;
                continue;
            }
            if p[l].value.signum() == *sign_lo {
                *lo = x[l];
            } else {
                *hi = x[l];
            }
            let newton = x[l] - p[l].value / (slope * p[l].previous);
            // the iterate itself is a bracket end, so the ends count as inside
            let next = if newton >= *lo && newton <= *hi { newton } else { 0.5 * (*lo + *hi) };
            done[l] = (next - x[l]).abs() <= tol[l];
            x[l] = next;
        }
    }
    x
}

/// `2 / (2n p_{n−1}(x)²)` at each lane.
fn weight(rec: &Recurrence, chunk: &[f64]) -> [f64; LANES] {
    let n = rec.degree() as f64;
    let p = rec.eval_lanes(padded(chunk));
    std::array::from_fn(|l| {
        let h = p[l];
        let log_w = 2f64.ln() - (2.0 * n).ln() - 2.0 * h.previous.abs().ln() - 2.0 * h.scale as f64 * RESCALE.ln();
        log_w.exp()
    })
}

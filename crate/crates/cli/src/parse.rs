//! Text forms of distributions and grids.

use glassy_core::distributions::{CouplingDistribution, OffspringDistribution};

use crate::error::{CliError, CliResult};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn real(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("{what}: `{s}` is not a number")))
}

fn count(s: &str, what: &str) -> CliResult<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| usage(format!("{what}: `{s}` is not a non-negative integer")))
}

/// `value:prob` pairs separated by commas.
fn table<T>(body: &str, what: &str, value: impl Fn(&str) -> CliResult<T>) -> CliResult<(Vec<T>, Vec<f64>)> {
    let mut values = Vec::new();
    let mut probs = Vec::new();
    for item in body.split(',') {
        let (v, p) = item
            .split_once(':')
            .ok_or_else(|| usage(format!("{what}: table entry `{item}` is not value:prob")))?;
        values.push(value(v)?);
        probs.push(real(p, what)?);
    }
    Ok((values, probs))
}

/// `gaussian`, `rademacher`, `point:J`, `two-point:J1,J2,p` or `table:j:p,...`.
///
/// In `two-point`, `p` is the probability of `J2`.
pub fn parse_phi(s: &str) -> CliResult<CouplingDistribution> {
    let s = s.trim();
    let (head, body) = s.split_once(':').unwrap_or((s, ""));
    let phi = match head {
        "gaussian" | "ea" => CouplingDistribution::StandardGaussian,
        "rademacher" => CouplingDistribution::Rademacher,
        "point" => CouplingDistribution::point_mass(real(body, "phi")?)?,
        "two-point" => {
            let parts: Vec<&str> = body.split(',').collect();
            let [a, b, p] = parts[..] else {
                return Err(usage("phi: two-point expects J1,J2,p"));
            };
            CouplingDistribution::two_point(real(a, "phi")?, real(b, "phi")?, real(p, "phi")?)?
        }
        "table" => {
            let (values, probs) = table(body, "phi", |v| real(v, "phi"))?;
            CouplingDistribution::finite_table(values, probs)?
        }
        _ => return Err(usage(format!("unknown coupling distribution `{s}`"))),
    };
    Ok(phi)
}

/// How the offspring law of a Galton-Watson cell is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringFamily {
    /// `Fixed(d)` with `d` taken from the degree grid.
    Fixed,
    /// `Poisson(d)` with `d` taken from the degree grid.
    Poisson,
    /// A fully specified law; the degree column reports its mean.
    Exact(OffspringDistribution),
}

impl OffspringFamily {
    pub fn with_degree(&self, d: f64) -> CliResult<OffspringDistribution> {
        match self {
            Self::Fixed => Ok(OffspringDistribution::fixed(integral(d, "degree")?)?),
            Self::Poisson => Ok(OffspringDistribution::poisson(d)?),
            Self::Exact(z) => Ok(z.clone()),
        }
    }
}

/// `fixed`, `poisson`, `fixed:k`, `poisson:d` or `table:k:p,...`.
pub fn parse_offspring(s: &str) -> CliResult<OffspringFamily> {
    let s = s.trim();
    Ok(match s.split_once(':') {
        None if s == "fixed" => OffspringFamily::Fixed,
        None if s == "poisson" => OffspringFamily::Poisson,
        Some(("fixed", k)) => OffspringFamily::Exact(OffspringDistribution::fixed(count(k, "offspring")?)?),
        Some(("poisson", d)) => OffspringFamily::Exact(OffspringDistribution::poisson(real(d, "offspring")?)?),
        Some(("table", body)) => {
            let (values, probs) = table(body, "offspring", |v| count(v, "offspring"))?;
            OffspringFamily::Exact(OffspringDistribution::finite_table(values, probs)?)
        }
        _ => return Err(usage(format!("unknown offspring distribution `{s}`"))),
    })
}

pub fn integral(x: f64, what: &str) -> CliResult<usize> {
    if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(usage(format!("{what} must be a non-negative integer, got {x}")))
    }
}

/// A comma list, or `start:stop:step` with `stop` included when hit.
pub fn parse_real_grid(s: &str, what: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    let grid = if let [a, b, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b, step) = (real(a, what)?, real(b, what)?, real(step, what)?);
        if !(step > 0.0) || b < a {
            return Err(usage(format!("{what}: range `{s}` needs start <= stop and a positive step")));
        }
        let n = ((b - a) / step * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',').map(|x| real(x, what)).collect::<CliResult<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(usage(format!("{what} is empty")));
    }
    Ok(grid)
}

/// A comma list, or an inclusive range `lo..hi`.
pub fn parse_int_grid(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (count(lo, what)?, count(hi, what)?);
        if hi < lo {
            return Err(usage(format!("{what}: empty range `{s}`")));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|x| count(x, what)).collect()
}

pub fn parse_u64(s: &str, what: &str) -> CliResult<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| usage(format!("{what}: `{s}` is not a 64-bit unsigned integer")))
}

pub fn parse_usize(s: &str, what: &str) -> CliResult<usize> {
    count(s, what)
}

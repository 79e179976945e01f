//! The `Δ_KS(β, φ)` table.

use std::io::Write;

use glassy_core::distributions::{expected_gamma_sq, CouplingDistribution, KsMethod, KsSettings};
use glassy_core::GibbsParams;

use crate::error::{CliError, CliResult};
use crate::scan::format_real;

pub const THRESHOLD_HEADER: [&str; 5] = ["beta", "expected_gamma_sq", "delta_ks", "method", "estimated_error"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub beta: f64,
    pub expected_gamma_sq: f64,
    pub delta_ks: f64,
    pub method: KsMethod,
    pub estimated_error: f64,
}

/// `auto` picks the closed form for discrete laws and quadrature otherwise.
pub fn parse_method(s: &str) -> CliResult<Option<KsMethod>> {
    match s.trim().replace('-', "_").as_str() {
        "auto" => Ok(None),
        "closed_form" => Ok(Some(KsMethod::ClosedForm)),
        "quadrature" => Ok(Some(KsMethod::Quadrature)),
        "monte_carlo" => Ok(Some(KsMethod::MonteCarlo)),
        other => Err(CliError::Usage(format!("unknown method `{other}`"))),
    }
}

pub fn threshold_table(
    phi: &CouplingDistribution,
    betas: &[f64],
    method: Option<KsMethod>,
    settings: &KsSettings,
) -> CliResult<Vec<ThresholdRow>> {
    let method = method.unwrap_or_else(|| KsMethod::default_for(phi));
    betas
        .iter()
        .map(|&beta| {
            let params = GibbsParams::new(beta, phi.clone())?;
            let r = expected_gamma_sq(&params, method, settings)?;
            Ok(ThresholdRow {
                beta,
                expected_gamma_sq: r.expected_gamma_sq,
                delta_ks: r.delta_ks,
                method: r.method,
                estimated_error: r.estimated_error,
            })
        })
        .collect()
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THRESHOLD_HEADER)?;
    for r in rows {
        w.write_record([
            format_real(r.beta),
            format_real(r.expected_gamma_sq),
            format_real(r.delta_ks),
            r.method.name().to_string(),
            format_real(r.estimated_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! The phase scan: one joint Monte Carlo TV estimate per grid cell.

use std::io::{Read, Write};

use glassy_core::distributions::delta_ks;
use glassy_core::inference::joint_tv_monte_carlo;
use glassy_core::rng::mix_seed;
use glassy_core::GibbsParams;

use crate::config::ScanConfig;
use crate::error::{CliError, CliResult};

pub const SCAN_HEADER: [&str; 9] = [
    "beta",
    "degree",
    "h",
    "tv_mean",
    "tv_stderr",
    "truncation_rate",
    "n_trials",
    "delta_ks",
    "seed",
];

/// One cell of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub beta: f64,
    pub degree: f64,
    pub h: usize,
    /// Mean over the trials that produced a tree; NaN if every trial was truncated.
    pub tv_mean: f64,
    pub tv_stderr: f64,
    pub truncation_rate: f64,
    /// Trials attempted, truncated ones included.
    pub n_trials: usize,
    pub delta_ks: f64,
    pub seed: u64,
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

impl ScanResult {
    pub fn to_record(&self) -> [String; 9] {
        [
            format_real(self.beta),
            format_real(self.degree),
            self.h.to_string(),
            format_real(self.tv_mean),
            format_real(self.tv_stderr),
            format_real(self.truncation_rate),
            self.n_trials.to_string(),
            format_real(self.delta_ks),
            self.seed.to_string(),
        ]
    }

    pub fn from_record(fields: &[&str]) -> Result<Self, String> {
        if fields.len() != SCAN_HEADER.len() {
            return Err(format!("expected {} fields, found {}", SCAN_HEADER.len(), fields.len()));
        }
        let real = |i: usize| parse_real(fields[i].trim()).ok_or_else(|| format!("{}: bad number `{}`", SCAN_HEADER[i], fields[i]));
        let int = |i: usize| {
            fields[i]
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("{}: bad integer `{}`", SCAN_HEADER[i], fields[i]))
        };
        Ok(Self {
            beta: real(0)?,
            degree: real(1)?,
            h: int(2)? as usize,
            tv_mean: real(3)?,
            tv_stderr: real(4)?,
            truncation_rate: real(5)?,
            n_trials: int(6)? as usize,
            delta_ks: real(7)?,
            seed: int(8)?,
        })
    }
}

/// Seed of cell `(bi, di, hi)` under `master`.
pub fn cell_seed(master: u64, bi: usize, di: usize, hi: usize) -> u64 {
    mix_seed(master, &[bi as u64, di as u64, hi as u64])
}

/// Runs every cell in grid order (β outermost, then degree, then depth).
/// Trials inside a cell run on the current rayon pool.
pub fn run_scan(cfg: &ScanConfig) -> CliResult<Vec<ScanResult>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.beta_grid.len() * cfg.degree_grid.len() * cfg.h_grid.len());
    for (bi, &beta) in cfg.beta_grid.iter().enumerate() {
        let params = GibbsParams::new(beta, cfg.coupling.clone())?;
        let ks = delta_ks(&params)?.delta_ks;
        for (di, &degree) in cfg.degree_grid.iter().enumerate() {
            for (hi, &h) in cfg.h_grid.iter().enumerate() {
                let spec = cfg.tree_spec(degree, h)?;
                let seed = cell_seed(cfg.master_seed, bi, di, hi);
                let est = joint_tv_monte_carlo(&spec, &params, h, cfg.trials_per_cell, seed)?;
                let degree = match &cfg.offspring {
                    crate::parse::OffspringFamily::Exact(z) if spec.is_random() => z.mean(),
                    _ => degree,
                };
                rows.push(ScanResult {
                    beta,
                    degree,
                    h,
                    tv_mean: est.estimate.mean,
                    tv_stderr: est.estimate.stderr,
                    truncation_rate: est.truncation_rate(),
                    n_trials: est.trials,
                    delta_ks: ks,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_scan_csv<W: Write>(rows: &[ScanResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_HEADER)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a scan CSV. `source` names the input in error messages.
pub fn read_scan_csv<R: Read>(input: R, source: &str) -> CliResult<Vec<ScanResult>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let malformed = |line: u64, msg: String| CliError::Malformed {
        path: source.to_string(),
        line,
        msg,
    };
    let mut rows = Vec::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        if !header_seen {
            if fields != SCAN_HEADER {
                return Err(malformed(line, format!("header must be `{}`", SCAN_HEADER.join(","))));
            }
            header_seen = true;
            continue;
        }
        rows.push(ScanResult::from_record(&fields).map_err(|m| malformed(line, m))?);
    }
    if !header_seen {
        return Err(malformed(1, "missing header".into()));
    }
    if rows.is_empty() {
        return Err(malformed(2, "no data rows".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Model;
    use crate::parse::OffspringFamily;
    use glassy_core::distributions::CouplingDistribution;
    use glassy_core::treegen::DEFAULT_MAX_VERTICES;

    fn config(beta_grid: Vec<f64>, degree_grid: Vec<f64>, h_grid: Vec<usize>, trials: usize) -> ScanConfig {
        ScanConfig {
            model: Model::DeltaAry,
            beta_grid,
            degree_grid,
            h_grid,
            trials_per_cell: trials,
            coupling: CouplingDistribution::Rademacher,
            offspring: OffspringFamily::Poisson,
            master_seed: 3,
            max_vertices: DEFAULT_MAX_VERTICES,
            output_path: None,
            threads: None,
        }
    }

    #[test]
    fn infinite_temperature_column_is_zero() {
        let rows = run_scan(&config(vec![0.0, 1.0], vec![2.0], vec![1, 3], 200)).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows.iter().filter(|r| r.beta == 0.0) {
            assert_eq!(r.tv_mean, 0.0);
            assert_eq!(r.delta_ks, f64::INFINITY);
        }
        // grid order: beta outermost, depth innermost
        assert_eq!(rows.iter().map(|r| r.h).collect::<Vec<_>>(), vec![1, 3, 1, 3]);
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let rows = run_scan(&config(vec![0.0, 3f64.ln()], vec![2.0, 3.0], vec![2], 50)).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("beta,degree,h,tv_mean,tv_stderr,truncation_rate,n_trials,delta_ks,seed\n"));
        assert!(text.contains(",inf,"));
        let back = read_scan_csv(&buf[..], "mem").unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.to_record(), b.to_record());
        }
    }

    #[test]
    fn malformed_csv_reports_line_numbers() {
        let header = SCAN_HEADER.join(",");
        let good = "1,2,3,0.5,0.01,0,10,4,7";
        let err = read_scan_csv(format!("{header}\n{good}\n1,2,x,0.5,0.01,0,10,4,7\n").as_bytes(), "f.csv").unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 3, .. }), "{err}");
        assert!(read_scan_csv(format!("{header}\n").as_bytes(), "f.csv").is_err());
        assert!(read_scan_csv("".as_bytes(), "f.csv").is_err());
        assert!(read_scan_csv(format!("a,b\n{good}\n").as_bytes(), "f.csv").is_err());
        assert!(read_scan_csv(format!("{header}\n1,2\n").as_bytes(), "f.csv").is_err());
    }

    #[test]
    fn cell_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for b in 0..5 {
            for d in 0..5 {
                for h in 0..5 {
                    assert!(seen.insert(cell_seed(11, b, d, h)));
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn any_row_round_trips(
                beta in 0.0f64..10.0, degree in 0.5f64..20.0, h in 0usize..40,
                tv in 0.0f64..=1.0, se in 0.0f64..1.0, tr in 0.0f64..=1.0,
                n in 1usize..1_000_000, ks in prop_oneof![Just(f64::INFINITY), 1.0f64..1e6], seed in any::<u64>(),
            ) {
                let r = ScanResult { beta, degree, h, tv_mean: tv, tv_stderr: se, truncation_rate: tr, n_trials: n, delta_ks: ks, seed };
                let rec = r.to_record();
                let fields: Vec<&str> = rec.iter().map(String::as_str).collect();
                prop_assert_eq!(ScanResult::from_record(&fields).unwrap(), r);
            }
        }
    }
}

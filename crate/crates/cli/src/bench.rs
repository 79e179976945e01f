//! Root-recovery accuracy of the leaf estimators.

use std::io::Write;

use glassy_core::broadcast::{broadcast_sample, RootSpin};
use glassy_core::estimators::{decide, evaluate_estimator, flip_moment_gap, flip_second_moment, EstimatorKind, TieRule};
use glassy_core::rng::{self, mix_seed};
use glassy_core::treegen::build_tree;
use glassy_core::{Error, GibbsParams, Instance, RootedTree, SpinValue};
use rayon::prelude::*;

use crate::config::ScanConfig;
use crate::error::CliResult;
use crate::scan::{cell_seed, format_real};

pub const BENCH_HEADER: [&str; 12] = [
    "beta",
    "degree",
    "h",
    "kind",
    "accuracy",
    "accuracy_stderr",
    "n_trials",
    "truncation_rate",
    "mean_gap",
    "mean_second_moment",
    "moment_ratio",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub beta: f64,
    pub degree: f64,
    pub h: usize,
    pub kind: EstimatorKind,
    pub accuracy: f64,
    pub accuracy_stderr: f64,
    /// Trials that produced a tree.
    pub n_trials: usize,
    pub truncation_rate: f64,
    /// Flip majority only: the trial averages of the closed-form moments and
    /// `(mean gap)² / (4 · mean second moment)`.
    pub moments: Option<(f64, f64, f64)>,
    pub seed: u64,
}

impl BenchRow {
    pub fn to_record(&self) -> Vec<String> {
        let (gap, second, ratio) = match self.moments {
            Some((g, s, r)) => (format_real(g), format_real(s), format_real(r)),
            None => (String::new(), String::new(), String::new()),
        };
        vec![
            format_real(self.beta),
            format_real(self.degree),
            self.h.to_string(),
            self.kind.name().to_string(),
            format_real(self.accuracy),
            format_real(self.accuracy_stderr),
            self.n_trials.to_string(),
            format_real(self.truncation_rate),
            gap,
            second,
            ratio,
            self.seed.to_string(),
        ]
    }
}

struct Trial {
    correct: Vec<bool>,
    gap: f64,
    second: f64,
}

/// Every kind sees the same broadcasts and, on ties, the same coin, so the
/// rows of two kinds with identical decisions are identical.
fn trial(
    tree: &RootedTree,
    params: &GibbsParams,
    h: usize,
    kinds: &[EstimatorKind],
    seed: u64,
    i: usize,
) -> glassy_core::Result<Trial> {
    let mut rng = rng::stream(seed, i as u64);
    let inst = Instance::sample(tree, params, &mut rng);
    let spins = broadcast_sample(tree, inst.beta(), inst.couplings(), RootSpin::Uniform, &mut rng)?;
    let root = spins.get(0).unwrap_or(SpinValue::Plus);
    let tie_seed = mix_seed(seed, &[u64::MAX]);
    let mut correct = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let value = if tree.level_set(h).is_empty() {
            0.0
        } else {
            evaluate_estimator(kind, &inst, h, &spins)?
        };
        let guess = decide(value, TieRule::Coin, &mut rng::stream(tie_seed, i as u64));
        correct.push(guess == root);
    }
    Ok(Trial {
        correct,
        gap: flip_moment_gap(&inst, h),
        second: flip_second_moment(&inst, h),
    })
}

pub fn run_bench(cfg: &ScanConfig, kinds: &[EstimatorKind]) -> CliResult<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (bi, &beta) in cfg.beta_grid.iter().enumerate() {
        let params = GibbsParams::new(beta, cfg.coupling.clone())?;
        for (di, &degree) in cfg.degree_grid.iter().enumerate() {
            for (hi, &h) in cfg.h_grid.iter().enumerate() {
                let spec = cfg.tree_spec(degree, h)?;
                let seed = cell_seed(cfg.master_seed, bi, di, hi);
                let fixed = if spec.is_random() {
                    None
                } else {
                    Some(build_tree(&spec, &mut rng::stream(seed, u64::MAX))?)
                };
                let results: Vec<Option<glassy_core::Result<Trial>>> = (0..cfg.trials_per_cell)
                    .into_par_iter()
                    .map(|i| match &fixed {
                        Some(t) => Some(trial(t, &params, h, kinds, seed, i)),
                        None => match build_tree(&spec, &mut rng::stream(mix_seed(seed, &[1]), i as u64)) {
                            Ok(t) => Some(trial(&t, &params, h, kinds, seed, i)),
                            Err(Error::Overflow { .. }) => None,
                            Err(e) => Some(Err(e)),
                        },
                    })
                    .collect();
                let mut kept = Vec::with_capacity(results.len());
                for r in results.into_iter().flatten() {
                    kept.push(r?);
                }
                let n = kept.len();
                let truncation_rate = (cfg.trials_per_cell - n) as f64 / cfg.trials_per_cell as f64;
                let mean_gap = kept.iter().map(|t| t.gap).sum::<f64>() / n as f64;
                let mean_second = kept.iter().map(|t| t.second).sum::<f64>() / n as f64;
                let ratio = if mean_second > 0.0 {
                    mean_gap * mean_gap / (4.0 * mean_second)
                } else {
                    0.0
                };
                for (k, &kind) in kinds.iter().enumerate() {
                    let hits = kept.iter().filter(|t| t.correct[k]).count() as f64;
                    let acc = hits / n as f64;
                    let stderr = if n > 1 {
                        (acc * (1.0 - acc) / (n - 1) as f64).sqrt()
                    } else {
                        f64::INFINITY
                    };
                    rows.push(BenchRow {
                        beta,
                        degree,
                        h,
                        kind,
                        accuracy: acc,
                        accuracy_stderr: stderr,
                        n_trials: n,
                        truncation_rate,
                        moments: (kind == EstimatorKind::FlipMajority).then_some((mean_gap, mean_second, ratio)),
                        seed,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

//! Experiment settings from a `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use glassy_core::distributions::CouplingDistribution;
use glassy_core::treegen::{TreeSpec, DEFAULT_MAX_VERTICES};

use crate::error::{CliError, CliResult};
use crate::parse::{self, OffspringFamily};

const KEYS: &[&str] = &[
    "model",
    "phi",
    "beta_grid",
    "degree_grid",
    "h_grid",
    "trials",
    "seed",
    "out",
    "threads",
    "offspring",
    "max_vertices",
    "kinds",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = key.trim().replace('-', "_");
    let key = match key.as_str() {
        "beta" => "beta_grid",
        "degree" => "degree_grid",
        "height" | "height_grid" => "h_grid",
        "trials_per_cell" => "trials",
        "master_seed" => "seed",
        "output_path" | "output" => "out",
        "coupling" | "coupling_kind" => "phi",
        other => other,
    };
    KEYS.iter().find(|&&k| k == key).copied()
}

/// Flags shared by the experiment subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// `key = value` settings file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tree model: delta-ary or galton-watson.
    #[arg(long)]
    pub model: Option<String>,
    /// Coupling law: gaussian, rademacher, point:J, two-point:J1,J2,p or table:j:p,...
    #[arg(long)]
    pub phi: Option<String>,
    /// A single inverse temperature.
    #[arg(long, conflicts_with = "beta_grid")]
    pub beta: Option<String>,
    /// Inverse temperatures: a comma list or start:stop:step.
    #[arg(long)]
    pub beta_grid: Option<String>,
    /// A single degree (arity, or mean offspring on Galton-Watson trees).
    #[arg(long, conflicts_with = "degree_grid")]
    pub degree: Option<String>,
    /// Degrees: a comma list or start:stop:step.
    #[arg(long)]
    pub degree_grid: Option<String>,
    /// A single depth.
    #[arg(long, conflicts_with = "height_grid")]
    pub height: Option<String>,
    /// Depths: a comma list or lo..hi.
    #[arg(long)]
    pub height_grid: Option<String>,
    /// Trials per cell.
    #[arg(long)]
    pub trials: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// Worker threads, capped by GLASSY_THREADS.
    #[arg(long)]
    pub threads: Option<String>,
    /// Offspring law: fixed, poisson, fixed:k, poisson:d or table:k:p,...
    #[arg(long)]
    pub offspring: Option<String>,
    /// Vertex budget per tree.
    #[arg(long)]
    pub max_vertices: Option<String>,
}

/// Merged settings, keyed by canonical name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    /// Parses a settings file. Blank lines and `#` comments are skipped.
    pub fn parse_file_text(text: &str, path: &Path) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |msg: String| CliError::Malformed {
                path: path.display().to_string(),
                line: i as u64 + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| malformed(format!("expected key = value, got `{line}`")))?;
            let key = canonical_key(k).ok_or_else(|| malformed(format!("unknown key `{}`", k.trim())))?;
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(args: &SharedArgs) -> CliResult<Self> {
        let mut settings = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Self::parse_file_text(&text, path)?
            }
            None => Self::default(),
        };
        let flags = [
            ("model", &args.model),
            ("phi", &args.phi),
            ("beta_grid", &args.beta),
            ("beta_grid", &args.beta_grid),
            ("degree_grid", &args.degree),
            ("degree_grid", &args.degree_grid),
            ("h_grid", &args.height),
            ("h_grid", &args.height_grid),
            ("trials", &args.trials),
            ("seed", &args.seed),
            ("out", &args.out),
            ("threads", &args.threads),
            ("offspring", &args.offspring),
            ("max_vertices", &args.max_vertices),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.values.insert(key, v.clone());
            }
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        let key = canonical_key(key).ok_or_else(|| CliError::Usage(format!("unknown setting `{key}`")))?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str, flag: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing {flag} (or `{key}` in the config file)")))
    }

    pub fn phi(&self) -> CliResult<CouplingDistribution> {
        parse::parse_phi(self.get("phi").unwrap_or("rademacher"))
    }

    pub fn beta_grid(&self) -> CliResult<Vec<f64>> {
        parse::parse_real_grid(self.require("beta_grid", "--beta/--beta-grid")?, "beta")
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.get("seed").map_or(Ok(0), |s| parse::parse_u64(s, "seed"))
    }

    pub fn threads(&self) -> CliResult<Option<usize>> {
        self.get("threads").map(|s| parse::parse_usize(s, "threads")).transpose()
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").filter(|s| !s.is_empty() && *s != "-").map(PathBuf::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    DeltaAry,
    GaltonWatson,
}

impl Model {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s.trim().replace('-', "_").as_str() {
            "delta_ary" | "regular" => Ok(Self::DeltaAry),
            "galton_watson" | "gw" => Ok(Self::GaltonWatson),
            other => Err(CliError::Usage(format!("unknown model `{other}`"))),
        }
    }
}

/// A fully resolved grid experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub model: Model,
    pub beta_grid: Vec<f64>,
    pub degree_grid: Vec<f64>,
    pub h_grid: Vec<usize>,
    pub trials_per_cell: usize,
    pub coupling: CouplingDistribution,
    pub offspring: OffspringFamily,
    pub master_seed: u64,
    pub max_vertices: usize,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ScanConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let model = Model::parse(s.get("model").unwrap_or("delta_ary"))?;
        let offspring = parse::parse_offspring(s.get("offspring").unwrap_or("poisson"))?;
        let degree_grid = match (&offspring, s.get("degree_grid")) {
            (OffspringFamily::Exact(z), None) if model == Model::GaltonWatson => vec![z.mean()],
            (OffspringFamily::Exact(_), Some(_)) if model == Model::GaltonWatson => {
                return Err(CliError::Usage(
                    "a fully specified offspring law fixes the degree; drop --degree/--degree-grid".into(),
                ))
            }
            (_, Some(g)) => parse::parse_real_grid(g, "degree")?,
            (_, None) => return Err(CliError::Usage("missing --degree/--degree-grid".into())),
        };
        let cfg = Self {
            model,
            beta_grid: s.beta_grid()?,
            degree_grid,
            h_grid: parse::parse_int_grid(s.require("h_grid", "--height/--height-grid")?, "height")?,
            trials_per_cell: s.get("trials").map_or(Ok(1000), |t| parse::parse_usize(t, "trials"))?,
            coupling: s.phi()?,
            offspring,
            master_seed: s.seed()?,
            max_vertices: s
                .get("max_vertices")
                .map_or(Ok(DEFAULT_MAX_VERTICES), |m| parse::parse_usize(m, "max_vertices"))?,
            output_path: s.out(),
            threads: s.threads()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.beta_grid.is_empty() || self.degree_grid.is_empty() || self.h_grid.is_empty() {
            return Err(CliError::Usage("grids must be non-empty".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.max_vertices == 0 {
            return Err(CliError::Usage("max_vertices must be positive".into()));
        }
        if let Some(b) = self.beta_grid.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(CliError::Usage(format!("beta must be finite and non-negative, got {b}")));
        }
        for &d in &self.degree_grid {
            for &h in &self.h_grid {
                self.tree_spec(d, h)?;
            }
        }
        Ok(())
    }

    /// The tree of one cell. Complete trees larger than the vertex budget are
    /// rejected up front.
    pub fn tree_spec(&self, degree: f64, h: usize) -> CliResult<TreeSpec> {
        match self.model {
            Model::DeltaAry => {
                let arity = parse::integral(degree, "degree")?;
                let spec = TreeSpec::delta_ary(arity, h)?;
                let size = complete_tree_size(arity, h);
                if size.is_none_or(|n| n > self.max_vertices) {
                    return Err(CliError::Usage(format!(
                        "a {arity}-ary tree of height {h} exceeds max_vertices = {}",
                        self.max_vertices
                    )));
                }
                Ok(spec)
            }
            Model::GaltonWatson => Ok(TreeSpec::galton_watson(self.offspring.with_degree(degree)?, h)
                .with_max_vertices(self.max_vertices)),
        }
    }
}

fn complete_tree_size(arity: usize, h: usize) -> Option<usize> {
    let mut total = 1usize;
    let mut level = 1usize;
    for _ in 0..h {
        level = level.checked_mul(arity)?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

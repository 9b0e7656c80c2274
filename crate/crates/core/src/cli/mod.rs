//! Experiment harness behind the `opgeom` binary: configuration, the six
//! experiment runners and CSV/JSON report output.

pub mod invariants;
pub mod runners;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{EvaluationGrid, Function01};
use crate::operators::{ConditionRow, Family, OperatorSpec};

pub use invariants::run_invariant_suite;
pub use runners::{run_conditions, run_geom, run_inverse_voronovskaya, run_iterates, run_voronovskaya};

/// Truncation tolerance of MKZ point evaluations when none is configured.
pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-12;
pub const DEFAULT_GRID_SIZE: usize = 1001;
pub const DEFAULT_K_MAX: u32 = 30;
pub const MIN_GRID_SIZE: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Iterates,
    Geom,
    Voronovskaya,
    InverseVoronovskaya,
    Conditions,
    Invariants,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Iterates,
        Experiment::Geom,
        Experiment::Voronovskaya,
        Experiment::InverseVoronovskaya,
        Experiment::Conditions,
        Experiment::Invariants,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::Iterates => "iterates",
            Experiment::Geom => "geom",
            Experiment::Voronovskaya => "voronovskaya",
            Experiment::InverseVoronovskaya => "inverse-voronovskaya",
            Experiment::Conditions => "conditions",
            Experiment::Invariants => "invariants",
        }
    }

    /// Exact CSV header line.
    pub fn header(self) -> &'static str {
        match self {
            Experiment::Iterates => "n,k,error_psi,envelope",
            Experiment::Geom => "n,error_psi,terms_used,tail_bound",
            Experiment::Voronovskaya | Experiment::InverseVoronovskaya => "n,error_psi,aux_error",
            Experiment::Conditions => "n,sup_m4_over_m2,eta,cond55",
            Experiment::Invariants => "name,measured,threshold,pass",
        }
    }

    fn default_function(self) -> &'static str {
        match self {
            Experiment::Geom => "e1",
            Experiment::Voronovskaya | Experiment::InverseVoronovskaya => "e3",
            _ => "e2",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Config keys as read from a JSON file or the command line; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub family: Option<Family>,
    pub n_list: Option<Vec<u32>>,
    pub rho: Option<f64>,
    pub function: Option<String>,
    pub grid_size: Option<usize>,
    pub eps: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub truncation_eps: Option<f64>,
    pub k_max: Option<u32>,
    pub jobs: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Keys set in `other` win.
    pub fn overlay(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            experiment: other.experiment.or(self.experiment),
            family: other.family.or(self.family),
            n_list: other.n_list.or(self.n_list),
            rho: other.rho.or(self.rho),
            function: other.function.or(self.function),
            grid_size: other.grid_size.or(self.grid_size),
            eps: other.eps.or(self.eps),
            output_path: other.output_path.or(self.output_path),
            truncation_eps: other.truncation_eps.or(self.truncation_eps),
            k_max: other.k_max.or(self.k_max),
            jobs: other.jobs.or(self.jobs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub family: Family,
    pub n_list: Vec<u32>,
    pub rho: Option<f64>,
    pub function: String,
    pub grid_size: usize,
    pub eps: f64,
    pub output_path: Option<PathBuf>,
    /// MKZ point-evaluation tolerance.
    pub truncation_eps: Option<f64>,
    /// Largest iterate index for `iterates`.
    pub k_max: u32,
    pub jobs: usize,
}

pub fn default_n_list(family: Family) -> Vec<u32> {
    match family {
        Family::MkzSymmetric => vec![4, 8, 16],
        _ => vec![4, 8, 16, 32],
    }
}

impl ExperimentConfig {
    /// Fill defaults and validate.
    pub fn resolve(o: ConfigOverrides) -> Result<Self> {
        let experiment = o.experiment.ok_or_else(|| Error::Config("no experiment given".into()))?;
        let family = o.family.unwrap_or(Family::Bernstein);
        let cfg = ExperimentConfig {
            experiment,
            family,
            n_list: o.n_list.unwrap_or_else(|| default_n_list(family)),
            rho: o.rho,
            function: o.function.unwrap_or_else(|| experiment.default_function().to_string()),
            grid_size: o.grid_size.unwrap_or(DEFAULT_GRID_SIZE),
            eps: o.eps.unwrap_or_else(|| crate::series::default_eps(family)),
            output_path: o.output_path,
            truncation_eps: if family.is_mkz() {
                Some(o.truncation_eps.unwrap_or(DEFAULT_TRUNCATION_EPS))
            } else {
                o.truncation_eps
            },
            k_max: o.k_max.unwrap_or(DEFAULT_K_MAX),
            jobs: o.jobs.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("n_list must be increasing, got {:?}", self.n_list)));
        }
        if self.grid_size < MIN_GRID_SIZE {
            return Err(Error::Config(format!("grid_size must be at least {MIN_GRID_SIZE}, got {}", self.grid_size)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Function01::registry(&self.function)?;
        for &n in &self.n_list {
            self.operator(n)?;
        }
        Ok(())
    }

    pub fn operator(&self, n: u32) -> Result<OperatorSpec> {
        OperatorSpec::new(self.family, n, self.rho, self.truncation_eps)
    }

    pub fn grid(&self) -> Result<EvaluationGrid> {
        EvaluationGrid::chebyshev(self.grid_size)
    }

    pub fn function(&self) -> Result<Function01> {
        Function01::registry(&self.function)
    }

    /// f(n) for every n, `jobs` at a time; results keep the order of n_list.
    pub(crate) fn per_n<T: Send>(&self, f: impl Fn(u32) -> Result<T> + Sync) -> Result<Vec<T>> {
        if self.jobs <= 1 {
            return self.n_list.iter().map(|&n| f(n)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| self.n_list.par_iter().map(|&n| f(n)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRow {
    pub n: u32,
    pub k: u32,
    pub error_psi: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomRow {
    pub n: u32,
    pub error_psi: f64,
    pub terms_used: u64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: u32,
    pub error_psi: f64,
    pub aux_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantRow {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Iterates(Vec<IterateRow>),
    Geom(Vec<GeomRow>),
    Voronovskaya(Vec<ErrorRow>),
    InverseVoronovskaya(Vec<ErrorRow>),
    Conditions(Vec<ConditionRow>),
    Invariants(Vec<InvariantRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Iterates(r) => r.len(),
            Rows::Geom(r) => r.len(),
            Rows::Voronovskaya(r) | Rows::InverseVoronovskaya(r) => r.len(),
            Rows::Conditions(r) => r.len(),
            Rows::Invariants(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-n bookkeeping written to the metadata sidecar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub n: u32,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_psi_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Rows,
    pub runs: Vec<RunInfo>,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    wall_seconds: f64,
    rows: usize,
    runs: &'a [RunInfo],
    #[serde(skip_serializing_if = "Option::is_none")]
    all_pass: Option<bool>,
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T], header: &str) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header.split(','))?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

impl ExperimentReport {
    /// Whether every invariant row passed; true for other experiments.
    pub fn all_pass(&self) -> bool {
        match &self.rows {
            Rows::Invariants(r) => r.iter().all(|r| r.pass),
            _ => true,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let h = self.config.experiment.header();
        match &self.rows {
            Rows::Iterates(r) => write_rows(w, r, h),
            Rows::Geom(r) => write_rows(w, r, h),
            Rows::Voronovskaya(r) | Rows::InverseVoronovskaya(r) => write_rows(w, r, h),
            Rows::Conditions(r) => write_rows(w, r, h),
            Rows::Invariants(r) => write_rows(w, r, h),
        }
    }

    pub fn meta_json(&self) -> Result<String> {
        let meta = Meta {
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            wall_seconds: self.wall_seconds,
            rows: self.rows.len(),
            runs: &self.runs,
            all_pass: matches!(self.rows, Rows::Invariants(_)).then(|| self.all_pass()),
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// Writes the CSV to `path` and the metadata to `<path>.meta.json`.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(fs::File::create(path)?)?;
        let meta = meta_path(path);
        fs::write(&meta, self.meta_json()? + "\n")?;
        Ok(meta)
    }
}

pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn read_typed<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got.join(",") != header {
        return Err(Error::Config(format!("{}: header '{}' is not '{header}'", path.display(), got.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Parses a report written by [`ExperimentReport::write_csv`].
pub fn read_csv(experiment: Experiment, path: &Path) -> Result<Rows> {
    let h = experiment.header();
    Ok(match experiment {
        Experiment::Iterates => Rows::Iterates(read_typed(path, h)?),
        Experiment::Geom => Rows::Geom(read_typed(path, h)?),
        Experiment::Voronovskaya => Rows::Voronovskaya(read_typed(path, h)?),
        Experiment::InverseVoronovskaya => Rows::InverseVoronovskaya(read_typed(path, h)?),
        Experiment::Conditions => Rows::Conditions(read_typed(path, h)?),
        Experiment::Invariants => Rows::Invariants(read_typed(path, h)?),
    })
}

/// Runs the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (rows, runs) = match config.experiment {
        Experiment::Iterates => run_iterates(config)?,
        Experiment::Geom => run_geom(config)?,
        Experiment::Voronovskaya => run_voronovskaya(config)?,
        Experiment::InverseVoronovskaya => run_inverse_voronovskaya(config)?,
        Experiment::Conditions => run_conditions(config)?,
        Experiment::Invariants => run_invariant_suite(config)?,
    };
    Ok(ExperimentReport { config: config.clone(), rows, runs, wall_seconds: start.elapsed().as_secs_f64() })
}

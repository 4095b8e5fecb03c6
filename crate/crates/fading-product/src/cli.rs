//! Command-line front door: curve evaluation, figure reproduction as data
//! files, and the validation suite.  Emits CSV or JSON for external plotting.
//!
//! Flag resolution order: command-line flag, then config file, then the
//! `FADING_PRODUCT_SEED` environment variable (seed only), then defaults.
//! Output files are deterministic given the resolved spec.

use crate::capacity::{capacity_curve, CapacityCurve, EccMethod};
use crate::distributions::{AlphaMuParams, KappaMuParams};
use crate::error::{Error, Result};
use crate::figures::{figure_spec, FigureKind, FigureSpec};
use crate::montecarlo::McConfig;
use crate::product::{ProductModel, SeriesConfig};
use crate::validate::run_validation;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub const SEED_ENV_VAR: &str = "FADING_PRODUCT_SEED";
const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Composite fading statistics: product of a line-of-sight multipath
/// envelope and a non-linear shadowing envelope.
#[derive(Debug, Parser)]
#[command(name = "fading-product", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Evaluate the product envelope density on a grid.
    Pdf(CurveArgs),
    /// Evaluate the product distribution function on a grid.
    Cdf(CurveArgs),
    /// Evaluate ergodic capacity over an average-SNR grid (dB).
    Ecc(EccArgs),
    /// Reproduce one of the six built-in figures as data files.
    Figure(FigureArgs),
    /// Run the validation suite and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct ModelArgs {
    /// Dominant-to-scattered power ratio of the multipath factor.
    #[arg(long)]
    pub kappa1: Option<f64>,
    /// Cluster parameter of the multipath factor.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// rms envelope of the multipath factor (conflicts with --rbar1).
    #[arg(long, conflicts_with = "rbar1")]
    pub rhat1: Option<f64>,
    /// Mean envelope of the multipath factor; converted to rms internally.
    #[arg(long)]
    pub rbar1: Option<f64>,
    /// Non-linearity exponent of the shadowing factor.
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Cluster parameter of the shadowing factor.
    #[arg(long)]
    pub mu2: Option<f64>,
    /// alpha-rms envelope of the shadowing factor (conflicts with --rbar2).
    #[arg(long, conflicts_with = "rbar2")]
    pub rhat2: Option<f64>,
    /// Mean envelope of the shadowing factor; converted to rms internally.
    #[arg(long)]
    pub rbar2: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// Flat key=value config file mirroring the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Master seed for anything stochastic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Outer series truncation.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Relative tolerance of the series engines.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Cluster-parameter nudge applied on gamma poles.
    #[arg(long)]
    pub perturb_eps: Option<f64>,
    /// Term limit of the inner hypergeometric series.
    #[arg(long)]
    pub pfq_term_limit: Option<usize>,
    /// Extrapolate the pole nudge with a second evaluation.
    #[arg(long)]
    pub richardson: Option<bool>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Monte Carlo worker streams.
    #[arg(long)]
    pub mc_streams: Option<usize>,
    /// Histogram bins for binned diagnostics.
    #[arg(long)]
    pub mc_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// First grid point (envelope value).
    #[arg(long)]
    pub start: Option<f64>,
    /// Last grid point (envelope value).
    #[arg(long)]
    pub stop: Option<f64>,
    /// Number of grid points (at least 2).
    #[arg(long)]
    pub count: Option<usize>,
    /// Evaluation route: series or quadrature.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EccArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// First grid point, dB.
    #[arg(long)]
    pub start: Option<f64>,
    /// Last grid point, dB.
    #[arg(long)]
    pub stop: Option<f64>,
    /// Number of grid points (at least 2).
    #[arg(long)]
    pub count: Option<usize>,
    /// Evaluation route: series, quadrature or monte-carlo.
    #[arg(long)]
    pub method: Option<String>,
    /// Channel bandwidth in Hz; defaults to ln 2 (capacity per unit bandwidth).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Split point of the series route, in (0, 1].
    #[arg(long)]
    pub split: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number, 1 through 6.
    pub number: usize,
    /// Output directory (default `figure-N`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Parameter overrides applied to every curve of the figure.
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Reduced grid for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

// ---------------------------------------------------------------------------
// resolved run specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Pdf,
    Cdf,
    Ecc,
    Figure,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelSpec {
    pub kappa1: f64,
    pub mu1: f64,
    pub rhat1: Option<f64>,
    pub rbar1: Option<f64>,
    pub alpha2: f64,
    pub mu2: f64,
    pub rhat2: Option<f64>,
    pub rbar2: Option<f64>,
}

impl ModelSpec {
    /// Build the model, converting mean envelopes to rms where requested.
    pub fn build(&self, cfg: SeriesConfig) -> Result<ProductModel> {
        let x = match (self.rhat1, self.rbar1) {
            (Some(rhat), None) => KappaMuParams::new(self.kappa1, self.mu1, rhat)?,
            (None, Some(rbar)) => {
                KappaMuParams::from_mean_envelope(self.kappa1, self.mu1, rbar)?
            }
            _ => {
                return Err(Error::InvalidSpec(
                    "exactly one of rhat1 / rbar1 must be given".into(),
                ))
            }
        };
        let y = match (self.rhat2, self.rbar2) {
            (Some(rhat), None) => AlphaMuParams::new(self.alpha2, self.mu2, rhat)?,
            (None, Some(rbar)) => {
                AlphaMuParams::from_mean_envelope(self.alpha2, self.mu2, rbar)?
            }
            _ => {
                return Err(Error::InvalidSpec(
                    "exactly one of rhat2 / rbar2 must be given".into(),
                ))
            }
        };
        ProductModel::with_config(x, y, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Linear,
    Db,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: GridScale,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let step = if self.count > 1 {
            (self.stop - self.start) / (self.count - 1) as f64
        } else {
            0.0
        };
        (0..self.count)
            .map(|i| self.start + step * i as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Series,
    Quadrature,
    MonteCarlo,
}

impl MethodSpec {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(MethodSpec::Series),
            "quadrature" => Ok(MethodSpec::Quadrature),
            "monte-carlo" | "monte_carlo" => Ok(MethodSpec::MonteCarlo),
            other => Err(Error::InvalidSpec(format!(
                "unknown method {other:?} (expected series, quadrature or monte-carlo)"
            ))),
        }
    }
}

impl std::fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MethodSpec::Series => write!(f, "series"),
            MethodSpec::Quadrature => write!(f, "quadrature"),
            MethodSpec::MonteCarlo => write!(f, "monte_carlo"),
        }
    }
}

/// A fully resolved, validated run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: CommandKind,
    pub figure: Option<usize>,
    pub model: Option<ModelSpec>,
    pub grid: Option<GridSpec>,
    pub method: MethodSpec,
    pub bandwidth: f64,
    pub split: f64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub quick: bool,
    pub series: SeriesConfig,
    #[serde(skip)]
    pub mc: McConfig,
}

/// One output row of a curve run.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub abscissa: f64,
    pub value: f64,
    pub method: String,
    pub terms_used: usize,
    pub perturbed: bool,
    pub trunc_est: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub rows: usize,
    pub perturbed_points: usize,
    pub max_truncation_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
struct JsonOutput<'a> {
    spec: &'a RunSpec,
    rows: &'a [Row],
    diagnostics: Diagnostics,
}

/// What a run produced: text for stdout and any files written.
#[derive(Debug)]
pub struct RunOutput {
    pub stdout: String,
    pub files_written: Vec<PathBuf>,
    /// Validation verdict when the command was `validate`.
    pub validation_passed: Option<bool>,
}

// ---------------------------------------------------------------------------
// config file and spec resolution
// ---------------------------------------------------------------------------

/// Flat `key = value` file mirroring the flags.  `#` starts a comment.
fn parse_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidSpec(format!(
                "config line {} is not key=value: {raw:?}",
                lineno + 1
            )));
        };
        map.insert(
            key.trim().replace('_', "-").to_string(),
            value.trim().to_string(),
        );
    }
    Ok(map)
}

struct Resolver {
    config: HashMap<String, String>,
}

impl Resolver {
    fn new(path: Option<&PathBuf>) -> Result<Self> {
        let config = match path {
            Some(p) => parse_config(p)?,
            None => HashMap::new(),
        };
        Ok(Resolver { config })
    }

    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidSpec(format!("config key {key} has unparsable value {raw:?}"))
            }),
            None => Ok(None),
        }
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = self.get(flag, "seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV_VAR) {
            Ok(raw) => raw.parse().map_err(|_| {
                Error::InvalidSpec(format!("{SEED_ENV_VAR} has unparsable value {raw:?}"))
            }),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn series(&self, common: &CommonArgs) -> Result<SeriesConfig> {
        let mut cfg = SeriesConfig::default();
        if let Some(v) = self.get(common.k_max, "k-max")? {
            cfg.k_max = v;
        }
        if let Some(v) = self.get(common.rel_tol, "rel-tol")? {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.get(common.perturb_eps, "perturb-eps")? {
            cfg.perturbation_eps = v;
        }
        if let Some(v) = self.get(common.pfq_term_limit, "pfq-term-limit")? {
            cfg.pfq_term_limit = v;
        }
        if let Some(v) = self.get(common.richardson, "richardson")? {
            cfg.richardson = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn mc(&self, common: &CommonArgs, seed: u64) -> Result<McConfig> {
        let mut cfg = McConfig {
            seed,
            ..McConfig::default()
        };
        if let Some(v) = self.get(common.mc_samples, "mc-samples")? {
            cfg.n_samples = v;
        }
        if let Some(v) = self.get(common.mc_streams, "mc-streams")? {
            cfg.streams = v;
        }
        if let Some(v) = self.get(common.mc_bins, "mc-bins")? {
            cfg.bins = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn format(&self, common: &CommonArgs) -> Result<OutputFormat> {
        match self.get(common.format.clone(), "format")?.as_deref() {
            None | Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            Some(other) => Err(Error::InvalidSpec(format!(
                "unknown format {other:?} (expected csv or json)"
            ))),
        }
    }

    fn model(&self, args: &ModelArgs, default_rms: bool) -> Result<ModelSpec> {
        let kappa1 = self
            .get(args.kappa1, "kappa1")?
            .ok_or_else(|| Error::InvalidSpec("missing --kappa1".into()))?;
        let mu1 = self
            .get(args.mu1, "mu1")?
            .ok_or_else(|| Error::InvalidSpec("missing --mu1".into()))?;
        let alpha2 = self
            .get(args.alpha2, "alpha2")?
            .ok_or_else(|| Error::InvalidSpec("missing --alpha2".into()))?;
        let mu2 = self
            .get(args.mu2, "mu2")?
            .ok_or_else(|| Error::InvalidSpec("missing --mu2".into()))?;
        let mut rhat1 = self.get(args.rhat1, "rhat1")?;
        let rbar1 = self.get(args.rbar1, "rbar1")?;
        let mut rhat2 = self.get(args.rhat2, "rhat2")?;
        let rbar2 = self.get(args.rbar2, "rbar2")?;
        if rhat1.is_none() && rbar1.is_none() && default_rms {
            rhat1 = Some(1.0);
        }
        if rhat2.is_none() && rbar2.is_none() && default_rms {
            rhat2 = Some(1.0);
        }
        if rhat1.is_some() && rbar1.is_some() {
            return Err(Error::InvalidSpec(
                "give exactly one of rhat1 / rbar1".into(),
            ));
        }
        if rhat2.is_some() && rbar2.is_some() {
            return Err(Error::InvalidSpec(
                "give exactly one of rhat2 / rbar2".into(),
            ));
        }
        Ok(ModelSpec {
            kappa1,
            mu1,
            rhat1,
            rbar1,
            alpha2,
            mu2,
            rhat2,
            rbar2,
        })
    }

    fn grid(
        &self,
        start: Option<f64>,
        stop: Option<f64>,
        count: Option<usize>,
        scale: GridScale,
        defaults: (f64, f64, usize),
    ) -> Result<GridSpec> {
        let start = self.get(start, "start")?.unwrap_or(defaults.0);
        let stop = self.get(stop, "stop")?.unwrap_or(defaults.1);
        let count = self.get(count, "count")?.unwrap_or(defaults.2);
        if count < 2 {
            return Err(Error::InvalidSpec(format!(
                "curve commands need at least 2 grid points, got {count}"
            )));
        }
        if !(stop > start) {
            return Err(Error::InvalidSpec(format!(
                "grid stop must exceed start, got [{start}, {stop}]"
            )));
        }
        if scale == GridScale::Linear && start <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "envelope grids must be positive, got start {start}"
            )));
        }
        Ok(GridSpec {
            start,
            stop,
            count,
            scale,
        })
    }
}

/// Resolve parsed arguments into a validated [`RunSpec`].
pub fn resolve(cli: &Cli) -> Result<RunSpec> {
    match &cli.command {
        CliCommand::Pdf(args) | CliCommand::Cdf(args) => {
            let r = Resolver::new(args.common.config.as_ref())?;
            let seed = r.seed(args.common.seed)?;
            let method = match r.get(args.method.clone(), "method")?.as_deref() {
                None => MethodSpec::Series,
                Some(s) => MethodSpec::parse(s)?,
            };
            if method == MethodSpec::MonteCarlo {
                return Err(Error::InvalidSpec(
                    "pdf/cdf support the series and quadrature methods".into(),
                ));
            }
            Ok(RunSpec {
                command: if matches!(cli.command, CliCommand::Pdf(_)) {
                    CommandKind::Pdf
                } else {
                    CommandKind::Cdf
                },
                figure: None,
                model: Some(r.model(&args.model, true)?),
                grid: Some(r.grid(
                    args.start,
                    args.stop,
                    args.count,
                    GridScale::Linear,
                    (0.05, 3.0, 60),
                )?),
                method,
                bandwidth: std::f64::consts::LN_2,
                split: crate::capacity::DEFAULT_SPLIT,
                output: args.common.out.clone(),
                format: r.format(&args.common)?,
                seed,
                quick: false,
                series: r.series(&args.common)?,
                mc: r.mc(&args.common, seed)?,
            })
        }
        CliCommand::Ecc(args) => {
            let r = Resolver::new(args.common.config.as_ref())?;
            let seed = r.seed(args.common.seed)?;
            let method = match r.get(args.method.clone(), "method")?.as_deref() {
                None => MethodSpec::Quadrature,
                Some(s) => MethodSpec::parse(s)?,
            };
            let split = r
                .get(args.split, "split")?
                .unwrap_or(crate::capacity::DEFAULT_SPLIT);
            if !(split > 0.0 && split <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "split must lie in (0, 1], got {split}"
                )));
            }
            Ok(RunSpec {
                command: CommandKind::Ecc,
                figure: None,
                model: Some(r.model(&args.model, true)?),
                grid: Some(r.grid(
                    args.start,
                    args.stop,
                    args.count,
                    GridScale::Db,
                    (-10.0, 20.0, 13),
                )?),
                method,
                bandwidth: r
                    .get(args.bandwidth, "bandwidth")?
                    .unwrap_or(std::f64::consts::LN_2),
                split,
                output: args.common.out.clone(),
                format: r.format(&args.common)?,
                seed,
                quick: false,
                series: r.series(&args.common)?,
                mc: r.mc(&args.common, seed)?,
            })
        }
        CliCommand::Figure(args) => {
            let r = Resolver::new(args.common.config.as_ref())?;
            let seed = r.seed(args.common.seed)?;
            figure_spec(args.number)?; // validate the number early
            let overrides = ModelSpec {
                kappa1: r.get(args.model.kappa1, "kappa1")?.unwrap_or(f64::NAN),
                mu1: r.get(args.model.mu1, "mu1")?.unwrap_or(f64::NAN),
                rhat1: r.get(args.model.rhat1, "rhat1")?,
                rbar1: r.get(args.model.rbar1, "rbar1")?,
                alpha2: r.get(args.model.alpha2, "alpha2")?.unwrap_or(f64::NAN),
                mu2: r.get(args.model.mu2, "mu2")?.unwrap_or(f64::NAN),
                rhat2: r.get(args.model.rhat2, "rhat2")?,
                rbar2: r.get(args.model.rbar2, "rbar2")?,
            };
            Ok(RunSpec {
                command: CommandKind::Figure,
                figure: Some(args.number),
                model: Some(overrides),
                grid: None,
                method: MethodSpec::Series,
                bandwidth: std::f64::consts::LN_2,
                split: crate::capacity::DEFAULT_SPLIT,
                output: args
                    .out_dir
                    .clone()
                    .or_else(|| Some(PathBuf::from(format!("figure-{}", args.number)))),
                format: r.format(&args.common)?,
                seed,
                quick: false,
                series: r.series(&args.common)?,
                mc: r.mc(&args.common, seed)?,
            })
        }
        CliCommand::Validate(args) => {
            let r = Resolver::new(args.common.config.as_ref())?;
            let seed = r.seed(args.common.seed)?;
            Ok(RunSpec {
                command: CommandKind::Validate,
                figure: None,
                model: None,
                grid: None,
                method: MethodSpec::Quadrature,
                bandwidth: std::f64::consts::LN_2,
                split: crate::capacity::DEFAULT_SPLIT,
                output: args.common.out.clone(),
                format: r.format(&args.common)?,
                seed,
                quick: args.quick,
                series: r.series(&args.common)?,
                mc: r.mc(&args.common, seed)?,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

fn render_csv(rows: &[Row]) -> String {
    let mut out = String::from("abscissa,value,method,terms_used,perturbed,trunc_est\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.abscissa, r.value, r.method, r.terms_used, r.perturbed, r.trunc_est
        ));
    }
    out
}

fn render_rows(spec: &RunSpec, rows: &[Row]) -> Result<String> {
    match spec.format {
        OutputFormat::Csv => Ok(render_csv(rows)),
        OutputFormat::Json => {
            let diagnostics = Diagnostics {
                rows: rows.len(),
                perturbed_points: rows.iter().filter(|r| r.perturbed).count(),
                max_truncation_estimate: rows.iter().map(|r| r.trunc_est).fold(0.0, f64::max),
            };
            let doc = JsonOutput {
                spec,
                rows,
                diagnostics,
            };
            serde_json::to_string_pretty(&doc)
                .map(|mut s| {
                    s.push('\n');
                    s
                })
                .map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn eval_distribution_rows(
    model: &ProductModel,
    grid: &[f64],
    method: MethodSpec,
    cdf: bool,
) -> Result<Vec<Row>> {
    grid.par_iter()
        .map(|&z| {
            let row = match method {
                MethodSpec::Series => {
                    let r = if cdf {
                        model.cdf_series(z)?
                    } else {
                        model.pdf_series(z)?
                    };
                    Row {
                        abscissa: z,
                        value: r.value,
                        method: method.to_string(),
                        terms_used: r.terms_used,
                        perturbed: r.perturbed,
                        trunc_est: r.truncation_estimate,
                    }
                }
                MethodSpec::Quadrature => {
                    let v = if cdf {
                        model.cdf_quadrature(z)?
                    } else {
                        model.pdf_quadrature(z)?
                    };
                    Row {
                        abscissa: z,
                        value: v,
                        method: method.to_string(),
                        terms_used: 0,
                        perturbed: false,
                        trunc_est: 0.0,
                    }
                }
                MethodSpec::MonteCarlo => {
                    return Err(Error::InvalidSpec(
                        "pdf/cdf support the series and quadrature methods".into(),
                    ))
                }
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::InvalidSpec(_) => e,
            other => Error::Quadrature(format!("curve evaluation failed: {other}")),
        })
}

fn curve_to_rows(curve: &CapacityCurve) -> Result<Vec<Row>> {
    curve
        .points
        .iter()
        .map(|p| {
            let value = p.ecc.ok_or_else(|| {
                Error::Quadrature(format!(
                    "capacity point at {} dB failed: {}",
                    p.gamma_bar_db,
                    p.error.as_deref().unwrap_or("unknown")
                ))
            })?;
            Ok(Row {
                abscissa: p.gamma_bar_db,
                value,
                method: p.method.to_string(),
                terms_used: p.terms_used,
                perturbed: p.perturbed,
                trunc_est: if p.truncation_estimate.is_finite() {
                    p.truncation_estimate
                } else {
                    0.0
                },
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ManifestCurve {
    file: String,
    label: String,
    kappa1: f64,
    mu1: f64,
    rhat1: f64,
    alpha2: f64,
    mu2: f64,
    rhat2: f64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    figure: usize,
    kind: String,
    bandwidth: f64,
    seed: u64,
    grid: GridSpec,
    method: String,
    /// SNR convention of capacity figures: `gamma = gamma_bar z^2` at unit rms.
    snr_map: Option<String>,
    curves: Vec<ManifestCurve>,
}

fn run_figure(spec: &RunSpec) -> Result<RunOutput> {
    let number = spec.figure.expect("figure command");
    let fig: FigureSpec = figure_spec(number)?;
    let overrides = spec.model.expect("figure overrides present");
    let dir = spec.output.clone().expect("figure output dir");
    std::fs::create_dir_all(&dir)?;

    let (scale, method) = match fig.kind {
        FigureKind::Pdf | FigureKind::Cdf => (GridScale::Linear, MethodSpec::Series),
        FigureKind::Ecc => (GridScale::Db, MethodSpec::Quadrature),
    };
    let grid = GridSpec {
        start: fig.grid.0,
        stop: fig.grid.1,
        count: fig.grid.2,
        scale,
    };
    let points = grid.points();

    let mut files = Vec::new();
    let mut manifest_curves = Vec::new();
    for curve in &fig.curves {
        let pick = |ov: f64, default: f64| if ov.is_nan() { default } else { ov };
        let model_spec = ModelSpec {
            kappa1: pick(overrides.kappa1, curve.kappa1),
            mu1: pick(overrides.mu1, curve.mu1),
            rhat1: match (overrides.rhat1, overrides.rbar1) {
                (None, None) => Some(1.0),
                (rh, None) => rh,
                (_, _) => None,
            },
            rbar1: overrides.rbar1,
            alpha2: pick(overrides.alpha2, curve.alpha2),
            mu2: pick(overrides.mu2, curve.mu2),
            rhat2: match (overrides.rhat2, overrides.rbar2) {
                (None, None) => Some(1.0),
                (rh, None) => rh,
                (_, _) => None,
            },
            rbar2: overrides.rbar2,
        };
        let model = model_spec.build(spec.series)?;
        let rows = match fig.kind {
            FigureKind::Pdf => eval_distribution_rows(&model, &points, method, false)?,
            FigureKind::Cdf => eval_distribution_rows(&model, &points, method, true)?,
            FigureKind::Ecc => {
                // capacity figures follow the unit-rms SNR convention
                // gamma = gbar z^2, i.e. the mean-normalized map shifted by
                // the model's mean-square envelope
                let shift_db = 10.0 * model.mean_square()?.log10();
                let shifted: Vec<f64> = points.iter().map(|db| db + shift_db).collect();
                let curve = capacity_curve(
                    &model,
                    &shifted,
                    fig.bandwidth,
                    EccMethod::Quadrature,
                    None,
                )?;
                let mut rows = curve_to_rows(&curve)?;
                for (row, &db) in rows.iter_mut().zip(&points) {
                    row.abscissa = db;
                }
                rows
            }
        };
        let label = format!(
            "kappa1_{}_mu1_{}_alpha2_{}_mu2_{}",
            model.x.kappa, model.x.mu, model.y.alpha, model.y.mu
        );
        let file = format!("fig{number}_{label}.csv");
        let path = dir.join(&file);
        std::fs::write(&path, render_csv(&rows))?;
        files.push(path);
        manifest_curves.push(ManifestCurve {
            file,
            label,
            kappa1: model.x.kappa,
            mu1: model.x.mu,
            rhat1: model.x.r_hat,
            alpha2: model.y.alpha,
            mu2: model.y.mu,
            rhat2: model.y.r_hat,
        });
    }

    let manifest = Manifest {
        figure: number,
        kind: match fig.kind {
            FigureKind::Pdf => "pdf".into(),
            FigureKind::Cdf => "cdf".into(),
            FigureKind::Ecc => "ecc".into(),
        },
        bandwidth: fig.bandwidth,
        seed: spec.seed,
        grid,
        method: method.to_string(),
        snr_map: match fig.kind {
            FigureKind::Ecc => Some("unit_rms_power".into()),
            _ => None,
        },
        curves: manifest_curves,
    };
    let manifest_path = dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))? + "\n",
    )?;
    files.push(manifest_path);

    Ok(RunOutput {
        stdout: format!(
            "figure {number}: wrote {} curve files and manifest under {}\n",
            fig.curves.len(),
            dir.display()
        ),
        files_written: files,
        validation_passed: None,
    })
}

/// Execute a resolved run.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    match spec.command {
        CommandKind::Pdf | CommandKind::Cdf => {
            let model = spec
                .model
                .as_ref()
                .expect("model present")
                .build(spec.series)?;
            let grid = spec.grid.expect("grid present").points();
            let rows = eval_distribution_rows(
                &model,
                &grid,
                spec.method,
                spec.command == CommandKind::Cdf,
            )?;
            let text = render_rows(spec, &rows)?;
            let files = write_output(spec.output.as_ref(), &text)?;
            Ok(RunOutput {
                stdout: if files.is_empty() { text } else { String::new() },
                files_written: files,
                validation_passed: None,
            })
        }
        CommandKind::Ecc => {
            let model = spec
                .model
                .as_ref()
                .expect("model present")
                .build(spec.series)?;
            let grid = spec.grid.expect("grid present").points();
            let method = match spec.method {
                MethodSpec::Series => EccMethod::Series,
                MethodSpec::Quadrature => EccMethod::Quadrature,
                MethodSpec::MonteCarlo => EccMethod::MonteCarlo,
            };
            let curve = capacity_curve(&model, &grid, spec.bandwidth, method, Some(&spec.mc))?;
            let rows = curve_to_rows(&curve)?;
            let text = render_rows(spec, &rows)?;
            let files = write_output(spec.output.as_ref(), &text)?;
            Ok(RunOutput {
                stdout: if files.is_empty() { text } else { String::new() },
                files_written: files,
                validation_passed: None,
            })
        }
        CommandKind::Figure => run_figure(spec),
        CommandKind::Validate => {
            let report = run_validation(spec.seed, spec.quick);
            let text = report.render();
            let files = write_output(spec.output.as_ref(), &text)?;
            Ok(RunOutput {
                stdout: text,
                files_written: files,
                validation_passed: Some(report.all_passed()),
            })
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<Vec<PathBuf>> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(p, text)?;
            Ok(vec![p.clone()])
        }
        None => Ok(Vec::new()),
    }
}

//! Config-driven simulation studies: size and power of the Monte-Carlo tests,
//! and finite-sample convergence of the statistics to their limit laws.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{acf_with_kind, Centering, CorrelationKind};
use crate::error::{Error, Result};
use crate::models::{default_burn_in, fit_burg, ArmaModel, FitMethod, FittedModel};
use crate::montecarlo::{mc_test_diagnostic_with, mc_test_randomness_with, McConfig};
use crate::portmanteau::{scaling_factor, simulate_reference, statistic_value, ReferenceKind, Statistic};
use crate::rng::{derive_seed, stream_rng};
use crate::stable::{sample_limit_vector, sample_stable, type7_quantile, StableParams};

pub const MIN_OUTER: usize = 100;
/// Probabilities reported by the convergence study.
pub const QUANTILE_PROBS: [f64; 9] = [0.05, 0.10, 0.30, 0.50, 0.70, 0.90, 0.95, 0.975, 0.99];

fn default_outer() -> usize {
    500
}
fn default_b() -> usize {
    200
}
fn default_level() -> f64 {
    0.05
}
fn default_stats() -> Vec<Statistic> {
    vec![Statistic::DHat, Statistic::QBp]
}
fn default_lags() -> Vec<usize> {
    vec![5, 10, 15]
}
fn default_alpha() -> f64 {
    1.5
}
fn default_n_randomness() -> usize {
    250
}
fn default_n_diagnostic() -> usize {
    100
}
fn default_one() -> usize {
    1
}
fn default_sims() -> usize {
    250
}
fn default_reference_sims() -> usize {
    10_000
}
fn default_fit() -> FitMethod {
    FitMethod::Burg
}
fn default_phi() -> f64 {
    0.5
}
fn default_m() -> usize {
    5
}

/// Settings shared by the rejection-rate studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSettings {
    pub seed: u64,
    #[serde(default = "default_outer")]
    pub n_outer: usize,
    /// Inner Monte-Carlo replications `B`.
    #[serde(default = "default_b")]
    pub replications: usize,
    #[serde(default = "default_lags")]
    pub lags: Vec<usize>,
    #[serde(default = "default_stats")]
    pub statistics: Vec<Statistic>,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl RateSettings {
    fn validate(&self) -> Result<()> {
        if self.n_outer < MIN_OUTER {
            return Err(Error::Config(format!(
                "n_outer must be at least {MIN_OUTER}, got {}",
                self.n_outer
            )));
        }
        if self.statistics.is_empty() {
            return Err(Error::Config("statistics must not be empty".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        self.mc_config(0).validate()
    }

    fn mc_config(&self, seed: u64) -> McConfig {
        McConfig {
            replications: self.replications,
            master_seed: seed,
            statistic: self.statistics[0],
            lags: self.lags.clone(),
            ..McConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub name: String,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceVariant {
    DHat,
    QBp,
    /// First residual autocorrelation of a fitted AR(1).
    ResidualR1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    SizeRandomness {
        #[serde(flatten)]
        settings: RateSettings,
        alphas: Vec<f64>,
        #[serde(default = "default_n_randomness")]
        n: usize,
        #[serde(default)]
        centering: Centering,
    },
    SizeDiagnostic {
        #[serde(flatten)]
        settings: RateSettings,
        phis: Vec<f64>,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_n_diagnostic")]
        n: usize,
        #[serde(default = "default_fit")]
        fit_method: FitMethod,
    },
    PowerDiagnostic {
        #[serde(flatten)]
        settings: RateSettings,
        models: Vec<ArmaSpec>,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_n_diagnostic")]
        n: usize,
        #[serde(default = "default_one")]
        fit_p: usize,
        #[serde(default)]
        fit_q: usize,
        #[serde(default = "default_fit")]
        fit_method: FitMethod,
    },
    ConvergenceFigure {
        seed: u64,
        variant: ConvergenceVariant,
        ns: Vec<usize>,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_sims")]
        sims: usize,
        #[serde(default = "default_reference_sims")]
        reference_sims: usize,
        /// AR coefficient for the residual variant.
        #[serde(default = "default_phi")]
        phi: f64,
    },
}

/// A config file plus where to write results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    #[serde(flatten)]
    pub config: ExperimentConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::SizeRandomness { .. } => "size_randomness",
            ExperimentConfig::SizeDiagnostic { .. } => "size_diagnostic",
            ExperimentConfig::PowerDiagnostic { .. } => "power_diagnostic",
            ExperimentConfig::ConvergenceFigure { .. } => "convergence_figure",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::SizeRandomness { settings, .. }
            | ExperimentConfig::SizeDiagnostic { settings, .. }
            | ExperimentConfig::PowerDiagnostic { settings, .. } => settings.seed,
            ExperimentConfig::ConvergenceFigure { seed, .. } => *seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alpha_ok = |a: f64| a > 0.0 && a <= 2.0;
        match self {
            ExperimentConfig::SizeRandomness { settings, alphas, n, .. } => {
                settings.validate()?;
                if alphas.is_empty() || !alphas.iter().all(|&a| alpha_ok(a)) {
                    return Err(Error::Config("alphas must be a nonempty list in (0, 2]".into()));
                }
                check_lags_below(&settings.lags, *n)
            }
            ExperimentConfig::SizeDiagnostic { settings, phis, alpha, n, .. } => {
                settings.validate()?;
                if !alpha_ok(*alpha) {
                    return Err(Error::Config(format!("alpha must lie in (0, 2], got {alpha}")));
                }
                if phis.is_empty() || !phis.iter().all(|p| p.abs() < 1.0) {
                    return Err(Error::Config("phis must be a nonempty list in (-1, 1)".into()));
                }
                check_lags_below(&settings.lags, n.saturating_sub(1))
            }
            ExperimentConfig::PowerDiagnostic {
                settings,
                models,
                alpha,
                n,
                fit_p,
                fit_q,
                ..
            } => {
                settings.validate()?;
                if !alpha_ok(*alpha) {
                    return Err(Error::Config(format!("alpha must lie in (0, 2], got {alpha}")));
                }
                if models.is_empty() {
                    return Err(Error::Config("models must not be empty".into()));
                }
                for spec in models {
                    ArmaModel::new(spec.phi.clone(), spec.theta.clone())
                        .map_err(|e| Error::Config(format!("model {}: {e}", spec.name)))?;
                }
                check_lags_below(&settings.lags, n.saturating_sub(*fit_p))?;
                if *n <= 2 * (fit_p + fit_q) {
                    return Err(Error::Config("n too short for the fitted order".into()));
                }
                Ok(())
            }
            ExperimentConfig::ConvergenceFigure {
                ns, alpha, m, sims, reference_sims, phi, ..
            } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::Config(format!("alpha must lie in (0, 2), got {alpha}")));
                }
                if ns.is_empty() || *sims == 0 || *reference_sims == 0 || *m == 0 {
                    return Err(Error::Config("ns, m, sims and reference_sims must be positive".into()));
                }
                if phi.abs() >= 1.0 {
                    return Err(Error::Config(format!("phi must lie in (-1, 1), got {phi}")));
                }
                check_lags_below(&[*m], ns.iter().copied().min().unwrap_or(0).saturating_sub(1))
            }
        }
    }
}

fn check_lags_below(lags: &[usize], n: usize) -> Result<()> {
    match lags.iter().find(|&&m| m >= n) {
        Some(m) => Err(Error::Config(format!("lag {m} is not below the usable length {n}"))),
        None => Ok(()),
    }
}

/// Rejection rate of one `(setting, statistic, lag)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    /// Varied parameter: `alpha=1.5`, `phi=-0.3`, or a model name.
    pub setting: String,
    pub statistic: Statistic,
    pub m: usize,
    pub rejections: usize,
    pub n_outer: usize,
    pub rate: f64,
    /// `sqrt(rate (1 - rate) / n_outer)`.
    pub se: f64,
}

impl RateCell {
    pub fn new(setting: String, statistic: Statistic, m: usize, rejections: usize, n_outer: usize) -> Self {
        let rate = rejections as f64 / n_outer as f64;
        RateCell {
            setting,
            statistic,
            m,
            rejections,
            n_outer,
            rate,
            se: (rate * (1.0 - rate) / n_outer as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    /// `empirical` or `reference`.
    pub source: String,
    /// Series length; absent for the reference.
    pub n: Option<usize>,
    pub prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n: usize,
    /// Two-sample Kolmogorov-Smirnov distance between the finite-sample
    /// values and the reference draws.
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantiles: Vec<QuantileRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ks: Vec<KsRow>,
}

impl ExperimentResult {
    /// Delimited table, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.rates.is_empty() {
            out.push_str("setting,statistic,m,rejections,n_outer,rate,se\n");
            for c in &self.rates {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{:.6},{:.6}",
                    c.setting, c.statistic, c.m, c.rejections, c.n_outer, c.rate, c.se
                );
            }
        } else {
            out.push_str("source,n,prob,value\n");
            for q in &self.quantiles {
                let n = q.n.map(|n| n.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{:.8}", q.source, n, q.prob, q.value);
            }
        }
        out
    }

    /// Config echo, seed, version and timing without the table rows.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "elapsed_seconds": self.elapsed_seconds,
            "rows": self.rates.len() + self.quantiles.len(),
            "ks": self.ks,
        })
    }

    /// Write `<experiment>.csv` and `<experiment>.manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv = dir.join(format!("{}.csv", self.experiment));
        let manifest = dir.join(format!("{}.manifest.json", self.experiment));
        std::fs::write(&csv, self.to_csv()).map_err(io(&csv))?;
        let json = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        std::fs::write(&manifest, json).map_err(io(&manifest))?;
        Ok((csv, manifest))
    }
}

/// Run any experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let (rates, quantiles, ks) = match config {
        ExperimentConfig::SizeRandomness {
            settings,
            alphas,
            n,
            centering,
        } => (size_randomness_cells(settings, alphas, *n, *centering)?, vec![], vec![]),
        ExperimentConfig::SizeDiagnostic {
            settings,
            phis,
            alpha,
            n,
            fit_method,
        } => {
            let models: Vec<ArmaSpec> = phis
                .iter()
                .map(|&phi| ArmaSpec {
                    name: format!("phi={phi}"),
                    phi: vec![phi],
                    theta: vec![],
                })
                .collect();
            (diagnostic_cells(settings, &models, *alpha, *n, 1, 0, *fit_method)?, vec![], vec![])
        }
        ExperimentConfig::PowerDiagnostic {
            settings,
            models,
            alpha,
            n,
            fit_p,
            fit_q,
            fit_method,
        } => (
            diagnostic_cells(settings, models, *alpha, *n, *fit_p, *fit_q, *fit_method)?,
            vec![],
            vec![],
        ),
        ExperimentConfig::ConvergenceFigure { .. } => {
            let samples = convergence_samples(config)?;
            let (q, k) = samples.summarize();
            (vec![], q, k)
        }
    };
    Ok(ExperimentResult {
        experiment: config.name().to_string(),
        config: config.clone(),
        seed: config.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        rates,
        quantiles,
        ks,
    })
}

/// Data and Monte-Carlo seeds of outer replication `i` in cell `cell`.
fn outer_seeds(seed: u64, cell: usize, i: usize) -> (u64, u64) {
    let cell_seed = derive_seed(seed, cell as u64);
    (derive_seed(cell_seed, 2 * i as u64), derive_seed(cell_seed, 2 * i as u64 + 1))
}

/// Count `p < level` per report position over the outer replications.
fn tally<F>(settings: &RateSettings, cell: usize, run: F) -> Result<Vec<usize>>
where
    F: Fn(u64, u64) -> Result<Vec<f64>> + Sync,
{
    let cells = settings.statistics.len() * settings.lags.len();
    let p_values: Vec<Vec<f64>> = (0..settings.n_outer)
        .into_par_iter()
        .map(|i| {
            let (data_seed, mc_seed) = outer_seeds(settings.seed, cell, i);
            run(data_seed, mc_seed)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0; cells];
    for ps in &p_values {
        for (c, p) in counts.iter_mut().zip(ps) {
            if *p < settings.level {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

fn to_cells(settings: &RateSettings, setting: &str, counts: &[usize]) -> Vec<RateCell> {
    let mut out = Vec::new();
    for (s, &stat) in settings.statistics.iter().enumerate() {
        for (l, &m) in settings.lags.iter().enumerate() {
            let k = counts[s * settings.lags.len() + l];
            out.push(RateCell::new(setting.to_string(), stat, m, k, settings.n_outer));
        }
    }
    out
}

fn size_randomness_cells(
    settings: &RateSettings,
    alphas: &[f64],
    n: usize,
    centering: Centering,
) -> Result<Vec<RateCell>> {
    let mut cells = Vec::new();
    for (c, &alpha) in alphas.iter().enumerate() {
        let params = StableParams::standard(alpha)?;
        let counts = tally(settings, c, |data_seed, mc_seed| {
            let x = sample_stable(&params, n, &mut stream_rng(data_seed, 0));
            let cfg = McConfig {
                centering,
                ..settings.mc_config(mc_seed)
            };
            let reports = mc_test_randomness_with(&x, &cfg, &settings.statistics)?;
            Ok(reports.iter().map(|r| r.p_value).collect())
        })?;
        cells.extend(to_cells(settings, &format!("alpha={alpha}"), &counts));
    }
    Ok(cells)
}

fn diagnostic_cells(
    settings: &RateSettings,
    models: &[ArmaSpec],
    alpha: f64,
    n: usize,
    fit_p: usize,
    fit_q: usize,
    fit_method: FitMethod,
) -> Result<Vec<RateCell>> {
    let params = StableParams::standard(alpha)?;
    let mut cells = Vec::new();
    for (c, spec) in models.iter().enumerate() {
        let model = FittedModel::Arma(ArmaModel::new(spec.phi.clone(), spec.theta.clone())?);
        let burn_in = default_burn_in(spec.phi.len(), spec.theta.len());
        let counts = tally(settings, c, |data_seed, mc_seed| {
            let z = sample_stable(&params, n + burn_in, &mut stream_rng(data_seed, 0));
            let x = model.simulate(&z, burn_in)?;
            let cfg = McConfig {
                fit_method,
                ..settings.mc_config(mc_seed)
            };
            let reports = mc_test_diagnostic_with(&x, fit_p, fit_q, &cfg, &settings.statistics)?;
            Ok(reports.iter().map(|r| r.p_value).collect())
        })?;
        cells.extend(to_cells(settings, &spec.name, &counts));
    }
    Ok(cells)
}

/// Raw draws behind the convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSamples {
    /// `(n, sorted finite-sample values)` per series length.
    pub empirical: Vec<(usize, Vec<f64>)>,
    /// Sorted draws from the limit law.
    pub reference: Vec<f64>,
}

impl ConvergenceSamples {
    fn summarize(&self) -> (Vec<QuantileRow>, Vec<KsRow>) {
        let mut rows = Vec::new();
        let mut ks = Vec::new();
        for (n, values) in &self.empirical {
            for &prob in &QUANTILE_PROBS {
                rows.push(QuantileRow {
                    source: "empirical".into(),
                    n: Some(*n),
                    prob,
                    value: type7_quantile(values, prob),
                });
            }
            ks.push(KsRow {
                n: *n,
                ks_distance: two_sample_ks(values, &self.reference),
            });
        }
        for &prob in &QUANTILE_PROBS {
            rows.push(QuantileRow {
                source: "reference".into(),
                n: None,
                prob,
                value: type7_quantile(&self.reference, prob),
            });
        }
        (rows, ks)
    }
}

/// Two-sample Kolmogorov-Smirnov distance; both inputs sorted ascending.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs();
        worst = worst.max(gap);
    }
    worst
}

/// Finite-sample statistic values at each `n` and matching limit draws.
///
/// The scaling uses the true `alpha`. For the residual variant the values are
/// `(n'/ln n')^(1/alpha) r_1` of Burg AR(1) residuals (`n' = n - 1`) and the
/// reference is `W_1`, the limit of the scaled innovation autocorrelation.
pub fn convergence_samples(config: &ExperimentConfig) -> Result<ConvergenceSamples> {
    let ExperimentConfig::ConvergenceFigure {
        seed,
        variant,
        ns,
        alpha,
        m,
        sims,
        reference_sims,
        phi,
    } = config
    else {
        return Err(Error::Config("not a convergence_figure config".into()));
    };
    config.validate()?;
    let (alpha, m, phi, seed) = (*alpha, *m, *phi, *seed);
    let params = StableParams::standard(alpha)?;
    let kind = Centering::Auto.resolve(alpha);

    let mut empirical = Vec::with_capacity(ns.len());
    for (c, &n) in ns.iter().enumerate() {
        let cell_seed = derive_seed(seed, c as u64);
        let mut values: Vec<f64> = (0..*sims)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut rng = stream_rng(cell_seed, i as u64);
                match variant {
                    ConvergenceVariant::DHat | ConvergenceVariant::QBp => {
                        let x = sample_stable(&params, n, &mut rng);
                        let acf = acf_with_kind(&x, m, kind)?;
                        let stat = if *variant == ConvergenceVariant::DHat {
                            Statistic::DHat
                        } else {
                            Statistic::QBp
                        };
                        statistic_value(stat, &acf, alpha)
                    }
                    ConvergenceVariant::ResidualR1 => {
                        let burn_in = default_burn_in(1, 0);
                        let z = sample_stable(&params, n + burn_in, &mut rng);
                        let model = FittedModel::Ar(crate::models::ArModel::new(vec![phi])?);
                        let x = model.simulate(&z, burn_in)?;
                        let fit = fit_burg(&x, 1)?;
                        let acf = acf_with_kind(&fit.residuals, 1, CorrelationKind::Residual)?;
                        Ok(scaling_factor(acf.n(), alpha)?.sqrt() * acf.values()[0])
                    }
                }
            })
            .collect::<Result<_>>()?;
        values.sort_by(f64::total_cmp);
        empirical.push((n, values));
    }

    let ref_seed = derive_seed(seed, u64::MAX);
    let reference = match variant {
        ConvergenceVariant::DHat => {
            simulate_reference(ReferenceKind::RandomnessDhat, alpha, m, None, *reference_sims, ref_seed)?.draws
        }
        ConvergenceVariant::QBp => {
            simulate_reference(ReferenceKind::RandomnessQbp, alpha, m, None, *reference_sims, ref_seed)?.draws
        }
        ConvergenceVariant::ResidualR1 => {
            let mut draws: Vec<f64> = (0..*reference_sims)
                .into_par_iter()
                .map(|i| sample_limit_vector(alpha, 1, &mut stream_rng(ref_seed, i as u64)).map(|w| w[0]))
                .collect::<Result<_>>()?;
            draws.sort_by(f64::total_cmp);
            draws
        }
    };
    Ok(ConvergenceSamples { empirical, reference })
}

//! Monte-Carlo portmanteau tests: simulate the null `B` times at the observed
//! length, recompute the statistic, and rank the observed value among the
//! replicates. Also hosts the simulated-asymptotic and chi-square variants so
//! all three share one reporting path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{acf_with_kind, Centering, CorrelationKind, CorrelationSequence};
use crate::error::{Error, Result};
use crate::models::{default_burn_in, diagnostic_projection, fit_model, FitMethod, FitResult};
use crate::portmanteau::{
    asymptotic_p_value, chi_square_p_value, simulate_reference, statistic_value, PMethod,
    PortmanteauReport, ReferenceKind, Statistic, TestKind,
};
use crate::rng::{derive_seed, stream_rng, SimRng};
use crate::stable::{estimate_mcculloch, sample_stable, StableParams};

pub const MIN_REPLICATIONS: usize = 100;
pub const MAX_REPLICATIONS: usize = 100_000;
/// Shortest series accepted by the randomness test.
pub const MIN_RANDOMNESS_LENGTH: usize = 100;
/// Fresh-seed attempts per replicate before the test aborts.
pub const MAX_REPLICATE_ATTEMPTS: usize = 10;

/// Settings shared by the Monte-Carlo tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of replicates `B`.
    pub replications: usize,
    pub master_seed: u64,
    pub statistic: Statistic,
    pub lags: Vec<usize>,
    pub fit_method: FitMethod,
    pub alpha_override: Option<f64>,
    /// Randomness tests only; diagnostics always use raw residual correlations.
    pub centering: Centering,
    /// Simulate replicate innovations with the estimated skewness instead of zero.
    pub use_beta_hat: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 1000,
            master_seed: 0,
            statistic: Statistic::DHat,
            lags: vec![5, 10, 20],
            fit_method: FitMethod::Burg,
            alpha_override: None,
            centering: Centering::Auto,
            use_beta_hat: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_REPLICATIONS..=MAX_REPLICATIONS).contains(&self.replications) {
            return Err(Error::invalid(
                "B",
                format!(
                    "replications must lie in {MIN_REPLICATIONS}..={MAX_REPLICATIONS}, got {}",
                    self.replications
                ),
            ));
        }
        validate_lags(&self.lags)?;
        if let Some(alpha) = self.alpha_override {
            if !(alpha > 0.0 && alpha <= 2.0) {
                return Err(Error::invalid("alpha", format!("need 0 < alpha <= 2, got {alpha}")));
            }
        }
        Ok(())
    }
}

fn validate_lags(lags: &[usize]) -> Result<()> {
    if lags.is_empty() {
        return Err(Error::invalid("lags", "need at least one lag"));
    }
    if lags.contains(&0) {
        return Err(Error::invalid("lags", "lags must be positive"));
    }
    Ok(())
}

/// `(k + 1) / (B + 1)` with `k = #{replicate >= observed}`.
pub fn monte_carlo_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let k = replicates.iter().filter(|&&r| r >= observed).count();
    (k + 1) as f64 / (replicates.len() + 1) as f64
}

/// Alpha and beta driving a test: the override if given, otherwise the
/// quantile estimate on `series`.
fn resolve_alpha_beta(series: &[f64], cfg: &McConfig) -> Result<(f64, f64)> {
    if let Some(alpha) = cfg.alpha_override {
        let beta = if cfg.use_beta_hat {
            estimate_mcculloch(series)?.beta_hat
        } else {
            0.0
        };
        return Ok((alpha, beta));
    }
    let est = estimate_mcculloch(series)?;
    Ok((est.alpha_hat, if cfg.use_beta_hat { est.beta_hat } else { 0.0 }))
}

/// Statistic values for every `(statistic, lag)` pair, in
/// `stats`-major order.
fn statistic_grid(
    acf: &CorrelationSequence,
    stats: &[Statistic],
    lags: &[usize],
    alpha: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(stats.len() * lags.len());
    for &stat in stats {
        for &m in lags {
            out.push(statistic_value(stat, &acf.truncated(m), alpha)?);
        }
    }
    Ok(out)
}

fn max_lag(lags: &[usize]) -> usize {
    lags.iter().copied().max().unwrap_or(0)
}

/// Generator for attempt `attempt` of replicate `index`. Attempt 0 is stream
/// `index` of the master seed; retries move to a derived seed.
pub fn replicate_rng(master_seed: u64, index: u64, attempt: usize) -> SimRng {
    if attempt == 0 {
        stream_rng(master_seed, index)
    } else {
        stream_rng(derive_seed(master_seed, index), attempt as u64)
    }
}

/// Run `replicate` for every index with retries, in parallel.
fn run_replicates<F>(cfg: &McConfig, replicate: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut SimRng) -> Result<Vec<f64>> + Sync,
{
    (0..cfg.replications)
        .into_par_iter()
        .map(|b| {
            let mut last = None;
            for attempt in 0..MAX_REPLICATE_ATTEMPTS {
                match replicate(&mut replicate_rng(cfg.master_seed, b as u64, attempt)) {
                    Ok(values) => return Ok(values),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::ReplicateFailed {
                index: b,
                attempts: MAX_REPLICATE_ATTEMPTS,
                source: Box::new(last.expect("at least one attempt")),
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble_reports(
    test: TestKind,
    stats: &[Statistic],
    cfg: &McConfig,
    observed: &[f64],
    replicates: &[Vec<f64>],
    alpha: f64,
    n: usize,
    correlation: CorrelationKind,
    fit: Option<&FitResult>,
) -> Vec<PortmanteauReport> {
    let order = fit.map(|f| (f.model.phi().len(), f.model.theta().len()));
    let mut reports = Vec::with_capacity(observed.len());
    for (s, &stat) in stats.iter().enumerate() {
        for (l, &m) in cfg.lags.iter().enumerate() {
            let cell = s * cfg.lags.len() + l;
            let column: Vec<f64> = replicates.iter().map(|r| r[cell]).collect();
            reports.push(PortmanteauReport {
                test,
                statistic: stat,
                m,
                value: observed[cell],
                scaling_alpha: alpha,
                p_value: monte_carlo_p_value(observed[cell], &column),
                p_method: PMethod::MonteCarlo,
                replications: Some(cfg.replications),
                seed: Some(cfg.master_seed),
                n,
                correlation,
                order,
                fit_method: fit.map(|f| f.method),
            });
        }
    }
    reports
}

/// IID series of length `n` from the randomness null.
pub fn randomness_replicate(n: usize, alpha: f64, beta: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    Ok(sample_stable(&StableParams::new(alpha, 1.0, beta, 0.0)?, n, rng))
}

/// Randomness test of `series` for `cfg.statistic` at each lag.
pub fn mc_test_randomness(series: &[f64], cfg: &McConfig) -> Result<Vec<PortmanteauReport>> {
    mc_test_randomness_with(series, cfg, &[cfg.statistic])
}

/// Randomness test for several statistics sharing one replicate batch.
/// Reports are ordered by statistic, then lag.
pub fn mc_test_randomness_with(
    series: &[f64],
    cfg: &McConfig,
    stats: &[Statistic],
) -> Result<Vec<PortmanteauReport>> {
    cfg.validate()?;
    let n = series.len();
    if n < MIN_RANDOMNESS_LENGTH {
        return Err(Error::TooShort {
            needed: MIN_RANDOMNESS_LENGTH,
            got: n,
        });
    }
    let m_max = max_lag(&cfg.lags);
    let (alpha, beta) = resolve_alpha_beta(series, cfg)?;
    let kind = cfg.centering.resolve(alpha);
    let observed = statistic_grid(&acf_with_kind(series, m_max, kind)?, stats, &cfg.lags, alpha)?;
    let replicates = run_replicates(cfg, |rng| {
        let z = randomness_replicate(n, alpha, beta, rng)?;
        statistic_grid(&acf_with_kind(&z, m_max, kind)?, stats, &cfg.lags, alpha)
    })?;
    Ok(assemble_reports(
        TestKind::Randomness,
        stats,
        cfg,
        &observed,
        &replicates,
        alpha,
        n,
        kind,
        None,
    ))
}

/// Series of length `n` simulated from `fit` with stable innovations, after
/// the default burn-in.
pub fn diagnostic_replicate(
    fit: &FitResult,
    n: usize,
    alpha: f64,
    beta: f64,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    let (p, q) = (fit.model.phi().len(), fit.model.theta().len());
    let burn_in = default_burn_in(p, q);
    let z = sample_stable(&StableParams::new(alpha, 1.0, beta, 0.0)?, n + burn_in, rng);
    fit.model.simulate(&z, burn_in)
}

/// Fit `(p, q)` and evaluate the statistics on the raw residual
/// autocorrelations, scaled with `alpha`.
pub fn diagnostic_statistics(
    series: &[f64],
    p: usize,
    q: usize,
    method: FitMethod,
    stats: &[Statistic],
    lags: &[usize],
    alpha: f64,
) -> Result<Vec<f64>> {
    let fit = fit_model(series, p, q, method)?;
    let acf = acf_with_kind(&fit.residuals, max_lag(lags), CorrelationKind::Residual)?;
    statistic_grid(&acf, stats, lags, alpha)
}

/// Diagnostic test of an ARMA(p, q) fit for `cfg.statistic` at each lag.
pub fn mc_test_diagnostic(
    series: &[f64],
    p: usize,
    q: usize,
    cfg: &McConfig,
) -> Result<Vec<PortmanteauReport>> {
    mc_test_diagnostic_with(series, p, q, cfg, &[cfg.statistic])
}

/// Diagnostic test for several statistics sharing one replicate batch.
///
/// Each replicate simulates the fitted model at the observed length, refits
/// the same orders by the same method and recomputes the statistics, so the
/// estimation effect is carried by the replicates themselves.
pub fn mc_test_diagnostic_with(
    series: &[f64],
    p: usize,
    q: usize,
    cfg: &McConfig,
    stats: &[Statistic],
) -> Result<Vec<PortmanteauReport>> {
    cfg.validate()?;
    let fit = fit_model(series, p, q, cfg.fit_method)?;
    let (alpha, beta) = resolve_alpha_beta(&fit.residuals, cfg)?;
    let m_max = max_lag(&cfg.lags);
    let acf = acf_with_kind(&fit.residuals, m_max, CorrelationKind::Residual)?;
    let observed = statistic_grid(&acf, stats, &cfg.lags, alpha)?;
    let n = series.len();
    let replicates = run_replicates(cfg, |rng| {
        let x = diagnostic_replicate(&fit, n, alpha, beta, rng)?;
        diagnostic_statistics(&x, p, q, cfg.fit_method, stats, &cfg.lags, alpha)
    })?;
    Ok(assemble_reports(
        TestKind::Diagnostic,
        stats,
        cfg,
        &observed,
        &replicates,
        alpha,
        fit.residuals.len(),
        CorrelationKind::Residual,
        Some(&fit),
    ))
}

/// Randomness test against the simulated limit law (`q_bp`, `d_hat`) or
/// chi-square (`q_lb`), instead of Monte-Carlo replicates.
pub fn asymptotic_test_randomness(
    series: &[f64],
    cfg: &McConfig,
    sim_count: usize,
    method: PMethod,
) -> Result<Vec<PortmanteauReport>> {
    validate_lags(&cfg.lags)?;
    let n = series.len();
    if n < MIN_RANDOMNESS_LENGTH {
        return Err(Error::TooShort {
            needed: MIN_RANDOMNESS_LENGTH,
            got: n,
        });
    }
    let (alpha, _) = resolve_alpha_beta(series, cfg)?;
    let kind = cfg.centering.resolve(alpha);
    let acf = acf_with_kind(series, max_lag(&cfg.lags), kind)?;
    cfg.lags
        .iter()
        .map(|&m| {
            let value = statistic_value(cfg.statistic, &acf.truncated(m), alpha)?;
            let p_value = asymptotic_p(cfg, TestKind::Randomness, method, value, alpha, m, 0, None, sim_count)?;
            Ok(PortmanteauReport {
                test: TestKind::Randomness,
                statistic: cfg.statistic,
                m,
                value,
                scaling_alpha: alpha,
                p_value,
                p_method: method,
                replications: (method == PMethod::SimulatedAsymptotic).then_some(sim_count),
                seed: (method == PMethod::SimulatedAsymptotic).then_some(cfg.master_seed),
                n,
                correlation: kind,
                order: None,
                fit_method: None,
            })
        })
        .collect()
}

/// Diagnostic test against the projected limit law (`q_bp`, `d_hat`) or
/// chi-square with `m - p - q` degrees of freedom (`q_lb`).
pub fn asymptotic_test_diagnostic(
    series: &[f64],
    p: usize,
    q: usize,
    cfg: &McConfig,
    sim_count: usize,
    method: PMethod,
) -> Result<Vec<PortmanteauReport>> {
    validate_lags(&cfg.lags)?;
    let fit = fit_model(series, p, q, cfg.fit_method)?;
    let (alpha, _) = resolve_alpha_beta(&fit.residuals, cfg)?;
    let acf = acf_with_kind(&fit.residuals, max_lag(&cfg.lags), CorrelationKind::Residual)?;
    cfg.lags
        .iter()
        .map(|&m| {
            let value = statistic_value(cfg.statistic, &acf.truncated(m), alpha)?;
            let p_value = asymptotic_p(
                cfg,
                TestKind::Diagnostic,
                method,
                value,
                alpha,
                m,
                p + q,
                Some(&fit),
                sim_count,
            )?;
            Ok(PortmanteauReport {
                test: TestKind::Diagnostic,
                statistic: cfg.statistic,
                m,
                value,
                scaling_alpha: alpha,
                p_value,
                p_method: method,
                replications: (method == PMethod::SimulatedAsymptotic).then_some(sim_count),
                seed: (method == PMethod::SimulatedAsymptotic).then_some(cfg.master_seed),
                n: fit.residuals.len(),
                correlation: CorrelationKind::Residual,
                order: Some((p, q)),
                fit_method: Some(fit.method),
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn asymptotic_p(
    cfg: &McConfig,
    test: TestKind,
    method: PMethod,
    value: f64,
    alpha: f64,
    m: usize,
    params: usize,
    fit: Option<&FitResult>,
    sim_count: usize,
) -> Result<f64> {
    match (method, cfg.statistic) {
        (PMethod::ChiSquare, Statistic::QLb) => {
            if m <= params {
                return Err(Error::invalid("m", format!("chi-square needs m > {params}")));
            }
            chi_square_p_value(value, m - params)
        }
        (PMethod::ChiSquare, stat) => Err(Error::invalid(
            "method",
            format!("chi-square p-values apply to q_lb only, not {stat}"),
        )),
        (PMethod::SimulatedAsymptotic, stat) => {
            let kind = ReferenceKind::for_test(stat, test)?;
            let projection = match fit {
                Some(f) => Some(diagnostic_projection(&f.model.diagnostic_ar(), m)?),
                None => None,
            };
            let reference = simulate_reference(kind, alpha, m, projection.as_ref(), sim_count, cfg.master_seed)?;
            Ok(asymptotic_p_value(value, &reference))
        }
        (PMethod::MonteCarlo, _) => Err(Error::invalid("method", "use the Monte-Carlo test functions")),
    }
}

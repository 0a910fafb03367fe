//! Portmanteau statistics for heavy-tailed series and the simulated limit
//! distributions they are compared against.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::correlation::{det_root_complement, CorrelationKind, CorrelationSequence};
use crate::error::{Error, Result};
use crate::models::{DiagnosticProjection, FitMethod};
use crate::rng::stream_rng;
use crate::stable::LimitVectorSampler;

/// Default number of draws for simulated limit distributions.
pub const DEFAULT_SIM_COUNT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "q_bp")]
    QBp,
    #[serde(rename = "d_hat")]
    DHat,
    #[serde(rename = "q_lb")]
    QLb,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::QBp, Statistic::DHat, Statistic::QLb];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::QBp => "q_bp",
            Statistic::DHat => "d_hat",
            Statistic::QLb => "q_lb",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qbp" | "q_bp" => Ok(Statistic::QBp),
            "dhat" | "d_hat" => Ok(Statistic::DHat),
            "qlb" | "q_lb" => Ok(Statistic::QLb),
            other => Err(Error::invalid(
                "statistic",
                format!("unknown statistic {other:?}; expected qbp, dhat or qlb"),
            )),
        }
    }
}

/// `(n / ln n)^(2 / alpha)`.
pub fn scaling_factor(n: usize, alpha: f64) -> Result<f64> {
    if n <= 2 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("alpha", format!("need 0 < alpha <= 2, got {alpha}")));
    }
    let n = n as f64;
    Ok((n / n.ln()).powf(2.0 / alpha))
}

/// `(n / ln n)^(2/alpha) * sum r_k^2`.
pub fn q_bp_statistic(acf: &CorrelationSequence, alpha: f64) -> Result<f64> {
    let sum: f64 = acf.values().iter().map(|r| r * r).sum();
    Ok(scaling_factor(acf.n(), alpha)? * sum)
}

/// `(n / ln n)^(2/alpha) * (1 - |R_m|^(1/m))`, with the determinant root taken
/// through the partial autocorrelations.
pub fn d_hat_statistic(acf: &CorrelationSequence, alpha: f64) -> Result<f64> {
    let scale = scaling_factor(acf.n(), alpha)?;
    Ok(scale * det_root_complement(acf)?.max(0.0))
}

/// Ljung-Box `n (n + 2) sum r_k^2 / (n - k)`.
pub fn q_lb_statistic(acf: &CorrelationSequence) -> Result<f64> {
    let n = acf.n() as f64;
    let sum: f64 = acf
        .values()
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (n - (i + 1) as f64))
        .sum();
    Ok(n * (n + 2.0) * sum)
}

/// Evaluate `stat`; `alpha` is ignored by Ljung-Box.
pub fn statistic_value(stat: Statistic, acf: &CorrelationSequence, alpha: f64) -> Result<f64> {
    match stat {
        Statistic::QBp => q_bp_statistic(acf, alpha),
        Statistic::DHat => d_hat_statistic(acf, alpha),
        Statistic::QLb => q_lb_statistic(acf),
    }
}

/// Upper tail of chi-square with `dof` degrees of freedom.
pub fn chi_square_p_value(value: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::invalid("dof", "need at least one degree of freedom"));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid("dof", e.to_string()))?;
    Ok(dist.sf(value.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    MonteCarlo,
    SimulatedAsymptotic,
    ChiSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Randomness,
    Diagnostic,
}

/// One statistic at one lag, with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortmanteauReport {
    pub test: TestKind,
    pub statistic: Statistic,
    pub m: usize,
    pub value: f64,
    /// Stability index in the `(n/ln n)^(2/alpha)` scaling and in simulation.
    pub scaling_alpha: f64,
    pub p_value: f64,
    pub p_method: PMethod,
    /// `B` for Monte-Carlo, the draw count for simulated limits, absent for chi-square.
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    /// Length of the series the autocorrelations came from.
    pub n: usize,
    pub correlation: CorrelationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_method: Option<FitMethod>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    RandomnessQbp,
    RandomnessDhat,
    DiagnosticQbp,
    DiagnosticDhat,
}

impl ReferenceKind {
    pub fn for_test(stat: Statistic, test: TestKind) -> Result<Self> {
        match (stat, test) {
            (Statistic::QBp, TestKind::Randomness) => Ok(ReferenceKind::RandomnessQbp),
            (Statistic::DHat, TestKind::Randomness) => Ok(ReferenceKind::RandomnessDhat),
            (Statistic::QBp, TestKind::Diagnostic) => Ok(ReferenceKind::DiagnosticQbp),
            (Statistic::DHat, TestKind::Diagnostic) => Ok(ReferenceKind::DiagnosticDhat),
            (Statistic::QLb, _) => Err(Error::invalid(
                "statistic",
                "q_lb has no stable limit reference; use the chi-square or Monte-Carlo method",
            )),
        }
    }

    fn is_diagnostic(self) -> bool {
        matches!(self, ReferenceKind::DiagnosticQbp | ReferenceKind::DiagnosticDhat)
    }
}

/// Sorted draws from a simulated limit distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    pub draws: Vec<f64>,
    pub sim_count: usize,
    pub alpha: f64,
    pub m: usize,
    pub kind: ReferenceKind,
}

impl ReferenceDistribution {
    /// Type-7 quantile of the draws.
    pub fn quantile(&self, prob: f64) -> f64 {
        crate::stable::type7_quantile(&self.draws, prob)
    }
}

/// Weights `(m + 1 - i) / m`, `i = 1..=m`.
pub fn d_hat_weights(m: usize) -> Vec<f64> {
    (1..=m).map(|i| (m + 1 - i) as f64 / m as f64).collect()
}

fn quadratic_form(matrix: &DMatrix<f64>, w: &[f64]) -> f64 {
    let v = DVector::from_column_slice(w);
    v.dot(&(matrix * &v))
}

/// Simulate the limit law of a statistic from `sim_count` draws of
/// `W = (W_1, ..., W_m)`:
///
/// * `randomness_qbp`: `sum W_i^2`
/// * `randomness_dhat`: `sum (m+1-i)/m W_i^2`
/// * `diagnostic_qbp`: `W' (1 - Q) W`
/// * `diagnostic_dhat`: `W' A_m W` with `A_m = (1 - Q)' D (1 - Q)` and `D` the
///   diagonal of D-hat weights
///
/// Draw `i` uses stream `i` of `seed`, so the result does not depend on the
/// thread count.
pub fn simulate_reference(
    kind: ReferenceKind,
    alpha: f64,
    m: usize,
    projection: Option<&DiagnosticProjection>,
    sim_count: usize,
    seed: u64,
) -> Result<ReferenceDistribution> {
    if m == 0 {
        return Err(Error::invalid("m", "need at least one lag"));
    }
    if sim_count == 0 {
        return Err(Error::invalid("sim_count", "need at least one draw"));
    }
    let sampler = LimitVectorSampler::new(alpha)?;
    let weights = d_hat_weights(m);
    let form: Option<DMatrix<f64>> = match (kind.is_diagnostic(), projection) {
        (true, None) => {
            return Err(Error::invalid("projection", "diagnostic references need a projection"))
        }
        (false, Some(_)) => {
            return Err(Error::invalid(
                "projection",
                "randomness references take no projection",
            ))
        }
        (true, Some(proj)) if proj.m() != m => {
            return Err(Error::invalid(
                "projection",
                format!("projection has {} lags, expected {m}", proj.m()),
            ))
        }
        (true, Some(proj)) => {
            let c = proj.complement();
            Some(match kind {
                ReferenceKind::DiagnosticQbp => c.clone(),
                _ => c.transpose() * DMatrix::from_diagonal(&DVector::from_vec(weights.clone())) * c,
            })
        }
        (false, None) => None,
    };

    let mut draws: Vec<f64> = (0..sim_count)
        .into_par_iter()
        .map(|i| {
            let w = sampler.draw(m, &mut stream_rng(seed, i as u64)).ratios;
            match (kind, &form) {
                (ReferenceKind::RandomnessQbp, _) => w.iter().map(|x| x * x).sum(),
                (ReferenceKind::RandomnessDhat, _) => {
                    w.iter().zip(&weights).map(|(x, c)| c * x * x).sum()
                }
                (_, Some(matrix)) => quadratic_form(matrix, &w).max(0.0),
                (_, None) => unreachable!("diagnostic form checked above"),
            }
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    Ok(ReferenceDistribution {
        draws,
        sim_count,
        alpha,
        m,
        kind,
    })
}

/// `(1 + #{draws >= value}) / (sim_count + 1)`.
pub fn asymptotic_p_value(value: f64, reference: &ReferenceDistribution) -> f64 {
    let below = reference.draws.partition_point(|&d| d < value);
    let at_or_above = reference.draws.len() - below;
    (1 + at_or_above) as f64 / (reference.draws.len() + 1) as f64
}

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{is_stable_polynomial, shrink_into_region, ArModel, ArmaModel, FittedModel};
use crate::correlation::{acf_with_kind, CorrelationKind, CorrelationSequence};
use crate::error::{Error, Result};
use crate::stable::estimate_mcculloch;

/// Iteration cap for the conditional-sum-of-squares optimizer.
pub const CSS_MAX_ITERS: u64 = 500;
/// Stopping tolerance on the spread of normalized objective values.
pub const CSS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Burg,
    LeastSquares,
    Css,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Burg => "burg",
            FitMethod::LeastSquares => "least_squares",
            FitMethod::Css => "css",
        })
    }
}

/// A fitted model with its conditional residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    /// Residuals for `t = p+1..n`; the first `p` observations are consumed.
    pub residuals: Vec<f64>,
    pub method: FitMethod,
    /// Quantile estimate of alpha on the residuals, when they are long and
    /// varied enough for the estimator.
    pub alpha_hat: Option<f64>,
}

impl FitResult {
    fn new(model: FittedModel, residuals: Vec<f64>, method: FitMethod) -> Self {
        let alpha_hat = estimate_mcculloch(&residuals).ok().map(|e| e.alpha_hat);
        FitResult {
            model,
            residuals,
            method,
            alpha_hat,
        }
    }
}

fn check_series(series: &[f64], params: usize) -> Result<()> {
    if let Some(index) = series.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if series.len() <= 2 * params {
        return Err(Error::TooShort {
            needed: 2 * params + 1,
            got: series.len(),
        });
    }
    Ok(())
}

fn ar_residuals(series: &[f64], phi: &[f64]) -> Vec<f64> {
    let p = phi.len();
    (p..series.len())
        .map(|t| {
            series[t]
                - phi
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * series[t - 1 - i])
                    .sum::<f64>()
        })
        .collect()
}

/// Conditional ARMA residuals with zero pre-sample innovations.
fn arma_residuals(series: &[f64], phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let p = phi.len();
    let mut e = vec![0.0; series.len()];
    for t in p..series.len() {
        let mut value = series[t];
        for (i, c) in phi.iter().enumerate() {
            value -= c * series[t - 1 - i];
        }
        for (j, c) in theta.iter().enumerate() {
            if t > j {
                value += c * e[t - 1 - j];
            }
        }
        e[t] = value;
    }
    e.split_off(p)
}

/// Reflection coefficients and AR coefficients by Burg's method.
fn burg_coefficients(series: &[f64], p: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let energy: f64 = series.iter().map(|x| x * x).sum();
    if energy <= 0.0 || !energy.is_finite() {
        return Err(Error::Degenerate("series has zero energy".into()));
    }
    let mut forward = series.to_vec();
    let mut backward = series.to_vec();
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    for k in 1..=p {
        let mut num = 0.0;
        let mut den = 0.0;
        for t in k..n {
            num += forward[t] * backward[t - 1];
            den += forward[t] * forward[t] + backward[t - 1] * backward[t - 1];
        }
        if den <= 0.0 {
            return Err(Error::Degenerate(format!("prediction errors vanish at order {k}")));
        }
        let kappa = 2.0 * num / den;
        if kappa.abs() >= 1.0 {
            return Err(Error::Degenerate(format!(
                "series is perfectly predictable at order {k}"
            )));
        }
        for t in (k..n).rev() {
            let f = forward[t];
            forward[t] = f - kappa * backward[t - 1];
            backward[t] = backward[t - 1] - kappa * f;
        }
        let prev = phi.clone();
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - 1 - j];
        }
        phi.push(kappa);
    }
    Ok(phi)
}

/// AR(p) by Burg's algorithm. Every reflection coefficient has modulus below
/// one, so the result is always stationary.
pub fn fit_burg(series: &[f64], p: usize) -> Result<FitResult> {
    if p == 0 {
        return Err(Error::invalid("p", "order must be at least 1"));
    }
    check_series(series, p)?;
    let mut phi = burg_coefficients(series, p)?;
    // Rounding can push a near-unit root onto the circle.
    if !is_stable_polynomial(&phi) {
        shrink_into_region(&mut phi);
    }
    let residuals = ar_residuals(series, &phi);
    Ok(FitResult::new(
        FittedModel::Ar(ArModel::new(phi)?),
        residuals,
        FitMethod::Burg,
    ))
}

/// Least-squares solution via SVD, rejecting numerically rank-deficient designs.
fn least_squares(design: DMatrix<f64>, target: DVector<f64>) -> Result<Vec<f64>> {
    let cols = design.ncols();
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    let tol = max_sv * 1e-12 * (cols.max(target.len()) as f64);
    if !(max_sv > 0.0) || min_sv <= tol {
        return Err(Error::RankDeficient);
    }
    let beta = svd.solve(&target, tol).map_err(|_| Error::RankDeficient)?;
    Ok(beta.iter().copied().collect())
}

fn lagged_design(series: &[f64], p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = series.len() - p;
    let design = DMatrix::from_fn(rows, p, |r, c| series[p + r - 1 - c]);
    let target = DVector::from_iterator(rows, series[p..].iter().copied());
    (design, target)
}

/// Conditional least squares of `X_t` on `X_{t-1}, ..., X_{t-p}`.
///
/// The estimate is not constrained to the stationary region; a
/// non-stationary solution is reported as [`Error::NotStationary`].
pub fn fit_least_squares(series: &[f64], p: usize) -> Result<FitResult> {
    if p == 0 {
        return Err(Error::invalid("p", "order must be at least 1"));
    }
    check_series(series, p)?;
    let (design, target) = lagged_design(series, p);
    let phi = least_squares(design, target)?;
    let residuals = ar_residuals(series, &phi);
    Ok(FitResult::new(
        FittedModel::Ar(ArModel::new(phi)?),
        residuals,
        FitMethod::LeastSquares,
    ))
}

struct CssObjective<'a> {
    series: &'a [f64],
    p: usize,
    scale: f64,
}

impl CssObjective<'_> {
    fn project(&self, params: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut phi = params[..self.p].to_vec();
        let mut theta = params[self.p..].to_vec();
        shrink_into_region(&mut phi);
        shrink_into_region(&mut theta);
        (phi, theta)
    }

    fn sum_of_squares(&self, params: &[f64]) -> f64 {
        let (phi, theta) = self.project(params);
        arma_residuals(self.series, &phi, &theta)
            .iter()
            .map(|e| e * e)
            .sum::<f64>()
    }
}

impl CostFunction for CssObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, params: &Self::Param) -> std::result::Result<f64, ArgminError> {
        Ok(self.sum_of_squares(params) / self.scale)
    }
}

/// Hannan-Rissanen start: long AR residuals as proxies for the innovations,
/// then one regression on lagged values and lagged proxies.
fn hannan_rissanen(series: &[f64], p: usize, q: usize) -> Vec<f64> {
    let n = series.len();
    let long = (2 * (p + q))
        .max((2.0 * (n as f64).ln()).ceil() as usize)
        .min((n / 4).max(p + q));
    let fallback = vec![0.0; p + q];
    let Ok(long_phi) = burg_coefficients(series, long) else {
        return fallback;
    };
    let proxies = ar_residuals(series, &long_phi);
    let start = long + p.max(q);
    if n <= start + 2 * (p + q) {
        return fallback;
    }
    let rows = n - start;
    let design = DMatrix::from_fn(rows, p + q, |r, c| {
        let t = start + r;
        if c < p {
            series[t - 1 - c]
        } else {
            // proxies[i] is the innovation at time long + i
            -proxies[t - 1 - (c - p) - long]
        }
    });
    let target = DVector::from_iterator(rows, series[start..].iter().copied());
    least_squares(design, target).unwrap_or(fallback)
}

/// ARMA(p, q) by minimizing the conditional sum of squared innovations with a
/// Nelder-Mead search started from a Hannan-Rissanen estimate. Iterates outside
/// the stationary/invertible region are shrunk back inside before evaluation.
///
/// `q = 0` delegates to [`fit_least_squares`].
pub fn fit_arma_css(series: &[f64], p: usize, q: usize) -> Result<FitResult> {
    if q == 0 {
        return fit_least_squares(series, p);
    }
    check_series(series, p + q)?;
    let start = hannan_rissanen(series, p, q);
    let probe = CssObjective {
        series,
        p,
        scale: 1.0,
    };
    let scale = probe.sum_of_squares(&start);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Degenerate("zero residual energy at the start value".into()));
    }
    let objective = CssObjective { series, p, scale };

    let dim = p + q;
    let mut simplex = vec![start.clone()];
    for i in 0..dim {
        let mut vertex = start.clone();
        vertex[i] += if vertex[i].abs() > 0.5 { -0.1 } else { 0.1 };
        simplex.push(vertex);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(CSS_TOLERANCE)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let outcome = Executor::new(objective, solver)
        .configure(|state| state.max_iters(CSS_MAX_ITERS))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = outcome.state();
    if let Some(TerminationReason::MaxItersReached) = state.get_termination_reason() {
        return Err(Error::Optimizer(format!(
            "no convergence within {CSS_MAX_ITERS} iterations"
        )));
    }
    let best = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::Optimizer("no parameter returned".into()))?;
    let objective = CssObjective {
        series,
        p,
        scale: 1.0,
    };
    let (phi, theta) = objective.project(&best);
    let model = ArmaModel::new(phi, theta)?;
    let residuals = arma_residuals(series, model.phi(), model.theta());
    Ok(FitResult::new(
        FittedModel::Arma(model),
        residuals,
        FitMethod::Css,
    ))
}

/// Fit `(p, q)` by `method`. Burg and least squares are AR-only.
pub fn fit_model(series: &[f64], p: usize, q: usize, method: FitMethod) -> Result<FitResult> {
    match method {
        FitMethod::Burg | FitMethod::LeastSquares if q > 0 => Err(Error::invalid(
            "fit",
            format!("{method} fits AR models only; use css for q > 0"),
        )),
        FitMethod::Burg => fit_burg(series, p),
        FitMethod::LeastSquares => fit_least_squares(series, p),
        FitMethod::Css => fit_arma_css(series, p, q),
    }
}

/// Raw autocorrelations of the residuals at lags `1..=m`.
pub fn residual_acf(fit: &FitResult, m: usize) -> Result<CorrelationSequence> {
    acf_with_kind(&fit.residuals, m, CorrelationKind::Residual)
}

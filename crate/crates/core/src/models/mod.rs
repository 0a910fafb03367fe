//! AR and ARMA models: representation, simulation, fitting, impulse responses
//! and the residual-autocorrelation projection.
//!
//! Sign conventions: `phi(B) = 1 - phi_1 B - ... - phi_p B^p` and
//! `theta(B) = 1 - theta_1 B - ... - theta_q B^q`, so an ARMA(p, q) process
//! satisfies `X_t = sum phi_i X_{t-i} + Z_t - sum theta_j Z_{t-j}`.

mod fit;
mod projection;

pub use fit::{
    fit_arma_css, fit_burg, fit_least_squares, fit_model, residual_acf, FitMethod, FitResult,
    CSS_MAX_ITERS, CSS_TOLERANCE,
};
pub use projection::{diagnostic_projection, DiagnosticProjection};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-down (inverse Levinson) test: the polynomial `1 - sum c_i z^i` has all
/// roots strictly outside the unit circle iff every reflection coefficient
/// recovered from `c` has modulus below one.
pub fn is_stable_polynomial(coeffs: &[f64]) -> bool {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return false;
    }
    let mut a = coeffs.to_vec();
    for k in (1..=a.len()).rev() {
        let kappa = a[k - 1];
        if kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        let prev = a.clone();
        for j in 1..k {
            a[j - 1] = (prev[j - 1] + kappa * prev[k - 1 - j]) / denom;
        }
        a.truncate(k - 1);
    }
    true
}

/// Shrink `coeffs` by 0.98 per step until the polynomial is stable.
pub(crate) fn shrink_into_region(coeffs: &mut [f64]) {
    let mut steps = 0;
    while !is_stable_polynomial(coeffs) {
        for c in coeffs.iter_mut() {
            *c = if c.is_finite() { *c * 0.98 } else { 0.0 };
        }
        steps += 1;
        if steps > 2000 {
            coeffs.iter_mut().for_each(|c| *c = 0.0);
            break;
        }
    }
}

/// Coefficients of `(1 - sum a_i B^i)(1 - sum b_j B^j)` as `1 - sum c_k B^k`.
fn multiply_lag_polynomials(a: &[f64], b: &[f64]) -> Vec<f64> {
    let pa: Vec<f64> = std::iter::once(1.0).chain(a.iter().map(|x| -x)).collect();
    let pb: Vec<f64> = std::iter::once(1.0).chain(b.iter().map(|x| -x)).collect();
    let mut prod = vec![0.0; pa.len() + pb.len() - 1];
    for (i, x) in pa.iter().enumerate() {
        for (j, y) in pb.iter().enumerate() {
            prod[i + j] += x * y;
        }
    }
    prod[1..].iter().map(|c| -c).collect()
}

/// Stationary autoregression `phi(B) X_t = Z_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    phi: Vec<f64>,
}

impl ArModel {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if !is_stable_polynomial(&phi) {
            return Err(Error::NotStationary(format!("AR coefficients {phi:?}")));
        }
        Ok(ArModel { phi })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    /// `psi_0..psi_{count-1}` of `1 / phi(B)`.
    pub fn impulse_responses(&self, count: usize) -> Vec<f64> {
        impulse_responses(&self.phi, &[], count)
    }
}

/// Stationary and invertible `phi(B) X_t = theta(B) Z_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    phi: Vec<f64>,
    theta: Vec<f64>,
}

impl ArmaModel {
    pub fn new(phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if !is_stable_polynomial(&phi) {
            return Err(Error::NotStationary(format!("AR coefficients {phi:?}")));
        }
        if !is_stable_polynomial(&theta) {
            return Err(Error::NotStationary(format!(
                "MA coefficients {theta:?} are not invertible"
            )));
        }
        Ok(ArmaModel { phi, theta })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.phi.len(), self.theta.len())
    }

    /// `psi_0..psi_{count-1}` of `theta(B) / phi(B)`.
    pub fn impulse_responses(&self, count: usize) -> Vec<f64> {
        impulse_responses(&self.phi, &self.theta, count)
    }

    /// The AR(p+q) model with `pi(B) = phi(B) theta(B)`, whose residual
    /// autocorrelations match the ARMA fit to first order.
    pub fn ar_equivalent(&self) -> ArModel {
        ArModel {
            phi: multiply_lag_polynomials(&self.phi, &self.theta),
        }
    }
}

impl From<ArModel> for ArmaModel {
    fn from(model: ArModel) -> Self {
        ArmaModel {
            phi: model.phi,
            theta: Vec::new(),
        }
    }
}

/// Either kind of fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Ar(ArModel),
    Arma(ArmaModel),
}

impl FittedModel {
    pub fn phi(&self) -> &[f64] {
        match self {
            FittedModel::Ar(m) => m.phi(),
            FittedModel::Arma(m) => m.phi(),
        }
    }

    pub fn theta(&self) -> &[f64] {
        match self {
            FittedModel::Ar(_) => &[],
            FittedModel::Arma(m) => m.theta(),
        }
    }

    pub fn impulse_responses(&self, count: usize) -> Vec<f64> {
        impulse_responses(self.phi(), self.theta(), count)
    }

    /// AR representation used to build the diagnostic projection.
    pub fn diagnostic_ar(&self) -> ArModel {
        match self {
            FittedModel::Ar(m) => m.clone(),
            FittedModel::Arma(m) => m.ar_equivalent(),
        }
    }

    pub fn simulate(&self, innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
        simulate_filter(self.phi(), self.theta(), innovations, burn_in)
    }
}

fn impulse_responses(phi: &[f64], theta: &[f64], count: usize) -> Vec<f64> {
    let mut psi: Vec<f64> = Vec::with_capacity(count);
    for k in 0..count {
        let mut value = if k == 0 { 1.0 } else { 0.0 };
        if k >= 1 && k <= theta.len() {
            value -= theta[k - 1];
        }
        for (i, c) in phi.iter().enumerate().take(k) {
            value += c * psi[k - 1 - i];
        }
        psi.push(value);
    }
    psi
}

/// Burn-in used before keeping simulated values: `max(500, 10 (p + q))`.
pub fn default_burn_in(p: usize, q: usize) -> usize {
    500.max(10 * (p + q))
}

fn simulate_filter(phi: &[f64], theta: &[f64], innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
    if burn_in > innovations.len() {
        return Err(Error::TooShort {
            needed: burn_in,
            got: innovations.len(),
        });
    }
    let mut x = Vec::with_capacity(innovations.len());
    for (t, z) in innovations.iter().enumerate() {
        let mut value = *z;
        for (i, c) in phi.iter().enumerate() {
            if t > i {
                value += c * x[t - 1 - i];
            }
        }
        for (j, c) in theta.iter().enumerate() {
            if t > j {
                value -= c * innovations[t - 1 - j];
            }
        }
        x.push(value);
    }
    Ok(x.split_off(burn_in))
}

/// Run `X_t = sum phi_i X_{t-i} + Z_t` from zero history, dropping the first
/// `burn_in` values.
pub fn simulate_ar(model: &ArModel, innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
    simulate_filter(model.phi(), &[], innovations, burn_in)
}

/// ARMA analogue of [`simulate_ar`].
pub fn simulate_arma(model: &ArmaModel, innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
    simulate_filter(model.phi(), model.theta(), innovations, burn_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stable::{sample_stable, StableParams};
    use proptest::prelude::*;

    #[test]
    fn stationarity_check() {
        assert!(is_stable_polynomial(&[]));
        assert!(is_stable_polynomial(&[0.5]));
        assert!(!is_stable_polynomial(&[1.0]));
        assert!(!is_stable_polynomial(&[-1.2]));
        // 1 - 0.5 z - 0.25 z^2 has roots -1 +/- sqrt(5), i.e. 1.236 and -3.236
        assert!(is_stable_polynomial(&[0.5, 0.25]));
        // 1 - 0.5 z - 0.6 z^2: root near 0.94, inside the circle
        assert!(!is_stable_polynomial(&[0.5, 0.6]));
        assert!(ArModel::new(vec![1.1]).is_err());
        assert!(ArmaModel::new(vec![0.3], vec![1.5]).is_err());
    }

    #[test]
    fn shrink_reaches_region() {
        let mut c = vec![1.5, -0.4];
        shrink_into_region(&mut c);
        assert!(is_stable_polynomial(&c));
    }

    #[test]
    fn simulate_ar_examples() {
        let zero = ArModel::new(vec![0.0]).unwrap();
        let z = [0.3, -1.0, 2.0, 4.0];
        assert_eq!(simulate_ar(&zero, &z, 1).unwrap(), vec![-1.0, 2.0, 4.0]);

        let half = ArModel::new(vec![0.5]).unwrap();
        assert_eq!(
            simulate_ar(&half, &[1.0, 0.0, 0.0, 0.0], 0).unwrap(),
            vec![1.0, 0.5, 0.25, 0.125]
        );
        assert!(simulate_ar(&half, &[1.0], 3).is_err());
    }

    #[test]
    fn simulate_arma_examples() {
        let white = ArmaModel::new(vec![], vec![]).unwrap();
        assert_eq!(simulate_arma(&white, &[1.0, 2.0], 0).unwrap(), vec![1.0, 2.0]);

        let ma1 = ArmaModel::new(vec![], vec![0.4]).unwrap();
        assert_eq!(simulate_arma(&ma1, &[1.0, 0.0, 0.0], 0).unwrap(), vec![1.0, -0.4, 0.0]);

        let cancel = ArmaModel::new(vec![0.6], vec![0.6]).unwrap();
        let z = sample_stable(&StableParams::standard(1.5).unwrap(), 1500, &mut rng_from_seed(2));
        let x = simulate_arma(&cancel, &z, 500).unwrap();
        for (a, b) in x.iter().zip(&z[500..]) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn impulse_response_examples() {
        let ar1 = ArModel::new(vec![0.7]).unwrap();
        for (j, psi) in ar1.impulse_responses(10).iter().enumerate() {
            assert!((psi - 0.7f64.powi(j as i32)).abs() < 1e-14);
        }
        let ar2 = ArModel::new(vec![0.5, 0.25]).unwrap();
        assert_eq!(ar2.impulse_responses(4), vec![1.0, 0.5, 0.5, 0.375]);
        assert_eq!(ArModel::new(vec![0.0]).unwrap().impulse_responses(4), vec![1.0, 0.0, 0.0, 0.0]);
        let ma1 = ArmaModel::new(vec![], vec![0.4]).unwrap();
        assert_eq!(ma1.impulse_responses(3), vec![1.0, -0.4, 0.0]);
    }

    #[test]
    fn ar_equivalent_multiplies_polynomials() {
        // (1 - 0.5B)(1 - 0.3B) = 1 - 0.8B + 0.15B^2
        let arma = ArmaModel::new(vec![0.5], vec![0.3]).unwrap();
        let ar = arma.ar_equivalent();
        assert!((ar.phi()[0] - 0.8).abs() < 1e-15);
        assert!((ar.phi()[1] + 0.15).abs() < 1e-15);
        assert!(is_stable_polynomial(ar.phi()));
    }

    proptest! {
        #[test]
        fn impulse_recursion_holds(phi in prop::collection::vec(-0.45f64..0.45, 1..=3)) {
            prop_assume!(is_stable_polynomial(&phi));
            let model = ArModel::new(phi.clone()).unwrap();
            let psi = model.impulse_responses(25);
            prop_assert_eq!(psi[0], 1.0);
            for k in 1..25 {
                let rec: f64 = (1..=phi.len())
                    .filter(|&i| i <= k)
                    .map(|i| phi[i - 1] * psi[k - i])
                    .sum();
                prop_assert!((psi[k] - rec).abs() < 1e-15);
            }
        }

        #[test]
        fn step_down_agrees_with_companion_roots(a in -1.9f64..1.9, b in -0.99f64..0.99) {
            // AR(2) stationarity triangle: |b| < 1, b + a < 1, b - a < 1
            let expected = b.abs() < 1.0 && a + b < 1.0 && b - a < 1.0;
            prop_assert_eq!(is_stable_polynomial(&[a, b]), expected);
        }
    }
}

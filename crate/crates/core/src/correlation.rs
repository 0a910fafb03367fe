//! Sample autocorrelations, partial autocorrelations and the determinant root
//! of the autocorrelation matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |pacf| at or beyond `1 - PACF_DEGENERACY_TOL` is treated as degenerate.
pub const PACF_DEGENERACY_TOL: f64 = 1e-12;

/// Provenance of a correlation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Raw,
    MeanCorrected,
    Residual,
}

/// Choice of centering for a randomness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Mean-corrected when `alpha > 1`, raw otherwise.
    #[default]
    Auto,
    Raw,
    MeanCorrected,
}

impl Centering {
    pub fn resolve(self, alpha: f64) -> CorrelationKind {
        match self {
            Centering::Auto if alpha > 1.0 => CorrelationKind::MeanCorrected,
            Centering::Auto | Centering::Raw => CorrelationKind::Raw,
            Centering::MeanCorrected => CorrelationKind::MeanCorrected,
        }
    }
}

/// Autocorrelations at lags `1..=m` of a series of length `n`.
/// Lag 0 is implicitly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSequence {
    values: Vec<f64>,
    n: usize,
    kind: CorrelationKind,
}

impl CorrelationSequence {
    /// Wrap precomputed autocorrelations, checking `|r_k| <= 1` and `m < n`.
    pub fn new(values: Vec<f64>, n: usize, kind: CorrelationKind) -> Result<Self> {
        if values.len() >= n {
            return Err(Error::invalid(
                "m",
                format!("lag count {} must be below series length {n}", values.len()),
            ));
        }
        if let Some(k) = values.iter().position(|r| !r.is_finite() || r.abs() > 1.0) {
            return Err(Error::invalid(
                "acf",
                format!("value at lag {} is outside [-1, 1]", k + 1),
            ));
        }
        Ok(CorrelationSequence { values, n, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    /// The first `m` lags.
    pub fn truncated(&self, m: usize) -> CorrelationSequence {
        CorrelationSequence {
            values: self.values[..m.min(self.values.len())].to_vec(),
            n: self.n,
            kind: self.kind,
        }
    }
}

/// Partial autocorrelations `pi_1..pi_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacfSequence {
    values: Vec<f64>,
}

impl PacfSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }
}

fn check_lags(n: usize, m: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::invalid(
            "m",
            format!("need 1 <= m < n, got m = {m}, n = {n}"),
        ));
    }
    Ok(())
}

fn check_finite(series: &[f64]) -> Result<()> {
    match series.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Lagged cross products over a common full-sample denominator.
fn acf_of(xs: &[f64], m: usize) -> Option<Vec<f64>> {
    let denom: f64 = xs.iter().map(|x| x * x).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return None;
    }
    Some(
        (1..=m)
            .map(|k| {
                let num: f64 = xs.iter().zip(&xs[k..]).map(|(a, b)| a * b).sum();
                (num / denom).clamp(-1.0, 1.0)
            })
            .collect(),
    )
}

/// `r_k = sum_{t=1}^{n-k} X_t X_{t+k} / sum_{t=1}^{n} X_t^2`.
pub fn sample_acf(series: &[f64], m: usize) -> Result<CorrelationSequence> {
    check_lags(series.len(), m)?;
    check_finite(series)?;
    let values = acf_of(series, m)
        .ok_or_else(|| Error::Degenerate("series is identically zero".into()))?;
    Ok(CorrelationSequence {
        values,
        n: series.len(),
        kind: CorrelationKind::Raw,
    })
}

/// Autocorrelations of deviations from the sample mean.
pub fn mean_corrected_acf(series: &[f64], m: usize) -> Result<CorrelationSequence> {
    check_lags(series.len(), m)?;
    check_finite(series)?;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let values =
        acf_of(&centred, m).ok_or_else(|| Error::Degenerate("series is constant".into()))?;
    Ok(CorrelationSequence {
        values,
        n: series.len(),
        kind: CorrelationKind::MeanCorrected,
    })
}

/// Raw or mean-corrected ACF according to `kind`. `Residual` computes the raw
/// ACF and tags it as residual.
pub fn acf_with_kind(series: &[f64], m: usize, kind: CorrelationKind) -> Result<CorrelationSequence> {
    match kind {
        CorrelationKind::MeanCorrected => mean_corrected_acf(series, m),
        CorrelationKind::Raw => sample_acf(series, m),
        CorrelationKind::Residual => {
            let mut acf = sample_acf(series, m)?;
            acf.kind = CorrelationKind::Residual;
            Ok(acf)
        }
    }
}

/// Durbin-Levinson recursion from autocorrelations to partial autocorrelations.
pub fn durbin_levinson(acf: &CorrelationSequence) -> Result<PacfSequence> {
    pacf_from_values(acf.values()).map(|values| PacfSequence { values })
}

pub(crate) fn pacf_from_values(r: &[f64]) -> Result<Vec<f64>> {
    let m = r.len();
    if m == 0 {
        return Err(Error::invalid("m", "need at least one lag"));
    }
    let mut pacf = Vec::with_capacity(m);
    // phi holds the order-k prediction coefficients phi_{k,1..k}
    let mut phi: Vec<f64> = Vec::with_capacity(m);
    let mut prev: Vec<f64> = Vec::with_capacity(m);
    let mut innovation_var = 1.0;
    for k in 1..=m {
        let mut num = r[k - 1];
        for j in 1..k {
            num -= phi[j - 1] * r[k - 1 - j];
        }
        let kappa = num / innovation_var;
        if !kappa.is_finite() || kappa.abs() >= 1.0 - PACF_DEGENERACY_TOL {
            return Err(Error::NotPositiveDefinite {
                lag: k,
                value: kappa.abs(),
            });
        }
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - 1 - j];
        }
        phi.push(kappa);
        innovation_var *= 1.0 - kappa * kappa;
        pacf.push(kappa);
    }
    Ok(pacf)
}

/// `|R|^{1/m}` for the `(m+1) x (m+1)` Toeplitz matrix of lags `0..=m`,
/// evaluated as `prod_i (1 - pi_i^2)^{(m+1-i)/m}`.
pub fn det_root_via_pacf(acf: &CorrelationSequence) -> Result<f64> {
    let pacf = durbin_levinson(acf)?;
    Ok(det_root_from_pacf(pacf.values()))
}

/// `1 - |R|^{1/m}`, accurate when every correlation is small.
pub fn det_root_complement(acf: &CorrelationSequence) -> Result<f64> {
    let pacf = durbin_levinson(acf)?;
    Ok(-log_det_root(pacf.values()).exp_m1())
}

pub(crate) fn det_root_from_pacf(pacf: &[f64]) -> f64 {
    log_det_root(pacf).exp()
}

fn log_det_root(pacf: &[f64]) -> f64 {
    let m = pacf.len() as f64;
    pacf.iter()
        .enumerate()
        .map(|(i, p)| (m - i as f64) / m * (-p * p).ln_1p())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn toeplitz_det_root(r: &[f64]) -> f64 {
        let m = r.len();
        let full: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
        let mat = DMatrix::from_fn(m + 1, m + 1, |i, j| full[i.abs_diff(j)]);
        mat.determinant().powf(1.0 / m as f64)
    }

    fn seq(values: Vec<f64>, n: usize) -> CorrelationSequence {
        CorrelationSequence::new(values, n, CorrelationKind::Raw).unwrap()
    }

    #[test]
    fn acf_hand_examples() {
        let acf = sample_acf(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert!((acf.values()[0] - 20.0 / 30.0).abs() < 1e-15);
        assert_eq!(acf.kind(), CorrelationKind::Raw);

        let n = 7;
        let acf = sample_acf(&vec![2.5; n], 1).unwrap();
        assert!((acf.values()[0] - (n as f64 - 1.0) / n as f64).abs() < 1e-15);

        let mc = mean_corrected_acf(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert!((mc.values()[0] - 0.25).abs() < 1e-15);
        assert_eq!(mc.kind(), CorrelationKind::MeanCorrected);
    }

    #[test]
    fn acf_errors() {
        assert!(matches!(sample_acf(&[0.0; 5], 1), Err(Error::Degenerate(_))));
        assert!(sample_acf(&[1.0, 2.0], 2).is_err());
        assert!(sample_acf(&[1.0, 2.0], 0).is_err());
        assert!(matches!(mean_corrected_acf(&[3.0; 5], 2), Err(Error::Degenerate(_))));
        assert!(matches!(
            sample_acf(&[1.0, f64::NAN, 2.0], 1),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn zero_mean_series_gives_identical_acfs() {
        let xs = [1.0, -2.0, 0.5, 3.0, -1.5, -1.0];
        let a = sample_acf(&xs, 3).unwrap();
        let b = mean_corrected_acf(&xs, 3).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn pacf_examples() {
        let p = durbin_levinson(&seq(vec![0.4], 10)).unwrap();
        assert_eq!(p.values(), &[0.4]);

        let p = durbin_levinson(&seq(vec![0.5, 0.3], 10)).unwrap();
        assert!((p.values()[1] - 1.0 / 15.0).abs() < 1e-15);

        let phi: f64 = 0.7;
        let r: Vec<f64> = (1..=8).map(|k| phi.powi(k)).collect();
        let p = durbin_levinson(&seq(r, 100)).unwrap();
        assert!((p.values()[0] - phi).abs() < 1e-12);
        for v in &p.values()[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn ar2_theoretical_pacf_vanishes_beyond_order() {
        let (p1, p2) = (0.5, 0.3);
        let mut r = vec![p1 / (1.0 - p2)];
        r.push(p1 * r[0] + p2);
        for k in 2..10 {
            let next = p1 * r[k - 1] + p2 * r[k - 2];
            r.push(next);
        }
        let pacf = durbin_levinson(&seq(r, 100)).unwrap();
        assert!((pacf.values()[1] - p2).abs() < 1e-12);
        for v in &pacf.values()[2..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_pacf_is_an_error() {
        let err = durbin_levinson(&seq(vec![1.0, 1.0], 10)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { lag: 1, .. }));
        // r = (0.9, 0.2) violates positive definiteness at lag 2
        assert!(durbin_levinson(&seq(vec![0.9, 0.2], 10)).is_err());
    }

    #[test]
    fn det_root_examples() {
        assert_eq!(det_root_via_pacf(&seq(vec![0.0; 4], 10)).unwrap(), 1.0);
        let v = det_root_via_pacf(&seq(vec![0.5], 10)).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        assert!((v - toeplitz_det_root(&[0.5])).abs() < 1e-12);
    }

    fn valid_pacf(max_m: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-0.95f64..0.95, 1..=max_m)
    }

    /// Inverse Durbin-Levinson: autocorrelations implied by a PACF.
    fn acf_from_pacf(pacf: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = Vec::new();
        let mut phi: Vec<f64> = Vec::new();
        let mut var = 1.0;
        for (k, &kappa) in pacf.iter().enumerate() {
            let k = k + 1;
            let pred: f64 = (1..k).map(|j| phi[j - 1] * r[k - 1 - j]).sum();
            r.push(pred + kappa * var);
            let prev = phi.clone();
            for j in 1..k {
                phi[j - 1] = prev[j - 1] - kappa * prev[k - 1 - j];
            }
            phi.push(kappa);
            var *= 1.0 - kappa * kappa;
        }
        r
    }

    proptest! {
        #[test]
        fn product_identity_matches_dense_determinant(pacf in valid_pacf(8)) {
            let r = acf_from_pacf(&pacf);
            let acf = seq(r.clone(), 1000);
            let fast = det_root_via_pacf(&acf).unwrap();
            let dense = toeplitz_det_root(&r);
            prop_assert!((fast - dense).abs() < 1e-10, "fast {} dense {}", fast, dense);
            prop_assert!(fast > 0.0 && fast <= 1.0);
        }

        #[test]
        fn recovered_pacf_round_trips(pacf in valid_pacf(8)) {
            let r = acf_from_pacf(&pacf);
            let back = durbin_levinson(&seq(r, 1000)).unwrap();
            for (a, b) in back.values().iter().zip(&pacf) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn acf_scale_and_shift_invariance(
            xs in prop::collection::vec(-100.0f64..100.0, 12..40),
            scale in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
            shift in -1e3f64..1e3,
        ) {
            let m = 4;
            if let (Ok(a), Ok(b)) = (sample_acf(&xs, m), mean_corrected_acf(&xs, m)) {
                let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
                let a2 = sample_acf(&scaled, m).unwrap();
                let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
                let b2 = mean_corrected_acf(&shifted, m).unwrap();
                for k in 0..m {
                    prop_assert!((a.values()[k] - a2.values()[k]).abs() < 1e-10);
                    prop_assert!((b.values()[k] - b2.values()[k]).abs() < 1e-6);
                    prop_assert!(a.values()[k].abs() <= 1.0);
                }
            }
        }
    }
}

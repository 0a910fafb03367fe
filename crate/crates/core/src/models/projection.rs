use nalgebra::DMatrix;

use super::ArModel;
use crate::error::{Error, Result};

/// Impulse-response design `X` and the projections `Q = X (X'X)^{-1} X'`
/// and `1 - Q` acting on the first `m` residual autocorrelations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticProjection {
    design: DMatrix<f64>,
    q: DMatrix<f64>,
    complement: DMatrix<f64>,
}

impl DiagnosticProjection {
    /// The `m x p` matrix with `X[i][j] = psi_{i-j}` (zero above the diagonal).
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    /// Number of fitted parameters, the rank of `Q`.
    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// A projection with no estimated parameters: `Q = 0`.
    pub fn identity(m: usize) -> Self {
        DiagnosticProjection {
            design: DMatrix::zeros(m, 0),
            q: DMatrix::zeros(m, m),
            complement: DMatrix::identity(m, m),
        }
    }
}

/// Build `X`, `Q` and `1 - Q` for an AR(p) model at `m` lags. For ARMA fits
/// pass the AR(p+q) representation from
/// [`FittedModel::diagnostic_ar`](super::FittedModel::diagnostic_ar).
pub fn diagnostic_projection(model: &ArModel, m: usize) -> Result<DiagnosticProjection> {
    let p = model.order();
    if m <= p {
        return Err(Error::invalid("m", format!("need m > p, got m = {m}, p = {p}")));
    }
    if p == 0 {
        return Ok(DiagnosticProjection::identity(m));
    }
    let psi = model.impulse_responses(m);
    let design = DMatrix::from_fn(m, p, |i, j| if i >= j { psi[i - j] } else { 0.0 });
    let gram = design.transpose() * &design;
    // unit diagonal band gives full column rank
    let chol = gram
        .cholesky()
        .expect("impulse-response design has full column rank");
    let q = &design * chol.solve(&design.transpose());
    let q = (&q + q.transpose()) * 0.5;
    let complement = DMatrix::identity(m, m) - &q;
    Ok(DiagnosticProjection {
        design,
        q,
        complement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_fit() {
        let proj = diagnostic_projection(&ArModel::new(vec![0.0]).unwrap(), 6).unwrap();
        let mut expected = DMatrix::zeros(6, 6);
        expected[(0, 0)] = 1.0;
        assert!((proj.q() - expected).abs().max() < 1e-15);
        assert!((proj.complement().trace() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ar1_projection_algebra() {
        let proj = diagnostic_projection(&ArModel::new(vec![0.5]).unwrap(), 5).unwrap();
        assert!((proj.q().trace() - 1.0).abs() < 1e-10);
        let c = proj.complement();
        assert!((c * c - c).abs().max() < 1e-10);
        assert!((proj.q() - proj.q().transpose()).abs().max() < 1e-15);
        assert_eq!(proj.design()[(2, 0)], 0.25);
        assert_eq!(proj.p(), 1);
        assert_eq!(proj.m(), 5);
    }

    #[test]
    fn ar2_design_is_banded() {
        let proj = diagnostic_projection(&ArModel::new(vec![0.5, 0.25]).unwrap(), 4).unwrap();
        let x = proj.design();
        assert_eq!(x[(0, 1)], 0.0);
        assert_eq!(x[(1, 1)], 1.0);
        assert_eq!(x[(3, 1)], 0.5);
        assert_eq!(x[(3, 0)], 0.375);
        assert!((proj.complement().trace() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn requires_more_lags_than_parameters() {
        assert!(diagnostic_projection(&ArModel::new(vec![0.1, 0.1]).unwrap(), 2).is_err());
        let proj = diagnostic_projection(&ArModel::new(vec![]).unwrap(), 3).unwrap();
        assert_eq!(proj.q().abs().max(), 0.0);
    }
}

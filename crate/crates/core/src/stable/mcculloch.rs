//! McCulloch (1986) quantile estimator of the stability index and skewness.
//!
//! The tables map `nu_alpha = (x95 - x05) / (x75 - x25)` and
//! `nu_beta = (x95 + x05 - 2 x50) / (x95 - x05)` onto `(alpha, beta)`.
//! Values were transcribed from the published tables as distributed with
//! SciPy's `levy_stable` start-value routine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest series accepted by [`estimate_mcculloch`].
pub const MIN_ESTIMATION_LENGTH: usize = 50;

const NU_ALPHA_GRID: [f64; 15] = [
    2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 25.0,
];
const NU_BETA_GRID: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];

// rows: NU_ALPHA_GRID, columns: NU_BETA_GRID
const ALPHA_TABLE: [[f64; 7]; 15] = [
    [2.000, 2.000, 2.000, 2.000, 2.000, 2.000, 2.000],
    [1.916, 1.924, 1.924, 1.924, 1.924, 1.924, 1.924],
    [1.808, 1.813, 1.829, 1.829, 1.829, 1.829, 1.829],
    [1.729, 1.730, 1.737, 1.745, 1.745, 1.745, 1.745],
    [1.664, 1.663, 1.663, 1.668, 1.676, 1.676, 1.676],
    [1.563, 1.560, 1.553, 1.548, 1.547, 1.547, 1.547],
    [1.484, 1.480, 1.471, 1.460, 1.448, 1.438, 1.438],
    [1.391, 1.386, 1.378, 1.364, 1.337, 1.318, 1.318],
    [1.279, 1.273, 1.266, 1.250, 1.210, 1.184, 1.150],
    [1.128, 1.121, 1.114, 1.101, 1.067, 1.027, 0.973],
    [1.029, 1.021, 1.014, 1.004, 0.974, 0.935, 0.874],
    [0.896, 0.892, 0.884, 0.883, 0.855, 0.823, 0.769],
    [0.818, 0.812, 0.806, 0.801, 0.780, 0.756, 0.691],
    [0.698, 0.695, 0.692, 0.689, 0.676, 0.656, 0.597],
    [0.593, 0.590, 0.588, 0.586, 0.579, 0.563, 0.513],
];

// Entries above 1 are outside the admissible region; results are clamped.
const BETA_TABLE: [[f64; 7]; 15] = [
    [0.0, 2.160, 1.000, 1.000, 1.000, 1.000, 1.000],
    [0.0, 1.592, 3.390, 1.000, 1.000, 1.000, 1.000],
    [0.0, 0.759, 1.800, 1.000, 1.000, 1.000, 1.000],
    [0.0, 0.482, 1.048, 1.694, 1.000, 1.000, 1.000],
    [0.0, 0.360, 0.760, 1.232, 2.229, 1.000, 1.000],
    [0.0, 0.253, 0.518, 0.823, 1.575, 1.000, 1.000],
    [0.0, 0.203, 0.410, 0.632, 1.244, 1.906, 1.000],
    [0.0, 0.165, 0.332, 0.499, 0.943, 1.560, 1.000],
    [0.0, 0.136, 0.271, 0.404, 0.689, 1.230, 2.195],
    [0.0, 0.109, 0.216, 0.323, 0.539, 0.827, 1.917],
    [0.0, 0.096, 0.190, 0.284, 0.472, 0.693, 1.759],
    [0.0, 0.082, 0.163, 0.243, 0.412, 0.601, 1.596],
    [0.0, 0.074, 0.147, 0.220, 0.377, 0.546, 1.482],
    [0.0, 0.064, 0.128, 0.191, 0.330, 0.478, 1.362],
    [0.0, 0.056, 0.112, 0.167, 0.285, 0.428, 1.274],
];

/// Result of the quantile estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// Sample quantiles at 5%, 25%, 50%, 75% and 95%.
    pub quantiles_used: [f64; 5],
    pub nu_alpha: f64,
    pub nu_beta: f64,
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and nonempty.
pub fn type7_quantile(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn bracket(grid: &[f64], x: f64) -> (usize, f64) {
    let x = x.clamp(grid[0], grid[grid.len() - 1]);
    let upper = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let lower = upper - 1;
    let frac = (x - grid[lower]) / (grid[upper] - grid[lower]);
    (lower, frac)
}

fn bilinear(table: &[[f64; 7]; 15], nu_alpha: f64, nu_beta: f64) -> f64 {
    let (i, fa) = bracket(&NU_ALPHA_GRID, nu_alpha);
    let (j, fb) = bracket(&NU_BETA_GRID, nu_beta);
    let low = table[i][j] * (1.0 - fb) + table[i][j + 1] * fb;
    let high = table[i + 1][j] * (1.0 - fb) + table[i + 1][j + 1] * fb;
    low * (1.0 - fa) + high * fa
}

/// Estimate `(alpha, beta)` from five sample quantiles.
///
/// `nu_alpha` is clamped into the tabulated range, so light-tailed input maps
/// to `alpha_hat = 2` and extremely heavy tails bottom out near 0.5.
pub fn estimate_mcculloch(series: &[f64]) -> Result<StableEstimate> {
    if series.len() < MIN_ESTIMATION_LENGTH {
        return Err(Error::TooShort {
            needed: MIN_ESTIMATION_LENGTH,
            got: series.len(),
        });
    }
    if let Some(index) = series.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = [0.05, 0.25, 0.5, 0.75, 0.95].map(|p| type7_quantile(&sorted, p));
    let [q05, q25, q50, q75, q95] = q;
    let iqr = q75 - q25;
    if iqr <= 0.0 {
        return Err(Error::Degenerate("interquartile range is zero".into()));
    }
    let spread = q95 - q05;
    let nu_alpha = spread / iqr;
    let nu_beta = (q95 + q05 - 2.0 * q50) / spread;

    let magnitude = nu_beta.abs();
    let alpha_hat = bilinear(&ALPHA_TABLE, nu_alpha, magnitude).clamp(0.5, 2.0);
    let beta_hat = (nu_beta.signum() * bilinear(&BETA_TABLE, nu_alpha, magnitude)).clamp(-1.0, 1.0);
    Ok(StableEstimate {
        alpha_hat,
        beta_hat: if nu_beta == 0.0 { 0.0 } else { beta_hat },
        quantiles_used: q,
        nu_alpha,
        nu_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stable::{sample_stable, StableParams};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn type7_matches_hand_values() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(type7_quantile(&xs, 0.0), 1.0);
        assert_eq!(type7_quantile(&xs, 1.0), 4.0);
        assert!((type7_quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
        // h = 3 * 0.25 = 0.75
        assert!((type7_quantile(&xs, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn table_nodes_are_reproduced() {
        assert_eq!(bilinear(&ALPHA_TABLE, 3.0, 0.0), 1.563);
        assert_eq!(bilinear(&ALPHA_TABLE, 25.0, 1.0), 0.513);
        assert!((bilinear(&ALPHA_TABLE, 2.9, 0.0) - 0.5 * (1.664 + 1.563)).abs() < 1e-12);
        // clamping outside the grid
        assert_eq!(bilinear(&ALPHA_TABLE, 1.0, 0.0), 2.0);
        assert_eq!(bilinear(&ALPHA_TABLE, 100.0, 0.0), 0.593);
    }

    #[test]
    fn rejects_short_and_constant() {
        assert!(matches!(
            estimate_mcculloch(&[1.0; 10]),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            estimate_mcculloch(&[2.5; 200]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn symmetric_input_gives_zero_beta() {
        let p = StableParams::standard(1.4).unwrap();
        let half = sample_stable(&p, 500, &mut rng_from_seed(5));
        let mut xs: Vec<f64> = half.iter().map(|x| x.abs()).collect();
        xs.extend(half.iter().map(|x| -x.abs()));
        let est = estimate_mcculloch(&xs).unwrap();
        assert!(est.beta_hat.abs() < 1e-12, "beta_hat = {}", est.beta_hat);
    }

    #[test]
    fn normal_quantiles_hit_alpha_two() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        let est = estimate_mcculloch(&xs).unwrap();
        assert!((est.nu_alpha - 2.439).abs() < 0.01, "nu_alpha = {}", est.nu_alpha);
        assert!((est.alpha_hat - 2.0).abs() < 1e-2, "alpha_hat = {}", est.alpha_hat);

        let gauss = sample_stable(&StableParams::standard(2.0).unwrap(), n, &mut rng_from_seed(9));
        assert!(estimate_mcculloch(&gauss).unwrap().alpha_hat > 1.9);
    }

    #[test]
    fn location_scale_invariance() {
        let p = StableParams::new(1.3, 1.0, 0.3, 0.0).unwrap();
        let xs = sample_stable(&p, 2000, &mut rng_from_seed(21));
        let base = estimate_mcculloch(&xs).unwrap();
        for &(a, b) in &[(3.5, -2.0), (0.01, 100.0), (1e4, 0.5)] {
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let est = estimate_mcculloch(&ys).unwrap();
            assert!((est.alpha_hat - base.alpha_hat).abs() < 1e-9);
            assert!((est.beta_hat - base.beta_hat).abs() < 1e-9);
        }
    }
}

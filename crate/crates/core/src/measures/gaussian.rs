use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest tolerated `|Σᵢⱼ − Σⱼᵢ|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A multivariate normal `N(μ, Σ)` with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianRepr", into = "GaussianRepr")]
pub struct GaussianSpec {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianRepr {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::InvalidParameter("Gaussian mean must be non-empty".into()));
        }
        if covariance.nrows() != m || covariance.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: covariance.nrows() });
        }
        if let Some((i, v)) = mean.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: i, value: *v });
        }
        for i in 0..m {
            for j in 0..i {
                let d = (covariance[(i, j)] - covariance[(j, i)]).abs();
                if !(d <= SYMMETRY_TOL) {
                    return Err(Error::NotPositiveDefinite(format!(
                        "covariance asymmetric at ({i}, {j}): |Σij − Σji| = {d:e}"
                    )));
                }
            }
        }
        let chol = Cholesky::new(covariance.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky factorization of covariance failed".into())
        })?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let precision = chol.inverse();
        Ok(Self { mean: DVector::from_vec(mean), covariance, chol_lower, precision, log_det })
    }

    /// `N(μ, diag(variances))`.
    pub fn diagonal(mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        Self::new(mean, DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], DMatrix::identity(dim, dim))
    }

    /// One-dimensional `N(mean, variance)`.
    pub fn univariate(mean: f64, variance: f64) -> Result<Self> {
        Self::diagonal(vec![mean], &[variance])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `log |Σ|`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let m = self.dim();
        if x.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: x.len() });
        }
        let centered = DVector::from_iterator(m, x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let z = self
            .chol_lower
            .solve_lower_triangular(&centered)
            .expect("Cholesky factor has a positive diagonal");
        Ok(-0.5 * (m as f64 * LN_2PI + self.log_det + z.norm_squared()))
    }

    /// Writes one draw `μ + L z`, `z ~ N(0, I)`, into `out`.
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        let m = self.dim();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..m {
            let mut acc = self.mean[i];
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += self.chol_lower[(i, k)] * zk;
            }
            out[i] = acc;
        }
    }
}

impl TryFrom<GaussianRepr> for GaussianSpec {
    type Error = Error;

    fn try_from(r: GaussianRepr) -> Result<Self> {
        let m = r.mean.len();
        if r.covariance.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: r.covariance.len() });
        }
        if let Some(row) = r.covariance.iter().find(|row| row.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: row.len() });
        }
        let cov = DMatrix::from_fn(m, m, |i, j| r.covariance[i][j]);
        Self::new(r.mean, cov)
    }
}

impl From<GaussianSpec> for GaussianRepr {
    fn from(g: GaussianSpec) -> Self {
        let m = g.dim();
        GaussianRepr {
            mean: g.mean.iter().copied().collect(),
            covariance: (0..m).map(|i| (0..m).map(|j| g.covariance[(i, j)]).collect()).collect(),
        }
    }
}

/// Cholesky factorization that reports failure instead of panicking.
pub(crate) fn try_cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Cholesky::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_normalizer() {
        let g = GaussianSpec::standard(1).unwrap();
        let v = g.log_density(&[0.0]).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn translation_symmetry() {
        let shifted = GaussianSpec::univariate(1.0, 1.0).unwrap();
        let std = GaussianSpec::standard(1).unwrap();
        let d = shifted.log_density(&[1.0]).unwrap() - std.log_density(&[0.0]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GaussianSpec::new(vec![0.0, 0.0], indefinite),
            Err(Error::NotPositiveDefinite(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1 + 1e-9, 1.0]);
        assert!(matches!(GaussianSpec::new(vec![0.0, 0.0], asym), Err(Error::NotPositiveDefinite(_))));
        let zero = DMatrix::zeros(1, 1);
        assert!(GaussianSpec::new(vec![0.0], zero).is_err());
    }

    #[test]
    fn correlated_density_matches_bivariate_formula() {
        let rho: f64 = 0.6;
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let g = GaussianSpec::new(vec![0.0, 0.0], cov).unwrap();
        let (x, y) = (0.3, -1.1);
        let q = (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho);
        let expected = -LN_2PI - 0.5 * (1.0 - rho * rho).ln() - 0.5 * q;
        assert!((g.log_density(&[x, y]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn json_schema() {
        let g: GaussianSpec =
            serde_json::from_str(r#"{"mean":[1.0,2.0],"covariance":[[2.0,0.5],[0.5,1.0]]}"#).unwrap();
        assert_eq!(g.dim(), 2);
        let back: GaussianSpec = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<GaussianSpec>(r#"{"mean":[1.0],"covariance":[[1.0,0.0]]}"#).is_err());
    }
}

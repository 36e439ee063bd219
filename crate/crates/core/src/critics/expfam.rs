use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_input, check_upstream, Critic};
use crate::{Error, Result};

/// Inputs to the Beta statistic are clamped to `[BETA_CLAMP, 1 − BETA_CLAMP]`.
pub const BETA_CLAMP: f64 = 1e-12;

/// Named sufficient statistics `T: ℝ^m → ℝ^{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficientStatistic {
    /// `(ln x₁, ln(1−x₁), …, ln x_m, ln(1−x_m))`
    Beta,
    /// `(x₁, x₁², …, x_m, x_m²)`
    Gaussian,
}

impl SufficientStatistic {
    pub fn output_dim(self, input_dim: usize) -> usize {
        2 * input_dim
    }

    #[inline]
    fn eval_coord(self, x: f64) -> [f64; 2] {
        match self {
            Self::Beta => {
                let c = x.clamp(BETA_CLAMP, 1.0 - BETA_CLAMP);
                [c.ln(), (-c).ln_1p()]
            }
            Self::Gaussian => [x, x * x],
        }
    }

    pub fn eval(self, x: &[f64]) -> Vec<f64> {
        x.iter().flat_map(|&v| self.eval_coord(v)).collect()
    }
}

/// The linear critic `φ(x) = Δκ · T(x)`.
///
/// The constant offset of the log-likelihood ratio is left out: the objective
/// is invariant under shifts of the critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpFamRepr", into = "ExpFamRepr")]
pub struct ExpFamCritic {
    statistic: SufficientStatistic,
    input_dim: usize,
    delta_kappa: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpFamRepr {
    statistic: SufficientStatistic,
    input_dim: usize,
    delta_kappa: Vec<f64>,
}

impl ExpFamCritic {
    pub fn new(statistic: SufficientStatistic, input_dim: usize, delta_kappa: Vec<f64>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter("statistic input dimension must be positive".into()));
        }
        let k = input_dim
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidParameter(format!("statistic input dimension {input_dim} is too large")))?;
        if delta_kappa.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: delta_kappa.len() });
        }
        if let Some((i, v)) = delta_kappa.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: i, value: *v });
        }
        Ok(Self { statistic, input_dim, delta_kappa })
    }

    pub fn zeros(statistic: SufficientStatistic, input_dim: usize) -> Result<Self> {
        Self::new(statistic, input_dim, vec![0.0; statistic.output_dim(input_dim)])
    }

    pub fn statistic(&self) -> SufficientStatistic {
        self.statistic
    }

    pub fn delta_kappa(&self) -> &[f64] {
        &self.delta_kappa
    }
}

impl Critic for ExpFamCritic {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn params(&self) -> &[f64] {
        &self.delta_kappa
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.delta_kappa
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        check_input(self.input_dim, &x)?;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .zip(self.delta_kappa.chunks_exact(2))
                    .map(|(&v, k)| {
                        let [t0, t1] = self.statistic.eval_coord(v);
                        k[0] * t0 + k[1] * t1
                    })
                    .sum()
            })
            .collect())
    }

    fn backward_accumulate(&self, x: ArrayView2<'_, f64>, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        check_input(self.input_dim, &x)?;
        check_upstream(&x, upstream)?;
        if grad.len() != self.delta_kappa.len() {
            return Err(Error::DimensionMismatch { expected: self.delta_kappa.len(), found: grad.len() });
        }
        for (row, &u) in x.rows().into_iter().zip(upstream) {
            if u == 0.0 {
                continue;
            }
            for (&v, g) in row.iter().zip(grad.chunks_exact_mut(2)) {
                let [t0, t1] = self.statistic.eval_coord(v);
                g[0] += u * t0;
                g[1] += u * t1;
            }
        }
        Ok(())
    }
}

impl TryFrom<ExpFamRepr> for ExpFamCritic {
    type Error = Error;

    fn try_from(r: ExpFamRepr) -> Result<Self> {
        Self::new(r.statistic, r.input_dim, r.delta_kappa)
    }
}

impl From<ExpFamCritic> for ExpFamRepr {
    fn from(c: ExpFamCritic) -> Self {
        ExpFamRepr { statistic: c.statistic, input_dim: c.input_dim, delta_kappa: c.delta_kappa }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn beta_statistic_hand_value() {
        let c = ExpFamCritic::new(SufficientStatistic::Beta, 1, vec![1.0, 1.0]).unwrap();
        let v = c.forward(array![[0.5]].view()).unwrap()[0];
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn boundary_samples_are_clamped() {
        let c = ExpFamCritic::new(SufficientStatistic::Beta, 1, vec![1.0, 1.0]).unwrap();
        let v = c.forward(array![[0.0], [1.0]].view()).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!((v[0] - BETA_CLAMP.ln()).abs() < 1e-9);
    }

    #[test]
    fn linear_in_delta_kappa() {
        // Dyadic inputs keep every product exact, so equality is bitwise.
        let x = array![[0.25, 0.75], [1.5, -0.125], [0.5, 0.5]];
        let k1 = vec![0.375, -1.25, 2.0, 0.25];
        let k2 = vec![-0.5, 0.75, 0.125, 1.5];
        let sum: Vec<f64> = k1.iter().zip(&k2).map(|(a, b)| a + b).collect();
        let f = |k: Vec<f64>| ExpFamCritic::new(SufficientStatistic::Gaussian, 2, k).unwrap().forward(x.view()).unwrap();
        let lhs = f(sum);
        let rhs = f(k1) + f(k2);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn gradient_is_weighted_statistic_sum() {
        let c = ExpFamCritic::zeros(SufficientStatistic::Gaussian, 1).unwrap();
        let g = c.backward(array![[2.0], [-1.0]].view(), &[0.5, 2.0]).unwrap();
        assert_eq!(g.values, vec![0.5 * 2.0 + 2.0 * -1.0, 0.5 * 4.0 + 2.0 * 1.0]);
    }

    #[test]
    fn length_checked() {
        assert!(ExpFamCritic::new(SufficientStatistic::Beta, 2, vec![1.0; 3]).is_err());
        assert!(ExpFamCritic::new(SufficientStatistic::Beta, 0, vec![]).is_err());
    }
}

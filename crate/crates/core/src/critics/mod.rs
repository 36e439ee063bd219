//! Parameterized critic families.
//!
//! Parameters live in one flat `Vec<f64>` per critic; gradients share that
//! layout, which keeps the optimizer and clipping agnostic to architecture.

mod expfam;
mod mlp;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

pub use expfam::{ExpFamCritic, SufficientStatistic, BETA_CLAMP};
pub use mlp::{init_mlp, MlpCritic};

use crate::{Error, Result};

/// Gradient of a weighted output sum, laid out like the critic's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub values: Vec<f64>,
}

impl ParamGradient {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A real-valued function on `ℝ^m` with parameter gradients.
pub trait Critic {
    fn input_dim(&self) -> usize;

    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    fn num_params(&self) -> usize {
        self.params().len()
    }

    /// `φ(xᵢ)` for every row of `x`.
    fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>>;

    /// Adds `Σᵢ upstreamᵢ · ∂φ(xᵢ)/∂θ` into `grad`.
    fn backward_accumulate(&self, x: ArrayView2<'_, f64>, upstream: &[f64], grad: &mut [f64]) -> Result<()>;

    /// `Σᵢ upstreamᵢ · ∂φ(xᵢ)/∂θ`.
    fn backward(&self, x: ArrayView2<'_, f64>, upstream: &[f64]) -> Result<ParamGradient> {
        let mut grad = ParamGradient::zeros(self.num_params());
        self.backward_accumulate(x, upstream, &mut grad.values)?;
        Ok(grad)
    }

    /// Projects every parameter onto `[−bound, bound]`.
    fn clip_params(&mut self, bound: f64) {
        for p in self.params_mut() {
            *p = p.clamp(-bound, bound);
        }
    }
}

pub(crate) fn check_input(expected: usize, x: &ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, found: x.ncols() });
    }
    Ok(())
}

pub(crate) fn check_upstream(x: &ArrayView2<'_, f64>, upstream: &[f64]) -> Result<()> {
    if upstream.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: upstream.len() });
    }
    Ok(())
}

/// Either critic family, with a JSON checkpoint layout:
///
/// ```json
/// {"kind": "mlp", "layer_dims": [1, 32, 1], "params": [...], "param_bound": null}
/// {"kind": "exp_fam", "statistic": "beta", "input_dim": 5, "delta_kappa": [...]}
/// ```
///
/// MLP parameters are stored layer by layer, each as the `out × in` weight
/// matrix in row-major order followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyCritic {
    Mlp(MlpCritic),
    ExpFam(ExpFamCritic),
}

impl AnyCritic {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn param_bound(&self) -> Option<f64> {
        match self {
            Self::Mlp(m) => m.param_bound(),
            Self::ExpFam(_) => None,
        }
    }
}

impl Critic for AnyCritic {
    fn input_dim(&self) -> usize {
        match self {
            Self::Mlp(c) => c.input_dim(),
            Self::ExpFam(c) => c.input_dim(),
        }
    }

    fn params(&self) -> &[f64] {
        match self {
            Self::Mlp(c) => c.params(),
            Self::ExpFam(c) => c.params(),
        }
    }

    fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Self::Mlp(c) => c.params_mut(),
            Self::ExpFam(c) => c.params_mut(),
        }
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        match self {
            Self::Mlp(c) => c.forward(x),
            Self::ExpFam(c) => c.forward(x),
        }
    }

    fn backward_accumulate(&self, x: ArrayView2<'_, f64>, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        match self {
            Self::Mlp(c) => c.backward_accumulate(x, upstream, grad),
            Self::ExpFam(c) => c.backward_accumulate(x, upstream, grad),
        }
    }
}

impl From<MlpCritic> for AnyCritic {
    fn from(c: MlpCritic) -> Self {
        Self::Mlp(c)
    }
}

impl From<ExpFamCritic> for AnyCritic {
    fn from(c: ExpFamCritic) -> Self {
        Self::ExpFam(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let mlp: AnyCritic = init_mlp(&[3, 4, 1], 5).unwrap().into();
        let back = AnyCritic::from_checkpoint_json(&mlp.to_checkpoint_json().unwrap()).unwrap();
        assert_eq!(back, mlp);
        let ef: AnyCritic = ExpFamCritic::new(SufficientStatistic::Beta, 2, vec![0.5, -1.0, 2.0, 0.0]).unwrap().into();
        let back = AnyCritic::from_checkpoint_json(&ef.to_checkpoint_json().unwrap()).unwrap();
        assert_eq!(back, ef);
    }

    #[test]
    fn checkpoint_rejects_inconsistent_layouts() {
        for bad in [
            r#"{"kind":"mlp","layer_dims":[1,2,1],"params":[0.0],"param_bound":null}"#,
            r#"{"kind":"mlp","layer_dims":[1,2,3],"params":[0,0,0,0,0,0,0,0,0,0,0,0,0],"param_bound":null}"#,
            r#"{"kind":"mlp","layer_dims":[1],"params":[],"param_bound":null}"#,
            r#"{"kind":"mlp","layer_dims":[1,1],"params":[0.0,0.0],"param_bound":-1.0}"#,
            r#"{"kind":"exp_fam","statistic":"beta","input_dim":2,"delta_kappa":[1.0]}"#,
            r#"{"kind":"exp_fam","statistic":"poisson","input_dim":1,"delta_kappa":[1.0]}"#,
        ] {
            assert!(AnyCritic::from_checkpoint_json(bad).is_err(), "{bad}");
        }
    }
}

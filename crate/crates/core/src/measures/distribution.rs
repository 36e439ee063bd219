use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BetaProductSpec, EmbeddingSpec, GaussianSpec};
use crate::rng::{stream, Purpose, RNG_ALGORITHM};
use crate::{Error, Result};

/// Reference probability measures.
///
/// JSON form is internally tagged by `"kind"`:
///
/// ```json
/// {"kind": "gaussian", "mean": [0.0], "covariance": [[1.0]]}
/// {"kind": "beta_product", "a": [2.0, 2.0], "b": [2.0, 5.0]}
/// {"kind": "pushforward", "base": {...}, "embedding": {"input_dim": 4, "output_dim": 50, "seed": 1}}
/// {"kind": "joint_correlated_gaussian", "dim": 5, "rho": 0.5}
/// {"kind": "product_of_marginals", "dim": 5, "rho": 0.5}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian(GaussianSpec),
    BetaProduct(BetaProductSpec),
    Pushforward(Pushforward),
    /// `(X, Y)` with `X, Y ~ N(0, I_dim)` and `Corr(Xᵢ, Yᵢ) = ρ`, other pairs independent.
    JointCorrelatedGaussian(CorrelatedGaussian),
    /// `P_X × P_Y` for the matching joint law, i.e. `N(0, I_{2·dim})`.
    ProductOfMarginals(CorrelatedGaussian),
}

/// The law of `h(X)` for `X ~ base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PushforwardRepr", into = "PushforwardRepr")]
pub struct Pushforward {
    base: Box<Distribution>,
    embedding: EmbeddingSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PushforwardRepr {
    base: Box<Distribution>,
    embedding: EmbeddingSpec,
}

impl Pushforward {
    pub fn new(base: Distribution, embedding: EmbeddingSpec) -> Result<Self> {
        if base.dim() != embedding.input_dim() {
            return Err(Error::DimensionMismatch { expected: embedding.input_dim(), found: base.dim() });
        }
        Ok(Self { base: Box::new(base), embedding })
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn embedding(&self) -> &EmbeddingSpec {
        &self.embedding
    }
}

impl TryFrom<PushforwardRepr> for Pushforward {
    type Error = Error;

    fn try_from(r: PushforwardRepr) -> Result<Self> {
        Self::new(*r.base, r.embedding)
    }
}

impl From<Pushforward> for PushforwardRepr {
    fn from(p: Pushforward) -> Self {
        PushforwardRepr { base: p.base, embedding: p.embedding }
    }
}

/// Block dimension and component-wise correlation of a correlated Gaussian pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelatedRepr", into = "CorrelatedRepr")]
pub struct CorrelatedGaussian {
    dim: usize,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelatedRepr {
    dim: usize,
    rho: f64,
}

impl CorrelatedGaussian {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("correlated Gaussian block dimension must be positive".into()));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("correlation must lie in (-1, 1), got {rho}")));
        }
        Ok(Self { dim, rho })
    }

    /// Dimension of each of the two blocks.
    pub fn block_dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Covariance of `(X, Y)`: `[[I, ρI], [ρI, I]]`.
    pub fn joint_spec(&self) -> GaussianSpec {
        let d = self.dim;
        let cov = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            if i == j {
                1.0
            } else if i % d == j % d {
                self.rho
            } else {
                0.0
            }
        });
        GaussianSpec::new(vec![0.0; 2 * d], cov).expect("|rho| < 1 gives a positive-definite covariance")
    }

    pub fn product_spec(&self) -> GaussianSpec {
        GaussianSpec::standard(2 * self.dim).expect("identity covariance")
    }

    fn sample_joint_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim;
        let s = (1.0 - self.rho * self.rho).sqrt();
        for i in 0..d {
            let x: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            out[i] = x;
            out[d + i] = self.rho * x + s * z;
        }
    }
}

impl TryFrom<CorrelatedRepr> for CorrelatedGaussian {
    type Error = Error;

    fn try_from(r: CorrelatedRepr) -> Result<Self> {
        Self::new(r.dim, r.rho)
    }
}

impl From<CorrelatedGaussian> for CorrelatedRepr {
    fn from(c: CorrelatedGaussian) -> Self {
        CorrelatedRepr { dim: c.dim, rho: c.rho }
    }
}

/// `n` draws stored row-wise, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    data: Array2<f64>,
    source_id: String,
    seed: u64,
}

impl SampleBatch {
    pub fn new(data: Array2<f64>, source_id: impl Into<String>, seed: u64) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::EmptyInput("sample batch has no rows"));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: i, value: *v });
        }
        Ok(Self { data, source_id: source_id.into(), seed })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng_algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }
}

impl Distribution {
    pub fn gaussian(spec: GaussianSpec) -> Self {
        Self::Gaussian(spec)
    }

    pub fn pushforward(base: Distribution, embedding: EmbeddingSpec) -> Result<Self> {
        Ok(Self::Pushforward(Pushforward::new(base, embedding)?))
    }

    pub fn joint_correlated(dim: usize, rho: f64) -> Result<Self> {
        Ok(Self::JointCorrelatedGaussian(CorrelatedGaussian::new(dim, rho)?))
    }

    pub fn product_of_marginals(dim: usize, rho: f64) -> Result<Self> {
        Ok(Self::ProductOfMarginals(CorrelatedGaussian::new(dim, rho)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.dim(),
            Self::BetaProduct(b) => b.dim(),
            Self::Pushforward(p) => p.embedding.output_dim(),
            Self::JointCorrelatedGaussian(c) | Self::ProductOfMarginals(c) => 2 * c.dim,
        }
    }

    /// Short stable identifier recorded in sample provenance.
    pub fn id(&self) -> String {
        match self {
            Self::Gaussian(g) => format!("gaussian[{}]", g.dim()),
            Self::BetaProduct(b) => format!("beta_product[{}]", b.dim()),
            Self::Pushforward(p) => format!(
                "pushforward[{}->{};seed={}]({})",
                p.embedding.input_dim(),
                p.embedding.output_dim(),
                p.embedding.seed(),
                p.base.id()
            ),
            Self::JointCorrelatedGaussian(c) => format!("joint_gaussian[{};rho={}]", c.dim, c.rho),
            Self::ProductOfMarginals(c) => format!("product_of_marginals[{};rho={}]", c.dim, c.rho),
        }
    }

    /// The equivalent Gaussian, when the law is Gaussian.
    pub fn as_gaussian(&self) -> Option<GaussianSpec> {
        match self {
            Self::Gaussian(g) => Some(g.clone()),
            Self::JointCorrelatedGaussian(c) => Some(c.joint_spec()),
            Self::ProductOfMarginals(c) => Some(c.product_spec()),
            _ => None,
        }
    }

    /// Exact log density at `x`. Pushforwards have none: the image of the
    /// embedding is a Lebesgue-null set.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Gaussian(g) => g.log_density(x),
            Self::BetaProduct(b) => b.log_density(x),
            Self::Pushforward(_) => Err(Error::UnsupportedDensity("pushforward measures")),
            Self::JointCorrelatedGaussian(c) => c.joint_spec().log_density(x),
            Self::ProductOfMarginals(c) => c.product_spec().log_density(x),
        }
    }

    /// Draws `n` rows using `rng`.
    pub fn sample_rows<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Array2<f64> {
        let m = self.dim();
        let mut out = Array2::<f64>::zeros((n, m));
        match self {
            Self::Gaussian(g) => {
                let mut z = vec![0.0; m];
                for mut row in out.rows_mut() {
                    g.sample_into(rng, &mut z, row.as_slice_mut().expect("standard layout"));
                }
            }
            Self::BetaProduct(b) => {
                for mut row in out.rows_mut() {
                    b.sample_into(rng, row.as_slice_mut().expect("standard layout"));
                }
            }
            Self::Pushforward(p) => {
                let base = p.base.sample_rows(rng, n);
                for (src, mut dst) in base.rows().into_iter().zip(out.rows_mut()) {
                    p.embedding
                        .apply_into(src.as_slice().expect("standard layout"), dst.as_slice_mut().expect("standard layout"))
                        .expect("dimensions checked at construction");
                }
            }
            Self::JointCorrelatedGaussian(c) => {
                for mut row in out.rows_mut() {
                    c.sample_joint_into(rng, row.as_slice_mut().expect("standard layout"));
                }
            }
            Self::ProductOfMarginals(_) => {
                out.mapv_inplace(|_| rng.sample(StandardNormal));
            }
        }
        out
    }
}

/// `n` i.i.d. draws from `dist`, fully determined by `(dist, n, seed)`.
pub fn sample(dist: &Distribution, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::EmptyInput("sample size must be at least 1"));
    }
    let mut rng = stream(seed, Purpose::Sample);
    SampleBatch::new(dist.sample_rows(&mut rng, n), dist.id(), seed)
}

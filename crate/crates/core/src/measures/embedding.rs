use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Cap on the random affine coefficients an embedding may hold.
pub const MAX_EMBEDDING_ENTRIES: usize = 1 << 24;

/// Coefficients of one non-identity output coordinate
/// `hᵢ(x) = wᵢ·x + βᵢ + c₁ cos(c₂ x_{j₁}) sin(c₃ x_{j₂}) + c₄ x_{j₃} x_{j₄}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub coeffs: [f64; 4],
    pub indices: [usize; 4],
}

impl EmbeddingRow {
    #[inline]
    fn apply(&self, x: &[f64]) -> f64 {
        let [c1, c2, c3, c4] = self.coeffs;
        let [j1, j2, j3, j4] = self.indices;
        let affine: f64 = self.bias + self.weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        affine + c1 * (c2 * x[j1]).cos() * (c3 * x[j2]).sin() + c4 * x[j3] * x[j4]
    }
}

/// A random injective map `h: ℝ^input_dim → ℝ^output_dim`.
///
/// The first `input_dim` outputs copy the input, which makes `h` injective.
/// Every remaining coordinate is an [`EmbeddingRow`] whose affine entries and
/// trigonometric/product coefficients are i.i.d. `N(0, 1)` and whose indices
/// are uniform on `{0, …, input_dim − 1}`, all drawn from `seed`.
///
/// Serialized as `{"input_dim", "output_dim", "seed"}`; coefficients are
/// regenerated on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmbeddingRepr", into = "EmbeddingRepr")]
pub struct EmbeddingSpec {
    input_dim: usize,
    output_dim: usize,
    seed: u64,
    rows: Vec<EmbeddingRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingRepr {
    input_dim: usize,
    output_dim: usize,
    seed: u64,
}

impl EmbeddingSpec {
    pub fn generate(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim < input_dim {
            return Err(Error::InvalidParameter(format!(
                "embedding needs 0 < input_dim <= output_dim, got {input_dim} -> {output_dim}"
            )));
        }
        let entries = (output_dim - input_dim).checked_mul(input_dim + 1);
        if !entries.is_some_and(|e| e <= MAX_EMBEDDING_ENTRIES) {
            return Err(Error::InvalidParameter(format!(
                "embedding {input_dim} -> {output_dim} exceeds {MAX_EMBEDDING_ENTRIES} generated coefficients"
            )));
        }
        let mut rng = stream(seed, Purpose::Embedding);
        let rows = (input_dim..output_dim)
            .map(|_| {
                let weights = (0..input_dim).map(|_| rng.sample(StandardNormal)).collect();
                let bias = rng.sample(StandardNormal);
                let coeffs = std::array::from_fn(|_| rng.sample(StandardNormal));
                let indices = std::array::from_fn(|_| rng.random_range(0..input_dim));
                EmbeddingRow { weights, bias, coeffs, indices }
            })
            .collect();
        Ok(Self { input_dim, output_dim, seed, rows })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &[EmbeddingRow] {
        &self.rows
    }

    /// Writes `h(x)` into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        if out.len() != self.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, found: out.len() });
        }
        out[..self.input_dim].copy_from_slice(x);
        for (o, row) in out[self.input_dim..].iter_mut().zip(&self.rows) {
            *o = row.apply(x);
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }
}

impl TryFrom<EmbeddingRepr> for EmbeddingSpec {
    type Error = Error;

    fn try_from(r: EmbeddingRepr) -> Result<Self> {
        Self::generate(r.input_dim, r.output_dim, r.seed)
    }
}

impl From<EmbeddingSpec> for EmbeddingRepr {
    fn from(e: EmbeddingSpec) -> Self {
        EmbeddingRepr { input_dim: e.input_dim, output_dim: e.output_dim, seed: e.seed }
    }
}

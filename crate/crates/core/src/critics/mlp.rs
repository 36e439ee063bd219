use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, check_upstream, Critic};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// A fully connected ReLU network `ℝ^m → ℝ` with a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr", into = "MlpRepr")]
pub struct MlpCritic {
    layer_dims: Vec<usize>,
    params: Vec<f64>,
    param_bound: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpRepr {
    layer_dims: Vec<usize>,
    params: Vec<f64>,
    param_bound: Option<f64>,
}

/// `None` when the count overflows `usize`.
fn param_count(dims: &[usize]) -> Option<usize> {
    dims.windows(2).try_fold(0usize, |acc, w| w[0].checked_mul(w[1])?.checked_add(w[1])?.checked_add(acc))
}

fn checked_param_count(dims: &[usize]) -> Result<usize> {
    param_count(dims).ok_or_else(|| Error::InvalidParameter(format!("layer dims {dims:?} overflow the parameter count")))
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) || *dims.last().unwrap() != 1 {
        return Err(Error::InvalidParameter(format!(
            "layer dims must be positive, list input and output, and end in 1; got {dims:?}"
        )));
    }
    Ok(())
}

fn validate_bound(bound: Option<f64>) -> Result<()> {
    match bound {
        Some(b) if !(b > 0.0 && b.is_finite()) => {
            Err(Error::InvalidParameter(format!("parameter bound must be positive, got {b}")))
        }
        _ => Ok(()),
    }
}

impl MlpCritic {
    pub fn from_params(layer_dims: Vec<usize>, params: Vec<f64>, param_bound: Option<f64>) -> Result<Self> {
        validate_dims(&layer_dims)?;
        validate_bound(param_bound)?;
        let n = checked_param_count(&layer_dims)?;
        if params.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: params.len() });
        }
        if let Some((i, v)) = params.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: i, value: *v });
        }
        let mut c = Self { layer_dims, params, param_bound };
        if let Some(b) = param_bound {
            c.clip_params(b);
        }
        Ok(c)
    }

    pub fn zeros(layer_dims: Vec<usize>) -> Result<Self> {
        validate_dims(&layer_dims)?;
        let n = checked_param_count(&layer_dims)?;
        Self::from_params(layer_dims, vec![0.0; n], None)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn param_bound(&self) -> Option<f64> {
        self.param_bound
    }

    /// Sets the bound and clips to it.
    pub fn with_param_bound(mut self, bound: Option<f64>) -> Result<Self> {
        validate_bound(bound)?;
        self.param_bound = bound;
        if let Some(b) = bound {
            self.clip_params(b);
        }
        Ok(self)
    }

    /// Adds `c` to the output bias, shifting `φ` by a constant.
    pub fn shift_output(&mut self, c: f64) {
        let last = self.params.len() - 1;
        self.params[last] += c;
    }

    fn offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut off = 0;
        self.layer_dims.windows(2).map(move |w| {
            let start = off;
            off += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    fn layer(&self, start: usize, fan_in: usize, fan_out: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let w = ArrayView2::from_shape((fan_out, fan_in), &self.params[start..start + fan_in * fan_out])
            .expect("layout checked at construction");
        let b = ArrayView1::from(&self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out]);
        (w, b)
    }

    /// Post-activation outputs of every layer; the last entry is `n × 1`.
    fn activations(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let layers: Vec<_> = self.offsets().collect();
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
        for (li, &(start, fan_in, fan_out)) in layers.iter().enumerate() {
            let (w, b) = self.layer(start, fan_in, fan_out);
            let input = if li == 0 { x } else { acts[li - 1].view() };
            let mut z = mul_transposed(input, w);
            let b = b.as_slice().expect("contiguous bias");
            let hidden = li + 1 < layers.len();
            for row in z.as_slice_mut().expect("row-major").chunks_exact_mut(fan_out) {
                for (v, &bj) in row.iter_mut().zip(b) {
                    *v += bj;
                    if hidden {
                        *v = v.max(0.0);
                    }
                }
            }
            acts.push(z);
        }
        acts
    }
}

const FORWARD_BLOCK: usize = 256;

/// Below this inner or outer width the blocked product loses to plain loops.
const GEMM_MIN: usize = 8;

/// `a · wᵀ` for row-major `w`, as a row-major array.
fn mul_transposed(a: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = a.dim();
    let m = w.nrows();
    let mut z = Array2::zeros((n, m));
    if k >= GEMM_MIN && m >= GEMM_MIN {
        general_mat_mul(1.0, &a, &w.t(), 0.0, &mut z);
        return z;
    }
    let a = a.as_standard_layout();
    let rows = a.as_slice().expect("row-major").chunks_exact(k);
    let out = z.as_slice_mut().expect("row-major");
    if m > k {
        let wt = w.t().as_standard_layout().into_owned();
        let wt = wt.as_slice().expect("row-major");
        for (zr, ar) in out.chunks_exact_mut(m).zip(rows) {
            for (&ak, wk) in ar.iter().zip(wt.chunks_exact(m)) {
                for (zj, &wv) in zr.iter_mut().zip(wk) {
                    *zj += ak * wv;
                }
            }
        }
    } else {
        let ws = w.as_slice().expect("row-major weights");
        for (zr, ar) in out.chunks_exact_mut(m).zip(rows) {
            for (zj, wj) in zr.iter_mut().zip(ws.chunks_exact(k)) {
                *zj = ar.iter().zip(wj).map(|(x, y)| x * y).sum();
            }
        }
    }
    z
}

/// `d · w` for `d` of shape `n × m` and row-major `w` of shape `m × k`.
fn mul_plain(d: &Array2<f64>, w: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, m) = d.dim();
    let k = w.ncols();
    if k >= GEMM_MIN && m >= GEMM_MIN {
        return d.dot(&w);
    }
    let mut out = Array2::zeros((n, k));
    let ws = w.as_slice().expect("row-major weights");
    let o = out.as_slice_mut().expect("row-major");
    for (orow, drow) in o.chunks_exact_mut(k).zip(d.as_slice().expect("row-major").chunks_exact(m)) {
        for (&dj, wj) in drow.iter().zip(ws.chunks_exact(k)) {
            for (ov, &wv) in orow.iter_mut().zip(wj) {
                *ov += dj * wv;
            }
        }
    }
    out
}

/// `g += dᵀ · a` for `d` of shape `n × m` and `a` of shape `n × k`.
fn accumulate_outer(d: &Array2<f64>, a: ArrayView2<'_, f64>, g: &mut [f64]) {
    let (_, m) = d.dim();
    let k = a.ncols();
    if k >= GEMM_MIN && m >= GEMM_MIN {
        let mut gw = ArrayViewMut2::from_shape((m, k), g).expect("weight block");
        general_mat_mul(1.0, &d.t(), &a, 1.0, &mut gw);
        return;
    }
    let a = a.as_standard_layout();
    for (drow, arow) in d.as_slice().expect("row-major").chunks_exact(m).zip(a.as_slice().expect("row-major").chunks_exact(k)) {
        for (&dj, gj) in drow.iter().zip(g.chunks_exact_mut(k)) {
            if dj == 0.0 {
                continue;
            }
            for (gv, &av) in gj.iter_mut().zip(arow) {
                *gv += dj * av;
            }
        }
    }
}

impl Critic for MlpCritic {
    fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        check_input(self.input_dim(), &x)?;
        // Row blocks keep the hidden activations small and cache resident.
        let mut out = Vec::with_capacity(x.nrows());
        for block in x.axis_chunks_iter(Axis(0), FORWARD_BLOCK) {
            let last = self.activations(block).pop().expect("at least one layer");
            out.extend(last.iter());
        }
        Ok(Array1::from(out))
    }

    fn backward_accumulate(&self, x: ArrayView2<'_, f64>, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        check_input(self.input_dim(), &x)?;
        check_upstream(&x, upstream)?;
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), found: grad.len() });
        }
        let acts = self.activations(x);
        let layers: Vec<_> = self.offsets().collect();
        let mut delta = ArrayView2::from_shape((upstream.len(), 1), upstream).unwrap().to_owned();
        for li in (0..layers.len()).rev() {
            let (start, fan_in, fan_out) = layers[li];
            let input = if li == 0 { x } else { acts[li - 1].view() };
            let (wslice, bslice) = grad[start..start + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            accumulate_outer(&delta, input, wslice);
            for (gb, s) in bslice.iter_mut().zip(delta.sum_axis(Axis(0))) {
                *gb += s;
            }
            if li > 0 {
                let (w, _) = self.layer(start, fan_in, fan_out);
                let mut back = mul_plain(&delta, w);
                // ReLU subgradient: zero where the unit was inactive (including exactly 0).
                ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Ok(())
    }
}

impl TryFrom<MlpRepr> for MlpCritic {
    type Error = Error;

    fn try_from(r: MlpRepr) -> Result<Self> {
        Self::from_params(r.layer_dims, r.params, r.param_bound)
    }
}

impl From<MlpCritic> for MlpRepr {
    fn from(c: MlpCritic) -> Self {
        MlpRepr { layer_dims: c.layer_dims, params: c.params, param_bound: c.param_bound }
    }
}

/// Glorot-uniform weights on `±√(6/(fan_in + fan_out))`, zero biases.
pub fn init_mlp(layer_dims: &[usize], seed: u64) -> Result<MlpCritic> {
    validate_dims(layer_dims)?;
    let mut rng = stream(seed, Purpose::Init);
    let mut params = Vec::with_capacity(checked_param_count(layer_dims)?);
    for w in layer_dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
        params.extend(std::iter::repeat_n(0.0, fan_out));
    }
    MlpCritic::from_params(layer_dims.to_vec(), params, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_network_outputs_zero() {
        let c = MlpCritic::zeros(vec![3, 5, 1]).unwrap();
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        assert_eq!(c.forward(x.view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn relu_kills_negative_input() {
        let c = MlpCritic::from_params(vec![1, 1, 1], vec![1.0, 0.0, 1.0, 0.0], None).unwrap();
        assert_eq!(c.forward(array![[-3.0]].view()).unwrap()[0], 0.0);
        assert_eq!(c.forward(array![[2.0]].view()).unwrap()[0], 2.0);
    }

    #[test]
    fn linear_critic_gradient() {
        // φ(x) = w x with w = 0.7
        let c = MlpCritic::from_params(vec![1, 1], vec![0.7, 0.0], None).unwrap();
        let g = c.backward(array![[3.0]].view(), &[1.0]).unwrap();
        assert_eq!(g.values, vec![3.0, 1.0]);
        let g0 = c.backward(array![[3.0]].view(), &[0.0]).unwrap();
        assert!(g0.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_checks() {
        let c = MlpCritic::zeros(vec![2, 3, 1]).unwrap();
        assert!(matches!(c.forward(array![[1.0]].view()), Err(Error::DimensionMismatch { .. })));
        assert!(c.backward(array![[1.0, 2.0]].view(), &[1.0, 2.0]).is_err());
        assert!(MlpCritic::zeros(vec![2, 3, 2]).is_err());
    }

    #[test]
    fn init_is_seeded_with_zero_biases() {
        let a = init_mlp(&[4, 8, 8, 1], 3).unwrap();
        assert_eq!(a, init_mlp(&[4, 8, 8, 1], 3).unwrap());
        assert_ne!(a, init_mlp(&[4, 8, 8, 1], 4).unwrap());
        for (start, fi, fo) in a.offsets() {
            let b = &a.params[start + fi * fo..start + fi * fo + fo];
            assert!(b.iter().all(|v| *v == 0.0));
            let limit = (6.0 / (fi + fo) as f64).sqrt();
            assert!(a.params[start..start + fi * fo].iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn init_variance_matches_uniform() {
        let c = init_mlp(&[256, 256, 1], 9).unwrap();
        let w = &c.params[..256 * 256];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        // Uniform on ±L has variance L²/3 = 2/(fan_in + fan_out).
        let expected = 2.0 / 512.0;
        assert!((var / expected - 1.0).abs() < 0.2, "{var} vs {expected}");
    }

    #[test]
    fn clipping() {
        let mut c = MlpCritic::from_params(vec![1, 1], vec![10.0, -0.5], None).unwrap();
        c.clip_params(2.0);
        assert_eq!(c.params(), &[2.0, -0.5]);
        let once = c.clone();
        c.clip_params(2.0);
        assert_eq!(c.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   once.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let within = MlpCritic::from_params(vec![1, 1], vec![0.3, -0.1], None).unwrap();
        let mut w2 = within.clone();
        w2.clip_params(1.0);
        assert_eq!(w2, within);
        let bounded = MlpCritic::from_params(vec![1, 1], vec![5.0, 0.0], Some(1.0)).unwrap();
        assert_eq!(bounded.params()[0], 1.0);
    }
}

use serde::{Deserialize, Serialize};

use crate::critics::{Critic, ParamGradient};
use crate::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self { m: vec![0.0; num_params], v: vec![0.0; num_params], step: 0 }
    }
}

/// One bias-corrected Adam step in the ascent direction, followed by clipping
/// to `[−bound, bound]` when `param_bound` is set.
pub fn adam_step<C: Critic + ?Sized>(
    critic: &mut C,
    grad: &ParamGradient,
    state: &mut AdamState,
    hp: &AdamConfig,
    param_bound: Option<f64>,
) -> Result<()> {
    let n = critic.num_params();
    if grad.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: grad.len() });
    }
    if state.m.len() != n || state.v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.m.len() });
    }
    let t = state.step + 1;
    if grad.values.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { step: t });
    }
    state.step = t;
    let bc1 = 1.0 - hp.beta1.powi(t.min(i32::MAX as u64) as i32);
    let bc2 = 1.0 - hp.beta2.powi(t.min(i32::MAX as u64) as i32);
    let params = critic.params_mut();
    for i in 0..n {
        let g = grad.values[i];
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] += hp.learning_rate * m_hat / (v_hat.sqrt() + hp.eps);
    }
    if let Some(b) = param_bound {
        critic.clip_params(b);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critics::MlpCritic;

    fn scalar(w: f64) -> MlpCritic {
        MlpCritic::from_params(vec![1, 1], vec![w, 0.0], None).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut c = scalar(0.3);
        let mut st = AdamState::new(2);
        adam_step(&mut c, &ParamGradient::zeros(2), &mut st, &AdamConfig::default(), None).unwrap();
        assert_eq!(c.params(), &[0.3, 0.0]);
        assert_eq!(st.m, vec![0.0, 0.0]);
        assert_eq!(st.v, vec![0.0, 0.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn constant_gradient_steps_have_size_lr() {
        let hp = AdamConfig { learning_rate: 1e-2, ..Default::default() };
        let mut c = scalar(0.0);
        let mut st = AdamState::new(2);
        let g = ParamGradient { values: vec![-3.0, 0.0] };
        let mut prev = 0.0;
        for step in 1..=100 {
            adam_step(&mut c, &g, &mut st, &hp, None).unwrap();
            let delta = (c.params()[0] - prev).abs();
            prev = c.params()[0];
            if step == 100 {
                assert!(delta >= 0.9 * hp.learning_rate && delta <= 1.1 * hp.learning_rate, "{delta}");
            }
        }
        // ascent: moves along the gradient sign
        assert!(c.params()[0] < 0.0);
    }

    #[test]
    fn nan_gradient_reports_step() {
        let mut c = scalar(0.0);
        let mut st = AdamState::new(2);
        let hp = AdamConfig::default();
        adam_step(&mut c, &ParamGradient { values: vec![1.0, 1.0] }, &mut st, &hp, None).unwrap();
        let err = adam_step(&mut c, &ParamGradient { values: vec![f64::NAN, 1.0] }, &mut st, &hp, None).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { step: 2 }));
    }

    #[test]
    fn clipping_after_step() {
        let mut c = scalar(0.95);
        let mut st = AdamState::new(2);
        let hp = AdamConfig { learning_rate: 0.5, ..Default::default() };
        adam_step(&mut c, &ParamGradient { values: vec![1.0, 1.0] }, &mut st, &hp, Some(1.0)).unwrap();
        assert_eq!(c.params()[0], 1.0);
        assert!((c.params()[1] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn shape_mismatch() {
        let mut c = scalar(0.0);
        let mut st = AdamState::new(2);
        assert!(adam_step(&mut c, &ParamGradient::zeros(3), &mut st, &AdamConfig::default(), None).is_err());
    }
}

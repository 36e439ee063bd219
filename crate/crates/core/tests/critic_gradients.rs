//! Critic parameter gradients against central differences, plus a Lipschitz
//! check on clipped networks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use renyi_core::critics::{init_mlp, Critic, ExpFamCritic, MlpCritic, SufficientStatistic};
use renyi_core::objective::{empirical_objective, objective_gradient, CriticOutputs};
use renyi_core::AlphaOrder;

const H: f64 = 1e-5;

fn random_batch(rng: &mut ChaCha20Rng, n: usize, m: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.random_range(lo..hi))
}

fn random_mlp(rng: &mut ChaCha20Rng) -> MlpCritic {
    let depth = rng.random_range(1..4);
    let mut dims = vec![rng.random_range(1..6)];
    dims.extend((0..depth).map(|_| rng.random_range(1..9)));
    dims.push(1);
    let mut c = init_mlp(&dims, rng.random()).unwrap();
    for p in c.params_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    c
}

fn max_rel_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / r.abs().max(1e-3 * scale))
        .fold(0.0, f64::max)
}

/// Central differences of `f` at the critic's parameters.
fn fd_params<C: Critic + Clone>(critic: &C, f: impl Fn(&C) -> f64) -> Vec<f64> {
    (0..critic.num_params())
        .map(|i| {
            let (mut plus, mut minus) = (critic.clone(), critic.clone());
            plus.params_mut()[i] += H;
            minus.params_mut()[i] -= H;
            (f(&plus) - f(&minus)) / (2.0 * H)
        })
        .collect()
}

fn weighted_sum<C: Critic>(c: &C, x: &Array2<f64>, w: &[f64]) -> f64 {
    c.forward(x.view()).unwrap().iter().zip(w).map(|(a, b)| a * b).sum()
}

#[test]
fn mlp_backward_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for case in 0..50 {
        let critic = random_mlp(&mut rng);
        let n = rng.random_range(1..12);
        let x = random_batch(&mut rng, n, critic.input_dim(), -2.0, 2.0);
        let up: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grad = critic.backward(x.view(), &up).unwrap();
        let fd = fd_params(&critic, |c| weighted_sum(c, &x, &up));
        let err = max_rel_error(&grad.values, &fd);
        assert!(err < 1e-5, "case {case}, dims {:?}: {err}", critic.layer_dims());
    }
}

#[test]
fn two_hidden_layer_reference_case() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut critic = init_mlp(&[3, 4, 4, 1], 17).unwrap();
    // Nonzero biases: with zero biases a row whose first layer is fully dead
    // sits exactly on a ReLU kink of the second.
    for p in critic.params_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    let x = random_batch(&mut rng, 8, 3, -1.0, 1.0);
    let up = vec![1.0; 8];
    let grad = critic.backward(x.view(), &up).unwrap();
    let fd = fd_params(&critic, |c| weighted_sum(c, &x, &up));
    assert!(max_rel_error(&grad.values, &fd) < 1e-5);
}

#[test]
fn expfam_backward_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for case in 0..20 {
        let m = rng.random_range(1..6);
        let (stat, x) = if case % 2 == 0 {
            (SufficientStatistic::Beta, random_batch(&mut rng, 7, m, 0.01, 0.99))
        } else {
            (SufficientStatistic::Gaussian, random_batch(&mut rng, 7, m, -3.0, 3.0))
        };
        let kappa = (0..stat.output_dim(m)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let critic = ExpFamCritic::new(stat, m, kappa).unwrap();
        let up: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grad = critic.backward(x.view(), &up).unwrap();
        let fd = fd_params(&critic, |c| weighted_sum(c, &x, &up));
        assert!(max_rel_error(&grad.values, &fd) < 1e-6, "case {case}");
    }
}

#[test]
fn objective_gradient_through_the_critic() {
    let mut rng = ChaCha20Rng::seed_from_u64(123);
    let orders = [-0.5, 0.25, 0.5, 0.75, 2.0];
    for case in 0..50 {
        let a = AlphaOrder::new(orders[case % orders.len()]).unwrap();
        let critic = random_mlp(&mut rng);
        let m = critic.input_dim();
        let (nq, np) = (rng.random_range(2..10), rng.random_range(2..10));
        let xq = random_batch(&mut rng, nq, m, -2.0, 2.0);
        let xp = random_batch(&mut rng, np, m, -2.0, 2.0);
        let objective = |c: &MlpCritic| {
            let out = CriticOutputs::new(c.forward(xq.view()).unwrap().to_vec(), c.forward(xp.view()).unwrap().to_vec());
            empirical_objective(&out, a).unwrap().value
        };
        let out = CriticOutputs::new(critic.forward(xq.view()).unwrap().to_vec(), critic.forward(xp.view()).unwrap().to_vec());
        let (gq, gp) = objective_gradient(&out, a).unwrap();
        let mut grad = critic.backward(xq.view(), &gq).unwrap();
        critic.backward_accumulate(xp.view(), &gp, &mut grad.values).unwrap();
        let fd = fd_params(&critic, objective);
        let err = max_rel_error(&grad.values, &fd);
        assert!(err < 1e-5, "case {case}: {err}");
    }
}

#[test]
fn clipped_networks_respect_the_lipschitz_bound() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for _ in 0..40 {
        let a_k = rng.random_range(0.1..2.0);
        let w = rng.random_range(1..10);
        let d = rng.random_range(1..4);
        let m = rng.random_range(1..5);
        let mut dims = vec![m];
        dims.extend(std::iter::repeat(w).take(d));
        dims.push(1);
        let params = (0..init_mlp(&dims, 0).unwrap().num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let critic = MlpCritic::from_params(dims, params, Some(a_k)).unwrap();
        assert!(critic.params().iter().all(|p| p.abs() <= a_k));
        // Each affine layer has entries bounded by a_k; the first maps ℓ¹ to ℓ∞
        // with constant a_k, the rest ℓ∞ to ℓ∞ with constant a_k·w.
        let lip = a_k * (a_k * w as f64).powi(d as i32);
        let x = random_batch(&mut rng, 16, m, -5.0, 5.0);
        let y = random_batch(&mut rng, 16, m, -5.0, 5.0);
        let fx = critic.forward(x.view()).unwrap();
        let fy = critic.forward(y.view()).unwrap();
        for i in 0..16 {
            let l1: f64 = x.row(i).iter().zip(y.row(i)).map(|(a, b)| (a - b).abs()).sum();
            assert!((fx[i] - fy[i]).abs() <= lip * l1 * (1.0 + 1e-12) + 1e-12);
        }
    }
}

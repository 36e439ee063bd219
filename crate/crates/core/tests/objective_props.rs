//! Properties of the objective: invariances, gradients, stability and the
//! population form at and away from the optimal critic.

use astro_float::{BigFloat, Consts, RoundingMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use renyi_core::measures::quadrature::gaussian_domain;
use renyi_core::measures::{renyi_gaussian_exact, BoxDomain, Distribution, GaussianSpec};
use renyi_core::objective::{empirical_objective, objective_gradient, population_objective, CriticOutputs};
use renyi_core::{AlphaOrder, Error};

fn alpha(a: f64) -> AlphaOrder {
    AlphaOrder::new(a).unwrap()
}

fn value(q: &[f64], p: &[f64], a: f64) -> f64 {
    empirical_objective(&CriticOutputs::new(q.to_vec(), p.to_vec()), alpha(a)).unwrap().value
}

fn outputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-5.0..5.0f64, 1..30), prop::collection::vec(-5.0..5.0f64, 1..30))
}

fn orders() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![-0.5, 0.1, 0.3, 0.5, 0.7, 0.9, 1.5, 2.0, 3.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shift_invariance((q, p) in outputs(), a in orders(), c in -50.0..50.0f64) {
        let base = value(&q, &p, a);
        let shifted = value(
            &q.iter().map(|v| v + c).collect::<Vec<_>>(),
            &p.iter().map(|v| v + c).collect::<Vec<_>>(),
            a,
        );
        prop_assert!((base - shifted).abs() < 1e-10, "{} vs {}", base, shifted);
    }

    #[test]
    fn dual_order_swaps_roles((q, p) in outputs(), a in orders()) {
        let direct = value(&q, &p, a);
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let swapped = value(&neg(&p), &neg(&q), 1.0 - a);
        prop_assert!((direct - swapped).abs() < 1e-12, "{} vs {}", direct, swapped);
    }

    #[test]
    fn gradient_sums((q, p) in outputs(), a in orders()) {
        let (gq, gp) = objective_gradient(&CriticOutputs::new(q, p), alpha(a)).unwrap();
        prop_assert!((gq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((gp.iter().sum::<f64>() + 1.0).abs() < 1e-12);
    }
}

/// Largest relative deviation, with the denominator floored at a thousandth
/// of the largest reference entry.
fn max_rel_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / r.abs().max(1e-3 * scale))
        .fold(0.0, f64::max)
}

#[test]
fn output_gradient_matches_central_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let orders = [-0.5, 0.25, 0.5, 0.75, 2.0];
    let h = 1e-5;
    for case in 0..50 {
        let a = orders[case % orders.len()];
        let nq = rng.random_range(1..12);
        let np = rng.random_range(1..12);
        let q: Vec<f64> = (0..nq).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p: Vec<f64> = (0..np).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (gq, gp) = objective_gradient(&CriticOutputs::new(q.clone(), p.clone()), alpha(a)).unwrap();
        let fd = |side_q: bool, i: usize| {
            let (mut qp, mut qm, mut pp, mut pm) = (q.clone(), q.clone(), p.clone(), p.clone());
            if side_q {
                qp[i] += h;
                qm[i] -= h;
            } else {
                pp[i] += h;
                pm[i] -= h;
            }
            (value(&qp, &pp, a) - value(&qm, &pm, a)) / (2.0 * h)
        };
        let fd_q: Vec<f64> = (0..nq).map(|i| fd(true, i)).collect();
        let fd_p: Vec<f64> = (0..np).map(|i| fd(false, i)).collect();
        let err = max_rel_error(&gq, &fd_q).max(max_rel_error(&gp, &fd_p));
        assert!(err < 1e-6, "case {case} (alpha {a}): {err}");
    }
}

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// `(1/s) · log((1/n) Σ e^{s·xᵢ})` without any stabilization.
fn reference_term(xs: &[f64], s: f64, cc: &mut Consts) -> BigFloat {
    let mut sum = BigFloat::from_f64(0.0, P);
    for &x in xs {
        let e = BigFloat::from_f64(s * x, P).exp(P, RM, cc);
        sum = sum.add(&e, P, RM);
    }
    let n = BigFloat::from_u64(xs.len() as u64, P);
    sum.div(&n, P, RM).ln(P, RM, cc).div(&BigFloat::from_f64(s, P), P, RM)
}

#[test]
fn extreme_outputs_stay_finite_and_accurate() {
    let mut cc = Consts::new().unwrap();
    let cases: [(&[f64], &[f64]); 4] = [
        (&[700.0, -700.0, 0.0], &[700.0, 699.5]),
        (&[-700.0, -699.0], &[-700.0, 700.0, 1.0]),
        (&[700.0; 5], &[-700.0; 5]),
        (&[650.0, -350.0, 700.0, -700.0], &[3.0]),
    ];
    // Orders whose scaled outputs are exact in f64, so the reference sees the
    // same exponents as the implementation.
    for a in [-0.5, 0.25, 0.5, 2.0, 3.0] {
        for (q, p) in cases {
            let v = empirical_objective(&CriticOutputs::new(q.to_vec(), p.to_vec()), alpha(a)).unwrap();
            assert!(v.value.is_finite(), "alpha {a}: {v:?}");
            let rq = reference_term(q, a - 1.0, &mut cc);
            let rp = reference_term(p, a, &mut cc);
            for (got, want) in [(v.term_q, rq), (v.term_p, rp)] {
                let diff = BigFloat::from_f64(got, P).sub(&want, P, RM).abs();
                let tol = BigFloat::from_f64(1e-12 * got.abs().max(1.0), P);
                assert!(diff.cmp(&tol).unwrap() <= 0, "alpha {a}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn empty_and_non_finite_outputs_are_rejected() {
    let a = alpha(0.5);
    assert!(matches!(empirical_objective(&CriticOutputs::new(vec![], vec![1.0]), a), Err(Error::EmptyInput(_))));
    assert!(matches!(empirical_objective(&CriticOutputs::new(vec![1.0], vec![]), a), Err(Error::EmptyInput(_))));
    let err = empirical_objective(&CriticOutputs::new(vec![0.0, f64::NAN], vec![1.0]), a).unwrap_err();
    assert!(matches!(err, Error::NonFiniteInput { index: 1, .. }));
    let err = objective_gradient(&CriticOutputs::new(vec![0.0], vec![f64::INFINITY]), a).unwrap_err();
    assert!(matches!(err, Error::NonFiniteInput { index: 1, .. }));
}

fn shifted_pair() -> (Distribution, Distribution, BoxDomain) {
    let q = GaussianSpec::univariate(1.0, 1.0).unwrap();
    let p = GaussianSpec::univariate(0.0, 1.0).unwrap();
    let dom = gaussian_domain(&q).unwrap().hull(&gaussian_domain(&p).unwrap()).unwrap();
    (Distribution::Gaussian(q), Distribution::Gaussian(p), dom)
}

#[test]
fn optimal_critic_attains_the_divergence() {
    let (q, p, dom) = shifted_pair();
    let g_star = |x: &[f64]| x[0] - 0.5;
    let g_star_shifted = |x: &[f64]| x[0] - 0.5 + 17.0;
    for a in [0.3, 0.5, 0.7, 2.0] {
        let exact = renyi_gaussian_exact(q.as_gaussian().as_ref().unwrap(), p.as_gaussian().as_ref().unwrap(), alpha(a)).unwrap();
        assert!((exact - 0.5).abs() < 1e-14);
        let at_opt = population_objective(&g_star, &q, &p, alpha(a), &dom, 1e-10).unwrap();
        assert!((at_opt - exact).abs() < 1e-6, "alpha {a}: {at_opt}");
        let at_shift = population_objective(&g_star_shifted, &q, &p, alpha(a), &dom, 1e-10).unwrap();
        assert!((at_shift - at_opt).abs() < 1e-8, "alpha {a}: {at_shift} vs {at_opt}");
        let at_zero = population_objective(&|_: &[f64]| 0.0, &q, &p, alpha(a), &dom, 1e-10).unwrap();
        assert!(at_zero.abs() < 1e-9, "alpha {a}: {at_zero}");
    }
}

/// `c₀ + c₁x + c₂x² + c₃ sin(c₄x) + c₅ tanh(x − c₆)` with a small quadratic
/// coefficient, so every exponential moment used below is finite.
fn random_smooth_critic(rng: &mut ChaCha20Rng) -> impl Fn(&[f64]) -> f64 {
    let c: [f64; 7] = [
        rng.random_range(-5.0..5.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-0.1..0.1),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.1..3.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    ];
    move |x: &[f64]| {
        let x = x[0];
        c[0] + c[1] * x + c[2] * x * x + c[3] * (c[4] * x).sin() + c[5] * (x - c[6]).tanh()
    }
}

#[test]
fn random_critics_never_exceed_the_divergence() {
    let (q, p, dom) = shifted_pair();
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for a in [0.3, 0.5, 0.7, 2.0] {
        for i in 0..200 {
            let g = random_smooth_critic(&mut rng);
            let v = population_objective(&g, &q, &p, alpha(a), &dom, 1e-10).unwrap();
            assert!(v <= 0.5 + 1e-6, "alpha {a}, critic {i}: {v}");
        }
    }
}

#[test]
fn population_form_rejects_bad_inputs() {
    let (q, p, dom) = shifted_pair();
    let three = Distribution::Gaussian(GaussianSpec::standard(3).unwrap());
    let dom3 = BoxDomain::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
    let g = |_: &[f64]| 0.0;
    assert!(matches!(population_objective(&g, &three, &three, alpha(0.5), &dom3, 1e-8), Err(Error::QuadratureDimension(3))));
    assert!(matches!(population_objective(&g, &q, &three, alpha(0.5), &dom, 1e-8), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(population_objective(&g, &q, &p, alpha(0.5), &dom3, 1e-8), Err(Error::DimensionMismatch { .. })));
}

//! Closed-form Rényi divergences.
//!
//! All values use the normalization `R_α = (α(α−1))⁻¹ · log ∫ q^α p^{1−α}`.
//! Orders `α < 0` are covered by the same expression, which is the extension
//! `R_α(Q‖P) = R_{1−α}(P‖Q)` written out.

use nalgebra::DVector;

use super::beta::ln_beta;
use super::gaussian::try_cholesky;
use super::{Distribution, GaussianSpec};
use crate::{AlphaOrder, Error, Result};

/// `log ∫ q^α p^{1−α} dx` for Gaussians, or `+∞` when the interpolated
/// precision `αΣ_q⁻¹ + (1−α)Σ_p⁻¹` is not positive definite.
pub fn gaussian_log_affinity(q: &GaussianSpec, p: &GaussianSpec, alpha: AlphaOrder) -> Result<f64> {
    let m = q.dim();
    if p.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: p.dim() });
    }
    let a = alpha.value();
    let (lq, lp) = (q.precision(), p.precision());
    let precision = lq * a + lp * (1.0 - a);
    let precision = (&precision + precision.transpose()) * 0.5;
    let Some(chol) = try_cholesky(precision) else {
        return Ok(f64::INFINITY);
    };
    let log_det_precision = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let (mq, mp): (&DVector<f64>, &DVector<f64>) = (q.mean(), p.mean());
    let linear = lq * mq * a + lp * mp * (1.0 - a);
    let solved = chol.solve(&linear);
    let constant = a * mq.dot(&(lq * mq)) + (1.0 - a) * mp.dot(&(lp * mp));
    let value = -0.5 * log_det_precision + 0.5 * linear.dot(&solved) - 0.5 * constant
        - 0.5 * (a * q.log_det() + (1.0 - a) * p.log_det());
    Ok(value)
}

/// `R_α(Q‖P)` between multivariate normals; `+∞` when the integral diverges
/// (possible only for `α > 1` or `α < 0`).
pub fn renyi_gaussian_exact(q: &GaussianSpec, p: &GaussianSpec, alpha: AlphaOrder) -> Result<f64> {
    let log_aff = gaussian_log_affinity(q, p, alpha)?;
    if log_aff.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok((log_aff / alpha.normalizer()).max(0.0))
}

/// `KL(Q‖P)` between normals, the `α → 1` limit of `R_α`.
pub fn kl_gaussian(q: &GaussianSpec, p: &GaussianSpec) -> Result<f64> {
    let m = q.dim();
    if p.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: p.dim() });
    }
    let lp = p.precision();
    let diff = q.mean() - p.mean();
    let trace = (lp * q.covariance()).trace();
    Ok(0.5 * (trace + diff.dot(&(lp * &diff)) - m as f64 + p.log_det() - q.log_det()))
}

/// `R_α` between members of an exponential family with log-partition `log_z`:
///
/// `[α(α−1)]⁻¹ · [log Z(αθ_q + (1−α)θ_p) − (1−α) log Z(θ_p) − α log Z(θ_q)]`.
///
/// `log_z` must return `+∞` (or NaN) outside the natural parameter space; an
/// interpolant outside the domain yields `+∞`.
pub fn renyi_expfam_exact<F>(log_z: F, theta_q: &[f64], theta_p: &[f64], alpha: AlphaOrder) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if theta_q.len() != theta_p.len() {
        return Err(Error::DimensionMismatch { expected: theta_q.len(), found: theta_p.len() });
    }
    let a = alpha.value();
    let z_q = log_z(theta_q);
    let z_p = log_z(theta_p);
    if !z_q.is_finite() {
        return Err(Error::LogPartition(theta_q.to_vec()));
    }
    if !z_p.is_finite() {
        return Err(Error::LogPartition(theta_p.to_vec()));
    }
    if theta_q == theta_p {
        return Ok(0.0);
    }
    let mixed: Vec<f64> = theta_q.iter().zip(theta_p).map(|(tq, tp)| a * tq + (1.0 - a) * tp).collect();
    let z_mix = log_z(&mixed);
    if !z_mix.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(((z_mix - (1.0 - a) * z_p - a * z_q) / alpha.normalizer()).max(0.0))
}

/// `Σᵢ ln B(aᵢ, bᵢ)` for `θ = (a₁, b₁, a₂, b₂, …)`.
///
/// The natural parameters of the Beta family are `(a − 1, b − 1)`; since that
/// shift is affine it commutes with the interpolation in
/// [`renyi_expfam_exact`], so shape parameters can be used directly.
pub fn beta_log_partition(theta: &[f64]) -> f64 {
    if theta.len() % 2 != 0 {
        return f64::NAN;
    }
    theta
        .chunks_exact(2)
        .map(|ab| if ab[0] > 0.0 && ab[1] > 0.0 { ln_beta(ab[0], ab[1]) } else { f64::INFINITY })
        .sum()
}

/// Log-partition of the unit-variance Gaussian family with `θ` = mean and base
/// measure `N(0, I)`: `‖θ‖² / 2`.
pub fn unit_variance_gaussian_log_partition(theta: &[f64]) -> f64 {
    0.5 * theta.iter().map(|t| t * t).sum::<f64>()
}

/// Log-partition of the 1-D Gaussian family with natural parameters
/// `θ = (μ/σ², −1/(2σ²))`, statistic `(x, x²)` and Lebesgue base measure.
pub fn gaussian_log_partition_1d(theta: &[f64]) -> f64 {
    match *theta {
        [t1, t2] if t2 < 0.0 => 0.5 * (std::f64::consts::PI / -t2).ln() - t1 * t1 / (4.0 * t2),
        [_, _] => f64::INFINITY,
        _ => f64::NAN,
    }
}

/// Natural parameters `(μ/σ², −1/(2σ²))` of a 1-D normal.
pub fn gaussian_natural_params_1d(g: &GaussianSpec) -> Result<[f64; 2]> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: g.dim() });
    }
    let var = g.covariance()[(0, 0)];
    Ok([g.mean()[0] / var, -0.5 / var])
}

/// `R_α(Q‖P)` for any pair with a closed form: Gaussian-type pairs, Beta
/// products of equal dimension, and pushforwards of such pairs through the same
/// embedding (for which the divergence equals that of the bases).
pub fn renyi_exact(q: &Distribution, p: &Distribution, alpha: AlphaOrder) -> Result<f64> {
    match (q, p) {
        (Distribution::BetaProduct(bq), Distribution::BetaProduct(bp)) => {
            if bq.dim() != bp.dim() {
                return Err(Error::DimensionMismatch { expected: bq.dim(), found: bp.dim() });
            }
            renyi_expfam_exact(beta_log_partition, &bq.shape_params(), &bp.shape_params(), alpha)
        }
        (Distribution::Pushforward(hq), Distribution::Pushforward(hp)) => {
            if hq.embedding() != hp.embedding() {
                return Err(Error::InvalidParameter(
                    "closed form for pushforwards needs a shared embedding".into(),
                ));
            }
            renyi_exact(hq.base(), hp.base(), alpha)
        }
        _ => match (q.as_gaussian(), p.as_gaussian()) {
            (Some(gq), Some(gp)) => renyi_gaussian_exact(&gq, &gp, alpha),
            _ => Err(Error::InvalidParameter(format!(
                "no closed form for the pair {} / {}",
                q.id(),
                p.id()
            ))),
        },
    }
}

/// `(R_α(Q‖P), R_{1−α}(P‖Q))` from the closed forms, for `α ∈ (0, 1)`.
pub fn renyi_symmetry_check(q: &Distribution, p: &Distribution, alpha: AlphaOrder) -> Result<(f64, f64)> {
    if !alpha.in_unit_interval() {
        return Err(Error::InvalidParameter(format!("symmetry check needs alpha in (0, 1), got {alpha}")));
    }
    Ok((renyi_exact(q, p, alpha)?, renyi_exact(p, q, alpha.dual())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BetaProductSpec;
    use nalgebra::DMatrix;

    fn alpha(a: f64) -> AlphaOrder {
        AlphaOrder::new(a).unwrap()
    }

    fn n(m: f64, v: f64) -> GaussianSpec {
        GaussianSpec::univariate(m, v).unwrap()
    }

    #[test]
    fn equal_variance_shift_is_half_squared_distance() {
        for a in [-0.5, 0.1, 0.3, 0.5, 0.9, 2.0, 5.0] {
            let r = renyi_gaussian_exact(&n(1.0, 1.0), &n(0.0, 1.0), alpha(a)).unwrap();
            assert!((r - 0.5).abs() < 1e-14, "alpha {a}: {r}");
        }
    }

    #[test]
    fn identical_specs_give_zero() {
        let g = GaussianSpec::new(vec![0.3, -1.0], DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5])).unwrap();
        assert!(renyi_gaussian_exact(&g, &g, alpha(0.7)).unwrap() < 1e-12);
        let b = BetaProductSpec::new(vec![2.0, 3.0], vec![0.5, 1.0]).unwrap();
        let r = renyi_expfam_exact(beta_log_partition, &b.shape_params(), &b.shape_params(), alpha(0.4)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn divergent_integral_is_infinite() {
        // ∫ q² / p with σ_q² = 4, σ_p² = 1 diverges.
        let r = renyi_gaussian_exact(&n(0.0, 4.0), &n(0.0, 1.0), alpha(2.0)).unwrap();
        assert_eq!(r, f64::INFINITY);
        // Beta interpolant 3·0.5 − 2·2 < 0.
        let r = renyi_expfam_exact(beta_log_partition, &[0.5, 1.0], &[2.0, 1.0], alpha(3.0)).unwrap();
        assert_eq!(r, f64::INFINITY);
    }

    #[test]
    fn expfam_routes_agree_with_gaussian_closed_form() {
        let r = renyi_expfam_exact(unit_variance_gaussian_log_partition, &[1.0], &[0.0], alpha(0.5)).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        for (q, p, a) in [(n(0.5, 2.0), n(-0.3, 0.7), 0.4), (n(1.0, 1.0), n(0.0, 1.5), 2.0), (n(0.0, 1.0), n(1.0, 0.8), -0.5)] {
            let via_nat = renyi_expfam_exact(
                gaussian_log_partition_1d,
                &gaussian_natural_params_1d(&q).unwrap(),
                &gaussian_natural_params_1d(&p).unwrap(),
                alpha(a),
            )
            .unwrap();
            let direct = renyi_gaussian_exact(&q, &p, alpha(a)).unwrap();
            assert!((via_nat - direct).abs() < 1e-12, "{via_nat} vs {direct}");
        }
    }

    #[test]
    fn expfam_rejects_bad_inputs() {
        assert!(matches!(
            renyi_expfam_exact(beta_log_partition, &[1.0, 1.0], &[1.0], alpha(0.5)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            renyi_expfam_exact(beta_log_partition, &[-1.0, 1.0], &[1.0, 1.0], alpha(0.5)),
            Err(Error::LogPartition(_))
        ));
    }

    #[test]
    fn kl_limit_from_below() {
        let (q, p) = (n(0.7, 1.8), n(0.0, 1.0));
        let kl = kl_gaussian(&q, &p).unwrap();
        let gaps: Vec<f64> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&a| (renyi_gaussian_exact(&q, &p, alpha(a)).unwrap() - kl).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] < 1e-3);
        // Equal variances: every order already equals KL.
        let kl_eq = kl_gaussian(&n(1.0, 1.0), &n(0.0, 1.0)).unwrap();
        let eq_gaps: Vec<f64> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&a| (renyi_gaussian_exact(&n(1.0, 1.0), &n(0.0, 1.0), alpha(a)).unwrap() - kl_eq).abs())
            .collect();
        assert!(eq_gaps.iter().all(|g| *g < 1e-12), "{eq_gaps:?}");
    }

    #[test]
    fn symmetry_pairs() {
        let q = Distribution::Gaussian(n(1.0, 1.0));
        let p = Distribution::Gaussian(n(0.0, 1.0));
        let (a, b) = renyi_symmetry_check(&q, &p, alpha(0.3)).unwrap();
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);
        let bq = Distribution::BetaProduct(BetaProductSpec::new(vec![2.0], vec![5.0]).unwrap());
        let bp = Distribution::BetaProduct(BetaProductSpec::new(vec![5.0], vec![2.0]).unwrap());
        let (a, b) = renyi_symmetry_check(&bq, &bp, alpha(0.25)).unwrap();
        assert!((a - b).abs() < 1e-8);
        let (a, b) = renyi_symmetry_check(&bq, &bq, alpha(0.25)).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert!(renyi_symmetry_check(&q, &p, alpha(2.0)).is_err());
    }

    #[test]
    fn pushforward_pairs_reduce_to_bases() {
        let h = crate::measures::EmbeddingSpec::generate(1, 6, 2).unwrap();
        let q = Distribution::pushforward(Distribution::Gaussian(n(1.0, 1.0)), h.clone()).unwrap();
        let p = Distribution::pushforward(Distribution::Gaussian(n(0.0, 1.0)), h).unwrap();
        assert!((renyi_exact(&q, &p, alpha(0.5)).unwrap() - 0.5).abs() < 1e-14);
    }
}

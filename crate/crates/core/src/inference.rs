//! Posterior summaries of δ from a finished chain: means, marginal
//! quantile intervals, the batch-means covariance, the empirical
//! Mahalanobis critical radius and the credible ellipsoid it defines, plus
//! the sharp and homogeneous null tests against that ellipsoid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{HgprError, Result};
use crate::linalg::SpdFactor;
use crate::sampler::Chain;

/// Relative slack added to the order statistic that defines R_α, so that
/// the strict inequality holds for exactly the required number of draws.
pub const RADIUS_NUDGE_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub delta_mean: Vec<f64>,
    pub marginal_intervals: Vec<(f64, f64)>,
    pub sigma_hat: DMatrix<f64>,
    pub r_alpha: f64,
    pub volume: f64,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpNullTest {
    pub statistic: f64,
    pub reject: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousNullTest {
    pub c_star: f64,
    pub statistic: f64,
    pub reject: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HgprError::InvalidParameter(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )))
    }
}

pub fn summarize(chain: &Chain, alpha: f64) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(HgprError::EmptyChain);
    }
    summarize_draws(&chain.delta_draws(), alpha)
}

/// Summary of a `T × J` matrix of δ draws.
pub fn summarize_draws(draws: &DMatrix<f64>, alpha: f64) -> Result<PosteriorSummary> {
    check_alpha(alpha)?;
    if draws.nrows() == 0 {
        return Err(HgprError::EmptyChain);
    }
    let mean: Vec<f64> = draws.column_iter().map(|c| c.mean()).collect();
    let marginal_intervals = draws
        .column_iter()
        .map(|c| {
            let mut v: Vec<f64> = c.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            (quantile_sorted(&v, alpha / 2.0), quantile_sorted(&v, 1.0 - alpha / 2.0))
        })
        .collect();
    let sigma_hat = batch_means_cov(draws)?;
    let r_alpha = critical_radius(draws, &mean, &sigma_hat, alpha)?;
    let volume = region_volume(&sigma_hat, r_alpha);
    Ok(PosteriorSummary {
        delta_mean: mean,
        marginal_intervals,
        sigma_hat,
        r_alpha,
        volume,
        alpha,
    })
}

/// Quantile with linear interpolation between order statistics
/// (position `(n − 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Multivariate batch-means estimate of the posterior covariance, with
/// batch size `⌊√T⌋` over consecutive disjoint batches; trailing draws that
/// do not fill a batch are dropped.
pub fn batch_means_cov(draws: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = draws.nrows();
    if t < 4 {
        return Err(HgprError::TooFewDraws { needed: 4, found: t });
    }
    let j = draws.ncols();
    let b = (t as f64).sqrt().floor() as usize;
    let a = t / b;
    let batch_means: Vec<DVector<f64>> = (0..a)
        .map(|k| {
            let rows = draws.rows(k * b, b);
            DVector::from_fn(j, |g, _| rows.column(g).mean())
        })
        .collect();
    let grand = batch_means.iter().fold(DVector::zeros(j), |acc, m| acc + m) / a as f64;
    let mut sigma = DMatrix::zeros(j, j);
    for m in &batch_means {
        let d = m - &grand;
        sigma += &d * d.transpose();
    }
    Ok(sigma * (b as f64 / (a - 1) as f64))
}

/// `(x − mean)ᵀ Σ̂⁻¹ (x − mean)` for every row of `draws`.
///
/// When every row equals the mean the statistics are zero and Σ̂ is never
/// factorized.
pub fn mahalanobis_statistics(
    draws: &DMatrix<f64>,
    mean: &[f64],
    sigma_hat: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let j = mean.len();
    if draws.ncols() != j || sigma_hat.nrows() != j {
        return Err(HgprError::DimensionMismatch {
            context: "draws vs mean vs sigma_hat",
            expected: j,
            found: draws.ncols().max(sigma_hat.nrows()),
        });
    }
    let resid: Vec<DVector<f64>> = draws
        .row_iter()
        .map(|r| DVector::from_fn(j, |g, _| r[g] - mean[g]))
        .collect();
    if resid.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        return Ok(vec![0.0; resid.len()]);
    }
    let factor = SpdFactor::new_exact_first(sigma_hat)?;
    Ok(resid.iter().map(|r| factor.quad_form(r)).collect())
}

/// Smallest R for which at least `⌈(1 − α) T⌉` draws satisfy the strict
/// inequality `stat < R`.
pub fn critical_radius(
    draws: &DMatrix<f64>,
    mean: &[f64],
    sigma_hat: &DMatrix<f64>,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let mut stats = mahalanobis_statistics(draws, mean, sigma_hat)?;
    if stats.is_empty() {
        return Err(HgprError::EmptyChain);
    }
    stats.sort_by(f64::total_cmp);
    let k = required_count(stats.len(), alpha);
    let s = stats[k - 1];
    Ok(s + RADIUS_NUDGE_REL * s.abs().max(1.0))
}

/// `⌈(1 − α) T⌉`, robust to rounding in `(1 − α) T`.
pub fn required_count(t: usize, alpha: f64) -> usize {
    let target = (1.0 - alpha) * t as f64;
    let mut k = target.ceil() as usize;
    if k > 1 && ((k - 1) as f64) >= target - 1e-9 * t as f64 {
        k -= 1;
    }
    k.clamp(1, t)
}

/// Volume of `{δ : (δ − μ̂)ᵀ Σ̂⁻¹ (δ − μ̂) < R}` in `p = dim Σ̂` dimensions:
/// `2 π^{p/2} / (p Γ(p/2)) · R^{p/2} · |Σ̂|^{1/2}`.
pub fn region_volume(sigma_hat: &DMatrix<f64>, r_alpha: f64) -> f64 {
    let p = sigma_hat.nrows() as f64;
    let det = sigma_hat.clone().lu().determinant();
    if !(det > 0.0) || !(r_alpha > 0.0) {
        return 0.0;
    }
    let log_vol = 2f64.ln() + 0.5 * p * PI.ln() - p.ln() - ln_gamma(0.5 * p)
        + 0.5 * p * r_alpha.ln()
        + 0.5 * det.ln();
    log_vol.exp()
}

impl PosteriorSummary {
    pub fn n_groups(&self) -> usize {
        self.delta_mean.len()
    }

    fn sigma_factor(&self) -> Result<SpdFactor> {
        SpdFactor::new_exact_first(&self.sigma_hat)
    }

    pub fn mahalanobis(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n_groups() {
            return Err(HgprError::DimensionMismatch {
                context: "point vs summary",
                expected: self.n_groups(),
                found: point.len(),
            });
        }
        let d = DVector::from_fn(point.len(), |g, _| point[g] - self.delta_mean[g]);
        if d.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        Ok(self.sigma_factor()?.quad_form(&d))
    }

    /// Whether `point` lies inside the credible ellipsoid.
    pub fn region_contains(&self, point: &[f64]) -> Result<bool> {
        Ok(self.mahalanobis(point)? < self.r_alpha)
    }
}

/// Tests δ = 0: rejects when the origin lies outside the credible ellipsoid.
pub fn test_sharp_null(summary: &PosteriorSummary) -> Result<SharpNullTest> {
    let statistic = summary.mahalanobis(&vec![0.0; summary.n_groups()])?;
    Ok(SharpNullTest {
        statistic,
        reject: statistic >= summary.r_alpha,
    })
}

/// Tests δ₁ = … = δ_J = C for some C: rejects when the line `C · 1` misses
/// the credible ellipsoid. The closest point on the line in the Σ̂ metric is
/// `C* = 1ᵀΣ̂⁻¹μ̂ / 1ᵀΣ̂⁻¹1`.
pub fn test_homogeneous_null(summary: &PosteriorSummary) -> Result<HomogeneousNullTest> {
    let j = summary.n_groups();
    let mean = DVector::from_column_slice(&summary.delta_mean);
    let spread = mean.iter().fold(0.0f64, |m, &v| m.max((v - mean[0]).abs()));
    if spread == 0.0 {
        return Ok(HomogeneousNullTest {
            c_star: mean[0],
            statistic: 0.0,
            reject: false,
        });
    }
    let factor = summary.sigma_factor()?;
    let a = factor.solve_lower(&DVector::from_element(j, 1.0));
    let b = factor.solve_lower(&mean);
    let c_star = a.dot(&b) / a.dot(&a);
    let statistic = (&a * c_star - &b).norm_squared();
    Ok(HomogeneousNullTest {
        c_star,
        statistic,
        reject: statistic >= summary.r_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn iid_normal(t: usize, j: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        DMatrix::from_fn(t, j, |_, _| rng.sample(StandardNormal))
    }

    fn summary_with(mean: Vec<f64>, sigma: DMatrix<f64>, r: f64) -> PosteriorSummary {
        let j = mean.len();
        PosteriorSummary {
            marginal_intervals: vec![(0.0, 0.0); j],
            delta_mean: mean,
            volume: region_volume(&sigma, r),
            sigma_hat: sigma,
            r_alpha: r,
            alpha: 0.05,
        }
    }

    #[test]
    fn identical_draws() {
        let draws = DMatrix::from_fn(50, 2, |_, g| [1.5, -0.5][g]);
        let s = summarize_draws(&draws, 0.05).unwrap();
        assert_eq!(s.delta_mean, vec![1.5, -0.5]);
        assert_eq!(s.marginal_intervals, vec![(1.5, 1.5), (-0.5, -0.5)]);
        assert_eq!(s.sigma_hat, DMatrix::zeros(2, 2));
        assert!(s.r_alpha > 0.0 && s.r_alpha <= 1e-11);
        assert_eq!(s.volume, 0.0);
    }

    #[test]
    fn two_draw_quantiles() {
        assert_eq!(quantile_sorted(&[0.0, 1.0], 0.25), 0.25);
        assert_eq!(quantile_sorted(&[0.0, 1.0], 0.75), 0.75);
    }

    #[test]
    fn normal_quantiles() {
        let draws = iid_normal(100_000, 1, 1);
        let s = summarize_draws(&draws, 0.05).unwrap();
        let (lo, hi) = s.marginal_intervals[0];
        assert!((lo + 1.959964).abs() < 0.03, "{lo}");
        assert!((hi - 1.959964).abs() < 0.03, "{hi}");
    }

    #[test]
    fn batch_means_small_cases() {
        let constant = DMatrix::from_element(30, 2, 3.0);
        assert_eq!(batch_means_cov(&constant).unwrap(), DMatrix::zeros(2, 2));

        let draws = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 2.0, 2.0]);
        assert_eq!(batch_means_cov(&draws).unwrap()[(0, 0)], 4.0);

        assert!(matches!(
            batch_means_cov(&DMatrix::zeros(3, 1)),
            Err(HgprError::TooFewDraws { .. })
        ));
    }

    #[test]
    fn alpha_domain_enforced() {
        let draws = iid_normal(100, 2, 2);
        let mean = vec![0.0, 0.0];
        let sigma = DMatrix::identity(2, 2);
        assert!(critical_radius(&draws, &mean, &sigma, 0.0).is_err());
        assert!(critical_radius(&draws, &mean, &sigma, 1.0).is_err());
        assert!(summarize_draws(&draws, -0.1).is_err());
    }

    #[test]
    fn required_count_is_robust_to_rounding() {
        assert_eq!(required_count(100, 0.05), 95);
        assert_eq!(required_count(2500, 0.05), 2375);
        assert_eq!(required_count(7, 0.05), 7);
        assert_eq!(required_count(10, 0.5), 5);
    }

    #[test]
    fn radius_is_minimal() {
        let draws = iid_normal(1000, 3, 3);
        let s = summarize_draws(&draws, 0.1).unwrap();
        let stats = mahalanobis_statistics(&draws, &s.delta_mean, &s.sigma_hat).unwrap();
        let frac = |r: f64| stats.iter().filter(|&&v| v < r).count() as f64 / 1000.0;
        assert!(frac(s.r_alpha) >= 0.9);
        let nudge = RADIUS_NUDGE_REL * s.r_alpha.max(1.0);
        assert!(frac(s.r_alpha - 10.0 * nudge) < 0.9);
    }

    #[test]
    fn volume_examples() {
        let v = region_volume(&DMatrix::identity(2, 2), 1.0);
        assert!((v - PI).abs() < 1e-12);
        // 1-D: the interval (−2σ, 2σ) for R = 4, σ = 1
        let v = region_volume(&DMatrix::identity(1, 1), 4.0);
        assert!((v - 4.0).abs() < 1e-12);
        let v = region_volume(&DMatrix::from_element(1, 1, 9.0), 4.0);
        assert!((v - 12.0).abs() < 1e-12);
        assert_eq!(region_volume(&DMatrix::identity(3, 3), 0.0), 0.0);
    }

    #[test]
    fn volume_scales_with_c_to_the_j() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let sigma = &b * b.transpose() + DMatrix::identity(4, 4);
        let v1 = region_volume(&sigma, 2.3);
        let v2 = region_volume(&(&sigma * 9.0), 2.3);
        assert!((v2 / v1 - 81.0).abs() < 1e-9);
        assert!(region_volume(&sigma, 2.4) > v1);
    }

    #[test]
    fn sharp_null_cases() {
        let s = summary_with(vec![0.0, 0.0], DMatrix::identity(2, 2), 5.99);
        let t = test_sharp_null(&s).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(!t.reject);

        let s = summary_with(vec![3.0, -2.0], DMatrix::identity(2, 2) * 1e-4, 5.99);
        assert!(test_sharp_null(&s).unwrap().reject);

        // hand-computed 2-D quadratic form
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = summary_with(vec![1.0, -1.0], sigma, 5.99);
        // Σ⁻¹ = [1, -0.5; -0.5, 2] / 1.75; μᵀΣ⁻¹μ = (1 + 1 + 2) / 1.75
        let expected = 4.0 / 1.75;
        let stat = test_sharp_null(&s).unwrap().statistic;
        assert!((stat - expected).abs() < 1e-12, "{stat} vs {expected}");
    }

    #[test]
    fn homogeneous_null_cases() {
        let s = summary_with(vec![0.7; 4], DMatrix::identity(4, 4), 1.0);
        let t = test_homogeneous_null(&s).unwrap();
        assert_eq!((t.c_star, t.statistic, t.reject), (0.7, 0.0, false));

        let s = summary_with(vec![1.0, 2.0, 6.0], DMatrix::identity(3, 3), 1.0);
        let t = test_homogeneous_null(&s).unwrap();
        assert!((t.c_star - 3.0).abs() < 1e-9);
        assert!((t.statistic - 14.0).abs() < 1e-6);
        assert!(t.reject);
    }

    #[test]
    fn homogeneous_statistic_never_exceeds_sharp() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..50 {
            let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let sigma = &b * b.transpose() + DMatrix::identity(3, 3) * 0.1;
            let mean: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = summary_with(mean, sigma, 7.8);
            let h = test_homogeneous_null(&s).unwrap();
            let z = test_sharp_null(&s).unwrap();
            assert!(h.statistic <= z.statistic + 1e-9);
        }
    }

    #[test]
    fn permuting_groups_leaves_decisions_unchanged() {
        let draws = iid_normal(2000, 3, 12).map(|v| v * 0.3)
            + DMatrix::from_fn(2000, 3, |_, g| [0.1, 0.5, 0.9][g]);
        let perm = [2usize, 0, 1];
        let permuted = DMatrix::from_fn(2000, 3, |t, g| draws[(t, perm[g])]);
        let a = summarize_draws(&draws, 0.05).unwrap();
        let b = summarize_draws(&permuted, 0.05).unwrap();
        for g in 0..3 {
            assert!((b.delta_mean[g] - a.delta_mean[perm[g]]).abs() < 1e-12);
            for h in 0..3 {
                assert!((b.sigma_hat[(g, h)] - a.sigma_hat[(perm[g], perm[h])]).abs() < 1e-12);
            }
        }
        assert!((a.r_alpha - b.r_alpha).abs() < 1e-9 * a.r_alpha);
        assert!((a.volume - b.volume).abs() < 1e-9 * a.volume);
        assert_eq!(test_sharp_null(&a).unwrap().reject, test_sharp_null(&b).unwrap().reject);
        assert_eq!(
            test_homogeneous_null(&a).unwrap().reject,
            test_homogeneous_null(&b).unwrap().reject
        );
    }
}

//! Fixtures and independent oracles for the integration tests. Nothing here
//! calls into the library's own linear algebra or kernel code.

#![allow(dead_code)]

use hgpr::model::{canonicalize, GroupedDataset, Observation, Theta};
use nalgebra::{DMatrix, DVector};

/// Relative nugget the library adds before its first factorization attempt.
pub const NUGGET_REL: f64 = 1e-8;

/// Two groups, six rows, both sides populated in each group.
pub fn fixture_j2_n6() -> (GroupedDataset, Theta) {
    let raw = vec![
        Observation::sharp(0.12, -0.8, "a"),
        Observation::sharp(-0.35, -0.3, "b"),
        Observation::sharp(0.91, 0.2, "a"),
        Observation::sharp(1.40, 0.6, "b"),
        Observation::sharp(0.05, -0.1, "a"),
        Observation::sharp(1.10, 0.9, "b"),
    ];
    let theta = Theta::from_vec(&[
        0.6, 0.20, 0.15, 0.25, 0.30, 1.5, 0.8, 1.2, 0.7, 2.0, 1.0,
    ])
    .unwrap();
    (canonicalize(&raw).unwrap(), theta)
}

fn se(x: f64, y: f64, variance: f64, inv_sq: f64) -> f64 {
    variance * (-0.5 * inv_sq * (x - y) * (x - y)).exp()
}

/// Mean and covariance of `(δ, Y)` written out entry by entry from the
/// generative model: `Y_k = f_{j(k)}(z_k) + T_k δ_{j(k)} + ε_k`, with
/// `Cov(f_j(x), f_l(y)) = K_g(x, y) + 1{j = l} K_f(x, y)`.
pub fn dense_joint(data: &GroupedDataset, theta: &Theta, diagonal_kdelta: bool) -> (DVector<f64>, DMatrix<f64>) {
    let j = data.n_groups();
    let n = data.len();
    let z = data.z();
    let g = data.groups();
    let t: Vec<bool> = (0..n).map(|i| z[i] >= 0.0).collect();
    let kd = |a: usize, b: usize| {
        if diagonal_kdelta {
            if a == b {
                theta.delta_kernel.variance
            } else {
                0.0
            }
        } else {
            se(
                (a + 1) as f64,
                (b + 1) as f64,
                theta.delta_kernel.variance,
                theta.delta_kernel.inv_sq_lengthscale,
            )
        }
    };
    let mut mean = DVector::zeros(j + n);
    let mut cov = DMatrix::zeros(j + n, j + n);
    for a in 0..j {
        mean[a] = theta.mu;
        for b in 0..j {
            cov[(a, b)] = kd(a, b);
        }
    }
    for k in 0..n {
        if t[k] {
            mean[j + k] = theta.mu;
        }
        for a in 0..j {
            let c = if t[k] { kd(a, g[k]) } else { 0.0 };
            cov[(a, j + k)] = c;
            cov[(j + k, a)] = c;
        }
        for l in 0..n {
            let mut c = se(z[k], z[l], theta.g_kernel.variance, theta.g_kernel.inv_sq_lengthscale);
            if g[k] == g[l] {
                c += se(z[k], z[l], theta.f_kernel.variance, theta.f_kernel.inv_sq_lengthscale);
            }
            if t[k] && t[l] {
                c += kd(g[k], g[l]);
            }
            if k == l {
                c += if t[k] {
                    theta.sigma_plus_sq[g[k]]
                } else {
                    theta.sigma_minus_sq[g[k]]
                };
            }
            cov[(j + k, j + l)] = c;
        }
    }
    (mean, cov)
}

/// Adds the library's first-attempt nugget to the trailing `Y` block.
pub fn nugget_y_block(cov: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut c = cov.clone();
    let n = c.nrows();
    let max = (k..n).map(|i| c[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    for i in k..n {
        c[(i, i)] += NUGGET_REL * max;
    }
    c
}

/// Conditions the leading `k` coordinates on the trailing ones with an
/// explicit inverse.
pub fn condition(mean: &DVector<f64>, cov: &DMatrix<f64>, k: usize, observed: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = mean.len() - k;
    let s11 = cov.view((0, 0), (k, k)).into_owned();
    let s12 = cov.view((0, k), (k, n)).into_owned();
    let s22 = cov.view((k, k), (n, n)).into_owned();
    let inv = s22.try_inverse().expect("invertible");
    let m = mean.rows(0, k) + &s12 * &inv * (observed - mean.rows(k, n));
    let s = s11 - &s12 * inv * s12.transpose();
    (m, s)
}

/// `log N(y; mean, cov)` through nalgebra's Cholesky.
pub fn gaussian_log_density(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let ch = cov.clone().cholesky().expect("positive definite");
    let r = y - mean;
    let sol = ch.l().solve_lower_triangular(&r).unwrap();
    let log_det: f64 = ch.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    -0.5 * (sol.norm_squared() + log_det + y.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Batch-means standard error of the mean of a scalar series, batch size
/// `⌊√T⌋`.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let b = (xs.len() as f64).sqrt().floor() as usize;
    let a = xs.len() / b;
    let means: Vec<f64> = (0..a)
        .map(|k| xs[k * b..(k + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let m = means.iter().sum::<f64>() / a as f64;
    let var_batch = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (a - 1) as f64;
    (var_batch / a as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

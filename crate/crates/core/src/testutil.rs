//! Fixtures and independent oracles shared by unit tests.

use nalgebra::{DMatrix, DVector};

use crate::linalg::JITTER_REL;
use crate::model::{canonicalize, GroupedDataset, Observation, Theta};

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
        0.6, // mu
        0.20, 0.15, // sigma minus
        0.25, 0.30, // sigma plus
        1.5, 0.8, 1.2, // r_delta, r_f, r_g
        0.7, 2.0, 1.0, // inv lengths
    ])
    .unwrap();
    (canonicalize(&raw).unwrap(), theta)
}

/// Adds the first-attempt nugget of the factorization policy.
pub fn nugget(a: &DMatrix<f64>) -> DMatrix<f64> {
    let max = a.diagonal().max();
    a + DMatrix::identity(a.nrows(), a.ncols()) * (JITTER_REL * max)
}

/// Partitioned-Gaussian conditioning of the leading `k` coordinates on the
/// trailing ones, with explicit inverses.
pub fn gaussian_condition_oracle(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    k: usize,
    observed: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = mean.len() - k;
    let s11 = cov.view((0, 0), (k, k)).into_owned();
    let s12 = cov.view((0, k), (k, n)).into_owned();
    let s22 = cov.view((k, k), (n, n)).into_owned();
    let inv = s22.try_inverse().expect("invertible");
    let m = mean.rows(0, k) + &s12 * &inv * (observed - mean.rows(k, n));
    let s = s11 - &s12 * inv * s12.transpose();
    (m, s)
}

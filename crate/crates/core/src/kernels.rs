//! Squared-exponential kernels and the structural matrices of the joint
//! Gaussian over (δ, Y): `K_g`, the within-group block matrix `D`, `K_δ`,
//! the treated-row indicator `H` and the noise diagonal `Σ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::model::{GroupedDataset, Theta};

/// `variance * exp(-0.5 * inv_sq_lengthscale * (x - y)²)`, i.e. the
/// amplitude r² and the inverse squared length-scale 1/l².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeParams {
    pub variance: f64,
    pub inv_sq_lengthscale: f64,
}

impl SeParams {
    pub fn new(variance: f64, inv_sq_lengthscale: f64) -> Result<Self> {
        let p = SeParams {
            variance,
            inv_sq_lengthscale,
        };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(HgprError::InvalidParameter(format!(
                "kernel parameters must be positive and finite, got {p:?}"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.variance > 0.0
            && self.variance.is_finite()
            && self.inv_sq_lengthscale > 0.0
            && self.inv_sq_lengthscale.is_finite()
    }
}

#[inline]
pub fn se_eval(x: f64, y: f64, p: &SeParams) -> f64 {
    let d = x - y;
    p.variance * (-0.5 * p.inv_sq_lengthscale * d * d).exp()
}

pub fn se_matrix(xs: &[f64], ys: &[f64], p: &SeParams) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| se_eval(xs[i], ys[j], p))
}

/// How the prior covariance of δ is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KdeltaMode {
    /// Squared-exponential kernel over group indices 1..J.
    #[default]
    #[serde(rename = "se")]
    SeOverIndex,
    /// `r_δ² I`: independent treatment effects. 1/l_δ² is ignored.
    #[serde(rename = "diag")]
    Diagonal,
}

impl std::str::FromStr for KdeltaMode {
    type Err = HgprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se" => Ok(KdeltaMode::SeOverIndex),
            "diag" | "diagonal" => Ok(KdeltaMode::Diagonal),
            other => Err(HgprError::InvalidConfig(format!(
                "unknown kdelta mode {other:?} (expected se or diag)"
            ))),
        }
    }
}

pub fn kdelta_matrix(n_groups: usize, p: &SeParams, mode: KdeltaMode) -> DMatrix<f64> {
    match mode {
        KdeltaMode::SeOverIndex => {
            let idx: Vec<f64> = (1..=n_groups).map(|j| j as f64).collect();
            se_matrix(&idx, &idx, p)
        }
        KdeltaMode::Diagonal => DMatrix::identity(n_groups, n_groups) * p.variance,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointComponents {
    pub kg: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub kdelta: DMatrix<f64>,
    /// N₊ × J indicator of the group of each treated row.
    pub h: DMatrix<f64>,
    /// Diagonal of Σ.
    pub sigma: DVector<f64>,
}

pub fn build_components(
    data: &GroupedDataset,
    theta: &Theta,
    mode: KdeltaMode,
) -> Result<JointComponents> {
    if !data.is_canonical() {
        return Err(HgprError::NonCanonical);
    }
    theta.validate()?;
    let j = data.n_groups();
    if theta.n_groups() != j {
        return Err(HgprError::DimensionMismatch {
            context: "theta groups vs dataset groups",
            expected: j,
            found: theta.n_groups(),
        });
    }
    let z = data.z();
    let groups = data.groups();
    let n = data.len();
    let n_minus = data.n_minus();

    let kg = se_matrix(z, z, &theta.g_kernel);
    let d = DMatrix::from_fn(n, n, |k, l| {
        if groups[k] == groups[l] {
            se_eval(z[k], z[l], &theta.f_kernel)
        } else {
            0.0
        }
    });
    let kdelta = kdelta_matrix(j, &theta.delta_kernel, mode);
    let h = DMatrix::from_fn(n - n_minus, j, |i, g| {
        if groups[n_minus + i] == g {
            1.0
        } else {
            0.0
        }
    });
    let sigma = DVector::from_fn(n, |i, _| {
        if i < n_minus {
            theta.sigma_minus_sq[groups[i]]
        } else {
            theta.sigma_plus_sq[groups[i]]
        }
    });
    Ok(JointComponents {
        kg,
        d,
        kdelta,
        h,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdFactor;
    use crate::model::{canonicalize, Observation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn unit() -> SeParams {
        SeParams::new(1.0, 1.0).unwrap()
    }

    fn theta_for(j: usize) -> Theta {
        let mut v = vec![0.3];
        v.extend((0..j).map(|g| 0.1 + 0.01 * g as f64));
        v.extend((0..j).map(|g| 0.2 + 0.01 * g as f64));
        v.extend([2.0, 0.7, 1.3, 0.5, 3.0, 1.5]);
        Theta::from_vec(&v).unwrap()
    }

    #[test]
    fn se_eval_examples() {
        assert_eq!(se_eval(0.0, 0.0, &unit()), 1.0);
        assert!((se_eval(0.0, 1.0, &unit()) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((se_eval(0.0, 1.0, &unit()) - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn se_matrix_shapes() {
        let p = SeParams::new(2.5, 4.0).unwrap();
        assert_eq!(se_matrix(&[0.0], &[0.0], &p), DMatrix::from_element(1, 1, 2.5));
        let m = se_matrix(&[0.1, -0.3, 0.8], &[0.1, -0.3, 0.8], &p);
        assert_eq!(m, m.transpose());
        assert!(m.diagonal().iter().all(|&d| d == 2.5));
    }

    #[test]
    fn jittered_se_matrix_factorizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(100);
        for _ in 0..100 {
            let n = rng.random_range(1..40);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = SeParams::new(rng.random_range(0.1..5.0), rng.random_range(0.1..50.0)).unwrap();
            let m = se_matrix(&xs, &xs, &p);
            let f = SpdFactor::new(&m).unwrap();
            assert!(f.jitter() <= 1e-8 * p.variance * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_group_all_control() {
        let data = canonicalize(&[
            Observation::sharp(0.0, -0.5, "a"),
            Observation::sharp(0.0, -0.2, "a"),
        ])
        .unwrap();
        let t = theta_for(1);
        let c = build_components(&data, &t, KdeltaMode::SeOverIndex).unwrap();
        assert_eq!(c.h.nrows(), 0);
        assert_eq!(c.d, se_matrix(data.z(), data.z(), &t.f_kernel));
    }

    #[test]
    fn diagonal_kdelta() {
        let p = SeParams::new(2.0, 9.0).unwrap();
        assert_eq!(kdelta_matrix(3, &p, KdeltaMode::Diagonal), DMatrix::identity(3, 3) * 2.0);
    }

    #[test]
    fn d_has_eight_nonzeros_for_two_by_two_design() {
        let data = canonicalize(&[
            Observation::sharp(0.0, -0.5, "a"),
            Observation::sharp(0.0, 0.5, "a"),
            Observation::sharp(0.0, -0.4, "b"),
            Observation::sharp(0.0, 0.4, "b"),
        ])
        .unwrap();
        let c = build_components(&data, &theta_for(2), KdeltaMode::SeOverIndex).unwrap();
        // brute-force enumeration of same-group index pairs
        let g = data.groups();
        let same: usize = (0..4)
            .flat_map(|k| (0..4).map(move |l| (k, l)))
            .filter(|&(k, l)| g[k] == g[l])
            .count();
        assert_eq!(same, 8);
        assert_eq!(c.d.iter().filter(|&&v| v != 0.0).count(), same);
        // canonical order is (a-, b-, a+, b+)
        assert_eq!(g, &[0, 1, 0, 1]);
        assert_eq!(c.d[(0, 1)], 0.0);
        assert!(c.d[(0, 2)] > 0.0);
    }

    #[test]
    fn h_and_sigma_structure() {
        let data = canonicalize(&[
            Observation::sharp(0.0, -0.5, "a"),
            Observation::sharp(0.0, 0.5, "a"),
            Observation::sharp(0.0, 0.1, "a"),
            Observation::sharp(0.0, -0.4, "b"),
            Observation::sharp(0.0, 0.4, "b"),
        ])
        .unwrap();
        let t = theta_for(2);
        let c = build_components(&data, &t, KdeltaMode::SeOverIndex).unwrap();
        let ones = DVector::from_element(2, 1.0);
        assert_eq!(&c.h * ones, DVector::from_element(3, 1.0));
        let col_sums: Vec<f64> = c.h.column_iter().map(|c| c.sum()).collect();
        assert_eq!(col_sums, vec![2.0, 1.0]);
        assert_eq!(c.sigma[0], t.sigma_minus_sq[0]);
        assert_eq!(c.sigma[1], t.sigma_minus_sq[1]);
        assert_eq!(c.sigma[4], t.sigma_plus_sq[1]);
        let total = &c.kg + &c.d + DMatrix::from_diagonal(&c.sigma);
        assert!(SpdFactor::new(&total).is_ok());
    }

    #[test]
    fn non_canonical_dataset_rejected() {
        let mut data = canonicalize(&[
            Observation::sharp(0.0, -0.5, "a"),
            Observation::sharp(0.0, 0.5, "a"),
        ])
        .unwrap();
        data.z.swap(0, 1);
        assert!(matches!(
            build_components(&data, &theta_for(1), KdeltaMode::SeOverIndex),
            Err(HgprError::NonCanonical)
        ));
    }

    proptest! {
        #[test]
        fn se_eval_symmetric(x in -10.0f64..10.0, y in -10.0f64..10.0,
                             v in 0.01f64..10.0, inv in 0.01f64..10.0) {
            let p = SeParams::new(v, inv).unwrap();
            prop_assert_eq!(se_eval(x, y, &p), se_eval(y, x, &p));
            prop_assert_eq!(se_eval(x, x, &p), v);
        }

        #[test]
        fn within_group_permutation_permutes_components(seed in 0u64..1000) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let raw: Vec<Observation> = (0..12)
                .map(|i| Observation::sharp(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    if i % 3 == 0 { "x" } else { "y" },
                ))
                .collect();
            let data = canonicalize(&raw).unwrap();
            // swap the first two canonical rows that share side and group
            let n = data.len();
            let pair = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).find(|&(a, b)| {
                data.groups()[a] == data.groups()[b] && data.is_treated(a) == data.is_treated(b)
            });
            if let Some((a, b)) = pair {
                let mut raw2 = raw.clone();
                raw2.swap(data.source_index()[a], data.source_index()[b]);
                let data2 = canonicalize(&raw2).unwrap();
                let t = theta_for(data.n_groups());
                let c1 = build_components(&data, &t, KdeltaMode::SeOverIndex).unwrap();
                let c2 = build_components(&data2, &t, KdeltaMode::SeOverIndex).unwrap();
                let perm: Vec<usize> = (0..n).map(|i| if i == a { b } else if i == b { a } else { i }).collect();
                for k in 0..n {
                    for l in 0..n {
                        prop_assert_eq!(c2.kg[(k, l)], c1.kg[(perm[k], perm[l])]);
                        prop_assert_eq!(c2.d[(k, l)], c1.d[(perm[k], perm[l])]);
                    }
                    prop_assert_eq!(c2.sigma[k], c1.sigma[perm[k]]);
                }
            }
        }
    }
}

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{HgprError, Result};
use crate::kernels::JointComponents;
use crate::linalg::SpdFactor;
use crate::model::Theta;

/// Mean and block covariance of (δ, Y) once f and g are integrated out.
#[derive(Clone, Debug, PartialEq)]
pub struct JointGaussian {
    pub mu_delta: DVector<f64>,
    pub mu_y: DVector<f64>,
    pub lambda11: DMatrix<f64>,
    pub lambda12: DMatrix<f64>,
    pub lambda22: DMatrix<f64>,
}

impl JointGaussian {
    pub fn n_groups(&self) -> usize {
        self.mu_delta.len()
    }

    pub fn n_obs(&self) -> usize {
        self.mu_y.len()
    }

    /// The full `(J + N) × (J + N)` covariance.
    pub fn full_covariance(&self) -> DMatrix<f64> {
        let (j, n) = (self.n_groups(), self.n_obs());
        let mut full = DMatrix::zeros(j + n, j + n);
        full.view_mut((0, 0), (j, j)).copy_from(&self.lambda11);
        full.view_mut((0, j), (j, n)).copy_from(&self.lambda12);
        full.view_mut((j, 0), (n, j)).copy_from(&self.lambda12.transpose());
        full.view_mut((j, j), (n, n)).copy_from(&self.lambda22);
        full
    }

    pub fn full_mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.n_groups() + self.n_obs());
        m.rows_mut(0, self.n_groups()).copy_from(&self.mu_delta);
        m.rows_mut(self.n_groups(), self.n_obs()).copy_from(&self.mu_y);
        m
    }
}

/// Posterior of δ given Y at fixed θ.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl DeltaPosterior {
    /// Exact draw `mean + chol(cov) ξ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let f = SpdFactor::new(&self.cov)?;
        let xi = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.mean + f.l() * xi)
    }
}

pub fn assemble_joint(components: &JointComponents, theta: &Theta) -> Result<JointGaussian> {
    let n = components.kg.nrows();
    let j = components.kdelta.nrows();
    let n_plus = components.h.nrows();
    let checks = [
        ("kg columns", n, components.kg.ncols()),
        ("d rows", n, components.d.nrows()),
        ("d columns", n, components.d.ncols()),
        ("sigma length", n, components.sigma.len()),
        ("kdelta columns", j, components.kdelta.ncols()),
        ("h columns", j, components.h.ncols()),
        ("theta groups", j, theta.n_groups()),
    ];
    for (context, expected, found) in checks {
        if expected != found {
            return Err(HgprError::DimensionMismatch {
                context,
                expected,
                found,
            });
        }
    }
    if n_plus > n {
        return Err(HgprError::DimensionMismatch {
            context: "treated rows",
            expected: n,
            found: n_plus,
        });
    }
    let n_minus = n - n_plus;

    let mu_delta = DVector::from_element(j, theta.mu);
    let mu_y = DVector::from_fn(n, |i, _| if i < n_minus { 0.0 } else { theta.mu });

    let kd_ht = &components.kdelta * components.h.transpose();
    let mut lambda12 = DMatrix::zeros(j, n);
    lambda12.view_mut((0, n_minus), (j, n_plus)).copy_from(&kd_ht);

    let mut lambda22 = &components.kg + &components.d + DMatrix::from_diagonal(&components.sigma);
    let hkh = &components.h * &kd_ht;
    let mut block = lambda22.view_mut((n_minus, n_minus), (n_plus, n_plus));
    block += hkh;

    Ok(JointGaussian {
        mu_delta,
        mu_y,
        lambda11: components.kdelta.clone(),
        lambda12,
        lambda22,
    })
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(HgprError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// `log N(Y; mu_Y, Λ₂₂)` from a factor of Λ₂₂.
pub(crate) fn log_marginal_from_factor(factor: &SpdFactor, resid: &DVector<f64>) -> f64 {
    let n = resid.len() as f64;
    -0.5 * (factor.quad_form(resid) + factor.log_det() + n * (2.0 * PI).ln())
}

pub fn log_marginal(y: &DVector<f64>, jg: &JointGaussian) -> Result<f64> {
    check_len("Y length", jg.n_obs(), y.len())?;
    let factor = SpdFactor::new(&jg.lambda22)?;
    Ok(log_marginal_from_factor(&factor, &(y - &jg.mu_y)))
}

/// Gaussian conditioning of δ on Y given a factor of Λ₂₂ and Λ₂₁ = Λ₁₂ᵀ.
pub(crate) fn conditional_from_factor(
    factor: &SpdFactor,
    lambda21: &DMatrix<f64>,
    lambda11: &DMatrix<f64>,
    mu_delta: &DVector<f64>,
    resid: &DVector<f64>,
) -> DeltaPosterior {
    let w = factor.solve_lower_mat(lambda21);
    let r = factor.solve_lower(resid);
    let mean = mu_delta + w.transpose() * r;
    let cov = lambda11 - w.transpose() * &w;
    let cov = (&cov + cov.transpose()) * 0.5;
    DeltaPosterior { mean, cov }
}

pub fn delta_conditional(jg: &JointGaussian, y: &DVector<f64>) -> Result<DeltaPosterior> {
    check_len("Y length", jg.n_obs(), y.len())?;
    let factor = SpdFactor::new(&jg.lambda22)?;
    Ok(conditional_from_factor(
        &factor,
        &jg.lambda12.transpose(),
        &jg.lambda11,
        &jg.mu_delta,
        &(y - &jg.mu_y),
    ))
}

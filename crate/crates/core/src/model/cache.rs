//! Per-chain likelihood state.
//!
//! Λ₂₂ is kept as separate addends: the unit-amplitude shapes of `K_g` and
//! `D`, the `K_δ` matrix that feeds `H K_δ Hᵀ`, and the noise diagonal. A
//! single-coordinate update recomputes only the addend it touches (an
//! amplitude change needs no kernel evaluations at all), re-sums the lower
//! triangle and refactorizes. A μ update reuses the current factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{HgprError, Result};
use crate::kernels::{kdelta_matrix, KdeltaMode};
use crate::linalg::SpdFactor;
use crate::model::joint::{conditional_from_factor, log_marginal_from_factor};
use crate::model::{Coordinate, DeltaPosterior, GroupedDataset, Theta};

#[derive(Clone, Debug)]
pub struct LikelihoodCache {
    y: DVector<f64>,
    groups: Vec<usize>,
    n_minus: usize,
    n_groups: usize,
    mode: KdeltaMode,
    /// Lower triangle of (z_k − z_l)².
    sq_dist: DMatrix<f64>,
    g_shape: DMatrix<f64>,
    f_shape: DMatrix<f64>,
    kdelta: DMatrix<f64>,
    theta: Theta,
    factor: SpdFactor,
    log_marginal: f64,
}

/// A proposed single-coordinate move with everything needed to commit it.
#[derive(Debug)]
pub struct Candidate {
    theta: Theta,
    g_shape: Option<DMatrix<f64>>,
    f_shape: Option<DMatrix<f64>>,
    kdelta: Option<DMatrix<f64>>,
    factor: Option<SpdFactor>,
    log_marginal: f64,
}

impl Candidate {
    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }
}

impl LikelihoodCache {
    pub fn new(data: &GroupedDataset, theta: &Theta, mode: KdeltaMode) -> Result<Self> {
        if !data.is_canonical() {
            return Err(HgprError::NonCanonical);
        }
        theta.validate()?;
        if theta.n_groups() != data.n_groups() {
            return Err(HgprError::DimensionMismatch {
                context: "theta groups vs dataset groups",
                expected: data.n_groups(),
                found: theta.n_groups(),
            });
        }
        let z = data.z();
        let n = z.len();
        let mut sq_dist = DMatrix::zeros(n, n);
        for l in 0..n {
            for k in l..n {
                let d = z[k] - z[l];
                sq_dist[(k, l)] = d * d;
            }
        }
        let groups = data.groups().to_vec();
        let g_shape = shape(&sq_dist, theta.g_kernel.inv_sq_lengthscale, None);
        let f_shape = shape(&sq_dist, theta.f_kernel.inv_sq_lengthscale, Some(&groups));
        let kdelta = kdelta_matrix(data.n_groups(), &theta.delta_kernel, mode);
        let mut cache = LikelihoodCache {
            y: DVector::from_column_slice(data.y()),
            groups,
            n_minus: data.n_minus(),
            n_groups: data.n_groups(),
            mode,
            sq_dist,
            g_shape,
            f_shape,
            kdelta,
            theta: theta.clone(),
            factor: SpdFactor::new(&DMatrix::zeros(0, 0))?,
            log_marginal: 0.0,
        };
        let lambda22 = cache.lambda22_lower(&cache.g_shape, &cache.f_shape, &cache.kdelta, theta);
        cache.factor = SpdFactor::from_lower(lambda22)?;
        cache.log_marginal = log_marginal_from_factor(&cache.factor, &cache.residual(theta.mu));
        Ok(cache)
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn kdelta_mode(&self) -> KdeltaMode {
        self.mode
    }

    fn residual(&self, mu: f64) -> DVector<f64> {
        let n_minus = self.n_minus;
        DVector::from_fn(self.y.len(), |i, _| {
            if i < n_minus {
                self.y[i]
            } else {
                self.y[i] - mu
            }
        })
    }

    fn lambda22_lower(
        &self,
        g_shape: &DMatrix<f64>,
        f_shape: &DMatrix<f64>,
        kdelta: &DMatrix<f64>,
        theta: &Theta,
    ) -> DMatrix<f64> {
        let n = self.y.len();
        let rg = theta.g_kernel.variance;
        let rf = theta.f_kernel.variance;
        let mut out = DMatrix::zeros(n, n);
        {
            let o = out.as_mut_slice();
            let gs = g_shape.as_slice();
            let fs = f_shape.as_slice();
            for l in 0..n {
                let base = l * n;
                for k in l..n {
                    o[base + k] = rg * gs[base + k] + rf * fs[base + k];
                }
                if l >= self.n_minus {
                    let gl = self.groups[l];
                    for k in l..n {
                        o[base + k] += kdelta[(self.groups[k], gl)];
                    }
                }
                let var = if l < self.n_minus {
                    theta.sigma_minus_sq[self.groups[l]]
                } else {
                    theta.sigma_plus_sq[self.groups[l]]
                };
                o[base + l] += var;
            }
        }
        out
    }

    /// Dense Λ₂₂ (both triangles) for the current state.
    pub fn lambda22(&self) -> DMatrix<f64> {
        let lower = self.lambda22_lower(&self.g_shape, &self.f_shape, &self.kdelta, &self.theta);
        let n = lower.nrows();
        DMatrix::from_fn(n, n, |k, l| if k >= l { lower[(k, l)] } else { lower[(l, k)] })
    }

    /// Evaluates the log marginal likelihood with coordinate `c` set to
    /// `value`, leaving the cache untouched.
    pub fn evaluate(&self, c: Coordinate, value: f64) -> Result<Candidate> {
        let mut theta = self.theta.clone();
        theta.set(c, value);
        if c.is_positive() && !(value > 0.0 && value.is_finite()) {
            return Err(HgprError::InvalidParameter(format!(
                "{} = {value} must be positive and finite",
                c.name()
            )));
        }
        let mut cand = Candidate {
            theta,
            g_shape: None,
            f_shape: None,
            kdelta: None,
            factor: None,
            log_marginal: 0.0,
        };
        let refactor = match c {
            Coordinate::Mu => false,
            Coordinate::GInvSqLength => {
                cand.g_shape = Some(shape(&self.sq_dist, value, None));
                true
            }
            Coordinate::FInvSqLength => {
                cand.f_shape = Some(shape(&self.sq_dist, value, Some(&self.groups)));
                true
            }
            Coordinate::DeltaVariance => {
                cand.kdelta = Some(kdelta_matrix(self.n_groups, &cand.theta.delta_kernel, self.mode));
                true
            }
            Coordinate::DeltaInvSqLength => match self.mode {
                KdeltaMode::SeOverIndex => {
                    cand.kdelta =
                        Some(kdelta_matrix(self.n_groups, &cand.theta.delta_kernel, self.mode));
                    true
                }
                KdeltaMode::Diagonal => false,
            },
            Coordinate::SigmaMinus(_)
            | Coordinate::SigmaPlus(_)
            | Coordinate::FVariance
            | Coordinate::GVariance => true,
        };
        let resid = self.residual(cand.theta.mu);
        if refactor {
            let lambda22 = self.lambda22_lower(
                cand.g_shape.as_ref().unwrap_or(&self.g_shape),
                cand.f_shape.as_ref().unwrap_or(&self.f_shape),
                cand.kdelta.as_ref().unwrap_or(&self.kdelta),
                &cand.theta,
            );
            let factor = SpdFactor::from_lower(lambda22)?;
            cand.log_marginal = log_marginal_from_factor(&factor, &resid);
            cand.factor = Some(factor);
        } else {
            cand.log_marginal = log_marginal_from_factor(&self.factor, &resid);
        }
        if !cand.log_marginal.is_finite() {
            return Err(HgprError::NotPositiveDefinite {
                dim: self.y.len(),
                jitter: f64::NAN,
            });
        }
        Ok(cand)
    }

    pub fn commit(&mut self, cand: Candidate) {
        self.theta = cand.theta;
        if let Some(g) = cand.g_shape {
            self.g_shape = g;
        }
        if let Some(f) = cand.f_shape {
            self.f_shape = f;
        }
        if let Some(k) = cand.kdelta {
            self.kdelta = k;
        }
        if let Some(f) = cand.factor {
            self.factor = f;
        }
        self.log_marginal = cand.log_marginal;
    }

    /// Conditional posterior of δ at the current θ.
    pub fn delta_posterior(&self) -> DeltaPosterior {
        let n = self.y.len();
        let j = self.n_groups;
        let lambda21 = DMatrix::from_fn(n, j, |i, g| {
            if i < self.n_minus {
                0.0
            } else {
                self.kdelta[(g, self.groups[i])]
            }
        });
        conditional_from_factor(
            &self.factor,
            &lambda21,
            &self.kdelta,
            &DVector::from_element(j, self.theta.mu),
            &self.residual(self.theta.mu),
        )
    }
}

/// Lower triangle of `exp(-0.5 * inv * d²)`, zeroed across groups when a
/// group vector is given.
fn shape(sq_dist: &DMatrix<f64>, inv: f64, groups: Option<&[usize]>) -> DMatrix<f64> {
    let n = sq_dist.nrows();
    let mut out = DMatrix::zeros(n, n);
    let o = out.as_mut_slice();
    let d = sq_dist.as_slice();
    for l in 0..n {
        let base = l * n;
        for k in l..n {
            if groups.is_none_or(|g| g[k] == g[l]) {
                o[base + k] = (-0.5 * inv * d[base + k]).exp();
            }
        }
    }
    out
}

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::kernels::SeParams;

/// Hyperparameter vector with `2J + 7` scalar entries, stored in natural
/// scale.
///
/// The flat coordinate order, which is also the sampler's visit order, is
/// μ, σ₋² by group, σ₊² by group, r_δ², r_f², r_g², 1/l_δ², 1/l_f², 1/l_g².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub mu: f64,
    pub sigma_minus_sq: Vec<f64>,
    pub sigma_plus_sq: Vec<f64>,
    pub f_kernel: SeParams,
    pub g_kernel: SeParams,
    pub delta_kernel: SeParams,
}

/// A named position in the flat θ vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coordinate {
    Mu,
    SigmaMinus(usize),
    SigmaPlus(usize),
    DeltaVariance,
    FVariance,
    GVariance,
    DeltaInvSqLength,
    FInvSqLength,
    GInvSqLength,
}

impl Coordinate {
    /// Maps a flat index to its coordinate for `n_groups` groups.
    pub fn from_index(index: usize, n_groups: usize) -> Option<Coordinate> {
        let j = n_groups;
        Some(match index {
            0 => Coordinate::Mu,
            i if i <= j => Coordinate::SigmaMinus(i - 1),
            i if i <= 2 * j => Coordinate::SigmaPlus(i - 1 - j),
            i => match i - 2 * j {
                1 => Coordinate::DeltaVariance,
                2 => Coordinate::FVariance,
                3 => Coordinate::GVariance,
                4 => Coordinate::DeltaInvSqLength,
                5 => Coordinate::FInvSqLength,
                6 => Coordinate::GInvSqLength,
                _ => return None,
            },
        })
    }

    pub fn index(self, n_groups: usize) -> usize {
        let j = n_groups;
        match self {
            Coordinate::Mu => 0,
            Coordinate::SigmaMinus(g) => 1 + g,
            Coordinate::SigmaPlus(g) => 1 + j + g,
            Coordinate::DeltaVariance => 2 * j + 1,
            Coordinate::FVariance => 2 * j + 2,
            Coordinate::GVariance => 2 * j + 3,
            Coordinate::DeltaInvSqLength => 2 * j + 4,
            Coordinate::FInvSqLength => 2 * j + 5,
            Coordinate::GInvSqLength => 2 * j + 6,
        }
    }

    /// Every coordinate except μ lives on (0, ∞).
    pub fn is_positive(self) -> bool {
        self != Coordinate::Mu
    }

    /// Column name used in trace exports. Groups are numbered from 1.
    pub fn name(self) -> String {
        match self {
            Coordinate::Mu => "mu".into(),
            Coordinate::SigmaMinus(g) => format!("sigma_minus_sq_{}", g + 1),
            Coordinate::SigmaPlus(g) => format!("sigma_plus_sq_{}", g + 1),
            Coordinate::DeltaVariance => "r_delta_sq".into(),
            Coordinate::FVariance => "r_f_sq".into(),
            Coordinate::GVariance => "r_g_sq".into(),
            Coordinate::DeltaInvSqLength => "inv_l_delta_sq".into(),
            Coordinate::FInvSqLength => "inv_l_f_sq".into(),
            Coordinate::GInvSqLength => "inv_l_g_sq".into(),
        }
    }
}

impl Theta {
    pub fn n_groups(&self) -> usize {
        self.sigma_minus_sq.len()
    }

    /// `2J + 7`.
    pub fn dim(&self) -> usize {
        2 * self.n_groups() + 7
    }

    pub fn coordinates(&self) -> impl Iterator<Item = Coordinate> + '_ {
        let j = self.n_groups();
        (0..self.dim()).map(move |i| Coordinate::from_index(i, j).expect("index within dim"))
    }

    pub fn get(&self, c: Coordinate) -> f64 {
        match c {
            Coordinate::Mu => self.mu,
            Coordinate::SigmaMinus(g) => self.sigma_minus_sq[g],
            Coordinate::SigmaPlus(g) => self.sigma_plus_sq[g],
            Coordinate::DeltaVariance => self.delta_kernel.variance,
            Coordinate::FVariance => self.f_kernel.variance,
            Coordinate::GVariance => self.g_kernel.variance,
            Coordinate::DeltaInvSqLength => self.delta_kernel.inv_sq_lengthscale,
            Coordinate::FInvSqLength => self.f_kernel.inv_sq_lengthscale,
            Coordinate::GInvSqLength => self.g_kernel.inv_sq_lengthscale,
        }
    }

    pub fn set(&mut self, c: Coordinate, value: f64) {
        match c {
            Coordinate::Mu => self.mu = value,
            Coordinate::SigmaMinus(g) => self.sigma_minus_sq[g] = value,
            Coordinate::SigmaPlus(g) => self.sigma_plus_sq[g] = value,
            Coordinate::DeltaVariance => self.delta_kernel.variance = value,
            Coordinate::FVariance => self.f_kernel.variance = value,
            Coordinate::GVariance => self.g_kernel.variance = value,
            Coordinate::DeltaInvSqLength => self.delta_kernel.inv_sq_lengthscale = value,
            Coordinate::FInvSqLength => self.f_kernel.inv_sq_lengthscale = value,
            Coordinate::GInvSqLength => self.g_kernel.inv_sq_lengthscale = value,
        }
    }

    /// Flat vector in coordinate order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.coordinates().map(|c| self.get(c)).collect()
    }

    pub fn from_vec(values: &[f64]) -> Result<Theta> {
        if values.len() < 9 || (values.len() - 7) % 2 != 0 {
            return Err(HgprError::InvalidParameter(format!(
                "theta vector length {} is not 2J + 7",
                values.len()
            )));
        }
        let j = (values.len() - 7) / 2;
        let unit = SeParams {
            variance: 1.0,
            inv_sq_lengthscale: 1.0,
        };
        let mut theta = Theta {
            mu: 0.0,
            sigma_minus_sq: vec![1.0; j],
            sigma_plus_sq: vec![1.0; j],
            f_kernel: unit,
            g_kernel: unit,
            delta_kernel: unit,
        };
        for (i, &v) in values.iter().enumerate() {
            theta.set(Coordinate::from_index(i, j).expect("in range"), v);
        }
        theta.validate()?;
        Ok(theta)
    }

    /// Checks finiteness, positivity of every non-μ entry and matching group
    /// counts.
    pub fn validate(&self) -> Result<()> {
        if self.sigma_plus_sq.len() != self.sigma_minus_sq.len() {
            return Err(HgprError::DimensionMismatch {
                context: "theta noise variances",
                expected: self.sigma_minus_sq.len(),
                found: self.sigma_plus_sq.len(),
            });
        }
        if self.sigma_minus_sq.is_empty() {
            return Err(HgprError::InvalidParameter("theta has no groups".into()));
        }
        if !self.mu.is_finite() {
            return Err(HgprError::InvalidParameter("mu is not finite".into()));
        }
        for c in self.coordinates().filter(|c| c.is_positive()) {
            let v = self.get(c);
            if !(v > 0.0 && v.is_finite()) {
                return Err(HgprError::InvalidParameter(format!(
                    "{} = {v} must be positive and finite",
                    c.name()
                )));
            }
        }
        Ok(())
    }
}

/// Priors on θ: half-Cauchy with a shared scale on every positive entry and
/// a normal on μ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub cauchy_scale: f64,
    pub mu_sd: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            cauchy_scale: 5.0,
            mu_sd: 100.0,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("cauchy_scale", self.cauchy_scale), ("mu_sd", self.mu_sd)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HgprError::InvalidConfig(format!(
                    "prior {name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    pub fn log_half_cauchy(&self, x: f64) -> f64 {
        let g = self.cauchy_scale;
        let u = x / g;
        (2.0 / (PI * g)).ln() - u.ln_1p_sq()
    }

    pub fn log_mu_density(&self, mu: f64) -> f64 {
        let s = self.mu_sd;
        -0.5 * (2.0 * PI * s * s).ln() - 0.5 * (mu / s).powi(2)
    }

    /// Log prior density of a single coordinate value.
    pub fn log_density(&self, c: Coordinate, value: f64) -> f64 {
        if c.is_positive() {
            if value > 0.0 {
                self.log_half_cauchy(value)
            } else {
                f64::NEG_INFINITY
            }
        } else {
            self.log_mu_density(value)
        }
    }

    /// Draws θ⁰ from the prior for `n_groups` groups. Half-Cauchy draws are
    /// truncated above at `upper` by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, n_groups: usize, upper: f64, rng: &mut R) -> Theta {
        let normal = Normal::new(0.0, self.mu_sd).expect("validated sd");
        let values: Vec<f64> = (0..2 * n_groups + 7)
            .map(|i| {
                if i == 0 {
                    normal.sample(rng)
                } else {
                    loop {
                        let u: f64 = rng.random();
                        let x = self.cauchy_scale * (0.5 * PI * u).tan();
                        if x > 0.0 && x <= upper {
                            break x;
                        }
                    }
                }
            })
            .collect();
        Theta::from_vec(&values).expect("prior draws are valid")
    }
}

trait Ln1pSq {
    fn ln_1p_sq(self) -> f64;
}

impl Ln1pSq for f64 {
    /// `ln(1 + x²)` without overflow for large `x`.
    fn ln_1p_sq(self) -> f64 {
        let a = self.abs();
        if a > 1e150 {
            2.0 * a.ln()
        } else {
            (a * a).ln_1p()
        }
    }
}

/// Log prior density of θ: half-Cauchy terms over the `2J + 6` positive
/// entries plus the normal term for μ.
pub fn log_prior(theta: &Theta, pc: &PriorConfig) -> Result<f64> {
    theta.validate()?;
    Ok(theta.coordinates().map(|c| pc.log_density(c, theta.get(c))).sum())
}

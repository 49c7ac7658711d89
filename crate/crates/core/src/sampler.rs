//! Metropolis-within-Gibbs over θ with exact δ draws.
//!
//! Each sweep visits every θ coordinate in flat order and proposes a move
//! for it alone: lognormal for positive coordinates, normal for μ. The
//! acceptance ratio uses `log p(Y | θ) + log p(θ)` with δ integrated out.
//! After the sweep, δ is drawn from its Gaussian conditional at the new θ.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::kernels::KdeltaMode;
use crate::model::{Coordinate, GroupedDataset, LikelihoodCache, PriorConfig, Theta};
use crate::rng::{seeded, CHAIN_STREAM};

/// Upper truncation of half-Cauchy draws used for θ⁰.
pub const INIT_TRUNCATION: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Standard deviation of the log-scale random walk on positive entries.
    pub proposal_sd_log: f64,
    pub proposal_sd_mu: f64,
    pub seed: u64,
    pub kdelta_mode: KdeltaMode,
    pub prior: PriorConfig,
    /// Flat θ indices held at their initial value.
    pub frozen: Vec<usize>,
    /// Starting point; drawn from the prior when absent.
    pub initial_theta: Option<Theta>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 3000,
            burn_in: 500,
            proposal_sd_log: 0.3,
            proposal_sd_mu: 0.5,
            seed: 0,
            kdelta_mode: KdeltaMode::SeOverIndex,
            prior: PriorConfig::default(),
            frozen: Vec::new(),
            initial_theta: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(HgprError::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(HgprError::InvalidConfig(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        for (name, v) in [
            ("proposal_sd_log", self.proposal_sd_log),
            ("proposal_sd_mu", self.proposal_sd_mu),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HgprError::InvalidConfig(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        self.prior.validate()?;
        if let Some(t) = &self.initial_theta {
            t.validate()?;
        }
        Ok(())
    }

    /// Frozen mask sized for a θ of dimension `dim`.
    fn frozen_mask(&self, dim: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; dim];
        for &i in &self.frozen {
            if i >= dim {
                return Err(HgprError::InvalidConfig(format!(
                    "frozen coordinate {i} out of range for theta of dimension {dim}"
                )));
            }
            mask[i] = true;
        }
        Ok(mask)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub theta: Theta,
    pub delta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    /// Post-burn-in samples.
    pub samples: Vec<ChainSample>,
    /// Per-coordinate acceptance rate over all sweeps, burn-in included.
    /// Frozen coordinates report 0.
    pub acceptance_rates: Vec<f64>,
    pub burn_in_used: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.samples.first().map_or(0, |s| s.delta.len())
    }

    /// Retained δ draws as a `T × J` matrix.
    pub fn delta_draws(&self) -> DMatrix<f64> {
        let j = self.n_groups();
        DMatrix::from_fn(self.len(), j, |t, g| self.samples[t].delta[g])
    }

    /// Retained values of one θ coordinate.
    pub fn theta_trace(&self, c: Coordinate) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta.get(c)).collect()
    }
}

/// Draws a candidate for one coordinate. Returns the candidate and
/// `log m(current | candidate) − log m(candidate | current)`.
pub fn propose<R: Rng + ?Sized>(
    coord: Coordinate,
    current: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> (f64, f64) {
    let eps: f64 = rng.sample(StandardNormal);
    if coord.is_positive() {
        let log_candidate = current.ln() + cfg.proposal_sd_log * eps;
        let candidate = log_candidate.exp();
        (candidate, lognormal_log_correction(current, candidate))
    } else {
        (current + cfg.proposal_sd_mu * eps, 0.0)
    }
}

/// Hastings correction of a lognormal random walk: `log θ' − log θ`.
pub fn lognormal_log_correction(current: f64, candidate: f64) -> f64 {
    candidate.ln() - current.ln()
}

/// One Metropolis step on coordinate `c`. A candidate whose likelihood
/// cannot be evaluated is rejected.
pub(crate) fn mh_step<R: Rng + ?Sized>(
    cache: &mut LikelihoodCache,
    c: Coordinate,
    candidate: f64,
    log_correction: f64,
    prior: &PriorConfig,
    rng: &mut R,
) -> bool {
    let u: f64 = rng.random();
    let current = cache.theta().get(c);
    let current_log_joint = cache.log_marginal() + prior.log_density(c, current);
    match cache.evaluate(c, candidate) {
        Ok(cand) => {
            let log_ratio = cand.log_marginal() + prior.log_density(c, candidate)
                - current_log_joint
                + log_correction;
            if log_ratio >= 0.0 || u.ln() < log_ratio {
                cache.commit(cand);
                true
            } else {
                false
            }
        }
        Err(e) => {
            warn!("rejecting {} = {candidate}: {e}", c.name());
            false
        }
    }
}

/// Visits every θ coordinate once. Returns the acceptance flag per flat
/// index (false for frozen coordinates).
pub fn mh_sweep<R: Rng + ?Sized>(
    cache: &mut LikelihoodCache,
    cfg: &SamplerConfig,
    frozen: &[bool],
    rng: &mut R,
) -> Vec<bool> {
    let coords: Vec<Coordinate> = cache.theta().coordinates().collect();
    coords
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if frozen.get(i).copied().unwrap_or(false) {
                return false;
            }
            let (candidate, log_correction) = propose(c, cache.theta().get(c), cfg, rng);
            mh_step(cache, c, candidate, log_correction, &cfg.prior, rng)
        })
        .collect()
}

/// Runs a full chain. Deterministic for a fixed `(data, cfg)`.
pub fn run_chain(data: &GroupedDataset, cfg: &SamplerConfig) -> Result<Chain> {
    cfg.validate()?;
    let j = data.n_groups();
    let mut rng = seeded(cfg.seed, CHAIN_STREAM);
    let theta0 = match &cfg.initial_theta {
        Some(t) => {
            if t.n_groups() != j {
                return Err(HgprError::DimensionMismatch {
                    context: "initial theta groups",
                    expected: j,
                    found: t.n_groups(),
                });
            }
            t.clone()
        }
        None => cfg.prior.sample(j, INIT_TRUNCATION, &mut rng),
    };
    let frozen = cfg.frozen_mask(theta0.dim())?;
    let mut cache = LikelihoodCache::new(data, &theta0, cfg.kdelta_mode)?;

    let mut accepted = vec![0usize; theta0.dim()];
    let mut samples = Vec::with_capacity(cfg.iterations - cfg.burn_in);
    for t in 0..cfg.iterations {
        let flags = mh_sweep(&mut cache, cfg, &frozen, &mut rng);
        for (a, f) in accepted.iter_mut().zip(flags) {
            *a += f as usize;
        }
        let delta = draw_delta(&cache, &mut rng)?;
        if t >= cfg.burn_in {
            samples.push(ChainSample {
                theta: cache.theta().clone(),
                delta: delta.as_slice().to_vec(),
            });
        }
    }
    let acceptance_rates = accepted
        .iter()
        .map(|&a| a as f64 / cfg.iterations as f64)
        .collect();
    Ok(Chain {
        samples,
        acceptance_rates,
        burn_in_used: cfg.burn_in,
    })
}

fn draw_delta<R: Rng + ?Sized>(cache: &LikelihoodCache, rng: &mut R) -> Result<DVector<f64>> {
    cache.delta_posterior().sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_components;
    use crate::model::{assemble_joint, delta_conditional};
    use crate::testutil::fixture_j2_n6;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn short_cfg() -> SamplerConfig {
        SamplerConfig {
            iterations: 60,
            burn_in: 10,
            seed: 42,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn mu_proposal_is_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (_, corr) = propose(Coordinate::Mu, 0.3, &SamplerConfig::default(), &mut rng);
            assert_eq!(corr, 0.0);
        }
    }

    #[test]
    fn lognormal_correction_examples() {
        assert_eq!(lognormal_log_correction(2.0, 2.0), 0.0);
        assert!((lognormal_log_correction(1.0, std::f64::consts::E) - 1.0).abs() < 1e-15);

        // density-ratio oracle: m(θ | θ') / m(θ' | θ) for lognormal(log ·, s²)
        let s = 0.3f64;
        let lognormal_pdf = |x: f64, loc: f64| {
            let z = (x.ln() - loc) / s;
            (-0.5 * z * z).exp() / (x * s * (2.0 * std::f64::consts::PI).sqrt())
        };
        let (cur, cand) = (1.0f64, std::f64::consts::E);
        let ratio = lognormal_pdf(cur, cand.ln()) / lognormal_pdf(cand, cur.ln());
        assert!((ratio.ln() - lognormal_log_correction(cur, cand)).abs() < 1e-12);
    }

    #[test]
    fn positive_proposals_stay_positive() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let cfg = SamplerConfig {
            proposal_sd_log: 5.0,
            ..SamplerConfig::default()
        };
        for _ in 0..1000 {
            let (v, _) = propose(Coordinate::FVariance, 1e-3, &cfg, &mut rng);
            assert!(v > 0.0);
        }
    }

    #[test]
    fn zero_log_ratio_always_accepted() {
        let (data, theta) = fixture_j2_n6();
        let mut cache = LikelihoodCache::new(&data, &theta, KdeltaMode::SeOverIndex).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let pc = PriorConfig::default();
        for _ in 0..500 {
            let cur = cache.theta().get(Coordinate::GVariance);
            assert!(mh_step(&mut cache, Coordinate::GVariance, cur, 0.0, &pc, &mut rng));
        }
    }

    #[test]
    fn failed_evaluation_is_rejection() {
        let (data, theta) = fixture_j2_n6();
        let mut cache = LikelihoodCache::new(&data, &theta, KdeltaMode::SeOverIndex).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let pc = PriorConfig::default();
        let before = cache.theta().clone();
        assert!(!mh_step(&mut cache, Coordinate::SigmaPlus(0), f64::INFINITY, 0.0, &pc, &mut rng));
        assert!(!mh_step(&mut cache, Coordinate::GInvSqLength, f64::NAN, 0.0, &pc, &mut rng));
        assert_eq!(cache.theta(), &before);
    }

    #[test]
    fn same_seed_same_chain() {
        let (data, _) = fixture_j2_n6();
        let a = run_chain(&data, &short_cfg()).unwrap();
        let b = run_chain(&data, &short_cfg()).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&data, &SamplerConfig { seed: 43, ..short_cfg() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn retained_count_and_positivity() {
        let (data, _) = fixture_j2_n6();
        let chain = run_chain(&data, &short_cfg()).unwrap();
        assert_eq!(chain.len(), 50);
        assert_eq!(chain.burn_in_used, 10);
        for s in &chain.samples {
            s.theta.validate().unwrap();
        }
        assert_eq!(chain.acceptance_rates.len(), 11);
        assert!(chain.acceptance_rates.iter().all(|&r| (0.0..=1.0).contains(&r)));
    }

    #[test]
    fn default_iterations_retain_2500() {
        let cfg = SamplerConfig::default();
        assert_eq!((cfg.iterations, cfg.burn_in), (3000, 500));
        assert_eq!(cfg.iterations - cfg.burn_in, 2500);
    }

    #[test]
    fn invalid_configs_rejected() {
        let (data, _) = fixture_j2_n6();
        let bad = SamplerConfig {
            burn_in: 60,
            ..short_cfg()
        };
        assert!(matches!(run_chain(&data, &bad), Err(HgprError::InvalidConfig(_))));
        let bad = SamplerConfig {
            proposal_sd_log: 0.0,
            ..short_cfg()
        };
        assert!(run_chain(&data, &bad).is_err());
        let bad = SamplerConfig {
            frozen: vec![11],
            ..short_cfg()
        };
        assert!(run_chain(&data, &bad).is_err());
    }

    #[test]
    fn frozen_theta_gives_exact_conditional_draws() {
        let (data, theta) = fixture_j2_n6();
        let cfg = SamplerConfig {
            iterations: 20_000,
            burn_in: 0,
            frozen: (0..theta.dim()).collect(),
            initial_theta: Some(theta.clone()),
            seed: 9,
            ..SamplerConfig::default()
        };
        let chain = run_chain(&data, &cfg).unwrap();
        assert!(chain.samples.iter().all(|s| s.theta == theta));

        let c = build_components(&data, &theta, KdeltaMode::SeOverIndex).unwrap();
        let jg = assemble_joint(&c, &theta).unwrap();
        let post = delta_conditional(&jg, &DVector::from_column_slice(data.y())).unwrap();
        let draws = chain.delta_draws();
        let t = draws.nrows() as f64;
        for g in 0..2 {
            let col = draws.column(g);
            let mean = col.mean();
            let se = (post.cov[(g, g)] / t).sqrt();
            assert!((mean - post.mean[g]).abs() < 3.0 * se, "group {g}");

            // lag-1 autocorrelation of exact draws is zero up to noise
            let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let var: f64 = centered.iter().map(|v| v * v).sum::<f64>();
            let lag1: f64 = centered.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
            assert!((lag1 / var).abs() < 4.0 / t.sqrt());
        }
    }
}

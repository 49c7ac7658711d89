//! Synthetic data generating processes and the replication runner.
//!
//! Every generator produces `Y = f_j(Z) + T·δ_j + ε` with `T = 1{Z ≥ 0}`
//! and records the truth it drew from. Rows are generated group by group,
//! so group `j` (0-based) carries the label `j + 1` and the canonical group
//! index equals the generator's.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Normal, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::inference::{summarize, PosteriorSummary};
use crate::kernels::{kdelta_matrix, se_matrix, KdeltaMode};
use crate::linalg::SpdFactor;
use crate::model::{canonicalize, GroupedDataset, Observation, Theta};
use crate::rng::{seeded, DATA_STREAM};
use crate::sampler::{run_chain, SamplerConfig};
use crate::windowing::{apply_cut, WindowPolicy};

/// Credible level used by the study runner.
pub const STUDY_ALPHA: f64 = 0.05;

pub const DGP3_SIGMA_A: f64 = 10.0;
pub const DGP3_RHO: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpKind {
    Dgp1,
    Dgp2,
    Dgp3,
}

impl std::str::FromStr for DgpKind {
    type Err = HgprError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dgp1" => Ok(DgpKind::Dgp1),
            "dgp2" => Ok(DgpKind::Dgp2),
            "dgp3" => Ok(DgpKind::Dgp3),
            other => Err(HgprError::InvalidConfig(format!(
                "unknown dgp {other:?} (expected dgp1, dgp2 or dgp3)"
            ))),
        }
    }
}

/// Treatment effects in the third process.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaMode {
    /// Gaussian with AR(1) correlation `ρ^{|i−j|}`.
    #[default]
    I,
    /// Each δ_j is one of two values drawn from U(−3, 3), with probability 1/2.
    II,
}

impl std::str::FromStr for DeltaMode {
    type Err = HgprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(DeltaMode::I),
            "II" | "ii" | "2" => Ok(DeltaMode::II),
            other => Err(HgprError::InvalidConfig(format!(
                "unknown delta mode {other:?} (expected I or II)"
            ))),
        }
    }
}

/// Shape of the error in the third process, scaled by σ_j.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMode {
    /// `(Binom(5, 1/2) − 2.5) / 1.25`.
    #[default]
    A,
    /// `Gamma(shape 4, rate 2) − 2`.
    B,
}

impl std::str::FromStr for ErrorMode {
    type Err = HgprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ErrorMode::A),
            "B" | "b" => Ok(ErrorMode::B),
            other => Err(HgprError::InvalidConfig(format!(
                "unknown error mode {other:?} (expected A or B)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub n_groups: usize,
    pub per_group: usize,
    #[serde(default)]
    pub delta_mode: DeltaMode,
    #[serde(default)]
    pub error_mode: ErrorMode,
}

impl DgpSpec {
    /// Default sizes: J = 10 for the first and third processes, J = 25 for
    /// the second, 100 rows per group throughout.
    pub fn new(kind: DgpKind) -> Self {
        let n_groups = match kind {
            DgpKind::Dgp2 => 25,
            _ => 10,
        };
        DgpSpec {
            kind,
            n_groups,
            per_group: 100,
            delta_mode: DeltaMode::I,
            error_mode: ErrorMode::A,
        }
    }

    pub fn with_size(mut self, n_groups: usize, per_group: usize) -> Self {
        self.n_groups = n_groups;
        self.per_group = per_group;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || self.per_group == 0 {
            return Err(HgprError::InvalidConfig(format!(
                "groups ({}) and rows per group ({}) must be positive",
                self.n_groups, self.per_group
            )));
        }
        Ok(())
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(GroupedDataset, TruthRecord)> {
        self.validate()?;
        match self.kind {
            DgpKind::Dgp1 => gen_dgp1(self.n_groups, self.per_group, rng),
            DgpKind::Dgp2 => gen_dgp2(self.n_groups, self.per_group, rng),
            DgpKind::Dgp3 => gen_dgp3(
                self.n_groups,
                self.per_group,
                self.delta_mode,
                self.error_mode,
                rng,
            ),
        }
    }
}

/// Regression function of one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFunction {
    /// `−0.555 − 0.0553j + 0.581z + 0.0060jz − 0.058z² + 0.01074j²`,
    /// with `j` 1-based.
    Quadratic { j: usize },
    /// `a₁z + a₂z² + a₃z³` left of the cutoff, `b₁z + b₂z² + b₃z³` right.
    PiecewiseCubic { a: [f64; 3], b: [f64; 3] },
    /// `p₀ + p₁z + p₂z² + p₃z³ + Σ c_k max(z − knot_k, 0)³`.
    CubicSpline {
        poly: [f64; 4],
        knots: Vec<f64>,
        coef: Vec<f64>,
    },
    /// Values at the sampled points only, as `(z, f(z))`.
    Tabulated { points: Vec<(f64, f64)> },
}

impl MeanFunction {
    /// `NaN` for a tabulated function off its points.
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            MeanFunction::Quadratic { j } => {
                let j = *j as f64;
                -0.555 - 0.0553 * j + 0.581 * z + 0.0060 * j * z - 0.058 * z * z
                    + 0.01074 * j * j
            }
            MeanFunction::PiecewiseCubic { a, b } => {
                let c = if z < 0.0 { a } else { b };
                z * (c[0] + z * (c[1] + z * c[2]))
            }
            MeanFunction::CubicSpline { poly, knots, coef } => {
                let base = poly[0] + z * (poly[1] + z * (poly[2] + z * poly[3]));
                knots
                    .iter()
                    .zip(coef)
                    .fold(base, |acc, (&k, &c)| acc + c * (z - k).max(0.0).powi(3))
            }
            MeanFunction::Tabulated { points } => points
                .iter()
                .find(|(x, _)| *x == z)
                .map_or(f64::NAN, |&(_, v)| v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthParams {
    Dgp1,
    Dgp2,
    Dgp3 {
        sigma_a: f64,
        knots: Vec<f64>,
        delta_mode: DeltaMode,
        error_mode: ErrorMode,
        rho: Option<f64>,
        tau: Option<(f64, f64)>,
    },
    Model { theta: Theta, kdelta_mode: KdeltaMode },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub delta: Vec<f64>,
    pub mean_functions: Vec<MeanFunction>,
    /// Per-group noise variance σ_j² (the scale of the error shape for the
    /// third process). For the model generator, the control-side variance.
    pub noise_var: Vec<f64>,
    pub params: TruthParams,
    /// Noise draws in the canonical row order of the dataset.
    pub noise: Vec<f64>,
}

struct RawRow {
    z: f64,
    f: f64,
    eps: f64,
    group: usize,
}

fn assemble(rows: &[RawRow], delta: &[f64]) -> Result<(GroupedDataset, Vec<f64>)> {
    let raw: Vec<Observation> = rows
        .iter()
        .map(|r| {
            let t = if r.z >= 0.0 { delta[r.group] } else { 0.0 };
            Observation::sharp(r.f + t + r.eps, r.z, (r.group + 1).to_string())
        })
        .collect();
    let data = canonicalize(&raw)?;
    let noise = data.source_index().iter().map(|&i| rows[i].eps).collect();
    Ok((data, noise))
}

fn check_sizes(n_groups: usize, per_group: usize) -> Result<()> {
    DgpSpec::new(DgpKind::Dgp1)
        .with_size(n_groups, per_group)
        .validate()
}

fn uniform(lo: f64, hi: f64) -> Uniform<f64> {
    Uniform::new(lo, hi).expect("valid uniform bounds")
}

pub fn gen_dgp1<R: Rng + ?Sized>(
    n_groups: usize,
    per_group: usize,
    rng: &mut R,
) -> Result<(GroupedDataset, TruthRecord)> {
    check_sizes(n_groups, per_group)?;
    let noise = Normal::new(0.0, 0.1).unwrap();
    let z_dist = uniform(-1.0, 1.0);
    let mean_functions: Vec<MeanFunction> =
        (1..=n_groups).map(|j| MeanFunction::Quadratic { j }).collect();
    let mut rows = Vec::with_capacity(n_groups * per_group);
    for (g, f) in mean_functions.iter().enumerate() {
        for _ in 0..per_group {
            let z = z_dist.sample(rng);
            rows.push(RawRow {
                z,
                f: f.eval(z),
                eps: noise.sample(rng),
                group: g,
            });
        }
    }
    let delta = vec![0.0; n_groups];
    let (data, noise) = assemble(&rows, &delta)?;
    Ok((
        data,
        TruthRecord {
            delta,
            mean_functions,
            noise_var: vec![0.01; n_groups],
            params: TruthParams::Dgp1,
            noise,
        },
    ))
}

/// `Gamma(shape 3, scale 1) − 3`.
pub fn sample_dgp2_delta<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Gamma::new(3.0, 1.0).unwrap().sample(rng) - 3.0
}

/// `2 · Beta(2, 4) − 1`.
pub fn sample_dgp2_z<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * Beta::new(2.0, 4.0).unwrap().sample(rng) - 1.0
}

pub fn gen_dgp2<R: Rng + ?Sized>(
    n_groups: usize,
    per_group: usize,
    rng: &mut R,
) -> Result<(GroupedDataset, TruthRecord)> {
    check_sizes(n_groups, per_group)?;
    let delta: Vec<f64> = (0..n_groups).map(|_| sample_dgp2_delta(rng)).collect();
    let mut mean_functions = Vec::with_capacity(n_groups);
    let mut noise_var = Vec::with_capacity(n_groups);
    let mut rows = Vec::with_capacity(n_groups * per_group);
    for g in 0..n_groups {
        let a = [
            uniform(0.4, 1.4).sample(rng),
            uniform(3.0, 7.0).sample(rng),
            uniform(9.0, 11.0).sample(rng),
        ];
        let b = [
            uniform(0.4, 1.4).sample(rng),
            uniform(5.0, 9.0).sample(rng),
            uniform(3.0, 5.0).sample(rng),
        ];
        let f = MeanFunction::PiecewiseCubic { a, b };
        let var = uniform(0.5, 1.2).sample(rng);
        let noise = Normal::new(0.0, var.sqrt()).unwrap();
        for _ in 0..per_group {
            let z = sample_dgp2_z(rng);
            rows.push(RawRow {
                z,
                f: f.eval(z),
                eps: noise.sample(rng),
                group: g,
            });
        }
        mean_functions.push(f);
        noise_var.push(var);
    }
    let (data, noise) = assemble(&rows, &delta)?;
    Ok((
        data,
        TruthRecord {
            delta,
            mean_functions,
            noise_var,
            params: TruthParams::Dgp2,
            noise,
        },
    ))
}

/// Knots −0.9, −0.8, …, 0.9.
pub fn dgp3_knots() -> Vec<f64> {
    (-9..=9).map(|k| k as f64 / 10.0).collect()
}

/// `S_ij = ρ^{|i−j|}`.
pub fn ar1_covariance(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Treatment effects of the third process. Returns the draw and, for mode
/// II, the two support points.
pub fn sample_dgp3_delta<R: Rng + ?Sized>(
    n_groups: usize,
    mode: DeltaMode,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<(f64, f64)>)> {
    match mode {
        DeltaMode::I => {
            let f = SpdFactor::new(&ar1_covariance(n_groups, DGP3_RHO))?;
            let xi = DVector::from_fn(n_groups, |_, _| rng.sample::<f64, _>(StandardNormal));
            Ok(((f.l() * xi).as_slice().to_vec(), None))
        }
        DeltaMode::II => {
            let u = uniform(-3.0, 3.0);
            let tau = (u.sample(rng), u.sample(rng));
            let delta = (0..n_groups)
                .map(|_| if rng.random_bool(0.5) { tau.0 } else { tau.1 })
                .collect();
            Ok((delta, Some(tau)))
        }
    }
}

/// One draw of the unit-scale error shape.
pub fn sample_error_shape<R: Rng + ?Sized>(mode: ErrorMode, rng: &mut R) -> f64 {
    match mode {
        ErrorMode::A => (Binomial::new(5, 0.5).unwrap().sample(rng) as f64 - 2.5) / 1.25,
        ErrorMode::B => Gamma::new(4.0, 0.5).unwrap().sample(rng) - 2.0,
    }
}

pub fn gen_dgp3<R: Rng + ?Sized>(
    n_groups: usize,
    per_group: usize,
    delta_mode: DeltaMode,
    error_mode: ErrorMode,
    rng: &mut R,
) -> Result<(GroupedDataset, TruthRecord)> {
    check_sizes(n_groups, per_group)?;
    let (delta, tau) = sample_dgp3_delta(n_groups, delta_mode, rng)?;
    let knots = dgp3_knots();
    let coef_dist = Normal::new(0.0, DGP3_SIGMA_A).unwrap();
    let z_dist = uniform(-1.0, 1.0);
    let mut mean_functions = Vec::with_capacity(n_groups);
    let mut noise_var = Vec::with_capacity(n_groups);
    let mut rows = Vec::with_capacity(n_groups * per_group);
    for g in 0..n_groups {
        let poly = [0; 4].map(|_| coef_dist.sample(rng));
        let coef: Vec<f64> = knots.iter().map(|_| coef_dist.sample(rng)).collect();
        let f = MeanFunction::CubicSpline {
            poly,
            knots: knots.clone(),
            coef,
        };
        let var = uniform(0.25, 0.5).sample(rng);
        let sd = var.sqrt();
        for _ in 0..per_group {
            let z = z_dist.sample(rng);
            rows.push(RawRow {
                z,
                f: f.eval(z),
                eps: sd * sample_error_shape(error_mode, rng),
                group: g,
            });
        }
        mean_functions.push(f);
        noise_var.push(var);
    }
    let (data, noise) = assemble(&rows, &delta)?;
    Ok((
        data,
        TruthRecord {
            delta,
            mean_functions,
            noise_var,
            params: TruthParams::Dgp3 {
                sigma_a: DGP3_SIGMA_A,
                knots,
                delta_mode,
                error_mode,
                rho: (delta_mode == DeltaMode::I).then_some(DGP3_RHO),
                tau,
            },
            noise,
        },
    ))
}

fn gaussian_draw<R: Rng + ?Sized>(cov: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let f = SpdFactor::new(cov)?;
    let xi = DVector::from_fn(cov.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(f.l() * xi)
}

/// Draws a dataset from the hierarchical model itself at a known θ:
/// `g ~ GP(0, K_g)`, `f_j | g ~ GP(g, K_f)`, `δ ~ N(μ1, K_δ)` and Gaussian
/// noise with the side-specific variances. `Z ~ U(−1, 1)`.
pub fn gen_from_model<R: Rng + ?Sized>(
    theta: &Theta,
    per_group: usize,
    kdelta_mode: KdeltaMode,
    rng: &mut R,
) -> Result<(GroupedDataset, TruthRecord)> {
    theta.validate()?;
    let j = theta.n_groups();
    check_sizes(j, per_group)?;
    let n = j * per_group;
    let z_dist = uniform(-1.0, 1.0);
    let z: Vec<f64> = (0..n).map(|_| z_dist.sample(rng)).collect();
    let g = gaussian_draw(&se_matrix(&z, &z, &theta.g_kernel), rng)?;
    let mut f = g.clone();
    for grp in 0..j {
        let zs = &z[grp * per_group..(grp + 1) * per_group];
        let dev = gaussian_draw(&se_matrix(zs, zs, &theta.f_kernel), rng)?;
        for (k, v) in dev.iter().enumerate() {
            f[grp * per_group + k] += v;
        }
    }
    let delta_dev = gaussian_draw(&kdelta_matrix(j, &theta.delta_kernel, kdelta_mode), rng)?;
    let delta: Vec<f64> = delta_dev.iter().map(|d| theta.mu + d).collect();
    let rows: Vec<RawRow> = (0..n)
        .map(|i| {
            let grp = i / per_group;
            let var = if z[i] >= 0.0 {
                theta.sigma_plus_sq[grp]
            } else {
                theta.sigma_minus_sq[grp]
            };
            RawRow {
                z: z[i],
                f: f[i],
                eps: var.sqrt() * rng.sample::<f64, _>(StandardNormal),
                group: grp,
            }
        })
        .collect();
    let mean_functions = (0..j)
        .map(|grp| MeanFunction::Tabulated {
            points: (grp * per_group..(grp + 1) * per_group)
                .map(|i| (z[i], f[i]))
                .collect(),
        })
        .collect();
    let (data, noise) = assemble(&rows, &delta)?;
    Ok((
        data,
        TruthRecord {
            delta,
            mean_functions,
            noise_var: theta.sigma_minus_sq.clone(),
            params: TruthParams::Model {
                theta: theta.clone(),
                kdelta_mode,
            },
            noise,
        },
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub rmse: f64,
    pub mae: f64,
    pub abs_bias: f64,
    pub coverage: f64,
    pub avg_length: f64,
    pub multi_cover: f64,
    pub vol_root: f64,
}

impl MetricsRow {
    pub const FIELDS: [&'static str; 7] = [
        "rmse",
        "mae",
        "abs_bias",
        "coverage",
        "avg_length",
        "multi_cover",
        "vol_root",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.rmse,
            self.mae,
            self.abs_bias,
            self.coverage,
            self.avg_length,
            self.multi_cover,
            self.vol_root,
        ]
    }

    /// Field-wise mean. `None` for an empty slice.
    pub fn mean(rows: &[MetricsRow]) -> Option<MetricsRow> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let mut acc = [0.0; 7];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let [rmse, mae, abs_bias, coverage, avg_length, multi_cover, vol_root] = acc.map(|a| a / n);
        Some(MetricsRow {
            rmse,
            mae,
            abs_bias,
            coverage,
            avg_length,
            multi_cover,
            vol_root,
        })
    }
}

/// Metrics of one fitted replicate against the true δ.
pub fn evaluate_metrics(summary: &PosteriorSummary, delta_true: &[f64]) -> Result<MetricsRow> {
    let j = summary.n_groups();
    if delta_true.len() != j || summary.marginal_intervals.len() != j {
        return Err(HgprError::DimensionMismatch {
            context: "truth vs summary groups",
            expected: j,
            found: delta_true.len(),
        });
    }
    let n = j as f64;
    let err: Vec<f64> = summary
        .delta_mean
        .iter()
        .zip(delta_true)
        .map(|(e, t)| e - t)
        .collect();
    let covered = summary
        .marginal_intervals
        .iter()
        .zip(delta_true)
        .filter(|(&(lo, hi), &t)| lo <= t && t <= hi)
        .count();
    let length = summary
        .marginal_intervals
        .iter()
        .map(|(lo, hi)| hi - lo)
        .sum::<f64>();
    Ok(MetricsRow {
        rmse: (err.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        mae: err.iter().map(|e| e.abs()).sum::<f64>() / n,
        abs_bias: (err.iter().sum::<f64>() / n).abs(),
        coverage: covered as f64 / n,
        avg_length: length / n,
        multi_cover: if summary.region_contains(delta_true)? { 1.0 } else { 0.0 },
        vol_root: summary.volume.powf(1.0 / n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hgpr,
    HgprCut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: MetricsRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedReplicate {
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

/// Per-method results of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// Means over the successful replicates; `None` when all failed.
    pub mean: Option<MetricsRow>,
    pub rows: Vec<ReplicateRow>,
    pub failed: Vec<FailedReplicate>,
}

impl MethodReport {
    fn from_outcomes(method: Method, outcomes: Vec<(usize, u64, Result<MetricsRow>)>) -> Self {
        let mut rows = Vec::new();
        let mut failed = Vec::new();
        for (replicate, seed, out) in outcomes {
            match out {
                Ok(metrics) => rows.push(ReplicateRow {
                    replicate,
                    seed,
                    metrics,
                }),
                Err(e) => {
                    log::warn!("replicate {replicate} ({method:?}) failed: {e}");
                    failed.push(FailedReplicate {
                        replicate,
                        seed,
                        error: e.to_string(),
                    })
                }
            }
        }
        let metrics: Vec<MetricsRow> = rows.iter().map(|r| r.metrics).collect();
        MethodReport {
            method,
            mean: MetricsRow::mean(&metrics),
            rows,
            failed,
        }
    }

    pub fn n_failed(&self) -> usize {
        self.failed.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub spec: DgpSpec,
    pub replications: usize,
    pub base_seed: u64,
    pub alpha: f64,
    pub hgpr: MethodReport,
    /// Present when a window policy was supplied.
    pub hgpr_cut: Option<MethodReport>,
}

/// Fits one dataset and scores it against the truth.
pub fn fit_and_score(
    data: &GroupedDataset,
    truth: &TruthRecord,
    cfg: &SamplerConfig,
    alpha: f64,
) -> Result<MetricsRow> {
    let chain = run_chain(data, cfg)?;
    let summary = summarize(&chain, alpha)?;
    evaluate_metrics(&summary, &truth.delta)
}

/// Runs `replications` independent replicates. Replicate `r` draws its data
/// and its chain from seed `base_seed + r`; replicates run in parallel and
/// the report does not depend on scheduling.
pub fn run_study(
    spec: &DgpSpec,
    replications: usize,
    sampler_cfg: &SamplerConfig,
    cut: Option<&WindowPolicy>,
    base_seed: u64,
) -> Result<StudyReport> {
    spec.validate()?;
    sampler_cfg.validate()?;
    if let Some(p) = cut {
        p.validate()?;
    }
    if replications == 0 {
        return Err(HgprError::InvalidConfig("replications must be positive".into()));
    }
    type Outcome = (usize, u64, Result<MetricsRow>);
    let outcomes: Vec<(Outcome, Option<Outcome>)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r as u64);
            let cfg = SamplerConfig {
                seed,
                ..sampler_cfg.clone()
            };
            let generated = spec.generate(&mut seeded(seed, DATA_STREAM));
            let windowed = cut.map(|p| {
                let out = match &generated {
                    Ok((d, t)) => apply_cut(d, p).and_then(|d| fit_and_score(&d, t, &cfg, STUDY_ALPHA)),
                    Err(e) => Err(HgprError::InvalidParameter(format!("data generation failed: {e}"))),
                };
                (r, seed, out)
            });
            let full = generated.and_then(|(d, t)| fit_and_score(&d, &t, &cfg, STUDY_ALPHA));
            log::info!("replicate {r} done");
            ((r, seed, full), windowed)
        })
        .collect();
    let (full, windowed): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok(StudyReport {
        spec: *spec,
        replications,
        base_seed,
        alpha: STUDY_ALPHA,
        hgpr: MethodReport::from_outcomes(Method::Hgpr, full),
        hgpr_cut: cut.map(|_| {
            MethodReport::from_outcomes(Method::HgprCut, windowed.into_iter().flatten().collect())
        }),
    })
}

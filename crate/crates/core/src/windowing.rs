//! Restriction of a dataset to a window around the cutoff.
//!
//! The symmetric window is `[-h, h]`. When the running variable is skewed
//! towards one side the window is doubled on the sparse side: `[-h, 2h]`
//! when treated rows are scarce, `[-2h, h]` when control rows are.

use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::model::GroupedDataset;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewMode {
    #[default]
    None,
    /// Double the sparse side when the symmetric cut leaves one side with
    /// fewer than `1 / imbalance_ratio` times the rows of the other.
    Auto,
    ForceRight,
    ForceLeft,
}

impl std::str::FromStr for SkewMode {
    type Err = HgprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SkewMode::None),
            "auto" => Ok(SkewMode::Auto),
            "right" | "force_right" => Ok(SkewMode::ForceRight),
            "left" | "force_left" => Ok(SkewMode::ForceLeft),
            other => Err(HgprError::InvalidConfig(format!(
                "unknown skew mode {other:?} (expected none, auto, right or left)"
            ))),
        }
    }
}

pub const DEFAULT_IMBALANCE_RATIO: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub half_width: f64,
    #[serde(default)]
    pub skew_mode: SkewMode,
    #[serde(default = "default_ratio")]
    pub imbalance_ratio: f64,
}

fn default_ratio() -> f64 {
    DEFAULT_IMBALANCE_RATIO
}

impl WindowPolicy {
    pub fn new(half_width: f64, skew_mode: SkewMode) -> Result<Self> {
        let p = WindowPolicy {
            half_width,
            skew_mode,
            imbalance_ratio: DEFAULT_IMBALANCE_RATIO,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(HgprError::InvalidConfig(format!(
                "window half-width must be positive and finite, got {}",
                self.half_width
            )));
        }
        if !(self.imbalance_ratio > 1.0 && self.imbalance_ratio.is_finite()) {
            return Err(HgprError::InvalidConfig(format!(
                "imbalance ratio must exceed 1, got {}",
                self.imbalance_ratio
            )));
        }
        Ok(())
    }
}

/// A closed interval of the running variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    pub fn contains(&self, z: f64) -> bool {
        self.lower <= z && z <= self.upper
    }
}

/// Resolves the skew mode against `data` and returns the interval to keep.
pub fn resolve_window(data: &GroupedDataset, policy: &WindowPolicy) -> Result<Window> {
    policy.validate()?;
    let h = policy.half_width;
    let symmetric = Window {
        lower: -h,
        upper: h,
    };
    let right = Window {
        lower: -h,
        upper: 2.0 * h,
    };
    let left = Window {
        lower: -2.0 * h,
        upper: h,
    };
    Ok(match policy.skew_mode {
        SkewMode::None => symmetric,
        SkewMode::ForceRight => right,
        SkewMode::ForceLeft => left,
        SkewMode::Auto => {
            let (mut control, mut treated) = (0usize, 0usize);
            for (i, &z) in data.z().iter().enumerate() {
                if symmetric.contains(z) {
                    if data.is_treated(i) {
                        treated += 1;
                    } else {
                        control += 1;
                    }
                }
            }
            let (c, t) = (control as f64, treated as f64);
            if t < c / policy.imbalance_ratio {
                right
            } else if c < t / policy.imbalance_ratio {
                left
            } else {
                symmetric
            }
        }
    })
}

/// Keeps the rows inside an already resolved window.
pub fn apply_window(data: &GroupedDataset, window: Window) -> Result<GroupedDataset> {
    let out = data.filter_rows(|z| window.contains(z)).map_err(|e| match e {
        HgprError::EmptyGroup { label } => HgprError::UnidentifiableWindow {
            label,
            side: "both",
            lower: window.lower,
            upper: window.upper,
        },
        HgprError::EmptyDataset => HgprError::UnidentifiableWindow {
            label: data.labels()[0].clone(),
            side: "both",
            lower: window.lower,
            upper: window.upper,
        },
        other => other,
    })?;
    for j in 0..out.n_groups() {
        let side = if out.n_control()[j] == 0 {
            "control"
        } else if out.n_treated()[j] == 0 {
            "treated"
        } else {
            continue;
        };
        return Err(HgprError::UnidentifiableWindow {
            label: out.labels()[j].clone(),
            side,
            lower: window.lower,
            upper: window.upper,
        });
    }
    Ok(out)
}

pub fn apply_cut(data: &GroupedDataset, policy: &WindowPolicy) -> Result<GroupedDataset> {
    let window = resolve_window(data, policy)?;
    log::debug!("cutting to [{}, {}]", window.lower, window.upper);
    apply_window(data, window)
}

/// `1.06 · sd(z) · N^(-1/5)`. A normal-reference bandwidth, not an
/// Imbens–Kalyanaraman selector.
pub fn rule_of_thumb_half_width(data: &GroupedDataset) -> Result<f64> {
    let z = data.z();
    let n = z.len();
    if n < 2 {
        return Err(HgprError::InvalidConfig(
            "rule-of-thumb window needs at least two rows".into(),
        ));
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let h = 1.06 * var.sqrt() * (n as f64).powf(-0.2);
    if h > 0.0 {
        Ok(h)
    } else {
        Err(HgprError::InvalidConfig(
            "running variable is constant; cannot derive a window".into(),
        ))
    }
}

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};

/// One unit: outcome, running variable, treatment flag and group label.
///
/// The cutoff is fixed at `z = 0`; callers must shift running variables
/// beforehand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub z: f64,
    pub treated: bool,
    pub group: String,
}

impl Observation {
    /// Observation whose treatment flag follows the sharp design rule.
    pub fn sharp(y: f64, z: f64, group: impl Into<String>) -> Self {
        Observation {
            y,
            z,
            treated: z >= 0.0,
            group: group.into(),
        }
    }
}

/// Observations in canonical order: every control observation (groups
/// `0..J`, input order kept inside a group) followed by every treated
/// observation in the same group order.
///
/// Group indices are zero-based internally; `labels()[j]` is the original
/// label of group `j` and reports present it as group `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedDataset {
    pub(crate) y: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) group: Vec<usize>,
    pub(crate) source_index: Vec<usize>,
    pub(crate) n_control: Vec<usize>,
    pub(crate) n_treated: Vec<usize>,
    pub(crate) labels: Vec<String>,
    pub(crate) flag_overrides: usize,
}

/// Reorders raw observations into canonical order.
///
/// Labels map to indices by first appearance. Treatment flags are recomputed
/// as `z >= 0`; disagreeing input flags are overridden with a warning.
pub fn canonicalize(raw: &[Observation]) -> Result<GroupedDataset> {
    if raw.is_empty() {
        return Err(HgprError::EmptyDataset);
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index_of = std::collections::HashMap::new();
    let mut group_idx = Vec::with_capacity(raw.len());
    let mut flag_overrides = 0;
    for (i, obs) in raw.iter().enumerate() {
        if !obs.y.is_finite() {
            return Err(HgprError::NonFinite { field: "y", index: i });
        }
        if !obs.z.is_finite() {
            return Err(HgprError::NonFinite { field: "z", index: i });
        }
        if obs.treated != (obs.z >= 0.0) {
            flag_overrides += 1;
        }
        let j = *index_of.entry(obs.group.clone()).or_insert_with(|| {
            labels.push(obs.group.clone());
            labels.len() - 1
        });
        group_idx.push(j);
    }
    if flag_overrides > 0 {
        warn!(
            "{flag_overrides} treatment flag(s) disagree with the sharp rule z >= 0 and were overridden"
        );
    }

    let n_groups = labels.len();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // Stable sort keeps input order within (side, group).
    order.sort_by_key(|&i| (raw[i].z >= 0.0, group_idx[i]));

    let mut n_control = vec![0; n_groups];
    let mut n_treated = vec![0; n_groups];
    for (i, obs) in raw.iter().enumerate() {
        if obs.z >= 0.0 {
            n_treated[group_idx[i]] += 1;
        } else {
            n_control[group_idx[i]] += 1;
        }
    }

    Ok(GroupedDataset {
        y: order.iter().map(|&i| raw[i].y).collect(),
        z: order.iter().map(|&i| raw[i].z).collect(),
        group: order.iter().map(|&i| group_idx[i]).collect(),
        source_index: order,
        n_control,
        n_treated,
        labels,
        flag_overrides,
    })
}

impl GroupedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    /// N₋, the number of control observations.
    pub fn n_minus(&self) -> usize {
        self.n_control.iter().sum()
    }

    /// N₊, the number of treated observations.
    pub fn n_plus(&self) -> usize {
        self.n_treated.iter().sum()
    }

    pub fn n_control(&self) -> &[usize] {
        &self.n_control
    }

    pub fn n_treated(&self) -> &[usize] {
        &self.n_treated
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Zero-based group index of every canonical row.
    pub fn groups(&self) -> &[usize] {
        &self.group
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Position of each canonical row in the input it was built from.
    pub fn source_index(&self) -> &[usize] {
        &self.source_index
    }

    pub fn is_treated(&self, row: usize) -> bool {
        row >= self.n_minus()
    }

    /// Number of input treatment flags overridden by the sharp rule.
    pub fn flag_overrides(&self) -> usize {
        self.flag_overrides
    }

    /// Canonical rows as plain observations, in canonical order.
    pub fn observations(&self) -> Vec<Observation> {
        (0..self.len())
            .map(|i| Observation {
                y: self.y[i],
                z: self.z[i],
                treated: self.z[i] >= 0.0,
                group: self.labels[self.group[i]].clone(),
            })
            .collect()
    }

    /// Checks the canonical ordering invariants.
    pub fn is_canonical(&self) -> bool {
        let n = self.len();
        let n_minus = self.n_minus();
        if self.z.len() != n || self.group.len() != n || n_minus + self.n_plus() != n {
            return false;
        }
        let mut counts_c = vec![0; self.n_groups()];
        let mut counts_t = vec![0; self.n_groups()];
        let mut prev: Option<(bool, usize)> = None;
        for i in 0..n {
            let treated = i >= n_minus;
            if (self.z[i] >= 0.0) != treated || self.group[i] >= self.n_groups() {
                return false;
            }
            let key = (treated, self.group[i]);
            if prev.is_some_and(|p| p > key) {
                return false;
            }
            prev = Some(key);
            if treated {
                counts_t[self.group[i]] += 1;
            } else {
                counts_c[self.group[i]] += 1;
            }
        }
        counts_c == self.n_control && counts_t == self.n_treated
    }

    /// Keeps rows whose running variable passes `keep`, re-canonicalizing.
    /// Every group must keep at least one row.
    pub(crate) fn filter_rows(&self, keep: impl Fn(f64) -> bool) -> Result<GroupedDataset> {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| keep(self.z[i])).collect();
        if kept.is_empty() {
            return Err(HgprError::EmptyDataset);
        }
        let mut n_control = vec![0; self.n_groups()];
        let mut n_treated = vec![0; self.n_groups()];
        for &i in &kept {
            if self.is_treated(i) {
                n_treated[self.group[i]] += 1;
            } else {
                n_control[self.group[i]] += 1;
            }
        }
        if let Some(j) = (0..self.n_groups()).find(|&j| n_control[j] + n_treated[j] == 0) {
            return Err(HgprError::EmptyGroup {
                label: self.labels[j].clone(),
            });
        }
        Ok(GroupedDataset {
            y: kept.iter().map(|&i| self.y[i]).collect(),
            z: kept.iter().map(|&i| self.z[i]).collect(),
            group: kept.iter().map(|&i| self.group[i]).collect(),
            source_index: kept.iter().map(|&i| self.source_index[i]).collect(),
            n_control,
            n_treated,
            labels: self.labels.clone(),
            flag_overrides: self.flag_overrides,
        })
    }
}

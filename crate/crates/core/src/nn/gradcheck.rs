//! Central finite-difference verification of the analytic gradients.

use serde::{Deserialize, Serialize};

use super::model::NnModel;
use super::train::{loss, loss_and_grad};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const MAX_CHECK_BATCH: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Check at most this many evenly spaced entries per parameter group.
    /// `None` checks every entry.
    pub max_per_group: Option<usize>,
    /// Adds `delta` to analytic entry `(group, index)` before comparing.
    pub fault: Option<(usize, usize, f64)>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            max_per_group: None,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    /// Entry with the largest error.
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub groups: Vec<GroupError>,
}

impl GradCheckReport {
    pub fn checked(&self) -> usize {
        self.groups.iter().map(|g| g.checked).sum()
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn sample_indices(len: usize, max: Option<usize>, forced: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = match max {
        Some(m) if m < len => (0..m).map(|i| i * len / m).collect(),
        _ => (0..len).collect(),
    };
    if let Some(f) = forced {
        if f < len && !idx.contains(&f) {
            idx.push(f);
        }
    }
    idx
}

/// Compares analytic gradients with central differences, dropout disabled.
pub fn grad_check(
    model: &NnModel,
    x: &DenseMatrix,
    labels: &[u32],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    if x.rows() > MAX_CHECK_BATCH {
        return Err(Error::Config(format!(
            "gradient check batch of {} exceeds {MAX_CHECK_BATCH}",
            x.rows()
        )));
    }
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::Config(
            "finite-difference step must be positive".into(),
        ));
    }
    let (_, mut analytic) = loss_and_grad(model, x, labels, None)?;
    if let Some((g, i, delta)) = opts.fault {
        if g >= analytic.len() || i >= analytic[g].len() {
            return Err(Error::Config("fault position out of range".into()));
        }
        *analytic[g].get_mut(i) += delta;
    }
    let mut probe = model.clone();
    let mut groups = Vec::with_capacity(model.params.len());
    for (gi, group) in model.params.iter().enumerate() {
        let forced = opts.fault.filter(|f| f.0 == gi).map(|f| f.1);
        let idx = sample_indices(group.len(), opts.max_per_group, forced);
        let (mut worst, mut worst_index) = (0.0f64, 0);
        for &j in &idx {
            let orig = group.get(j);
            *probe.params[gi].get_mut(j) = orig + opts.step;
            let up = loss(&probe, x, labels)?;
            *probe.params[gi].get_mut(j) = orig - opts.step;
            let down = loss(&probe, x, labels)?;
            *probe.params[gi].get_mut(j) = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            let e = relative_error(analytic[gi].get(j), numeric);
            if e > worst {
                (worst, worst_index) = (e, j);
            }
        }
        groups.push(GroupError {
            name: group.name.clone(),
            checked: idx.len(),
            max_rel_error: worst,
            worst_index,
        });
    }
    Ok(GradCheckReport {
        max_rel_error: groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max),
        groups,
    })
}

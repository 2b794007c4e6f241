use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::PhasePoint;

use super::Observable;

/// Singular values with `sigma / sigma_max` above this count toward the rank.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSpectrum {
    pub rank: usize,
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub observables: Vec<String>,
    pub per_point: Vec<PointSpectrum>,
}

fn spectrum(obs: &[Observable], pt: &PhasePoint) -> Result<PointSpectrum> {
    let cols = 2 * pt.dim();
    let mut data = Vec::with_capacity(obs.len() * cols);
    for o in obs {
        data.extend(o.flat_gradient(pt)?);
    }
    let m = DMatrix::from_row_slice(obs.len(), cols, &data);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let max = sv.first().copied().unwrap_or(0.0);
    let rank = if max > 0.0 {
        sv.iter().filter(|s| **s / max > RANK_TOLERANCE).count()
    } else {
        0
    };
    Ok(PointSpectrum {
        rank,
        singular_values: sv,
    })
}

/// Gradient rank per point and its maximum over the points.
pub fn independence_rank_report(obs: &[Observable], pts: &[PhasePoint]) -> Result<RankReport> {
    if obs.is_empty() {
        return Err(LabError::Empty("no observables for the rank test".into()));
    }
    if pts.is_empty() {
        return Err(LabError::Empty("no points for the rank test".into()));
    }
    let per_point = pts.par_iter().map(|pt| spectrum(obs, pt)).collect::<Result<Vec<_>>>()?;
    Ok(RankReport {
        rank: per_point.iter().map(|s| s.rank).max().unwrap_or(0),
        observables: obs.iter().map(|o| o.name().to_string()).collect(),
        per_point,
    })
}

pub fn independence_rank(obs: &[Observable], pts: &[PhasePoint]) -> Result<usize> {
    Ok(independence_rank_report(obs, pts)?.rank)
}

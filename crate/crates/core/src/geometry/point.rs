use super::chart::Chart;
use crate::error::{LabError, Result};

/// Positions and conjugate momenta in a tagged chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub chart: Chart,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    /// Validated constructor: lengths must equal the chart dimension, all
    /// entries finite and `q` inside the chart domain.
    pub fn new(chart: Chart, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(LabError::LengthMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite(format!("momentum {i}")));
        }
        chart.check_domain(&q)?;
        Ok(PhasePoint { chart, q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `(q, p)` concatenated.
    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    /// Rebuilds a point from a flat `(q, p)` vector in the same chart.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let n = self.dim();
        if flat.len() != 2 * n {
            return Err(LabError::LengthMismatch {
                expected: 2 * n,
                got: flat.len(),
            });
        }
        PhasePoint::new(self.chart, flat[..n].to_vec(), flat[n..].to_vec())
    }
}

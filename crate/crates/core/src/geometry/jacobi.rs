use crate::dual::Dual;
use crate::error::{LabError, Result};

/// Orthogonal change of particle coordinates separating the center of mass.
///
/// Row `j < n` (1-based) is `(1, .., 1, -j, 0, .., 0) / sqrt(j (j + 1))` with
/// `j` leading ones; row `n` is the normalized all-ones center-of-mass row.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

pub fn jacobi_matrix(n: usize) -> Result<JacobiMatrix> {
    if n < 2 {
        return Err(LabError::Domain(format!(
            "Jacobi transform needs at least 2 particles, got {n}"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for j in 1..n {
        let norm = ((j * (j + 1)) as f64).sqrt();
        let mut row = vec![0.0; n];
        for entry in row.iter_mut().take(j) {
            *entry = 1.0 / norm;
        }
        row[j] = -(j as f64) / norm;
        rows.push(row);
    }
    rows.push(vec![1.0 / (n as f64).sqrt(); n]);
    Ok(JacobiMatrix { n, rows })
}

impl JacobiMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    /// `U x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `U^T z`, the inverse map.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (row, zj) in self.rows.iter().zip(z) {
            for (xi, a) in x.iter_mut().zip(row) {
                *xi += a * zj;
            }
        }
        x
    }

    /// Largest entry of `|U U^T - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, ri) in self.rows.iter().enumerate() {
            for (j, rj) in self.rows.iter().enumerate() {
                let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Maps particle positions and momenta to Jacobi coordinates. Because the
/// transform is orthogonal the momenta transform with the same matrix.
pub fn to_jacobi(x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != p.len() {
        return Err(LabError::LengthMismatch {
            expected: x.len(),
            got: p.len(),
        });
    }
    let u = jacobi_matrix(x.len())?;
    Ok((u.apply(x), u.apply(p)))
}

pub(crate) fn apply_rows(rows: &[Vec<f64>], x: &[Dual]) -> Vec<Dual> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .filter(|(a, _)| **a != 0.0)
                .map(|(a, xi)| xi.scale(*a))
                .sum()
        })
        .collect()
}

pub(crate) fn apply_rows_transpose(rows: &[Vec<f64>], z: &[Dual]) -> Vec<Dual> {
    let n = rows.first().map_or(0, Vec::len);
    let mut x = vec![Dual::zero(); n];
    for (row, zj) in rows.iter().zip(z) {
        for (xi, a) in x.iter_mut().zip(row) {
            if *a != 0.0 {
                *xi += zj.scale(*a);
            }
        }
    }
    x
}

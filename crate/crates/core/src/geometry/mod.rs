//! Coordinate charts, the Jacobi transform and the reductions used by the
//! superintegrable families.

mod chart;
mod jacobi;
mod point;

pub use chart::{plane_frame, Chart, POLAR_ANGLE_GUARD, RADIUS_GUARD};
pub use jacobi::{jacobi_matrix, to_jacobi, JacobiMatrix};
pub use point::PhasePoint;

use crate::error::{LabError, Result};

/// Nearest-neighbour differences of particle positions on a line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffCoords {
    /// `X_i = x^i - x^{i+1}` for `i = 1 .. n-1`.
    pub x: Vec<f64>,
    /// `X_n = x^n - x^1`, exposed for the three-body case only.
    pub cyclic: Option<f64>,
    /// True when any difference (including the cyclic one) vanishes.
    pub collision: bool,
}

pub fn diff_coords(x: &[f64]) -> Result<DiffCoords> {
    if x.len() < 2 {
        return Err(LabError::Domain(format!("need at least 2 particles, got {}", x.len())));
    }
    let diffs: Vec<f64> = x.windows(2).map(|w| w[0] - w[1]).collect();
    let cyclic = (x.len() == 3).then(|| x[2] - x[0]);
    let collision = diffs.iter().chain(cyclic.iter()).any(|d| *d == 0.0);
    Ok(DiffCoords {
        x: diffs,
        cyclic,
        collision,
    })
}

/// Cylindrical coordinates `(r, psi, u; p_r, p_psi, p_u)` of a three-body
/// state already expressed in Jacobi coordinates.
pub fn cylindrical3(z: &[f64], pz: &[f64]) -> Result<PhasePoint> {
    from_frame_checked(Chart::Cylindrical3, z, pz)
}

/// Hyperspherical-cylindrical coordinates of an `n`-body state given in
/// Jacobi coordinates.
pub fn hyperspherical_cylindrical(z: &[f64], pz: &[f64], n: usize) -> Result<PhasePoint> {
    from_frame_checked(Chart::HypersphericalCylindrical(n), z, pz)
}

/// Polar reduction of three points in a plane: `(r, psi, u_1 .. u_4)`.
pub fn plane_reduction(x: &[f64], p: &[f64]) -> Result<PhasePoint> {
    Chart::PolarPlane.lift(x, p)
}

/// `X_1 = x^1 + x^3 - 2 x^5` and `X_2 = x^2 + x^4 - 2 x^6` of three planar points.
pub fn plane_differences(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != 6 {
        return Err(LabError::LengthMismatch {
            expected: 6,
            got: x.len(),
        });
    }
    Ok((x[0] + x[2] - 2.0 * x[4], x[1] + x[3] - 2.0 * x[5]))
}

fn from_frame_checked(chart: Chart, z: &[f64], pz: &[f64]) -> Result<PhasePoint> {
    chart.validate()?;
    let n = chart.ambient_dim();
    for len in [z.len(), pz.len()] {
        if len != n {
            return Err(LabError::LengthMismatch { expected: n, got: len });
        }
    }
    let u = jacobi_matrix(n)?;
    chart.lift(&u.apply_transpose(z), &u.apply_transpose(pz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diff_coords_examples() {
        let d = diff_coords(&[3.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.x, vec![2.0, 1.0]);
        assert_eq!(d.cyclic, Some(-3.0));
        assert!(!d.collision);

        let d = diff_coords(&[0.4, 0.4, 0.4]).unwrap();
        assert_eq!(d.x, vec![0.0, 0.0]);
        assert!(d.collision);

        let d = diff_coords(&[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(d.x, vec![1.0, 1.0]);
        assert_eq!(d.cyclic, Some(-2.0));

        assert_eq!(diff_coords(&[1.0, 2.0, 4.0, 8.0]).unwrap().cyclic, None);
    }

    #[test]
    fn cylindrical_example() {
        let pt = cylindrical3(&[1.0, 0.0, 5.0], &[0.0, 1.0, 0.0]).unwrap();
        for (a, b) in pt.q.iter().chain(&pt.p).zip([1.0, 0.0, 5.0, 0.0, 1.0, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn cylindrical_on_axis_errors() {
        assert!(matches!(
            cylindrical3(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]),
            Err(LabError::SingularChart { .. })
        ));
    }

    #[test]
    fn hyperspherical_three_matches_cylindrical() {
        let z = [0.3, -1.1, 0.8];
        let pz = [0.5, 0.2, -0.9];
        let a = cylindrical3(&z, &pz).unwrap();
        let b = hyperspherical_cylindrical(&z, &pz, 3).unwrap();
        for (x, y) in a.q.iter().chain(&a.p).zip(b.q.iter().chain(&b.p)) {
            assert_relative_eq!(*x, *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn hyperspherical_four_radius_and_axis() {
        let pt = hyperspherical_cylindrical(&[1.0, 0.0, 0.0, 7.0], &[0.0; 4], 4).unwrap();
        assert_relative_eq!(pt.q[0], 1.0);
        assert_relative_eq!(pt.q[3], 7.0);
    }

    #[test]
    fn hyperspherical_four_is_the_spherical_chart() {
        let x = [0.4, -1.3, 0.9, 2.2];
        let p = [0.1, 0.5, -0.3, 0.7];
        let h = Chart::HypersphericalCylindrical(4).lift(&x, &p).unwrap();
        let s = Chart::Spherical4.lift(&x, &p).unwrap();
        // (r, phi_1, phi_2, u) = (rho, psi_2, psi_1, u)
        let perm = [0, 2, 1, 3];
        for (i, j) in perm.iter().enumerate() {
            assert_relative_eq!(h.q[i], s.q[*j], max_relative = 1e-13);
            assert_relative_eq!(h.p[i], s.p[*j], max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn plane_reduction_examples() {
        let on_axis = [0.3, -0.2, 0.3, -0.2, 0.3, -0.2];
        assert!(matches!(
            plane_reduction(&on_axis, &[0.0; 6]),
            Err(LabError::SingularChart { .. })
        ));

        let x = [1.0, 0.0, 1.0, 0.0, -2.0, 0.0];
        assert_eq!(plane_differences(&x).unwrap(), (6.0, 0.0));
        let pt = plane_reduction(&x, &[0.0; 6]).unwrap();
        assert_relative_eq!(pt.q[0], 6.0 / 6f64.sqrt(), max_relative = 1e-15);
        assert_eq!(pt.q[1], 0.0);
        for u in &pt.q[2..] {
            assert!(u.abs() < 1e-15);
        }
    }
}

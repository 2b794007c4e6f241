//! Coordinate charts on the particle configuration space together with their
//! canonical (cotangent) momentum lifts.
//!
//! Every chart is an orthonormal linear frame applied to the particle
//! coordinates followed by an optional curvilinear block acting on the first
//! few frame coordinates. The remaining frame coordinates pass through
//! unchanged (the `u` axes). All curvilinear blocks are orthogonal
//! coordinate systems, so the lift uses `p_a = (dx/dq^a) . p` forward and
//! `p = sum_a p_a (dx/dq^a) / h_a^2` backward with analytic Jacobian columns
//! and scale factors `h_a`.

use std::f64::consts::PI;
use std::fmt;

use super::jacobi::{apply_rows, apply_rows_transpose, jacobi_matrix};
use super::point::PhasePoint;
use crate::dual::{constants, values, Dual};
use crate::error::{LabError, Result};

/// Smallest admissible radius of any curvilinear block.
pub const RADIUS_GUARD: f64 = 1e-12;
/// Polar angles of hyperspherical and spherical blocks must stay this far from 0 and pi.
pub const POLAR_ANGLE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Particle coordinates themselves.
    Cartesian(usize),
    /// Jacobi coordinates `z = U x`.
    Jacobi(usize),
    /// `(r, psi, u)` around the all-ones axis of three particles on a line.
    Cylindrical3,
    /// `(r, phi_1 .. phi_{n-2}, u)`: hyperspherical angles on the first
    /// `n - 1` Jacobi coordinates taken in the order `(z_{n-1}, .., z_3, z_1, z_2)`,
    /// so `phi_{n-2} = atan2(z_2, z_1)` as in the three-body chart; `u` is the
    /// center-of-mass coordinate.
    HypersphericalCylindrical(usize),
    /// Three points in a plane: `(r, psi, u_1 .. u_4)` with the `u_i` along
    /// the four invariance directions.
    PolarPlane,
    /// Four particles: `(rho, psi_1, psi_2, u)` with spherical angles on the
    /// first three Jacobi coordinates, `psi_2` measured from the third axis.
    Spherical4,
    /// The reduced `(r, psi)` plane.
    ReducedPolar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Identity,
    Hyper(usize),
    Spherical,
}

impl Block {
    fn len(self) -> usize {
        match self {
            Block::Identity => 0,
            Block::Hyper(m) => m,
            Block::Spherical => 3,
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Cartesian(n) => write!(f, "cartesian({n})"),
            Chart::Jacobi(n) => write!(f, "jacobi({n})"),
            Chart::Cylindrical3 => write!(f, "cylindrical3"),
            Chart::HypersphericalCylindrical(n) => write!(f, "hyperspherical_cylindrical({n})"),
            Chart::PolarPlane => write!(f, "polar_plane"),
            Chart::Spherical4 => write!(f, "spherical4"),
            Chart::ReducedPolar => write!(f, "reduced_polar"),
        }
    }
}

/// Orthonormal frame of the three-points-in-a-plane reduction. The first two
/// rows span the complement of the invariance directions and carry the polar
/// pair; the last four are the normalized invariance directions.
pub fn plane_frame() -> Vec<Vec<f64>> {
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    vec![
        vec![1.0 / s6, 0.0, 1.0 / s6, 0.0, -2.0 / s6, 0.0],
        vec![0.0, 1.0 / s6, 0.0, 1.0 / s6, 0.0, -2.0 / s6],
        vec![1.0 / s3, 0.0, 1.0 / s3, 0.0, 1.0 / s3, 0.0],
        vec![0.0, 1.0 / s3, 0.0, 1.0 / s3, 0.0, 1.0 / s3],
        vec![1.0 / s2, 0.0, -1.0 / s2, 0.0, 0.0, 0.0],
        vec![0.0, 1.0 / s2, 0.0, -1.0 / s2, 0.0, 0.0],
    ]
}

impl Chart {
    /// Number of particle coordinates the chart is defined on.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Chart::Cartesian(n) | Chart::Jacobi(n) | Chart::HypersphericalCylindrical(n) => n,
            Chart::Cylindrical3 => 3,
            Chart::PolarPlane => 6,
            Chart::Spherical4 => 4,
            Chart::ReducedPolar => 2,
        }
    }

    /// Configuration dimension of the chart.
    pub fn dim(&self) -> usize {
        self.ambient_dim()
    }

    /// Validates the chart parameters (particle counts).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Chart::Cartesian(0) => Err(LabError::Domain("empty cartesian chart".into())),
            Chart::Jacobi(n) if n < 2 => Err(LabError::Domain(format!("jacobi chart needs n >= 2, got {n}"))),
            Chart::HypersphericalCylindrical(n) if n < 3 => Err(LabError::Domain(format!(
                "hyperspherical-cylindrical chart needs n >= 3, got {n}"
            ))),
            _ => Ok(()),
        }
    }

    fn frame(&self) -> Option<Vec<Vec<f64>>> {
        match *self {
            Chart::Cartesian(_) | Chart::ReducedPolar => None,
            Chart::Jacobi(n) => jacobi_matrix(n).ok().map(|u| u.into_rows()),
            Chart::HypersphericalCylindrical(n) => jacobi_matrix(n).ok().map(|u| {
                // Block order (z_{n-1}, .., z_3, z_1, z_2): polar angles are measured
                // from the highest relative axis, the azimuth is atan2(z_2, z_1).
                let rows = u.into_rows();
                let mut order: Vec<usize> = (2..n - 1).rev().collect();
                order.extend([0, 1, n - 1]);
                order.into_iter().map(|i| rows[i].clone()).collect()
            }),
            Chart::Cylindrical3 => jacobi_matrix(3).ok().map(|u| u.into_rows()),
            Chart::Spherical4 => jacobi_matrix(4).ok().map(|u| u.into_rows()),
            Chart::PolarPlane => Some(plane_frame()),
        }
    }

    fn block(&self) -> Block {
        match *self {
            Chart::Cartesian(_) | Chart::Jacobi(_) => Block::Identity,
            Chart::Cylindrical3 | Chart::PolarPlane | Chart::ReducedPolar => Block::Hyper(2),
            Chart::HypersphericalCylindrical(n) => Block::Hyper(n - 1),
            Chart::Spherical4 => Block::Spherical,
        }
    }

    /// Number of leading chart coordinates produced by the curvilinear block.
    pub fn curvilinear_len(&self) -> usize {
        self.block().len()
    }

    /// Frame coordinates `z` (Jacobi-type, before any curvilinear block) from
    /// particle coordinates.
    pub fn frame_from_cartesian(&self, x: &[Dual]) -> Vec<Dual> {
        match self.frame() {
            Some(rows) => apply_rows(&rows, x),
            None => x.to_vec(),
        }
    }

    /// Chart coordinates and conjugate momenta from particle coordinates.
    pub fn from_cartesian(&self, x: &[Dual], p: &[Dual]) -> (Vec<Dual>, Vec<Dual>) {
        let z = self.frame_from_cartesian(x);
        let pz = self.frame_from_cartesian(p);
        self.from_frame(&z, &pz)
    }

    /// Chart positions only.
    pub fn positions_from_cartesian(&self, x: &[Dual]) -> Vec<Dual> {
        let z = self.frame_from_cartesian(x);
        let block = self.block();
        let b = block.len();
        let mut q = block_from_cart(block, &z[..b]);
        q.extend_from_slice(&z[b..]);
        q
    }

    /// Chart coordinates and momenta from frame coordinates.
    pub fn from_frame(&self, z: &[Dual], pz: &[Dual]) -> (Vec<Dual>, Vec<Dual>) {
        let block = self.block();
        let b = block.len();
        if b == 0 {
            return (z.to_vec(), pz.to_vec());
        }
        let qb = block_from_cart(block, &z[..b]);
        let cols = block_columns(block, &qb);
        let mut q = qb;
        let mut p: Vec<Dual> = cols
            .iter()
            .map(|col| col.iter().zip(&pz[..b]).map(|(c, pi)| c * pi).sum())
            .collect();
        q.extend_from_slice(&z[b..]);
        p.extend_from_slice(&pz[b..]);
        (q, p)
    }

    /// Frame coordinates and momenta from chart coordinates.
    pub fn to_frame(&self, q: &[Dual], p: &[Dual]) -> (Vec<Dual>, Vec<Dual>) {
        let block = self.block();
        let b = block.len();
        if b == 0 {
            return (q.to_vec(), p.to_vec());
        }
        let qb = &q[..b];
        let cols = block_columns(block, qb);
        let h2 = block_scale2(block, qb);
        let mut z = block_to_cart(block, qb);
        let mut pz = vec![Dual::zero(); b];
        for ((col, pa), h) in cols.iter().zip(&p[..b]).zip(&h2) {
            let w = pa / h;
            for (slot, c) in pz.iter_mut().zip(col) {
                *slot += c * &w;
            }
        }
        z.extend_from_slice(&q[b..]);
        pz.extend_from_slice(&p[b..]);
        (z, pz)
    }

    /// Particle coordinates and momenta from chart coordinates.
    pub fn to_cartesian(&self, q: &[Dual], p: &[Dual]) -> (Vec<Dual>, Vec<Dual>) {
        let (z, pz) = self.to_frame(q, p);
        match self.frame() {
            Some(rows) => (apply_rows_transpose(&rows, &z), apply_rows_transpose(&rows, &pz)),
            None => (z, pz),
        }
    }

    /// Particle positions only.
    pub fn positions_to_cartesian(&self, q: &[Dual]) -> Vec<Dual> {
        let block = self.block();
        let b = block.len();
        let mut z = if b == 0 {
            Vec::new()
        } else {
            block_to_cart(block, &q[..b])
        };
        z.extend_from_slice(&q[b..]);
        match self.frame() {
            Some(rows) => apply_rows_transpose(&rows, &z),
            None => z,
        }
    }

    /// Frame coordinates from chart positions.
    pub fn positions_to_frame(&self, q: &[Dual]) -> Vec<Dual> {
        let block = self.block();
        let b = block.len();
        let mut z = if b == 0 {
            Vec::new()
        } else {
            block_to_cart(block, &q[..b])
        };
        z.extend_from_slice(&q[b..]);
        z
    }

    /// Squared scale factors `h_a^2` of the (diagonal) flat metric in this chart.
    pub fn scale_factors2(&self, q: &[Dual]) -> Vec<Dual> {
        let block = self.block();
        let b = block.len();
        let mut h2 = if b == 0 {
            Vec::new()
        } else {
            block_scale2(block, &q[..b])
        };
        h2.extend((b..q.len()).map(|_| Dual::one()));
        h2
    }

    /// Kinetic energy `1/2 sum_a p_a^2 / h_a^2`.
    pub fn kinetic(&self, q: &[Dual], p: &[Dual]) -> Dual {
        let h2 = self.scale_factors2(q);
        let mut t = Dual::zero();
        for (pa, h) in p.iter().zip(&h2) {
            t += pa.sq() / h;
        }
        t.scale(0.5)
    }

    /// Checks that `q` lies in the chart domain.
    pub fn check_domain(&self, q: &[f64]) -> Result<()> {
        self.validate()?;
        if q.len() != self.dim() {
            return Err(LabError::LengthMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite(format!("{self} coordinate {i}")));
        }
        let singular = |reason: String| LabError::SingularChart {
            chart: self.to_string(),
            reason,
        };
        match self.block() {
            Block::Identity => Ok(()),
            Block::Hyper(m) => {
                if q[0] < RADIUS_GUARD {
                    return Err(singular(format!("radius {:e} below {RADIUS_GUARD:e}", q[0])));
                }
                for (k, phi) in q[1..m - 1].iter().enumerate() {
                    if *phi <= POLAR_ANGLE_GUARD || *phi >= PI - POLAR_ANGLE_GUARD {
                        return Err(singular(format!("polar angle {} = {phi} outside (0, pi)", k + 1)));
                    }
                }
                Ok(())
            }
            Block::Spherical => {
                if q[0] < RADIUS_GUARD {
                    return Err(singular(format!("radius {:e} below {RADIUS_GUARD:e}", q[0])));
                }
                if q[2] <= POLAR_ANGLE_GUARD || q[2] >= PI - POLAR_ANGLE_GUARD {
                    return Err(singular(format!("polar angle psi_2 = {} outside (0, pi)", q[2])));
                }
                Ok(())
            }
        }
    }

    /// Maps a particle-coordinate state into this chart.
    pub fn lift(&self, x: &[f64], p: &[f64]) -> Result<PhasePoint> {
        self.validate()?;
        let n = self.ambient_dim();
        for len in [x.len(), p.len()] {
            if len != n {
                return Err(LabError::LengthMismatch { expected: n, got: len });
            }
        }
        if x.iter().chain(p).any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("cartesian state".into()));
        }
        // Radius check on the frame coordinates before angles become meaningless.
        let b = self.block().len();
        if b > 0 {
            let z = values(&self.frame_from_cartesian(&constants(x)));
            let r = z[..b].iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < RADIUS_GUARD {
                return Err(LabError::SingularChart {
                    chart: self.to_string(),
                    reason: format!("point on the chart axis (radius {r:e})"),
                });
            }
        }
        let (q, pq) = self.from_cartesian(&constants(x), &constants(p));
        PhasePoint::new(*self, values(&q), values(&pq))
    }

    /// Maps a chart point back to particle coordinates.
    pub fn lower(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        if pt.chart != *self {
            return Err(LabError::ChartMismatch {
                expected: self.to_string(),
                got: pt.chart.to_string(),
            });
        }
        let (x, p) = self.to_cartesian(&constants(&pt.q), &constants(&pt.p));
        Ok((values(&x), values(&p)))
    }

    /// Sampling box for chart coordinates, bounded away from chart singularities.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let n = self.dim();
        let mut ranges = Vec::with_capacity(n);
        match self.block() {
            Block::Identity => {}
            Block::Hyper(m) => {
                ranges.push((0.5, 2.0));
                for _ in 1..m - 1 {
                    ranges.push((0.05, PI - 0.05));
                }
                ranges.push((-PI, PI));
            }
            Block::Spherical => {
                ranges.push((0.5, 2.0));
                ranges.push((-PI, PI));
                ranges.push((0.05, PI - 0.05));
            }
        }
        while ranges.len() < n {
            ranges.push((-2.0, 2.0));
        }
        ranges
    }

    /// Coordinate labels, positions first then momenta.
    pub fn labels(&self) -> (Vec<String>, Vec<String>) {
        let b = self.block().len();
        let mut q: Vec<String> = match self.block() {
            Block::Identity => Vec::new(),
            Block::Hyper(2) => vec!["r".into(), "psi".into()],
            Block::Hyper(m) => std::iter::once("r".to_string())
                .chain((1..m).map(|k| format!("phi{k}")))
                .collect(),
            Block::Spherical => vec!["rho".into(), "psi1".into(), "psi2".into()],
        };
        let rest = self.dim() - b;
        match self {
            Chart::Cartesian(_) => q.extend((1..=rest).map(|i| format!("x{i}"))),
            Chart::Jacobi(_) => q.extend((1..=rest).map(|i| format!("z{i}"))),
            Chart::PolarPlane => q.extend((1..=rest).map(|i| format!("u{i}"))),
            _ => q.extend((0..rest).map(|_| "u".to_string())),
        }
        let p = q.iter().map(|s| format!("p_{s}")).collect();
        (q, p)
    }
}

fn block_from_cart(block: Block, z: &[Dual]) -> Vec<Dual> {
    match block {
        Block::Identity => Vec::new(),
        Block::Hyper(m) => {
            let mut q = Vec::with_capacity(m);
            let r2: Dual = z.iter().map(Dual::sq).sum();
            q.push(r2.sqrt());
            for k in 0..m - 2 {
                let tail: Dual = z[k + 1..].iter().map(Dual::sq).sum();
                q.push(tail.sqrt().atan2(&z[k]));
            }
            q.push(z[m - 1].atan2(&z[m - 2]));
            q
        }
        Block::Spherical => {
            let (x, y, w) = (&z[0], &z[1], &z[2]);
            let rho = (x.sq() + y.sq() + w.sq()).sqrt();
            let psi1 = y.atan2(x);
            let psi2 = (x.sq() + y.sq()).sqrt().atan2(w);
            vec![rho, psi1, psi2]
        }
    }
}

/// Running products `S[k] = sin(phi_1) .. sin(phi_k)`, `S[0] = 1`.
fn sine_prefix(sins: &[Dual]) -> Vec<Dual> {
    let mut s = Vec::with_capacity(sins.len() + 1);
    s.push(Dual::one());
    for si in sins {
        let next = s.last().unwrap() * si;
        s.push(next);
    }
    s
}

fn block_to_cart(block: Block, q: &[Dual]) -> Vec<Dual> {
    match block {
        Block::Identity => Vec::new(),
        Block::Hyper(m) => {
            let r = &q[0];
            let sins: Vec<Dual> = q[1..].iter().map(Dual::sin).collect();
            let coss: Vec<Dual> = q[1..].iter().map(Dual::cos).collect();
            let s = sine_prefix(&sins);
            let mut z = Vec::with_capacity(m);
            for i in 0..m - 1 {
                z.push(r * &s[i] * &coss[i]);
            }
            z.push(r * &s[m - 1]);
            z
        }
        Block::Spherical => {
            let (rho, psi1, psi2) = (&q[0], &q[1], &q[2]);
            let (s1, c1, s2, c2) = (psi1.sin(), psi1.cos(), psi2.sin(), psi2.cos());
            vec![rho * &s2 * &c1, rho * &s2 * &s1, rho * &c2]
        }
    }
}

/// Jacobian columns `dz/dq^a` of the block, one vector per block coordinate.
fn block_columns(block: Block, q: &[Dual]) -> Vec<Vec<Dual>> {
    match block {
        Block::Identity => Vec::new(),
        Block::Hyper(m) => {
            let r = &q[0];
            let sins: Vec<Dual> = q[1..].iter().map(Dual::sin).collect();
            let coss: Vec<Dual> = q[1..].iter().map(Dual::cos).collect();
            let s = sine_prefix(&sins);
            // trailing factor of z_i: cos(phi_i) for i < m, 1 for the last coordinate
            let tail = |i: usize| -> Dual {
                if i + 1 < m {
                    coss[i].clone()
                } else {
                    Dual::one()
                }
            };
            let mut cols = Vec::with_capacity(m);
            cols.push((0..m).map(|i| &s[i] * tail(i)).collect());
            for k in 0..m - 1 {
                let col = (0..m)
                    .map(|i| {
                        if i < k {
                            Dual::zero()
                        } else if i == k {
                            -(r * &s[k + 1])
                        } else {
                            let mut prod = r * &coss[k];
                            for (j, sj) in sins.iter().enumerate().take(i) {
                                if j != k {
                                    prod *= sj;
                                }
                            }
                            prod * tail(i)
                        }
                    })
                    .collect();
                cols.push(col);
            }
            cols
        }
        Block::Spherical => {
            let (rho, psi1, psi2) = (&q[0], &q[1], &q[2]);
            let (s1, c1, s2, c2) = (psi1.sin(), psi1.cos(), psi2.sin(), psi2.cos());
            vec![
                vec![&s2 * &c1, &s2 * &s1, c2.clone()],
                vec![-(rho * &s2 * &s1), rho * &s2 * &c1, Dual::zero()],
                vec![rho * &c2 * &c1, rho * &c2 * &s1, -(rho * &s2)],
            ]
        }
    }
}

fn block_scale2(block: Block, q: &[Dual]) -> Vec<Dual> {
    match block {
        Block::Identity => Vec::new(),
        Block::Hyper(m) => {
            let r2 = q[0].sq();
            let sins: Vec<Dual> = q[1..].iter().map(Dual::sin).collect();
            let s = sine_prefix(&sins);
            let mut h2 = Vec::with_capacity(m);
            h2.push(Dual::one());
            for sk in s.iter().take(m - 1) {
                h2.push(&r2 * sk.sq());
            }
            h2
        }
        Block::Spherical => {
            let rho2 = q[0].sq();
            let s2 = q[2].sin();
            vec![Dual::one(), &rho2 * s2.sq(), rho2]
        }
    }
}

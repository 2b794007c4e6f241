//! The superintegrable potential families in particle-difference form and in
//! angular form, plus the phase-shift operator on angular profiles.
//!
//! Three-body angles follow the Jacobi frame of [`Chart::Cylindrical3`]:
//! `X_1 = sqrt(2) r cos(psi)`, so `cos(3 psi) = sqrt(2) X_1 X_2 X_3 / r^3`.
//! In that frame equal-coupling Calogero is proportional to `1/cos^2(3 psi)`
//! and equal-coupling Wolfes to `1/sin^2(3 psi)`; the two are exchanged by
//! `psi -> psi + pi/6`.

mod profile;

pub use profile::{angle_grid, AngularProfile, ProfileForm, RatioFn};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dual::{constants, Dual};
use crate::error::{LabError, Result};
use crate::geometry::{Chart, PhasePoint};

/// Every potential denominator must exceed this magnitude.
pub const COLLISION_GUARD: f64 = 1e-10;

/// `g sum_i 1/X_i^2 = CALOGERO_ANGULAR_CONSTANT g / (r cos 3psi)^2`.
pub const CALOGERO_ANGULAR_CONSTANT: f64 = 4.5;

/// `h sum_i 1/(X_i - X_{i+1})^2 = WOLFES_ANGULAR_CONSTANT h / (r sin 3psi)^2`.
pub const WOLFES_ANGULAR_CONSTANT: f64 = 1.5;

#[derive(Debug, Clone)]
pub enum EvansVariant {
    /// `F(psi_1) / (rho sin psi_2)^2`
    V1 { f: AngularProfile },
    /// `k / (rho cos psi_2)^2 + F(psi_1) / (rho sin psi_2)^2`
    V2 { k: f64, f: AngularProfile },
    /// `(k cos psi_2 + F(psi_1)) / (rho sin psi_2)^2`
    V3 { k: f64, f: AngularProfile },
    /// `k / rho^2 [k + k1 / cos^2 psi_2 + (k2 / cos^2 psi_1 + k3 / sin^2 psi_1) / sin^2 psi_2]`
    V4 { k: f64, k1: f64, k2: f64, k3: f64 },
}

impl EvansVariant {
    pub fn name(&self) -> &'static str {
        match self {
            EvansVariant::V1 { .. } => "V1",
            EvansVariant::V2 { .. } => "V2",
            EvansVariant::V3 { .. } => "V3",
            EvansVariant::V4 { .. } => "V4",
        }
    }

    /// The `psi_1`-dependent part `G` of `(rho sin psi_2)^2 V`.
    pub fn azimuthal_profile(&self) -> AngularProfile {
        match self {
            EvansVariant::V1 { f } | EvansVariant::V2 { f, .. } | EvansVariant::V3 { f, .. } => f.clone(),
            EvansVariant::V4 { k, k2, k3, .. } => {
                let (a2, a3) = (k * k2, k * k3);
                AzimuthalV4 { a2, a3 }.profile()
            }
        }
    }
}

struct AzimuthalV4 {
    a2: f64,
    a3: f64,
}

impl AzimuthalV4 {
    fn profile(self) -> AngularProfile {
        // a2 / cos^2 + a3 / sin^2 written through the ratio-pair form:
        // F1(tan) / (6 cos^2) + F2(cot) / (6 sin^2) with constant F1, F2.
        AngularProfile::ratio_pair(
            if self.a2 == 0.0 {
                RatioFn::Zero
            } else {
                RatioFn::Constant { c: 6.0 * self.a2 }
            },
            if self.a3 == 0.0 {
                RatioFn::Zero
            } else {
                RatioFn::Constant { c: 6.0 * self.a3 }
            },
        )
    }
}

/// A parameterized member of one of the potential families.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    /// `sum_i k_i / X_i^2` with cyclic `X_3 = x^3 - x^1`.
    Calogero { k: [f64; 3] },
    /// `sum_i h_i / (X_i - X_{i+1})^2`.
    Wolfes { h: [f64; 3] },
    /// `F(psi) / r^2` for a registered profile.
    Angular3 { profile: AngularProfile },
    /// `k / (r sin((2n+1) psi))^2`.
    Ttw { n: u32, k: f64 },
    /// Four bodies on a line through the spherical chart of their Jacobi coordinates.
    Evans(EvansVariant),
    /// Three points in a plane: `F1(X_2/X_1)/X_1^2 + F2(X_1/X_2)/X_2^2`.
    Plane23 { f1: RatioFn, f2: RatioFn },
}

type ChartPotential = Arc<dyn Fn(&[Dual]) -> Dual + Send + Sync>;

impl PotentialSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            PotentialSpec::Calogero { .. } => "calogero",
            PotentialSpec::Wolfes { .. } => "wolfes",
            PotentialSpec::Angular3 { .. } => "angular3",
            PotentialSpec::Ttw { .. } => "ttw",
            PotentialSpec::Evans(_) => "evans",
            PotentialSpec::Plane23 { .. } => "plane23",
        }
    }

    pub fn particle_count(&self) -> usize {
        match self {
            PotentialSpec::Evans(_) => 4,
            PotentialSpec::Plane23 { .. } => 6,
            _ => 3,
        }
    }

    pub fn is_three_body(&self) -> bool {
        self.particle_count() == 3
    }

    /// Chart in which the family takes its angular form.
    pub fn native_chart(&self) -> Chart {
        match self {
            PotentialSpec::Evans(_) => Chart::Spherical4,
            PotentialSpec::Plane23 { .. } => Chart::PolarPlane,
            _ => Chart::Cylindrical3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, vals: &[f64]| -> Result<()> {
            if vals.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(LabError::Domain(format!("{name}: couplings must be finite")))
            }
        };
        let profile_ok = |f: &AngularProfile| -> Result<()> {
            if f.is_finite() {
                Ok(())
            } else {
                Err(LabError::Domain("profile parameters must be finite".into()))
            }
        };
        match self {
            PotentialSpec::Calogero { k } => finite("calogero", k),
            PotentialSpec::Wolfes { h } => finite("wolfes", h),
            PotentialSpec::Angular3 { profile } => profile_ok(profile),
            PotentialSpec::Ttw { n, k } => {
                if *n < 1 {
                    return Err(LabError::Domain(format!("ttw index n must be >= 1, got {n}")));
                }
                if !(k.is_finite() && *k > 0.0) {
                    return Err(LabError::Domain(format!("ttw coupling k must be positive, got {k}")));
                }
                Ok(())
            }
            PotentialSpec::Evans(v) => match v {
                EvansVariant::V1 { f } => profile_ok(f),
                EvansVariant::V2 { k, f } | EvansVariant::V3 { k, f } => {
                    finite("evans", &[*k])?;
                    profile_ok(f)
                }
                EvansVariant::V4 { k, k1, k2, k3 } => finite("evans V4", &[*k, *k1, *k2, *k3]),
            },
            PotentialSpec::Plane23 { f1, f2 } => {
                if f1.is_finite() && f2.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::Domain("plane23 ratio functions must be finite".into()))
                }
            }
        }
    }

    /// Directions along which the potential is invariant.
    pub fn invariance_directions(&self) -> Vec<Vec<f64>> {
        match self {
            PotentialSpec::Plane23 { .. } => vec![
                vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
                vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0],
            ],
            _ => vec![vec![1.0; self.particle_count()]],
        }
    }

    /// The difference-form potential on particle coordinates, with no guard.
    pub fn potential_dual(&self, x: &[Dual]) -> Dual {
        match self {
            PotentialSpec::Calogero { k } => {
                let diffs = [&x[0] - &x[1], &x[1] - &x[2], &x[2] - &x[0]];
                inverse_square_sum(k, &diffs)
            }
            PotentialSpec::Wolfes { h } => {
                let d = [&x[0] - &x[1], &x[1] - &x[2], &x[2] - &x[0]];
                let diffs = [&d[0] - &d[1], &d[1] - &d[2], &d[2] - &d[0]];
                inverse_square_sum(h, &diffs)
            }
            PotentialSpec::Ttw { .. } | PotentialSpec::Angular3 { .. } => {
                let q = Chart::Cylindrical3.positions_from_cartesian(x);
                self.three_body_angular(&q)
            }
            PotentialSpec::Evans(v) => {
                let q = Chart::Spherical4.positions_from_cartesian(x);
                evans_angular(v, &q[0], &q[1], &q[2])
            }
            PotentialSpec::Plane23 { f1, f2 } => {
                let x1 = &x[0] + &x[2] - x[4].scale(2.0);
                let x2 = &x[1] + &x[3] - x[5].scale(2.0);
                let mut v = Dual::zero();
                if !f1.is_zero() {
                    v += f1.eval_dual(&(&x2 / &x1)) / x1.sq();
                }
                if !f2.is_zero() {
                    v += f2.eval_dual(&(&x1 / &x2)) / x2.sq();
                }
                v
            }
        }
    }

    /// `F(psi) / r^2` from cylindrical positions `(r, psi, ..)`.
    fn three_body_angular(&self, q: &[Dual]) -> Dual {
        angular_profile(self).eval_dual(&q[1]) / q[0].sq()
    }

    /// Named denominators of the difference form at `x`; all are
    /// homogeneous of degree one.
    pub fn denominators(&self, x: &[f64]) -> Vec<(String, f64)> {
        match self {
            PotentialSpec::Calogero { k } => {
                let d = [x[0] - x[1], x[1] - x[2], x[2] - x[0]];
                named_active(&["X1", "X2", "X3"], k, &d)
            }
            PotentialSpec::Wolfes { h } => {
                let d = [x[0] - x[1], x[1] - x[2], x[2] - x[0]];
                let dd = [d[0] - d[1], d[1] - d[2], d[2] - d[0]];
                named_active(&["X1-X2", "X2-X3", "X3-X1"], h, &dd)
            }
            PotentialSpec::Ttw { .. } | PotentialSpec::Angular3 { .. } => {
                let q = crate::dual::values(&Chart::Cylindrical3.positions_from_cartesian(&constants(x)));
                let (r, psi) = (q[0], q[1]);
                let mut out = vec![("r".to_string(), r)];
                out.extend(
                    angular_profile(self)
                        .singular_factors(psi)
                        .into_iter()
                        .map(|(name, v)| (format!("r*{name}"), r * v)),
                );
                out
            }
            PotentialSpec::Evans(v) => {
                let z = crate::dual::values(&Chart::Spherical4.frame_from_cartesian(&constants(x)));
                let rho = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
                let rs = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let psi1 = z[1].atan2(z[0]);
                let mut out = vec![("rho".to_string(), rho), ("rho*sin(psi2)".to_string(), rs)];
                match v {
                    EvansVariant::V2 { .. } => out.push(("rho*cos(psi2)".to_string(), z[2])),
                    EvansVariant::V4 { k1, .. } if *k1 != 0.0 => out.push(("rho*cos(psi2)".to_string(), z[2])),
                    _ => {}
                }
                out.extend(
                    v.azimuthal_profile()
                        .singular_factors(psi1)
                        .into_iter()
                        .map(|(name, f)| (format!("rho*sin(psi2)*{name}"), rs * f)),
                );
                out
            }
            PotentialSpec::Plane23 { f1, f2 } => {
                let x1 = x[0] + x[2] - 2.0 * x[4];
                let x2 = x[1] + x[3] - 2.0 * x[5];
                let mut out = Vec::new();
                if !f1.is_zero() {
                    out.push(("X1".to_string(), x1));
                    if let Some(d) = f1.denominator(x2 / x1) {
                        out.push(("X1*den1(X2/X1)".to_string(), x1 * d));
                    }
                }
                if !f2.is_zero() {
                    out.push(("X2".to_string(), x2));
                    if let Some(d) = f2.denominator(x1 / x2) {
                        out.push(("X2*den2(X1/X2)".to_string(), x2 * d));
                    }
                }
                out
            }
        }
    }

    /// Radius of the configuration transverse to the invariance directions.
    pub fn transverse_radius(&self, x: &[f64]) -> f64 {
        let chart = self.native_chart();
        let z = chart.frame_from_cartesian(&constants(x));
        z[..chart.curvilinear_len()]
            .iter()
            .map(|d| d.v * d.v)
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest denominator magnitude relative to the transverse radius.
    pub fn singular_margin(&self, x: &[f64]) -> f64 {
        let r = self.transverse_radius(x);
        self.denominators(x)
            .iter()
            .map(|(_, d)| d.abs() / r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Errors with the first denominator whose magnitude is below `guard`.
    pub fn check_collision(&self, x: &[f64], guard: f64) -> Result<()> {
        for (name, d) in self.denominators(x) {
            if d.is_nan() || d.abs() <= guard {
                return Err(LabError::Singularity {
                    denominator: name,
                    value: d,
                    guard,
                });
            }
        }
        Ok(())
    }

    /// Potential as a function of the positions of `chart`, with exact
    /// derivatives. Angular charts use the closed angular form.
    pub fn chart_potential(&self, chart: Chart) -> Result<ChartPotential> {
        chart.validate()?;
        let incompatible = || LabError::IncompatibleChart {
            chart: chart.to_string(),
            family: self.family_name().to_string(),
        };
        let n = self.particle_count();
        let spec = self.clone();
        let f: ChartPotential = match chart {
            Chart::Cartesian(m) if m == n => Arc::new(move |q| spec.potential_dual(q)),
            Chart::Jacobi(m) if m == n => Arc::new(move |q| spec.potential_dual(&chart.positions_to_cartesian(q))),
            Chart::HypersphericalCylindrical(m) if m == n => {
                // Phi(angles) / r^2 with Phi the potential at unit radius and u = 0.
                Arc::new(move |q| {
                    let mut unit: Vec<Dual> = Vec::with_capacity(q.len());
                    unit.push(Dual::one());
                    unit.extend_from_slice(&q[1..m - 1]);
                    unit.push(Dual::zero());
                    let phi = spec.potential_dual(&chart.positions_to_cartesian(&unit));
                    phi / q[0].sq()
                })
            }
            Chart::Cylindrical3 | Chart::ReducedPolar if n == 3 => {
                let profile = angular_profile(self);
                Arc::new(move |q| profile.eval_dual(&q[1]) / q[0].sq())
            }
            Chart::Spherical4 => match self {
                PotentialSpec::Evans(v) => {
                    let v = v.clone();
                    Arc::new(move |q| evans_angular(&v, &q[0], &q[1], &q[2]))
                }
                _ => return Err(incompatible()),
            },
            Chart::PolarPlane => match self {
                PotentialSpec::Plane23 { .. } => {
                    let profile = angular_profile(self);
                    Arc::new(move |q| profile.eval_dual(&q[1]) / q[0].sq())
                }
                _ => return Err(incompatible()),
            },
            _ => return Err(incompatible()),
        };
        Ok(f)
    }

    /// True when `chart` is one of the family's angular charts.
    pub fn is_angular_chart(&self, chart: Chart) -> bool {
        match self {
            PotentialSpec::Evans(_) => matches!(chart, Chart::Spherical4 | Chart::HypersphericalCylindrical(4)),
            PotentialSpec::Plane23 { .. } => chart == Chart::PolarPlane,
            _ => matches!(
                chart,
                Chart::Cylindrical3 | Chart::ReducedPolar | Chart::HypersphericalCylindrical(3)
            ),
        }
    }
}

fn inverse_square_sum(couplings: &[f64; 3], diffs: &[Dual; 3]) -> Dual {
    couplings
        .iter()
        .zip(diffs)
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, d)| d.sq().recip().scale(*c))
        .sum()
}

fn named_active(names: &[&str], couplings: &[f64; 3], values: &[f64; 3]) -> Vec<(String, f64)> {
    names
        .iter()
        .zip(couplings)
        .zip(values)
        .filter(|((_, c), _)| **c != 0.0)
        .map(|((n, _), v)| (n.to_string(), *v))
        .collect()
}

fn evans_angular(v: &EvansVariant, rho: &Dual, psi1: &Dual, psi2: &Dual) -> Dual {
    let rho2 = rho.sq();
    let s2 = psi2.sin().sq();
    match v {
        EvansVariant::V1 { f } => f.eval_dual(psi1) / (&rho2 * &s2),
        EvansVariant::V2 { k, f } => {
            let c2 = psi2.cos().sq();
            (&rho2 * &c2).recip().scale(*k) + f.eval_dual(psi1) / (&rho2 * &s2)
        }
        EvansVariant::V3 { k, f } => (psi2.cos().scale(*k) + f.eval_dual(psi1)) / (&rho2 * &s2),
        EvansVariant::V4 { k, k1, k2, k3 } => {
            let c2 = psi2.cos().sq();
            let inner = c2.recip().scale(*k1)
                + *k
                + (psi1.cos().sq().recip().scale(*k2) + psi1.sin().sq().recip().scale(*k3)) / &s2;
            inner.scale(*k) / rho2
        }
    }
}

/// Difference-form potential with the collision guard applied.
pub fn eval_difference_form(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    spec.validate()?;
    let n = spec.particle_count();
    if x.len() != n {
        return Err(LabError::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("particle positions".into()));
    }
    spec.check_collision(x, COLLISION_GUARD)?;
    let v = spec.potential_dual(&constants(x)).v;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::NonFinite(format!("{} potential", spec.family_name())))
    }
}

/// Angular-form potential at a point of one of the family's angular charts.
pub fn eval_angular_form(spec: &PotentialSpec, pt: &PhasePoint) -> Result<f64> {
    spec.validate()?;
    if !spec.is_angular_chart(pt.chart) {
        return Err(LabError::IncompatibleChart {
            chart: pt.chart.to_string(),
            family: spec.family_name().to_string(),
        });
    }
    pt.chart.check_domain(&pt.q)?;
    match pt.chart {
        Chart::ReducedPolar => {
            let (r, psi) = (pt.q[0], pt.q[1]);
            for (name, f) in angular_profile(spec).singular_factors(psi) {
                if (r * f).is_nan() || (r * f).abs() <= COLLISION_GUARD {
                    return Err(LabError::Singularity {
                        denominator: format!("r*{name}"),
                        value: r * f,
                        guard: COLLISION_GUARD,
                    });
                }
            }
        }
        chart => {
            let x = crate::dual::values(&chart.positions_to_cartesian(&constants(&pt.q)));
            spec.check_collision(&x, COLLISION_GUARD)?;
        }
    }
    let v = spec.chart_potential(pt.chart)?(&constants(&pt.q)).v;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::NonFinite(format!("{} angular form", spec.family_name())))
    }
}

/// Single-angle profile of a three-body or planar family.
///
/// Equal-coupling Calogero and Wolfes get their closed forms; unequal
/// couplings fall back to a profile backed by the difference form at unit
/// radius, which is still exact but has no single closed expression. For the
/// Evans families this is the `psi_1` part of `(rho sin psi_2)^2 V`.
pub fn angular_profile(spec: &PotentialSpec) -> AngularProfile {
    match spec {
        PotentialSpec::Calogero { k } if k[0] == k[1] && k[1] == k[2] => AngularProfile::closed(ProfileForm::InvCos2 {
            a: CALOGERO_ANGULAR_CONSTANT * k[0],
            m: 3.0,
        }),
        PotentialSpec::Wolfes { h } if h[0] == h[1] && h[1] == h[2] => AngularProfile::closed(ProfileForm::InvSin2 {
            a: WOLFES_ANGULAR_CONSTANT * h[0],
            m: 3.0,
        }),
        PotentialSpec::Calogero { .. } | PotentialSpec::Wolfes { .. } => {
            AngularProfile::difference_backed(spec.clone())
        }
        PotentialSpec::Ttw { n, k } => AngularProfile::closed(ProfileForm::InvSin2 {
            a: *k,
            m: (2 * n + 1) as f64,
        }),
        PotentialSpec::Angular3 { profile } => profile.clone(),
        PotentialSpec::Evans(v) => v.azimuthal_profile(),
        PotentialSpec::Plane23 { f1, f2 } => AngularProfile::ratio_pair(f1.clone(), f2.clone()),
    }
}

/// `(shift F)(psi) = F(psi + alpha)`.
pub fn shift_profile(f: &AngularProfile, alpha: f64) -> AngularProfile {
    f.shifted(alpha)
}

/// `|V(lambda x) - lambda^-2 V(x)| / |lambda^-2 V(x)|`.
pub fn check_homogeneity(spec: &PotentialSpec, x: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LabError::Domain(format!("scale factor must be positive, got {lambda}")));
    }
    let v = eval_difference_form(spec, x)?;
    let scaled: Vec<f64> = x.iter().map(|xi| lambda * xi).collect();
    let vl = eval_difference_form(spec, &scaled)?;
    let expected = v / (lambda * lambda);
    let diff = (vl - expected).abs();
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / expected.abs().max(f64::MIN_POSITIVE))
}

/// Largest `|V(x + c w) - V(x)|` over the family's invariance directions `w`.
pub fn check_translation_invariance(spec: &PotentialSpec, x: &[f64], c: f64) -> Result<f64> {
    let v = eval_difference_form(spec, x)?;
    let mut worst: f64 = 0.0;
    for w in spec.invariance_directions() {
        let moved: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| xi + c * wi).collect();
        worst = worst.max((eval_difference_form(spec, &moved)? - v).abs());
    }
    Ok(worst)
}

/// Phase shift exchanging the Calogero and Wolfes profiles.
pub const CALOGERO_WOLFES_SHIFT: f64 = PI / 6.0;

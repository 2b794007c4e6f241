use crate::dual::Dual;
use crate::error::{LabError, Result};
use crate::geometry::Chart;
use crate::potentials::{angular_profile, EvansVariant, PotentialSpec};

use super::{Observable, EXACT_BRACKET_TOLERANCE, FALLBACK_BRACKET_TOLERANCE};

/// A Hamiltonian with its listed first integrals on one chart.
///
/// `candidates` holds further integrals that are not part of the member
/// list and have to be screened before they count.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub system: String,
    pub hamiltonian: Observable,
    pub members: Vec<Observable>,
    pub candidates: Vec<Observable>,
    pub claimed_independent: usize,
    pub exact_derivatives: bool,
}

impl IntegralSet {
    pub fn chart(&self) -> Chart {
        self.hamiltonian.chart()
    }

    pub fn bracket_tolerance(&self) -> f64 {
        if self.exact_derivatives {
            EXACT_BRACKET_TOLERANCE
        } else {
            FALLBACK_BRACKET_TOLERANCE
        }
    }

    /// Members in rank-test order: the Hamiltonian first unless already listed.
    pub fn rank_family(&self) -> Vec<Observable> {
        let mut out = Vec::with_capacity(self.members.len() + 1);
        if !self.members.iter().any(|m| m.name() == self.hamiltonian.name()) {
            out.push(self.hamiltonian.clone());
        }
        out.extend(self.members.iter().cloned());
        out
    }
}

/// `H = T + V` on `chart`.
pub fn hamiltonian(spec: &PotentialSpec, chart: Chart) -> Result<Observable> {
    spec.validate()?;
    let v = spec.chart_potential(chart)?;
    Ok(Observable::new("H", chart, 2, move |q, p| chart.kinetic(q, p) + v(q)))
}

fn require_three_body(spec: &PotentialSpec) -> Result<()> {
    if spec.is_three_body() {
        Ok(())
    } else {
        Err(LabError::IncompatibleChart {
            chart: Chart::Cylindrical3.to_string(),
            family: spec.family_name().to_string(),
        })
    }
}

fn three_body_h3(spec: &PotentialSpec, sign: f64, name: &str) -> Observable {
    let f = angular_profile(spec);
    Observable::new(name, Chart::Cylindrical3, 2, move |q, p| {
        let h1 = p[1].sq().scale(0.5) + f.eval_dual(&q[1]);
        let l = &q[0] * &p[2] - (&q[2] * &p[0]).scale(sign);
        l.sq().scale(0.5) + (q[2].sq() / q[0].sq()) * h1
    })
}

/// `H, H1 = p_psi^2/2 + F, H2 = p_u^2/2, H3 = (r p_u - u p_r)^2/2 + u^2 H1 / r^2`.
pub fn integral_set_3body(spec: &PotentialSpec) -> Result<IntegralSet> {
    require_three_body(spec)?;
    let chart = Chart::Cylindrical3;
    let h = hamiltonian(spec, chart)?;
    let f = angular_profile(spec);
    let exact = f.is_exact();
    let h1 = Observable::new("H1", chart, 2, move |q, p| p[1].sq().scale(0.5) + f.eval_dual(&q[1]));
    let h2 = Observable::new("H2", chart, 2, |_, p| p[2].sq().scale(0.5));
    let h3 = three_body_h3(spec, 1.0, "H3");
    Ok(IntegralSet {
        system: spec.family_name().to_string(),
        hamiltonian: h.clone(),
        members: vec![h, h1, h2, h3],
        candidates: Vec::new(),
        claimed_independent: 4,
        exact_derivatives: exact,
    })
}

/// `H3` with the sign inside the angular momentum flipped; not conserved.
pub fn h3_sign_corrupted(spec: &PotentialSpec) -> Result<Observable> {
    require_three_body(spec)?;
    Ok(three_body_h3(spec, -1.0, "H3_corrupted"))
}

/// The Evans family on the spherical chart `(rho, psi1, psi2, u)`:
/// `H, H1 = (p_psi2^2 + p_psi1^2 / sin^2 psi2)/2 + rho^2 V, H5 = p_u^2`,
/// `H6 = (u p_rho - rho p_u)^2/2 + u^2 H1 / rho^2`, plus screened candidates.
pub fn integral_set_evans4(variant: &EvansVariant) -> Result<IntegralSet> {
    let spec = PotentialSpec::Evans(variant.clone());
    let chart = Chart::Spherical4;
    let h = hamiltonian(&spec, chart)?;
    let v = spec.chart_potential(chart)?;
    let v6 = v.clone();
    let h1 = Observable::new("H1", chart, 2, move |q, p| {
        (p[2].sq() + p[1].sq() / q[2].sin().sq()).scale(0.5) + q[0].sq() * v(q)
    });
    let h5 = Observable::new("H5", chart, 2, |_, p| p[3].sq());
    let h6 = Observable::new("H6", chart, 2, move |q, p| {
        let h1 = (p[2].sq() + p[1].sq() / q[2].sin().sq()).scale(0.5) + q[0].sq() * v6(q);
        (&q[3] * &p[0] - &q[0] * &p[3]).sq().scale(0.5) + (q[3].sq() / q[0].sq()) * h1
    });
    Ok(IntegralSet {
        system: format!("evans-{}", variant.name()),
        hamiltonian: h,
        members: vec![h1, h5, h6],
        candidates: evans_candidates(variant),
        claimed_independent: 6,
        exact_derivatives: variant.azimuthal_profile().is_exact(),
    })
}

struct EvansCoefficients {
    /// `b / z^2` in the separated `z` motion.
    b: f64,
    /// `c1 y^2/z^2 + c3 z^2/y^2` and `c1 x^2/z^2 + c2 z^2/x^2` in the rotation-type integrals.
    c1: f64,
    c2: f64,
    c3: f64,
    /// `a (2 z^2 + R^2) / (R^2 rho)` in the parabolic integral.
    a: f64,
}

impl EvansCoefficients {
    fn of(v: &EvansVariant) -> Self {
        let zero = EvansCoefficients {
            b: 0.0,
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            a: 0.0,
        };
        match v {
            EvansVariant::V1 { .. } => zero,
            EvansVariant::V2 { k, .. } => EvansCoefficients { b: *k, ..zero },
            EvansVariant::V3 { k, .. } => EvansCoefficients { a: *k, ..zero },
            EvansVariant::V4 { k, k1, k2, k3 } => EvansCoefficients {
                b: k * k1,
                c1: k * k1,
                c2: k * k2,
                c3: k * k3,
                a: 0.0,
            },
        }
    }
}

/// Quadratic integral candidates for the Evans variants, written in the
/// Jacobi frame `(x, y, z)` of the spherical chart. Not every candidate is
/// conserved for every variant; they are screened by bracket residual.
pub fn evans_candidates(variant: &EvansVariant) -> Vec<Observable> {
    let chart = Chart::Spherical4;
    let c = EvansCoefficients::of(variant);
    let g = variant.azimuthal_profile();
    let frame = move |q: &[Dual], p: &[Dual]| chart.to_frame(q, p);

    let gz = g.clone();
    let lz = Observable::new("C_lz", chart, 2, move |q, p| p[1].sq().scale(0.5) + gz.eval_dual(&q[1]));

    let b = c.b;
    let zsep = Observable::new("C_z", chart, 2, move |q, p| {
        let (z, pz) = frame(q, p);
        let t = pz[2].sq().scale(0.5);
        if b == 0.0 {
            t
        } else {
            t + z[2].sq().recip().scale(b)
        }
    });

    let (c1, c2, c3) = (c.c1, c.c2, c.c3);
    let lx = Observable::new("C_lx", chart, 2, move |q, p| {
        let (z, pz) = frame(q, p);
        let l = &z[1] * &pz[2] - &z[2] * &pz[1];
        let (y2, z2) = (z[1].sq(), z[2].sq());
        l.sq().scale(0.5) + (&y2 / &z2).scale(c1) + (&z2 / &y2).scale(c3)
    });
    let ly = Observable::new("C_ly", chart, 2, move |q, p| {
        let (z, pz) = frame(q, p);
        let l = &z[2] * &pz[0] - &z[0] * &pz[2];
        let (x2, z2) = (z[0].sq(), z[2].sq());
        l.sq().scale(0.5) + (&x2 / &z2).scale(c1) + (&z2 / &x2).scale(c2)
    });

    let a = c.a;
    let parabolic = Observable::new("C_parabolic", chart, 2, move |q, p| {
        let (z, pz) = frame(q, p);
        let lx = &z[1] * &pz[2] - &z[2] * &pz[1];
        let ly = &z[2] * &pz[0] - &z[0] * &pz[2];
        let k0 = &ly * &pz[0] - &lx * &pz[1];
        let r2 = z[0].sq() + z[1].sq();
        let mut out = k0 + (&z[2] * g.eval_dual(&q[1])).scale(2.0) / &r2;
        if a != 0.0 {
            out += ((z[2].sq().scale(2.0) + &r2) / (&r2 * &q[0])).scale(a);
        }
        out
    });

    vec![lz, zsep, lx, ly, parabolic]
}

/// Three points in a plane on the chart `(r, psi, u_1..u_4)`:
/// `H1 = p_psi^2/2 + F`, `H_i = p_{u_i}^2`, `H'_i = (r p_i - u_i p_r)^2/2 + u_i^2 H1 / r^2`.
pub fn integral_set_plane23(spec: &PotentialSpec) -> Result<IntegralSet> {
    if !matches!(spec, PotentialSpec::Plane23 { .. }) {
        return Err(LabError::IncompatibleChart {
            chart: Chart::PolarPlane.to_string(),
            family: spec.family_name().to_string(),
        });
    }
    let chart = Chart::PolarPlane;
    let h = hamiltonian(spec, chart)?;
    let f = angular_profile(spec);
    let exact = f.is_exact();
    let fh = f.clone();
    let h1 = Observable::new("H1", chart, 2, move |q, p| p[1].sq().scale(0.5) + fh.eval_dual(&q[1]));
    let mut members = vec![h1];
    for i in 0..4 {
        members.push(Observable::new(format!("H{}", i + 2), chart, 2, move |_, p| {
            p[2 + i].sq()
        }));
    }
    for i in 0..4 {
        let f = f.clone();
        members.push(Observable::new(format!("H{}'", i + 2), chart, 2, move |q, p| {
            let h1 = p[1].sq().scale(0.5) + f.eval_dual(&q[1]);
            let l = &q[0] * &p[2 + i] - &q[2 + i] * &p[0];
            l.sq().scale(0.5) + (q[2 + i].sq() / q[0].sq()) * h1
        }));
    }
    Ok(IntegralSet {
        system: "plane23".into(),
        hamiltonian: h,
        members,
        candidates: Vec::new(),
        claimed_independent: 9,
        exact_derivatives: exact,
    })
}

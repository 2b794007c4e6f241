//! Angular profiles `F(psi)` and the ratio functions used by the planar family.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::PotentialSpec;
use crate::dual::{constants, Dual};
use crate::geometry::Chart;

/// Registered closed forms for single-angle profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileForm {
    /// `c`
    Constant { c: f64 },
    /// `a / cos^2(m psi)`
    InvCos2 { a: f64, m: f64 },
    /// `a / sin^2(m psi)`
    InvSin2 { a: f64, m: f64 },
    /// `sum_j c_j cos(j psi)`
    CosSeries { coeffs: Vec<f64> },
}

/// Registered closed forms for functions of a coordinate ratio `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioFn {
    Zero,
    Constant {
        c: f64,
    },
    /// `sum_j c_j t^j`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `num(t) / den(t)`, both given by ascending coefficients.
    Rational {
        num: Vec<f64>,
        den: Vec<f64>,
    },
}

fn horner(coeffs: &[f64], t: &Dual) -> Dual {
    let mut acc = Dual::zero();
    for c in coeffs.iter().rev() {
        acc = acc * t + *c;
    }
    acc
}

impl RatioFn {
    pub fn eval_dual(&self, t: &Dual) -> Dual {
        match self {
            RatioFn::Zero => Dual::zero(),
            RatioFn::Constant { c } => Dual::constant(*c),
            RatioFn::Polynomial { coeffs } => horner(coeffs, t),
            RatioFn::Rational { num, den } => horner(num, t) / horner(den, t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_dual(&Dual::constant(t)).v
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RatioFn::Zero)
    }

    /// Denominator value at `t`, if the form has one.
    pub fn denominator(&self, t: f64) -> Option<f64> {
        match self {
            RatioFn::Rational { den, .. } => Some(horner(den, &Dual::constant(t)).v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RatioFn::Zero => true,
            RatioFn::Constant { c } => c.is_finite(),
            RatioFn::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
            RatioFn::Rational { num, den } => num.iter().chain(den).all(|c| c.is_finite()),
        }
    }
}

impl ProfileForm {
    fn eval_dual(&self, psi: &Dual) -> Dual {
        match self {
            ProfileForm::Constant { c } => Dual::constant(*c),
            ProfileForm::InvCos2 { a, m } => psi.scale(*m).cos().sq().recip().scale(*a),
            ProfileForm::InvSin2 { a, m } => psi.scale(*m).sin().sq().recip().scale(*a),
            ProfileForm::CosSeries { coeffs } => coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| psi.scale(j as f64).cos().scale(*c))
                .sum(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            ProfileForm::Constant { c } => c.is_finite(),
            ProfileForm::InvCos2 { a, m } | ProfileForm::InvSin2 { a, m } => a.is_finite() && m.is_finite(),
            ProfileForm::CosSeries { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Closed(ProfileForm),
    /// Planar family: `F1(tan psi) / (6 cos^2 psi) + F2(cot psi) / (6 sin^2 psi)`.
    RatioPair {
        f1: RatioFn,
        f2: RatioFn,
    },
    /// `r^2 V` at unit radius of a three-body difference-form potential.
    DifferenceBacked(Box<PotentialSpec>),
    /// User function without a derivative; differentiated numerically.
    Numeric {
        name: String,
        f: ScalarFn,
    },
}

/// A single-angle profile `F(psi)` with exact first derivative (except for
/// the numeric fallback) and an optional phase shift `psi -> psi + alpha`.
#[derive(Clone)]
pub struct AngularProfile {
    source: Source,
    shift: f64,
}

impl fmt::Debug for AngularProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AngularProfile({})", self.describe())
    }
}

/// Step of the central-difference fallback derivative.
const NUMERIC_STEP: f64 = 1e-5;

impl AngularProfile {
    pub fn closed(form: ProfileForm) -> Self {
        AngularProfile {
            source: Source::Closed(form),
            shift: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::closed(ProfileForm::Constant { c })
    }

    pub fn ratio_pair(f1: RatioFn, f2: RatioFn) -> Self {
        AngularProfile {
            source: Source::RatioPair { f1, f2 },
            shift: 0.0,
        }
    }

    pub(crate) fn difference_backed(spec: PotentialSpec) -> Self {
        AngularProfile {
            source: Source::DifferenceBacked(Box::new(spec)),
            shift: 0.0,
        }
    }

    /// Wraps a plain function; its derivative comes from central differences.
    pub fn numeric(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        AngularProfile {
            source: Source::Numeric {
                name: name.into(),
                f: Arc::new(f),
            },
            shift: 0.0,
        }
    }

    /// `psi -> F(psi + alpha)`.
    pub fn shifted(&self, alpha: f64) -> Self {
        AngularProfile {
            source: self.source.clone(),
            shift: self.shift + alpha,
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn form(&self) -> Option<&ProfileForm> {
        match &self.source {
            Source::Closed(form) => Some(form),
            _ => None,
        }
    }

    /// False when the derivative is a finite-difference approximation.
    pub fn is_exact(&self) -> bool {
        !matches!(self.source, Source::Numeric { .. })
    }

    pub fn is_finite(&self) -> bool {
        self.shift.is_finite()
            && match &self.source {
                Source::Closed(form) => form.is_finite(),
                Source::RatioPair { f1, f2 } => f1.is_finite() && f2.is_finite(),
                Source::DifferenceBacked(spec) => spec.validate().is_ok(),
                Source::Numeric { .. } => true,
            }
    }

    pub fn eval_dual(&self, psi: &Dual) -> Dual {
        let arg = if self.shift == 0.0 {
            psi.clone()
        } else {
            psi + self.shift
        };
        match &self.source {
            Source::Closed(form) => form.eval_dual(&arg),
            Source::RatioPair { f1, f2 } => {
                let (s, c) = (arg.sin(), arg.cos());
                let mut out = Dual::zero();
                if !f1.is_zero() {
                    out += f1.eval_dual(&(&s / &c)) / (c.sq().scale(6.0));
                }
                if !f2.is_zero() {
                    out += f2.eval_dual(&(&c / &s)) / (s.sq().scale(6.0));
                }
                out
            }
            Source::DifferenceBacked(spec) => {
                let q = [Dual::one(), arg, Dual::zero()];
                let x = Chart::Cylindrical3.positions_to_cartesian(&q);
                spec.potential_dual(&x)
            }
            Source::Numeric { f, .. } => {
                let t = arg.v;
                let h = NUMERIC_STEP * t.abs().max(1.0);
                let df = (f(t + h) - f(t - h)) / (2.0 * h);
                arg.chain(f(t), df)
            }
        }
    }

    pub fn value(&self, psi: f64) -> f64 {
        self.eval_dual(&Dual::constant(psi)).v
    }

    pub fn derivative(&self, psi: f64) -> f64 {
        self.eval_dual(&Dual::variable(psi, 0, 1)).partial(0)
    }

    /// Quantities that vanish on the singular set of the profile, evaluated at `psi`.
    pub fn singular_factors(&self, psi: f64) -> Vec<(String, f64)> {
        let a = psi + self.shift;
        match &self.source {
            Source::Closed(ProfileForm::InvCos2 { m, .. }) => vec![(format!("cos({m} psi)"), (m * a).cos())],
            Source::Closed(ProfileForm::InvSin2 { m, .. }) => vec![(format!("sin({m} psi)"), (m * a).sin())],
            Source::Closed(_) | Source::Numeric { .. } => Vec::new(),
            Source::RatioPair { f1, f2 } => {
                let mut out = Vec::new();
                if !f1.is_zero() {
                    out.push(("cos(psi)".to_string(), a.cos()));
                    if let Some(d) = f1.denominator(a.tan()) {
                        out.push(("den1(tan psi)".to_string(), d));
                    }
                }
                if !f2.is_zero() {
                    out.push(("sin(psi)".to_string(), a.sin()));
                    if let Some(d) = f2.denominator(1.0 / a.tan()) {
                        out.push(("den2(cot psi)".to_string(), d));
                    }
                }
                out
            }
            Source::DifferenceBacked(spec) => {
                let q = constants(&[1.0, a, 0.0]);
                let x: Vec<f64> = Chart::Cylindrical3
                    .positions_to_cartesian(&q)
                    .iter()
                    .map(|d| d.v)
                    .collect();
                spec.denominators(&x)
            }
        }
    }

    pub fn describe(&self) -> String {
        let base = match &self.source {
            Source::Closed(ProfileForm::Constant { c }) => format!("{c}"),
            Source::Closed(ProfileForm::InvCos2 { a, m }) => format!("{a}/cos^2({m} psi)"),
            Source::Closed(ProfileForm::InvSin2 { a, m }) => format!("{a}/sin^2({m} psi)"),
            Source::Closed(ProfileForm::CosSeries { coeffs }) => format!("cos series {coeffs:?}"),
            Source::RatioPair { f1, f2 } => format!("ratio pair ({f1:?}, {f2:?})"),
            Source::DifferenceBacked(spec) => format!("difference-backed {}", spec.family_name()),
            Source::Numeric { name, .. } => format!("numeric {name}"),
        };
        if self.shift == 0.0 {
            base
        } else {
            format!("{base} shifted by {}", self.shift)
        }
    }
}

/// Uniform grid on `[-pi, pi)`.
pub fn angle_grid(points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| -PI + 2.0 * PI * i as f64 / points as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms_evaluate() {
        let p = AngularProfile::closed(ProfileForm::InvSin2 { a: 2.0, m: 3.0 });
        assert_relative_eq!(p.value(PI / 6.0), 2.0, max_relative = 1e-15);
        let c = AngularProfile::closed(ProfileForm::CosSeries {
            coeffs: vec![1.0, 0.0, 0.5],
        });
        assert_relative_eq!(c.value(0.0), 1.5);
        assert_relative_eq!(c.derivative(0.3), -(0.6f64).sin(), max_relative = 1e-14);
    }

    #[test]
    fn shift_composes() {
        let p = AngularProfile::closed(ProfileForm::InvCos2 { a: 4.5, m: 3.0 });
        let twice = p.shifted(PI / 6.0).shifted(PI / 6.0);
        let once = p.shifted(PI / 3.0);
        for psi in angle_grid(97) {
            if (3.0 * (psi + PI / 3.0)).cos().abs() < 0.1 {
                continue;
            }
            assert!((twice.value(psi) - once.value(psi)).abs() <= 1e-15 * once.value(psi).abs().max(1.0) * 16.0);
        }
    }

    #[test]
    fn numeric_fallback_is_flagged() {
        let p = AngularProfile::numeric("cos", f64::cos);
        assert!(!p.is_exact());
        assert_relative_eq!(p.derivative(0.4), -(0.4f64).sin(), max_relative = 1e-8);
    }

    #[test]
    fn ratio_pair_matches_direct_formula() {
        let p = AngularProfile::ratio_pair(
            RatioFn::Polynomial { coeffs: vec![1.0, 2.0] },
            RatioFn::Constant { c: 3.0 },
        );
        let psi: f64 = 0.4;
        let expected = (1.0 + 2.0 * psi.tan()) / (6.0 * psi.cos().powi(2)) + 3.0 / (6.0 * psi.sin().powi(2));
        assert_relative_eq!(p.value(psi), expected, max_relative = 1e-14);
    }

    #[test]
    fn rational_ratio_function() {
        let f = RatioFn::Rational {
            num: vec![1.0],
            den: vec![2.0, 1.0],
        };
        assert_relative_eq!(f.eval(2.0), 0.25);
        assert_eq!(f.denominator(2.0), Some(4.0));
    }
}

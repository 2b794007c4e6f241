//! Phase-space observables with exact first derivatives, Poisson brackets,
//! the first-integral sets of the superintegrable families and functional
//! independence tests.

mod fifth;
mod integrals;
mod rank;
mod residual;
mod sampling;

pub use fifth::{
    coefficient_table, fifth_integral, fifth_integral_from_table, fifth_integral_on, reduced_hamiltonian,
    scan_fifth_signs, scan_fifth_signs_of, CoefficientEntry, CoefficientTable, SignFlipResult, SignScan,
};
pub use integrals::{
    evans_candidates, h3_sign_corrupted, hamiltonian, integral_set_3body, integral_set_evans4, integral_set_plane23,
    IntegralSet,
};
pub use rank::{independence_rank, independence_rank_report, PointSpectrum, RankReport, RANK_TOLERANCE};
pub use residual::{
    bracket_residual, certify_candidates, screen_candidates, CandidateVerdict, MemberResidual, ResidualReport,
};
pub use sampling::{PhaseSampler, DEFAULT_MARGIN};

use std::fmt;
use std::sync::Arc;

use crate::dual::{constants, seed_phase, Dual};
use crate::error::{LabError, Result};
use crate::geometry::{Chart, PhasePoint};

/// Bracket tolerance with exact profile derivatives.
pub const EXACT_BRACKET_TOLERANCE: f64 = 1e-10;
/// Bracket tolerance when a finite-difference profile derivative is active.
pub const FALLBACK_BRACKET_TOLERANCE: f64 = 1e-5;

type PhaseFn = Arc<dyn Fn(&[Dual], &[Dual]) -> Dual + Send + Sync>;

/// A phase-space function on one chart. Gradients are exact: the function
/// is evaluated on dual numbers seeded at the phase point.
#[derive(Clone)]
pub struct Observable {
    name: String,
    chart: Chart,
    momentum_degree: u32,
    f: PhaseFn,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("momentum_degree", &self.momentum_degree)
            .finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        chart: Chart,
        momentum_degree: u32,
        f: impl Fn(&[Dual], &[Dual]) -> Dual + Send + Sync + 'static,
    ) -> Self {
        Observable {
            name: name.into(),
            chart,
            momentum_degree,
            f: Arc::new(f),
        }
    }

    /// The coordinate function `q^a`.
    pub fn coordinate(chart: Chart, a: usize) -> Self {
        Observable::new(format!("q{a}"), chart, 0, move |q, _| q[a].clone())
    }

    /// The momentum function `p_a`.
    pub fn momentum(chart: Chart, a: usize) -> Self {
        Observable::new(format!("p{a}"), chart, 1, move |_, p| p[a].clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn momentum_degree(&self) -> u32 {
        self.momentum_degree
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn eval_dual(&self, q: &[Dual], p: &[Dual]) -> Dual {
        (self.f)(q, p)
    }

    fn check_point(&self, pt: &PhasePoint) -> Result<()> {
        if pt.chart != self.chart {
            return Err(LabError::ChartMismatch {
                expected: self.chart.to_string(),
                got: pt.chart.to_string(),
            });
        }
        Ok(())
    }

    /// Value at `pt`. Errors on chart mismatch or a non-finite result.
    pub fn value(&self, pt: &PhasePoint) -> Result<f64> {
        self.check_point(pt)?;
        let v = self.eval_dual(&constants(&pt.q), &constants(&pt.p)).v;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(LabError::NonFinite(self.name.clone()))
        }
    }

    /// Exact gradient `(d/dq, d/dp)` at `pt`.
    pub fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        let flat = self.flat_gradient(pt)?;
        let n = pt.dim();
        Ok((flat[..n].to_vec(), flat[n..].to_vec()))
    }

    /// Gradient as one vector, position derivatives first.
    pub fn flat_gradient(&self, pt: &PhasePoint) -> Result<Vec<f64>> {
        self.check_point(pt)?;
        let (q, p) = seed_phase(&pt.q, &pt.p);
        let out = self.eval_dual(&q, &p);
        let g = out.gradient(2 * pt.dim());
        if out.v.is_finite() && g.iter().all(|x| x.is_finite()) {
            Ok(g)
        } else {
            Err(LabError::NonFinite(format!("gradient of {}", self.name)))
        }
    }

    pub fn scale(&self, c: f64) -> Observable {
        let f = self.f.clone();
        Observable::new(
            format!("{c}*{}", self.name),
            self.chart,
            self.momentum_degree,
            move |q, p| f(q, p).scale(c),
        )
    }

    pub fn add(&self, other: &Observable) -> Result<Observable> {
        self.combine(other, "+", self.momentum_degree.max(other.momentum_degree), |a, b| {
            a + b
        })
    }

    pub fn mul(&self, other: &Observable) -> Result<Observable> {
        self.combine(other, "*", self.momentum_degree + other.momentum_degree, |a, b| a * b)
    }

    fn combine(
        &self,
        other: &Observable,
        op: &str,
        degree: u32,
        g: impl Fn(Dual, Dual) -> Dual + Send + Sync + 'static,
    ) -> Result<Observable> {
        if self.chart != other.chart {
            return Err(LabError::ChartMismatch {
                expected: self.chart.to_string(),
                got: other.chart.to_string(),
            });
        }
        let (fa, fb) = (self.f.clone(), other.f.clone());
        Ok(Observable::new(
            format!("({}{op}{})", self.name, other.name),
            self.chart,
            degree,
            move |q, p| g(fa(q, p), fb(q, p)),
        ))
    }
}

/// `{f, g} = sum_a (df/dq^a dg/dp_a - df/dp_a dg/dq^a)` with exact gradients.
pub fn poisson_bracket(f: &Observable, g: &Observable, pt: &PhasePoint) -> Result<f64> {
    let gf = f.flat_gradient(pt)?;
    let gg = g.flat_gradient(pt)?;
    Ok(bracket_from_gradients(&gf, &gg))
}

pub(crate) fn bracket_from_gradients(gf: &[f64], gg: &[f64]) -> f64 {
    let n = gf.len() / 2;
    (0..n).map(|a| gf[a] * gg[n + a] - gf[n + a] * gg[a]).sum()
}

/// Central finite-difference gradient; a test oracle for the exact gradient.
pub fn finite_difference_gradient(obs: &Observable, pt: &PhasePoint, step: f64) -> Result<Vec<f64>> {
    obs.check_point(pt)?;
    let base = pt.flat();
    let n = pt.dim();
    let eval = |v: &[f64]| obs.eval_dual(&constants(&v[..n]), &constants(&v[n..])).v;
    let mut g = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let h = step * base[i].abs().max(1.0);
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += h;
        minus[i] -= h;
        g.push((eval(&plus) - eval(&minus)) / (2.0 * h));
    }
    Ok(g)
}

/// Polynomial degree of `t -> f(q, t p)` detected from forward differences
/// at `t = 0, 1, ..`. Degrees above `max_degree` are reported as `max_degree + 1`.
pub fn detect_momentum_degree(obs: &Observable, pt: &PhasePoint, max_degree: u32) -> Result<u32> {
    obs.check_point(pt)?;
    let q = constants(&pt.q);
    let samples: Vec<f64> = (0..=max_degree + 2)
        .map(|t| {
            let p: Vec<Dual> = pt.p.iter().map(|v| Dual::constant(v * t as f64)).collect();
            obs.eval_dual(&q, &p).v
        })
        .collect();
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut diffs = samples;
    let mut degree = 0;
    for order in 1..diffs.len() {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        // k-th differences of a degree-d polynomial vanish for k > d
        if diffs.iter().any(|d| d.abs() > 1e-9 * scale) {
            degree = order as u32;
        }
    }
    Ok(degree)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::geometry::{Chart, PhasePoint};
use crate::potentials::{angular_profile, PotentialSpec};

/// Default lower bound on the relative singular margin of sampled points.
pub const DEFAULT_MARGIN: f64 = 0.1;

const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Seeded uniform sampler of chart phase points. Positions come from the
/// chart's sampling box, momenta from a symmetric interval; with a potential
/// attached, points closer than `margin` to its singular set are rejected.
#[derive(Debug, Clone)]
pub struct PhaseSampler {
    chart: Chart,
    q_box: Vec<(f64, f64)>,
    p_range: (f64, f64),
    spec: Option<PotentialSpec>,
    margin: f64,
    max_attempts: usize,
    rng: ChaCha8Rng,
}

impl PhaseSampler {
    pub fn new(chart: Chart, seed: u64) -> Result<Self> {
        chart.validate()?;
        Ok(PhaseSampler {
            chart,
            q_box: chart.sample_box(),
            p_range: (-1.0, 1.0),
            spec: None,
            margin: DEFAULT_MARGIN,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn for_spec(spec: &PotentialSpec, chart: Chart, seed: u64) -> Result<Self> {
        spec.validate()?;
        spec.chart_potential(chart)?;
        let mut s = Self::new(chart, seed)?;
        s.spec = Some(spec.clone());
        Ok(s)
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_momentum_range(mut self, lo: f64, hi: f64) -> Self {
        self.p_range = (lo, hi);
        self
    }

    pub fn with_box(mut self, q_box: Vec<(f64, f64)>) -> Result<Self> {
        if q_box.len() != self.chart.dim() {
            return Err(LabError::LengthMismatch {
                expected: self.chart.dim(),
                got: q_box.len(),
            });
        }
        self.q_box = q_box;
        Ok(self)
    }

    pub fn with_max_attempts(mut self, attempts: usize) -> Self {
        self.max_attempts = attempts;
        self
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    fn accepts(&self, pt: &PhasePoint) -> bool {
        let Some(spec) = &self.spec else {
            return true;
        };
        if self.chart == Chart::ReducedPolar {
            return angular_profile(spec)
                .singular_factors(pt.q[1])
                .iter()
                .all(|(_, v)| v.abs() > self.margin);
        }
        match self.chart.lower(pt) {
            Ok((x, _)) => spec.singular_margin(&x) > self.margin,
            Err(_) => false,
        }
    }

    fn draw(&mut self) -> Option<PhasePoint> {
        let q: Vec<f64> = self.q_box.iter().map(|&(lo, hi)| self.rng.gen_range(lo..hi)).collect();
        let (lo, hi) = self.p_range;
        let p: Vec<f64> = (0..q.len()).map(|_| self.rng.gen_range(lo..hi)).collect();
        PhasePoint::new(self.chart, q, p).ok()
    }

    /// Next accepted point; errors after `max_attempts` rejections in a row.
    pub fn sample(&mut self) -> Result<PhasePoint> {
        for _ in 0..self.max_attempts {
            if let Some(pt) = self.draw() {
                if self.accepts(&pt) {
                    return Ok(pt);
                }
            }
        }
        Err(LabError::SamplerExhausted {
            attempts: self.max_attempts,
            accepted: 0,
        })
    }

    pub fn take(&mut self, count: usize) -> Result<Vec<PhasePoint>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            match self.sample() {
                Ok(pt) => out.push(pt),
                Err(LabError::SamplerExhausted { attempts, .. }) => {
                    return Err(LabError::SamplerExhausted {
                        attempts,
                        accepted: out.len(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_sampling_is_reproducible() {
        let spec = PotentialSpec::Ttw { n: 1, k: 1.0 };
        let a = PhaseSampler::for_spec(&spec, Chart::Cylindrical3, 7)
            .unwrap()
            .take(20)
            .unwrap();
        let b = PhaseSampler::for_spec(&spec, Chart::Cylindrical3, 7)
            .unwrap()
            .take(20)
            .unwrap();
        assert_eq!(a, b);
        let c = PhaseSampler::for_spec(&spec, Chart::Cylindrical3, 8)
            .unwrap()
            .take(20)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn points_respect_the_margin() {
        let spec = PotentialSpec::Ttw { n: 2, k: 1.0 };
        for chart in [Chart::Cylindrical3, Chart::ReducedPolar] {
            let pts = PhaseSampler::for_spec(&spec, chart, 3).unwrap().take(200).unwrap();
            for pt in pts {
                assert!((5.0 * pt.q[1]).sin().abs() > DEFAULT_MARGIN);
                assert!((0.5..2.0).contains(&pt.q[0]));
                assert!(pt.p.iter().all(|v| v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn impossible_margin_exhausts() {
        let spec = PotentialSpec::Ttw { n: 1, k: 1.0 };
        let mut s = PhaseSampler::for_spec(&spec, Chart::Cylindrical3, 1)
            .unwrap()
            .with_margin(2.0)
            .with_max_attempts(50);
        assert_eq!(
            s.take(3),
            Err(LabError::SamplerExhausted {
                attempts: 50,
                accepted: 0
            })
        );
    }

    #[test]
    fn incompatible_chart_is_rejected() {
        let spec = PotentialSpec::Ttw { n: 1, k: 1.0 };
        assert!(PhaseSampler::for_spec(&spec, Chart::Spherical4, 1).is_err());
    }
}

//! Symplectic integration in particle coordinates with collision guards, and
//! conservation-drift reports for first-integral sets.

use std::fmt;
use std::io::{self, Write};

use crate::dual::{constants, Dual};
use crate::error::{LabError, Result};
use crate::geometry::{Chart, PhasePoint};
use crate::observables::{IntegralSet, Observable};
use crate::potentials::{PotentialSpec, COLLISION_GUARD};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_GUARD_RADIUS: f64 = 1e-6;
pub const DEFAULT_MAX_FORCE: f64 = 1e8;

// Fourth-order triple-jump weights.
const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Leapfrog2,
    Yoshida4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Leapfrog2 => "leapfrog2",
            Method::Yoshida4 => "yoshida4",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub method: Method,
    pub guard_radius: f64,
    pub max_force: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: DEFAULT_DT,
            steps: 100_000,
            method: Method::Leapfrog2,
            guard_radius: DEFAULT_GUARD_RADIUS,
            max_force: DEFAULT_MAX_FORCE,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(LabError::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dt * self.steps as f64).is_finite() {
            return Err(LabError::Domain("dt * steps is not finite".into()));
        }
        if !(self.guard_radius.is_finite() && self.guard_radius > 0.0) {
            return Err(LabError::Domain(format!(
                "guard_radius must be positive, got {}",
                self.guard_radius
            )));
        }
        if self.max_force.is_nan() || self.max_force <= 0.0 {
            return Err(LabError::Domain(format!(
                "max_force must be positive, got {}",
                self.max_force
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Completed,
    AbortedNearCollision { step: usize, reason: String },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Completed => write!(f, "completed"),
            Status::AbortedNearCollision { .. } => write!(f, "aborted_near_collision"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Cartesian states.
    pub states: Vec<PhasePoint>,
    /// Logged observable values, one series per observable.
    pub logs: Vec<(String, Vec<f64>)>,
    pub status: Status,
}

/// `-grad V` at `x` with exact derivatives.
pub fn force(spec: &PotentialSpec, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != spec.particle_count() {
        return Err(LabError::LengthMismatch {
            expected: spec.particle_count(),
            got: x.len(),
        });
    }
    spec.check_collision(x, COLLISION_GUARD)?;
    Ok(raw_force(spec, x))
}

fn raw_force(spec: &PotentialSpec, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let xs: Vec<Dual> = x.iter().enumerate().map(|(i, v)| Dual::variable(*v, i, n)).collect();
    spec.potential_dual(&xs).gradient(n).into_iter().map(|g| -g).collect()
}

fn denominator_violation(spec: &PotentialSpec, x: &[f64], cfg: &IntegratorConfig) -> Option<String> {
    spec.denominators(x)
        .into_iter()
        .find(|(_, d)| d.is_nan() || d.abs() < cfg.guard_radius)
        .map(|(name, d)| format!("denominator {name} = {d:e} below guard {:e}", cfg.guard_radius))
}

fn force_violation(f: &[f64], cfg: &IntegratorConfig) -> Option<String> {
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= cfg.max_force {
        None
    } else {
        Some(format!("force {norm:e} above limit {:e}", cfg.max_force))
    }
}

/// One kick-drift-kick step of length `h`, reusing the force at `x`.
/// The force is updated in place; a guard violation returns its message.
fn leapfrog(
    spec: &PotentialSpec,
    x: &mut [f64],
    p: &mut [f64],
    f: &mut Vec<f64>,
    h: f64,
    cfg: &IntegratorConfig,
) -> std::result::Result<(), String> {
    for (pi, fi) in p.iter_mut().zip(f.iter()) {
        *pi += 0.5 * h * fi;
    }
    for (xi, pi) in x.iter_mut().zip(p.iter()) {
        *xi += h * pi;
    }
    if let Some(msg) = denominator_violation(spec, x, cfg) {
        return Err(msg);
    }
    *f = raw_force(spec, x);
    if let Some(msg) = force_violation(f, cfg) {
        return Err(msg);
    }
    for (pi, fi) in p.iter_mut().zip(f.iter()) {
        *pi += 0.5 * h * fi;
    }
    Ok(())
}

fn advance(
    spec: &PotentialSpec,
    x: &mut [f64],
    p: &mut [f64],
    f: &mut Vec<f64>,
    cfg: &IntegratorConfig,
) -> std::result::Result<(), String> {
    match cfg.method {
        Method::Leapfrog2 => leapfrog(spec, x, p, f, cfg.dt, cfg),
        Method::Yoshida4 => {
            for w in [YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1] {
                leapfrog(spec, x, p, f, w * cfg.dt, cfg)?;
            }
            Ok(())
        }
    }
}

/// A single integrator step from `(x, p)`.
pub fn step(spec: &PotentialSpec, x: &[f64], p: &[f64], cfg: &IntegratorConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut f = force(spec, x)?;
    let (mut x, mut p) = (x.to_vec(), p.to_vec());
    advance(spec, &mut x, &mut p, &mut f, cfg).map_err(|reason| LabError::SingularChart {
        chart: "cartesian".into(),
        reason,
    })?;
    Ok((x, p))
}

fn check_initial(spec: &PotentialSpec, x0: &[f64], p0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    spec.validate()?;
    let n = spec.particle_count();
    for len in [x0.len(), p0.len()] {
        if len != n {
            return Err(LabError::LengthMismatch { expected: n, got: len });
        }
    }
    if x0.iter().chain(p0).any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("initial state".into()));
    }
    spec.check_collision(x0, cfg.guard_radius)?;
    let f = raw_force(spec, x0);
    if let Some(reason) = denominator_violation(spec, x0, cfg).or_else(|| force_violation(&f, cfg)) {
        return Err(LabError::SingularChart {
            chart: "cartesian".into(),
            reason,
        });
    }
    Ok(f)
}

/// Integrates from `(x0, p0)`. A guard violation ends the run with
/// `Status::AbortedNearCollision`; the trajectory keeps every accepted state.
pub fn integrate(spec: &PotentialSpec, x0: &[f64], p0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    let mut f = check_initial(spec, x0, p0, cfg)?;
    let chart = Chart::Cartesian(x0.len());
    let (mut x, mut p) = (x0.to_vec(), p0.to_vec());
    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    times.push(0.0);
    states.push(PhasePoint::new(chart, x.clone(), p.clone())?);
    let mut status = Status::Completed;
    for k in 1..=cfg.steps {
        if let Err(reason) = advance(spec, &mut x, &mut p, &mut f, cfg) {
            status = Status::AbortedNearCollision { step: k, reason };
            break;
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            status = Status::AbortedNearCollision {
                step: k,
                reason: "non-finite state".into(),
            };
            break;
        }
        times.push(k as f64 * cfg.dt);
        states.push(PhasePoint {
            chart,
            q: x.clone(),
            p: p.clone(),
        });
    }
    Ok(Trajectory {
        times,
        states,
        logs: Vec::new(),
        status,
    })
}

/// Values of `obs` along Cartesian states, lifted into the observable's chart.
fn series(states: &[PhasePoint], obs: &Observable) -> Result<Vec<f64>> {
    let chart = obs.chart();
    states
        .iter()
        .map(|s| {
            if chart == s.chart {
                obs.value(s)
            } else {
                obs.value(&chart.lift(&s.q, &s.p)?)
            }
        })
        .collect()
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Evaluates `obs` along the trajectory and stores the series.
    pub fn log(&mut self, obs: &Observable) -> Result<&[f64]> {
        let values = series(&self.states, obs)?;
        self.logs.push((obs.name().to_string(), values));
        Ok(&self.logs.last().map(|(_, v)| v).expect("just pushed")[..])
    }

    /// CSV with columns `t, x.., p.., logs..`; every `stride`-th row plus the last.
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> io::Result<()> {
        let stride = stride.max(1);
        let n = self.states.first().map_or(0, PhasePoint::dim);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.extend(self.logs.iter().map(|(name, _)| name.clone()));
        writeln!(w, "{}", header.join(","))?;
        let last = self.len().saturating_sub(1);
        for k in (0..self.len()).filter(|k| k % stride == 0 || *k == last) {
            let s = &self.states[k];
            let mut row = vec![format!("{:.16e}", self.times[k])];
            row.extend(s.q.iter().chain(&s.p).map(|v| format!("{v:.16e}")));
            row.extend(self.logs.iter().map(|(_, v)| format!("{:.16e}", v[k])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    /// Below round-off level.
    Negligible,
    Oscillatory,
    Secular,
}

impl DriftKind {
    pub fn name(self) -> &'static str {
        match self {
            DriftKind::Negligible => "negligible",
            DriftKind::Oscillatory => "oscillatory",
            DriftKind::Secular => "secular",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEntry {
    pub name: String,
    pub initial: f64,
    /// `max_t |I(t) - I(0)| / max(|I(0)|, 1)`.
    pub relative_drift: f64,
    /// Least-squares slope of the scaled deviation per unit time.
    pub slope: f64,
    pub kind: DriftKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub system: String,
    pub steps: usize,
    pub status: String,
    pub entries: Vec<DriftEntry>,
}

impl DriftReport {
    pub fn get(&self, name: &str) -> Option<&DriftEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn max_drift(&self) -> f64 {
        self.entries.iter().map(|e| e.relative_drift).fold(0.0, f64::max)
    }
}

const NEGLIGIBLE_DRIFT: f64 = 1e-13;

/// Drift of one value series.
pub fn drift_entry(name: &str, times: &[f64], values: &[f64]) -> DriftEntry {
    let initial = values.first().copied().unwrap_or(0.0);
    let scale = initial.abs().max(1.0);
    let dev: Vec<f64> = values.iter().map(|v| (v - initial) / scale).collect();
    let relative_drift = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let n = times.len().min(dev.len()) as f64;
    let (slope, r2) = if n >= 3.0 {
        let tm = times.iter().sum::<f64>() / n;
        let dm = dev.iter().sum::<f64>() / n;
        let (mut stt, mut std, mut sdd) = (0.0, 0.0, 0.0);
        for (t, d) in times.iter().zip(&dev) {
            stt += (t - tm) * (t - tm);
            std += (t - tm) * (d - dm);
            sdd += (d - dm) * (d - dm);
        }
        let slope = if stt > 0.0 { std / stt } else { 0.0 };
        let r2 = if stt > 0.0 && sdd > 0.0 {
            std * std / (stt * sdd)
        } else {
            0.0
        };
        (slope, r2)
    } else {
        (0.0, 0.0)
    };
    let kind = if relative_drift < NEGLIGIBLE_DRIFT {
        DriftKind::Negligible
    } else if r2 > 0.5 {
        DriftKind::Secular
    } else {
        DriftKind::Oscillatory
    };
    DriftEntry {
        name: name.to_string(),
        initial,
        relative_drift,
        slope,
        kind,
    }
}

/// Drift of the Hamiltonian and every member of `set` along `traj`.
pub fn drift_report(traj: &Trajectory, set: &IntegralSet) -> Result<DriftReport> {
    drift_report_for(traj, &set.system, &set.rank_family())
}

pub fn drift_report_for(traj: &Trajectory, system: &str, observables: &[Observable]) -> Result<DriftReport> {
    let entries = observables
        .iter()
        .map(|o| Ok(drift_entry(o.name(), &traj.times, &series(&traj.states, o)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftReport {
        system: system.to_string(),
        steps: traj.len().saturating_sub(1),
        status: traj.status.to_string(),
        entries,
    })
}

/// Relative return error after integrating `steps` forward, flipping the
/// momenta and integrating back.
pub fn reversal_error(spec: &PotentialSpec, x0: &[f64], p0: &[f64], cfg: &IntegratorConfig) -> Result<f64> {
    let fwd = integrate(spec, x0, p0, cfg)?;
    if !fwd.status.is_completed() {
        return Err(LabError::Domain(format!("forward run {}", fwd.status)));
    }
    let end = fwd.states.last().expect("non-empty trajectory");
    let back_p: Vec<f64> = end.p.iter().map(|v| -v).collect();
    let back = integrate(spec, &end.q, &back_p, cfg)?;
    if !back.status.is_completed() {
        return Err(LabError::Domain(format!("reverse run {}", back.status)));
    }
    let fin = back.states.last().expect("non-empty trajectory");
    let scale = x0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let err = fin.q.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(err / scale)
}

/// Potential energy in particle coordinates.
pub fn potential(spec: &PotentialSpec, x: &[f64]) -> f64 {
    spec.potential_dual(&constants(x)).v
}

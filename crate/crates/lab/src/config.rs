//! JSON experiment configuration. Every field is validated before an
//! experiment runs; defaults are filled in so the resolved document can be
//! echoed verbatim in the report.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use superint_core::dynamics::{IntegratorConfig, Method};
use superint_core::potentials::{AngularProfile, EvansVariant, PotentialSpec, ProfileForm, RatioFn};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Verify,
    Rank,
    Coeffs,
    Equivalence,
    Simulate,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Verify => "verify",
            Experiment::Rank => "rank",
            Experiment::Coeffs => "coeffs",
            Experiment::Equivalence => "equivalence",
            Experiment::Simulate => "simulate",
        };
        f.write_str(s)
    }
}

/// Registered single-angle profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { c: f64 },
    InvCos2 { a: f64, m: f64 },
    InvSin2 { a: f64, m: f64 },
    CosSeries { coeffs: Vec<f64> },
}

impl ProfileConfig {
    pub fn to_profile(&self) -> AngularProfile {
        AngularProfile::closed(match self {
            ProfileConfig::Constant { c } => ProfileForm::Constant { c: *c },
            ProfileConfig::InvCos2 { a, m } => ProfileForm::InvCos2 { a: *a, m: *m },
            ProfileConfig::InvSin2 { a, m } => ProfileForm::InvSin2 { a: *a, m: *m },
            ProfileConfig::CosSeries { coeffs } => ProfileForm::CosSeries { coeffs: coeffs.clone() },
        })
    }
}

/// Registered ratio functions for the planar family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatioConfig {
    Zero,
    Constant { c: f64 },
    Polynomial { coeffs: Vec<f64> },
    Rational { num: Vec<f64>, den: Vec<f64> },
}

impl RatioConfig {
    pub fn to_ratio(&self) -> RatioFn {
        match self {
            RatioConfig::Zero => RatioFn::Zero,
            RatioConfig::Constant { c } => RatioFn::Constant { c: *c },
            RatioConfig::Polynomial { coeffs } => RatioFn::Polynomial { coeffs: coeffs.clone() },
            RatioConfig::Rational { num, den } => RatioFn::Rational {
                num: num.clone(),
                den: den.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvansName {
    V1,
    V2,
    V3,
    V4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Calogero {
        k: [f64; 3],
    },
    Wolfes {
        h: [f64; 3],
    },
    Ttw {
        n: u32,
        k: f64,
    },
    Angular3 {
        profile: ProfileConfig,
    },
    Evans {
        variant: EvansName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k3: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<ProfileConfig>,
    },
    Plane23 {
        f1: RatioConfig,
        f2: RatioConfig,
    },
}

impl SystemConfig {
    pub fn to_spec(&self) -> Result<PotentialSpec, CliError> {
        let spec = match self {
            SystemConfig::Calogero { k } => PotentialSpec::Calogero { k: *k },
            SystemConfig::Wolfes { h } => PotentialSpec::Wolfes { h: *h },
            SystemConfig::Ttw { n, k } => PotentialSpec::Ttw { n: *n, k: *k },
            SystemConfig::Angular3 { profile } => PotentialSpec::Angular3 {
                profile: profile.to_profile(),
            },
            SystemConfig::Evans {
                variant,
                k,
                k1,
                k2,
                k3,
                f,
            } => {
                let need = |name: &str, v: Option<f64>| {
                    v.ok_or_else(|| CliError::Config(format!("evans {variant:?} requires `{name}`")))
                };
                let forbid = |name: &str, present: bool| {
                    if present {
                        Err(CliError::Config(format!("evans {variant:?} does not take `{name}`")))
                    } else {
                        Ok(())
                    }
                };
                let profile = || {
                    f.as_ref()
                        .map(ProfileConfig::to_profile)
                        .ok_or_else(|| CliError::Config(format!("evans {variant:?} requires `f`")))
                };
                let v = match variant {
                    EvansName::V1 => {
                        forbid("k", k.is_some())?;
                        forbid("k1", k1.is_some() || k2.is_some() || k3.is_some())?;
                        EvansVariant::V1 { f: profile()? }
                    }
                    EvansName::V2 | EvansName::V3 => {
                        forbid("k1", k1.is_some() || k2.is_some() || k3.is_some())?;
                        let (k, f) = (need("k", *k)?, profile()?);
                        if *variant == EvansName::V2 {
                            EvansVariant::V2 { k, f }
                        } else {
                            EvansVariant::V3 { k, f }
                        }
                    }
                    EvansName::V4 => {
                        forbid("f", f.is_some())?;
                        EvansVariant::V4 {
                            k: need("k", *k)?,
                            k1: need("k1", *k1)?,
                            k2: need("k2", *k2)?,
                            k3: need("k3", *k3)?,
                        }
                    }
                };
                PotentialSpec::Evans(v)
            }
            SystemConfig::Plane23 { f1, f2 } => PotentialSpec::Plane23 {
                f1: f1.to_ratio(),
                f2: f2.to_ratio(),
            },
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }
}

fn default_count() -> usize {
    200
}
fn default_margin() -> f64 {
    superint_core::observables::DEFAULT_MARGIN
}
fn default_rank_points() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    /// Mandatory for reproducibility.
    pub seed: u64,
    /// Minimum relative distance of sample points from the singular set.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_rank_points")]
    pub rank_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    Leapfrog2,
    Yoshida4,
}

fn default_dt() -> f64 {
    superint_core::dynamics::DEFAULT_DT
}
fn default_steps() -> usize {
    100_000
}
fn default_method() -> MethodConfig {
    MethodConfig::Leapfrog2
}
fn default_guard_radius() -> f64 {
    superint_core::dynamics::DEFAULT_GUARD_RADIUS
}
fn default_max_force() -> f64 {
    superint_core::dynamics::DEFAULT_MAX_FORCE
}
fn default_csv_stride() -> usize {
    100
}
fn default_drift_tolerance() -> f64 {
    1e-5
}
fn default_cyclic_tolerance() -> f64 {
    1e-12
}
fn default_initial_margin() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_method")]
    pub method: MethodConfig,
    #[serde(default = "default_guard_radius")]
    pub guard_radius: f64,
    #[serde(default = "default_max_force")]
    pub max_force: f64,
    /// Every `csv_stride`-th state goes to the trajectory CSV.
    #[serde(default = "default_csv_stride")]
    pub csv_stride: usize,
    #[serde(default = "default_drift_tolerance")]
    pub drift_tolerance: f64,
    /// Tolerance for integrals of cyclic coordinates.
    #[serde(default = "default_cyclic_tolerance")]
    pub cyclic_tolerance: f64,
    /// Singular margin of the seeded initial state when `initial` is absent.
    #[serde(default = "default_initial_margin")]
    pub initial_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all integrator fields have defaults")
    }
}

impl IntegratorSection {
    pub fn to_core(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            steps: self.steps,
            method: match self.method {
                MethodConfig::Leapfrog2 => Method::Leapfrog2,
                MethodConfig::Yoshida4 => Method::Yoshida4,
            },
            guard_radius: self.guard_radius,
            max_force: self.max_force,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

fn default_out_path() -> String {
    "out".into()
}
fn default_format() -> OutputFormat {
    OutputFormat::Json
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_path")]
    pub path: String,
    /// `csv` additionally writes the checks as CSV next to the JSON report.
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: default_out_path(),
            format: default_format(),
        }
    }
}

fn default_shift() -> f64 {
    PI / 6.0
}
fn default_grid_points() -> usize {
    10_000
}
fn default_grid_guard() -> f64 {
    1e-2
}
fn default_equivalence_tolerance() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceSection {
    /// Wolfes coupling compared against the shifted Calogero profile;
    /// defaults to the matched value `3 g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wolfes_h: Option<f64>,
    #[serde(default = "default_shift")]
    pub shift: f64,
    /// Minimum number of grid points kept after the guard.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Grid points where any singular factor is below this are skipped.
    #[serde(default = "default_grid_guard")]
    pub guard: f64,
    #[serde(default = "default_equivalence_tolerance")]
    pub tolerance: f64,
}

impl Default for EquivalenceSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all equivalence fields have defaults")
    }
}

fn default_scan_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FifthSection {
    /// Relative cancellation below which the fifth integral counts as conserved.
    #[serde(default = "default_scan_tolerance")]
    pub tolerance: f64,
}

impl Default for FifthSection {
    fn default() -> Self {
        FifthSection {
            tolerance: default_scan_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub system: SystemConfig,
    pub sampling: SamplingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fifth: Option<FifthSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Checks the config against `experiment` and fills in every optional
    /// section the experiment uses.
    pub fn resolve(mut self, experiment: Experiment) -> Result<Self, CliError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(CliError::Config(format!(
                    "config is for `{e}` but `{experiment}` was requested"
                )));
            }
        }
        self.experiment = Some(experiment);
        let spec = self.system.to_spec()?;
        let s = &self.sampling;
        if s.count == 0 || s.rank_points == 0 {
            return Err(CliError::Config(
                "sampling.count and sampling.rank_points must be positive".into(),
            ));
        }
        if !(s.margin.is_finite() && s.margin >= 0.0) {
            return Err(CliError::Config(format!(
                "sampling.margin must be non-negative, got {}",
                s.margin
            )));
        }
        match experiment {
            Experiment::Simulate => {
                let integ = self.integrator.get_or_insert_with(IntegratorSection::default);
                integ
                    .to_core()
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if integ.csv_stride == 0 {
                    return Err(CliError::Config("integrator.csv_stride must be positive".into()));
                }
                if let Some(init) = &integ.initial {
                    let n = spec.particle_count();
                    if init.x.len() != n || init.p.len() != n {
                        return Err(CliError::Config(format!(
                            "integrator.initial needs {n} positions and momenta"
                        )));
                    }
                }
            }
            _ if self.integrator.is_some() => {
                return Err(CliError::Config(format!(
                    "`integrator` is only used by simulate, not {experiment}"
                )));
            }
            _ => {}
        }
        match experiment {
            Experiment::Equivalence => {
                if !matches!(self.system, SystemConfig::Calogero { .. }) {
                    return Err(CliError::Config(
                        "equivalence compares a calogero system with wolfes".into(),
                    ));
                }
                let eq = self.equivalence.get_or_insert_with(EquivalenceSection::default);
                if eq.grid_points == 0 {
                    return Err(CliError::Config("equivalence.grid_points must be positive".into()));
                }
                if eq.wolfes_h.is_none() {
                    if let SystemConfig::Calogero { k } = &self.system {
                        eq.wolfes_h = Some(3.0 * k[0]);
                    }
                }
            }
            _ if self.equivalence.is_some() => {
                return Err(CliError::Config(format!("`equivalence` is not used by {experiment}")));
            }
            _ => {}
        }
        let ttw = matches!(self.system, SystemConfig::Ttw { .. });
        match experiment {
            Experiment::Verify if ttw => {
                self.fifth.get_or_insert_with(FifthSection::default);
            }
            Experiment::Coeffs if !ttw => {
                return Err(CliError::Config("coeffs needs a ttw system for its index n".into()));
            }
            _ if self.fifth.is_some() => {
                return Err(CliError::Config(format!(
                    "`fifth` is not used by {experiment} on this system"
                )));
            }
            _ => {}
        }
        Ok(self)
    }
}

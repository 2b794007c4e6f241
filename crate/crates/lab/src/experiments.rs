use std::f64::consts::PI;
use std::time::Instant;

use serde_json::{json, Value};

use superint_core::dynamics::{drift_report, integrate, Status};
use superint_core::geometry::{Chart, PhasePoint};
use superint_core::observables::{
    bracket_residual, certify_candidates, coefficient_table, detect_momentum_degree, fifth_integral, fifth_integral_on,
    h3_sign_corrupted, independence_rank_report, integral_set_3body, integral_set_evans4, integral_set_plane23,
    poisson_bracket, reduced_hamiltonian, scan_fifth_signs, IntegralSet, PhaseSampler, RankReport, ResidualReport,
    SignFlipResult, EXACT_BRACKET_TOLERANCE,
};
use superint_core::potentials::{angle_grid, angular_profile, PotentialSpec};
use superint_core::LabError;

use crate::config::{Experiment, ExperimentConfig, SystemConfig};
use crate::report::{Check, Report};
use crate::CliError;

/// Corrupted integrals must miss conservation by more than this.
pub const NEGATIVE_CONTROL_THRESHOLD: f64 = 1e-2;

/// A finished experiment: the report plus extra files for the output directory.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(String, String)>,
    /// Text the CLI prints on stdout.
    pub stdout: Option<String>,
}

fn runtime(e: LabError) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs `experiment` on a config already passed through `resolve`.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let spec = cfg.system.to_spec()?;
    let echo = serde_json::to_value(cfg).expect("config serializes");
    let mut report = Report::new(experiment.to_string(), echo);
    let mut files = Vec::new();
    let mut stdout = None;
    match experiment {
        Experiment::Verify => verify(&spec, cfg, &mut report)?,
        Experiment::Rank => rank(&spec, cfg, &mut report)?,
        Experiment::Coeffs => {
            let csv = coeffs(&spec, &mut report)?;
            files.push(("coefficients.csv".to_string(), csv.clone()));
            stdout = Some(csv);
        }
        Experiment::Equivalence => files.push(("equivalence.csv".to_string(), equivalence(cfg, &mut report)?)),
        Experiment::Simulate => files.push(("trajectory.csv".to_string(), simulate(&spec, cfg, &mut report)?)),
    }
    report.artifacts = files.iter().map(|(name, _)| name.clone()).collect();
    report.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    Ok(Outcome { report, files, stdout })
}

fn integral_set(spec: &PotentialSpec) -> Result<IntegralSet, CliError> {
    match spec {
        PotentialSpec::Evans(v) => integral_set_evans4(v),
        PotentialSpec::Plane23 { .. } => integral_set_plane23(spec),
        _ => integral_set_3body(spec),
    }
    .map_err(runtime)
}

/// `count` bracket points followed by the rank points come from one seeded stream.
fn sample(
    spec: &PotentialSpec,
    chart: Chart,
    cfg: &ExperimentConfig,
    count: usize,
) -> Result<Vec<PhasePoint>, CliError> {
    PhaseSampler::for_spec(spec, chart, cfg.sampling.seed)
        .map_err(runtime)?
        .with_margin(cfg.sampling.margin)
        .take(count)
        .map_err(runtime)
}

fn residual_json(r: &ResidualReport) -> Value {
    let rows = |ms: &[superint_core::observables::MemberResidual]| -> Vec<Value> {
        ms.iter()
            .map(|m| json!({"name": m.name, "max_abs": m.max_abs, "mean_abs": m.mean_abs, "pass": m.pass}))
            .collect()
    };
    json!({
        "system": r.system,
        "chart": r.chart,
        "points": r.points,
        "tolerance": r.tolerance,
        "members": rows(&r.members),
        "candidates": rows(&r.candidates),
        "pairwise_names": r.members.iter().map(|m| m.name.clone()).collect::<Vec<_>>(),
        "pairwise_max_abs": r.pairwise,
    })
}

fn rank_json(r: &RankReport, spectra: bool) -> Value {
    let mut v = json!({"rank": r.rank, "observables": r.observables, "points": r.per_point.len()});
    if spectra {
        v["per_point"] = json!(r
            .per_point
            .iter()
            .map(|s| json!({"rank": s.rank, "singular_values": s.singular_values}))
            .collect::<Vec<_>>());
    }
    v
}

fn member_checks(report: &mut Report, r: &ResidualReport) {
    for m in &r.members {
        report.check(Check::below(
            format!("bracket {{H, {}}}", m.name),
            m.max_abs,
            r.tolerance,
        ));
    }
}

fn verify(spec: &PotentialSpec, cfg: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let set = integral_set(spec)?;
    let s = &cfg.sampling;
    let pts = sample(spec, set.chart(), cfg, s.count.max(s.rank_points))?;
    let (bracket_pts, rank_pts) = (&pts[..s.count], &pts[..s.rank_points]);
    let t = Instant::now();
    let residual = bracket_residual(&set, bracket_pts).map_err(runtime)?;
    report.timings.insert("brackets_s".into(), t.elapsed().as_secs_f64());
    member_checks(report, &residual);
    report.info("residuals", residual_json(&residual));

    match spec {
        PotentialSpec::Evans(_) => {
            let (certified, verdicts, rank) = certify_candidates(&set, rank_pts).map_err(runtime)?;
            report.check(Check::new(
                "certified rank",
                rank.rank as f64,
                crate::report::Comparison::AtLeast,
                4.0,
            ));
            report.info(
                "candidates",
                json!(verdicts
                    .iter()
                    .map(|v| json!({"name": v.name, "max_abs": v.max_abs, "verified": v.verified}))
                    .collect::<Vec<_>>()),
            );
            report.info("claimed_independent", json!(set.claimed_independent));
            report.info(
                "certified_members",
                json!(certified.members.iter().map(|m| m.name()).collect::<Vec<_>>()),
            );
            report.info("rank", rank_json(&rank, false));
        }
        PotentialSpec::Plane23 { .. } => {
            let rank = independence_rank_report(&set.members, rank_pts).map_err(runtime)?;
            report.check(Check::equal("rank", rank.rank, set.claimed_independent));
            let with_h = independence_rank_report(&set.rank_family(), rank_pts).map_err(runtime)?;
            report.info("rank", rank_json(&rank, false));
            report.info("rank_with_hamiltonian", json!(with_h.rank));
        }
        _ => {
            let rank = independence_rank_report(&set.rank_family(), rank_pts).map_err(runtime)?;
            report.check(Check::equal("rank", rank.rank, set.claimed_independent));
            report.info("rank", rank_json(&rank, false));
            let bad = h3_sign_corrupted(spec).map_err(runtime)?;
            let worst = bracket_pts
                .iter()
                .map(|pt| poisson_bracket(&set.hamiltonian, &bad, pt).map(f64::abs))
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime)?
                .into_iter()
                .fold(0.0, f64::max);
            report.check(Check::above(
                "negative control {H, H3 sign-flipped}",
                worst,
                NEGATIVE_CONTROL_THRESHOLD,
            ));
            if let PotentialSpec::Ttw { n, k } = spec {
                verify_fifth(*n as usize, *k, cfg, &set, rank_pts, report)?;
            }
        }
    }
    Ok(())
}

fn flip_json(r: &SignFlipResult) -> Value {
    json!({"flipped": r.flipped, "max_abs": r.max_abs, "max_relative": r.max_relative})
}

fn verify_fifth(
    n: usize,
    k: f64,
    cfg: &ExperimentConfig,
    set: &IntegralSet,
    rank_pts: &[PhasePoint],
    report: &mut Report,
) -> Result<(), CliError> {
    let tolerance = cfg.fifth.as_ref().map_or(1e-9, |f| f.tolerance);
    let spec = PotentialSpec::Ttw { n: n as u32, k };
    let t = Instant::now();
    let pts = sample(&spec, Chart::ReducedPolar, cfg, cfg.sampling.count)?;
    let fifth = fifth_integral(n, k).map_err(runtime)?;
    let h = reduced_hamiltonian(n, k).map_err(runtime)?;
    let degree = detect_momentum_degree(&fifth, &pts[0], 2 * n as u32 + 3).map_err(runtime)?;
    report.check(Check::equal(
        "fifth integral momentum degree",
        degree as usize,
        2 * n + 1,
    ));
    let scan = scan_fifth_signs(n, k, &pts, tolerance).map_err(runtime)?;
    if n == 1 {
        let abs = pts
            .iter()
            .map(|pt| poisson_bracket(&h, &fifth, pt).map(f64::abs))
            .collect::<Result<Vec<_>, _>>()
            .map_err(runtime)?
            .into_iter()
            .fold(0.0, f64::max);
        report.check(Check::below(
            "fifth integral {H_reduced, I}",
            abs,
            EXACT_BRACKET_TOLERANCE,
        ));
    }
    report.check(Check::below(
        "fifth integral relative residual",
        scan.baseline.max_relative,
        tolerance,
    ));
    let lifted = fifth_integral_on(Chart::Cylindrical3, n, k).map_err(runtime)?;
    let mut family = set.rank_family();
    family.push(lifted);
    let rank5 = independence_rank_report(&family, rank_pts).map_err(runtime)?;
    report.info(
        "fifth_integral",
        json!({
            "n": n,
            "k": k,
            "points": scan.points,
            "momentum_degree": degree,
            "baseline": flip_json(&scan.baseline),
            "vanishes": scan.baseline.max_relative < tolerance,
            "sign_scan": {
                "exhaustive": scan.exhaustive,
                "assignments_tested": scan.assignments_tested,
                "tolerance": scan.tolerance,
                "zeroing": scan.zeroing.iter().map(flip_json).collect::<Vec<_>>(),
                "single_flips": scan.single_flips.iter().map(flip_json).collect::<Vec<_>>(),
            },
            "rank_with_fifth": rank5.rank,
        }),
    );
    report.timings.insert("fifth_s".into(), t.elapsed().as_secs_f64());
    Ok(())
}

fn rank(spec: &PotentialSpec, cfg: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let set = integral_set(spec)?;
    let s = &cfg.sampling;
    match spec {
        PotentialSpec::Evans(_) => {
            let pts = sample(spec, set.chart(), cfg, s.count.max(s.rank_points))?;
            let (certified, verdicts, _) = certify_candidates(&set, &pts[..s.count]).map_err(runtime)?;
            let family = certified.rank_family();
            let rank = independence_rank_report(&family, &pts[..s.rank_points]).map_err(runtime)?;
            report.check(Check::new(
                "certified rank",
                rank.rank as f64,
                crate::report::Comparison::AtLeast,
                4.0,
            ));
            report.info(
                "verified_candidates",
                json!(verdicts
                    .iter()
                    .filter(|v| v.verified)
                    .map(|v| v.name.clone())
                    .collect::<Vec<_>>()),
            );
            report.info("rank", rank_json(&rank, true));
        }
        _ => {
            let pts = sample(spec, set.chart(), cfg, s.rank_points)?;
            let family = match spec {
                PotentialSpec::Plane23 { .. } => set.members.clone(),
                _ => set.rank_family(),
            };
            let rank = independence_rank_report(&family, &pts).map_err(runtime)?;
            report.check(Check::equal("rank", rank.rank, set.claimed_independent));
            let mut padded = family.clone();
            padded.push(family[family.len() - 1].scale(2.0).renamed("duplicate"));
            let dup = independence_rank_report(&padded, &pts).map_err(runtime)?;
            report.check(Check::equal("rank with duplicated member", dup.rank, rank.rank));
            report.info("rank", rank_json(&rank, true));
        }
    }
    Ok(())
}

fn coeffs(spec: &PotentialSpec, report: &mut Report) -> Result<String, CliError> {
    let PotentialSpec::Ttw { n, .. } = spec else {
        return Err(CliError::Config("coeffs needs a ttw system".into()));
    };
    let n = *n as usize;
    let table = coefficient_table(n).map_err(runtime)?;
    report.check(Check::equal("table size", table.entries.len(), (n + 1) * (n + 2)));
    let m = num_bigint::BigInt::from(2 * n + 1);
    let divides = table.entries.iter().all(|e| {
        let bound = num_traits::pow(m.clone(), e.l);
        num_traits::Zero::is_zero(&(bound % e.value.denom()))
    });
    report.check(Check::flag("denominators divide (2n+1)^l", divides));
    let mut csv = String::from("sigma,i,l,numerator,denominator\n");
    for e in &table.entries {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e.sigma,
            e.i,
            e.l,
            e.value.numer(),
            e.value.denom()
        ));
    }
    report.info(
        "table",
        json!(table
            .entries
            .iter()
            .map(|e| json!({"sigma": e.sigma, "i": e.i, "l": e.l, "value": e.value.to_string()}))
            .collect::<Vec<_>>()),
    );
    Ok(csv)
}

fn equivalence(cfg: &ExperimentConfig, report: &mut Report) -> Result<String, CliError> {
    let SystemConfig::Calogero { k } = &cfg.system else {
        return Err(CliError::Config("equivalence needs a calogero system".into()));
    };
    let eq = cfg
        .equivalence
        .as_ref()
        .ok_or_else(|| CliError::Config("missing equivalence section".into()))?;
    let h = eq.wolfes_h.unwrap_or(3.0 * k[0]);
    let calogero = angular_profile(&PotentialSpec::Calogero { k: *k });
    let shifted = calogero.shifted(eq.shift);
    let wolfes = angular_profile(&PotentialSpec::Wolfes { h: [h; 3] });
    let guarded = |psi: f64| {
        [&shifted, &wolfes, &calogero]
            .iter()
            .flat_map(|p| p.singular_factors(psi))
            .all(|(_, v)| v.abs() >= eq.guard)
    };
    let mut raw = eq.grid_points;
    loop {
        let kept = angle_grid(raw).filter(|p| guarded(*p)).count();
        if kept >= eq.grid_points {
            break;
        }
        if kept == 0 || raw > 64 * eq.grid_points {
            return Err(CliError::Runtime(
                "the guard excludes too much of the angle grid".into(),
            ));
        }
        raw = raw * eq.grid_points / kept + 1;
    }
    let mut csv = String::from("psi,calogero_shifted,wolfes,deviation\n");
    let (mut worst, mut worst_unshifted, mut used) = (0.0f64, 0.0f64, 0usize);
    for psi in angle_grid(raw).filter(|p| guarded(*p)) {
        let (a, b) = (shifted.value(psi), wolfes.value(psi));
        let dev = (a - b).abs() / b.abs().max(1.0);
        worst = worst.max(dev);
        worst_unshifted = worst_unshifted.max((calogero.value(psi) - b).abs() / b.abs().max(1.0));
        used += 1;
        csv.push_str(&format!("{psi:.16e},{a:.16e},{b:.16e},{dev:.16e}\n"));
    }
    report.check(Check::below("max relative deviation", worst, eq.tolerance));
    report.info(
        "equivalence",
        json!({
            "calogero_k": k,
            "wolfes_h": h,
            "shift": eq.shift,
            "shift_over_pi": eq.shift / PI,
            "grid_points": eq.grid_points,
            "raw_grid_points": raw,
            "guarded_points": used,
            "max_relative_deviation": worst,
            "unshifted_max_relative_deviation": worst_unshifted,
        }),
    );
    Ok(csv)
}

/// Members that depend only on momenta of cyclic coordinates.
fn cyclic_members(spec: &PotentialSpec) -> &'static [&'static str] {
    match spec {
        PotentialSpec::Evans(_) => &["H5"],
        PotentialSpec::Plane23 { .. } => &["H2", "H3", "H4", "H5"],
        _ => &["H2"],
    }
}

fn simulate(spec: &PotentialSpec, cfg: &ExperimentConfig, report: &mut Report) -> Result<String, CliError> {
    let integ = cfg
        .integrator
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs an integrator section".into()))?;
    let set = integral_set(spec)?;
    let (x0, p0) = match &integ.initial {
        Some(init) => (init.x.clone(), init.p.clone()),
        None => {
            let chart = set.chart();
            let pt = PhaseSampler::for_spec(spec, chart, cfg.sampling.seed)
                .map_err(runtime)?
                .with_margin(integ.initial_margin)
                .sample()
                .map_err(runtime)?;
            chart.lower(&pt).map_err(runtime)?
        }
    };
    let t = Instant::now();
    let mut traj = integrate(spec, &x0, &p0, &integ.to_core()).map_err(runtime)?;
    report.timings.insert("integrate_s".into(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let family = set.rank_family();
    let drift = drift_report(&traj, &set).map_err(runtime)?;
    for o in &family {
        traj.log(o).map_err(runtime)?;
    }
    report.timings.insert("drift_s".into(), t.elapsed().as_secs_f64());

    report.check(Check::flag("status completed", traj.status.is_completed()));
    let cyclic = cyclic_members(spec);
    for e in &drift.entries {
        report.check(Check::below(
            format!("drift {}", e.name),
            e.relative_drift,
            integ.drift_tolerance,
        ));
        if cyclic.contains(&e.name.as_str()) {
            report.check(Check::below(
                format!("cyclic drift {}", e.name),
                e.relative_drift,
                integ.cyclic_tolerance,
            ));
        }
    }
    let abort = match &traj.status {
        Status::Completed => Value::Null,
        Status::AbortedNearCollision { step, reason } => json!({"step": step, "reason": reason}),
    };
    report.info(
        "simulation",
        json!({
            "initial": {"x": x0, "p": p0},
            "status": traj.status.to_string(),
            "abort": abort,
            "steps_completed": drift.steps,
            "drift": drift.entries.iter().map(|e| json!({
                "name": e.name,
                "initial": e.initial,
                "relative_drift": e.relative_drift,
                "slope": e.slope,
                "kind": e.kind.name(),
            })).collect::<Vec<_>>(),
        }),
    );
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, integ.csv_stride)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

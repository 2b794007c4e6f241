//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;
use superint_core::dual::Dual;
use superint_core::dynamics::{reversal_error, IntegratorConfig};
use superint_core::geometry::{jacobi_matrix, Chart, PhasePoint};
use superint_core::observables::{
    bracket_residual, h3_sign_corrupted, integral_set_3body, poisson_bracket, Observable, PhaseSampler,
};
use superint_core::potentials::{
    eval_difference_form, PotentialSpec, CALOGERO_ANGULAR_CONSTANT, WOLFES_ANGULAR_CONSTANT,
};
use superint_lab::{load_config, run_experiment, Experiment, Outcome};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(experiment: Experiment, config: &str) -> Result<Outcome, String> {
    let cfg = load_config(config, experiment, None).map_err(|e| e.to_string())?;
    run_experiment(experiment, &cfg).map_err(|e| e.to_string())
}

fn check_value(o: &Outcome, name: &str) -> Result<(f64, bool), String> {
    o.report
        .find(name)
        .map(|c| (c.value, c.pass))
        .ok_or_else(|| format!("{} report has no check `{name}`", o.report.experiment))
}

fn jacobi_orthogonality() -> Verdict {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n in 2..=12 {
        let u = jacobi_matrix(n).map_err(|e| e.to_string())?;
        worst = worst.max(u.orthogonality_defect());
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(worst < 1e-13, format!("max |U U^T - I| = {worst:e}"))?;
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("max |U U^T - I| = {worst:.2e} for n = 2..12 in {secs:.3} s"))
}

fn charts() -> Vec<Chart> {
    vec![
        Chart::Cartesian(3),
        Chart::Jacobi(3),
        Chart::Jacobi(6),
        Chart::Cylindrical3,
        Chart::HypersphericalCylindrical(3),
        Chart::HypersphericalCylindrical(5),
        Chart::PolarPlane,
        Chart::Spherical4,
        Chart::ReducedPolar,
    ]
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn chart_function(chart: Chart, a: usize, momentum: bool) -> Observable {
    let n = chart.ambient_dim();
    Observable::new(
        format!("{chart}[{a}]"),
        Chart::Cartesian(n),
        u32::from(momentum),
        move |x: &[Dual], p: &[Dual]| {
            let (q, pq) = chart.from_cartesian(x, p);
            if momentum {
                pq[a].clone()
            } else {
                q[a].clone()
            }
        },
    )
}

fn chart_fidelity() -> Verdict {
    let (mut trip, mut canon) = (0.0f64, 0.0f64);
    for chart in charts() {
        let pts = PhaseSampler::new(chart, 21)
            .and_then(|s| s.with_momentum_range(-2.0, 2.0).take(1000))
            .map_err(|e| e.to_string())?;
        for pt in &pts {
            let (x, p) = chart.lower(pt).map_err(|e| e.to_string())?;
            let back = chart.lift(&x, &p).map_err(|e| e.to_string())?;
            trip = trip.max(rel(&pt.q, &back.q)).max(rel(&pt.p, &back.p));
        }
        let d = chart.dim();
        let qs: Vec<Observable> = (0..d).map(|a| chart_function(chart, a, false)).collect();
        let ps: Vec<Observable> = (0..d).map(|a| chart_function(chart, a, true)).collect();
        for pt in &pts[..100] {
            let (x, p) = chart.lower(pt).map_err(|e| e.to_string())?;
            let cart = PhasePoint::new(Chart::Cartesian(chart.ambient_dim()), x, p).map_err(|e| e.to_string())?;
            for a in 0..d {
                for b in 0..d {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let qp = poisson_bracket(&qs[a], &ps[b], &cart).map_err(|e| e.to_string())?;
                    let qq = poisson_bracket(&qs[a], &qs[b], &cart).map_err(|e| e.to_string())?;
                    let pp = poisson_bracket(&ps[a], &ps[b], &cart).map_err(|e| e.to_string())?;
                    canon = canon.max((qp - delta).abs()).max(qq.abs()).max(pp.abs());
                }
            }
        }
    }
    ensure(trip < 1e-10, format!("round trip error {trip:e}"))?;
    ensure(canon < 1e-10, format!("canonical bracket error {canon:e}"))?;
    Ok(format!(
        "{} charts: round trip {trip:.2e}, canonical brackets {canon:.2e}",
        charts().len()
    ))
}

const VERIFY_SYSTEMS: &[(&str, &str)] = &[
    ("ttw(1,1)", r#"{"family": "ttw", "n": 1, "k": 1.0}"#),
    (
        "angular3",
        r#"{"family": "angular3", "profile": {"form": "cos_series", "coeffs": [3.0, 0.5, 0.25]}}"#,
    ),
    (
        "evans V1",
        r#"{"family": "evans", "variant": "V1", "f": {"form": "cos_series", "coeffs": [2.0, 0.5]}}"#,
    ),
    (
        "evans V2",
        r#"{"family": "evans", "variant": "V2", "k": 1.0, "f": {"form": "cos_series", "coeffs": [2.0, 0.5]}}"#,
    ),
    (
        "evans V3",
        r#"{"family": "evans", "variant": "V3", "k": 1.0, "f": {"form": "cos_series", "coeffs": [2.0, 0.5]}}"#,
    ),
    (
        "evans V4",
        r#"{"family": "evans", "variant": "V4", "k": 1.0, "k1": 1.0, "k2": 1.0, "k3": 1.0}"#,
    ),
    (
        "plane23",
        r#"{"family": "plane23", "f1": {"form": "constant", "c": 6.0}, "f2": {"form": "zero"}}"#,
    ),
];

fn verify_config(system: &str, count: usize) -> String {
    format!(r#"{{"system": {system}, "sampling": {{"count": {count}, "seed": 7}}}}"#)
}

fn integral_sets_commute() -> Verdict {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for (label, system) in VERIFY_SYSTEMS {
        let o = run(Experiment::Verify, &verify_config(system, 200))?;
        let residuals = &o.report.info["residuals"];
        ensure(residuals["points"] == 200, format!("{label}: wrong point count"))?;
        for m in residuals["members"].as_array().into_iter().flatten() {
            let v = m["max_abs"].as_f64().unwrap_or(f64::INFINITY);
            let tol = residuals["tolerance"].as_f64().unwrap_or(0.0);
            ensure(
                tol <= 1e-10 && v < tol,
                format!("{label}: {{H, {}}} = {v:e}", m["name"]),
            )?;
            worst = worst.max(v);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "{} systems, 200 points each: max |{{H, I}}| = {worst:.2e} in {secs:.2} s",
        VERIFY_SYSTEMS.len()
    ))
}

fn rank_of(o: &Outcome, key: &str) -> Result<usize, String> {
    o.report.info[key]["rank"]
        .as_u64()
        .map(|r| r as usize)
        .ok_or_else(|| format!("no `{key}` rank"))
}

fn independence_ranks() -> Verdict {
    let three = run(Experiment::Rank, &verify_config(VERIFY_SYSTEMS[0].1, 200))?;
    let r3 = rank_of(&three, "rank")?;
    ensure(r3 == 4, format!("3-body rank {r3}"))?;
    let mut evans = Vec::new();
    for (label, system) in &VERIFY_SYSTEMS[2..6] {
        let o = run(Experiment::Rank, &verify_config(system, 200))?;
        let r = rank_of(&o, "rank")?;
        let verified = o.report.info["verified_candidates"].as_array().map_or(0, Vec::len);
        ensure(r >= 4, format!("{label}: certified rank {r}"))?;
        ensure(
            verified == 0 || r == 6,
            format!("{label}: rank {r} with {verified} verified candidates"),
        )?;
        evans.push(r.to_string());
    }
    let plane = run(Experiment::Rank, &verify_config(VERIFY_SYSTEMS[6].1, 200))?;
    let r9 = rank_of(&plane, "rank")?;
    ensure(r9 == 9, format!("plane23 rank {r9}"))?;
    Ok(format!(
        "3-body {r3}, evans V1..V4 {}, plane23 {r9} (20 points)",
        evans.join("/")
    ))
}

fn fifth_integral() -> Verdict {
    let t = Instant::now();
    let one = run(
        Experiment::Verify,
        &verify_config(r#"{"family": "ttw", "n": 1, "k": 1.0}"#, 100),
    )?;
    let (abs, ok) = check_value(&one, "fifth integral {H_reduced, I}")?;
    ensure(ok && abs < 1e-10, format!("n = 1 residual {abs:e}"))?;
    let (deg, ok) = check_value(&one, "fifth integral momentum degree")?;
    ensure(ok && deg == 3.0, format!("n = 1 momentum degree {deg}"))?;
    let two = run(
        Experiment::Verify,
        &verify_config(r#"{"family": "ttw", "n": 2, "k": 1.0}"#, 100),
    )?;
    let fifth = &two.report.info["fifth_integral"];
    let vanishes = fifth["vanishes"].as_bool() == Some(true);
    let scanned = fifth["sign_scan"]["assignments_tested"].as_u64().unwrap_or(0) > 0;
    ensure(vanishes || scanned, "n = 2 records neither vanishing nor a sign scan")?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("took {secs:.1} s"))?;
    let rel2 = fifth["baseline"]["max_relative"].as_f64().unwrap_or(f64::NAN);
    let abs2 = fifth["baseline"]["max_abs"].as_f64().unwrap_or(f64::NAN);
    Ok(format!(
        "n=1 |{{H, I}}| = {abs:.2e}, degree 3; n=2 vanishes = {vanishes} (relative {rel2:.2e}, absolute {abs2:.2e}) in {secs:.2} s"
    ))
}

/// Cylindrical radius and the cubic angle functions from particle differences alone.
fn oracle_r_angles(x: &[f64]) -> (f64, f64, f64) {
    let d = [x[0] - x[1], x[1] - x[2], x[2] - x[0]];
    let r = ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / 3.0).sqrt();
    let c3 = 2f64.sqrt() * d[0] * d[1] * d[2] / r.powi(3);
    (r, c3, (1.0 - c3 * c3).max(0.0).sqrt())
}

fn closed_form_constants() -> Verdict {
    let configs: Vec<Vec<f64>> = PhaseSampler::new(Chart::Cartesian(3), 31)
        .and_then(|mut s| s.take(4000))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|pt| pt.q)
        .collect();
    let (mut cal, mut wol) = (0.0f64, 0.0f64);
    let mut counts = Vec::new();
    for g in [0.5, 1.0, 2.0] {
        let calogero = PotentialSpec::Calogero { k: [g; 3] };
        let wolfes = PotentialSpec::Wolfes { h: [g; 3] };
        let (mut nc, mut nw) = (0, 0);
        for x in &configs {
            let (r, c3, s3) = oracle_r_angles(x);
            if nc < 1000 && c3.abs() > 0.05 && calogero.singular_margin(x) > 0.05 {
                let v = eval_difference_form(&calogero, x).map_err(|e| e.to_string())?;
                let expected = CALOGERO_ANGULAR_CONSTANT * g / (r * c3).powi(2);
                cal = cal.max((v - expected).abs() / expected);
                nc += 1;
            }
            if nw < 1000 && s3.abs() > 0.05 && wolfes.singular_margin(x) > 0.05 {
                let v = eval_difference_form(&wolfes, x).map_err(|e| e.to_string())?;
                let expected = WOLFES_ANGULAR_CONSTANT * g / (r * s3).powi(2);
                wol = wol.max((v - expected).abs() / expected);
                nw += 1;
            }
        }
        counts.push((nc, nw));
    }
    ensure(CALOGERO_ANGULAR_CONSTANT == 4.5, "calogero constant is not 9/2")?;
    ensure(
        counts.iter().all(|&(nc, nw)| nc == 1000 && nw == 1000),
        format!("usable configurations per coupling {counts:?}"),
    )?;
    ensure(cal < 1e-10, format!("calogero relative error {cal:e}"))?;
    ensure(wol < 1e-10, format!("wolfes relative error {wol:e}"))?;
    Ok(format!(
        "9/2 g/(r cos3psi)^2 to {cal:.2e}, wolfes {WOLFES_ANGULAR_CONSTANT} h/(r sin3psi)^2 to {wol:.2e}, 1000 configurations per coupling"
    ))
}

const EQUIVALENCE: &str = r#"{"system": {"family": "calogero", "k": [1.0, 1.0, 1.0]}, "sampling": {"seed": 7}}"#;

fn phase_shift_equivalence() -> Verdict {
    let o = run(Experiment::Equivalence, EQUIVALENCE)?;
    let (dev, ok) = check_value(&o, "max relative deviation")?;
    let info = &o.report.info["equivalence"];
    let used = info["guarded_points"].as_u64().unwrap_or(0);
    ensure(used >= 10_000, format!("only {used} guarded grid points"))?;
    ensure(ok && dev < 1e-12, format!("deviation {dev:e}"))?;
    let unshifted = info["unshifted_max_relative_deviation"].as_f64().unwrap_or(0.0);
    ensure(unshifted > 1e-2, format!("unshifted deviation {unshifted:e}"))?;
    Ok(format!(
        "max deviation {dev:.2e} on {used} guarded points, unshifted {unshifted:.1e}"
    ))
}

fn dynamics() -> Verdict {
    let t = Instant::now();
    let o = run(
        Experiment::Simulate,
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"seed": 7},
            "integrator": {"dt": 1e-3, "steps": 100000, "method": "leapfrog2"}}"#,
    )?;
    let secs = t.elapsed().as_secs_f64();
    ensure(o.report.pass(), format!("failed checks {:?}", o.report.failed()))?;
    let mut drifts = Vec::new();
    for name in ["H", "H1", "H2", "H3"] {
        let (d, _) = check_value(&o, &format!("drift {name}"))?;
        ensure(d < 1e-5, format!("{name} drift {d:e}"))?;
        drifts.push(format!("{name} {d:.1e}"));
    }
    let (h2, _) = check_value(&o, "cyclic drift H2")?;
    ensure(h2 < 1e-12, format!("H2 drift {h2:e}"))?;
    ensure(secs < 10.0, format!("took {secs:.1} s"))?;
    let init = &o.report.info["simulation"]["initial"];
    let to_vec = |v: &Value| -> Vec<f64> { v.as_array().into_iter().flatten().filter_map(Value::as_f64).collect() };
    let cfg = IntegratorConfig {
        steps: 1000,
        ..Default::default()
    };
    let ttw = PotentialSpec::Ttw { n: 1, k: 1.0 };
    let back = reversal_error(&ttw, &to_vec(&init["x"]), &to_vec(&init["p"]), &cfg).map_err(|e| e.to_string())?;
    ensure(back < 1e-8, format!("reversal error {back:e}"))?;
    Ok(format!(
        "1e5 steps in {secs:.2} s, drifts {}, reversal {back:.1e}",
        drifts.join(", ")
    ))
}

fn negative_controls() -> Verdict {
    let spec = PotentialSpec::Ttw { n: 1, k: 1.0 };
    let mut set = integral_set_3body(&spec).map_err(|e| e.to_string())?;
    let pts = PhaseSampler::for_spec(&spec, Chart::Cylindrical3, 7)
        .and_then(|mut s| s.take(200))
        .map_err(|e| e.to_string())?;
    let i = set
        .members
        .iter()
        .position(|m| m.name() == "H3")
        .ok_or("no H3 member")?;
    set.members[i] = h3_sign_corrupted(&spec).map_err(|e| e.to_string())?;
    let corrupted = bracket_residual(&set, &pts).map_err(|e| e.to_string())?;
    let bad = &corrupted.members[i];
    ensure(
        !bad.pass && bad.max_abs > 1e-2,
        format!("corrupted H3 residual {:e} passed", bad.max_abs),
    )?;
    let mismatched = run(
        Experiment::Equivalence,
        r#"{"system": {"family": "calogero", "k": [1.0, 1.0, 1.0]}, "sampling": {"seed": 7},
            "equivalence": {"wolfes_h": 2.0}}"#,
    )?;
    let (dev, ok) = check_value(&mismatched, "max relative deviation")?;
    ensure(
        !ok && !mismatched.report.pass() && dev > 1e-2,
        format!("mismatched deviation {dev:e} passed"),
    )?;
    Ok(format!(
        "corrupted H3 fails at {:.2e}, mismatched coupling fails at {dev:.2e}",
        bad.max_abs
    ))
}

fn determinism() -> Verdict {
    let cfg = verify_config(r#"{"family": "ttw", "n": 2, "k": 1.0}"#, 100);
    let a = run(Experiment::Verify, &cfg)?;
    let b = run(Experiment::Verify, &cfg)?;
    ensure(a.report.hash() == b.report.hash(), "verify hashes differ")?;
    let sim =
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"seed": 3}, "integrator": {"steps": 5000}}"#;
    let s1 = run(Experiment::Simulate, sim)?;
    let s2 = run(Experiment::Simulate, sim)?;
    ensure(
        s1.report.hash() == s2.report.hash() && s1.files == s2.files,
        "simulate outputs differ",
    )?;
    let other = run(Experiment::Verify, &cfg.replace("\"seed\": 7", "\"seed\": 8"))?;
    ensure(other.report.hash() != a.report.hash(), "seed does not reach the report")?;
    Ok(format!(
        "verify {}, simulate {}",
        &a.report.hash()[..16],
        &s1.report.hash()[..16]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("jacobi orthogonality", jacobi_orthogonality),
        ("chart fidelity", chart_fidelity),
        ("integral sets commute", integral_sets_commute),
        ("independence ranks", independence_ranks),
        ("fifth integral", fifth_integral),
        ("closed-form constants", closed_form_constants),
        ("phase-shift equivalence", phase_shift_equivalence),
        ("dynamics", dynamics),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

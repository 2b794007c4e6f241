use nalgebra::DMatrix;
use superint_core::dynamics::{drift_report, integrate, reversal_error, step, IntegratorConfig, Method, Status};
use superint_core::geometry::Chart;
use superint_core::observables::{h3_sign_corrupted, integral_set_3body, PhaseSampler};
use superint_core::potentials::PotentialSpec;

fn ttw() -> PotentialSpec {
    PotentialSpec::Ttw { n: 1, k: 1.0 }
}

fn seeded_state(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let pt = PhaseSampler::for_spec(&ttw(), Chart::Cylindrical3, seed)
        .unwrap()
        .with_margin(0.5)
        .sample()
        .unwrap();
    Chart::Cylindrical3.lower(&pt).unwrap()
}

#[test]
fn long_run_conserves_the_four_integrals() {
    let (x0, p0) = seeded_state(7);
    let cfg = IntegratorConfig::default();
    let traj = integrate(&ttw(), &x0, &p0, &cfg).unwrap();
    assert_eq!(traj.status, Status::Completed);
    assert_eq!(traj.len(), cfg.steps + 1);
    let set = integral_set_3body(&ttw()).unwrap();
    let report = drift_report(&traj, &set).unwrap();
    for e in &report.entries {
        assert!(e.relative_drift < 1e-5, "{e:?}");
    }
    assert!(report.get("H2").unwrap().relative_drift < 1e-12);
}

#[test]
fn corrupted_integral_drifts() {
    let (x0, p0) = seeded_state(7);
    let cfg = IntegratorConfig {
        steps: 20_000,
        ..Default::default()
    };
    let mut traj = integrate(&ttw(), &x0, &p0, &cfg).unwrap();
    let bad = h3_sign_corrupted(&ttw()).unwrap();
    let values = traj.log(&bad).unwrap().to_vec();
    let e = superint_core::dynamics::drift_entry("bad", &traj.times, &values);
    assert!(e.relative_drift > 1e-2, "{e:?}");
}

#[test]
fn time_reversal_returns() {
    for seed in [1, 2, 3] {
        let (x0, p0) = seeded_state(seed);
        let cfg = IntegratorConfig {
            steps: 1000,
            ..Default::default()
        };
        assert!(reversal_error(&ttw(), &x0, &p0, &cfg).unwrap() < 1e-8);
    }
}

/// One-step Jacobian by a sixth-order central stencil.
fn step_jacobian(cfg: &IntegratorConfig, x: &[f64], p: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let base: Vec<f64> = x.iter().chain(p).copied().collect();
    let map = |v: &[f64]| {
        let (a, b) = step(&ttw(), &v[..n], &v[n..], cfg).unwrap();
        a.into_iter().chain(b).collect::<Vec<f64>>()
    };
    let h = 1e-3;
    let weights = [(1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut col = vec![0.0; 2 * n];
        for (s, w) in weights {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[j] += s * h;
            minus[j] -= s * h;
            for (c, (a, b)) in col.iter_mut().zip(map(&plus).iter().zip(map(&minus))) {
                *c += w * (a - b);
            }
        }
        for i in 0..2 * n {
            jac[(i, j)] = col[i] / (60.0 * h);
        }
    }
    jac
}

#[test]
fn one_step_is_volume_preserving() {
    for method in [Method::Leapfrog2, Method::Yoshida4] {
        let cfg = IntegratorConfig {
            dt: 1e-2,
            method,
            ..Default::default()
        };
        for seed in [4, 5] {
            let (x, p) = seeded_state(seed);
            let det = step_jacobian(&cfg, &x, &p).determinant();
            assert!((det - 1.0).abs() < 1e-12, "{method:?} det - 1 = {:e}", det - 1.0);
        }
    }
}

#[test]
fn near_collision_start_is_refused() {
    let spec = PotentialSpec::Calogero { k: [1.0; 3] };
    let cfg = IntegratorConfig::default();
    assert!(integrate(&spec, &[0.0, 1e-8, 1.0], &[0.0; 3], &cfg).is_err());
}

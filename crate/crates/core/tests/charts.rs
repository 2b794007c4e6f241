use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superint_core::dual::Dual;
use superint_core::geometry::{Chart, PhasePoint};
use superint_core::observables::{poisson_bracket, Observable, PhaseSampler};

fn charts() -> Vec<Chart> {
    vec![
        Chart::Cartesian(3),
        Chart::Jacobi(3),
        Chart::Jacobi(5),
        Chart::Cylindrical3,
        Chart::HypersphericalCylindrical(3),
        Chart::HypersphericalCylindrical(4),
        Chart::HypersphericalCylindrical(6),
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

#[test]
fn chart_round_trips() {
    for chart in charts() {
        let mut sampler = PhaseSampler::new(chart, 1).unwrap().with_momentum_range(-2.0, 2.0);
        for pt in sampler.take(1000).unwrap() {
            let (x, p) = chart.lower(&pt).unwrap();
            let back = chart.lift(&x, &p).unwrap();
            assert!(rel(&pt.q, &back.q) < 1e-10, "{chart} q {:?} {:?}", pt.q, back.q);
            assert!(rel(&pt.p, &back.p) < 1e-10, "{chart} p {:?} {:?}", pt.p, back.p);
        }
    }
}

#[test]
fn cartesian_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for chart in charts() {
        let n = chart.ambient_dim();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let Ok(pt) = chart.lift(&x, &p) else { continue };
            let (x2, p2) = chart.lower(&pt).unwrap();
            assert!(rel(&x, &x2) < 1e-10, "{chart}");
            assert!(rel(&p, &p2) < 1e-10, "{chart}");
        }
    }
}

/// Chart coordinate `a` (or momentum when `momentum`) as a function on Cartesian phase space.
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

#[test]
fn chart_maps_are_canonical() {
    for chart in charts() {
        let d = chart.dim();
        let n = chart.ambient_dim();
        let pts: Vec<PhasePoint> = PhaseSampler::new(chart, 3)
            .unwrap()
            .take(100)
            .unwrap()
            .iter()
            .map(|pt| {
                let (x, p) = chart.lower(pt).unwrap();
                PhasePoint::new(Chart::Cartesian(n), x, p).unwrap()
            })
            .collect();
        let qs: Vec<Observable> = (0..d).map(|a| chart_function(chart, a, false)).collect();
        let ps: Vec<Observable> = (0..d).map(|a| chart_function(chart, a, true)).collect();
        for pt in &pts {
            for a in 0..d {
                for b in 0..d {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let qp = poisson_bracket(&qs[a], &ps[b], pt).unwrap();
                    assert!((qp - delta).abs() < 1e-10, "{chart} {{q{a}, p{b}}} = {qp}");
                    assert!(poisson_bracket(&qs[a], &qs[b], pt).unwrap().abs() < 1e-10);
                    assert!(poisson_bracket(&ps[a], &ps[b], pt).unwrap().abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn kinetic_energy_is_chart_independent() {
    for chart in charts() {
        for pt in PhaseSampler::new(chart, 4).unwrap().take(100).unwrap() {
            let (_, p) = chart.lower(&pt).unwrap();
            let t_cart: f64 = p.iter().map(|v| v * v).sum::<f64>() / 2.0;
            let q: Vec<Dual> = pt.q.iter().map(|v| Dual::constant(*v)).collect();
            let pq: Vec<Dual> = pt.p.iter().map(|v| Dual::constant(*v)).collect();
            let t_chart = chart.kinetic(&q, &pq).value();
            assert!((t_cart - t_chart).abs() < 1e-10 * t_cart.max(1.0), "{chart}");
        }
    }
}

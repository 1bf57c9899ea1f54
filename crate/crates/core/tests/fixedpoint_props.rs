use bethe_core::bp::{run_bp, BPConfig, ScheduleKind};
use bethe_core::fixedpoints::{
    enumerate_fixed_points, fixed_point_count_parity, random_gamma, residual_system, track_path, HomotopyConfig,
    Polynomial, PolynomialSystem,
};
use bethe_core::model::{build_complete, build_grid, make_ising, IsingModel, ParamSpec};
use bethe_core::stability::{classify_phase, PhaseRegion};
use num_complex::Complex64;

fn homogeneous(graph: bethe_core::Graph, j: f64, theta: f64) -> IsingModel {
    make_ising(graph, &ParamSpec::Uniform(j), &ParamSpec::Uniform(theta), 0).unwrap()
}

#[test]
fn enumerated_points_solve_the_equations() {
    let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
    for seed in 0..4 {
        let m = make_ising(build_grid(3, 3, false).unwrap(), &spec, &spec, seed).unwrap();
        for fp in enumerate_fixed_points(&m, 200, seed).unwrap() {
            assert!(residual_system(&m, &fp.nu).iter().all(|r| r.abs() < 1e-10));
            let cfg = BPConfig { max_iterations: 1, ..BPConfig::default() }.with_schedule(ScheduleKind::Synchronous);
            let out = run_bp(&m, &cfg, &fp.messages).unwrap();
            assert!(out.messages.max_diff(&fp.messages) < 1e-8);
        }
    }
}

#[test]
fn homogeneous_counts_follow_phase_regions() {
    let cases = [
        (build_grid(3, 3, false).unwrap(), 0.2, 0.0, 4),
        (build_grid(3, 3, false).unwrap(), 1.5, 0.0, 4),
        (build_grid(3, 3, false).unwrap(), -1.5, 0.0, 4),
        (build_complete(4).unwrap(), -1.5, 0.0, 3),
        (build_complete(4).unwrap(), 0.2, 0.0, 3),
    ];
    for (g, j, theta, d) in cases {
        let bipartite = g.is_bipartite();
        let m = homogeneous(g, j, theta);
        let points = enumerate_fixed_points(&m, 400, 1).unwrap();
        assert!(fixed_point_count_parity(&points));
        let expected = match classify_phase(j, theta, d) {
            PhaseRegion::P => 1,
            PhaseRegion::F => 3,
            PhaseRegion::AF if bipartite => 3,
            PhaseRegion::AF => 1,
        };
        assert_eq!(points.len(), expected, "J = {j}, d = {d}");
    }
}

#[test]
fn enumeration_is_seed_independent() {
    let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
    let m = make_ising(build_grid(3, 3, false).unwrap(), &spec, &ParamSpec::Uniform(0.0), 8).unwrap();
    let a = enumerate_fixed_points(&m, 1000, 1).unwrap();
    let b = enumerate_fixed_points(&m, 1000, 2).unwrap();
    assert_eq!(a.len(), b.len());
    for p in &a {
        assert!(b.iter().any(|q| q.nu.max_diff(&p.nu) < 1e-5));
    }
}

#[test]
fn tracked_endpoints_solve_the_target() {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    // x^2 + y^2 - 4 = 0, x y - 1 = 0
    let target = PolynomialSystem::new(vec![
        Polynomial::new(vec![(c(1.0, 0.0), vec![2, 0]), (c(1.0, 0.0), vec![0, 2]), (c(-4.0, 0.0), vec![0, 0])]),
        Polynomial::new(vec![(c(1.0, 0.0), vec![1, 1]), (c(-1.0, 0.0), vec![0, 0])]),
    ]);
    let start = PolynomialSystem::new(vec![
        Polynomial::new(vec![(c(1.0, 0.0), vec![2, 0]), (c(-1.0, 0.0), vec![0, 0])]),
        Polynomial::new(vec![(c(1.0, 0.0), vec![0, 2]), (c(-1.0, 0.0), vec![0, 0])]),
    ]);
    let starts: Vec<Vec<Complex64>> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(a, b)| vec![c(a, 0.0), c(b, 0.0)])
        .collect();
    for seed in 0..3 {
        let ends = track_path(&starts, &start, &target, random_gamma(seed), &HomotopyConfig::default()).unwrap();
        for e in ends.iter().filter_map(|e| e.point()) {
            let r = target.eval(e);
            assert!(r.iter().all(|z| z.norm() < 1e-8));
        }
    }
}

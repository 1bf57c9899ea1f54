use bethe_core::exact::{brute_force, gibbs_sample, transfer_matrix_grid};
use bethe_core::model::{build_grid, build_random, make_ising, ParamSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pairwise_tables_marginalize(n in 3usize..10, seed in 0u64..1000) {
        let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
        let m = make_ising(build_random(n, 2.5f64.min((n - 1) as f64), seed).unwrap(), &spec, &spec, seed).unwrap();
        let ex = brute_force(&m).unwrap();
        for (&(u, v), t) in m.graph().edges().iter().zip(&ex.pairwise) {
            prop_assert!((t[0][0] + t[0][1] - ex.singleton[u]).abs() < 1e-12);
            prop_assert!((t[0][0] + t[1][0] - ex.singleton[v]).abs() < 1e-12);
            prop_assert!((t.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn transfer_matrix_agrees_on_every_small_grid() {
    let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
    for rows in 2..=5 {
        for cols in 2..=5 {
            if rows * cols > 20 {
                continue;
            }
            let m = make_ising(build_grid(rows, cols, false).unwrap(), &spec, &spec, (rows * 10 + cols) as u64).unwrap();
            let bf = brute_force(&m).unwrap();
            let tm = transfer_matrix_grid(&m, rows, cols).unwrap();
            assert!((bf.log_partition - tm.log_partition).abs() < 1e-9, "{rows}x{cols}");
            for (a, b) in bf.singleton.iter().zip(&tm.singleton) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn gibbs_improves_with_more_sweeps() {
    let spec = ParamSpec::UniformRandom { lo: -0.5, hi: 0.5 };
    let m = make_ising(build_grid(3, 4, false).unwrap(), &spec, &spec, 9).unwrap();
    let exact = brute_force(&m).unwrap().singleton;
    let mse = |p: &[f64]| p.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p.len() as f64;
    let mut short = 0.0;
    let mut long = 0.0;
    for seed in 0..10 {
        short += mse(&gibbs_sample(&m, 1100, 100, seed).unwrap());
        long += mse(&gibbs_sample(&m, 2100, 100, seed).unwrap());
    }
    assert!(long <= short, "{long} > {short}");
}

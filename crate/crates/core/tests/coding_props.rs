use bethe_core::coding::{
    attach_channel, build_hamming74, correction_threshold, run_factor_bp, Channel, Decoder, FactorBPConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn messages_and_beliefs_stay_normalized(eps in 0.01f64..0.49, word in 0u8..128, sweeps in 1usize..10) {
        let received: Vec<u8> = (0..7).map(|k| (word >> k) & 1).collect();
        let fg = attach_channel(&build_hamming74(), &Channel::new(eps, received).unwrap()).unwrap();
        let out = run_factor_bp(&fg, &FactorBPConfig { max_sweeps: sweeps, ..FactorBPConfig::default() }).unwrap();
        for q in out.variable_to_factor.iter().flatten().chain(&out.beliefs) {
            prop_assert!(q[0] >= 0.0 && q[1] >= 0.0);
            prop_assert!((q[0] + q[1] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn flooding_converges_across_noise_levels() {
    for step in 1..=9 {
        let eps = 0.05 * step as f64;
        for flip in 0..7 {
            let mut received = vec![0u8; 7];
            received[flip] = 1;
            let fg = attach_channel(&build_hamming74(), &Channel::new(eps, received).unwrap()).unwrap();
            let out = run_factor_bp(&fg, &FactorBPConfig::default()).unwrap();
            assert!(out.converged && out.sweeps <= 200, "eps = {eps}, flip = {flip}");
        }
    }
}

#[test]
fn symmetric_source_bits_share_a_threshold() {
    let y1 = correction_threshold(1, Decoder::Exact).unwrap();
    let y4 = correction_threshold(4, Decoder::Exact).unwrap();
    assert!((y1 - y4).abs() < 2e-3);
}

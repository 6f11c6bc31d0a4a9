mod common;

use precoding_core::baselines::svd_precoder;
use precoding_core::channel::{sample, ChannelSpec, ChannelState};
use precoding_core::link::{
    effective_gain, measure_ber, observation_len, observe, reward_from_ber, LinkConfig, Modulation,
    Precoder, SubbandSpec,
};
use precoding_core::numerics::{complex_gaussian, random_unit_vector, SimRng};
use precoding_core::CMat;
use proptest::prelude::*;

fn flat_state(rng: &mut SimRng) -> ChannelState {
    ChannelState::from_flat(complex_gaussian(2, 4, 1.0, rng).unwrap())
}

#[test]
fn reward_mapping_points() {
    assert_eq!(reward_from_ber(0.0).unwrap(), 0.5);
    assert_eq!(reward_from_ber(0.5).unwrap(), -0.5);
    assert!((reward_from_ber(0.25).unwrap() - 0.084963).abs() < 1e-6);
    assert!((reward_from_ber(0.25).unwrap() - (0.75f64.log2() + 0.5)).abs() < 1e-15);
    assert!((reward_from_ber(1.0).unwrap() - (-9.5)).abs() < 1e-12);
    assert!(reward_from_ber(1.5).is_err());
    assert!(reward_from_ber(-0.1).is_err());
}

#[test]
fn noiseless_link_is_error_free_in_both_environments() {
    let mut rng = SimRng::new(300, 0);
    for modulation in [Modulation::Qam4, Modulation::Qam16] {
        let cfg = LinkConfig::noiseless(modulation);
        for (spec, subband) in [
            (ChannelSpec::flat(4, 2), SubbandSpec::env1()),
            (ChannelSpec::tdl2(4, 2), SubbandSpec::env2()),
        ] {
            for _ in 0..5 {
                let state = sample(&spec, &subband, &mut rng).unwrap();
                let w = Precoder::continuous(random_unit_vector(4, &mut rng)).unwrap();
                let r = measure_ber(&state, &w, &cfg, &subband, &mut rng).unwrap();
                assert_eq!(r.ber, 0.0);
                assert_eq!(r.value, 0.5);
            }
        }
    }
}

#[test]
fn deep_noise_gives_coin_flips() {
    let mut rng = SimRng::new(301, 0);
    let mut subband = SubbandSpec::env1();
    subband.data_re_budget = 10_000;
    let cfg = LinkConfig::new(-40.0, Modulation::Qam16);
    let state = flat_state(&mut rng);
    let w = svd_precoder(&state.data_channels[0]).unwrap();
    let r = measure_ber(&state, &w, &cfg, &subband, &mut rng).unwrap();
    assert!((0.45..=0.55).contains(&r.ber), "{}", r.ber);
}

#[test]
fn ber_falls_with_snr_on_a_fixed_channel() {
    let mut rng = SimRng::new(302, 0);
    let state = flat_state(&mut rng);
    let w = svd_precoder(&state.data_channels[0]).unwrap();
    let subband = SubbandSpec::env1();
    let bers: Vec<f64> = [-5.0, 0.0, 5.0, 10.0]
        .iter()
        .map(|&snr| {
            let cfg = LinkConfig::new(snr, Modulation::Qam16);
            measure_ber(&state, &w, &cfg, &subband, &mut SimRng::new(9, 9))
                .unwrap()
                .ber
        })
        .collect();
    assert!(bers.windows(2).all(|p| p[0] > p[1]), "{bers:?}");
}

#[test]
fn observation_length_and_layout() {
    let mut rng = SimRng::new(303, 0);
    let state = sample(&ChannelSpec::tdl2(4, 2), &SubbandSpec::env2(), &mut rng).unwrap();
    let obs = observe(&state);
    assert_eq!(obs.len(), observation_len(4, 2, 3));
    assert_eq!(obs.len(), 48);
    let h: &CMat = &state.pilot_channels[1];
    assert_eq!(obs.values[16], h[(0, 0)].re);
    assert_eq!(obs.values[16 + 8], h[(0, 0)].im);
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn reward_is_monotone_and_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (rlo, rhi) = (reward_from_ber(lo).unwrap(), reward_from_ber(hi).unwrap());
        prop_assert!(rlo >= rhi);
        prop_assert!(rlo <= 0.5 && rhi >= -9.5);
    }

    #[test]
    fn effective_gain_bounded_by_principal_eigenvalue(seed in any::<u64>()) {
        let mut rng = SimRng::new(seed, 0);
        let h: CMat = complex_gaussian(2, 4, 1.0, &mut rng).unwrap();
        let w = Precoder::continuous(random_unit_vector(4, &mut rng)).unwrap();
        let best = effective_gain(&h, &svd_precoder(&h).unwrap());
        prop_assert!(effective_gain(&h, &w) <= best + 1e-9);
    }

    #[test]
    fn measured_ber_is_a_valid_fraction(seed in any::<u64>(), snr in -20.0f64..30.0) {
        let mut rng = SimRng::new(seed, 0);
        let mut subband = SubbandSpec::env1();
        subband.data_re_budget = 64;
        let state = flat_state(&mut rng);
        let w = Precoder::continuous(random_unit_vector(4, &mut rng)).unwrap();
        let r = measure_ber(&state, &w, &LinkConfig::new(snr, Modulation::Qam16), &subband, &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.ber));
        prop_assert!((r.value - reward_from_ber(r.ber).unwrap()).abs() < 1e-12);
        prop_assert!((r.ber * 256.0).fract() == 0.0);
    }
}

use hsdpa_ee::link_channel::{hs_sinr_db, ChannelParams, FadingChannel, PowerDelayProfile};
use hsdpa_ee::power_model::watt_to_dbm;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel(params: &ChannelParams, seed: u64) -> FadingChannel {
    FadingChannel::new(params, 1, 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn tap_powers_follow_the_profile() {
    let params = ChannelParams::default();
    let weights = params.pdp.weights();
    let mut ch = channel(&params, 11);
    let steps = 1_000_000;
    let mut acc = vec![0.0; weights.len()];
    for _ in 0..steps {
        let s = ch.step(0.002).unwrap();
        for (a, tap) in acc.iter_mut().zip(&s.taps) {
            *a += tap[0].norm_sqr();
        }
    }
    for (a, w) in acc.iter().zip(&weights) {
        let mean = a / steps as f64;
        assert!((mean - w).abs() <= 0.02 * w, "tap mean {mean} vs weight {w}");
    }
}

/// Kolmogorov-Smirnov test of one tap's envelope against the Rayleigh law
/// `F(r) = 1 - exp(-r^2 / Omega)`. Samples are spaced far apart in Doppler
/// cycles so that consecutive draws are nearly independent.
#[test]
fn envelope_is_rayleigh() {
    let params = ChannelParams {
        pdp: PowerDelayProfile::flat(),
        sinusoids: 1024,
        ..ChannelParams::default()
    };
    let mut ch = channel(&params, 3);
    let n = 1_000_000;
    let mut r: Vec<f64> = (0..n).map(|_| ch.step(0.137).unwrap().taps[0][0].norm()).collect();
    r.sort_by(f64::total_cmp);
    let omega = 1.0;
    let nf = n as f64;
    let d = r.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = 1.0 - (-x * x / omega).exp();
        d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f)
    });
    // Asymptotic critical value at 1% significance.
    let critical = 1.6276 / nf.sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn trajectories_are_reproducible() {
    let params = ChannelParams {
        speed_kmh: 120.0,
        ..ChannelParams::default()
    };
    let mut a = FadingChannel::new(&params, 2, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let mut b = FadingChannel::new(&params, 2, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    for _ in 0..5000 {
        assert_eq!(a.step(0.002).unwrap(), b.step(0.002).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sinr_difference_equals_power_difference(
        seed in any::<u64>(),
        steps in 0usize..50,
        alpha in 0.0f64..=1.0,
        distance in 20.0f64..2000.0,
        p1 in 1e-4f64..40.0,
        p2 in 1e-4f64..40.0,
    ) {
        let params = ChannelParams { alpha, distance_m: distance, ..ChannelParams::default() };
        let mut ch = channel(&params, seed);
        for _ in 0..steps {
            ch.step(0.002).unwrap();
        }
        let s = ch.state();
        let lhs = hs_sinr_db(p1, s, &params) - hs_sinr_db(p2, s, &params);
        let rhs = watt_to_dbm(p1) - watt_to_dbm(p2);
        prop_assert!((lhs - rhs).abs() <= 1e-9, "{} vs {}", lhs, rhs);
    }
}

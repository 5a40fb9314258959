mod common;

use hsdpa_ee::mcs_table::{McsTable, TableError, CQI_OUT_OF_RANGE};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn any_table() -> impl Strategy<Value = McsTable> {
    prop_oneof![
        any::<u64>().prop_map(|s| common::random_table(&mut ChaCha8Rng::seed_from_u64(s))),
        (0.1f64..3.0, 2usize..64).prop_map(|(step, n)| McsTable::synthetic(step, n).unwrap()),
        Just(McsTable::category10()),
    ]
}

#[test]
fn bundled_tables_reload() {
    for csv in [McsTable::default_csv(), McsTable::category10_csv()] {
        let t = McsTable::load_csv(csv, 0.1).unwrap();
        assert_eq!(t.max_cqi(), 30);
        assert_eq!(t.threshold_db(1).unwrap(), -4.5);
        assert_eq!(t.threshold_db(30).unwrap(), 24.5);
    }
    assert_eq!(McsTable::default_table(), McsTable::synthetic(1.0, 30).unwrap());
}

#[test]
fn full_span_delta_matches_file() {
    let last = McsTable::default_csv().lines().last().unwrap();
    let beta_max: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    let first = McsTable::default_csv().lines().find(|l| l.starts_with("1,")).unwrap();
    let beta_1: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    let t = McsTable::default_table();
    assert_eq!(t.threshold_delta(1, 30).unwrap(), beta_max - beta_1);
}

#[test]
fn errors_point_at_the_line() {
    let src = "# c\ncqi,sinr_db,tbs_bits,mod_order,codes\n1,3.0,100,2,1\n2,5.0,200,2,1\n3,4.0,300,2,1\n";
    match McsTable::load_csv(src, 0.1) {
        Err(TableError::NonMonotoneThreshold { line, .. }) => assert_eq!(line, 5),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #[test]
    fn lookup_is_monotone(t in any_table(), a in -20.0f64..40.0, b in -20.0f64..40.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.cqi_from_sinr(lo) <= t.cqi_from_sinr(hi));
    }

    #[test]
    fn thresholds_are_inclusive_lower_bounds(t in any_table()) {
        prop_assert_eq!(t.cqi_from_sinr(t.threshold_db(1).unwrap() - 1e-6), CQI_OUT_OF_RANGE);
        for k in 1..=t.max_cqi() {
            let beta = t.threshold_db(k).unwrap();
            prop_assert_eq!(t.cqi_from_sinr(beta), k);
            let gap = if k > 1 { beta - t.threshold_db(k - 1).unwrap() } else { 1.0 };
            prop_assert_eq!(t.cqi_from_sinr(beta - 0.5 * gap), k - 1);
        }
        prop_assert_eq!(t.cqi_from_sinr(1e300), t.max_cqi());
    }

    #[test]
    fn deltas_are_antisymmetric(t in any_table(), i in 1u8..=255, j in 1u8..=255) {
        let n = t.max_cqi();
        let (i, j) = (1 + i % n, 1 + j % n);
        prop_assert_eq!(t.threshold_delta(i, i).unwrap(), 0.0);
        prop_assert_eq!(t.threshold_delta(i, j).unwrap(), -t.threshold_delta(j, i).unwrap());
    }

    #[test]
    fn csv_round_trip(t in any_table()) {
        let back = McsTable::load_csv(&t.to_csv(Some("generated")), t.ber_target()).unwrap();
        prop_assert_eq!(back, t);
    }
}

use iacv_core::npl::{
    decompose_nca, npl_dashboard_value, unwinding_correction, NplExposure, Unwinding,
};
use proptest::prelude::*;

/// Follows one exposure whose recoveries arrive exactly as expected and
/// returns the raw and corrected dashboards summed over `periods` periods.
fn window(e: &NplExposure, periods: usize, convention: Unwinding) -> (f64, f64) {
    let (mut raw_sum, mut corrected_sum) = (0.0, 0.0);
    let mut state = e.clone();
    for _ in 0..periods {
        let realized = state.expected_recoveries.first().copied().unwrap_or(0.0);
        let (next, wo) = state.advance(realized, None, convention);
        let raw = npl_dashboard_value(next.el(), state.el(), wo);
        raw_sum += raw;
        corrected_sum += unwinding_correction(raw, state.rate, state.nca(), convention);
        state = next;
    }
    (raw_sum, corrected_sum)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn unbiased_recoveries_leave_only_unwinding(
        recoveries in prop::collection::vec(0.0f64..50.0, 1..10),
        rate in 0.0f64..0.15,
        headroom in 1.0f64..2.0,
        periods in 1usize..=10,
    ) {
        let gca = headroom * recoveries.iter().sum::<f64>() + 1.0;
        let e = NplExposure::new("x", gca, recoveries, rate).unwrap();

        let (raw, corrected) = window(&e, periods, Unwinding::NetOnly);
        let mut unwinding = 0.0;
        let mut state = e.clone();
        for _ in 0..periods {
            unwinding += rate * state.nca();
            let realized = state.expected_recoveries.first().copied().unwrap_or(0.0);
            state = state.advance(realized, None, Unwinding::NetOnly).0;
        }
        prop_assert!((raw + unwinding).abs() <= 1e-9 * gca);
        prop_assert!(corrected.abs() <= 1e-9 * gca);

        let (raw_accrual, _) = window(&e, periods, Unwinding::GrossAndNet);
        prop_assert!(raw_accrual.abs() <= 1e-9 * gca);
    }

    #[test]
    fn decomposition_adds_up(
        gca in 0.01f64..1e7,
        coll_share in 0.0f64..=1.0,
        lgd in 0.0f64..=1.0,
        pd in 0.0f64..=1.0,
    ) {
        let d = decompose_nca(gca, coll_share * gca, lgd, pd).unwrap();
        let total = d.coll + d.unsec + d.gtee + d.el;
        prop_assert!((total - gca).abs() <= 4.0 * f64::EPSILON * gca);
        prop_assert!((d.nca() + d.el - gca).abs() <= 4.0 * f64::EPSILON * gca);
        prop_assert!(d.unsec >= 0.0 && d.gtee >= 0.0 && d.el >= 0.0);
    }
}

#[test]
fn worked_decompositions() {
    let d = decompose_nca(100.0, 40.0, 0.5, 1.0).unwrap();
    assert_eq!((d.unsec, d.gtee, d.nca(), d.el), (30.0, 0.0, 70.0, 30.0));
    let d = decompose_nca(100.0, 40.0, 0.5, 0.8).unwrap();
    assert_eq!((d.gtee, d.nca(), d.el), (6.0, 76.0, 24.0));
}

#[test]
fn one_recovery_worked_example() {
    let e = NplExposure::new("x", 100.0, vec![0.0, 60.0], 0.05).unwrap();
    assert!((e.nca() - 54.4218).abs() < 1e-4);
    let (next, wo) = e.advance(0.0, None, Unwinding::NetOnly);
    assert_eq!(wo, 0.0);
    assert!((next.nca() - 57.1429).abs() < 1e-4);
    let raw = npl_dashboard_value(next.el(), e.el(), wo);
    assert!((raw + 2.7211).abs() < 1e-4);
    assert!((raw + 0.05 * e.nca()).abs() < 1e-12);
    assert!(unwinding_correction(raw, 0.05, e.nca(), Unwinding::NetOnly).abs() < 1e-9);
}

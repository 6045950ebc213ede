use iacv_core::cashflow::{solve_effective_rate, solve_risk_adjusted_rate, LoanContract, PeriodUnit};
use iacv_core::staging::{cashflow_duration, duration_at, modified_duration, shock_iacv};
use iacv_core::valuation::{
    discount_series, gca_iacv_gap, gca_trajectory, iacv_trajectory, loss_dated_weights,
    normalize_profile, normalize_shape, RiskProfile,
};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Bullet,
    Annuity,
    Linear,
}

fn flows(kind: Kind, principal: f64, rate: f64, term: usize) -> Vec<f64> {
    match kind {
        Kind::Bullet => {
            let mut f = vec![principal * rate; term];
            f[term - 1] += principal;
            f
        }
        Kind::Annuity => {
            let p = if rate == 0.0 {
                principal / term as f64
            } else {
                principal * rate / (1.0 - (1.0 + rate).powi(-(term as i32)))
            };
            vec![p; term]
        }
        Kind::Linear => {
            let step = principal / term as f64;
            (0..term)
                .map(|k| step + rate * (principal - step * k as f64))
                .collect()
        }
    }
}

fn contract_strategy() -> impl Strategy<Value = LoanContract> {
    (
        1usize..=30,
        prop_oneof![Just(Kind::Bullet), Just(Kind::Annuity), Just(Kind::Linear)],
        0.0f64..0.15,
        10.0f64..1000.0,
        prop::bool::ANY,
    )
        .prop_map(|(term, kind, annual, principal, monthly)| {
            let unit = if monthly { PeriodUnit::Month } else { PeriodUnit::Year };
            let rate = unit.from_annual(annual);
            LoanContract::new("c", principal, flows(kind, principal, rate, term), unit).unwrap()
        })
}

/// Risk level as a share of the contract rate, kept away from zero.
fn risk_share() -> impl Strategy<Value = f64> {
    0.05f64..0.6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn neutral_profile_keeps_iacv_on_gca(c in contract_strategy(), share in risk_share()) {
        let i = solve_effective_rate(&c).unwrap().rate;
        let gca = gca_trajectory(&c, i).unwrap();
        let r = share * i.max(1e-4);
        let profile = RiskProfile::neutral(&gca, r);
        let i_ed = solve_risk_adjusted_rate(&c, profile.expected_losses()).unwrap().rate;
        prop_assert!((i_ed - (i - r)).abs() < 1e-9);
        let iacv = iacv_trajectory(&c, &profile, i_ed).unwrap();
        let worst = gca.iter().zip(&iacv).map(|(g, v)| (g - v).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-8 * gca[0], "max gap {worst}");
    }

    #[test]
    fn gap_formula_matches_trajectories(
        c in contract_strategy(),
        share in risk_share(),
        shape in prop::collection::vec(0.0f64..3.0, 30),
    ) {
        let i = solve_effective_rate(&c).unwrap().rate;
        let gca = gca_trajectory(&c, i).unwrap();
        let term = c.term();
        let r = share * i.max(1e-4);
        let i_ed = i - r;
        let mut shape = shape[..term].to_vec();
        shape[term - 1] += 0.1;
        let profile = normalize_profile(&shape, r, &gca, i_ed).unwrap();
        let iacv = iacv_trajectory(&c, &profile, i_ed).unwrap();
        let weights = loss_dated_weights(&gca, i_ed);
        let absolute = profile.absolute(&gca);
        let n = gca.len().min(iacv.len()).min(term + 1);
        for t in 0..n {
            let formula = gca_iacv_gap(r, &absolute, &weights, t).unwrap();
            let direct = (gca[t] - iacv[t]) / (1.0 + i_ed).powi(t as i32);
            prop_assert!((formula - direct).abs() <= 1e-8 * gca[0], "t={t}: {formula} vs {direct}");
        }
    }

    #[test]
    fn norming_holds_and_is_idempotent(
        c in contract_strategy(),
        share in risk_share(),
        shape in prop::collection::vec(0.0f64..5.0, 30),
    ) {
        let i = solve_effective_rate(&c).unwrap().rate;
        let gca = gca_trajectory(&c, i).unwrap();
        let term = c.term();
        let r = share * i.max(1e-4);
        let mut shape = shape[..term].to_vec();
        shape[0] += 0.01;
        let profile = normalize_profile(&shape, r, &gca, i).unwrap();
        let weights = discount_series(&gca[..term], i);
        let ratio = profile.norming_ratio(&gca, &weights, r);
        prop_assert!((ratio - 1.0).abs() <= 1e-9, "ratio {ratio}");
        let once = normalize_shape(&shape, r, &gca, i).unwrap();
        let twice = normalize_shape(&once, r, &gca, i).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(RiskProfile::from_absolute(&once, &gca).unwrap(), profile);
    }

    #[test]
    fn duration_formulations_agree(c in contract_strategy()) {
        let i = solve_effective_rate(&c).unwrap().rate;
        let gca = gca_trajectory(&c, i).unwrap();
        let balances = discount_series(&gca[..c.term()], i);
        let from_balances = modified_duration(&balances, i, c.principal()).unwrap();
        let from_flows = cashflow_duration(c.cash_flows(), i).unwrap();
        let rel = (from_balances.macaulay / from_flows.macaulay - 1.0).abs();
        prop_assert!(rel <= 1e-9, "{} vs {}", from_balances.macaulay, from_flows.macaulay);
        let at_zero = duration_at(&gca[..c.term()], 0, i).unwrap();
        prop_assert!((at_zero.macaulay / from_flows.macaulay - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn first_order_shock_error_is_second_order(c in contract_strategy(), bp in 1u32..=50) {
        let i = solve_effective_rate(&c).unwrap().rate;
        let dr = bp as f64 * 1e-4;
        let d = cashflow_duration(c.cash_flows(), i).unwrap();
        let exact = discount_series(&[0.0].iter().chain(c.cash_flows()).copied().collect::<Vec<_>>(), i + dr)
            .iter()
            .sum::<f64>();
        let approx = shock_iacv(c.principal(), d.modified, dr);
        let rel = (approx - exact).abs() / exact;
        prop_assert!(rel <= 2.0 * d.macaulay.powi(2) * dr * dr, "rel {rel}");
    }
}

#[test]
fn one_year_delay_gap_is_the_twelve_month_el() {
    let c = LoanContract::new("par", 100.0, vec![5.0, 5.0, 5.0, 5.0, 105.0], PeriodUnit::Year).unwrap();
    let gca = gca_trajectory(&c, 0.05).unwrap();
    let (r, i_ed) = (0.01, 0.04);
    let profile = normalize_profile(&[0.0, 1.0, 1.0, 1.0, 1.0], r, &gca, i_ed).unwrap();
    let iacv = iacv_trajectory(&c, &profile, i_ed).unwrap();
    // No loss is expected in year one, so iACV accrues only i_ED and falls
    // behind GCA by the full first-year risk premium.
    assert!((gca[1] - iacv[1] - r * gca[0]).abs() < 1e-12);
    let gap = gca_iacv_gap(r, &profile.absolute(&gca), &loss_dated_weights(&gca, i_ed), 1).unwrap();
    assert!((gap * 1.04 - 1.0).abs() < 1e-12);
}

#[test]
fn par_bullet_duration_matches_closed_form() {
    let flows = [5.0, 5.0, 5.0, 5.0, 105.0];
    let d = cashflow_duration(&flows, 0.05).unwrap();
    // Par bond: D_Mac = (1 - 1.05^-5) / (1 - 1.05^-1).
    let closed = (1.0 - 1.05f64.powi(-5)) / (1.0 - 1.0 / 1.05);
    assert!((d.macaulay - closed).abs() < 1e-12);
    assert!((d.macaulay - 4.5460).abs() < 1e-3);
}

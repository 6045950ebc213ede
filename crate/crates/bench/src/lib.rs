//! Fixtures shared by the benchmarks.

use iacv_core::cashflow::{LoanContract, PeriodUnit};
use iacv_core::dashboards::CompoundBinomial;
use iacv_core::simulator::loss_series_weights;
use iacv_core::ScenarioConfig;

/// Monthly annuity of `term` periods at 6% a year.
pub fn annuity(term: usize) -> LoanContract {
    let rate = PeriodUnit::Month.from_annual(0.06);
    let principal = 1_000.0;
    let payment = principal * rate / (1.0 - (1.0 + rate).powi(-(term as i32)));
    LoanContract::new("bench", principal, vec![payment; term], PeriodUnit::Month).expect("valid annuity")
}

/// Loss model of a 1000-exposure book with a 1% period PD.
pub fn loss_model() -> CompoundBinomial {
    let config = ScenarioConfig {
        n_exposures: 1000,
        period_pd: 0.01,
        ..Default::default()
    };
    CompoundBinomial::new(1000, config.period_pd, loss_series_weights(&config)).expect("valid model")
}

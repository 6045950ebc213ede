//! Canned scenarios and the series behind them.

use super::{simulate_npl_book, HazardShape, LgdAdjustment, ScenarioConfig};
use crate::cashflow::{solve_effective_rate, LoanContract, PeriodUnit};
use crate::npl::{mad_peaks, moving_window_monitor, MonitorConfig, PoolState, Unwinding};
use crate::staging::{assess_stage, provision_amount, Bucket, StageState, StagingConfig};
use crate::valuation::{
    conservatism_delta, gca_trajectory, iacv_trajectory, normalize_profile, Conservatism,
    RiskProfile,
};
use crate::{Error, Result};

/// Names accepted by [`figure_scenario`].
pub const FIGURES: [&str; 5] = ["fig4_1", "fig5_1", "fig7_1", "fig7_2", "fig7_3"];

/// Notional of the single-loan figure scenarios.
const FIGURE_PRINCIPAL: f64 = 100.0;

pub fn figure_scenario(name: &str) -> Result<ScenarioConfig> {
    let config = match name {
        "fig4_1" => ScenarioConfig {
            n_exposures: 1,
            term: 5,
            hazard_shape: HazardShape::Delayed { periods: 1 },
            amortizing_share: 0.0,
            ..Default::default()
        },
        "fig5_1" => ScenarioConfig {
            n_exposures: 1,
            term: 60,
            period_unit: PeriodUnit::Month,
            risk_level_drift: 0.01,
            amortizing_share: 0.0,
            ..Default::default()
        },
        "fig7_1" => ScenarioConfig {
            n_exposures: 400,
            periods: 6,
            cure_share: 0.3,
            collateral_share: 0.5,
            collateral_lag: 5,
            ..Default::default()
        },
        // Unsecured-only inflows keep monthly recovery noise close to normal,
        // so a 5-MAD rule rarely fires outside the injected revision.
        "fig7_2" | "fig7_3" => ScenarioConfig {
            period_unit: PeriodUnit::Month,
            periods: 120,
            new_volume: 100,
            collateral_share: 0.0,
            recovery_noise: 0.1,
            lgd_adjustment: Some(LgdAdjustment {
                period: 96,
                factor: 0.7,
            }),
            ..Default::default()
        },
        other => {
            return Err(Error::Config(format!(
                "unknown figure {other:?}; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    config.validate()?;
    Ok(config)
}

fn par_bullet(id: &str, config: &ScenarioConfig) -> Result<LoanContract> {
    let coupon = FIGURE_PRINCIPAL * config.period_rate();
    let mut flows = vec![coupon; config.term];
    flows[config.term - 1] += FIGURE_PRINCIPAL;
    LoanContract::new(id, FIGURE_PRINCIPAL, flows, config.period_unit)
}

/// A par bullet valued under a neutral and under the configured profile,
/// both at the same risk level.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig41 {
    pub gca: Vec<f64>,
    pub iacv_neutral: Vec<f64>,
    pub iacv_shaped: Vec<f64>,
    /// `GCA_t - iACV_t` of the shaped profile.
    pub gap: Vec<f64>,
    /// First-year expected loss of the neutral profile.
    pub el_12m: f64,
    /// Period with the largest gap.
    pub max_gap_period: usize,
}

pub fn fig4_1(config: &ScenarioConfig) -> Result<Fig41> {
    config.validate()?;
    let contract = par_bullet("FIG41", config)?;
    let i = solve_effective_rate(&contract)?.rate;
    let gca = gca_trajectory(&contract, i)?;
    let r = config.period_risk_level(config.risk_level);
    let i_ed = i - r;
    let shape = config.hazard_shape.weights(config.term);
    let shaped = normalize_profile(&shape, r, &gca, i_ed)?;
    let neutral = RiskProfile::neutral(&gca, r);
    let iacv_neutral = iacv_trajectory(&contract, &neutral, i_ed)?;
    let iacv_shaped = iacv_trajectory(&contract, &shaped, i_ed)?;
    let gap: Vec<f64> = gca.iter().zip(&iacv_shaped).map(|(g, v)| g - v).collect();
    let max_gap_period = gap
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| t)
        .unwrap_or(0);
    let per_year = config.period_unit.periods_per_year() as usize;
    let el_12m = neutral.expected_losses().iter().take(per_year).sum();
    Ok(Fig41 {
        gca,
        iacv_neutral,
        iacv_shaped,
        gap,
        el_12m,
        max_gap_period,
    })
}

/// A par bullet whose risk level drifts upwards after origination while the
/// benchmark keeps the origination `i_ED`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig51 {
    /// Annual risk level in force at each period.
    pub risk_level: Vec<f64>,
    pub gca: Vec<f64>,
    pub iacv: Vec<f64>,
    pub nca: Vec<f64>,
    pub provision: Vec<f64>,
    pub bucket: Vec<Bucket>,
    /// `Δ_t` discounted to origination.
    pub delta: Vec<f64>,
    /// First period in bucket 2.
    pub transition: Option<usize>,
}

impl Fig51 {
    /// Runs of equal conservatism, in order.
    pub fn sign_pattern(&self) -> Vec<Conservatism> {
        let mut out: Vec<Conservatism> = Vec::new();
        for d in &self.delta {
            let c = Conservatism::classify(*d);
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        out
    }
}

pub fn fig5_1(config: &ScenarioConfig, staging: &StagingConfig) -> Result<Fig51> {
    config.validate()?;
    let contract = par_bullet("FIG51", config)?;
    let i = solve_effective_rate(&contract)?.rate;
    let gca = gca_trajectory(&contract, i)?;
    let n = config.term;
    let per_year = config.period_unit.periods_per_year() as usize;
    let r0 = config.risk_level;
    let i_ed = i - config.period_risk_level(r0);
    let flows = contract.cash_flows();
    let v_ed = 1.0 / (1.0 + i_ed);
    let v = 1.0 / (1.0 + i);

    let mut out = Fig51 {
        risk_level: Vec::with_capacity(n + 1),
        gca: gca.clone(),
        iacv: Vec::with_capacity(n + 1),
        nca: Vec::with_capacity(n + 1),
        provision: Vec::with_capacity(n + 1),
        bucket: Vec::with_capacity(n + 1),
        delta: Vec::with_capacity(n + 1),
        transition: None,
    };
    let mut worst = Bucket::One;
    for t in 0..=n {
        let annual = r0 + config.risk_level_drift * t as f64 / per_year as f64;
        let r = config.period_risk_level(annual);
        // Expected flows under the current risk level, valued at the
        // origination benchmark rate.
        let iacv: f64 = (t..n)
            .map(|s| (flows[s] - r * gca[s]) * v_ed.powi((s - t + 1) as i32))
            .sum();
        let twelve: f64 = (t..(t + per_year).min(n)).map(|s| r * gca[s]).sum();
        let lifetime: f64 = (t..n).map(|s| r * gca[s] * v.powi((s - t) as i32)).sum();
        let state = StageState::performing(r0, annual);
        let bucket = assess_stage(&state, staging)?.max(worst);
        worst = bucket;
        if bucket == Bucket::Two && out.transition.is_none() {
            out.transition = Some(t);
        }
        let provision = provision_amount(bucket, twelve.min(lifetime), lifetime)?;
        let nca = gca[t] - provision;
        let discount = v_ed.powi(t as i32);
        out.risk_level.push(annual);
        out.iacv.push(iacv);
        out.nca.push(nca);
        out.provision.push(provision);
        out.bucket.push(bucket);
        out.delta.push(conservatism_delta(iacv * discount, nca * discount));
    }
    Ok(out)
}

/// Dashboard series of an open NPL book with a one-time LGD revision.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig72 {
    pub states: Vec<PoolState>,
    /// Per-period NPL dashboard, indexed by period (entry 0 is period 1).
    pub dashboard: Vec<f64>,
    /// First period of the window searched for peaks.
    pub stationary_from: usize,
    /// Periods whose dashboard exceeds the MAD threshold.
    pub peaks: Vec<usize>,
}

/// Threshold in median absolute deviations for a dashboard peak.
pub const PEAK_MADS: f64 = 5.0;

pub fn fig7_2(config: &ScenarioConfig) -> Result<Fig72> {
    let states = simulate_npl_book(config)?;
    let monitor = MonitorConfig {
        window: 1,
        rate: config.period_rate(),
        convention: Unwinding::NetOnly,
        ..MonitorConfig::default()
    };
    let report = moving_window_monitor(&states, &monitor)?;
    let dashboard: Vec<f64> = report.periods.iter().map(|p| p.dashboard).collect();
    // The book is stationary once the first inflows are fully worked out.
    let per_year = config.period_unit.periods_per_year() as usize;
    let workout = per_year * config.collateral_lag.max(config.recovery_timing.len());
    let stationary_from = (workout + per_year + 1).min(dashboard.len());
    let peaks = mad_peaks(&dashboard[stationary_from - 1..], PEAK_MADS)
        .into_iter()
        .map(|k| k + stationary_from)
        .collect();
    Ok(Fig72 {
        states,
        dashboard,
        stationary_from,
        peaks,
    })
}

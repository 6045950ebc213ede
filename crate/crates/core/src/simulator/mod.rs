//! Synthetic books and canned scenarios.
//!
//! Every random draw comes from a [`substream`](crate::rng::substream) keyed
//! by the scenario seed, a stream tag and the coordinates of the draw
//! (exposure, period). Output therefore does not depend on how work is
//! spread over threads.
//!
//! Performing-book amounts live on dyadic grids (EAD in 1/64, LGD in 1/256,
//! PD in 1/4096) so that expected losses and their portfolio sums are exact
//! in binary floating point; the Impact-of-Risk identities can then be
//! checked with `==` on simulated data.

mod book;
mod figures;
mod portfolio;
mod workout;

use serde::{Deserialize, Serialize};

use crate::cashflow::PeriodUnit;
use crate::{Error, Result};

pub use book::{generate_book, Book, BookExposure};
pub use figures::{fig4_1, fig5_1, fig7_2, figure_scenario, Fig41, Fig51, Fig72, FIGURES};
pub use portfolio::{
    default_counts, loss_series_weights, provisions, simulate_loss_series, simulate_snapshots,
};
pub use workout::{
    simulate_npl_book, simulate_static_pool, PoolObservation, PoolSimulation, RecoveryPath,
};

/// Temporal shape of expected losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HazardShape {
    /// Constant risk level on the outstanding balance.
    Neutral,
    /// No expected loss in the first `periods` periods.
    Delayed { periods: usize },
    /// Weight `(t+1)^2`, concentrating losses near maturity.
    Bullet,
}

impl HazardShape {
    pub fn weights(self, term: usize) -> Vec<f64> {
        (0..term)
            .map(|t| match self {
                HazardShape::Neutral => 1.0,
                HazardShape::Delayed { periods } => {
                    if t < periods {
                        0.0
                    } else {
                        1.0
                    }
                }
                HazardShape::Bullet => ((t + 1) * (t + 1)) as f64,
            })
            .collect()
    }
}

/// One-time revision of expected unsecured recoveries in an open NPL book.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgdAdjustment {
    pub period: usize,
    /// Multiplies the outstanding expected unsecured recoveries.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_exposures: usize,
    /// Contract term in periods.
    pub term: usize,
    pub period_unit: PeriodUnit,
    pub hazard_shape: HazardShape,
    /// Annual risk level `r = i - i_ED`.
    pub risk_level: f64,
    /// Annual increase of the risk level per year.
    pub risk_level_drift: f64,
    /// Single-factor asset correlation.
    pub correlation: f64,
    /// Realized over expected unsecured LGD.
    pub lgd_bias: f64,
    /// Share of the unsecured recovery value received in each year after default.
    pub recovery_timing: Vec<f64>,
    /// Annual contract rate.
    pub rate: f64,
    pub lgd: f64,
    pub amortizing_share: f64,
    /// Number of periods simulated for snapshots and pools.
    pub periods: usize,
    /// Per-period default probability for loss series.
    pub period_pd: f64,
    /// New performing exposures originated per period.
    pub new_volume: usize,
    pub collateral_share: f64,
    /// Periods until collateral is realized.
    pub collateral_lag: usize,
    pub guarantee_share: f64,
    pub guarantor_pd: f64,
    pub cure_share: f64,
    /// Standard deviation of multiplicative noise on realized recoveries.
    pub recovery_noise: f64,
    pub lgd_adjustment: Option<LgdAdjustment>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_exposures: 200,
            term: 5,
            period_unit: PeriodUnit::Year,
            hazard_shape: HazardShape::Neutral,
            risk_level: 0.01,
            risk_level_drift: 0.0,
            correlation: 0.0,
            lgd_bias: 1.0,
            recovery_timing: vec![0.5, 0.3, 0.2],
            rate: 0.05,
            lgd: 0.45,
            amortizing_share: 0.5,
            periods: 6,
            period_pd: 0.002,
            new_volume: 0,
            collateral_share: 0.3,
            collateral_lag: 4,
            guarantee_share: 0.1,
            guarantor_pd: 0.5,
            cure_share: 0.0,
            recovery_noise: 0.0,
            lgd_adjustment: None,
        }
    }
}

fn share(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_exposures == 0 || self.term == 0 || self.periods == 0 {
            return Err(Error::Config(
                "n_exposures, term and periods must be positive".into(),
            ));
        }
        if !(self.rate > -1.0 && self.rate.is_finite()) {
            return Err(Error::Config(format!("rate {} out of range", self.rate)));
        }
        if !(self.risk_level >= 0.0 && self.risk_level < self.rate + 1.0) {
            return Err(Error::Config(format!(
                "risk level {} out of range",
                self.risk_level
            )));
        }
        if !self.risk_level_drift.is_finite() {
            return Err(Error::Config("risk level drift must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::Config(format!(
                "correlation must lie in [0, 1), got {}",
                self.correlation
            )));
        }
        if !(self.lgd_bias > 0.0 && self.lgd_bias.is_finite()) {
            return Err(Error::Config(format!("lgd_bias {} must be positive", self.lgd_bias)));
        }
        if self.recovery_timing.is_empty() || self.recovery_timing.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Config("recovery timing needs non-negative fractions".into()));
        }
        let sum: f64 = self.recovery_timing.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "recovery timing fractions sum to {sum}, not 1"
            )));
        }
        for (what, v) in [
            ("lgd", self.lgd),
            ("amortizing_share", self.amortizing_share),
            ("collateral_share", self.collateral_share),
            ("guarantee_share", self.guarantee_share),
            ("guarantor_pd", self.guarantor_pd),
            ("cure_share", self.cure_share),
        ] {
            share(what, v)?;
        }
        if !(self.period_pd > 0.0 && self.period_pd < 1.0) {
            return Err(Error::Config(format!(
                "period_pd must lie in (0, 1), got {}",
                self.period_pd
            )));
        }
        if !(self.recovery_noise >= 0.0 && self.recovery_noise < 1.0) {
            return Err(Error::Config(format!(
                "recovery_noise must lie in [0, 1), got {}",
                self.recovery_noise
            )));
        }
        if let Some(adj) = self.lgd_adjustment {
            if !(adj.factor >= 0.0 && adj.factor.is_finite()) || adj.period == 0 {
                return Err(Error::Config("lgd adjustment needs period >= 1 and factor >= 0".into()));
            }
        }
        Ok(())
    }

    /// Per-period contract rate.
    pub fn period_rate(&self) -> f64 {
        self.period_unit.from_annual(self.rate)
    }

    /// Per-period risk level implied by the annual one.
    pub fn period_risk_level(&self, annual_risk_level: f64) -> f64 {
        self.period_rate() - self.period_unit.from_annual(self.rate - annual_risk_level)
    }
}

// Stream tags keep independent parts of a scenario on disjoint substreams.
const STREAM_BOOK: u64 = 1;
const STREAM_FACTOR: u64 = 2;
const STREAM_EXPOSURE: u64 = 3;
const STREAM_ORIGINATION: u64 = 4;
const STREAM_LOSS: u64 = 5;
const STREAM_POOL: u64 = 6;
const STREAM_RECOVERY: u64 = 7;
const STREAM_NPL_INFLOW: u64 = 8;

fn quantize(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

/// EAD on a 1/64 grid.
fn q_ead(x: f64) -> f64 {
    quantize(x.max(0.0), 64.0)
}

/// LGD on a 1/256 grid.
fn q_lgd(x: f64) -> f64 {
    quantize(x.clamp(0.0, 1.0), 256.0)
}

/// PD on a 1/4096 grid, capped at one half. PDs below half a grid step
/// become zero.
fn q_pd(x: f64) -> f64 {
    quantize(x, 4096.0).clamp(0.0, 0.5)
}

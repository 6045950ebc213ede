//! Impairment buckets, provisions and duration-based sensitivity of the
//! conservatism gap.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ratio comparisons tolerate this relative slack so that a ratio that equals
/// the threshold in exact arithmetic is not missed through rounding.
const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    One,
    Two,
    Three,
}

impl Bucket {
    pub fn number(self) -> u8 {
        match self {
            Bucket::One => 1,
            Bucket::Two => 2,
            Bucket::Three => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Bucket::One),
            2 => Ok(Bucket::Two),
            3 => Ok(Bucket::Three),
            _ => Err(Error::Domain {
                what: "bucket number",
                value: n as f64,
            }),
        }
    }

    /// Credit-impaired exposures accrue interest on the net carrying amount.
    pub fn accrual_base(self) -> AccrualBase {
        match self {
            Bucket::Three => AccrualBase::NetCarrying,
            _ => AccrualBase::GrossCarrying,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccrualBase {
    GrossCarrying,
    NetCarrying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StagingConfig {
    /// Bucket 2 once current / origination lifetime PD reaches this multiple.
    pub relative_threshold: f64,
    /// Days past due that trigger bucket 2 unless rebutted.
    pub dpd_backstop: u32,
}

impl Default for StagingConfig {
    fn default() -> Self {
        Self {
            relative_threshold: 2.5,
            dpd_backstop: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub lifetime_pd_origination: f64,
    pub lifetime_pd_current: f64,
    pub days_past_due: u32,
    pub defaulted: bool,
    /// The past-due presumption has been rebutted for this exposure.
    pub dpd_rebutted: bool,
}

impl StageState {
    pub fn performing(pd_origination: f64, pd_current: f64) -> Self {
        Self {
            lifetime_pd_origination: pd_origination,
            lifetime_pd_current: pd_current,
            days_past_due: 0,
            defaulted: false,
            dpd_rebutted: false,
        }
    }

    pub fn with_days_past_due(mut self, dpd: u32) -> Self {
        self.days_past_due = dpd;
        self
    }
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: p })
    }
}

/// Current over origination lifetime PD. Zero over zero is a ratio of one.
pub fn pd_ratio(state: &StageState) -> Result<f64> {
    check_probability("origination lifetime PD", state.lifetime_pd_origination)?;
    check_probability("current lifetime PD", state.lifetime_pd_current)?;
    let (orig, cur) = (state.lifetime_pd_origination, state.lifetime_pd_current);
    if orig == 0.0 {
        return if cur == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::RatioUndefined { current: cur })
        };
    }
    Ok(cur / orig)
}

/// Bucket for the current period. No hysteresis: an exposure returns to
/// bucket 1 as soon as neither trigger holds.
pub fn assess_stage(state: &StageState, config: &StagingConfig) -> Result<Bucket> {
    if state.defaulted {
        return Ok(Bucket::Three);
    }
    let ratio = pd_ratio(state)?;
    let significant = ratio >= config.relative_threshold * (1.0 - RATIO_SLACK);
    let past_due = state.days_past_due >= config.dpd_backstop && !state.dpd_rebutted;
    Ok(if significant || past_due {
        Bucket::Two
    } else {
        Bucket::One
    })
}

/// Number of exposures that land in bucket 2 for each candidate threshold.
pub fn threshold_sensitivity(
    states: &[StageState],
    thresholds: &[f64],
    base: &StagingConfig,
) -> Result<Vec<(f64, usize)>> {
    thresholds
        .iter()
        .map(|&threshold| {
            let config = StagingConfig {
                relative_threshold: threshold,
                ..base.clone()
            };
            let mut count = 0;
            for s in states {
                if assess_stage(s, &config)? == Bucket::Two {
                    count += 1;
                }
            }
            Ok((threshold, count))
        })
        .collect()
}

/// Bucket 1 books the 12-month EL, buckets 2 and 3 the lifetime EL.
pub fn provision_amount(bucket: Bucket, el_12m: f64, el_lifetime: f64) -> Result<f64> {
    if el_12m > el_lifetime * (1.0 + RATIO_SLACK) + f64::MIN_POSITIVE {
        return Err(Error::InconsistentEl {
            el_12m,
            el_lifetime,
        });
    }
    Ok(match bucket {
        Bucket::One => el_12m,
        Bucket::Two | Bucket::Three => el_lifetime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationResult {
    pub macaulay: f64,
    pub modified: f64,
    pub discount_rate_used: f64,
}

impl DurationResult {
    fn new(macaulay: f64, rate: f64) -> Self {
        Self {
            macaulay,
            modified: macaulay / (1.0 + rate),
            discount_rate_used: rate,
        }
    }
}

/// Duration from a balance series already discounted to origination:
/// `D_Mac = Σ_t X_t^0 / X_0`. Pass GCA discounted at `i`, or iACV at `i_ED`.
pub fn modified_duration(discounted: &[f64], rate: f64, principal: f64) -> Result<DurationResult> {
    if discounted.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(principal > 0.0) {
        return Err(Error::Domain {
            what: "principal",
            value: principal,
        });
    }
    Ok(DurationResult::new(discounted.iter().sum::<f64>() / principal, rate))
}

/// Cash-flow weighted duration `Σ t CF_t^0 / Σ CF_t^0` with flows at `t = 1..`.
pub fn cashflow_duration(flows: &[f64], rate: f64) -> Result<DurationResult> {
    if flows.is_empty() {
        return Err(Error::EmptySeries);
    }
    let v = 1.0 / (1.0 + rate);
    let (mut weighted, mut total, mut d) = (0.0, 0.0, 1.0);
    for (k, cf) in flows.iter().enumerate() {
        d *= v;
        weighted += (k + 1) as f64 * cf * d;
        total += cf * d;
    }
    if total == 0.0 {
        return Err(Error::Domain {
            what: "present value of flows",
            value: total,
        });
    }
    Ok(DurationResult::new(weighted / total, rate))
}

/// Duration of the remaining balances seen from period `t`:
/// `Σ_{s≥t} X_s (1+rate)^{t-s} / X_t`.
pub fn duration_at(balances: &[f64], t: usize, rate: f64) -> Result<DurationResult> {
    if t >= balances.len() {
        return Err(Error::Index {
            index: t,
            len: balances.len(),
        });
    }
    let rebased = crate::valuation::discount_series(&balances[t..], rate);
    modified_duration(&rebased, rate, balances[t])
}

/// First-order revaluation of `iACV_0` after a parallel risk-level shift.
pub fn shock_iacv(iacv0: f64, d_mod: f64, delta_r: f64) -> f64 {
    iacv0 * (1.0 - delta_r * d_mod)
}

/// Largest risk-level increase under which the carrying amount stays
/// conservative. Negative when it is already non-conservative.
pub fn conservatism_bound(el0_t: f64, profile_gap: f64, d_mod_t: f64, gca0_t: f64) -> f64 {
    (el0_t - profile_gap) / (d_mod_t * gca0_t)
}

/// Conservatism gap with a risk-level shift: the duration term plus the
/// provision net of the profile gap.
pub fn generalized_delta(delta_r: f64, d_mod_t: f64, gca0_t: f64, el0_t: f64, profile_gap: f64) -> f64 {
    -delta_r * d_mod_t * gca0_t + (el0_t - profile_gap)
}

/// Share of a bucket-2 provision that was already priced into the gross
/// carrying amount, given the relative PD increase at the trigger.
pub fn hidden_reserve_ratio(relative_increase: f64) -> f64 {
    1.0 / (1.0 + relative_increase)
}

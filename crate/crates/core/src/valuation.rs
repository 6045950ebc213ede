//! Benchmark trajectories and the risk-profile algebra.
//!
//! `GCA_t` rolls the contract forward at the effective rate `i`; `iACV_t`
//! rolls the expected flows `CF_t - R_t` forward at the risk-adjusted rate
//! `i_ED`. Both start at the principal. `NCA_t` is `GCA_t` net of the
//! provision for the bucket the exposure sits in.
//!
//! Indexing: `R_{t+1}` is the loss expected over the period that starts at
//! `t`, charged on the balance `GCA_t`. The absolute profile is therefore
//! `r_t = R_{t+1} / GCA_t` for `t = 0..T-1`, and the neutral profile
//! `R_{t+1} = r GCA_t` is exactly the one under which `iACV_t = GCA_t`.

use serde::{Deserialize, Serialize};

use crate::cashflow::{self, LoanContract};
use crate::staging::{self, Bucket};
use crate::{Error, Result};

/// Truncation threshold for trajectories, relative to the principal.
pub const TRUNCATION_TOLERANCE: f64 = 1e-9;
/// Largest terminal balance accepted as "fully repaid", relative to principal.
pub const TERMINAL_TOLERANCE: f64 = 1e-6;

/// Expected losses `R_1..R_T` of one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    expected_losses: Vec<f64>,
}

impl RiskProfile {
    pub fn new(expected_losses: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = expected_losses.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Domain {
                what: "expected loss",
                value: bad,
            });
        }
        Ok(Self { expected_losses })
    }

    pub fn zero(term: usize) -> Self {
        Self {
            expected_losses: vec![0.0; term],
        }
    }

    /// `R_{t+1} = r GCA_t` over the whole trajectory.
    pub fn neutral(gca: &[f64], risk_level: f64) -> Self {
        let term = gca.len().saturating_sub(1);
        Self {
            expected_losses: gca[..term].iter().map(|g| risk_level * g).collect(),
        }
    }

    /// Rebuilds losses from an absolute profile: `R_{t+1} = r_t GCA_t`.
    pub fn from_absolute(absolute: &[f64], gca: &[f64]) -> Result<Self> {
        if absolute.len() > gca.len() {
            return Err(Error::LengthMismatch {
                what: "absolute profile longer than balance series",
                left: absolute.len(),
                right: gca.len(),
            });
        }
        Self::new(absolute.iter().zip(gca).map(|(r, g)| r * g).collect())
    }

    pub fn expected_losses(&self) -> &[f64] {
        &self.expected_losses
    }

    pub fn term(&self) -> usize {
        self.expected_losses.len()
    }

    /// `r_t = R_{t+1} / GCA_t`, zero where the balance is zero.
    pub fn absolute(&self, gca: &[f64]) -> Vec<f64> {
        self.expected_losses
            .iter()
            .zip(gca)
            .map(|(r, g)| if *g > 0.0 { r / g } else { 0.0 })
            .collect()
    }

    /// `p_t = r_t / r`.
    pub fn relative(&self, gca: &[f64], risk_level: f64) -> Vec<f64> {
        self.absolute(gca)
            .into_iter()
            .map(|rt| rt / risk_level)
            .collect()
    }

    /// `Σ p_t w_t / Σ w_t` over the profile's term. Equal to one exactly
    /// when the profile carries the risk level `risk_level`.
    pub fn norming_ratio(&self, gca: &[f64], weights: &[f64], risk_level: f64) -> f64 {
        let p = self.relative(gca, risk_level);
        let num: f64 = p.iter().zip(weights).map(|(p, w)| p * w).sum();
        let den: f64 = weights.iter().take(p.len()).sum();
        num / den
    }
}

pub fn discount_series(series: &[f64], rate: f64) -> Vec<f64> {
    let v = 1.0 / (1.0 + rate);
    let mut d = 1.0;
    series
        .iter()
        .map(|x| {
            let out = x * d;
            d *= v;
            out
        })
        .collect()
}

/// `GCA_t / (1 + rate)^(t+1)`: each balance discounted from the end of the
/// period in which the loss charged on it is realized.
///
/// These are the weights under which the GCA-iACV gap identity holds exactly
/// with end-of-period flows; they differ from plain `GCA_t^0` by the constant
/// factor `1/(1+rate)`, so norming ratios are unaffected by the choice.
pub fn loss_dated_weights(gca: &[f64], rate: f64) -> Vec<f64> {
    discount_series(gca, rate)
        .into_iter()
        .map(|g| g / (1.0 + rate))
        .collect()
}

fn roll_forward(principal: f64, flows: &[f64], rate: f64) -> Result<Vec<f64>> {
    let truncate_at = TRUNCATION_TOLERANCE * principal;
    let terminal_tolerance = TERMINAL_TOLERANCE * principal;
    let mut out = Vec::with_capacity(flows.len() + 1);
    out.push(principal);
    let mut balance = principal;
    for (k, cf) in flows.iter().enumerate() {
        balance = (1.0 + rate) * balance - cf;
        out.push(balance);
        let rest = &flows[k + 1..];
        if balance <= truncate_at && rest.iter().all(|cf| cf.abs() <= terminal_tolerance) {
            break;
        }
    }
    if balance.abs() > terminal_tolerance {
        return Err(Error::InconsistentContract {
            terminal: balance,
            tolerance: terminal_tolerance,
        });
    }
    Ok(out)
}

/// `GCA_0 = principal`, `GCA_{t+1} = (1+i) GCA_t - CF_{t+1}`.
pub fn gca_trajectory(contract: &LoanContract, i: f64) -> Result<Vec<f64>> {
    roll_forward(contract.principal(), contract.cash_flows(), i)
}

/// `iACV_0 = principal`, `iACV_{t+1} = (1+i_ED) iACV_t - (CF_{t+1} - R_{t+1})`.
pub fn iacv_trajectory(contract: &LoanContract, profile: &RiskProfile, i_ed: f64) -> Result<Vec<f64>> {
    if profile.term() > contract.term() {
        return Err(Error::LengthMismatch {
            what: "risk profile longer than contract term",
            left: profile.term(),
            right: contract.term(),
        });
    }
    roll_forward(
        contract.principal(),
        &contract.expected_flows(profile.expected_losses()),
        i_ed,
    )
}

/// `r = i - i_ED`.
pub fn risk_level(i: f64, i_ed: f64) -> f64 {
    i - i_ed
}

/// Scales a non-negative loss shape so that it carries risk level
/// `target_r`: with weights `w_t = GCA_t / (1+rate)^t` the result satisfies
/// `Σ r_t w_t = r Σ w_t`, and `R_{t+1} = c shape_t GCA_t`.
///
/// Pass `rate = i` for the norming as stated on the effective-rate scale, or
/// `rate = i - r` (the neutral `i_ED`) for profiles that must reproduce the
/// neutral risk-adjusted rate exactly.
///
/// A shape that already satisfies the norming condition to rounding is
/// returned unchanged, so normalizing is idempotent.
pub fn normalize_profile(
    shape: &[f64],
    target_r: f64,
    gca: &[f64],
    rate: f64,
) -> Result<RiskProfile> {
    RiskProfile::from_absolute(&normalize_shape(shape, target_r, gca, rate)?, gca)
}

/// The scaled absolute rates `r_t` behind [`normalize_profile`].
pub fn normalize_shape(shape: &[f64], target_r: f64, gca: &[f64], rate: f64) -> Result<Vec<f64>> {
    if shape.len() > gca.len() {
        return Err(Error::LengthMismatch {
            what: "shape longer than balance series",
            left: shape.len(),
            right: gca.len(),
        });
    }
    if let Some(&bad) = shape.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::Domain {
            what: "profile shape weight",
            value: bad,
        });
    }
    let weights = discount_series(&gca[..shape.len()], rate);
    let weighted_shape: f64 = shape.iter().zip(&weights).map(|(s, w)| s * w).sum();
    if weighted_shape <= 0.0 {
        return Err(Error::DegenerateShape);
    }
    let total: f64 = weights.iter().sum();
    let mut scale = target_r * total / weighted_shape;
    if (scale - 1.0).abs() <= 8.0 * f64::EPSILON * shape.len() as f64 {
        scale = 1.0;
    }
    Ok(shape.iter().map(|s| scale * s).collect())
}

/// `Δ_t = iACV_t^0 - NCA_t^0`; non-negative means the carrying amount is
/// conservative against the benchmark.
pub fn conservatism_delta(iacv0_t: f64, nca0_t: f64) -> f64 {
    iacv0_t - nca0_t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conservatism {
    Conservative,
    NonConservative,
}

impl Conservatism {
    /// Zero counts as conservative.
    pub fn classify(delta: f64) -> Self {
        if delta >= 0.0 {
            Conservatism::Conservative
        } else {
            Conservatism::NonConservative
        }
    }
}

/// `Σ_{t=0}^{T-1} (r - r_t) w_t`, the cumulative gap between GCA and iACV
/// at horizon `T`. With `w` from [`loss_dated_weights`] at `i_ED` this equals
/// `(GCA_T - iACV_T) / (1 + i_ED)^T`.
pub fn gca_iacv_gap(r: f64, absolute_profile: &[f64], weights: &[f64], horizon: usize) -> Result<f64> {
    let len = absolute_profile.len().min(weights.len());
    if horizon > len {
        return Err(Error::Index { index: horizon, len });
    }
    Ok(absolute_profile[..horizon]
        .iter()
        .zip(&weights[..horizon])
        .map(|(rt, w)| (r - rt) * w)
        .sum())
}

/// Portfolio roll-up of per-exposure `Δ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaAggregate {
    pub sum: f64,
    pub exposure_weighted_mean: f64,
    pub total_exposure: f64,
}

/// Aggregates `(Δ, exposure)` pairs both by plain sum and by exposure-weighted mean.
pub fn aggregate_deltas(items: &[(f64, f64)]) -> DeltaAggregate {
    let sum = items.iter().map(|(d, _)| d).sum();
    let total_exposure: f64 = items.iter().map(|(_, e)| e).sum();
    let weighted: f64 = items.iter().map(|(d, e)| d * e).sum();
    DeltaAggregate {
        sum,
        exposure_weighted_mean: if total_exposure > 0.0 {
            weighted / total_exposure
        } else {
            0.0
        },
        total_exposure,
    }
}

/// How the bucket-1 (12-month) expected loss is derived from a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwelveMonthConvention {
    /// `r` times the balances of the next year, undiscounted; equals
    /// `r GCA_t` for annual periods. Lifetime EL attributes each period's
    /// loss to the start of that period.
    #[default]
    RiskLevel,
    /// Losses expected over the next twelve months, discounted at `i` from
    /// the end of the period in which they fall. Lifetime EL uses the same
    /// end-of-period timing.
    NextTwelveMonths,
}

/// Aligned per-period series of one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureTrajectory {
    pub id: String,
    pub effective_rate: f64,
    pub risk_adjusted_rate: f64,
    pub risk_level: f64,
    pub gca: Vec<f64>,
    pub iacv: Vec<f64>,
    pub nca: Vec<f64>,
    pub provision: Vec<f64>,
    pub el_12m: Vec<f64>,
    pub el_lifetime: Vec<f64>,
    pub bucket: Vec<Bucket>,
    /// `GCA_t` discounted to origination at `i`.
    pub gca0: Vec<f64>,
    /// `iACV_t` discounted to origination at `i_ED`.
    pub iacv0: Vec<f64>,
    /// `NCA_t` discounted to origination at `i_ED`.
    pub nca0: Vec<f64>,
    /// `Δ_t = iacv0 - nca0`.
    pub delta: Vec<f64>,
}

impl ExposureTrajectory {
    /// Values `contract` under `profile`.
    ///
    /// `buckets` gives the stage per period (missing entries are bucket 1).
    /// Under [`TwelveMonthConvention::RiskLevel`] the 12-month figure is
    /// capped at the lifetime figure near maturity.
    pub fn build(
        contract: &LoanContract,
        profile: &RiskProfile,
        convention: TwelveMonthConvention,
        buckets: Option<&[Bucket]>,
    ) -> Result<Self> {
        let i = cashflow::solve_effective_rate(contract)?.rate;
        let i_ed = cashflow::solve_risk_adjusted_rate(contract, profile.expected_losses())?.rate;
        let r = risk_level(i, i_ed);
        let mut gca = gca_trajectory(contract, i)?;
        let mut iacv = iacv_trajectory(contract, profile, i_ed)?;
        let n = gca.len().min(iacv.len());
        gca.truncate(n);
        iacv.truncate(n);

        let losses = profile.expected_losses();
        let loss = |t: usize| losses.get(t).copied().unwrap_or(0.0);
        let per_year = contract.period_unit().periods_per_year() as usize;
        let v = 1.0 / (1.0 + i);

        let mut el_12m = Vec::with_capacity(n);
        let mut el_lifetime = Vec::with_capacity(n);
        let mut provision = Vec::with_capacity(n);
        let mut bucket_series = Vec::with_capacity(n);
        for t in 0..n {
            // Loss index s is R_{s+1}, charged on GCA_s.
            let (twelve, lifetime) = match convention {
                TwelveMonthConvention::RiskLevel => {
                    let lifetime: f64 = (t..n.saturating_sub(1))
                        .map(|s| loss(s) * v.powi((s - t) as i32))
                        .sum();
                    let twelve: f64 = (t..(t + per_year).min(n)).map(|s| r * gca[s]).sum();
                    (twelve.min(lifetime), lifetime)
                }
                TwelveMonthConvention::NextTwelveMonths => {
                    let pv = |end: usize| -> f64 {
                        (t..end.min(n.saturating_sub(1)))
                            .map(|s| loss(s) * v.powi((s - t + 1) as i32))
                            .sum()
                    };
                    (pv(t + per_year), pv(n))
                }
            };
            let bucket = buckets
                .and_then(|b| b.get(t).copied())
                .unwrap_or(Bucket::One);
            el_12m.push(twelve);
            el_lifetime.push(lifetime);
            provision.push(staging::provision_amount(bucket, twelve, lifetime)?);
            bucket_series.push(bucket);
        }
        let nca: Vec<f64> = gca.iter().zip(&provision).map(|(g, p)| g - p).collect();
        let gca0 = discount_series(&gca, i);
        let iacv0 = discount_series(&iacv, i_ed);
        let nca0 = discount_series(&nca, i_ed);
        let delta = iacv0
            .iter()
            .zip(&nca0)
            .map(|(a, b)| conservatism_delta(*a, *b))
            .collect();
        Ok(Self {
            id: contract.id().to_string(),
            effective_rate: i,
            risk_adjusted_rate: i_ed,
            risk_level: r,
            gca,
            iacv,
            nca,
            provision,
            el_12m,
            el_lifetime,
            bucket: bucket_series,
            gca0,
            iacv0,
            nca0,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.gca.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gca.is_empty()
    }
}

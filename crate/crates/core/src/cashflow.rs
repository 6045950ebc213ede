//! Contractual cash-flow schedules, discounting and implicit-rate solving.
//!
//! Time is measured in integer periods with flows at period end, so a flow
//! `CF_t` at index `t` (1-based) is discounted by `(1 + rate)^t`. Both the
//! effective interest rate `i` and the risk-adjusted rate `i_ED` are the
//! rates that equate a flow vector with the contract principal.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower and upper end of the per-period rate search interval.
pub const RATE_BRACKET: (f64, f64) = (-0.99, 10.0);
/// Solver tolerance on the present-value residual, relative to principal.
pub const RATE_TOLERANCE: f64 = 1e-12;
pub const MAX_SOLVER_ITERATIONS: u32 = 200;

// Grid used to locate the first sign change inside `RATE_BRACKET`.
const SCAN_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodUnit {
    Year,
    Month,
}

impl PeriodUnit {
    pub fn periods_per_year(self) -> u32 {
        match self {
            PeriodUnit::Year => 1,
            PeriodUnit::Month => 12,
        }
    }

    /// Geometric conversion of an annual rate to this unit: `(1+i_p)^n = 1+i_a`.
    pub fn from_annual(self, annual: f64) -> f64 {
        (1.0 + annual).powf(1.0 / self.periods_per_year() as f64) - 1.0
    }

    pub fn to_annual(self, periodic: f64) -> f64 {
        (1.0 + periodic).powi(self.periods_per_year() as i32) - 1.0
    }
}

impl std::str::FromStr for PeriodUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "year" | "annual" | "y" => Ok(PeriodUnit::Year),
            "month" | "monthly" | "m" => Ok(PeriodUnit::Month),
            other => Err(Error::Config(format!("unknown period unit `{other}`"))),
        }
    }
}

impl std::fmt::Display for PeriodUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeriodUnit::Year => "year",
            PeriodUnit::Month => "month",
        })
    }
}

/// A loan with its contractual flows `CF_1..CF_T` and net origination amount.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanContract {
    id: String,
    principal: f64,
    cash_flows: Vec<f64>,
    period_unit: PeriodUnit,
}

impl LoanContract {
    pub fn new(
        id: impl Into<String>,
        principal: f64,
        cash_flows: Vec<f64>,
        period_unit: PeriodUnit,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: &str| Error::InvalidContract {
            id: id.clone(),
            reason: reason.to_string(),
        };
        if !(principal.is_finite() && principal > 0.0) {
            return Err(invalid("principal must be positive"));
        }
        if cash_flows.is_empty() {
            return Err(invalid("no cash flows"));
        }
        if cash_flows.iter().any(|cf| !cf.is_finite()) {
            return Err(invalid("non-finite cash flow"));
        }
        if !cash_flows.iter().any(|&cf| cf > 0.0) {
            return Err(invalid("no positive cash flow"));
        }
        Ok(Self {
            id,
            principal,
            cash_flows,
            period_unit,
        })
    }

    /// Builds a contract whose schedule also carries a flow at `t = 0`.
    ///
    /// A flow received at origination (an upfront fee, say) reduces the net
    /// amount lent, so it is netted into the principal.
    pub fn with_origination_flow(
        id: impl Into<String>,
        principal: f64,
        flow_at_origination: f64,
        cash_flows: Vec<f64>,
        period_unit: PeriodUnit,
    ) -> Result<Self> {
        Self::new(id, principal - flow_at_origination, cash_flows, period_unit)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn principal(&self) -> f64 {
        self.principal
    }

    pub fn cash_flows(&self) -> &[f64] {
        &self.cash_flows
    }

    pub fn period_unit(&self) -> PeriodUnit {
        self.period_unit
    }

    pub fn term(&self) -> usize {
        self.cash_flows.len()
    }

    /// `CF_t - R_t`, with missing losses treated as zero.
    pub fn expected_flows(&self, expected_losses: &[f64]) -> Vec<f64> {
        self.cash_flows
            .iter()
            .enumerate()
            .map(|(t, cf)| cf - expected_losses.get(t).copied().unwrap_or(0.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateWarning {
    /// The net flow vector (principal outflow followed by the flows) changes
    /// sign more than once, so more than one rate may clear it. The lowest
    /// root inside the bracket is returned.
    MultipleSignChanges { sign_changes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub rate: f64,
    /// `PV(flows, rate) - principal` at the returned rate.
    pub residual: f64,
    pub iterations: u32,
    pub warning: Option<RateWarning>,
}

/// `Σ CF_t / (1+rate)^(t - horizon_offset)` for flows indexed `t = 1..T`.
pub fn present_value(cash_flows: &[f64], rate: f64, horizon_offset: usize) -> Result<f64> {
    if !(rate > -1.0) {
        return Err(Error::Domain {
            what: "discount rate",
            value: rate,
        });
    }
    let v = 1.0 / (1.0 + rate);
    // Horner form: v (CF_1 + v (CF_2 + ...)).
    let pv = cash_flows.iter().rev().fold(0.0, |acc, cf| v * (acc + cf));
    Ok(pv * (1.0 + rate).powi(horizon_offset as i32))
}

fn pv_and_slope(cash_flows: &[f64], rate: f64) -> (f64, f64) {
    let v = 1.0 / (1.0 + rate);
    let mut discount = 1.0;
    let mut pv = 0.0;
    let mut slope = 0.0;
    for (k, cf) in cash_flows.iter().enumerate() {
        discount *= v;
        pv += cf * discount;
        slope -= (k + 1) as f64 * cf * discount * v;
    }
    (pv, slope)
}

fn sign_changes(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0_f64;
    let mut changes = 0;
    for x in values {
        if x == 0.0 {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = x;
    }
    changes
}

/// Solves `PV(flows, rate) = principal` for the per-period rate.
///
/// The lowest sign change of the residual on a grid over [`RATE_BRACKET`] is
/// bracketed and then refined by Newton steps that fall back to bisection
/// whenever a step would leave the bracket.
pub fn solve_rate(principal: f64, flows: &[f64]) -> Result<RateSolution> {
    let (lo_bound, hi_bound) = RATE_BRACKET;
    let no_root = Error::NoRoot {
        lo: lo_bound,
        hi: hi_bound,
    };
    if flows.is_empty() || !flows.iter().any(|&cf| cf > 0.0) {
        return Err(no_root);
    }
    let tolerance = RATE_TOLERANCE * principal.abs();
    let residual = |rate: f64| pv_and_slope(flows, rate).0 - principal;

    let changes = sign_changes(std::iter::once(-principal).chain(flows.iter().copied()));
    let warning = (changes > 1).then_some(RateWarning::MultipleSignChanges {
        sign_changes: changes,
    });

    // Denser grid near zero where realistic rates live.
    let grid_point = |k: usize| {
        let u = k as f64 / SCAN_POINTS as f64;
        lo_bound + (hi_bound - lo_bound) * u * u
    };
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=SCAN_POINTS {
        let x = grid_point(k);
        let fx = residual(x);
        if fx.is_nan() {
            continue;
        }
        if fx == 0.0 {
            return Ok(RateSolution {
                rate: x,
                residual: 0.0,
                iterations: 0,
                warning,
            });
        }
        if let Some((px, pf)) = prev {
            if (pf > 0.0) != (fx > 0.0) {
                bracket = Some((px, pf, x));
                break;
            }
        }
        prev = Some((x, fx));
    }
    let (mut lo, f_lo, mut hi) = bracket.ok_or(no_root)?;
    let lo_positive = f_lo > 0.0;

    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for iteration in 1..=MAX_SOLVER_ITERATIONS {
        let (pv, slope) = pv_and_slope(flows, x);
        let fx = pv - principal;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tolerance {
            return Ok(RateSolution {
                rate: x,
                residual: fx,
                iterations: iteration,
                warning,
            });
        }
        if (fx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= f64::EPSILON * x.abs().max(1e-3) {
            break;
        }
        x = next;
    }
    Ok(RateSolution {
        rate: best.0,
        residual: best.1,
        iterations: MAX_SOLVER_ITERATIONS,
        warning,
    })
}

/// The effective interest rate `i`: contractual flows against principal.
pub fn solve_effective_rate(contract: &LoanContract) -> Result<RateSolution> {
    solve_rate(contract.principal(), contract.cash_flows())
}

/// The risk-adjusted rate `i_ED`: expected flows `CF_t - R_t` against principal.
///
/// `expected_losses` is padded with zeros up to the contract term.
pub fn solve_risk_adjusted_rate(
    contract: &LoanContract,
    expected_losses: &[f64],
) -> Result<RateSolution> {
    if expected_losses.len() > contract.term() {
        return Err(Error::LengthMismatch {
            what: "expected losses longer than contract term",
            left: expected_losses.len(),
            right: contract.term(),
        });
    }
    solve_rate(
        contract.principal(),
        &contract.expected_flows(expected_losses),
    )
}

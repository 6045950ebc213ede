//! Impairment analytics for amortized-cost loan books.
//!
//! The crate values loans against an idealized amortized-cost benchmark
//! (`iACV`), measures the conservatism of net carrying amounts against it,
//! and backtests expected-loss estimates through the Impact-of-Risk
//! dashboards for performing and non-performing books.
//!
//! Modules, bottom-up:
//!
//! * [`cashflow`]: contracts, discounting, effective and risk-adjusted rates.
//! * [`valuation`]: GCA / iACV / NCA trajectories, risk profiles, the
//!   static calibration test and the GCA-iACV gap.
//! * [`staging`]: bucket assignment, provisioning, durations and the
//!   risk-level shock analysis.
//! * [`dashboards`]: Impact of Risk, PL Dashboard (annual, split, monthly),
//!   loss series and the binomial null test.
//! * [`npl`]: NCA decomposition, NPL Dashboard, static-pool TEL and
//!   moving-window monitoring for the defaulted book.
//! * [`simulator`]: synthetic books and canned scenarios.

pub mod cashflow;
pub mod dashboards;
mod error;
pub mod npl;
pub mod rng;
pub mod simulator;
pub mod staging;
pub mod valuation;

pub use cashflow::{LoanContract, PeriodUnit, RateSolution};
pub use dashboards::{DashboardReport, ExposureRecord, PortfolioSnapshot};
pub use error::{Error, Result};
pub use npl::{NcaDecomposition, NplExposure, StaticPool};
pub use simulator::ScenarioConfig;
pub use staging::{Bucket, DurationResult, StageState, StagingConfig};
pub use valuation::{ExposureTrajectory, RiskProfile};

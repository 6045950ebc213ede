use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid contract {id}: {reason}")]
    InvalidContract { id: String, reason: String },

    #[error("no root for the present-value equation on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("inconsistent contract: terminal balance {terminal} exceeds tolerance {tolerance}")]
    InconsistentContract { terminal: f64, tolerance: f64 },

    #[error("degenerate risk profile shape: weighted sum is zero")]
    DegenerateShape,

    #[error("index {index} exceeds schedule length {len}")]
    Index { index: usize, len: usize },

    #[error("lifetime PD ratio undefined: origination PD is zero, current PD {current}")]
    RatioUndefined { current: f64 },

    #[error("12-month EL {el_12m} exceeds lifetime EL {el_lifetime}")]
    InconsistentEl { el_12m: f64, el_lifetime: f64 },

    #[error("empty series")]
    EmptySeries,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid exposure {id}: {reason}")]
    InvalidExposure { id: String, reason: String },

    #[error("exposure {id} is non-performing at EOP but unknown at BOP")]
    UnmatchedExposure { id: String },

    #[error("duplicate exposure id {id}")]
    DuplicateExposure { id: String },

    #[error("cadence gap: expected step {expected}, found {found} at index {index}")]
    CadenceGap {
        expected: i64,
        found: i64,
        index: usize,
    },

    #[error("exposure {id} cannot be assigned to PL, new NPL or old NPL")]
    Partition { id: String },

    #[error("scenario weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("exposure {id}: collateral {coll} exceeds gross carrying amount {gca}")]
    OverCollateralized { id: String, coll: f64, gca: f64 },

    #[error("static pool violation: exposure {id} is not a pool member")]
    PoolViolation { id: String },

    #[error("history gap: no observation for period {period}")]
    HistoryGap { period: i64 },

    #[error("reconciliation failed for {what}: {left} vs {right}")]
    Reconciliation {
        what: &'static str,
        left: f64,
        right: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

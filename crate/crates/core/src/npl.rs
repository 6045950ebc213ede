//! Defaulted-book analytics: carrying-amount decomposition, the NPL
//! dashboard and its unwinding correction, static-pool total expected loss
//! and a moving-window monitor.
//!
//! Two accrual conventions are supported. Under [`Unwinding::NetOnly`] the
//! gross carrying amount of a defaulted exposure does not accrue and the
//! unwinding interest `i NCA` is recognized on the net amount only; the raw
//! dashboard then has expectation `-i NCA^BOP`. Under
//! [`Unwinding::GrossAndNet`] the same interest is also accrued on the gross
//! amount and the raw dashboard is unbiased on its own.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unwinding {
    #[default]
    NetOnly,
    GrossAndNet,
}

/// Net carrying amount split by source of recovery, plus the expected loss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NcaDecomposition {
    pub coll: f64,
    pub unsec: f64,
    pub gtee: f64,
    /// Whole net amount of a cured exposure, not split further.
    pub cure: f64,
    pub el: f64,
}

impl NcaDecomposition {
    pub fn nca(&self) -> f64 {
        self.coll + self.unsec + self.gtee + self.cure
    }

    fn add(&mut self, other: &Self) {
        self.coll += other.coll;
        self.unsec += other.unsec;
        self.gtee += other.gtee;
        self.cure += other.cure;
        self.el += other.el;
    }
}

/// State of one defaulted exposure at an observation date.
#[derive(Debug, Clone, PartialEq)]
pub struct NplPosition {
    pub id: String,
    pub gca: f64,
    /// Collateral value after haircut.
    pub collateral: f64,
    /// LGD on the part not covered by collateral.
    pub lgd_unsecured: f64,
    /// Probability that a guarantor (or a cure) does not step in.
    pub guarantor_pd: f64,
    pub cured: bool,
    pub wo_in_period: f64,
}

impl NplPosition {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidExposure {
                id: self.id.clone(),
                reason,
            })
        };
        for (name, v) in [("lgd_u", self.lgd_unsecured), ("guarantor pd", self.guarantor_pd)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        for (name, v) in [
            ("gca", self.gca),
            ("collateral", self.collateral),
            ("write-off", self.wo_in_period),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} {v} must be finite and non-negative"));
            }
        }
        if self.collateral > self.gca {
            return Err(Error::OverCollateralized {
                id: self.id.clone(),
                coll: self.collateral,
                gca: self.gca,
            });
        }
        Ok(())
    }

    pub fn decompose(&self) -> Result<NcaDecomposition> {
        self.validate()?;
        let parts = decompose_nca(self.gca, self.collateral, self.lgd_unsecured, self.guarantor_pd)?;
        Ok(if self.cured {
            NcaDecomposition {
                coll: 0.0,
                unsec: 0.0,
                gtee: 0.0,
                cure: self.gca - parts.el,
                el: parts.el,
            }
        } else {
            parts
        })
    }
}

/// Splits a defaulted exposure: collateral after haircut, the recoverable
/// unsecured remainder, the part carried by the guarantor and the expected
/// loss. `coll + unsec + gtee + el = gca` up to rounding.
pub fn decompose_nca(gca: f64, coll: f64, lgd_u: f64, guarantor_pd: f64) -> Result<NcaDecomposition> {
    if coll > gca {
        return Err(Error::OverCollateralized {
            id: String::new(),
            coll,
            gca,
        });
    }
    let exposed = gca - coll;
    let unsecured_loss = lgd_u * exposed;
    let el = guarantor_pd * unsecured_loss;
    Ok(NcaDecomposition {
        coll,
        unsec: exposed - unsecured_loss,
        gtee: unsecured_loss - el,
        cure: 0.0,
        el,
    })
}

/// A defaulted exposure described by its expected recoveries `Rec_1, Rec_2,
/// ...`, each due at the end of the corresponding future period.
#[derive(Debug, Clone, PartialEq)]
pub struct NplExposure {
    pub id: String,
    pub gca: f64,
    pub expected_recoveries: Vec<f64>,
    pub collateral: f64,
    pub guarantor_pd: f64,
    pub cured: bool,
    pub rate: f64,
}

impl NplExposure {
    pub fn new(
        id: impl Into<String>,
        gca: f64,
        expected_recoveries: Vec<f64>,
        rate: f64,
    ) -> Result<Self> {
        let e = Self {
            id: id.into(),
            gca,
            expected_recoveries,
            collateral: 0.0,
            guarantor_pd: 1.0,
            cured: false,
            rate,
        };
        e.check()?;
        Ok(e)
    }

    pub fn with_collateral(mut self, collateral: f64) -> Result<Self> {
        self.collateral = collateral;
        self.check()?;
        Ok(self)
    }

    pub fn with_guarantor_pd(mut self, pd: f64) -> Result<Self> {
        self.guarantor_pd = pd;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if self.rate <= -1.0 {
            return Err(Error::Domain {
                what: "discount rate",
                value: self.rate,
            });
        }
        if let Some(&r) = self.expected_recoveries.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Domain {
                what: "expected recovery",
                value: r,
            });
        }
        self.position(0.0).map(|_| ())
    }

    /// Present value of the expected recoveries.
    pub fn nca(&self) -> f64 {
        let v = 1.0 / (1.0 + self.rate);
        self.expected_recoveries.iter().rev().fold(0.0, |acc, r| (acc + r) * v)
    }

    pub fn el(&self) -> f64 {
        self.gca - self.nca()
    }

    /// Unsecured LGD that makes the decomposition reproduce the recovery value.
    pub fn implied_lgd_unsecured(&self) -> f64 {
        let base = self.guarantor_pd * (self.gca - self.collateral);
        if base <= 0.0 {
            0.0
        } else {
            self.el() / base
        }
    }

    pub fn position(&self, wo_in_period: f64) -> Result<NplPosition> {
        let mut lgd = self.implied_lgd_unsecured();
        // Rounding in the recovery value can push a full loss a few ulps over one.
        if lgd > 1.0 && lgd < 1.0 + 1e-12 {
            lgd = 1.0;
        }
        if lgd < 0.0 && lgd > -1e-12 {
            lgd = 0.0;
        }
        let p = NplPosition {
            id: self.id.clone(),
            gca: self.gca,
            collateral: self.collateral,
            lgd_unsecured: lgd,
            guarantor_pd: self.guarantor_pd,
            cured: self.cured,
            wo_in_period,
        };
        p.validate()?;
        if self.guarantor_pd * (self.gca - self.collateral) <= 0.0 && self.el().abs() > 1e-9 * self.gca.max(1.0) {
            return Err(Error::InvalidExposure {
                id: self.id.clone(),
                reason: "recoveries differ from a fully covered exposure".into(),
            });
        }
        Ok(p)
    }

    /// Moves one period ahead. `realized` is the recovery received at the end
    /// of the period; `revised` replaces the remaining expectations (default:
    /// unchanged). Once nothing further is expected the remaining gross
    /// amount is written off. Returns the new state and the write-off.
    pub fn advance(&self, realized: f64, revised: Option<Vec<f64>>, convention: Unwinding) -> (Self, f64) {
        let mut gca = self.gca - realized;
        if convention == Unwinding::GrossAndNet {
            gca += self.rate * self.nca();
        }
        let remaining = revised.unwrap_or_else(|| self.expected_recoveries.iter().skip(1).copied().collect());
        let mut next = Self {
            gca,
            expected_recoveries: remaining,
            ..self.clone()
        };
        let mut wo = 0.0;
        if next.expected_recoveries.iter().all(|r| *r == 0.0) {
            wo = next.gca.max(0.0);
            next.gca -= wo;
            next.expected_recoveries.clear();
            next.collateral = 0.0;
        }
        next.collateral = next.collateral.min(next.nca()).min(next.gca.max(0.0));
        (next, wo)
    }
}

/// `EL^EOP + wo - EL^BOP` from pool totals.
pub fn npl_dashboard_value(el_eop: f64, el_bop: f64, wo: f64) -> f64 {
    el_eop + wo - el_bop
}

/// Adds back the unwinding interest recognized on the net amount. Under
/// [`Unwinding::GrossAndNet`] the raw dashboard is returned unchanged.
pub fn unwinding_correction(raw: f64, rate: f64, nca_bop: f64, convention: Unwinding) -> f64 {
    match convention {
        Unwinding::NetOnly => raw + rate * nca_bop,
        Unwinding::GrossAndNet => raw,
    }
}

/// Defaulted positions at one observation date.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    pub period: i64,
    pub positions: Vec<NplPosition>,
}

impl PoolState {
    pub fn new(period: i64, positions: Vec<NplPosition>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &positions {
            p.validate()?;
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateExposure { id: p.id.clone() });
            }
        }
        Ok(Self { period, positions })
    }

    pub fn decomposition(&self) -> Result<NcaDecomposition> {
        let mut total = NcaDecomposition::default();
        for p in &self.positions {
            total.add(&p.decompose()?);
        }
        Ok(total)
    }

    pub fn gca(&self) -> f64 {
        self.positions.iter().map(|p| p.gca).sum()
    }

    pub fn write_offs(&self) -> f64 {
        self.positions.iter().map(|p| p.wo_in_period).sum()
    }
}

/// NPL dashboard between two states of the same population. A position at
/// EOP without a BOP record is a new default and is rejected.
pub fn npl_dashboard(bop: &PoolState, eop: &PoolState) -> Result<f64> {
    let known: BTreeSet<&str> = bop.positions.iter().map(|p| p.id.as_str()).collect();
    if let Some(p) = eop.positions.iter().find(|p| !known.contains(p.id.as_str())) {
        return Err(Error::PoolViolation { id: p.id.clone() });
    }
    Ok(npl_dashboard_value(
        eop.decomposition()?.el,
        bop.decomposition()?.el,
        eop.write_offs(),
    ))
}

/// A fixed cohort of defaults observed at consecutive dates.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPool {
    pub cohort_window: (i64, i64),
    members: BTreeSet<String>,
    history: Vec<PoolState>,
    pub rate: f64,
    pub convention: Unwinding,
}

impl StaticPool {
    pub fn new(
        cohort_window: (i64, i64),
        members: impl IntoIterator<Item = String>,
        rate: f64,
        convention: Unwinding,
    ) -> Self {
        Self {
            cohort_window,
            members: members.into_iter().collect(),
            history: Vec::new(),
            rate,
            convention,
        }
    }

    pub fn members(&self) -> &BTreeSet<String> {
        &self.members
    }

    pub fn history(&self) -> &[PoolState] {
        &self.history
    }

    /// Appends the next observation. Positions of non-members are rejected;
    /// members that no longer appear are resolved.
    pub fn push(&mut self, state: PoolState) -> Result<()> {
        if let Some(last) = self.history.last() {
            if state.period != last.period + 1 {
                return Err(Error::HistoryGap {
                    period: last.period + 1,
                });
            }
        }
        if let Some(p) = state.positions.iter().find(|p| !self.members.contains(&p.id)) {
            return Err(Error::PoolViolation { id: p.id.clone() });
        }
        self.history.push(state);
        Ok(())
    }

    fn period_figures(&self) -> Result<Vec<PeriodFigures>> {
        let mut out = Vec::with_capacity(self.history.len());
        for (t, state) in self.history.iter().enumerate() {
            let parts = state.decomposition()?;
            let gca = state.gca();
            let wo = state.write_offs();
            let (dashboard, unwinding, recovered) = if t == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let prev: &PeriodFigures = &out[t - 1];
                let unwinding = self.rate * prev.nca;
                let accrued = match self.convention {
                    Unwinding::NetOnly => 0.0,
                    Unwinding::GrossAndNet => unwinding,
                };
                (
                    npl_dashboard_value(parts.el, prev.parts.el, wo),
                    unwinding,
                    prev.gca + accrued - gca - wo,
                )
            };
            out.push(PeriodFigures {
                parts,
                gca,
                nca: gca - parts.el,
                wo,
                dashboard,
                unwinding,
                recovered,
            });
        }
        Ok(out)
    }

    /// Per-period dashboards `t = 1..`, raw and corrected.
    pub fn dashboards(&self) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .period_figures()?
            .iter()
            .skip(1)
            .map(|f| {
                let corrected = match self.convention {
                    Unwinding::NetOnly => f.dashboard + f.unwinding,
                    Unwinding::GrossAndNet => f.dashboard,
                };
                (f.dashboard, corrected)
            })
            .collect())
    }

    /// `TEL^t` for `t = 0..=horizon`, computed directly and from the
    /// dashboards; the two must agree within `1e-9 GCA^0`.
    pub fn tel(&self, horizon: usize) -> Result<Vec<f64>> {
        let figures = self.period_figures()?;
        if horizon >= figures.len() {
            let start = self.history.first().map_or(0, |s| s.period);
            return Err(Error::HistoryGap {
                period: start + figures.len() as i64,
            });
        }
        let gca0 = figures[0].gca;
        let net = self.convention == Unwinding::NetOnly;
        let mut tel = Vec::with_capacity(horizon + 1);
        let (mut cum_wo, mut cum_interest, mut via_dashboard) = (0.0, 0.0, figures[0].parts.el);
        for (t, f) in figures.iter().enumerate().take(horizon + 1) {
            if t > 0 && net {
                cum_interest += f.unwinding;
                via_dashboard += f.unwinding;
            }
            if t > 0 {
                cum_wo += f.wo;
                via_dashboard += f.dashboard;
            }
            let direct = f.parts.el + cum_wo + cum_interest;
            if (direct - via_dashboard).abs() > 1e-9 * gca0.max(1.0) {
                return Err(Error::Reconciliation {
                    what: "total expected loss",
                    left: direct,
                    right: via_dashboard,
                });
            }
            tel.push(direct);
        }
        Ok(tel)
    }

    /// Figure-style stack per observation date.
    pub fn vintage_report(&self) -> Result<Vec<VintageRow>> {
        let figures = self.period_figures()?;
        let Some(first) = figures.first() else {
            return Ok(Vec::new());
        };
        let gca0 = first.gca;
        let tolerance = 1e-6 * gca0.max(1.0);
        let net = self.convention == Unwinding::NetOnly;
        let (mut wo, mut interest, mut recovered) = (0.0, 0.0, 0.0);
        let mut rows = Vec::with_capacity(figures.len());
        for (f, state) in figures.iter().zip(&self.history) {
            wo += f.wo;
            interest += f.unwinding;
            recovered += f.recovered;
            if (f.parts.el + f.parts.nca() - f.gca).abs() > tolerance {
                return Err(Error::Reconciliation {
                    what: "expected loss plus net parts against gross amount",
                    left: f.parts.el + f.parts.nca(),
                    right: f.gca,
                });
            }
            rows.push(VintageRow {
                period: state.period,
                wo,
                el: f.parts.el,
                interest,
                tel: f.parts.el + wo + if net { interest } else { 0.0 },
                unsec: f.parts.unsec,
                gtee: f.parts.gtee,
                coll: f.parts.coll,
                cure: f.parts.cure,
                recovered,
            });
        }
        // Everything booked is either still carried, recovered or written off.
        for row in &rows {
            let accrued = if net { 0.0 } else { row.interest };
            let booked = row.wo + row.el + row.unsec + row.gtee + row.coll + row.cure + row.recovered;
            if (booked - gca0 - accrued).abs() > tolerance {
                return Err(Error::Reconciliation {
                    what: "vintage stack against initial gross amount",
                    left: booked,
                    right: gca0 + accrued,
                });
            }
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy)]
struct PeriodFigures {
    parts: NcaDecomposition,
    gca: f64,
    nca: f64,
    wo: f64,
    dashboard: f64,
    unwinding: f64,
    recovered: f64,
}

/// One observation date of a vintage. `wo`, `interest` and `recovered` are
/// cumulative since the first date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VintageRow {
    pub period: i64,
    pub wo: f64,
    pub el: f64,
    pub interest: f64,
    pub tel: f64,
    pub unsec: f64,
    pub gtee: f64,
    pub coll: f64,
    pub cure: f64,
    pub recovered: f64,
}

impl VintageRow {
    pub const COLUMNS: [&'static str; 10] = [
        "period", "wo", "el", "interest", "tel", "unsec", "gtee", "coll", "cure", "recovered",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.wo,
            self.el,
            self.interest,
            self.tel,
            self.unsec,
            self.gtee,
            self.coll,
            self.cure,
            self.recovered,
        ]
    }
}

/// Convenience wrapper over [`StaticPool::tel`].
pub fn static_pool_tel(pool: &StaticPool, horizon: usize) -> Result<Vec<f64>> {
    pool.tel(horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Number of periods summed per point.
    pub window: usize,
    /// Consecutive same-sign corrected values that raise a trend flag.
    pub run_length: usize,
    pub rate: f64,
    pub convention: Unwinding,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            window: 12,
            run_length: 6,
            rate: 0.05,
            convention: Unwinding::NetOnly,
        }
    }
}

/// Movements of the population already defaulted at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorPoint {
    pub period: i64,
    pub dashboard: f64,
    pub unwinding: f64,
    pub corrected: f64,
    pub new_defaults: usize,
    pub delta_coll: f64,
    pub delta_unsec: f64,
    pub delta_gtee: f64,
    pub delta_cure: f64,
}

impl MonitorPoint {
    fn add(&mut self, o: &Self) {
        self.dashboard += o.dashboard;
        self.unwinding += o.unwinding;
        self.corrected += o.corrected;
        self.new_defaults += o.new_defaults;
        self.delta_coll += o.delta_coll;
        self.delta_unsec += o.delta_unsec;
        self.delta_gtee += o.delta_gtee;
        self.delta_cure += o.delta_cure;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// Per-period values for the old population.
    pub periods: Vec<MonitorPoint>,
    /// Sums over the trailing window, one per period once the window is full.
    pub windows: Vec<MonitorPoint>,
    /// Trend flag per window point.
    pub trend: Vec<bool>,
}

/// Moving-window view over an open NPL book. New defaults in a period are
/// excluded from that period's movements and join the base from the next.
pub fn moving_window_monitor(states: &[PoolState], config: &MonitorConfig) -> Result<MonitorReport> {
    if config.window == 0 || config.run_length == 0 {
        return Err(Error::Config("window and run length must be positive".into()));
    }
    let mut periods = Vec::new();
    for (k, w) in states.windows(2).enumerate() {
        let (bop, eop) = (&w[0], &w[1]);
        if eop.period != bop.period + 1 {
            return Err(Error::CadenceGap {
                expected: 1,
                found: eop.period - bop.period,
                index: k + 1,
            });
        }
        let after: HashMap<&str, &NplPosition> =
            eop.positions.iter().map(|p| (p.id.as_str(), p)).collect();
        let mut point = MonitorPoint {
            period: eop.period,
            ..MonitorPoint::default()
        };
        let mut before = BTreeSet::new();
        let (mut el_bop, mut el_eop, mut wo, mut nca_bop) = (0.0, 0.0, 0.0, 0.0);
        for p in &bop.positions {
            before.insert(p.id.as_str());
            let b = p.decompose()?;
            el_bop += b.el;
            nca_bop += p.gca - b.el;
            let e = match after.get(p.id.as_str()) {
                Some(q) => {
                    wo += q.wo_in_period;
                    q.decompose()?
                }
                None => NcaDecomposition::default(),
            };
            el_eop += e.el;
            point.delta_coll += e.coll - b.coll;
            point.delta_unsec += e.unsec - b.unsec;
            point.delta_gtee += e.gtee - b.gtee;
            point.delta_cure += e.cure - b.cure;
        }
        point.new_defaults = eop
            .positions
            .iter()
            .filter(|p| !before.contains(p.id.as_str()))
            .count();
        point.dashboard = npl_dashboard_value(el_eop, el_bop, wo);
        point.unwinding = config.rate * nca_bop;
        point.corrected = unwinding_correction(point.dashboard, config.rate, nca_bop, config.convention);
        periods.push(point);
    }
    let windows: Vec<MonitorPoint> = periods
        .windows(config.window)
        .map(|w| {
            let mut acc = MonitorPoint {
                period: w[w.len() - 1].period,
                ..MonitorPoint::default()
            };
            w.iter().for_each(|p| acc.add(p));
            acc
        })
        .collect();
    let corrected: Vec<f64> = windows.iter().map(|p| p.corrected).collect();
    Ok(MonitorReport {
        trend: run_flags(&corrected, config.run_length),
        periods,
        windows,
    })
}

/// `true` where the trailing `run_length` values are all strictly positive
/// or all strictly negative.
pub fn run_flags(values: &[f64], run_length: usize) -> Vec<bool> {
    let (mut pos, mut neg) = (0usize, 0usize);
    values
        .iter()
        .map(|v| {
            pos = if *v > 0.0 { pos + 1 } else { 0 };
            neg = if *v < 0.0 { neg + 1 } else { 0 };
            pos >= run_length || neg >= run_length
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Indices of values further than `k` median absolute deviations from the median.
pub fn mad_peaks(values: &[f64], k: f64) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = median(&sorted);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| (*v - m).abs() > k * mad)
        .map(|(i, _)| i)
        .collect()
}

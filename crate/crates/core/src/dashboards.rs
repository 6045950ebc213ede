//! Impact-of-risk identities, the performing-book dashboard with its
//! PD/EAD/LGD split, loss series and a compound-binomial null test.
//!
//! Exposures are linked between two snapshots by id and classified by their
//! status at both dates:
//!
//! | BOP            | EOP            | class            |
//! |----------------|----------------|------------------|
//! | performing     | performing     | performing       |
//! | performing     | non-performing | new NPL          |
//! | non-performing | either         | old NPL          |
//! | absent         | performing     | new volume       |
//! | present        | absent         | derecognized     |
//!
//! A non-performing exposure without a BOP record cannot be classified and
//! is rejected. Cured exposures (non-performing to performing) keep their
//! write-offs in the old-NPL class while their EOP expected loss is part of
//! the performing book.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::rng::substream;
use crate::{Error, Result};

const EL_TOLERANCE: f64 = 1e-9;

/// Exposure and performing LGD captured at the default event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultTimeValues {
    pub ead: f64,
    pub lgd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureRecord {
    pub id: String,
    pub performing: bool,
    pub ead: f64,
    pub lgd: f64,
    pub pd: f64,
    /// `pd * ead * lgd` when performing, `ead * lgd` otherwise.
    pub el: f64,
    /// Write-offs booked since the previous snapshot.
    pub wo_in_period: f64,
    pub default_time: Option<DefaultTimeValues>,
}

impl ExposureRecord {
    pub fn performing(id: impl Into<String>, ead: f64, lgd: f64, pd: f64) -> Self {
        Self {
            id: id.into(),
            performing: true,
            ead,
            lgd,
            pd,
            el: pd * ead * lgd,
            wo_in_period: 0.0,
            default_time: None,
        }
    }

    pub fn non_performing(id: impl Into<String>, ead: f64, lgd: f64) -> Self {
        Self {
            id: id.into(),
            performing: false,
            ead,
            lgd,
            pd: 1.0,
            el: ead * lgd,
            wo_in_period: 0.0,
            default_time: None,
        }
    }

    pub fn with_write_off(mut self, wo: f64) -> Self {
        self.wo_in_period = wo;
        self
    }

    pub fn with_default_values(mut self, ead: f64, lgd: f64) -> Self {
        self.default_time = Some(DefaultTimeValues { ead, lgd });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidExposure {
                id: self.id.clone(),
                reason,
            })
        };
        for (name, v) in [("lgd", self.lgd), ("pd", self.pd)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        for (name, v) in [("ead", self.ead), ("write-off", self.wo_in_period)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} {v} must be finite and non-negative"));
            }
        }
        if let Some(d) = self.default_time {
            if !(d.ead.is_finite() && d.ead >= 0.0 && (0.0..=1.0).contains(&d.lgd)) {
                return bad(format!("default-time values ({}, {}) out of range", d.ead, d.lgd));
            }
        }
        let expected = if self.performing {
            self.pd * self.ead * self.lgd
        } else {
            self.ead * self.lgd
        };
        if (self.el - expected).abs() > EL_TOLERANCE * self.ead.max(1.0) {
            return bad(format!("el {} does not match {}", self.el, expected));
        }
        Ok(())
    }

    fn bop_loss(&self) -> f64 {
        self.ead * self.lgd
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSnapshot {
    pub as_of: i64,
    pub exposures: Vec<ExposureRecord>,
}

impl PortfolioSnapshot {
    /// Validates every record and rejects duplicate ids.
    pub fn new(as_of: i64, exposures: Vec<ExposureRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(exposures.len());
        for e in &exposures {
            e.validate()?;
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateExposure { id: e.id.clone() });
            }
        }
        Ok(Self { as_of, exposures })
    }

    pub fn total_el(&self) -> f64 {
        self.exposures.iter().map(|e| e.el).sum()
    }

    pub fn total_ead(&self) -> f64 {
        self.exposures.iter().map(|e| e.ead).sum()
    }

    pub fn total_write_offs(&self) -> f64 {
        self.exposures.iter().map(|e| e.wo_in_period).sum()
    }

    pub fn performing_el(&self) -> f64 {
        self.exposures.iter().filter(|e| e.performing).map(|e| e.el).sum()
    }

    pub fn non_performing_el(&self) -> f64 {
        self.exposures.iter().filter(|e| !e.performing).map(|e| e.el).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Performing,
    NewNpl,
    OldNpl,
    Cured,
    NewVolume,
}

/// EOP records paired with their BOP counterparts, classified by status.
#[derive(Debug)]
pub struct Linked<'a> {
    pub pairs: Vec<(Transition, Option<&'a ExposureRecord>, &'a ExposureRecord)>,
    /// BOP records with no EOP counterpart.
    pub derecognized: Vec<&'a ExposureRecord>,
}

pub fn link<'a>(bop: &'a PortfolioSnapshot, eop: &'a PortfolioSnapshot) -> Result<Linked<'a>> {
    let by_id: HashMap<&str, &ExposureRecord> =
        bop.exposures.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut matched = HashSet::with_capacity(eop.exposures.len());
    let mut pairs = Vec::with_capacity(eop.exposures.len());
    for e in &eop.exposures {
        let prior = by_id.get(e.id.as_str()).copied();
        let class = match (prior.map(|p| p.performing), e.performing) {
            (Some(true), true) => Transition::Performing,
            (Some(true), false) => Transition::NewNpl,
            (Some(false), false) => Transition::OldNpl,
            (Some(false), true) => Transition::Cured,
            (None, true) => Transition::NewVolume,
            (None, false) => return Err(Error::UnmatchedExposure { id: e.id.clone() }),
        };
        if prior.is_some() {
            matched.insert(e.id.as_str());
        }
        pairs.push((class, prior, e));
    }
    let derecognized = bop
        .exposures
        .iter()
        .filter(|e| !matched.contains(e.id.as_str()))
        .collect();
    Ok(Linked { pairs, derecognized })
}

pub fn impact_of_risk(cor: f64, delta_shortfall: f64) -> f64 {
    cor + delta_shortfall
}

/// `EL^EOP - EL^BOP + wo`.
pub fn ior_from_el(el_eop: f64, el_bop: f64, wo: f64) -> f64 {
    el_eop - el_bop + wo
}

/// The steering form `EL^EOP = EL^BOP + IoR - wo`.
pub fn el_from_ior(el_bop: f64, ior: f64, wo: f64) -> f64 {
    el_bop + ior - wo
}

fn new_npl_consumption(linked: &Linked) -> f64 {
    linked
        .pairs
        .iter()
        .filter(|(c, _, _)| *c == Transition::NewNpl)
        .map(|(_, _, e)| e.el + e.wo_in_period)
        .sum()
}

/// `EL_newNPL^EOP + wo_newNPL - EL_PL^BOP`.
pub fn pl_dashboard(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot) -> Result<f64> {
    let linked = link(bop, eop)?;
    Ok(new_npl_consumption(&linked) - bop.performing_el())
}

/// Monthly variant with the annual BOP expected loss scaled down linearly.
pub fn monthly_pl_dashboard(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot) -> Result<f64> {
    let linked = link(bop, eop)?;
    Ok(new_npl_consumption(&linked) - bop.performing_el() / 12.0)
}

/// `EL_oldNPL^EOP + wo_oldNPL - EL_NPL^BOP`, with cured exposures counted
/// in the old-NPL class for write-offs only.
pub fn npl_dashboard(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot) -> Result<f64> {
    let linked = link(bop, eop)?;
    Ok(old_npl_consumption(&linked) - bop.non_performing_el())
}

fn old_npl_consumption(linked: &Linked) -> f64 {
    linked
        .pairs
        .iter()
        .map(|(c, _, e)| match c {
            Transition::OldNpl => e.el + e.wo_in_period,
            Transition::Cured => e.wo_in_period,
            _ => 0.0,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    /// Flag when `|Δ_LGD|` exceeds this share of `Σ EAD^DEF LGD^DEF`.
    pub large_lgd_shift: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { large_lgd_shift: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlSplit {
    pub delta_pd: f64,
    pub delta_ead: f64,
    /// Includes the write-offs of new NPL so that the split sums to the dashboard.
    pub delta_lgd: f64,
    /// Movement of new defaults lacking default-time values.
    pub unsplit: f64,
    pub missing_default_values: Vec<String>,
    pub large_lgd_shift: bool,
}

impl PlSplit {
    pub fn total(&self) -> f64 {
        self.delta_pd + self.delta_ead + self.delta_lgd + self.unsplit
    }
}

/// Splits the dashboard into a PD backtest weighted with BOP values, the EAD
/// drift up to default and the LGD drift from default to EOP.
pub fn pl_split(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot, config: &SplitConfig) -> Result<PlSplit> {
    let linked = link(bop, eop)?;
    let (mut at_bop, mut delta_ead, mut delta_lgd, mut unsplit, mut at_def) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut missing = Vec::new();
    for (class, prior, e) in &linked.pairs {
        if *class != Transition::NewNpl {
            continue;
        }
        let prior = prior.expect("new NPL has a BOP record");
        let bop_loss = prior.bop_loss();
        let realized = e.el + e.wo_in_period;
        at_bop += bop_loss;
        match e.default_time {
            Some(d) => {
                let def_loss = d.ead * d.lgd;
                at_def += def_loss;
                delta_ead += def_loss - bop_loss;
                delta_lgd += realized - def_loss;
            }
            None => {
                unsplit += realized - bop_loss;
                missing.push(e.id.clone());
            }
        }
    }
    Ok(PlSplit {
        delta_pd: at_bop - bop.performing_el(),
        delta_ead,
        delta_lgd,
        unsplit,
        missing_default_values: missing,
        large_lgd_shift: delta_lgd.abs() > config.large_lgd_shift * at_def,
    })
}

/// Three components of the impact of risk plus whatever the partition
/// leaves unexplained, which is the write-offs on exposures performing at
/// both dates or newly originated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IorDecomposition {
    pub el_pl_eop: f64,
    pub pl_dashboard: f64,
    pub npl_dashboard: f64,
    pub ior: f64,
    pub residual: f64,
}

impl IorDecomposition {
    pub fn components_sum(&self) -> f64 {
        self.el_pl_eop + self.pl_dashboard + self.npl_dashboard
    }
}

pub fn ior_decomposition(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot) -> Result<IorDecomposition> {
    let linked = link(bop, eop)?;
    let el_pl_eop = eop.performing_el();
    let pl = new_npl_consumption(&linked) - bop.performing_el();
    let npl = old_npl_consumption(&linked) - bop.non_performing_el();
    let ior = ior_from_el(eop.total_el(), bop.total_el(), eop.total_write_offs());
    let residual: f64 = linked
        .pairs
        .iter()
        .filter(|(c, _, _)| matches!(c, Transition::Performing | Transition::NewVolume))
        .map(|(_, _, e)| e.wo_in_period)
        .sum();
    Ok(IorDecomposition {
        el_pl_eop,
        pl_dashboard: pl,
        npl_dashboard: npl,
        ior,
        residual,
    })
}

/// Which amount a new default contributes to the loss series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossBasis {
    /// EOP expected loss plus write-offs of new NPL.
    #[default]
    Realized,
    /// `EAD^BOP LGD^BOP` of new NPL, free of EAD and LGD drift.
    BopWeighted,
}

pub fn period_loss(bop: &PortfolioSnapshot, eop: &PortfolioSnapshot, basis: LossBasis) -> Result<f64> {
    let linked = link(bop, eop)?;
    Ok(match basis {
        LossBasis::Realized => new_npl_consumption(&linked),
        LossBasis::BopWeighted => linked
            .pairs
            .iter()
            .filter(|(c, _, _)| *c == Transition::NewNpl)
            .map(|(_, p, _)| p.expect("new NPL has a BOP record").bop_loss())
            .sum(),
    })
}

/// Per-period loss over consecutive snapshots. The spacing of the first
/// pair fixes the cadence; any other spacing is a gap.
pub fn loss_series(snapshots: &[PortfolioSnapshot], basis: LossBasis) -> Result<Vec<f64>> {
    if snapshots.len() < 2 {
        return Err(Error::EmptySeries);
    }
    let cadence = snapshots[1].as_of - snapshots[0].as_of;
    snapshots
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let step = w[1].as_of - w[0].as_of;
            if step != cadence || step <= 0 {
                return Err(Error::CadenceGap {
                    expected: cadence,
                    found: step,
                    index: k + 1,
                });
            }
            period_loss(&w[0], &w[1], basis)
        })
        .collect()
}

/// Options of a [`DashboardReport`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportConfig {
    pub split: SplitConfig,
    /// Compare new-NPL consumption with a twelfth of the annual BOP expected
    /// loss. The PD component absorbs the scaling so the split still adds up;
    /// the three-way IoR identity holds for annual periods only.
    pub monthly: bool,
    pub loss_basis: LossBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DashboardReport {
    pub period: (i64, i64),
    pub pl_dashboard: f64,
    pub delta_pd: f64,
    pub delta_ead: f64,
    pub delta_lgd: f64,
    pub unsplit: f64,
    pub npl_dashboard: f64,
    pub el_pl_eop: f64,
    pub ior: f64,
    /// Present when provisions are supplied.
    pub cor: Option<f64>,
    pub delta_shortfall: Option<f64>,
    pub loss: f64,
    pub residual: f64,
    pub warnings: Vec<ReportWarning>,
}

/// Conditions worth reporting that do not invalidate a [`DashboardReport`].
#[derive(Debug, Clone, PartialEq)]
pub enum ReportWarning {
    /// New NPL without default-time values; their change stays unsplit.
    MissingDefaultValues { count: usize, unsplit: f64 },
    /// The LGD component exceeds the configured share of the dashboard.
    LargeLgdShift { delta_lgd: f64 },
    /// Write-offs on performing exposures, outside the three-way identity.
    UncoveredWriteOffs { residual: f64 },
}

impl ReportWarning {
    /// Whether the warning concerns the PD/EAD/LGD split only.
    pub fn concerns_split(&self) -> bool {
        !matches!(self, ReportWarning::UncoveredWriteOffs { .. })
    }
}

impl std::fmt::Display for ReportWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReportWarning::MissingDefaultValues { count, unsplit } => write!(
                f,
                "default-time values missing for {count} new NPL; {unsplit} left unsplit"
            ),
            ReportWarning::LargeLgdShift { delta_lgd } => write!(
                f,
                "LGD shift between default and period end is large: {delta_lgd}"
            ),
            ReportWarning::UncoveredWriteOffs { residual } => write!(
                f,
                "write-offs on performing exposures not covered by the decomposition: {residual}"
            ),
        }
    }
}

impl DashboardReport {
    /// `provisions` are total provisions at BOP and EOP; shortfall is EL
    /// minus provisions at each date.
    pub fn compute(
        bop: &PortfolioSnapshot,
        eop: &PortfolioSnapshot,
        provisions: Option<(f64, f64)>,
        config: &ReportConfig,
    ) -> Result<Self> {
        let decomposition = ior_decomposition(bop, eop)?;
        let mut split = pl_split(bop, eop, &config.split)?;
        let mut pl = decomposition.pl_dashboard;
        if config.monthly {
            split.delta_pd += bop.performing_el() - bop.performing_el() / 12.0;
            pl = monthly_pl_dashboard(bop, eop)?;
        }
        let loss = period_loss(bop, eop, config.loss_basis)?;
        let wo = eop.total_write_offs();
        let (cor, delta_shortfall) = match provisions {
            Some((p_bop, p_eop)) => {
                let sf_bop = bop.total_el() - p_bop;
                let sf_eop = eop.total_el() - p_eop;
                (Some(p_eop - p_bop + wo), Some(sf_eop - sf_bop))
            }
            None => (None, None),
        };
        let mut warnings = Vec::new();
        if !split.missing_default_values.is_empty() {
            warnings.push(ReportWarning::MissingDefaultValues {
                count: split.missing_default_values.len(),
                unsplit: split.unsplit,
            });
        }
        if split.large_lgd_shift {
            warnings.push(ReportWarning::LargeLgdShift {
                delta_lgd: split.delta_lgd,
            });
        }
        if decomposition.residual != 0.0 {
            warnings.push(ReportWarning::UncoveredWriteOffs {
                residual: decomposition.residual,
            });
        }
        Ok(Self {
            period: (bop.as_of, eop.as_of),
            pl_dashboard: pl,
            delta_pd: split.delta_pd,
            delta_ead: split.delta_ead,
            delta_lgd: split.delta_lgd,
            unsplit: split.unsplit,
            npl_dashboard: decomposition.npl_dashboard,
            el_pl_eop: decomposition.el_pl_eop,
            ior: decomposition.ior,
            cor,
            delta_shortfall,
            loss,
            residual: decomposition.residual,
            warnings,
        })
    }
}

/// `Σ weight_i loss_i` over scenarios whose probabilities sum to one.
pub fn probability_weighted_el(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "scenario losses and weights",
            left: losses.len(),
            right: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Domain {
            what: "scenario weight",
            value: w,
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightSum { sum });
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
}

/// Loss model of a homogeneous-PD book: `K` defaults out of `n`, each
/// contributing an `EAD * LGD` drawn from the portfolio's weights. With a
/// positive asset correlation the default probability is mixed over a
/// single Gaussian factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundBinomial {
    pub exposure_count: u64,
    pub pd: f64,
    pub weights: Vec<f64>,
    pub correlation: f64,
}

impl CompoundBinomial {
    pub fn new(exposure_count: u64, pd: f64, weights: Vec<f64>) -> Result<Self> {
        if !(pd > 0.0 && pd < 1.0) {
            return Err(Error::Domain {
                what: "period PD",
                value: pd,
            });
        }
        if weights.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain {
                what: "EAD * LGD weight",
                value: w,
            });
        }
        Ok(Self {
            exposure_count,
            pd,
            weights,
            correlation: 0.0,
        })
    }

    pub fn with_correlation(mut self, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Domain {
                what: "asset correlation",
                value: rho,
            });
        }
        self.correlation = rho;
        Ok(self)
    }

    /// Default probability conditional on the systematic factor `z`.
    pub fn conditional_pd(&self, z: f64) -> f64 {
        conditional_pd(self.pd, self.correlation, z)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let pd = if self.correlation == 0.0 {
            self.pd
        } else {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            self.conditional_pd(z)
        };
        let defaults = Binomial::new(self.exposure_count, pd)
            .expect("probability checked at construction")
            .sample(rng);
        (0..defaults)
            .map(|_| self.weights[rng.random_range(0..self.weights.len())])
            .sum()
    }
}

/// Gaussian-threshold default probability given the common factor `z`.
pub fn conditional_pd(pd: f64, rho: f64, z: f64) -> f64 {
    if rho == 0.0 {
        return pd;
    }
    let normal = Normal::standard();
    let threshold = normal.inverse_cdf(pd);
    normal.cdf((threshold - rho.sqrt() * z) / (1.0 - rho).sqrt())
}

const BLOCK: usize = 4096;

/// Sorted Monte Carlo sample of period losses.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    sorted: Vec<f64>,
    pub seed: u64,
}

impl NullDistribution {
    /// Draws are generated in fixed blocks, each from its own seeded
    /// substream, so the sample does not depend on the number of workers.
    pub fn simulate(model: &CompoundBinomial, draws: usize, seed: u64) -> Self {
        let blocks = draws.div_ceil(BLOCK);
        let mut sorted: Vec<f64> = (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let mut rng = substream(seed, &[b as u64]);
                let n = BLOCK.min(draws - b * BLOCK);
                (0..n).map(move |_| model.sample(&mut rng)).collect::<Vec<_>>()
            })
            .collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted, seed }
    }

    pub fn draws(&self) -> usize {
        self.sorted.len()
    }

    /// Two-sided mid-p value of an observed loss and the tail it falls in.
    pub fn p_value(&self, x: f64) -> (f64, Tail) {
        let n = self.sorted.len() as f64;
        let below = self.sorted.partition_point(|v| *v < x) as f64;
        let at_or_below = self.sorted.partition_point(|v| *v <= x) as f64;
        let ties = at_or_below - below;
        let lower = (below + 0.5 * ties) / n;
        let upper = (n - at_or_below + 0.5 * ties) / n;
        let tail = if lower <= upper { Tail::Low } else { Tail::High };
        ((2.0 * lower.min(upper)).min(1.0), tail)
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let idx = ((q * self.sorted.len() as f64).ceil() as usize).clamp(1, self.sorted.len()) - 1;
        self.sorted[idx]
    }

    pub fn test(&self, series: &[f64], alpha: f64) -> Result<TestResult> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain {
                what: "significance level",
                value: alpha,
            });
        }
        if series.len() < MIN_SERIES_LEN {
            return Err(Error::Domain {
                what: "series length",
                value: series.len() as f64,
            });
        }
        let mut p_values = Vec::with_capacity(series.len());
        let mut flags = Vec::with_capacity(series.len());
        for &x in series {
            let (p, tail) = self.p_value(x);
            p_values.push(p);
            flags.push((p < alpha).then_some(tail));
        }
        let flagged = flags.iter().filter(|f| f.is_some()).count();
        Ok(TestResult {
            p_values,
            flags,
            flagged_fraction: flagged as f64 / series.len() as f64,
            alpha,
            draws: self.draws(),
            seed: self.seed,
            workers: rayon::current_num_threads(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub p_values: Vec<f64>,
    /// Tail of each flagged period, `None` inside the band.
    pub flags: Vec<Option<Tail>>,
    pub flagged_fraction: f64,
    pub alpha: f64,
    pub draws: usize,
    pub seed: u64,
    pub workers: usize,
}

pub const MIN_SERIES_LEN: usize = 12;
pub const MIN_NULL_DRAWS: usize = 100_000;

/// Tests each period of `series` against independent binomial defaults.
pub fn binomial_null_test(
    series: &[f64],
    exposure_count: u64,
    pd_period: f64,
    ead_lgd_weights: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    let model = CompoundBinomial::new(exposure_count, pd_period, ead_lgd_weights.to_vec())?;
    NullDistribution::simulate(&model, MIN_NULL_DRAWS, seed).test(series, alpha)
}

//! Run configuration: one TOML file with a section per module, then
//! `IACVLAB_<SECTION>__<KEY>` environment overrides.

use iacv_core::dashboards::{LossBasis, ReportConfig, SplitConfig};
use iacv_core::npl::{MonitorConfig, Unwinding};
use iacv_core::simulator::HazardShape;
use iacv_core::valuation::TwelveMonthConvention;
use iacv_core::{ScenarioConfig, StagingConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "IACVLAB_";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub valuation: ValuationConfig,
    pub staging: StagingConfig,
    pub dashboard: DashboardConfig,
    pub npl: NplConfig,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationConfig {
    pub twelve_month: TwelveMonthConvention,
    /// Shape used for contracts without a profile: `neutral`, `bullet` or
    /// `delayed-<periods>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_profile: Option<String>,
    /// Annual risk level the default shape is normalized to.
    pub risk_level: f64,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            twelve_month: TwelveMonthConvention::default(),
            default_profile: None,
            risk_level: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DashboardConfig {
    pub large_lgd_shift: f64,
    pub loss_basis: LossBasis,
    pub monthly: bool,
}

impl Default for DashboardConfig {
    fn default() -> Self {
        Self {
            large_lgd_shift: SplitConfig::default().large_lgd_shift,
            loss_basis: LossBasis::default(),
            monthly: false,
        }
    }
}

impl DashboardConfig {
    pub fn report(&self, monthly: bool) -> ReportConfig {
        ReportConfig {
            split: SplitConfig {
                large_lgd_shift: self.large_lgd_shift,
            },
            monthly: monthly || self.monthly,
            loss_basis: self.loss_basis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NplConfig {
    /// Per-period discount rate of expected recoveries.
    pub rate: f64,
    pub convention: Unwinding,
    pub window: usize,
    pub run_length: usize,
}

impl Default for NplConfig {
    fn default() -> Self {
        let m = MonitorConfig::default();
        Self {
            rate: m.rate,
            convention: m.convention,
            window: m.window,
            run_length: m.run_length,
        }
    }
}

/// Parses `neutral`, `bullet` or `delayed-<k>`.
pub fn parse_shape(name: &str) -> Result<HazardShape> {
    match name {
        "neutral" => Ok(HazardShape::Neutral),
        "bullet" => Ok(HazardShape::Bullet),
        other => other
            .strip_prefix("delayed-")
            .and_then(|k| k.parse().ok())
            .map(|periods| HazardShape::Delayed { periods })
            .ok_or_else(|| CliError::Config(format!("unknown profile shape {other:?}"))),
    }
}

fn env_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `IACVLAB_SECTION__KEY=value` pairs. Values are read as TOML
/// literals when they parse, as plain strings otherwise.
pub fn apply_overrides(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<()> {
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let path = &key[ENV_PREFIX.len()..];
        let Some((section, field)) = path.split_once("__") else {
            return Err(CliError::Config(format!(
                "{key}: expected {ENV_PREFIX}<SECTION>__<KEY>"
            )));
        };
        let section = table
            .entry(section.to_ascii_lowercase())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(section) = section else {
            return Err(CliError::Config(format!("{key}: not a section")));
        };
        section.insert(field.to_ascii_lowercase(), env_value(&raw));
    }
    Ok(())
}

/// The effective configuration and its canonical text.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub canonical: String,
}

impl Loaded {
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical.as_bytes()))
    }
}

pub fn load(
    text: Option<&str>,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<Loaded> {
    let mut table: toml::Table = match text {
        Some(t) => t.parse().map_err(|e| CliError::Config(format!("{e}")))?,
        None => toml::Table::new(),
    };
    apply_overrides(&mut table, vars)?;
    let config: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("{e}")))?;
    if let Some(shape) = &config.valuation.default_profile {
        parse_shape(shape)?;
    }
    let canonical = toml::to_string(&config).map_err(|e| CliError::Config(format!("{e}")))?;
    Ok(Loaded { config, canonical })
}

//! The four subcommands. Each returns the files it wants written and the
//! warnings it raised; `run` does the writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use iacv_core::dashboards::{DashboardReport, PortfolioSnapshot};
use iacv_core::npl::{moving_window_monitor, MonitorConfig, NplExposure, PoolState, StaticPool, VintageRow};
use iacv_core::simulator::{
    fig4_1, fig5_1, fig7_2, figure_scenario, generate_book, simulate_npl_book, simulate_snapshots,
    simulate_static_pool, Book, PoolSimulation,
};
use iacv_core::valuation::{gca_trajectory, normalize_profile};
use iacv_core::{cashflow, ExposureTrajectory, RiskProfile, ScenarioConfig};

use crate::config::{parse_shape, Loaded};
use crate::error::{CliError, Result};
use crate::formats::{self, num, CsvOut};
use crate::manifest::RunManifest;

/// Relative tolerance for comparing amounts that should agree.
pub const AMOUNT_TOLERANCE: f64 = 1e-9;

/// Relative tolerance of the recovery cross-check in `vintage`; expected
/// recoveries are usually rounded in the source systems.
const RECOVERY_TOLERANCE: f64 = 1e-6;

pub const VALUE_COLUMNS: [&str; 12] = [
    "id",
    "t",
    "effective_rate",
    "risk_adjusted_rate",
    "gca",
    "iacv",
    "nca",
    "provision",
    "el_12m",
    "el_lifetime",
    "bucket",
    "delta",
];

/// Where an output goes: a file, or standard output when `path` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub text: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<Output>,
    pub warnings: Vec<String>,
}

/// What every command needs besides its own arguments.
pub struct Context {
    pub loaded: Loaded,
    pub timestamp: Option<String>,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, self.loaded.digest(), self.timestamp.clone())
    }
}

/// An input file read once, so the digest and the parse see the same bytes.
pub struct Input {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(Self {
            name: path.display().to_string(),
            bytes: std::fs::read(path).map_err(|e| CliError::io(path, e))?,
        })
    }
}

fn out_file(dir: &Path, name: &str, text: String) -> Output {
    Output {
        path: Some(dir.join(name)),
        text,
    }
}

// ---------------------------------------------------------------- value

pub struct ValueArgs {
    pub contracts: PathBuf,
    pub profiles: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn value(ctx: &Context, args: &ValueArgs) -> Result<Outcome> {
    let config = &ctx.loaded.config.valuation;
    let mut manifest = ctx.manifest("value");
    let contracts_in = Input::read(&args.contracts)?;
    manifest.input("contracts", &contracts_in.bytes);
    let contracts = formats::read_contracts(&contracts_in.name, &contracts_in.bytes)?;
    let mut profiles = match &args.profiles {
        Some(path) => {
            let input = Input::read(path)?;
            manifest.input("profiles", &input.bytes);
            formats::read_profiles(&input.name, &input.bytes)?
        }
        None => BTreeMap::new(),
    };
    let shape = config.default_profile.as_deref().map(parse_shape).transpose()?;

    let mut outcome = Outcome::default();
    let mut out = CsvOut::new(&manifest.render(), &VALUE_COLUMNS);
    for (line, contract) in &contracts {
        let at_line = |message: String| CliError::schema(&contracts_in.name, *line, message);
        let id = contract.id();
        let profile = match (profiles.remove(id), shape) {
            (Some(losses), _) => RiskProfile::new(losses),
            (None, Some(shape)) => default_profile(contract, shape.weights(contract.term()), config.risk_level),
            (None, None) => {
                return Err(at_line(format!(
                    "contract {id}: no profile given and no valuation.default_profile configured"
                )))
            }
        }
        .map_err(|e| at_line(format!("contract {id}: {e}")))?;
        let trajectory = ExposureTrajectory::build(contract, &profile, config.twelve_month, None)
            .map_err(|e| at_line(format!("contract {id}: {e}")))?;
        for t in 0..trajectory.len() {
            out.row([
                id.to_string(),
                t.to_string(),
                num(trajectory.effective_rate),
                num(trajectory.risk_adjusted_rate),
                num(trajectory.gca[t]),
                num(trajectory.iacv[t]),
                num(trajectory.nca[t]),
                num(trajectory.provision[t]),
                num(trajectory.el_12m[t]),
                num(trajectory.el_lifetime[t]),
                trajectory.bucket[t].number().to_string(),
                num(trajectory.delta[t]),
            ]);
        }
    }
    for id in profiles.keys() {
        outcome.warnings.push(format!("profile {id} has no matching contract"));
    }
    outcome.outputs.push(Output {
        path: args.out.clone(),
        text: out.finish(),
    });
    Ok(outcome)
}

/// A profile of the configured shape normalized to `annual_risk_level`.
fn default_profile(
    contract: &iacv_core::LoanContract,
    shape: Vec<f64>,
    annual_risk_level: f64,
) -> iacv_core::Result<RiskProfile> {
    let unit = contract.period_unit();
    let i = cashflow::solve_effective_rate(contract)?.rate;
    let r = i - unit.from_annual(unit.to_annual(i) - annual_risk_level);
    let gca = gca_trajectory(contract, i)?;
    normalize_profile(&shape, r, &gca, i - r)
}

// ------------------------------------------------------------ dashboard

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Table,
}

pub struct DashboardArgs {
    pub bop: Option<PathBuf>,
    pub eop: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub bop_date: Option<i64>,
    pub eop_date: Option<i64>,
    pub monthly: bool,
    pub split: bool,
    pub format: Format,
    pub provisions: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
}

fn pick(snapshots: Vec<PortfolioSnapshot>, date: Option<i64>, input: &Input, flag: &str) -> Result<PortfolioSnapshot> {
    match date {
        Some(d) => snapshots
            .into_iter()
            .find(|s| s.as_of == d)
            .ok_or_else(|| CliError::Usage(format!("{}: no snapshot with as_of {d}", input.name))),
        None if snapshots.len() == 1 => Ok(snapshots.into_iter().next().expect("one snapshot")),
        None if snapshots.is_empty() => Err(CliError::schema(&input.name, 1, "no snapshot rows")),
        None => Err(CliError::Usage(format!(
            "{} holds {} dates; choose one with {flag}",
            input.name,
            snapshots.len()
        ))),
    }
}

fn dashboard_columns(split: bool) -> Vec<&'static str> {
    let mut columns = vec!["bop_as_of", "eop_as_of", "pl_dashboard"];
    if split {
        columns.extend(["delta_pd", "delta_ead", "delta_lgd", "unsplit"]);
    }
    columns.extend(["npl_dashboard", "el_pl_eop", "ior", "cor", "delta_shortfall", "loss", "residual"]);
    columns
}

fn dashboard_values(r: &DashboardReport, split: bool) -> Vec<String> {
    let mut values = vec![r.period.0.to_string(), r.period.1.to_string(), num(r.pl_dashboard)];
    if split {
        values.extend([num(r.delta_pd), num(r.delta_ead), num(r.delta_lgd), num(r.unsplit)]);
    }
    values.extend([
        num(r.npl_dashboard),
        num(r.el_pl_eop),
        num(r.ior),
        r.cor.map(num).unwrap_or_default(),
        r.delta_shortfall.map(num).unwrap_or_default(),
        num(r.loss),
        num(r.residual),
    ]);
    values
}

fn render_table(manifest: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let width = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut out = manifest.to_string();
    for (k, row) in rows.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for (c, v) in columns.iter().zip(row) {
            out.push_str(&format!("{c:<width$}  {v}\n"));
        }
    }
    out
}

pub fn dashboard(ctx: &Context, args: &DashboardArgs) -> Result<Outcome> {
    let report_config = ctx.loaded.config.dashboard.report(args.monthly);
    let mut manifest = ctx.manifest("dashboard");
    let pairs: Vec<(PortfolioSnapshot, PortfolioSnapshot)> = match (&args.series, &args.bop, &args.eop) {
        (Some(path), None, None) => {
            let input = Input::read(path)?;
            manifest.input("series", &input.bytes);
            let (snapshots, _) = formats::read_snapshots(&input.name, &input.bytes)?;
            if snapshots.len() < 2 {
                return Err(CliError::Usage(format!("{}: a series needs at least two dates", input.name)));
            }
            snapshots.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
        }
        (None, Some(bop), Some(eop)) => {
            let bop_in = Input::read(bop)?;
            let eop_in = Input::read(eop)?;
            manifest.input("bop", &bop_in.bytes);
            manifest.input("eop", &eop_in.bytes);
            let (b, _) = formats::read_snapshots(&bop_in.name, &bop_in.bytes)?;
            let (e, _) = formats::read_snapshots(&eop_in.name, &eop_in.bytes)?;
            vec![(
                pick(b, args.bop_date, &bop_in, "--bop-date")?,
                pick(e, args.eop_date, &eop_in, "--eop-date")?,
            )]
        }
        _ => return Err(CliError::Usage("give either --bop and --eop, or --series".into())),
    };

    let mut outcome = Outcome::default();
    let mut rows = Vec::with_capacity(pairs.len());
    for (bop, eop) in &pairs {
        let report = DashboardReport::compute(bop, eop, args.provisions, &report_config)?;
        for w in report.warnings.iter().filter(|w| args.split || !w.concerns_split()) {
            outcome
                .warnings
                .push(format!("period {} to {}: {w}", report.period.0, report.period.1));
        }
        rows.push(dashboard_values(&report, args.split));
    }
    let columns = dashboard_columns(args.split);
    let text = match args.format {
        Format::Csv => {
            let mut out = CsvOut::new(&manifest.render(), &columns);
            rows.into_iter().for_each(|r| out.row(r));
            out.finish()
        }
        Format::Table => render_table(&manifest.render(), &columns, &rows),
    };
    outcome.outputs.push(Output {
        path: args.out.clone(),
        text,
    });
    Ok(outcome)
}

// -------------------------------------------------------------- vintage

pub struct VintageArgs {
    pub pools: PathBuf,
    pub observations: PathBuf,
    pub recoveries: Option<PathBuf>,
    pub out_dir: PathBuf,
}

pub const VINTAGE_COLUMNS: [&str; 4] = ["pool", "period", "component", "value"];
pub const TEL_COLUMNS: [&str; 5] = ["pool", "period", "tel", "dashboard", "corrected"];

pub fn vintage(ctx: &Context, args: &VintageArgs) -> Result<Outcome> {
    let npl = &ctx.loaded.config.npl;
    let mut manifest = ctx.manifest("vintage");
    let pools_in = Input::read(&args.pools)?;
    let obs_in = Input::read(&args.observations)?;
    manifest.input("pools", &pools_in.bytes);
    manifest.input("observations", &obs_in.bytes);
    let recoveries = match &args.recoveries {
        Some(path) => {
            let input = Input::read(path)?;
            manifest.input("recoveries", &input.bytes);
            Some(formats::read_recoveries(&input.name, &input.bytes)?)
        }
        None => None,
    };
    let pools = formats::read_pools(&pools_in.name, &pools_in.bytes)?;
    let observations = formats::read_observations(&obs_in.name, &obs_in.bytes)?;

    // pool -> as_of -> (first line, positions)
    let mut grouped: BTreeMap<&str, BTreeMap<i64, (u64, Vec<iacv_core::npl::NplPosition>)>> = BTreeMap::new();
    let default_dates: BTreeMap<&str, i64> = pools.iter().map(|(id, d)| (id.as_str(), *d)).collect();
    for obs in &observations {
        let Some(default_date) = default_dates.get(obs.pool.as_str()) else {
            return Err(CliError::schema(&obs_in.name, obs.line, format!("unknown pool {}", obs.pool)));
        };
        if obs.as_of < *default_date {
            return Err(CliError::schema(
                &obs_in.name,
                obs.line,
                format!("observation at {} precedes the pool's default date {default_date}", obs.as_of),
            ));
        }
        grouped
            .entry(obs.pool.as_str())
            .or_default()
            .entry(obs.as_of)
            .or_insert_with(|| (obs.line, Vec::new()))
            .1
            .push(obs.position.clone());
    }

    let mut outcome = Outcome::default();
    let header = manifest.render();
    let mut vintage_out = CsvOut::new(&header, &VINTAGE_COLUMNS);
    let mut tel_out = CsvOut::new(&header, &TEL_COLUMNS);
    for (pool_id, default_date) in &pools {
        let Some(dates) = grouped.remove(pool_id.as_str()) else {
            outcome.warnings.push(format!("pool {pool_id} has no observations"));
            continue;
        };
        let first = dates.values().next().expect("non-empty group");
        let members = first.1.iter().map(|p| p.id.clone());
        let mut pool = StaticPool::new((*default_date, *default_date), members, npl.rate, npl.convention);
        for (as_of, (line, positions)) in dates {
            let state = PoolState::new(as_of, positions)
                .map_err(|e| CliError::schema(&obs_in.name, line, format!("pool {pool_id}: {e}")))?;
            pool.push(state)
                .map_err(|e| CliError::schema(&obs_in.name, line, format!("pool {pool_id}: {e}")))?;
        }
        if let Some(recoveries) = &recoveries {
            check_recoveries(pool_id, *default_date, &pool, recoveries, npl.rate, &mut outcome.warnings)?;
        }
        let rows = pool.vintage_report()?;
        for row in &rows {
            for (component, value) in VintageRow::COLUMNS[1..].iter().zip(row.values()) {
                vintage_out.row([pool_id.clone(), row.period.to_string(), component.to_string(), num(value)]);
            }
        }
        let horizon = pool.history().len() - 1;
        let tel = pool.tel(horizon)?;
        let dashboards = pool.dashboards()?;
        for (t, state) in pool.history().iter().enumerate() {
            let (raw, corrected) = match t {
                0 => (String::new(), String::new()),
                _ => (num(dashboards[t - 1].0), num(dashboards[t - 1].1)),
            };
            tel_out.row([pool_id.clone(), state.period.to_string(), num(tel[t]), raw, corrected]);
        }
    }
    outcome.outputs.push(out_file(&args.out_dir, "vintage.csv", vintage_out.finish()));
    outcome.outputs.push(out_file(&args.out_dir, "tel.csv", tel_out.finish()));
    Ok(outcome)
}

/// Compares the first observed net amount of each member with the present
/// value of its expected recoveries.
fn check_recoveries(
    pool_id: &str,
    default_date: i64,
    pool: &StaticPool,
    recoveries: &BTreeMap<String, Vec<f64>>,
    rate: f64,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let first = &pool.history()[0];
    let elapsed = (first.period - default_date) as usize;
    for position in &first.positions {
        let Some(recs) = recoveries.get(&position.id) else {
            continue;
        };
        let remaining = recs.get(elapsed..).unwrap_or_default().to_vec();
        let pv = NplExposure::new(position.id.clone(), position.gca, remaining, rate)
            .map(|e| e.nca())
            .unwrap_or(f64::NAN);
        let parts = position.decompose()?;
        let nca = position.gca - parts.el;
        if !((pv - nca).abs() <= RECOVERY_TOLERANCE * position.gca.max(1.0)) {
            warnings.push(format!(
                "pool {pool_id}, exposure {}: recoveries are worth {pv} but the first observation implies {nca}",
                position.id
            ));
        }
    }
    Ok(())
}

// ------------------------------------------------------------- simulate

pub struct SimulateArgs {
    pub figure: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

fn book_files(book: &Book, header: &str, dir: &Path) -> [Output; 2] {
    let mut contracts = CsvOut::new(header, &formats::CONTRACTS);
    let mut profiles = CsvOut::new(header, &formats::PROFILES);
    for e in &book.exposures {
        let c = &e.contract;
        for (t, cf) in c.cash_flows().iter().enumerate() {
            contracts.row([
                c.id().to_string(),
                c.period_unit().to_string(),
                num(c.principal()),
                (t + 1).to_string(),
                num(*cf),
            ]);
        }
        for (t, r) in e.profile.expected_losses().iter().enumerate() {
            profiles.row([c.id().to_string(), (t + 1).to_string(), num(*r)]);
        }
    }
    [
        out_file(dir, "contracts.csv", contracts.finish()),
        out_file(dir, "profiles.csv", profiles.finish()),
    ]
}

fn snapshot_file(snapshots: &[PortfolioSnapshot], header: &str, dir: &Path) -> Output {
    let mut out = CsvOut::new(header, &formats::SNAPSHOTS);
    for s in snapshots {
        for e in &s.exposures {
            let (ead_def, lgd_def) = e
                .default_time
                .map_or((String::new(), String::new()), |d| (num(d.ead), num(d.lgd)));
            out.row([
                s.as_of.to_string(),
                e.id.clone(),
                e.performing.to_string(),
                num(e.ead),
                num(e.lgd),
                num(e.pd),
                num(e.el),
                num(e.wo_in_period),
                ead_def,
                lgd_def,
            ]);
        }
    }
    out_file(dir, "snapshots.csv", out.finish())
}

fn pool_files(sim: &PoolSimulation, header: &str, dir: &Path) -> [Output; 3] {
    let mut pools = CsvOut::new(header, &formats::POOLS);
    pools.row(["P0".to_string(), sim.pool.cohort_window.0.to_string()]);
    let mut recoveries = CsvOut::new(header, &formats::RECOVERIES);
    for path in &sim.paths {
        for (t, rec) in path.expected_total().iter().enumerate() {
            recoveries.row([path.id.clone(), (t + 1).to_string(), num(*rec)]);
        }
    }
    let mut observations = CsvOut::new(header, &formats::OBSERVATIONS);
    for o in &sim.observations {
        let p = &o.position;
        observations.row([
            o.pool.clone(),
            o.as_of.to_string(),
            p.id.clone(),
            num(p.gca),
            num(p.collateral),
            num(p.lgd_unsecured),
            num(p.guarantor_pd),
            p.cured.to_string(),
            num(p.wo_in_period),
        ]);
    }
    [
        out_file(dir, "pools.csv", pools.finish()),
        out_file(dir, "recoveries.csv", recoveries.finish()),
        out_file(dir, "observations.csv", observations.finish()),
    ]
}

fn simulate_pool(config: &ScenarioConfig, header: &str, dir: &Path, outcome: &mut Outcome) -> Result<PoolSimulation> {
    let sim = simulate_static_pool(config)?;
    if sim.clamped > 0 {
        outcome.warnings.push(format!(
            "{} realized recoveries were cut back to keep the net amount below the gross",
            sim.clamped
        ));
    }
    outcome.outputs.extend(pool_files(&sim, header, dir));
    Ok(sim)
}

fn figure_file(columns: &[&str], rows: Vec<Vec<String>>, header: &str, dir: &Path) -> Output {
    let mut out = CsvOut::new(header, columns);
    rows.into_iter().for_each(|r| out.row(r));
    out_file(dir, "figure.csv", out.finish())
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<Outcome> {
    let mut config = match &args.figure {
        Some(name) => figure_scenario(name).map_err(|e| CliError::Usage(e.to_string()))?,
        None => ctx.loaded.config.scenario.clone(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let command = match &args.figure {
        Some(name) => format!("simulate --figure {name}"),
        None => "simulate".to_string(),
    };
    let mut manifest = ctx.manifest(&command);
    manifest.seed = Some(config.seed);
    let header = manifest.render();
    let dir = args.out_dir.as_path();
    let mut outcome = Outcome::default();

    let Some(name) = args.figure.as_deref() else {
        outcome.outputs.extend(book_files(&generate_book(&config)?, &header, dir));
        outcome.outputs.push(snapshot_file(&simulate_snapshots(&config)?, &header, dir));
        simulate_pool(&config, &header, dir, &mut outcome)?;
        return Ok(outcome);
    };
    match name {
        "fig4_1" => {
            let fig = fig4_1(&config)?;
            let rows = (0..fig.gca.len())
                .map(|t| {
                    vec![
                        t.to_string(),
                        num(fig.gca[t]),
                        num(fig.iacv_neutral[t]),
                        num(fig.iacv_shaped[t]),
                        num(fig.gap[t]),
                    ]
                })
                .collect();
            outcome.outputs.push(figure_file(
                &["t", "gca", "iacv_neutral", "iacv_shaped", "gap"],
                rows,
                &header,
                dir,
            ));
            outcome.outputs.extend(book_files(&generate_book(&config)?, &header, dir));
        }
        "fig5_1" => {
            let fig = fig5_1(&config, &ctx.loaded.config.staging)?;
            let rows = (0..fig.gca.len())
                .map(|t| {
                    vec![
                        t.to_string(),
                        num(fig.risk_level[t]),
                        num(fig.gca[t]),
                        num(fig.iacv[t]),
                        num(fig.nca[t]),
                        num(fig.provision[t]),
                        fig.bucket[t].number().to_string(),
                        num(fig.delta[t]),
                    ]
                })
                .collect();
            outcome.outputs.push(figure_file(
                &["t", "risk_level", "gca", "iacv", "nca", "provision", "bucket", "delta"],
                rows,
                &header,
                dir,
            ));
            outcome.outputs.extend(book_files(&generate_book(&config)?, &header, dir));
        }
        "fig7_1" => {
            let sim = simulate_pool(&config, &header, dir, &mut outcome)?;
            let rows = sim
                .pool
                .vintage_report()?
                .iter()
                .map(|r| std::iter::once(r.period.to_string()).chain(r.values().map(num)).collect())
                .collect();
            outcome
                .outputs
                .push(figure_file(&VintageRow::COLUMNS, rows, &header, dir));
        }
        "fig7_2" => {
            let fig = fig7_2(&config)?;
            let rows = fig
                .dashboard
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let period = k + 1;
                    vec![
                        period.to_string(),
                        num(*d),
                        (period >= fig.stationary_from).to_string(),
                        fig.peaks.contains(&period).to_string(),
                    ]
                })
                .collect();
            outcome.outputs.push(figure_file(
                &["period", "dashboard", "stationary", "peak"],
                rows,
                &header,
                dir,
            ));
        }
        "fig7_3" => {
            let npl = &ctx.loaded.config.npl;
            let states = simulate_npl_book(&config)?;
            let monitor = MonitorConfig {
                window: npl.window,
                run_length: npl.run_length,
                rate: config.period_rate(),
                convention: npl.convention,
            };
            let report = moving_window_monitor(&states, &monitor)?;
            let rows = report
                .windows
                .iter()
                .zip(&report.trend)
                .map(|(w, trend)| {
                    vec![
                        w.period.to_string(),
                        num(w.dashboard),
                        num(w.corrected),
                        w.new_defaults.to_string(),
                        num(w.delta_coll),
                        num(w.delta_unsec),
                        num(w.delta_gtee),
                        num(w.delta_cure),
                        trend.to_string(),
                    ]
                })
                .collect();
            outcome.outputs.push(figure_file(
                &[
                    "period",
                    "dashboard",
                    "corrected",
                    "new_defaults",
                    "delta_coll",
                    "delta_unsec",
                    "delta_gtee",
                    "delta_cure",
                    "trend",
                ],
                rows,
                &header,
                dir,
            ));
        }
        other => unreachable!("figure_scenario accepted {other}"),
    }
    Ok(outcome)
}

//! CSV schemas read and written by the commands.
//!
//! Input files may carry `#` comment lines, so reports (which start with
//! their manifest) can be fed back in. Numbers are written with the
//! shortest representation that round-trips to the same `f64`.

use std::collections::BTreeMap;
use std::str::FromStr;

use csv::StringRecord;
use iacv_core::cashflow::{LoanContract, PeriodUnit};
use iacv_core::dashboards::{DefaultTimeValues, ExposureRecord, PortfolioSnapshot};
use iacv_core::npl::NplPosition;

use crate::error::{CliError, Result};

pub const CONTRACTS: [&str; 5] = ["id", "period_unit", "principal", "t", "cf"];
pub const PROFILES: [&str; 3] = ["id", "t", "R"];
pub const SNAPSHOTS: [&str; 10] = [
    "as_of", "id", "performing", "ead", "lgd", "pd", "el", "wo_in_period", "ead_def", "lgd_def",
];
/// Leading snapshot columns; the two default-time columns may be omitted.
const SNAPSHOTS_REQUIRED: usize = 8;
pub const POOLS: [&str; 2] = ["id", "default_date"];
pub const RECOVERIES: [&str; 3] = ["id", "t", "rec"];
pub const OBSERVATIONS: [&str; 9] = [
    "pool", "as_of", "id", "gca", "coll", "lgd_u", "guarantor_pd", "cured", "wo",
];

/// Formats a number for output. Negative zero is written as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// A parsed CSV file with its header validated.
pub struct Table {
    name: String,
    pub has_optional: bool,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    /// Parses `bytes`; the header must equal `columns`, or its first
    /// `required` entries when the rest are optional.
    pub fn parse(name: &str, bytes: &[u8], columns: &[&str], required: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let header_line = reader.position().line().max(1);
        let header = reader
            .headers()
            .map_err(|e| CliError::schema(name, header_line, e.to_string()))?
            .clone();
        let got: Vec<&str> = header.iter().collect();
        let has_optional = if got == columns {
            true
        } else if got == columns[..required] {
            false
        } else {
            let line = reader.position().line().saturating_sub(1).max(1);
            return Err(CliError::schema(
                name,
                line,
                format!("expected header {}, found {}", columns.join(","), got.join(",")),
            ));
        };
        let mut rows = Vec::new();
        let mut record = StringRecord::new();
        loop {
            let line = reader.position().line();
            match reader.read_record(&mut record) {
                Ok(true) => {
                    let line = record.position().map_or(line, |p| p.line());
                    if record.len() != header.len() {
                        return Err(CliError::schema(
                            name,
                            line,
                            format!("expected {} fields, found {}", header.len(), record.len()),
                        ));
                    }
                    rows.push((line, record.clone()));
                }
                Ok(false) => break,
                Err(e) => {
                    let line = e.position().map_or(line, |p| p.line());
                    return Err(CliError::schema(name, line, e.to_string()));
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            has_optional,
            rows,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(move |(line, record)| Row {
            table: &self.name,
            line: *line,
            record,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub struct Row<'a> {
    table: &'a str,
    pub line: u64,
    record: &'a StringRecord,
}

impl Row<'_> {
    pub fn error(&self, message: impl Into<String>) -> CliError {
        CliError::schema(self.table, self.line, message)
    }

    pub fn text(&self, index: usize) -> &str {
        &self.record[index]
    }

    pub fn parse<T: FromStr>(&self, index: usize, column: &str) -> Result<T> {
        let raw = self.text(index);
        raw.parse()
            .map_err(|_| self.error(format!("column {column}: cannot parse {raw:?}")))
    }

    /// A finite number.
    pub fn number(&self, index: usize, column: &str) -> Result<f64> {
        let x: f64 = self.parse(index, column)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.error(format!("column {column}: {x} is not finite")))
        }
    }

    pub fn optional_number(&self, index: usize, column: &str) -> Result<Option<f64>> {
        if self.text(index).is_empty() {
            Ok(None)
        } else {
            self.number(index, column).map(Some)
        }
    }

    pub fn flag(&self, index: usize, column: &str) -> Result<bool> {
        match self.text(index) {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(self.error(format!("column {column}: expected true/false, found {other:?}"))),
        }
    }

    pub fn id(&self, index: usize) -> Result<String> {
        let id = self.text(index);
        if id.is_empty() {
            Err(self.error("empty id"))
        } else {
            Ok(id.to_string())
        }
    }
}

struct ContractRows {
    line: u64,
    unit: PeriodUnit,
    principal: f64,
    flows: BTreeMap<usize, f64>,
}

/// Contracts in order of first appearance, each with the line of its first row.
pub fn read_contracts(name: &str, bytes: &[u8]) -> Result<Vec<(u64, LoanContract)>> {
    let table = Table::parse(name, bytes, &CONTRACTS, CONTRACTS.len())?;
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, ContractRows> = BTreeMap::new();
    for row in table.rows() {
        let id = row.id(0)?;
        let unit: PeriodUnit = row.parse(1, "period_unit")?;
        let principal = row.number(2, "principal")?;
        let t: usize = row.parse(3, "t")?;
        let cf = row.number(4, "cf")?;
        let entry = by_id.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            ContractRows {
                line: row.line,
                unit,
                principal,
                flows: BTreeMap::new(),
            }
        });
        if entry.unit != unit || entry.principal != principal {
            return Err(row.error(format!("contract {id}: period_unit and principal must not change between rows")));
        }
        if entry.flows.insert(t, cf).is_some() {
            return Err(row.error(format!("contract {id}: duplicate t = {t}")));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let rows = by_id.remove(&id).expect("recorded id");
            let term = rows.flows.keys().next_back().copied().unwrap_or(0);
            if term == 0 {
                return Err(CliError::schema(name, rows.line, format!("contract {id}: no flows after t = 0")));
            }
            let mut flows = vec![0.0; term];
            let mut upfront = 0.0;
            for (t, cf) in &rows.flows {
                if *t == 0 {
                    upfront = *cf;
                } else {
                    flows[t - 1] = *cf;
                }
            }
            let contract = LoanContract::with_origination_flow(id, rows.principal, upfront, flows, rows.unit)
                .map_err(|e| CliError::schema(name, rows.line, e.to_string()))?;
            Ok((rows.line, contract))
        })
        .collect()
}

/// Expected losses per contract id; `R` in row `t` is the loss of period `t`.
pub fn read_profiles(name: &str, bytes: &[u8]) -> Result<BTreeMap<String, Vec<f64>>> {
    let table = Table::parse(name, bytes, &PROFILES, PROFILES.len())?;
    let mut out: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in table.rows() {
        let id = row.id(0)?;
        let t: usize = row.parse(1, "t")?;
        if t == 0 {
            return Err(row.error("t starts at 1"));
        }
        let loss = row.number(2, "R")?;
        if out.entry(id.clone()).or_default().insert(t, loss).is_some() {
            return Err(row.error(format!("profile {id}: duplicate t = {t}")));
        }
    }
    Ok(out
        .into_iter()
        .map(|(id, losses)| {
            let term = losses.keys().next_back().copied().unwrap_or(0);
            let mut v = vec![0.0; term];
            for (t, r) in losses {
                v[t - 1] = r;
            }
            (id, v)
        })
        .collect())
}

/// Snapshots grouped by `as_of`, ascending. Also reports whether the
/// default-time columns were present.
pub fn read_snapshots(name: &str, bytes: &[u8]) -> Result<(Vec<PortfolioSnapshot>, bool)> {
    let table = Table::parse(name, bytes, &SNAPSHOTS, SNAPSHOTS_REQUIRED)?;
    let mut groups: BTreeMap<i64, (u64, Vec<ExposureRecord>)> = BTreeMap::new();
    for row in table.rows() {
        let as_of: i64 = row.parse(0, "as_of")?;
        let default_time = if table.has_optional {
            match (row.optional_number(8, "ead_def")?, row.optional_number(9, "lgd_def")?) {
                (Some(ead), Some(lgd)) => Some(DefaultTimeValues { ead, lgd }),
                (None, None) => None,
                _ => return Err(row.error("ead_def and lgd_def must both be given or both blank")),
            }
        } else {
            None
        };
        let record = ExposureRecord {
            id: row.id(1)?,
            performing: row.flag(2, "performing")?,
            ead: row.number(3, "ead")?,
            lgd: row.number(4, "lgd")?,
            pd: row.number(5, "pd")?,
            el: row.number(6, "el")?,
            wo_in_period: row.number(7, "wo_in_period")?,
            default_time,
        };
        record.validate().map_err(|e| row.error(e.to_string()))?;
        groups.entry(as_of).or_insert_with(|| (row.line, Vec::new())).1.push(record);
    }
    let snapshots = groups
        .into_iter()
        .map(|(as_of, (line, records))| {
            PortfolioSnapshot::new(as_of, records).map_err(|e| CliError::schema(name, line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((snapshots, table.has_optional))
}

pub fn read_pools(name: &str, bytes: &[u8]) -> Result<Vec<(String, i64)>> {
    let table = Table::parse(name, bytes, &POOLS, POOLS.len())?;
    let mut seen = BTreeMap::new();
    table
        .rows()
        .map(|row| {
            let id = row.id(0)?;
            if seen.insert(id.clone(), ()).is_some() {
                return Err(row.error(format!("duplicate pool {id}")));
            }
            Ok((id, row.parse(1, "default_date")?))
        })
        .collect()
}

/// Expected recoveries per exposure; `rec` in row `t` is due `t` periods
/// after the pool's default date.
pub fn read_recoveries(name: &str, bytes: &[u8]) -> Result<BTreeMap<String, Vec<f64>>> {
    let table = Table::parse(name, bytes, &RECOVERIES, RECOVERIES.len())?;
    let mut out: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in table.rows() {
        let id = row.id(0)?;
        let t: usize = row.parse(1, "t")?;
        if t == 0 {
            return Err(row.error("t starts at 1"));
        }
        let rec = row.number(2, "rec")?;
        if rec < 0.0 {
            return Err(row.error("negative recovery"));
        }
        if out.entry(id.clone()).or_default().insert(t, rec).is_some() {
            return Err(row.error(format!("recoveries {id}: duplicate t = {t}")));
        }
    }
    Ok(out
        .into_iter()
        .map(|(id, recs)| {
            let term = recs.keys().next_back().copied().unwrap_or(0);
            let mut v = vec![0.0; term];
            for (t, r) in recs {
                v[t - 1] = r;
            }
            (id, v)
        })
        .collect())
}

/// One observation row with its line number.
pub struct Observation {
    pub line: u64,
    pub pool: String,
    pub as_of: i64,
    pub position: NplPosition,
}

pub fn read_observations(name: &str, bytes: &[u8]) -> Result<Vec<Observation>> {
    let table = Table::parse(name, bytes, &OBSERVATIONS, OBSERVATIONS.len())?;
    table
        .rows()
        .map(|row| {
            let position = NplPosition {
                id: row.id(2)?,
                gca: row.number(3, "gca")?,
                collateral: row.number(4, "coll")?,
                lgd_unsecured: row.number(5, "lgd_u")?,
                guarantor_pd: row.number(6, "guarantor_pd")?,
                cured: row.flag(7, "cured")?,
                wo_in_period: row.number(8, "wo")?,
            };
            position.validate().map_err(|e| row.error(e.to_string()))?;
            Ok(Observation {
                line: row.line,
                pool: row.id(0)?,
                as_of: row.parse(1, "as_of")?,
                position,
            })
        })
        .collect()
}

/// Accumulates CSV output behind a manifest header.
pub struct CsvOut {
    writer: csv::Writer<Vec<u8>>,
    header: String,
}

impl CsvOut {
    pub fn new(manifest: &str, columns: &[&str]) -> Self {
        let mut out = Self {
            writer: csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new()),
            header: manifest.to_string(),
        };
        out.row(columns.iter().map(|c| c.to_string()));
        out
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let body = self.writer.into_inner().expect("writing to memory");
        let mut out = self.header;
        out.push_str(&String::from_utf8(body).expect("fields are UTF-8"));
        out
    }
}

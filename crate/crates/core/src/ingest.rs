//! Price-panel parsing and log returns.
//!
//! # Price file format
//!
//! Delimited text, UTF-8, `,` separator, one header row then one row per
//! trading date:
//!
//! ```text
//! date,<id1>,<id2>,...,<idN>
//! 2006-01-03,35.84,41.02,...,12.97
//! 2006-01-04,36.12,,...,13.05
//! ```
//!
//! - the first header field is exactly `date`; the remaining fields are
//!   unique instrument identifiers
//! - dates are ISO-8601 (`YYYY-MM-DD`) and strictly increasing
//! - prices are decimal literals, strictly positive and finite
//! - an empty field is a missing observation, handled per [`MissingPolicy`]
//!
//! [`write_prices`] emits exactly this format; floats are printed with the
//! shortest representation that round-trips, so a written table re-parses
//! bit-identically.

use std::io::{Read, Write};

use chrono::NaiveDate;
use ndarray::Array2;

use crate::error::{Error, Result};

/// How rows with missing prices are handled during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Drop the date across all instruments (default; keeps the panel
    /// rectangular without inventing values).
    #[default]
    DropDate,
    /// Carry the last observed price forward. Dates before an instrument's
    /// first observation are dropped, since there is nothing to carry.
    ForwardFill,
}

/// Aligned daily closing prices for `n` instruments over `T` dates.
///
/// Input prices are assumed already adjusted for corporate actions.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    instrument_ids: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: Array2<f64>, // shape (n, T)
}

impl PriceTable {
    /// Builds a table, checking every invariant: unique ids, strictly
    /// increasing dates, rectangular shape, strictly positive finite prices,
    /// and at least two dates.
    pub fn new(
        instrument_ids: Vec<String>,
        dates: Vec<NaiveDate>,
        prices: Array2<f64>,
    ) -> Result<Self> {
        for (k, id) in instrument_ids.iter().enumerate() {
            if instrument_ids[..k].contains(id) {
                return Err(Error::DuplicateInstrument { id: id.clone() });
            }
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidConfig {
                    reason: format!("dates not strictly increasing: {} then {}", w[0], w[1]),
                });
            }
        }
        if dates.len() < 2 {
            return Err(Error::TooFewDates {
                remaining: dates.len(),
            });
        }
        if prices.nrows() != instrument_ids.len() || prices.ncols() != dates.len() {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "price matrix is {}x{}, expected {}x{}",
                    prices.nrows(),
                    prices.ncols(),
                    instrument_ids.len(),
                    dates.len()
                ),
            });
        }
        if let Some(((i, t), &v)) = prices
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "price for '{}' at date index {t} is {v}; prices must be positive and finite",
                    instrument_ids[i]
                ),
            });
        }
        Ok(Self {
            instrument_ids,
            dates,
            prices,
        })
    }

    pub fn instrument_ids(&self) -> &[String] {
        &self.instrument_ids
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Shape `(n, T)`: rows are instruments, columns are dates.
    pub fn prices(&self) -> &Array2<f64> {
        &self.prices
    }

    pub fn num_instruments(&self) -> usize {
        self.instrument_ids.len()
    }

    pub fn num_dates(&self) -> usize {
        self.dates.len()
    }
}

/// Log returns at a fixed interval, aligned with the source table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    instrument_ids: Vec<String>,
    return_interval: usize,
    returns: Array2<f64>, // shape (n, T - interval)
}

impl ReturnSeries {
    pub fn instrument_ids(&self) -> &[String] {
        &self.instrument_ids
    }

    pub fn return_interval(&self) -> usize {
        self.return_interval
    }

    /// Shape `(n, T - interval)`.
    pub fn returns(&self) -> &Array2<f64> {
        &self.returns
    }

    pub fn num_instruments(&self) -> usize {
        self.instrument_ids.len()
    }

    pub fn num_observations(&self) -> usize {
        self.returns.ncols()
    }

    /// Used by tests and the synthetic generator to wrap a raw return
    /// matrix; all entries must be finite.
    pub fn from_raw(
        instrument_ids: Vec<String>,
        return_interval: usize,
        returns: Array2<f64>,
    ) -> Result<Self> {
        if returns.nrows() != instrument_ids.len() {
            return Err(Error::SizeMismatch {
                left: returns.nrows(),
                right: instrument_ids.len(),
            });
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig {
                reason: "return matrix contains non-finite values".into(),
            });
        }
        Ok(Self {
            instrument_ids,
            return_interval,
            returns,
        })
    }
}

/// Parses the documented price-file format from any reader.
pub fn parse_prices<R: Read>(raw: R, policy: MissingPolicy) -> Result<PriceTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(raw);

    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 || headers.get(0) != Some("date") {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "header must be 'date,<id1>,<id2>,...' with at least one instrument".into(),
        });
    }
    let instrument_ids: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    for (k, id) in instrument_ids.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("empty instrument id in header column {}", k + 2),
            });
        }
        if instrument_ids[..k].contains(id) {
            return Err(Error::DuplicateInstrument { id: id.clone() });
        }
    }
    let n = instrument_ids.len();

    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let date_field = record.get(0).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|_| Error::MalformedRow {
                line,
                reason: format!("'{date_field}' is not an ISO-8601 date"),
            })?;
        if let Some((prev, _)) = rows.last() {
            if date == *prev {
                return Err(Error::DuplicateDate {
                    line,
                    date: date.to_string(),
                });
            }
            if date < *prev {
                return Err(Error::NonIncreasingDate {
                    line,
                    date: date.to_string(),
                    previous: prev.to_string(),
                });
            }
        }
        let mut prices = Vec::with_capacity(n);
        for (k, field) in record.iter().skip(1).enumerate() {
            if field.is_empty() {
                prices.push(None);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!(
                    "'{}' is not a decimal price (column '{}')",
                    field, instrument_ids[k]
                ),
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositivePrice {
                    line,
                    instrument: instrument_ids[k].clone(),
                    value,
                });
            }
            prices.push(Some(value));
        }
        rows.push((date, prices));
    }

    let cleaned = apply_missing_policy(rows, n, policy);
    if cleaned.len() < 2 {
        return Err(Error::TooFewDates {
            remaining: cleaned.len(),
        });
    }

    let t = cleaned.len();
    let mut prices = Array2::zeros((n, t));
    let mut dates = Vec::with_capacity(t);
    for (col, (date, row)) in cleaned.into_iter().enumerate() {
        dates.push(date);
        for (i, v) in row.into_iter().enumerate() {
            prices[(i, col)] = v;
        }
    }
    PriceTable::new(instrument_ids, dates, prices)
}

fn apply_missing_policy(
    rows: Vec<(NaiveDate, Vec<Option<f64>>)>,
    n: usize,
    policy: MissingPolicy,
) -> Vec<(NaiveDate, Vec<f64>)> {
    match policy {
        MissingPolicy::DropDate => rows
            .into_iter()
            .filter_map(|(date, row)| {
                row.into_iter()
                    .collect::<Option<Vec<f64>>>()
                    .map(|r| (date, r))
            })
            .collect(),
        MissingPolicy::ForwardFill => {
            let mut last: Vec<Option<f64>> = vec![None; n];
            let mut out = Vec::with_capacity(rows.len());
            for (date, row) in rows {
                for (slot, v) in last.iter_mut().zip(&row) {
                    if v.is_some() {
                        *slot = *v;
                    }
                }
                if let Some(filled) = last.iter().copied().collect::<Option<Vec<f64>>>() {
                    out.push((date, filled));
                }
            }
            out
        }
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = err.into_kind() {
                Error::Io(io)
            } else {
                unreachable!()
            }
        }
        _ => Error::MalformedRow {
            line,
            reason: err.to_string(),
        },
    }
}

/// Writes a table in the documented price-file format.
pub fn write_prices<W: Write>(table: &PriceTable, mut out: W) -> Result<()> {
    write!(out, "date")?;
    for id in table.instrument_ids() {
        write!(out, ",{id}")?;
    }
    writeln!(out)?;
    for (t, date) in table.dates().iter().enumerate() {
        write!(out, "{}", date.format("%Y-%m-%d"))?;
        for i in 0..table.num_instruments() {
            write!(out, ",{}", table.prices()[(i, t)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Log price changes over `interval` trading days:
/// `returns[i][t] = ln(prices[i][t + interval]) - ln(prices[i][t])`.
pub fn log_returns(table: &PriceTable, interval: usize) -> Result<ReturnSeries> {
    let t_len = table.num_dates();
    if interval == 0 || interval >= t_len {
        return Err(Error::IntervalTooLong {
            interval,
            dates: t_len,
        });
    }
    let n = table.num_instruments();
    let cols = t_len - interval;
    let mut returns = Array2::zeros((n, cols));
    let prices = table.prices();
    for i in 0..n {
        for t in 0..cols {
            returns[(i, t)] = prices[(i, t + interval)].ln() - prices[(i, t)].ln();
        }
    }
    Ok(ReturnSeries {
        instrument_ids: table.instrument_ids.clone(),
        return_interval: interval,
        returns,
    })
}

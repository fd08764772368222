//! Financial-loss regime monitoring: price ingestion, loss transformation,
//! null estimation from a historical window, and sequential e-process
//! detection with threshold crossings.
//!
//! Sign convention: losses are positive. The daily loss between consecutive
//! close prices is `L = -(S_next - S_prev) / S_prev`, so a price drop from
//! 100 to 90 is the loss `+0.10`. This inverts the usual return convention
//! on purpose: the monitored one-sided alternative is "losses exceed the
//! historical mean", and evidence accumulates when prices fall.
//!
//! Each loss is dated by the later of the two prices that produced it.
//! Missing calendar days are not imputed; losses are computed between
//! consecutive available rows.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::eprocess::{first_crossing, BettingStrategy, EProcess, EProcessError};
use crate::evidence::{EvidenceError, Hypothesis, MeanVarSpec, ShapeClass};
use crate::sig12;

/// Errors from ingestion, estimation, or detection.
#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse date {value:?}")]
    UnparsableDate { row: usize, value: String },
    #[error("row {row}: cannot parse price {value:?}")]
    UnparsablePrice { row: usize, value: String },
    #[error("row {row}: price must be positive, got {value}")]
    NonPositivePrice { row: usize, value: f64 },
    #[error("duplicate date {date} (rows {first} and {second})")]
    DuplicateDate {
        date: NaiveDate,
        first: usize,
        second: usize,
    },
    #[error("price series needs at least two rows")]
    TooShort,
    #[error("dates and values have different lengths")]
    LengthMismatch,
    #[error("loss dates must be strictly increasing")]
    UnsortedLosses,
    #[error("estimation window holds {count} observations, need at least 2")]
    WindowTooSmall { count: usize },
    #[error("estimation window has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    EProcess(#[from] EProcessError),
}

/// Header names for the date and price columns of an input CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub date: String,
    pub price: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            date: "date".to_string(),
            price: "close".to_string(),
        }
    }
}

/// Dated close prices: strictly increasing dates, positive prices,
/// at least two rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series from unordered rows. Sorting is stable, so equal
    /// dates are detected against their original 1-based input positions.
    pub fn new(rows: Vec<(NaiveDate, f64)>) -> Result<Self, MonitorError> {
        let numbered = rows
            .into_iter()
            .enumerate()
            .map(|(i, (d, p))| (d, p, i + 1))
            .collect();
        Self::from_numbered_rows(numbered)
    }

    /// `rows` carry the source row number used in error messages.
    fn from_numbered_rows(
        mut rows: Vec<(NaiveDate, f64, usize)>,
    ) -> Result<Self, MonitorError> {
        if rows.len() < 2 {
            return Err(MonitorError::TooShort);
        }
        for &(_, price, row) in &rows {
            if !(price > 0.0) || !price.is_finite() {
                return Err(MonitorError::NonPositivePrice { row, value: price });
            }
        }
        rows.sort_by_key(|&(date, _, _)| date);
        for pair in rows.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(MonitorError::DuplicateDate {
                    date: pair[0].0,
                    first: pair[0].2,
                    second: pair[1].2,
                });
            }
        }
        Ok(Self {
            dates: rows.iter().map(|r| r.0).collect(),
            prices: rows.iter().map(|r| r.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least two rows
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Fractional daily losses `-(S_next - S_prev) / S_prev`, one per
    /// consecutive price pair, dated by the later price.
    pub fn to_losses(&self) -> LossSeries {
        let losses = self
            .prices
            .windows(2)
            .map(|w| -(w[1] - w[0]) / w[0])
            .collect();
        LossSeries {
            dates: self.dates[1..].to_vec(),
            losses,
        }
    }

    /// Log-loss variant `-ln(S_next / S_prev)`; close to the fractional
    /// loss for small moves.
    pub fn to_log_losses(&self) -> LossSeries {
        let losses = self
            .prices
            .windows(2)
            .map(|w| -(w[1] / w[0]).ln())
            .collect();
        LossSeries {
            dates: self.dates[1..].to_vec(),
            losses,
        }
    }
}

/// Dated losses (positive = loss).
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    dates: Vec<NaiveDate>,
    losses: Vec<f64>,
}

impl LossSeries {
    pub fn from_parts(dates: Vec<NaiveDate>, losses: Vec<f64>) -> Result<Self, MonitorError> {
        if dates.len() != losses.len() {
            return Err(MonitorError::LengthMismatch);
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MonitorError::UnsortedLosses);
        }
        Ok(Self { dates, losses })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Rows with dates inside the inclusive `[from, to]` range; `None`
    /// bounds are open.
    pub fn restrict(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> LossSeries {
        let keep = |d: &NaiveDate| {
            from.as_ref().is_none_or(|f| d >= f) && to.as_ref().is_none_or(|t| d <= t)
        };
        let mut dates = Vec::new();
        let mut losses = Vec::new();
        for (d, l) in self.dates.iter().zip(&self.losses) {
            if keep(d) {
                dates.push(*d);
                losses.push(*l);
            }
        }
        LossSeries { dates, losses }
    }
}

/// Historical mean and standard deviation of losses over a date window.
#[derive(Debug, Clone, PartialEq)]
pub struct NullEstimate {
    pub mu_hat: f64,
    /// Sample standard deviation, denominator `n - 1`.
    pub sigma_hat: f64,
    /// Requested window (inclusive bounds).
    pub window: (NaiveDate, NaiveDate),
    /// Observations that actually fell inside the window.
    pub count: usize,
}

/// Sample mean and standard deviation of the losses dated within
/// `[from, to]`. Needs at least two observations and nonzero variance.
pub fn estimate_null(
    losses: &LossSeries,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<NullEstimate, MonitorError> {
    let window = losses.restrict(Some(from), Some(to));
    let n = window.len();
    if n < 2 {
        return Err(MonitorError::WindowTooSmall { count: n });
    }
    let mean = window.losses.iter().sum::<f64>() / n as f64;
    let ss = window
        .losses
        .iter()
        .map(|l| (l - mean) * (l - mean))
        .sum::<f64>();
    let sigma = (ss / (n - 1) as f64).sqrt();
    if !(sigma > 0.0) {
        return Err(MonitorError::ZeroVariance);
    }
    Ok(NullEstimate {
        mu_hat: mean,
        sigma_hat: sigma,
        window: (from, to),
        count: n,
    })
}

/// Outcome of monitoring one loss series: per-threshold first crossings
/// (1-based day index and its date) plus the full log-wealth trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub thresholds: Vec<f64>,
    pub crossings: Vec<Option<(usize, NaiveDate)>>,
    pub trajectory: Vec<(NaiveDate, f64)>,
}

impl MonitorReport {
    /// `threshold,crossing_day,crossing_date` rows, `-` when the process
    /// never reached the threshold.
    pub fn crossings_csv(&self) -> String {
        let mut out = String::from("threshold,crossing_day,crossing_date\n");
        for (threshold, crossing) in self.thresholds.iter().zip(&self.crossings) {
            match crossing {
                Some((day, date)) => {
                    let _ = writeln!(out, "{},{},{}", sig12(*threshold), day, date);
                }
                None => {
                    let _ = writeln!(out, "{},-,-", sig12(*threshold));
                }
            }
        }
        out
    }

    /// `date,log_wealth` rows, one per monitored day.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("date,log_wealth\n");
        for (date, log_wealth) in &self.trajectory {
            let _ = writeln!(out, "{},{}", date, sig12(*log_wealth));
        }
        out
    }
}

/// Runs a one-sided e-process over the losses under the estimated null
/// `H(mu_hat, sigma_hat)` and reports first crossings of each threshold.
pub fn detect(
    losses: &LossSeries,
    estimate: &NullEstimate,
    strategy: BettingStrategy<f64>,
    shape: ShapeClass,
    thresholds: &[f64],
) -> Result<MonitorReport, MonitorError> {
    let spec = MeanVarSpec::new(estimate.mu_hat, estimate.sigma_hat)?;
    let hypothesis = Hypothesis::one_sided(spec, shape);
    let wealth = EProcess::run(hypothesis, strategy, &losses.losses)?;
    let report = first_crossing(&wealth, thresholds)?;
    let crossings = report
        .crossings
        .iter()
        .map(|c| c.map(|day| (day, losses.dates[day - 1])))
        .collect();
    let trajectory = losses
        .dates
        .iter()
        .zip(&wealth)
        .map(|(d, w)| (*d, w.ln()))
        .collect();
    Ok(MonitorReport {
        thresholds: thresholds.to_vec(),
        crossings,
        trajectory,
    })
}

/// Reads a dated price CSV. The header must contain the configured date
/// and price columns; other columns are ignored. Rows may arrive in any
/// order and are sorted by date (stably) before validation.
pub fn read_prices<R: Read>(reader: R, columns: &ColumnSpec) -> Result<PriceSeries, MonitorError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MonitorError::MissingColumn(name.to_string()))
    };
    let date_idx = find(&columns.date)?;
    let price_idx = find(&columns.price)?;

    let mut rows = Vec::new();
    // Header occupies row 1; the first record is row 2.
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let date_raw = record.get(date_idx).unwrap_or("");
        let date: NaiveDate = date_raw.parse().map_err(|_| MonitorError::UnparsableDate {
            row,
            value: date_raw.to_string(),
        })?;
        let price_raw = record.get(price_idx).unwrap_or("");
        let price: f64 = price_raw
            .parse()
            .map_err(|_| MonitorError::UnparsablePrice {
                row,
                value: price_raw.to_string(),
            })?;
        rows.push((date, price, row));
    }
    PriceSeries::from_numbered_rows(rows)
}

/// `read_prices` from a file path.
pub fn load_prices(path: &Path, columns: &ColumnSpec) -> Result<PriceSeries, MonitorError> {
    read_prices(fs::File::open(path)?, columns)
}

/// Serializes a series as `date,close` CSV; `load_prices` with default
/// columns reads it back exactly (prices print in shortest round-trip
/// form).
pub fn prices_to_csv(series: &PriceSeries) -> String {
    let mut out = String::from("date,close\n");
    for (date, price) in series.dates.iter().zip(&series.prices) {
        let _ = writeln!(out, "{date},{price}");
    }
    out
}

/// Writes `prices_to_csv` to a file.
pub fn save_prices(series: &PriceSeries, path: &Path) -> Result<(), MonitorError> {
    Ok(fs::write(path, prices_to_csv(series))?)
}

//! Price panel loading, log-returns and sector metadata.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sector label assigned to assets without a metadata row.
pub const UNKNOWN_SECTOR: &str = "UNKNOWN";

/// Daily close prices, one row per asset and one column per date.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<F> {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    values: Array2<F>,
    dropped_rows: usize,
}

impl<F: Real> PricePanel<F> {
    /// Validates a panel assembled in memory. `values` is assets × dates.
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: Array2<F>) -> Result<Self> {
        if values.dim() != (assets.len(), dates.len()) {
            return Err(Error::Data(format!(
                "price matrix shape {:?} does not match {} assets x {} dates",
                values.dim(),
                assets.len(),
                dates.len()
            )));
        }
        check_unique(&assets)?;
        check_increasing(&dates)?;
        if dates.len() < 2 {
            return Err(Error::Data(format!("need at least 2 dates, got {}", dates.len())));
        }
        if let Some(p) = values.iter().find(|p| !(p.is_finite() && **p > F::zero())) {
            return Err(Error::Data(format!("non-positive or non-finite price {p}")));
        }
        Ok(Self { dates, assets, values, dropped_rows: 0 })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    /// Rows removed while loading because of missing, unparseable or non-positive values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }
}

/// Log-returns, one row per asset and one column per return date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix<F> {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    sectors: Option<Vec<String>>,
    values: Array2<F>,
}

impl<F: Real> ReturnMatrix<F> {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: Array2<F>) -> Result<Self> {
        if values.dim() != (assets.len(), dates.len()) {
            return Err(Error::Data(format!(
                "return matrix shape {:?} does not match {} assets x {} dates",
                values.dim(),
                assets.len(),
                dates.len()
            )));
        }
        if assets.is_empty() || dates.is_empty() {
            return Err(Error::Data("empty return matrix".into()));
        }
        check_unique(&assets)?;
        check_increasing(&dates)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite log-return".into()));
        }
        Ok(Self { dates, assets, sectors: None, values })
    }

    /// Same dates, assets and metadata with new values of identical shape.
    pub fn with_values(&self, values: Array2<F>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::Data(format!(
                "replacement values have shape {:?}, expected {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite surrogate value".into()));
        }
        Ok(Self { values, ..self.clone() })
    }

    /// Restricts to the half-open date range `[start, end)`.
    pub fn slice_dates(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_dates() {
            return Err(Error::InvalidArgument(format!(
                "date range {start}..{end} outside 0..{}",
                self.n_dates()
            )));
        }
        Ok(Self {
            dates: self.dates[start..end].to_vec(),
            assets: self.assets.clone(),
            sectors: self.sectors.clone(),
            values: self.values.slice(ndarray::s![.., start..end]).to_owned(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    /// Sector per asset, present once metadata has been attached.
    pub fn sectors(&self) -> Option<&[String]> {
        self.sectors.as_deref()
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn series(&self, asset: usize) -> ArrayView1<'_, F> {
        self.values.row(asset)
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }
}

/// One row of the `ticker,sector` metadata table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub ticker: String,
    #[serde(default)]
    pub sector: Option<String>,
}

fn check_unique(assets: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(assets.len());
    for a in assets {
        if !seen.insert(a.as_str()) {
            return Err(Error::Data(format!("duplicate ticker `{a}`")));
        }
    }
    Ok(())
}

fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Data(format!(
                "dates must be strictly increasing: {} follows {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Reads a wide price CSV: `date,<ticker1>,<ticker2>,...` with ISO-8601 dates.
///
/// Rows with an unparseable date, a missing or unparseable price, or a
/// non-positive price are dropped whole; the count is kept on the panel.
pub fn load_prices<F: Real>(path: impl AsRef<Path>) -> Result<PricePanel<F>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() < 2 {
        return Err(Error::schema(path, "expected `date` followed by at least one ticker column"));
    }
    let assets: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    check_unique(&assets)?;

    let mut dates = Vec::new();
    let mut columns: Vec<F> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let Ok(date) = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d") else {
            dropped += 1;
            continue;
        };
        let row: Option<Vec<F>> = record
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().ok().filter(|p| p.is_finite() && *p > 0.0).map(F::of))
            .collect();
        match row {
            Some(row) if row.len() == assets.len() => {
                dates.push(date);
                columns.extend(row);
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing or invalid prices", path.display());
    }
    if dates.len() < 2 {
        return Err(Error::Data(format!(
            "{}: fewer than 2 dates after cleaning ({} kept)",
            path.display(),
            dates.len()
        )));
    }
    check_increasing(&dates)?;
    let n_dates = dates.len();
    let values = Array2::from_shape_vec((n_dates, assets.len()), columns)
        .expect("row lengths checked")
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    Ok(PricePanel { dates, assets, values, dropped_rows: dropped })
}

/// Reads the `ticker,sector` metadata CSV. An empty sector cell means no label.
pub fn load_metadata(path: impl AsRef<Path>) -> Result<Vec<AssetMeta>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?;
    if headers.get(0) != Some("ticker") || headers.get(1) != Some("sector") {
        return Err(Error::schema(path, "expected header `ticker,sector`"));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let sector = record.get(1).filter(|s| !s.is_empty()).map(str::to_owned);
        out.push(AssetMeta { ticker: record[0].to_owned(), sector });
    }
    Ok(out)
}

/// `r[i][t] = ln p[i][t+1] - ln p[i][t]`, dated at the later observation.
pub fn compute_log_returns<F: Real>(panel: &PricePanel<F>) -> Result<ReturnMatrix<F>> {
    let (n, m) = panel.values.dim();
    if m < 2 {
        return Err(Error::InsufficientHistory { needed: 2, available: m });
    }
    let values = Array2::from_shape_fn((n, m - 1), |(i, t)| {
        panel.values[[i, t + 1]].ln() - panel.values[[i, t]].ln()
    });
    ReturnMatrix::new(panel.dates[1..].to_vec(), panel.assets.clone(), values)
}

/// Attaches sector labels; assets missing from `meta` become [`UNKNOWN_SECTOR`].
/// Metadata rows for tickers not in `returns` are ignored.
pub fn attach_metadata<F: Real>(
    returns: &ReturnMatrix<F>,
    meta: &[AssetMeta],
) -> Result<ReturnMatrix<F>> {
    let mut by_ticker: HashMap<&str, Option<&str>> = HashMap::with_capacity(meta.len());
    for m in meta {
        if by_ticker.insert(m.ticker.as_str(), m.sector.as_deref()).is_some() {
            return Err(Error::Data(format!("duplicate metadata rows for `{}`", m.ticker)));
        }
    }
    let sectors = returns
        .assets
        .iter()
        .map(|a| match by_ticker.get(a.as_str()) {
            Some(Some(s)) => (*s).to_owned(),
            _ => UNKNOWN_SECTOR.to_owned(),
        })
        .collect();
    Ok(ReturnMatrix { sectors: Some(sectors), ..returns.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn day(i: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2014, 1, 3).unwrap() + chrono::Duration::days(i)
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_panel_is_valid() {
        let f = write_tmp("date,A\n2014-01-03,1.0\n2014-01-06,1.0\n");
        let panel = load_prices::<f64>(f.path()).unwrap();
        assert_eq!(panel.n_dates(), 2);
        assert_eq!(panel.n_assets(), 1);
        assert_eq!(panel.dropped_rows(), 0);
    }

    #[test]
    fn zero_price_drops_that_date() {
        let f = write_tmp("date,A,B\n2014-01-03,1,2\n2014-01-06,0,2\n2014-01-07,1.5,2.5\n");
        let panel = load_prices::<f64>(f.path()).unwrap();
        assert_eq!(panel.n_dates(), 2);
        assert_eq!(panel.dropped_rows(), 1);
        assert_eq!(panel.values()[[0, 1]], 1.5);
        assert_eq!(panel.values()[[1, 1]], 2.5);
    }

    #[test]
    fn missing_and_garbage_values_drop_rows() {
        let f = write_tmp("date,A,B\n2014-01-03,1,2\n2014-01-06,,2\nnot-a-date,1,1\n2014-01-08,x,2\n2014-01-09,3,4\n");
        let panel = load_prices::<f64>(f.path()).unwrap();
        assert_eq!(panel.n_dates(), 2);
        assert_eq!(panel.dropped_rows(), 3);
    }

    #[test]
    fn load_errors() {
        let dup = write_tmp("date,A,A\n2014-01-03,1,2\n2014-01-06,1,2\n");
        assert!(matches!(load_prices::<f64>(dup.path()), Err(Error::Data(_))));
        let short = write_tmp("date,A\n2014-01-03,1\n2014-01-06,-1\n");
        assert!(load_prices::<f64>(short.path()).is_err());
        assert!(load_prices::<f64>("/nonexistent/prices.csv").is_err());
        let unsorted = write_tmp("date,A\n2014-01-06,1\n2014-01-03,1\n");
        assert!(load_prices::<f64>(unsorted.path()).is_err());
    }

    #[test]
    fn nyse_shaped_input() {
        let tickers: Vec<String> = (0..100).map(|i| format!("T{i:03}")).collect();
        let mut s = format!("date,{}\n", tickers.join(","));
        for d in 0..1258 {
            let row: Vec<String> = (0..100).map(|i| format!("{}", 10.0 + (i + d) as f64 * 0.01)).collect();
            s.push_str(&format!("{},{}\n", day(d), row.join(",")));
        }
        let f = write_tmp(&s);
        let panel = load_prices::<f64>(f.path()).unwrap();
        assert_eq!(panel.n_dates(), 1258);
        assert_eq!(panel.n_assets(), 100);
    }

    #[test]
    fn log_returns_identities() {
        let e = std::f64::consts::E;
        let panel = PricePanel::new(
            vec![day(0), day(1), day(2)],
            vec!["A".into(), "B".into()],
            Array2::from_shape_vec((2, 3), vec![1.0, e, e, 100.0, 100.0, 100.0]).unwrap(),
        )
        .unwrap();
        let r = compute_log_returns(&panel).unwrap();
        assert_eq!(r.dates(), &[day(1), day(2)]);
        assert!((r.values()[[0, 0]] - 1.0).abs() < 1e-15);
        assert_eq!(r.values()[[0, 1]], 0.0);
        assert_eq!(r.values().row(1).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn metadata_attachment() {
        let r = ReturnMatrix::new(
            vec![day(0), day(1)],
            vec!["A".into(), "B".into(), "C".into()],
            Array2::<f64>::zeros((3, 2)),
        )
        .unwrap();
        let meta = vec![
            AssetMeta { ticker: "A".into(), sector: Some("Tech".into()) },
            AssetMeta { ticker: "C".into(), sector: Some("Oil".into()) },
        ];
        let annotated = attach_metadata(&r, &meta).unwrap();
        let unknown = annotated.sectors().unwrap().iter().filter(|s| *s == UNKNOWN_SECTOR).count();
        assert_eq!(unknown, 1);

        let none = attach_metadata(&r, &[]).unwrap();
        assert!(none.sectors().unwrap().iter().all(|s| s == UNKNOWN_SECTOR));

        let full: Vec<AssetMeta> = ["A", "B", "C"]
            .iter()
            .map(|t| AssetMeta { ticker: (*t).into(), sector: Some("X".into()) })
            .collect();
        let all = attach_metadata(&r, &full).unwrap();
        assert!(all.sectors().unwrap().iter().all(|s| s != UNKNOWN_SECTOR));

        let dup = vec![meta[0].clone(), meta[0].clone()];
        assert!(attach_metadata(&r, &dup).is_err());
    }

    #[test]
    fn metadata_csv() {
        let f = write_tmp("ticker,sector\nA,Tech\nB,\n");
        let meta = load_metadata(f.path()).unwrap();
        assert_eq!(meta[0].sector.as_deref(), Some("Tech"));
        assert_eq!(meta[1].sector, None);
        let bad = write_tmp("symbol,industry\nA,Tech\n");
        assert!(matches!(load_metadata(bad.path()), Err(Error::Schema { .. })));
    }
}

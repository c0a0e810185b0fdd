//! CSV and JSON formats exchanged between pipeline stages.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back from any file here is bit-identical to the one written.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;
use serde::Serialize;

use crate::decay_fit::DecayFit;
use crate::error::{Error, Result};
use crate::filter_graph::{Edge, FilterKind, FilteredGraph, MotifInventory};
use crate::ingest::{AssetMeta, PricePanel, ReturnMatrix};
use crate::motif::{MotifClass, MotifKey};
use crate::persistence::{MotifPersistenceTable, PersistenceCurve};
use crate::scalar::Real;
use crate::weighted_corr::CorrelationLayer;

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::WriterBuilder::new().flexible(true).from_path(path).map_err(|e| Error::csv(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn row(w: &mut csv::Writer<fs::File>, path: &Path, fields: &[String]) -> Result<()> {
    w.write_record(fields).map_err(|e| Error::csv(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn expect_header(r: &mut csv::Reader<fs::File>, path: &Path, expected: &[&str]) -> Result<()> {
    let h = r.headers().map_err(|e| Error::csv(path, e))?;
    for (i, want) in expected.iter().enumerate() {
        match h.get(i) {
            Some(got) if got == *want => {}
            got => {
                return Err(Error::schema(
                    path,
                    format!("column {} should be `{want}`, found `{}`", i + 1, got.unwrap_or("")),
                ))
            }
        }
    }
    Ok(())
}

fn records(r: &mut csv::Reader<fs::File>, path: &Path) -> Result<Vec<csv::StringRecord>> {
    r.records().map(|rec| rec.map_err(|e| Error::csv(path, e))).collect()
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| {
        Error::schema(path, format!("line {}: missing field `{name}`", rec.position().map_or(0, |p| p.line())))
    })
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<T> {
    let s = field(rec, i, name, path)?;
    s.parse().map_err(|_| {
        Error::schema(
            path,
            format!("line {}: field `{name}` has invalid value `{s}`", rec.position().map_or(0, |p| p.line())),
        )
    })
}

/// Wide price CSV `date,<tickers>`, the format read by [`crate::ingest::load_prices`].
pub fn write_prices<F: Real>(path: impl AsRef<Path>, panel: &PricePanel<F>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(panel.assets().iter().cloned());
    row(&mut w, path, &header)?;
    let v = panel.values();
    for (t, d) in panel.dates().iter().enumerate() {
        let mut r = vec![d.to_string()];
        r.extend((0..panel.n_assets()).map(|a| v[[a, t]].to_string()));
        row(&mut w, path, &r)?;
    }
    finish(w, path)
}

/// `date,<tickers>` with one row per return date.
pub fn write_returns<F: Real>(path: impl AsRef<Path>, returns: &ReturnMatrix<F>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(returns.assets().iter().cloned());
    row(&mut w, path, &header)?;
    let v = returns.values();
    for (t, d) in returns.dates().iter().enumerate() {
        let mut r = vec![d.to_string()];
        r.extend((0..returns.n_assets()).map(|a| v[[a, t]].to_string()));
        row(&mut w, path, &r)?;
    }
    finish(w, path)
}

pub fn read_returns<F: Real>(path: impl AsRef<Path>) -> Result<ReturnMatrix<F>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &["date"])?;
    let assets: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().skip(1).map(str::to_owned).collect();
    if assets.is_empty() {
        return Err(Error::schema(path, "no ticker columns"));
    }
    let recs = records(&mut r, path)?;
    let mut dates = Vec::with_capacity(recs.len());
    let mut values = Array2::zeros((assets.len(), recs.len()));
    for (t, rec) in recs.iter().enumerate() {
        if rec.len() != assets.len() + 1 {
            return Err(Error::schema(path, format!("row {} has {} fields, expected {}", t + 1, rec.len(), assets.len() + 1)));
        }
        dates.push(parse::<NaiveDate>(rec, 0, "date", path)?);
        for (a, name) in assets.iter().enumerate() {
            values[[a, t]] = parse::<F>(rec, a + 1, name, path)?;
        }
    }
    ReturnMatrix::new(dates, assets, values)
}

pub fn write_metadata(path: impl AsRef<Path>, meta: &[AssetMeta]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["ticker".into(), "sector".into()])?;
    for m in meta {
        row(&mut w, path, &[m.ticker.clone(), m.sector.clone().unwrap_or_default()])?;
    }
    finish(w, path)
}

/// One correlation layer: a header of tickers followed by `N` rows.
pub fn write_layer<F: Real>(path: impl AsRef<Path>, tickers: &[String], layer: &CorrelationLayer<F>) -> Result<()> {
    let path = path.as_ref();
    if tickers.len() != layer.n() {
        return Err(Error::InvalidArgument(format!("{} tickers for a {}-asset layer", tickers.len(), layer.n())));
    }
    let mut w = writer(path)?;
    row(&mut w, path, tickers)?;
    for r in layer.matrix().rows() {
        row(&mut w, path, &r.iter().map(|v| v.to_string()).collect::<Vec<_>>())?;
    }
    finish(w, path)
}

pub fn read_layer<F: Real>(path: impl AsRef<Path>, anchor: usize) -> Result<(Vec<String>, CorrelationLayer<F>)> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let tickers: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(str::to_owned).collect();
    let n = tickers.len();
    let recs = records(&mut r, path)?;
    if recs.len() != n {
        return Err(Error::schema(path, format!("{} rows for {n} tickers", recs.len())));
    }
    let mut m = Array2::zeros((n, n));
    for (i, rec) in recs.iter().enumerate() {
        if rec.len() != n {
            return Err(Error::schema(path, format!("row {} has {} fields, expected {n}", i + 1, rec.len())));
        }
        for j in 0..n {
            m[[i, j]] = parse::<F>(rec, j, &tickers[j], path)?;
        }
    }
    let layer = CorrelationLayer::from_matrix(anchor, m).map_err(|e| Error::schema(path, e.to_string()))?;
    Ok((tickers, layer))
}

/// Edge list `u,v,weight` with vertex indices.
pub fn write_edges<F: Real>(path: impl AsRef<Path>, graph: &FilteredGraph<F>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["u".into(), "v".into(), "weight".into()])?;
    for e in graph.edges() {
        row(&mut w, path, &[e.u.to_string(), e.v.to_string(), e.weight.to_string()])?;
    }
    finish(w, path)
}

pub fn read_edges<F: Real>(path: impl AsRef<Path>, n: usize, kind: FilterKind, anchor: usize) -> Result<FilteredGraph<F>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &["u", "v", "weight"])?;
    let edges = records(&mut r, path)?
        .iter()
        .map(|rec| {
            Ok(Edge {
                u: parse(rec, 0, "u", path)?,
                v: parse(rec, 1, "v", path)?,
                weight: parse(rec, 2, "weight", path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FilteredGraph::from_edges(n, kind, anchor, edges).map_err(|e| Error::schema(path, e.to_string()))
}

/// Inventory rows `motif_class,v1,v2,v3[,v4]`, as many vertex columns as the motif has.
pub fn write_inventory(path: impl AsRef<Path>, inv: &MotifInventory) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["motif_class", "v1", "v2", "v3", "v4"].map(String::from))?;
    for k in inv.iter() {
        let mut r = vec![k.class().name().to_string()];
        r.extend(k.vertices().iter().map(u32::to_string));
        row(&mut w, path, &r)?;
    }
    finish(w, path)
}

pub fn read_inventory(path: impl AsRef<Path>, kind: FilterKind, n: usize) -> Result<MotifInventory> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &["motif_class", "v1", "v2", "v3"])?;
    let keys = records(&mut r, path)?
        .iter()
        .map(|rec| {
            let class: MotifClass = parse(rec, 0, "motif_class", path)?;
            let verts = (1..rec.len())
                .filter(|&i| !rec[i].is_empty())
                .map(|i| parse::<u32>(rec, i, &format!("v{i}"), path))
                .collect::<Result<Vec<_>>>()?;
            MotifKey::new(class, &verts).map_err(|e| Error::schema(path, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    MotifInventory::from_parts(kind, n, keys).map_err(|e| Error::schema(path, e.to_string()))
}

/// Curve rows `class,tau,persistence,T,C` for `τ = 0..=max_lag`, `T` the contributing
/// starting layers and `C` their mean motif count.
pub fn write_curves<F: Real>(path: impl AsRef<Path>, curves: &[PersistenceCurve<F>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["class", "tau", "persistence", "T", "C"].map(String::from))?;
    for c in curves {
        for (tau, v) in c.values.iter().enumerate() {
            row(
                &mut w,
                path,
                &[c.class.name().into(), tau.to_string(), v.to_string(), c.starting_points.to_string(), c.mean_count.to_string()],
            )?;
        }
    }
    finish(w, path)
}

/// Reads curves back; standard errors are not part of the format and come back as zero.
pub fn read_curves<F: Real>(path: impl AsRef<Path>) -> Result<Vec<PersistenceCurve<F>>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &["class", "tau", "persistence", "T", "C"])?;
    let mut curves: Vec<PersistenceCurve<F>> = Vec::new();
    for rec in records(&mut r, path)? {
        let class: MotifClass = parse(&rec, 0, "class", path)?;
        let tau: usize = parse(&rec, 1, "tau", path)?;
        let value: F = parse(&rec, 2, "persistence", path)?;
        let t: usize = parse(&rec, 3, "T", path)?;
        let c: F = parse(&rec, 4, "C", path)?;
        match curves.last_mut() {
            Some(cur) if cur.class == class => {
                if tau != cur.values.len() {
                    return Err(Error::schema(path, format!("{class} lag {tau} out of sequence")));
                }
                cur.values.push(value);
                cur.std_err.push(F::zero());
            }
            _ => {
                if tau != 0 {
                    return Err(Error::schema(path, format!("{class} curve must start at tau 0")));
                }
                curves.push(PersistenceCurve {
                    class,
                    values: vec![value],
                    std_err: vec![F::zero()],
                    starting_points: t,
                    mean_count: c,
                });
            }
        }
    }
    if curves.is_empty() {
        return Err(Error::schema(path, "no curve rows"));
    }
    Ok(curves)
}

/// Per-motif plateau persistence `class,vertices,plateau_persistence`, vertices joined by `-`.
pub fn write_motif_table<F: Real>(path: impl AsRef<Path>, table: &MotifPersistenceTable<F>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["class", "vertices", "plateau_persistence"].map(String::from))?;
    for (k, p) in &table.entries {
        row(&mut w, path, &[k.class().name().into(), k.label(), p.to_string()])?;
    }
    finish(w, path)
}

/// Reads a motif table; the lag bookkeeping fields are supplied by the caller.
pub fn read_motif_table<F: Real>(
    path: impl AsRef<Path>,
    tau_plat: usize,
    max_lag: usize,
    starting_points: usize,
) -> Result<MotifPersistenceTable<F>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &["class", "vertices", "plateau_persistence"])?;
    let mut entries = Vec::new();
    let mut class = None;
    for rec in records(&mut r, path)? {
        let c: MotifClass = parse(&rec, 0, "class", path)?;
        if class.is_some_and(|x| x != c) {
            return Err(Error::schema(path, "mixed motif classes"));
        }
        class = Some(c);
        let verts = field(&rec, 1, "vertices", path)?
            .split('-')
            .map(|s| s.parse::<u32>().map_err(|_| Error::schema(path, format!("bad vertex list `{}`", &rec[1]))))
            .collect::<Result<Vec<_>>>()?;
        let key = MotifKey::new(c, &verts).map_err(|e| Error::schema(path, e.to_string()))?;
        entries.push((key, parse::<F>(&rec, 2, "plateau_persistence", path)?));
    }
    let class = class.ok_or_else(|| Error::schema(path, "empty motif table"))?;
    entries.sort_by_key(|a| a.0);
    Ok(MotifPersistenceTable { class, tau_plat, max_lag, starting_points, entries })
}

/// One row of the fit report.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow<F> {
    pub curve_id: String,
    pub class: MotifClass,
    pub fit: DecayFit<F>,
}

pub const FIT_HEADER: [&str; 10] =
    ["curve_id", "class", "alpha1", "beta1", "alpha2", "beta2", "tau_plat", "mse1", "mse2", "dropped_lags"];

pub fn write_fits<F: Real>(path: impl AsRef<Path>, rows: &[FitRow<F>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &FIT_HEADER.map(String::from))?;
    for r in rows {
        let f = &r.fit;
        row(
            &mut w,
            path,
            &[
                r.curve_id.clone(),
                r.class.name().into(),
                f.alpha1.to_string(),
                f.beta1.to_string(),
                f.alpha2.to_string(),
                f.beta2.to_string(),
                f.tau_plat.to_string(),
                f.mse1.to_string(),
                f.mse2.to_string(),
                f.dropped_lags.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

/// Reads a fit report. Segment lengths are not stored and come back as zero.
pub fn read_fits<F: Real>(path: impl AsRef<Path>) -> Result<Vec<FitRow<F>>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    expect_header(&mut r, path, &FIT_HEADER)?;
    records(&mut r, path)?
        .iter()
        .map(|rec| {
            Ok(FitRow {
                curve_id: field(rec, 0, "curve_id", path)?.to_string(),
                class: parse(rec, 1, "class", path)?,
                fit: DecayFit {
                    alpha1: parse(rec, 2, "alpha1", path)?,
                    beta1: parse(rec, 3, "beta1", path)?,
                    alpha2: parse(rec, 4, "alpha2", path)?,
                    beta2: parse(rec, 5, "beta2", path)?,
                    tau_plat: parse(rec, 6, "tau_plat", path)?,
                    mse1: parse(rec, 7, "mse1", path)?,
                    mse2: parse(rec, 8, "mse2", path)?,
                    n1: 0,
                    n2: 0,
                    dropped_lags: parse(rec, 9, "dropped_lags", path)?,
                },
            })
        })
        .collect()
}

/// Random-portfolio volatilities, one per row.
pub fn write_sample<F: Real>(path: impl AsRef<Path>, sample: &[F]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    row(&mut w, path, &["sample".into(), "volatility".into()])?;
    for (i, v) in sample.iter().enumerate() {
        row(&mut w, path, &[i.to_string(), v.to_string()])?;
    }
    finish(w, path)
}

/// Equal-width histogram `bin_lo,bin_hi,count` spanning the sample and the marker value.
pub fn write_histogram<F: Real>(path: impl AsRef<Path>, sample: &[F], marker: F, bins: usize) -> Result<()> {
    let path = path.as_ref();
    let vals: Vec<f64> = sample.iter().map(|v| v.as_f64()).collect();
    let lo = vals.iter().copied().fold(marker.as_f64(), f64::min);
    let hi = vals.iter().copied().fold(marker.as_f64(), f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in vals {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let mut w = writer(path)?;
    row(&mut w, path, &["bin_lo".into(), "bin_hi".into(), "count".into()])?;
    for (i, c) in counts.iter().enumerate() {
        let a = lo + i as f64 * width;
        row(&mut w, path, &[a.to_string(), (a + width).to_string(), c.to_string()])?;
    }
    finish(w, path)
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::schema(path, e.to_string()))
}

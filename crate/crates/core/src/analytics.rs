//! Analyses of the most persistent motifs: ranking, sector purity, overlap with
//! the most correlated raw triplets, persistence against correlation strength,
//! and the volatility of motif portfolios against random portfolios.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::ops::Range;

use ndarray::Array2;
use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{ReturnMatrix, UNKNOWN_SECTOR};
use crate::motif::{MotifClass, MotifKey};
use crate::persistence::MotifPersistenceTable;
use crate::scalar::{mean_std, Real};
use crate::seeding::rng_for;
use crate::weighted_corr::CorrelationLayer;

pub const TRADING_DAYS: f64 = 252.0;

/// Motifs ordered by descending plateau persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMotifs<F> {
    pub class: MotifClass,
    /// Requested count.
    pub k: usize,
    pub entries: Vec<(MotifKey, F)>,
    /// Set when the table held fewer than `k` motifs.
    pub short: bool,
}

impl<F: Real> RankedMotifs<F> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &MotifKey> {
        self.entries.iter().map(|(k, _)| k)
    }

    /// Sorted, deduplicated union of the motifs' vertices.
    pub fn vertex_union(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.keys().flat_map(|k| k.vertices().iter().map(|&x| x as usize)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Top `k` motifs of `class` by plateau persistence; ties go to the smaller vertex tuple.
pub fn rank_persistent_motifs<F: Real>(
    table: &MotifPersistenceTable<F>,
    class: MotifClass,
    k: usize,
) -> Result<RankedMotifs<F>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if table.class != class {
        return Err(Error::InvalidArgument(format!("table holds {} motifs, not {class}", table.class)));
    }
    if table.entries.is_empty() {
        return Err(Error::Data(format!("no {class} motifs to rank")));
    }
    let mut entries = table.entries.clone();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    let short = entries.len() < k;
    entries.truncate(k);
    Ok(RankedMotifs { class, k, entries, short })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorPurity {
    pub fraction: f64,
    /// Per ranked motif: its common sector, if all vertices share a known one.
    pub per_motif: Vec<Option<String>>,
}

/// Fraction of ranked motifs whose vertices all carry the same known sector.
pub fn sector_purity<F: Real>(motifs: &RankedMotifs<F>, sectors: &[String]) -> Result<SectorPurity> {
    let per_motif: Vec<Option<String>> = motifs
        .keys()
        .map(|k| {
            let labels: Vec<&String> = k
                .vertices()
                .iter()
                .map(|&v| sectors.get(v as usize).ok_or_else(|| Error::InvalidArgument(format!("vertex {v} has no sector"))))
                .collect::<Result<_>>()?;
            let first = labels[0];
            Ok((first != UNKNOWN_SECTOR && labels.iter().all(|s| *s == first)).then(|| first.clone()))
        })
        .collect::<Result<_>>()?;
    let pure = per_motif.iter().filter(|p| p.is_some()).count();
    let fraction = if per_motif.is_empty() { 0.0 } else { pure as f64 / per_motif.len() as f64 };
    Ok(SectorPurity { fraction, per_motif })
}

/// The `k` triplets with the highest mean pairwise correlation; ties go to the smaller tuple.
pub fn top_triplets<F: Real>(layer: &CorrelationLayer<F>, k: usize) -> Vec<[u32; 3]> {
    let n = layer.n() as u32;
    let mut all: Vec<(F, [u32; 3])> = Vec::with_capacity((n as usize).pow(3) / 6);
    for a in 0..n {
        for b in (a + 1)..n {
            let ab = layer.get(a as usize, b as usize);
            for c in (b + 1)..n {
                let s = (ab + layer.get(a as usize, c as usize) + layer.get(b as usize, c as usize)) / F::of(3.0);
                all.push((s, [a, b, c]));
            }
        }
    }
    let cmp = |x: &(F, [u32; 3]), y: &(F, [u32; 3])| {
        y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal).then_with(|| x.1.cmp(&y.1))
    };
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all.into_iter().map(|(_, t)| t).collect()
}

/// Per layer, how many of the first `k` ranked triangles are among its `k` most correlated triplets.
pub fn triplet_overlap<F: Real>(
    motifs: &RankedMotifs<F>,
    layers: &[CorrelationLayer<F>],
    k: usize,
) -> Result<Vec<usize>> {
    if motifs.class.arity() != 3 {
        return Err(Error::InvalidArgument(format!("overlap needs triangle motifs, got {}", motifs.class)));
    }
    let persistent: HashSet<[u32; 3]> = motifs
        .keys()
        .take(k)
        .map(|m| {
            let v = m.vertices();
            [v[0], v[1], v[2]]
        })
        .collect();
    Ok(layers
        .par_iter()
        .map(|l| top_triplets(l, k).iter().filter(|t| persistent.contains(*t)).count())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrengthStats {
    pub n_motifs: usize,
    pub pearson: f64,
    pub kendall_tau: f64,
    pub r_squared: f64,
}

/// Layer-averaged mean edge correlation of a motif.
pub fn motif_strength<F: Real>(key: &MotifKey, layers: &[CorrelationLayer<F>]) -> f64 {
    let edges = key.edges();
    let total: f64 = layers
        .iter()
        .map(|l| {
            edges
                .iter()
                .map(|e| {
                    let v = e.vertices();
                    l.get(v[0] as usize, v[1] as usize).as_f64()
                })
                .sum::<f64>()
                / edges.len() as f64
        })
        .sum();
    total / layers.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kendall tau-b, which corrects for ties in either variable.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut s, mut n1, mut n2) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = crate::scalar::sign(x[i] - x[j]);
            let b = crate::scalar::sign(y[i] - y[j]);
            s += (a * b) as i64;
            n1 += (a != 0.0) as i64;
            n2 += (b != 0.0) as i64;
        }
    }
    s as f64 / ((n1 as f64) * (n2 as f64)).sqrt()
}

/// Correlation between motif plateau persistence and motif correlation strength.
pub fn persistence_vs_strength<F: Real>(
    table: &MotifPersistenceTable<F>,
    layers: &[CorrelationLayer<F>],
) -> Result<StrengthStats> {
    if table.entries.len() < 3 {
        return Err(Error::InvalidArgument(format!("need >= 3 motifs, got {}", table.entries.len())));
    }
    if layers.is_empty() {
        return Err(Error::InvalidArgument("no correlation layers".into()));
    }
    let persistence: Vec<f64> = table.entries.iter().map(|(_, p)| p.as_f64()).collect();
    let strength: Vec<f64> = table.entries.par_iter().map(|(k, _)| motif_strength(k, layers)).collect();
    let r = pearson(&persistence, &strength);
    Ok(StrengthStats {
        n_motifs: persistence.len(),
        pearson: r,
        kendall_tau: kendall_tau_b(&persistence, &strength),
        r_squared: r * r,
    })
}

fn check_window(n_dates: usize, window: &Range<usize>) -> Result<()> {
    if window.end > n_dates || window.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "evaluation window {}..{} needs >= 2 dates within 0..{n_dates}",
            window.start, window.end
        )));
    }
    Ok(())
}

/// Dense f64 copy of the window, dates × assets, so portfolio sums run along rows.
fn window_block<F: Real>(returns: &ReturnMatrix<F>, window: &Range<usize>) -> Array2<f64> {
    let v = returns.values();
    Array2::from_shape_fn((window.len(), returns.n_assets()), |(t, a)| v[[a, window.start + t]].as_f64())
}

fn block_volatility(block: &Array2<f64>, assets: &[usize]) -> f64 {
    let w = 1.0 / assets.len() as f64;
    let daily: Vec<f64> = block.rows().into_iter().map(|row| assets.iter().map(|&a| row[a]).sum::<f64>() * w).collect();
    mean_std(&daily).1 * TRADING_DAYS.sqrt()
}

fn dedup_assets(assets: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut a = assets.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() {
        return Err(Error::InvalidArgument("portfolio has no assets".into()));
    }
    if let Some(&bad) = a.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidArgument(format!("asset {bad} outside 0..{n}")));
    }
    Ok(a)
}

/// Annualized volatility of the equal-weight portfolio of `assets` over `window`.
pub fn portfolio_volatility<F: Real>(returns: &ReturnMatrix<F>, assets: &[usize], window: Range<usize>) -> Result<F> {
    check_window(returns.n_dates(), &window)?;
    let assets = dedup_assets(assets, returns.n_assets())?;
    Ok(F::of(block_volatility(&window_block(returns, &window), &assets)))
}

/// Volatility of the equal-weight portfolio over every vertex of the ranked motifs.
pub fn motif_portfolio_volatility<F: Real>(
    returns: &ReturnMatrix<F>,
    motifs: &RankedMotifs<F>,
    window: Range<usize>,
) -> Result<F> {
    portfolio_volatility(returns, &motifs.vertex_union(), window)
}

/// Volatilities of `n_samples` equal-weight portfolios of `n_stocks` distinct random assets.
/// Sample `i` draws from its own stream `derive_seed(seed, [i])`.
pub fn random_portfolio_sample<F: Real>(
    returns: &ReturnMatrix<F>,
    n_stocks: usize,
    n_samples: usize,
    seed: u64,
    window: Range<usize>,
) -> Result<Vec<F>> {
    let n = returns.n_assets();
    if n_stocks == 0 || n_stocks > n {
        return Err(Error::InvalidArgument(format!("portfolio size {n_stocks} outside 1..={n}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one random portfolio".into()));
    }
    check_window(returns.n_dates(), &window)?;
    let block = window_block(returns, &window);
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &[i as u64]);
            let mut assets = index::sample(&mut rng, n, n_stocks).into_vec();
            assets.sort_unstable();
            F::of(block_volatility(&block, &assets))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioReport<F> {
    pub motif_volatility: F,
    pub n_stocks: usize,
    pub n_samples: usize,
    pub mean: F,
    pub std: F,
    /// `(motif - mean) / std`; absent when the random sample has no spread.
    pub z_score: Option<F>,
    /// Date indices `[start, end)` of the evaluation window.
    pub window: (usize, usize),
    #[serde(skip)]
    pub sample: Vec<F>,
}

/// Compares the motif portfolio with random portfolios of the same size over `window`.
pub fn random_portfolio_test<F: Real>(
    returns: &ReturnMatrix<F>,
    motif_assets: &[usize],
    n_samples: usize,
    seed: u64,
    window: Range<usize>,
) -> Result<PortfolioReport<F>> {
    let assets = dedup_assets(motif_assets, returns.n_assets())?;
    let motif = portfolio_volatility(returns, &assets, window.clone())?;
    let sample = random_portfolio_sample(returns, assets.len(), n_samples, seed, window.clone())?;
    let as64: Vec<f64> = sample.iter().map(|v| v.as_f64()).collect();
    let (mean, std) = mean_std(&as64);
    let z_score = (std > 0.0).then(|| F::of((motif.as_f64() - mean) / std));
    Ok(PortfolioReport {
        motif_volatility: motif,
        n_stocks: assets.len(),
        n_samples,
        mean: F::of(mean),
        std: F::of(std),
        z_score,
        window: (window.start, window.end),
        sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn key(c: MotifClass, v: &[u32]) -> MotifKey {
        MotifKey::new(c, v).unwrap()
    }

    fn table(entries: Vec<(MotifKey, f64)>) -> MotifPersistenceTable<f64> {
        let mut entries = entries;
        entries.sort_by_key(|a| a.0);
        MotifPersistenceTable { class: entries[0].0.class(), tau_plat: 5, max_lag: 10, starting_points: 3, entries }
    }

    fn returns_from(values: Array2<f64>) -> ReturnMatrix<f64> {
        let d0 = NaiveDate::from_ymd_opt(2014, 1, 3).unwrap();
        let dates = (0..values.ncols() as i64).map(|i| d0 + chrono::Duration::days(i)).collect();
        let assets = (0..values.nrows()).map(|i| format!("A{i}")).collect();
        ReturnMatrix::new(dates, assets, values).unwrap()
    }

    fn layer_from(n: usize, f: impl Fn(usize, usize) -> f64) -> CorrelationLayer<f64> {
        let m = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { f(i.min(j), i.max(j)) });
        CorrelationLayer::from_matrix(0, m).unwrap()
    }

    #[test]
    fn ranking_order_and_ties() {
        let t = MotifClass::Triangle;
        let tab = table(vec![
            (key(t, &[3, 4, 5]), 0.5),
            (key(t, &[0, 1, 2]), 0.5),
            (key(t, &[1, 2, 3]), 0.9),
            (key(t, &[0, 2, 4]), 0.1),
        ]);
        let r = rank_persistent_motifs(&tab, t, 3).unwrap();
        let got: Vec<_> = r.keys().map(|k| k.label()).collect();
        assert_eq!(got, ["1-2-3", "0-1-2", "3-4-5"]);
        assert!(!r.short);
        let all = rank_persistent_motifs(&tab, t, 10).unwrap();
        assert!(all.short && all.len() == 4);
        assert!(rank_persistent_motifs(&tab, MotifClass::Edge, 3).is_err());
        assert!(rank_persistent_motifs(&tab, t, 0).is_err());
    }

    #[test]
    fn equal_persistence_gives_lexicographic_prefix() {
        let e = MotifClass::Edge;
        let tab = table((0..6u32).map(|i| (key(e, &[i, i + 1]), 0.4)).collect());
        let r = rank_persistent_motifs(&tab, e, 2).unwrap();
        assert_eq!(r.keys().map(|k| k.label()).collect::<Vec<_>>(), ["0-1", "1-2"]);
        assert_eq!(r.vertex_union(), vec![0, 1, 2]);
    }

    #[test]
    fn purity_cases() {
        let t = MotifClass::Triangle;
        let sectors: Vec<String> = ["X", "X", "X", "Y", "Y", UNKNOWN_SECTOR, UNKNOWN_SECTOR, UNKNOWN_SECTOR]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let ranked = |keys: Vec<MotifKey>| RankedMotifs {
            class: t,
            k: keys.len(),
            entries: keys.into_iter().map(|k| (k, 1.0)).collect(),
            short: false,
        };
        let pure = ranked(vec![key(t, &[0, 1, 2])]);
        assert_eq!(sector_purity(&pure, &sectors).unwrap().fraction, 1.0);
        let mixed = ranked(vec![key(t, &[0, 1, 2]), key(t, &[2, 3, 4]), key(t, &[5, 6, 7])]);
        let p = sector_purity(&mixed, &sectors).unwrap();
        assert!((p.fraction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.per_motif, vec![Some("X".to_string()), None, None]);
    }

    #[test]
    fn overlap_with_planted_and_disjoint_triplets() {
        let t = MotifClass::Triangle;
        // triplets inside {0,1,2,3} are the most correlated
        let l = layer_from(10, |i, j| if j < 4 { 0.9 } else { 0.1 * ((i * 7 + j * 3) % 5) as f64 / 5.0 });
        let inside: Vec<MotifKey> = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]].iter().map(|v| key(t, v)).collect();
        let ranked = RankedMotifs { class: t, k: 4, entries: inside.iter().map(|k| (*k, 1.0)).collect(), short: false };
        assert_eq!(triplet_overlap(&ranked, &[l.clone(), l.clone()], 4).unwrap(), vec![4, 4]);
        let outside = RankedMotifs { class: t, k: 1, entries: vec![(key(t, &[7, 8, 9]), 1.0)], short: false };
        assert_eq!(triplet_overlap(&outside, std::slice::from_ref(&l), 1).unwrap(), vec![0]);
    }

    #[test]
    fn top_triplets_match_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let l = layer_from(9, |i, j| vals[i * 9 + j].tanh());
        let mut all = Vec::new();
        for a in 0..9u32 {
            for b in a + 1..9 {
                for c in b + 1..9 {
                    let g = |x: u32, y: u32| l.get(x as usize, y as usize);
                    all.push(((g(a, b) + g(a, c) + g(b, c)) / 3.0, [a, b, c]));
                }
            }
        }
        all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
        let expect: Vec<[u32; 3]> = all.iter().take(7).map(|x| x.1).collect();
        assert_eq!(top_triplets(&l, 7), expect);
        assert_eq!(top_triplets(&l, 500).len(), 84);
    }

    #[test]
    fn monotone_strength_has_unit_tau() {
        let e = MotifClass::Edge;
        let n = 8;
        let mut entries = Vec::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                entries.push((key(e, &[i, j]), (i * 10 + j) as f64 / 100.0));
            }
        }
        let tab = table(entries);
        let l = layer_from(n, |i, j| ((i * 10 + j) as f64 / 100.0).powi(3) - 0.2);
        let s = persistence_vs_strength(&tab, &[l]).unwrap();
        assert!((s.kendall_tau - 1.0).abs() < 1e-12);
        assert!(s.pearson > 0.5 && (s.r_squared - s.pearson * s.pearson).abs() < 1e-15);
        let few = table(entries_of(2));
        assert!(persistence_vs_strength(&few, &[layer_from(4, |_, _| 0.0)]).is_err());
    }

    fn entries_of(m: u32) -> Vec<(MotifKey, f64)> {
        (0..m).map(|i| (key(MotifClass::Edge, &[i, i + 1]), 0.5)).collect()
    }

    #[test]
    fn independent_strength_has_small_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40;
        let mut mat = vec![0.0; n * n];
        for v in &mut mat {
            *v = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng).tanh();
        }
        let l = layer_from(n, |i, j| mat[i * n + j]);
        let mut entries = Vec::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                entries.push((key(MotifClass::Edge, &[i, j]), rand::Rng::random::<f64>(&mut rng)));
            }
        }
        let m = entries.len() as f64;
        let s = persistence_vs_strength(&table(entries), &[l]).unwrap();
        assert!(s.pearson.abs() < 3.0 / m.sqrt());
    }

    #[test]
    fn tau_b_oracle_with_ties() {
        // scipy.stats.kendalltau([1,2,2,3], [1,3,2,2]) = 0.4
        let t = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 2.0]);
        assert!((t - 0.4).abs() < 1e-12);
    }

    #[test]
    fn portfolio_volatility_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..200).map(|_| 0.01 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
        let mut v = Array2::zeros((3, 200));
        for t in 0..200 {
            v[[0, t]] = x[t];
            v[[1, t]] = -x[t];
            v[[2, t]] = 2.0 * x[t];
        }
        let r = returns_from(v);
        let single = portfolio_volatility(&r, &[0], 0..200).unwrap();
        assert!((single - mean_std(&x).1 * 252f64.sqrt()).abs() < 1e-15);
        assert!(portfolio_volatility(&r, &[0, 1], 0..200).unwrap() < 1e-15);
        let a = portfolio_volatility(&r, &[2, 0], 10..150).unwrap();
        let b = portfolio_volatility(&r, &[0, 2, 2, 0], 10..150).unwrap();
        assert_eq!(a, b);
        assert!(portfolio_volatility(&r, &[0], 5..5).is_err());
        assert!(portfolio_volatility(&r, &[], 0..10).is_err());
        assert!(portfolio_volatility(&r, &[3], 0..10).is_err());
    }

    #[test]
    fn factor_block_matches_closed_form() {
        // r_i = l f + e_i over m assets: var = l² + 1/m for unit-variance shocks
        let (m, len, l) = (6, 20_000, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut v = Array2::zeros((m, len));
        for t in 0..len {
            let f: f64 = StandardNormal.sample(&mut rng);
            for i in 0..m {
                let e: f64 = StandardNormal.sample(&mut rng);
                v[[i, t]] = 0.01 * (l * f + e);
            }
        }
        let r = returns_from(v);
        let expect = 0.01 * (l * l + 1.0 / m as f64).sqrt() * 252f64.sqrt();
        let got = portfolio_volatility(&r, &(0..m).collect::<Vec<_>>(), 0..len).unwrap();
        assert!((got / expect - 1.0).abs() < 0.05);
    }

    #[test]
    fn random_portfolios_are_reproducible_and_rank_block() {
        let (n, len) = (20, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = Array2::zeros((n, len));
        for t in 0..len {
            let f: f64 = StandardNormal.sample(&mut rng);
            for i in 0..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                v[[i, t]] = 0.01 * (if i < 5 { 2.0 * f } else { 0.0 } + e);
            }
        }
        let r = returns_from(v);
        let a = random_portfolio_test(&r, &[0, 1, 2, 3, 4], 2000, 11, 100..300).unwrap();
        let b = random_portfolio_test(&r, &[4, 3, 2, 1, 0], 2000, 11, 100..300).unwrap();
        assert_eq!(a, b);
        assert!(a.z_score.unwrap() > 2.0);
        assert_eq!(a.sample.len(), 2000);

        // a random portfolio's own stock set lies within the sample's support
        let mut rng = rng_for(11, &[0]);
        let first = index::sample(&mut rng, n, 5).into_vec();
        assert!(!first.is_sorted());
        let c = random_portfolio_test(&r, &first, 2000, 11, 100..300).unwrap();
        let (lo, hi) = c.sample.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(c.motif_volatility >= lo && c.motif_volatility <= hi);
        assert_eq!(c.motif_volatility, c.sample[0]);

        assert!(random_portfolio_sample(&r, 21, 10, 1, 0..300).is_err());
        assert!(random_portfolio_test(&r, &(0..20).collect::<Vec<_>>(), 10, 1, 0..300).unwrap().z_score.is_none());
    }
}

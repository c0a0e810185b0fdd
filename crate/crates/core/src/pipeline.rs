//! End-to-end runs driven by one JSON configuration, and the stage functions
//! the command-line subcommands share with them.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{
    persistence_vs_strength, rank_persistent_motifs, random_portfolio_test, sector_purity, triplet_overlap,
    PortfolioReport, SectorPurity, StrengthStats,
};
use crate::decay_fit::{two_regime_fit, BreakpointSearch};
use crate::error::{Error, Result};
use crate::filter_graph::{motif_inventory, quantile_threshold, tmfg, FilterKind, FilteredGraph, MotifInventory, WeightTransform};
use crate::ingest::{attach_metadata, compute_log_returns, load_metadata, load_prices, AssetMeta, ReturnMatrix};
use crate::io::{self, FitRow};
use crate::motif::MotifClass;
use crate::null_models::{generate_member, NullModelKind, NullModelSpec};
use crate::persistence::{
    independence_adjusted_exponent, motif_null_curve, persistence_curve, persistent_clustering, plateau_persistence,
    MotifPersistenceTable, PersistenceCurve,
};
use crate::seeding::derive_seed;
use crate::synthetic::SyntheticConfig;
use crate::weighted_corr::{exp_weights, layer_sequence, CorrelationLayer, LayerSequence};

/// Where the "real" return panel comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Files {
        prices: PathBuf,
        #[serde(default)]
        metadata: Option<PathBuf>,
    },
    Synthetic {
        #[serde(default)]
        config: SyntheticConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    /// Filter whose motifs are ranked.
    pub filter: FilterKind,
    pub class: MotifClass,
    pub k: usize,
    pub n_samples: usize,
    /// Fraction of layers used for estimation; later dates are out of sample.
    pub split: f64,
    /// Inclusive lag range for plateau levels and persistent-subgraph clustering;
    /// defaults to `[window, max_lag]`.
    pub plateau_lags: Option<(usize, usize)>,
    pub histogram_bins: usize,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            filter: FilterKind::Tmfg,
            class: MotifClass::Triangle,
            k: 10,
            n_samples: 100_000,
            split: 0.8,
            plateau_lags: None,
            histogram_bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSpec,
    /// Correlation window δ in trading days.
    pub window: usize,
    /// Exponential smoothing scale θ.
    pub theta: f64,
    /// Starting layers `T` averaged over.
    pub starting_points: usize,
    /// Largest lag `𝒯`.
    pub max_lag: usize,
    pub filters: Vec<FilterKind>,
    pub weight_transform: WeightTransform,
    pub null_models: Vec<NullModelKind>,
    pub realisations: usize,
    pub breakpoint: BreakpointSearch,
    pub analytics: AnalyticsConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Accept windows not longer than the number of assets.
    pub allow_short_window: bool,
    pub export_layers: bool,
    pub export_graphs: bool,
    pub export_surrogates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: InputSpec::Synthetic { config: SyntheticConfig::default() },
            window: 126,
            theta: 46.0,
            starting_points: 200,
            max_lag: 900,
            filters: vec![FilterKind::Tmfg, FilterKind::Quantile],
            weight_transform: WeightTransform::Absolute,
            null_models: NullModelKind::ALL.to_vec(),
            realisations: 10,
            breakpoint: BreakpointSearch::default(),
            analytics: AnalyticsConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
            allow_short_window: false,
            export_layers: false,
            export_graphs: false,
            export_surrogates: false,
        }
    }
}

impl RunConfig {
    /// Laptop-sized run: 30 synthetic assets, `T = 50`, `𝒯 = 250`, 5 realisations, 10⁴ portfolios.
    pub fn desk() -> Self {
        let synth = SyntheticConfig { n_assets: 30, n_dates: 560, n_sectors: 5, ..SyntheticConfig::default() };
        Self {
            input: InputSpec::Synthetic { config: synth },
            starting_points: 50,
            max_lag: 250,
            realisations: 5,
            analytics: AnalyticsConfig { n_samples: 10_000, ..AnalyticsConfig::default() },
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::default()),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.window < 2 || !(self.theta > 0.0) {
            return bad(format!("window {} must be >= 2 and theta {} positive", self.window, self.theta));
        }
        if self.starting_points < 1 || self.max_lag < 2 {
            return bad("starting_points must be >= 1 and max_lag >= 2".into());
        }
        if self.filters.is_empty() {
            return bad("at least one filter is required".into());
        }
        for (i, f) in self.filters.iter().enumerate() {
            if self.filters[..i].contains(f) {
                return bad(format!("filter {} listed twice", f.name()));
            }
        }
        for (i, m) in self.null_models.iter().enumerate() {
            if self.null_models[..i].contains(m) {
                return bad(format!("null model {} listed twice", m.name()));
            }
        }
        if !self.null_models.is_empty() && self.realisations < 1 {
            return bad("realisations must be >= 1".into());
        }
        if self.breakpoint.min_segment < 2 {
            return bad("breakpoint.min_segment must be >= 2".into());
        }
        let a = &self.analytics;
        if !self.filters.contains(&a.filter) {
            return bad(format!("analytics filter {} is not among the filters run", a.filter.name()));
        }
        if a.filter == FilterKind::Quantile && a.class.requires_clique_tree() {
            return bad(format!("class {} is only defined for TMFG graphs", a.class));
        }
        if a.k < 1 || a.n_samples < 1 || a.histogram_bins < 1 {
            return bad("analytics k, n_samples and histogram_bins must be >= 1".into());
        }
        if !(a.split > 0.0 && a.split < 1.0) {
            return bad(format!("analytics split {} must lie in (0, 1)", a.split));
        }
        let (lo, hi) = self.plateau_lags();
        if lo < 1 || lo > hi || hi > self.max_lag {
            return bad(format!("plateau lags {lo}..={hi} must lie within 1..={}", self.max_lag));
        }
        if let InputSpec::Synthetic { config } = &self.input {
            config.validate()?;
        }
        Ok(())
    }

    pub fn plateau_lags(&self) -> (usize, usize) {
        self.analytics.plateau_lags.unwrap_or((self.window.min(self.max_lag), self.max_lag))
    }

    /// Layers needed per source: `T + 𝒯`.
    pub fn layers_needed(&self) -> usize {
        self.starting_points + self.max_lag
    }

    /// Seed of one null model's ensemble.
    pub fn null_spec(&self, kind: NullModelKind) -> NullModelSpec {
        null_spec(self.seed, kind, self.window, self.realisations)
    }
}

/// Ensemble spec of `kind` derived from the master seed.
pub fn null_spec(master: u64, kind: NullModelKind, window: usize, realisations: usize) -> NullModelSpec {
    let idx = NullModelKind::ALL.iter().position(|k| *k == kind).expect("listed kind") as u64;
    NullModelSpec { kind, window, realisations, seed: derive_seed(master, &[1, idx]) }
}

pub fn portfolio_seed(master: u64) -> u64 {
    derive_seed(master, &[2])
}

/// Identifier of realisation `k` of a null model.
pub fn member_id(kind: NullModelKind, k: usize) -> String {
    format!("{}-{k}", kind.name())
}

/// Which layers feed the persistence estimate and which dates are out of sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan {
    /// Return-date index of the first layer's window end.
    pub first_anchor: usize,
    /// Layers computed per source (`T + 𝒯`).
    pub layers: usize,
    /// Layers available in the data and the estimation share of them.
    pub available_layers: usize,
    pub estimation_layers: usize,
    /// Out-of-sample return dates, after the last estimation anchor.
    pub out_of_sample: Range<usize>,
}

impl Plan {
    pub fn new(n_dates: usize, window: usize, layers: usize, split: f64) -> Result<Self> {
        if n_dates < window {
            return Err(Error::InsufficientHistory { needed: window, available: n_dates });
        }
        let available = n_dates - window + 1;
        let estimation = (split * available as f64).floor() as usize;
        if estimation < layers {
            return Err(Error::InsufficientHistory {
                needed: window - 1 + (layers as f64 / split).ceil() as usize,
                available: n_dates,
            });
        }
        let first_anchor = window - 1;
        let oos = (first_anchor + estimation)..n_dates;
        if oos.len() < 2 {
            return Err(Error::InsufficientHistory { needed: oos.start + 2, available: n_dates });
        }
        Ok(Self { first_anchor, layers, available_layers: available, estimation_layers: estimation, out_of_sample: oos })
    }
}

/// Loads the configured input into log-returns with sector labels.
pub fn load_input(input: &InputSpec) -> Result<ReturnMatrix<f64>> {
    match input {
        InputSpec::Files { prices, metadata } => {
            let panel = load_prices::<f64>(prices)?;
            let returns = compute_log_returns(&panel)?;
            let meta = match metadata {
                Some(p) => load_metadata(p)?,
                None => Vec::new(),
            };
            attach_metadata(&returns, &meta)
        }
        InputSpec::Synthetic { config } => {
            let (panel, meta) = config.generate::<f64>()?;
            attach_metadata(&compute_log_returns(&panel)?, &meta)
        }
    }
}

/// Rejects `δ <= N` unless explicitly allowed, in which case it only warns.
pub fn check_window(window: usize, n_assets: usize, allow: bool) -> Result<()> {
    if window <= n_assets {
        if !allow {
            return Err(Error::Config(format!(
                "window {window} is not longer than the {n_assets} assets; correlation matrices would be ill-conditioned (set allow_short_window to override)"
            )));
        }
        log::warn!("window {window} <= {n_assets} assets; continuing because allow_short_window is set");
    }
    Ok(())
}

pub fn compute_layers(
    returns: &ReturnMatrix<f64>,
    window: usize,
    theta: f64,
    first_anchor: usize,
    count: usize,
    source: &str,
) -> Result<LayerSequence<f64>> {
    let w = exp_weights(window, theta)?;
    layer_sequence(returns, &w, first_anchor, count, source)
}

/// Filters every layer and splits the graphs into motif inventories.
pub fn filter_layers(
    layers: &[CorrelationLayer<f64>],
    kind: FilterKind,
    transform: WeightTransform,
) -> Result<Vec<(FilteredGraph<f64>, MotifInventory)>> {
    layers
        .par_iter()
        .map(|l| {
            let (g, tree) = match kind {
                FilterKind::Tmfg => {
                    let (g, t) = tmfg(l, transform)?;
                    (g, Some(t))
                }
                FilterKind::Quantile => (quantile_threshold(l, 3 * l.n() - 6, transform)?, None),
            };
            let inv = motif_inventory(&g, tree.as_ref())?;
            Ok((g, inv))
        })
        .collect()
}

/// One curve per motif class the filter defines.
pub fn class_curves(inventories: &[MotifInventory], starting_points: usize, max_lag: usize) -> Result<Vec<PersistenceCurve<f64>>> {
    let classes = inventories.first().ok_or_else(|| Error::Data("no filtered layers".into()))?.classes();
    classes.iter().map(|&c| persistence_curve(inventories, c, starting_points, max_lag)).collect()
}

/// Fits every curve; failures are returned as messages rather than aborting.
pub fn fit_curves(
    curve_id: &str,
    curves: &[PersistenceCurve<f64>],
    search: &BreakpointSearch,
) -> (Vec<FitRow<f64>>, Vec<String>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for c in curves {
        match two_regime_fit(c, search) {
            Ok(fit) => rows.push(FitRow { curve_id: curve_id.to_string(), class: c.class, fit }),
            Err(e) => {
                log::warn!("fit of {curve_id} {} failed: {e}", c.class);
                failures.push(format!("{curve_id} {}: {e}", c.class));
            }
        }
    }
    (rows, failures)
}

/// Pointwise mean of member curves; the standard error is taken across members.
pub fn ensemble_curve(members: &[&PersistenceCurve<f64>]) -> Result<PersistenceCurve<f64>> {
    let first = members.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    if members.iter().any(|c| c.class != first.class || c.values.len() != first.values.len()) {
        return Err(Error::InvalidArgument("ensemble curves differ in class or length".into()));
    }
    let r = members.len() as f64;
    let (mut values, mut std_err) = (Vec::new(), Vec::new());
    for tau in 0..first.values.len() {
        let xs: Vec<f64> = members.iter().map(|c| c.values[tau]).collect();
        let (m, s) = crate::scalar::mean_std(&xs);
        values.push(m);
        std_err.push(s / r.sqrt());
    }
    Ok(PersistenceCurve {
        class: first.class,
        values,
        std_err,
        starting_points: members.iter().map(|c| c.starting_points).sum(),
        mean_count: members.iter().map(|c| c.mean_count).sum::<f64>() / r,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerIndex {
    pub source: String,
    pub tickers: Vec<String>,
    pub window: usize,
    pub theta: f64,
    pub anchors: Vec<usize>,
}

pub fn layer_file(dir: &Path, anchor: usize) -> PathBuf {
    dir.join(format!("layer_{anchor:06}.csv"))
}

pub fn write_layer_dir(dir: &Path, tickers: &[String], window: usize, theta: f64, seq: &LayerSequence<f64>) -> Result<()> {
    for l in &seq.layers {
        io::write_layer(layer_file(dir, l.anchor()), tickers, l)?;
    }
    let index = LayerIndex {
        source: seq.source.clone(),
        tickers: tickers.to_vec(),
        window,
        theta,
        anchors: seq.layers.iter().map(|l| l.anchor()).collect(),
    };
    io::write_json(dir.join("index.json"), &index)
}

pub fn read_layer_dir(dir: &Path) -> Result<(LayerIndex, LayerSequence<f64>)> {
    let index: LayerIndex = io::read_json(dir.join("index.json"))?;
    let layers = index
        .anchors
        .par_iter()
        .map(|&a| {
            let path = layer_file(dir, a);
            let (tickers, layer) = io::read_layer::<f64>(&path, a)?;
            if tickers != index.tickers {
                return Err(Error::schema(path, "tickers differ from index.json"));
            }
            Ok(layer)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((index.clone(), LayerSequence { source: index.source, layers }))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphIndex {
    pub source: String,
    pub filter: FilterKind,
    pub n: usize,
    pub anchors: Vec<usize>,
}

pub fn write_graph_dir(dir: &Path, source: &str, kind: FilterKind, graphs: &[(FilteredGraph<f64>, MotifInventory)]) -> Result<()> {
    for (g, inv) in graphs {
        io::write_edges(dir.join(format!("edges_{:06}.csv", g.anchor())), g)?;
        io::write_inventory(dir.join(format!("inventory_{:06}.csv", g.anchor())), inv)?;
    }
    let index = GraphIndex {
        source: source.to_string(),
        filter: kind,
        n: graphs.first().map_or(0, |(g, _)| g.n()),
        anchors: graphs.iter().map(|(g, _)| g.anchor()).collect(),
    };
    io::write_json(dir.join("index.json"), &index)
}

pub fn read_graph_dir(dir: &Path) -> Result<(GraphIndex, Vec<MotifInventory>)> {
    let index: GraphIndex = io::read_json(dir.join("index.json"))?;
    let invs = index
        .anchors
        .par_iter()
        .map(|&a| io::read_inventory(dir.join(format!("inventory_{a:06}.csv")), index.filter, index.n))
        .collect::<Result<Vec<_>>>()?;
    Ok((index, invs))
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedEntry {
    pub vertices: Vec<u32>,
    pub tickers: Vec<String>,
    pub sectors: Vec<String>,
    pub plateau_persistence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringEntry {
    pub filter: FilterKind,
    pub mean_clustering: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PortfolioSummary {
    #[serde(flatten)]
    pub report: PortfolioReport<f64>,
    pub start_date: String,
    pub end_date: String,
}

/// Analytics of the real source, written to `analytics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticsReport {
    pub filter: FilterKind,
    pub class: MotifClass,
    pub tau_plat: usize,
    pub k: usize,
    pub short: bool,
    pub ranked_motifs: Vec<RankedEntry>,
    pub sector_purity: SectorPurity,
    pub triplet_overlap: Option<Vec<usize>>,
    pub persistence_vs_strength: Option<StrengthStats>,
    pub portfolio: PortfolioSummary,
    pub plateau_lags: (usize, usize),
    pub clustering: Vec<ClusteringEntry>,
}

/// Inputs of the analytics stage.
pub struct AnalyticsInput<'a> {
    pub returns: &'a ReturnMatrix<f64>,
    pub layers: &'a [CorrelationLayer<f64>],
    /// Inventories of every filter run; the analytics filter must be among them.
    pub inventories: &'a [(FilterKind, &'a [MotifInventory])],
    pub tau_plat: usize,
    pub oos: Range<usize>,
}

/// Ranks the persistent motifs and runs the downstream analyses.
pub fn analyze(
    cfg: &RunConfig,
    input: &AnalyticsInput<'_>,
) -> Result<(AnalyticsReport, MotifPersistenceTable<f64>, Vec<f64>)> {
    let a = &cfg.analytics;
    let (t, max_lag) = (cfg.starting_points, cfg.max_lag);
    let invs = input
        .inventories
        .iter()
        .find(|(k, _)| *k == a.filter)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::InvalidArgument(format!("no {} graphs supplied", a.filter.name())))?;
    let table = plateau_persistence::<f64>(invs, a.class, input.tau_plat, max_lag, t)?;
    let ranked = rank_persistent_motifs(&table, a.class, a.k)?;
    let returns = input.returns;
    let sectors: Vec<String> = match returns.sectors() {
        Some(s) => s.to_vec(),
        None => vec![crate::ingest::UNKNOWN_SECTOR.to_string(); returns.n_assets()],
    };
    let purity = sector_purity(&ranked, &sectors)?;
    let overlap = if a.class.arity() == 3 { Some(triplet_overlap(&ranked, input.layers, a.k)?) } else { None };
    let strength = match persistence_vs_strength(&table, input.layers) {
        Ok(s) => Some(s),
        Err(Error::InvalidArgument(m)) => {
            log::warn!("persistence-vs-strength skipped: {m}");
            None
        }
        Err(e) => return Err(e),
    };
    let assets = ranked.vertex_union();
    let report = random_portfolio_test(returns, &assets, a.n_samples, portfolio_seed(cfg.seed), input.oos.clone())?;
    let sample = report.sample.clone();
    let dates = returns.dates();
    let portfolio = PortfolioSummary {
        start_date: dates[input.oos.start].to_string(),
        end_date: dates[input.oos.end - 1].to_string(),
        report,
    };
    let (lo, hi) = cfg.plateau_lags();
    let clustering = input
        .inventories
        .iter()
        .map(|(kind, inv)| Ok(ClusteringEntry { filter: *kind, mean_clustering: persistent_clustering(inv, t, lo, hi)? }))
        .collect::<Result<Vec<_>>>()?;
    let ranked_motifs = ranked
        .entries
        .iter()
        .map(|(key, p)| RankedEntry {
            vertices: key.vertices().to_vec(),
            tickers: key.vertices().iter().map(|&v| returns.assets()[v as usize].clone()).collect(),
            sectors: key.vertices().iter().map(|&v| sectors[v as usize].clone()).collect(),
            plateau_persistence: *p,
        })
        .collect();
    Ok((
        AnalyticsReport {
            filter: a.filter,
            class: a.class,
            tau_plat: input.tau_plat,
            k: a.k,
            short: ranked.short,
            ranked_motifs,
            sector_purity: purity,
            triplet_overlap: overlap,
            persistence_vs_strength: strength,
            portfolio,
            plateau_lags: (lo, hi),
            clustering,
        },
        table,
        sample,
    ))
}

/// Writes the analytics JSON, motif table and volatility CSVs into `out`.
pub fn write_analytics(
    out: &Path,
    cfg: &RunConfig,
    report: &AnalyticsReport,
    table: &MotifPersistenceTable<f64>,
    sample: &[f64],
) -> Result<()> {
    io::write_json(out.join("analytics.json"), report)?;
    io::write_motif_table(out.join(motif_table_name(cfg.analytics.filter, cfg.analytics.class)), table)?;
    io::write_sample(out.join("portfolio_sample.csv"), sample)?;
    io::write_histogram(
        out.join("portfolio_histogram.csv"),
        sample,
        report.portfolio.report.motif_volatility,
        cfg.analytics.histogram_bins,
    )
}

pub fn motif_table_name(filter: FilterKind, class: MotifClass) -> String {
    format!("motifs/real_{}_{}.csv", filter.name(), class.name())
}

pub fn curve_file(source: &str, filter: FilterKind) -> String {
    format!("curves/{source}_{}.csv", filter.name())
}

pub fn curve_id(source: &str, filter: FilterKind) -> String {
    format!("{source}/{}", filter.name())
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateauLevel {
    pub source: String,
    pub filter: FilterKind,
    pub class: MotifClass,
    pub mean_persistence: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceEntry {
    pub filter: FilterKind,
    pub class: MotifClass,
    pub edges: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub adjusted_alpha1: f64,
    pub adjusted_alpha2: f64,
    pub edge_alpha1: f64,
    pub edge_alpha2: f64,
}

/// Cross-source comparisons, written to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub n_assets: usize,
    pub n_return_dates: usize,
    pub plan: Plan,
    pub estimation_start: String,
    pub estimation_end: String,
    pub sources: Vec<String>,
    pub plateau_levels: Vec<PlateauLevel>,
    pub independence: Vec<IndependenceEntry>,
    pub fit_failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub seed: u64,
    pub status: String,
    pub config: RunConfig,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";
pub const FAILED: &str = "FAILED";

/// Every regular file under `dir` except the manifest, with checksums, sorted by path.
pub fn checksum_tree(dir: &Path) -> Result<Vec<ManifestEntry>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
                continue;
            }
            let rel = path.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            if rel == MANIFEST {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let digest = Sha256::digest(&bytes);
            let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
            out.push(ManifestEntry { path: rel, bytes: bytes.len() as u64, sha256 });
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

pub fn write_manifest(dir: &Path, cfg: &RunConfig, status: &str) -> Result<Manifest> {
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        status: status.to_string(),
        config: cfg.clone(),
        files: checksum_tree(dir)?,
    };
    io::write_json(dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Runs `f` on a pool of `workers` threads (0 = default pool size).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Full pipeline. On failure the partial outputs stay in place next to a `FAILED` marker.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.output_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let failed = out.join(FAILED);
    if failed.exists() {
        fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?;
    }
    let result = with_workers(cfg.workers, || run_stages(cfg, out))?;
    match result {
        Ok(summary) => {
            write_manifest(out, cfg, "ok")?;
            Ok(summary)
        }
        Err(e) => {
            fs::write(&failed, format!("{e}\n")).map_err(|err| Error::io(&failed, err))?;
            let _ = write_manifest(out, cfg, "failed");
            Err(e)
        }
    }
}

struct SourceOutput {
    layers: LayerSequence<f64>,
    inventories: Vec<(FilterKind, Vec<MotifInventory>)>,
    curves: Vec<(FilterKind, Vec<PersistenceCurve<f64>>)>,
}

fn process_source(cfg: &RunConfig, plan: &Plan, out: &Path, returns: &ReturnMatrix<f64>, id: &str) -> Result<SourceOutput> {
    let layers = compute_layers(returns, cfg.window, cfg.theta, plan.first_anchor, plan.layers, id)
        .map_err(|e| e.in_stage("correlate"))?;
    if cfg.export_layers {
        write_layer_dir(&out.join("layers").join(id), returns.assets(), cfg.window, cfg.theta, &layers)?;
    }
    let mut inventories = Vec::new();
    let mut curves = Vec::new();
    for &kind in &cfg.filters {
        let graphs = filter_layers(&layers.layers, kind, cfg.weight_transform).map_err(|e| e.in_stage("filter"))?;
        if cfg.export_graphs {
            write_graph_dir(&out.join("graphs").join(id).join(kind.name()), id, kind, &graphs)?;
        }
        let invs: Vec<MotifInventory> = graphs.into_iter().map(|(_, inv)| inv).collect();
        let c = class_curves(&invs, cfg.starting_points, cfg.max_lag).map_err(|e| e.in_stage("persist"))?;
        io::write_curves(out.join(curve_file(id, kind)), &c)?;
        curves.push((kind, c));
        inventories.push((kind, invs));
    }
    Ok(SourceOutput { layers, inventories, curves })
}

fn run_stages(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    io::write_json(out.join("config.json"), cfg)?;
    let returns = load_input(&cfg.input).map_err(|e| e.in_stage("ingest"))?;
    check_window(cfg.window, returns.n_assets(), cfg.allow_short_window)?;
    let plan = Plan::new(returns.n_dates(), cfg.window, cfg.layers_needed(), cfg.analytics.split)
        .map_err(|e| e.in_stage("ingest"))?;
    io::write_returns(out.join("returns.csv"), &returns)?;
    if let Some(sectors) = returns.sectors() {
        let meta: Vec<AssetMeta> = returns
            .assets()
            .iter()
            .zip(sectors)
            .map(|(t, s)| AssetMeta { ticker: t.clone(), sector: Some(s.clone()) })
            .collect();
        io::write_metadata(out.join("metadata.csv"), &meta)?;
    }
    log::info!(
        "{} assets, {} return dates, {} layers per source from anchor {}",
        returns.n_assets(),
        returns.n_dates(),
        plan.layers,
        plan.first_anchor
    );

    let mut fits: Vec<FitRow<f64>> = Vec::new();
    let mut failures = Vec::new();
    let mut levels = Vec::new();
    let (lo, hi) = cfg.plateau_lags();
    let mut level_of = |source: &str, kind: FilterKind, c: &PersistenceCurve<f64>| {
        if c.class == MotifClass::Edge {
            let se = c.std_err[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            levels.push(PlateauLevel {
                source: source.to_string(),
                filter: kind,
                class: c.class,
                mean_persistence: c.mean_over(lo, hi),
                std_err: se,
            });
        }
    };

    log::info!("processing real source");
    let real = process_source(cfg, &plan, out, &returns, "real")?;
    for (kind, curves) in &real.curves {
        let (rows, fail) = fit_curves(&curve_id("real", *kind), curves, &cfg.breakpoint);
        fits.extend(rows);
        failures.extend(fail);
        curves.iter().for_each(|c| level_of("real", *kind, c));
    }

    let mut independence = Vec::new();
    for (kind, invs) in &real.inventories {
        let classes: Vec<MotifClass> = invs[0].classes().iter().copied().filter(|c| *c != MotifClass::Edge).collect();
        let nulls = classes
            .iter()
            .map(|&c| motif_null_curve::<f64>(invs, c, cfg.starting_points, cfg.max_lag))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("persist"))?;
        let id = format!("real/{}/independence", kind.name());
        io::write_curves(out.join(format!("curves/real_{}_independence.csv", kind.name())), &nulls)?;
        let (rows, fail) = fit_curves(&id, &nulls, &cfg.breakpoint);
        fits.extend(rows);
        failures.extend(fail);
        let real_id = curve_id("real", *kind);
        let find = |class: MotifClass| fits.iter().find(|r| r.curve_id == real_id && r.class == class).map(|r| r.fit);
        if let Some(edge) = find(MotifClass::Edge) {
            for &c in &classes {
                if let Some(f) = find(c) {
                    let m = c.arity() * (c.arity() - 1) / 2;
                    independence.push(IndependenceEntry {
                        filter: *kind,
                        class: c,
                        edges: m,
                        alpha1: f.alpha1,
                        alpha2: f.alpha2,
                        adjusted_alpha1: independence_adjusted_exponent(f.alpha1, m)?,
                        adjusted_alpha2: independence_adjusted_exponent(f.alpha2, m)?,
                        edge_alpha1: edge.alpha1,
                        edge_alpha2: edge.alpha2,
                    });
                }
            }
        }
    }

    let mut sources = vec!["real".to_string()];
    for &model in &cfg.null_models {
        let spec = cfg.null_spec(model);
        let mut member_curves: Vec<Vec<(FilterKind, Vec<PersistenceCurve<f64>>)>> = Vec::new();
        for k in 0..spec.realisations {
            let id = member_id(model, k);
            log::info!("processing {id}");
            let surrogate = generate_member(&returns, &spec, k).map_err(|e| e.in_stage("simulate"))?;
            if cfg.export_surrogates {
                io::write_returns(out.join("surrogates").join(format!("{id}.csv")), &surrogate)?;
            }
            let res = process_source(cfg, &plan, out, &surrogate, &id)?;
            for (kind, curves) in &res.curves {
                let (rows, fail) = fit_curves(&curve_id(&id, *kind), curves, &cfg.breakpoint);
                fits.extend(rows);
                failures.extend(fail);
            }
            member_curves.push(res.curves);
            sources.push(id);
        }
        for (fi, &kind) in cfg.filters.iter().enumerate() {
            let n_classes = member_curves[0][fi].1.len();
            let agg = (0..n_classes)
                .map(|ci| ensemble_curve(&member_curves.iter().map(|m| &m[fi].1[ci]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            let id = format!("ensemble-{}", model.name());
            io::write_curves(out.join(curve_file(&id, kind)), &agg)?;
            let (rows, fail) = fit_curves(&curve_id(&id, kind), &agg, &cfg.breakpoint);
            fits.extend(rows);
            failures.extend(fail);
            agg.iter().for_each(|c| level_of(&id, kind, c));
        }
    }
    io::write_fits(out.join("fits.csv"), &fits)?;

    let a = &cfg.analytics;
    let real_id = curve_id("real", a.filter);
    let tau_plat = fits
        .iter()
        .find(|r| r.curve_id == real_id && r.class == a.class)
        .map(|r| r.fit.tau_plat)
        .ok_or_else(|| Error::Numeric(format!("no decay fit for {real_id} {}", a.class)).in_stage("fit"))?;
    let inv_refs: Vec<(FilterKind, &[MotifInventory])> =
        real.inventories.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let input = AnalyticsInput {
        returns: &returns,
        layers: &real.layers.layers,
        inventories: &inv_refs,
        tau_plat,
        oos: plan.out_of_sample.clone(),
    };
    let (report, table, sample) = analyze(cfg, &input).map_err(|e| e.in_stage("analyze"))?;
    write_analytics(out, cfg, &report, &table, &sample)?;

    let dates = returns.dates();
    let summary = RunSummary {
        n_assets: returns.n_assets(),
        n_return_dates: returns.n_dates(),
        estimation_start: dates[plan.first_anchor].to_string(),
        estimation_end: dates[plan.first_anchor + plan.layers - 1].to_string(),
        plan,
        sources,
        plateau_levels: levels,
        independence,
        fit_failures: failures,
    };
    io::write_json(out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Plateau levels keyed by `(source, filter)`, convenient for comparisons.
pub fn levels_by_source(summary: &RunSummary) -> BTreeMap<(String, String), f64> {
    summary
        .plateau_levels
        .iter()
        .map(|l| ((l.source.clone(), l.filter.name().to_string()), l.mean_persistence))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> RunConfig {
        let synth = SyntheticConfig { n_assets: 8, n_dates: 140, n_sectors: 2, ..SyntheticConfig::default() };
        RunConfig {
            input: InputSpec::Synthetic { config: synth },
            window: 20,
            theta: 8.0,
            starting_points: 10,
            max_lag: 40,
            null_models: vec![NullModelKind::Shuffle, NullModelKind::StableMultivariateGaussian],
            realisations: 2,
            analytics: AnalyticsConfig { k: 3, n_samples: 200, ..AnalyticsConfig::default() },
            output_dir: dir.to_path_buf(),
            workers: 1,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_defaults_and_json() {
        let c = RunConfig::default();
        assert_eq!((c.window, c.theta, c.starting_points, c.max_lag, c.realisations), (126, 46.0, 200, 900, 10));
        assert_eq!(c.analytics.k, 10);
        assert_eq!(c.analytics.n_samples, 100_000);
        let parsed: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(parsed, c);
        let partial: RunConfig = serde_json::from_str(r#"{"seed": 5, "input": {"kind": "files", "prices": "p.csv"}}"#).unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.window, 126);
        assert!(serde_json::from_str::<RunConfig>(r#"{"windw": 5}"#).is_err());
        let desk = RunConfig::desk();
        assert_eq!((desk.starting_points, desk.max_lag, desk.realisations, desk.analytics.n_samples), (50, 250, 5, 10_000));
        desk.validate().unwrap();
    }

    #[test]
    fn validation_errors_are_config_errors() {
        use crate::error::ErrorKind;
        let mut c = RunConfig::desk();
        c.analytics.split = 1.0;
        assert_eq!(c.validate().unwrap_err().kind(), ErrorKind::Config);
        let c = RunConfig { filters: vec![FilterKind::Quantile], ..RunConfig::desk() };
        assert!(c.validate().is_err());
        let mut c = RunConfig { filters: vec![FilterKind::Quantile], ..RunConfig::desk() };
        c.analytics.filter = FilterKind::Quantile;
        c.analytics.class = MotifClass::Separator;
        assert!(c.validate().is_err());
        assert!(check_window(30, 30, false).is_err());
        assert!(check_window(30, 30, true).is_ok());
        assert!(check_window(126, 100, false).is_ok());
    }

    #[test]
    fn plan_layout() {
        let p = Plan::new(559, 126, 300, 0.8).unwrap();
        assert_eq!(p.available_layers, 434);
        assert_eq!(p.estimation_layers, 347);
        assert_eq!(p.first_anchor, 125);
        assert_eq!(p.out_of_sample, 472..559);
        assert!(p.out_of_sample.start > p.first_anchor + p.layers - 1);
        assert!(matches!(Plan::new(400, 126, 300, 0.8), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn small_run_completes_and_is_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sa = run(&small(a.path())).unwrap();
        run(&RunConfig { workers: 3, ..small(b.path()) }).unwrap();
        assert_eq!(sa.sources.len(), 5);
        for name in ["returns.csv", "fits.csv", "analytics.json", "summary.json", "curves/real_tmfg.csv", "curves/ensemble-shuffle_quantile.csv"] {
            let x = fs::read(a.path().join(name)).unwrap();
            assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
        }
        let m: Manifest = io::read_json(a.path().join(MANIFEST)).unwrap();
        assert_eq!(m.status, "ok");
        assert!(m.files.iter().any(|f| f.path == "fits.csv" && f.sha256.len() == 64));
        assert!(!a.path().join(FAILED).exists());
    }

    #[test]
    fn failure_leaves_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.max_lag = 200;
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
        assert!(dir.path().join(FAILED).exists());
        assert!(dir.path().join("config.json").exists());
    }
}

//! `motifmem`: stage-by-stage and end-to-end motif persistence runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use motif_memory::analytics::TRADING_DAYS;
use motif_memory::error::{Error, ErrorKind};
use motif_memory::filter_graph::{FilterKind, MotifInventory, WeightTransform};
use motif_memory::ingest::{attach_metadata, compute_log_returns, load_metadata, load_prices, AssetMeta};
use motif_memory::io::{self, FitRow};
use motif_memory::motif::MotifClass;
use motif_memory::null_models::{generate_member, NullModelKind};
use motif_memory::persistence::{motif_null_curve, plateau_persistence};
use motif_memory::pipeline::{self, AnalyticsInput, InputSpec, Plan, RunConfig};
use motif_memory::synthetic::PlantedBlock;

#[derive(Parser)]
#[command(name = "motifmem", version, about = "Soft persistence of motifs in filtered correlation networks")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

/// Shared parameters come from a run configuration; flags override single fields.
#[derive(Args, Clone)]
struct Base {
    /// Run configuration JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (`desk` or `paper`) used when no config is given.
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl Base {
    fn load(&self) -> motif_memory::Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::default(),
        };
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic price panel and sector metadata.
    Synth {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        n_assets: Option<usize>,
        #[arg(long)]
        n_dates: Option<usize>,
        #[arg(long)]
        n_sectors: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Plant a high-correlation block on the first assets.
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        block_loading: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prices CSV to log-returns CSV.
    Ingest {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Output directory for returns.csv and metadata.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Surrogate return matrices from one null model.
    Simulate {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        returns: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        realisations: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        /// Master seed; member seeds are derived as in `run`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weighted Kendall layers over rolling windows.
    Correlate {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        returns: PathBuf,
        /// Source label stored with the layers.
        #[arg(long, default_value = "real")]
        source: String,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter a layer directory into graphs and motif inventories.
    Filter {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        layers: PathBuf,
        /// `tmfg` or `quantile`.
        #[arg(long)]
        filter: String,
        /// `absolute` or `signed`.
        #[arg(long)]
        transform: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Persistence curves of a graph directory.
    Persist {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        starting_points: Option<usize>,
        #[arg(long)]
        max_lag: Option<usize>,
        /// Curves CSV.
        #[arg(long)]
        out: PathBuf,
        /// Also write the edge-independence null curves here.
        #[arg(long)]
        independence: Option<PathBuf>,
        /// Also write the per-motif plateau table here (needs --tau-plat).
        #[arg(long, requires = "tau_plat")]
        table: Option<PathBuf>,
        #[arg(long, default_value = "triangle")]
        class: String,
        #[arg(long)]
        tau_plat: Option<usize>,
    },
    /// Two-regime power-law fits of curve files.
    Fit {
        #[command(flatten)]
        base: Base,
        /// Curves CSV; repeat together with --curve-id.
        #[arg(long, required = true)]
        curves: Vec<PathBuf>,
        /// Identifier written for the matching --curves file.
        #[arg(long, required = true)]
        curve_id: Vec<String>,
        #[arg(long)]
        min_segment: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ranked motifs, sector purity, overlap, strength and portfolio test.
    Analyze {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        returns: PathBuf,
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Layer directory of the real source.
        #[arg(long)]
        layers: PathBuf,
        /// Graph directories of the real source, one per filter.
        #[arg(long, required = true)]
        graphs: Vec<PathBuf>,
        /// Fits CSV holding the real curve fit that sets τ_plat.
        #[arg(long, conflicts_with = "tau_plat")]
        fits: Option<PathBuf>,
        #[arg(long)]
        tau_plat: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline from one configuration.
    Run {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn by_name<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> motif_memory::Result<T> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} `{s}`")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()).map(Error::kind) {
        Some(ErrorKind::Config) | None => 1,
        Some(ErrorKind::Data) => 2,
        Some(ErrorKind::Numeric) => 3,
    }
}

fn pooled<T: Send>(workers: usize, f: impl FnOnce() -> anyhow::Result<T> + Send) -> anyhow::Result<T> {
    pipeline::with_workers(workers, f)?
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Synth { base, n_assets, n_dates, n_sectors, seed, block_size, block_loading, out } => {
            let cfg = base.load()?;
            let mut synth = match cfg.input {
                InputSpec::Synthetic { config } => config,
                InputSpec::Files { .. } => bail!(Error::Config("configuration input is not synthetic".into())),
            };
            synth.n_assets = n_assets.unwrap_or(synth.n_assets);
            synth.n_dates = n_dates.unwrap_or(synth.n_dates);
            synth.n_sectors = n_sectors.unwrap_or(synth.n_sectors);
            synth.seed = seed.unwrap_or(synth.seed);
            if let Some(size) = block_size {
                synth.planted_block = Some(PlantedBlock { size, loading: block_loading });
            }
            let (panel, meta) = synth.generate::<f64>()?;
            io::write_prices(out.join("prices.csv"), &panel)?;
            io::write_metadata(out.join("metadata.csv"), &meta)?;
            log::info!("wrote {} assets x {} dates to {}", panel.n_assets(), panel.n_dates(), out.display());
        }
        Command::Ingest { prices, metadata, out } => {
            let panel = load_prices::<f64>(&prices)?;
            if panel.dropped_rows() > 0 {
                log::warn!("dropped {} rows with missing prices", panel.dropped_rows());
            }
            let returns = compute_log_returns(&panel)?;
            io::write_returns(out.join("returns.csv"), &returns)?;
            if let Some(m) = metadata {
                let meta = load_metadata(&m)?;
                let returns = attach_metadata(&returns, &meta)?;
                let sectors = returns.sectors().expect("metadata attached");
                let rows: Vec<AssetMeta> = returns
                    .assets()
                    .iter()
                    .zip(sectors)
                    .map(|(t, s)| AssetMeta { ticker: t.clone(), sector: Some(s.clone()) })
                    .collect();
                io::write_metadata(out.join("metadata.csv"), &rows)?;
            }
        }
        Command::Simulate { base, returns, model, realisations, window, seed, out } => {
            let cfg = base.load()?;
            let kind: NullModelKind = model.parse()?;
            let returns = io::read_returns::<f64>(&returns)?;
            let spec = pipeline::null_spec(
                seed.unwrap_or(cfg.seed),
                kind,
                window.unwrap_or(cfg.window),
                realisations.unwrap_or(cfg.realisations),
            );
            spec.validate()?;
            pooled(cfg.workers, || {
                for k in 0..spec.realisations {
                    let s = generate_member(&returns, &spec, k)?;
                    io::write_returns(out.join(format!("{}.csv", pipeline::member_id(kind, k))), &s)?;
                }
                Ok(())
            })?;
        }
        Command::Correlate { base, returns, source, window, theta, out } => {
            let mut cfg = base.load()?;
            cfg.window = window.unwrap_or(cfg.window);
            cfg.theta = theta.unwrap_or(cfg.theta);
            cfg.validate()?;
            let returns = io::read_returns::<f64>(&returns)?;
            pipeline::check_window(cfg.window, returns.n_assets(), cfg.allow_short_window)?;
            let plan = Plan::new(returns.n_dates(), cfg.window, cfg.layers_needed(), cfg.analytics.split)?;
            let seq = pooled(cfg.workers, || {
                Ok(pipeline::compute_layers(&returns, cfg.window, cfg.theta, plan.first_anchor, plan.layers, &source)?)
            })?;
            pipeline::write_layer_dir(&out, returns.assets(), cfg.window, cfg.theta, &seq)?;
            log::info!("wrote {} layers to {}", seq.len(), out.display());
        }
        Command::Filter { base, layers, filter, transform, out } => {
            let cfg = base.load()?;
            let kind: FilterKind = by_name("filter", &filter)?;
            let transform: WeightTransform = match transform {
                Some(t) => by_name("weight transform", &t)?,
                None => cfg.weight_transform,
            };
            let (index, seq) = pipeline::read_layer_dir(&layers)?;
            let graphs = pooled(cfg.workers, || Ok(pipeline::filter_layers(&seq.layers, kind, transform)?))?;
            pipeline::write_graph_dir(&out, &index.source, kind, &graphs)?;
        }
        Command::Persist { base, graphs, starting_points, max_lag, out, independence, table, class, tau_plat } => {
            let cfg = base.load()?;
            let t = starting_points.unwrap_or(cfg.starting_points);
            let max_lag = max_lag.unwrap_or(cfg.max_lag);
            let (_, invs) = pipeline::read_graph_dir(&graphs)?;
            pooled(cfg.workers, || {
                let curves = pipeline::class_curves(&invs, t, max_lag)?;
                io::write_curves(&out, &curves)?;
                if let Some(path) = &independence {
                    let nulls = invs[0]
                        .classes()
                        .iter()
                        .filter(|c| **c != MotifClass::Edge)
                        .map(|&c| motif_null_curve::<f64>(&invs, c, t, max_lag))
                        .collect::<motif_memory::Result<Vec<_>>>()?;
                    io::write_curves(path, &nulls)?;
                }
                if let (Some(path), Some(tp)) = (&table, tau_plat) {
                    let class: MotifClass = class.parse()?;
                    io::write_motif_table(path, &plateau_persistence::<f64>(&invs, class, tp, max_lag, t)?)?;
                }
                Ok(())
            })?;
        }
        Command::Fit { base, curves, curve_id, min_segment, out } => {
            if curves.len() != curve_id.len() {
                bail!(Error::Config(format!(
                    "{} --curves files but {} --curve-id values",
                    curves.len(),
                    curve_id.len()
                )));
            }
            let cfg = base.load()?;
            let mut search = cfg.breakpoint;
            search.min_segment = min_segment.unwrap_or(search.min_segment);
            let mut rows: Vec<FitRow<f64>> = Vec::new();
            let mut failed = Vec::new();
            for (path, id) in curves.iter().zip(&curve_id) {
                let c = io::read_curves::<f64>(path)?;
                let (r, f) = pipeline::fit_curves(id, &c, &search);
                rows.extend(r);
                failed.extend(f);
            }
            io::write_fits(&out, &rows)?;
            if rows.is_empty() && !failed.is_empty() {
                bail!(Error::Numeric(format!("every fit failed: {}", failed.join("; "))));
            }
        }
        Command::Analyze { base, returns, metadata, layers, graphs, fits, tau_plat, out } => {
            let cfg = base.load()?;
            cfg.validate()?;
            let mut r = io::read_returns::<f64>(&returns)?;
            if let Some(m) = metadata {
                r = attach_metadata(&r, &load_metadata(&m)?)?;
            }
            let plan = Plan::new(r.n_dates(), cfg.window, cfg.layers_needed(), cfg.analytics.split)?;
            let (_, seq) = pipeline::read_layer_dir(&layers)?;
            let mut invs: Vec<(FilterKind, Vec<MotifInventory>)> = Vec::new();
            for g in &graphs {
                let (index, inv) = pipeline::read_graph_dir(g)?;
                invs.push((index.filter, inv));
            }
            let a = &cfg.analytics;
            let tau_plat = match (tau_plat, fits) {
                (Some(tp), _) => tp,
                (None, Some(path)) => {
                    let id = pipeline::curve_id("real", a.filter);
                    io::read_fits::<f64>(&path)?
                        .iter()
                        .find(|row| row.curve_id == id && row.class == a.class)
                        .map(|row| row.fit.tau_plat)
                        .ok_or_else(|| anyhow!(Error::Data(format!("{} has no fit for {id} {}", path.display(), a.class))))?
                }
                (None, None) => bail!(Error::Config("analyze needs --fits or --tau-plat".into())),
            };
            let refs: Vec<(FilterKind, &[MotifInventory])> = invs.iter().map(|(k, v)| (*k, v.as_slice())).collect();
            let input = AnalyticsInput {
                returns: &r,
                layers: &seq.layers,
                inventories: &refs,
                tau_plat,
                oos: plan.out_of_sample.clone(),
            };
            let (report, table, sample) = pooled(cfg.workers, || Ok(pipeline::analyze(&cfg, &input)?))?;
            pipeline::write_analytics(&out, &cfg, &report, &table, &sample)?;
            let p = &report.portfolio.report;
            log::info!(
                "motif portfolio volatility {:.4} (annualised over {TRADING_DAYS} days), random mean {:.4}, z {}",
                p.motif_volatility,
                p.mean,
                p.z_score.map_or("n/a".to_string(), |z| format!("{z:.2}"))
            );
        }
        Command::Run { base, seed, out } => {
            let mut cfg = base.load()?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let summary = pipeline::run(&cfg).with_context(|| format!("run failed; see {}", failed_marker(&cfg.output_dir)))?;
            for l in &summary.plateau_levels {
                log::info!("{:<36} {:<9} plateau {:.4}", l.source, l.filter.name(), l.mean_persistence);
            }
            if !summary.fit_failures.is_empty() {
                log::warn!("{} fits failed; see summary.json", summary.fit_failures.len());
            }
        }
    }
    Ok(())
}

fn failed_marker(dir: &Path) -> String {
    dir.join(pipeline::FAILED).display().to_string()
}

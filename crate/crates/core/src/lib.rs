//! Long memory in filtered correlation networks.
//!
//! Daily returns are turned into rolling, exponentially smoothed Kendall
//! correlation layers, each layer is filtered into a sparse graph (TMFG or
//! quantile thresholding), and the soft persistence of edges, triangles,
//! separators and tetrahedra is tracked across layers. Persistence curves are
//! fitted by two power-law regimes, compared against null-model ensembles, and
//! the most persistent motifs feed sector and portfolio analytics.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common case.

pub mod analytics;
pub mod decay_fit;
pub mod error;
pub mod filter_graph;
pub mod ingest;
pub mod io;
pub mod motif;
pub mod null_models;
pub mod persistence;
pub mod pipeline;
pub mod scalar;
pub mod seeding;
pub mod synthetic;
pub mod weighted_corr;

pub use error::{Error, ErrorKind, Result};
pub use motif::{MotifClass, MotifKey};
pub use scalar::Real;

pub type PricePanel64 = ingest::PricePanel<f64>;
pub type PricePanel32 = ingest::PricePanel<f32>;
pub type ReturnMatrix64 = ingest::ReturnMatrix<f64>;
pub type ReturnMatrix32 = ingest::ReturnMatrix<f32>;
pub type ExpWeights64 = weighted_corr::ExpWeights<f64>;
pub type ExpWeights32 = weighted_corr::ExpWeights<f32>;
pub type CorrelationLayer64 = weighted_corr::CorrelationLayer<f64>;
pub type CorrelationLayer32 = weighted_corr::CorrelationLayer<f32>;
pub type LayerSequence64 = weighted_corr::LayerSequence<f64>;
pub type LayerSequence32 = weighted_corr::LayerSequence<f32>;
pub type FilteredGraph64 = filter_graph::FilteredGraph<f64>;
pub type FilteredGraph32 = filter_graph::FilteredGraph<f32>;
pub type PersistenceCurve64 = persistence::PersistenceCurve<f64>;
pub type PersistenceCurve32 = persistence::PersistenceCurve<f32>;
pub type MotifPersistenceTable64 = persistence::MotifPersistenceTable<f64>;
pub type MotifPersistenceTable32 = persistence::MotifPersistenceTable<f32>;
pub type DecayFit64 = decay_fit::DecayFit<f64>;
pub type DecayFit32 = decay_fit::DecayFit<f32>;
pub type SurrogateEnsemble64 = null_models::SurrogateEnsemble<f64>;
pub type SurrogateEnsemble32 = null_models::SurrogateEnsemble<f32>;

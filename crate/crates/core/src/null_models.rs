//! Surrogate return panels under four generative null hypotheses.
//!
//! Rolling statistics at date `t` use the trailing window `(t - δ, t]`; dates
//! before the first complete window reuse its statistics, so surrogates keep
//! the source length.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ReturnMatrix;
use crate::scalar::Real;
use crate::seeding::{derive_seed, rng_for};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-10;
/// Eigenvalues more negative than this fraction of the largest signal a corrupt covariance.
const EIGEN_NEGATIVE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModelKind {
    Shuffle,
    RollingUnivariateGaussian,
    StableMultivariateGaussian,
    RollingMultivariateGaussian,
}

impl NullModelKind {
    pub const ALL: [NullModelKind; 4] = [
        NullModelKind::Shuffle,
        NullModelKind::RollingUnivariateGaussian,
        NullModelKind::RollingMultivariateGaussian,
        NullModelKind::StableMultivariateGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NullModelKind::Shuffle => "shuffle",
            NullModelKind::RollingUnivariateGaussian => "rolling-univariate-gaussian",
            NullModelKind::StableMultivariateGaussian => "stable-multivariate-gaussian",
            NullModelKind::RollingMultivariateGaussian => "rolling-multivariate-gaussian",
        }
    }

    pub fn is_rolling(self) -> bool {
        matches!(self, NullModelKind::RollingUnivariateGaussian | NullModelKind::RollingMultivariateGaussian)
    }
}

impl std::str::FromStr for NullModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NullModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown null model `{s}`")))
    }
}

fn default_window() -> usize {
    126
}

fn default_realisations() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullModelSpec {
    pub kind: NullModelKind,
    /// Rolling window length in trading days (rolling kinds only).
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_realisations")]
    pub realisations: usize,
    #[serde(default)]
    pub seed: u64,
}

impl NullModelSpec {
    pub fn new(kind: NullModelKind, seed: u64) -> Self {
        Self { kind, window: default_window(), realisations: default_realisations(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realisations < 1 {
            return Err(Error::Config("realisations must be >= 1".into()));
        }
        if self.kind.is_rolling() && self.window < 2 {
            return Err(Error::Config(format!("rolling window must be >= 2, got {}", self.window)));
        }
        Ok(())
    }

    /// Seed of realisation `k`.
    pub fn member_seed(&self, k: usize) -> u64 {
        derive_seed(self.seed, &[k as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateEnsemble<F> {
    pub spec: NullModelSpec,
    pub members: Vec<ReturnMatrix<F>>,
}

/// Independent uniform permutation of each asset's series.
pub fn shuffle_returns<F: Real>(source: &ReturnMatrix<F>, seed: u64) -> Result<ReturnMatrix<F>> {
    let mut values = source.values().clone();
    for (a, mut row) in values.rows_mut().into_iter().enumerate() {
        let mut rng = rng_for(seed, &[a as u64]);
        let mut v = row.to_vec();
        v.shuffle(&mut rng);
        row.iter_mut().zip(v).for_each(|(dst, x)| *dst = x);
    }
    source.with_values(values)
}

fn check_window(len: usize, window: usize) -> Result<()> {
    if window < 2 {
        return Err(Error::InvalidArgument(format!("rolling window must be >= 2, got {window}")));
    }
    if len <= window {
        return Err(Error::InsufficientHistory { needed: window + 1, available: len });
    }
    Ok(())
}

/// Trailing window `[start, end)` for date `t`.
#[inline]
fn window_bounds(t: usize, window: usize) -> (usize, usize) {
    if t + 1 < window {
        (0, window)
    } else {
        (t + 1 - window, t + 1)
    }
}

/// Mean computed around the first element so constant inputs are reproduced exactly.
fn shifted_mean(xs: &[f64]) -> f64 {
    let c = xs[0];
    c + xs.iter().map(|x| x - c).sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn to_f64_rows<F: Real>(source: &ReturnMatrix<F>) -> Vec<Vec<f64>> {
    source.values().rows().into_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
}

/// Per asset, `r_t ~ N(μ_t, σ_t²)` from trailing-window sample moments.
pub fn rolling_univariate_gaussian<F: Real>(
    source: &ReturnMatrix<F>,
    window: usize,
    seed: u64,
) -> Result<ReturnMatrix<F>> {
    let len = source.n_dates();
    check_window(len, window)?;
    let rows = to_f64_rows(source);
    let mut values = Array2::<F>::zeros((source.n_assets(), len));
    for (a, series) in rows.iter().enumerate() {
        let mut rng = rng_for(seed, &[a as u64]);
        for t in 0..len {
            let (s, e) = window_bounds(t, window);
            let w = &series[s..e];
            let mu = shifted_mean(w);
            let sigma = sample_std(w, mu);
            let z: f64 = rng.sample(StandardNormal);
            values[[a, t]] = F::of(if sigma > 0.0 { mu + sigma * z } else { mu });
        }
    }
    source.with_values(values)
}

/// Draws `μ + L z` with `L L^T = Σ` from a clipped eigendecomposition.
/// Zero-variance coordinates are held at their mean.
struct GaussianSampler {
    mean: Vec<f64>,
    active: Vec<usize>,
    loading: DMatrix<f64>,
}

impl GaussianSampler {
    fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let active: Vec<usize> = (0..mean.len()).filter(|&i| cov[(i, i)] > 0.0).collect();
        let k = active.len();
        let mut reduced = DMatrix::<f64>::zeros(k, k);
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate() {
                reduced[(a, b)] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            }
        }
        if reduced.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite covariance".into()));
        }
        let loading = if k == 0 {
            reduced
        } else {
            let eig = SymmetricEigen::new(reduced);
            let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -EIGEN_NEGATIVE * max {
                return Err(Error::Numeric(format!(
                    "covariance not positive semidefinite (eigenvalue {min:e}, largest {max:e})"
                )));
            }
            let roots = eig.eigenvalues.map(|l| if l > EIGEN_CLIP * max { l.sqrt() } else { 0.0 });
            let mut v = eig.eigenvectors;
            for (c, r) in roots.iter().enumerate() {
                v.column_mut(c).scale_mut(*r);
            }
            v
        };
        Ok(Self { mean, active, loading })
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        out.copy_from_slice(&self.mean);
        let k = self.active.len();
        if k == 0 {
            return;
        }
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        for (a, &i) in self.active.iter().enumerate() {
            let mut acc = 0.0;
            for (c, zc) in z.iter().enumerate() {
                acc += self.loading[(a, c)] * zc;
            }
            out[i] += acc;
        }
    }
}

/// Mean vector and sample covariance of dates `[start, end)`.
fn moments(rows: &[Vec<f64>], start: usize, end: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.len();
    let len = end - start;
    let mean: Vec<f64> = rows.iter().map(|r| shifted_mean(&r[start..end])).collect();
    let centred: Vec<Vec<f64>> =
        rows.iter().zip(&mean).map(|(r, m)| r[start..end].iter().map(|x| x - m).collect()).collect();
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let c = s / (len - 1) as f64;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    (mean, cov)
}

/// Every date drawn i.i.d. from the full-sample mean and covariance.
pub fn stable_multivariate_gaussian<F: Real>(source: &ReturnMatrix<F>, seed: u64) -> Result<ReturnMatrix<F>> {
    let len = source.n_dates();
    if len < 2 {
        return Err(Error::InsufficientHistory { needed: 2, available: len });
    }
    let rows = to_f64_rows(source);
    let (mean, cov) = moments(&rows, 0, len);
    let sampler = GaussianSampler::new(mean, &cov)?;
    let mut rng = rng_for(seed, &[]);
    let n = source.n_assets();
    let mut values = Array2::<F>::zeros((n, len));
    let mut draw = vec![0.0; n];
    for t in 0..len {
        sampler.draw(&mut rng, &mut draw);
        for i in 0..n {
            values[[i, t]] = F::of(draw[i]);
        }
    }
    source.with_values(values)
}

/// Each date drawn from the trailing-window mean and covariance.
pub fn rolling_multivariate_gaussian<F: Real>(
    source: &ReturnMatrix<F>,
    window: usize,
    seed: u64,
) -> Result<ReturnMatrix<F>> {
    let len = source.n_dates();
    check_window(len, window)?;
    let rows = to_f64_rows(source);
    let n = source.n_assets();
    let mut rng = rng_for(seed, &[]);
    let mut values = Array2::<F>::zeros((n, len));
    let mut draw = vec![0.0; n];
    let mut cached: Option<((usize, usize), GaussianSampler)> = None;
    for t in 0..len {
        let bounds = window_bounds(t, window);
        if cached.as_ref().is_none_or(|(b, _)| *b != bounds) {
            let (mean, cov) = moments(&rows, bounds.0, bounds.1);
            cached = Some((bounds, GaussianSampler::new(mean, &cov)?));
        }
        let (_, sampler) = cached.as_ref().expect("sampler cached");
        sampler.draw(&mut rng, &mut draw);
        for i in 0..n {
            values[[i, t]] = F::of(draw[i]);
        }
    }
    source.with_values(values)
}

/// One realisation generated with an explicit seed.
pub fn generate_with_seed<F: Real>(source: &ReturnMatrix<F>, spec: &NullModelSpec, seed: u64) -> Result<ReturnMatrix<F>> {
    match spec.kind {
        NullModelKind::Shuffle => shuffle_returns(source, seed),
        NullModelKind::RollingUnivariateGaussian => rolling_univariate_gaussian(source, spec.window, seed),
        NullModelKind::StableMultivariateGaussian => stable_multivariate_gaussian(source, seed),
        NullModelKind::RollingMultivariateGaussian => rolling_multivariate_gaussian(source, spec.window, seed),
    }
}

/// Realisation `k` of the ensemble.
pub fn generate_member<F: Real>(source: &ReturnMatrix<F>, spec: &NullModelSpec, k: usize) -> Result<ReturnMatrix<F>> {
    generate_with_seed(source, spec, spec.member_seed(k))
}

/// All realisations; members are generated in parallel with independent streams.
pub fn generate_ensemble<F: Real>(source: &ReturnMatrix<F>, spec: &NullModelSpec) -> Result<SurrogateEnsemble<F>> {
    spec.validate()?;
    let members = (0..spec.realisations)
        .into_par_iter()
        .map(|k| generate_member(source, spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SurrogateEnsemble { spec: *spec, members })
}

//! Exponentially smoothed Kendall correlation over rolling windows.
//!
//! Observation `t` of a window of length `δ` (1-based, `t = δ` most recent)
//! carries weight `w_t ∝ exp((t - δ) / θ)`. A pair of observations `(i, j)`
//! contributes with weight `w_i w_j`, so uniform weights reduce to tau-a.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::ReturnMatrix;
use crate::scalar::{sign, Real};

/// Normalized window weights, oldest observation first.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpWeights<F> {
    theta: F,
    weights: Vec<F>,
}

impl<F: Real> ExpWeights<F> {
    /// Uniform weights; the `θ → ∞` limit.
    pub fn uniform(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidArgument(format!("window must be >= 2, got {window}")));
        }
        let w = F::one() / F::of_usize(window);
        Ok(Self { theta: F::infinity(), weights: vec![w; window] })
    }

    pub fn window(&self) -> usize {
        self.weights.len()
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    pub fn as_slice(&self) -> &[F] {
        &self.weights
    }
}

/// Builds `w_t = w_0 exp((t - δ)/θ)` for `t = 1..=δ`, normalized to sum to one.
pub fn exp_weights<F: Real>(window: usize, theta: F) -> Result<ExpWeights<F>> {
    if window < 2 {
        return Err(Error::InvalidArgument(format!("window must be >= 2, got {window}")));
    }
    if !(theta > F::zero()) {
        return Err(Error::InvalidArgument(format!("smoothing factor must be > 0, got {theta}")));
    }
    if theta.is_infinite() {
        return ExpWeights::uniform(window);
    }
    let delta = F::of_usize(window);
    let raw: Vec<F> = (1..=window).map(|t| ((F::of_usize(t) - delta) / theta).exp()).collect();
    let total: F = raw.iter().copied().sum();
    Ok(ExpWeights { theta, weights: raw.into_iter().map(|w| w / total).collect() })
}

/// `Σ_{i<j} w_i w_j s(x_i - x_j) s(y_i - y_j) / Σ_{i<j} w_i w_j`, with `s(0) = 0`.
///
/// Reference double loop; [`correlation_layer`] uses a precomputed form that
/// agrees with it to rounding.
pub fn weighted_kendall<F: Real>(x: &[F], y: &[F], w: &ExpWeights<F>) -> Result<F> {
    let n = w.window();
    if x.len() != n || y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "series lengths {} and {} must equal window {n}",
            x.len(),
            y.len()
        )));
    }
    let w = w.as_slice();
    let mut num = F::zero();
    let mut den = F::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let pw = w[i] * w[j];
            num = num + pw * (sign(x[i] - x[j]) * sign(y[i] - y[j]));
            den = den + pw;
        }
    }
    Ok(num / den)
}

/// Weighted Pearson correlation with the same window weights.
///
/// Returns 0 when either series has zero weighted variance.
pub fn weighted_pearson<F: Real>(x: &[F], y: &[F], w: &ExpWeights<F>) -> Result<F> {
    let n = w.window();
    if x.len() != n || y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "series lengths {} and {} must equal window {n}",
            x.len(),
            y.len()
        )));
    }
    let w = w.as_slice();
    let mx: F = w.iter().zip(x).map(|(&w, &x)| w * x).sum();
    let my: F = w.iter().zip(y).map(|(&w, &y)| w * y).sum();
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for k in 0..n {
        let (dx, dy) = (x[k] - mx, y[k] - my);
        sxy = sxy + w[k] * dx * dy;
        sxx = sxx + w[k] * dx * dx;
        syy = syy + w[k] * dy * dy;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return Ok(F::zero());
    }
    Ok((sxy / (sxx * syy).sqrt()).max(-F::one()).min(F::one()))
}

/// One N×N correlation matrix for the window ending at `anchor` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationLayer<F> {
    anchor: usize,
    matrix: Array2<F>,
}

impl<F: Real> CorrelationLayer<F> {
    /// Wraps a matrix after checking symmetry, unit diagonal and range.
    pub fn from_matrix(anchor: usize, matrix: Array2<F>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::Data(format!("correlation matrix is {r}x{c}, not square")));
        }
        for i in 0..r {
            if matrix[[i, i]] != F::one() {
                return Err(Error::Data(format!("diagonal entry {i} is {}, not 1", matrix[[i, i]])));
            }
            for j in 0..i {
                let v = matrix[[i, j]];
                if !v.is_finite() || v != matrix[[j, i]] || v.abs() > F::one() {
                    return Err(Error::Data(format!(
                        "entry ({i},{j}) = {v} is non-finite, asymmetric or outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self { anchor, matrix })
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn matrix(&self) -> &Array2<F> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.matrix[[i, j]]
    }
}

/// Sequence of layers at consecutive anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSequence<F> {
    pub source: String,
    pub layers: Vec<CorrelationLayer<F>>,
}

impl<F> LayerSequence<F> {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

fn window_of<F: Real>(series: ArrayView1<'_, F>, anchor: usize, window: usize) -> Vec<F> {
    series.slice(ndarray::s![anchor + 1 - window..=anchor]).to_vec()
}

fn check_anchor(n_dates: usize, anchor: usize, window: usize) -> Result<()> {
    if anchor + 1 < window || anchor >= n_dates {
        return Err(Error::InsufficientHistory {
            needed: (anchor + 1).max(window),
            available: n_dates.min(anchor + 1),
        });
    }
    Ok(())
}

/// Precomputed pair weights `w_i w_j` in `(i, j), i < j` order.
struct PairWeights<F> {
    pairs: Vec<(u32, u32)>,
    weights: Vec<F>,
    total: F,
}

impl<F: Real> PairWeights<F> {
    fn new(w: &ExpWeights<F>) -> Self {
        let w = w.as_slice();
        let n = w.len();
        let cap = n * (n - 1) / 2;
        let mut pairs = Vec::with_capacity(cap);
        let mut weights = Vec::with_capacity(cap);
        let mut total = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i as u32, j as u32));
                let pw = w[i] * w[j];
                weights.push(pw);
                total = total + pw;
            }
        }
        Self { pairs, weights, total }
    }

    fn signs(&self, x: &[F]) -> Vec<F> {
        self.pairs.iter().map(|&(i, j)| sign(x[i as usize] - x[j as usize])).collect()
    }
}

#[inline]
fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] = acc[0] + a[k] * b[k];
        acc[1] = acc[1] + a[k + 1] * b[k + 1];
        acc[2] = acc[2] + a[k + 2] * b[k + 2];
        acc[3] = acc[3] + a[k + 3] * b[k + 3];
    }
    let mut tail = F::zero();
    for k in 4 * chunks..a.len() {
        tail = tail + a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn kendall_matrix<F: Real>(windows: &[Vec<F>], pw: &PairWeights<F>) -> Array2<F> {
    let n = windows.len();
    let signs: Vec<Vec<F>> = windows.iter().map(|x| pw.signs(x)).collect();
    let weighted: Vec<Vec<F>> = signs
        .iter()
        .map(|s| s.iter().zip(&pw.weights).map(|(&s, &w)| w * s).collect())
        .collect();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|a| {
            ((a + 1)..n)
                .map(|b| (dot(&weighted[a], &signs[b]) / pw.total).max(-F::one()).min(F::one()))
                .collect()
        })
        .collect();
    let mut m = Array2::from_elem((n, n), F::one());
    for (a, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let b = a + 1 + k;
            m[[a, b]] = v;
            m[[b, a]] = v;
        }
    }
    m
}

/// Weighted Kendall matrix of the window of `w.window()` returns ending at `anchor`.
pub fn correlation_layer<F: Real>(
    returns: &ReturnMatrix<F>,
    anchor: usize,
    w: &ExpWeights<F>,
) -> Result<CorrelationLayer<F>> {
    check_anchor(returns.n_dates(), anchor, w.window())?;
    let pw = PairWeights::new(w);
    Ok(layer_with(returns, anchor, w.window(), &pw))
}

fn layer_with<F: Real>(
    returns: &ReturnMatrix<F>,
    anchor: usize,
    window: usize,
    pw: &PairWeights<F>,
) -> CorrelationLayer<F> {
    let windows: Vec<Vec<F>> =
        (0..returns.n_assets()).map(|a| window_of(returns.series(a), anchor, window)).collect();
    CorrelationLayer { anchor, matrix: kendall_matrix(&windows, pw) }
}

/// Weighted Pearson matrix of the window ending at `anchor`.
pub fn pearson_layer<F: Real>(
    returns: &ReturnMatrix<F>,
    anchor: usize,
    w: &ExpWeights<F>,
) -> Result<CorrelationLayer<F>> {
    check_anchor(returns.n_dates(), anchor, w.window())?;
    let n = returns.n_assets();
    let windows: Vec<Vec<F>> =
        (0..n).map(|a| window_of(returns.series(a), anchor, w.window())).collect();
    let mut m = Array2::from_elem((n, n), F::one());
    for a in 0..n {
        for b in (a + 1)..n {
            let v = weighted_pearson(&windows[a], &windows[b], w)?;
            m[[a, b]] = v;
            m[[b, a]] = v;
        }
    }
    Ok(CorrelationLayer { anchor, matrix: m })
}

/// `count` Kendall layers at anchors `start, start + 1, ...`.
pub fn layer_sequence<F: Real>(
    returns: &ReturnMatrix<F>,
    w: &ExpWeights<F>,
    start: usize,
    count: usize,
    source: impl Into<String>,
) -> Result<LayerSequence<F>> {
    if count == 0 {
        return Err(Error::InvalidArgument("layer count must be >= 1".into()));
    }
    check_anchor(returns.n_dates(), start, w.window())?;
    check_anchor(returns.n_dates(), start + count - 1, w.window())?;
    let pw = PairWeights::new(w);
    let layers = (start..start + count)
        .into_par_iter()
        .map(|anchor| layer_with(returns, anchor, w.window(), &pw))
        .collect();
    Ok(LayerSequence { source: source.into(), layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn returns_from(values: Array2<f64>) -> ReturnMatrix<f64> {
        let d0 = NaiveDate::from_ymd_opt(2014, 1, 3).unwrap();
        let dates = (0..values.ncols() as i64).map(|i| d0 + chrono::Duration::days(i)).collect();
        let assets = (0..values.nrows()).map(|i| format!("A{i}")).collect();
        ReturnMatrix::new(dates, assets, values).unwrap()
    }

    /// Classical tau-a by counting concordant and discordant pairs.
    fn tau_a_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut c, mut d) = (0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = (x[i] - x[j]) * (y[i] - y[j]);
                if p > 0.0 {
                    c += 1;
                } else if p < 0.0 {
                    d += 1;
                }
            }
        }
        (c - d) as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn weight_ratio_and_normalization() {
        let w = exp_weights(126, 46.0).unwrap();
        let s = w.as_slice();
        assert!((s[125] / s[0] - (125.0f64 / 46.0).exp()).abs() < 1e-9);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.windows(2).all(|p| p[1] > p[0]));
        for (d, t) in [(2, 0.5), (10, 3.0), (300, 1000.0)] {
            let w = exp_weights(d, t).unwrap();
            assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_theta_is_uniform() {
        let w = exp_weights(126, 1e9).unwrap();
        let s = w.as_slice();
        let (lo, hi) = (s[0], s[125]);
        assert!((hi - lo) / lo < 1e-6);
    }

    #[test]
    fn weight_parameter_errors() {
        assert!(exp_weights::<f64>(1, 46.0).is_err());
        assert!(exp_weights::<f64>(126, 0.0).is_err());
        assert!(exp_weights::<f64>(126, -1.0).is_err());
    }

    #[test]
    fn perfect_concordance_and_discordance() {
        let w = exp_weights(20, 5.0).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.01).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((weighted_kendall(&x, &x, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((weighted_kendall(&x, &neg, &w).unwrap() + 1.0).abs() < 1e-12);
        assert!(weighted_kendall(&x[..19], &x, &w).is_err());
    }

    #[test]
    fn uniform_weights_match_tau_a_n6() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = ExpWeights::uniform(6).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(0..4) as f64).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let got = weighted_kendall(&x, &y, &w).unwrap();
            assert!((got - tau_a_oracle(&x, &y)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn uniform_weights_match_tau_a_exhaustive(
            xs in proptest::collection::vec(-3i32..3, 2..=8),
            ys in proptest::collection::vec(-3i32..3, 8),
        ) {
            let n = xs.len();
            let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
            let y: Vec<f64> = ys[..n].iter().map(|&v| v as f64).collect();
            let w = ExpWeights::uniform(n).unwrap();
            prop_assert!((weighted_kendall(&x, &y, &w).unwrap() - tau_a_oracle(&x, &y)).abs() < 1e-12);
        }

        #[test]
        fn layers_are_permutation_equivariant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 5;
            let values = Array2::from_shape_fn((n, 30), |_| rng.random::<f64>() - 0.5);
            let w = exp_weights(12, 4.0).unwrap();
            let base = correlation_layer(&returns_from(values.clone()), 20, &w).unwrap();
            let perm = [3usize, 0, 4, 1, 2];
            let permuted = Array2::from_shape_fn((n, 30), |(i, t)| values[[perm[i], t]]);
            let other = correlation_layer(&returns_from(permuted), 20, &w).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(other.get(i, j), base.get(perm[i], perm[j]));
                }
            }
        }
    }

    #[test]
    fn layer_matches_pairwise_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values = Array2::from_shape_fn((3, 40), |_| rng.random::<f64>() - 0.5);
        let r = returns_from(values.clone());
        let w = exp_weights(30, 10.0).unwrap();
        let layer = correlation_layer(&r, 35, &w).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let xa: Vec<f64> = values.row(a).slice(ndarray::s![6..36]).to_vec();
                let xb: Vec<f64> = values.row(b).slice(ndarray::s![6..36]).to_vec();
                let expect = if a == b { 1.0 } else { weighted_kendall(&xa, &xb, &w).unwrap() };
                assert!((layer.get(a, b) - expect).abs() < 1e-12);
            }
        }
        assert!(correlation_layer(&r, 28, &w).is_err());
        assert!(correlation_layer(&r, 40, &w).is_err());
    }

    #[test]
    fn identical_assets_give_all_ones() {
        let row: Vec<f64> = (0..30).map(|i| ((i * 7919) % 31) as f64).collect();
        let values = Array2::from_shape_fn((4, 30), |(_, t)| row[t]);
        let layer = correlation_layer(&returns_from(values), 29, &exp_weights(20, 7.0).unwrap()).unwrap();
        assert!(layer.matrix().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn independent_assets_average_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let values = Array2::from_shape_fn((n, 126), |_| rng.random::<f64>());
        let layer =
            correlation_layer(&returns_from(values), 125, &exp_weights(126, 46.0).unwrap()).unwrap();
        let off: Vec<f64> =
            (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| layer.get(i, j)).collect();
        let (m, s) = crate::scalar::mean_std(&off);
        let se = s / (off.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn sequence_shape_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values = Array2::from_shape_fn((6, 260), |_| rng.random::<f64>() - 0.5);
        let r = returns_from(values);
        let w = exp_weights(40, 15.0).unwrap();
        let seq = layer_sequence(&r, &w, 39, 200, "real").unwrap();
        assert_eq!(seq.len(), 200);
        for (k, l) in seq.layers.iter().enumerate() {
            assert_eq!(l.anchor(), 39 + k);
            CorrelationLayer::from_matrix(l.anchor(), l.matrix().clone()).unwrap();
        }
        let single = layer_sequence(&r, &w, 50, 1, "real").unwrap();
        assert_eq!(single.layers[0], correlation_layer(&r, 50, &w).unwrap());
        assert!(layer_sequence(&r, &w, 39, 300, "real").is_err());
    }

    #[test]
    fn nearby_layers_are_closer_than_distant_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 8;
        // stationary one-factor source
        let f: Vec<f64> = (0..400).map(|_| rng.random::<f64>() - 0.5).collect();
        let values = Array2::from_shape_fn((n, 400), |(i, t)| {
            (0.3 + 0.1 * i as f64) * f[t] + 0.5 * (rng.random::<f64>() - 0.5)
        });
        let r = returns_from(values);
        let w = exp_weights(60, 20.0).unwrap();
        let seq = layer_sequence(&r, &w, 59, 300, "real").unwrap();
        let dist = |a: &CorrelationLayer<f64>, b: &CorrelationLayer<f64>| {
            (a.matrix() - b.matrix()).mapv(|v| v * v).sum().sqrt()
        };
        let (mut near, mut far) = (0.0, 0.0);
        for t in 0..150 {
            near += dist(&seq.layers[t], &seq.layers[t + 1]);
            far += dist(&seq.layers[t], &seq.layers[t + 150]);
        }
        assert!(near < far / 3.0, "near {near} far {far}");
    }

    #[test]
    fn pearson_layer_basics() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = vec![1.0; 10];
        let w = exp_weights(10, 3.0).unwrap();
        assert!((weighted_pearson(&x, &y, &w).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(weighted_pearson(&x, &c, &w).unwrap(), 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let w = exp_weights::<f32>(8, 3.0).unwrap();
        let x: Vec<f32> = (0..8).map(|i| i as f32).collect();
        assert!((weighted_kendall(&x, &x, &w).unwrap() - 1.0).abs() < 1e-6);
    }
}

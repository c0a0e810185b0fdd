//! Soft persistence of motifs across temporal layers.
//!
//! A motif present in layer `t` persists at lag `τ` iff it is also present in
//! layer `t + τ`; intermediate layers are irrelevant. Motif identity is the
//! vertex set alone.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter_graph::{Adjacency, MotifInventory};
use crate::motif::{MotifClass, MotifKey};
use crate::scalar::Real;

/// Indicator for every motif of `at_start`: is it also in `at_lag`? Both inputs sorted.
pub fn soft_persistence(at_start: &[MotifKey], at_lag: &[MotifKey]) -> Vec<(MotifKey, bool)> {
    at_start.iter().map(|k| (*k, at_lag.binary_search(k).is_ok())).collect()
}

/// `|a ∩ b|` for sorted, deduplicated slices.
pub fn intersection_count(a: &[MotifKey], b: &[MotifKey]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Mean persistence of one motif class against lag, `values[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceCurve<F> {
    pub class: MotifClass,
    /// Indexed by lag `τ = 0..=max_lag`.
    pub values: Vec<F>,
    /// Standard error across starting points, per lag.
    pub std_err: Vec<F>,
    /// Starting layers that contributed (those with at least one motif of the class).
    pub starting_points: usize,
    /// Mean motif count of the contributing starting layers.
    pub mean_count: F,
}

impl<F: Real> PersistenceCurve<F> {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// `(τ, value)` for `τ >= 1`.
    pub fn points(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.values.iter().copied().enumerate().skip(1)
    }

    /// Mean of the curve over the inclusive lag range.
    pub fn mean_over(&self, from: usize, to: usize) -> F {
        let to = to.min(self.max_lag());
        let slice = &self.values[from..=to];
        slice.iter().copied().sum::<F>() / F::of_usize(slice.len())
    }
}

fn check_layers(layers: &[MotifInventory], class: MotifClass, starting_points: usize, max_lag: usize) -> Result<()> {
    if starting_points == 0 {
        return Err(Error::InvalidArgument("need at least one starting point".into()));
    }
    if max_lag == 0 {
        return Err(Error::InvalidArgument("maximum lag must be >= 1".into()));
    }
    let needed = starting_points + max_lag;
    if layers.len() < needed {
        return Err(Error::InsufficientHistory { needed, available: layers.len() });
    }
    if let Some(l) = layers.iter().find(|l| !l.classes().contains(&class)) {
        return Err(Error::InvalidArgument(format!(
            "class {class} is undefined for {} graphs",
            l.kind().name()
        )));
    }
    Ok(())
}

fn mean_and_se<F: Real>(xs: &[F]) -> (F, F) {
    let (m, s) = crate::scalar::mean_std(xs);
    (m, s / F::of_usize(xs.len()).sqrt())
}

/// Average over starting layers `t < T` and their motifs of the persistence indicator.
///
/// The normalizing motif count is that of each starting layer; starting layers
/// without motifs of the class are skipped.
pub fn persistence_curve<F: Real>(
    layers: &[MotifInventory],
    class: MotifClass,
    starting_points: usize,
    max_lag: usize,
) -> Result<PersistenceCurve<F>> {
    check_layers(layers, class, starting_points, max_lag)?;
    let starts: Vec<usize> = (0..starting_points).filter(|&t| !layers[t].get(class).is_empty()).collect();
    if starts.is_empty() {
        return Err(Error::Numeric(format!("no {class} motifs in any starting layer")));
    }
    let per_lag: Vec<(F, F)> = (1..=max_lag)
        .into_par_iter()
        .map(|tau| {
            let fractions: Vec<F> = starts
                .iter()
                .map(|&t| {
                    let c = layers[t].get(class);
                    F::of_usize(intersection_count(c, layers[t + tau].get(class))) / F::of_usize(c.len())
                })
                .collect();
            mean_and_se(&fractions)
        })
        .collect();
    let mut values = vec![F::one()];
    let mut std_err = vec![F::zero()];
    for (m, se) in per_lag {
        values.push(m);
        std_err.push(se);
    }
    let total: usize = starts.iter().map(|&t| layers[t].get(class).len()).sum();
    Ok(PersistenceCurve {
        class,
        values,
        std_err,
        starting_points: starts.len(),
        mean_count: F::of_usize(total) / F::of_usize(starts.len()),
    })
}

/// Per-motif mean persistence over `t < T` and `τ ∈ [τ_plat, max_lag]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifPersistenceTable<F> {
    pub class: MotifClass,
    pub tau_plat: usize,
    pub max_lag: usize,
    pub starting_points: usize,
    /// Sorted by motif key.
    pub entries: Vec<(MotifKey, F)>,
}

impl<F: Real> MotifPersistenceTable<F> {
    pub fn get(&self, key: &MotifKey) -> Option<F> {
        self.entries.binary_search_by(|(k, _)| k.cmp(key)).ok().map(|i| self.entries[i].1)
    }
}

/// Sorted layer indices at which each motif of `class` is present.
fn occurrences(layers: &[MotifInventory], class: MotifClass) -> HashMap<MotifKey, Vec<usize>> {
    let mut occ: HashMap<MotifKey, Vec<usize>> = HashMap::new();
    for (t, layer) in layers.iter().enumerate() {
        for k in layer.get(class) {
            occ.entry(*k).or_default().push(t);
        }
    }
    occ
}

fn count_in(sorted: &[usize], from: usize, to: usize) -> usize {
    sorted.partition_point(|&x| x <= to) - sorted.partition_point(|&x| x < from)
}

/// Plateau-averaged persistence of every motif present in some starting layer.
///
/// Each entry is a mean of `T · (max_lag - τ_plat + 1)` indicators, so a motif
/// present in every layer scores exactly 1.
pub fn plateau_persistence<F: Real>(
    layers: &[MotifInventory],
    class: MotifClass,
    tau_plat: usize,
    max_lag: usize,
    starting_points: usize,
) -> Result<MotifPersistenceTable<F>> {
    if tau_plat >= max_lag {
        return Err(Error::InvalidArgument(format!(
            "plateau start {tau_plat} must be below maximum lag {max_lag}"
        )));
    }
    check_layers(layers, class, starting_points, max_lag)?;
    let occ = occurrences(&layers[..starting_points + max_lag], class);
    let denom = F::of_usize(starting_points * (max_lag - tau_plat + 1));
    let mut entries: Vec<(MotifKey, F)> = occ
        .iter()
        .filter_map(|(key, at)| {
            let starts: Vec<usize> = at.iter().copied().take_while(|&t| t < starting_points).collect();
            if starts.is_empty() {
                return None;
            }
            let hits: usize = starts.iter().map(|&t| count_in(at, t + tau_plat, t + max_lag)).sum();
            Some((*key, F::of_usize(hits) / denom))
        })
        .collect();
    entries.sort_by_key(|a| a.0);
    Ok(MotifPersistenceTable { class, tau_plat, max_lag, starting_points, entries })
}

/// Conditional persistence of each edge: among starting layers holding the
/// edge, the fraction that still hold it at lag `τ`. Index 0 is 1.
pub fn edge_persistence_curves<F: Real>(
    layers: &[MotifInventory],
    starting_points: usize,
    max_lag: usize,
) -> Result<HashMap<MotifKey, Vec<F>>> {
    check_layers(layers, MotifClass::Edge, starting_points, max_lag)?;
    let occ = occurrences(&layers[..starting_points + max_lag], MotifClass::Edge);
    Ok(occ
        .into_iter()
        .filter_map(|(key, at)| {
            let starts: Vec<usize> = at.iter().copied().take_while(|&t| t < starting_points).collect();
            if starts.is_empty() {
                return None;
            }
            let n = F::of_usize(starts.len());
            let curve = (0..=max_lag)
                .map(|tau| {
                    let hits = starts.iter().filter(|&&t| at.binary_search(&(t + tau)).is_ok()).count();
                    F::of_usize(hits) / n
                })
                .collect();
            Some((key, curve))
        })
        .collect())
}

/// Pointwise product of the component-edge persistence curves of one motif.
pub fn edge_independence_null<F: Real>(edge_curves: &[&[F]]) -> Result<Vec<F>> {
    let first = edge_curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("missing edge curve".into()))?;
    if edge_curves.iter().any(|c| c.len() != first.len()) {
        return Err(Error::InvalidArgument("edge curves differ in length".into()));
    }
    Ok((0..first.len()).map(|i| edge_curves.iter().map(|c| c[i]).fold(F::one(), |a, b| a * b)).collect())
}

/// Class-level curve expected if a motif's edges persisted independently:
/// the product null averaged exactly as [`persistence_curve`] averages indicators.
pub fn motif_null_curve<F: Real>(
    layers: &[MotifInventory],
    class: MotifClass,
    starting_points: usize,
    max_lag: usize,
) -> Result<PersistenceCurve<F>> {
    if class == MotifClass::Edge {
        return Err(Error::InvalidArgument("the independence null applies to multi-edge motifs".into()));
    }
    check_layers(layers, class, starting_points, max_lag)?;
    let edges = edge_persistence_curves::<F>(layers, starting_points, max_lag)?;
    let mut null_of: HashMap<MotifKey, Vec<F>> = HashMap::new();
    let starts: Vec<usize> = (0..starting_points).filter(|&t| !layers[t].get(class).is_empty()).collect();
    if starts.is_empty() {
        return Err(Error::Numeric(format!("no {class} motifs in any starting layer")));
    }
    for &t in &starts {
        for key in layers[t].get(class) {
            if null_of.contains_key(key) {
                continue;
            }
            let curves: Vec<&[F]> = key
                .edges()
                .iter()
                .map(|e| {
                    edges.get(e).map(Vec::as_slice).ok_or_else(|| {
                        Error::Data(format!("missing edge curve for {} of motif {}", e.label(), key.label()))
                    })
                })
                .collect::<Result<_>>()?;
            null_of.insert(*key, edge_independence_null(&curves)?);
        }
    }
    let mut values = vec![F::one()];
    let mut std_err = vec![F::zero()];
    for tau in 1..=max_lag {
        let per_start: Vec<F> = starts
            .iter()
            .map(|&t| {
                let c = layers[t].get(class);
                c.iter().map(|k| null_of[k][tau]).sum::<F>() / F::of_usize(c.len())
            })
            .collect();
        let (m, se) = mean_and_se(&per_start);
        values.push(m);
        std_err.push(se);
    }
    let total: usize = starts.iter().map(|&t| layers[t].get(class).len()).sum();
    Ok(PersistenceCurve {
        class,
        values,
        std_err,
        starting_points: starts.len(),
        mean_count: F::of_usize(total) / F::of_usize(starts.len()),
    })
}

/// Motif exponent divided by the number of its edges.
pub fn independence_adjusted_exponent<F: Real>(motif_exponent: F, edge_multiplicity: usize) -> Result<F> {
    if edge_multiplicity < 2 {
        return Err(Error::InvalidArgument(format!(
            "edge multiplicity must be >= 2, got {edge_multiplicity}"
        )));
    }
    Ok(motif_exponent / F::of_usize(edge_multiplicity))
}

/// Mean clustering of persistent subgraphs `E_t ∩ E_{t+τ}` over `t < T` and
/// `τ ∈ [lag_from, lag_to]`. Pairs whose subgraph has no vertex of degree >= 2 are skipped.
pub fn persistent_clustering(
    layers: &[MotifInventory],
    starting_points: usize,
    lag_from: usize,
    lag_to: usize,
) -> Result<Option<f64>> {
    check_layers(layers, MotifClass::Edge, starting_points, lag_to)?;
    if lag_from == 0 || lag_from > lag_to {
        return Err(Error::InvalidArgument(format!("invalid lag range {lag_from}..={lag_to}")));
    }
    let vals: Vec<f64> = (0..starting_points)
        .into_par_iter()
        .flat_map_iter(|t| {
            (lag_from..=lag_to).filter_map(move |tau| {
                let a = layers[t].get(MotifClass::Edge);
                let b = layers[t + tau].get(MotifClass::Edge);
                let common = a.iter().filter(|k| b.binary_search(k).is_ok()).map(|k| {
                    let v = k.vertices();
                    (v[0], v[1])
                });
                Adjacency::from_pairs(layers[t].n(), common).mean_clustering()
            })
        })
        .collect();
    if vals.is_empty() {
        return Ok(None);
    }
    Ok(Some(vals.iter().sum::<f64>() / vals.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_graph::{motif_inventory, tmfg, Edge, FilterKind, FilteredGraph, WeightTransform};
    use crate::weighted_corr::CorrelationLayer;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn key(class: MotifClass, v: &[u32]) -> MotifKey {
        MotifKey::new(class, v).unwrap()
    }

    fn tri(v: &[u32]) -> MotifKey {
        key(MotifClass::Triangle, v)
    }

    fn graph_layer(n: usize, edges: &[(u32, u32)]) -> MotifInventory {
        let g = FilteredGraph::from_edges(
            n,
            FilterKind::Quantile,
            0,
            edges.iter().map(|&(u, v)| Edge { u, v, weight: 0.0f64 }).collect(),
        )
        .unwrap();
        motif_inventory(&g, None).unwrap()
    }

    #[test]
    fn indicators_are_set_membership() {
        let (abc, abd, acd) = (tri(&[0, 1, 2]), tri(&[0, 1, 3]), tri(&[0, 2, 3]));
        let same = soft_persistence(&[abc, abd], &[abc, abd]);
        assert!(same.iter().all(|(_, p)| *p));
        let none = soft_persistence(&[abc], &[abd]);
        assert!(none.iter().all(|(_, p)| !*p));
        let mut b = vec![abc, acd];
        b.sort();
        let mixed = soft_persistence(&[abc, abd], &b);
        assert_eq!(mixed, vec![(abc, true), (abd, false)]);
    }

    #[test]
    fn static_sequence_has_flat_unit_curve() {
        let l = graph_layer(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]);
        let layers = vec![l; 12];
        for class in [MotifClass::Edge, MotifClass::Triangle] {
            let c = persistence_curve::<f64>(&layers, class, 4, 8).unwrap();
            assert!(c.values.iter().all(|&v| v == 1.0));
        }
        assert!(persistence_curve::<f64>(&layers, MotifClass::Separator, 4, 8).is_err());
        assert!(persistence_curve::<f64>(&layers, MotifClass::Edge, 5, 8).is_err());
    }

    /// Three layers on 4 vertices, hand-placed triangles.
    ///   L0: {012, 123}   L1: {012}   L2: {012, 023}
    fn toy() -> Vec<MotifInventory> {
        vec![
            graph_layer(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]),
            graph_layer(4, &[(0, 1), (0, 2), (1, 2)]),
            graph_layer(4, &[(0, 1), (0, 2), (1, 2), (0, 3), (2, 3)]),
        ]
    }

    #[test]
    fn toy_sequence_matches_hand_enumeration() {
        let layers = toy();
        // T = 1, max lag 2: C_0 = {012, 123}
        // τ=1: 012 in L1 (1), 123 not (0) -> 1/2; τ=2: 012 yes, 123 no -> 1/2
        let c = persistence_curve::<f64>(&layers, MotifClass::Triangle, 1, 2).unwrap();
        assert_eq!(c.values, vec![1.0, 0.5, 0.5]);
        assert_eq!(c.mean_count, 2.0);
        // T = 2, max lag 1: t=0 -> 1/2, t=1: C_1 = {012}, in L2 -> 1; mean 3/4
        let c = persistence_curve::<f64>(&layers, MotifClass::Triangle, 2, 1).unwrap();
        assert_eq!(c.values, vec![1.0, 0.75]);
        // edges, T = 1, lag 1: E0 = {01,02,12,13,23}, E1 = {01,02,12} -> 3/5
        let c = persistence_curve::<f64>(&layers, MotifClass::Edge, 1, 2).unwrap();
        assert_eq!(c.values[1], 0.6);
        // E2 = {01,02,03,12,23}: 01,02,12,23 of E0 -> 4/5
        assert_eq!(c.values[2], 0.8);

        // plateau over t = 0, τ ∈ [1, 2]: 012 -> 2/2, 123 -> 0/2
        let table = plateau_persistence::<f64>(&layers, MotifClass::Triangle, 1, 2, 1).unwrap();
        assert_eq!(table.entries, vec![(tri(&[0, 1, 2]), 1.0), (tri(&[1, 2, 3]), 0.0)]);
        // plateau τ ∈ [2, 2] is out of range of the contract (τ_plat < max lag)
        assert!(plateau_persistence::<f64>(&layers, MotifClass::Triangle, 2, 2, 1).is_err());
        // T = 2, τ ∈ [0, 1]: 012: t0 {L0, L1} 2, t1 {L1, L2} 2 -> 4/4;
        // 123: t0 {L0} 1, t1 absent -> 1/4; 023 never starts -> absent
        let table = plateau_persistence::<f64>(&layers, MotifClass::Triangle, 0, 1, 2).unwrap();
        assert_eq!(table.entries, vec![(tri(&[0, 1, 2]), 1.0), (tri(&[1, 2, 3]), 0.25)]);
    }

    #[test]
    fn plateau_extremes() {
        let always = graph_layer(3, &[(0, 1), (1, 2), (0, 2)]);
        let gone = graph_layer(3, &[(0, 1)]);
        let mut layers = vec![always.clone(); 10];
        let table = plateau_persistence::<f64>(&layers, MotifClass::Triangle, 2, 6, 4).unwrap();
        assert_eq!(table.entries[0].1, 1.0);
        for l in layers.iter_mut().skip(4) {
            *l = gone.clone();
        }
        let table = plateau_persistence::<f64>(&layers, MotifClass::Triangle, 4, 6, 4).unwrap();
        assert_eq!(table.entries[0].1, 0.0);
    }

    #[test]
    fn independence_null_products() {
        let ones = vec![1.0f64; 5];
        assert_eq!(edge_independence_null(&[&ones, &ones, &ones]).unwrap(), ones);
        let half = vec![0.5f64; 3];
        assert_eq!(edge_independence_null(&[&half, &half, &half]).unwrap(), vec![0.125; 3]);
        assert!(edge_independence_null::<f64>(&[]).is_err());
    }

    #[test]
    fn adjusted_exponents() {
        let cases = [(-0.398, -0.133), (-0.471, -0.157), (-0.458, -0.153), (-0.830, -0.277)];
        for (a, reported) in cases {
            let adj: f64 = independence_adjusted_exponent(a, 3).unwrap();
            assert_eq!((adj * 1000.0).round() / 1000.0, reported);
        }
        assert_eq!(independence_adjusted_exponent(0.0f64, 3).unwrap(), 0.0);
        assert!(independence_adjusted_exponent(1.0f64, 1).is_err());
        for x in [-0.1327f64, 0.5, -2.25, 1e-9] {
            assert_eq!(independence_adjusted_exponent(3.0 * x, 3).unwrap(), x);
        }
    }

    /// Each edge of a 10-vertex graph present independently w.p. p in every layer.
    fn bernoulli_layers(n: usize, p: f64, count: usize, seed: u64) -> Vec<MotifInventory> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut edges = Vec::new();
                for i in 0..n as u32 {
                    for j in (i + 1)..n as u32 {
                        if rng.random::<f64>() < p {
                            edges.push((i, j));
                        }
                    }
                }
                graph_layer(n, &edges)
            })
            .collect()
    }

    #[test]
    fn independent_random_graphs_have_constant_curve() {
        // N = 10, 45 pairs, fixed edge count 12 drawn uniformly each layer:
        // the overlap of two independent 12-subsets of 45 has mean 12*12/45.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pairs: Vec<(u32, u32)> = (0..10u32).flat_map(|i| ((i + 1)..10).map(move |j| (i, j))).collect();
        let layers: Vec<MotifInventory> = (0..400)
            .map(|_| {
                let mut p = pairs.clone();
                for i in 0..12 {
                    let j = rng.random_range(i..p.len());
                    p.swap(i, j);
                }
                graph_layer(10, &p[..12])
            })
            .collect();
        let c = persistence_curve::<f64>(&layers, MotifClass::Edge, 300, 20).unwrap();
        let expected = 12.0 / 45.0;
        for tau in 1..=20 {
            assert!((c.values[tau] - expected).abs() < 3.0 * c.std_err[tau] + 1e-12, "tau {tau}");
        }
    }

    #[test]
    fn null_matches_independent_edges() {
        let layers = bernoulli_layers(10, 0.5, 240, 4);
        let obs = persistence_curve::<f64>(&layers, MotifClass::Triangle, 200, 30).unwrap();
        let null = motif_null_curve::<f64>(&layers, MotifClass::Triangle, 200, 30).unwrap();
        let misses = (1..=30).filter(|&t| (obs.values[t] - null.values[t]).abs() > 3.0 * obs.std_err[t]).count();
        assert!(misses <= 1, "{misses} lags outside 3 SE");
        assert!(motif_null_curve::<f64>(&layers, MotifClass::Edge, 200, 30).is_err());
    }

    #[test]
    fn tmfg_containment_and_null_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 12;
        let base = Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
        let layers: Vec<MotifInventory> = (0..60)
            .map(|_| {
                let mut m = Array2::from_elem((n, n), 1.0);
                for i in 0..n {
                    for j in 0..i {
                        let v = (0.7 * base[[i, j]] + 0.3 * rng.random::<f64>()).min(1.0);
                        m[[i, j]] = v;
                        m[[j, i]] = v;
                    }
                }
                let (g, tree) = tmfg(&CorrelationLayer::from_matrix(0, m).unwrap(), WeightTransform::Absolute).unwrap();
                motif_inventory(&g, Some(&tree)).unwrap()
            })
            .collect();
        // a persistent tetrahedron implies persistent faces and edges
        for t in 0..30 {
            for tau in 1..30 {
                let later = &layers[t + tau];
                for (tet, kept) in soft_persistence(layers[t].get(MotifClass::Tetrahedron), later.get(MotifClass::Tetrahedron)) {
                    if !kept {
                        continue;
                    }
                    for e in tet.edges() {
                        assert!(later.get(MotifClass::Edge).binary_search(&e).is_ok());
                    }
                    let v = tet.vertices();
                    for skip in 0..4 {
                        let face: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| v[i]).collect();
                        assert!(later.get(MotifClass::Triangle).binary_search(&tri(&face)).is_ok());
                    }
                }
            }
        }
        // per motif, the product null of a tetrahedron is below that of each face
        let edges = edge_persistence_curves::<f64>(&layers, 30, 29).unwrap();
        for tet in layers[0].get(MotifClass::Tetrahedron) {
            let curves: Vec<&[f64]> = tet.edges().iter().map(|e| edges[e].as_slice()).collect();
            let tet_null = edge_independence_null(&curves).unwrap();
            let v = tet.vertices();
            for skip in 0..4 {
                let face: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| v[i]).collect();
                let fe: Vec<&[f64]> = tri(&face).edges().iter().map(|e| edges[e].as_slice()).collect();
                let face_null = edge_independence_null(&fe).unwrap();
                for tau in 0..=29 {
                    assert!(tet_null[tau] <= face_null[tau] + 1e-9);
                    assert!(face_null[tau] <= edges[&tet.edges()[0]][tau].max(edges[&tet.edges()[1]][tau]) + 1e-9);
                }
            }
        }
        let e = persistence_curve::<f64>(&layers, MotifClass::Edge, 30, 29).unwrap();
        let tr = persistence_curve::<f64>(&layers, MotifClass::Triangle, 30, 29).unwrap();
        let te = persistence_curve::<f64>(&layers, MotifClass::Tetrahedron, 30, 29).unwrap();
        assert!(te.mean_over(1, 29) <= tr.mean_over(1, 29));
        assert!(tr.mean_over(1, 29) <= e.mean_over(1, 29));
        for c in [&e, &tr, &te] {
            assert_eq!(c.values[0], 1.0);
            assert!(c.values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn clustering_of_persistent_subgraphs() {
        let k4 = graph_layer(6, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let layers = vec![k4; 6];
        assert_eq!(persistent_clustering(&layers, 3, 1, 3).unwrap(), Some(1.0));
        assert!(persistent_clustering(&layers, 3, 0, 3).is_err());
    }
}

//! Sparse graphs from correlation layers: TMFG and quantile thresholding.
//!
//! Ties are broken lexicographically on vertex indices everywhere, so every
//! construction is bit-reproducible.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motif::{MotifClass, MotifKey};
use crate::scalar::Real;
use crate::weighted_corr::CorrelationLayer;

/// How correlations are turned into edge priorities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTransform {
    #[default]
    Absolute,
    Signed,
}

impl WeightTransform {
    #[inline]
    pub fn apply<F: Real>(self, rho: F) -> F {
        match self {
            WeightTransform::Absolute => rho.abs(),
            WeightTransform::Signed => rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Tmfg,
    Quantile,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Tmfg => "tmfg",
            FilterKind::Quantile => "quantile",
        }
    }
}

/// Undirected edge `u < v` carrying the raw layer correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<F> {
    pub u: u32,
    pub v: u32,
    pub weight: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGraph<F> {
    n: usize,
    edges: Vec<Edge<F>>,
    kind: FilterKind,
    anchor: usize,
}

impl<F: Real> FilteredGraph<F> {
    /// Builds a graph from an edge list; edges are canonicalized and sorted.
    pub fn from_edges(n: usize, kind: FilterKind, anchor: usize, edges: Vec<Edge<F>>) -> Result<Self> {
        let mut edges: Vec<Edge<F>> = edges
            .into_iter()
            .map(|e| if e.u < e.v { e } else { Edge { u: e.v, v: e.u, weight: e.weight } })
            .collect();
        edges.sort_by_key(|a| (a.u, a.v));
        for e in &edges {
            if e.u == e.v || e.v as usize >= n {
                return Err(Error::Data(format!("invalid edge ({}, {}) for {n} vertices", e.u, e.v)));
            }
        }
        if edges.windows(2).any(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::Data("duplicate edge".into()));
        }
        Ok(Self { n, edges, kind, anchor })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<F>] {
        &self.edges
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_pairs(self.n, self.edges.iter().map(|e| (e.u, e.v)))
    }
}

/// Dense boolean adjacency plus sorted neighbour lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    n: usize,
    matrix: Vec<bool>,
    neighbours: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut matrix = vec![false; n * n];
        let mut neighbours = vec![Vec::new(); n];
        for (u, v) in pairs {
            let (u, v) = (u as usize, v as usize);
            if !matrix[u * n + v] {
                matrix[u * n + v] = true;
                matrix[v * n + u] = true;
                neighbours[u].push(v as u32);
                neighbours[v].push(u as u32);
            }
        }
        neighbours.iter_mut().for_each(|nb| nb.sort_unstable());
        Self { n, matrix, neighbours }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has(&self, u: u32, v: u32) -> bool {
        self.matrix[u as usize * self.n + v as usize]
    }

    pub fn neighbours(&self, u: u32) -> &[u32] {
        &self.neighbours[u as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.neighbours[u as usize].len()
    }

    /// All 3-cliques as sorted triples, in lexicographic order.
    pub fn triangles(&self) -> Vec<[u32; 3]> {
        let mut out = Vec::new();
        for u in 0..self.n as u32 {
            for &v in self.neighbours(u).iter().filter(|&&v| v > u) {
                for &w in self.neighbours(v).iter().filter(|&&w| w > v) {
                    if self.has(u, w) {
                        out.push([u, v, w]);
                    }
                }
            }
        }
        out
    }

    /// Local clustering coefficient; 0 for vertices of degree < 2.
    pub fn local_clustering(&self, u: u32) -> f64 {
        let nb = self.neighbours(u);
        let k = nb.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in nb.iter().enumerate() {
            links += nb[i + 1..].iter().filter(|&&b| self.has(a, b)).count();
        }
        2.0 * links as f64 / (k * (k - 1)) as f64
    }

    /// Mean local clustering over vertices of degree >= 2, or `None` if there are none.
    pub fn mean_clustering(&self) -> Option<f64> {
        let vals: Vec<f64> =
            (0..self.n as u32).filter(|&u| self.degree(u) >= 2).map(|u| self.local_clustering(u)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// True iff removing vertices in `order` always removes a simplicial vertex.
    pub fn is_perfect_elimination_ordering(&self, order: &[u32]) -> bool {
        if order.len() != self.n {
            return false;
        }
        let mut position = vec![usize::MAX; self.n];
        for (p, &v) in order.iter().enumerate() {
            if position[v as usize] != usize::MAX {
                return false;
            }
            position[v as usize] = p;
        }
        order.iter().enumerate().all(|(p, &v)| {
            let later: Vec<u32> =
                self.neighbours(v).iter().copied().filter(|&w| position[w as usize] > p).collect();
            later.iter().enumerate().all(|(i, &a)| later[i + 1..].iter().all(|&b| self.has(a, b)))
        })
    }

    /// Chordality via maximum cardinality search.
    pub fn is_chordal(&self) -> bool {
        let n = self.n;
        let mut weight = vec![0usize; n];
        let mut numbered = vec![false; n];
        let mut visit = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| !numbered[v])
                .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
                .expect("unnumbered vertex");
            numbered[v] = true;
            visit.push(v as u32);
            for &w in self.neighbours(v as u32) {
                if !numbered[w as usize] {
                    weight[w as usize] += 1;
                }
            }
        }
        visit.reverse();
        self.is_perfect_elimination_ordering(&visit)
    }
}

/// Tree of tetrahedral cliques glued along separator triangles.
///
/// Tetrahedron `k > 0` hangs off `parents[k - 1]` through `separators[k - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    tetrahedra: Vec<[u32; 4]>,
    separators: Vec<[u32; 3]>,
    parents: Vec<usize>,
    insertion_order: Vec<u32>,
}

impl CliqueTree {
    pub fn tetrahedra(&self) -> &[[u32; 4]] {
        &self.tetrahedra
    }

    pub fn separators(&self) -> &[[u32; 3]] {
        &self.separators
    }

    /// Parent tetrahedron of tetrahedron `k` (none for the seed, `k = 0`).
    pub fn parent(&self, k: usize) -> Option<usize> {
        k.checked_sub(1).map(|i| self.parents[i])
    }

    /// Seed vertices followed by inserted vertices.
    pub fn insertion_order(&self) -> &[u32] {
        &self.insertion_order
    }

    /// Reverse insertion order, a perfect elimination ordering of the TMFG.
    pub fn elimination_order(&self) -> Vec<u32> {
        self.insertion_order.iter().rev().copied().collect()
    }
}

fn weight_matrix<F: Real>(layer: &CorrelationLayer<F>, transform: WeightTransform) -> Result<Vec<F>> {
    let n = layer.n();
    let mut w = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let v = layer.get(i, j);
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite weight at ({i},{j})")));
            }
            if i != j {
                w[i * n + j] = transform.apply(v);
            }
        }
    }
    Ok(w)
}

fn sorted3(mut f: [u32; 3]) -> [u32; 3] {
    f.sort_unstable();
    f
}

/// Triangulated maximally filtered graph.
///
/// Seeds with the four vertices of largest total weight, then inserts the
/// vertex–face pair of largest gain until every vertex is placed.
pub fn tmfg<F: Real>(
    layer: &CorrelationLayer<F>,
    transform: WeightTransform,
) -> Result<(FilteredGraph<F>, CliqueTree)> {
    let n = layer.n();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("TMFG needs at least 4 vertices, got {n}")));
    }
    let w = weight_matrix(layer, transform)?;
    let wt = |a: u32, b: u32| w[a as usize * n + b as usize];

    let strength: Vec<F> = (0..n).map(|i| w[i * n..(i + 1) * n].iter().copied().sum()).collect();
    let mut by_strength: Vec<u32> = (0..n as u32).collect();
    by_strength.sort_by(|&a, &b| {
        strength[b as usize].partial_cmp(&strength[a as usize]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    let mut seed = [by_strength[0], by_strength[1], by_strength[2], by_strength[3]];
    seed.sort_unstable();

    let mut edges = Vec::with_capacity(3 * n - 6);
    for i in 0..4 {
        for j in (i + 1)..4 {
            edges.push((seed[i], seed[j]));
        }
    }
    // (face, owning tetrahedron)
    let mut faces: Vec<([u32; 3], usize)> = vec![
        ([seed[0], seed[1], seed[2]], 0),
        ([seed[0], seed[1], seed[3]], 0),
        ([seed[0], seed[2], seed[3]], 0),
        ([seed[1], seed[2], seed[3]], 0),
    ];
    let mut tetrahedra = vec![seed];
    let mut separators = Vec::with_capacity(n - 4);
    let mut parents = Vec::with_capacity(n - 4);
    let mut insertion_order = seed.to_vec();
    let mut remaining: Vec<u32> = (0..n as u32).filter(|v| !seed.contains(v)).collect();

    while !remaining.is_empty() {
        let mut best: Option<(F, u32, [u32; 3], usize, usize)> = None;
        for (ri, &v) in remaining.iter().enumerate() {
            for (fi, &(face, _)) in faces.iter().enumerate() {
                let gain = wt(v, face[0]) + wt(v, face[1]) + wt(v, face[2]);
                let better = match &best {
                    None => true,
                    Some((g, bv, bf, _, _)) => match gain.partial_cmp(g).unwrap_or(Ordering::Equal) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => (v, face) < (*bv, *bf),
                    },
                };
                if better {
                    best = Some((gain, v, face, ri, fi));
                }
            }
        }
        let (_, v, face, ri, fi) = best.expect("non-empty candidates");
        remaining.remove(ri);
        let (_, owner) = faces.swap_remove(fi);
        let t = tetrahedra.len();
        let mut tet = [v, face[0], face[1], face[2]];
        tet.sort_unstable();
        tetrahedra.push(tet);
        separators.push(face);
        parents.push(owner);
        insertion_order.push(v);
        for &u in &face {
            edges.push((v.min(u), v.max(u)));
        }
        faces.push((sorted3([v, face[0], face[1]]), t));
        faces.push((sorted3([v, face[0], face[2]]), t));
        faces.push((sorted3([v, face[1], face[2]]), t));
    }

    let edges = edges
        .into_iter()
        .map(|(u, v)| Edge { u, v, weight: layer.get(u as usize, v as usize) })
        .collect();
    let graph = FilteredGraph::from_edges(n, FilterKind::Tmfg, layer.anchor(), edges)?;
    Ok((graph, CliqueTree { tetrahedra, separators, parents, insertion_order }))
}

/// Keeps exactly the `m` off-diagonal pairs of largest transformed weight.
pub fn quantile_threshold<F: Real>(
    layer: &CorrelationLayer<F>,
    m: usize,
    transform: WeightTransform,
) -> Result<FilteredGraph<F>> {
    let n = layer.n();
    let total = n * n.saturating_sub(1) / 2;
    if m < 1 || m > total {
        return Err(Error::InvalidArgument(format!("edge count {m} outside 1..={total}")));
    }
    let w = weight_matrix(layer, transform)?;
    let mut pairs: Vec<(u32, u32)> =
        (0..n as u32).flat_map(|i| ((i + 1)..n as u32).map(move |j| (i, j))).collect();
    let key = |&(i, j): &(u32, u32)| w[i as usize * n + j as usize];
    pairs.sort_by(|a, b| key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal).then(a.cmp(b)));
    pairs.truncate(m);
    let edges =
        pairs.into_iter().map(|(u, v)| Edge { u, v, weight: layer.get(u as usize, v as usize) }).collect();
    FilteredGraph::from_edges(n, FilterKind::Quantile, layer.anchor(), edges)
}

/// Every distinct 3-clique of the graph, sorted.
pub fn enumerate_triangles<F: Real>(graph: &FilteredGraph<F>) -> Vec<[u32; 3]> {
    graph.adjacency().triangles()
}

/// Motif sets of one filtered layer, each sorted by vertex tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifInventory {
    kind: FilterKind,
    n: usize,
    edges: Vec<MotifKey>,
    triangles: Vec<MotifKey>,
    face_triangles: Vec<MotifKey>,
    separators: Vec<MotifKey>,
    tetrahedra: Vec<MotifKey>,
}

impl MotifInventory {
    /// Assembles an inventory from per-class key lists (used when reading exports).
    pub fn from_parts(kind: FilterKind, n: usize, mut parts: Vec<MotifKey>) -> Result<Self> {
        parts.sort_unstable();
        parts.dedup();
        let pick = |c: MotifClass| -> Vec<MotifKey> {
            parts.iter().filter(|k| k.class() == c).copied().collect()
        };
        let inv = Self {
            kind,
            n,
            edges: pick(MotifClass::Edge),
            triangles: pick(MotifClass::Triangle),
            face_triangles: pick(MotifClass::FaceTriangle),
            separators: pick(MotifClass::Separator),
            tetrahedra: pick(MotifClass::Tetrahedron),
        };
        if kind == FilterKind::Quantile
            && !(inv.separators.is_empty() && inv.face_triangles.is_empty() && inv.tetrahedra.is_empty())
        {
            return Err(Error::Data("quantile inventory cannot contain clique-tree classes".into()));
        }
        if let Some(k) = parts.iter().find(|k| k.vertices().iter().any(|&v| v as usize >= n)) {
            return Err(Error::Data(format!("motif {} out of range for {n} vertices", k.label())));
        }
        Ok(inv)
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, class: MotifClass) -> &[MotifKey] {
        match class {
            MotifClass::Edge => &self.edges,
            MotifClass::Triangle => &self.triangles,
            MotifClass::FaceTriangle => &self.face_triangles,
            MotifClass::Separator => &self.separators,
            MotifClass::Tetrahedron => &self.tetrahedra,
        }
    }

    /// Classes meaningful for this filter kind.
    pub fn classes(&self) -> &'static [MotifClass] {
        match self.kind {
            FilterKind::Tmfg => &MotifClass::ALL,
            FilterKind::Quantile => &[MotifClass::Edge, MotifClass::Triangle],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &MotifKey> {
        self.classes().iter().flat_map(move |&c| self.get(c).iter())
    }
}

/// Splits a graph into its motif classes. A clique tree must accompany TMFG graphs only.
pub fn motif_inventory<F: Real>(graph: &FilteredGraph<F>, tree: Option<&CliqueTree>) -> Result<MotifInventory> {
    let edges: Vec<MotifKey> =
        graph.edges().iter().map(|e| MotifKey::from_sorted(MotifClass::Edge, &[e.u, e.v])).collect();
    let triangles: Vec<MotifKey> = enumerate_triangles(graph)
        .iter()
        .map(|t| MotifKey::from_sorted(MotifClass::Triangle, t))
        .collect();
    let (face_triangles, separators, tetrahedra) = match (graph.kind(), tree) {
        (FilterKind::Tmfg, Some(tree)) => {
            let mut seps: Vec<MotifKey> =
                tree.separators().iter().map(|s| MotifKey::from_sorted(MotifClass::Separator, s)).collect();
            seps.sort_unstable();
            let mut tets: Vec<MotifKey> = tree
                .tetrahedra()
                .iter()
                .map(|t| MotifKey::from_sorted(MotifClass::Tetrahedron, t))
                .collect();
            tets.sort_unstable();
            let as_tri: Vec<MotifKey> = seps.iter().map(|s| s.as_class(MotifClass::Triangle)).collect();
            if as_tri.iter().any(|s| triangles.binary_search(s).is_err()) {
                return Err(Error::Data("clique tree separator is not a triangle of the graph".into()));
            }
            let faces = triangles
                .iter()
                .filter(|t| as_tri.binary_search(t).is_err())
                .map(|t| t.as_class(MotifClass::FaceTriangle))
                .collect();
            (faces, seps, tets)
        }
        (FilterKind::Quantile, None) => (Vec::new(), Vec::new(), Vec::new()),
        (kind, tree) => {
            return Err(Error::InvalidArgument(format!(
                "{} graph {} a clique tree",
                kind.name(),
                if tree.is_some() { "cannot take" } else { "requires" }
            )))
        }
    };
    Ok(MotifInventory {
        kind: graph.kind(),
        n: graph.n(),
        edges,
        triangles,
        face_triangles,
        separators,
        tetrahedra,
    })
}

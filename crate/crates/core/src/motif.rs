//! Canonical motif keys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Motif classes tracked across layers.
///
/// `Triangle` is every distinct 3-clique. In TMFG graphs it splits into the
/// disjoint classes `Separator` and `FaceTriangle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifClass {
    Edge,
    Triangle,
    FaceTriangle,
    Separator,
    Tetrahedron,
}

impl MotifClass {
    pub const ALL: [MotifClass; 5] = [
        MotifClass::Edge,
        MotifClass::Triangle,
        MotifClass::FaceTriangle,
        MotifClass::Separator,
        MotifClass::Tetrahedron,
    ];

    pub fn arity(self) -> usize {
        match self {
            MotifClass::Edge => 2,
            MotifClass::Triangle | MotifClass::FaceTriangle | MotifClass::Separator => 3,
            MotifClass::Tetrahedron => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MotifClass::Edge => "edge",
            MotifClass::Triangle => "triangle",
            MotifClass::FaceTriangle => "face_triangle",
            MotifClass::Separator => "separator",
            MotifClass::Tetrahedron => "tetrahedron",
        }
    }

    /// Classes only defined for TMFG graphs.
    pub fn requires_clique_tree(self) -> bool {
        matches!(self, MotifClass::FaceTriangle | MotifClass::Separator | MotifClass::Tetrahedron)
    }
}

impl fmt::Display for MotifClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotifClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotifClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown motif class `{s}`")))
    }
}

/// A motif identified by its sorted vertex set. Unused slots are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MotifKey {
    class: MotifClass,
    verts: [u32; 4],
}

impl MotifKey {
    /// Sorts `vertices`; errors on wrong arity or repeated vertices.
    pub fn new(class: MotifClass, vertices: &[u32]) -> Result<Self, Error> {
        if vertices.len() != class.arity() {
            return Err(Error::InvalidArgument(format!(
                "{class} needs {} vertices, got {}",
                class.arity(),
                vertices.len()
            )));
        }
        let mut verts = [0u32; 4];
        verts[..vertices.len()].copy_from_slice(vertices);
        verts[..vertices.len()].sort_unstable();
        if verts[..vertices.len()].windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated vertex in {vertices:?}")));
        }
        Ok(Self { class, verts })
    }

    pub(crate) fn from_sorted(class: MotifClass, vertices: &[u32]) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let mut verts = [0u32; 4];
        verts[..vertices.len()].copy_from_slice(vertices);
        Self { class, verts }
    }

    pub fn class(&self) -> MotifClass {
        self.class
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.class.arity()]
    }

    /// The same vertex set viewed as another class of equal arity.
    pub fn as_class(&self, class: MotifClass) -> Self {
        debug_assert_eq!(class.arity(), self.class.arity());
        Self { class, verts: self.verts }
    }

    /// Component edges, in lexicographic order.
    pub fn edges(&self) -> Vec<MotifKey> {
        let v = self.vertices();
        let mut out = Vec::with_capacity(v.len() * (v.len() - 1) / 2);
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                out.push(MotifKey::from_sorted(MotifClass::Edge, &[v[i], v[j]]));
            }
        }
        out
    }

    /// Vertices joined with `-`, e.g. `3-7-12`.
    pub fn label(&self) -> String {
        self.vertices().iter().map(u32::to_string).collect::<Vec<_>>().join("-")
    }
}

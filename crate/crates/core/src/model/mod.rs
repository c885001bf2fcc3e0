//! Linkage specifications: the combinatorial graph, bar lengths, base
//! vertices pinned to the plane and marked diagonals.
//!
//! A [`LinkageSpec`] may be malformed; [`LinkageSpec::validate`] reports every
//! violated invariant as data. Everything downstream (pinning, constraint
//! systems, Nambu fields) assumes a spec whose report is empty.

mod io;
pub(crate) mod pin;
mod redundancy;

use std::collections::HashMap;
use std::fmt;

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub use io::{DecompositionFile, LinkageFile};
pub use pin::{degrees_of_freedom, pin, pin_with, PinReport, PinnedSpec};
pub use redundancy::{detect_redundant_bars, RedundantBar};

pub type Point = Vector2<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl Edge {
    pub fn joins(&self, u: usize, v: usize) -> bool {
        (self.a == u && self.b == v) || (self.a == v && self.b == u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseVertex {
    pub vertex: usize,
    pub position: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Diagonal {
    pub a: usize,
    pub b: usize,
}

impl Diagonal {
    pub fn joins(&self, u: usize, v: usize) -> bool {
        (self.a == u && self.b == v) || (self.a == v && self.b == u)
    }
}

/// A planar linkage `(V, E, ℓ, B, β)` together with its marked diagonals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkageSpec {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    base: Vec<BaseVertex>,
    diagonals: Vec<Diagonal>,
}

impl LinkageSpec {
    pub fn new<S: AsRef<str>>(vertices: impl IntoIterator<Item = S>) -> Self {
        Self {
            vertices: vertices.into_iter().map(|s| s.as_ref().to_owned()).collect(),
            ..Self::default()
        }
    }

    /// Closed polygon `names[0] names[1] ... names[k-1]` with side `i`
    /// joining `names[i]` and `names[i + 1]`.
    pub fn polygon<S: AsRef<str>>(names: &[S], lengths: &[f64]) -> Result<Self> {
        assert_eq!(names.len(), lengths.len(), "one length per side");
        let mut spec = Self::new(names.iter().map(AsRef::as_ref));
        let k = names.len();
        for (i, &len) in lengths.iter().enumerate() {
            spec.add_edge(names[i].as_ref(), names[(i + 1) % k].as_ref(), len)?;
        }
        Ok(spec)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn base(&self) -> &[BaseVertex] {
        &self.base
    }

    pub fn diagonals(&self) -> &[Diagonal] {
        &self.diagonals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn name(&self, vertex: usize) -> &str {
        &self.vertices[vertex]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVertex(name.to_owned()))
    }

    pub fn add_vertex(&mut self, name: &str) -> usize {
        self.vertices.push(name.to_owned());
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, a: &str, b: &str, length: f64) -> Result<usize> {
        let (a, b) = (self.index_of(a)?, self.index_of(b)?);
        self.edges.push(Edge { a, b, length });
        Ok(self.edges.len() - 1)
    }

    pub fn add_base(&mut self, vertex: &str, x: f64, y: f64) -> Result<()> {
        let vertex = self.index_of(vertex)?;
        self.base.push(BaseVertex {
            vertex,
            position: Point::new(x, y),
        });
        Ok(())
    }

    pub fn add_diagonal(&mut self, a: &str, b: &str) -> Result<usize> {
        let (a, b) = (self.index_of(a)?, self.index_of(b)?);
        self.diagonals.push(Diagonal { a, b });
        Ok(self.diagonals.len() - 1)
    }

    pub(crate) fn from_parts(
        vertices: Vec<String>,
        edges: Vec<Edge>,
        base: Vec<BaseVertex>,
        diagonals: Vec<Diagonal>,
    ) -> Self {
        Self {
            vertices,
            edges,
            base,
            diagonals,
        }
    }

    pub fn base_position(&self, vertex: usize) -> Option<Point> {
        self.base
            .iter()
            .find(|b| b.vertex == vertex)
            .map(|b| b.position)
    }

    pub fn is_base(&self, vertex: usize) -> bool {
        self.base.iter().any(|b| b.vertex == vertex)
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.joins(u, v))
    }

    /// Connectivity of the bar graph.
    pub fn is_connected(&self) -> bool {
        connected(
            self.vertices.len(),
            self.edges.iter().map(|e| (e.a, e.b)),
        )
    }

    /// Connectivity of the graph whose edges are the bars and the marked
    /// diagonals.
    pub fn is_connected_with_diagonals(&self) -> bool {
        connected(
            self.vertices.len(),
            self.edges
                .iter()
                .map(|e| (e.a, e.b))
                .chain(self.diagonals.iter().map(|d| (d.a, d.b))),
        )
    }

    /// All violated invariants; empty for a well-formed spec.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen_names: HashMap<&str, usize> = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if seen_names.insert(v.as_str(), i).is_some() {
                out.push(Violation::DuplicateVertex(v.clone()));
            }
        }

        let pair = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut seen_edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            let label = self.edge_label(e.a, e.b);
            if e.a == e.b {
                out.push(Violation::SelfLoop(label.clone()));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                out.push(Violation::NonPositiveLength {
                    edge: label.clone(),
                    length: e.length,
                });
            }
            if let Some(&first) = seen_edges.get(&pair(e.a, e.b)) {
                out.push(Violation::DuplicateEdge {
                    edge: label,
                    first,
                    second: i,
                });
            } else {
                seen_edges.insert(pair(e.a, e.b), i);
            }
        }

        for (i, b) in self.base.iter().enumerate() {
            let name = self.vertices[b.vertex].clone();
            if self.base[..i].iter().any(|o| o.vertex == b.vertex) {
                out.push(Violation::DuplicateBase(name.clone()));
            }
            if !(b.position.x.is_finite() && b.position.y.is_finite()) {
                out.push(Violation::NonFiniteBase(name));
                continue;
            }
            for o in &self.base[..i] {
                if o.vertex != b.vertex && o.position == b.position {
                    out.push(Violation::CoincidentBase {
                        a: self.vertices[o.vertex].clone(),
                        b: self.vertices[b.vertex].clone(),
                    });
                }
            }
        }

        let mut seen_diagonals: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, d) in self.diagonals.iter().enumerate() {
            let label = self.edge_label(d.a, d.b);
            if d.a == d.b {
                out.push(Violation::DiagonalSelfLoop(label.clone()));
            }
            if self.edge_between(d.a, d.b).is_some() {
                out.push(Violation::DiagonalIsEdge(label.clone()));
            }
            if seen_diagonals.insert(pair(d.a, d.b), i).is_some() {
                out.push(Violation::DuplicateDiagonal(label));
            }
        }
        out
    }

    pub fn edge_label(&self, a: usize, b: usize) -> String {
        format!("{}{}", self.vertices[a], self.vertices[b])
    }

    /// Multiplies every bar length and base position by `c`.
    pub fn scale(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale factor must be positive");
        let mut out = self.clone();
        for e in &mut out.edges {
            e.length *= c;
        }
        for b in &mut out.base {
            b.position *= c;
        }
        out
    }

    /// Promotes marked diagonal `index` to a bar of the given length
    /// (appended after the existing bars) and unmarks it.
    pub fn add_diagonal_bar(&self, index: usize, length: f64) -> Self {
        let mut out = self.clone();
        let d = out.diagonals.remove(index);
        out.edges.push(Edge {
            a: d.a,
            b: d.b,
            length,
        });
        out
    }

    /// The sublinkage induced on `vertices` (kept in the given order): every
    /// bar and marked diagonal with both ends inside, in the original order.
    /// Base vertices inside the subset stay based.
    pub fn induced(&self, vertices: &[usize]) -> (Self, Vec<usize>, Vec<usize>) {
        let local = |v: usize| vertices.iter().position(|&u| u == v);
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if let (Some(a), Some(b)) = (local(e.a), local(e.b)) {
                edges.push(Edge {
                    a,
                    b,
                    length: e.length,
                });
                edge_map.push(i);
            }
        }
        let mut diagonals = Vec::new();
        let mut diagonal_map = Vec::new();
        for (i, d) in self.diagonals.iter().enumerate() {
            if let (Some(a), Some(b)) = (local(d.a), local(d.b)) {
                diagonals.push(Diagonal { a, b });
                diagonal_map.push(i);
            }
        }
        let base = self
            .base
            .iter()
            .filter_map(|b| {
                local(b.vertex).map(|vertex| BaseVertex {
                    vertex,
                    position: b.position,
                })
            })
            .collect();
        let names = vertices.iter().map(|&v| self.vertices[v].clone()).collect();
        (
            Self::from_parts(names, edges, base, diagonals),
            edge_map,
            diagonal_map,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateVertex(String),
    SelfLoop(String),
    DuplicateEdge {
        edge: String,
        first: usize,
        second: usize,
    },
    NonPositiveLength {
        edge: String,
        length: f64,
    },
    DuplicateBase(String),
    NonFiniteBase(String),
    CoincidentBase {
        a: String,
        b: String,
    },
    DiagonalSelfLoop(String),
    DiagonalIsEdge(String),
    DuplicateDiagonal(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateVertex(v) => write!(f, "duplicate vertex {v}"),
            Self::SelfLoop(e) => write!(f, "edge {e} joins a vertex to itself"),
            Self::DuplicateEdge { edge, first, second } => {
                write!(f, "duplicate edge {edge} (entries {first} and {second})")
            }
            Self::NonPositiveLength { edge, length } => {
                write!(f, "edge {edge} has non-positive length {length}")
            }
            Self::DuplicateBase(v) => write!(f, "base vertex {v} listed twice"),
            Self::NonFiniteBase(v) => write!(f, "base vertex {v} has a non-finite position"),
            Self::CoincidentBase { a, b } => {
                write!(f, "base vertices {a} and {b} share a position")
            }
            Self::DiagonalSelfLoop(d) => write!(f, "diagonal {d} joins a vertex to itself"),
            Self::DiagonalIsEdge(d) => write!(f, "diagonal coincides with edge {d}"),
            Self::DuplicateDiagonal(d) => write!(f, "duplicate diagonal {d}"),
        }
    }
}

/// Power of `c` by which the canonical contravariant volume is multiplied
/// when every length (and base position) is multiplied by `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomothetyLaw {
    pub exponent: i64,
    pub connected: bool,
}

/// `2(|E| - (|V| - |B|))` with two or more base vertices (the number of
/// movable vertices is `|V| - |B|`), and `2(|E| - |V| + 1)` otherwise. A
/// single base vertex pins to two base vertices and one bar fewer, which
/// lands on the same value as the base-free formula.
pub fn homothety_law(spec: &LinkageSpec) -> HomothetyLaw {
    let e = spec.edges.len() as i64;
    let v = spec.vertices.len() as i64;
    let b = spec.base.len() as i64;
    let exponent = if b >= 2 {
        2 * (e - (v - b))
    } else {
        2 * (e - v + 1)
    };
    HomothetyLaw {
        exponent,
        connected: spec.is_connected(),
    }
}

pub(crate) fn connected(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

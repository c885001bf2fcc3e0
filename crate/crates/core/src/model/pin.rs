//! Pinning: fixing enough vertices that the isometry group acting on
//! realizations becomes trivial, so that configuration space and orbit space
//! coincide.

use super::{BaseVertex, LinkageSpec, Point};
use crate::error::{Error, Result};

/// What [`pin`] did to the input spec.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PinReport {
    /// Index (in the input spec) of the bar that was fixed and removed.
    pub removed_edge: Option<usize>,
    /// Vertices that became base vertices, with their new positions.
    pub fixed: Vec<(usize, Point)>,
}

impl PinReport {
    pub fn is_identity(&self) -> bool {
        self.removed_edge.is_none() && self.fixed.is_empty()
    }
}

/// A linkage with at least two base vertices. Vertex indices are shared with
/// the input spec; bar indices are not (see [`PinnedSpec::original_edge`]).
#[derive(Clone, Debug, PartialEq)]
pub struct PinnedSpec {
    spec: LinkageSpec,
    original: LinkageSpec,
    movable: Vec<usize>,
    edge_map: Vec<usize>,
    report: PinReport,
}

impl PinnedSpec {
    /// The pinned linkage: extra base vertices added, pinned bar removed.
    pub fn spec(&self) -> &LinkageSpec {
        &self.spec
    }

    /// The linkage before pinning.
    pub fn original(&self) -> &LinkageSpec {
        &self.original
    }

    /// Non-base vertices in input order; vertex `movable[i]` owns coordinates
    /// `2i` and `2i + 1`.
    pub fn movable(&self) -> &[usize] {
        &self.movable
    }

    pub fn report(&self) -> &PinReport {
        &self.report
    }

    pub fn original_edge(&self, pinned_edge: usize) -> usize {
        self.edge_map[pinned_edge]
    }

    pub fn coordinate_count(&self) -> usize {
        2 * self.movable.len()
    }

    pub fn bar_count(&self) -> usize {
        self.spec.edges().len()
    }

    /// Treats the base vertices of `spec` as the full pinning, even if there
    /// are fewer than two. Used where the isometry group is handled by the
    /// caller (redundancy sampling, orbit-space volumes).
    pub(crate) fn unpinned(spec: &LinkageSpec) -> Self {
        Self {
            spec: spec.clone(),
            original: spec.clone(),
            movable: movable_of(spec),
            edge_map: (0..spec.edges().len()).collect(),
            report: PinReport::default(),
        }
    }
}

fn movable_of(spec: &LinkageSpec) -> Vec<usize> {
    (0..spec.vertex_count())
        .filter(|&v| !spec.is_base(v))
        .collect()
}

/// Pins `spec` so that its configuration space is represented by plain
/// realizations. With two or more base vertices this is the identity. With
/// one base vertex, a neighbour of it is fixed on the horizontal ray from the
/// base. With none, `preferred` (default: the lexicographically smallest
/// bar) is laid along the positive horizontal axis from the origin.
pub fn pin(spec: &LinkageSpec, preferred: Option<usize>) -> Result<PinnedSpec> {
    pin_with(spec, preferred, false)
}

/// As [`pin`]; with `diagonals_connect` the connectivity requirement counts
/// marked diagonals as edges. Pieces of a decomposition are often connected
/// only through their diagonals.
pub fn pin_with(
    spec: &LinkageSpec,
    preferred: Option<usize>,
    diagonals_connect: bool,
) -> Result<PinnedSpec> {
    if spec.base().len() >= 2 {
        return Ok(PinnedSpec::unpinned(spec));
    }
    let connected = if diagonals_connect {
        spec.is_connected_with_diagonals()
    } else {
        spec.is_connected()
    };
    if !connected {
        return Err(Error::Disconnected);
    }

    let key = |i: usize| {
        let e = &spec.edges()[i];
        let (x, y) = (spec.name(e.a), spec.name(e.b));
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };

    let (bar, fixed) = match spec.base().first() {
        Some(base) => {
            let root = base.vertex;
            let bar = preferred
                .filter(|&i| {
                    let e = &spec.edges()[i];
                    e.a == root || e.b == root
                })
                .or_else(|| {
                    (0..spec.edges().len())
                        .filter(|&i| {
                            let e = &spec.edges()[i];
                            e.a == root || e.b == root
                        })
                        .min_by_key(|&i| key(i))
                })
                .ok_or(Error::NoBars)?;
            let e = &spec.edges()[bar];
            let other = if e.a == root { e.b } else { e.a };
            let at = base.position + Point::new(e.length, 0.0);
            (bar, vec![(other, at)])
        }
        None => {
            let bar = preferred
                .or_else(|| (0..spec.edges().len()).min_by_key(|&i| key(i)))
                .ok_or(Error::NoBars)?;
            let e = &spec.edges()[bar];
            (
                bar,
                vec![(e.a, Point::zeros()), (e.b, Point::new(e.length, 0.0))],
            )
        }
    };

    let mut edges = spec.edges().to_vec();
    edges.remove(bar);
    let edge_map = (0..spec.edges().len()).filter(|&i| i != bar).collect();
    let mut base = spec.base().to_vec();
    base.extend(fixed.iter().map(|&(vertex, position)| BaseVertex { vertex, position }));
    let pinned = LinkageSpec::from_parts(
        spec.vertices().to_vec(),
        edges,
        base,
        spec.diagonals().to_vec(),
    );
    Ok(PinnedSpec {
        movable: movable_of(&pinned),
        spec: pinned,
        original: spec.clone(),
        edge_map,
        report: PinReport {
            removed_edge: Some(bar),
            fixed,
        },
    })
}

/// `2n - q` for `n` movable vertices and `q` bars of a non-redundant pinned
/// linkage.
pub fn degrees_of_freedom(pinned: &PinnedSpec) -> Result<usize> {
    let coordinates = pinned.coordinate_count();
    let bars = pinned.bar_count();
    coordinates
        .checked_sub(bars)
        .ok_or(Error::OverConstrained { coordinates, bars })
}

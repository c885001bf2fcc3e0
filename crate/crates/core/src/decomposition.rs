//! Acyclic semi-rigid connected sums.
//!
//! A linkage is cut into pieces `V_i` glued along pairwise disjoint joints
//! `J_k`. Every marked diagonal lies inside a joint, every joint is rigid once
//! its marked diagonals have fixed length, and the bipartite piece/joint
//! incidence graph is a tree. A vector field on one piece then lifts to the
//! whole linkage by moving every other piece rigidly with the joint through
//! which it hangs off that piece; lifts of fields on different pieces
//! commute and preserve every marked diagonal.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DVector, Matrix2};

use crate::error::{Error, Result};
use crate::flows::VectorField;
use crate::geometry::{numerical_rank, ConstraintSystem, Realization};
use crate::model::pin::pin_with;
use crate::model::{degrees_of_freedom, DecompositionFile, LinkageSpec, PinnedSpec, Point};
use crate::nambu::NambuField;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pieces: Vec<Vec<usize>>,
    joints: Vec<Vec<usize>>,
}

impl Decomposition {
    pub fn new(pieces: Vec<Vec<usize>>, joints: Vec<Vec<usize>>) -> Self {
        Self { pieces, joints }
    }

    pub fn from_names<S: AsRef<str>>(spec: &LinkageSpec, pieces: &[Vec<S>], joints: &[Vec<S>]) -> Result<Self> {
        let resolve = |sets: &[Vec<S>]| -> Result<Vec<Vec<usize>>> {
            sets.iter()
                .map(|set| set.iter().map(|n| spec.index_of(n.as_ref())).collect())
                .collect()
        };
        Ok(Self::new(resolve(pieces)?, resolve(joints)?))
    }

    pub fn from_file(spec: &LinkageSpec, file: &DecompositionFile) -> Result<Self> {
        Self::from_names(spec, &file.pieces, &file.joints)
    }

    pub fn pieces(&self) -> &[Vec<usize>] {
        &self.pieces
    }

    pub fn joints(&self) -> &[Vec<usize>] {
        &self.joints
    }

    /// Pairs `(i, k)` with `J_k ⊆ V_i`.
    pub fn incidence(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            for (k, joint) in self.joints.iter().enumerate() {
                if joint.iter().all(|v| piece.contains(v)) {
                    out.push((i, k));
                }
            }
        }
        out
    }

    /// Marked diagonals (indices into the spec) with both ends in piece `i`.
    pub fn piece_diagonals(&self, spec: &LinkageSpec, i: usize) -> Vec<usize> {
        within(spec, &self.pieces[i])
    }

    pub fn joint_diagonals(&self, spec: &LinkageSpec, k: usize) -> Vec<usize> {
        within(spec, &self.joints[k])
    }
}

fn within(spec: &LinkageSpec, set: &[usize]) -> Vec<usize> {
    spec.diagonals()
        .iter()
        .enumerate()
        .filter(|(_, d)| set.contains(&d.a) && set.contains(&d.b))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecompositionViolation {
    BasePoints,
    EmptyPiece(usize),
    UncoveredVertex(String),
    UncoveredEdge(String),
    StrayDiagonal(String),
    OnePointJoint(usize),
    OverlappingJoints(usize, usize),
    UnjointedIntersection(usize, usize),
    UnusedJoint(usize),
    NotATree,
    Piece { piece: usize, reason: String },
    DimensionTooSmall {
        piece: usize,
        dimension: usize,
        diagonals: usize,
    },
    JointNotRigid { joint: usize, reason: String },
    DependentDiagonals { rank: usize, expected: usize },
    NoRealization,
}

impl fmt::Display for DecompositionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BasePoints => write!(f, "linkages with base points are not supported"),
            Self::EmptyPiece(i) => write!(f, "piece {i} is empty"),
            Self::UncoveredVertex(v) => write!(f, "vertex {v} lies in no piece"),
            Self::UncoveredEdge(e) => write!(f, "edge {e} lies in no piece"),
            Self::StrayDiagonal(d) => {
                write!(f, "marked diagonal {d} is not a diagonal of a joint")
            }
            Self::OnePointJoint(k) => write!(
                f,
                "joint {k} has fewer than two vertices (one-point joints are an excluded case)"
            ),
            Self::OverlappingJoints(a, b) => write!(f, "joints {a} and {b} share a vertex"),
            Self::UnjointedIntersection(a, b) => {
                write!(f, "pieces {a} and {b} intersect outside a joint")
            }
            Self::UnusedJoint(k) => write!(f, "joint {k} is contained in no piece"),
            Self::NotATree => write!(f, "the piece/joint incidence graph is not a tree"),
            Self::Piece { piece, reason } => write!(f, "piece {piece}: {reason}"),
            Self::DimensionTooSmall {
                piece,
                dimension,
                diagonals,
            } => write!(
                f,
                "piece {piece} has dimension {dimension} but {diagonals} marked diagonals"
            ),
            Self::JointNotRigid { joint, reason } => {
                write!(f, "joint {joint} is not rigid: {reason}")
            }
            Self::DependentDiagonals { rank, expected } => write!(
                f,
                "marked diagonal lengths are dependent (rank {rank}, expected {expected})"
            ),
            Self::NoRealization => write!(f, "no realization found for sampling"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecompositionReport {
    pub violations: Vec<DecompositionViolation>,
    /// `dim M_{L_i}` per piece, where computable.
    pub piece_dimensions: Vec<Option<usize>>,
    pub piece_diagonals: Vec<usize>,
}

impl DecompositionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Combinatorial checks, piece dimensions, and numerical semi-rigidity of
/// the joints at a sampled realization.
pub fn validate_decomposition(
    spec: &LinkageSpec,
    dec: &Decomposition,
    seed: u64,
) -> DecompositionReport {
    use DecompositionViolation as V;
    let mut violations = Vec::new();
    if !spec.base().is_empty() {
        violations.push(V::BasePoints);
    }

    for (i, piece) in dec.pieces.iter().enumerate() {
        if piece.is_empty() {
            violations.push(V::EmptyPiece(i));
        }
    }
    for v in 0..spec.vertex_count() {
        if !dec.pieces.iter().any(|p| p.contains(&v)) {
            violations.push(V::UncoveredVertex(spec.name(v).to_owned()));
        }
    }
    for e in spec.edges() {
        if !dec
            .pieces
            .iter()
            .any(|p| p.contains(&e.a) && p.contains(&e.b))
        {
            violations.push(V::UncoveredEdge(spec.edge_label(e.a, e.b)));
        }
    }
    for d in spec.diagonals() {
        if !dec
            .joints
            .iter()
            .any(|j| j.contains(&d.a) && j.contains(&d.b))
        {
            violations.push(V::StrayDiagonal(spec.edge_label(d.a, d.b)));
        }
    }
    for (k, joint) in dec.joints.iter().enumerate() {
        if joint.len() < 2 {
            violations.push(V::OnePointJoint(k));
        }
        for l in k + 1..dec.joints.len() {
            if joint.iter().any(|v| dec.joints[l].contains(v)) {
                violations.push(V::OverlappingJoints(k, l));
            }
        }
    }
    let as_set = |s: &[usize]| s.iter().copied().collect::<BTreeSet<_>>();
    for i in 0..dec.pieces.len() {
        for j in i + 1..dec.pieces.len() {
            let common: BTreeSet<usize> = as_set(&dec.pieces[i])
                .intersection(&as_set(&dec.pieces[j]))
                .copied()
                .collect();
            if !common.is_empty() && !dec.joints.iter().any(|k| as_set(k) == common) {
                violations.push(V::UnjointedIntersection(i, j));
            }
        }
    }
    let incidence = dec.incidence();
    for k in 0..dec.joints.len() {
        if !incidence.iter().any(|&(_, kk)| kk == k) {
            violations.push(V::UnusedJoint(k));
        }
    }
    let nodes = dec.pieces.len() + dec.joints.len();
    let tree = incidence.len() + 1 == nodes
        && crate::model::connected(
            nodes,
            incidence.iter().map(|&(i, k)| (i, dec.pieces.len() + k)),
        );
    if !tree {
        violations.push(V::NotATree);
    }

    let mut piece_dimensions = Vec::new();
    let mut piece_diagonals = Vec::new();
    for i in 0..dec.pieces.len() {
        let diagonals = dec.piece_diagonals(spec, i).len();
        piece_diagonals.push(diagonals);
        match piece_dimension(spec, dec, i) {
            Ok(dimension) => {
                piece_dimensions.push(Some(dimension));
                if dimension < diagonals {
                    violations.push(V::DimensionTooSmall {
                        piece: i,
                        dimension,
                        diagonals,
                    });
                }
            }
            Err(e) => {
                piece_dimensions.push(None);
                violations.push(V::Piece {
                    piece: i,
                    reason: e.to_string(),
                });
            }
        }
    }

    if violations.is_empty() {
        numeric_checks(spec, dec, seed, &mut violations);
    }

    DecompositionReport {
        violations,
        piece_dimensions,
        piece_diagonals,
    }
}

fn numeric_checks(
    spec: &LinkageSpec,
    dec: &Decomposition,
    seed: u64,
    violations: &mut Vec<DecompositionViolation>,
) {
    use DecompositionViolation as V;
    let Ok(whole) = ConstraintSystem::for_spec(spec) else {
        violations.push(V::NoRealization);
        return;
    };
    let Ok(sample) = whole.random_feasible(derive_seed(seed, 0), 50) else {
        violations.push(V::NoRealization);
        return;
    };
    let rank_cut = whole.tolerances().rank;

    for (k, joint) in dec.joints.iter().enumerate() {
        let (mut rigid, _, _) = spec.induced(joint);
        for d in (0..rigid.diagonals().len()).rev() {
            let dd = rigid.diagonals()[d];
            let length = (sample.positions[joint[dd.a]] - sample.positions[joint[dd.b]]).norm();
            rigid = rigid.add_diagonal_bar(d, length);
        }
        let dof = match pin_with(&rigid, None, false).and_then(|p| degrees_of_freedom(&p)) {
            Ok(dof) => dof,
            Err(e) => {
                violations.push(V::JointNotRigid {
                    joint: k,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if dof != 0 {
            violations.push(V::JointNotRigid {
                joint: k,
                reason: format!("{dof} degrees of freedom"),
            });
            continue;
        }
        // Rigid iff the unpinned bar Jacobian has rank 2m - 3.
        let free = ConstraintSystem::new(PinnedSpec::unpinned(&rigid));
        let local: Vec<Point> = joint.iter().map(|&v| sample.positions[v]).collect();
        let j = free.bar_jacobian(&free.coordinates_of(&local));
        let expected = 2 * joint.len() - 3;
        let rank = numerical_rank(&j, rank_cut);
        if rank < expected {
            violations.push(V::JointNotRigid {
                joint: k,
                reason: format!("Jacobian rank {rank} below {expected}"),
            });
        }
    }

    let j = whole
        .jacobian(&sample.coordinates)
        .expect("sample has the system's dimension");
    let expected = whole.bar_count() + whole.diagonal_count();
    let rank = numerical_rank(&j, rank_cut);
    if rank < expected {
        violations.push(V::DependentDiagonals { rank, expected });
    }
}

/// The sublinkage generated by a piece, pinned on its own bar.
#[derive(Clone, Debug)]
pub struct PieceSystem {
    pub system: ConstraintSystem,
    /// Piece-local vertex index to whole-linkage vertex index.
    pub vertices: Vec<usize>,
    /// Piece-local diagonal index to whole-linkage diagonal index.
    pub diagonals: Vec<usize>,
    /// `dim M_{L_i}`.
    pub dimension: usize,
}

impl PieceSystem {
    /// `dim M_{L_i} - |D_i|`: the number of vector fields the piece carries.
    pub fn field_count(&self) -> usize {
        self.dimension.saturating_sub(self.diagonals.len())
    }
}

fn piece_pinned(spec: &LinkageSpec, dec: &Decomposition, i: usize) -> Result<(PinnedSpec, Vec<usize>)> {
    let (piece, _, diagonals) = spec.induced(&dec.pieces[i]);
    Ok((pin_with(&piece, None, true)?, diagonals))
}

fn piece_dimension(spec: &LinkageSpec, dec: &Decomposition, i: usize) -> Result<usize> {
    degrees_of_freedom(&piece_pinned(spec, dec, i)?.0)
}

pub fn piece_system(spec: &LinkageSpec, dec: &Decomposition, i: usize) -> Result<PieceSystem> {
    let (pinned, diagonals) = piece_pinned(spec, dec, i)?;
    let dimension = degrees_of_freedom(&pinned)?;
    Ok(PieceSystem {
        system: ConstraintSystem::new(pinned),
        vertices: dec.pieces[i].clone(),
        diagonals,
        dimension,
    })
}

/// `(Σ_i (dim M_{L_i} - |D_i|), |D|)`.
pub fn system_type(spec: &LinkageSpec, dec: &Decomposition) -> Result<(usize, usize)> {
    let mut p = 0;
    for i in 0..dec.pieces.len() {
        let dimension = piece_dimension(spec, dec, i)?;
        let diagonals = dec.piece_diagonals(spec, i).len();
        if dimension < diagonals {
            return Err(Error::InvalidDecomposition(vec![
                DecompositionViolation::DimensionTooSmall {
                    piece: i,
                    dimension,
                    diagonals,
                },
            ]));
        }
        p += dimension - diagonals;
    }
    Ok((p, spec.diagonals().len()))
}

/// Half squared lengths of every marked diagonal, in marked order.
pub fn first_integrals(spec: &LinkageSpec, realization: &Realization) -> DVector<f64> {
    DVector::from_iterator(
        spec.diagonals().len(),
        spec.diagonals()
            .iter()
            .map(|d| (realization.positions[d.a] - realization.positions[d.b]).norm_squared() / 2.0),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Carrier {
    Piece,
    Joint(usize),
}

#[derive(Clone)]
enum PieceField {
    /// Re-anchored at the actual anchor positions on every evaluation, so
    /// joints stay exactly rigid off the constraint manifold too.
    Nambu(Box<NambuField>),
    Custom(Arc<dyn VectorField>),
}

/// Horizontal lift of a vector field on one piece to the whole linkage.
#[derive(Clone)]
pub struct LiftedField {
    whole: ConstraintSystem,
    piece: PieceSystem,
    piece_index: usize,
    field: PieceField,
    joints: Vec<Vec<usize>>,
    carriers: Vec<Carrier>,
    /// The two piece vertices pinned in the piece's own frame.
    anchor: (usize, usize),
}

impl fmt::Debug for LiftedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftedField")
            .field("piece_index", &self.piece_index)
            .field("vertices", &self.piece.vertices)
            .finish_non_exhaustive()
    }
}

impl LiftedField {
    /// Lift of the piece's Nambu field taken with all its marked diagonals as
    /// first integrals; the piece must carry exactly one field.
    pub fn nambu(whole: &ConstraintSystem, dec: &Decomposition, piece: usize) -> Result<Self> {
        let local = piece_system(whole.pinned().original(), dec, piece)?;
        if local.field_count() != 1 {
            return Err(Error::NoPieceField {
                piece,
                dimension: local.dimension,
                diagonals: local.diagonals.len(),
            });
        }
        let field = NambuField::with_all_diagonals(local.system.clone());
        Self::build(whole, dec, piece, PieceField::Nambu(Box::new(field)))
    }

    /// Lift of an arbitrary field given in the coordinates of
    /// [`piece_system`]`(…, piece).system`. The field must preserve the
    /// piece's marked diagonals for the lift to be tangent; it is evaluated
    /// in the piece's pinned frame, so joints are only rigid to within the
    /// constraint residual off the manifold.
    pub fn with_field(
        whole: &ConstraintSystem,
        dec: &Decomposition,
        piece: usize,
        field: Arc<dyn VectorField>,
    ) -> Result<Self> {
        Self::build(whole, dec, piece, PieceField::Custom(field))
    }

    fn build(whole: &ConstraintSystem, dec: &Decomposition, piece: usize, field: PieceField) -> Result<Self> {
        let spec = whole.pinned().original();
        let local = piece_system(spec, dec, piece)?;
        if let PieceField::Custom(f) = &field {
            if f.dim() != local.system.dim() {
                return Err(Error::DimensionMismatch {
                    expected: local.system.dim(),
                    got: f.dim(),
                });
            }
        }
        let fixed: Vec<usize> = local.system.spec().base().iter().map(|b| b.vertex).collect();
        let anchor = (fixed[0], fixed[1]);

        // Every vertex outside the piece hangs off it through one joint.
        let incidence = dec.incidence();
        let pieces = dec.pieces().len();
        let mut carriers = vec![Carrier::Piece; spec.vertex_count()];
        let mut seen = vec![false; pieces + dec.joints().len()];
        seen[piece] = true;
        for &(_, k) in incidence.iter().filter(|&&(i, _)| i == piece) {
            let mut queue = VecDeque::from([pieces + k]);
            seen[pieces + k] = true;
            while let Some(node) = queue.pop_front() {
                if node < pieces {
                    for &v in &dec.pieces()[node] {
                        if !local.vertices.contains(&v) {
                            carriers[v] = Carrier::Joint(k);
                        }
                    }
                }
                for &(i, kk) in &incidence {
                    let (a, b) = (i, pieces + kk);
                    let next = if a == node {
                        b
                    } else if b == node {
                        a
                    } else {
                        continue;
                    };
                    if !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }

        Ok(Self {
            whole: whole.clone(),
            piece: local,
            piece_index: piece,
            field,
            joints: dec.joints().to_vec(),
            carriers,
            anchor,
        })
    }

    pub fn system(&self) -> &ConstraintSystem {
        &self.whole
    }

    pub fn piece_index(&self) -> usize {
        self.piece_index
    }

    pub fn piece(&self) -> &PieceSystem {
        &self.piece
    }

    /// Plane velocities of every vertex, in the whole linkage's pinned frame.
    pub fn vertex_velocities(&self, x: &DVector<f64>) -> Result<Vec<Point>> {
        if x.len() != self.whole.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.whole.dim(),
                got: x.len(),
            });
        }
        let positions = self.whole.positions(x);
        let local = &self.piece;

        // Rigid map from the whole frame to the piece's pinned frame.
        let (a0, a1) = self.anchor;
        let (w0, w1) = (positions[local.vertices[a0]], positions[local.vertices[a1]]);
        let (p0, p1) = (
            local.system.spec().base_position(a0).expect("anchor is fixed"),
            local.system.spec().base_position(a1).expect("anchor is fixed"),
        );
        let rotation = rotation_between(w1 - w0, p1 - p0);
        let local_positions: Vec<Point> = local
            .vertices
            .iter()
            .map(|&v| rotation * (positions[v] - w0) + p0)
            .collect();
        let y = local.system.coordinates_of(&local_positions);
        let v_local = match &self.field {
            PieceField::Nambu(field) => {
                let mut field = field.clone();
                field.system_mut().move_fixed(a1, local_positions[a1]);
                field.evaluate(&y)?
            }
            PieceField::Custom(field) => field.evaluate(&y)?,
        };

        let mut velocity = vec![Point::zeros(); positions.len()];
        let back = rotation.transpose();
        for (l, &v) in local.vertices.iter().enumerate() {
            if let Some(slot) = local.system.slot_of(l) {
                velocity[v] = back * Point::new(v_local[2 * slot], v_local[2 * slot + 1]);
            }
        }

        let mut motions: Vec<Option<RigidMotion>> = vec![None; self.joints.len()];
        for (v, carrier) in self.carriers.iter().enumerate() {
            if let Carrier::Joint(k) = *carrier {
                let motion = match motions[k] {
                    Some(m) => m,
                    None => {
                        let m = fit_rigid_motion(&self.joints[k], &positions, &velocity)
                            .map_err(|e| match e {
                                Error::NonRigidJoint { residual, .. } => {
                                    Error::NonRigidJoint { joint: k, residual }
                                }
                                other => other,
                            })?;
                        motions[k] = Some(m);
                        m
                    }
                };
                velocity[v] = motion.apply(positions[v]);
            }
        }

        // Remove the rigid motion of the whole linkage's fixed vertices.
        let fixed: Vec<usize> = self.whole.spec().base().iter().map(|b| b.vertex).collect();
        if !fixed.is_empty() {
            let drift = fit_rigid_motion(&fixed, &positions, &velocity)?;
            for (v, p) in positions.iter().enumerate() {
                velocity[v] -= drift.apply(*p);
            }
        }
        Ok(velocity)
    }
}

impl VectorField for LiftedField {
    fn dim(&self) -> usize {
        self.whole.dim()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let velocity = self.vertex_velocities(x)?;
        Ok(self.whole.coordinates_of(&velocity))
    }
}

/// Rotation taking the direction of `from` to the direction of `to`.
fn rotation_between(from: Point, to: Point) -> Matrix2<f64> {
    let angle = to.y.atan2(to.x) - from.y.atan2(from.x);
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Infinitesimal rigid motion `v(p) = t + ω J (p − c)` about a centre `c`.
#[derive(Clone, Copy, Debug)]
struct RigidMotion {
    omega: f64,
    translation: Point,
    centre: Point,
}

impl RigidMotion {
    fn apply(&self, p: Point) -> Point {
        let r = p - self.centre;
        self.translation + Point::new(-r.y, r.x) * self.omega
    }
}

/// Least-squares infinitesimal rigid motion matching the velocities of
/// `vertices`. About the centroid the three unknowns decouple: `t` is the
/// mean velocity and `ω` the mean angular momentum over the moment of
/// inertia. The residual is checked.
fn fit_rigid_motion(vertices: &[usize], positions: &[Point], velocity: &[Point]) -> Result<RigidMotion> {
    let m = vertices.len() as f64;
    let centre = vertices.iter().map(|&v| positions[v]).sum::<Point>() / m;
    let translation = vertices.iter().map(|&v| velocity[v]).sum::<Point>() / m;
    let (mut inertia, mut momentum, mut spread) = (0.0, 0.0, 0.0_f64);
    for &v in vertices {
        let r = positions[v] - centre;
        inertia += r.norm_squared();
        momentum += r.x * velocity[v].y - r.y * velocity[v].x;
        spread = spread.max(r.norm());
    }
    let size = vertices
        .iter()
        .map(|&v| positions[v].norm())
        .fold(1.0, f64::max);
    if spread <= 1e-8 * size {
        return Err(Error::SingularConfiguration { corank: 1 });
    }
    let motion = RigidMotion {
        omega: momentum / inertia,
        translation,
        centre,
    };
    let scale = vertices.iter().map(|&v| velocity[v].norm()).fold(0.0, f64::max);
    let residual = vertices
        .iter()
        .map(|&v| (motion.apply(positions[v]) - velocity[v]).norm())
        .fold(0.0, f64::max);
    if residual > 1e-9 * (1.0 + scale) {
        return Err(Error::NonRigidJoint { joint: 0, residual });
    }
    Ok(motion)
}

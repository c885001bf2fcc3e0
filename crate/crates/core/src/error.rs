use thiserror::Error;

use crate::decomposition::DecompositionViolation;
use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("invalid linkage: {}", join(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("invalid decomposition: {}", join(.0))]
    InvalidDecomposition(Vec<DecompositionViolation>),

    #[error("cannot pin disconnected linkage")]
    Disconnected,

    #[error("no bars available to pin")]
    NoBars,

    #[error("over-constrained: 2n < q (2n = {coordinates}, q = {bars})")]
    OverConstrained { coordinates: usize, bars: usize },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("numerical blow-up")]
    NumericalBlowUp,

    #[error("singular configuration (corank {corank})")]
    SingularConfiguration { corank: usize },

    #[error("not a 1DOF Nambu configuration: {rows} rows for {columns} coordinates")]
    NotNambuConfiguration { rows: usize, columns: usize },

    #[error("not a rigid configuration: {rows} rows for {columns} coordinates")]
    NotRigidConfiguration { rows: usize, columns: usize },

    #[error("no realization found after {attempts} attempts")]
    NoRealization { attempts: usize },

    #[error("infeasible lengths")]
    InfeasibleLengths,

    #[error("constant function: the diagonal length does not vary on the configuration space")]
    ConstantFunction,

    #[error("infeasible hexagon: longest side {longest} exceeds the sum {rest} of the others")]
    InfeasibleHexagon { longest: f64, rest: f64 },

    #[error("piece {piece} carries no vector field (dim M = {dimension}, {diagonals} marked diagonals)")]
    NoPieceField {
        piece: usize,
        dimension: usize,
        diagonals: usize,
    },

    #[error("rigid fit residual {residual:e} exceeds tolerance at joint {joint}")]
    NonRigidJoint { joint: usize, residual: f64 },

    #[error("trajectory did not return to its start within t = {t_max}")]
    NoReturn { t_max: f64 },

    #[error("{0}")]
    Parse(String),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
